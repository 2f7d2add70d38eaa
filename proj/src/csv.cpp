#include "collusion/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <system_error>

#include "collusion/errors.hpp"

namespace collusion {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& field, const std::string& source, std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (field.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw ParseError(source, line, "not a finite number: '" + field + "'");
  }
  return v;
}

// Reads the header line and returns false at EOF. Blank lines are skipped throughout.
bool next_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) return true;
  }
  return false;
}

std::filesystem::path ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  return path;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(ensure_parent(path), std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return in;
}

}  // namespace

void write_observations(std::ostream& out, std::span<const Observation> obs) {
  out << kObservationHeader << '\n';
  for (const Observation& o : obs) {
    out << format_double(o.p1) << ',' << format_double(o.p2) << ',' << format_double(o.mu) << '\n';
  }
}

std::vector<Observation> read_observations(std::istream& in, const std::string& source,
                                           std::optional<double> pbar) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno)) throw ParseError(source, 1, "empty file");
  if (trim(line) != kObservationHeader) {
    throw ParseError(source, lineno, std::string("expected header '") + kObservationHeader + "'");
  }
  std::vector<Observation> out;
  while (next_line(in, line, lineno)) {
    const auto fields = split(line);
    if (fields.size() != 3) throw ParseError(source, lineno, "expected 3 fields");
    Observation o{parse_number(fields[0], source, lineno), parse_number(fields[1], source, lineno),
                  parse_number(fields[2], source, lineno)};
    if (pbar && (o.p1 < 0.0 || o.p1 > *pbar || o.p2 < 0.0 || o.p2 > *pbar)) {
      throw ParseError(source, lineno, "price outside [0, " + format_double(*pbar) + "]");
    }
    out.push_back(o);
  }
  return out;
}

void write_column(std::ostream& out, const std::string& header, std::span<const double> values) {
  out << header << '\n';
  for (double v : values) out << format_double(v) << '\n';
}

std::vector<double> read_column(std::istream& in, const std::string& source,
                                const std::string& header) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno)) throw ParseError(source, 1, "empty file");
  if (trim(line) != header) throw ParseError(source, lineno, "expected header '" + header + "'");
  std::vector<double> out;
  while (next_line(in, line, lineno)) {
    const auto fields = split(line);
    if (fields.size() != 1) throw ParseError(source, lineno, "expected 1 field");
    out.push_back(parse_number(fields[0], source, lineno));
  }
  return out;
}

void write_observations_file(const std::filesystem::path& path, std::span<const Observation> obs) {
  auto out = open_out(path);
  write_observations(out, obs);
}

std::vector<Observation> read_observations_file(const std::filesystem::path& path,
                                                std::optional<double> pbar) {
  auto in = open_in(path);
  return read_observations(in, path.string(), pbar);
}

void write_column_file(const std::filesystem::path& path, const std::string& header,
                       std::span<const double> values) {
  auto out = open_out(path);
  write_column(out, header, values);
}

std::vector<double> read_column_file(const std::filesystem::path& path, const std::string& header) {
  auto in = open_in(path);
  return read_column(in, path.string(), header);
}

}  // namespace collusion
