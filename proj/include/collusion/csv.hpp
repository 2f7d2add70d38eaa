#pragma once

// Flat-file formats:
//   observations  header "p1,p2,mu", one observation per row
//   residuals     header "epsilon_hat", one value per row
//   true gaps     header "epsilon", one value per row
// Numbers are written in shortest round-trip form so files re-read bit-exactly.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collusion/market.hpp"

namespace collusion {

inline constexpr const char* kObservationHeader = "p1,p2,mu";
inline constexpr const char* kResidualHeader = "epsilon_hat";
inline constexpr const char* kTrueGapHeader = "epsilon";

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);
/// Fixed-point with `decimals` digits; "nan" for non-finite values.
std::string format_fixed(double v, int decimals);

void write_observations(std::ostream& out, std::span<const Observation> obs);
/// When `pbar` is given, rows with a price outside [0, pbar] raise ParseError.
std::vector<Observation> read_observations(std::istream& in, const std::string& source,
                                           std::optional<double> pbar = std::nullopt);

void write_column(std::ostream& out, const std::string& header, std::span<const double> values);
std::vector<double> read_column(std::istream& in, const std::string& source,
                                const std::string& header);

void write_observations_file(const std::filesystem::path& path, std::span<const Observation> obs);
std::vector<Observation> read_observations_file(const std::filesystem::path& path,
                                                std::optional<double> pbar = std::nullopt);
void write_column_file(const std::filesystem::path& path, const std::string& header,
                       std::span<const double> values);
std::vector<double> read_column_file(const std::filesystem::path& path, const std::string& header);

}  // namespace collusion
