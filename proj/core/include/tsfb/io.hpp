#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tsfb/errors.hpp"
#include "tsfb/plant.hpp"

namespace tsfb::io {

// Thrown for unreadable files and documents that violate a file schema.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// {"elements": [{"point": t} | {"interval": [a, b]}], "unit": "s"}
// Elements must be strictly ascending and disjoint; violations are reported
// with the offending element index.
TimeScale parse_scale_json(const std::string& text);
TimeScale load_scale(const std::filesystem::path& path);
std::string scale_to_json(const TimeScale& ts);

// {"A_hat": [[...]], "B_hat": [[...]]}
ContinuousLTI parse_model_json(const std::string& text);
ContinuousLTI load_model(const std::filesystem::path& path);

// Shortest text that round-trips: 17 significant digits, '.' decimal point.
std::string format_double(double v);

// t,K_11,...,K_mn,min_sv (K flattened row-major).
std::string gains_csv(const GainSchedule& schedule);
// t,x_1..x_n,u_1..u_m
std::string trajectory_csv(const SimResult& result);
// k,alpha,settling_time,max_gain_norm,status
std::string sweep_csv(const std::vector<SweepRow>& rows);

// eta, rho, nu, pass, worst_node, worst_margin plus the diagnostic fields.
std::string certificate_json(const StabilityCertificate& cert);

// Writes through a temporary file in the same directory and renames it over
// the destination.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace tsfb::io
