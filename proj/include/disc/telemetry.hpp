#pragma once

#include "disc/instance.hpp"
#include "disc/walk.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace disc {

inline constexpr std::string_view kTelemetryHeader =
    "t,n_t,b_t,c_t,phi_total,phi_max,s_min,w_max,sigma_dang,sigma_safe,n_dang,dang_support_max,guard_tripped";

/// One CSV row per record. Reals use the shortest representation that round-trips.
void write_telemetry(std::ostream& out, std::span<const walk::StepRecord> records);
void save_telemetry(const std::filesystem::path& path, std::span<const walk::StepRecord> records);

/// Inverse of write_telemetry for the CSV columns; sampler diagnostics come back zeroed.
/// Throws ParseError on a wrong header or malformed row.
std::vector<walk::StepRecord> read_telemetry(std::istream& in);

/// key=value lines with the run's derived constants (n, k, lambda, b0, beta, n_freeze, ...),
/// written next to a telemetry file so envelopes can be drawn without the instance.
void save_run_meta(const std::filesystem::path& path, const walk::WalkParams& params);

/// `<index> <value>` per column.
void write_coloring(std::ostream& out, const Coloring& x);
void save_coloring(const std::filesystem::path& path, const Coloring& x);
Coloring read_coloring(std::istream& in);
Coloring load_coloring(const std::filesystem::path& path);

} // namespace disc
