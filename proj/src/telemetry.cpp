#include "disc/telemetry.hpp"

#include "disc/error.hpp"

#include <charconv>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace disc {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
    return out;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line) {
    T value{};
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || end != field.data() + field.size()) {
        throw ParseError(line, fmt::format("malformed number '{}'", field));
    }
    return value;
}

// from_chars rejects "inf"; the potential sum can overflow to it.
double parse_real(std::string_view field, std::size_t line) {
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    return parse_number<double>(field, line);
}

} // namespace

void write_telemetry(std::ostream& out, std::span<const walk::StepRecord> records) {
    fmt::print(out, "{}\n", kTelemetryHeader);
    for (const auto& r : records) {
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.t, r.n_t, r.b_t, r.c_t, r.phi_total, r.phi_max,
                   r.s_min, r.w_max, r.sigma_dang, r.sigma_safe, r.n_dang, r.dang_support_max,
                   r.guard_tripped ? 1 : 0);
    }
}

void save_telemetry(const std::filesystem::path& path, std::span<const walk::StepRecord> records) {
    auto out = open_out(path);
    write_telemetry(out, records);
}

std::vector<walk::StepRecord> read_telemetry(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "empty telemetry file");
    if (line != kTelemetryHeader) throw ParseError(1, fmt::format("unexpected telemetry header '{}'", line));
    std::vector<walk::StepRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 13) throw ParseError(lineno, fmt::format("expected 13 fields, found {}", f.size()));
        walk::StepRecord r;
        r.t = parse_real(f[0], lineno);
        r.n_t = parse_number<std::size_t>(f[1], lineno);
        r.b_t = parse_real(f[2], lineno);
        r.c_t = parse_real(f[3], lineno);
        r.phi_total = parse_real(f[4], lineno);
        r.phi_max = parse_real(f[5], lineno);
        r.s_min = parse_real(f[6], lineno);
        r.w_max = parse_real(f[7], lineno);
        r.sigma_dang = parse_real(f[8], lineno);
        r.sigma_safe = parse_real(f[9], lineno);
        r.n_dang = parse_number<std::size_t>(f[10], lineno);
        r.dang_support_max = parse_number<std::size_t>(f[11], lineno);
        const auto g = parse_number<int>(f[12], lineno);
        if (g != 0 && g != 1) throw ParseError(lineno, "guard_tripped must be 0 or 1");
        r.guard_tripped = g == 1;
        records.push_back(r);
    }
    return records;
}

void save_run_meta(const std::filesystem::path& path, const walk::WalkParams& p) {
    auto out = open_out(path);
    fmt::print(out, "n={}\nk={}\nlambda={}\npotential_rate={}\nb0={}\nbeta={}\nn_freeze={}\ndt={}\nct_const={}\n"
                    "mode={}\nbarrier_ceiling={}\nsigma_bound={}\n",
               p.n, p.k, p.lambda, p.potential_rate, p.b0, p.beta, p.n_freeze, p.dt, p.ct_const,
               p.mode == walk::PotentialMode::Full ? "full" : "simple", p.barrier_ceiling(), p.sigma_bound);
}

void write_coloring(std::ostream& out, const Coloring& x) {
    for (std::size_t j = 0; j < x.values.size(); ++j) fmt::print(out, "{} {}\n", j, x.values[j]);
}

void save_coloring(const std::filesystem::path& path, const Coloring& x) {
    auto out = open_out(path);
    write_coloring(out, x);
}

Coloring read_coloring(std::istream& in) {
    Coloring x;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line, ' ');
        if (f.size() != 2) throw ParseError(lineno, "expected '<index> <value>'");
        const auto index = parse_number<std::size_t>(f[0], lineno);
        if (index != x.values.size()) {
            throw ParseError(lineno, fmt::format("index {} out of order, expected {}", index, x.values.size()));
        }
        const double value = parse_real(f[1], lineno);
        if (!(value >= -1.0 && value <= 1.0)) throw ParseError(lineno, fmt::format("value {} outside [-1, 1]", value));
        x.values.push_back(value);
    }
    return x;
}

Coloring load_coloring(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open {}", path.string()));
    return read_coloring(in);
}

} // namespace disc
