#include "disc/instance.hpp"

#include "disc/error.hpp"
#include "disc/rng.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <fmt/format.h>

namespace disc {

SetSystem::SetSystem(std::size_t rows, std::size_t cols, std::size_t k, std::vector<Entry> entries)
    : rows_(rows), cols_(cols), k_(k), entries_(std::move(entries)) {
    for (const auto& e : entries_) {
        if (e.row >= rows_ || e.col >= cols_) {
            throw InvalidParameter(fmt::format("entry ({}, {}) out of range for {}x{} system", e.row, e.col, rows_, cols_));
        }
        if (e.sign != 1 && e.sign != -1) {
            throw InvalidParameter(fmt::format("entry ({}, {}) has sign {}, expected +-1", e.row, e.col, e.sign));
        }
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.col != b.col ? a.col < b.col : a.row < b.row; });
    for (std::size_t p = 1; p < entries_.size(); ++p) {
        if (entries_[p].col == entries_[p - 1].col && entries_[p].row == entries_[p - 1].row) {
            throw InvalidParameter(fmt::format("duplicate entry ({}, {})", entries_[p].row, entries_[p].col));
        }
    }

    col_ptr_.assign(cols_ + 1, 0);
    std::vector<std::size_t> row_count(rows_, 0);
    for (const auto& e : entries_) {
        ++col_ptr_[e.col + 1];
        ++row_count[e.row];
    }
    for (std::size_t j = 0; j < cols_; ++j) {
        if (col_ptr_[j + 1] > k_) {
            throw InvalidParameter(fmt::format("column {} has {} entries, exceeding k = {}", j, col_ptr_[j + 1], k_));
        }
        col_ptr_[j + 1] += col_ptr_[j];
    }

    row_ptr_.assign(rows_ + 1, 0);
    for (std::size_t i = 0; i < rows_; ++i) row_ptr_[i + 1] = row_ptr_[i] + row_count[i];
    row_entries_.resize(entries_.size());
    std::vector<std::size_t> fill(row_ptr_.begin(), row_ptr_.end() - 1);
    // entries_ is column-sorted, so each row's entries come out column-sorted too.
    for (const auto& e : entries_) row_entries_[fill[e.row]++] = RowEntry{e.col, e.sign};
}

std::span<const Entry> SetSystem::column(std::size_t j) const {
    return std::span<const Entry>(entries_).subspan(col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]);
}

std::span<const RowEntry> SetSystem::row(std::size_t i) const {
    return std::span<const RowEntry>(row_entries_).subspan(row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]);
}

std::size_t SetSystem::max_column_degree() const {
    std::size_t best = 0;
    for (std::size_t j = 0; j < cols_; ++j) best = std::max(best, column_degree(j));
    return best;
}

bool Coloring::is_full() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 1.0 || v == -1.0; });
}

bool Coloring::in_cube() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v) && std::abs(v) <= 1.0; });
}

Coloring CanonicalInstance::restrict_to_original(const Coloring& x) const {
    if (x.size() != system.cols()) {
        throw InvalidParameter(fmt::format("coloring has {} entries, instance has {} columns", x.size(), system.cols()));
    }
    Coloring out;
    out.values.assign(origin_cols, 0.0);
    for (std::size_t j = 0; j < col_provenance.size(); ++j) {
        if (col_provenance[j].origin == ColOrigin::Original) out.values[col_provenance[j].source] = x.values[j];
    }
    return out;
}

SetSystem gen_random_regular(std::size_t n_rows, std::size_t n_cols, std::size_t k, std::uint64_t seed,
                             SignModel signs) {
    if (k > n_rows) {
        throw InvalidParameter(fmt::format("k = {} exceeds the number of rows {}", k, n_rows));
    }
    Rng rng = make_rng(seed, 0x6e6e);
    std::vector<std::size_t> pool(n_rows);
    std::vector<Entry> entries;
    entries.reserve(n_cols * k);
    for (std::size_t j = 0; j < n_cols; ++j) {
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        // Partial Fisher-Yates: the first k slots become a uniform k-subset.
        for (std::size_t s = 0; s < k; ++s) {
            std::uniform_int_distribution<std::size_t> pick(s, n_rows - 1);
            std::swap(pool[s], pool[pick(rng)]);
            const int sign = signs == SignModel::Positive ? 1 : rademacher(rng);
            entries.push_back(Entry{pool[s], j, sign});
        }
    }
    return SetSystem(n_rows, n_cols, k, std::move(entries));
}

namespace {

using SignedSupport = std::vector<std::pair<std::size_t, int>>;

SignedSupport row_support(const SetSystem& sys, std::size_t i, int flip = 1) {
    SignedSupport out;
    for (const auto& re : sys.row(i)) out.emplace_back(re.col, re.sign * flip);
    return out;
}

} // namespace

bool is_canonical(const SetSystem& sys) {
    if (sys.rows() != sys.cols()) return false;
    for (std::size_t j = 0; j < sys.cols(); ++j) {
        if (sys.column_degree(j) != sys.k()) return false;
    }
    std::map<SignedSupport, std::size_t> seen;
    for (std::size_t i = 0; i < sys.rows(); ++i) ++seen[row_support(sys, i)];
    for (std::size_t i = 0; i < sys.rows(); ++i) {
        if (!seen.contains(row_support(sys, i, -1))) return false;
    }
    return true;
}

CanonicalInstance canonicalize(const SetSystem& sys) {
    CanonicalInstance out;
    out.origin_rows = sys.rows();
    out.origin_cols = sys.cols();

    if (is_canonical(sys)) {
        out.system = sys;
        for (std::size_t i = 0; i < sys.rows(); ++i) out.row_provenance.push_back({RowOrigin::Original, i});
        for (std::size_t j = 0; j < sys.cols(); ++j) out.col_provenance.push_back({ColOrigin::Original, j});
        return out;
    }

    const std::size_t m = sys.rows();
    const std::size_t n = sys.cols();
    const std::size_t k = 2 * sys.k();

    // Dummy rows must cover the largest degree deficit among original columns, and all
    // k entries of a padding column when padding is needed.
    std::size_t max_deficit = 0;
    for (std::size_t j = 0; j < n; ++j) max_deficit = std::max(max_deficit, k - 2 * sys.column_degree(j));
    std::size_t dummies = max_deficit;
    std::size_t padding_cols = 0;
    if (2 * m + dummies > n) {
        if (k > 0) dummies = std::max(dummies, k);
        padding_cols = 2 * m + dummies - n;
    } else if (2 * m + dummies < n) {
        dummies = n - 2 * m; // extra rows are left empty beyond what deficits use
    }
    const std::size_t rows = 2 * m + dummies;
    const std::size_t cols = n + padding_cols;

    std::vector<Entry> entries;
    entries.reserve(cols * k);
    for (const auto& e : sys.entries()) {
        entries.push_back(Entry{e.row, e.col, e.sign});
        entries.push_back(Entry{m + e.row, e.col, -e.sign});
    }
    // Round-robin over dummy rows keeps their loads balanced.
    const std::size_t dummy_span = std::max<std::size_t>(std::max(max_deficit, padding_cols > 0 ? k : 0), 1);
    std::size_t cursor = 0;
    auto pad_column = [&](std::size_t col, std::size_t count) {
        for (std::size_t s = 0; s < count; ++s) {
            entries.push_back(Entry{2 * m + (cursor + s) % dummy_span, col, 1});
        }
        cursor = (cursor + count) % dummy_span;
    };
    for (std::size_t j = 0; j < n; ++j) pad_column(j, k - 2 * sys.column_degree(j));
    for (std::size_t j = n; j < cols; ++j) pad_column(j, k);

    out.system = SetSystem(rows, cols, k, std::move(entries));
    for (std::size_t i = 0; i < m; ++i) out.row_provenance.push_back({RowOrigin::Original, i});
    for (std::size_t i = 0; i < m; ++i) out.row_provenance.push_back({RowOrigin::Negated, i});
    for (std::size_t i = 0; i < dummies; ++i) out.row_provenance.push_back({RowOrigin::Dummy, i});
    for (std::size_t j = 0; j < n; ++j) out.col_provenance.push_back({ColOrigin::Original, j});
    for (std::size_t j = 0; j < padding_cols; ++j) out.col_provenance.push_back({ColOrigin::Padding, j});
    return out;
}

std::vector<double> row_sums(const SetSystem& sys, std::span<const double> x) {
    if (x.size() != sys.cols()) {
        throw InvalidParameter(fmt::format("coloring has {} entries, system has {} columns", x.size(), sys.cols()));
    }
    std::vector<double> sums(sys.rows(), 0.0);
    for (const auto& e : sys.entries()) sums[e.row] += e.sign * x[e.col];
    return sums;
}

double discrepancy(const SetSystem& sys, std::span<const double> x) {
    double worst = 0.0;
    for (double s : row_sums(sys, x)) worst = std::max(worst, std::abs(s));
    return worst;
}

namespace {

struct LineReader {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line_no = 0;

    // Next non-blank line with comments stripped; false at end of input.
    bool next(std::string_view& out) {
        while (pos < text.size()) {
            const std::size_t end = std::min(text.find('\n', pos), text.size());
            std::string_view line = text.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
            while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
            if (!line.empty()) {
                out = line;
                return true;
            }
        }
        return false;
    }
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t p = 0;
    while (p < line.size()) {
        while (p < line.size() && std::isspace(static_cast<unsigned char>(line[p]))) ++p;
        std::size_t q = p;
        while (q < line.size() && !std::isspace(static_cast<unsigned char>(line[q]))) ++q;
        if (q > p) out.push_back(line.substr(p, q - p));
        p = q;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view token, T& value) {
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    return ec == std::errc() && ptr == token.data() + token.size();
}

} // namespace

SetSystem parse_instance(std::string_view text) {
    LineReader reader{text};
    std::string_view line;

    if (!reader.next(line)) throw ParseError(reader.line_no, "empty input, expected 'discinstance 1'");
    {
        auto tok = split_ws(line);
        if (tok.size() != 2 || tok[0] != "discinstance" || tok[1] != "1") {
            throw ParseError(reader.line_no, "malformed header, expected 'discinstance 1'");
        }
    }
    auto header_field = [&](std::string_view key) {
        if (!reader.next(line)) throw ParseError(reader.line_no, fmt::format("missing '{}' header line", key));
        auto tok = split_ws(line);
        std::size_t value = 0;
        if (tok.size() != 2 || tok[0] != key || !parse_number(tok[1], value)) {
            throw ParseError(reader.line_no, fmt::format("malformed header, expected '{} <count>'", key));
        }
        return value;
    };
    const std::size_t rows = header_field("rows");
    const std::size_t cols = header_field("cols");
    const std::size_t k = header_field("k");
    const std::size_t nnz = header_field("nnz");

    std::vector<Entry> entries;
    entries.reserve(nnz);
    std::vector<std::size_t> degree(cols, 0);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> where;
    while (reader.next(line)) {
        auto tok = split_ws(line);
        Entry e;
        if (tok.size() != 3 || !parse_number(tok[0], e.row) || !parse_number(tok[1], e.col) ||
            !parse_number(tok[2], e.sign)) {
            throw ParseError(reader.line_no, "malformed entry, expected '<row> <col> <sign>'");
        }
        if (e.row >= rows || e.col >= cols) {
            throw ParseError(reader.line_no, fmt::format("index ({}, {}) out of range for {}x{} system", e.row, e.col, rows, cols));
        }
        if (e.sign != 1 && e.sign != -1) {
            throw ParseError(reader.line_no, fmt::format("sign {} is not +-1", e.sign));
        }
        if (auto [it, fresh] = where.emplace(std::pair{e.row, e.col}, reader.line_no); !fresh) {
            throw ParseError(reader.line_no, fmt::format("duplicate entry ({}, {}), first seen on line {}", e.row, e.col, it->second));
        }
        if (++degree[e.col] > k) {
            throw ParseError(reader.line_no, fmt::format("column {} exceeds k = {}", e.col, k));
        }
        entries.push_back(e);
    }
    if (entries.size() != nnz) {
        throw ParseError(reader.line_no, fmt::format("nnz header says {}, found {} entries", nnz, entries.size()));
    }
    return SetSystem(rows, cols, k, std::move(entries));
}

std::string write_instance(const SetSystem& sys) {
    std::string out = fmt::format("discinstance 1\nrows {}\ncols {}\nk {}\nnnz {}\n", sys.rows(), sys.cols(), sys.k(), sys.nnz());
    for (const auto& e : sys.entries()) out += fmt::format("{} {} {}\n", e.row, e.col, e.sign);
    return out;
}

SetSystem load_instance(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open instance file '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_instance(buf.str());
}

void save_instance(const SetSystem& sys, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write instance file '{}'", path.string()));
    out << write_instance(sys);
}

long brute_force_min_disc(const SetSystem& sys) {
    const std::size_t n = sys.cols();
    if (n > kBruteForceMaxCols) {
        throw InvalidParameter(fmt::format("brute force limited to {} columns, got {}", kBruteForceMaxCols, n));
    }
    const std::size_t m = sys.rows();
    std::vector<long> sums(m, 0);
    // Start from all +1; flipping column 0 is redundant since disc(x) = disc(-x).
    for (const auto& e : sys.entries()) sums[e.row] += e.sign;
    long lower = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (sys.row(i).size() % 2 == 1) lower = 1;
    }
    auto current = [&] {
        long worst = 0;
        for (long s : sums) worst = std::max(worst, std::abs(s));
        return worst;
    };
    long best = current();
    if (n <= 1) return best;
    std::vector<int> x(n, 1);
    const std::uint64_t states = std::uint64_t{1} << (n - 1);
    for (std::uint64_t g = 1; g < states && best > lower; ++g) {
        // Gray code: flip column 1 + (index of lowest set bit of g).
        const std::size_t j = 1 + static_cast<std::size_t>(std::countr_zero(g));
        x[j] = -x[j];
        for (const auto& e : sys.column(j)) sums[e.row] += 2L * e.sign * x[j];
        best = std::min(best, current());
    }
    return best;
}

} // namespace disc
