#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace disc {

struct Entry {
    std::size_t row = 0;
    std::size_t col = 0;
    int sign = 1;

    friend bool operator==(const Entry&, const Entry&) = default;
};

struct RowEntry {
    std::size_t col = 0;
    int sign = 1;
};

/// Sparse {0,+1,-1} incidence matrix in which every column has at most k nonzeros.
///
/// Entries are stored sorted by (column, row); a row-major copy is kept alongside
/// so both access patterns are O(support). Immutable after construction.
class SetSystem {
public:
    SetSystem() = default;

    /// Validates and takes ownership of `entries` (any order). Throws InvalidParameter on
    /// out-of-range indices, signs other than +-1, duplicate (row, col) pairs, or a column
    /// holding more than k entries.
    SetSystem(std::size_t rows, std::size_t cols, std::size_t k, std::vector<Entry> entries);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t k() const noexcept { return k_; }
    std::size_t nnz() const noexcept { return entries_.size(); }

    std::span<const Entry> entries() const noexcept { return entries_; }
    std::span<const Entry> column(std::size_t j) const;
    std::span<const RowEntry> row(std::size_t i) const;

    std::size_t column_degree(std::size_t j) const { return col_ptr_[j + 1] - col_ptr_[j]; }
    std::size_t max_column_degree() const;

    friend bool operator==(const SetSystem& a, const SetSystem& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.k_ == b.k_ && a.entries_ == b.entries_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t k_ = 0;
    std::vector<Entry> entries_;
    std::vector<std::size_t> col_ptr_{0};
    std::vector<RowEntry> row_entries_;
    std::vector<std::size_t> row_ptr_{0};
};

/// Values in [-1, 1]; "full" when every value is exactly +-1.
struct Coloring {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    bool is_full() const;
    bool in_cube() const;
};

enum class RowOrigin : std::uint8_t { Original, Negated, Dummy };
enum class ColOrigin : std::uint8_t { Original, Padding };

struct RowProvenance {
    RowOrigin origin = RowOrigin::Original;
    std::size_t source = 0; // original row index; unused for dummies

    friend bool operator==(const RowProvenance&, const RowProvenance&) = default;
};

struct ColProvenance {
    ColOrigin origin = ColOrigin::Original;
    std::size_t source = 0;

    friend bool operator==(const ColProvenance&, const ColProvenance&) = default;
};

/// Square system with exact column degree k and every original row paired with its negation.
struct CanonicalInstance {
    SetSystem system;
    std::size_t origin_rows = 0;
    std::size_t origin_cols = 0;
    std::vector<RowProvenance> row_provenance;
    std::vector<ColProvenance> col_provenance;

    /// Coloring of the pre-canonical columns (padding columns dropped).
    Coloring restrict_to_original(const Coloring& x) const;
};

enum class SignModel : std::uint8_t { Positive, Random };

SetSystem gen_random_regular(std::size_t n_rows, std::size_t n_cols, std::size_t k, std::uint64_t seed,
                             SignModel signs = SignModel::Positive);

bool is_canonical(const SetSystem& sys);
CanonicalInstance canonicalize(const SetSystem& sys);

/// <a_i, x> for every row.
std::vector<double> row_sums(const SetSystem& sys, std::span<const double> x);

/// max_i |<a_i, x>|. Throws InvalidParameter on length mismatch.
double discrepancy(const SetSystem& sys, std::span<const double> x);
inline double discrepancy(const SetSystem& sys, const Coloring& x) { return discrepancy(sys, x.values); }

SetSystem parse_instance(std::string_view text);
std::string write_instance(const SetSystem& sys);
SetSystem load_instance(const std::filesystem::path& path);
void save_instance(const SetSystem& sys, const std::filesystem::path& path);

inline constexpr std::size_t kBruteForceMaxCols = 24;

/// Exact min over all 2^cols full colorings. Throws InvalidParameter above kBruteForceMaxCols.
long brute_force_min_disc(const SetSystem& sys);

} // namespace disc
