#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

namespace nlfem {

struct CsrMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::int64_t> row_ptr{0};
    std::vector<int> col_idx;
    std::vector<double> values;

    std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx.size()); }
    // y = A x
    void multiply(const double* x, double* y) const;
    std::vector<double> multiply(const std::vector<double>& x) const;
    double max_abs() const;
    double at(int i, int j) const;
    CsrMatrix transpose() const;
    // max |A - A^T| over all entries
    double asymmetry() const;
    bool operator==(const CsrMatrix&) const = default;
};

// Contributions of one originating element: rows with column-sorted entries.
struct Fragment {
    int origin = 0;
    std::vector<int> rows;
    std::vector<std::int64_t> offsets{0};  // entries of rows[r] are [offsets[r], offsets[r+1])
    std::vector<int> cols;
    std::vector<double> values;

    void clear();
    bool empty() const { return rows.empty(); }
};

using TripletBuffer = std::vector<Fragment>;

// Packs (row, col, value) triplets of one origin into a fragment; duplicates are summed in
// insertion order.
Fragment fragment_from_triplets(int origin, std::vector<std::tuple<int, int, double>> triplets);

// Sums fragments entry by entry in the order they are added. Feeding fragments in increasing
// origin order gives sums ordered by (row, col, origin).
class RowAccumulator {
public:
    RowAccumulator(int rows, int cols);
    void add(const Fragment& f);
    CsrMatrix finish();

private:
    int rows_, cols_;
    int last_origin_ = -1;
    std::vector<std::vector<int>> row_cols_;
    std::vector<std::vector<double>> row_vals_;
    std::vector<int> scratch_cols_;
    std::vector<double> scratch_vals_;
};

// Deterministic reduction of per-worker buffers, independent of how origins were split.
CsrMatrix merge_buffers(const std::vector<TripletBuffer>& buffers, int rows, int cols);

std::string format_csr(const CsrMatrix& a);
CsrMatrix parse_csr(const std::string& text);
void write_csr(const CsrMatrix& a, const std::string& path);
CsrMatrix read_csr(const std::string& path);

}  // namespace nlfem
