#include "nlfem/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nlfem/core.hpp"

namespace nlfem {

void CsrMatrix::multiply(const double* x, double* y) const {
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (auto p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += values[p] * x[col_idx[p]];
        y[i] = s;
    }
}

std::vector<double> CsrMatrix::multiply(const std::vector<double>& x) const {
    std::vector<double> y(rows);
    multiply(x.data(), y.data());
    return y;
}

double CsrMatrix::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::fabs(v));
    return m;
}

double CsrMatrix::at(int i, int j) const {
    auto b = col_idx.begin() + row_ptr[i];
    auto e = col_idx.begin() + row_ptr[i + 1];
    auto it = std::lower_bound(b, e, j);
    if (it == e || *it != j) return 0.0;
    return values[it - col_idx.begin()];
}

CsrMatrix CsrMatrix::transpose() const {
    CsrMatrix t;
    t.rows = cols;
    t.cols = rows;
    t.row_ptr.assign(cols + 1, 0);
    for (int c : col_idx) ++t.row_ptr[c + 1];
    for (int c = 0; c < cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];
    t.col_idx.resize(col_idx.size());
    t.values.resize(values.size());
    std::vector<std::int64_t> fill(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (int i = 0; i < rows; ++i)
        for (auto p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
            auto q = fill[col_idx[p]]++;
            t.col_idx[q] = i;
            t.values[q] = values[p];
        }
    return t;
}

double CsrMatrix::asymmetry() const {
    if (rows != cols) throw ConfigError("asymmetry of a non-square matrix");
    CsrMatrix t = transpose();
    double m = 0.0;
    for (int i = 0; i < rows; ++i) {
        auto p = row_ptr[i], pe = row_ptr[i + 1];
        auto q = t.row_ptr[i], qe = t.row_ptr[i + 1];
        while (p < pe || q < qe) {
            if (q == qe || (p < pe && col_idx[p] < t.col_idx[q])) {
                m = std::max(m, std::fabs(values[p++]));
            } else if (p == pe || t.col_idx[q] < col_idx[p]) {
                m = std::max(m, std::fabs(t.values[q++]));
            } else {
                m = std::max(m, std::fabs(values[p++] - t.values[q++]));
            }
        }
    }
    return m;
}

void Fragment::clear() {
    rows.clear();
    offsets.assign(1, 0);
    cols.clear();
    values.clear();
}

Fragment fragment_from_triplets(int origin, std::vector<std::tuple<int, int, double>> triplets) {
    std::stable_sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
        return std::get<1>(a) < std::get<1>(b);
    });
    Fragment f;
    f.origin = origin;
    for (std::size_t i = 0; i < triplets.size();) {
        const int r = std::get<0>(triplets[i]);
        f.rows.push_back(r);
        while (i < triplets.size() && std::get<0>(triplets[i]) == r) {
            const int c = std::get<1>(triplets[i]);
            double v = std::get<2>(triplets[i]);
            ++i;
            while (i < triplets.size() && std::get<0>(triplets[i]) == r &&
                   std::get<1>(triplets[i]) == c)
                v += std::get<2>(triplets[i++]);
            f.cols.push_back(c);
            f.values.push_back(v);
        }
        f.offsets.push_back(static_cast<std::int64_t>(f.cols.size()));
    }
    return f;
}

RowAccumulator::RowAccumulator(int rows, int cols)
    : rows_(rows), cols_(cols), row_cols_(rows), row_vals_(rows) {}

void RowAccumulator::add(const Fragment& f) {
    if (f.origin < last_origin_)
        throw NumericalError("fragments must be merged in increasing origin order");
    last_origin_ = f.origin;
    for (std::size_t r = 0; r < f.rows.size(); ++r) {
        const int row = f.rows[r];
        if (row < 0 || row >= rows_) throw NumericalError("fragment row out of range");
        const int* fc = f.cols.data() + f.offsets[r];
        const double* fv = f.values.data() + f.offsets[r];
        const auto n = static_cast<std::size_t>(f.offsets[r + 1] - f.offsets[r]);
        auto& cols = row_cols_[row];
        auto& vals = row_vals_[row];
        if (cols.empty()) {
            cols.assign(fc, fc + n);
            vals.assign(fv, fv + n);
            continue;
        }
        scratch_cols_.clear();
        scratch_vals_.clear();
        std::size_t i = 0, j = 0;
        while (i < cols.size() || j < n) {
            if (j == n || (i < cols.size() && cols[i] < fc[j])) {
                scratch_cols_.push_back(cols[i]);
                scratch_vals_.push_back(vals[i++]);
            } else if (i == cols.size() || fc[j] < cols[i]) {
                scratch_cols_.push_back(fc[j]);
                scratch_vals_.push_back(fv[j++]);
            } else {
                scratch_cols_.push_back(cols[i]);
                scratch_vals_.push_back(vals[i++] + fv[j++]);
            }
        }
        cols.swap(scratch_cols_);
        vals.swap(scratch_vals_);
    }
}

CsrMatrix RowAccumulator::finish() {
    CsrMatrix a;
    a.rows = rows_;
    a.cols = cols_;
    a.row_ptr.assign(rows_ + 1, 0);
    for (int i = 0; i < rows_; ++i)
        a.row_ptr[i + 1] = a.row_ptr[i] + static_cast<std::int64_t>(row_cols_[i].size());
    a.col_idx.reserve(a.row_ptr[rows_]);
    a.values.reserve(a.row_ptr[rows_]);
    for (int i = 0; i < rows_; ++i) {
        for (int c : row_cols_[i])
            if (c < 0 || c >= cols_) throw NumericalError("fragment column out of range");
        a.col_idx.insert(a.col_idx.end(), row_cols_[i].begin(), row_cols_[i].end());
        a.values.insert(a.values.end(), row_vals_[i].begin(), row_vals_[i].end());
        std::vector<int>().swap(row_cols_[i]);
        std::vector<double>().swap(row_vals_[i]);
    }
    return a;
}

CsrMatrix merge_buffers(const std::vector<TripletBuffer>& buffers, int rows, int cols) {
    std::vector<const Fragment*> all;
    for (const auto& b : buffers)
        for (const auto& f : b) all.push_back(&f);
    std::stable_sort(all.begin(), all.end(),
                     [](const Fragment* a, const Fragment* b) { return a->origin < b->origin; });
    RowAccumulator acc(rows, cols);
    for (const Fragment* f : all) acc.add(*f);
    return acc.finish();
}

std::string format_csr(const CsrMatrix& a) {
    std::string out = "nlcsr 1 " + std::to_string(a.rows) + " " + std::to_string(a.cols) + " " +
                      std::to_string(a.nnz()) + "\n";
    auto join_ints = [&out](const auto& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ' ';
            out += std::to_string(v[i]);
        }
        out += '\n';
    };
    join_ints(a.row_ptr);
    join_ints(a.col_idx);
    char buf[32];
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        std::snprintf(buf, sizeof buf, i ? " %.17g" : "%.17g", a.values[i]);
        out += buf;
    }
    out += '\n';
    return out;
}

CsrMatrix parse_csr(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    CsrMatrix a;
    std::int64_t nnz = -1;
    if (!(in >> magic >> version >> a.rows >> a.cols >> nnz) || magic != "nlcsr" || version != 1 ||
        a.rows < 0 || a.cols < 0 || nnz < 0)
        throw ParseError("malformed nlcsr header", 1);
    a.row_ptr.resize(a.rows + 1);
    for (auto& p : a.row_ptr)
        if (!(in >> p)) throw ParseError("truncated row_ptr", 2);
    a.col_idx.resize(nnz);
    for (auto& c : a.col_idx)
        if (!(in >> c)) throw ParseError("truncated col_idx", 3);
    a.values.resize(nnz);
    for (auto& v : a.values)
        if (!(in >> v)) throw ParseError("truncated values", 4);
    if (a.row_ptr.front() != 0 || a.row_ptr.back() != nnz) throw ParseError("inconsistent row_ptr", 2);
    return a;
}

void write_csr(const CsrMatrix& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write matrix file " + path);
    out << format_csr(a);
}

CsrMatrix read_csr(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open matrix file " + path, 0);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_csr(buffer.str());
}

}  // namespace nlfem
