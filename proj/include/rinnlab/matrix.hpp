#pragma once

// Small dense row-major matrix plus the handful of product kernels the
// training loops need. Sizes in this project are tiny (tens to a few
// hundred), so plain loops over contiguous rows are fast enough and keep
// results fully deterministic.

#include <cassert>
#include <cstddef>
#include <vector>

namespace rinnlab {

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }

    std::size_t size() const { return v.size(); }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    bool operator==(const Matrix& o) const { return rows == o.rows && cols == o.cols && v == o.v; }
};

// C (n x m) = A (n x k) * B (k x m), overwriting C.
inline void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
    assert(a.cols == b.rows);
    c.rows = a.rows;
    c.cols = b.cols;
    c.v.assign(static_cast<std::size_t>(a.rows) * b.cols, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double av = ai[k];
            if (av == 0.0) continue;
            const double* bk = b.row(k);
            for (int j = 0; j < b.cols; ++j) ci[j] += av * bk[j];
        }
    }
}

// C += A (n x k) * B[b_row0 .. b_row0+k) (rows of a taller matrix B).
// Lets RINN layers multiply against the hidden or input block of a
// vertically concatenated weight matrix without copying it.
inline void matmul_acc_rows(const Matrix& a, const Matrix& b, int b_row0, Matrix& c) {
    assert(b_row0 + a.cols <= b.rows);
    assert(c.rows == a.rows && c.cols == b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double av = ai[k];
            if (av == 0.0) continue;
            const double* bk = b.row(b_row0 + k);
            for (int j = 0; j < b.cols; ++j) ci[j] += av * bk[j];
        }
    }
}

// C[c_row0 .. c_row0+k) += A^T (k x n) * B (n x m) for A given as n x k.
// Accumulates weight gradients into a row block of the gradient matrix.
inline void matmul_at_b_acc_rows(const Matrix& a, const Matrix& b, Matrix& c, int c_row0) {
    assert(a.rows == b.rows);
    assert(c_row0 + a.cols <= c.rows && c.cols == b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        const double* bi = b.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double av = ai[k];
            if (av == 0.0) continue;
            double* ck = c.row(c_row0 + k);
            for (int j = 0; j < b.cols; ++j) ck[j] += av * bi[j];
        }
    }
}

// C (n x k) = A (n x m) * B^T for B given as rows [b_row0, b_row0+k) of a
// (taller) m-column matrix. Used to propagate deltas backwards.
inline void matmul_a_bt_rows(const Matrix& a, const Matrix& b, int b_row0, int k, Matrix& c) {
    assert(c.rows == a.rows && c.cols == k);
    assert(b_row0 + k <= b.rows && a.cols == b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (int kk = 0; kk < k; ++kk) {
            const double* bk = b.row(b_row0 + kk);
            double acc = 0.0;
            for (int j = 0; j < a.cols; ++j) acc += ai[j] * bk[j];
            ci[kk] = acc;
        }
    }
}

// Column sums of A added into out (size A.cols).
inline void colsum_acc(const Matrix& a, std::vector<double>& out) {
    assert(static_cast<int>(out.size()) == a.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        for (int j = 0; j < a.cols; ++j) out[static_cast<std::size_t>(j)] += ai[j];
    }
}

inline double sum_abs(const Matrix& m) {
    double s = 0.0;
    for (double x : m.v) s += x < 0 ? -x : x;
    return s;
}

}  // namespace rinnlab
