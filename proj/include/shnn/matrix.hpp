// Small dense row-major matrix used throughout the library.
//
// All products and reductions run plain ascending-index loops so that results
// are bit-reproducible and can be compared exactly against independently
// coded reference implementations.
#pragma once

#include <cassert>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "shnn/errors.hpp"

namespace shnn {

class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, 0.0) {}
    Matrix(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), a_(std::move(data)) {
        assert(a_.size() == static_cast<std::size_t>(rows_) * cols_);
    }

    static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diag(const std::vector<double>& d) {
        Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix operator*(const Matrix& b) const {
        if (cols_ != b.rows_) throw ShapeError("matmul: inner dimensions disagree");
        Matrix c(rows_, b.cols_);
        for (int i = 0; i < rows_; ++i)
            for (int k = 0; k < cols_; ++k) {
                const double aik = (*this)(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    Matrix& operator+=(const Matrix& b) {
        check_same_shape(b, "operator+=");
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += b.a_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& b) {
        check_same_shape(b, "operator-=");
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= b.a_[i];
        return *this;
    }
    Matrix operator+(const Matrix& b) const {
        Matrix c = *this;
        c += b;
        return c;
    }
    Matrix operator-(const Matrix& b) const {
        Matrix c = *this;
        c -= b;
        return c;
    }
    Matrix operator*(double s) const {
        Matrix c = *this;
        for (double& x : c.a_) x *= s;
        return c;
    }
    Matrix operator-() const { return *this * -1.0; }

    bool operator==(const Matrix& b) const { return rows_ == b.rows_ && cols_ == b.cols_ && a_ == b.a_; }

    // Row i as a rows=1 matrix view copy.
    Matrix row(int i) const {
        Matrix r(1, cols_);
        for (int j = 0; j < cols_; ++j) r(0, j) = (*this)(i, j);
        return r;
    }

    // Rows [i, i+k) as a k x cols copy.
    Matrix rows_block(int i, int k) const {
        Matrix r(k, cols_);
        for (int a = 0; a < k; ++a)
            for (int j = 0; j < cols_; ++j) r(a, j) = (*this)(i + a, j);
        return r;
    }

    void set_rows_block(int i, const Matrix& b) {
        for (int a = 0; a < b.rows(); ++a)
            for (int j = 0; j < cols_; ++j) (*this)(i + a, j) = b(a, j);
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double x : a_) s += x * x;
        return std::sqrt(s);
    }

    double max_abs() const {
        double s = 0.0;
        for (double x : a_) s = std::max(s, std::abs(x));
        return s;
    }

    double trace() const {
        double s = 0.0;
        for (int i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
        return s;
    }

    // Frobenius inner product, ascending index order.
    double dot(const Matrix& b) const {
        check_same_shape(b, "dot");
        double s = 0.0;
        for (std::size_t i = 0; i < a_.size(); ++i) s += a_[i] * b.a_[i];
        return s;
    }

private:
    void check_same_shape(const Matrix& b, const char* op) const {
        if (rows_ != b.rows_ || cols_ != b.cols_) throw ShapeError(std::string(op) + ": shape mismatch");
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

inline Matrix operator*(double s, const Matrix& m) { return m * s; }

// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, r.ptr);
}

}  // namespace shnn
