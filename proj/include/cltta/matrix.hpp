#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace cltta {

// Dense row-major matrix of doubles. Just enough linear algebra for a small
// MLP and its losses; deliberately not a general-purpose library.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }
    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool all_finite() const noexcept;

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// c = a * b, a is m x k, b is k x n
Matrix multiply(const Matrix& a, const Matrix& b);
// c = a^T * b, a is k x m, b is k x n  ->  m x n
Matrix multiply_at_b(const Matrix& a, const Matrix& b);
// c = a * b^T, a is m x k, b is n x k  ->  m x n
Matrix multiply_a_bt(const Matrix& a, const Matrix& b);

std::vector<double> column_sums(const Matrix& m);

}  // namespace cltta
