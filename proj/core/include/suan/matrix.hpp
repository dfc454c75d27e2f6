#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace suan {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Takes ownership of `data`; throws ShapeError unless size == rows*cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  /// Rows selected by index, in the given order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a (n×k) · b (k×m).
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ · b, used for weight gradients.
Matrix matmul_transposed_lhs(const Matrix& a, const Matrix& b);
/// a · bᵀ, used for input gradients.
Matrix matmul_transposed_rhs(const Matrix& a, const Matrix& b);

/// Stack two matrices with equal column counts.
Matrix vstack(const Matrix& top, const Matrix& bottom);

/// Scale each nonzero row to unit Euclidean norm; zero rows pass through.
Matrix l2_normalize_rows(const Matrix& features);

/// Backward pass of `l2_normalize_rows` given its input and upstream gradient.
Matrix l2_normalize_rows_backward(const Matrix& features, const Matrix& upstream);

}  // namespace suan
