#include "suan/matrix.hpp"

#include <cmath>
#include <fmt/format.h>

#include "suan/errors.hpp"

namespace suan {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError(fmt::format("matrix data has {} entries, expected {}x{}", data_.size(),
                                 rows, cols));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix out(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != out.cols()) throw ShapeError("ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
  }
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw IndexError("row index out of range");
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError(fmt::format("matmul {}x{} by {}x{}", a.rows(), a.cols(), b.rows(),
                                 b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Matrix matmul_transposed_lhs(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError(fmt::format("matmul ({}x{})^T by {}x{}", a.rows(), a.cols(), b.rows(),
                                 b.cols()));
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto brow = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ari = a(r, i);
      auto dst = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += ari * brow[j];
    }
  }
  return out;
}

Matrix matmul_transposed_rhs(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError(fmt::format("matmul {}x{} by ({}x{})^T", a.rows(), a.cols(), b.rows(),
                                 b.cols()));
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.empty()) return bottom;
  if (bottom.empty()) return top;
  if (top.cols() != bottom.cols()) throw ShapeError("vstack column mismatch");
  std::vector<double> data(top.values().begin(), top.values().end());
  data.insert(data.end(), bottom.values().begin(), bottom.values().end());
  return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

namespace {
double row_norm(std::span<const double> row) {
  double sq = 0.0;
  for (double v : row) sq += v * v;
  return std::sqrt(sq);
}
}  // namespace

Matrix l2_normalize_rows(const Matrix& features) {
  Matrix out = features;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double norm = row_norm(row);
    if (norm == 0.0) continue;
    for (double& v : row) v /= norm;
  }
  return out;
}

Matrix l2_normalize_rows_backward(const Matrix& features, const Matrix& upstream) {
  if (features.rows() != upstream.rows() || features.cols() != upstream.cols()) {
    throw ShapeError("l2 backward shape mismatch");
  }
  Matrix out = upstream;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto x = features.row(r);
    const double norm = row_norm(x);
    // The zero row is returned unchanged forward; treat it as identity here too.
    if (norm == 0.0) continue;
    auto g = upstream.row(r);
    double dot = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) dot += x[c] * g[c];
    auto dst = out.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double y = x[c] / norm;
      dst[c] = (g[c] - y * dot / norm) / norm;
    }
  }
  return out;
}

}  // namespace suan
