#include "pmlperm/matrix.hpp"

#include <cmath>
#include <string>

#include "pmlperm/errors.hpp"

namespace pmlperm {

namespace {

void check_entry(double v) {
  if (!std::isfinite(v) || v < 0.0) {
    throw InvalidArgument("matrix entry must be finite and non-negative, got " +
                          std::to_string(v));
  }
}

}  // namespace

NonNegMatrix::NonNegMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  check_entry(fill);
}

NonNegMatrix::NonNegMatrix(std::size_t rows, std::size_t cols,
                           std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data has " + std::to_string(data_.size()) +
                         " entries, expected " +
                         std::to_string(rows_ * cols_));
  }
  for (double v : data_) check_entry(v);
}

NonNegMatrix::NonNegMatrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix literal");
    for (double v : r) {
      check_entry(v);
      data_.push_back(v);
    }
  }
}

NonNegMatrix NonNegMatrix::identity(std::size_t n) {
  NonNegMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1.0;
  return m;
}

NonNegMatrix NonNegMatrix::ones(std::size_t n) { return NonNegMatrix(n, n, 1.0); }

void NonNegMatrix::set(std::size_t r, std::size_t c, double value) {
  check_entry(value);
  data_[r * cols_ + c] = value;
}

double NonNegMatrix::row_sum(std::size_t r) const noexcept {
  double s = 0.0;
  for (double v : row(r)) s += v;
  return s;
}

double NonNegMatrix::col_sum(std::size_t c) const noexcept {
  double s = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) s += data_[r * cols_ + c];
  return s;
}

NonNegMatrix NonNegMatrix::scaled_row(std::size_t r, double factor) const {
  NonNegMatrix out = *this;
  for (std::size_t c = 0; c < cols_; ++c) out.set(r, c, factor * (*this)(r, c));
  return out;
}

NonNegMatrix NonNegMatrix::permuted(std::span<const std::size_t> row_perm,
                                    std::span<const std::size_t> col_perm) const {
  if (row_perm.size() != rows_ || col_perm.size() != cols_) {
    throw DimensionError("permutation size does not match matrix shape");
  }
  std::vector<double> out(rows_ * cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c)
      out[r * cols_ + c] = (*this)(row_perm[r], col_perm[c]);
  return {rows_, cols_, std::move(out)};
}

NonNegMatrix block_diagonal(std::span<const NonNegMatrix> blocks) {
  std::size_t n = 0;
  for (const auto& b : blocks) {
    if (!b.is_square()) throw DimensionError("blocks must be square");
    n += b.rows();
  }
  std::vector<double> data(n * n, 0.0);
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t r = 0; r < b.rows(); ++r)
      for (std::size_t c = 0; c < b.cols(); ++c)
        data[(offset + r) * n + offset + c] = b(r, c);
    offset += b.rows();
  }
  return {n, n, std::move(data)};
}

}  // namespace pmlperm
