#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace pmlperm {

/// Dense row-major matrix whose entries are finite and non-negative.
///
/// The invariant is checked on construction and on every `set`; there is no
/// mutable element access that could bypass it.
class NonNegMatrix {
 public:
  NonNegMatrix() = default;
  NonNegMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  NonNegMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  NonNegMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static NonNegMatrix identity(std::size_t n);
  static NonNegMatrix ones(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }
  void set(std::size_t r, std::size_t c, double value);

  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> data() const noexcept { return data_; }

  double row_sum(std::size_t r) const noexcept;
  double col_sum(std::size_t c) const noexcept;

  NonNegMatrix scaled_row(std::size_t r, double factor) const;
  NonNegMatrix permuted(std::span<const std::size_t> row_perm,
                        std::span<const std::size_t> col_perm) const;

  friend bool operator==(const NonNegMatrix&, const NonNegMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Block-diagonal composition of square blocks.
NonNegMatrix block_diagonal(std::span<const NonNegMatrix> blocks);

}  // namespace pmlperm
