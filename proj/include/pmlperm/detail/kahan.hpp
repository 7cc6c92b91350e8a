#pragma once

namespace pmlperm::detail {

/// Compensated (Kahan-Babuska/Neumaier) accumulator.
template <typename T>
class KahanSum {
 public:
  void add(T x) noexcept {
    T t = sum_ + x;
    if ((sum_ >= 0 ? sum_ : -sum_) >= (x >= 0 ? x : -x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  KahanSum& operator+=(T x) noexcept {
    add(x);
    return *this;
  }
  T value() const noexcept { return sum_ + comp_; }

 private:
  T sum_ = 0;
  T comp_ = 0;
};

}  // namespace pmlperm::detail
