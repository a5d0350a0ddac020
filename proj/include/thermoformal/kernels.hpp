// Data-parallel kernels. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`; the two
// produce bitwise identical results because each output element is
// accumulated in the same order by exactly one thread.
#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

#include <omp.h>

namespace tf {

// Dense row-major square matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * n_, n_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * n_, n_}; }
  const std::vector<double>& data() const noexcept { return data_; }

  DenseMatrix& operator*=(double s) {
    for (auto& a : data_) a *= s;
    return *this;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

namespace kernels {

// Number of worker threads the parallel kernels will use.
int worker_count();

namespace serial {

template <class F>
void for_each_index(std::size_t n, F&& f) {
  for (std::size_t i = 0; i < n; ++i) f(i);
}

void matvec(const DenseMatrix& a, std::span<const double> x, std::span<double> y);
void matvec_transpose(const DenseMatrix& a, std::span<const double> x, std::span<double> y);

}  // namespace serial

namespace parallel {

// Exceptions thrown by `f` are captured and the one with the smallest index
// is rethrown after the loop.
template <class F>
void for_each_index(std::size_t n, F&& f) {
  std::exception_ptr err;
  std::size_t err_index = n;
  std::mutex m;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(m);
      if (static_cast<std::size_t>(i) < err_index) {
        err_index = static_cast<std::size_t>(i);
        err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
}

void matvec(const DenseMatrix& a, std::span<const double> x, std::span<double> y);
void matvec_transpose(const DenseMatrix& a, std::span<const double> x, std::span<double> y);

}  // namespace parallel

}  // namespace kernels
}  // namespace tf
