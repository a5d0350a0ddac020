#include "thermoformal/kernels.hpp"

#include <algorithm>

namespace tf::kernels {

int worker_count() { return omp_get_max_threads(); }

namespace serial {

void matvec(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += r[j] * x[j];
    y[i] = s;
  }
}

void matvec_transpose(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = a.size();
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = a.row(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < n; ++j) y[j] += r[j] * xi;
  }
}

}  // namespace serial

namespace parallel {

void matvec(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<long long>(a.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    const auto r = a.row(static_cast<std::size_t>(i));
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[static_cast<std::size_t>(i)] = s;
  }
}

// Column blocks per thread; within a block rows are visited in order, so each
// y[j] sees the same summation order as the serial loop.
void matvec_transpose(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = a.size();
#pragma omp parallel
  {
    const auto nt = static_cast<std::size_t>(omp_get_num_threads());
    const auto t = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t j0 = n * t / nt;
    const std::size_t j1 = n * (t + 1) / nt;
    for (std::size_t j = j0; j < j1; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = a.row(i);
      const double xi = x[i];
      for (std::size_t j = j0; j < j1; ++j) y[j] += r[j] * xi;
    }
  }
}

}  // namespace parallel

}  // namespace tf::kernels
