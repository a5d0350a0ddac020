// Serial reference vs OpenMP kernels: matrix build, matvecs, leading triple
// and Monte Carlo orbit sums.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "thermoformal/kernels.hpp"
#include "thermoformal/map_core.hpp"
#include "thermoformal/sampler.hpp"
#include "thermoformal/transfer_operator.hpp"

namespace {

template <class F>
double seconds(F&& f, int reps = 1) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void report(const char* what, double serial, double parallel) {
  std::printf("%-28s serial %9.4f s   parallel %9.4f s   speedup %5.2fx\n", what, serial, parallel,
              serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2048;
  std::printf("workers: %d, grid n = %zu\n", tf::kernels::worker_count(), n);
  const auto map = tf::mp_like_map();
  const auto phi = tf::constant_observable(0.0);

  for (auto scheme : {tf::Scheme::collocation, tf::Scheme::ulam}) {
    tf::TransferMatrix m;
    const double s = seconds([&] { m = tf::build_matrix(map, phi, scheme, n, {false}); });
    const double p = seconds([&] { m = tf::build_matrix(map, phi, scheme, n, {true}); });
    report(("build " + tf::to_string(scheme)).c_str(), s, p);
  }

  const auto m = tf::build_matrix(map, phi, tf::Scheme::collocation, n);
  std::vector<double> x(n, 1.0), y(n);
  report("matvec", seconds([&] { tf::apply(m, x, y, false); }, 50),
         seconds([&] { tf::apply(m, x, y, true); }, 50));
  report("matvec transpose", seconds([&] { tf::apply_transpose(m, x, y, false); }, 50),
         seconds([&] { tf::apply_transpose(m, x, y, true); }, 50));

  tf::TripleOptions so, po;
  so.parallel = false;
  tf::SpectralTriple t;
  report("leading triple", seconds([&] { t = tf::leading_triple(m, so); }),
         seconds([&] { t = tf::leading_triple(m, po); }));

  const tf::EquilibriumSampler sampler(map, phi, t, tf::equilibrium_measure(t, m.scheme));
  const auto psi = tf::cos_mode(1);
  const int len[] = {50};
  tf::SamplingOptions ss, ps;
  ss.parallel = false;
  report("birkhoff sums 1e5 x 50",
         seconds([&] { tf::sample_birkhoff_sums(sampler, psi, len, 100000, 1, ss); }),
         seconds([&] { tf::sample_birkhoff_sums(sampler, psi, len, 100000, 1, ps); }));
  return 0;
}
