#include "thermoformal/transfer_operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "thermoformal/errors.hpp"

namespace tf {

Scheme scheme_from_string(const std::string& s) {
  if (s == "ulam") return Scheme::ulam;
  if (s == "collocation") return Scheme::collocation;
  throw ConfigError("/scheme", "expected ulam or collocation, got '" + s + "'");
}

std::string to_string(Scheme s) { return s == Scheme::ulam ? "ulam" : "collocation"; }

namespace {

std::size_t mod_index(long long c, std::size_t n) {
  const auto nn = static_cast<long long>(n);
  long long r = c % nn;
  if (r < 0) r += nn;
  return static_cast<std::size_t>(r);
}

void collocation_row(const MapSpec& map, const PotentialSpec& phi, std::size_t i,
                     std::span<double> row) {
  const std::size_t n = row.size();
  const double nd = static_cast<double>(n);
  const double x = (static_cast<double>(i) + 0.5) / nd;
  for (double y : preimages(map, x)) {
    const double w = std::exp(phi(y));
    const double p = y * nd - 0.5;
    const double fl = std::floor(p);
    const double theta = p - fl;
    const std::size_t j0 = mod_index(static_cast<long long>(fl), n);
    const std::size_t j1 = (j0 + 1) % n;
    row[j0] += w * (1.0 - theta);
    row[j1] += w * theta;
  }
}

void ulam_row(const MapSpec& map, const PotentialSpec& phi, std::size_t i, std::span<double> row) {
  const std::size_t n = row.size();
  const double nd = static_cast<double>(n);
  const double a = static_cast<double>(i) / nd;
  const double b = static_cast<double>(i + 1) / nd;
  for (int k = 0; k < map.degree; ++k) {
    const double lo = map.lift_inverse(a + k);
    const double hi = map.lift_inverse(b + k);
    const double len = hi - lo;
    if (!(len > 0.0)) continue;
    const double w = std::exp(phi(wrap_unit(0.5 * (lo + hi))));
    const auto c0 = static_cast<long long>(std::floor(lo * nd));
    const auto c1 = static_cast<long long>(std::floor(hi * nd));
    for (long long c = c0; c <= c1; ++c) {
      const double left = std::max(lo, static_cast<double>(c) / nd);
      const double right = std::min(hi, static_cast<double>(c + 1) / nd);
      if (right > left) row[mod_index(c, n)] += w * (right - left) / len;
    }
  }
}

}  // namespace

TransferMatrix build_matrix(const MapSpec& map, const PotentialSpec& phi, Scheme scheme,
                            std::size_t n, const BuildOptions& opts) {
  if (n < 16) throw std::invalid_argument("build_matrix: n must be >= 16");
  TransferMatrix m;
  m.scheme = scheme;
  m.a = DenseMatrix(n);
  m.map_name = map.name;
  m.potential = phi.source;
  auto row = [&](std::size_t i) {
    if (scheme == Scheme::collocation) {
      collocation_row(map, phi, i, m.a.row(i));
    } else {
      ulam_row(map, phi, i, m.a.row(i));
    }
  };
  if (opts.parallel) {
    kernels::parallel::for_each_index(n, row);
  } else {
    kernels::serial::for_each_index(n, row);
  }
  return m;
}

void apply(const TransferMatrix& m, std::span<const double> x, std::span<double> y, bool parallel) {
  if (parallel) {
    kernels::parallel::matvec(m.a, x, y);
  } else {
    kernels::serial::matvec(m.a, x, y);
  }
}

void apply_transpose(const TransferMatrix& m, std::span<const double> x, std::span<double> y,
                     bool parallel) {
  if (parallel) {
    kernels::parallel::matvec_transpose(m.a, x, y);
  } else {
    kernels::serial::matvec_transpose(m.a, x, y);
  }
}

// ---------------------------------------------------------------------------

bool is_primitive(const TransferMatrix& m, int max_power) {
  const std::size_t n = m.n();
  std::vector<std::vector<std::uint32_t>> pattern(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = m.a.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (r[j] > 0.0) pattern[i].push_back(static_cast<std::uint32_t>(j));
    }
    if (pattern[i].empty()) return false;
  }
  // With no zero rows A^k > 0 implies A^{k+1} > 0, so checking the largest
  // power suffices. Each start row spreads its reach set max_power times.
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> cur(words), next(words);
  for (std::size_t start = 0; start < n; ++start) {
    std::fill(cur.begin(), cur.end(), 0);
    cur[start / 64] |= std::uint64_t{1} << (start % 64);
    bool full = false;
    for (int k = 0; k < max_power; ++k) {
      std::fill(next.begin(), next.end(), 0);
      for (std::size_t w = 0; w < words; ++w) {
        std::uint64_t bits = cur[w];
        while (bits) {
          const auto b = static_cast<std::size_t>(__builtin_ctzll(bits));
          bits &= bits - 1;
          for (auto j : pattern[w * 64 + b]) next[j / 64] |= std::uint64_t{1} << (j % 64);
        }
      }
      cur.swap(next);
      std::size_t count = 0;
      for (auto w : cur) count += static_cast<std::size_t>(__builtin_popcountll(w));
      full = count == n;
      if (full) break;
    }
    if (!full) return false;
  }
  return true;
}

namespace {

double sum_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct PowerResult {
  std::vector<double> v;
  double lambda;
  double residual;
  int iterations;
};

// Power iteration with sum normalization. Converged when successive
// eigenvalue estimates agree to `tol` and the residual is below
// residual_tol * lambda.
template <class Apply>
PowerResult power_iterate(std::size_t n, Apply&& op, std::vector<double> v,
                          const TripleOptions& opts, const char* side) {
  if (v.size() != n) v.assign(n, 1.0);
  for (double& x : v) x = std::abs(x);
  double s = sum_of(v);
  if (!(s > 0.0)) {
    v.assign(n, 1.0);
    s = static_cast<double>(n);
  }
  for (double& x : v) x /= s;

  std::vector<double> w(n);
  double lambda = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    op(v, w);
    const double sw = sum_of(w);
    if (!(sw > 0.0)) throw ReducibilityError(std::string("power iteration collapsed (") + side + ")");
    const double next = sw;  // sum(v) == 1
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(w[i] - next * v[i]));
    res /= max_abs(v);
    const bool settled = it > 1 && std::abs(next - lambda) <= opts.tol * next &&
                         res <= opts.residual_tol * next;
    lambda = next;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / sw;
    if (settled) return {std::move(v), lambda, res, it};
  }
  throw ConvergenceError(std::string("power iteration did not converge (") + side + ")", lambda,
                         opts.max_iterations);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Growth rate of A restricted to the complement of h (x) nu, estimated from
// the geometric mean of the norm ratios over the second half of the run.
double deflated_gap(const TransferMatrix& m, const SpectralTriple& t, const TripleOptions& opts) {
  const std::size_t n = m.n();
  std::vector<double> v(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = m.node(i);
    v[i] = std::sin(2.0 * std::numbers::pi * 3.0 * x + 0.3) +
           0.5 * std::cos(2.0 * std::numbers::pi * x + 1.1) + 0.25 * (x - 0.5);
  }
  auto project = [&](std::vector<double>& u) {
    const double c = dot(t.nu, u);
    for (std::size_t i = 0; i < n; ++i) u[i] -= c * t.h[i];
  };
  project(v);
  double nv = norm2(v);
  if (nv == 0.0) return 0.0;
  for (double& x : v) x /= nv;

  const int total = std::max(2, opts.gap_iterations);
  const int burn = total / 2;
  double log_growth = 0.0;
  int counted = 0;
  for (int it = 0; it < total; ++it) {
    apply(m, v, w, opts.parallel);
    project(w);
    const double nw = norm2(w);
    if (nw == 0.0 || !std::isfinite(nw)) return 0.0;
    if (it >= burn) {
      log_growth += std::log(nw);
      ++counted;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
  }
  const double rate = std::exp(log_growth / counted) / t.lambda;
  return std::clamp(rate, 0.0, std::nextafter(1.0, 0.0));
}

}  // namespace

SpectralTriple leading_triple(const TransferMatrix& m, const TripleOptions& opts) {
  const std::size_t n = m.n();
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = m.a.row(i);
    if (std::none_of(r.begin(), r.end(), [](double x) { return x > 0.0; })) {
      throw ReducibilityError("transfer matrix has a zero row at index " + std::to_string(i));
    }
    if (std::any_of(r.begin(), r.end(), [](double x) { return x < 0.0 || !std::isfinite(x); })) {
      throw std::invalid_argument("transfer matrix must be nonnegative and finite");
    }
  }

  SpectralTriple t;
  if (opts.check_primitivity) t.primitive = is_primitive(m, opts.primitivity_max_power);

  auto right = power_iterate(
      n, [&](const std::vector<double>& x, std::vector<double>& y) { apply(m, x, y, opts.parallel); },
      opts.warm_h, opts, "right");
  auto left = power_iterate(
      n,
      [&](const std::vector<double>& x, std::vector<double>& y) {
        apply_transpose(m, x, y, opts.parallel);
      },
      opts.warm_nu, opts, "left");

  t.h = std::move(right.v);
  t.nu = std::move(left.v);  // already sums to 1
  const double hn = dot(t.h, t.nu);
  for (double& x : t.h) x /= hn;

  std::vector<double> ah(n);
  apply(m, t.h, ah, opts.parallel);
  t.lambda = dot(t.nu, ah);  // nu^T A h / nu^T h with nu^T h = 1
  t.iterations = right.iterations + left.iterations;
  {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r = std::max(r, std::abs(ah[i] - t.lambda * t.h[i]));
    t.right_residual = r / max_abs(t.h);
    std::vector<double> an(n);
    apply_transpose(m, t.nu, an, opts.parallel);
    r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r = std::max(r, std::abs(an[i] - t.lambda * t.nu[i]));
    t.left_residual = r / max_abs(t.nu);
  }
  t.gap_ratio = deflated_gap(m, t, opts);
  return t;
}

// ---------------------------------------------------------------------------

std::vector<double> EquilibriumState::density() const {
  std::vector<double> d(mu.size());
  const double n = static_cast<double>(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) d[i] = mu[i] * n;
  return d;
}

EquilibriumState equilibrium_measure(const SpectralTriple& t, Scheme scheme) {
  EquilibriumState e;
  e.scheme = scheme;
  e.mu.resize(t.h.size());
  double s = 0.0;
  for (std::size_t i = 0; i < t.h.size(); ++i) {
    e.mu[i] = std::max(0.0, t.h[i] * t.nu[i]);
    s += e.mu[i];
  }
  if (std::abs(s - 1.0) > 1e-10) {
    throw std::logic_error("equilibrium_measure: triple not normalized (mass " +
                           std::to_string(s) + ")");
  }
  e.renormalization = 1.0 / s;
  for (double& x : e.mu) x /= s;
  return e;
}

double integrate(const EquilibriumState& mu, const RealFunction& g) {
  const std::size_t n = mu.n();
  const double nd = static_cast<double>(n);
  double s = 0.0;
  if (mu.scheme == Scheme::collocation) {
    for (std::size_t i = 0; i < n; ++i) s += mu.mu[i] * g((static_cast<double>(i) + 0.5) / nd);
    return s;
  }
  // Gauss-Legendre nodes on [-1/2, 1/2].
  const double off = 0.5 * std::sqrt(3.0 / 5.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = (static_cast<double>(i) + 0.5) / nd;
    const double q = (5.0 * g(wrap_unit(c - off / nd)) + 8.0 * g(c) + 5.0 * g(wrap_unit(c + off / nd))) / 18.0;
    s += mu.mu[i] * q;
  }
  return s;
}

double invariance_defect(const MapSpec& map, const EquilibriumState& mu,
                         std::span<const Observable> tests) {
  double worst = 0.0;
  for (const auto& g : tests) {
    const double pushed = integrate(mu, [&](double x) { return g(eval(map, x)); });
    const double plain = integrate(mu, g.eval);
    worst = std::max(worst, std::abs(pushed - plain));
  }
  return worst;
}

double interpolate(std::span<const double> values, double x) {
  const std::size_t n = values.size();
  const double p = wrap_unit(x) * static_cast<double>(n) - 0.5;
  const double fl = std::floor(p);
  const double theta = p - fl;
  const std::size_t j0 = mod_index(static_cast<long long>(fl), n);
  return values[j0] * (1.0 - theta) + values[(j0 + 1) % n] * theta;
}

}  // namespace tf
