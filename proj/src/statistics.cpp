#include "thermoformal/statistics.hpp"

#include <cmath>
#include <stdexcept>

namespace tf {

using nlohmann::json;

double pressure(double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("pressure: lambda must be positive");
  return std::log(lambda);
}

void fit_decay(CorrelationSeries& c) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (std::size_t n = 0; n < c.values.size(); ++n) {
    const double a = std::abs(c.values[n]);
    if (!(a > c.noise_floor)) continue;
    const double x = static_cast<double>(n);
    const double y = std::log(a);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  c.decay_rate.reset();
  c.prefactor.reset();
  if (k < 2) return;
  const double den = k * sxx - sx * sx;
  if (den == 0.0) return;
  const double slope = (k * sxy - sx * sy) / den;
  const double icpt = (sy - slope * sx) / k;
  c.decay_rate = std::exp(slope);
  c.prefactor = std::exp(icpt);
}

namespace {

// psi_i, and (L(psi h))(x_i) / lambda summed over the exact preimages of x_i.
struct FirstStep {
  std::vector<double> psi;
  std::vector<double> w1;
};

FirstStep first_step(const MapSpec& map, const PotentialSpec& phi, const TransferMatrix& m,
                     const SpectralTriple& t, const RealFunction& psi) {
  const std::size_t n = m.n();
  FirstStep s{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = m.node(i);
    s.psi[i] = psi(x);
    double acc = 0.0;
    for (double y : preimages(map, x)) acc += std::exp(phi(y)) * psi(y) * interpolate(t.h, y);
    s.w1[i] = acc / t.lambda;
  }
  return s;
}

// Lags 0..n_max given psi . h at lag 0 and its exact image at lag 1.
CorrelationSeries series(const TransferMatrix& m, const SpectralTriple& t, std::span<const double> g,
                         std::span<const double> psi, const std::vector<double>* w1, int n_max) {
  if (n_max < 0) throw std::invalid_argument("correlations: n_max must be >= 0");
  const std::size_t n = m.n();
  double mg = 0.0;
  double mp = 0.0;
  std::vector<double> w(n), next(n);
  for (std::size_t i = 0; i < n; ++i) {
    mg += t.nu[i] * g[i] * t.h[i];
    mp += t.nu[i] * psi[i] * t.h[i];
    w[i] = psi[i] * t.h[i];
  }
  CorrelationSeries c;
  c.values.resize(static_cast<std::size_t>(n_max) + 1);
  for (int lag = 0; lag <= n_max; ++lag) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += t.nu[i] * g[i] * w[i];
    c.values[static_cast<std::size_t>(lag)] = s - mg * mp;
    if (lag == n_max) break;
    if (lag == 0 && w1) {
      w = *w1;
      continue;
    }
    apply(m, w, next);
    for (std::size_t i = 0; i < n; ++i) w[i] = next[i] / t.lambda;
  }
  fit_decay(c);
  return c;
}

}  // namespace

CorrelationSeries correlations(const TransferMatrix& m, const SpectralTriple& t,
                               std::span<const double> g, std::span<const double> psi, int n_max) {
  return series(m, t, g, psi, nullptr, n_max);
}

CorrelationSeries correlations(const MapSpec& map, const PotentialSpec& phi,
                               const TransferMatrix& m, const SpectralTriple& t,
                               const Observable& g, const Observable& psi, int n_max) {
  const auto s = first_step(map, phi, m, t, psi.eval);
  const auto gs = sample_on_grid(g, m.n());
  return series(m, t, gs, s.psi, &s.w1, n_max);
}

VarianceReport clt_variance(const MapSpec& map, const PotentialSpec& phi, const TransferMatrix& m,
                            const SpectralTriple& t, const Observable& psi, int lag_max,
                            const VarianceOptions& opts) {
  if (lag_max < 1) throw std::invalid_argument("clt_variance: lag_max must be >= 1");
  const std::size_t n = m.n();
  const auto p = sample_on_grid(psi, n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += t.nu[i] * t.h[i] * p[i];
  const auto centred = [&psi, mean](double x) { return psi(x) - mean; };
  const auto s = first_step(map, phi, m, t, centred);

  const auto c = series(m, t, s.psi, s.psi, &s.w1, lag_max);
  VarianceReport r;
  r.mean = mean;
  r.lag_max = lag_max;
  r.autocorrelation = c.values;
  r.c0 = c.values[0];
  double sum = r.c0;
  for (int j = 1; j <= lag_max; ++j) sum += 2.0 * c.values[static_cast<std::size_t>(j)];
  r.sigma2 = sum;
  if (t.gap_ratio < 1.0) {
    r.tail_bound = std::pow(t.gap_ratio, lag_max) / (1.0 - t.gap_ratio) * r.c0;
  }
  // relative to int psi^2 dmu so a constant (C_v(0) = 0) is still caught
  const double floor = opts.roundoff_floor * (std::max(r.c0, 0.0) + mean * mean);
  const double threshold = std::max(10.0 * r.tail_bound.value_or(0.0), floor);
  r.coboundary = r.sigma2 <= threshold;
  return r;
}

json to_json(const CorrelationSeries& c) {
  json j = {{"values", c.values}};
  j["decay_rate"] = c.decay_rate ? json(*c.decay_rate) : json(nullptr);
  j["prefactor"] = c.prefactor ? json(*c.prefactor) : json(nullptr);
  j["decay_rate_defined"] = c.decay_rate.has_value();
  return j;
}

json to_json(const VarianceReport& v) {
  json j = {{"sigma2", v.sigma2}, {"mean", v.mean},          {"c0", v.c0},
            {"lag_max", v.lag_max}, {"coboundary", v.coboundary}};
  j["tail_bound"] = v.tail_bound ? json(*v.tail_bound) : json(nullptr);
  return j;
}

}  // namespace tf
