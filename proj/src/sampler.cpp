#include "thermoformal/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "thermoformal/kernels.hpp"

namespace tf {

using nlohmann::json;

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Rng batch_rng(std::uint64_t master, std::uint64_t batch) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(batch), static_cast<std::uint32_t>(batch >> 32)};
  return Rng(seq);
}

EquilibriumSampler::EquilibriumSampler(MapSpec map, PotentialSpec phi, const SpectralTriple& triple,
                                       const EquilibriumState& mu)
    : map_(std::move(map)), phi_(std::move(phi)), h_(triple.h), cdf_(mu.mu.size()) {
  if (mu.mu.empty() || mu.mu.size() != triple.h.size()) {
    throw std::invalid_argument("EquilibriumSampler: triple and measure sizes differ");
  }
  double c = 0.0;
  for (std::size_t i = 0; i < cdf_.size(); ++i) {
    c += std::max(mu.mu[i], 0.0);
    cdf_[i] = c;
  }
  for (double& v : cdf_) v /= c;
  cdf_.back() = 1.0;
}

double EquilibriumSampler::draw(Rng& rng) const {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                                   static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  const double x = (static_cast<double>(i) + uniform01(rng)) / static_cast<double>(cdf_.size());
  return wrap_unit(x);
}

// out[k] = psi(z_k) with z_0 ~ mu and f(z_{k+1}) = z_k. Read forwards in
// time the orbit is z_{n-1}, ..., z_0, so S_n psi is the sum of out[0..n).
void EquilibriumSampler::orbit_values(Rng& rng, const Observable& psi, std::span<double> out) const {
  const int g = map_.degree;
  std::vector<double> ys(static_cast<std::size_t>(g)), w(static_cast<std::size_t>(g));
  const double f0 = map_.lift_at(0.0);
  double z = draw(rng);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = psi(z);
    if (k + 1 == out.size()) break;
    const double k0 = std::ceil(f0 - z);
    double total = 0.0;
    for (int b = 0; b < g; ++b) {
      const double y = wrap_unit(map_.lift_inverse(z + k0 + b));
      ys[static_cast<std::size_t>(b)] = y;
      total += std::exp(phi_(y)) * std::max(interpolate(h_, y), 0.0);
      w[static_cast<std::size_t>(b)] = total;
    }
    const double u = uniform01(rng) * total;
    int pick = g - 1;
    for (int b = 0; b < g; ++b) {
      if (u < w[static_cast<std::size_t>(b)]) {
        pick = b;
        break;
      }
    }
    z = ys[static_cast<std::size_t>(pick)];
  }
}

std::vector<std::vector<double>> sample_birkhoff_sums(const EquilibriumSampler& sampler,
                                                      const Observable& psi,
                                                      std::span<const int> lengths,
                                                      std::size_t m, std::uint64_t seed,
                                                      const SamplingOptions& opts) {
  if (lengths.empty()) throw std::invalid_argument("sample_birkhoff_sums: no orbit lengths");
  if (opts.batch_size == 0) throw std::invalid_argument("sample_birkhoff_sums: batch_size is 0");
  int top = 0;
  for (int n : lengths) {
    if (n < 1) throw std::invalid_argument("sample_birkhoff_sums: orbit length must be >= 1");
    top = std::max(top, n);
  }
  std::vector<std::vector<double>> sums(lengths.size(), std::vector<double>(m));
  const std::size_t batches = (m + opts.batch_size - 1) / opts.batch_size;
  auto body = [&](std::size_t b) {
    Rng rng = batch_rng(seed, b);
    std::vector<double> vals(static_cast<std::size_t>(top));
    const std::size_t lo = b * opts.batch_size;
    const std::size_t hi = std::min(m, lo + opts.batch_size);
    for (std::size_t s = lo; s < hi; ++s) {
      sampler.orbit_values(rng, psi, vals);
      for (std::size_t i = 0; i < lengths.size(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < lengths[i]; ++j) acc += vals[static_cast<std::size_t>(j)];
        sums[i][s] = acc;
      }
    }
  };
  if (opts.parallel) {
    kernels::parallel::for_each_index(batches, body);
  } else {
    kernels::serial::for_each_index(batches, body);
  }
  return sums;
}

double normal_cdf(double z, double sigma) { return 0.5 * std::erfc(-z / (sigma * std::sqrt(2.0))); }

CltEmpirical clt_empirical(const EquilibriumSampler& sampler, const Observable& psi,
                           const VarianceReport& variance, int n, std::size_t m,
                           std::uint64_t seed, const SamplingOptions& opts) {
  CltEmpirical r;
  r.sigma2 = variance.sigma2;
  r.n = n;
  r.m = m;
  r.seed = seed;
  if (variance.coboundary || !(variance.sigma2 > 0.0)) {
    r.refused = true;
    r.status = "refused: variance below the coboundary threshold, no Gaussian limit to compare";
    return r;
  }
  if (m < 2) throw std::invalid_argument("clt_empirical: need at least two samples");
  const int len[] = {n};
  auto sums = sample_birkhoff_sums(sampler, psi, len, m, seed, opts);
  auto& z = sums[0];
  const double rn = std::sqrt(static_cast<double>(n));
  for (double& v : z) v = (v - n * variance.mean) / rn;
  std::sort(z.begin(), z.end());
  const double sigma = std::sqrt(variance.sigma2);
  const double dm = static_cast<double>(m);
  double d = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double f = normal_cdf(z[k], sigma);
    d = std::max({d, (static_cast<double>(k) + 1.0) / dm - f, f - static_cast<double>(k) / dm});
  }
  r.ks = d;
  r.status = "ok";
  const boost::math::normal_distribution<double> nd(0.0, sigma);
  for (int q = 1; q < 100; ++q) {
    const double p = q / 100.0;
    const auto idx = std::min(m - 1, static_cast<std::size_t>(p * dm));
    r.qq.emplace_back(z[idx], boost::math::quantile(nd, p));
  }
  return r;
}

double free_energy_mc(std::span<const double> sums, double t, int n) {
  if (sums.empty()) throw std::invalid_argument("free_energy_mc: no samples");
  if (t == 0.0) return 0.0;
  double top = -std::numeric_limits<double>::infinity();
  for (double s : sums) top = std::max(top, t * s);
  double acc = 0.0;
  for (double s : sums) acc += std::exp(t * s - top);
  return (top + std::log(acc) - std::log(static_cast<double>(sums.size()))) / n;
}

double free_energy_mc(const EquilibriumSampler& sampler, const Observable& psi, double t, int n,
                      std::size_t m, std::uint64_t seed, const SamplingOptions& opts) {
  const int len[] = {n};
  const auto sums = sample_birkhoff_sums(sampler, psi, len, m, seed, opts);
  return free_energy_mc(sums[0], t, n);
}

json to_json(const CltEmpirical& c) {
  json j = {{"refused", c.refused}, {"status", c.status}, {"sigma2", c.sigma2},
            {"n", c.n},             {"m", c.m},           {"seed", c.seed}};
  j["ks"] = c.refused ? json(nullptr) : json(c.ks);
  return j;
}

}  // namespace tf
