// Monte Carlo orbits distributed according to an equilibrium state.
//
// x_n is drawn from the grid weights of mu (inverse CDF plus uniform jitter
// inside the cell) and the orbit is generated backwards: x_{j} is one of the
// preimages of x_{j+1}, chosen with probability proportional to
// e^{phi(y)} h(y). This is the Markov chain of the normalized operator, so
// x_0 is again mu-distributed and x_{j+1} = f(x_j) exactly, with no loss of
// precision from iterating an expanding map forwards.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "thermoformal/map_core.hpp"
#include "thermoformal/observable.hpp"
#include "thermoformal/statistics.hpp"
#include "thermoformal/transfer_operator.hpp"

namespace tf {

using Rng = std::mt19937_64;

// Uniform on [0,1) from the top 53 bits; independent of the libstdc++
// distribution implementation.
double uniform01(Rng& rng);

// Generator for batch b of a run seeded by master.
Rng batch_rng(std::uint64_t master, std::uint64_t batch);

class EquilibriumSampler {
 public:
  EquilibriumSampler(MapSpec map, PotentialSpec phi, const SpectralTriple& triple,
                     const EquilibriumState& mu);

  double draw(Rng& rng) const;
  // Fills out[j] = psi(x_j), j = 0..out.size()-1, for one backward orbit.
  void orbit_values(Rng& rng, const Observable& psi, std::span<double> out) const;

  const MapSpec& map() const { return map_; }

 private:
  MapSpec map_;
  PotentialSpec phi_;
  std::vector<double> h_;
  std::vector<double> cdf_;
};

struct SamplingOptions {
  std::size_t batch_size = 4096;
  bool parallel = true;
};

// sums[i][s] = S_{lengths[i]} psi for sample s. One orbit of length
// max(lengths) per sample serves every requested length.
std::vector<std::vector<double>> sample_birkhoff_sums(const EquilibriumSampler& sampler,
                                                      const Observable& psi,
                                                      std::span<const int> lengths,
                                                      std::size_t m, std::uint64_t seed,
                                                      const SamplingOptions& opts = {});

double normal_cdf(double z, double sigma);

struct CltEmpirical {
  bool refused = false;
  std::string status;     // "ok" or reason for refusal
  double ks = 0.0;
  double sigma2 = 0.0;
  int n = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  // Percentile pairs (sample quantile, gaussian quantile) for q = 1..99 %.
  std::vector<std::pair<double, double>> qq;
};

// KS distance between the law of (S_n psi - n int psi dmu)/sqrt(n) and
// Normal(0, sigma2). Refuses when the variance report flags a coboundary.
CltEmpirical clt_empirical(const EquilibriumSampler& sampler, const Observable& psi,
                           const VarianceReport& variance, int n, std::size_t m,
                           std::uint64_t seed, const SamplingOptions& opts = {});

// (1/n) log( (1/m) sum_s exp(t S_n psi) ), by log-sum-exp.
double free_energy_mc(const EquilibriumSampler& sampler, const Observable& psi, double t, int n,
                      std::size_t m, std::uint64_t seed, const SamplingOptions& opts = {});
double free_energy_mc(std::span<const double> sums, double t, int n);

nlohmann::json to_json(const CltEmpirical& c);

}  // namespace tf
