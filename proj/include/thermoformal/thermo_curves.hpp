// Free energy E(t) = log lambda(phi + t psi) - log lambda(phi), its Legendre
// transform, large-deviation checks, and parameter response scans.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermoformal/map_core.hpp"
#include "thermoformal/observable.hpp"
#include "thermoformal/sampler.hpp"
#include "thermoformal/transfer_operator.hpp"

namespace tf {

enum class Convexity { strict, affine, indeterminate };
std::string to_string(Convexity c);

struct CurveOptions {
  double affine_tol = 1e-6;  // affine when max |E''| below this
  double strict_tol = 1e-8;  // strict when min E'' above this
  // Admissibility guard on phi +- t_max psi; a failure only adds a warning.
  std::optional<double> guard_epsilon;
  TripleOptions triple;
  BuildOptions build;
};

struct FreeEnergyCurve {
  nlohmann::json psi;
  Scheme scheme = Scheme::collocation;
  std::size_t n = 0;
  double t_max = 0.0;
  double step = 0.0;
  std::vector<double> t, E, dE, d2E;
  std::vector<double> lambda;
  std::vector<double> mean_psi;  // int psi d mu_{phi + t psi}
  double log_lambda0 = 0.0;
  Convexity verdict = Convexity::indeterminate;
  std::vector<std::string> warnings;

  std::size_t zero_index() const { return t.size() / 2; }
};

// t_k = t_max (2k - (steps-1)) / (steps-1), steps odd so t = 0 is a node and
// E there is 0 exactly.
FreeEnergyCurve free_energy_curve(const MapSpec& map, const PotentialSpec& phi,
                                  const Observable& psi, double t_max, int steps, Scheme scheme,
                                  std::size_t n, const CurveOptions& opts = {});

// Finite differences of E on a uniform grid: central inside, second-order
// one-sided at the ends. Also sets the verdict.
void differentiate(FreeEnergyCurve& c, const CurveOptions& opts = {});

// Largest t on the ladder start, start/2, ... (at most `rungs` rungs) for
// which phi +- t psi pass the oscillation/seminorm admissibility check.
double default_t_max(const PotentialSpec& phi, const Observable& psi, double epsilon,
                     double start = 4.0, int rungs = 24);

struct DerivativeReport {
  double max_residual = 0.0;       // max_k |E'(t_k) - int psi d mu_{t_k}|
  double zero_residual = 0.0;      // |E'(0) - int psi d mu_phi|
  double centered_dE0 = 0.0;       // E'(0) after centering psi
  bool bounds_ok = true;           // t inf psi <= E(t) <= t sup psi (reversed for t < 0)
  std::size_t bound_violations = 0;
  double psi_inf = 0.0;            // of the centered psi
  double psi_sup = 0.0;
};

// psi is sampled on a fine grid for its centered inf and sup.
DerivativeReport derivative_checks(const FreeEnergyCurve& curve, const Observable& psi);

// Richardson combination (4 E'_fine - E'_coarse)/3 at the coarse nodes,
// compared with int psi d mu_t. fine must have 2 steps - 1 nodes on the same
// interval.
double richardson_derivative_residual(const FreeEnergyCurve& coarse, const FreeEnergyCurve& fine);

struct LegendreValue {
  double value = 0.0;
  double argmax = 0.0;
};

// sup_k (y x_k - f_k) over a uniform grid x, with a parabola through the
// three samples around an interior maximizer.
LegendreValue legendre(std::span<const double> x, std::span<const double> f, double y);

struct RateFunction {
  std::vector<double> s, I, t_of_s;
  std::vector<double> curve_t, curve_E;  // the free energy it came from
  double s_star = 0.0;                   // int psi d mu_phi
  double I_at_s_star = 0.0;
  double eq_residual = 0.0;  // max |I(E'(t_k)) - (t_k E'(t_k) - E(t_k))| over interior k

  double evaluate(double s) const;
  double s_min() const { return s.front(); }
  double s_max() const { return s.back(); }
  // inf of I over [a, b], a <= b inside the domain.
  double infimum(double a, double b, int samples = 401) const;
};

// Requires a strictly convex verdict; throws DegenerateLegendre otherwise.
RateFunction rate_function(const FreeEnergyCurve& curve, int s_steps);
// No verdict check; for injected curves.
RateFunction rate_function(std::span<const double> t, std::span<const double> E,
                           std::span<const double> dE, int s_steps, double s_star);

struct LdpReport {
  double a = 0.0, b = 0.0;
  std::vector<int> n;
  std::vector<std::size_t> counts;
  std::vector<std::optional<double>> rate;  // (1/n) log(count/m); empty for zero counts
  std::size_t m = 0;
  std::uint64_t seed = 0;
  double extrapolated = 0.0;  // a0 in r(n) ~ a0 + a1/n
  double target = 0.0;        // -inf_{[a,b]} I
  double gap = 0.0;           // |extrapolated - target|
  bool censored = false;      // zero counts: the estimate is only a lower bound
};

LdpReport ldp_empirical(const EquilibriumSampler& sampler, const Observable& psi, double a,
                        double b, std::span<const int> n_list, std::size_t m, std::uint64_t seed,
                        const RateFunction& rate, const SamplingOptions& opts = {});

struct FamilyMember {
  MapSpec map;
  PotentialSpec phi;
};
using Family = std::function<FamilyMember(double)>;

struct ResponseOptions {
  Scheme scheme = Scheme::collocation;
  std::size_t n = 512;
  // Condition (C) guard per member; skipped when empty.
  std::optional<int> guard_N;
  double guard_gamma = 0.99;
  int guard_resolution = 256;
  TripleOptions triple;
  BuildOptions build;
};

struct ResponseScan {
  std::vector<double> v, lambda, pressure, mean;
  std::vector<double> d_lambda, d2_lambda, d_mean;  // NaN where undefined
  // |D(2h) - D(h)| / |D(h)| for the central first / second differences of
  // lambda; NaN near the ends or where D(h) = 0.
  std::vector<double> richardson_first, richardson_second;
  std::vector<std::optional<bool>> guard_pass;
  std::vector<std::string> errors;  // empty string for a good point

  double max_adjacent_jump() const;
  double max_richardson_second() const;
};

ResponseScan response_scan(const Family& family, const Observable& obs,
                           std::span<const double> v_grid, const ResponseOptions& opts = {});

nlohmann::json to_json(const FreeEnergyCurve& c);
nlohmann::json to_json(const DerivativeReport& d);
nlohmann::json to_json(const RateFunction& r);
nlohmann::json to_json(const LdpReport& l);
nlohmann::json to_json(const ResponseScan& r);

}  // namespace tf
