// Membership checks for the non-uniformly expanding map class: the
// contracting-branch condition on a grid, the pointwise-to-uniform iterate
// upgrade, the covering-budget arithmetic and potential admissibility.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "thermoformal/map_core.hpp"
#include "thermoformal/observable.hpp"

namespace tf {

using BigInt = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Condition (C) / (C')

enum class ContractionMode { C, Cprime };

// `certified`: every bound carries the cell-inflation factor exp(rho * w).
// `center_value`: no modulus was available, bounds are raw centre values.
enum class CertificationMode { certified, center_value };

struct CellWitness {
  double center = 0.0;
  std::uint64_t branch = 0;  // witness branch (minimum bound)
  double preimage = 0.0;
  double raw = 0.0;          // L_N at the centre
  double bound = 0.0;        // raw * exp(rho * w) in certified mode
  double rho = 0.0;          // log-Lipschitz modulus used for this branch and cell
};

struct ConditionCReport {
  ContractionMode mode = ContractionMode::C;
  int N = 1;
  double gamma = 0.5;
  int resolution = 16;
  CertificationMode certification = CertificationMode::certified;
  double rho = 0.0;  // largest modulus used by any witness
  std::vector<CellWitness> cells;
  std::vector<std::size_t> failures;  // cells whose best bound is >= gamma
  bool pass = false;

  double worst_bound() const;
};

struct CertifyOptions {
  // User-supplied modulus applied to every branch. Without it, maps with f'
  // get a per-cell, per-branch modulus sampled along the branch over one cell
  // width either side of the centre.
  std::optional<double> rho;
  BranchOptions branch;
  bool parallel = true;
};

ConditionCReport check_condition_C(const MapSpec& map, int N, double gamma, int resolution,
                                   const CertifyOptions& opts = {});
ConditionCReport check_condition_Cprime(const MapSpec& map, int N, double gamma, int resolution,
                                        const CertifyOptions& opts = {});

// Global modulus valid for every branch: K * sum_{k=1..N} Lmax^k with
// K = sup|f''/f'| and Lmax = sup 1/f', sampled on a fine grid. Much looser
// than the per-cell one near a contracting region. nullopt without f'.
std::optional<double> derivative_modulus(const MapSpec& map, int N, int samples = 4096);

nlohmann::json to_json(const ConditionCReport& r, bool include_cells = false);

// ---------------------------------------------------------------------------
// Pointwise contraction -> uniform iterate

struct PointwiseRegion {
  double lo = 0.0;
  double hi = 1.0;
  int n = 1;         // iterate at which some inverse branch contracts on the region
  double gamma = 0.5;
};

struct UniformIterate {
  int kappa = 1;
  int N = 1;         // max n_j
  int N_tilde = 1;   // kappa * N
  double gamma = 0.5;
  double rate = 0.5; // gamma^kappa L^N
};

UniformIterate pointwise_to_uniform(std::span<const PointwiseRegion> regions, double L);

// ---------------------------------------------------------------------------
// Covering budget

struct CoveringBudgetInput {
  double gamma = 0.5;
  double L = 1.0;
  int N = 1;
  int G = 2;
  int dim = 1;
  double C = 0.0;  // <= 0 selects default_covering_constant(dim)
  int ell_cap = 10000;
  int k_cap = 100000;
};

struct CoveringBudget {
  CoveringBudgetInput input;
  int ell = 0;
  int k = 0;
  BigInt D_k = 0;
  BigInt B_k = 0;
  BigInt q_k = 0;
  BigInt threshold = 0;  // G^{ell k N}
  bool contraction_ok = false;
  bool growth_ok = false;
  bool feasible = false;
  long long m0 = 0;      // ell k N
  double gamma_tilde = 0.0;
  double gamma_m = 0.0;  // gamma_tilde^k
  double L_m = 0.0;      // L^{m0}
  std::string violated;  // "contraction", "growth", "count", "k cap"; empty when feasible
};

// (sqrt(2) diam)^dim, diam = 1/2 on the circle.
double default_covering_constant(int dim, double diam = 0.5);

BigInt binomial(int n, int k);
// sum_{j<k} C(n, j) a^{n-j}: length-n words over a (a+1)-letter alphabet with
// fewer than k occurrences of the one contracting letter.
BigInt bad_branch_count(int n, int k, const BigInt& a);
// ceil(C L^{k N dim}); nullopt when it does not fit a double.
std::optional<BigInt> ball_count(double C, double L, int N, int dim, int k);

// gamma L^{N (ell - 1)} < 1
bool contraction_estimate(double gamma, double L, int N, int ell);
// e^{1/ell} ell^{1/ell} L^{N dim} < G^N / (G^N - 1)
bool growth_estimate(double L, int N, int G, int dim, int ell);

CoveringBudget covering_budget(const CoveringBudgetInput& in);
// Feasibility of one fixed (ell, k).
CoveringBudget covering_budget_at(const CoveringBudgetInput& in, int ell, int k);

nlohmann::json to_json(const CoveringBudget& b);

// ---------------------------------------------------------------------------
// Potential admissibility

struct HolderData {
  double sup = 0.0;
  double inf = 0.0;
  std::optional<double> exp_seminorm;  // |e^phi|_alpha
  double alpha = 1.0;
  bool sampled = true;
};

// Grid estimate of sup, inf and |e^phi|_alpha. The seminorm is inflated by
// the largest sampled slope times the sample spacing, so that pairs falling
// between sample points are covered.
HolderData holder_data(const Observable& phi, double alpha, int samples = 512);

struct MapIterateData {
  int m = 1;
  double degree = 2.0;  // deg(f^m)
  double q = 0.0;
  double gamma_m = 0.5;
  double L_m = 1.0;
  double alpha = 1.0;
  double diam = 0.5;
};

double iterate_inequality_lhs(double epsilon, const MapIterateData& d);

struct PotentialAdmissibility {
  HolderData data;
  double epsilon = 0.0;
  std::optional<MapIterateData> iterate;
  std::optional<double> derivative_norm;  // ||D phi||_{C^{r-1}}
  std::optional<double> epsilon_prime;

  bool oscillation_ok = false;
  std::optional<bool> seminorm_ok;  // empty: partial verdict
  std::optional<double> iterate_lhs;
  std::optional<bool> iterate_ok;
  std::optional<bool> derivative_ok;

  bool partial() const { return !seminorm_ok.has_value(); }
  bool admissible() const;
  // Verdicts as recomputed from the stored quantities.
  PotentialAdmissibility recomputed() const;
};

PotentialAdmissibility potential_admissible(const HolderData& data, double epsilon,
                                            std::optional<MapIterateData> iterate = {},
                                            std::optional<double> derivative_norm = {},
                                            std::optional<double> epsilon_prime = {});
PotentialAdmissibility potential_admissible(const Observable& phi, double epsilon,
                                            double alpha = 1.0,
                                            std::optional<MapIterateData> iterate = {});

nlohmann::json to_json(const PotentialAdmissibility& a);

}  // namespace tf
