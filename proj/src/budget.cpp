// Covering-budget arithmetic: choose ell from the two growth estimates, then
// the smallest k for which the count of non-contracting branch compositions
// over the whole cover stays below the number of branches of f^{ell k N}.
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "thermoformal/certify.hpp"

namespace tf {

using nlohmann::json;

double default_covering_constant(int dim, double diam) {
  return std::pow(std::numbers::sqrt2 * diam, dim);
}

BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt c = 1;
  for (int i = 1; i <= k; ++i) {
    c *= n - k + i;
    c /= i;
  }
  return c;
}

BigInt bad_branch_count(int n, int k, const BigInt& a) {
  BigInt total = 0;
  BigInt apow = boost::multiprecision::pow(a, static_cast<unsigned>(n - std::min(k - 1, n)));
  // Walk j downwards so the power of a grows by one factor per step.
  for (int j = std::min(k - 1, n); j >= 0; --j) {
    total += binomial(n, j) * apow;
    apow *= a;
  }
  return total;
}

std::optional<BigInt> ball_count(double C, double L, int N, int dim, int k) {
  const double x = C * std::pow(L, static_cast<double>(k) * N * dim);
  if (!std::isfinite(x) || x > 1e300) return std::nullopt;
  return BigInt(std::ceil(x));
}

bool contraction_estimate(double gamma, double L, int N, int ell) {
  return gamma * std::pow(L, static_cast<double>(N) * (ell - 1)) < 1.0;
}

bool growth_estimate(double L, int N, int G, int dim, int ell) {
  const double gn = std::pow(static_cast<double>(G), N);
  const double lhs = std::exp(1.0 / ell) * std::pow(static_cast<double>(ell), 1.0 / ell) *
                     std::pow(L, static_cast<double>(N) * dim);
  return lhs < gn / (gn - 1.0);
}

namespace {

void validate(const CoveringBudgetInput& in) {
  if (!(in.gamma > 0.0 && in.gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  if (!(in.L >= 1.0)) throw std::invalid_argument("L must be >= 1");
  if (in.N < 1 || in.G < 2 || in.dim < 1) throw std::invalid_argument("need N >= 1, G >= 2, dim >= 1");
}

double constant_of(const CoveringBudgetInput& in) {
  return in.C > 0.0 ? in.C : default_covering_constant(in.dim);
}

// log(D_k B_k) from lgamma; used only to skip hopeless k cheaply.
double log_q_estimate(const CoveringBudgetInput& in, int ell, int k) {
  const double n = static_cast<double>(ell) * k;
  const double a = std::pow(static_cast<double>(in.G), in.N) - 1.0;
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (int j = 0; j < k && j <= n; ++j) {
    const double t = std::lgamma(n + 1) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1) +
                     (n - j) * std::log(a);
    terms.push_back(t);
    m = std::max(m, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  const double logd = std::log(std::max(1.0, constant_of(in))) +
                      static_cast<double>(k) * in.N * in.dim * std::log(in.L);
  return m + std::log(s) + logd;
}

void fill_exact(CoveringBudget& b) {
  const auto& in = b.input;
  const int n = b.ell * b.k;
  const BigInt a = boost::multiprecision::pow(BigInt(in.G), static_cast<unsigned>(in.N)) - 1;
  b.B_k = bad_branch_count(n, b.k, a);
  b.threshold = boost::multiprecision::pow(BigInt(in.G), static_cast<unsigned>(n * in.N));
  const auto d = ball_count(constant_of(in), in.L, in.N, in.dim, b.k);
  b.D_k = d.value_or(0);
  b.q_k = b.D_k * b.B_k;
  b.gamma_tilde = in.gamma * std::pow(in.L, static_cast<double>(in.N) * (b.ell - 1));
  b.gamma_m = std::pow(b.gamma_tilde, b.k);
  b.m0 = static_cast<long long>(b.ell) * b.k * in.N;
  b.L_m = std::pow(in.L, static_cast<double>(b.m0));
  b.feasible = d.has_value() && b.contraction_ok && b.growth_ok && b.q_k < b.threshold;
}

}  // namespace

CoveringBudget covering_budget_at(const CoveringBudgetInput& in, int ell, int k) {
  validate(in);
  if (ell < 1 || k < 1) throw std::invalid_argument("ell and k must be >= 1");
  CoveringBudget b;
  b.input = in;
  b.input.C = constant_of(in);
  b.ell = ell;
  b.k = k;
  b.contraction_ok = contraction_estimate(in.gamma, in.L, in.N, ell);
  b.growth_ok = growth_estimate(in.L, in.N, in.G, in.dim, ell);
  fill_exact(b);
  if (!b.contraction_ok) {
    b.violated = "contraction";
  } else if (!b.growth_ok) {
    b.violated = "growth";
  } else if (!b.feasible) {
    b.violated = "count";
  }
  return b;
}

CoveringBudget covering_budget(const CoveringBudgetInput& in) {
  validate(in);
  CoveringBudget b;
  b.input = in;
  b.input.C = constant_of(in);

  // The contraction estimate only gets harder and the growth estimate only
  // easier as ell grows.
  int ell = 0;
  bool seen_growth = false;
  for (int l = 1; l <= in.ell_cap; ++l) {
    const bool e2 = growth_estimate(in.L, in.N, in.G, in.dim, l);
    if (!e2) continue;
    seen_growth = true;
    if (contraction_estimate(in.gamma, in.L, in.N, l)) ell = l;
    break;
  }
  if (ell == 0) {
    b.violated = seen_growth ? "contraction" : "growth";
    return b;
  }
  b.ell = ell;
  b.contraction_ok = b.growth_ok = true;

  const double log_threshold_per_k = static_cast<double>(ell) * in.N * std::log(in.G);
  for (int k = 1; k <= in.k_cap; ++k) {
    if (log_q_estimate(b.input, ell, k) > k * log_threshold_per_k + 1.0) continue;
    b.k = k;
    fill_exact(b);
    if (b.feasible) return b;
  }
  b.k = in.k_cap;
  b.feasible = false;
  b.violated = "k cap";
  return b;
}

json to_json(const CoveringBudget& b) {
  auto s = [](const BigInt& x) { return x.str(); };
  return {{"gamma", b.input.gamma}, {"L", b.input.L},     {"N", b.input.N},
          {"G", b.input.G},         {"dim", b.input.dim}, {"C", b.input.C},
          {"ell", b.ell},           {"k", b.k},           {"D_k", s(b.D_k)},
          {"B_k", s(b.B_k)},        {"q_k", s(b.q_k)},    {"threshold", s(b.threshold)},
          {"feasible", b.feasible}, {"m0", b.m0},         {"gamma_tilde", b.gamma_tilde},
          {"gamma_m", b.gamma_m},   {"L_m", b.L_m},       {"violated", b.violated},
          {"contraction_ok", b.contraction_ok}, {"growth_ok", b.growth_ok}};
}

}  // namespace tf
