#include "thermoformal/thermo_curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "thermoformal/certify.hpp"
#include "thermoformal/errors.hpp"
#include "thermoformal/statistics.hpp"

namespace tf {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double integral_of(const SpectralTriple& t, Scheme scheme, const Observable& psi) {
  return integrate(equilibrium_measure(t, scheme), psi.eval);
}

}  // namespace

std::string to_string(Convexity c) {
  switch (c) {
    case Convexity::strict: return "strict";
    case Convexity::affine: return "affine";
    default: return "indeterminate";
  }
}

void differentiate(FreeEnergyCurve& c, const CurveOptions& opts) {
  const std::size_t k = c.E.size();
  const double h = c.step;
  const auto& E = c.E;
  c.dE.assign(k, 0.0);
  c.d2E.assign(k, 0.0);
  if (k < 3 || !(h > 0.0)) {
    c.verdict = Convexity::indeterminate;
    return;
  }
  for (std::size_t i = 1; i + 1 < k; ++i) {
    c.dE[i] = (E[i + 1] - E[i - 1]) / (2.0 * h);
    c.d2E[i] = (E[i + 1] - 2.0 * E[i] + E[i - 1]) / (h * h);
  }
  c.dE[0] = (-3.0 * E[0] + 4.0 * E[1] - E[2]) / (2.0 * h);
  c.dE[k - 1] = (3.0 * E[k - 1] - 4.0 * E[k - 2] + E[k - 3]) / (2.0 * h);
  if (k >= 4) {
    c.d2E[0] = (2.0 * E[0] - 5.0 * E[1] + 4.0 * E[2] - E[3]) / (h * h);
    c.d2E[k - 1] = (2.0 * E[k - 1] - 5.0 * E[k - 2] + 4.0 * E[k - 3] - E[k - 4]) / (h * h);
  } else {
    c.d2E[0] = c.d2E[k - 1] = c.d2E[1];
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double v : c.d2E) {
    lo = std::min(lo, v);
    hi = std::max(hi, std::abs(v));
  }
  if (hi < opts.affine_tol) {
    c.verdict = Convexity::affine;
  } else if (lo > opts.strict_tol) {
    c.verdict = Convexity::strict;
  } else {
    c.verdict = Convexity::indeterminate;
  }
}

FreeEnergyCurve free_energy_curve(const MapSpec& map, const PotentialSpec& phi,
                                  const Observable& psi, double t_max, int steps, Scheme scheme,
                                  std::size_t n, const CurveOptions& opts) {
  if (!(t_max > 0.0)) throw std::invalid_argument("free_energy_curve: t_max must be positive");
  if (steps < 3 || steps % 2 == 0) {
    throw std::invalid_argument("free_energy_curve: steps must be odd and >= 3");
  }
  FreeEnergyCurve c;
  c.psi = psi.source;
  c.scheme = scheme;
  c.n = n;
  c.t_max = t_max;
  c.step = 2.0 * t_max / (steps - 1);

  if (opts.guard_epsilon) {
    for (double s : {-t_max, t_max}) {
      const auto adm = potential_admissible(tilt(phi, psi, s), *opts.guard_epsilon);
      if (!adm.admissible()) {
        c.warnings.push_back("phi + t psi fails the admissibility check at t = " +
                             std::to_string(s));
      }
    }
  }

  const auto m0 = build_matrix(map, phi, scheme, n, opts.build);
  const auto tr0 = leading_triple(m0, opts.triple);
  c.log_lambda0 = std::log(tr0.lambda);
  const double mean0 = integral_of(tr0, scheme, psi);
  if (tr0.primitive && !*tr0.primitive) {
    c.warnings.push_back("discretized operator is not primitive at t = 0");
  }

  const auto k = static_cast<std::size_t>(steps);
  c.t.resize(k);
  c.E.resize(k);
  c.lambda.resize(k);
  c.mean_psi.resize(k);
  const std::size_t mid = k / 2;
  for (std::size_t i = 0; i < k; ++i) {
    const long long j = 2 * static_cast<long long>(i) - (steps - 1);
    c.t[i] = t_max * static_cast<double>(j) / (steps - 1);
  }
  c.t[mid] = 0.0;

  // Every t starts from the t = 0 eigenvectors so the result does not depend
  // on the order in which the grid is visited.
  TripleOptions to = opts.triple;
  to.warm_h = tr0.h;
  to.warm_nu = tr0.nu;
  to.check_primitivity = false;
  for (std::size_t i = 0; i < k; ++i) {
    if (i == mid) {
      c.lambda[i] = tr0.lambda;
      c.E[i] = 0.0;
      c.mean_psi[i] = mean0;
      continue;
    }
    try {
      const auto m = build_matrix(map, tilt(phi, psi, c.t[i]), scheme, n, opts.build);
      const auto tr = leading_triple(m, to);
      c.lambda[i] = tr.lambda;
      c.E[i] = std::log(tr.lambda) - c.log_lambda0;
      c.mean_psi[i] = integral_of(tr, scheme, psi);
    } catch (const std::exception& e) {
      throw GridPointError("t", c.t[i], e.what());
    }
  }
  differentiate(c, opts);
  return c;
}

double default_t_max(const PotentialSpec& phi, const Observable& psi, double epsilon, double start,
                     int rungs) {
  double t = start;
  for (int r = 0; r < rungs; ++r, t *= 0.5) {
    if (potential_admissible(tilt(phi, psi, t), epsilon).admissible() &&
        potential_admissible(tilt(phi, psi, -t), epsilon).admissible()) {
      return t;
    }
  }
  throw std::domain_error("default_t_max: no admissible t on the dyadic ladder");
}

DerivativeReport derivative_checks(const FreeEnergyCurve& curve, const Observable& psi) {
  DerivativeReport r;
  const std::size_t mid = curve.zero_index();
  const double m0 = curve.mean_psi[mid];
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    r.max_residual = std::max(r.max_residual, std::abs(curve.dE[i] - curve.mean_psi[i]));
  }
  r.zero_residual = std::abs(curve.dE[mid] - m0);
  r.centered_dE0 = curve.dE[mid] - m0;

  constexpr int fine = 8192;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i <= fine; ++i) {
    const double v = psi(static_cast<double>(i) / fine) - m0;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  r.psi_inf = lo;
  r.psi_sup = hi;
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    const double t = curve.t[i];
    const double ec = curve.E[i] - t * m0;  // free energy of the centered psi
    const double tol = 1e-12 * (1.0 + std::abs(t));
    const double a = t >= 0.0 ? t * lo : t * hi;
    const double b = t >= 0.0 ? t * hi : t * lo;
    if (ec < a - tol || ec > b + tol) ++r.bound_violations;
  }
  r.bounds_ok = r.bound_violations == 0;
  return r;
}

double richardson_derivative_residual(const FreeEnergyCurve& coarse, const FreeEnergyCurve& fine) {
  if (fine.t.size() != 2 * coarse.t.size() - 1 || fine.t_max != coarse.t_max) {
    throw std::invalid_argument("richardson_derivative_residual: fine grid must halve the step");
  }
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < coarse.t.size(); ++i) {
    const double d = (4.0 * fine.dE[2 * i] - coarse.dE[i]) / 3.0;
    worst = std::max(worst, std::abs(d - fine.mean_psi[2 * i]));
  }
  return worst;
}

LegendreValue legendre(std::span<const double> x, std::span<const double> f, double y) {
  const std::size_t k = x.size();
  if (k == 0 || f.size() != k) throw std::invalid_argument("legendre: bad samples");
  std::size_t best = 0;
  double bv = y * x[0] - f[0];
  for (std::size_t i = 1; i < k; ++i) {
    const double g = y * x[i] - f[i];
    if (g > bv) {
      bv = g;
      best = i;
    }
  }
  LegendreValue r{bv, x[best]};
  if (k < 3) return r;
  // An end maximizer reuses its neighbour's three-point stencil so the value
  // stays continuous as the maximizer moves onto the end node.
  const std::size_t c = std::clamp<std::size_t>(best, 1, k - 2);
  const double gm = y * x[c - 1] - f[c - 1];
  const double g0 = y * x[c] - f[c];
  const double gp = y * x[c + 1] - f[c + 1];
  const double curv = gm - 2.0 * g0 + gp;
  if (!(curv < 0.0)) return r;
  const double h = 0.5 * (x[c + 1] - x[c - 1]);
  const double delta = 0.5 * (gm - gp) / curv;  // in units of h
  const double at = x[c] + delta * h;
  if (at < x[0] || at > x[k - 1]) return r;
  r.value = g0 - (gm - gp) * (gm - gp) / (8.0 * curv);
  r.argmax = at;
  return r;
}

double RateFunction::evaluate(double s) const { return legendre(curve_t, curve_E, s).value; }

double RateFunction::infimum(double a, double b, int samples) const {
  if (a > b) std::swap(a, b);
  if (samples < 2) samples = 2;
  if (s_star >= a && s_star <= b) return evaluate(s_star);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double s = a + (b - a) * i / (samples - 1);
    best = std::min(best, evaluate(s));
  }
  return best;
}

RateFunction rate_function(std::span<const double> t, std::span<const double> E,
                           std::span<const double> dE, int s_steps, double s_star) {
  if (s_steps < 2) throw std::invalid_argument("rate_function: s_steps must be >= 2");
  RateFunction r;
  r.curve_t.assign(t.begin(), t.end());
  r.curve_E.assign(E.begin(), E.end());
  r.s_star = s_star;
  const double s0 = dE.front();
  const double s1 = dE.back();
  if (!(s1 > s0)) throw DegenerateLegendre("rate_function: E' is not increasing over the grid");
  r.s.resize(static_cast<std::size_t>(s_steps));
  r.I.resize(r.s.size());
  r.t_of_s.resize(r.s.size());
  for (int j = 0; j < s_steps; ++j) {
    const double s = s0 + (s1 - s0) * j / (s_steps - 1);
    const auto lv = legendre(t, E, s);
    r.s[static_cast<std::size_t>(j)] = s;
    r.I[static_cast<std::size_t>(j)] = lv.value;
    r.t_of_s[static_cast<std::size_t>(j)] = lv.argmax;
  }
  r.I_at_s_star = r.evaluate(s_star);
  for (std::size_t k = 1; k + 1 < t.size(); ++k) {
    const double lhs = r.evaluate(dE[k]);
    const double rhs = t[k] * dE[k] - E[k];
    r.eq_residual = std::max(r.eq_residual, std::abs(lhs - rhs));
  }
  return r;
}

RateFunction rate_function(const FreeEnergyCurve& curve, int s_steps) {
  if (curve.verdict == Convexity::affine) {
    throw DegenerateLegendre("rate_function: free energy is affine, the Legendre transform is degenerate");
  }
  if (curve.verdict != Convexity::strict) {
    throw DegenerateLegendre("rate_function: free energy is not strictly convex on the grid");
  }
  return rate_function(curve.t, curve.E, curve.dE, s_steps, curve.mean_psi[curve.zero_index()]);
}

LdpReport ldp_empirical(const EquilibriumSampler& sampler, const Observable& psi, double a,
                        double b, std::span<const int> n_list, std::size_t m, std::uint64_t seed,
                        const RateFunction& rate, const SamplingOptions& opts) {
  if (!(a <= b)) throw std::invalid_argument("ldp_empirical: need a <= b");
  if (a < rate.s_min() || b > rate.s_max()) {
    throw std::invalid_argument("ldp_empirical: [a, b] is outside the rate-function domain");
  }
  if (m == 0) throw std::invalid_argument("ldp_empirical: m must be positive");
  LdpReport r;
  r.a = a;
  r.b = b;
  r.n.assign(n_list.begin(), n_list.end());
  r.m = m;
  r.seed = seed;
  const auto sums = sample_birkhoff_sums(sampler, psi, n_list, m, seed, opts);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const double n = n_list[i];
    std::size_t count = 0;
    for (double s : sums[i]) {
      const double avg = s / n;
      if (avg >= a && avg <= b) ++count;
    }
    r.counts.push_back(count);
    if (count == 0) {
      r.rate.emplace_back();
      r.censored = true;
      continue;
    }
    const double v = std::log(static_cast<double>(count) / static_cast<double>(m)) / n;
    r.rate.emplace_back(v);
    const double x = 1.0 / n;
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
    ++used;
  }
  if (used == 0) {
    // Only the bound count < 1 is known at the largest n.
    const int nmax = *std::max_element(n_list.begin(), n_list.end());
    r.extrapolated = std::log(1.0 / static_cast<double>(m)) / nmax;
  } else if (used == 1) {
    r.extrapolated = sy;
  } else {
    const double den = used * sxx - sx * sx;
    const double slope = (used * sxy - sx * sy) / den;
    r.extrapolated = (sy - slope * sx) / used;
  }
  r.target = -rate.infimum(a, b);
  r.gap = std::abs(r.extrapolated - r.target);
  return r;
}

double ResponseScan::max_adjacent_jump() const {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < lambda.size(); ++i) {
    const double d = std::abs(lambda[i + 1] - lambda[i]);
    if (std::isnan(d)) continue;
    worst = std::max(worst, d);
  }
  return worst;
}

double ResponseScan::max_richardson_second() const {
  double worst = 0.0;
  for (double r : richardson_second) {
    if (!std::isnan(r)) worst = std::max(worst, r);
  }
  return worst;
}

ResponseScan response_scan(const Family& family, const Observable& obs,
                           std::span<const double> v_grid, const ResponseOptions& opts) {
  const std::size_t k = v_grid.size();
  ResponseScan r;
  r.v.assign(v_grid.begin(), v_grid.end());
  r.lambda.assign(k, kNaN);
  r.pressure.assign(k, kNaN);
  r.mean.assign(k, kNaN);
  r.guard_pass.assign(k, std::nullopt);
  r.errors.assign(k, "");
  TripleOptions to = opts.triple;
  to.check_primitivity = false;
  for (std::size_t i = 0; i < k; ++i) {
    try {
      const auto member = family(v_grid[i]);
      if (opts.guard_N) {
        const auto rep =
            check_condition_C(member.map, *opts.guard_N, opts.guard_gamma, opts.guard_resolution);
        r.guard_pass[i] = rep.pass;
      }
      const auto m = build_matrix(member.map, member.phi, opts.scheme, opts.n, opts.build);
      const auto tr = leading_triple(m, to);
      r.lambda[i] = tr.lambda;
      r.pressure[i] = pressure(tr.lambda);
      r.mean[i] = integral_of(tr, opts.scheme, obs);
    } catch (const std::exception& e) {
      r.errors[i] = e.what();
    }
  }
  r.d_lambda.assign(k, kNaN);
  r.d2_lambda.assign(k, kNaN);
  r.d_mean.assign(k, kNaN);
  r.richardson_first.assign(k, kNaN);
  r.richardson_second.assign(k, kNaN);
  if (k < 3) return r;
  const double h = (r.v.back() - r.v.front()) / static_cast<double>(k - 1);
  const auto& L = r.lambda;
  for (std::size_t i = 1; i + 1 < k; ++i) {
    r.d_lambda[i] = (L[i + 1] - L[i - 1]) / (2.0 * h);
    r.d2_lambda[i] = (L[i + 1] - 2.0 * L[i] + L[i - 1]) / (h * h);
    r.d_mean[i] = (r.mean[i + 1] - r.mean[i - 1]) / (2.0 * h);
    if (i >= 2 && i + 2 < k) {
      const double d1w = (L[i + 2] - L[i - 2]) / (4.0 * h);
      const double d2w = (L[i + 2] - 2.0 * L[i] + L[i - 2]) / (4.0 * h * h);
      if (r.d_lambda[i] != 0.0) r.richardson_first[i] = std::abs(d1w - r.d_lambda[i]) / std::abs(r.d_lambda[i]);
      if (r.d2_lambda[i] != 0.0) r.richardson_second[i] = std::abs(d2w - r.d2_lambda[i]) / std::abs(r.d2_lambda[i]);
    }
  }
  return r;
}

json to_json(const FreeEnergyCurve& c) {
  return {{"psi", c.psi},
          {"scheme", to_string(c.scheme)},
          {"n", c.n},
          {"t_max", c.t_max},
          {"steps", c.t.size()},
          {"step", c.step},
          {"log_lambda0", c.log_lambda0},
          {"verdict", to_string(c.verdict)},
          {"warnings", c.warnings},
          {"E_at_zero", c.E[c.zero_index()]},
          {"mean_psi", c.mean_psi[c.zero_index()]}};
}

json to_json(const DerivativeReport& d) {
  return {{"max_residual", d.max_residual},   {"zero_residual", d.zero_residual},
          {"centered_dE0", d.centered_dE0},   {"bounds_ok", d.bounds_ok},
          {"bound_violations", d.bound_violations}, {"psi_inf_centered", d.psi_inf},
          {"psi_sup_centered", d.psi_sup}};
}

json to_json(const RateFunction& r) {
  return {{"s_min", r.s_min()},         {"s_max", r.s_max()},
          {"s_steps", r.s.size()},      {"s_star", r.s_star},
          {"I_at_s_star", r.I_at_s_star}, {"variational_residual", r.eq_residual}};
}

json to_json(const LdpReport& l) {
  json rates = json::array();
  for (const auto& v : l.rate) rates.push_back(v ? json(*v) : json(nullptr));
  return {{"a", l.a},           {"b", l.b},
          {"n", l.n},           {"counts", l.counts},
          {"rate", rates},      {"m", l.m},
          {"seed", l.seed},     {"extrapolated", l.extrapolated},
          {"target", l.target}, {"gap", l.gap},
          {"censored", l.censored}};
}

json to_json(const ResponseScan& r) {
  json guards = json::array();
  json errs = json::array();
  std::size_t failed = 0;
  for (std::size_t i = 0; i < r.v.size(); ++i) {
    guards.push_back(r.guard_pass[i] ? json(*r.guard_pass[i]) : json(nullptr));
    errs.push_back(r.errors[i].empty() ? json(nullptr) : json(r.errors[i]));
    if (!r.errors[i].empty()) ++failed;
  }
  return {{"points", r.v.size()},
          {"failed_points", failed},
          {"max_adjacent_jump", nullable(r.max_adjacent_jump())},
          {"max_richardson_second", nullable(r.max_richardson_second())},
          {"guard_pass", guards},
          {"errors", errs},
          {"note",
           "Richardson residuals are evidence of C1/C2 behaviour on the grid only; higher "
           "smoothness is not decided numerically"}};
}

}  // namespace tf
