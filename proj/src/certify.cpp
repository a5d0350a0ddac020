#include "thermoformal/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "thermoformal/kernels.hpp"

namespace tf {

using nlohmann::json;

double ConditionCReport::worst_bound() const {
  double w = 0.0;
  for (const auto& c : cells) w = std::max(w, c.bound);
  return w;
}

std::optional<double> derivative_modulus(const MapSpec& map, int N, int samples) {
  if (!map.has_derivative()) return std::nullopt;
  double K = 0.0;
  double lmax = 0.0;
  const double h = 1e-6;
  for (int s = 0; s <= samples; ++s) {
    const double y = static_cast<double>(s) / samples;
    const double d = map.derivative_at(y);
    const double dd = map.second_derivative
                          ? map.second_derivative_at(y)
                          : (map.derivative_at(y + h) - map.derivative_at(y - h)) / (2.0 * h);
    K = std::max(K, std::abs(dd / d));
    lmax = std::max(lmax, 1.0 / d);
  }
  double geometric = 0.0;
  double p = 1.0;
  for (int k = 1; k <= N; ++k) {
    p *= lmax;
    geometric += p;
  }
  return K * geometric;
}

namespace {

// Second derivative, by central difference when the map does not supply one.
double second_derivative(const MapSpec& map, double y) {
  if (map.second_derivative) return map.second_derivative_at(y);
  const double h = 1e-6;
  return (map.derivative_at(y + h) - map.derivative_at(y - h)) / (2.0 * h);
}

// sup |d/dx log L_N| along the branch through `preimage` for x within `reach`
// of the centre c, sampled at 2 * samples + 1 points. The branch is followed
// through the lift, so it stays on one sheet across slice boundaries.
double local_modulus(const MapSpec& map, int N, double preimage, double reach, int samples) {
  std::vector<double> chain(static_cast<std::size_t>(N) + 1);
  chain[0] = preimage;
  for (int j = 0; j < N; ++j) chain[static_cast<std::size_t>(j) + 1] = map.lift_at(chain[static_cast<std::size_t>(j)]);
  std::vector<double> moved(chain.size());
  double sup = 0.0;
  for (int s = -samples; s <= samples; ++s) {
    double delta = reach * s / samples;
    for (int j = N - 1; j >= 0; --j) {
      const auto k = static_cast<std::size_t>(j);
      moved[k] = map.lift_inverse(map.lift_at(chain[k]) + delta);
      delta = moved[k] - chain[k];
    }
    // log L_N = -sum_j log f'(y_j), and dy_j/dx = prod_{i >= j} 1/f'(y_i)
    double dydx = 1.0;
    double d = 0.0;
    for (int j = N - 1; j >= 0; --j) {
      const double y = moved[static_cast<std::size_t>(j)];
      const double fp = map.derivative_at(y);
      dydx /= fp;
      d += second_derivative(map, y) / fp * dydx;
    }
    sup = std::max(sup, std::abs(d));
  }
  return sup;
}

ConditionCReport check_condition(const MapSpec& map, int N, double gamma, int resolution,
                                 ContractionMode mode, const CertifyOptions& opts) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  if (resolution < 16) throw std::invalid_argument("resolution must be >= 16");
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (mode == ContractionMode::Cprime && !map.has_derivative()) {
    throw std::invalid_argument("condition (C') needs the derivative of '" + map.name + "'");
  }

  ConditionCReport rep;
  rep.mode = mode;
  rep.N = N;
  rep.gamma = gamma;
  rep.resolution = resolution;
  const bool local = !opts.rho && map.has_derivative();
  rep.certification = opts.rho || local ? CertificationMode::certified : CertificationMode::center_value;

  const double w = 1.0 / resolution;
  rep.cells.resize(static_cast<std::size_t>(resolution));

  // For C^1 maps the branch factor is 1/f', so (C) and (C') coincide; for
  // Hölder-only maps (C) falls back to difference quotients.
  auto cell = [&](std::size_t i) {
    const double c = (static_cast<double>(i) + 0.5) * w;
    const auto branches = inverse_branches(map, c, N, opts.branch);
    CellWitness best;
    best.bound = std::numeric_limits<double>::infinity();
    for (const auto& b : branches) {
      const double rho = local ? local_modulus(map, N, b.preimage, w, 4) : opts.rho.value_or(0.0);
      const double bound = b.contraction * std::exp(rho * w);
      if (bound < best.bound) best = {c, b.branch, b.preimage, b.contraction, bound, rho};
    }
    rep.cells[i] = best;
  };
  if (opts.parallel) {
    kernels::parallel::for_each_index(rep.cells.size(), cell);
  } else {
    kernels::serial::for_each_index(rep.cells.size(), cell);
  }
  rep.rho = opts.rho.value_or(0.0);
  for (const auto& c : rep.cells) rep.rho = std::max(rep.rho, c.rho);

  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    if (!(rep.cells[i].bound < gamma)) rep.failures.push_back(i);
  }
  rep.pass = rep.failures.empty();
  return rep;
}

}  // namespace

ConditionCReport check_condition_C(const MapSpec& map, int N, double gamma, int resolution,
                                   const CertifyOptions& opts) {
  return check_condition(map, N, gamma, resolution, ContractionMode::C, opts);
}

ConditionCReport check_condition_Cprime(const MapSpec& map, int N, double gamma, int resolution,
                                        const CertifyOptions& opts) {
  return check_condition(map, N, gamma, resolution, ContractionMode::Cprime, opts);
}

json to_json(const ConditionCReport& r, bool include_cells) {
  json j = {{"mode", r.mode == ContractionMode::C ? "C" : "Cprime"},
            {"N", r.N},
            {"gamma", r.gamma},
            {"resolution", r.resolution},
            {"certification",
             r.certification == CertificationMode::certified ? "certified" : "center_value"},
            {"rho", r.rho},
            {"pass", r.pass},
            {"worst_bound", r.worst_bound()},
            {"failure_count", r.failures.size()}};
  json fails = json::array();
  for (std::size_t k = 0; k < r.failures.size() && k < 32; ++k) {
    const auto& c = r.cells[r.failures[k]];
    fails.push_back({{"center", c.center}, {"bound", c.bound}});
  }
  j["failure_witnesses"] = fails;
  if (include_cells) {
    json cells = json::array();
    for (const auto& c : r.cells) {
      cells.push_back({{"center", c.center}, {"branch", c.branch}, {"preimage", c.preimage},
                       {"raw", c.raw}, {"bound", c.bound}, {"rho", c.rho}});
    }
    j["cells"] = cells;
  }
  return j;
}

// ---------------------------------------------------------------------------

UniformIterate pointwise_to_uniform(std::span<const PointwiseRegion> regions, double L) {
  if (regions.empty()) throw std::invalid_argument("pointwise_to_uniform: no regions");
  if (!(L >= 1.0)) throw std::invalid_argument("pointwise_to_uniform: L must be >= 1");
  UniformIterate u;
  u.N = 0;
  u.gamma = 0.0;
  for (const auto& r : regions) {
    if (!(r.gamma > 0.0 && r.gamma < 1.0)) throw std::invalid_argument("region gamma must be in (0,1)");
    if (r.n < 1) throw std::invalid_argument("region iterate must be >= 1");
    u.N = std::max(u.N, r.n);
    u.gamma = std::max(u.gamma, r.gamma);
  }
  const double lN = std::pow(L, u.N);
  int kappa = 1;
  while (std::pow(u.gamma, kappa) * lN >= 1.0) ++kappa;
  u.kappa = kappa;
  u.N_tilde = kappa * u.N;
  u.rate = std::pow(u.gamma, kappa) * lN;
  return u;
}

// ---------------------------------------------------------------------------

HolderData holder_data(const Observable& phi, double alpha, int samples) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
  const auto n = static_cast<std::size_t>(samples);
  const double h = 1.0 / samples;
  std::vector<double> x(n), v(n), e(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (static_cast<double>(i) + 0.5) * h;
    v[i] = phi(x[i]);
    e[i] = std::exp(v[i]);
  }
  HolderData d;
  d.alpha = alpha;
  d.sup = *std::max_element(v.begin(), v.end());
  d.inf = *std::min_element(v.begin(), v.end());
  double slope = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    slope = std::max(slope, std::abs(e[(i + 1) % n] - e[i]) / h);
  }
  double semi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = circle_distance(x[i], x[j]);
      const double num = std::abs(e[i] - e[j]) + slope * h;
      semi = std::max(semi, num / std::pow(std::max(dist - h, h), alpha));
    }
  }
  d.exp_seminorm = semi;
  d.sampled = true;
  return d;
}

double iterate_inequality_lhs(double eps, const MapIterateData& d) {
  const double deg = d.degree;
  const double a = d.alpha;
  const double inner = ((deg - d.q) * std::pow(d.gamma_m, a) +
                        d.q * std::pow(d.L_m, a) * (1.0 + std::pow(d.L_m - 1.0, a))) /
                       deg;
  return (1.0 + eps) * std::exp(eps) * inner + 2.0 * eps * std::pow(d.L_m, a) * std::pow(d.diam, a);
}

bool PotentialAdmissibility::admissible() const {
  if (!oscillation_ok || !seminorm_ok.value_or(false)) return false;
  if (iterate_ok && !*iterate_ok) return false;
  if (derivative_ok && !*derivative_ok) return false;
  return true;
}

PotentialAdmissibility PotentialAdmissibility::recomputed() const {
  return potential_admissible(data, epsilon, iterate, derivative_norm, epsilon_prime);
}

PotentialAdmissibility potential_admissible(const HolderData& data, double epsilon,
                                            std::optional<MapIterateData> iterate,
                                            std::optional<double> derivative_norm,
                                            std::optional<double> epsilon_prime) {
  PotentialAdmissibility a;
  a.data = data;
  a.epsilon = epsilon;
  a.iterate = iterate;
  a.derivative_norm = derivative_norm;
  a.epsilon_prime = epsilon_prime;
  a.oscillation_ok = data.sup - data.inf < epsilon;
  if (data.exp_seminorm) a.seminorm_ok = *data.exp_seminorm < epsilon * std::exp(data.inf);
  if (iterate) {
    a.iterate_lhs = iterate_inequality_lhs(epsilon, *iterate);
    a.iterate_ok = *a.iterate_lhs < 1.0;
  }
  if (derivative_norm && epsilon_prime) a.derivative_ok = *derivative_norm < *epsilon_prime;
  return a;
}

PotentialAdmissibility potential_admissible(const Observable& phi, double epsilon, double alpha,
                                            std::optional<MapIterateData> iterate) {
  return potential_admissible(holder_data(phi, alpha), epsilon, iterate);
}

json to_json(const PotentialAdmissibility& a) {
  json j = {{"sup", a.data.sup},
            {"inf", a.data.inf},
            {"oscillation", a.data.sup - a.data.inf},
            {"alpha", a.data.alpha},
            {"epsilon", a.epsilon},
            {"oscillation_ok", a.oscillation_ok},
            {"partial", a.partial()},
            {"admissible", a.admissible()}};
  if (a.data.exp_seminorm) j["exp_seminorm"] = *a.data.exp_seminorm;
  if (a.seminorm_ok) j["seminorm_ok"] = *a.seminorm_ok;
  if (a.iterate_lhs) {
    j["iterate_inequality_lhs"] = *a.iterate_lhs;
    j["iterate_inequality_ok"] = *a.iterate_ok;
  }
  if (a.derivative_ok) j["derivative_ok"] = *a.derivative_ok;
  return j;
}

}  // namespace tf
