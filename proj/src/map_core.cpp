#include "thermoformal/map_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "thermoformal/errors.hpp"

namespace tf {

using nlohmann::json;

double MapSpec::lift_at(double x) const {
  const double q = std::floor(x);
  return lift(x - q) + static_cast<double>(degree) * q;
}

double MapSpec::derivative_at(double x) const { return derivative(x - std::floor(x)); }

double MapSpec::second_derivative_at(double x) const {
  return second_derivative(x - std::floor(x));
}

namespace {

constexpr double kRootTol = 1e-13;

// Solve F(y) = t on the fundamental slice [0,1], F(0) <= t <= F(1).
double invert_fundamental(const MapSpec& m, double t) {
  if (m.inverse_lift) return std::clamp(m.inverse_lift(t), 0.0, 1.0);

  double lo = 0.0;
  double hi = 1.0;
  const double flo = m.lift(lo) - t;
  const double fhi = m.lift(hi) - t;
  const double slack = 1e-12 * std::max(1.0, std::abs(t));
  if (flo > 0.0) {
    if (flo <= slack) return 0.0;
    throw BranchInversionError(m.name, t, "target below the slice [F(0), F(1)]");
  }
  if (fhi < 0.0) {
    if (-fhi <= slack) return 1.0;
    throw BranchInversionError(m.name, t, "target above the slice [F(0), F(1)]");
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;

  // Bisection certifies the bracket; Newton finishes once it is narrow.
  for (int it = 0; it < 24; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = m.lift(mid) - t;
    if (fm == 0.0) return mid;
    (fm < 0.0 ? lo : hi) = mid;
  }
  double y = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fy = m.lift(y) - t;
    if (fy == 0.0) return y;
    (fy < 0.0 ? lo : hi) = y;
    if (hi - lo < kRootTol) return 0.5 * (lo + hi);
    double next = 0.5 * (lo + hi);
    if (m.derivative) {
      const double d = m.derivative(y);
      if (d > 0.0) {
        const double newton = y - fy / d;
        if (newton > lo && newton < hi) next = newton;
      }
    }
    if (std::abs(next - y) < 0.25 * kRootTol) return next;
    y = next;
  }
  throw BranchInversionError(m.name, t, "root-finding did not converge; lift not monotone?");
}

}  // namespace

double MapSpec::lift_inverse(double t) const {
  const double f0 = lift(0.0);
  const double g = static_cast<double>(degree);
  double q = std::floor((t - f0) / g);
  double t0 = t - g * q;
  if (t0 >= f0 + g) {
    t0 -= g;
    q += 1.0;
  } else if (t0 < f0) {
    t0 += g;
    q -= 1.0;
  }
  return invert_fundamental(*this, t0) + q;
}

double wrap_unit(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;
  return r;
}

double circle_distance(double x, double y) {
  const double d = std::abs(wrap_unit(x) - wrap_unit(y));
  return std::min(d, 1.0 - d);
}

double eval(const MapSpec& map, double x) { return wrap_unit(map.lift_at(x)); }

double eval_iterate(const MapSpec& map, double x, int n) {
  for (int i = 0; i < n; ++i) x = eval(map, x);
  return x;
}

std::vector<double> preimages(const MapSpec& map, double x) {
  const double f0 = map.lift(0.0);
  const double k0 = std::ceil(f0 - x);
  std::vector<double> ys(static_cast<std::size_t>(map.degree));
  for (int j = 0; j < map.degree; ++j) {
    ys[static_cast<std::size_t>(j)] = wrap_unit(map.lift_inverse(x + k0 + j));
  }
  return ys;
}

double branch_factor(const MapSpec& map, double y, const BranchOptions& opts) {
  if (map.derivative) return 1.0 / map.derivative_at(y);
  const double w = opts.lipschitz_cell;
  return w / (map.lift_at(y + 0.5 * w) - map.lift_at(y - 0.5 * w));
}

std::vector<InverseBranchPoint> inverse_branches(const MapSpec& map, double x, int depth,
                                                 const BranchOptions& opts) {
  if (depth < 1) throw std::invalid_argument("inverse_branches: depth must be >= 1");
  struct Node {
    double point;
    double contraction;
    std::uint64_t id;
  };
  std::vector<Node> level{{wrap_unit(x), 1.0, 0}};
  const auto g = static_cast<std::uint64_t>(map.degree);
  for (int d = 0; d < depth; ++d) {
    std::vector<Node> next;
    next.reserve(level.size() * g);
    for (const auto& node : level) {
      const auto ys = preimages(map, node.point);
      for (std::uint64_t j = 0; j < g; ++j) {
        const double y = ys[j];
        next.push_back({y, node.contraction * branch_factor(map, y, opts), node.id * g + j});
      }
    }
    level = std::move(next);
  }
  std::vector<InverseBranchPoint> out;
  out.reserve(level.size());
  for (const auto& node : level) {
    out.push_back({wrap_unit(x), node.id, depth, node.point, node.contraction});
  }
  return out;
}

double birkhoff_sum(const MapSpec& map, const RealFunction& psi, double x, int n) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    s += psi(x);
    x = eval(map, x);
  }
  return s;
}

OrbitSample orbit_sample(const MapSpec& map, const RealFunction& psi, double x, int n) {
  return {x, n, birkhoff_sum(map, psi, x, n)};
}

// ---------------------------------------------------------------------------
// Bump B(x) = exp(-1/x) / (exp(-1/x) + exp(-1/(1-x))) = 1 / (1 + e^u),
// u = 1/x - 1/(1-x). With B(1-B) = e^u/(1+e^u)^2 and w = -u':
//   B'  = B(1-B) w
//   B'' = B'(1-2B) w + B(1-B) w'

namespace {

struct BumpParts {
  double b;      // B
  double bb;     // B(1-B)
};

BumpParts bump_parts(double x) {
  const double u = 1.0 / x - 1.0 / (1.0 - x);
  if (u > 0.0) {
    const double e = std::exp(-u);  // may underflow to 0, that is fine
    const double b = e / (1.0 + e);
    return {b, e / ((1.0 + e) * (1.0 + e))};
  }
  const double e = std::exp(u);
  const double b = 1.0 / (1.0 + e);
  return {b, e / ((1.0 + e) * (1.0 + e))};
}

}  // namespace

double bump(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return bump_parts(x).b;
}

double bump_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const auto p = bump_parts(x);
  if (p.bb == 0.0) return 0.0;
  const double w = 1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x));
  return p.bb * w;
}

double bump_second_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const auto p = bump_parts(x);
  if (p.bb == 0.0) return 0.0;
  const double w = 1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x));
  const double dw = -2.0 / (x * x * x) + 2.0 / ((1.0 - x) * (1.0 - x) * (1.0 - x));
  const double d1 = p.bb * w;
  return d1 * (1.0 - 2.0 * p.b) * w + p.bb * dw;
}

// ---------------------------------------------------------------------------

MapSpec multiplication_map(int degree) {
  if (degree < 1) throw ConfigError("/map/params/degree", "degree must be >= 1");
  const double g = degree;
  MapSpec m;
  m.name = degree == 2 ? "doubling" : "multiplication";
  m.degree = degree;
  m.lift = [g](double x) { return g * x; };
  m.derivative = [g](double) { return g; };
  m.second_derivative = [](double) { return 0.0; };
  m.inverse_lift = [g](double t) { return t / g; };
  m.smoothness = {1.0, 1000};
  if (degree == 2) {
    m.source = {{"name", "doubling"}, {"degree", 2}, {"kind", "builtin"}, {"params", json::object()}};
  } else {
    m.source = {{"name", "multiplication"}, {"degree", degree}, {"kind", "builtin"},
                {"params", {{"degree", degree}}}};
  }
  return m;
}

MapSpec doubling_map() { return multiplication_map(2); }

MapSpec rotation_map(double theta) {
  MapSpec m;
  m.name = "rotation";
  m.degree = 1;
  m.lift = [theta](double x) { return x + theta; };
  m.derivative = [](double) { return 1.0; };
  m.second_derivative = [](double) { return 0.0; };
  m.inverse_lift = [theta](double t) { return t - theta; };
  m.smoothness = {1.0, 1000};
  m.source = {{"name", "rotation"}, {"degree", 1}, {"kind", "builtin"},
              {"params", {{"theta", theta}}}};
  return m;
}

MapSpec mp_like_map() {
  MapSpec m;
  m.name = "mp_like";
  m.degree = 2;
  m.lift = [](double x) { return x + bump(x); };
  m.derivative = [](double x) { return 1.0 + bump_derivative(x); };
  m.second_derivative = [](double x) { return bump_second_derivative(x); };
  m.smoothness = {1.0, 1000};
  m.source = {{"name", "mp_like"}, {"degree", 2}, {"kind", "builtin"}, {"params", json::object()}};
  return m;
}

namespace {

// rho(x) = 1 - B(16|x| - 1): 1 on |x| <= 1/16, 0 on |x| >= 1/8.
double cutoff(double x) { return 1.0 - bump(16.0 * std::abs(x) - 1.0); }
double cutoff_d1(double x) {
  const double s = x < 0.0 ? -1.0 : 1.0;
  return -16.0 * s * bump_derivative(16.0 * std::abs(x) - 1.0);
}
double cutoff_d2(double x) { return -256.0 * bump_second_derivative(16.0 * std::abs(x) - 1.0); }

// x rho(x) and derivatives.
double deformation(double x) { return x * cutoff(x); }
double deformation_d1(double x) { return cutoff(x) + x * cutoff_d1(x); }
double deformation_d2(double x) { return 2.0 * cutoff_d1(x) + x * cutoff_d2(x); }

}  // namespace

MapSpec derived_from_expanding_map(double v) {
  if (!(v >= 0.0 && v < 2.0)) {
    throw ConfigError("/map/params/v", "derived_from_expanding needs 0 <= v < 2");
  }
  MapSpec m;
  m.name = "derived_from_expanding";
  m.degree = 2;
  m.lift = [v](double x) {
    return 2.0 * x - v * (deformation(x) + deformation(x - 1.0));
  };
  m.derivative = [v](double x) {
    return 2.0 - v * (deformation_d1(x) + deformation_d1(x - 1.0));
  };
  m.second_derivative = [v](double x) {
    return -v * (deformation_d2(x) + deformation_d2(x - 1.0));
  };
  if (v == 0.0) m.inverse_lift = [](double t) { return 0.5 * t; };
  m.smoothness = {1.0, 1000};
  m.source = {{"name", "derived_from_expanding"}, {"degree", 2}, {"kind", "builtin"},
              {"params", {{"v", v}}}};
  return m;
}

namespace {

double horner(const std::vector<double>& c, double u) {
  double s = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * u + *it;
  return s;
}

std::vector<double> poly_derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t p = 1; p < c.size(); ++p) d.push_back(static_cast<double>(p) * c[p]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

}  // namespace

MapSpec piecewise_poly_map(const std::string& name, int degree, std::vector<double> breakpoints,
                           std::vector<std::vector<double>> coefficients) {
  const std::string path = "/map/params";
  if (degree < 1) throw ConfigError("/map/degree", "degree must be >= 1");
  if (breakpoints.size() < 2 || breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
    throw ConfigError(path + "/breakpoints", "must start at 0 and end at 1");
  }
  for (std::size_t k = 1; k < breakpoints.size(); ++k) {
    if (!(breakpoints[k] > breakpoints[k - 1])) {
      throw ConfigError(path + "/breakpoints", "must be strictly increasing");
    }
  }
  if (coefficients.size() != breakpoints.size() - 1) {
    throw ConfigError(path + "/coefficients", "need one coefficient list per piece");
  }
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    if (coefficients[k].empty()) {
      throw ConfigError(path + "/coefficients/" + std::to_string(k), "empty coefficient list");
    }
  }
  std::vector<std::vector<double>> d1, d2;
  for (const auto& c : coefficients) {
    d1.push_back(poly_derivative(c));
    d2.push_back(poly_derivative(d1.back()));
  }

  auto piece = [bp = breakpoints](double x) {
    auto it = std::upper_bound(bp.begin(), bp.end(), x);
    std::size_t k = it == bp.begin() ? 0 : static_cast<std::size_t>(it - bp.begin()) - 1;
    return std::min(k, bp.size() - 2);
  };
  auto make = [piece, bp = breakpoints](std::vector<std::vector<double>> cs) {
    return [piece, bp, cs = std::move(cs)](double x) {
      const auto k = piece(x);
      return horner(cs[k], x - bp[k]);
    };
  };

  MapSpec m;
  m.name = name;
  m.degree = degree;
  m.lift = make(coefficients);
  m.derivative = make(d1);
  m.second_derivative = make(d2);

  // Continuity, total rise and positivity of the derivative.
  bool c1 = true;
  for (std::size_t k = 1; k + 1 < breakpoints.size(); ++k) {
    const double b = breakpoints[k];
    const double left = horner(coefficients[k - 1], b - breakpoints[k - 1]);
    const double right = horner(coefficients[k], 0.0);
    if (std::abs(left - right) > 1e-12 * std::max(1.0, std::abs(left))) {
      throw ConfigError(path + "/coefficients/" + std::to_string(k), "lift is discontinuous");
    }
    const double dl = horner(d1[k - 1], b - breakpoints[k - 1]);
    const double dr = horner(d1[k], 0.0);
    if (std::abs(dl - dr) > 1e-12 * std::max(1.0, std::abs(dl))) c1 = false;
  }
  const double rise = horner(coefficients.back(), 1.0 - breakpoints[breakpoints.size() - 2]) -
                      horner(coefficients.front(), 0.0);
  if (std::abs(rise - degree) > 1e-12 * degree) {
    throw ConfigError(path + "/coefficients", "lift(1) - lift(0) must equal the degree");
  }
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double a = breakpoints[k];
    const double b = breakpoints[k + 1];
    for (int s = 0; s <= 256; ++s) {
      const double u = (b - a) * s / 256.0;
      if (!(horner(d1[k], u) > 0.0)) {
        throw ConfigError(path + "/coefficients/" + std::to_string(k),
                          "derivative must be positive");
      }
    }
  }
  m.smoothness = {1.0, c1 ? 1 : 0};
  m.source = {{"name", name},
              {"degree", degree},
              {"kind", "piecewise_poly"},
              {"params", {{"breakpoints", breakpoints}, {"coefficients", coefficients}}}};
  return m;
}

MapSpec iterate_map(const MapSpec& map, int m) {
  if (m < 1) throw std::invalid_argument("iterate_map: m must be >= 1");
  if (m == 1) return map;
  MapSpec it;
  it.name = map.name + "^" + std::to_string(m);
  it.degree = 1;
  for (int k = 0; k < m; ++k) it.degree *= map.degree;
  it.lift = [map, m](double x) {
    for (int k = 0; k < m; ++k) x = map.lift_at(x);
    return x;
  };
  if (map.derivative) {
    it.derivative = [map, m](double x) {
      double d = 1.0;
      for (int k = 0; k < m; ++k) {
        d *= map.derivative_at(x);
        x = map.lift_at(x);
      }
      return d;
    };
  }
  it.smoothness = map.smoothness;
  it.source = {{"name", it.name}, {"degree", it.degree}, {"kind", "iterate"},
               {"params", {{"of", map.source}, {"m", m}}}};
  return it;
}

std::vector<MapSpec> builtin_maps() {
  return {doubling_map(), multiplication_map(3), rotation_map(std::numbers::sqrt2 - 1.0),
          mp_like_map(), derived_from_expanding_map(0.0)};
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(path + "/" + key, "unknown key");
  }
}

double get_number(const json& params, const std::string& key, double dflt, const std::string& path) {
  if (!params.contains(key)) return dflt;
  const auto& v = params.at(key);
  if (!v.is_number()) throw ConfigError(path + "/" + key, "expected a number");
  return v.get<double>();
}

}  // namespace

MapSpec builtin_map(const std::string& name, const json& params) {
  const std::string path = "/map/params";
  if (name == "doubling") {
    reject_unknown(params, {}, path);
    return doubling_map();
  }
  if (name == "multiplication") {
    reject_unknown(params, {"degree"}, path);
    const double g = get_number(params, "degree", 3.0, path);
    if (g != std::floor(g)) throw ConfigError(path + "/degree", "expected an integer");
    return multiplication_map(static_cast<int>(g));
  }
  if (name == "rotation") {
    reject_unknown(params, {"theta"}, path);
    return rotation_map(get_number(params, "theta", std::numbers::sqrt2 - 1.0, path));
  }
  if (name == "mp_like") {
    reject_unknown(params, {}, path);
    return mp_like_map();
  }
  if (name == "derived_from_expanding") {
    reject_unknown(params, {"v"}, path);
    return derived_from_expanding_map(get_number(params, "v", 0.0, path));
  }
  throw ConfigError("/map/name", "unknown builtin map '" + name + "'");
}

MapSpec map_from_json(const json& j, const std::string& path) {
  reject_unknown(j, {"name", "degree", "kind", "params"}, path);
  const std::string kind = j.value("kind", std::string("builtin"));
  if (!j.contains("name") || !j.at("name").is_string()) {
    throw ConfigError(path + "/name", "missing map name");
  }
  const std::string name = j.at("name").get<std::string>();
  const json params = j.value("params", json::object());
  MapSpec m;
  try {
    if (kind == "builtin") {
      m = builtin_map(name, params);
    } else if (kind == "piecewise_poly") {
      if (!j.contains("degree") || !j.at("degree").is_number_integer()) {
        throw ConfigError(path + "/degree", "piecewise_poly needs an integer degree");
      }
      reject_unknown(params, {"breakpoints", "coefficients"}, path + "/params");
      if (!params.contains("breakpoints") || !params.contains("coefficients")) {
        throw ConfigError(path + "/params", "needs breakpoints and coefficients");
      }
      m = piecewise_poly_map(name, j.at("degree").get<int>(),
                             params.at("breakpoints").get<std::vector<double>>(),
                             params.at("coefficients").get<std::vector<std::vector<double>>>());
    } else if (kind == "iterate") {
      reject_unknown(params, {"of", "m"}, path + "/params");
      if (!params.contains("of") || !params.contains("m") || !params.at("m").is_number_integer()) {
        throw ConfigError(path + "/params", "iterate needs 'of' and an integer 'm'");
      }
      m = iterate_map(map_from_json(params.at("of"), path + "/params/of"), params.at("m").get<int>());
    } else {
      throw ConfigError(path + "/kind", "expected builtin, piecewise_poly or iterate");
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + "/params", e.what());
  }
  if (j.contains("degree") && j.at("degree") != m.degree) {
    throw ConfigError(path + "/degree", "does not match the map's degree " +
                                            std::to_string(m.degree));
  }
  return m;
}

json map_to_json(const MapSpec& map) { return map.source; }

}  // namespace tf
