#include "thermoformal/observable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "thermoformal/errors.hpp"

namespace tf {

using nlohmann::json;

Observable constant_observable(double c) {
  return {"constant", [c](double) { return c; }, {{"kind", "constant"}, {"value", c}}};
}

Observable cos_mode(int k, double amplitude) {
  const double w = 2.0 * std::numbers::pi * k;
  return {"cos", [w, amplitude](double x) { return amplitude * std::cos(w * x); },
          {{"kind", "cos"}, {"k", k}, {"amplitude", amplitude}}};
}

Observable sin_mode(int k, double amplitude) {
  const double w = 2.0 * std::numbers::pi * k;
  return {"sin", [w, amplitude](double x) { return amplitude * std::sin(w * x); },
          {{"kind", "sin"}, {"k", k}, {"amplitude", amplitude}}};
}

Observable neg_log_derivative(const MapSpec& map, double scale) {
  if (!map.has_derivative()) {
    throw ConfigError("/potential", "-log f' requested for derivative-free map '" + map.name + "'");
  }
  return {"neg_log_derivative",
          [map, scale](double x) { return -scale * std::log(map.derivative_at(x)); },
          {{"kind", "neg_log_derivative"}, {"scale", scale}}};
}

Observable coboundary(const Observable& u, const MapSpec& map) {
  return {"coboundary", [u, map](double x) { return u(eval(map, x)) - u(x); },
          {{"kind", "coboundary"}, {"of", u.source}}};
}

Observable piecewise_poly_observable(std::vector<double> breakpoints,
                                     std::vector<std::vector<double>> coefficients) {
  if (breakpoints.size() < 2 || breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
    throw ConfigError("/breakpoints", "must start at 0 and end at 1");
  }
  if (coefficients.size() + 1 != breakpoints.size()) {
    throw ConfigError("/coefficients", "need one coefficient list per piece");
  }
  json src = {{"kind", "piecewise_poly"},
              {"breakpoints", breakpoints},
              {"coefficients", coefficients}};
  auto f = [bp = std::move(breakpoints), cs = std::move(coefficients)](double x) {
    x = wrap_unit(x);
    auto it = std::upper_bound(bp.begin(), bp.end(), x);
    std::size_t k = it == bp.begin() ? 0 : static_cast<std::size_t>(it - bp.begin()) - 1;
    k = std::min(k, cs.size() - 1);
    const double u = x - bp[k];
    double s = 0.0;
    for (auto c = cs[k].rbegin(); c != cs[k].rend(); ++c) s = s * u + *c;
    return s;
  };
  return {"piecewise_poly", f, src};
}

Observable sum(const Observable& a, const Observable& b) {
  return {a.name + "+" + b.name, [a, b](double x) { return a(x) + b(x); },
          {{"kind", "sum"}, {"terms", {a.source, b.source}}}};
}

Observable scaled(const Observable& a, double s) {
  return {a.name, [a, s](double x) { return s * a(x); },
          {{"kind", "scaled"}, {"factor", s}, {"of", a.source}}};
}

Observable shifted(const Observable& a, double c) {
  return sum(a, constant_observable(c));
}

Observable tilt(const Observable& phi, const Observable& psi, double t) {
  return {phi.name + "+t*" + psi.name, [phi, psi, t](double x) { return phi(x) + t * psi(x); },
          {{"kind", "tilt"}, {"phi", phi.source}, {"psi", psi.source}, {"t", t}}};
}

std::vector<Observable> observable_library(const MapSpec& map) {
  std::vector<Observable> lib{constant_observable(1.0), cos_mode(1), sin_mode(1),
                              coboundary(cos_mode(1), map),
                              piecewise_poly_observable({0.0, 0.5, 1.0},
                                                        {{0.0, 1.0}, {0.5, -1.0}})};
  if (map.has_derivative()) lib.push_back(neg_log_derivative(map));
  return lib;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(path + "/" + key, "unknown key");
  }
}

double number(const json& j, const std::string& key, double dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number()) throw ConfigError(path + "/" + key, "expected a number");
  return j.at(key).get<double>();
}

int integer(const json& j, const std::string& key, int dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number_integer()) throw ConfigError(path + "/" + key, "expected an integer");
  return j.at(key).get<int>();
}

}  // namespace

Observable observable_from_json(const json& j, const MapSpec& map, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError(path + "/kind", "missing");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    reject_unknown(j, {"kind", "value"}, path);
    return constant_observable(number(j, "value", 0.0, path));
  }
  if (kind == "cos" || kind == "sin") {
    reject_unknown(j, {"kind", "k", "amplitude"}, path);
    const int k = integer(j, "k", 1, path);
    const double a = number(j, "amplitude", 1.0, path);
    return kind == "cos" ? cos_mode(k, a) : sin_mode(k, a);
  }
  if (kind == "neg_log_derivative") {
    reject_unknown(j, {"kind", "scale"}, path);
    try {
      return neg_log_derivative(map, number(j, "scale", 1.0, path));
    } catch (const ConfigError& e) {
      throw ConfigError(path, e.what());
    }
  }
  if (kind == "coboundary") {
    reject_unknown(j, {"kind", "of"}, path);
    if (!j.contains("of")) throw ConfigError(path + "/of", "missing");
    return coboundary(observable_from_json(j.at("of"), map, path + "/of"), map);
  }
  if (kind == "piecewise_poly") {
    reject_unknown(j, {"kind", "breakpoints", "coefficients"}, path);
    try {
      return piecewise_poly_observable(j.at("breakpoints").get<std::vector<double>>(),
                                       j.at("coefficients").get<std::vector<std::vector<double>>>());
    } catch (const ConfigError& e) {
      throw ConfigError(path + e.path(), e.what());
    } catch (const json::exception& e) {
      throw ConfigError(path, e.what());
    }
  }
  if (kind == "sum") {
    reject_unknown(j, {"kind", "terms"}, path);
    if (!j.contains("terms") || !j.at("terms").is_array() || j.at("terms").empty()) {
      throw ConfigError(path + "/terms", "expected a non-empty array");
    }
    const auto& terms = j.at("terms");
    Observable acc = observable_from_json(terms[0], map, path + "/terms/0");
    for (std::size_t k = 1; k < terms.size(); ++k) {
      acc = sum(acc, observable_from_json(terms[k], map, path + "/terms/" + std::to_string(k)));
    }
    acc.source = {{"kind", "sum"}, {"terms", json::array()}};
    for (std::size_t k = 0; k < terms.size(); ++k) {
      acc.source["terms"].push_back(
          observable_from_json(terms[k], map, path + "/terms/" + std::to_string(k)).source);
    }
    return acc;
  }
  if (kind == "scaled") {
    reject_unknown(j, {"kind", "factor", "of"}, path);
    if (!j.contains("of")) throw ConfigError(path + "/of", "missing");
    return scaled(observable_from_json(j.at("of"), map, path + "/of"), number(j, "factor", 1.0, path));
  }
  throw ConfigError(path + "/kind", "unknown observable kind '" + kind + "'");
}

json observable_to_json(const Observable& o) { return o.source; }

std::vector<double> sample_on_grid(const Observable& o, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = o((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return v;
}

}  // namespace tf
