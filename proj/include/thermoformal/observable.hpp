// Observables and potentials on the circle.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "thermoformal/map_core.hpp"

namespace tf {

struct Observable {
  std::string name;
  RealFunction eval;
  nlohmann::json source;

  double operator()(double x) const { return eval(x); }
};

// A potential is an observable used as the weight e^phi of the transfer operator.
using PotentialSpec = Observable;

Observable constant_observable(double c);
Observable cos_mode(int k, double amplitude = 1.0);
Observable sin_mode(int k, double amplitude = 1.0);
// scale * (-log f'); throws ConfigError for maps without a derivative.
Observable neg_log_derivative(const MapSpec& map, double scale = 1.0);
// u o f - u
Observable coboundary(const Observable& u, const MapSpec& map);
Observable piecewise_poly_observable(std::vector<double> breakpoints,
                                     std::vector<std::vector<double>> coefficients);

Observable sum(const Observable& a, const Observable& b);
Observable scaled(const Observable& a, double s);
Observable shifted(const Observable& a, double c);
// phi + t psi
Observable tilt(const Observable& phi, const Observable& psi, double t);

// Representative members of every observable kind for `map`. The -log f'
// entry is omitted when the map has no derivative.
std::vector<Observable> observable_library(const MapSpec& map);

Observable observable_from_json(const nlohmann::json& j, const MapSpec& map,
                                const std::string& path);
nlohmann::json observable_to_json(const Observable& o);

// Samples of `o` at the points (i + 1/2)/n.
std::vector<double> sample_on_grid(const Observable& o, std::size_t n);

}  // namespace tf
