// Circle maps as lifts with enumerable inverse branches.
//
// A map f: S^1 -> S^1 of degree G is stored through a lift F restricted to
// the fundamental domain [0,1]. F is continuous and strictly increasing with
// F(1) - F(0) = G; everywhere else F(x + 1) = F(x) + G. Circle points live
// in [0,1).
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tf {

using RealFunction = std::function<double(double)>;

struct Smoothness {
  double holder_alpha = 1.0;  // Hölder exponent of the map (1 for C^1 and better)
  int cr_degree = 0;          // r in C^{r+alpha}; 0 means Hölder-only
};

struct MapSpec {
  std::string name;
  int degree = 1;
  RealFunction lift;               // F on [0,1]
  RealFunction derivative;         // F' on [0,1]; empty for Hölder-only maps
  RealFunction second_derivative;  // F''; optional
  RealFunction inverse_lift;       // closed-form F^{-1} on [F(0), F(0)+G]; optional
  Smoothness smoothness;
  nlohmann::json source;           // serialized description, see map_to_json

  bool has_derivative() const { return static_cast<bool>(derivative); }

  // F extended to the real line.
  double lift_at(double x) const;
  double derivative_at(double x) const;
  double second_derivative_at(double x) const;
  // Global inverse of the extended lift.
  double lift_inverse(double t) const;
};

// Options for branch enumeration.
struct BranchOptions {
  // Cell width used for the difference-quotient contraction factor of maps
  // without a derivative.
  double lipschitz_cell = 1.0 / 1024.0;
};

struct InverseBranchPoint {
  double base = 0.0;          // x
  std::uint64_t branch = 0;   // lexicographic in per-level slice index
  int depth = 1;              // n
  double preimage = 0.0;      // y with f^n(y) = x
  double contraction = 1.0;   // L_n(y)
};

struct OrbitSample {
  double start = 0.0;
  int length = 0;
  double value = 0.0;  // S_n psi(start)
};

double wrap_unit(double x);
double circle_distance(double x, double y);

double eval(const MapSpec& map, double x);
double eval_iterate(const MapSpec& map, double x, int n);

// The G depth-1 preimages of x in increasing order of y.
std::vector<double> preimages(const MapSpec& map, double x);

// Depth-1 Lipschitz factor L(y) of the inverse branch through y: 1/f'(y)
// when a derivative exists, otherwise a difference quotient over the cell.
double branch_factor(const MapSpec& map, double y, const BranchOptions& opts = {});

std::vector<InverseBranchPoint> inverse_branches(const MapSpec& map, double x, int depth,
                                                 const BranchOptions& opts = {});

double birkhoff_sum(const MapSpec& map, const RealFunction& psi, double x, int n);
OrbitSample orbit_sample(const MapSpec& map, const RealFunction& psi, double x, int n);

// C-infinity step used by the builtin maps: 0 for x <= 0, 1 for x >= 1.
double bump(double x);
double bump_derivative(double x);
double bump_second_derivative(double x);

MapSpec doubling_map();
MapSpec multiplication_map(int degree);
MapSpec rotation_map(double theta);
MapSpec mp_like_map();
// Doubling map deformed near the fixed point 0: F_v(x) = 2x - v x rho(x),
// rho = 1 on |x| <= 1/16 and 0 on |x| >= 1/8. f_v'(0) = 2 - v, so the fixed
// point is repelling for v < 1, neutral at v = 1 and a sink for 1 < v < 2.
MapSpec derived_from_expanding_map(double v);

// The piecewise lift is sum_p c[k][p] (x - b_k)^p on [b_k, b_{k+1}].
MapSpec piecewise_poly_map(const std::string& name, int degree,
                           std::vector<double> breakpoints,
                           std::vector<std::vector<double>> coefficients);

// f^m as a map of degree G^m.
MapSpec iterate_map(const MapSpec& map, int m);

std::vector<MapSpec> builtin_maps();
MapSpec builtin_map(const std::string& name, const nlohmann::json& params);

MapSpec map_from_json(const nlohmann::json& j, const std::string& path = "/map");
nlohmann::json map_to_json(const MapSpec& map);

}  // namespace tf
