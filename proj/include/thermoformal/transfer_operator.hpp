// Finite-dimensional discretizations of the transfer operator
//   (L v)(x) = sum_{f(y) = x} e^{phi(y)} v(y)
// on a uniform grid of n cells [i/n, (i+1)/n) with centres x_i = (i+1/2)/n,
// and the leading spectral data (lambda, h, nu) of the resulting matrix.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermoformal/kernels.hpp"
#include "thermoformal/map_core.hpp"
#include "thermoformal/observable.hpp"

namespace tf {

// collocation: v holds values at the cell centres; preimages are read by
//   periodic piecewise-linear interpolation.
// ulam: v holds cell values; each branch preimage interval of cell i is
//   spread over the cells it overlaps, weighted by e^{phi(midpoint)}.
enum class Scheme { ulam, collocation };

Scheme scheme_from_string(const std::string& s);
std::string to_string(Scheme s);

struct TransferMatrix {
  Scheme scheme = Scheme::collocation;
  DenseMatrix a;
  std::string map_name;
  nlohmann::json potential;

  std::size_t n() const noexcept { return a.size(); }
  double node(std::size_t i) const noexcept {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(a.size());
  }
};

struct BuildOptions {
  bool parallel = true;
};

TransferMatrix build_matrix(const MapSpec& map, const PotentialSpec& phi, Scheme scheme,
                            std::size_t n, const BuildOptions& opts = {});

// Matrix action y = A x (right) and y = A^T x (left).
void apply(const TransferMatrix& m, std::span<const double> x, std::span<double> y,
           bool parallel = true);
void apply_transpose(const TransferMatrix& m, std::span<const double> x, std::span<double> y,
                     bool parallel = true);

struct SpectralTriple {
  double lambda = 0.0;
  std::vector<double> h;   // right eigenvector, sum_i h_i nu_i = 1
  std::vector<double> nu;  // left eigenvector, sum_i nu_i = 1
  double gap_ratio = 0.0;  // |lambda_2| / lambda estimate
  int iterations = 0;      // right + left power iterations
  // A^k > 0 entrywise for some k <= primitivity_max_power. When false the
  // triple is only the leading eigendata of this discretization.
  std::optional<bool> primitive;
  double right_residual = 0.0;  // ||A h - lambda h||_inf / ||h||_inf
  double left_residual = 0.0;
};

struct TripleOptions {
  double tol = 1e-12;
  double residual_tol = 1e-10;
  int max_iterations = 500000;
  int gap_iterations = 160;
  bool check_primitivity = true;
  int primitivity_max_power = 8;
  bool parallel = true;
  // Optional starting vectors (e.g. the previous point of a parameter scan).
  std::vector<double> warm_h;
  std::vector<double> warm_nu;
};

SpectralTriple leading_triple(const TransferMatrix& m, const TripleOptions& opts = {});

// A^k > 0 for some k <= max_power, decided on the sparsity pattern.
bool is_primitive(const TransferMatrix& m, int max_power);

struct EquilibriumState {
  Scheme scheme = Scheme::collocation;
  std::vector<double> mu;       // mu_i = h_i nu_i, sums to 1
  double renormalization = 1.0;  // factor applied to reach total mass 1

  std::size_t n() const noexcept { return mu.size(); }
  // Density with respect to Lebesgue on the grid.
  std::vector<double> density() const;
};

EquilibriumState equilibrium_measure(const SpectralTriple& t, Scheme scheme);

// Integral of g against mu: point masses at the centres (collocation) or a
// uniform density inside each cell with three-point Gauss quadrature (ulam).
double integrate(const EquilibriumState& mu, const RealFunction& g);

// max over g of |int g o f dmu - int g dmu|
double invariance_defect(const MapSpec& map, const EquilibriumState& mu,
                         std::span<const Observable> tests);

// Periodic piecewise-linear interpolation of grid values at x.
double interpolate(std::span<const double> values, double x);

}  // namespace tf
