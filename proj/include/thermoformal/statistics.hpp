// Pressure, correlation decay and CLT variance from the spectral triple.
#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "thermoformal/observable.hpp"
#include "thermoformal/transfer_operator.hpp"

namespace tf {

// log lambda; lambda must be positive.
double pressure(double lambda);

struct CorrelationSeries {
  std::vector<double> values;        // C(0..n_max)
  std::optional<double> decay_rate;  // fitted tau; empty below the noise floor
  std::optional<double> prefactor;   // fitted K
  double noise_floor = 1e-12;
};

// C(n) = int (g o f^n) psi dmu - int g dmu int psi dmu
//      = nu^T (g . (A/lambda)^n (psi . h)) - nu^T(g h) nu^T(psi h)
// on grid samples at the cell centres.
CorrelationSeries correlations(const TransferMatrix& m, const SpectralTriple& t,
                               std::span<const double> g, std::span<const double> psi, int n_max);
// Same, except that the first operator application is done at the exact
// preimages of the centres with psi evaluated there, so the grid only has to
// resolve L(psi h), which is smoother than psi itself.
CorrelationSeries correlations(const MapSpec& map, const PotentialSpec& phi,
                               const TransferMatrix& m, const SpectralTriple& t,
                               const Observable& g, const Observable& psi, int n_max);

// log-linear least-squares fit of |C(n)| over lags above the floor.
void fit_decay(CorrelationSeries& c);

struct VarianceReport {
  double sigma2 = 0.0;
  double mean = 0.0;      // int psi dmu
  double c0 = 0.0;        // C_v(0)
  int lag_max = 0;
  std::vector<double> autocorrelation;  // C_v(0..lag_max)
  std::optional<double> tail_bound;     // empty when gap_ratio >= 1
  bool coboundary = false;
};

struct VarianceOptions {
  // A variance at or below max(10 * tail bound, roundoff_floor * int psi^2 dmu)
  // is reported as a coboundary.
  double roundoff_floor = 1e-9;
};

VarianceReport clt_variance(const MapSpec& map, const PotentialSpec& phi, const TransferMatrix& m,
                            const SpectralTriple& t, const Observable& psi, int lag_max,
                            const VarianceOptions& opts = {});

nlohmann::json to_json(const CorrelationSeries& c);
nlohmann::json to_json(const VarianceReport& v);

}  // namespace tf
