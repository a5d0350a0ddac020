#include <doctest.h>

#include <cmath>
#include <numbers>

#include "thermoformal/errors.hpp"
#include "thermoformal/transfer_operator.hpp"

using namespace tf;

namespace {

std::vector<double> ones_image(const TransferMatrix& m) {
  std::vector<double> one(m.n(), 1.0), y(m.n());
  apply(m, one, y);
  return y;
}

double sup_diff(const std::vector<double>& a, double c) {
  double d = 0.0;
  for (double x : a) d = std::max(d, std::abs(x - c));
  return d;
}

}  // namespace

TEST_CASE("constant vector is mapped to the degree") {
  for (auto scheme : {Scheme::collocation, Scheme::ulam}) {
    CHECK(sup_diff(ones_image(build_matrix(doubling_map(), constant_observable(0), scheme, 64)), 2.0) < 1e-12);
    CHECK(sup_diff(ones_image(build_matrix(multiplication_map(3), constant_observable(0), scheme, 64)), 3.0) < 1e-12);
    CHECK(sup_diff(ones_image(build_matrix(mp_like_map(), constant_observable(0), scheme, 128)), 2.0) < 1e-12);
    CHECK(sup_diff(ones_image(build_matrix(doubling_map(), constant_observable(-std::log(2.0)), scheme, 64)), 1.0) < 1e-12);
    const auto m = build_matrix(mp_like_map(), cos_mode(1), scheme, 64);
    for (double a : m.a.data()) CHECK(a >= 0.0);
  }
  CHECK_THROWS_AS(build_matrix(doubling_map(), constant_observable(0), Scheme::ulam, 8), std::invalid_argument);
}

TEST_CASE("leading triple of the doubling map") {
  for (auto scheme : {Scheme::collocation, Scheme::ulam}) {
    const auto m = build_matrix(doubling_map(), constant_observable(0), scheme, 256);
    const auto t = leading_triple(m);
    CHECK(t.lambda == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sup_diff(t.h, 1.0) < 1e-10);
    CHECK(sup_diff(t.nu, 1.0 / 256) < 1e-12);
    CHECK(t.gap_ratio >= 0.0);
    CHECK(t.gap_ratio < 1.0);
    const auto mu = equilibrium_measure(t, scheme);
    CHECK(sup_diff(mu.density(), 1.0) < 1e-10);
    const std::vector<Observable> g{cos_mode(1), constant_observable(2.0)};
    CHECK(invariance_defect(doubling_map(), mu, g) < 1e-10);
    const auto t2 = leading_triple(build_matrix(doubling_map(), constant_observable(-std::log(2.0)), scheme, 256));
    CHECK(t2.lambda == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sup_diff(equilibrium_measure(t2, scheme).density(), 1.0) < 1e-10);
  }
}

TEST_CASE("triple normalization and residuals") {
  for (const auto& map : builtin_maps()) {
    if (map.degree < 2) continue;
    CAPTURE(map.name);
    for (auto scheme : {Scheme::collocation, Scheme::ulam}) {
      const auto m = build_matrix(map, cos_mode(1, 0.1), scheme, 256);
      const auto t = leading_triple(m);
      CHECK(t.lambda > 0.0);
      double s = 0, sh = 0, hmin = 1e300;
      for (std::size_t i = 0; i < m.n(); ++i) {
        s += t.nu[i];
        sh += t.h[i] * t.nu[i];
        hmin = std::min(hmin, t.h[i]);
      }
      CHECK(hmin > 0.0);
      CHECK(std::abs(s - 1.0) < 1e-12);
      CHECK(std::abs(sh - 1.0) < 1e-10);
      CHECK(t.right_residual < 1e-9);
      CHECK(t.left_residual < 1e-9);
      CHECK(t.gap_ratio < 1.0);
    }
  }
}

TEST_CASE("scheme consistency of lambda at n = 1024") {
  for (const auto& map : builtin_maps()) {
    if (map.degree < 2) continue;
    CAPTURE(map.name);
    std::vector<Observable> phis{constant_observable(0.0), neg_log_derivative(map, 0.1), cos_mode(1, 0.1)};
    for (const auto& phi : phis) {
      CAPTURE(phi.name);
      const double a = leading_triple(build_matrix(map, phi, Scheme::collocation, 1024)).lambda;
      const double b = leading_triple(build_matrix(map, phi, Scheme::ulam, 1024)).lambda;
      CHECK(std::abs(a - b) < 1e-3);
    }
  }
}

TEST_CASE("adding a constant to phi scales lambda") {
  const auto map = mp_like_map();
  const auto l0 = leading_triple(build_matrix(map, cos_mode(1, 0.2), Scheme::collocation, 256)).lambda;
  const auto l1 = leading_triple(build_matrix(map, shifted(cos_mode(1, 0.2), 0.7), Scheme::collocation, 256)).lambda;
  CHECK(std::abs(l1 - std::exp(0.7) * l0) < 1e-10 * l1);
}

TEST_CASE("grid refinement decreases the lambda increments") {
  const auto map = mp_like_map();
  const auto phi = cos_mode(1, 0.2);
  std::vector<double> l;
  for (std::size_t n : {256u, 512u, 1024u, 2048u}) {
    l.push_back(leading_triple(build_matrix(map, phi, Scheme::ulam, n)).lambda);
  }
  CHECK(std::abs(l[1] - l[2]) < std::abs(l[0] - l[1]));
  CHECK(std::abs(l[2] - l[3]) < std::abs(l[1] - l[2]));
}

TEST_CASE("iterate identity lambda(f^2, phi + phi o f) = lambda(f, phi)^2") {
  const auto map = mp_like_map();
  const auto phi = cos_mode(1, 0.1);
  const auto f2 = iterate_map(map, 2);
  Observable phi2{"phi2", [map, phi](double x) { return phi(x) + phi(eval(map, x)); }, nullptr};
  const double l1 = leading_triple(build_matrix(map, phi, Scheme::collocation, 1024)).lambda;
  const double l2 = leading_triple(build_matrix(f2, phi2, Scheme::collocation, 1024)).lambda;
  CHECK(std::abs(l2 - l1 * l1) < 1e-3);
}

TEST_CASE("MP-like map, max-entropy data") {
  const auto map = mp_like_map();
  const auto t = leading_triple(build_matrix(map, constant_observable(0), Scheme::collocation, 1024));
  CHECK(t.lambda == doctest::Approx(2.0).epsilon(1e-10));
  const auto mu = equilibrium_measure(t, Scheme::collocation);
  std::vector<Observable> modes;
  for (int k = 1; k <= 5; ++k) modes.push_back(cos_mode(k));
  CHECK(invariance_defect(map, mu, modes) < 1e-3);
  // the density is far from uniform: mass piles up at the neutral fixed point
  const auto d = mu.density();
  CHECK(*std::max_element(d.begin(), d.end()) > 2.0);
}

TEST_CASE("primitivity flag") {
  // The rotation matrix is a permutation-like band and never becomes positive.
  const auto rot = build_matrix(rotation_map(0.25), constant_observable(0), Scheme::ulam, 64);
  CHECK_FALSE(is_primitive(rot, 8));
  // Multiplication by 3 on 64 cells reaches everything in a few steps.
  CHECK(is_primitive(build_matrix(multiplication_map(3), constant_observable(0), Scheme::ulam, 64), 8));
}

TEST_CASE("solver errors") {
  auto m = build_matrix(doubling_map(), constant_observable(0), Scheme::collocation, 32);
  auto z = m;
  for (std::size_t j = 0; j < z.n(); ++j) z.a(5, j) = 0.0;
  CHECK_THROWS_AS(leading_triple(z), ReducibilityError);
  auto neg = m;
  neg.a(0, 0) = -1.0;
  CHECK_THROWS_AS(leading_triple(neg), std::invalid_argument);
  TripleOptions o;
  o.max_iterations = 2;
  const auto mp = build_matrix(mp_like_map(), cos_mode(1, 0.3), Scheme::collocation, 256);
  try {
    leading_triple(mp, o);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_estimate() > 0.0);
    CHECK(e.iterations() >= 2);
  }
}

TEST_CASE("interpolation and integration") {
  const std::vector<double> v{0.0, 1.0, 2.0, 3.0};
  CHECK(interpolate(v, 0.125) == doctest::Approx(0.0));
  CHECK(interpolate(v, 0.25) == doctest::Approx(0.5));
  CHECK(interpolate(v, 0.0) == doctest::Approx(1.5));  // periodic wrap between 3 and 0
  EquilibriumState s;
  s.scheme = Scheme::ulam;
  s.mu.assign(64, 1.0 / 64);
  CHECK(integrate(s, [](double x) { return x; }) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(integrate(s, [](double x) { return x * x; }) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(scheme_from_string("ulam") == Scheme::ulam);
  CHECK_THROWS(scheme_from_string("spectral"));
}
