#include <doctest.h>

#include <cmath>

#include "thermoformal/errors.hpp"
#include "thermoformal/statistics.hpp"
#include "thermoformal/certify.hpp"
#include "thermoformal/thermo_curves.hpp"

using namespace tf;

namespace {

const FreeEnergyCurve& doubling_cos_curve() {
  static const auto c = free_energy_curve(doubling_map(), constant_observable(0), cos_mode(1), 0.5,
                                          41, Scheme::collocation, 512);
  return c;
}

}  // namespace

TEST_CASE("E(0) = 0 and convexity") {
  const auto& c = doubling_cos_curve();
  CHECK(c.E[c.zero_index()] == 0.0);
  CHECK(c.t[c.zero_index()] == 0.0);
  CHECK(c.verdict == Convexity::strict);
  for (std::size_t i = 1; i + 1 < c.E.size(); ++i) {
    CHECK(c.E[i + 1] - 2 * c.E[i] + c.E[i - 1] >= -1e-8);
    CHECK(c.dE[i] == doctest::Approx((c.E[i + 1] - c.E[i - 1]) / (2 * c.step)).epsilon(1e-14));
  }
}

TEST_CASE("constant psi gives an affine curve") {
  const auto c = free_energy_curve(mp_like_map(), cos_mode(1, 0.1), constant_observable(0.3), 1.0,
                                   11, Scheme::ulam, 256);
  for (std::size_t i = 0; i < c.t.size(); ++i) CHECK(std::abs(c.E[i] - 0.3 * c.t[i]) < 1e-12);
  CHECK(c.verdict == Convexity::affine);
  CHECK_THROWS_AS(rate_function(c, 11), DegenerateLegendre);
}

TEST_CASE("curve preconditions and failures") {
  CHECK_THROWS_AS(free_energy_curve(doubling_map(), constant_observable(0), cos_mode(1), 0.5, 10,
                                    Scheme::collocation, 64),
                  std::invalid_argument);
  CurveOptions o;
  o.triple.max_iterations = 1;
  o.triple.tol = 0.0;
  CHECK_THROWS_AS(free_energy_curve(mp_like_map(), constant_observable(0), cos_mode(1), 0.5, 5,
                                    Scheme::collocation, 64, o),
                  std::exception);
}

TEST_CASE("derivative checks") {
  const auto z = free_energy_curve(doubling_map(), constant_observable(0), constant_observable(0.0),
                                   0.5, 11, Scheme::collocation, 128);
  const auto dz = derivative_checks(z, constant_observable(0.0));
  CHECK(dz.max_residual == 0.0);
  CHECK(dz.zero_residual == 0.0);
  CHECK(dz.bounds_ok);

  // E'(0) by central difference carries E'''(0) h^2 / 6; a fine step makes it small.
  const auto fine = free_energy_curve(doubling_map(), constant_observable(0), cos_mode(1), 0.02,
                                      41, Scheme::collocation, 512);
  const auto df = derivative_checks(fine, cos_mode(1));
  CHECK(std::abs(df.centered_dE0) < 1e-6);
  CHECK(df.bounds_ok);

  const auto& c = doubling_cos_curve();
  const auto d = derivative_checks(c, cos_mode(1));
  CHECK(d.bounds_ok);
  CHECK(d.max_residual < 5 * c.step * c.step + 1e-5);
  CHECK(d.psi_inf == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(d.psi_sup == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Richardson step halving improves E'") {
  const auto a = free_energy_curve(doubling_map(), constant_observable(0), cos_mode(1), 0.5, 21,
                                   Scheme::collocation, 512);
  const auto b = free_energy_curve(doubling_map(), constant_observable(0), cos_mode(1), 0.5, 41,
                                   Scheme::collocation, 512);
  const double r = richardson_derivative_residual(a, b);
  CHECK(r < derivative_checks(b, cos_mode(1)).max_residual);
  CHECK(r < 1e-4);
  CHECK_THROWS(richardson_derivative_residual(a, a));
}

TEST_CASE("two schemes and the tilting identity") {
  const auto map = mp_like_map();
  const auto a = free_energy_curve(map, constant_observable(0), cos_mode(1), 0.5, 5, Scheme::collocation, 1024);
  const auto b = free_energy_curve(map, constant_observable(0), cos_mode(1), 0.5, 5, Scheme::ulam, 1024);
  for (std::size_t i = 0; i < a.E.size(); ++i) CHECK(std::abs(a.E[i] - b.E[i]) < 1e-3);
  // lambda(phi + t psi) from the curve equals the solve on the explicitly tilted matrix
  TripleOptions to;
  const auto direct = leading_triple(build_matrix(map, tilt(constant_observable(0), cos_mode(1), a.t[4]),
                                                  Scheme::collocation, 1024), to);
  CHECK(direct.lambda == doctest::Approx(a.lambda[4]).epsilon(1e-11));
}

TEST_CASE("Legendre transform of a quadratic") {
  std::vector<double> t, E, dE;
  const int k = 201;
  for (int i = 0; i < k; ++i) {
    const double x = -1.0 + 2.0 * i / (k - 1);
    t.push_back(x);
    E.push_back(0.5 * x * x);
    dE.push_back(x);
  }
  const auto r = rate_function(t, E, dE, 101, 0.0);
  for (std::size_t j = 0; j < r.s.size(); ++j) {
    CHECK(r.I[j] == doctest::Approx(0.5 * r.s[j] * r.s[j]).epsilon(1e-12));
    CHECK(r.t_of_s[j] == doctest::Approx(r.s[j]).epsilon(1e-12));
  }
  CHECK(r.I_at_s_star == 0.0);
  const auto lv = legendre(t, E, 2.0);  // beyond the grid: boundary maximizer
  CHECK(lv.argmax == 1.0);
}

TEST_CASE("rate function properties") {
  const auto& c = doubling_cos_curve();
  const auto r = rate_function(c, 201);
  CHECK(r.I_at_s_star < 1e-8);
  CHECK(r.eq_residual < 1e-8);
  for (std::size_t j = 0; j < r.s.size(); ++j) CHECK(r.I[j] >= 0.0);
  for (std::size_t j = 1; j + 1 < r.s.size(); ++j) CHECK(r.I[j + 1] - 2 * r.I[j] + r.I[j - 1] >= -1e-8);
  for (std::size_t j = 1; j < r.s.size(); ++j) CHECK(r.t_of_s[j] >= r.t_of_s[j - 1]);
  CHECK(r.infimum(-0.05, 0.05) == r.I_at_s_star);
  CHECK(r.infimum(0.1, 0.2) == doctest::Approx(r.evaluate(0.1)));

  // double Legendre recovers E inside the domain
  const double ds = r.s[1] - r.s[0];
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    if (std::abs(c.t[i]) > 0.8 * c.t_max) continue;
    const double back = legendre(r.s, r.I, c.t[i]).value;
    CHECK(std::abs(back - c.E[i]) <= 2 * ds * ds);
  }
}

TEST_CASE("rate function shift property") {
  const auto map = doubling_map();
  const auto a = free_energy_curve(map, constant_observable(0), cos_mode(1), 0.5, 41, Scheme::collocation, 256);
  const auto b = free_energy_curve(map, constant_observable(0), shifted(cos_mode(1), 0.25), 0.5, 41,
                                   Scheme::collocation, 256);
  const auto ra = rate_function(a, 51);
  const auto rb = rate_function(b, 51);
  for (double s : {-0.1, 0.0, 0.05, 0.15}) {
    CHECK(std::abs(rb.evaluate(s + 0.25) - ra.evaluate(s)) < 1e-8);
  }
}

TEST_CASE("LDP with s* inside the interval") {
  const auto map = doubling_map();
  const auto c = free_energy_curve(map, constant_observable(0), cos_mode(1), 1.0, 21, Scheme::collocation, 256);
  const auto r = rate_function(c, 101);
  const auto m = build_matrix(map, constant_observable(0), Scheme::collocation, 256);
  const auto t = leading_triple(m);
  const EquilibriumSampler sm(map, constant_observable(0), t, equilibrium_measure(t, Scheme::collocation));
  const int ns[] = {20, 40};
  // E is not even in t: the domain is about [-0.27, 0.79]
  const auto rep = ldp_empirical(sm, cos_mode(1), -0.2, 0.3, ns, 20000, 3, r);
  // -I(s*): zero up to the O(h^2) offset of E'(0) on this coarse grid
  CHECK(std::abs(rep.target) < 1e-5);
  CHECK(std::abs(rep.extrapolated) < 0.01);
  CHECK_FALSE(rep.censored);
  CHECK_THROWS_AS(ldp_empirical(sm, cos_mode(1), -5.0, 0.3, ns, 100, 3, r), std::invalid_argument);
  // far tail with few samples: zero counts are censored, not an error
  const auto tail = ldp_empirical(sm, cos_mode(1), r.s_max() - 0.01, r.s_max(), ns, 200, 3, r);
  CHECK(tail.censored);
}

TEST_CASE("default t_max ladder") {
  const double t = default_t_max(constant_observable(0), cos_mode(1), 1.0);
  CHECK(t > 0.0);
  CHECK(potential_admissible(tilt(constant_observable(0), cos_mode(1), t), 1.0).admissible());
  CHECK_FALSE(potential_admissible(tilt(constant_observable(0), cos_mode(1), 2 * t), 1.0).admissible());
}

TEST_CASE("response scans") {
  std::vector<double> v;
  for (int i = 0; i < 9; ++i) v.push_back(0.1 * i);
  ResponseOptions o;
  o.n = 128;
  const Family constant = [](double) { return FamilyMember{mp_like_map(), cos_mode(1, 0.1)}; };
  const auto s = response_scan(constant, cos_mode(1), v, o);
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    CHECK(s.d_lambda[i] == 0.0);
    CHECK(s.d2_lambda[i] == 0.0);
    CHECK(s.d_mean[i] == 0.0);
  }
  CHECK(s.max_adjacent_jump() == 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(s.pressure[i] == std::log(s.lambda[i]));

  const Family tilted = [](double t) {
    return FamilyMember{doubling_map(), tilt(constant_observable(0), cos_mode(1), t)};
  };
  o.guard_N = 1;
  o.guard_gamma = 0.6;
  const auto r = response_scan(tilted, cos_mode(1), v, o);
  for (const auto& g : r.guard_pass) CHECK(g == std::optional<bool>(true));
  CHECK(r.max_richardson_second() < 0.1);

  // a member that cannot be built is flagged and the scan continues
  const Family broken = [](double x) {
    if (x > 0.35 && x < 0.45) throw std::runtime_error("no map here");
    return FamilyMember{doubling_map(), constant_observable(0)};
  };
  const auto b = response_scan(broken, cos_mode(1), v, o);
  CHECK(b.errors[4] == "no map here");
  CHECK(std::isnan(b.lambda[4]));
  CHECK(b.lambda[5] == doctest::Approx(2.0));
}
