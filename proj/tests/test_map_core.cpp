#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "thermoformal/errors.hpp"
#include "thermoformal/map_core.hpp"
#include "thermoformal/observable.hpp"

using namespace tf;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("eval on builtin maps") {
  CHECK(eval(doubling_map(), 0.3) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(eval(mp_like_map(), 0.0) == 0.0);
  const double th = std::numbers::sqrt2 - 1.0;
  const auto r = rotation_map(th);
  for (double x : {0.0, 0.2, 0.7, 0.95}) {
    CHECK(circle_distance(eval(r, x), x + th) < 1e-15);
  }
  CHECK(eval_iterate(doubling_map(), 0.3, 2) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("lift invariants of the catalog") {
  for (const auto& m : builtin_maps()) {
    CAPTURE(m.name);
    CHECK(m.lift(1.0) - m.lift(0.0) == doctest::Approx(m.degree).epsilon(1e-15));
    double prev = m.lift(0.0);
    for (int i = 1; i <= 2000; ++i) {
      const double v = m.lift(i / 2000.0);
      CHECK(v > prev);
      prev = v;
      if (m.has_derivative()) CHECK(m.derivative(i / 2000.0) > 0.0);
    }
    CHECK(m.lift_at(1.3) == doctest::Approx(m.lift_at(0.3) + m.degree).epsilon(1e-14));
  }
}

TEST_CASE("inverse branches of the doubling map") {
  const auto d = doubling_map();
  auto b = inverse_branches(d, 0.0, 1);
  REQUIRE(b.size() == 2);
  std::vector<double> pts{b[0].preimage, b[1].preimage};
  std::sort(pts.begin(), pts.end());
  CHECK(pts[0] == doctest::Approx(0.0));
  CHECK(pts[1] == doctest::Approx(0.5));
  for (const auto& p : b) CHECK(p.contraction == doctest::Approx(0.5));

  b = inverse_branches(d, 0.37, 3);
  REQUIRE(b.size() == 8);
  for (const auto& p : b) {
    CHECK(p.contraction == doctest::Approx(0.125));
    CHECK(p.depth == 3);
  }
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i].branch == i);
  CHECK_THROWS_AS(inverse_branches(d, 0.1, 0), std::invalid_argument);
}

TEST_CASE("MP-like branch inside [1/4, 3/4] contracts") {
  const auto m = mp_like_map();
  const auto b = inverse_branches(m, 0.5, 1);
  REQUIRE(b.size() == 2);
  int inside = 0;
  for (const auto& p : b) {
    if (p.preimage >= 0.25 && p.preimage <= 0.75) {
      ++inside;
      CHECK(p.contraction < 1.0);
      CHECK(p.contraction == doctest::Approx(1.0 / m.derivative(p.preimage)).epsilon(1e-14));
    }
  }
  // both preimages of 1/2 land in [1/4, 3/4] (about 0.327 and 0.673)
  CHECK(inside == 2);
}

TEST_CASE("forward evaluation of every branch returns the base point") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto maps = builtin_maps();
  maps.push_back(iterate_map(mp_like_map(), 2));
  maps.push_back(derived_from_expanding_map(1.5));
  for (const auto& m : maps) {
    if (m.degree < 2) continue;
    CAPTURE(m.name);
    for (int trial = 0; trial < 10; ++trial) {
      const double x = u(rng);
      for (int n = 1; n <= 3; ++n) {
        for (const auto& p : inverse_branches(m, x, n)) {
          CHECK(circle_distance(eval_iterate(m, p.preimage, n), x) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("depth-n contractions equal products of depth-1 factors (brute force)") {
  // Oracle: compose depth-1 preimages by hand and multiply 1/f' along the way.
  for (const auto& m : {mp_like_map(), derived_from_expanding_map(1.2), multiplication_map(3)}) {
    CAPTURE(m.name);
    for (double x : {0.05, 0.41, 0.77}) {
      for (int n = 1; n <= 3; ++n) {
        struct P {
          double y, c;
        };
        std::vector<P> level{{x, 1.0}};
        for (int d = 0; d < n; ++d) {
          std::vector<P> next;
          for (const auto& p : level) {
            for (double y : preimages(m, p.y)) next.push_back({y, p.c / m.derivative(y)});
          }
          level = next;
        }
        const auto got = inverse_branches(m, x, n);
        REQUIRE(got.size() == level.size());
        std::vector<double> a, b;
        for (const auto& p : got) a.push_back(p.contraction);
        for (const auto& p : level) b.push_back(p.c);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("preimage count is G^n on random points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& m : builtin_maps()) {
    for (int i = 0; i < 100; ++i) {
      const double x = u(rng);
      CHECK(preimages(m, x).size() == static_cast<std::size_t>(m.degree));
      CHECK(inverse_branches(m, x, 2).size() == static_cast<std::size_t>(m.degree * m.degree));
    }
  }
}

TEST_CASE("Birkhoff sums") {
  const auto d = doubling_map();
  CHECK(birkhoff_sum(d, [](double) { return 2.5; }, 0.123, 7) == doctest::Approx(17.5));
  CHECK(birkhoff_sum(d, [](double x) { return x; }, 0.0, 20) == 0.0);
  CHECK(birkhoff_sum(d, [](double x) { return std::cos(2 * kPi * x); }, 1.0 / 3.0, 2) ==
        doctest::Approx(-1.0).epsilon(1e-12));
  const auto o = orbit_sample(d, [](double x) { return x; }, 0.25, 3);
  CHECK(o.value == doctest::Approx(0.25 + 0.5 + 0.0));
}

TEST_CASE("MP-like shape") {
  const auto m = mp_like_map();
  CHECK(m.derivative(0.0) == doctest::Approx(1.0).epsilon(1e-14));
  // 1 + B'(x) rounds to 1 once B'(x) < 2^-53, so the strict check needs x away from 0
  for (int i = 500; i <= 9500; ++i) CHECK(m.derivative(i / 10000.0) > 1.0);
  for (int i = 20; i <= 9980; ++i) CHECK(bump_derivative(i / 10000.0) != 0.0);
  for (int i = 1; i <= 5000; ++i) CHECK(m.derivative(i / 10000.0) >= m.derivative((i - 1) / 10000.0));
  for (int i = 5001; i <= 10000; ++i) CHECK(m.derivative(i / 10000.0) <= m.derivative((i - 1) / 10000.0));
  // minimum of f' on [1/4, 3/4] sits at the endpoints and exceeds 1
  double lo = 1e300;
  for (int i = 0; i <= 10000; ++i) lo = std::min(lo, m.derivative(0.25 + 0.5 * i / 10000.0));
  CHECK(lo == doctest::Approx(std::min(m.derivative(0.25), m.derivative(0.75))));
  CHECK(lo > 1.0);
  // f([1/4, 3/4]) covers the circle
  CHECK(m.lift(0.75) - m.lift(0.25) >= 1.0);
}

TEST_CASE("derived family") {
  const auto d = doubling_map();
  const auto v0 = derived_from_expanding_map(0.0);
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    CHECK(v0.lift(x) == doctest::Approx(d.lift(x)).epsilon(1e-15));
    CHECK(v0.derivative(x) == doctest::Approx(2.0));
  }
  for (double v : {0.5, 1.0, 1.5, 1.9}) {
    CHECK(derived_from_expanding_map(v).derivative(0.0) == doctest::Approx(2.0 - v));
  }
}

TEST_CASE("iterate map") {
  const auto m2 = iterate_map(mp_like_map(), 2);
  CHECK(m2.degree == 4);
  const auto m = mp_like_map();
  for (double x : {0.1, 0.33, 0.8}) {
    CHECK(circle_distance(eval(m2, x), eval(m, eval(m, x))) < 1e-12);
    CHECK(m2.derivative_at(x) ==
          doctest::Approx(m.derivative_at(x) * m.derivative_at(eval(m, x))).epsilon(1e-12));
  }
}

TEST_CASE("map JSON") {
  for (const auto& m : builtin_maps()) {
    const auto j = map_to_json(m);
    CHECK(map_to_json(map_from_json(j)) == j);
  }
  const auto it = iterate_map(doubling_map(), 3);
  CHECK(map_to_json(map_from_json(map_to_json(it))) == map_to_json(it));
  CHECK_THROWS_AS(map_from_json({{"name", "doubling"}, {"colour", 1}}), ConfigError);
  try {
    map_from_json({{"name", "rotation"}, {"params", {{"phase", 0.1}}}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "/map/params/phase");
  }
  CHECK_THROWS_AS(map_from_json({{"name", "doubling"}, {"degree", 3}}), ConfigError);
  CHECK_THROWS_AS(map_from_json({{"name", "unheard_of"}}), ConfigError);
}

TEST_CASE("piecewise polynomial maps") {
  // F(x) = 2x as two linear pieces, coefficients in u = x - left breakpoint
  const auto m = piecewise_poly_map("pp", 2, {0.0, 0.5, 1.0}, {{0.0, 2.0}, {1.0, 2.0}});
  CHECK(eval(m, 0.3) == doctest::Approx(0.6));
  CHECK(map_to_json(map_from_json(map_to_json(m))) == map_to_json(m));
  // decreasing piece is rejected
  CHECK_THROWS(piecewise_poly_map("bad", 1, {0.0, 1.0}, {{0.0, -1.0}}));
}

TEST_CASE("observable catalog") {
  const auto d = doubling_map();
  const auto cb = coboundary(cos_mode(1), d);
  for (double x : {0.0, 0.1, 0.37, 0.9}) {
    CHECK(cb(x) == doctest::Approx(std::cos(4 * kPi * x) - std::cos(2 * kPi * x)).epsilon(1e-12));
  }
  CHECK(constant_observable(3.5)(0.77) == 3.5);
  const auto nl = neg_log_derivative(d);
  CHECK(nl(0.3) == doctest::Approx(-std::log(2.0)));
  MapSpec bare = doubling_map();
  bare.derivative = nullptr;
  CHECK_THROWS_AS(neg_log_derivative(bare), ConfigError);
  const auto t = tilt(constant_observable(1.0), cos_mode(1), 0.5);
  CHECK(t(0.0) == doctest::Approx(1.5));
  for (const auto& o : observable_library(mp_like_map())) {
    CAPTURE(o.name);
    const auto back = observable_from_json(observable_to_json(o), mp_like_map(), "/observable");
    for (double x : {0.0, 0.21, 0.5, 0.93}) CHECK(back(x) == o(x));
  }
  CHECK_THROWS_AS(observable_from_json({{"kind", "cos"}, {"phase", 1}}, d, "/observable"), ConfigError);
}
