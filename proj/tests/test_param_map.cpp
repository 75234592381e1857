#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bjj/analytic.hpp"
#include "bjj/errors.hpp"
#include "bjj/param_map.hpp"
#include "oracles.hpp"

using namespace bjj;
using namespace bjj::param_map;
constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2.0 * pi;

namespace {

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(b), 1e-300); }

PendulumParams reference_pendulum() {
  PendulumParams P;
  P.k0 = 0.57;
  P.omega0 = 2623.0;
  P.N0 = 0.12;
  P.tau = 8.9e-3;
  P.delta_phi = -2.0;
  P.delta_n = -0.03;
  return P;
}

}  // namespace

TEST_CASE("damped and corrected frequencies") {
  CHECK(damped_frequency(100.0, kInfinity) == 100.0);
  CHECK(damped_frequency(100.0, std::sqrt(2.0) / 100.0) == doctest::Approx(100.0 / std::sqrt(2.0)));
  CHECK_THROWS_AS(damped_frequency(100.0, 0.01), DomainError);
  CHECK_THROWS_AS(damped_frequency(100.0, 0.005), DomainError);

  const double w0 = 1000.0;
  CHECK(corrected_frequency(w0, 0.0) == w0);
  auto exact = [&](double Phi0) {
    const double s = std::sin(Phi0 / 2);
    return pi * w0 / (2.0 * oracle::ellipk(s * s));
  };
  CHECK(close(corrected_frequency(w0, 0.4), exact(0.4), 1e-3));
  // At Phi0 = pi/2: first order 0.8458 w0, exact 0.8472 w0.
  const double first = corrected_frequency(w0, pi / 2);
  CHECK(first < exact(pi / 2));
  CHECK(exact(pi / 2) < w0);
  CHECK(std::abs(first - exact(pi / 2)) > std::abs(corrected_frequency(w0, 0.4) - exact(0.4)));
  CHECK_THROWS_AS(corrected_frequency(w0, -0.1), DomainError);
}

TEST_CASE("decay time and viscosity") {
  const auto p = TmbhParams::from_lambda(two_pi * 100, 20, 5000, 0.0, 120);
  const InitialState s0{0.0, 0.45 * pi};
  const double tau = decay_time(p, s0);
  CHECK(tau == doctest::Approx(5000.0 / (p.J * 120.0 * (20.0 + std::cos(0.45 * pi)))).epsilon(1e-14));
  // Invert 2/tau = 2 J (eta/N)(Lambda + lambda) for eta, then recompute tau.
  TmbhParams q = p;
  q.eta = p.N / (p.J * tau * (p.Lambda() + s0.lambda()));
  CHECK(close(decay_time(q, s0), tau, 1e-10));
  CHECK(std::isinf(decay_time(TmbhParams::from_lambda(1.0, 20, 100), s0)));

  CHECK(viscosity_eta(reference_pendulum(), 3500.0) == doctest::Approx(31.6).epsilon(2e-3));
  PendulumParams undamped = reference_pendulum();
  undamped.tau = kInfinity;
  CHECK(viscosity_eta(undamped, 3500.0) == 0.0);
}

TEST_CASE("simplified map reproduces the reference parameter set") {
  const TmbhParams p = to_tmbh_simplified(reference_pendulum(), 3500.0, 1.0);
  CHECK(p.J == doctest::Approx(2623.0 * 0.12 / (4 * 0.57)).epsilon(1e-14));
  CHECK(p.J == doctest::Approx(138.1).epsilon(1e-3));
  CHECK(p.J / two_pi == doctest::Approx(22.0).epsilon(5e-3));
  CHECK(p.Lambda() == doctest::Approx(4 * 0.57 * 0.57 / (0.12 * 0.12) - 1).epsilon(1e-12));
  CHECK(p.Lambda() == doctest::Approx(89.3).epsilon(1e-3));
  CHECK(p.epsilon == doctest::Approx(747.6).epsilon(1e-4));
  CHECK(p.epsilon / two_pi == doctest::Approx(119.0).epsilon(2e-3));
  CHECK(p.eta == doctest::Approx(31.6).epsilon(2e-3));

  PendulumParams z = reference_pendulum();
  z.k0 = 0.0;
  CHECK_THROWS_AS(to_tmbh_simplified(z, 3500.0), DegeneracyError);
}

TEST_CASE("to_pendulum assembles the observable parameters") {
  const auto f2 = TmbhParams::from_lambda(two_pi * 50, 40, 5000);
  const PendulumParams P = to_pendulum(f2, {0.0, 0.8 * pi}, kInfinity);
  CHECK(P.k0 == doctest::Approx(0.951).epsilon(1e-3));
  CHECK(P.N0 == doctest::Approx(2 * std::sin(0.4 * pi) / std::sqrt(40 + std::cos(0.8 * pi))).epsilon(1e-14));
  CHECK(P.omega0 == doctest::Approx(2 * f2.J * std::sqrt(40 + std::cos(0.8 * pi))).epsilon(1e-14));
  CHECK(std::isinf(P.tau));
  CHECK(std::abs(analytic::phi_undamped(0.0, P) - 0.8 * pi) < 1e-12);

  const PendulumParams G = to_pendulum(f2, {0.0, 0.0}, kInfinity);
  CHECK(G.k0 == 0.0);
  CHECK(analytic::classify_regime(G.k0) == Regime::Equilibrium);

  TmbhParams d = TmbhParams::from_lambda(two_pi * 20, 100, 1000);
  d.epsilon = -2.0 * d.J * (100 + 1.0) * 0.2;
  const PendulumParams L = to_pendulum(d, {0.2, 0.0}, kInfinity);
  CHECK(L.k0 < 1e-12);
  CHECK(L.delta_n == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("sign normalization reproduces the initial state") {
  const auto p = TmbhParams::from_lambda(two_pi * 50, 40, 5000, two_pi * 3.0);
  for (InitialState s0 : {InitialState{-0.05, 0.7}, InitialState{0.05, -0.7}, InitialState{-0.02, -1.9},
                          InitialState{-0.4, 2.0}, InitialState{0.3, -2.5}}) {
    const PendulumParams P = to_pendulum(p, s0, kInfinity);
    CAPTURE(s0.n0);
    CAPTURE(s0.phi0);
    CHECK(P.sigma0 == (s0.n0 - P.delta_n < 0.0 ? -1 : 1));
    CHECK(std::abs(std::remainder(analytic::phi_undamped(0.0, P) - s0.phi0, two_pi)) < 1e-10);
    CHECK(std::abs(analytic::n_damped(0.0, P) - s0.n0) < 1e-7);
  }
}

TEST_CASE("general map: round trips") {
  SUBCASE("TMBH -> pendulum -> TMBH is the identity") {
    const double N = 5000;
    for (double eps_hz : {0.0, 4.0, -9.0}) {
      for (InitialState s0 : {InitialState{0.05, 0.7}, InitialState{-0.1, 2.1}, InitialState{0.3, -pi},
                              InitialState{0.0, 1.2}}) {
        const auto p = TmbhParams::from_lambda(two_pi * 50, 40, N, two_pi * eps_hz);
        const PendulumParams P = to_pendulum(p, s0, kInfinity);
        const TmbhParams back = to_tmbh_general(P, s0, N);
        CAPTURE(eps_hz);
        CAPTURE(s0.n0);
        CAPTURE(s0.phi0);
        CHECK(close(back.J, p.J, 1e-10));
        CHECK(close(back.Lambda(), p.Lambda(), 1e-10));
        CHECK(close(back.U, p.U, 1e-10));
        CHECK(std::abs(back.epsilon - p.epsilon) <= 1e-10 * p.J);
      }
    }
  }
  SUBCASE("pendulum -> TMBH -> pendulum is the identity") {
    const InitialState s0{0.04, 0.9};
    const auto p = TmbhParams::from_lambda(two_pi * 22, 90, 3500, two_pi * 30.0);
    const PendulumParams P = to_pendulum(p, s0, kInfinity);
    const PendulumParams Q = to_pendulum(to_tmbh_general(P, s0, 3500), s0, kInfinity);
    CHECK(close(Q.k0, P.k0, 1e-10));
    CHECK(close(Q.omega0, P.omega0, 1e-10));
    CHECK(close(Q.N0, P.N0, 1e-10));
    CHECK(std::abs(Q.delta_n - P.delta_n) < 1e-12);
    CHECK(std::abs(Q.delta_phi - P.delta_phi) < 1e-10);
  }
  SUBCASE("n0 = delta_n reduces exactly to the simplified map") {
    PendulumParams P = reference_pendulum();
    const InitialState s0{P.delta_n, 1.0};
    P.k0 = std::sin(0.5);
    const TmbhParams g = to_tmbh_general(P, s0, 3500);
    const TmbhParams s = to_tmbh_simplified(P, 3500, s0.lambda());
    CHECK(close(g.J, s.J, 1e-13));
    CHECK(close(g.Lambda(), s.Lambda(), 1e-13));
    CHECK(close(g.epsilon, s.epsilon, 1e-13));
  }
}

TEST_CASE("general and simplified maps agree on self-consistent parameters") {
  for (double eps_hz : {0.0, 0.5, 5.0}) {
    auto p = TmbhParams::from_lambda(two_pi * 50, 40, 5000, two_pi * eps_hz);
    const InitialState s0{0.03, 0.9};
    const PendulumParams P = to_pendulum(p, s0, kInfinity);
    const TmbhParams g = to_tmbh_general(P, s0, 5000);
    const TmbhParams s = to_tmbh_simplified(P, 5000, s0.lambda());
    CHECK(close(g.J, s.J, 1e-12));
    CHECK(close(g.Lambda(), s.Lambda(), 1e-12));
    CHECK(std::abs(g.epsilon - s.epsilon) < 1e-12 * g.J);
  }
  // Inconsistent inputs (k0 not matching the state) separate the two maps.
  PendulumParams P = reference_pendulum();
  const InitialState s0{0.02, 0.9};
  CHECK_FALSE(close(to_tmbh_general(P, s0, 3500).J, to_tmbh_simplified(P, 3500, s0.lambda()).J, 1e-3));
}

TEST_CASE("degeneracy handling") {
  PendulumParams P = reference_pendulum();
  CHECK_THROWS_AS(to_tmbh_general(P, {0.01, 0.0}, 3500), DegeneracyError);
  const auto conv = to_tmbh(P, InitialState{0.01, 0.0}, 3500);
  CHECK_FALSE(conv.used_general_map);
  CHECK_FALSE(conv.warning.empty());
  CHECK(close(conv.params.J, to_tmbh_simplified(P, 3500, 1.0).J, 1e-15));

  const auto none = to_tmbh(P, std::nullopt, 3500);
  CHECK_FALSE(none.used_general_map);
  CHECK(none.warning.empty());

  const auto p = TmbhParams::from_lambda(two_pi * 50, 40, 5000);
  const InitialState s0{0.05, 0.7};
  const auto ok = to_tmbh(to_pendulum(p, s0, kInfinity), s0, 5000);
  CHECK(ok.used_general_map);
  CHECK(close(ok.params.Lambda(), 40.0, 1e-10));
}

TEST_CASE("approximate lambda option") {
  const auto p = TmbhParams::from_lambda(two_pi * 50, 40, 5000);
  const InitialState s0{0.0, 0.8 * pi};
  const PendulumParams exact = to_pendulum(p, s0, kInfinity);
  const PendulumParams approx = to_pendulum(p, s0, kInfinity, MapOptions{true});
  CHECK(approx.omega0 == doctest::Approx(2 * p.J * std::sqrt(41.0)).epsilon(1e-14));
  CHECK(exact.omega0 < approx.omega0);
}

TEST_CASE("finite tau passes through and is derived from eta") {
  const auto p = TmbhParams::from_lambda(two_pi * 100, 20, 5000, 0.0, 120);
  const InitialState s0{0.15, -pi};
  const PendulumParams P = to_pendulum(p, s0);
  CHECK(P.tau == doctest::Approx(decay_time(p, s0)).epsilon(1e-15));
  CHECK(P.tau * 1e3 == doctest::Approx(3.49).epsilon(2e-3));
  CHECK(to_pendulum(p, s0, 0.5).tau == 0.5);
  CHECK(P.omega0 == doctest::Approx(2 * p.J * std::sqrt(19.0)));
}
