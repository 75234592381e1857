#include "bjj/param_map.hpp"

#include <cmath>
#include <numbers>

#include "bjj/analytic.hpp"
#include "bjj/errors.hpp"

namespace bjj::param_map {

namespace {

double lambda_of(const InitialState& s0, const MapOptions& opts) {
  return opts.approximate_lambda ? 1.0 : s0.lambda();
}

// Relative size below which a denominator counts as exactly degenerate.
constexpr double kDegenerateTol = 1e-14;

}  // namespace

double damped_frequency(double omega0, double tau) {
  if (!std::isfinite(tau)) return omega0;
  if (!(omega0 * tau > 1.0)) {
    throw DomainError("overdamped: omega0 * tau must exceed 1");
  }
  return std::sqrt(omega0 * omega0 - 1.0 / (tau * tau));
}

double corrected_frequency(double omega0, double Phi0) {
  if (!(Phi0 >= 0.0)) throw DomainError("phase amplitude must be >= 0");
  return omega0 * (1.0 - Phi0 * Phi0 / 16.0);
}

double decay_time(const TmbhParams& p, const InitialState& s0) {
  if (p.eta == 0.0) return kInfinity;
  return p.N / (p.J * p.eta * (p.Lambda() + s0.lambda()));
}

double viscosity_eta(const PendulumParams& P, double N) {
  if (!std::isfinite(P.tau)) return 0.0;
  return N * P.N0 / (P.k0 * P.tau * P.omega0);
}

TmbhParams to_tmbh_general(const PendulumParams& P, const InitialState& s0, double N,
                           const MapOptions& opts) {
  const double s = std::abs(std::sin(0.5 * s0.phi0));
  const double offset = s0.n0 - P.delta_n;
  // N0^2 = (n0 - delta_n)^2 + 4 sin^2(phi0/2) / (Lambda + lambda).
  const double gap = std::abs(P.N0 * P.N0 - offset * offset);
  if (s <= kDegenerateTol) {
    throw DegeneracyError("general map is degenerate for sin(phi0/2) = 0; use the simplified map or refit");
  }
  if (gap <= kDegenerateTol * P.N0 * P.N0) {
    throw DegeneracyError("general map is degenerate for N0^2 = (n0 - delta_n)^2; use the simplified map or refit");
  }
  const double root_gap = std::sqrt(gap);
  const double stiffness = 4.0 * s * s / gap;  // Lambda + lambda
  TmbhParams p;
  p.N = N;
  p.J = P.omega0 * root_gap / (4.0 * s);
  const double Lambda = stiffness - lambda_of(s0, opts);
  p.U = 2.0 * p.J * Lambda / N;
  p.epsilon = -2.0 * P.omega0 * s * P.delta_n / root_gap;
  p.eta = viscosity_eta(P, N);
  return p;
}

TmbhParams to_tmbh_simplified(const PendulumParams& P, double N, double lambda) {
  if (!(P.k0 > 0.0) || !(P.N0 > 0.0)) {
    throw DegeneracyError("simplified map needs k0 > 0 and N0 > 0");
  }
  TmbhParams p;
  p.N = N;
  p.J = 0.5 * P.omega0 * P.N0 / (2.0 * P.k0);
  const double Lambda = 4.0 * P.k0 * P.k0 / (P.N0 * P.N0) - lambda;
  p.U = 2.0 * p.J * Lambda / N;
  p.epsilon = -2.0 * P.omega0 * P.k0 / P.N0 * P.delta_n;
  p.eta = viscosity_eta(P, N);
  return p;
}

Conversion to_tmbh(const PendulumParams& P, const std::optional<InitialState>& s0, double N,
                   const MapOptions& opts) {
  if (s0) {
    try {
      return {to_tmbh_general(P, *s0, N, opts), true, {}};
    } catch (const DegeneracyError& e) {
      return {to_tmbh_simplified(P, N, lambda_of(*s0, opts)), false,
              std::string("fell back to the simplified map: ") + e.what()};
    }
  }
  return {to_tmbh_simplified(P, N, 1.0), false, {}};
}

PendulumParams to_pendulum(const TmbhParams& p, const InitialState& s0, double tau,
                           const MapOptions& opts) {
  p.validate();
  s0.validate();
  const double lambda = lambda_of(s0, opts);
  const double stiffness = p.Lambda() + lambda;
  if (!(stiffness > 0.0)) {
    throw DomainError("Lambda + lambda must be > 0 (inverted pendulum)");
  }
  PendulumParams P;
  P.omega0 = 2.0 * p.J * std::sqrt(stiffness);
  P.tau = tau;
  P.delta_n = -p.epsilon / (2.0 * p.J * stiffness);
  const double offset = s0.n0 - P.delta_n;
  const double phase_velocity = 2.0 * p.J * stiffness * offset;
  const double w = damped_frequency(P.omega0, tau);
  const double phi0 = std::remainder(s0.phi0, 2.0 * std::numbers::pi);
  P.k0 = std::hypot(phase_velocity / (2.0 * w), std::sin(0.5 * phi0));
  P.N0 = 2.0 * P.k0 / std::sqrt(stiffness);
  P.sigma0 = offset < 0.0 ? -1 : 1;
  // Evaluate with sigma0 * phi0 so that phi(0) reproduces phi0 for either sign.
  P.delta_phi = analytic::dephasing(P.sigma0 * phi0, P.k0);
  return P;
}

PendulumParams to_pendulum(const TmbhParams& p, const InitialState& s0, const MapOptions& opts) {
  return to_pendulum(p, s0, decay_time(p, s0), opts);
}

}  // namespace bjj::param_map
