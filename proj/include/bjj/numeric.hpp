#pragma once

// Reference numerical solutions: direct integration of the mean-field
// two-mode Bose-Hubbard equations and of the (damped) rigid pendulum.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bjj/types.hpp"

namespace bjj::numeric {

/// Relative and absolute tolerance used by every integration in this module.
inline constexpr double kRelTol = 1e-10;
inline constexpr double kAbsTol = 1e-12;

struct TmbhRate {
  double dn;    ///< dn/dt, 1/s
  double dphi;  ///< dphi/dt, rad/s
};

/// Right-hand side of the damped TMBH equations of motion.
///
///   dphi/dt = eps + 2J [Lambda n + n cos(phi) / sqrt(1 - n^2)]
///   dn/dt   = -2J sqrt(1 - n^2) sin(phi) - (eta / N) dphi/dt
///
/// Throws SingularityError when |n| >= 1 - 1e-12.
TmbhRate tmbh_rhs(double n, double phi, const TmbhParams& p);

/// Conserved quantity of the undamped symmetric junction,
/// alpha = Lambda n^2 / 2 - sqrt(1 - n^2) cos(phi).
double alpha_invariant(double n, double phi, double Lambda);

/// Pendulum energy phidot^2 + 4 omega0^2 sin^2(phi / 2), rad^2/s^2.
double pendulum_energy(double phi, double dphi, double omega0);

/// Integrates the TMBH equations on `grid` (strictly increasing, starting at 0).
Trajectory integrate_tmbh(const TmbhParams& p, const InitialState& s0, std::span<const double> grid);

struct PendulumState {
  double phi0 = 0.0;
  double dphi0 = 0.0;
};

/// Integrates phi'' + (2/tau) phi' + omega0^2 sin(phi) = 0 (tau may be infinite).
///
/// When `context` is given, the imbalance track is n = phidot / (2J(Lambda+lambda))
/// with lambda = cos(phi0); otherwise n is filled with NaN.  `dphi` is always filled.
Trajectory integrate_pendulum(double omega0, double tau, const PendulumState& s0,
                              std::span<const double> grid,
                              const std::optional<TmbhParams>& context = std::nullopt);

/// Generic 2-D autonomous system integrated with the same stepper.  `grid` must
/// be strictly monotonic (either direction) and start at the initial time.
/// When `angle` names a component on which `rhs` is 2 pi periodic, that
/// component is integrated modulo 2 pi and unwrapped on output.
using State2 = std::array<double, 2>;
using Rhs2 = std::function<State2(const State2&)>;
std::vector<State2> integrate_system(const Rhs2& rhs, const State2& y0, std::span<const double> grid,
                                     std::optional<std::size_t> angle = std::nullopt);

/// Uniform grid of `n_points` samples on [0, t_end].
std::vector<double> linspace_grid(double t_end, std::size_t n_points);

}  // namespace bjj::numeric
