#pragma once

// Closed-form pendulum solutions of the junction dynamics: undamped
// (symmetric and detuned), heuristic damped forms, regime classification and
// the rigid-pendulum validity check.

#include <optional>

#include "bjj/types.hpp"

namespace bjj::analytic {

/// Plasma frequency 2J sqrt(Lambda + cos(phi0)), rad/s.  Throws DomainError if
/// Lambda + cos(phi0) <= 0 (inverted pendulum).
double plasma_frequency(double J, double Lambda, double phi0);

/// phidot(0) = eps + 2J (Lambda + lambda) n0.
double initial_phase_velocity(const InitialState& s0, const TmbhParams& p);

/// Energy ratio k0 = sqrt(phidot0^2 + 4 w^2 sin^2(phi0/2)) / (2w) with w the
/// damped frequency for decay time `tau` (w = omega0 when tau is infinite).
double energy_ratio_k(const InitialState& s0, const TmbhParams& p, double tau = kInfinity);

/// Dephasing inv_sn(sin(phi0/2) | k^-2).
double dephasing(double phi0, double k);

/// 2 sigma0 am(k0 omega0 t + dphi | k0^-2).
double phi_undamped(double t, const PendulumParams& P);

/// sigma0 N0 dn(k0 omega0 t + dphi | k0^-2) + delta_n - nbar.
double n_undamped(double t, const PendulumParams& P);

/// Mean imbalance: 0 for k <= 1, N0 (sqrt(1 - k^-2) + 1) / 2 for k > 1.
double mean_imbalance(double N0, double k);

/// Both one-sided limits of mean_imbalance at k = 1 (it jumps there).
struct OneSided {
  double below;
  double above;
};
OneSided mean_imbalance_at_separatrix(double N0);

/// Default half-width of the band excluded around the separatrix crossing.
double default_guard(const PendulumParams& P);

/// Exponentially damped amplitude form
///   phi(t) = 2 sigma0 am((w k0 t + dphi) e^{-t/tau} | k0^-2 e^{2t/tau}).
/// Throws GuardBandError within `guard` (default 2% of tau) of tau ln(k0) when k0 > 1.
double phi_damped(double t, const PendulumParams& P, std::optional<double> guard = std::nullopt);

/// Two-timescale form used right after the separatrix crossing:
///   phi(t) = 2 sigma0 asin(k0 e^{-t/tau}) / (k0 e^{-t/tau2})
///            * sn((w k0 t + dphi) e^{-t/tau2} | k0^-2 e^{2t/tau2}).
/// Throws DomainError if k0 e^{-t/tau} > 1.
double phi_damped_large(double t, const PendulumParams& P);

/// tau ln(k0); DomainError unless k0 > 1 and tau finite.
double separatrix_crossing_time(double k0, double tau);

enum class Branch { Equilibrium, Damped, Bridge, DampedLarge };

struct PhaseImbalance {
  double phi;
  double n;
  Branch branch;
};

/// Which formula evaluate_piecewise uses at time t.
Branch active_branch(double t, const PendulumParams& P, std::optional<double> guard = std::nullopt);

/// Piecewise damped solution.  For k0 <= 1 (or undamped) this is phi_damped
/// everywhere.  For k0 > 1 it uses phi_damped before t_c - guard, a linear
/// bridge across [t_c - guard, t_c + guard], phi_damped_large afterwards until
/// k0 e^{-t/tau} < 0.5, then phi_damped again.  The bridge starts from the
/// left-edge phase shifted by a multiple of 2 pi to lie within pi of the
/// right-edge phase, so the returned phase is continuous modulo 2 pi.
PhaseImbalance evaluate_piecewise(double t, const PendulumParams& P,
                                  std::optional<double> guard = std::nullopt);

/// n(t) = N0 phidot(t) / (2 w k0) + delta_n, with phidot from a 5-point
/// central difference (h = 1e-4 / w) of the branch active at t.
double n_damped(double t, const PendulumParams& P, std::optional<double> guard = std::nullopt);

/// Equilibrium (k = 0), oscillation (0 < k < 1), separatrix (|k - 1| <= 1e-9)
/// or self-trapping (k > 1).
Regime classify_regime(double k);

inline constexpr double kRigidityThreshold = 0.05;

struct RigidityResult {
  double delta;
  bool ok;
};

/// Largest relative variation of the pendulum length sqrt(1 - n^2) over the
/// motion; ok when |delta| <= kRigidityThreshold.
RigidityResult rigidity_check(const PendulumParams& P, Regime regime);

}  // namespace bjj::analytic
