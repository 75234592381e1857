#pragma once

// Conversions between the observable pendulum parameters and the TMBH
// parameters, plus the frequency relations shared by both sides.

#include <optional>
#include <string>

#include "bjj/types.hpp"

namespace bjj::param_map {

/// sqrt(omega0^2 - 1/tau^2); returns omega0 for infinite tau.
/// Throws DomainError when omega0 tau <= 1 (overdamped).
double damped_frequency(double omega0, double tau);

/// First-order anharmonic frequency omega0 (1 - Phi0^2 / 16) for phase amplitude Phi0.
double corrected_frequency(double omega0, double Phi0);

/// Decay time from 2/tau = 2J (eta/N) (Lambda + lambda); infinite when eta = 0.
double decay_time(const TmbhParams& p, const InitialState& s0);

/// eta = N N0 / (k0 tau omega0); 0 for infinite tau.
double viscosity_eta(const PendulumParams& P, double N);

struct MapOptions {
  /// Use lambda = 1 instead of cos(phi0).
  bool approximate_lambda = false;
};

/// General map using the initial state.  Throws DegeneracyError when
/// sin(phi0/2) = 0 or N0^2 = (n0 - delta_n)^2.
TmbhParams to_tmbh_general(const PendulumParams& P, const InitialState& s0, double N,
                           const MapOptions& opts = {});

/// Small-detuning map J = omega0 N0 / (4 k0), Lambda = 4 k0^2 / N0^2 - lambda,
/// eps = -2 omega0 k0 delta_n / N0.  Throws DegeneracyError when k0 or N0 is 0.
TmbhParams to_tmbh_simplified(const PendulumParams& P, double N, double lambda = 1.0);

struct Conversion {
  TmbhParams params;
  bool used_general_map = false;
  std::string warning;
};

/// General map when an initial state is available and non-degenerate,
/// otherwise the simplified map (with a warning when falling back).
Conversion to_tmbh(const PendulumParams& P, const std::optional<InitialState>& s0, double N,
                   const MapOptions& opts = {});

/// Assembles omega0, k0, N0, delta_n, dephasing and sigma0 from TMBH
/// parameters and an initial state.  `tau` is passed through; the overload
/// without it derives tau from eta.
PendulumParams to_pendulum(const TmbhParams& p, const InitialState& s0, double tau,
                           const MapOptions& opts = {});
PendulumParams to_pendulum(const TmbhParams& p, const InitialState& s0, const MapOptions& opts = {});

}  // namespace bjj::param_map
