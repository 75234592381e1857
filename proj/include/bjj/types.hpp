#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace bjj {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Unit convention: every energy is stored as an angular frequency E/hbar in
// rad/s and every time in seconds.  Only reporting code converts to Hz or ms.

/// Mean-field two-mode Bose-Hubbard parameters.
struct TmbhParams {
  double J = 0.0;        ///< tunnel coupling, rad/s
  double U = 0.0;        ///< on-site interaction, rad/s
  double N = 0.0;        ///< total atom number
  double epsilon = 0.0;  ///< detuning E_L - E_R, rad/s
  double eta = 0.0;      ///< dimensionless viscosity

  /// Interaction-to-tunnelling ratio N U / 2J.
  [[nodiscard]] double Lambda() const { return N * U / (2.0 * J); }

  /// Throws DomainError unless J > 0, U >= 0, N >= 2, eta >= 0.
  void validate() const;

  /// Builds parameters from Lambda instead of U.
  static TmbhParams from_lambda(double J, double Lambda, double N, double epsilon = 0.0,
                                double eta = 0.0);
};

/// Initial imbalance and relative phase.
struct InitialState {
  double n0 = 0.0;
  double phi0 = 0.0;

  /// cos(phi0), the pendulum-length correction appearing next to Lambda.
  [[nodiscard]] double lambda() const { return std::cos(phi0); }
  void validate() const;
};

enum class TrajectorySource { NumericTmbh, NumericPendulum, Analytic };

std::string_view to_string(TrajectorySource source);

struct Trajectory {
  std::vector<double> times;
  std::vector<double> phi;
  std::vector<double> n;
  /// Phase velocity samples; filled by the pendulum integrator, empty otherwise.
  std::vector<double> dphi;
  TrajectorySource source = TrajectorySource::Analytic;

  [[nodiscard]] std::size_t size() const { return times.size(); }
};

/// Observable ("data-side") parameters of the pendulum solutions.
struct PendulumParams {
  double k0 = 0.0;              ///< energy ratio
  double omega0 = 0.0;          ///< plasma frequency, rad/s
  double N0 = 0.0;              ///< undamped imbalance amplitude
  double tau = kInfinity;       ///< amplitude decay time, s
  std::optional<double> tau2;   ///< frequency-recovery time, s; defaults to tau
  double delta_phi = 0.0;       ///< dephasing (elliptic argument)
  double delta_n = 0.0;         ///< equilibrium imbalance offset
  int sigma0 = 1;               ///< +1 or -1

  [[nodiscard]] double tau2_or_tau() const { return tau2.value_or(tau); }
  [[nodiscard]] bool damped() const { return std::isfinite(tau); }
};

enum class Regime { Equilibrium, JosephsonOscillation, Separatrix, SelfTrapped };

std::string_view to_string(Regime regime);

}  // namespace bjj
