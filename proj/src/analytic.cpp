#include "bjj/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bjj/elliptic.hpp"
#include "bjj/errors.hpp"
#include "bjj/param_map.hpp"

namespace bjj::analytic {

namespace {

// Below this instantaneous energy ratio the motion is numerically at rest.
constexpr double kNegligibleK = 1e-150;
constexpr double kDefaultGuardFraction = 0.02;
constexpr double kLargeBranchExitK = 0.5;

struct Argument {
  double u;    // elliptic argument
  double m;    // elliptic parameter k_t^-2
  double k_t;  // instantaneous energy ratio
};

// (w k0 t + dphi) e^{-t/decay} and k0^-2 e^{2t/decay}.  An infinite decay
// time gives exactly the undamped argument.
Argument elliptic_argument(double t, double k0, double w, double delta_phi, double decay) {
  const double factor = std::exp(-t / decay);
  const double k_t = k0 * factor;
  return {(w * k0 * t + delta_phi) * factor, 1.0 / (k_t * k_t), k_t};
}

double two_am(const Argument& a, int sigma0) {
  if (!(a.k_t > kNegligibleK)) return 0.0;
  return 2.0 * sigma0 * elliptic::jacobi_am(a.u, a.m);
}

void check_params(const PendulumParams& P) {
  if (!(P.k0 >= 0.0) || !(P.omega0 > 0.0) || !(P.tau > 0.0) || (P.sigma0 != 1 && P.sigma0 != -1)) {
    throw DomainError("pendulum parameters require k0 >= 0, omega0 > 0, tau > 0, sigma0 = +-1");
  }
}

double phi_damped_raw(double t, const PendulumParams& P) {
  const double w = param_map::damped_frequency(P.omega0, P.tau);
  return two_am(elliptic_argument(t, P.k0, w, P.delta_phi, P.tau), P.sigma0);
}

double phi_damped_large_raw(double t, const PendulumParams& P) {
  const double envelope_k = P.k0 * std::exp(-t / P.tau);
  if (envelope_k > 1.0 + 1e-12) {
    throw DomainError("two-timescale branch requires k0 exp(-t/tau) <= 1");
  }
  const double w = param_map::damped_frequency(P.omega0, P.tau);
  const Argument a = elliptic_argument(t, P.k0, w, P.delta_phi, P.tau2_or_tau());
  if (!(a.k_t > kNegligibleK) || !(envelope_k > kNegligibleK)) return 0.0;
  const double envelope = 2.0 * P.sigma0 * std::asin(std::min(envelope_k, 1.0));
  return envelope / a.k_t * elliptic::jacobi_sn_cn_dn(a.u, a.m).sn;
}

double guard_width(const PendulumParams& P, std::optional<double> guard) {
  const double g = guard.value_or(default_guard(P));
  if (!(g > 0.0)) throw DomainError("guard band width must be > 0");
  return g;
}

struct BridgeLine {
  double t_left;
  double phi_left;
  double slope;
};

BridgeLine bridge_line(const PendulumParams& P, double g) {
  const double tc = separatrix_crossing_time(P.k0, P.tau);
  const double right = phi_damped_large_raw(tc + g, P);
  double left = phi_damped_raw(tc - g, P);
  const double two_pi = 2.0 * std::numbers::pi;
  left -= two_pi * std::round((left - right) / two_pi);
  return {tc - g, left, (right - left) / (2.0 * g)};
}

double branch_phase(Branch branch, double t, const PendulumParams& P, double g) {
  switch (branch) {
    case Branch::Equilibrium: return 0.0;
    case Branch::Damped: return phi_damped_raw(t, P);
    case Branch::DampedLarge: return phi_damped_large_raw(t, P);
    case Branch::Bridge: {
      const BridgeLine line = bridge_line(P, g);
      return line.phi_left + line.slope * (t - line.t_left);
    }
  }
  return 0.0;
}

}  // namespace

double plasma_frequency(double J, double Lambda, double phi0) {
  const double stiffness = Lambda + std::cos(phi0);
  if (!(stiffness > 0.0)) {
    throw DomainError("plasma frequency requires Lambda + cos(phi0) > 0 (inverted pendulum)");
  }
  return 2.0 * J * std::sqrt(stiffness);
}

double initial_phase_velocity(const InitialState& s0, const TmbhParams& p) {
  return p.epsilon + 2.0 * p.J * (p.Lambda() + s0.lambda()) * s0.n0;
}

double energy_ratio_k(const InitialState& s0, const TmbhParams& p, double tau) {
  const double omega0 = plasma_frequency(p.J, p.Lambda(), s0.phi0);
  const double w = param_map::damped_frequency(omega0, tau);
  return std::hypot(initial_phase_velocity(s0, p) / (2.0 * w), std::sin(0.5 * s0.phi0));
}

double dephasing(double phi0, double k) {
  const double s = std::sin(0.5 * phi0);
  if (!(k >= 0.0)) throw DomainError("dephasing requires k >= 0");
  if (std::abs(s) > std::min(1.0, k) * (1.0 + 1e-12)) {
    throw DomainError("dephasing: |sin(phi0/2)| exceeds the oscillation bound min(1, k)");
  }
  if (k == 0.0) return 0.0;
  return elliptic::inv_sn(s, 1.0 / (k * k));
}

double phi_undamped(double t, const PendulumParams& P) {
  check_params(P);
  return two_am(elliptic_argument(t, P.k0, P.omega0, P.delta_phi, kInfinity), P.sigma0);
}

double n_undamped(double t, const PendulumParams& P) {
  check_params(P);
  const Argument a = elliptic_argument(t, P.k0, P.omega0, P.delta_phi, kInfinity);
  if (!(a.k_t > kNegligibleK)) return P.delta_n;
  const double dn = elliptic::jacobi_sn_cn_dn(a.u, a.m).dn;
  return P.sigma0 * P.N0 * dn + P.delta_n - mean_imbalance(P.N0, P.k0);
}

double mean_imbalance(double N0, double k) {
  if (k <= 1.0) return 0.0;
  return 0.5 * N0 * (std::sqrt(1.0 - 1.0 / (k * k)) + 1.0);
}

OneSided mean_imbalance_at_separatrix(double N0) { return {0.0, 0.5 * N0}; }

double default_guard(const PendulumParams& P) { return kDefaultGuardFraction * P.tau; }

double separatrix_crossing_time(double k0, double tau) {
  if (!(k0 > 1.0)) throw DomainError("separatrix crossing only exists for k0 > 1");
  if (!std::isfinite(tau) || !(tau > 0.0)) throw DomainError("separatrix crossing needs a finite tau > 0");
  return tau * std::log(k0);
}

double phi_damped(double t, const PendulumParams& P, std::optional<double> guard) {
  check_params(P);
  if (P.k0 > 1.0 && P.damped()) {
    const double g = guard_width(P, guard);
    if (std::abs(t - separatrix_crossing_time(P.k0, P.tau)) < g) {
      throw GuardBandError("t=" + std::to_string(t) +
                           " lies inside the separatrix guard band; use evaluate_piecewise");
    }
  }
  return phi_damped_raw(t, P);
}

double phi_damped_large(double t, const PendulumParams& P) {
  check_params(P);
  return phi_damped_large_raw(t, P);
}

Branch active_branch(double t, const PendulumParams& P, std::optional<double> guard) {
  check_params(P);
  if (P.k0 == 0.0) return Branch::Equilibrium;
  if (!P.damped() || P.k0 <= 1.0) return Branch::Damped;
  const double g = guard_width(P, guard);
  const double tc = separatrix_crossing_time(P.k0, P.tau);
  if (t < tc - g) return Branch::Damped;
  if (t <= tc + g) return Branch::Bridge;
  if (P.k0 * std::exp(-t / P.tau) >= kLargeBranchExitK) return Branch::DampedLarge;
  return Branch::Damped;
}

double n_damped(double t, const PendulumParams& P, std::optional<double> guard) {
  const Branch branch = active_branch(t, P, guard);
  if (branch == Branch::Equilibrium) return P.delta_n;
  const double w = param_map::damped_frequency(P.omega0, P.tau);
  const double g = branch == Branch::Bridge ? guard_width(P, guard) : 0.0;
  double dphi = 0.0;
  if (branch == Branch::Bridge) {
    dphi = bridge_line(P, g).slope;
  } else {
    const double h = 1e-4 / w;
    auto f = [&](double s) { return branch_phase(branch, s, P, g); };
    dphi = (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h);
  }
  return P.N0 / (2.0 * w * P.k0) * dphi + P.delta_n;
}

PhaseImbalance evaluate_piecewise(double t, const PendulumParams& P, std::optional<double> guard) {
  const Branch branch = active_branch(t, P, guard);
  const double g = branch == Branch::Bridge ? guard_width(P, guard) : 0.0;
  return {branch_phase(branch, t, P, g), n_damped(t, P, guard), branch};
}

Regime classify_regime(double k) {
  if (!(k >= 0.0)) throw DomainError("classify_regime requires k >= 0");
  if (k == 0.0) return Regime::Equilibrium;
  if (std::abs(k - 1.0) <= 1e-9) return Regime::Separatrix;
  return k < 1.0 ? Regime::JosephsonOscillation : Regime::SelfTrapped;
}

RigidityResult rigidity_check(const PendulumParams& P, Regime regime) {
  const double outer = P.N0 + P.delta_n;
  if (!(P.N0 + std::abs(P.delta_n) <= 1.0)) {
    throw DomainError("rigidity check requires N0 + |delta_n| <= 1");
  }
  const double longest = std::sqrt(1.0 - outer * outer);
  double delta = 0.0;
  if (regime == Regime::SelfTrapped) {
    const double inner = P.N0 * std::sqrt(1.0 - 1.0 / (P.k0 * P.k0)) + P.delta_n;
    delta = longest - std::sqrt(1.0 - inner * inner);
  } else {
    delta = longest - std::sqrt(1.0 - P.delta_n * P.delta_n);
  }
  return {delta, std::abs(delta) <= kRigidityThreshold};
}

}  // namespace bjj::analytic
