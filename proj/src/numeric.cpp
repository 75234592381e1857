#include "bjj/numeric.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "bjj/errors.hpp"

namespace bjj {

void TmbhParams::validate() const {
  if (!(J > 0.0) || !(U >= 0.0) || !(N >= 2.0) || !(eta >= 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("TMBH parameters require J > 0, U >= 0, N >= 2, eta >= 0");
  }
}

TmbhParams TmbhParams::from_lambda(double J, double Lambda, double N, double epsilon, double eta) {
  return TmbhParams{J, 2.0 * J * Lambda / N, N, epsilon, eta};
}

void InitialState::validate() const {
  if (!(std::abs(n0) < 1.0) || !std::isfinite(phi0)) {
    throw DomainError("initial imbalance must satisfy |n0| < 1");
  }
}

std::string_view to_string(TrajectorySource source) {
  switch (source) {
    case TrajectorySource::NumericTmbh: return "numeric-tmbh";
    case TrajectorySource::NumericPendulum: return "numeric-pendulum";
    case TrajectorySource::Analytic: return "analytic";
  }
  return "unknown";
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Equilibrium: return "equilibrium";
    case Regime::JosephsonOscillation: return "josephson-oscillation";
    case Regime::Separatrix: return "separatrix";
    case Regime::SelfTrapped: return "self-trapped";
  }
  return "unknown";
}

}  // namespace bjj

namespace bjj::numeric {

namespace odeint = boost::numeric::odeint;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMaxStepsPerSample = 1'000'000;

void check_grid(std::span<const double> grid, bool require_zero_start) {
  if (grid.empty()) throw DomainError("time grid is empty");
  if (require_zero_start && grid.front() != 0.0) throw DomainError("time grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw DomainError("time grid must be strictly increasing");
  }
}

}  // namespace

TmbhRate tmbh_rhs(double n, double phi, const TmbhParams& p) {
  if (!(std::abs(n) < 1.0 - 1e-12)) {
    throw SingularityError("pendulum length collapsed: |n| reached 1 (n=" + std::to_string(n) + ")");
  }
  const double length = std::sqrt(1.0 - n * n);
  const double dphi = p.epsilon + 2.0 * p.J * (p.Lambda() * n + n * std::cos(phi) / length);
  const double dn = -2.0 * p.J * length * std::sin(phi) - (p.eta / p.N) * dphi;
  return {dn, dphi};
}

double alpha_invariant(double n, double phi, double Lambda) {
  if (!(std::abs(n) < 1.0)) throw DomainError("alpha_invariant requires |n| < 1");
  return 0.5 * Lambda * n * n - std::sqrt(1.0 - n * n) * std::cos(phi);
}

double pendulum_energy(double phi, double dphi, double omega0) {
  const double s = std::sin(0.5 * phi);
  return dphi * dphi + 4.0 * omega0 * omega0 * s * s;
}

std::vector<State2> integrate_system(const Rhs2& rhs, const State2& y0, std::span<const double> grid,
                                     std::optional<std::size_t> angle) {
  if (grid.empty()) throw DomainError("time grid is empty");
  if (angle && *angle > 1) throw DomainError("angle index must be 0 or 1");
  std::vector<State2> out;
  out.reserve(grid.size());
  if (grid.size() == 1) {
    out.push_back(y0);
    return out;
  }
  const double span = grid.back() - grid.front();
  const double dt0 = (grid[1] - grid[0]) * 1e-2;
  if (dt0 == 0.0 || !std::isfinite(span)) throw DomainError("degenerate time grid");
  const double dir = dt0 > 0.0 ? 1.0 : -1.0;

  auto system = [&rhs](const State2& x, State2& dxdt, double /*t*/) { dxdt = rhs(x); };
  // Error norm atol + rtol |x| (odeint's default also adds dt |dx/dt|).
  using Controlled = odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<State2>>;
  odeint::dense_output_runge_kutta<Controlled> stepper{
      Controlled(Controlled::error_checker_type(kAbsTol, kRelTol, 1.0, 0.0))};

  // The angle is integrated modulo 2 pi; `offset` holds the removed turns so
  // the tolerance never scales with the accumulated phase.
  double offset = 0.0;
  State2 start = y0;
  if (angle) {
    offset = kTwoPi * std::round(start[*angle] / kTwoPi);
    start[*angle] -= offset;
  }
  try {
    stepper.initialize(start, grid.front(), dt0);
    out.push_back(y0);
    std::size_t i = 1;
    std::size_t steps = 0;
    while (i < grid.size()) {
      stepper.do_step(system);
      if (++steps > kMaxStepsPerSample) {
        throw IntegrationError("integrator exceeded the step budget between two output times");
      }
      // Emit every sample inside the step just taken before any re-wrap
      // discards its interpolant.
      while (i < grid.size() && dir * (grid[i] - stepper.current_time()) <= 0.0) {
        State2 x;
        stepper.calc_state(grid[i], x);
        if (angle) x[*angle] += offset;
        out.push_back(x);
        ++i;
        steps = 0;
      }
      if (angle) {
        State2 x = stepper.current_state();
        if (std::abs(x[*angle]) > std::numbers::pi) {
          const double turns = kTwoPi * std::round(x[*angle] / kTwoPi);
          x[*angle] -= turns;
          offset += turns;
          stepper.initialize(x, stepper.current_time(), stepper.current_time_step());
        }
      }
    }
  } catch (const odeint::odeint_error& e) {
    throw IntegrationError(std::string("integration failed: ") + e.what());
  }
  for (const auto& x : out) {
    if (!std::isfinite(x[0]) || !std::isfinite(x[1])) throw IntegrationError("integration produced non-finite values");
  }
  return out;
}

Trajectory integrate_tmbh(const TmbhParams& p, const InitialState& s0, std::span<const double> grid) {
  p.validate();
  s0.validate();
  check_grid(grid, true);
  const auto states = integrate_system(
      [&p](const State2& y) {
        const TmbhRate r = tmbh_rhs(y[0], y[1], p);
        return State2{r.dn, r.dphi};
      },
      State2{s0.n0, s0.phi0}, grid, 1);

  Trajectory traj;
  traj.source = TrajectorySource::NumericTmbh;
  traj.times.assign(grid.begin(), grid.end());
  traj.n.reserve(states.size());
  traj.phi.reserve(states.size());
  for (const auto& y : states) {
    traj.n.push_back(y[0]);
    traj.phi.push_back(y[1]);
  }
  return traj;
}

Trajectory integrate_pendulum(double omega0, double tau, const PendulumState& s0,
                              std::span<const double> grid, const std::optional<TmbhParams>& context) {
  if (!(omega0 > 0.0)) throw DomainError("integrate_pendulum requires omega0 > 0");
  if (!(tau > 0.0)) throw DomainError("integrate_pendulum requires tau > 0 (or infinite)");
  check_grid(grid, true);
  const double friction = std::isfinite(tau) ? 2.0 / tau : 0.0;
  const double w2 = omega0 * omega0;
  const auto states = integrate_system(
      [friction, w2](const State2& y) {
        return State2{y[1], -friction * y[1] - w2 * std::sin(y[0])};
      },
      State2{s0.phi0, s0.dphi0}, grid, 0);

  double rate = std::numeric_limits<double>::quiet_NaN();
  if (context) {
    context->validate();
    rate = 2.0 * context->J * (context->Lambda() + std::cos(s0.phi0));
  }

  Trajectory traj;
  traj.source = TrajectorySource::NumericPendulum;
  traj.times.assign(grid.begin(), grid.end());
  for (const auto& y : states) {
    traj.phi.push_back(y[0]);
    traj.dphi.push_back(y[1]);
    traj.n.push_back(y[1] / rate);
  }
  return traj;
}

std::vector<double> linspace_grid(double t_end, std::size_t n_points) {
  if (n_points < 2 || !(t_end > 0.0)) throw DomainError("grid needs t_end > 0 and at least 2 points");
  std::vector<double> grid(n_points);
  const double step = t_end / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) grid[i] = step * static_cast<double>(i);
  grid.back() = t_end;
  return grid;
}

}  // namespace bjj::numeric
