#include "bjj/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <string>

#include "bjj/analytic.hpp"
#include "bjj/errors.hpp"
#include "bjj/numeric.hpp"

namespace bjj::estimation {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTailFraction = 0.25;
constexpr std::size_t kMinTailPoints = 3;
constexpr double kMaxDamping = 1e16;
constexpr double kRankTol = 1e-12;

double wrap_phase(double d) { return std::remainder(d, kTwoPi); }

// Standard deviation of the last quarter of a series after removing a
// least-squares line.  Returns 1 when the tail is too short or flat.
double tail_scale(const std::vector<Sample>& s) {
  const std::size_t n = s.size();
  const std::size_t count = std::max(kMinTailPoints, static_cast<std::size_t>(kTailFraction * n));
  if (count > n) return 1.0;
  const std::size_t first = n - count;
  const std::size_t m = count;
  double st = 0.0, sy = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    st += s[i].t;
    sy += s[i].value;
  }
  const double mt = st / m, my = sy / m;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    stt += (s[i].t - mt) * (s[i].t - mt);
    sty += (s[i].t - mt) * (s[i].value - my);
  }
  const double slope = stt > 0.0 ? sty / stt : 0.0;
  double ss = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const double r = s[i].value - my - slope * (s[i].t - mt);
    ss += r * r;
  }
  const double sd = std::sqrt(ss / static_cast<double>(m - 2));
  return (std::isfinite(sd) && sd > 0.0) ? sd : 1.0;
}

// Internal coordinates: log k0, log omega0, logit N0, log tau, delta_phi, delta_n.
Eigen::VectorXd to_internal(const PendulumParams& P) {
  Eigen::VectorXd z(kNumParams);
  z << std::log(P.k0), std::log(P.omega0), std::log(P.N0 / (1.0 - P.N0)), std::log(P.tau),
      P.delta_phi, P.delta_n;
  return z;
}

PendulumParams from_internal(const Eigen::VectorXd& z, const PendulumParams& templ) {
  PendulumParams P = templ;
  P.k0 = std::exp(z[0]);
  P.omega0 = std::exp(z[1]);
  P.N0 = 1.0 / (1.0 + std::exp(-z[2]));
  P.tau = std::exp(z[3]);
  P.delta_phi = z[4];
  P.delta_n = z[5];
  return P;
}

// d(natural)/d(internal), diagonal.
Eigen::VectorXd internal_chain(const PendulumParams& P) {
  Eigen::VectorXd g(kNumParams);
  g << P.k0, P.omega0, P.N0 * (1.0 - P.N0), P.tau, 1.0, 1.0;
  return g;
}

Eigen::MatrixXd chain_transform(const Eigen::MatrixXd& Cz, const Eigen::VectorXd& g) {
  const Eigen::MatrixXd C = g.asDiagonal() * Cz * g.asDiagonal();
  return 0.5 * (C + C.transpose());
}

DerivedTmbh derive_tmbh(const PendulumParams& P, const Eigen::MatrixXd& C, double N, double sigma_N) {
  DerivedTmbh d;
  const double phi_start = analytic::evaluate_piecewise(0.0, P).phi;
  d.lambda = std::cos(phi_start);
  const double k = P.k0, w = P.omega0, N0 = P.N0, tau = P.tau, dn = P.delta_n;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(kNumParams);

  d.J.value = w * N0 / (4.0 * k);
  g << -d.J.value / k, d.J.value / w, d.J.value / N0, 0.0, 0.0, 0.0;
  d.J.sigma = propagate_error(g, C);

  d.Lambda.value = 4.0 * k * k / (N0 * N0) - d.lambda;
  g << 8.0 * k / (N0 * N0), 0.0, -8.0 * k * k / (N0 * N0 * N0), 0.0, 0.0, 0.0;
  d.Lambda.sigma = propagate_error(g, C);

  d.epsilon.value = -2.0 * w * k * dn / N0;
  g << d.epsilon.value / k, d.epsilon.value / w, -d.epsilon.value / N0, 0.0, 0.0, -2.0 * w * k / N0;
  d.epsilon.sigma = propagate_error(g, C);

  if (std::isfinite(tau) && N > 0.0) {
    d.eta.value = N * N0 / (k * tau * w);
    g << -d.eta.value / k, -d.eta.value / w, d.eta.value / N0, -d.eta.value / tau, 0.0, 0.0;
    const double s = propagate_error(g, C);
    const double dN = d.eta.value / N * sigma_N;
    d.eta.sigma = std::sqrt(s * s + dN * dN);
  }
  return d;
}

template <class Vec>
bool lexicographically_less(const Vec& a, const Vec& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

void DataSet::validate() const {
  if (phase.empty() && imbalance.empty()) throw DomainError("data set has no samples");
  for (const auto& s : phase) {
    if (!std::isfinite(s.t) || !std::isfinite(s.value)) throw DomainError("non-finite phase sample");
  }
  for (const auto& s : imbalance) {
    if (!std::isfinite(s.t) || !std::isfinite(s.value)) throw DomainError("non-finite imbalance sample");
    if (!(std::abs(s.value) < 1.0)) throw DomainError("imbalance samples must satisfy |n| < 1");
  }
  for (auto w : {weight_phase, weight_imbalance}) {
    if (w && !(*w > 0.0)) throw DomainError("series weights must be > 0");
  }
}

Weights resolve_weights(const DataSet& d) {
  Weights w;
  w.phase = d.weight_phase.value_or(tail_scale(d.phase));
  w.imbalance = d.weight_imbalance.value_or(tail_scale(d.imbalance));
  return w;
}

Eigen::VectorXd residuals(const PendulumParams& P, const DataSet& d, const Weights& w,
                          std::optional<double> guard) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (const auto& s : d.phase) {
    try {
      const double model = analytic::evaluate_piecewise(s.t, P, guard).phi;
      r[i] = wrap_phase(model - s.value) / w.phase;
    } catch (const Error&) {
      r[i] = kInfinity;
    }
    if (!std::isfinite(r[i])) r[i] = kInfinity;
    ++i;
  }
  for (const auto& s : d.imbalance) {
    try {
      r[i] = (analytic::n_damped(s.t, P, guard) - s.value) / w.imbalance;
    } catch (const Error&) {
      r[i] = kInfinity;
    }
    if (!std::isfinite(r[i])) r[i] = kInfinity;
    ++i;
  }
  return r;
}

Eigen::VectorXd residuals(const PendulumParams& P, const DataSet& d) {
  return residuals(P, d, resolve_weights(d));
}

Eigen::MatrixXd forward_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& fx, double relative_step) {
  Eigen::MatrixXd jac(fx.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x;
    const double h = relative_step * std::max(std::abs(x[j]), 1.0);
    xp[j] += h;
    const double step = xp[j] - x[j];
    jac.col(j) = (f(xp) - fx) / step;
  }
  return jac;
}

LmResult levenberg_marquardt(const ResidualFn& f, Eigen::VectorXd x0, const LmOptions& opts) {
  LmResult res;
  res.x = std::move(x0);
  res.residuals = f(res.x);
  res.cost = res.residuals.squaredNorm();
  if (!std::isfinite(res.cost)) {
    res.jacobian = Eigen::MatrixXd::Zero(res.residuals.size(), res.x.size());
    return res;
  }
  res.jacobian = forward_jacobian(f, res.x, res.residuals, opts.jacobian_step);
  if (res.cost == 0.0) {
    res.converged = true;
    return res;
  }
  double mu = opts.initial_damping;
  while (res.iterations < opts.max_iterations) {
    ++res.iterations;
    if (!res.jacobian.allFinite()) break;
    const Eigen::MatrixXd A = res.jacobian.transpose() * res.jacobian;
    const Eigen::VectorXd g = res.jacobian.transpose() * res.residuals;
    Eigen::VectorXd D = A.diagonal();
    const double floor = kRankTol * std::max(D.maxCoeff(), 1e-300);
    D = D.cwiseMax(floor);

    const Eigen::MatrixXd M = A + mu * Eigen::MatrixXd(D.asDiagonal());
    const Eigen::VectorXd step = M.ldlt().solve(-g);
    const Eigen::VectorXd x_new = res.x + step;
    const Eigen::VectorXd r_new = f(x_new);
    const double cost_new = r_new.squaredNorm();

    if (step.allFinite() && std::isfinite(cost_new) && cost_new < res.cost) {
      const double decrease = (res.cost - cost_new) / res.cost;
      res.x = x_new;
      res.residuals = r_new;
      res.cost = cost_new;
      res.jacobian = forward_jacobian(f, res.x, res.residuals, opts.jacobian_step);
      mu = std::max(mu / 10.0, 1e-15);
      const bool tiny_step = step.norm() <= opts.relative_tolerance * (res.x.norm() + opts.relative_tolerance);
      if (decrease < opts.relative_tolerance || tiny_step || cost_new == 0.0) {
        res.converged = true;
        break;
      }
    } else {
      mu *= 10.0;
      // No descent even along a vanishing gradient step: stationary to precision.
      if (mu > kMaxDamping) {
        res.converged = true;
        break;
      }
    }
  }
  return res;
}

CovarianceResult covariance(const Eigen::MatrixXd& jacobian, double R, std::size_t n_data,
                            std::size_t nu) {
  if (n_data <= nu) throw DomainError("covariance needs more data points than parameters");
  CovarianceResult out;
  out.mse = R / static_cast<double>(n_data - nu);
  const Eigen::MatrixXd A = jacobian.transpose() * jacobian;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  const double cutoff = kRankTol * largest * static_cast<double>(A.rows());
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff) {
      inv[i] = 1.0 / ev[i];
    } else {
      out.rank_deficient = true;
    }
  }
  Eigen::MatrixXd C = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  C = 0.5 * (C + C.transpose());
  out.covariance = C * out.mse;
  return out;
}

Eigen::MatrixXd correlation(const Eigen::MatrixXd& C) {
  const Eigen::Index n = C.rows();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(C(i, i) > 0.0)) throw DomainError("correlation needs a strictly positive covariance diagonal");
    d[i] = std::sqrt(C(i, i));
  }
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out(i, j) = out(j, i) = std::clamp(C(i, j) / (d[i] * d[j]), -1.0, 1.0);
    }
  }
  return out;
}

double propagate_error(const Eigen::VectorXd& grad, const Eigen::MatrixXd& C) {
  if (grad.size() != C.rows() || C.rows() != C.cols()) {
    throw DomainError("propagate_error: gradient and covariance are not conformable");
  }
  const double q = grad.dot(C * grad);
  if (q < 0.0) {
    // Rounding on an exactly cancelling PSD form gives tiny negatives.
    const double scale = grad.cwiseAbs().dot(C.cwiseAbs() * grad.cwiseAbs());
    if (q >= -1e-12 * scale) return 0.0;
    throw DomainError("propagate_error: negative variance (covariance not positive semidefinite)");
  }
  return std::sqrt(q);
}

Eigen::VectorXd to_vector(const PendulumParams& P) {
  Eigen::VectorXd v(kNumParams);
  v << P.k0, P.omega0, P.N0, P.tau, P.delta_phi, P.delta_n;
  return v;
}

PendulumParams from_vector(const Eigen::VectorXd& v, const PendulumParams& templ) {
  PendulumParams P = templ;
  P.k0 = v[0];
  P.omega0 = v[1];
  P.N0 = v[2];
  P.tau = v[3];
  P.delta_phi = v[4];
  P.delta_n = v[5];
  return P;
}

FitReport fit(const DataSet& d, const PendulumParams& guess, const FitOptions& opts) {
  d.validate();
  if (d.size() < kNumParams + 1) throw DomainError("fit needs at least 7 data points");
  if (!(guess.k0 > 0.0) || !(guess.omega0 > 0.0) || !(guess.N0 > 0.0 && guess.N0 < 1.0) ||
      !(guess.tau > 0.0) || !std::isfinite(guess.tau)) {
    throw DomainError("fit guess requires k0 > 0, omega0 > 0, 0 < N0 < 1 and a finite tau > 0");
  }
  const Weights w = resolve_weights(d);
  const ResidualFn f = [&](const Eigen::VectorXd& z) {
    return residuals(from_internal(z, guess), d, w, opts.guard);
  };
  const LmResult lm = levenberg_marquardt(f, to_internal(guess), opts.lm);

  FitReport rep;
  rep.params = from_internal(lm.x, guess);
  rep.cost = lm.cost;
  rep.n_data = d.size();
  rep.iterations = lm.iterations;
  rep.converged = lm.converged;

  const auto bad = (lm.residuals.array().isInf()).count();
  if (bad > 0) {
    rep.warnings.push_back(std::to_string(bad) + " data points could not be evaluated by the model");
  }

  if (!std::isfinite(lm.cost) || !lm.jacobian.allFinite()) {
    rep.converged = false;
    rep.mse = kInfinity;
    rep.covariance = Eigen::MatrixXd::Constant(kNumParams, kNumParams, std::nan(""));
    rep.correlation = rep.covariance;
    rep.sigmas.fill(std::nan(""));
    rep.warnings.push_back("model is not evaluable at the final parameters");
    return rep;
  }

  const CovarianceResult cz = covariance(lm.jacobian, lm.cost, d.size(), kNumParams);
  rep.mse = cz.mse;
  rep.rank_deficient = cz.rank_deficient;
  if (cz.rank_deficient) rep.warnings.push_back("J^T J is rank deficient; covariance uses a pseudo-inverse");
  rep.covariance = chain_transform(cz.covariance, internal_chain(rep.params));
  for (std::size_t i = 0; i < kNumParams; ++i) {
    rep.sigmas[i] = std::sqrt(std::max(rep.covariance(i, i), 0.0));
  }
  try {
    rep.correlation = correlation(rep.covariance);
  } catch (const DomainError&) {
    rep.correlation = Eigen::MatrixXd::Identity(kNumParams, kNumParams);
    rep.warnings.push_back("covariance has a zero diagonal entry; correlation set to identity");
  }
  try {
    rep.derived = derive_tmbh(rep.params, rep.covariance, d.n_atoms, d.n_atoms_sigma);
  } catch (const Error& e) {
    rep.warnings.push_back(std::string("derived TMBH parameters unavailable: ") + e.what());
  }
  rep.regime = analytic::classify_regime(rep.params.k0);
  try {
    const auto rc = analytic::rigidity_check(rep.params, rep.regime);
    rep.rigidity_delta = rc.delta;
    rep.rigidity_ok = rc.ok;
  } catch (const Error& e) {
    rep.rigidity_ok = false;
    rep.warnings.push_back(std::string("rigidity check failed: ") + e.what());
  }
  if (!rep.converged) rep.warnings.push_back("Levenberg-Marquardt did not converge");
  return rep;
}

FitReport fit_multistart(const DataSet& d, std::span<const PendulumParams> guesses,
                         const FitOptions& opts) {
  if (guesses.empty()) throw DomainError("multistart needs at least one guess");
  std::vector<std::future<FitReport>> jobs;
  jobs.reserve(guesses.size());
  for (const auto& g : guesses) {
    jobs.push_back(std::async(std::launch::async, [&d, g, &opts] { return fit(d, g, opts); }));
  }
  std::vector<FitReport> reports;
  reports.reserve(jobs.size());
  for (auto& j : jobs) reports.push_back(j.get());

  auto better = [](const FitReport& a, const FitReport& b) {
    const bool fa = std::isfinite(a.mse), fb = std::isfinite(b.mse);
    if (fa != fb) return fa;
    if (a.mse != b.mse) return a.mse < b.mse;
    const Eigen::VectorXd va = to_vector(a.params), vb = to_vector(b.params);
    return lexicographically_less(va, vb);
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (better(reports[i], reports[best])) best = i;
  }
  return reports[best];
}

namespace {

// Internal coordinates: log J, log eta, log Lambda, eps, atanh n0, phi0.
struct TmbhPoint {
  TmbhParams p;
  InitialState s0;
};

TmbhPoint tmbh_from_internal(const Eigen::VectorXd& z, double N) {
  TmbhPoint out;
  out.p = TmbhParams::from_lambda(std::exp(z[0]), std::exp(z[2]), N, z[3], std::exp(z[1]));
  out.s0 = {std::tanh(z[4]), z[5]};
  return out;
}

}  // namespace

TmbhFitReport fit_tmbh_direct(const DataSet& d, const TmbhParams& guess, const InitialState& s0_guess,
                              const LmOptions& opts) {
  d.validate();
  if (!(guess.J > 0.0) || !(guess.eta > 0.0) || !(guess.Lambda() > 0.0) || !(std::abs(s0_guess.n0) < 1.0)) {
    throw DomainError("direct TMBH fit requires J > 0, eta > 0, Lambda > 0 and |n0| < 1");
  }
  // Shared integration grid: 0 followed by every distinct sample time.
  std::vector<double> grid{0.0};
  for (const auto* series : {&d.phase, &d.imbalance}) {
    for (const auto& s : *series) {
      if (s.t < 0.0) throw DomainError("direct TMBH fit needs non-negative sample times");
      grid.push_back(s.t);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  auto index_of = [&grid](double t) {
    return static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), t) - grid.begin());
  };

  const Weights w = resolve_weights(d);
  const double N = guess.N;
  const ResidualFn f = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd r = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d.size()), kInfinity);
    Trajectory tr;
    try {
      const TmbhPoint pt = tmbh_from_internal(z, N);
      tr = numeric::integrate_tmbh(pt.p, pt.s0, grid);
    } catch (const Error&) {
      return r;
    }
    Eigen::Index i = 0;
    for (const auto& s : d.phase) r[i++] = wrap_phase(tr.phi[index_of(s.t)] - s.value) / w.phase;
    for (const auto& s : d.imbalance) r[i++] = (tr.n[index_of(s.t)] - s.value) / w.imbalance;
    return r;
  };

  Eigen::VectorXd z0(6);
  z0 << std::log(guess.J), std::log(guess.eta), std::log(guess.Lambda()), guess.epsilon,
      std::atanh(s0_guess.n0), s0_guess.phi0;
  const LmResult lm = levenberg_marquardt(f, z0, opts);

  TmbhFitReport rep;
  const TmbhPoint pt = tmbh_from_internal(lm.x, N);
  rep.params = pt.p;
  rep.initial = pt.s0;
  rep.iterations = lm.iterations;
  rep.converged = lm.converged;
  if (!std::isfinite(lm.cost) || !lm.jacobian.allFinite()) {
    rep.converged = false;
    rep.mse = kInfinity;
    rep.covariance = Eigen::MatrixXd::Constant(6, 6, std::nan(""));
    rep.correlation = rep.covariance;
    return rep;
  }
  const CovarianceResult cz = covariance(lm.jacobian, lm.cost, d.size(), 6);
  rep.mse = cz.mse;
  Eigen::VectorXd g(6);
  g << pt.p.J, pt.p.eta, pt.p.Lambda(), 1.0, 1.0 - pt.s0.n0 * pt.s0.n0, 1.0;
  rep.covariance = chain_transform(cz.covariance, g);
  rep.correlation = correlation(rep.covariance);
  return rep;
}

double max_off_diagonal(const Eigen::MatrixXd& corr) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < corr.rows(); ++i) {
    for (Eigen::Index j = 0; j < corr.cols(); ++j) {
      if (i != j) m = std::max(m, std::abs(corr(i, j)));
    }
  }
  return m;
}

}  // namespace bjj::estimation
