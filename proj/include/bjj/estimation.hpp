#pragma once

// Least-squares fitting of phase / imbalance time series to the damped
// pendulum model, with covariance, correlation and propagated uncertainties.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bjj/types.hpp"

namespace bjj::estimation {

struct Sample {
  double t;
  double value;
};

struct DataSet {
  std::vector<Sample> phase;      ///< (t [s], phi [rad])
  std::vector<Sample> imbalance;  ///< (t [s], n)
  std::optional<double> weight_phase;
  std::optional<double> weight_imbalance;
  double n_atoms = 0.0;
  double n_atoms_sigma = 0.0;

  [[nodiscard]] std::size_t size() const { return phase.size() + imbalance.size(); }
  void validate() const;
};

struct Weights {
  double phase = 1.0;
  double imbalance = 1.0;
};

/// Per-series residual scale: explicit weight if set, otherwise the sample
/// standard deviation of the linearly detrended last quarter of the series.
Weights resolve_weights(const DataSet& d);

/// Scaled residuals (model - data) / weight, phase samples first.  Points
/// where the model cannot be evaluated yield +inf.
Eigen::VectorXd residuals(const PendulumParams& P, const DataSet& d, const Weights& w,
                          std::optional<double> guard = std::nullopt);
Eigen::VectorXd residuals(const PendulumParams& P, const DataSet& d);

// ---------------------------------------------------------------------------
// Generic Levenberg-Marquardt on an unconstrained parameter vector.

/// Stops when an accepted step lowers the cost by less than
/// `relative_tolerance` (relative) or moves x by less than
/// `relative_tolerance` * (|x| + relative_tolerance).
struct LmOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  double jacobian_step = 1e-6;
  double initial_damping = 1e-3;
};

struct LmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;  ///< forward-difference Jacobian at x
  double cost = 0.0;         ///< sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Eigen::MatrixXd forward_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& fx, double relative_step);

LmResult levenberg_marquardt(const ResidualFn& f, Eigen::VectorXd x0, const LmOptions& opts = {});

// ---------------------------------------------------------------------------
// Covariance, correlation and error propagation.

struct CovarianceResult {
  Eigen::MatrixXd covariance;
  double mse = 0.0;
  bool rank_deficient = false;
};

/// MSE = R / (n_data - nu), C = (J^T J)^-1 MSE.  A rank-deficient J^T J is
/// pseudo-inverted and flagged.
CovarianceResult covariance(const Eigen::MatrixXd& jacobian, double R, std::size_t n_data,
                            std::size_t nu);

/// C_ij / sqrt(C_ii C_jj); the diagonal is exactly 1.
Eigen::MatrixXd correlation(const Eigen::MatrixXd& C);

/// sqrt(grad^T C grad).  DomainError when the quadratic form is negative.
double propagate_error(const Eigen::VectorXd& grad, const Eigen::MatrixXd& C);

// ---------------------------------------------------------------------------
// Pendulum-model fit.

inline constexpr std::size_t kNumParams = 6;
inline constexpr std::array<std::string_view, kNumParams> kParamNames = {
    "k0", "omega0", "N0", "tau", "delta_phi", "delta_n"};

Eigen::VectorXd to_vector(const PendulumParams& P);
PendulumParams from_vector(const Eigen::VectorXd& v, const PendulumParams& templ);

struct FitOptions {
  LmOptions lm;
  std::optional<double> guard;
};

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

struct DerivedTmbh {
  Estimate Lambda;
  Estimate J;        ///< rad/s
  Estimate epsilon;  ///< rad/s
  Estimate eta;
  double lambda = 1.0;  ///< cos(phi(0)) of the fitted model
};

struct FitReport {
  PendulumParams params;
  std::array<double, kNumParams> sigmas{};
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd correlation;
  double mse = 0.0;
  double cost = 0.0;
  std::size_t n_data = 0;
  DerivedTmbh derived;
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;
  Regime regime = Regime::Equilibrium;
  double rigidity_delta = 0.0;
  bool rigidity_ok = false;
  std::vector<std::string> warnings;
};

/// Fits k0, omega0, N0, tau, delta_phi, delta_n (sigma0 and tau2 are taken
/// from `guess`).  Never throws on non-convergence; the report carries the flag.
FitReport fit(const DataSet& d, const PendulumParams& guess, const FitOptions& opts = {});

/// Runs independent fits (concurrently) and returns the lowest-MSE report;
/// ties go to the lexicographically smallest parameter vector.
FitReport fit_multistart(const DataSet& d, std::span<const PendulumParams> guesses,
                         const FitOptions& opts = {});

// ---------------------------------------------------------------------------
// Direct fit of the damped TMBH equations (J, eta, Lambda, eps, n0, phi0).
// Used to compare parameter correlations against the pendulum-model fit.

inline constexpr std::array<std::string_view, 6> kTmbhParamNames = {
    "J", "eta", "Lambda", "epsilon", "n0", "phi0"};

struct TmbhFitReport {
  TmbhParams params;
  InitialState initial;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd correlation;
  double mse = 0.0;
  int iterations = 0;
  bool converged = false;
};

TmbhFitReport fit_tmbh_direct(const DataSet& d, const TmbhParams& guess, const InitialState& s0_guess,
                              const LmOptions& opts = {});

/// Largest |off-diagonal| entry of a correlation matrix.
double max_off_diagonal(const Eigen::MatrixXd& corr);

}  // namespace bjj::estimation
