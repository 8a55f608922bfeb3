#pragma once

#include "afpca/basis.hpp"

#include <Eigen/Dense>

#include <vector>

namespace afpca {

struct SmoothConfig {
    int basis_dim = 40;
    int max_iter = 100;
    /// Convergence threshold on the objective change, relative to the
    /// current objective magnitude with a 1e-10 absolute floor.
    double tol = 1e-6;
    /// Lower limit on |beta_p| inside the tuning update.
    double beta_floor = 1e-6;
};

/// Result of a scatterplot smooth f(t) = W(t) beta in the transformed basis.
struct SmoothFit {
    TransformedBasis basis;
    Eigen::VectorXd beta;            // P coefficients
    Eigen::VectorXd lambda_weights;  // ridge diagonal; [0]=[1]=0, entry p is lambda_p^2
    double sigma2 = 0.0;
    std::vector<double> objective_trace;
    bool converged = false;
    int n_iter = 0;

    Eigen::VectorXd fitted(const Eigen::VectorXd& t) const;
    /// Pointwise penalty function lambda(t); NaN where undefined.
    Eigen::VectorXd penalty_fn(const Eigen::VectorXd& grid) const;
};

/// Coefficient update: solves (W'W + sigma2 Lambda) beta = W'y.
Eigen::VectorXd update_beta(const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& lambda_weights, double sigma2);

/// Tuning update: weights (1 / max(|beta_p|, floor))^2 for p >= 3, zeros first.
Eigen::VectorXd update_lambda(const Eigen::VectorXd& beta, double floor_value);

/// Non-adaptive tuning update: one scalar (P-2) / sum_{p>=3} beta_p^2
/// replicated over the penalized diagonal, zeros first.
Eigen::VectorXd update_lambda_single(const Eigen::VectorXd& beta, double floor_value);

/// Residual variance update: mean squared residual.
double update_sigma2(const Eigen::VectorXd& residuals);

/// Adaptive scatterplot smoothing: iterate beta -> sigma2 -> Lambda updates
/// of the penalized likelihood until the objective stabilizes. Iteration 1
/// reproduces the unpenalized least-squares fit exactly (Lambda^(0) = 0).
SmoothFit fit_adaptive_smooth(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                              const SmoothConfig& config = {});

/// Non-adaptive single-tuning-parameter variant of the same iteration: one
/// scalar lambda = (P-2) / sum of squared penalized coefficients replaces
/// the per-coefficient weights. Used as the comparison baseline.
SmoothFit fit_baseline_smooth(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                              const SmoothConfig& config = {});

}  // namespace afpca
