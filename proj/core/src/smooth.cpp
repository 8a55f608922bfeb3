#include "afpca/smooth.hpp"

#include "afpca/errors.hpp"
#include "solve.hpp"

#include <cmath>
#include <string>

namespace afpca {

namespace {

constexpr double kSigma2Floor = 1e-300;  // keeps log(sigma2) finite on perfect fits

double smooth_objective(Eigen::Index n_obs, double rss, double sigma2,
                        const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda_weights) {
    const double s2 = std::max(sigma2, kSigma2Floor);
    const double penalty = beta.cwiseProduct(lambda_weights.cwiseProduct(beta)).sum();
    return 0.5 * static_cast<double>(n_obs) * std::log(s2) + rss / (2.0 * s2) + penalty;
}

enum class TuningRule { per_coefficient, single_scalar };

SmoothFit fit_smooth_impl(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                          const SmoothConfig& config, TuningRule rule) {
    if (t.size() != y.size()) throw DataError("t and y must have equal length");
    if (t.size() == 0) throw DataError("empty input");
    if (!t.allFinite() || !y.allFinite()) throw DataError("non-finite values in input data");
    if (config.max_iter < 1) throw UsageError("max_iter must be >= 1");
    if (!(config.tol > 0.0)) throw UsageError("tol must be positive");
    if (!(config.beta_floor > 0.0)) throw UsageError("beta_floor must be positive");
    if (t.size() < config.basis_dim)
        throw DataError("rank-deficient fit: J = " + std::to_string(t.size()) +
                        " observations for P = " + std::to_string(config.basis_dim) +
                        " basis functions; use a smaller P");

    const double a = t.minCoeff();
    const double b = t.maxCoeff();
    if (!(a < b)) throw DataError("all abscissae are equal; cannot build a basis");

    SmoothFit fit{wand_transform(make_knots(a, b, config.basis_dim)),
                  Eigen::VectorXd(),
                  Eigen::VectorXd::Zero(config.basis_dim),
                  0.0,
                  {},
                  false,
                  0};

    const Eigen::MatrixXd w = fit.basis.eval(t, 0);
    const Eigen::MatrixXd wtw = w.transpose() * w;
    const Eigen::VectorXd wty = w.transpose() * y;
    const Eigen::Index n_obs = t.size();

    double prev_objective = 0.0;
    for (int it = 1; it <= config.max_iter; ++it) {
        Eigen::MatrixXd system = wtw;
        system.diagonal() += fit.sigma2 * fit.lambda_weights;
        fit.beta = detail::solve_spd(system, wty, "scatterplot coefficient update");

        const Eigen::VectorXd residuals = y - w * fit.beta;
        fit.sigma2 = update_sigma2(residuals);
        fit.lambda_weights = rule == TuningRule::per_coefficient
                                 ? update_lambda(fit.beta, config.beta_floor)
                                 : update_lambda_single(fit.beta, config.beta_floor);

        const double objective = smooth_objective(n_obs, residuals.squaredNorm(), fit.sigma2,
                                                  fit.beta, fit.lambda_weights);
        fit.objective_trace.push_back(objective);
        fit.n_iter = it;
        if (it > 1) {
            const double threshold = std::max(config.tol * std::abs(objective), 1e-10);
            if (std::abs(objective - prev_objective) < threshold) {
                fit.converged = true;
                break;
            }
        }
        prev_objective = objective;
    }
    return fit;
}

}  // namespace

Eigen::VectorXd SmoothFit::fitted(const Eigen::VectorXd& t) const {
    return basis.eval(t, 0) * beta;
}

Eigen::VectorXd SmoothFit::penalty_fn(const Eigen::VectorXd& grid) const {
    return penalty_fn_values(basis, beta, lambda_weights.cwiseSqrt(), grid);
}

Eigen::VectorXd update_beta(const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& lambda_weights, double sigma2) {
    if (w.rows() != y.size()) throw DataError("W and y are not conformable");
    if (w.cols() != lambda_weights.size()) throw DataError("lambda length must match basis dimension");
    Eigen::MatrixXd system = w.transpose() * w;
    system.diagonal() += sigma2 * lambda_weights;
    return detail::solve_spd(system, w.transpose() * y, "scatterplot coefficient update");
}

Eigen::VectorXd update_lambda(const Eigen::VectorXd& beta, double floor_value) {
    Eigen::VectorXd weights(beta.size());
    weights[0] = 0.0;
    weights[1] = 0.0;
    for (Eigen::Index p = 2; p < beta.size(); ++p) {
        const double denom = std::max(std::abs(beta[p]), floor_value);
        weights[p] = 1.0 / (denom * denom);
    }
    return weights;
}

Eigen::VectorXd update_lambda_single(const Eigen::VectorXd& beta, double floor_value) {
    const Eigen::Index p = beta.size();
    const double n_pen = static_cast<double>(p - 2);
    const double ss = beta.tail(p - 2).squaredNorm();
    const double lambda = n_pen / std::max(ss, n_pen * floor_value * floor_value);
    Eigen::VectorXd weights = Eigen::VectorXd::Constant(p, lambda);
    weights[0] = 0.0;
    weights[1] = 0.0;
    return weights;
}

double update_sigma2(const Eigen::VectorXd& residuals) {
    if (residuals.size() == 0) throw DataError("empty residual vector");
    return residuals.squaredNorm() / static_cast<double>(residuals.size());
}

SmoothFit fit_adaptive_smooth(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                              const SmoothConfig& config) {
    return fit_smooth_impl(t, y, config, TuningRule::per_coefficient);
}

SmoothFit fit_baseline_smooth(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                              const SmoothConfig& config) {
    return fit_smooth_impl(t, y, config, TuningRule::single_scalar);
}

}  // namespace afpca
