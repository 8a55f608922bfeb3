#include "afpca/fpca.hpp"

#include "afpca/errors.hpp"
#include "afpca/rng.hpp"
#include "afpca/smooth.hpp"
#include "afpca/util.hpp"
#include "solve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <string>
#include <utility>

namespace afpca {

namespace {

constexpr double kSigma2Floor = 1e-30;

Eigen::MatrixXd data_matrix(const FunctionalDataset& data) {
    const Eigen::Index n = data.subjects.front().t.size();
    Eigen::MatrixXd y(data.n_subjects(), n);
    for (int i = 0; i < data.n_subjects(); ++i) y.row(i) = data.subjects[i].y;
    return y;
}

// I x (K+1) matrix with a leading column of ones next to the scores.
Eigen::MatrixXd theta_matrix(const Eigen::MatrixXd& scores) {
    Eigen::MatrixXd theta(scores.rows(), scores.cols() + 1);
    theta.col(0).setOnes();
    theta.rightCols(scores.cols()) = scores;
    return theta;
}

}  // namespace

FpcaWork::FpcaWork(const FunctionalDataset& data, TransformedBasis basis)
    : basis_(std::move(basis)), shared_(data.shared_grid()), total_obs_(data.total_obs()) {
    const int n = data.n_subjects();
    wty_.resize(n);
    if (shared_) {
        w_.push_back(basis_.eval(data.subjects.front().t, 0));
        wtw_.push_back(w_[0].transpose() * w_[0]);
        for (int i = 0; i < n; ++i) wty_[i] = w_[0].transpose() * data.subjects[i].y;
    } else {
        w_.resize(n);
        wtw_.resize(n);
        for (int i = 0; i < n; ++i) {
            w_[i] = basis_.eval(data.subjects[i].t, 0);
            wtw_[i] = w_[i].transpose() * w_[i];
            wty_[i] = w_[i].transpose() * data.subjects[i].y;
        }
    }
}

void update_coefficients(const FunctionalDataset& data, const FpcaWork& work, FpcaState& state) {
    const int n = data.n_subjects();
    const int p = work.basis().size();
    const int k = static_cast<int>(state.scores.cols());
    const int dim = (k + 1) * p;

    const Eigen::MatrixXd theta = theta_matrix(state.scores);
    Eigen::MatrixXd system(dim, dim);
    if (work.shared()) {
        const Eigen::MatrixXd cross = theta.transpose() * theta;  // (K+1) x (K+1)
        const Eigen::MatrixXd& gram = work.gram_at(0);
        for (int r = 0; r <= k; ++r)
            for (int c = 0; c <= k; ++c)
                system.block(r * p, c * p, p, p) = cross(r, c) * gram;
    } else {
        system.setZero();
        for (int i = 0; i < n; ++i) {
            const Eigen::MatrixXd& gram = work.gram_at(i);
            for (int r = 0; r <= k; ++r)
                for (int c = r; c <= k; ++c) {
                    const double w = theta(i, r) * theta(i, c);
                    system.block(r * p, c * p, p, p) += w * gram;
                }
        }
        for (int r = 1; r <= k; ++r)
            for (int c = 0; c < r; ++c)
                system.block(r * p, c * p, p, p) = system.block(c * p, r * p, p, p).transpose();
    }

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < n; ++i)
        for (int r = 0; r <= k; ++r) rhs.segment(r * p, p) += theta(i, r) * work.proj_at(i);

    system.diagonal().head(p) += state.sigma2 * state.lambda_mu;
    for (int c = 0; c < k; ++c)
        system.diagonal().segment((c + 1) * p, p) += state.sigma2 * state.lambda_phi[c];

    const Eigen::VectorXd b = detail::solve_spd(
        system, rhs, "FPCA coefficient update (consider lowering K or P)");
    state.beta_mu = b.head(p);
    state.beta_phi.resize(p, k);
    for (int c = 0; c < k; ++c) state.beta_phi.col(c) = b.segment((c + 1) * p, p);
}

Eigen::VectorXd blup_scores(const Eigen::MatrixXd& phi_at_obs,
                            const Eigen::VectorXd& centered, double sigma2) {
    const int k = static_cast<int>(phi_at_obs.cols());
    if (k == 0) return Eigen::VectorXd();
    const double s2 = std::max(sigma2, kSigma2Floor);
    Eigen::MatrixXd m = phi_at_obs.transpose() * phi_at_obs / s2;
    m.diagonal().array() += 1.0;
    return m.llt().solve(phi_at_obs.transpose() * centered / s2);
}

void update_tuning(FpcaState& state, double floor_value, FpcaMode mode) {
    const int k = static_cast<int>(state.beta_phi.cols());
    state.lambda_phi.resize(k);
    if (mode == FpcaMode::adaptive) {
        state.lambda_mu = update_lambda(state.beta_mu, floor_value);
        for (int c = 0; c < k; ++c)
            state.lambda_phi[c] = update_lambda(state.beta_phi.col(c), floor_value);
    } else {
        state.lambda_mu = update_lambda_single(state.beta_mu, floor_value);
        for (int c = 0; c < k; ++c)
            state.lambda_phi[c] = update_lambda_single(state.beta_phi.col(c), floor_value);
    }
}

double update_sigma2_fpca(const FunctionalDataset& data, const FpcaWork& work,
                          const FpcaState& state) {
    if (data.subjects.empty()) throw DataError("empty dataset");
    double rss = 0.0;
    for (int i = 0; i < data.n_subjects(); ++i) {
        const Eigen::MatrixXd& w = work.basis_at(i);
        Eigen::VectorXd fitted = w * state.beta_mu;
        if (state.scores.cols() > 0)
            fitted.noalias() += w * (state.beta_phi * state.scores.row(i).transpose());
        rss += (data.subjects[i].y - fitted).squaredNorm();
    }
    return rss / static_cast<double>(work.total_obs());
}

Eigen::VectorXd orthogonalize(const TransformedBasis& basis, Eigen::MatrixXd& beta_phi,
                              Eigen::MatrixXd& scores, int quad_points) {
    const int k = static_cast<int>(beta_phi.cols());
    if (k == 0) return Eigen::VectorXd();

    const Eigen::VectorXd grid = linspace(basis.a(), basis.b(), quad_points);
    const double h = (basis.b() - basis.a()) / static_cast<double>(quad_points - 1);
    Eigen::VectorXd qw = Eigen::VectorXd::Constant(quad_points, h);
    qw[0] = 0.5 * h;
    qw[quad_points - 1] = 0.5 * h;

    const Eigen::MatrixXd phi_grid = basis.eval(grid, 0) * beta_phi;  // Q x K
    Eigen::MatrixXd gram = phi_grid.transpose() * qw.asDiagonal() * phi_grid;
    gram = 0.5 * (gram + gram.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ges(gram);
    if (ges.info() != Eigen::Success) throw NumericalError("component Gram eigendecomposition failed");
    const double gmax = ges.eigenvalues().maxCoeff();
    if (!(gmax > 0.0)) {
        // all components are numerically zero functions; nothing to rotate
        Eigen::VectorXd second_moments =
            (scores.transpose() * scores / static_cast<double>(scores.rows())).diagonal();
        std::sort(second_moments.data(), second_moments.data() + k, std::greater<double>());
        return second_moments;
    }
    Eigen::VectorXd d = ges.eigenvalues().cwiseMax(gmax * 1e-12);
    const Eigen::MatrixXd gram_half =
        ges.eigenvectors() * d.cwiseSqrt().asDiagonal() * ges.eigenvectors().transpose();
    const Eigen::MatrixXd gram_half_inv =
        ges.eigenvectors() * d.cwiseSqrt().cwiseInverse().asDiagonal() * ges.eigenvectors().transpose();

    const Eigen::MatrixXd second_moment =
        scores.transpose() * scores / static_cast<double>(scores.rows());
    Eigen::MatrixXd m = gram_half * second_moment * gram_half;
    m = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mes(m);
    if (mes.info() != Eigen::Success) throw NumericalError("rotation eigendecomposition failed");

    // descending order
    Eigen::MatrixXd v(k, k);
    Eigen::VectorXd variances(k);
    for (int c = 0; c < k; ++c) {
        v.col(c) = mes.eigenvectors().col(k - 1 - c);
        variances[c] = mes.eigenvalues()[k - 1 - c];
    }

    beta_phi = beta_phi * (gram_half_inv * v);
    scores = scores * (gram_half * v);

    // sign convention: largest-magnitude grid value of each component positive
    const Eigen::MatrixXd rotated_grid = phi_grid * (gram_half_inv * v);
    for (int c = 0; c < k; ++c) {
        Eigen::Index idx = 0;
        rotated_grid.col(c).cwiseAbs().maxCoeff(&idx);
        if (rotated_grid(idx, c) < 0.0) {
            beta_phi.col(c) = -beta_phi.col(c);
            scores.col(c) = -scores.col(c);
        }
    }
    return variances;
}

FpcaState initialize(const FunctionalDataset& data, const FpcaWork& work,
                     const FpcaConfig& config) {
    const int n = data.n_subjects();
    const int p = work.basis().size();
    const int k = config.k_init;

    FpcaState state;
    state.scores.resize(n, k);
    bool scores_ready = false;

    if (k > 0 && work.shared() && data.subjects.front().t.size() >= p) {
        const Eigen::MatrixXd y = data_matrix(data);
        const Eigen::VectorXd ybar = y.colwise().mean();
        const Eigen::VectorXd beta_mean =
            detail::solve_spd(work.gram_at(0), work.basis_at(0).transpose() * ybar,
                              "cross-sectional mean fit");
        const Eigen::VectorXd mean_fitted = work.basis_at(0) * beta_mean;
        const Eigen::MatrixXd centered = y - Eigen::VectorXd::Ones(n) * mean_fitted.transpose();

        Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.info() == Eigen::Success) {
            const int m = std::min<int>(k, static_cast<int>(svd.singularValues().size()));
            for (int c = 0; c < m; ++c) {
                Eigen::VectorXd u_col = svd.matrixU().col(c) * svd.singularValues()[c];
                Eigen::Index idx = 0;
                svd.matrixV().col(c).cwiseAbs().maxCoeff(&idx);
                if (svd.matrixV()(idx, c) < 0.0) u_col = -u_col;
                state.scores.col(c) = u_col;
            }
            if (m < k) {
                GaussianStream gauss(config.seed);
                for (int i = 0; i < n; ++i)
                    for (int c = m; c < k; ++c) state.scores(i, c) = gauss.next();
            }
            scores_ready = true;
        }
    }
    if (k > 0 && !scores_ready) {
        GaussianStream gauss(config.seed);
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < k; ++c) state.scores(i, c) = gauss.next();
    }

    state.beta_phi.resize(p, k);
    state.lambda_mu = Eigen::VectorXd::Zero(p);
    state.lambda_phi.assign(k, Eigen::VectorXd::Zero(p));
    state.sigma2 = 0.0;  // with zero tuning the coefficient solve is unpenalized
    update_coefficients(data, work, state);
    state.sigma2 = update_sigma2_fpca(data, work, state);
    return state;
}

double fpca_objective(const FunctionalDataset& data, const FpcaWork& work,
                      const FpcaState& state) {
    double rss = 0.0;
    for (int i = 0; i < data.n_subjects(); ++i) {
        const Eigen::MatrixXd& w = work.basis_at(i);
        Eigen::VectorXd fitted = w * state.beta_mu;
        if (state.scores.cols() > 0)
            fitted.noalias() += w * (state.beta_phi * state.scores.row(i).transpose());
        rss += (data.subjects[i].y - fitted).squaredNorm();
    }
    const double s2 = std::max(state.sigma2, kSigma2Floor);
    double penalty = state.beta_mu.cwiseProduct(state.lambda_mu.cwiseProduct(state.beta_mu)).sum();
    for (int c = 0; c < state.beta_phi.cols(); ++c) {
        const Eigen::VectorXd b = state.beta_phi.col(c);
        penalty += b.cwiseProduct(state.lambda_phi[c].cwiseProduct(b)).sum();
    }
    return rss / (2.0 * s2) + 0.5 * state.scores.squaredNorm() +
           0.5 * static_cast<double>(work.total_obs()) * std::log(s2) + penalty;
}

Eigen::VectorXd FpcaModel::mean(const Eigen::VectorXd& grid) const {
    return basis.eval(grid, 0) * beta_mu;
}

Eigen::MatrixXd FpcaModel::components(const Eigen::VectorXd& grid) const {
    return basis.eval(grid, 0) * beta_phi;
}

Reconstruction FpcaModel::reconstruct(int subject, const Eigen::VectorXd& grid) const {
    if (subject < 0 || subject >= scores.rows()) throw UsageError("subject index out of range");
    const Eigen::MatrixXd w = basis.eval(grid, 0);
    Eigen::VectorXd values = w * beta_mu;
    if (k() > 0) values.noalias() += w * (beta_phi * scores.row(subject).transpose());
    return Reconstruction{subject, grid, std::move(values)};
}

Eigen::VectorXd FpcaModel::penalty_fn(int component, const Eigen::VectorXd& grid) const {
    if (component < -1 || component >= k()) throw UsageError("component index out of range");
    if (component < 0) return penalty_fn_values(basis, beta_mu, lambda_mu.cwiseSqrt(), grid);
    return penalty_fn_values(basis, beta_phi.col(component),
                             lambda_phi[component].cwiseSqrt(), grid);
}

FpcaModel truncate_pve(FpcaModel model, double pve) {
    const int kf = static_cast<int>(model.eigenvalues.size());
    if (kf == 0) {
        model.pve_cum.resize(0);
        return model;
    }
    Eigen::VectorXd cum(kf);
    double running = 0.0;
    for (int c = 0; c < kf; ++c) {
        running += model.eigenvalues[c];
        cum[c] = running;
    }
    const double total = cum[kf - 1];
    int keep = 1;
    if (total > 0.0) {
        while (keep < kf && cum[keep - 1] < pve * total) ++keep;
    }
    model.beta_phi = model.beta_phi.leftCols(keep).eval();
    model.scores = model.scores.leftCols(keep).eval();
    model.lambda_phi.resize(keep);
    model.eigenvalues = model.eigenvalues.head(keep).eval();
    model.pve_cum = total > 0.0 ? Eigen::VectorXd(cum.head(keep) / total)
                                : Eigen::VectorXd::Zero(keep);
    return model;
}

FpcaModel fit_afpca(const FunctionalDataset& data, const FpcaConfig& config) {
    if (config.k_init < 1 || config.k_init >= config.basis_dim)
        throw UsageError("require 1 <= k_init < basis dimension");
    if (!(config.pve > 0.0 && config.pve <= 1.0)) throw UsageError("require 0 < pve <= 1");
    if (config.max_iter < 1) throw UsageError("max_iter must be >= 1");
    if (!(config.tol > 0.0)) throw UsageError("tol must be positive");
    if (!(config.beta_floor > 0.0)) throw UsageError("beta_floor must be positive");
    data.validate();

    TransformedBasis basis = wand_transform(make_knots(data.a, data.b, config.basis_dim));

    // degenerate data: no variation to decompose
    double ymin = data.subjects.front().y[0];
    double ymax = ymin;
    for (const auto& s : data.subjects) {
        ymin = std::min(ymin, s.y.minCoeff());
        ymax = std::max(ymax, s.y.maxCoeff());
    }
    if (ymin == ymax) {
        std::cerr << "afpca: warning: all observations are identical; returning a flat K = 0 model\n";
        FpcaWork work(data, basis);
        FpcaConfig flat = config;
        flat.k_init = 0;
        FpcaState state = initialize(data, work, flat);
        return FpcaModel{std::move(basis), std::move(state.beta_mu), std::move(state.beta_phi),
                         std::move(state.scores), std::move(state.lambda_mu),
                         std::move(state.lambda_phi), state.sigma2, Eigen::VectorXd(),
                         Eigen::VectorXd(), {}, true, 0, 0};
    }

    FpcaWork work(data, basis);
    if (work.total_obs() < static_cast<Eigen::Index>(config.k_init + 1) * config.basis_dim)
        std::cerr << "afpca: warning: fewer observations than coefficients ("
                  << work.total_obs() << " < " << (config.k_init + 1) * config.basis_dim
                  << "); the fit may be unstable\n";

    FpcaState state = initialize(data, work, config);
    std::vector<double> trace;
    trace.push_back(fpca_objective(data, work, state));

    Eigen::VectorXd eigenvalues;
    bool converged = false;
    int n_iter = 0;
    const bool shared = work.shared();
    Eigen::MatrixXd y_shared;
    if (shared) y_shared = data_matrix(data);

    for (int it = 1; it <= config.max_iter; ++it) {
        update_coefficients(data, work, state);

        if (shared) {
            const Eigen::MatrixXd& w = work.basis_at(0);
            const Eigen::MatrixXd phi = w * state.beta_phi;
            const Eigen::VectorXd mu = w * state.beta_mu;
            const double s2 = std::max(state.sigma2, kSigma2Floor);
            Eigen::MatrixXd m = phi.transpose() * phi / s2;
            m.diagonal().array() += 1.0;
            const Eigen::MatrixXd rhs =
                phi.transpose() * (y_shared.rowwise() - mu.transpose()).transpose() / s2;
            state.scores = m.llt().solve(rhs).transpose();
        } else {
            for (int i = 0; i < data.n_subjects(); ++i) {
                const Eigen::MatrixXd& w = work.basis_at(i);
                const Eigen::MatrixXd phi = w * state.beta_phi;
                state.scores.row(i) =
                    blup_scores(phi, data.subjects[i].y - w * state.beta_mu, state.sigma2);
            }
        }

        eigenvalues = orthogonalize(work.basis(), state.beta_phi, state.scores);
        update_tuning(state, config.beta_floor, config.mode);
        state.sigma2 = update_sigma2_fpca(data, work, state);

        const double objective = fpca_objective(data, work, state);
        trace.push_back(objective);
        n_iter = it;
        const double threshold = std::max(config.tol * std::abs(objective), 1e-10);
        if (std::abs(objective - trace[trace.size() - 2]) < threshold) {
            converged = true;
            break;
        }
    }

    FpcaModel model{std::move(basis), std::move(state.beta_mu), std::move(state.beta_phi),
                    std::move(state.scores), std::move(state.lambda_mu),
                    std::move(state.lambda_phi), state.sigma2, std::move(eigenvalues),
                    Eigen::VectorXd(), std::move(trace), converged, n_iter, config.k_init};
    return truncate_pve(std::move(model), config.pve);
}

}  // namespace afpca
