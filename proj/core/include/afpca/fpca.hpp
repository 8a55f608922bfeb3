#pragma once

#include "afpca/basis.hpp"
#include "afpca/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace afpca {

enum class FpcaMode { adaptive, baseline };

struct FpcaConfig {
    int basis_dim = 40;
    int k_init = 15;
    double pve = 0.99;
    int max_iter = 200;
    double tol = 1e-6;
    double beta_floor = 1e-6;
    FpcaMode mode = FpcaMode::adaptive;
    /// Seed for the score-initialization fallback on irregular grids.
    std::uint64_t seed = 0;
};

/// Per-dataset quantities that stay fixed across iterations: the transformed
/// basis evaluated on each subject's grid plus the per-subject normal-equation
/// pieces W_i' W_i and W_i' Y_i. Subjects on a shared grid reuse one copy.
class FpcaWork {
public:
    FpcaWork(const FunctionalDataset& data, TransformedBasis basis);

    const TransformedBasis& basis() const { return basis_; }
    const Eigen::MatrixXd& basis_at(int i) const { return w_[shared_ ? 0 : i]; }
    const Eigen::MatrixXd& gram_at(int i) const { return wtw_[shared_ ? 0 : i]; }
    const Eigen::VectorXd& proj_at(int i) const { return wty_[i]; }
    bool shared() const { return shared_; }
    Eigen::Index total_obs() const { return total_obs_; }

private:
    TransformedBasis basis_;
    bool shared_;
    Eigen::Index total_obs_;
    std::vector<Eigen::MatrixXd> w_;
    std::vector<Eigen::MatrixXd> wtw_;
    std::vector<Eigen::VectorXd> wty_;
};

/// Mutable quantities of the alternating fit.
struct FpcaState {
    Eigen::VectorXd beta_mu;               // P
    Eigen::MatrixXd beta_phi;              // P x K
    Eigen::MatrixXd scores;                // I x K
    Eigen::VectorXd lambda_mu;             // P ridge diagonal
    std::vector<Eigen::VectorXd> lambda_phi;  // K blocks of P
    double sigma2 = 1.0;
};

struct Reconstruction {
    int subject = 0;
    Eigen::VectorXd grid;
    Eigen::VectorXd values;
};

struct FpcaModel {
    TransformedBasis basis;
    Eigen::VectorXd beta_mu;
    Eigen::MatrixXd beta_phi;              // P x K (retained components)
    Eigen::MatrixXd scores;                // I x K
    Eigen::VectorXd lambda_mu;
    std::vector<Eigen::VectorXd> lambda_phi;
    double sigma2 = 0.0;
    /// Score variances of the unit-norm components, non-increasing.
    Eigen::VectorXd eigenvalues;
    /// Cumulative variance shares relative to all initially fitted components.
    Eigen::VectorXd pve_cum;
    std::vector<double> objective_trace;
    bool converged = false;
    int n_iter = 0;
    int k_fitted = 0;  // components carried through the iteration before truncation

    int k() const { return static_cast<int>(beta_phi.cols()); }
    Eigen::VectorXd mean(const Eigen::VectorXd& grid) const;
    /// J x K matrix of component values on the grid.
    Eigen::MatrixXd components(const Eigen::VectorXd& grid) const;
    Reconstruction reconstruct(int subject, const Eigen::VectorXd& grid) const;
    /// Pointwise penalty function for the mean (component = -1) or a
    /// component; NaN where undefined.
    Eigen::VectorXd penalty_fn(int component, const Eigen::VectorXd& grid) const;
};

/// Joint mean/component coefficient solve given scores, tuning, and sigma2.
/// The (K+1)P normal equations are accumulated subject by subject from
/// theta_i = (1, xi_i) without materializing the full design matrix.
void update_coefficients(const FunctionalDataset& data, const FpcaWork& work, FpcaState& state);

/// BLUP of one subject's scores given the components at its observation
/// points and the mean-centered observations.
Eigen::VectorXd blup_scores(const Eigen::MatrixXd& phi_at_obs,
                            const Eigen::VectorXd& centered, double sigma2);

/// Per-coefficient (adaptive) or per-function scalar (baseline) ridge weights.
void update_tuning(FpcaState& state, double floor_value, FpcaMode mode);

/// Pooled mean squared residual across subjects.
double update_sigma2_fpca(const FunctionalDataset& data, const FpcaWork& work,
                          const FpcaState& state);

/// Rotate components and scores so the components are orthonormal under
/// dense-grid quadrature, ordered by decreasing score variance, with the
/// fitted surfaces unchanged. Returns the descending score variances.
Eigen::VectorXd orthogonalize(const TransformedBasis& basis, Eigen::MatrixXd& beta_phi,
                              Eigen::MatrixXd& scores, int quad_points = 1024);

/// Starting state: SVD-based scores on a shared grid (cross-sectional mean
/// fit, centered data matrix), seeded standard normals otherwise, followed
/// by an unpenalized coefficient solve and method-of-moments sigma2.
FpcaState initialize(const FunctionalDataset& data, const FpcaWork& work, const FpcaConfig& config);

/// Penalized negative log-likelihood evaluated at the current state.
double fpca_objective(const FunctionalDataset& data, const FpcaWork& work, const FpcaState& state);

/// Keep the smallest leading set of components whose cumulative variance
/// share reaches `pve` (at least one).
FpcaModel truncate_pve(FpcaModel model, double pve);

/// Adaptive (or baseline) FPCA fit: alternate coefficient solve, BLUP
/// scores, orthogonalization, and tuning/variance updates, then truncate
/// by proportion of variance explained.
FpcaModel fit_afpca(const FunctionalDataset& data, const FpcaConfig& config = {});

}  // namespace afpca
