#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace afpca {

/// Knot layout for a clamped cubic B-spline basis on [a, b].
///
/// Boundary knots carry multiplicity 4, interior knots are strictly ordered,
/// and the basis dimension is P = (#interior knots) + 4.
class KnotVector {
public:
    KnotVector(double a, double b, std::vector<double> interior);

    double a() const { return a_; }
    double b() const { return b_; }
    /// Basis dimension P.
    int size() const { return static_cast<int>(interior_.size()) + 4; }
    const std::vector<double>& interior() const { return interior_; }
    /// Full knot sequence of length P + 4 (clamped ends repeated 4 times).
    const std::vector<double>& full() const { return full_; }

    /// Index i with full()[i] <= t < full()[i+1], restricted to the valid
    /// span range [3, P-1]; t = b maps to the last span. Throws DataError
    /// for t outside [a, b] (beyond a small roundoff allowance).
    int find_span(double t) const;

private:
    double a_;
    double b_;
    std::vector<double> interior_;
    std::vector<double> full_;
};

/// Equally spaced interior knots on (a, b) with clamped boundaries.
KnotVector make_knots(double a, double b, int basis_dim);

/// Dense basis (or basis-derivative) evaluations over a grid.
struct BasisMatrix {
    Eigen::MatrixXd values;  // J x P
    int deriv_order = 0;
    Eigen::VectorXd grid;    // the J abscissae
};

/// Values at one abscissa of the (at most four) cubic B-splines whose
/// support covers it. `first` is the column index of the first one.
struct LocalBasis {
    int first = 0;
    std::array<double, 4> values{};
};

/// Cox-de Boor evaluation of the nonzero basis functions at t.
LocalBasis eval_local(const KnotVector& knots, double t, int deriv);

/// J x P matrix of basis values (deriv = 0) or derivatives (deriv = 1, 2).
BasisMatrix eval_basis(const KnotVector& knots, const Eigen::VectorXd& t, int deriv);

/// Gram matrix of basis second derivatives, Omega_pq = \int s_p'' s_q'' dt.
struct PenaltyMatrix {
    Eigen::MatrixXd omega;  // P x P, symmetric PSD, rank P - 2
};

/// Exact Omega via 3-node Gauss-Legendre quadrature per knot interval
/// (the integrand is piecewise quadratic for cubic splines).
PenaltyMatrix penalty_matrix(const KnotVector& knots);

/// Cubic B-spline basis transformed so the curvature penalty is diagonal:
/// W(t) = S(t) U with U = [Q1 | Q2 Psi2^{-1/2}] from the eigendecomposition
/// of Omega. The two leading columns are the unpenalized affine pair
/// (constant, centered linear); the remaining P-2 columns have an identity
/// second-derivative Gram block.
class TransformedBasis {
public:
    TransformedBasis(KnotVector knots, Eigen::MatrixXd u);

    static constexpr int null_dim = 2;

    const KnotVector& knots() const { return knots_; }
    const Eigen::MatrixXd& transform() const { return u_; }
    int size() const { return knots_.size(); }
    double a() const { return knots_.a(); }
    double b() const { return knots_.b(); }

    /// J x P matrix of transformed basis values S(t, deriv) * U.
    Eigen::MatrixXd eval(const Eigen::VectorXd& t, int deriv) const;
    /// Single row of eval(); avoids building a dense S matrix.
    Eigen::RowVectorXd eval_point(double t, int deriv) const;

private:
    KnotVector knots_;
    Eigen::MatrixXd u_;
};

TransformedBasis wand_transform(const KnotVector& knots);

/// Pointwise penalty function
///   lambda(t) = ( sum_p lambda_p beta_p w_p''(t) / sum_p beta_p w_p''(t) )^2
/// reconstructed from coefficient-level weights. `lambda` holds the
/// per-coefficient lambda_p values (square roots of the ridge weights) and
/// must be zero in its first two entries. Grid points where the denominator
/// magnitude falls below 1e-12 are reported as NaN (undefined).
Eigen::VectorXd penalty_fn_values(const TransformedBasis& basis,
                                  const Eigen::VectorXd& beta,
                                  const Eigen::VectorXd& lambda,
                                  const Eigen::VectorXd& grid);

}  // namespace afpca
