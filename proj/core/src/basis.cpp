#include "afpca/basis.hpp"

#include "afpca/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace afpca {

KnotVector::KnotVector(double a, double b, std::vector<double> interior)
    : a_(a), b_(b), interior_(std::move(interior)) {
    if (!(a < b)) throw UsageError("invalid domain: require a < b");
    if (!std::isfinite(a) || !std::isfinite(b)) throw UsageError("invalid domain: non-finite endpoint");
    double prev = a_;
    for (double k : interior_) {
        if (!(k > prev) || !(k < b_))
            throw UsageError("interior knots must be strictly increasing within (a, b)");
        prev = k;
    }
    if (size() < 6)
        throw UsageError("invalid basis dimension: need P >= 6 (at least 2 interior knots)");
    full_.reserve(interior_.size() + 8);
    full_.insert(full_.end(), 4, a_);
    full_.insert(full_.end(), interior_.begin(), interior_.end());
    full_.insert(full_.end(), 4, b_);
}

int KnotVector::find_span(double t) const {
    const double tol = 1e-12 * (b_ - a_);
    if (!(t >= a_ - tol) || !(t <= b_ + tol)) {
        throw DataError("abscissa " + std::to_string(t) + " outside basis domain [" +
                        std::to_string(a_) + ", " + std::to_string(b_) + "]");
    }
    const double tt = std::clamp(t, a_, b_);
    const int p = size();
    auto it = std::upper_bound(full_.begin(), full_.end(), tt);
    int span = static_cast<int>(it - full_.begin()) - 1;
    return std::clamp(span, 3, p - 1);
}

KnotVector make_knots(double a, double b, int basis_dim) {
    if (basis_dim < 6) throw UsageError("invalid basis dimension: need P >= 6");
    if (!(a < b)) throw UsageError("invalid domain: require a < b");
    const int n_interior = basis_dim - 4;
    const int n_segments = basis_dim - 3;
    std::vector<double> interior(n_interior);
    for (int k = 1; k <= n_interior; ++k)
        interior[k - 1] = a + (b - a) * static_cast<double>(k) / n_segments;
    return KnotVector(a, b, std::move(interior));
}

LocalBasis eval_local(const KnotVector& knots, double t, int deriv) {
    if (deriv < 0 || deriv > 2) throw UsageError("derivative order must be 0, 1, or 2");
    const int span = knots.find_span(t);
    const double tt = std::clamp(t, knots.a(), knots.b());
    const auto& u = knots.full();
    constexpr int degree = 3;

    // Cox-de Boor triangle (The NURBS Book, A2.3). ndu holds basis values
    // in its upper triangle and knot differences on/below the diagonal.
    double ndu[4][4];
    double left[4];
    double right[4];
    ndu[0][0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[j] = tt - u[span + 1 - j];
        right[j] = u[span + j] - tt;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    LocalBasis out;
    out.first = span - degree;
    if (deriv == 0) {
        for (int j = 0; j <= degree; ++j) out.values[j] = ndu[j][degree];
        return out;
    }

    double ders[3][4] = {};
    for (int j = 0; j <= degree; ++j) ders[0][j] = ndu[j][degree];
    for (int r = 0; r <= degree; ++r) {
        int s1 = 0;
        int s2 = 1;
        double a2[2][4] = {};
        a2[0][0] = 1.0;
        for (int k = 1; k <= deriv; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = degree - k;
            if (r >= k) {
                const double den = ndu[pk + 1][rk];
                a2[s2][0] = den == 0.0 ? 0.0 : a2[s1][0] / den;
                d = a2[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = r - 1 <= pk ? k - 1 : degree - r;
            for (int j = j1; j <= j2; ++j) {
                const double den = ndu[pk + 1][rk + j];
                a2[s2][j] = den == 0.0 ? 0.0 : (a2[s1][j] - a2[s1][j - 1]) / den;
                d += a2[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                const double den = ndu[pk + 1][r];
                a2[s2][k] = den == 0.0 ? 0.0 : -a2[s1][k - 1] / den;
                d += a2[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::swap(s1, s2);
        }
    }
    // scale by p! / (p - k)!
    double factor = degree;
    for (int k = 2; k <= deriv; ++k) factor *= degree - k + 1;
    for (int j = 0; j <= degree; ++j) out.values[j] = ders[deriv][j] * factor;
    return out;
}

BasisMatrix eval_basis(const KnotVector& knots, const Eigen::VectorXd& t, int deriv) {
    BasisMatrix out;
    out.deriv_order = deriv;
    out.grid = t;
    out.values = Eigen::MatrixXd::Zero(t.size(), knots.size());
    for (Eigen::Index j = 0; j < t.size(); ++j) {
        const LocalBasis lb = eval_local(knots, t[j], deriv);
        for (int r = 0; r < 4; ++r) out.values(j, lb.first + r) = lb.values[r];
    }
    return out;
}

PenaltyMatrix penalty_matrix(const KnotVector& knots) {
    const int p = knots.size();
    const auto& u = knots.full();
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p, p);

    static const double gl_node[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    static const double gl_weight[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

    for (int span = 3; span <= p - 1; ++span) {
        const double t0 = u[span];
        const double t1 = u[span + 1];
        const double half = 0.5 * (t1 - t0);
        const double mid = 0.5 * (t0 + t1);
        for (int g = 0; g < 3; ++g) {
            const LocalBasis lb = eval_local(knots, mid + half * gl_node[g], 2);
            const double w = half * gl_weight[g];
            for (int r = 0; r < 4; ++r) {
                const double wr = w * lb.values[r];
                for (int c = r; c < 4; ++c)
                    omega(lb.first + r, lb.first + c) += wr * lb.values[c];
            }
        }
    }
    // mirror the accumulated upper triangle so symmetry is exact
    for (int r = 1; r < p; ++r)
        for (int c = 0; c < r; ++c) omega(r, c) = omega(c, r);
    return PenaltyMatrix{std::move(omega)};
}

namespace {

void fix_column_sign(Eigen::Ref<Eigen::VectorXd> col) {
    Eigen::Index idx = 0;
    col.cwiseAbs().maxCoeff(&idx);
    if (col[idx] < 0.0) col = -col;
}

}  // namespace

TransformedBasis::TransformedBasis(KnotVector knots, Eigen::MatrixXd u)
    : knots_(std::move(knots)), u_(std::move(u)) {}

Eigen::MatrixXd TransformedBasis::eval(const Eigen::VectorXd& t, int deriv) const {
    Eigen::MatrixXd out(t.size(), size());
    for (Eigen::Index j = 0; j < t.size(); ++j) {
        const LocalBasis lb = eval_local(knots_, t[j], deriv);
        Eigen::Map<const Eigen::Vector4d> vals(lb.values.data());
        out.row(j) = vals.transpose() * u_.middleRows(lb.first, 4);
    }
    return out;
}

Eigen::RowVectorXd TransformedBasis::eval_point(double t, int deriv) const {
    const LocalBasis lb = eval_local(knots_, t, deriv);
    Eigen::Map<const Eigen::Vector4d> vals(lb.values.data());
    return vals.transpose() * u_.middleRows(lb.first, 4);
}

TransformedBasis wand_transform(const KnotVector& knots) {
    const int p = knots.size();
    const Eigen::MatrixXd omega = penalty_matrix(knots).omega;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(omega);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigendecomposition of the penalty matrix failed");
    const Eigen::VectorXd evals = es.eigenvalues();  // ascending
    const double lam_max = evals[p - 1];
    int n_null = 0;
    for (int i = 0; i < p; ++i)
        if (evals[i] < 1e-8 * lam_max) ++n_null;
    if (n_null != 2)
        throw NumericalError("penalty matrix null space has dimension " +
                             std::to_string(n_null) + ", expected 2");

    // Rotate the null pair in-plane so column 1 spans the constant function
    // (coefficient vector of all ones) and column 2 the centered linear one.
    const Eigen::MatrixXd q1 = es.eigenvectors().leftCols(2);
    Eigen::Vector2d r1 = q1.transpose() * Eigen::VectorXd::Ones(p);
    r1.normalize();
    const Eigen::Vector2d r2(-r1[1], r1[0]);

    Eigen::MatrixXd u(p, p);
    u.col(0) = q1 * r1;
    u.col(1) = q1 * r2;
    for (int k = 0; k < p - 2; ++k) {
        const int src = p - 1 - k;  // decreasing eigenvalue order
        u.col(2 + k) = es.eigenvectors().col(src) / std::sqrt(evals[src]);
    }
    for (int c = 0; c < p; ++c) fix_column_sign(u.col(c));
    return TransformedBasis(knots, std::move(u));
}

Eigen::VectorXd penalty_fn_values(const TransformedBasis& basis,
                                  const Eigen::VectorXd& beta,
                                  const Eigen::VectorXd& lambda,
                                  const Eigen::VectorXd& grid) {
    const int p = basis.size();
    if (beta.size() != p || lambda.size() != p)
        throw UsageError("beta and lambda must have length P");
    if (lambda[0] != 0.0 || lambda[1] != 0.0)
        throw UsageError("lambda entries for the two unpenalized directions must be zero");

    Eigen::VectorXd out(grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
        const Eigen::RowVectorXd w2 = basis.eval_point(grid[j], 2);
        double num = 0.0;
        double den = 0.0;
        for (int q = 2; q < p; ++q) {
            const double bw = beta[q] * w2[q];
            num += lambda[q] * bw;
            den += bw;
        }
        out[j] = std::abs(den) < 1e-12 ? std::numeric_limits<double>::quiet_NaN()
                                       : (num / den) * (num / den);
    }
    return out;
}

}  // namespace afpca
