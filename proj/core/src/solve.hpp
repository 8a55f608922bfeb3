#pragma once

#include "afpca/errors.hpp"

#include <Eigen/Dense>

#include <iostream>
#include <string>

namespace afpca::detail {

// Solve the symmetric positive (semi)definite system A x = b via LDLT.
// If the factorization result is unusable, fall back to an SVD solve:
// full-rank systems get the SVD solution with a warning, rank-deficient
// ones raise DataError carrying `context`.
inline Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                 const std::string& context) {
    Eigen::VectorXd x = a.ldlt().solve(b);
    const double scale = a.norm() * x.norm() + b.norm();
    if (x.allFinite() && (a * x - b).norm() <= 1e-6 * scale + 1e-300) return x;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? sv[0] * 1e-12 : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > cutoff) ++rank;
    if (rank < a.cols())
        throw DataError("rank-deficient system in " + context);
    std::cerr << "afpca: warning: ill-conditioned system in " << context
              << "; using SVD fallback solve\n";
    return svd.solve(b);
}

}  // namespace afpca::detail
