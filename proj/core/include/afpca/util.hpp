#pragma once

#include <Eigen/Dense>

namespace afpca {

/// n equally spaced points from a to b inclusive; the endpoints are exact.
inline Eigen::VectorXd linspace(double a, double b, int n) {
    Eigen::VectorXd out(n);
    if (n == 1) {
        out[0] = a;
        return out;
    }
    const double step = (b - a) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) out[i] = a + step * i;
    out[0] = a;
    out[n - 1] = b;
    return out;
}

}  // namespace afpca
