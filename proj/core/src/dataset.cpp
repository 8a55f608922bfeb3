#include "afpca/dataset.hpp"

#include "afpca/errors.hpp"

#include <cmath>
#include <string>

namespace afpca {

Eigen::Index FunctionalDataset::total_obs() const {
    Eigen::Index n = 0;
    for (const auto& s : subjects) n += s.t.size();
    return n;
}

bool FunctionalDataset::shared_grid() const {
    if (subjects.empty()) return false;
    const Eigen::VectorXd& t0 = subjects.front().t;
    for (const auto& s : subjects) {
        if (s.t.size() != t0.size() || s.t != t0) return false;
    }
    return true;
}

void FunctionalDataset::validate() const {
    if (subjects.size() < 2) throw DataError("dataset needs at least 2 subjects");
    if (!(a < b)) throw DataError("dataset domain is degenerate");
    const double tol = 1e-12 * (b - a);
    for (const auto& s : subjects) {
        if (s.t.size() != s.y.size())
            throw DataError("subject '" + s.id + "': t and y lengths differ");
        if (s.t.size() == 0) throw DataError("subject '" + s.id + "': no observations");
        if (!s.t.allFinite() || !s.y.allFinite())
            throw DataError("subject '" + s.id + "': non-finite values");
        if (s.t.minCoeff() < a - tol || s.t.maxCoeff() > b + tol)
            throw DataError("subject '" + s.id + "': abscissae outside the domain");
    }
}

}  // namespace afpca
