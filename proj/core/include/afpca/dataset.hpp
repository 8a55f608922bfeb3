#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace afpca {

/// A sample of functions observed over per-subject grids (possibly sparse
/// or irregular) on a common domain [a, b].
struct FunctionalDataset {
    struct Subject {
        std::string id;
        Eigen::VectorXd t;
        Eigen::VectorXd y;
    };

    std::vector<Subject> subjects;
    double a = 0.0;
    double b = 1.0;

    int n_subjects() const { return static_cast<int>(subjects.size()); }
    Eigen::Index total_obs() const;
    /// True when every subject shares one identical observation grid.
    bool shared_grid() const;
    /// Throws DataError when an invariant is violated.
    void validate() const;
};

}  // namespace afpca
