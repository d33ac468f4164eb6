#pragma once

#include <Eigen/Dense>

namespace sagp {

// Closed axis-aligned box [lo, hi] in R^d. Bounds are stored explicitly
// (rather than centroid +/- half-width) so that containment at shared faces
// and at the domain edges 0 and 1 is exact in floating point.
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }

    Eigen::VectorXd centroid() const { return 0.5 * (lo + hi); }
    Eigen::VectorXd half_widths() const { return 0.5 * (hi - lo); }

    static Box unit(int d) {
        return Box{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
    }
};

}  // namespace sagp
