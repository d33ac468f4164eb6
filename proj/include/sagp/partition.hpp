#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "sagp/geometry.hpp"

namespace sagp {

// One node of the recursive-partitioning tree. Boxes are reconstructed from
// integer cell indices (dimension l of layer ell splits [0,1] into
// b_l^(ell-1) cells), which makes shared faces and the domain edges exact:
// siblings' adjacent bounds are the same double, children cover their parent
// with no floating-point gaps.
struct Component {
    int id = 0;       // 1-based, breadth-first; the root is 1
    int layer = 0;    // 1..L
    int parent = 0;   // 0 for the root
    std::vector<int> children;
    bool active = true;
    std::vector<std::int64_t> cells;  // per-dimension cell index at this layer
    Box box;
};

struct RpScheme {
    int d = 0;
    int L = 0;
    std::vector<int> branching;  // b_1..b_d
    int m_required = 0;          // pseudo-inputs demanded by each component
    std::vector<Component> components;      // indexed by id-1
    std::vector<std::vector<int>> layers;   // layer ell -> ids, ascending

    const Component& comp(int id) const { return components[static_cast<std::size_t>(id - 1)]; }
    Component& comp(int id) { return components[static_cast<std::size_t>(id - 1)]; }
    std::vector<int> active_ids() const;
    int n_active() const;
};

// Full (unpruned) tree: layer ell holds prod_i b_i^(ell-1) components, each an
// equal subdivision of its parent, all active.
RpScheme build_full_rp(int d, const std::vector<int>& branching, int L, int m_required);

// Root-to-bottom path of x through the full tree, one id per layer 1..L,
// ignoring active flags. Points on a shared face go to the lower-index
// sibling. Throws invalid_input_error when x is outside the unit cube.
std::vector<int> full_path(const RpScheme& scheme, const Eigen::VectorXd& x);

// Per-component counts of the tie-broken box assignment of every row of X.
std::vector<int> box_counts(const RpScheme& scheme, const Eigen::MatrixXd& X);

// Per-component lists of row indices assigned to each component's box
// (tie-broken), independent of active flags.
std::vector<std::vector<int>> membership(const RpScheme& scheme, const Eigen::MatrixXd& X);

// Bottom-up pruning: a component whose box holds fewer points than its own
// pseudo-input demand plus that of its active descendants sheds whole layers
// of its subtree (deepest first, possibly including itself) until the demand
// is met. Throws data_error when even the root cannot be satisfied (n < m).
[[nodiscard]] RpScheme prune(const RpScheme& scheme, const Eigen::MatrixXd& X);

// Root-to-leaf path of x through the active subtree of a pruned scheme:
// exactly one active id per layer until no active child contains x.
std::vector<int> locate(const Eigen::VectorXd& x, const RpScheme& scheme);

// Plain-text round trip. The serialization stores integer cells, so a
// reloaded scheme reproduces bit-identical boxes; centroids and half-widths
// are included for human consumption.
void save_scheme(const RpScheme& scheme, std::ostream& out);
RpScheme load_scheme(std::istream& in);

// FNV-1a over the serialized form; recorded in fit manifests.
std::uint64_t scheme_hash(const RpScheme& scheme);

}  // namespace sagp
