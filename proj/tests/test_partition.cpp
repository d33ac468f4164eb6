#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "helpers/oracles.hpp"
#include "sagp/errors.hpp"
#include "sagp/partition.hpp"
#include "sagp/rng.hpp"

using sagp::Box;
using sagp::build_full_rp;
using sagp::Component;
using sagp::RpScheme;
using sagp::Rng;

TEST_CASE("layer sizes follow the branching product") {
    const RpScheme s = build_full_rp(2, {2, 3}, 3, 5);
    REQUIRE(s.layers.size() == 3);
    CHECK(s.layers[0].size() == 1);
    CHECK(s.layers[1].size() == 6);
    CHECK(s.layers[2].size() == 36);
    CHECK(s.components.size() == 43);
    CHECK(s.m_required == 5);
    // ids are breadth-first and 1-based
    CHECK(s.layers[0][0] == 1);
    CHECK(s.layers[1].front() == 2);
    CHECK(s.layers[1].back() == 7);
    CHECK(s.layers[2].front() == 8);
    CHECK(s.layers[2].back() == 43);
    for (const Component& c : s.components) CHECK(c.active);
}

TEST_CASE("the root is the unit cube and children tile their parent") {
    const RpScheme s = build_full_rp(2, {2, 2}, 2, 3);
    const Component& root = s.comp(1);
    CHECK(root.layer == 1);
    CHECK(root.parent == 0);
    CHECK(root.box.lo == Eigen::VectorXd::Zero(2));
    CHECK(root.box.hi == Eigen::VectorXd::Ones(2));
    REQUIRE(root.children.size() == 4);

    // children partition [0,1]^2 into quarters with bit-exact shared faces
    double area = 0.0;
    for (const int cid : root.children) {
        const Box& b = s.comp(cid).box;
        area += (b.hi - b.lo).prod();
        CHECK(s.comp(cid).parent == 1);
        CHECK(s.comp(cid).layer == 2);
    }
    CHECK(area == doctest::Approx(1.0).epsilon(1e-15));
    // the face shared by the two left-right siblings is the same double
    const Box& left = s.comp(root.children[0]).box;
    bool found_right_neighbor = false;
    for (const int cid : root.children) {
        const Box& b = s.comp(cid).box;
        if (b.lo[0] == left.hi[0] && b.lo[1] == left.lo[1]) found_right_neighbor = true;
    }
    CHECK(found_right_neighbor);
}

TEST_CASE("cells at layer ell subdivide each dimension b^(ell-1) times") {
    const RpScheme s = build_full_rp(1, {3}, 3, 2);
    // layer 3 has 9 components covering [k/9, (k+1)/9]
    REQUIRE(s.layers[2].size() == 9);
    for (std::size_t k = 0; k < 9; ++k) {
        const Box& b = s.comp(s.layers[2][k]).box;
        CHECK(b.lo[0] == static_cast<double>(k) / 9.0);
        CHECK(b.hi[0] == static_cast<double>(k + 1) / 9.0);
    }
}

TEST_CASE("uneven branching uses the right factor per dimension") {
    const RpScheme s = build_full_rp(2, {2, 3}, 2, 1);
    REQUIRE(s.layers[1].size() == 6);
    // dimension 0 is split in halves, dimension 1 in thirds
    std::vector<double> lo0, lo1;
    for (const int cid : s.layers[1]) {
        lo0.push_back(s.comp(cid).box.lo[0]);
        lo1.push_back(s.comp(cid).box.lo[1]);
    }
    std::sort(lo0.begin(), lo0.end());
    std::sort(lo1.begin(), lo1.end());
    CHECK(lo0.front() == 0.0);
    CHECK(lo0.back() == 0.5);
    CHECK(lo1.front() == 0.0);
    CHECK(lo1.back() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("construction rejects bad shape parameters") {
    CHECK_THROWS_AS((void)build_full_rp(0, {}, 1, 1), sagp::invalid_input_error);
    CHECK_THROWS_AS((void)build_full_rp(1, {1}, 2, 1), sagp::invalid_input_error);
    CHECK_THROWS_AS((void)build_full_rp(1, {2, 2}, 2, 1), sagp::invalid_input_error);
    CHECK_THROWS_AS((void)build_full_rp(1, {2}, 0, 1), sagp::invalid_input_error);
    CHECK_THROWS_AS((void)build_full_rp(1, {2}, 1, 0), sagp::invalid_input_error);
}

TEST_CASE("paths through the full tree match an ascending cell scan") {
    const int B = 3;
    const RpScheme s = build_full_rp(1, {B}, 3, 1);
    Rng rng(29);
    for (int t = 0; t < 200; ++t) {
        Eigen::VectorXd x(1);
        x[0] = rng.uniform();
        const std::vector<int> path = full_path(s, x);
        REQUIRE(path.size() == 3);
        CHECK(path[0] == 1);
        for (int ell = 2; ell <= 3; ++ell) {
            const std::int64_t cells = static_cast<std::int64_t>(std::pow(B, ell - 1));
            const std::int64_t expect = oracle::first_containing_cell(x[0], cells);
            CHECK(s.comp(path[static_cast<std::size_t>(ell - 1)]).cells[0] == expect);
        }
    }
}

TEST_CASE("points on a shared face go to the lower-index sibling") {
    const RpScheme s = build_full_rp(1, {2}, 2, 1);
    Eigen::VectorXd x(1);
    x[0] = 0.5;  // boundary between the two layer-2 children
    const std::vector<int> path = full_path(s, x);
    REQUIRE(path.size() == 2);
    CHECK(path[1] == 2);  // lower sibling of {2, 3}
    // domain edges stay in range
    x[0] = 0.0;
    CHECK(full_path(s, x)[1] == 2);
    x[0] = 1.0;
    CHECK(full_path(s, x)[1] == 3);
}

TEST_CASE("points outside the unit cube are rejected") {
    const RpScheme s = build_full_rp(2, {2, 2}, 2, 1);
    Eigen::VectorXd x(2);
    x << -0.01, 0.5;
    CHECK_THROWS_AS((void)full_path(s, x), sagp::invalid_input_error);
    x << 0.5, 1.01;
    CHECK_THROWS_AS((void)full_path(s, x), sagp::invalid_input_error);
    Eigen::VectorXd wrong_dim(1);
    wrong_dim << 0.5;
    CHECK_THROWS_AS((void)full_path(s, wrong_dim), sagp::invalid_input_error);
}

TEST_CASE("box counts accumulate the tie-broken assignments") {
    const RpScheme s = build_full_rp(1, {2}, 2, 1);
    Eigen::MatrixXd X(5, 1);
    X << 0.1, 0.4, 0.5, 0.6, 0.9;
    const std::vector<int> counts = box_counts(s, X);
    REQUIRE(counts.size() == 3);
    CHECK(counts[0] == 5);  // root sees everything
    CHECK(counts[1] == 3);  // 0.1, 0.4 and the tie at 0.5
    CHECK(counts[2] == 2);
}

TEST_CASE("membership lists the same rows the counts sum up") {
    const RpScheme s = build_full_rp(2, {2, 2}, 3, 1);
    Rng rng(31);
    Eigen::MatrixXd X(40, 2);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform();
    const auto members = membership(s, X);
    const auto counts = box_counts(s, X);
    REQUIRE(members.size() == s.components.size());
    for (std::size_t j = 0; j < members.size(); ++j) {
        CHECK(static_cast<int>(members[j].size()) == counts[j]);
        for (const int row : members[j])
            CHECK(s.comp(static_cast<int>(j) + 1).box.contains(X.row(row).transpose()));
    }
    // every layer partitions the rows exactly once
    for (const auto& layer : s.layers) {
        int total = 0;
        for (const int id : layer) total += counts[static_cast<std::size_t>(id - 1)];
        CHECK(total == 40);
    }
}

TEST_CASE("pruning keeps a component only when its subtree demand is met") {
    // 1-d, branching 2, three layers; counts per leaf chosen so that layer 3
    // collapses under one internal node and one leaf survives elsewhere
    const RpScheme full = build_full_rp(1, {2}, 3, 3);
    // leaves 4,5,6,7 get 3,3,7,2 points: id 7 dies (2 < 3); id 2's subtree
    // demand 3*(1+2)=9 exceeds its 6 points, so layer 3 under id 2 sheds
    // entirely; id 3 keeps 9 >= 9 but its child 7 is gone and 6 survives
    std::vector<std::pair<double, double>> ranges = {
        {0.00, 0.25}, {0.25, 0.50}, {0.50, 0.75}, {0.75, 1.00}};
    std::vector<int> leaf_counts = {3, 3, 7, 2};
    int n = 0;
    for (const int c : leaf_counts) n += c;
    Eigen::MatrixXd X(n, 1);
    int row = 0;
    for (std::size_t leaf = 0; leaf < 4; ++leaf)
        for (int k = 0; k < leaf_counts[leaf]; ++k) {
            const auto [lo, hi] = ranges[leaf];
            X(row++, 0) = lo + (hi - lo) * (static_cast<double>(k) + 0.5) / 7.0;
        }
    const RpScheme pruned = prune(full, X);
    const std::vector<int> active = pruned.active_ids();
    CHECK(active == std::vector<int>{1, 2, 3, 6});
    CHECK(pruned.n_active() == 4);
    // the full tree is untouched structurally: only flags changed
    CHECK(pruned.components.size() == full.components.size());
    for (const Component& c : pruned.components)
        CHECK(c.box.lo == full.comp(c.id).box.lo);
}

TEST_CASE("a tree whose boxes all hold enough points survives pruning intact") {
    const RpScheme full = build_full_rp(1, {2}, 2, 2);
    Eigen::MatrixXd X(8, 1);
    X << 0.05, 0.15, 0.25, 0.35, 0.55, 0.65, 0.75, 0.85;
    const RpScheme pruned = prune(full, X);
    CHECK(pruned.n_active() == 3);
}

TEST_CASE("pruning fails loudly when even the root is infeasible") {
    const RpScheme full = build_full_rp(1, {2}, 1, 5);
    Eigen::MatrixXd X(3, 1);
    X << 0.2, 0.5, 0.8;
    CHECK_THROWS_AS((void)prune(full, X), sagp::data_error);
}

TEST_CASE("locate walks only the active subtree") {
    const RpScheme full = build_full_rp(1, {2}, 3, 3);
    std::vector<std::pair<double, double>> ranges = {
        {0.00, 0.25}, {0.25, 0.50}, {0.50, 0.75}, {0.75, 1.00}};
    std::vector<int> leaf_counts = {3, 3, 7, 2};
    Eigen::MatrixXd X(15, 1);
    int row = 0;
    for (std::size_t leaf = 0; leaf < 4; ++leaf)
        for (int k = 0; k < leaf_counts[leaf]; ++k) {
            const auto [lo, hi] = ranges[leaf];
            X(row++, 0) = lo + (hi - lo) * (static_cast<double>(k) + 0.5) / 7.0;
        }
    const RpScheme pruned = prune(full, X);  // active ids {1, 2, 3, 6}
    Eigen::VectorXd x(1);
    x << 0.1;  // under id 2 whose layer-3 children are gone
    CHECK(locate(x, pruned) == std::vector<int>{1, 2});
    x << 0.6;  // id 6 survives at layer 3
    CHECK(locate(x, pruned) == std::vector<int>{1, 3, 6});
    x << 0.9;  // id 7 is gone, so the path stops at its parent
    CHECK(locate(x, pruned) == std::vector<int>{1, 3});
}

TEST_CASE("serialization round trips bit-identically and hashes stably") {
    const RpScheme s = build_full_rp(2, {2, 3}, 3, 4);
    std::stringstream buf;
    save_scheme(s, buf);
    const RpScheme back = sagp::load_scheme(buf);
    REQUIRE(back.components.size() == s.components.size());
    CHECK(back.d == s.d);
    CHECK(back.L == s.L);
    CHECK(back.branching == s.branching);
    CHECK(back.m_required == s.m_required);
    for (std::size_t j = 0; j < s.components.size(); ++j) {
        const Component& a = s.components[j];
        const Component& b = back.components[j];
        CHECK(a.id == b.id);
        CHECK(a.layer == b.layer);
        CHECK(a.parent == b.parent);
        CHECK(a.children == b.children);
        CHECK(a.active == b.active);
        CHECK(a.cells == b.cells);
        CHECK(a.box.lo == b.box.lo);  // exact: boxes rebuild from integer cells
        CHECK(a.box.hi == b.box.hi);
    }
    CHECK(scheme_hash(back) == scheme_hash(s));
}

TEST_CASE("pruned flags survive the round trip and change the hash") {
    const RpScheme full = build_full_rp(1, {2}, 2, 2);
    Eigen::MatrixXd X(5, 1);
    X << 0.1, 0.2, 0.3, 0.6, 0.9;  // right child holds 2 < 2+... prune something
    const RpScheme pruned = prune(full, X);
    std::stringstream buf;
    save_scheme(pruned, buf);
    const RpScheme back = sagp::load_scheme(buf);
    CHECK(back.active_ids() == pruned.active_ids());
    if (pruned.n_active() != full.n_active())
        CHECK(scheme_hash(pruned) != scheme_hash(full));
}

TEST_CASE("malformed scheme text is a data error") {
    std::stringstream empty;
    CHECK_THROWS_AS((void)sagp::load_scheme(empty), sagp::data_error);
    std::stringstream garbage("not a scheme at all\n1 2 3\n");
    CHECK_THROWS_AS((void)sagp::load_scheme(garbage), sagp::data_error);
}
