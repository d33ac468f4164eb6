#include "sagp/partition.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sagp/errors.hpp"
#include "sagp/textio.hpp"

namespace sagp {
namespace {

// Largest scheme we are willing to materialize; deep trees with wide
// branching explode combinatorially long before they are statistically
// useful (every component still demands m pseudo-inputs).
constexpr double kMaxComponents = 5e6;

std::vector<std::int64_t> layer_cell_counts(const std::vector<int>& branching, int layer) {
    std::vector<std::int64_t> counts(branching.size());
    for (std::size_t l = 0; l < branching.size(); ++l) {
        std::int64_t c = 1;
        for (int s = 1; s < layer; ++s) c *= branching[l];
        counts[l] = c;
    }
    return counts;
}

Box box_from_cells(const std::vector<std::int64_t>& cells,
                   const std::vector<std::int64_t>& cell_counts) {
    const int d = static_cast<int>(cells.size());
    Box box{Eigen::VectorXd(d), Eigen::VectorXd(d)};
    for (int l = 0; l < d; ++l) {
        const auto B = static_cast<double>(cell_counts[static_cast<std::size_t>(l)]);
        box.lo[l] = static_cast<double>(cells[static_cast<std::size_t>(l)]) / B;
        box.hi[l] = static_cast<double>(cells[static_cast<std::size_t>(l)] + 1) / B;
    }
    return box;
}

void check_point_in_domain(const Eigen::VectorXd& x, int d) {
    if (x.size() != d) throw invalid_input_error("partition: point dimension mismatch");
    if (!x.allFinite() || (x.array() < 0.0).any() || (x.array() > 1.0).any())
        throw invalid_input_error("partition: point outside the unit cube");
}

// Sum of m over j's active descendants plus j itself.
int subtree_demand(const RpScheme& scheme, int j) {
    int demand = scheme.m_required;
    std::vector<int> stack{j};
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        for (const int child : scheme.comp(cur).children) {
            if (!scheme.comp(child).active) continue;
            demand += scheme.m_required;
            stack.push_back(child);
        }
    }
    return demand;
}

// Active descendants of j whose layer equals s.
std::vector<int> active_descendants_at_layer(const RpScheme& scheme, int j, int s) {
    std::vector<int> found;
    std::vector<int> stack{j};
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const Component& c = scheme.comp(cur);
        if (c.active && c.layer == s) {
            found.push_back(cur);
            continue;
        }
        if (c.layer >= s) continue;
        for (const int child : c.children)
            if (scheme.comp(child).active) stack.push_back(child);
    }
    std::sort(found.begin(), found.end());
    return found;
}

}  // namespace

std::vector<int> RpScheme::active_ids() const {
    std::vector<int> ids;
    for (const Component& c : components)
        if (c.active) ids.push_back(c.id);
    return ids;
}

int RpScheme::n_active() const {
    int n = 0;
    for (const Component& c : components) n += c.active ? 1 : 0;
    return n;
}

RpScheme build_full_rp(int d, const std::vector<int>& branching, int L, int m_required) {
    if (d < 1) throw invalid_input_error("build_full_rp: dimension must be at least 1");
    if (L < 1) throw invalid_input_error("build_full_rp: layer count must be at least 1");
    if (static_cast<int>(branching.size()) != d)
        throw invalid_input_error("build_full_rp: need one branching factor per dimension");
    for (const int b : branching)
        if (b < 2) throw invalid_input_error("build_full_rp: branching factors must be at least 2");
    if (m_required < 1)
        throw invalid_input_error("build_full_rp: pseudo-input count must be at least 1");

    double total = 0.0;
    for (int layer = 1; layer <= L; ++layer) {
        double size = 1.0;
        for (const int b : branching) size *= std::pow(static_cast<double>(b), layer - 1);
        total += size;
        if (total > kMaxComponents)
            throw invalid_input_error("build_full_rp: scheme would exceed the component limit");
    }

    RpScheme scheme;
    scheme.d = d;
    scheme.L = L;
    scheme.branching = branching;
    scheme.m_required = m_required;
    scheme.layers.resize(static_cast<std::size_t>(L));

    int next_id = 1;
    std::vector<std::int64_t> prev_layer_counts;
    int prev_layer_base = 0;  // id of the first component of the previous layer
    for (int layer = 1; layer <= L; ++layer) {
        const auto cell_counts = layer_cell_counts(branching, layer);
        const int first_id = next_id;
        // odometer over cells, last dimension fastest (row-major ids)
        std::vector<std::int64_t> cells(static_cast<std::size_t>(d), 0);
        bool done = false;
        while (!done) {
            Component c;
            c.id = next_id++;
            c.layer = layer;
            c.cells = cells;
            c.box = box_from_cells(cells, cell_counts);
            if (layer > 1) {
                // row-major index of the parent cell at the previous layer
                std::int64_t pidx = 0;
                for (int l = 0; l < d; ++l) {
                    const auto ul = static_cast<std::size_t>(l);
                    pidx = pidx * prev_layer_counts[ul] + cells[ul] / branching[ul];
                }
                c.parent = prev_layer_base + static_cast<int>(pidx);
            }
            scheme.layers[static_cast<std::size_t>(layer - 1)].push_back(c.id);
            scheme.components.push_back(std::move(c));

            int l = d - 1;
            for (; l >= 0; --l) {
                const auto ul = static_cast<std::size_t>(l);
                if (++cells[ul] < cell_counts[ul]) break;
                cells[ul] = 0;
            }
            done = (l < 0);
        }
        prev_layer_counts = cell_counts;
        prev_layer_base = first_id;
    }

    for (Component& c : scheme.components)
        if (c.parent != 0) scheme.comp(c.parent).children.push_back(c.id);
    return scheme;
}

std::vector<int> full_path(const RpScheme& scheme, const Eigen::VectorXd& x) {
    check_point_in_domain(x, scheme.d);
    std::vector<int> path{1};
    int cur = 1;
    for (int layer = 2; layer <= scheme.L; ++layer) {
        int found = 0;
        for (const int child : scheme.comp(cur).children) {
            if (scheme.comp(child).box.contains(x)) {
                found = child;
                break;  // children are in ascending id order: lower-index tie-break
            }
        }
        if (found == 0)
            throw internal_error("full_path: children do not cover their parent box");
        path.push_back(found);
        cur = found;
    }
    return path;
}

std::vector<int> box_counts(const RpScheme& scheme, const Eigen::MatrixXd& X) {
    if (X.cols() != scheme.d) throw invalid_input_error("box_counts: dimension mismatch");
    std::vector<int> counts(scheme.components.size(), 0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Eigen::VectorXd x = X.row(i);
        for (const int id : full_path(scheme, x))
            ++counts[static_cast<std::size_t>(id - 1)];
    }
    return counts;
}

std::vector<std::vector<int>> membership(const RpScheme& scheme, const Eigen::MatrixXd& X) {
    if (X.cols() != scheme.d) throw invalid_input_error("membership: dimension mismatch");
    std::vector<std::vector<int>> members(scheme.components.size());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Eigen::VectorXd x = X.row(i);
        for (const int id : full_path(scheme, x))
            members[static_cast<std::size_t>(id - 1)].push_back(static_cast<int>(i));
    }
    return members;
}

RpScheme prune(const RpScheme& scheme, const Eigen::MatrixXd& X) {
    for (const Component& c : scheme.components)
        if (!c.active) throw invalid_input_error("prune: scheme was already pruned");
    const std::vector<int> counts = box_counts(scheme, X);
    const auto n = X.rows();
    if (n < scheme.m_required)
        throw data_error("prune: dataset has fewer points than the root's pseudo-input demand");

    RpScheme out = scheme;
    const int N = static_cast<int>(out.components.size());
    for (int j = N; j >= 1; --j) {
        if (!out.comp(j).active) continue;
        const int have = counts[static_cast<std::size_t>(j - 1)];
        if (have >= subtree_demand(out, j)) continue;
        // shed the subtree a layer at a time, deepest first, until the box
        // can feed what remains; the component itself goes last
        for (int s = out.L; s >= out.comp(j).layer; --s) {
            for (const int t : active_descendants_at_layer(out, j, s))
                out.comp(t).active = false;
            if (!out.comp(j).active) break;
            if (have >= subtree_demand(out, j)) break;
        }
    }

    if (!out.comp(1).active)
        throw internal_error("prune: root deactivated despite n >= m");
    return out;
}

std::vector<int> locate(const Eigen::VectorXd& x, const RpScheme& scheme) {
    check_point_in_domain(x, scheme.d);
    if (!scheme.comp(1).active) throw internal_error("locate: root is inactive");
    std::vector<int> path{1};
    int cur = 1;
    for (int layer = 2; layer <= scheme.L; ++layer) {
        int found = 0;
        for (const int child : scheme.comp(cur).children) {
            if (scheme.comp(child).active && scheme.comp(child).box.contains(x)) {
                found = child;
                break;
            }
        }
        if (found == 0) break;  // the active subtree ends here for this point
        path.push_back(found);
        cur = found;
    }
    return path;
}

void save_scheme(const RpScheme& scheme, std::ostream& out) {
    out << "sagp-scheme v1\n";
    out << "d " << scheme.d << "\n";
    out << "L " << scheme.L << "\n";
    out << "m " << scheme.m_required << "\n";
    out << "branching";
    for (const int b : scheme.branching) out << " " << b;
    out << "\n";
    out << "components " << scheme.components.size() << "\n";
    out << "# id layer parent active cells.. centroid.. half_width..\n";
    for (const Component& c : scheme.components) {
        out << c.id << " " << c.layer << " " << c.parent << " " << (c.active ? 1 : 0);
        for (const auto cell : c.cells) out << " " << cell;
        const Eigen::VectorXd centroid = c.box.centroid();
        const Eigen::VectorXd hw = c.box.half_widths();
        for (int l = 0; l < scheme.d; ++l) out << " " << format_double(centroid[l]);
        for (int l = 0; l < scheme.d; ++l) out << " " << format_double(hw[l]);
        out << "\n";
    }
}

RpScheme load_scheme(std::istream& in) {
    std::string line;
    auto next_line = [&](const char* what) {
        while (std::getline(in, line)) {
            const auto stripped = strip_cr(line);
            if (!stripped.empty() && stripped[0] != '#') {
                line.assign(stripped);
                return;
            }
        }
        throw data_error(std::string("scheme file: missing ") + what);
    };

    next_line("header");
    if (line != "sagp-scheme v1") throw data_error("scheme file: unrecognized header");

    auto read_kv = [&](const char* key) -> std::vector<std::string_view> {
        next_line(key);
        auto parts = split_ws(line);
        if (parts.empty() || parts[0] != key)
            throw data_error(std::string("scheme file: expected key ") + key);
        parts.erase(parts.begin());
        return parts;
    };

    auto to_int = [](std::string_view sv, const char* what) {
        std::int64_t v;
        if (!parse_int64(sv, v)) throw data_error(std::string("scheme file: bad integer for ") + what);
        return v;
    };

    const int d = static_cast<int>(to_int(read_kv("d").at(0), "d"));
    const int L = static_cast<int>(to_int(read_kv("L").at(0), "L"));
    const int m = static_cast<int>(to_int(read_kv("m").at(0), "m"));
    const auto bparts = read_kv("branching");
    std::vector<int> branching;
    for (const auto& p : bparts) branching.push_back(static_cast<int>(to_int(p, "branching")));
    const auto n_components = to_int(read_kv("components").at(0), "components");

    RpScheme scheme = build_full_rp(d, branching, L, m);
    if (static_cast<std::int64_t>(scheme.components.size()) != n_components)
        throw data_error("scheme file: component count does not match the declared shape");

    for (std::int64_t row = 0; row < n_components; ++row) {
        next_line("component row");
        const auto parts = split_ws(line);
        if (parts.size() < static_cast<std::size_t>(4 + d))
            throw data_error("scheme file: truncated component row");
        const int id = static_cast<int>(to_int(parts[0], "id"));
        if (id < 1 || id > static_cast<int>(scheme.components.size()))
            throw data_error("scheme file: component id out of range");
        Component& c = scheme.comp(id);
        const int layer = static_cast<int>(to_int(parts[1], "layer"));
        const int parent = static_cast<int>(to_int(parts[2], "parent"));
        if (layer != c.layer || parent != c.parent)
            throw data_error("scheme file: component row contradicts the declared shape");
        for (int l = 0; l < d; ++l)
            if (to_int(parts[static_cast<std::size_t>(4 + l)], "cell") !=
                c.cells[static_cast<std::size_t>(l)])
                throw data_error("scheme file: component row contradicts the declared shape");
        c.active = to_int(parts[3], "active") != 0;
    }
    return scheme;
}

std::uint64_t scheme_hash(const RpScheme& scheme) {
    std::ostringstream buf;
    save_scheme(scheme, buf);
    return fnv1a_64(buf.str());
}

}  // namespace sagp
