////////////////////////////////////////////////////////////////////////////////
// mechanism.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Discrete mechanism extraction from a converged continuous design.
//
//  Springs binarize at a threshold (default 0.5, warning when values sit in
//  the non-crisp 0.2..0.8 band). Block pairs with both springs present merge
//  into rigid links (union-find); pairs with exactly one present spring form
//  a revolute joint at that spring's node, its axis running from the sphere
//  center through the shape-displaced node. The anchor adds the ground
//  revolute. Links unreachable from the ground are dropped as debris; losing
//  the effector or input block that way is an error. Mobility follows the
//  spherical count 3(L-1) - 2J.
*/
////////////////////////////////////////////////////////////////////////////////
#ifndef EXOSYN_MECHANISM_HPP
#define EXOSYN_MECHANISM_HPP

#include "exosyn/design.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace exosyn {

inline std::vector<bool> binarize(const VecX& xi_topology, double threshold,
                                  std::vector<std::string>* warnings = nullptr) {
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw std::invalid_argument("binarize: threshold must lie in (0, 1)");
    std::vector<bool> present(xi_topology.size());
    for (int m = 0; m < xi_topology.size(); ++m) {
        present[m] = xi_topology[m] >= threshold;
        if (warnings && xi_topology[m] > 0.2 && xi_topology[m] < 0.8)
            warnings->push_back("spring " + std::to_string(m) + " is not crisp (xi = " +
                                std::to_string(xi_topology[m]) + ")");
    }
    return present;
}

struct MechanismGraph {
    struct Link {
        std::vector<int> blocks; // empty for the ground link
    };
    struct Joint {
        int link_a = 0;
        int link_b = 0;
        int node = -1; // grid node carrying the joint spring (anchor node for ground)
        Vec3 axis = Vec3::UnitZ();
    };

    std::vector<Link> links; // links[0] is the ground
    std::vector<Joint> joints;
    int dof = 0;
    int input_link = -1;    // link containing the input block
    int effector_link = -1; // link containing the effector block
    std::vector<std::string> warnings;

    int n_links() const { return static_cast<int>(links.size()); }
    int n_joints() const { return static_cast<int>(joints.size()); }
};

inline int mobility(int n_links_including_ground, int n_joints) {
    return 3 * (n_links_including_ground - 1) - 2 * n_joints;
}

inline int mobility(const MechanismGraph& g) { return mobility(g.n_links(), g.n_joints()); }

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    /// Returns false when the two were already connected.
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[std::max(a, b)] = std::min(a, b); // order-independent representative
        return true;
    }
};

} // namespace detail

/// Builds the linkage graph of a binarized design. Node positions (and hence
/// joint axes) honor the shape variables of the design.
inline MechanismGraph build_linkage(const std::vector<bool>& present, const SphericalGrid& g,
                                    const DesignVector& design, const SolverParams& params) {
    if ((int)present.size() != g.n_springs())
        throw std::invalid_argument("build_linkage: spring flag count mismatch");

    MechanismGraph out;

    // Count present springs per block pair.
    std::map<std::pair<int, int>, std::vector<int>> pair_springs;
    for (int m = 0; m < g.n_springs(); ++m) {
        if (!present[m]) continue;
        pair_springs[{g.springs[m].block_first, g.springs[m].block_second}].push_back(m);
    }

    detail::UnionFind uf(g.n_blocks());
    for (const auto& [pair, springs] : pair_springs) {
        if (springs.size() == 2) {
            if (!uf.unite(pair.first, pair.second))
                out.warnings.push_back("blocks " + std::to_string(pair.first) + "," +
                                       std::to_string(pair.second) +
                                       " rigidly merge across an already-rigid loop");
        }
    }

    // Provisional links: one per union-find root, ground gets index 0 later.
    std::map<int, int> root_to_link;
    std::vector<MechanismGraph::Link> links;
    for (int b = 0; b < g.n_blocks(); ++b) {
        const int root = uf.find(b);
        if (!root_to_link.count(root)) {
            root_to_link[root] = static_cast<int>(links.size());
            links.push_back({});
        }
        links[root_to_link[root]].blocks.push_back(b);
    }

    struct ProtoJoint {
        int la, lb, node;
    };
    std::vector<ProtoJoint> joints;
    for (const auto& [pair, springs] : pair_springs) {
        if (springs.size() != 1) continue;
        const int la = root_to_link[uf.find(pair.first)];
        const int lb = root_to_link[uf.find(pair.second)];
        if (la == lb) {
            out.warnings.push_back("joint spring " + std::to_string(springs[0]) +
                                   " closes a rigid link onto itself; ignored");
            continue;
        }
        joints.push_back({la, lb, g.springs[springs[0]].node});
    }

    // Reachability from the ground through the anchor and the joints.
    const int input_link = root_to_link[uf.find(g.block_input)];
    const int effector_link = root_to_link[uf.find(g.block_effector)];
    std::vector<bool> reachable(links.size(), false);
    std::vector<int> stack{input_link};
    reachable[input_link] = true;
    while (!stack.empty()) {
        const int at = stack.back();
        stack.pop_back();
        for (const ProtoJoint& j : joints) {
            const int other = j.la == at ? j.lb : (j.lb == at ? j.la : -1);
            if (other >= 0 && !reachable[other]) {
                reachable[other] = true;
                stack.push_back(other);
            }
        }
    }
    if (!reachable[effector_link])
        throw std::runtime_error("disconnected mechanism: no load path from ground to effector");

    // Final numbering: ground first, then reachable links; debris dropped.
    std::vector<int> renumber(links.size(), -1);
    out.links.push_back({}); // ground
    for (int l = 0; l < (int)links.size(); ++l) {
        if (!reachable[l]) {
            if (!links[l].blocks.empty())
                out.warnings.push_back("dropping debris link of " +
                                       std::to_string(links[l].blocks.size()) + " block(s)");
            continue;
        }
        renumber[l] = out.n_links();
        out.links.push_back(links[l]);
    }

    out.input_link = renumber[input_link];
    out.effector_link = renumber[effector_link];

    // Ground revolute at the anchor node.
    out.joints.push_back({0, out.input_link, g.anchor_node,
                          node_placement(g.anchor_node, g, design, params).position});
    for (const ProtoJoint& j : joints) {
        if (renumber[j.la] < 0 || renumber[j.lb] < 0) continue;
        out.joints.push_back({renumber[j.la], renumber[j.lb], j.node,
                              node_placement(j.node, g, design, params).position});
    }
    out.dof = mobility(out);
    return out;
}

/// Classification of the families with closed-form screw treatment.
enum class MechanismFamily {
    SerialThreeR,   // ground - R - link - R - link - R - effector link
    RFourBarR,      // ground - R - [spherical four-bar] - R - effector link
    General
};

inline MechanismFamily classify(const MechanismGraph& m) {
    // adjacency degree per link
    std::vector<int> degree(m.n_links(), 0);
    for (const auto& j : m.joints) {
        ++degree[j.link_a];
        ++degree[j.link_b];
    }
    if (m.n_links() == 4 && m.n_joints() == 3 && m.dof == 3 && degree[0] == 1 &&
        degree[m.effector_link] == 1) {
        // a path: both interior links of degree 2 (rules out a star)
        bool interior_ok = true;
        for (int l = 1; l < m.n_links(); ++l)
            if (l != m.effector_link && degree[l] != 2) interior_ok = false;
        if (interior_ok) return MechanismFamily::SerialThreeR;
    }
    if (m.n_links() == 6 && m.n_joints() == 6 && m.dof == 3 && degree[0] == 1 &&
        degree[m.effector_link] == 1) {
        // two links of degree 3 (the four-bar's frame and coupler), two of degree 2
        int deg3 = 0, deg2 = 0;
        for (int l = 1; l < m.n_links(); ++l) {
            if (degree[l] == 3) ++deg3;
            if (degree[l] == 2) ++deg2;
        }
        if (deg3 == 2 && deg2 == 2) return MechanismFamily::RFourBarR;
    }
    return MechanismFamily::General;
}

} // namespace exosyn

#endif // EXOSYN_MECHANISM_HPP
