#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "causalkit/errors.hpp"

namespace causalkit {

// Directed acyclic graph over named variables. Acyclicity is verified at
// construction; the node list keeps insertion order.
class Dag {
public:
    Dag(std::vector<std::string> nodes, std::vector<std::pair<std::string, std::string>> edges);

    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<std::pair<std::string, std::string>>& edges() const { return edges_; }

    bool has_node(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;

    std::set<std::string> parents(const std::string& node) const;
    std::set<std::string> children(const std::string& node) const;
    std::set<std::string> roots() const;
    bool has_edge(const std::string& parent, const std::string& child) const;

    // Kahn's algorithm with lexicographic tie-breaking.
    std::vector<std::string> topological_order() const;

    // index-based adjacency, used by the traversal algorithms
    const std::vector<std::vector<std::size_t>>& parent_ids() const { return parent_ids_; }
    const std::vector<std::vector<std::size_t>>& child_ids() const { return child_ids_; }

private:
    std::vector<std::string> nodes_;
    std::vector<std::pair<std::string, std::string>> edges_;
    std::vector<std::vector<std::size_t>> parent_ids_;
    std::vector<std::vector<std::size_t>> child_ids_;
};

// All nodes with a directed path into `xs`, including `xs` themselves.
std::set<std::string> ancestors(const Dag& g, const std::set<std::string>& xs);

// All nodes reachable from `xs` by directed paths, including `xs` themselves.
std::set<std::string> descendants(const Dag& g, const std::set<std::string>& xs);

// d-separation of a and b given z, via the reachability formulation.
// The three sets must be pairwise disjoint.
bool d_separated(const Dag& g, const std::set<std::string>& a, const std::set<std::string>& b,
                 const std::set<std::string>& z);

// Back-door criterion: no member of z is a descendant of x, and z blocks every
// path from x to y that starts with an edge into x.
bool backdoor_admissible(const Dag& g, const std::string& x, const std::string& y,
                         const std::set<std::string>& z);

// Smallest admissible subset of `observable` by cardinality, ties broken by
// lexicographic node order; absent if none exists. Exhaustive subset search,
// exponential in |observable|.
std::optional<std::set<std::string>> find_backdoor_set(const Dag& g, const std::string& x,
                                                       const std::string& y,
                                                       const std::set<std::string>& observable);

}  // namespace causalkit
