#include "causalkit/graphs.hpp"

#include <algorithm>
#include <array>
#include <queue>

namespace causalkit {

Dag::Dag(std::vector<std::string> nodes, std::vector<std::pair<std::string, std::string>> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    std::set<std::string> seen;
    for (const auto& n : nodes_) {
        if (n.empty()) throw ValidationError("empty node name");
        if (!seen.insert(n).second) throw ValidationError("duplicate node '" + n + "'");
    }
    parent_ids_.resize(nodes_.size());
    child_ids_.resize(nodes_.size());
    std::set<std::pair<std::string, std::string>> edge_set;
    for (const auto& [p, c] : edges_) {
        if (!has_node(p)) throw ValidationError("edge endpoint '" + p + "' is not a node");
        if (!has_node(c)) throw ValidationError("edge endpoint '" + c + "' is not a node");
        if (p == c) throw ValidationError("self-loop on '" + p + "'");
        if (!edge_set.insert({p, c}).second) {
            throw ValidationError("duplicate edge " + p + " -> " + c);
        }
        const std::size_t pi = index_of(p), ci = index_of(c);
        parent_ids_[ci].push_back(pi);
        child_ids_[pi].push_back(ci);
    }
    for (auto& v : parent_ids_) std::sort(v.begin(), v.end());
    for (auto& v : child_ids_) std::sort(v.begin(), v.end());
    topological_order();  // throws on cycles
}

bool Dag::has_node(const std::string& name) const {
    return std::find(nodes_.begin(), nodes_.end(), name) != nodes_.end();
}

std::size_t Dag::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i] == name) return i;
    }
    throw ValidationError("unknown node '" + name + "'");
}

std::set<std::string> Dag::parents(const std::string& node) const {
    std::set<std::string> out;
    for (auto p : parent_ids_[index_of(node)]) out.insert(nodes_[p]);
    return out;
}

std::set<std::string> Dag::children(const std::string& node) const {
    std::set<std::string> out;
    for (auto c : child_ids_[index_of(node)]) out.insert(nodes_[c]);
    return out;
}

std::set<std::string> Dag::roots() const {
    std::set<std::string> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (parent_ids_[i].empty()) out.insert(nodes_[i]);
    }
    return out;
}

bool Dag::has_edge(const std::string& parent, const std::string& child) const {
    const std::size_t pi = index_of(parent), ci = index_of(child);
    return std::binary_search(child_ids_[pi].begin(), child_ids_[pi].end(), ci);
}

std::vector<std::string> Dag::topological_order() const {
    std::vector<std::size_t> indegree(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) indegree[i] = parent_ids_[i].size();
    auto cmp = [this](std::size_t a, std::size_t b) { return nodes_[a] > nodes_[b]; };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> ready(cmp);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (indegree[i] == 0) ready.push(i);
    }
    std::vector<std::string> order;
    order.reserve(nodes_.size());
    while (!ready.empty()) {
        const std::size_t n = ready.top();
        ready.pop();
        order.push_back(nodes_[n]);
        for (auto c : child_ids_[n]) {
            if (--indegree[c] == 0) ready.push(c);
        }
    }
    if (order.size() != nodes_.size()) throw ValidationError("graph contains a directed cycle");
    return order;
}

namespace {

std::vector<std::size_t> to_ids(const Dag& g, const std::set<std::string>& names) {
    std::vector<std::size_t> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(g.index_of(n));
    return out;
}

std::vector<bool> reach_up(const Dag& g, const std::vector<std::size_t>& from) {
    std::vector<bool> mark(g.nodes().size(), false);
    std::vector<std::size_t> stack(from);
    for (auto i : stack) mark[i] = true;
    while (!stack.empty()) {
        const std::size_t n = stack.back();
        stack.pop_back();
        for (auto p : g.parent_ids()[n]) {
            if (!mark[p]) {
                mark[p] = true;
                stack.push_back(p);
            }
        }
    }
    return mark;
}

std::vector<bool> reach_down(const Dag& g, const std::vector<std::size_t>& from) {
    std::vector<bool> mark(g.nodes().size(), false);
    std::vector<std::size_t> stack(from);
    for (auto i : stack) mark[i] = true;
    while (!stack.empty()) {
        const std::size_t n = stack.back();
        stack.pop_back();
        for (auto c : g.child_ids()[n]) {
            if (!mark[c]) {
                mark[c] = true;
                stack.push_back(c);
            }
        }
    }
    return mark;
}

void check_disjoint(const std::set<std::string>& a, const std::set<std::string>& b,
                    const char* what) {
    for (const auto& n : a) {
        if (b.count(n)) throw ValidationError(std::string(what) + " sets overlap at '" + n + "'");
    }
}

}  // namespace

std::set<std::string> ancestors(const Dag& g, const std::set<std::string>& xs) {
    const auto mark = reach_up(g, to_ids(g, xs));
    std::set<std::string> out;
    for (std::size_t i = 0; i < mark.size(); ++i) {
        if (mark[i]) out.insert(g.nodes()[i]);
    }
    return out;
}

std::set<std::string> descendants(const Dag& g, const std::set<std::string>& xs) {
    const auto mark = reach_down(g, to_ids(g, xs));
    std::set<std::string> out;
    for (std::size_t i = 0; i < mark.size(); ++i) {
        if (mark[i]) out.insert(g.nodes()[i]);
    }
    return out;
}

bool d_separated(const Dag& g, const std::set<std::string>& a, const std::set<std::string>& b,
                 const std::set<std::string>& z) {
    check_disjoint(a, b, "a/b");
    check_disjoint(a, z, "a/z");
    check_disjoint(b, z, "b/z");
    if (a.empty() || b.empty()) return true;

    const auto a_ids = to_ids(g, a);
    const auto b_ids = to_ids(g, b);
    const auto z_ids = to_ids(g, z);

    const std::size_t n = g.nodes().size();
    std::vector<bool> in_z(n, false);
    for (auto i : z_ids) in_z[i] = true;
    // a collider is open iff it is in z or has a descendant in z
    const std::vector<bool> anc_of_z = reach_up(g, z_ids);
    std::vector<bool> in_b(n, false);
    for (auto i : b_ids) in_b[i] = true;

    // reachability over (node, direction) pairs; direction: 0 = entered along
    // an edge pointing into the node, 1 = entered along an edge leaving it
    std::vector<std::array<bool, 2>> visited(n, {false, false});
    std::vector<std::pair<std::size_t, int>> stack;
    for (auto i : a_ids) {
        stack.push_back({i, 1});  // leaving the source behaves like trail-from-child
    }
    while (!stack.empty()) {
        auto [node, dir] = stack.back();
        stack.pop_back();
        if (visited[node][dir]) continue;
        visited[node][dir] = true;
        if (in_b[node]) return false;

        if (dir == 1) {
            // trail arrived from a child (or starts here): may continue to
            // parents and children unless this node is conditioned on
            if (!in_z[node]) {
                for (auto p : g.parent_ids()[node]) stack.push_back({p, 1});
                for (auto c : g.child_ids()[node]) stack.push_back({c, 0});
            }
        } else {
            // trail arrived from a parent: chain continues unless blocked,
            // collider opens only if node is an ancestor of z (or in z)
            if (!in_z[node]) {
                for (auto c : g.child_ids()[node]) stack.push_back({c, 0});
            }
            if (anc_of_z[node]) {
                for (auto p : g.parent_ids()[node]) stack.push_back({p, 1});
            }
        }
    }
    return true;
}

bool backdoor_admissible(const Dag& g, const std::string& x, const std::string& y,
                         const std::set<std::string>& z) {
    if (x == y) throw ValidationError("x and y must differ");
    if (z.count(x) || z.count(y)) throw ValidationError("adjustment set must exclude x and y");
    g.index_of(x);
    g.index_of(y);

    const auto desc = descendants(g, {x});
    for (const auto& node : z) {
        if (node != x && desc.count(node)) return false;
    }

    // drop edges leaving x: what remains of x's connections are back-door paths
    std::vector<std::pair<std::string, std::string>> pruned;
    for (const auto& e : g.edges()) {
        if (e.first != x) pruned.push_back(e);
    }
    const Dag g_pruned(g.nodes(), std::move(pruned));
    return d_separated(g_pruned, {x}, {y}, z);
}

std::optional<std::set<std::string>> find_backdoor_set(const Dag& g, const std::string& x,
                                                       const std::string& y,
                                                       const std::set<std::string>& observable) {
    std::vector<std::string> pool;
    for (const auto& n : observable) {
        if (n != x && n != y) pool.push_back(n);
    }
    std::sort(pool.begin(), pool.end());

    // next k-combination of indices in lexicographic order; false when exhausted
    auto next_combination = [&pool](std::vector<std::size_t>& idx) {
        const std::size_t k = idx.size();
        std::size_t i = k;
        while (i-- > 0) {
            if (idx[i] < pool.size() - k + i) {
                ++idx[i];
                for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
                return true;
            }
        }
        return false;
    };

    // subsets by cardinality, each size visited in lexicographic order
    for (std::size_t size = 0; size <= pool.size(); ++size) {
        std::vector<std::size_t> idx(size);
        for (std::size_t i = 0; i < size; ++i) idx[i] = i;
        while (true) {
            std::set<std::string> candidate;
            for (auto i : idx) candidate.insert(pool[i]);
            if (backdoor_admissible(g, x, y, candidate)) return candidate;
            if (size == 0 || !next_combination(idx)) break;
        }
    }
    return std::nullopt;
}

}  // namespace causalkit
