#pragma once

// Random model corpora and independent oracles shared by the unit and
// acceptance suites. Everything here recomputes results from first
// principles; none of it reuses the library's enumeration or abduction
// machinery beyond reading CPT entries.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "causalkit/counterfactuals.hpp"
#include "causalkit/models.hpp"
#include "causalkit/pipelines.hpp"
#include "causalkit/rng.hpp"

namespace testutil {

using namespace causalkit;

inline Variable binary(const std::string& name) { return Variable{name, {"0", "1"}}; }

inline Variable leveled(const std::string& name, std::size_t card) {
    Variable v{name, {}};
    for (std::size_t i = 0; i < card; ++i) v.states.push_back(std::to_string(i));
    return v;
}

inline std::size_t pick(Xoshiro256StarStar& rng, std::size_t n) {
    return static_cast<std::size_t>(rng.next_double() * static_cast<double>(n));
}

// strictly positive random distribution row
inline std::vector<double> random_row(Xoshiro256StarStar& rng, std::size_t card) {
    std::vector<double> row(card);
    double sum = 0.0;
    for (auto& v : row) {
        v = 0.05 + rng.next_double();
        sum += v;
    }
    for (auto& v : row) v /= sum;
    return row;
}

inline Table random_cpt(Xoshiro256StarStar& rng, const Variable& var,
                        const std::vector<Variable>& parents) {
    const std::size_t rows = cell_count(parents);
    std::vector<double> values;
    values.reserve(rows * var.cardinality());
    for (std::size_t g = 0; g < rows; ++g) {
        const auto row = random_row(rng, var.cardinality());
        values.insert(values.end(), row.begin(), row.end());
    }
    return Table({var}, parents, std::move(values));
}

// Random DAG over the given names; index order is the topological order.
inline Dag random_dag(Xoshiro256StarStar& rng, const std::vector<std::string>& names,
                      double edge_prob) {
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            if (rng.next_double() < edge_prob) edges.emplace_back(names[i], names[j]);
        }
    }
    return Dag(names, std::move(edges));
}

inline CausalModel random_cgm(Xoshiro256StarStar& rng, std::size_t n_nodes, std::size_t max_card,
                              double edge_prob = 0.5) {
    std::vector<std::string> names;
    std::vector<Variable> vars;
    for (std::size_t i = 0; i < n_nodes; ++i) {
        names.push_back("V" + std::to_string(i));
        vars.push_back(leveled(names.back(), 2 + pick(rng, max_card - 1)));
    }
    Dag dag = random_dag(rng, names, edge_prob);
    std::map<std::string, Table> cpts;
    for (const auto& v : vars) {
        std::vector<Variable> parents;
        for (const auto& p : dag.parents(v.name)) {
            for (const auto& cand : vars) {
                if (cand.name == p) parents.push_back(cand);
            }
        }
        cpts.emplace(v.name, random_cpt(rng, v, parents));
    }
    return CausalModel(vars, std::move(dag), std::move(cpts));
}

// Random FCM with binary observed variables. Non-root mechanisms are random
// deterministic functions of (observed parents, background); roughly a
// quarter of them carry no background noise at all.
inline FunctionalModel random_fcm(Xoshiro256StarStar& rng, std::size_t n_observed,
                                  std::size_t max_background_card = 3) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n_observed; ++i) names.push_back("V" + std::to_string(i));
    Dag obs_dag = random_dag(rng, names, 0.5);

    std::vector<Variable> vars;
    std::vector<std::pair<std::string, std::string>> edges = obs_dag.edges();
    std::set<std::string> background;
    std::map<std::string, Table> cpts;

    for (const auto& n : names) vars.push_back(binary(n));
    for (const auto& n : names) {
        const auto parents = obs_dag.parents(n);
        if (parents.empty()) {
            cpts.emplace(n, Table::joint({binary(n)}, random_row(rng, 2)));
            continue;
        }
        std::vector<Variable> parent_vars;
        for (const auto& p : parents) parent_vars.push_back(binary(p));
        const bool with_noise = rng.next_double() < 0.75;
        if (with_noise) {
            const std::string uname = "U" + n;
            const Variable u = leveled(uname, 2 + pick(rng, max_background_card - 1));
            vars.push_back(u);
            background.insert(uname);
            edges.emplace_back(uname, n);
            cpts.emplace(uname, Table::joint({u}, random_row(rng, u.cardinality())));
            parent_vars.push_back(u);
        }
        // random deterministic mechanism
        const std::size_t configs = cell_count(parent_vars);
        std::vector<std::size_t> outputs(configs);
        for (auto& o : outputs) o = pick(rng, 2);
        cpts.emplace(n, deterministic_cpt(binary(n), parent_vars,
                                          [&outputs, parent_vars](std::span<const std::size_t> s) {
                                              return outputs[index_of(parent_vars, s)];
                                          }));
    }
    std::vector<std::string> all_names;
    for (const auto& v : vars) all_names.push_back(v.name);
    Dag dag(all_names, std::move(edges));
    return FunctionalModel(CausalModel(vars, std::move(dag), std::move(cpts)), std::move(background));
}

// --- independent oracles ---------------------------------------------------

// Joint cell probability by direct recursive factor multiplication.
inline double oracle_cell_probability(const CausalModel& m, const Assignment& full) {
    double p = 1.0;
    for (const auto& v : m.variables()) {
        const Table& cpt = m.cpt(v.name);
        Assignment given;
        for (const auto& g : cpt.given()) given[g.name] = full.at(g.name);
        p *= cpt.probability({{v.name, full.at(v.name)}}, given);
    }
    return p;
}

// Enumerates all full assignments of `vars`, calling fn on each.
inline void for_each_assignment(const std::vector<Variable>& vars,
                                const std::function<void(const Assignment&)>& fn) {
    Assignment a;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == vars.size()) {
            fn(a);
            return;
        }
        for (std::size_t s = 0; s < vars[i].cardinality(); ++s) {
            a[vars[i].name] = s;
            rec(i + 1);
        }
    };
    rec(0);
    (void)0;
}

inline bool consistent(const Assignment& full, const Assignment& partial) {
    for (const auto& [k, v] : partial) {
        if (full.at(k) != v) return false;
    }
    return true;
}

// Literal structural-counterfactual sum: for every assignment u of the
// non-intervened roots, p(y | do x', u) p(u | e), each factor computed by
// direct enumeration over full assignments.
inline std::vector<double> eq1_oracle(const FunctionalModel& f, const CounterfactualQuery& q) {
    const CausalModel& m = f.full_model();
    const auto roots = m.dag().roots();
    std::vector<Variable> uvars;
    for (const auto& v : m.variables()) {
        if (roots.count(v.name) && q.do_values.count(v.name) == 0) uvars.push_back(v);
    }
    const auto yvars = m.variables_for(q.targets);
    const CausalModel mutilated = intervene(m, q.do_values);

    double p_e = 0.0;
    std::map<std::vector<std::size_t>, double> p_u_and_e;
    for_each_assignment(m.variables(), [&](const Assignment& full) {
        if (!consistent(full, q.evidence)) return;
        const double p = oracle_cell_probability(m, full);
        p_e += p;
        std::vector<std::size_t> key;
        for (const auto& u : uvars) key.push_back(full.at(u.name));
        p_u_and_e[key] += p;
    });

    std::vector<double> out(cell_count(yvars), 0.0);
    for (const auto& [key, pue] : p_u_and_e) {
        if (pue <= 0.0) continue;
        Assignment u;
        for (std::size_t i = 0; i < uvars.size(); ++i) u[uvars[i].name] = key[i];
        double denom = 0.0;
        std::vector<double> nums(out.size(), 0.0);
        for_each_assignment(m.variables(), [&](const Assignment& full) {
            if (!consistent(full, u)) return;
            const double p = oracle_cell_probability(mutilated, full);
            denom += p;
            std::vector<std::size_t> ystate;
            for (const auto& y : yvars) ystate.push_back(full.at(y.name));
            nums[index_of(yvars, ystate)] += p;
        });
        for (std::size_t y = 0; y < out.size(); ++y) {
            out[y] += (nums[y] / denom) * (pue / p_e);
        }
    }
    return out;
}

// Exhaustive deterministic-policy search with expected utility computed by
// direct enumeration.
inline std::pair<std::vector<double>, double> policy_oracle(const CausalModel& m,
                                                            const std::string& x_var,
                                                            const Utility& u) {
    const Table& current = m.cpt(x_var);
    const std::size_t card = current.scope()[0].cardinality();
    const std::size_t configs = current.given_cells();
    const auto tvars = m.variables_for(u.targets);

    std::size_t candidates = 1;
    for (std::size_t i = 0; i < configs; ++i) candidates *= card;

    std::vector<double> best_values;
    double best_score = 0.0;
    for (std::size_t cand = 0; cand < candidates; ++cand) {
        std::vector<double> values(configs * card, 0.0);
        std::size_t rem = cand;
        for (std::size_t cfg = configs; cfg-- > 0;) {
            values[cfg * card + rem % card] = 1.0;
            rem /= card;
        }
        const CausalModel replaced =
            m.with_cpt(x_var, Table(current.scope(), current.given(), values));
        double score = 0.0;
        for_each_assignment(m.variables(), [&](const Assignment& full) {
            const double p = oracle_cell_probability(replaced, full);
            if (p <= 0.0) return;
            std::vector<std::size_t> tstate;
            for (const auto& t : tvars) tstate.push_back(full.at(t.name));
            score += p * u.values[index_of(tvars, tstate)];
        });
        if (best_values.empty() || score > best_score + 1e-9) {
            best_values = values;
            best_score = score;
        }
    }
    return {best_values, best_score};
}

// d-separation by brute-force enumeration of all simple paths.
inline bool dsep_bruteforce(const Dag& g, const std::set<std::string>& a,
                            const std::set<std::string>& b, const std::set<std::string>& z) {
    const std::size_t n = g.nodes().size();
    std::vector<std::vector<int>> adj(n, std::vector<int>(n, 0));  // 1: i->j, -1: i<-j
    for (const auto& [p, c] : g.edges()) {
        adj[g.index_of(p)][g.index_of(c)] = 1;
        adj[g.index_of(c)][g.index_of(p)] = -1;
    }
    std::vector<bool> in_z(n, false);
    for (const auto& s : z) in_z[g.index_of(s)] = true;

    // collider openness needs ancestors of z
    std::vector<bool> anc_z(n, false);
    std::function<void(std::size_t)> mark_up = [&](std::size_t i) {
        if (anc_z[i]) return;
        anc_z[i] = true;
        for (std::size_t p = 0; p < n; ++p) {
            if (adj[p][i] == 1) mark_up(p);
        }
    };
    for (const auto& s : z) mark_up(g.index_of(s));

    auto path_open = [&](const std::vector<std::size_t>& path) {
        for (std::size_t i = 1; i + 1 < path.size(); ++i) {
            const bool into_left = adj[path[i - 1]][path[i]] == 1;
            const bool into_right = adj[path[i + 1]][path[i]] == 1;
            if (into_left && into_right) {  // collider
                if (!anc_z[path[i]]) return false;
            } else {  // chain or fork
                if (in_z[path[i]]) return false;
            }
        }
        return true;
    };

    std::vector<std::size_t> path;
    std::vector<bool> used(n, false);
    bool connected = false;
    std::function<void(std::size_t)> dfs = [&](std::size_t at) {
        if (connected) return;
        path.push_back(at);
        used[at] = true;
        if (path.size() > 1 && b.count(g.nodes()[at])) {
            if (path_open(path)) connected = true;
        } else {
            for (std::size_t next = 0; next < n && !connected; ++next) {
                if (!used[next] && adj[at][next] != 0) dfs(next);
            }
        }
        used[at] = false;
        path.pop_back();
    };
    for (const auto& s : a) {
        if (connected) break;
        std::fill(used.begin(), used.end(), false);
        path.clear();
        dfs(g.index_of(s));
    }
    return !connected;
}

inline double max_abs_diff(const Table& p, const Table& q) {
    double m = 0.0;
    for (std::size_t i = 0; i < p.values().size(); ++i) {
        m = std::max(m, std::abs(p.values()[i] - q.values()[i]));
    }
    return m;
}

}  // namespace testutil
