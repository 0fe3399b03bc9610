#include "causalkit/counterfactuals.hpp"

#include <algorithm>
#include <cmath>

namespace causalkit {

namespace {

using JointFn = Table (*)(const CausalModel&, std::size_t);

// Answers p_do(y | s) for every assignment s of a conditioning set, plus the
// machinery to index s- and y-cells inside a full model joint.
struct DoConditional {
    std::vector<Variable> cond_vars;       // conditioning set, in model order
    std::vector<std::size_t> cond_pos;     // positions within the model's variables
    std::vector<std::size_t> cond_strides;
    std::size_t cond_cells = 1;

    std::vector<Variable> target_vars;     // targets, in caller order
    std::vector<std::size_t> target_pos;
    std::vector<std::size_t> target_strides;
    std::size_t target_cells = 1;

    std::vector<double> q;        // q[s * target_cells + y]
    std::vector<char> defined;    // p_do(s) > 0
};

std::vector<std::size_t> positions(const std::vector<Variable>& vars,
                                   const std::vector<std::string>& names) {
    std::vector<std::size_t> out;
    for (const auto& n : names) {
        bool found = false;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i].name == n) {
                out.push_back(i);
                found = true;
                break;
            }
        }
        if (!found) throw ValidationError("unknown variable '" + n + "'");
    }
    return out;
}

DoConditional build_do_conditional(const CausalModel& m, const Table& do_joint,
                                   const std::set<std::string>& cond_set,
                                   const std::vector<std::string>& targets) {
    DoConditional dc;
    const auto& vars = m.variables();
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (cond_set.count(vars[i].name)) {
            dc.cond_vars.push_back(vars[i]);
            dc.cond_pos.push_back(i);
        }
    }
    if (dc.cond_vars.size() != cond_set.size()) {
        throw ValidationError("conditioning set mentions unknown variables");
    }
    dc.cond_strides = strides(dc.cond_vars);
    dc.cond_cells = cell_count(dc.cond_vars);

    dc.target_pos = positions(vars, targets);
    for (auto p : dc.target_pos) dc.target_vars.push_back(vars[p]);
    dc.target_strides = strides(dc.target_vars);
    dc.target_cells = cell_count(dc.target_vars);

    std::vector<double> num(dc.cond_cells * dc.target_cells, 0.0);
    std::vector<double> den(dc.cond_cells, 0.0);
    std::vector<std::size_t> states(vars.size(), 0);
    for (std::size_t cell = 0; cell < do_joint.scope_cells(); ++cell) {
        const double v = do_joint.at_joint(cell);
        if (v > 0.0) {
            std::size_t s = 0, y = 0;
            for (std::size_t k = 0; k < dc.cond_pos.size(); ++k) {
                s += states[dc.cond_pos[k]] * dc.cond_strides[k];
            }
            for (std::size_t k = 0; k < dc.target_pos.size(); ++k) {
                y += states[dc.target_pos[k]] * dc.target_strides[k];
            }
            num[s * dc.target_cells + y] += v;
            den[s] += v;
        }
        for (std::size_t i = vars.size(); i-- > 0;) {
            if (++states[i] < vars[i].cardinality()) break;
            states[i] = 0;
        }
    }
    dc.q.assign(dc.cond_cells * dc.target_cells, 0.0);
    dc.defined.assign(dc.cond_cells, 0);
    for (std::size_t s = 0; s < dc.cond_cells; ++s) {
        if (den[s] > 0.0) {
            dc.defined[s] = 1;
            for (std::size_t y = 0; y < dc.target_cells; ++y) {
                dc.q[s * dc.target_cells + y] = num[s * dc.target_cells + y] / den[s];
            }
        }
    }
    return dc;
}

// Single-evidence core shared by the three counterfactual operations:
//   sum_s p(y | do x', s) p(s | e)
Table weighted_do_mixture(const CausalModel& m, const std::set<std::string>& cond_set,
                          const CounterfactualQuery& q, JointFn joint_fn) {
    if (q.do_values.empty()) throw ValidationError("counterfactual query has an empty do-set");
    if (q.targets.empty()) throw ValidationError("counterfactual query has no targets");
    for (const auto& t : q.targets) {
        if (q.do_values.count(t)) {
            throw ValidationError("target '" + t + "' is also intervened on");
        }
    }

    const Table base = joint_fn(m, kJointCellCap);
    const Table mutilated = joint_fn(intervene(m, q.do_values), kJointCellCap);
    const DoConditional dc = build_do_conditional(m, mutilated, cond_set, q.targets);

    // posterior over the conditioning set given the evidence
    const auto& vars = m.variables();
    std::vector<std::size_t> fixed(vars.size(), SIZE_MAX);
    for (const auto& [name, state] : q.evidence) {
        bool found = false;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i].name == name) {
                if (state >= vars[i].cardinality()) {
                    throw ValidationError("evidence state out of range for '" + name + "'");
                }
                fixed[i] = state;
                found = true;
            }
        }
        if (!found) throw ValidationError("unknown evidence variable '" + name + "'");
    }
    std::vector<double> posterior(dc.cond_cells, 0.0);
    long double mass = 0.0L;
    std::vector<std::size_t> states(vars.size(), 0);
    for (std::size_t cell = 0; cell < base.scope_cells(); ++cell) {
        const double v = base.at_joint(cell);
        if (v > 0.0) {
            bool match = true;
            for (std::size_t i = 0; i < vars.size(); ++i) {
                if (fixed[i] != SIZE_MAX && states[i] != fixed[i]) {
                    match = false;
                    break;
                }
            }
            if (match) {
                std::size_t s = 0;
                for (std::size_t k = 0; k < dc.cond_pos.size(); ++k) {
                    s += states[dc.cond_pos[k]] * dc.cond_strides[k];
                }
                posterior[s] += v;
                mass += v;
            }
        }
        for (std::size_t i = vars.size(); i-- > 0;) {
            if (++states[i] < vars[i].cardinality()) break;
            states[i] = 0;
        }
    }
    if (mass <= 0.0L) throw PreconditionError("evidence has zero probability");

    std::vector<double> out(dc.target_cells, 0.0);
    const double inv = 1.0 / static_cast<double>(mass);
    for (std::size_t s = 0; s < dc.cond_cells; ++s) {
        if (posterior[s] <= 0.0) continue;
        if (!dc.defined[s]) {
            throw PreconditionError(
                "post-interventional conditioning is undefined for a conditioning-set cell with "
                "positive evidence posterior; the evidence is incompatible with the intervention");
        }
        const double w = posterior[s] * inv;
        for (std::size_t y = 0; y < dc.target_cells; ++y) {
            out[y] += w * dc.q[s * dc.target_cells + y];
        }
    }
    // guard against accumulated rounding before Table's own normalization check
    long double total = 0.0L;
    for (double v : out) total += v;
    if (total > 0.0L) {
        const double norm = 1.0 / static_cast<double>(total);
        for (double& v : out) v *= norm;
    }
    return Table::joint(dc.target_vars, std::move(out));
}

std::set<std::string> set_minus_do(const std::set<std::string>& base, const Assignment& do_values) {
    std::set<std::string> out;
    for (const auto& n : base) {
        if (do_values.count(n) == 0) out.insert(n);
    }
    return out;
}

void require_observed(const FunctionalModel& f, const std::string& name, const char* role) {
    if (!f.full_model().has_variable(name)) {
        throw ValidationError(std::string("unknown ") + role + " variable '" + name + "'");
    }
    if (f.is_background(name)) {
        throw ValidationError(std::string(role) + " variable '" + name + "' is a background variable");
    }
}

}  // namespace

Table exact_counterfactual(const FunctionalModel& f, const CounterfactualQuery& q) {
    for (const auto& [name, _] : q.do_values) require_observed(f, name, "do");
    for (const auto& t : q.targets) require_observed(f, t, "target");
    for (const auto& [name, _] : q.evidence) require_observed(f, name, "evidence");
    const auto abduction_set = set_minus_do(f.full_model().dag().roots(), q.do_values);
    return weighted_do_mixture(f.full_model(), abduction_set, q, &joint);
}

Table approx_counterfactual(const CausalModel& m, const CounterfactualQuery& q) {
    const auto w = set_minus_do(m.dag().roots(), q.do_values);
    return weighted_do_mixture(m, w, q, &joint);
}

void check_separating_set(const Dag& dag, const std::set<std::string>& zset,
                          const std::vector<std::string>& targets, const Assignment& do_values) {
    for (const auto& z : zset) dag.index_of(z);
    std::set<std::string> target_set(targets.begin(), targets.end());
    for (const auto& t : target_set) {
        if (zset.count(t)) {
            throw PreconditionError("separating-set check failed: target '" + t +
                                    "' lies inside Z");
        }
    }
    std::set<std::string> strict_ancestors = ancestors(dag, zset);
    for (const auto& z : zset) strict_ancestors.erase(z);
    for (const auto& t : target_set) {
        if (strict_ancestors.count(t)) {
            throw PreconditionError("separating-set check failed: target '" + t +
                                    "' is an ancestor of Z outside Z");
        }
    }
    if (!strict_ancestors.empty() && !d_separated(dag, target_set, strict_ancestors, zset)) {
        throw PreconditionError(
            "separating-set check failed: targets are not d-separated from An(Z) \\ Z given Z");
    }
    std::set<std::string> do_set;
    for (const auto& [name, _] : do_values) do_set.insert(name);
    auto influenced = descendants(dag, do_set);
    for (const auto& x : do_set) influenced.erase(x);
    for (const auto& z : zset) {
        if (do_set.count(z)) continue;
        if (influenced.count(z)) {
            throw PreconditionError("separating-set check failed: do-variables influence '" + z +
                                    "' in W = Z \\ X");
        }
    }
}

Table generalized_approx_counterfactual(const CausalModel& m, const std::set<std::string>& zset,
                                        const CounterfactualQuery& q) {
    check_separating_set(m.dag(), zset, q.targets, q.do_values);
    const auto w = set_minus_do(zset, q.do_values);
    return weighted_do_mixture(m, w, q, &joint);
}

namespace {

Certificate certificate_impl(const FunctionalModel& f, const Assignment& do_values,
                             const std::vector<std::string>& targets,
                             const std::set<std::string>& evidence_vars,
                             const std::optional<std::set<std::string>>& zset, JointFn joint_fn) {
    for (const auto& [name, _] : do_values) require_observed(f, name, "do");
    for (const auto& t : targets) require_observed(f, t, "target");
    for (const auto& e : evidence_vars) require_observed(f, e, "evidence");
    if (do_values.empty()) throw ValidationError("certificate requires a nonempty do-set");
    if (targets.empty()) throw ValidationError("certificate requires target variables");
    for (const auto& t : targets) {
        if (do_values.count(t)) throw ValidationError("target '" + t + "' is also intervened on");
    }

    const CausalModel induced = induce_cgm(f);

    Certificate cert;
    std::set<std::string> w;
    if (zset.has_value()) {
        try {
            check_separating_set(induced.dag(), *zset, targets, do_values);
            cert.preconditions_ok = true;
        } catch (const PreconditionError&) {
            cert.preconditions_ok = false;
        }
        w = set_minus_do(*zset, do_values);
    } else {
        cert.preconditions_ok = true;
        w = set_minus_do(induced.dag().roots(), do_values);
    }

    const auto exact_abduction = set_minus_do(f.full_model().dag().roots(), do_values);

    const Table j_full = joint_fn(f.full_model(), kJointCellCap);
    const Table j_full_do = joint_fn(intervene(f.full_model(), do_values), kJointCellCap);
    const Table j_ind = joint_fn(induced, kJointCellCap);
    const Table j_ind_do = joint_fn(intervene(induced, do_values), kJointCellCap);

    const DoConditional dc_exact =
        build_do_conditional(f.full_model(), j_full_do, exact_abduction, targets);
    const DoConditional dc_approx = build_do_conditional(induced, j_ind_do, w, targets);

    const std::vector<std::string> evidence_list(evidence_vars.begin(), evidence_vars.end());

    // accumulate, per evidence cell e: p(e) and sum_s q(y|s) p(s, e)
    struct Accumulated {
        std::vector<double> weighted;  // [e * target_cells + y]
        std::vector<double> p_e;
    };
    auto accumulate = [&](const CausalModel& model, const Table& base, const DoConditional& dc,
                          const std::vector<Variable>& evars,
                          const std::vector<std::size_t>& epos) {
        const auto estr = strides(evars);
        const std::size_t ecells = cell_count(evars);
        Accumulated acc;
        acc.weighted.assign(ecells * dc.target_cells, 0.0);
        acc.p_e.assign(ecells, 0.0);
        const auto& vars = model.variables();
        std::vector<std::size_t> states(vars.size(), 0);
        for (std::size_t cell = 0; cell < base.scope_cells(); ++cell) {
            const double v = base.at_joint(cell);
            if (v > 0.0) {
                std::size_t e = 0, s = 0;
                for (std::size_t k = 0; k < epos.size(); ++k) e += states[epos[k]] * estr[k];
                for (std::size_t k = 0; k < dc.cond_pos.size(); ++k) {
                    s += states[dc.cond_pos[k]] * dc.cond_strides[k];
                }
                if (!dc.defined[s]) {
                    throw PreconditionError(
                        "post-interventional conditioning undefined for a reachable "
                        "conditioning-set cell");
                }
                acc.p_e[e] += v;
                const double* qrow = dc.q.data() + s * dc.target_cells;
                double* out = acc.weighted.data() + e * dc.target_cells;
                for (std::size_t y = 0; y < dc.target_cells; ++y) out[y] += v * qrow[y];
            }
            for (std::size_t i = vars.size(); i-- > 0;) {
                if (++states[i] < vars[i].cardinality()) break;
                states[i] = 0;
            }
        }
        return acc;
    };

    const auto epos_full = positions(f.full_model().variables(), evidence_list);
    const auto epos_ind = positions(induced.variables(), evidence_list);
    std::vector<Variable> evars;
    for (auto p : epos_full) evars.push_back(f.full_model().variables()[p]);

    const Accumulated exact_acc = accumulate(f.full_model(), j_full, dc_exact, evars, epos_full);
    const Accumulated approx_acc = accumulate(induced, j_ind, dc_approx, evars, epos_ind);

    const std::size_t ecells = cell_count(evars);
    long double divergence = 0.0L;
    std::vector<std::size_t> estates(evars.size(), 0);
    for (std::size_t e = 0; e < ecells; ++e) {
        decode_index(evars, e, estates);
        const double pe = exact_acc.p_e[e];
        if (pe > 0.0) {
            std::vector<double> exact_row(dc_exact.target_cells);
            std::vector<double> approx_row(dc_approx.target_cells);
            for (std::size_t y = 0; y < exact_row.size(); ++y) {
                exact_row[y] = exact_acc.weighted[e * exact_row.size() + y] / pe;
            }
            const double pe_m = approx_acc.p_e[e];
            if (pe_m <= 0.0) {
                throw PreconditionError("evidence mass vanished on the induced model");
            }
            for (std::size_t y = 0; y < approx_row.size(); ++y) {
                approx_row[y] = approx_acc.weighted[e * approx_row.size() + y] / pe_m;
            }
            long double kl = 0.0L;
            for (std::size_t y = 0; y < exact_row.size(); ++y) {
                if (exact_row[y] > 0.0) {
                    if (approx_row[y] <= 0.0) {
                        throw PreconditionError(
                            "absolute continuity violated between exact and approximate "
                            "counterfactuals");
                    }
                    kl += exact_row[y] * (std::log2(exact_row[y]) - std::log2(approx_row[y]));
                }
            }
            EvidenceTerm term;
            for (std::size_t k = 0; k < evars.size(); ++k) term.evidence[evars[k].name] = estates[k];
            term.probability = pe;
            term.kl_bits = static_cast<double>(kl);
            cert.evidence_terms.push_back(std::move(term));
            divergence += pe * kl;
        }
    }
    cert.divergence = InfoQuantity{static_cast<double>(divergence)};

    std::vector<std::string> bound_targets;
    for (const auto& e : evidence_vars) {
        if (w.count(e) == 0) bound_targets.push_back(e);
    }
    cert.bound = conditional_entropy(j_ind, bound_targets,
                                     std::vector<std::string>(w.begin(), w.end()));
    return cert;
}

}  // namespace

Certificate counterfactual_certificate(const FunctionalModel& f, const Assignment& do_values,
                                       const std::vector<std::string>& targets,
                                       const std::set<std::string>& evidence_vars,
                                       const std::optional<std::set<std::string>>& zset) {
    return certificate_impl(f, do_values, targets, evidence_vars, zset, &joint);
}

Certificate counterfactual_certificate_serial(const FunctionalModel& f, const Assignment& do_values,
                                              const std::vector<std::string>& targets,
                                              const std::set<std::string>& evidence_vars,
                                              const std::optional<std::set<std::string>>& zset) {
    return certificate_impl(f, do_values, targets, evidence_vars, zset, &joint_serial);
}

}  // namespace causalkit
