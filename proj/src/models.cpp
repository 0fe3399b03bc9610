#include "causalkit/models.hpp"

#include <algorithm>
#include <cmath>

#include "causalkit/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace causalkit {

namespace {

// below this many cells the parallel path is not worth spawning threads
constexpr std::size_t kParallelCellThreshold = std::size_t{1} << 14;

std::vector<std::string> names_of(const std::vector<Variable>& vars) {
    std::vector<std::string> out;
    out.reserve(vars.size());
    for (const auto& v : vars) out.push_back(v.name);
    return out;
}

// Per-node lookup plan for evaluating CPT entries from a full state vector.
struct NodePlan {
    const Table* cpt = nullptr;
    std::size_t card = 0;
    std::vector<std::size_t> given_positions;  // position of each given var in model order
    std::vector<std::size_t> given_strides;
};

std::vector<NodePlan> build_plans(const CausalModel& m) {
    const auto& vars = m.variables();
    std::vector<NodePlan> plans(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) {
        const Table& cpt = m.cpt(vars[i].name);
        NodePlan& plan = plans[i];
        plan.cpt = &cpt;
        plan.card = vars[i].cardinality();
        plan.given_strides = strides(cpt.given());
        for (const auto& g : cpt.given()) {
            for (std::size_t j = 0; j < vars.size(); ++j) {
                if (vars[j].name == g.name) {
                    plan.given_positions.push_back(j);
                    break;
                }
            }
        }
    }
    return plans;
}

double cell_probability(const std::vector<NodePlan>& plans, const std::size_t* states) {
    double v = 1.0;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        const NodePlan& plan = plans[i];
        std::size_t g = 0;
        for (std::size_t k = 0; k < plan.given_positions.size(); ++k) {
            g += states[plan.given_positions[k]] * plan.given_strides[k];
        }
        v *= plan.cpt->at(g, states[i]);
    }
    return v;
}

void require_complete(const CausalModel& m) {
    for (const auto& v : m.variables()) {
        if (!m.has_cpt(v.name)) {
            throw ValidationError("model is missing the CPT for '" + v.name + "'");
        }
    }
}

std::size_t checked_cells(const CausalModel& m, std::size_t max_cells) {
    const std::size_t n = cell_count(m.variables());
    if (n > max_cells) {
        throw ValidationError("state space of " + std::to_string(n) +
                              " cells exceeds the cap of " + std::to_string(max_cells));
    }
    return n;
}

}  // namespace

CausalModel::CausalModel(std::vector<Variable> variables, Dag dag, std::map<std::string, Table> cpts)
    : variables_(std::move(variables)), dag_(std::move(dag)), cpts_(std::move(cpts)) {
    std::set<std::string> names;
    for (const auto& v : variables_) {
        check_variable(v);
        if (!names.insert(v.name).second) {
            throw ValidationError("duplicate variable '" + v.name + "'");
        }
    }
    if (dag_.nodes().size() != variables_.size()) {
        throw ValidationError("DAG node count does not match variable count");
    }
    for (const auto& n : dag_.nodes()) {
        if (!names.count(n)) throw ValidationError("DAG node '" + n + "' has no variable");
    }
    for (const auto& [node, cpt] : cpts_) {
        if (!names.count(node)) throw ValidationError("CPT for unknown variable '" + node + "'");
        if (cpt.scope().size() != 1 || cpt.scope()[0] != variable(node)) {
            throw ValidationError("CPT scope for '" + node + "' does not match the variable");
        }
        const auto parents = dag_.parents(node);
        if (cpt.given().size() != parents.size()) {
            throw ValidationError("CPT for '" + node + "' conditions on " +
                                  std::to_string(cpt.given().size()) + " variables but has " +
                                  std::to_string(parents.size()) + " parents");
        }
        for (const auto& g : cpt.given()) {
            if (!parents.count(g.name)) {
                throw ValidationError("CPT for '" + node + "' conditions on non-parent '" + g.name + "'");
            }
            if (g != variable(g.name)) {
                throw ValidationError("CPT for '" + node + "' disagrees on the states of '" + g.name + "'");
            }
        }
    }
}

const Variable& CausalModel::variable(const std::string& name) const {
    for (const auto& v : variables_) {
        if (v.name == name) return v;
    }
    throw ValidationError("unknown variable '" + name + "'");
}

bool CausalModel::has_variable(const std::string& name) const {
    for (const auto& v : variables_) {
        if (v.name == name) return true;
    }
    return false;
}

const Table& CausalModel::cpt(const std::string& node) const {
    auto it = cpts_.find(node);
    if (it == cpts_.end()) throw ValidationError("no CPT for variable '" + node + "'");
    return it->second;
}

bool CausalModel::complete() const {
    for (const auto& v : variables_) {
        if (!has_cpt(v.name)) return false;
    }
    return true;
}

CausalModel CausalModel::with_cpt(const std::string& node, Table cpt) const {
    auto cpts = cpts_;
    cpts.erase(node);
    cpts.emplace(node, std::move(cpt));
    return CausalModel(variables_, dag_, std::move(cpts));
}

std::vector<Variable> CausalModel::variables_for(const std::vector<std::string>& names) const {
    std::vector<Variable> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(variable(n));
    return out;
}

ValidationReport validate(const CausalModel& m) {
    ValidationReport report;
    for (const auto& v : m.variables()) {
        if (!m.has_cpt(v.name)) {
            return {false, ValidationIssue::missing_cpt, "missing CPT for '" + v.name + "'", 0.0};
        }
    }
    for (const auto& v : m.variables()) {
        const Table& cpt = m.cpt(v.name);
        for (std::size_t g = 0; g < cpt.given_cells(); ++g) {
            long double sum = 0.0L;
            for (double p : cpt.row(g)) sum += p;
            const double residual = std::abs(static_cast<double>(sum) - 1.0);
            report.max_row_residual = std::max(report.max_row_residual, residual);
            if (residual > kNormalizationTolerance) {
                return {false, ValidationIssue::normalization,
                        "CPT row for '" + v.name + "' is not normalized", residual};
            }
        }
    }
    return report;
}

Table joint_serial(const CausalModel& m, std::size_t max_cells) {
    require_complete(m);
    const std::size_t n = checked_cells(m, max_cells);
    const auto plans = build_plans(m);
    const auto& vars = m.variables();

    std::vector<double> out(n);
    std::vector<std::size_t> states(vars.size(), 0);
    for (std::size_t cell = 0; cell < n; ++cell) {
        out[cell] = cell_probability(plans, states.data());
        for (std::size_t i = vars.size(); i-- > 0;) {
            if (++states[i] < vars[i].cardinality()) break;
            states[i] = 0;
        }
    }
    return Table::joint(vars, std::move(out));
}

Table joint(const CausalModel& m, std::size_t max_cells) {
    require_complete(m);
    const std::size_t n = checked_cells(m, max_cells);
#ifdef _OPENMP
    if (n >= kParallelCellThreshold) {
        const auto plans = build_plans(m);
        const auto& vars = m.variables();
        std::vector<double> out(n);
        // contiguous chunks, one odometer per thread: the per-cell arithmetic
        // matches the serial path exactly, so the result is bit-identical
#pragma omp parallel
        {
            const auto tid = static_cast<std::size_t>(omp_get_thread_num());
            const auto nth = static_cast<std::size_t>(omp_get_num_threads());
            const std::size_t chunk = (n + nth - 1) / nth;
            const std::size_t begin = std::min(n, tid * chunk);
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) {
                std::vector<std::size_t> states(vars.size());
                decode_index(vars, begin, states);
                for (std::size_t cell = begin; cell < end; ++cell) {
                    out[cell] = cell_probability(plans, states.data());
                    for (std::size_t i = vars.size(); i-- > 0;) {
                        if (++states[i] < vars[i].cardinality()) break;
                        states[i] = 0;
                    }
                }
            }
        }
        return Table::joint(vars, std::move(out));
    }
#endif
    return joint_serial(m, max_cells);
}

Table query(const CausalModel& m, const std::vector<std::string>& targets,
            const Assignment& evidence, std::size_t max_cells) {
    if (targets.empty()) throw ValidationError("query requires at least one target variable");
    const Table j = joint(m, max_cells);
    const auto& vars = j.scope();

    std::vector<std::size_t> fixed(vars.size(), SIZE_MAX);
    for (const auto& [name, state] : evidence) {
        const Variable& v = m.variable(name);
        if (state >= v.cardinality()) {
            throw ValidationError("state index out of range for variable '" + name + "'");
        }
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i].name == name) fixed[i] = state;
        }
    }

    const auto tvars = m.variables_for(targets);
    std::vector<std::size_t> tpos;
    for (const auto& t : targets) {
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i].name == t) tpos.push_back(i);
        }
    }
    if (tpos.size() != targets.size()) throw ValidationError("duplicate or unknown target variable");
    const auto tstr = strides(tvars);

    std::vector<double> out(cell_count(tvars), 0.0);
    long double mass = 0.0L;
    std::vector<std::size_t> states(vars.size(), 0);
    for (std::size_t cell = 0; cell < j.scope_cells(); ++cell) {
        bool match = true;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (fixed[i] != SIZE_MAX && states[i] != fixed[i]) {
                match = false;
                break;
            }
        }
        if (match) {
            std::size_t t_idx = 0;
            for (std::size_t k = 0; k < tpos.size(); ++k) t_idx += states[tpos[k]] * tstr[k];
            out[t_idx] += j.at_joint(cell);
            mass += j.at_joint(cell);
        }
        for (std::size_t i = vars.size(); i-- > 0;) {
            if (++states[i] < vars[i].cardinality()) break;
            states[i] = 0;
        }
    }
    if (mass <= 0.0L) throw PreconditionError("evidence has zero probability");
    const double inv = 1.0 / static_cast<double>(mass);
    for (double& v : out) v *= inv;
    return Table::joint(tvars, std::move(out));
}

CausalModel intervene(const CausalModel& m, const Assignment& do_values) {
    for (const auto& [name, state] : do_values) {
        const Variable& v = m.variable(name);
        if (state >= v.cardinality()) {
            throw ValidationError("do-value out of range for variable '" + name + "'");
        }
    }
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : m.dag().edges()) {
        if (do_values.count(e.second) == 0) edges.push_back(e);
    }
    Dag dag(m.dag().nodes(), std::move(edges));

    std::map<std::string, Table> cpts = m.cpts();
    for (const auto& [name, state] : do_values) {
        const Variable& v = m.variable(name);
        std::vector<double> point(v.cardinality(), 0.0);
        point[state] = 1.0;
        cpts.erase(name);
        cpts.emplace(name, Table::joint({v}, std::move(point)));
    }
    return CausalModel(m.variables(), std::move(dag), std::move(cpts));
}

Table interventional_query(const CausalModel& m, const std::vector<std::string>& targets,
                           const Assignment& do_values, const Assignment& evidence,
                           std::size_t max_cells) {
    for (const auto& [name, state] : evidence) {
        if (do_values.count(name)) {
            throw ValidationError("evidence mentions intervened variable '" + name + "'");
        }
    }
    return query(intervene(m, do_values), targets, evidence, max_cells);
}

FunctionalModel::FunctionalModel(CausalModel full, std::set<std::string> background)
    : full_(std::move(full)), background_(std::move(background)) {
    const auto report = validate(*this);
    if (!report.ok) throw ValidationError(report.message);
}

std::vector<std::string> FunctionalModel::observed() const {
    std::vector<std::string> out;
    for (const auto& v : full_.variables()) {
        if (!is_background(v.name)) out.push_back(v.name);
    }
    return out;
}

ValidationReport validate(const FunctionalModel& f) {
    const CausalModel& m = f.full_model();
    {
        const auto base = validate(m);
        if (!base.ok) return base;
    }
    for (const auto& u : f.background()) {
        if (!m.has_variable(u)) {
            return {false, ValidationIssue::unknown_variable, "background variable '" + u + "' is not in the model", 0.0};
        }
        if (!m.dag().parents(u).empty()) {
            return {false, ValidationIssue::background_not_root, "background variable '" + u + "' is not a root", 0.0};
        }
        const auto children = m.dag().children(u);
        if (children.size() != 1 || f.is_background(*children.begin())) {
            return {false, ValidationIssue::background_fan_out,
                    "background variable '" + u + "' must feed exactly one observed variable", 0.0};
        }
    }
    for (const auto& v : m.variables()) {
        if (f.is_background(v.name)) continue;
        const auto parents = m.dag().parents(v.name);
        if (parents.empty()) continue;  // observed roots carry arbitrary priors
        std::size_t background_parents = 0;
        for (const auto& p : parents) {
            if (f.is_background(p)) ++background_parents;
        }
        if (background_parents > 1) {
            return {false, ValidationIssue::background_fan_out,
                    "variable '" + v.name + "' has more than one background parent", 0.0};
        }
        for (double e : m.cpt(v.name).values()) {
            if (std::abs(e) > 1e-12 && std::abs(e - 1.0) > 1e-12) {
                return {false, ValidationIssue::mechanism_not_deterministic,
                        "mechanism for '" + v.name + "' is not deterministic", 0.0};
            }
        }
    }
    return {};
}

CausalModel induce_cgm(const FunctionalModel& f) {
    const CausalModel& m = f.full_model();
    std::vector<Variable> observed_vars;
    for (const auto& v : m.variables()) {
        if (!f.is_background(v.name)) observed_vars.push_back(v);
    }
    std::vector<std::string> node_names = names_of(observed_vars);
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : m.dag().edges()) {
        if (!f.is_background(e.first) && !f.is_background(e.second)) edges.push_back(e);
    }
    Dag dag(node_names, std::move(edges));

    std::map<std::string, Table> cpts;
    for (const auto& v : observed_vars) {
        const Table& cpt = m.cpt(v.name);
        std::size_t bpos = SIZE_MAX;
        for (std::size_t i = 0; i < cpt.given().size(); ++i) {
            if (f.is_background(cpt.given()[i].name)) bpos = i;
        }
        if (bpos == SIZE_MAX) {
            cpts.emplace(v.name, cpt);
            continue;
        }
        const Variable& u = cpt.given()[bpos];
        const Table& prior = m.cpt(u.name);

        std::vector<Variable> kept_given;
        for (std::size_t i = 0; i < cpt.given().size(); ++i) {
            if (i != bpos) kept_given.push_back(cpt.given()[i]);
        }
        const std::size_t kept_cells = cell_count(kept_given);
        const auto old_strides = strides(cpt.given());
        const auto kept_strides = strides(kept_given);
        std::vector<double> values(kept_cells * v.cardinality(), 0.0);
        std::vector<std::size_t> kept_states(kept_given.size(), 0);
        for (std::size_t kg = 0; kg < kept_cells; ++kg) {
            decode_index(kept_given, kg, kept_states);
            for (std::size_t us = 0; us < u.cardinality(); ++us) {
                std::size_t old_g = us * old_strides[bpos];
                std::size_t k = 0;
                for (std::size_t i = 0; i < cpt.given().size(); ++i) {
                    if (i == bpos) continue;
                    old_g += kept_states[k] * old_strides[i];
                    ++k;
                }
                const double pu = prior.at_joint(us);
                for (std::size_t s = 0; s < v.cardinality(); ++s) {
                    values[kg * v.cardinality() + s] += pu * cpt.at(old_g, s);
                }
            }
        }
        cpts.emplace(v.name, Table({v}, std::move(kept_given), std::move(values)));
    }
    return CausalModel(std::move(observed_vars), std::move(dag), std::move(cpts));
}

std::optional<std::size_t> Dataset::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return i;
    }
    return std::nullopt;
}

namespace {

Dataset sample_impl(const CausalModel& m, std::size_t n, std::uint64_t seed, Provenance provenance) {
    require_complete(m);
    if (n == 0) throw ValidationError("sample count must be at least 1");
    const auto& vars = m.variables();
    const auto topo = m.dag().topological_order();

    std::vector<std::size_t> col_of(vars.size());  // topo position -> column
    std::vector<const Table*> cpt_of(vars.size());
    std::vector<std::vector<std::size_t>> parent_cols(vars.size());
    std::vector<std::vector<std::size_t>> parent_strides(vars.size());
    for (std::size_t t = 0; t < topo.size(); ++t) {
        std::size_t col = SIZE_MAX;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i].name == topo[t]) col = i;
        }
        col_of[t] = col;
        const Table& cpt = m.cpt(topo[t]);
        cpt_of[t] = &cpt;
        parent_strides[t] = strides(cpt.given());
        for (const auto& g : cpt.given()) {
            for (std::size_t i = 0; i < vars.size(); ++i) {
                if (vars[i].name == g.name) parent_cols[t].push_back(i);
            }
        }
    }

    Dataset d;
    d.columns = vars;
    d.rows = n;
    d.values.resize(n * vars.size());
    d.provenance = std::move(provenance);
    d.seed = seed;

    Xoshiro256StarStar rng(seed);
    std::vector<std::size_t> row(vars.size(), 0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t t = 0; t < topo.size(); ++t) {
            std::size_t g = 0;
            for (std::size_t k = 0; k < parent_cols[t].size(); ++k) {
                g += row[parent_cols[t][k]] * parent_strides[t][k];
            }
            const auto probs = cpt_of[t]->row(g);
            const double u = rng.next_double();
            std::size_t state = probs.size() - 1;
            double cum = 0.0;
            for (std::size_t s = 0; s < probs.size(); ++s) {
                cum += probs[s];
                if (u < cum) {
                    state = s;
                    break;
                }
            }
            row[col_of[t]] = state;
        }
        std::copy(row.begin(), row.end(), d.values.begin() + r * vars.size());
    }
    return d;
}

}  // namespace

Dataset sample(const CausalModel& m, std::size_t n, std::uint64_t seed) {
    return sample_impl(m, n, seed, Provenance{Provenance::Kind::observational, {}});
}

Dataset sample(const FunctionalModel& f, std::size_t n, std::uint64_t seed) {
    return sample_impl(f.full_model(), n, seed, Provenance{Provenance::Kind::observational, {}});
}

Dataset randomized_experiment(const CausalModel& m, const std::set<std::string>& vars,
                              std::size_t n, std::uint64_t seed) {
    if (vars.empty()) throw ValidationError("randomized experiment needs at least one variable");
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : m.dag().edges()) {
        if (vars.count(e.second) == 0) edges.push_back(e);
    }
    Dag dag(m.dag().nodes(), std::move(edges));
    std::map<std::string, Table> cpts = m.cpts();
    for (const auto& name : vars) {
        const Variable& v = m.variable(name);
        cpts.erase(name);
        cpts.emplace(name, uniform_prior(v));
    }
    CausalModel randomized(m.variables(), std::move(dag), std::move(cpts));
    return sample_impl(randomized, n, seed, Provenance{Provenance::Kind::interventional, vars});
}

Table fit_cpt(const Dataset& d, const std::string& x, const std::vector<std::string>& parents,
              double smoothing) {
    if (!(smoothing >= 0.0)) throw ValidationError("smoothing must be nonnegative");
    const auto xcol = d.column_index(x);
    if (!xcol) throw ValidationError("variable '" + x + "' is not a dataset column");
    std::vector<std::size_t> pcols;
    for (const auto& p : parents) {
        if (p == x) throw ValidationError("variable '" + x + "' cannot be its own parent");
        const auto c = d.column_index(p);
        if (!c) throw ValidationError("parent '" + p + "' is not a dataset column");
        pcols.push_back(*c);
    }
    if (d.provenance.kind == Provenance::Kind::interventional) {
        for (const auto& p : parents) {
            if (d.provenance.intervened.count(p) == 0) {
                throw PreconditionError("interventional data does not randomize parent '" + p +
                                        "'; the fit cannot be read as p(" + x + " | do parents)");
            }
        }
        if (d.provenance.intervened.count(x)) {
            throw PreconditionError("variable '" + x + "' was intervened on; its mechanism is not observable");
        }
    }

    const Variable& xvar = d.columns[*xcol];
    std::vector<Variable> pvars;
    for (auto c : pcols) pvars.push_back(d.columns[c]);
    const std::size_t gcells = cell_count(pvars);
    const auto gstr = strides(pvars);
    const std::size_t card = xvar.cardinality();

    std::vector<double> counts(gcells * card, 0.0);
    std::vector<double> totals(gcells, 0.0);
    for (std::size_t r = 0; r < d.rows; ++r) {
        std::size_t g = 0;
        for (std::size_t k = 0; k < pcols.size(); ++k) g += d.at(r, pcols[k]) * gstr[k];
        counts[g * card + d.at(r, *xcol)] += 1.0;
        totals[g] += 1.0;
    }
    for (std::size_t g = 0; g < gcells; ++g) {
        const double denom = totals[g] + smoothing * static_cast<double>(card);
        if (denom > 0.0) {
            for (std::size_t s = 0; s < card; ++s) {
                counts[g * card + s] = (counts[g * card + s] + smoothing) / denom;
            }
        } else {
            for (std::size_t s = 0; s < card; ++s) {
                counts[g * card + s] = 1.0 / static_cast<double>(card);
            }
        }
    }
    return Table({xvar}, std::move(pvars), std::move(counts));
}

Table empirical_joint(const Dataset& d, const std::vector<std::string>& vars, double smoothing) {
    if (!(smoothing >= 0.0)) throw ValidationError("smoothing must be nonnegative");
    if (vars.empty()) throw ValidationError("empirical_joint requires at least one variable");
    std::vector<std::size_t> cols;
    std::vector<Variable> tvars;
    for (const auto& v : vars) {
        const auto c = d.column_index(v);
        if (!c) throw ValidationError("variable '" + v + "' is not a dataset column");
        cols.push_back(*c);
        tvars.push_back(d.columns[*c]);
    }
    const std::size_t cells = cell_count(tvars);
    const auto str = strides(tvars);
    std::vector<double> counts(cells, 0.0);
    for (std::size_t r = 0; r < d.rows; ++r) {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < cols.size(); ++k) idx += d.at(r, cols[k]) * str[k];
        counts[idx] += 1.0;
    }
    const double denom = static_cast<double>(d.rows) + smoothing * static_cast<double>(cells);
    if (denom <= 0.0) throw ValidationError("empirical_joint over an empty dataset needs smoothing");
    for (double& c : counts) c = (c + smoothing) / denom;
    return Table::joint(std::move(tvars), std::move(counts));
}

Table deterministic_cpt(const Variable& var, const std::vector<Variable>& parents,
                        const std::function<std::size_t(std::span<const std::size_t>)>& fn) {
    const std::size_t gcells = cell_count(parents);
    std::vector<double> values(gcells * var.cardinality(), 0.0);
    std::vector<std::size_t> states(parents.size(), 0);
    for (std::size_t g = 0; g < gcells; ++g) {
        decode_index(parents, g, states);
        const std::size_t out = fn(states);
        if (out >= var.cardinality()) {
            throw ValidationError("deterministic mechanism for '" + var.name +
                                  "' produced an out-of-range state");
        }
        values[g * var.cardinality() + out] = 1.0;
    }
    return Table({var}, parents, std::move(values));
}

Table bernoulli_prior(const Variable& var, double p1) {
    if (var.cardinality() != 2) throw ValidationError("bernoulli_prior requires a binary variable");
    if (!(p1 >= 0.0) || !(p1 <= 1.0)) throw ValidationError("bernoulli parameter outside [0, 1]");
    return Table::joint({var}, {1.0 - p1, p1});
}

Table uniform_prior(const Variable& var) {
    std::vector<double> values(var.cardinality(), 1.0 / static_cast<double>(var.cardinality()));
    return Table::joint({var}, std::move(values));
}

}  // namespace causalkit
