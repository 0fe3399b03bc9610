#include "causalkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace causalkit {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

[[noreturn]] void fail_validation(const std::string& msg) { throw ValidationError(msg); }

std::size_t find_var(std::span<const Variable> vars, const std::string& name) {
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i].name == name) return i;
    }
    fail_validation("unknown variable '" + name + "'");
}

// Clamps the -1e-16-scale negatives that the H(A,B) - H(B) form can produce.
double clamp_tiny_negative(double bits) {
    if (bits < 0.0 && bits > -1e-9) return 0.0;
    return bits;
}

}  // namespace

void check_variable(const Variable& v) {
    if (v.name.empty()) fail_validation("variable with empty name");
    if (v.states.empty()) fail_validation("variable '" + v.name + "' has no states");
    std::set<std::string> seen;
    for (const auto& s : v.states) {
        if (!seen.insert(s).second) {
            fail_validation("variable '" + v.name + "' has duplicate state label '" + s + "'");
        }
    }
}

std::size_t cell_count(std::span<const Variable> vars) {
    std::size_t n = 1;
    for (const auto& v : vars) {
        if (v.cardinality() == 0) fail_validation("variable '" + v.name + "' has no states");
        if (n > (std::size_t{1} << 62) / v.cardinality()) {
            fail_validation("state space too large to index");
        }
        n *= v.cardinality();
    }
    return n;
}

std::vector<std::size_t> strides(std::span<const Variable> vars) {
    std::vector<std::size_t> out(vars.size(), 1);
    for (std::size_t i = vars.size(); i-- > 1;) {
        out[i - 1] = out[i] * vars[i].cardinality();
    }
    return out;
}

std::size_t index_of(std::span<const Variable> vars, std::span<const std::size_t> states) {
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (std::size_t i = vars.size(); i-- > 0;) {
        idx += states[i] * stride;
        stride *= vars[i].cardinality();
    }
    return idx;
}

void decode_index(std::span<const Variable> vars, std::size_t index, std::span<std::size_t> out) {
    for (std::size_t i = vars.size(); i-- > 0;) {
        const std::size_t card = vars[i].cardinality();
        out[i] = index % card;
        index /= card;
    }
}

Table::Table(std::vector<Variable> scope, std::vector<Variable> given, std::vector<double> values)
    : scope_(std::move(scope)), given_(std::move(given)), values_(std::move(values)) {
    if (scope_.empty()) fail_validation("table with empty scope");
    std::set<std::string> names;
    for (const auto& v : scope_) {
        check_variable(v);
        if (!names.insert(v.name).second) fail_validation("duplicate variable '" + v.name + "' in table");
    }
    for (const auto& v : given_) {
        check_variable(v);
        if (!names.insert(v.name).second) {
            fail_validation("variable '" + v.name + "' appears in both scope and given");
        }
    }
    scope_cells_ = cell_count(scope_);
    given_cells_ = cell_count(given_);
    if (values_.size() != scope_cells_ * given_cells_) {
        fail_validation("table value count mismatch: expected " +
                        std::to_string(scope_cells_ * given_cells_) + ", got " +
                        std::to_string(values_.size()));
    }
    for (double v : values_) {
        if (!(v >= -1e-12) || !(v <= 1.0 + 1e-9) || !std::isfinite(v)) {
            fail_validation("table entry outside [0, 1]");
        }
    }
    for (std::size_t g = 0; g < given_cells_; ++g) {
        long double sum = 0.0L;
        for (std::size_t s = 0; s < scope_cells_; ++s) sum += values_[g * scope_cells_ + s];
        const double dev = std::abs(static_cast<double>(sum) - 1.0);
        if (dev > kNormalizationTolerance) {
            std::ostringstream msg;
            msg << "table row " << g << " sums to " << static_cast<double>(sum)
                << " (tolerance " << kNormalizationTolerance << ")";
            fail_validation(msg.str());
        }
        if (dev > 0.0) {
            const double inv = 1.0 / static_cast<double>(sum);
            for (std::size_t s = 0; s < scope_cells_; ++s) values_[g * scope_cells_ + s] *= inv;
        }
    }
    for (double& v : values_) {
        if (v < 0.0) v = 0.0;
    }
}

bool Table::same_layout(const Table& other) const {
    return scope_ == other.scope_ && given_ == other.given_;
}

namespace {
std::size_t index_of_assignment(std::span<const Variable> vars, const Assignment& a,
                                const char* which) {
    std::vector<std::size_t> states(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) {
        auto it = a.find(vars[i].name);
        if (it == a.end()) {
            fail_validation(std::string("assignment missing ") + which + " variable '" +
                            vars[i].name + "'");
        }
        if (it->second >= vars[i].cardinality()) {
            fail_validation("state index out of range for variable '" + vars[i].name + "'");
        }
        states[i] = it->second;
    }
    return index_of(vars, states);
}
}  // namespace

std::size_t Table::scope_index(const Assignment& a) const {
    return index_of_assignment(scope_, a, "scope");
}

std::size_t Table::given_index(const Assignment& a) const {
    if (given_.empty()) return 0;
    return index_of_assignment(given_, a, "given");
}

double Table::probability(const Assignment& scope_assignment, const Assignment& given_assignment) const {
    return at(given_index(given_assignment), scope_index(scope_assignment));
}

namespace {

// Positions of `names` inside a joint table's scope, validating membership.
std::vector<std::size_t> positions_in_scope(const Table& joint, const std::vector<std::string>& names) {
    if (!joint.is_joint()) fail_validation("operation requires a joint table");
    std::vector<std::size_t> pos;
    pos.reserve(names.size());
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second) fail_validation("duplicate variable '" + n + "'");
        pos.push_back(find_var(joint.scope(), n));
    }
    return pos;
}

std::vector<Variable> pick_vars(const Table& joint, const std::vector<std::size_t>& pos) {
    std::vector<Variable> out;
    out.reserve(pos.size());
    for (auto p : pos) out.push_back(joint.scope()[p]);
    return out;
}

}  // namespace

Table marginalize(const Table& joint, const std::vector<std::string>& keep) {
    const auto pos = positions_in_scope(joint, keep);
    const auto kept = pick_vars(joint, pos);
    const auto out_strides = strides(kept);
    std::vector<double> out(cell_count(kept), 0.0);

    const auto& vars = joint.scope();
    std::vector<std::size_t> states(vars.size(), 0);
    for (std::size_t cell = 0; cell < joint.scope_cells(); ++cell) {
        std::size_t out_idx = 0;
        for (std::size_t k = 0; k < pos.size(); ++k) out_idx += states[pos[k]] * out_strides[k];
        out[out_idx] += joint.at_joint(cell);
        // odometer increment, last variable fastest
        for (std::size_t i = vars.size(); i-- > 0;) {
            if (++states[i] < vars[i].cardinality()) break;
            states[i] = 0;
        }
    }
    return Table::joint(kept, std::move(out));
}

Table condition(const Table& joint, const Assignment& evidence) {
    if (!joint.is_joint()) fail_validation("condition requires a joint table");
    const auto& vars = joint.scope();
    std::vector<std::size_t> fixed(vars.size(), SIZE_MAX);
    std::vector<std::string> remaining;
    for (const auto& [name, state] : evidence) {
        const std::size_t p = find_var(vars, name);
        if (state >= vars[p].cardinality()) {
            fail_validation("state index out of range for variable '" + name + "'");
        }
        fixed[p] = state;
    }
    for (const auto& v : vars) {
        if (evidence.find(v.name) == evidence.end()) remaining.push_back(v.name);
    }
    if (remaining.empty()) fail_validation("evidence fixes every variable of the joint");

    const auto pos = positions_in_scope(joint, remaining);
    const auto kept = pick_vars(joint, pos);
    const auto out_strides = strides(kept);
    std::vector<double> out(cell_count(kept), 0.0);

    long double mass = 0.0L;
    std::vector<std::size_t> states(vars.size(), 0);
    for (std::size_t cell = 0; cell < joint.scope_cells(); ++cell) {
        bool match = true;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (fixed[i] != SIZE_MAX && states[i] != fixed[i]) {
                match = false;
                break;
            }
        }
        if (match) {
            std::size_t out_idx = 0;
            for (std::size_t k = 0; k < pos.size(); ++k) out_idx += states[pos[k]] * out_strides[k];
            out[out_idx] += joint.at_joint(cell);
            mass += joint.at_joint(cell);
        }
        for (std::size_t i = vars.size(); i-- > 0;) {
            if (++states[i] < vars[i].cardinality()) break;
            states[i] = 0;
        }
    }
    if (mass <= 0.0L) throw PreconditionError("evidence has zero probability");
    const double inv = 1.0 / static_cast<double>(mass);
    for (double& v : out) v *= inv;
    return Table::joint(kept, std::move(out));
}

Table conditional_from_joint(const Table& joint, const std::vector<std::string>& targets,
                             const std::vector<std::string>& given) {
    std::vector<std::string> all = targets;
    all.insert(all.end(), given.begin(), given.end());
    const auto pos = positions_in_scope(joint, all);

    std::vector<Variable> tvars, gvars;
    for (std::size_t i = 0; i < targets.size(); ++i) tvars.push_back(joint.scope()[pos[i]]);
    for (std::size_t i = targets.size(); i < all.size(); ++i) gvars.push_back(joint.scope()[pos[i]]);

    const std::size_t tcells = cell_count(tvars);
    const std::size_t gcells = cell_count(gvars);
    const auto tstr = strides(tvars);
    const auto gstr = strides(gvars);

    std::vector<double> sums(tcells * gcells, 0.0);
    std::vector<double> mass(gcells, 0.0);

    const auto& vars = joint.scope();
    std::vector<std::size_t> states(vars.size(), 0);
    for (std::size_t cell = 0; cell < joint.scope_cells(); ++cell) {
        std::size_t t_idx = 0, g_idx = 0;
        for (std::size_t k = 0; k < targets.size(); ++k) t_idx += states[pos[k]] * tstr[k];
        for (std::size_t k = 0; k < gvars.size(); ++k) {
            g_idx += states[pos[targets.size() + k]] * gstr[k];
        }
        const double v = joint.at_joint(cell);
        sums[g_idx * tcells + t_idx] += v;
        mass[g_idx] += v;
        for (std::size_t i = vars.size(); i-- > 0;) {
            if (++states[i] < vars[i].cardinality()) break;
            states[i] = 0;
        }
    }
    for (std::size_t g = 0; g < gcells; ++g) {
        if (mass[g] > 0.0) {
            const double inv = 1.0 / mass[g];
            for (std::size_t t = 0; t < tcells; ++t) sums[g * tcells + t] *= inv;
        } else {
            const double u = 1.0 / static_cast<double>(tcells);
            for (std::size_t t = 0; t < tcells; ++t) sums[g * tcells + t] = u;
        }
    }
    return Table(std::move(tvars), std::move(gvars), std::move(sums));
}

double mass_at(const Table& joint, const Assignment& partial) {
    if (!joint.is_joint()) fail_validation("mass_at requires a joint table");
    const auto& vars = joint.scope();
    std::vector<std::size_t> fixed(vars.size(), SIZE_MAX);
    for (const auto& [name, state] : partial) {
        const std::size_t p = find_var(vars, name);
        if (state >= vars[p].cardinality()) {
            fail_validation("state index out of range for variable '" + name + "'");
        }
        fixed[p] = state;
    }
    long double mass = 0.0L;
    std::vector<std::size_t> states(vars.size(), 0);
    for (std::size_t cell = 0; cell < joint.scope_cells(); ++cell) {
        bool match = true;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (fixed[i] != SIZE_MAX && states[i] != fixed[i]) {
                match = false;
                break;
            }
        }
        if (match) mass += joint.at_joint(cell);
        for (std::size_t i = vars.size(); i-- > 0;) {
            if (++states[i] < vars[i].cardinality()) break;
            states[i] = 0;
        }
    }
    return static_cast<double>(mass);
}

double InfoQuantity::nats() const { return bits * kLn2; }

InfoQuantity entropy(const Table& joint) {
    if (!joint.is_joint()) fail_validation("entropy requires a joint table");
    long double h = 0.0L;
    for (double p : joint.values()) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    return InfoQuantity{clamp_tiny_negative(static_cast<double>(h))};
}

InfoQuantity conditional_entropy(const Table& joint, const std::vector<std::string>& targets,
                                 const std::vector<std::string>& given) {
    for (const auto& t : targets) {
        for (const auto& g : given) {
            if (t == g) fail_validation("target and given sets overlap at '" + t + "'");
        }
    }
    if (targets.empty()) return InfoQuantity{0.0};
    std::vector<std::string> both = targets;
    both.insert(both.end(), given.begin(), given.end());
    const double h_both = entropy(marginalize(joint, both)).bits;
    const double h_given = given.empty() ? 0.0 : entropy(marginalize(joint, given)).bits;
    return InfoQuantity{clamp_tiny_negative(h_both - h_given)};
}

InfoQuantity kl_divergence(const Table& p, const Table& q) {
    if (!p.same_layout(q)) fail_validation("KL divergence requires identical table layouts");
    if (!p.is_joint()) fail_validation("KL divergence requires joint tables");
    long double d = 0.0L;
    for (std::size_t i = 0; i < p.values().size(); ++i) {
        const double pi = p.at_joint(i);
        const double qi = q.at_joint(i);
        if (pi > 0.0) {
            if (qi <= 0.0) {
                throw PreconditionError("absolute continuity violated: p > 0 where q = 0 (cell " +
                                        std::to_string(i) + ")");
            }
            d += pi * (std::log2(pi) - std::log2(qi));
        }
    }
    return InfoQuantity{static_cast<double>(d)};
}

InfoQuantity mutual_information(const Table& joint, const std::vector<std::string>& a,
                                const std::vector<std::string>& b,
                                const std::vector<std::string>& given) {
    std::set<std::string> seen;
    for (const auto* group : {&a, &b, &given}) {
        for (const auto& n : *group) {
            if (!seen.insert(n).second) {
                fail_validation("variable '" + n + "' appears in more than one argument set");
            }
        }
    }
    if (a.empty() || b.empty()) fail_validation("mutual information requires nonempty sets");
    std::vector<std::string> b_given = b;
    b_given.insert(b_given.end(), given.begin(), given.end());
    const double h_a_c = conditional_entropy(joint, a, given).bits;
    const double h_a_bc = conditional_entropy(joint, a, b_given).bits;
    return InfoQuantity{clamp_tiny_negative(h_a_c - h_a_bc)};
}

double percentile(std::vector<double> samples, double q) {
    if (samples.empty()) fail_validation("percentile of empty sample list");
    if (!(q > 0.0) || q > 100.0) fail_validation("percentile q must lie in (0, 100]");
    std::sort(samples.begin(), samples.end());
    const double raw = q * static_cast<double>(samples.size()) / 100.0;
    // snap ranks that are integral up to rounding noise before taking ceil
    auto rank = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    if (rank < 1) rank = 1;
    if (rank > samples.size()) rank = samples.size();
    return samples[rank - 1];
}

std::size_t distribution_percentile(const Table& single_var_joint, double q) {
    if (!single_var_joint.is_joint() || single_var_joint.scope().size() != 1) {
        fail_validation("distribution_percentile requires a single-variable joint table");
    }
    if (!(q > 0.0) || q > 100.0) fail_validation("percentile q must lie in (0, 100]");
    const double target = q / 100.0;
    long double cdf = 0.0L;
    const auto& vals = single_var_joint.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        cdf += vals[i];
        if (static_cast<double>(cdf) >= target - 1e-12) return i;
    }
    return vals.size() - 1;
}

}  // namespace causalkit
