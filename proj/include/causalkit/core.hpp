#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "causalkit/errors.hpp"

namespace causalkit {

// Row sums may deviate from 1 by at most this much; smaller deviations are
// renormalized at construction, larger ones are rejected.
inline constexpr double kNormalizationTolerance = 1e-9;

// A named finite-domain variable with an ordered list of state labels.
struct Variable {
    std::string name;
    std::vector<std::string> states;

    std::size_t cardinality() const { return states.size(); }
    bool operator==(const Variable& other) const = default;
};

// Checks name nonempty, at least one state, labels unique.
void check_variable(const Variable& v);

// Partial assignment of variables to state indices.
using Assignment = std::map<std::string, std::size_t>;

// Number of cells in the mixed-radix space spanned by `vars`.
std::size_t cell_count(std::span<const Variable> vars);

// Strides for mixed-radix indexing; the last variable varies fastest.
std::vector<std::size_t> strides(std::span<const Variable> vars);

std::size_t index_of(std::span<const Variable> vars, std::span<const std::size_t> states);
void decode_index(std::span<const Variable> vars, std::size_t index, std::span<std::size_t> out);

// A probability table over an ordered variable tuple, optionally conditioned
// on a second tuple. Entries are stored row-major: one row (distribution over
// the scope) per assignment of the given tuple. Immutable after construction.
class Table {
public:
    Table(std::vector<Variable> scope, std::vector<Variable> given, std::vector<double> values);

    static Table joint(std::vector<Variable> scope, std::vector<double> values) {
        return Table(std::move(scope), {}, std::move(values));
    }

    const std::vector<Variable>& scope() const { return scope_; }
    const std::vector<Variable>& given() const { return given_; }
    bool is_joint() const { return given_.empty(); }

    std::size_t scope_cells() const { return scope_cells_; }
    std::size_t given_cells() const { return given_cells_; }

    double at(std::size_t given_index, std::size_t scope_index) const {
        return values_[given_index * scope_cells_ + scope_index];
    }
    double at_joint(std::size_t scope_index) const { return values_[scope_index]; }

    std::span<const double> row(std::size_t given_index) const {
        return {values_.data() + given_index * scope_cells_, scope_cells_};
    }
    const std::vector<double>& values() const { return values_; }

    // True iff scope and given tuples match in names, order and state labels.
    bool same_layout(const Table& other) const;

    // Index of a full scope (or given) assignment; every variable must be bound.
    std::size_t scope_index(const Assignment& a) const;
    std::size_t given_index(const Assignment& a) const;

    double probability(const Assignment& scope_assignment, const Assignment& given_assignment = {}) const;

private:
    std::vector<Variable> scope_;
    std::vector<Variable> given_;
    std::vector<double> values_;
    std::size_t scope_cells_ = 0;
    std::size_t given_cells_ = 0;
};

// --- joint-table algebra -----------------------------------------------------

// Marginal of a joint table onto `keep`, in the order given.
Table marginalize(const Table& joint, const std::vector<std::string>& keep);

// Conditions a joint table on a partial assignment and renormalizes. The
// result's scope keeps the joint's variable order with evidence variables
// removed. Zero-probability evidence is refused.
Table condition(const Table& joint, const Assignment& evidence);

// p(targets | given) extracted from a joint table. Rows whose conditioning
// assignment has zero mass are set to uniform.
Table conditional_from_joint(const Table& joint, const std::vector<std::string>& targets,
                             const std::vector<std::string>& given);

// Total mass of the cells of a joint table matching a partial assignment.
double mass_at(const Table& joint, const Assignment& partial);

// --- information measures ----------------------------------------------------

// Information quantity in bits (log base 2).
struct InfoQuantity {
    double bits = 0.0;
    double nats() const;
};

// Shannon entropy of a joint table, with 0 log 0 := 0.
InfoQuantity entropy(const Table& joint);

// H(targets | given) = H(targets, given) - H(given) on a joint table.
// `targets` may be empty (yielding 0); the sets must be disjoint.
InfoQuantity conditional_entropy(const Table& joint, const std::vector<std::string>& targets,
                                 const std::vector<std::string>& given);

// KL(p || q) in bits over tables with identical layout. A cell with p > 0 and
// q = 0 violates absolute continuity and raises PreconditionError.
InfoQuantity kl_divergence(const Table& p, const Table& q);

// I(a : b | given) = H(a | given) - H(a | b, given), on a joint table.
InfoQuantity mutual_information(const Table& joint, const std::vector<std::string>& a,
                                const std::vector<std::string>& b,
                                const std::vector<std::string>& given = {});

// --- percentiles ---------------------------------------------------------

// Nearest-rank percentile: the ceil(q*n/100)-th smallest sample, q in (0,100].
double percentile(std::vector<double> samples, double q);

// Nearest-rank percentile of a single-variable distribution: the smallest
// state index whose CDF reaches q/100.
std::size_t distribution_percentile(const Table& single_var_joint, double q);

}  // namespace causalkit
