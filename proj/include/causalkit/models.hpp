#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "causalkit/core.hpp"
#include "causalkit/graphs.hpp"

namespace causalkit {

// Default cap on the number of cells a full joint may occupy.
inline constexpr std::size_t kJointCellCap = std::size_t{1} << 22;

enum class ValidationIssue {
    none,
    duplicate_variable,
    unknown_variable,
    cycle,
    missing_cpt,
    scope_mismatch,
    parent_mismatch,
    normalization,
    background_not_root,
    background_fan_out,
    mechanism_not_deterministic,
};

struct ValidationReport {
    bool ok = true;
    ValidationIssue issue = ValidationIssue::none;
    std::string message;
    double max_row_residual = 0.0;
};

// A causal graphical model: a DAG plus one CPT per node whose given-tuple is
// exactly the node's parent set. CPTs may be missing while a model is being
// assembled; operations that need the full factorization require completeness.
class CausalModel {
public:
    CausalModel(std::vector<Variable> variables, Dag dag, std::map<std::string, Table> cpts);

    const std::vector<Variable>& variables() const { return variables_; }
    const Dag& dag() const { return dag_; }
    const Variable& variable(const std::string& name) const;
    bool has_variable(const std::string& name) const;

    bool has_cpt(const std::string& node) const { return cpts_.count(node) > 0; }
    const Table& cpt(const std::string& node) const;
    const std::map<std::string, Table>& cpts() const { return cpts_; }
    bool complete() const;

    CausalModel with_cpt(const std::string& node, Table cpt) const;

    std::vector<Variable> variables_for(const std::vector<std::string>& names) const;

private:
    std::vector<Variable> variables_;
    Dag dag_;
    std::map<std::string, Table> cpts_;
};

// Checks acyclicity (already enforced by Dag), CPT presence, CPT/parent
// consistency and normalization residuals; stops at the first violation.
ValidationReport validate(const CausalModel& m);

// Exact joint by full enumeration of the state space: the product of all CPT
// rows per full assignment. Variable order of the result equals the model's.
Table joint(const CausalModel& m, std::size_t max_cells = kJointCellCap);

// Serial reference implementation of the same enumeration; bit-identical to
// joint() and kept for tests and benchmarks.
Table joint_serial(const CausalModel& m, std::size_t max_cells = kJointCellCap);

// Exact p(targets | evidence) by enumeration and renormalization.
Table query(const CausalModel& m, const std::vector<std::string>& targets,
            const Assignment& evidence, std::size_t max_cells = kJointCellCap);

// Mutilated model: intervened variables become point-mass roots, everything
// else is untouched. Idempotent; commutes for disjoint do-sets.
CausalModel intervene(const CausalModel& m, const Assignment& do_values);

// query() on the mutilated model. Evidence must not mention do-variables.
Table interventional_query(const CausalModel& m, const std::vector<std::string>& targets,
                           const Assignment& do_values, const Assignment& evidence = {},
                           std::size_t max_cells = kJointCellCap);

// A CGM whose non-root mechanisms are deterministic and whose roots include
// dedicated background variables (at most one per observed variable, each a
// root with a single child).
class FunctionalModel {
public:
    FunctionalModel(CausalModel full, std::set<std::string> background);

    const CausalModel& full_model() const { return full_; }
    const std::set<std::string>& background() const { return background_; }
    bool is_background(const std::string& name) const { return background_.count(name) > 0; }
    std::vector<std::string> observed() const;

private:
    CausalModel full_;
    std::set<std::string> background_;
};

ValidationReport validate(const FunctionalModel& f);

// The CGM induced by marginalizing every mechanism over its background prior.
CausalModel induce_cgm(const FunctionalModel& f);

struct Provenance {
    enum class Kind { observational, interventional };
    Kind kind = Kind::observational;
    std::set<std::string> intervened;
};

// Seeded sample matrix; rows are draws, columns follow the model's variable order.
struct Dataset {
    std::vector<Variable> columns;
    std::vector<std::size_t> values;  // row-major, rows * columns.size()
    std::size_t rows = 0;
    Provenance provenance;
    std::uint64_t seed = 0;

    std::size_t at(std::size_t row, std::size_t col) const { return values[row * columns.size() + col]; }
    std::optional<std::size_t> column_index(const std::string& name) const;
};

// Ancestral sampling in topological order (lexicographic tie-break). Exactly
// one PRNG draw is consumed per variable per row, so a seed pins the dataset
// bit-exactly.
Dataset sample(const CausalModel& m, std::size_t n, std::uint64_t seed);
Dataset sample(const FunctionalModel& f, std::size_t n, std::uint64_t seed);

// Randomized experiment: the listed variables are cut loose from their parents
// and drawn uniformly, everything else follows the model. Provenance is
// interventional over `vars`.
Dataset randomized_experiment(const CausalModel& m, const std::set<std::string>& vars,
                              std::size_t n, std::uint64_t seed);

// Add-smoothing frequency estimate of p(x | parents). Unseen parent
// configurations yield a uniform row. Interventional data is accepted only if
// the intervened set covers the parents and does not contain x; that is what
// licenses reading the fit as p(x | do parents).
Table fit_cpt(const Dataset& d, const std::string& x, const std::vector<std::string>& parents,
              double smoothing = 1.0);

// Smoothed empirical joint over a variable tuple.
Table empirical_joint(const Dataset& d, const std::vector<std::string>& vars, double smoothing = 0.0);

// --- table construction helpers ---------------------------------------------

// Deterministic CPT from a function of the parent states.
Table deterministic_cpt(const Variable& var, const std::vector<Variable>& parents,
                        const std::function<std::size_t(std::span<const std::size_t>)>& fn);

// Root prior for a binary variable with p(state 1) = p1.
Table bernoulli_prior(const Variable& var, double p1);

Table uniform_prior(const Variable& var);

}  // namespace causalkit
