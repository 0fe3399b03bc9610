#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "causalkit/transport.hpp"

namespace causalkit {

// Debug answers whose bound exceeds this many bits are flagged low-confidence.
inline constexpr double kLowConfidenceBits = 0.5;

// A mechanism candidate for a controlled variable: pi(x | pa_X).
struct Policy {
    std::string variable;
    Table table;  // scope {variable}, given = the policy's inputs (may be empty)
};

// "Would performance Y have improved from y to y' had X been x' instead of x,
// given side observation F = f?"
struct DebugQuery {
    std::string x_var;
    std::size_t x_factual = 0;
    std::size_t x_counterfactual = 0;
    std::string y_var;
    std::size_t y_factual = 0;
    std::size_t y_target = 0;
    Assignment side_evidence;
};

struct DebugAnswer {
    double probability = 0.0;
    InfoQuantity bound;
    bool low_confidence = false;
};

// A utility over the joint states of its target variables.
struct Utility {
    std::vector<std::string> targets;
    std::vector<double> values;  // mixed-radix over targets, last variable fastest
};

// What one stakeholder brings to the shared-context protocol.
struct StakeholderDisclosure {
    std::string id;
    std::string demand_variable;
    std::map<std::string, double> candidate_entropy_bits;  // candidate context -> H(X_k | C)
    std::optional<Table> revealed;                         // p(x_k | c), after consent
    bool is_provider = false;
};

// --- debugging / control pipeline ---------------------------------------

// p(y | do x) for every x via the adjustment formula sum_z p(y|x,z) p(z).
// `source` supplies the conditionals: exactly from a model, or fitted from a
// dataset with the given smoothing. Refuses inadmissible adjustment sets.
Table backdoor_predict(const Dag& diagram,
                       const std::variant<const CausalModel*, const Dataset*>& source,
                       const std::string& x_var, const std::string& y_var,
                       const std::set<std::string>& adjust, double smoothing = 1.0);

// Fits p(x | pa_X) from a randomized experiment that varied all of X's parents
// and installs it, completing the model.
CausalModel integrate_sandbox(const CausalModel& m, const std::string& x_var, const Dataset& d,
                              double smoothing = 1.0);

struct PolicySpace {
    enum class Kind { deterministic, stochastic_grid };
    Kind kind = Kind::deterministic;
    double grid_step = 0.1;
};

// Exhaustively evaluates E[u] with X's mechanism replaced by each candidate
// policy; returns the argmax, ties broken by the policy's lexicographic
// encoding (earliest candidate wins).
std::pair<Policy, double> optimize_policy(const CausalModel& m, const std::string& x_var,
                                          const Utility& u,
                                          PolicySpace space = {});

// Expected utility of the model as-is.
double expected_utility(const CausalModel& m, const Utility& u);

// Approximate counterfactual answer to a debug query plus the bound
// H(E | W) with E = {X, Y} plus the side-evidence variables. A query whose
// do-value equals the factual value is answered by consistency alone
// (probability 1 for the factual outcome, bound 0).
DebugAnswer debug_query(const CausalModel& m, const DebugQuery& q,
                        const std::optional<std::set<std::string>>& zset = std::nullopt);

// --- privacy pipeline ----------------------------------------------------

// Intersects the stakeholders' candidate context sets and picks the candidate
// minimizing sum_k H(X_k | C); absent when the intersection is empty (the
// procedure is canceled).
std::optional<std::string> pick_shared_context(const std::vector<StakeholderDisclosure>& disclosures);

struct OutcomePrediction {
    Table distribution;   // pbar(Z | policies)
    InfoQuantity bound;   // sum over client demands of H(X_k | C)
};

// Composes each client's p(y_k | c) from its policy and revealed demand
// conditional, then reconstructs pbar(Z) and the predictability bound.
// Mechanism inputs matching no policy output must be revealed directly.
OutcomePrediction predict_outcome(const Table& mechanism, const std::vector<Policy>& policies,
                                  const std::vector<StakeholderDisclosure>& disclosures,
                                  const Table& context_prior);

}  // namespace causalkit
