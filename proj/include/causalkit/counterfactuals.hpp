#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "causalkit/models.hpp"

namespace causalkit {

// "Had X been x', would Y have been y', given that e was observed?"
struct CounterfactualQuery {
    Assignment do_values;                      // X = x'
    std::vector<std::string> targets;          // Y
    std::optional<Assignment> target_values;   // y', when a scalar answer is wanted
    Assignment evidence;                       // e; may mention X's factual values
};

struct EvidenceTerm {
    Assignment evidence;
    double probability = 0.0;
    double kl_bits = 0.0;
};

// Result of the two approximation theorems: an evidence-averaged divergence,
// the information-theoretic bound that caps it, and whether the theorem's
// preconditions were met (only then is the bound guaranteed).
struct Certificate {
    InfoQuantity divergence;
    InfoQuantity bound;
    bool preconditions_ok = true;
    double slack_bits() const { return bound.bits - divergence.bits; }

    // per-evidence divergences, for diagnostics (counterfactual certificates)
    std::vector<EvidenceTerm> evidence_terms;
    // which bound variant was used (transport certificates)
    bool bound_includes_x0 = false;
};

// Structural counterfactual on a functional model: abduction over the root
// posterior p(u | e), action do(X = x'), prediction of Y.
Table exact_counterfactual(const FunctionalModel& f, const CounterfactualQuery& q);

// Approximate counterfactual on a CGM, with the root nodes W := roots \ X
// standing in for the background variables.
Table approx_counterfactual(const CausalModel& m, const CounterfactualQuery& q);

// Generalization with a caller-chosen separating set Z: requires Y d-separated
// from An(Z) \ Z given Z, and no directed path from X into W := Z \ X.
Table generalized_approx_counterfactual(const CausalModel& m, const std::set<std::string>& zset,
                                        const CounterfactualQuery& q);

// Throws PreconditionError naming the failed check.
void check_separating_set(const Dag& dag, const std::set<std::string>& zset,
                          const std::vector<std::string>& targets, const Assignment& do_values);

// Certifies the approximation: divergence is the evidence-averaged
// KL(exact || approx) over all positive-probability assignments of
// `evidence_vars`, the bound is H(E | W) on the induced CGM. With the default
// root-node W the preconditions hold by construction; passing `zset` uses the
// generalized W := Z \ X and records whether its preconditions hold.
Certificate counterfactual_certificate(const FunctionalModel& f, const Assignment& do_values,
                                       const std::vector<std::string>& targets,
                                       const std::set<std::string>& evidence_vars,
                                       const std::optional<std::set<std::string>>& zset = std::nullopt);

// Reference path computing the same certificate on the serial joint kernel.
Certificate counterfactual_certificate_serial(const FunctionalModel& f, const Assignment& do_values,
                                              const std::vector<std::string>& targets,
                                              const std::set<std::string>& evidence_vars,
                                              const std::optional<std::set<std::string>>& zset = std::nullopt);

}  // namespace causalkit
