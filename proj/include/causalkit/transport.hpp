#pragma once

#include <optional>
#include <vector>

#include "causalkit/counterfactuals.hpp"

namespace causalkit {

// The pieces available when the joint over the sources is not: a mechanism
// p(z | x_0..x_K), one context-conditional p(x_k | c) per source, and the
// context prior p(c). `provider_index` marks the provider variable X_0, which
// the default divergence bound leaves out.
struct TransportInputs {
    Table mechanism;                       // scope {Z}, given = sources in order
    std::vector<Table> source_marginals;   // p(x_k | c), aligned with mechanism.given()
    Table context_prior;                   // p(c)
    std::optional<std::size_t> provider_index;
};

// Throws ValidationError when the pieces' schemes are inconsistent.
void check_transport_inputs(const TransportInputs& t);

// The approximate reconstruction
//   pbar(z) = sum_{x_0..x_K, c} p(z | x_0..x_K) prod_k p(x_k | c) p(c).
Table approx_transport(const TransportInputs& t);
Table approx_transport_serial(const TransportInputs& t);

// sum_k H(X_k | C) in bits. The provider term H(X_0 | C) is skipped by
// default and added when include_x0 is set; with no provider source all
// terms are summed.
InfoQuantity transport_bound(const TransportInputs& t, bool include_x0 = false);

// Certifies pbar against a known full joint over (Z, sources, C): the pieces
// must be marginals of the joint (tolerance 1e-6), divergence is
// KL(p(Z) || pbar(Z)), and preconditions_ok records the exact conditional
// independence Z _||_ C | X_0..X_K on the joint (tolerance 1e-9). When the
// independence fails the certificate is still returned, but the bound is not
// guaranteed.
Certificate transport_certificate(const Table& full_joint, const TransportInputs& t,
                                  bool include_x0 = false);

// Whether a candidate outcome distribution is compatible with the
// reconstruction: KL(candidate || pbar) <= bound * (1 + epsilon). This is how
// "the set of possible p(Z)" is narrowed down to the plausible ones.
bool within_transport_bound(const Table& candidate, const Table& pbar, InfoQuantity bound,
                            double epsilon = 0.0);

}  // namespace causalkit
