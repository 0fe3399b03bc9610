#include "causalkit/transport.hpp"

#include <cmath>

namespace causalkit {

namespace {

// Entropy of X given C from the pieces p(x|c) and p(c), skipping zero-mass
// context cells.
double piece_conditional_entropy_bits(const Table& piece, const Table& prior) {
    long double h = 0.0L;
    for (std::size_t c = 0; c < prior.scope_cells(); ++c) {
        const double pc = prior.at_joint(c);
        if (pc <= 0.0) continue;
        long double row_h = 0.0L;
        for (double p : piece.row(c)) {
            if (p > 0.0) row_h -= p * std::log2(p);
        }
        h += pc * row_h;
    }
    return static_cast<double>(h);
}

std::vector<double> transport_context_partials(const TransportInputs& t, std::size_t c) {
    const Table& mech = t.mechanism;
    const std::size_t zc = mech.scope_cells();
    const auto& sources = mech.given();
    std::vector<double> partial(zc, 0.0);
    std::vector<std::size_t> states(sources.size(), 0);
    for (std::size_t g = 0; g < mech.given_cells(); ++g) {
        double weight = 1.0;
        for (std::size_t k = 0; k < sources.size(); ++k) {
            weight *= t.source_marginals[k].at(c, states[k]);
        }
        if (weight > 0.0) {
            for (std::size_t z = 0; z < zc; ++z) partial[z] += weight * mech.at(g, z);
        }
        for (std::size_t i = sources.size(); i-- > 0;) {
            if (++states[i] < sources[i].cardinality()) break;
            states[i] = 0;
        }
    }
    return partial;
}

Table combine_partials(const TransportInputs& t, const std::vector<std::vector<double>>& partials) {
    const std::size_t zc = t.mechanism.scope_cells();
    std::vector<double> out(zc, 0.0);
    for (std::size_t c = 0; c < partials.size(); ++c) {
        const double pc = t.context_prior.at_joint(c);
        for (std::size_t z = 0; z < zc; ++z) out[z] += pc * partials[c][z];
    }
    long double total = 0.0L;
    for (double v : out) total += v;
    if (total > 0.0L) {
        const double norm = 1.0 / static_cast<double>(total);
        for (double& v : out) v *= norm;
    }
    return Table::joint(t.mechanism.scope(), std::move(out));
}

}  // namespace

void check_transport_inputs(const TransportInputs& t) {
    const auto& sources = t.mechanism.given();
    if (t.mechanism.scope().size() != 1) {
        throw ValidationError("transport mechanism must have a single outcome variable");
    }
    if (sources.empty()) throw ValidationError("transport mechanism conditions on no sources");
    if (t.source_marginals.size() != sources.size()) {
        throw ValidationError("expected one source marginal per mechanism source, got " +
                              std::to_string(t.source_marginals.size()) + " for " +
                              std::to_string(sources.size()) + " sources");
    }
    if (t.context_prior.scope().size() != 1 || !t.context_prior.is_joint()) {
        throw ValidationError("context prior must be a single-variable joint table");
    }
    const Variable& context = t.context_prior.scope()[0];
    for (std::size_t k = 0; k < sources.size(); ++k) {
        const Table& piece = t.source_marginals[k];
        if (piece.scope().size() != 1 || piece.scope()[0] != sources[k]) {
            throw ValidationError("source marginal " + std::to_string(k) +
                                  " does not match mechanism source '" + sources[k].name + "'");
        }
        if (piece.given().size() != 1 || piece.given()[0] != context) {
            throw ValidationError("source marginal for '" + sources[k].name +
                                  "' must condition on the shared context '" + context.name + "'");
        }
    }
    if (t.provider_index && *t.provider_index >= sources.size()) {
        throw ValidationError("provider index out of range");
    }
}

Table approx_transport(const TransportInputs& t) {
    check_transport_inputs(t);
    const std::size_t ccells = t.context_prior.scope_cells();
    std::vector<std::vector<double>> partials(ccells);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long c = 0; c < static_cast<long long>(ccells); ++c) {
        partials[static_cast<std::size_t>(c)] =
            transport_context_partials(t, static_cast<std::size_t>(c));
    }
    return combine_partials(t, partials);
}

Table approx_transport_serial(const TransportInputs& t) {
    check_transport_inputs(t);
    const std::size_t ccells = t.context_prior.scope_cells();
    std::vector<std::vector<double>> partials(ccells);
    for (std::size_t c = 0; c < ccells; ++c) partials[c] = transport_context_partials(t, c);
    return combine_partials(t, partials);
}

InfoQuantity transport_bound(const TransportInputs& t, bool include_x0) {
    check_transport_inputs(t);
    long double bound = 0.0L;
    for (std::size_t k = 0; k < t.source_marginals.size(); ++k) {
        if (t.provider_index && *t.provider_index == k && !include_x0) continue;
        bound += piece_conditional_entropy_bits(t.source_marginals[k], t.context_prior);
    }
    return InfoQuantity{static_cast<double>(bound)};
}

Certificate transport_certificate(const Table& full_joint, const TransportInputs& t,
                                  bool include_x0) {
    check_transport_inputs(t);
    const std::string z_name = t.mechanism.scope()[0].name;
    const std::string c_name = t.context_prior.scope()[0].name;
    std::vector<std::string> source_names;
    for (const auto& s : t.mechanism.given()) source_names.push_back(s.name);

    constexpr double kPieceTolerance = 1e-6;

    // the supplied pieces must be marginals of the joint
    const Table prior_from_joint = marginalize(full_joint, {c_name});
    for (std::size_t c = 0; c < prior_from_joint.scope_cells(); ++c) {
        if (std::abs(prior_from_joint.at_joint(c) - t.context_prior.at_joint(c)) > kPieceTolerance) {
            throw ValidationError("context prior is not the joint's marginal of '" + c_name + "'");
        }
    }
    for (std::size_t k = 0; k < source_names.size(); ++k) {
        const Table piece_from_joint = conditional_from_joint(full_joint, {source_names[k]}, {c_name});
        for (std::size_t c = 0; c < piece_from_joint.given_cells(); ++c) {
            if (prior_from_joint.at_joint(c) <= 0.0) continue;
            for (std::size_t s = 0; s < piece_from_joint.scope_cells(); ++s) {
                if (std::abs(piece_from_joint.at(c, s) - t.source_marginals[k].at(c, s)) >
                    kPieceTolerance) {
                    throw ValidationError("source marginal for '" + source_names[k] +
                                          "' is not a marginal of the joint");
                }
            }
        }
    }
    const Table source_mass = marginalize(full_joint, source_names);
    const Table mech_from_joint = conditional_from_joint(full_joint, {z_name}, source_names);
    for (std::size_t g = 0; g < mech_from_joint.given_cells(); ++g) {
        if (source_mass.at_joint(g) <= 0.0) continue;
        for (std::size_t z = 0; z < mech_from_joint.scope_cells(); ++z) {
            if (std::abs(mech_from_joint.at(g, z) - t.mechanism.at(g, z)) > kPieceTolerance) {
                throw ValidationError("mechanism is not the joint's conditional of '" + z_name +
                                      "' given the sources");
            }
        }
    }

    // exact conditional-independence test of Z _||_ C | sources on the joint
    bool ci_holds = true;
    {
        std::vector<std::string> sources_and_c = source_names;
        sources_and_c.push_back(c_name);
        const Table mass_xc = marginalize(full_joint, sources_and_c);
        const Table z_given_xc = conditional_from_joint(full_joint, {z_name}, sources_and_c);
        const std::size_t ccard = t.context_prior.scope_cells();
        for (std::size_t g = 0; g < z_given_xc.given_cells() && ci_holds; ++g) {
            if (mass_xc.at_joint(g) <= 0.0) continue;
            const std::size_t source_cell = g / ccard;  // c varies fastest in sources_and_c
            for (std::size_t z = 0; z < z_given_xc.scope_cells(); ++z) {
                if (std::abs(z_given_xc.at(g, z) - mech_from_joint.at(source_cell, z)) > 1e-9) {
                    ci_holds = false;
                    break;
                }
            }
        }
    }

    Certificate cert;
    cert.preconditions_ok = ci_holds;
    cert.bound_includes_x0 = include_x0 && t.provider_index.has_value();
    cert.divergence = kl_divergence(marginalize(full_joint, {z_name}), approx_transport(t));
    cert.bound = transport_bound(t, include_x0);
    return cert;
}

bool within_transport_bound(const Table& candidate, const Table& pbar, InfoQuantity bound,
                            double epsilon) {
    if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be nonnegative");
    return kl_divergence(candidate, pbar).bits <= bound.bits * (1.0 + epsilon) + 1e-9;
}

}  // namespace causalkit
