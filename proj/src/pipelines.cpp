#include "causalkit/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace causalkit {

namespace {

double piece_entropy_bits(const Table& piece, const Table& prior) {
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

}  // namespace

Table backdoor_predict(const Dag& diagram,
                       const std::variant<const CausalModel*, const Dataset*>& source,
                       const std::string& x_var, const std::string& y_var,
                       const std::set<std::string>& adjust, double smoothing) {
    if (!backdoor_admissible(diagram, x_var, y_var, adjust)) {
        std::ostringstream msg;
        msg << "adjustment set {";
        bool first = true;
        for (const auto& z : adjust) {
            if (!first) msg << ", ";
            msg << z;
            first = false;
        }
        msg << "} is not back-door admissible for " << x_var << " -> " << y_var
            << ": it leaves a back-door path open or contains a descendant of " << x_var
            << "; adjusting on it would confuse correlation with causation";
        throw PreconditionError(msg.str());
    }
    const std::vector<std::string> zvars(adjust.begin(), adjust.end());
    std::vector<std::string> xz{x_var};
    xz.insert(xz.end(), zvars.begin(), zvars.end());

    Table y_given_xz = [&] {
        if (std::holds_alternative<const CausalModel*>(source)) {
            const auto* m = std::get<const CausalModel*>(source);
            return conditional_from_joint(joint(*m), {y_var}, xz);
        }
        const auto* d = std::get<const Dataset*>(source);
        return fit_cpt(*d, y_var, xz, smoothing);
    }();
    Table z_marginal = [&]() -> Table {
        if (std::holds_alternative<const CausalModel*>(source)) {
            const auto* m = std::get<const CausalModel*>(source);
            if (zvars.empty()) return Table::joint({Variable{"_unit", {"0"}}}, {1.0});
            return marginalize(joint(*m), zvars);
        }
        const auto* d = std::get<const Dataset*>(source);
        if (zvars.empty()) return Table::joint({Variable{"_unit", {"0"}}}, {1.0});
        return empirical_joint(*d, zvars, smoothing);
    }();

    const Variable& xv = y_given_xz.given()[0];
    const Variable& yv = y_given_xz.scope()[0];
    const std::size_t zcells = zvars.empty() ? 1 : z_marginal.scope_cells();

    // given layout of y_given_xz is (x, z...) with z varying fastest
    std::vector<double> out(xv.cardinality() * yv.cardinality(), 0.0);
    for (std::size_t x = 0; x < xv.cardinality(); ++x) {
        for (std::size_t z = 0; z < zcells; ++z) {
            const double pz = zvars.empty() ? 1.0 : z_marginal.at_joint(z);
            if (pz <= 0.0) continue;
            const std::size_t g = x * zcells + z;
            for (std::size_t y = 0; y < yv.cardinality(); ++y) {
                out[x * yv.cardinality() + y] += pz * y_given_xz.at(g, y);
            }
        }
    }
    return Table({yv}, {xv}, std::move(out));
}

CausalModel integrate_sandbox(const CausalModel& m, const std::string& x_var, const Dataset& d,
                              double smoothing) {
    const auto parents = m.dag().parents(x_var);
    if (d.provenance.kind != Provenance::Kind::interventional) {
        throw PreconditionError("sandbox integration needs interventional data; observational "
                                "samples cannot identify p(" + x_var + " | do parents)");
    }
    for (const auto& p : parents) {
        if (d.provenance.intervened.count(p) == 0) {
            throw PreconditionError("sandbox experiment did not randomize parent '" + p +
                                    "' of '" + x_var + "'");
        }
    }
    if (d.provenance.intervened.count(x_var)) {
        throw PreconditionError("sandbox experiment intervened on '" + x_var + "' itself");
    }
    if (!d.column_index(x_var)) {
        throw PreconditionError("variable '" + x_var + "' was not observed in the experiment");
    }
    // parent order: the declared CPT order when present, else lexicographic
    std::vector<std::string> parent_order;
    if (m.has_cpt(x_var)) {
        for (const auto& g : m.cpt(x_var).given()) parent_order.push_back(g.name);
    } else {
        parent_order.assign(parents.begin(), parents.end());
    }
    Table fitted = fit_cpt(d, x_var, parent_order, smoothing);
    return m.with_cpt(x_var, std::move(fitted));
}

double expected_utility(const CausalModel& m, const Utility& u) {
    if (u.targets.empty()) throw ValidationError("utility has no target variables");
    const auto tvars = m.variables_for(u.targets);
    if (u.values.size() != cell_count(tvars)) {
        throw ValidationError("utility value count does not match the target state space");
    }
    for (double v : u.values) {
        if (!std::isfinite(v)) throw ValidationError("utility values must be finite");
    }
    const Table marg = marginalize(joint(m), u.targets);
    long double e = 0.0L;
    for (std::size_t i = 0; i < marg.scope_cells(); ++i) {
        e += marg.at_joint(i) * u.values[i];
    }
    return static_cast<double>(e);
}

namespace {

// Enumerates candidate rows for one parent configuration of a stochastic-grid
// policy: all compositions of 1.0 into `card` multiples of `step`.
std::vector<std::vector<double>> grid_rows(std::size_t card, double step) {
    const auto ticks = static_cast<std::size_t>(std::llround(1.0 / step));
    if (ticks == 0 || std::abs(step * static_cast<double>(ticks) - 1.0) > 1e-9) {
        throw ValidationError("stochastic grid step must divide 1");
    }
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> part(card, 0);
    // lexicographic enumeration of compositions of `ticks` into `card` parts
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
        if (pos + 1 == card) {
            part[pos] = left;
            std::vector<double> row(card);
            for (std::size_t i = 0; i < card; ++i) row[i] = static_cast<double>(part[i]) * step;
            rows.push_back(std::move(row));
            return;
        }
        for (std::size_t take = 0; take <= left; ++take) {
            part[pos] = take;
            rec(pos + 1, left - take);
        }
    };
    rec(0, ticks);
    return rows;
}

}  // namespace

std::pair<Policy, double> optimize_policy(const CausalModel& m, const std::string& x_var,
                                          const Utility& u, PolicySpace space) {
    const Table& current = m.cpt(x_var);
    const std::size_t card = current.scope()[0].cardinality();
    const std::size_t configs = current.given_cells();

    std::vector<std::vector<double>> row_choices;
    if (space.kind == PolicySpace::Kind::deterministic) {
        for (std::size_t s = 0; s < card; ++s) {
            std::vector<double> row(card, 0.0);
            row[s] = 1.0;
            row_choices.push_back(std::move(row));
        }
    } else {
        row_choices = grid_rows(card, space.grid_step);
    }

    const std::size_t per_config = row_choices.size();
    double total = 1.0;
    for (std::size_t i = 0; i < configs; ++i) {
        total *= static_cast<double>(per_config);
        if (total > 4e6) {
            throw ValidationError("policy space too large to enumerate exhaustively");
        }
    }
    const auto candidates = static_cast<std::size_t>(total);

    // candidate index -> one row choice per parent configuration, the last
    // configuration varying fastest (the documented lexicographic encoding)
    auto build_policy_values = [&](std::size_t candidate) {
        std::vector<double> values(configs * card);
        std::size_t rem = candidate;
        for (std::size_t cfg = configs; cfg-- > 0;) {
            const std::size_t choice = rem % per_config;
            rem /= per_config;
            std::copy(row_choices[choice].begin(), row_choices[choice].end(),
                      values.begin() + cfg * card);
        }
        return values;
    };

    std::vector<double> scores(candidates);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long cand = 0; cand < static_cast<long long>(candidates); ++cand) {
        Table pi(current.scope(), current.given(), build_policy_values(static_cast<std::size_t>(cand)));
        scores[static_cast<std::size_t>(cand)] =
            expected_utility(m.with_cpt(x_var, std::move(pi)), u);
    }

    // ties (scores within the tolerance) go to the earliest encoding
    constexpr double kTieTolerance = 1e-9;
    std::size_t best = 0;
    for (std::size_t cand = 1; cand < candidates; ++cand) {
        if (scores[cand] > scores[best] + kTieTolerance) best = cand;
    }
    Policy policy{x_var, Table(current.scope(), current.given(), build_policy_values(best))};
    return {std::move(policy), scores[best]};
}

DebugAnswer debug_query(const CausalModel& m, const DebugQuery& q,
                        const std::optional<std::set<std::string>>& zset) {
    if (q.x_var == q.y_var) throw ValidationError("debug query needs distinct X and Y");
    if (q.x_factual == q.x_counterfactual && q.y_factual == q.y_target) {
        throw ValidationError("vacuous debug query: both X and Y keep their factual values");
    }
    if (q.x_factual == q.x_counterfactual) {
        // the do-value equals the factual value, so consistency already fixes
        // the answer: Y stays at its observed state, no approximation needed
        Assignment evidence = q.side_evidence;
        evidence[q.x_var] = q.x_factual;
        evidence[q.y_var] = q.y_factual;
        if (mass_at(joint(m), evidence) <= 0.0) {
            throw PreconditionError("evidence has zero probability");
        }
        return DebugAnswer{q.y_target == q.y_factual ? 1.0 : 0.0, InfoQuantity{0.0}, false};
    }
    CounterfactualQuery cq;
    cq.do_values[q.x_var] = q.x_counterfactual;
    cq.targets = {q.y_var};
    cq.evidence = q.side_evidence;
    cq.evidence[q.x_var] = q.x_factual;
    cq.evidence[q.y_var] = q.y_factual;

    const Table answer = zset ? generalized_approx_counterfactual(m, *zset, cq)
                              : approx_counterfactual(m, cq);

    std::set<std::string> w = zset ? *zset : m.dag().roots();
    w.erase(q.x_var);

    std::vector<std::string> evidence_vars;
    for (const auto& [name, _] : cq.evidence) {
        if (w.count(name) == 0) evidence_vars.push_back(name);
    }
    const InfoQuantity bound =
        conditional_entropy(joint(m), evidence_vars, std::vector<std::string>(w.begin(), w.end()));

    DebugAnswer out;
    out.probability = answer.at_joint(q.y_target);
    out.bound = bound;
    out.low_confidence = bound.bits > kLowConfidenceBits;
    return out;
}

std::optional<std::string> pick_shared_context(const std::vector<StakeholderDisclosure>& disclosures) {
    if (disclosures.size() < 2) {
        throw ValidationError("the shared-context protocol needs at least two stakeholders");
    }
    std::set<std::string> common;
    for (const auto& [name, _] : disclosures.front().candidate_entropy_bits) common.insert(name);
    for (std::size_t k = 1; k < disclosures.size(); ++k) {
        std::set<std::string> next;
        for (const auto& [name, _] : disclosures[k].candidate_entropy_bits) {
            if (common.count(name)) next.insert(name);
        }
        common = std::move(next);
    }
    if (common.empty()) return std::nullopt;

    std::optional<std::string> best;
    double best_sum = 0.0;
    for (const auto& candidate : common) {  // std::set iterates lexicographically
        double sum = 0.0;
        for (const auto& d : disclosures) sum += d.candidate_entropy_bits.at(candidate);
        if (!best || sum < best_sum) {
            best = candidate;
            best_sum = sum;
        }
    }
    return best;
}

OutcomePrediction predict_outcome(const Table& mechanism, const std::vector<Policy>& policies,
                                  const std::vector<StakeholderDisclosure>& disclosures,
                                  const Table& context_prior) {
    const Variable& context = context_prior.scope()[0];

    auto find_disclosure = [&](const std::string& demand) -> const StakeholderDisclosure* {
        for (const auto& d : disclosures) {
            if (d.demand_variable == demand) return &d;
        }
        return nullptr;
    };

    // one conditional p(input | c) per mechanism input; the context itself,
    // when the mechanism conditions on it, is marked instead of revealed
    std::vector<std::optional<Table>> pieces;
    std::optional<std::size_t> provider_index;
    std::size_t context_pos = SIZE_MAX;

    for (std::size_t k = 0; k < mechanism.given().size(); ++k) {
        const Variable& input = mechanism.given()[k];

        const Policy* policy = nullptr;
        for (const auto& p : policies) {
            if (p.variable == input.name) policy = &p;
        }
        if (policy) {
            if (policy->table.given().size() != 1) {
                throw ValidationError("policy for '" + input.name +
                                      "' must condition on exactly the client's demand");
            }
            const std::string demand = policy->table.given()[0].name;
            const auto* d = find_disclosure(demand);
            if (!d || !d->revealed) {
                throw PreconditionError("missing disclosure: p(" + demand + " | " + context.name +
                                        ") has not been revealed");
            }
            // p(y | c) = sum_x pi(y | x) p(x | c)
            const Table& piece = *d->revealed;
            const std::size_t xcard = piece.scope()[0].cardinality();
            const std::size_t ycard = input.cardinality();
            std::vector<double> values(context.cardinality() * ycard, 0.0);
            for (std::size_t c = 0; c < context.cardinality(); ++c) {
                for (std::size_t x = 0; x < xcard; ++x) {
                    const double px = piece.at(c, x);
                    if (px <= 0.0) continue;
                    for (std::size_t y = 0; y < ycard; ++y) {
                        values[c * ycard + y] += policy->table.at(x, y) * px;
                    }
                }
            }
            pieces.emplace_back(Table({input}, {context}, std::move(values)));
        } else if (input.name == context.name) {
            if (input != context) {
                throw ValidationError("mechanism disagrees on the states of the context");
            }
            context_pos = k;
            pieces.emplace_back(std::nullopt);
        } else if (const auto* d = find_disclosure(input.name)) {
            if (!d->revealed) {
                throw PreconditionError("missing disclosure: p(" + input.name + " | " +
                                        context.name + ") has not been revealed");
            }
            pieces.push_back(*d->revealed);
            if (d->is_provider) provider_index = k;
        } else {
            throw PreconditionError("missing disclosure piece for mechanism input '" + input.name +
                                    "'");
        }
    }

    std::optional<Table> distribution;
    if (context_pos == SIZE_MAX) {
        TransportInputs inputs{mechanism, {}, context_prior, provider_index};
        for (auto& p : pieces) inputs.source_marginals.push_back(std::move(*p));
        distribution = approx_transport(inputs);
    } else {
        // context-conditioned mechanism: sum each context slice directly
        const std::size_t zcells = mechanism.scope_cells();
        std::vector<double> values(zcells, 0.0);
        const auto& inputs = mechanism.given();
        std::vector<std::size_t> states(inputs.size(), 0);
        for (std::size_t g = 0; g < mechanism.given_cells(); ++g) {
            const std::size_t c = states[context_pos];
            double weight = context_prior.at_joint(c);
            for (std::size_t k = 0; k < inputs.size() && weight > 0.0; ++k) {
                if (k != context_pos) weight *= pieces[k]->at(c, states[k]);
            }
            if (weight > 0.0) {
                for (std::size_t z = 0; z < zcells; ++z) values[z] += weight * mechanism.at(g, z);
            }
            for (std::size_t i = inputs.size(); i-- > 0;) {
                if (++states[i] < inputs[i].cardinality()) break;
                states[i] = 0;
            }
        }
        long double total = 0.0L;
        for (double v : values) total += v;
        if (total > 0.0L) {
            const double norm = 1.0 / static_cast<double>(total);
            for (double& v : values) v *= norm;
        }
        distribution = Table::joint({mechanism.scope()[0]}, std::move(values));
    }

    long double bound = 0.0L;
    for (const auto& d : disclosures) {
        if (d.is_provider) continue;
        if (!d.revealed) {
            throw PreconditionError("missing disclosure: p(" + d.demand_variable + " | " +
                                    context.name + ") has not been revealed");
        }
        bound += piece_entropy_bits(*d.revealed, context_prior);
    }
    return OutcomePrediction{std::move(*distribution), InfoQuantity{static_cast<double>(bound)}};
}

}  // namespace causalkit
