#include <doctest.h>

#include <cmath>

#include "causalkit/harness.hpp"
#include "causalkit/pipelines.hpp"
#include "testutil.hpp"

using namespace causalkit;
using testutil::binary;

TEST_CASE("backdoor_predict refuses inadmissible adjustment sets") {
    const FunctionalModel f = gen_latency_model(LatencyParams{});
    const CausalModel m = induce_cgm(f);
    CHECK_THROWS_AS(backdoor_predict(m.dag(), &m, "S", "L", {}), PreconditionError);
    CHECK_THROWS_AS(backdoor_predict(m.dag(), &m, "H", "L", {"R"}), PreconditionError);
}

TEST_CASE("backdoor_predict on the exact model matches the interventional truth") {
    const FunctionalModel f = gen_latency_model(LatencyParams{});
    const CausalModel m = induce_cgm(f);
    const Table adjusted = backdoor_predict(m.dag(), &m, "S", "L", {"R"});
    for (std::size_t s = 0; s < 8; ++s) {
        const Table truth = interventional_query(m, {"L"}, {{"S", s}});
        for (std::size_t l = 0; l < 32; ++l) {
            CHECK(std::abs(adjusted.at(s, l) - truth.at_joint(l)) < 1e-9);
        }
    }
}

TEST_CASE("both admissible adjustment sets agree on the exact joint") {
    const FunctionalModel f = gen_latency_model(LatencyParams{});
    const CausalModel m = induce_cgm(f);
    const Table via_r = backdoor_predict(m.dag(), &m, "S", "L", {"R"});
    const Table via_h = backdoor_predict(m.dag(), &m, "S", "L", {"H"});
    for (std::size_t s = 0; s < 8; ++s) {
        for (std::size_t l = 0; l < 32; ++l) {
            CHECK(std::abs(via_r.at(s, l) - via_h.at(s, l)) < 1e-9);
        }
    }
}

TEST_CASE("unconfounded pair: adjusted and unadjusted estimates agree") {
    // X -> Y with no back-door path
    Xoshiro256StarStar rng(79);
    const Variable x = binary("X"), y = binary("Y");
    const CausalModel m({x, y}, Dag({"X", "Y"}, {{"X", "Y"}}),
                        {{"X", bernoulli_prior(x, 0.3)}, {"Y", testutil::random_cpt(rng, y, {x})}});
    const Table adjusted = backdoor_predict(m.dag(), &m, "X", "Y", {});
    const Table& mechanism = m.cpt("Y");
    for (std::size_t xs = 0; xs < 2; ++xs) {
        for (std::size_t ys = 0; ys < 2; ++ys) {
            CHECK(std::abs(adjusted.at(xs, ys) - mechanism.at(xs, ys)) < 1e-9);
        }
    }
}

TEST_CASE("integrate_sandbox completes a model from a proper experiment") {
    const FunctionalModel f = gen_latency_model(LatencyParams{});
    const CausalModel observed = induce_cgm(f);
    auto cpts = observed.cpts();
    cpts.erase("L");
    const CausalModel incomplete(observed.variables(), observed.dag(), std::move(cpts));
    CHECK_FALSE(incomplete.complete());

    const Dataset good = randomized_experiment(f.full_model(), {"R", "S"}, 50000, 15);
    const CausalModel completed = integrate_sandbox(incomplete, "L", good, 0.0);
    CHECK(completed.complete());
    CHECK(validate(completed).ok);

    // the completed model's p(l | do s) tracks the generator
    const Table pred = backdoor_predict(completed.dag(), &completed, "S", "L", {"R"});
    for (std::size_t s = 0; s < 8; s += 2) {
        const Table truth = interventional_query(observed, {"L"}, {{"S", s}});
        const Table got = Table::joint({completed.variable("L")},
                                       std::vector<double>(pred.row(s).begin(), pred.row(s).end()));
        CHECK(distribution_percentile(got, 99.0) == distribution_percentile(truth, 99.0));
    }

    // observational data is refused outright
    const Dataset obs = sample(f, 1000, 16);
    CHECK_THROWS_AS(integrate_sandbox(incomplete, "L", obs, 0.0), PreconditionError);
    // randomizing only one parent is refused too
    const Dataset partial = randomized_experiment(f.full_model(), {"R"}, 1000, 17);
    CHECK_THROWS_AS(integrate_sandbox(incomplete, "L", partial, 0.0), PreconditionError);
}

TEST_CASE("optimize_policy picks the state that reaches the goal") {
    // Y = X deterministically; utility rewards Y = 1
    const Variable x = binary("X"), y = binary("Y");
    const CausalModel m({x, y}, Dag({"X", "Y"}, {{"X", "Y"}}),
                        {{"X", bernoulli_prior(x, 0.5)},
                         {"Y", deterministic_cpt(y, {x}, [](std::span<const std::size_t> s) { return s[0]; })}});
    const Utility u{{"Y"}, {0.0, 1.0}};
    const auto [policy, value] = optimize_policy(m, "X", u);
    CHECK(value == doctest::Approx(1.0));
    CHECK(policy.table.at_joint(1) == doctest::Approx(1.0));

    // constant utility: the first policy in canonical order wins
    const Utility flat{{"Y"}, {0.5, 0.5}};
    const auto [first, flat_value] = optimize_policy(m, "X", flat);
    CHECK(flat_value == doctest::Approx(0.5));
    CHECK(first.table.at_joint(0) == doctest::Approx(1.0));  // state 0 everywhere
}

TEST_CASE("optimize_policy matches the exhaustive oracle on random models") {
    Xoshiro256StarStar rng(83);
    for (int it = 0; it < 30; ++it) {
        const CausalModel m = testutil::random_cgm(rng, 4, 2, 0.5);
        const auto& names = m.dag().nodes();
        const std::string x = names[testutil::pick(rng, names.size())];
        std::string target;
        do {
            target = names[testutil::pick(rng, names.size())];
        } while (target == x);
        Utility u{{target}, {}};
        for (std::size_t i = 0; i < m.variable(target).cardinality(); ++i) {
            u.values.push_back(rng.next_double());
        }
        const auto [policy, value] = optimize_policy(m, x, u);
        const auto [oracle_values, oracle_score] = testutil::policy_oracle(m, x, u);
        CHECK(value == doctest::Approx(oracle_score).epsilon(1e-9));
        for (std::size_t i = 0; i < oracle_values.size(); ++i) {
            CHECK(policy.table.values()[i] == doctest::Approx(oracle_values[i]).epsilon(1e-12));
        }
        // no enumerated policy strictly dominates the winner
        CHECK(expected_utility(m.with_cpt(x, policy.table), u) ==
              doctest::Approx(value).epsilon(1e-12));
    }
}

TEST_CASE("stochastic grid policies include the deterministic corners") {
    const Variable x = binary("X"), y = binary("Y");
    const CausalModel m({x, y}, Dag({"X", "Y"}, {{"X", "Y"}}),
                        {{"X", bernoulli_prior(x, 0.5)},
                         {"Y", Table({y}, {x}, {0.8, 0.2, 0.3, 0.7})}});
    const Utility u{{"Y"}, {0.0, 1.0}};
    const auto [det_policy, det_value] = optimize_policy(m, "X", u);
    const auto [grid_policy, grid_value] =
        optimize_policy(m, "X", u, {PolicySpace::Kind::stochastic_grid, 0.1});
    CHECK(grid_value == doctest::Approx(det_value).epsilon(1e-9));
    CHECK(testutil::max_abs_diff(grid_policy.table, det_policy.table) < 1e-12);
}

TEST_CASE("debug_query on the chain model") {
    const Variable W = binary("W"), X = binary("X"), Y = binary("Y"), U = binary("U_Y");
    std::map<std::string, Table> cpts;
    cpts.emplace("W", bernoulli_prior(W, 0.5));
    cpts.emplace("U_Y", bernoulli_prior(U, 0.1));
    cpts.emplace("X", deterministic_cpt(X, {W}, [](std::span<const std::size_t> s) { return s[0]; }));
    cpts.emplace("Y", deterministic_cpt(Y, {X, U}, [](std::span<const std::size_t> s) { return s[0] ^ s[1]; }));
    const FunctionalModel f(
        CausalModel({W, X, Y, U}, Dag({"W", "X", "Y", "U_Y"}, {{"W", "X"}, {"X", "Y"}, {"U_Y", "Y"}}),
                    std::move(cpts)),
        {"U_Y"});
    const CausalModel m = induce_cgm(f);

    DebugQuery q;
    q.x_var = "X";
    q.x_factual = 1;
    q.x_counterfactual = 0;
    q.y_var = "Y";
    q.y_factual = 1;
    q.y_target = 0;
    const DebugAnswer a = debug_query(m, q);
    CHECK(a.probability == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(std::abs(a.bound.bits - 0.46900) < 5e-6);
    CHECK_FALSE(a.low_confidence);

    // the bound is exactly core's conditional entropy H(E | W)
    CHECK(a.bound.bits ==
          doctest::Approx(conditional_entropy(joint(m), {"X", "Y"}, {"W"}).bits).epsilon(1e-15));

    // consistency: x' = x answers p(y' | x, y); for y' = y that is 1
    DebugQuery same;
    same.x_var = "X";
    same.x_factual = 1;
    same.x_counterfactual = 1;
    same.y_var = "Y";
    same.y_factual = 1;
    same.y_target = 0;
    const DebugAnswer b = debug_query(m, same);
    CHECK(b.probability == doctest::Approx(0.0).epsilon(1e-12));

    DebugQuery vacuous = same;
    vacuous.y_target = 1;
    CHECK_THROWS_AS(debug_query(m, vacuous), ValidationError);
}

TEST_CASE("debug_query against the generator's exact counterfactual") {
    // "would lower concurrent load have improved latency": the synthetic
    // generator exposes its functional model, so the exact answer is available
    const FunctionalModel f = gen_latency_model(LatencyParams{});
    const CausalModel m = induce_cgm(f);

    DebugQuery q;
    q.x_var = "S";
    q.x_factual = 6;
    q.x_counterfactual = 1;
    q.y_var = "L";
    q.y_factual = 20;  // the bin reached at (r=6, s=6) without a tail event
    q.y_target = 11;   // the bin (r=6, s=1) would have produced
    q.side_evidence = {{"R", 6}};

    const DebugAnswer approx = debug_query(m, q);
    CHECK(approx.probability > 0.0);
    CHECK(approx.low_confidence);  // H(E|W) is large here, so the flag fires

    CounterfactualQuery cq;
    cq.do_values = {{"S", 1}};
    cq.targets = {"L"};
    cq.evidence = {{"S", 6}, {"L", 20}, {"R", 6}};
    const Table exact = exact_counterfactual(f, cq);
    const Table approx_full = approx_counterfactual(m, cq);
    // abduction pins R = 6 and answers L = 11 with certainty; the root-node
    // approximation redraws R from p(r | h) and spreads out, but both agree
    // that the latency would have dropped below the factual bin
    CHECK(exact.at_joint(11) == doctest::Approx(1.0).epsilon(1e-9));
    double exact_below = 0.0, approx_below = 0.0;
    for (std::size_t l = 0; l < 20; ++l) {
        exact_below += exact.at_joint(l);
        approx_below += approx_full.at_joint(l);
    }
    CHECK(std::abs(exact_below - approx_below) < 0.05);
}

TEST_CASE("pick_shared_context") {
    StakeholderDisclosure alice{"alice", "X1", {{"weather", 0.3}, {"hour", 0.9}}, std::nullopt, false};
    StakeholderDisclosure bob{"bob", "X2", {{"weather", 0.9}, {"hour", 0.2}}, std::nullopt, false};
    StakeholderDisclosure carol{"carol", "X3", {{"weather", 0.5}, {"season", 0.1}}, std::nullopt, false};

    // hour minimizes the entropy sum over {weather, hour}; adding carol
    // shrinks the intersection to weather alone
    CHECK(pick_shared_context({alice, bob}) == "hour");
    CHECK(pick_shared_context({alice, bob, carol}) == "weather");

    // disjoint candidate sets cancel the procedure
    StakeholderDisclosure dora{"dora", "X4", {{"tide", 0.0}}, std::nullopt, false};
    CHECK(pick_shared_context({alice, dora}) == std::nullopt);

    // a single common candidate wins regardless of entropies
    StakeholderDisclosure eve{"eve", "X5", {{"hour", 99.0}}, std::nullopt, false};
    CHECK(pick_shared_context({alice, eve}) == "hour");

    CHECK_THROWS_AS(pick_shared_context({alice}), ValidationError);
}

TEST_CASE("pick_shared_context breaks ties lexicographically") {
    StakeholderDisclosure a{"a", "X1", {{"b_ctx", 0.5}, {"a_ctx", 0.5}}, std::nullopt, false};
    StakeholderDisclosure b{"b", "X2", {{"b_ctx", 0.5}, {"a_ctx", 0.5}}, std::nullopt, false};
    CHECK(pick_shared_context({a, b}) == "a_ctx");
}

TEST_CASE("pick_shared_context is a member of every candidate set and minimal") {
    Xoshiro256StarStar rng(89);
    const std::vector<std::string> pool{"c0", "c1", "c2", "c3", "c4"};
    for (int it = 0; it < 50; ++it) {
        std::vector<StakeholderDisclosure> ds;
        const std::size_t k = 2 + testutil::pick(rng, 3);
        for (std::size_t s = 0; s < k; ++s) {
            StakeholderDisclosure d;
            d.id = "s" + std::to_string(s);
            for (const auto& c : pool) {
                if (rng.next_double() < 0.6) d.candidate_entropy_bits[c] = rng.next_double() * 2.0;
            }
            if (d.candidate_entropy_bits.empty()) d.candidate_entropy_bits[pool[0]] = 1.0;
            ds.push_back(std::move(d));
        }
        const auto choice = pick_shared_context(ds);
        if (!choice) continue;
        double chosen_sum = 0.0;
        for (const auto& d : ds) {
            REQUIRE(d.candidate_entropy_bits.count(*choice) == 1);
            chosen_sum += d.candidate_entropy_bits.at(*choice);
        }
        for (const auto& c : pool) {
            double sum = 0.0;
            bool common = true;
            for (const auto& d : ds) {
                auto found = d.candidate_entropy_bits.find(c);
                if (found == d.candidate_entropy_bits.end()) {
                    common = false;
                    break;
                }
                sum += found->second;
            }
            if (common) CHECK(chosen_sum <= sum + 1e-12);
        }
    }
}

TEST_CASE("predict_outcome with identity policies reduces to transport") {
    const FunctionalModel auction = gen_auction_model(0.15);
    const TransportInputs t = auction_transport_inputs(auction);
    const Table j = joint(induce_cgm(auction));

    // identity policies: Y_k = X_k ("simply purchase their demand")
    const Variable y1 = binary("Y1"), y2 = binary("Y2");
    const Variable x1 = binary("X1"), x2 = binary("X2");
    const auto id = [](std::span<const std::size_t> s) { return s[0]; };
    std::vector<Policy> policies{{"Y1", deterministic_cpt(y1, {x1}, id)},
                                 {"Y2", deterministic_cpt(y2, {x2}, id)}};
    std::vector<StakeholderDisclosure> disclosures{
        {"alice", "X1", {}, conditional_from_joint(j, {"X1"}, {"C"}), false},
        {"bob", "X2", {}, conditional_from_joint(j, {"X2"}, {"C"}), false}};
    const Table mechanism = conditional_from_joint(j, {"Z"}, {"Y1", "Y2"});

    const OutcomePrediction pred =
        predict_outcome(mechanism, policies, disclosures, marginalize(j, {"C"}));
    const Table direct = approx_transport(t);
    // bit-for-bit agreement with the transport route
    CHECK(pred.distribution.values() == direct.values());
    CHECK(pred.bound.bits == transport_bound(t).bits);
}

TEST_CASE("predict_outcome with a degenerate context prior is a product of marginals") {
    const FunctionalModel auction = gen_auction_model(0.5);
    const Table j = joint(induce_cgm(auction));
    std::vector<StakeholderDisclosure> disclosures{
        {"alice", "X1", {}, conditional_from_joint(j, {"X1"}, {"C"}), false},
        {"bob", "X2", {}, conditional_from_joint(j, {"X2"}, {"C"}), false}};
    const Table mechanism = conditional_from_joint(j, {"Z"}, {"X1", "X2"});
    const OutcomePrediction pred =
        predict_outcome(mechanism, {}, disclosures, marginalize(j, {"C"}));
    const double p1 = marginalize(j, {"X1"}).at_joint(1) * marginalize(j, {"X2"}).at_joint(1);
    CHECK(pred.distribution.at_joint(1) == doctest::Approx(p1).epsilon(1e-9));
}

TEST_CASE("predict_outcome names the missing piece") {
    const FunctionalModel auction = gen_auction_model(0.1);
    const Table j = joint(induce_cgm(auction));
    std::vector<StakeholderDisclosure> disclosures{
        {"alice", "X1", {}, conditional_from_joint(j, {"X1"}, {"C"}), false},
        {"bob", "X2", {}, std::nullopt, false}};  // bob never consented
    const Table mechanism = conditional_from_joint(j, {"Z"}, {"X1", "X2"});
    CHECK_THROWS_WITH_AS(predict_outcome(mechanism, {}, disclosures, marginalize(j, {"C"})),
                         doctest::Contains("X2"), PreconditionError);
}
