#include <doctest.h>

#include <cmath>

#include "causalkit/harness.hpp"
#include "causalkit/models.hpp"
#include "testutil.hpp"

using namespace causalkit;
using testutil::binary;
using testutil::leveled;

namespace {

// W -> X -> Y with X = W and Y = X xor U_Y, U_Y ~ Bernoulli(0.1)
FunctionalModel chain_fcm(double w1 = 0.5, double flip = 0.1) {
    const Variable W = binary("W"), X = binary("X"), Y = binary("Y"), U = binary("U_Y");
    std::map<std::string, Table> cpts;
    cpts.emplace("W", bernoulli_prior(W, w1));
    cpts.emplace("U_Y", bernoulli_prior(U, flip));
    cpts.emplace("X", deterministic_cpt(X, {W}, [](std::span<const std::size_t> s) { return s[0]; }));
    cpts.emplace("Y", deterministic_cpt(Y, {X, U}, [](std::span<const std::size_t> s) { return s[0] ^ s[1]; }));
    Dag dag({"W", "X", "Y", "U_Y"}, {{"W", "X"}, {"X", "Y"}, {"U_Y", "Y"}});
    return FunctionalModel(CausalModel({W, X, Y, U}, std::move(dag), std::move(cpts)), {"U_Y"});
}

}  // namespace

TEST_CASE("model construction and validation") {
    const Variable A = binary("A"), B = binary("B");
    Dag dag({"A", "B"}, {{"A", "B"}});

    // CPT conditioning on a non-parent is a consistency error
    CHECK_THROWS_AS(CausalModel({A, B}, dag,
                                {{"A", Table({A}, {B}, {0.5, 0.5, 0.5, 0.5})},
                                 {"B", bernoulli_prior(B, 0.5)}}),
                    ValidationError);

    // missing CPT: constructible but incomplete
    const CausalModel partial({A, B}, dag, {{"A", bernoulli_prior(A, 0.3)}});
    CHECK_FALSE(partial.complete());
    const auto report = validate(partial);
    CHECK_FALSE(report.ok);
    CHECK(report.issue == ValidationIssue::missing_cpt);
    CHECK_THROWS_AS(joint(partial), ValidationError);

    const CausalModel ok = partial.with_cpt(
        "B", Table({B}, {A}, {0.9, 0.1, 0.2, 0.8}));
    CHECK(validate(ok).ok);
    CHECK(validate(ok).max_row_residual <= 1e-9);

    // well-formed toy auction model validates
    CHECK(validate(gen_auction_model(0.3).full_model()).ok);
}

TEST_CASE("joint enumeration") {
    const Variable A = binary("A");
    const CausalModel single({A}, Dag({"A"}, {}), {{"A", bernoulli_prior(A, 0.3)}});
    const Table j = joint(single);
    CHECK(j.at_joint(0) == doctest::Approx(0.7));
    CHECK(j.at_joint(1) == doctest::Approx(0.3));

    const Variable B = binary("B");
    const CausalModel coins({A, B}, Dag({"A", "B"}, {}),
                            {{"A", bernoulli_prior(A, 0.5)}, {"B", bernoulli_prior(B, 0.5)}});
    for (std::size_t i = 0; i < 4; ++i) CHECK(joint(coins).at_joint(i) == doctest::Approx(0.25));

    // toy auction at r = 0: p(Z=1) = 0.34 by enumeration
    const Table auction = joint(gen_auction_model(0.0).full_model());
    CHECK(marginalize(auction, {"Z"}).at_joint(1) == doctest::Approx(0.34).epsilon(1e-12));

    // state-space cap
    CHECK_THROWS_AS(joint(gen_auction_model(0.0).full_model(), 16), ValidationError);
}

TEST_CASE("joint matches a naive per-cell oracle on random models") {
    Xoshiro256StarStar rng(17);
    for (int it = 0; it < 20; ++it) {
        const CausalModel m = testutil::random_cgm(rng, 4 + testutil::pick(rng, 2), 3);
        const Table j = joint(m);
        std::size_t cell = 0;
        bool all_match = true;
        testutil::for_each_assignment(m.variables(), [&](const Assignment& full) {
            const double expect = testutil::oracle_cell_probability(m, full);
            if (std::abs(expect - j.at_joint(cell)) > 1e-12) all_match = false;
            ++cell;
        });
        CHECK(all_match);
        CHECK(cell == j.scope_cells());
    }
}

TEST_CASE("query") {
    const FunctionalModel f = chain_fcm();
    const CausalModel m = induce_cgm(f);

    // empty evidence: marginal
    CHECK(query(m, {"Y"}, {}).at_joint(1) == doctest::Approx(0.5));
    // targets equal to evidence variables: point mass
    const Table pm = query(m, {"X"}, {{"X", 1}});
    CHECK(pm.at_joint(1) == doctest::Approx(1.0));
    // zero-probability evidence refused
    const Variable A = binary("A");
    const CausalModel point({A}, Dag({"A"}, {}), {{"A", bernoulli_prior(A, 0.0)}});
    CHECK_THROWS_AS(query(point, {"A"}, {{"A", 1}}), PreconditionError);
}

TEST_CASE("confounding makes conditioning differ from intervening") {
    const FunctionalModel f = gen_latency_model(LatencyParams{});
    const CausalModel m = induce_cgm(f);
    bool differs = false;
    for (std::size_t s = 0; s < 8 && !differs; ++s) {
        const Table by_obs = query(m, {"L"}, {{"S", s}});
        const Table by_do = interventional_query(m, {"L"}, {{"S", s}});
        if (testutil::max_abs_diff(by_obs, by_do) > 1e-6) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("intervene") {
    const FunctionalModel f = chain_fcm();
    const CausalModel m = induce_cgm(f);

    // intervening on a root at any supported value preserves descendants'
    // conditionals
    const CausalModel forced = intervene(m, {{"W", 0}});
    CHECK(testutil::max_abs_diff(query(forced, {"Y"}, {{"W", 0}}), query(m, {"Y"}, {{"W", 0}})) < 1e-12);

    // idempotence and commutation
    const CausalModel once = intervene(m, {{"X", 1}});
    const CausalModel twice = intervene(once, {{"X", 1}});
    CHECK(testutil::max_abs_diff(joint(once), joint(twice)) < 1e-15);
    const CausalModel ab = intervene(intervene(m, {{"X", 1}}), {{"W", 0}});
    const CausalModel ba = intervene(intervene(m, {{"W", 0}}), {{"X", 1}});
    CHECK(testutil::max_abs_diff(joint(ab), joint(ba)) < 1e-15);

    // intervening on everything gives a point mass
    const Table all = joint(intervene(m, {{"W", 1}, {"X", 0}, {"Y", 1}}));
    CHECK(all.probability({{"W", 1}, {"X", 0}, {"Y", 1}}) == doctest::Approx(1.0));

    CHECK_THROWS_AS(intervene(m, {{"Q", 0}}), ValidationError);
    CHECK_THROWS_AS(interventional_query(m, {"Y"}, {{"X", 1}}, {{"X", 0}}), ValidationError);

    // an empty do-set reduces to the plain query
    CHECK(testutil::max_abs_diff(interventional_query(m, {"Y"}, {}, {{"W", 1}}),
                                 query(m, {"Y"}, {{"W", 1}})) < 1e-15);
}

TEST_CASE("market toy: intervening on one demand halves the price event") {
    // do(X1 = 1) makes Z = X2, whose marginal is a fair coin at r = 0
    const CausalModel m = induce_cgm(gen_auction_model(0.0));
    const Table t = interventional_query(m, {"Z"}, {{"X1", 1}});
    CHECK(t.at_joint(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("interventional query screens off via the mechanism row") {
    // do on Y's parents: p(y | do pa) equals the CPT row
    Xoshiro256StarStar rng(23);
    const CausalModel m = testutil::random_cgm(rng, 4, 3);
    const auto order = m.dag().topological_order();
    const std::string& y = order.back();
    const Table& cpt = m.cpt(y);
    Assignment do_values;
    for (const auto& g : cpt.given()) do_values[g.name] = 1 % g.cardinality();
    const Table screened = interventional_query(m, {y}, do_values);
    for (std::size_t s = 0; s < cpt.scope()[0].cardinality(); ++s) {
        CHECK(screened.at_joint(s) ==
              doctest::Approx(cpt.at(cpt.given_index(do_values), s)).epsilon(1e-12));
    }
}

TEST_CASE("back-door adjustment identity holds on random models") {
    Xoshiro256StarStar rng(29);
    int tested = 0;
    for (int it = 0; it < 60 && tested < 20; ++it) {
        const CausalModel m = testutil::random_cgm(rng, 5, 2, 0.45);
        const auto& names = m.dag().nodes();
        const std::string x = names[testutil::pick(rng, names.size())];
        const std::string y = names[testutil::pick(rng, names.size())];
        if (x == y) continue;
        std::set<std::string> observable(names.begin(), names.end());
        observable.erase(x);
        observable.erase(y);
        const auto zset = find_backdoor_set(m.dag(), x, y, observable);
        if (!zset) continue;
        ++tested;

        const Variable& xv = m.variable(x);
        const Variable& yv = m.variable(y);
        for (std::size_t xs = 0; xs < xv.cardinality(); ++xs) {
            const Table lhs = interventional_query(m, {y}, {{x, xs}});
            // sum_z p(y | x, z) p(z)
            std::vector<double> rhs(yv.cardinality(), 0.0);
            if (zset->empty()) {
                const Table cond = query(m, {y}, {{x, xs}});
                for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = cond.at_joint(i);
            } else {
                const std::vector<std::string> zvars(zset->begin(), zset->end());
                const Table pz = marginalize(joint(m), zvars);
                const auto zvv = m.variables_for(zvars);
                std::vector<std::size_t> zstate(zvars.size(), 0);
                for (std::size_t zi = 0; zi < pz.scope_cells(); ++zi) {
                    decode_index(zvv, zi, zstate);
                    if (pz.at_joint(zi) <= 0.0) continue;
                    Assignment ev{{x, xs}};
                    for (std::size_t k = 0; k < zvars.size(); ++k) ev[zvars[k]] = zstate[k];
                    try {
                        const Table cond = query(m, {y}, ev);
                        for (std::size_t i = 0; i < rhs.size(); ++i) {
                            rhs[i] += pz.at_joint(zi) * cond.at_joint(i);
                        }
                    } catch (const PreconditionError&) {
                        // zero-probability (x, z) cell: no contribution
                    }
                }
                double total = 0.0;
                for (double v : rhs) total += v;
                for (double& v : rhs) v /= total;
            }
            for (std::size_t i = 0; i < rhs.size(); ++i) {
                CHECK(std::abs(lhs.at_joint(i) - rhs[i]) < 1e-9);
            }
        }
    }
    CHECK(tested >= 10);
}

TEST_CASE("functional model validation") {
    CHECK(validate(chain_fcm()).ok);

    // stochastic mechanism on a non-root observed variable is rejected
    const Variable A = binary("A"), B = binary("B");
    CHECK_THROWS_AS(FunctionalModel(CausalModel({A, B}, Dag({"A", "B"}, {{"A", "B"}}),
                                                {{"A", bernoulli_prior(A, 0.5)},
                                                 {"B", Table({B}, {A}, {0.9, 0.1, 0.2, 0.8})}}),
                                    {}),
                    ValidationError);

    // background with two children is rejected
    const Variable U = binary("U");
    CHECK_THROWS_AS(
        FunctionalModel(
            CausalModel({U, A, B}, Dag({"U", "A", "B"}, {{"U", "A"}, {"U", "B"}}),
                        {{"U", bernoulli_prior(U, 0.5)},
                         {"A", deterministic_cpt(A, {U}, [](std::span<const std::size_t> s) { return s[0]; })},
                         {"B", deterministic_cpt(B, {U}, [](std::span<const std::size_t> s) { return s[0]; })}}),
            {"U"}),
        ValidationError);
}

TEST_CASE("induce_cgm") {
    const FunctionalModel f = chain_fcm();
    const CausalModel m = induce_cgm(f);
    CHECK(m.variables().size() == 3);
    const Table& y_cpt = m.cpt("Y");
    CHECK(y_cpt.at(0, 0) == doctest::Approx(0.9));
    CHECK(y_cpt.at(0, 1) == doctest::Approx(0.1));
    CHECK(y_cpt.at(1, 0) == doctest::Approx(0.1));
    CHECK(y_cpt.at(1, 1) == doctest::Approx(0.9));

    // pure-noise root: X = U_X means the induced CPT equals the prior
    const Variable X = binary("X"), U = leveled("U_X", 2);
    const FunctionalModel noise(
        CausalModel({X, U}, Dag({"X", "U_X"}, {{"U_X", "X"}}),
                    {{"U_X", Table::joint({U}, {0.25, 0.75})},
                     {"X", deterministic_cpt(X, {U}, [](std::span<const std::size_t> s) { return s[0]; })}}),
        {"U_X"});
    const CausalModel induced = induce_cgm(noise);
    const Table& x_cpt = induced.cpt("X");
    CHECK(x_cpt.at_joint(0) == doctest::Approx(0.25));
    CHECK(x_cpt.at_joint(1) == doctest::Approx(0.75));
}

TEST_CASE("induced joint equals the observed marginal of the full joint") {
    Xoshiro256StarStar rng(31);
    for (int it = 0; it < 25; ++it) {
        const FunctionalModel f = testutil::random_fcm(rng, 3 + testutil::pick(rng, 3));
        const Table full = joint(f.full_model());
        const Table induced = joint(induce_cgm(f));
        std::vector<std::string> observed = f.observed();
        const Table observed_marginal = marginalize(full, observed);
        CHECK(testutil::max_abs_diff(induced, observed_marginal) < 1e-9);
    }
}

TEST_CASE("sampling is seed-deterministic") {
    const FunctionalModel f = gen_auction_model(0.25);
    const Dataset a = sample(f, 500, 99);
    const Dataset b = sample(f, 500, 99);
    CHECK(a.values == b.values);
    const Dataset c = sample(f, 500, 100);
    CHECK(a.values != c.values);
    CHECK(a.provenance.kind == Provenance::Kind::observational);

    // point-mass model: all rows identical
    const Variable A = binary("A");
    const CausalModel point({A}, Dag({"A"}, {}), {{"A", bernoulli_prior(A, 1.0)}});
    const Dataset d = sample(point, 50, 7);
    for (std::size_t r = 0; r < d.rows; ++r) CHECK(d.at(r, 0) == 1);
}

TEST_CASE("sampled frequencies approach the exact joint") {
    const FunctionalModel f = gen_auction_model(0.0);
    const Dataset d = sample(f, 100000, 4242);
    const Table emp = empirical_joint(d, {"Z"}, 0.0);
    CHECK(std::abs(emp.at_joint(1) - 0.34) < 0.01);
}

TEST_CASE("fit_cpt") {
    const FunctionalModel f = chain_fcm();
    const Dataset d = sample(f, 20000, 5);

    // deterministic data: x = w exactly at zero smoothing
    const Table fitted = fit_cpt(d, "X", {"W"}, 0.0);
    CHECK(fitted.at(0, 0) == doctest::Approx(1.0));
    CHECK(fitted.at(1, 1) == doctest::Approx(1.0));

    // large smoothing pulls rows toward uniform
    const Table smoothed = fit_cpt(d, "X", {"W"}, 1e9);
    CHECK(smoothed.at(0, 0) == doctest::Approx(0.5).epsilon(1e-3));

    // provenance guard: interventional data must randomize the parents
    const Dataset bad = randomized_experiment(f.full_model(), {"X"}, 100, 8);
    CHECK_THROWS_AS(fit_cpt(bad, "Y", {"X", "W"}, 1.0), PreconditionError);
    CHECK_THROWS_AS(fit_cpt(bad, "X", {"W"}, 1.0), PreconditionError);
    const Table fine = fit_cpt(bad, "Y", {"X"}, 1.0);  // intervened set covers {X}
    CHECK(fine.given()[0].name == "X");

    // unseen parent configurations fall back to uniform rows
    Dataset tiny;
    tiny.columns = {binary("P"), binary("X")};
    tiny.values = {0, 1, 0, 0};  // parent state 1 never occurs
    tiny.rows = 2;
    const Table sparse = fit_cpt(tiny, "X", {"P"}, 0.0);
    CHECK(sparse.at(1, 0) == doctest::Approx(0.5));
    CHECK(sparse.at(1, 1) == doctest::Approx(0.5));
    CHECK(sparse.at(0, 1) == doctest::Approx(0.5));  // one of two rows observed
}

TEST_CASE("randomized experiment recovers the latency mechanism") {
    const FunctionalModel f = gen_latency_model(LatencyParams{});
    const Dataset d = randomized_experiment(f.full_model(), {"R", "S"}, 60000, 12);
    CHECK(d.provenance.kind == Provenance::Kind::interventional);
    const Table fitted = fit_cpt(d, "L", {"R", "S"}, 0.0);
    const CausalModel m = induce_cgm(f);
    // compare against the generator's interventional truth on a few cells
    for (std::size_t r = 0; r < 8; r += 3) {
        for (std::size_t s = 0; s < 8; s += 3) {
            const Table truth = interventional_query(m, {"L"}, {{"R", r}, {"S", s}});
            const std::size_t g = fitted.given_index({{"R", r}, {"S", s}});
            double tv = 0.0;
            for (std::size_t l = 0; l < 32; ++l) {
                tv += 0.5 * std::abs(truth.at_joint(l) - fitted.at(g, l));
            }
            CHECK(tv < 0.05);
        }
    }
}

TEST_CASE("sample then fit converges to the generating joint") {
    const FunctionalModel f = gen_auction_model(0.2);
    const Table truth = joint(induce_cgm(f));
    const std::vector<std::string> observed = f.observed();

    auto tv_at = [&](std::size_t n, std::uint64_t seed) {
        const Dataset d = sample(f, n, seed);
        const Table emp = empirical_joint(d, observed, 0.0);
        double tv = 0.0;
        for (std::size_t i = 0; i < truth.scope_cells(); ++i) {
            tv += 0.5 * std::abs(truth.at_joint(i) - emp.at_joint(i));
        }
        return tv;
    };
    double tv100 = 0.0, tv1000 = 0.0, tv10000 = 0.0;
    for (std::uint64_t seed = 60; seed < 65; ++seed) {
        tv100 += tv_at(100, seed);
        tv1000 += tv_at(1000, seed);
        tv10000 += tv_at(10000, seed);
    }
    CHECK(tv100 > tv1000);
    CHECK(tv1000 > tv10000);
}
