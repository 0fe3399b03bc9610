#include "causalkit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "causalkit/rng.hpp"

namespace causalkit {

namespace {

Variable binary(const std::string& name) { return Variable{name, {"0", "1"}}; }

Variable leveled(const std::string& name, std::size_t levels) {
    Variable v{name, {}};
    v.states.reserve(levels);
    for (std::size_t i = 0; i < levels; ++i) v.states.push_back(std::to_string(i));
    return v;
}

std::size_t clamp_level(long long value, std::size_t levels) {
    if (value < 0) return 0;
    if (value >= static_cast<long long>(levels)) return levels - 1;
    return static_cast<std::size_t>(value);
}

}  // namespace

FunctionalModel gen_auction_model(double r) {
    if (!(r >= 0.0) || !(r <= 0.5)) {
        throw ValidationError("auction parameter r must lie in [0, 0.5]");
    }
    const Variable C = binary("C"), D = binary("D");
    const Variable N1 = binary("N1"), N2 = binary("N2");
    const Variable X1 = binary("X1"), X2 = binary("X2");
    const Variable Y1 = binary("Y1"), Y2 = binary("Y2");
    const Variable Z = binary("Z");

    const auto xor3 = [](std::span<const std::size_t> s) { return s[0] ^ s[1] ^ s[2]; };
    const auto identity = [](std::span<const std::size_t> s) { return s[0]; };
    const auto both = [](std::span<const std::size_t> s) { return s[0] & s[1]; };

    std::map<std::string, Table> cpts;
    cpts.emplace("C", bernoulli_prior(C, 0.5 - r));
    cpts.emplace("D", bernoulli_prior(D, r));
    cpts.emplace("N1", bernoulli_prior(N1, 0.2 - 0.2 * r));
    cpts.emplace("N2", bernoulli_prior(N2, 0.2 - 0.2 * r));
    cpts.emplace("X1", deterministic_cpt(X1, {C, D, N1}, xor3));
    cpts.emplace("X2", deterministic_cpt(X2, {C, D, N2}, xor3));
    cpts.emplace("Y1", deterministic_cpt(Y1, {X1}, identity));
    cpts.emplace("Y2", deterministic_cpt(Y2, {X2}, identity));
    cpts.emplace("Z", deterministic_cpt(Z, {Y1, Y2}, both));

    Dag dag({"C", "D", "N1", "N2", "X1", "X2", "Y1", "Y2", "Z"},
            {{"C", "X1"},
             {"C", "X2"},
             {"D", "X1"},
             {"D", "X2"},
             {"N1", "X1"},
             {"N2", "X2"},
             {"X1", "Y1"},
             {"X2", "Y2"},
             {"Y1", "Z"},
             {"Y2", "Z"}});
    CausalModel full({C, D, N1, N2, X1, X2, Y1, Y2, Z}, std::move(dag), std::move(cpts));
    return FunctionalModel(std::move(full), {"N1", "N2"});
}

TransportInputs auction_transport_inputs(const FunctionalModel& auction) {
    const Table j = joint(induce_cgm(auction));
    TransportInputs t{conditional_from_joint(j, {"Z"}, {"X1", "X2"}),
                      {conditional_from_joint(j, {"X1"}, {"C"}),
                       conditional_from_joint(j, {"X2"}, {"C"})},
                      marginalize(j, {"C"}),
                      std::nullopt};
    return t;
}

FunctionalModel gen_latency_model(const LatencyParams& p) {
    if (p.h_levels < 1 || p.r_levels < 1 || p.s_levels < 1 || p.latency_bins < 1) {
        throw ValidationError("latency model cardinalities must be positive");
    }
    if (!std::isfinite(p.base) || !std::isfinite(p.per_r) || !std::isfinite(p.per_s)) {
        throw ValidationError("latency mechanism coefficients must be finite");
    }
    if (!(p.tail_weight >= 0.0) || !(p.tail_weight <= 1.0)) {
        throw ValidationError("tail weight must lie in [0, 1]");
    }

    // request noise: a local +-1 kernel around the load level mixed with a
    // uniform component, so every (r, s) cell stays observable
    constexpr double kUniformMix = 0.2;
    constexpr double kKernel[3] = {0.25, 0.5, 0.25};

    const Variable H = leveled("H", p.h_levels);
    const Variable R = leveled("R", p.r_levels);
    const Variable S = leveled("S", p.s_levels);
    const Variable L = leveled("L", p.latency_bins);

    auto request_noise = [&](const std::string& name, std::size_t levels) {
        Variable u = leveled(name, 3 + levels);
        std::vector<double> probs(3 + levels);
        for (std::size_t i = 0; i < 3; ++i) probs[i] = (1.0 - kUniformMix) * kKernel[i];
        for (std::size_t i = 0; i < levels; ++i) probs[3 + i] = kUniformMix / static_cast<double>(levels);
        return std::pair<Variable, Table>{u, Table::joint({u}, std::move(probs))};
    };
    auto [UR, ur_prior] = request_noise("U_R", p.r_levels);
    auto [US, us_prior] = request_noise("U_S", p.s_levels);
    const Variable UL{"U_L", {"main", "tail"}};

    auto request_mech = [&](std::size_t levels) {
        // parents (H, U_noise): local states shift the load level, the rest
        // land uniformly
        return [levels](std::span<const std::size_t> s) {
            const std::size_t h = s[0], u = s[1];
            if (u < 3) return clamp_level(static_cast<long long>(h) + static_cast<long long>(u) - 1, levels);
            return u - 3;
        };
    };
    auto latency_mech = [&](std::span<const std::size_t> s) {
        if (s[2] == 1) return p.latency_bins - 1;  // tail event
        const double v = p.base + p.per_r * static_cast<double>(s[0]) +
                         p.per_s * static_cast<double>(s[1]);
        return clamp_level(std::llround(v), p.latency_bins);
    };

    std::map<std::string, Table> cpts;
    cpts.emplace("H", uniform_prior(H));
    cpts.emplace("U_R", std::move(ur_prior));
    cpts.emplace("U_S", std::move(us_prior));
    cpts.emplace("U_L", Table::joint({UL}, {1.0 - p.tail_weight, p.tail_weight}));
    cpts.emplace("R", deterministic_cpt(R, {H, UR}, request_mech(p.r_levels)));
    cpts.emplace("S", deterministic_cpt(S, {H, US}, request_mech(p.s_levels)));
    cpts.emplace("L", deterministic_cpt(L, {R, S, UL}, latency_mech));

    Dag dag({"H", "U_R", "U_S", "U_L", "R", "S", "L"},
            {{"H", "R"}, {"H", "S"}, {"U_R", "R"}, {"U_S", "S"}, {"R", "L"}, {"S", "L"}, {"U_L", "L"}});
    CausalModel full({H, UR, US, UL, R, S, L}, std::move(dag), std::move(cpts));
    return FunctionalModel(std::move(full), {"U_R", "U_S", "U_L"});
}

std::vector<double> default_privacy_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 50; ++i) grid.push_back(static_cast<double>(i) / 100.0);
    return grid;
}

namespace {

SweepRow sweep_point(const AuctionParams& point) {
    SweepRow row;
    row.r = point.r;
    const FunctionalModel auction = gen_auction_model(point.r);

    const TransportInputs exact = auction_transport_inputs(auction);
    const Table j = joint(induce_cgm(auction));
    const Table p_z = marginalize(j, {"Z"});
    const Table p_bar = approx_transport(exact);
    row.p_true = p_z.at_joint(1);
    row.p_bar = p_bar.at_joint(1);
    row.kl_bits = kl_divergence(p_z, p_bar).bits;
    row.bound_bits = transport_bound(exact).bits;

    const Dataset d = sample(auction, point.n, point.seed);
    // demand conditionals and the context prior are add-one smoothed so the
    // reconstruction stays strictly positive; the measured p(Z) is raw
    const Table p_z_emp = empirical_joint(d, {"Z"}, 0.0);
    TransportInputs emp{exact.mechanism,
                        {fit_cpt(d, "X1", {"C"}, 1.0), fit_cpt(d, "X2", {"C"}, 1.0)},
                        fit_cpt(d, "C", {}, 1.0),
                        std::nullopt};
    const Table p_bar_emp = approx_transport(emp);
    row.p_true_emp = p_z_emp.at_joint(1);
    row.p_bar_emp = p_bar_emp.at_joint(1);
    row.kl_bits_emp = kl_divergence(p_z_emp, p_bar_emp).bits;
    row.bound_bits_emp = transport_bound(emp).bits;
    return row;
}

}  // namespace

SweepResult run_privacy_sweep(const std::vector<double>& r_grid, std::size_t n, std::uint64_t seed) {
    for (double r : r_grid) {
        if (!(r >= 0.0) || !(r <= 0.5)) {
            throw ValidationError("privacy sweep grid must lie within [0, 0.5]");
        }
    }
    SweepResult result;
    result.seed = seed;
    result.n = n;
    result.rows.resize(r_grid.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long i = 0; i < static_cast<long long>(r_grid.size()); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        result.rows[idx] =
            sweep_point(AuctionParams{r_grid[idx], n, seed ^ static_cast<std::uint64_t>(idx)});
    }
    return result;
}

void write_sweep_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << "r,p_true,p_bar,kl_bits,bound_bits,p_true_emp,p_bar_emp,kl_bits_emp,bound_bits_emp\n";
    char buf[512];
    for (const auto& row : result.rows) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                      row.r, row.p_true, row.p_bar, row.kl_bits, row.bound_bits, row.p_true_emp,
                      row.p_bar_emp, row.kl_bits_emp, row.bound_bits_emp);
        out << buf;
    }
    std::ofstream meta(path + ".meta.json", std::ios::binary);
    if (!meta) throw ValidationError("cannot open '" + path + ".meta.json' for writing");
    meta << "{\"seed\": " << result.seed << ", \"n\": " << result.n << "}\n";
}

namespace {

std::size_t row_percentile(std::span<const double> probs, const Variable& var, double q) {
    return distribution_percentile(Table::joint({var}, std::vector<double>(probs.begin(), probs.end())), q);
}

}  // namespace

DebugExperimentResult run_debug_experiment(const LatencyParams& p, std::size_t n_obs,
                                           std::size_t n_int, std::uint64_t seed) {
    const FunctionalModel system = gen_latency_model(p);
    const CausalModel observed = induce_cgm(system);
    const Variable& lvar = observed.variable("L");

    SplitMix64 seeder(seed);
    const std::uint64_t obs_seed = seeder.next();
    const std::uint64_t int_seed = seeder.next();

    DebugExperimentResult result;
    const Dataset d_obs = sample(system, n_obs, obs_seed);

    // experiment 1: back-door adjustment over R from observational samples
    const Table adjusted = backdoor_predict(observed.dag(), &d_obs, "S", "L", {"R"},
                                            /*smoothing=*/0.0);
    for (std::size_t s = 0; s < observed.variable("S").cardinality(); ++s) {
        LatencyRow row;
        row.s = s;
        row.p99_pred = row_percentile(adjusted.row(s), lvar, 99.0);
        const Table truth = interventional_query(observed, {"L"}, {{"S", s}});
        row.p99_true = distribution_percentile(truth, 99.0);
        result.backdoor.push_back(row);
    }

    // experiment 2: sandbox-completed model plus observational p(r, s)
    const Dataset d_int = randomized_experiment(system.full_model(), {"R", "S"}, n_int, int_seed);
    auto cpts = observed.cpts();
    cpts.erase("L");
    const CausalModel incomplete(observed.variables(), observed.dag(), std::move(cpts));
    const CausalModel completed = integrate_sandbox(incomplete, "L", d_int, /*smoothing=*/0.0);

    const Table rs = empirical_joint(d_obs, {"R", "S"}, 0.0);
    const Table& l_cpt = completed.cpt("L");  // given order (R, S), S fastest
    std::vector<double> predicted(lvar.cardinality(), 0.0);
    for (std::size_t g = 0; g < rs.scope_cells(); ++g) {
        const double w = rs.at_joint(g);
        if (w <= 0.0) continue;
        for (std::size_t l = 0; l < lvar.cardinality(); ++l) predicted[l] += w * l_cpt.at(g, l);
    }
    long double total = 0.0L;
    for (double v : predicted) total += v;
    for (double& v : predicted) v /= static_cast<double>(total);

    result.sandbox_p99_pred = distribution_percentile(Table::joint({lvar}, predicted), 99.0);
    result.sandbox_p99_true = distribution_percentile(marginalize(joint(observed), {"L"}), 99.0);
    result.sandbox_ratio = static_cast<double>(result.sandbox_p99_pred) /
                           static_cast<double>(std::max<std::size_t>(result.sandbox_p99_true, 1));
    if (result.sandbox_p99_pred > result.sandbox_p99_true) {
        result.sandbox_sign = "overestimate";
    } else if (result.sandbox_p99_pred < result.sandbox_p99_true) {
        result.sandbox_sign = "underestimate";
    } else {
        result.sandbox_sign = "exact";
    }
    return result;
}

void write_latency_csv(const DebugExperimentResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << "kind,s,p99_pred,p99_true\n";
    for (const auto& row : result.backdoor) {
        out << "backdoor," << row.s << "," << row.p99_pred << "," << row.p99_true << "\n";
    }
    out << "sandbox,-1," << result.sandbox_p99_pred << "," << result.sandbox_p99_true << "\n";
}

}  // namespace causalkit
