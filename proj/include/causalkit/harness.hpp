#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "causalkit/pipelines.hpp"

namespace causalkit {

// --- toy spot-market auction ----------------------------------------------

// Two clients whose demands share a public context C and a private confounder
// D: X_k = C xor D xor N_k, identity purchasing policies Y_k = X_k, and the
// price outcome Z = Y_1 and Y_2. r in [0, 0.5] shifts weight from C to D:
// C ~ Bernoulli(0.5 - r), D ~ Bernoulli(r), N_k ~ Bernoulli(0.2 - 0.2 r).
struct AuctionParams {
    double r = 0.0;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
};

FunctionalModel gen_auction_model(double r);

// Exact transport pieces of the auction: mechanism p(z | x1, x2), the
// context-conditionals p(x_k | c) and the prior p(c), all from enumeration.
TransportInputs auction_transport_inputs(const FunctionalModel& auction);

// --- synthetic latency system ----------------------------------------------

// Surrogate for a web server with concurrent workload: a load source H drives
// request counts R and S, and the latency bin L follows a linear ramp in
// (R, S) plus a low-probability heavy tail in the top bin. All numeric
// defaults are artifact-chosen.
struct LatencyParams {
    std::size_t h_levels = 8;
    std::size_t r_levels = 8;
    std::size_t s_levels = 8;
    std::size_t latency_bins = 32;
    double base = 2.0;
    double per_r = 1.2;
    double per_s = 1.8;
    double tail_weight = 0.005;
    std::uint64_t seed = 1;
};

FunctionalModel gen_latency_model(const LatencyParams& p);

// --- experiments --------------------------------------------------------

struct SweepRow {
    double r = 0.0;
    double p_true = 0.0;       // exact p(Z=1)
    double p_bar = 0.0;        // exact reconstruction pbar(Z=1)
    double kl_bits = 0.0;
    double bound_bits = 0.0;
    double p_true_emp = 0.0;   // same columns from n sampled rows
    double p_bar_emp = 0.0;
    double kl_bits_emp = 0.0;
    double bound_bits_emp = 0.0;
};

struct SweepResult {
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::vector<SweepRow> rows;
};

std::vector<double> default_privacy_grid();  // r = 0.00, 0.01, ..., 0.50

// Per grid point: exact columns by enumeration, empirical columns from n
// observational samples with the point seed `seed xor index`. Points are
// independent and may run in parallel; rows come back in grid order.
SweepResult run_privacy_sweep(const std::vector<double>& r_grid, std::size_t n, std::uint64_t seed);

void write_sweep_csv(const SweepResult& result, const std::string& path);

struct LatencyRow {
    std::size_t s = 0;
    std::size_t p99_pred = 0;
    std::size_t p99_true = 0;
};

struct DebugExperimentResult {
    std::vector<LatencyRow> backdoor;   // adjusted p(l | do s) vs ground truth, per s
    std::size_t sandbox_p99_pred = 0;   // completed model + observational p(r, s)
    std::size_t sandbox_p99_true = 0;
    double sandbox_ratio = 0.0;         // pred / true
    std::string sandbox_sign;           // "overestimate" | "underestimate" | "exact"
};

// Experiment 1: fit p(r, s, l) observationally, adjust over R, compare the
// 99th percentile of p(l | do s) against the generator's exact value.
// Experiment 2: fit p(l | do(r, s)) from a randomized experiment, combine
// with observational p(r, s), compare the predicted P99 of p(l) to the truth.
DebugExperimentResult run_debug_experiment(const LatencyParams& p, std::size_t n_obs,
                                           std::size_t n_int, std::uint64_t seed);

void write_latency_csv(const DebugExperimentResult& result, const std::string& path);

}  // namespace causalkit
