// Compares the OpenMP kernels against their serial references on synthetic
// workloads. The two paths accumulate into ordered partials, so besides the
// timing the outputs must agree bit for bit; that is asserted here too.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "causalkit/counterfactuals.hpp"
#include "causalkit/harness.hpp"
#include "causalkit/rng.hpp"
#include "causalkit/transport.hpp"

using namespace causalkit;
using Clock = std::chrono::steady_clock;

namespace {

Variable leveled(const std::string& name, std::size_t card) {
    Variable v{name, {}};
    for (std::size_t i = 0; i < card; ++i) v.states.push_back(std::to_string(i));
    return v;
}

std::vector<double> random_row(Xoshiro256StarStar& rng, std::size_t card) {
    std::vector<double> row(card);
    double sum = 0.0;
    for (auto& v : row) {
        v = 0.05 + rng.next_double();
        sum += v;
    }
    for (auto& v : row) v /= sum;
    return row;
}

// chain of `n` variables with cardinality `card`: ~card^n joint cells
CausalModel chain_model(std::size_t n, std::size_t card, std::uint64_t seed) {
    Xoshiro256StarStar rng(seed);
    std::vector<Variable> vars;
    std::vector<std::string> names;
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        names.push_back("V" + std::to_string(i));
        vars.push_back(leveled(names.back(), card));
        if (i > 0) edges.emplace_back(names[i - 1], names[i]);
    }
    Dag dag(names, std::move(edges));
    std::map<std::string, Table> cpts;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Variable> parents;
        if (i > 0) parents.push_back(vars[i - 1]);
        std::vector<double> values;
        for (std::size_t g = 0; g < (i > 0 ? card : 1); ++g) {
            const auto row = random_row(rng, card);
            values.insert(values.end(), row.begin(), row.end());
        }
        cpts.emplace(names[i], Table({vars[i]}, std::move(parents), std::move(values)));
    }
    return CausalModel(vars, std::move(dag), std::move(cpts));
}

TransportInputs wide_transport(std::size_t context_card, std::uint64_t seed) {
    Xoshiro256StarStar rng(seed);
    const Variable c = leveled("C", context_card);
    const Variable x0 = leveled("X0", 8), x1 = leveled("X1", 8);
    const Variable z = leveled("Z", 4);

    std::vector<double> mech_values;
    for (std::size_t g = 0; g < 64; ++g) {
        const auto row = random_row(rng, 4);
        mech_values.insert(mech_values.end(), row.begin(), row.end());
    }
    auto piece = [&](const Variable& x) {
        std::vector<double> values;
        for (std::size_t g = 0; g < context_card; ++g) {
            const auto row = random_row(rng, x.cardinality());
            values.insert(values.end(), row.begin(), row.end());
        }
        return Table({x}, {c}, std::move(values));
    };
    return TransportInputs{Table({z}, {x0, x1}, std::move(mech_values)),
                           {piece(x0), piece(x1)},
                           Table::joint({c}, random_row(rng, context_card)),
                           std::nullopt};
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto start = Clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(Clock::now() - start).count());
    }
    return best;
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-28s serial %8.1f ms   parallel %8.1f ms   speedup %4.2fx   %s\n", name,
                serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
                identical ? "bit-identical" : "MISMATCH");
    if (!identical) std::exit(1);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled; both columns run the serial path\n");
#endif

    {
        const CausalModel m = chain_model(21, 2, 1);  // 2^21 cells
        const Table ser = joint_serial(m);
        Table par = joint(m);
        const double t_ser = time_best_of(3, [&] { par = joint_serial(m); });
        const double t_par = time_best_of(3, [&] { par = joint(m); });
        report("joint enumeration (2^21)", t_ser, t_par, joint(m).values() == ser.values());
    }
    {
        const FunctionalModel f = gen_latency_model(LatencyParams{});
        const Assignment do_values{{"S", 1}};
        const std::vector<std::string> targets{"L"};
        const std::set<std::string> evidence{"R", "L"};
        const Certificate ser = counterfactual_certificate_serial(f, do_values, targets, evidence);
        const double t_ser = time_best_of(3, [&] {
            (void)counterfactual_certificate_serial(f, do_values, targets, evidence);
        });
        const double t_par = time_best_of(3, [&] {
            (void)counterfactual_certificate(f, do_values, targets, evidence);
        });
        const Certificate par = counterfactual_certificate(f, do_values, targets, evidence);
        report("latency certificate", t_ser, t_par,
               par.divergence.bits == ser.divergence.bits && par.bound.bits == ser.bound.bits);
    }
    {
        const TransportInputs t = wide_transport(1 << 15, 2);
        const Table ser = approx_transport_serial(t);
        const double t_ser = time_best_of(3, [&] { (void)approx_transport_serial(t); });
        const double t_par = time_best_of(3, [&] { (void)approx_transport(t); });
        report("transport (2^15 contexts)", t_ser, t_par,
               approx_transport(t).values() == ser.values());
    }
    {
        const std::vector<double> grid = default_privacy_grid();
        const SweepResult ser = [&] {
#ifdef _OPENMP
            const int saved = omp_get_max_threads();
            omp_set_num_threads(1);
            SweepResult r = run_privacy_sweep(grid, 1000, 3);
            omp_set_num_threads(saved);
            return r;
#else
            return run_privacy_sweep(grid, 1000, 3);
#endif
        }();
        const double t_ser = time_best_of(2, [&] {
#ifdef _OPENMP
            const int saved = omp_get_max_threads();
            omp_set_num_threads(1);
#endif
            (void)run_privacy_sweep(grid, 1000, 3);
#ifdef _OPENMP
            omp_set_num_threads(saved);
#endif
        });
        const double t_par = time_best_of(2, [&] { (void)run_privacy_sweep(grid, 1000, 3); });
        const SweepResult par = run_privacy_sweep(grid, 1000, 3);
        bool same = par.rows.size() == ser.rows.size();
        for (std::size_t i = 0; same && i < par.rows.size(); ++i) {
            same = par.rows[i].kl_bits == ser.rows[i].kl_bits &&
                   par.rows[i].kl_bits_emp == ser.rows[i].kl_bits_emp;
        }
        report("privacy sweep (51 points)", t_ser, t_par, same);
    }
    return 0;
}
