// causalkit command-line interface.
//
// Exit codes: 0 on success, 1 on validation errors (malformed files, broken
// invariants, unknown names), 2 when an operation refuses its preconditions
// (wrong provenance, inadmissible adjustment set, zero-probability evidence).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "causalkit/counterfactuals.hpp"
#include "causalkit/harness.hpp"
#include "causalkit/io.hpp"
#include "causalkit/pipelines.hpp"
#include "causalkit/transport.hpp"

using namespace causalkit;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::size_t state_index(const CausalModel& m, const std::string& var, const std::string& label) {
    const Variable& v = m.variable(var);
    for (std::size_t s = 0; s < v.states.size(); ++s) {
        if (v.states[s] == label) return s;
    }
    throw ValidationError("variable '" + var + "' has no state labeled '" + label + "'");
}

// "X=1,Y=high" -> assignment by state label
Assignment parse_assignment(const CausalModel& m, const std::string& text) {
    Assignment a;
    if (text.empty()) return a;
    for (const auto& item : split_list(text)) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("expected VAR=STATE, got '" + item + "'");
        }
        const std::string var = item.substr(0, eq);
        a[var] = state_index(m, var, item.substr(eq + 1));
    }
    return a;
}

void emit_table(const Table& t, const std::string& out_path) {
    if (!out_path.empty()) {
        io::write_table_csv(t, out_path);
    } else {
        std::cout << io::table_to_string(t);
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed JSON in '" + path + "': " + e.what());
    }
}

Table conditional_piece(const Table& joint_table, const std::string& target,
                        const std::string& context) {
    return conditional_from_joint(joint_table, {target}, {context});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"discrete causal models, approximate counterfactuals and their certificates"};
    app.require_subcommand(1);

    std::string model_path, data_path, out_path, evidence_text, do_text;
    std::uint64_t seed = 1;

    auto add_common = [&](CLI::App* cmd, bool with_model = true) {
        if (with_model) cmd->add_option("--model", model_path, "model file (JSON)")->required();
        cmd->add_option("--seed", seed, "PRNG seed for sampling commands");
        cmd->add_option("--out", out_path, "output file (CSV or JSON depending on the command)");
    };

    // validate
    std::string validate_path;
    auto* cmd_validate = app.add_subcommand("validate", "check a model file against its invariants");
    cmd_validate->add_option("model", validate_path, "model file (JSON)")->required();
    cmd_validate->add_option("--seed", seed, "ignored; accepted for uniformity");
    cmd_validate->add_option("--out", out_path, "ignored; accepted for uniformity");

    // query
    std::string target_text;
    auto* cmd_query = app.add_subcommand("query", "exact conditional p(targets | evidence)");
    add_common(cmd_query);
    cmd_query->add_option("--target", target_text, "target variables, comma separated")->required();
    cmd_query->add_option("--evidence", evidence_text, "evidence as VAR=STATE,...");

    // do
    auto* cmd_do = app.add_subcommand("do", "post-interventional p(targets | do, evidence)");
    add_common(cmd_do);
    cmd_do->add_option("--target", target_text, "target variables, comma separated")->required();
    cmd_do->add_option("--do", do_text, "intervention as VAR=STATE,...")->required();
    cmd_do->add_option("--evidence", evidence_text, "evidence as VAR=STATE,...");

    // counterfactual
    bool cf_exact = false, cf_approx = false;
    std::string zset_text, outcome_text;
    auto* cmd_cf = app.add_subcommand("counterfactual", "structural or approximate counterfactual");
    add_common(cmd_cf);
    cmd_cf->add_option("--target", target_text, "target variables")->required();
    cmd_cf->add_option("--do", do_text, "counterfactual intervention VAR=STATE,...")->required();
    cmd_cf->add_option("--evidence", evidence_text, "factual evidence VAR=STATE,...");
    cmd_cf->add_flag("--exact", cf_exact, "abduction on the functional model (needs a background block)");
    cmd_cf->add_flag("--approx", cf_approx, "root-node approximation on the CGM");
    cmd_cf->add_option("--zset", zset_text, "separating set for the generalized approximation");
    cmd_cf->add_option("--outcome", outcome_text,
                       "target states VAR=STATE,...; prints that probability instead of the table");

    // certificate cf|transport
    auto* cmd_cert = app.add_subcommand("certificate", "divergence bounds for the approximations");
    cmd_cert->require_subcommand(1);
    std::string ev_vars_text, z_var, sources_text, context_var, x0_var;
    bool include_x0 = false;
    auto* cert_cf = cmd_cert->add_subcommand("cf", "counterfactual certificate: KL vs H(E|W)");
    add_common(cert_cf);
    cert_cf->add_option("--do", do_text, "intervention VAR=STATE,...")->required();
    cert_cf->add_option("--target", target_text, "target variables")->required();
    cert_cf->add_option("--evidence-vars", ev_vars_text, "evidence variable names")->required();
    cert_cf->add_option("--zset", zset_text, "separating set (default: root nodes)");
    auto* cert_tr = cmd_cert->add_subcommand("transport", "transport certificate: KL vs sum H(X_k|C)");
    add_common(cert_tr);
    cert_tr->add_option("--z", z_var, "outcome variable")->required();
    cert_tr->add_option("--sources", sources_text, "source variables, comma separated")->required();
    cert_tr->add_option("--context", context_var, "shared context variable")->required();
    cert_tr->add_option("--x0", x0_var, "which source is the provider input X_0");
    cert_tr->add_flag("--include-x0", include_x0, "count the provider term in the bound");

    // transport
    auto* cmd_transport = app.add_subcommand("transport", "reconstruct p(z) from per-source pieces");
    add_common(cmd_transport);
    cmd_transport->add_option("--z", z_var, "outcome variable")->required();
    cmd_transport->add_option("--sources", sources_text, "source variables")->required();
    cmd_transport->add_option("--context", context_var, "shared context variable")->required();
    cmd_transport->add_option("--x0", x0_var, "which source is the provider input X_0");
    cmd_transport->add_flag("--include-x0", include_x0, "count the provider term in the bound");

    // sample
    std::size_t n_samples = 1000;
    auto* cmd_sample = app.add_subcommand("sample", "draw a seeded dataset from a model");
    add_common(cmd_sample);
    cmd_sample->add_option("--n", n_samples, "number of rows")->required();
    cmd_sample->add_option("--do", do_text, "randomize these variables uniformly (VAR,VAR,...)");

    // sandbox-integrate
    std::string var_name;
    double smoothing = 1.0;
    auto* cmd_sandbox = app.add_subcommand("sandbox-integrate",
                                           "fit a mechanism from a randomized experiment");
    add_common(cmd_sandbox);
    cmd_sandbox->add_option("--var", var_name, "variable whose mechanism to fit")->required();
    cmd_sandbox->add_option("--data", data_path, "experiment dataset (CSV)")->required();
    cmd_sandbox->add_option("--smoothing", smoothing, "additive smoothing (default 1.0)");

    // optimize-policy
    std::string utility_path;
    double grid_step = 0.0;
    auto* cmd_policy = app.add_subcommand("optimize-policy", "exhaustive policy search");
    add_common(cmd_policy);
    cmd_policy->add_option("--var", var_name, "controlled variable")->required();
    cmd_policy->add_option("--utility", utility_path, "utility file (JSON)")->required();
    cmd_policy->add_option("--grid-step", grid_step,
                           "enumerate stochastic policies on this grid instead of deterministic ones");

    // debug-query
    std::string x_var, y_var, x_from, x_to, y_obs, y_tgt;
    auto* cmd_debug = app.add_subcommand("debug-query",
                                         "would Y have been y' under do(X = x'), given x, y, f?");
    add_common(cmd_debug);
    cmd_debug->add_option("--x", x_var, "manipulated variable")->required();
    cmd_debug->add_option("--from", x_from, "factual state of X")->required();
    cmd_debug->add_option("--to", x_to, "counterfactual state of X")->required();
    cmd_debug->add_option("--y", y_var, "performance variable")->required();
    cmd_debug->add_option("--observed", y_obs, "factual state of Y")->required();
    cmd_debug->add_option("--target", y_tgt, "queried state of Y")->required();
    cmd_debug->add_option("--evidence", evidence_text, "side evidence VAR=STATE,...");
    cmd_debug->add_option("--zset", zset_text, "separating set (default: root nodes)");

    // pick-context
    std::string disclosures_path;
    auto* cmd_pick = app.add_subcommand("pick-context", "intersect candidates, minimize sum H(X_k|C)");
    cmd_pick->add_option("--disclosures", disclosures_path, "disclosures file (JSON)")->required();
    cmd_pick->add_option("--seed", seed, "ignored; accepted for uniformity");
    cmd_pick->add_option("--out", out_path, "ignored; accepted for uniformity");

    // predict-outcome
    std::string demands_text, policies_path;
    auto* cmd_predict = app.add_subcommand("predict-outcome",
                                           "pbar(Z) from revealed pieces and client policies");
    add_common(cmd_predict);
    cmd_predict->add_option("--z", z_var, "outcome variable")->required();
    cmd_predict->add_option("--context", context_var, "shared context variable")->required();
    cmd_predict->add_option("--demands", demands_text, "client demand variables, comma separated")
        ->required();
    cmd_predict->add_option("--x0", x0_var, "provider input among the mechanism variables");
    cmd_predict->add_option("--policies", policies_path,
                            "policy file (JSON); identity policies when omitted");

    // experiment privacy|latency
    auto* cmd_exp = app.add_subcommand("experiment", "run a built-in experiment");
    cmd_exp->require_subcommand(1);
    double r_min = 0.0, r_max = 0.5, r_step = 0.01;
    auto* exp_privacy = cmd_exp->add_subcommand("privacy", "confounder sweep over the toy auction");
    exp_privacy->add_option("--r-min", r_min, "grid start (default 0)");
    exp_privacy->add_option("--r-max", r_max, "grid stop (default 0.5)");
    exp_privacy->add_option("--r-step", r_step, "grid step (default 0.01)");
    exp_privacy->add_option("--n", n_samples, "samples per grid point (default 1000)");
    exp_privacy->add_option("--seed", seed, "sweep seed");
    exp_privacy->add_option("--out", out_path, "sweep CSV path")->required();

    std::size_t n_obs = 100000, n_int = 100000;
    LatencyParams latency_params;
    auto* exp_latency = cmd_exp->add_subcommand("latency", "back-door and sandbox experiments");
    exp_latency->add_option("--n-obs", n_obs, "observational sample count (default 1e5)");
    exp_latency->add_option("--n-int", n_int, "randomized sample count (default 1e5)");
    exp_latency->add_option("--bins", latency_params.latency_bins, "latency bin count (default 32)");
    exp_latency->add_option("--h-levels", latency_params.h_levels, "load levels (default 8)");
    exp_latency->add_option("--base", latency_params.base, "latency ramp intercept");
    exp_latency->add_option("--per-r", latency_params.per_r, "latency ramp slope in R");
    exp_latency->add_option("--per-s", latency_params.per_s, "latency ramp slope in S");
    exp_latency->add_option("--tail", latency_params.tail_weight, "top-bin tail mass");
    exp_latency->add_option("--seed", seed, "experiment seed");
    exp_latency->add_option("--out", out_path, "result CSV path")->required();

    // gen-model
    auto* cmd_gen = app.add_subcommand("gen-model", "write a built-in generator model to a file");
    cmd_gen->require_subcommand(1);
    double auction_r = 0.0;
    auto* gen_auction = cmd_gen->add_subcommand("auction", "two-client spot-market toy model");
    gen_auction->add_option("--r", auction_r, "confounder weight in [0, 0.5]")->required();
    gen_auction->add_option("--seed", seed, "recorded in the file");
    gen_auction->add_option("--out", out_path, "model path (JSON)")->required();
    auto* gen_latency = cmd_gen->add_subcommand("latency", "synthetic latency system");
    gen_latency->add_option("--bins", latency_params.latency_bins, "latency bin count");
    gen_latency->add_option("--h-levels", latency_params.h_levels, "load levels");
    gen_latency->add_option("--base", latency_params.base, "latency ramp intercept");
    gen_latency->add_option("--per-r", latency_params.per_r, "latency ramp slope in R");
    gen_latency->add_option("--per-s", latency_params.per_s, "latency ramp slope in S");
    gen_latency->add_option("--tail", latency_params.tail_weight, "top-bin tail mass");
    gen_latency->add_option("--seed", seed, "recorded in the file");
    gen_latency->add_option("--out", out_path, "model path (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*cmd_validate) {
            const io::LoadedModel loaded = io::load_model(validate_path);
            const ValidationReport report =
                loaded.fcm ? validate(*loaded.fcm) : validate(loaded.model);
            if (!report.ok) {
                std::cerr << "invalid: " << report.message << "\n";
                return 1;
            }
            std::cout << "ok: " << loaded.model.variables().size() << " variables, "
                      << loaded.model.dag().edges().size() << " edges, max row residual "
                      << report.max_row_residual << (loaded.fcm ? ", functional" : "") << "\n";
        } else if (*cmd_query) {
            const auto loaded = io::load_model(model_path);
            emit_table(query(loaded.model, split_list(target_text),
                             parse_assignment(loaded.model, evidence_text)),
                       out_path);
        } else if (*cmd_do) {
            const auto loaded = io::load_model(model_path);
            emit_table(interventional_query(loaded.model, split_list(target_text),
                                            parse_assignment(loaded.model, do_text),
                                            parse_assignment(loaded.model, evidence_text)),
                       out_path);
        } else if (*cmd_cf) {
            if (cf_exact == cf_approx) {
                throw ValidationError("pass exactly one of --exact or --approx");
            }
            const auto loaded = io::load_model(model_path);
            CounterfactualQuery q;
            q.do_values = parse_assignment(loaded.model, do_text);
            q.targets = split_list(target_text);
            q.evidence = parse_assignment(loaded.model, evidence_text);
            if (!outcome_text.empty()) q.target_values = parse_assignment(loaded.model, outcome_text);
            const Table answer = [&] {
                if (cf_exact) {
                    if (!loaded.fcm) {
                        throw PreconditionError(
                            "exact counterfactuals need a functional model (background block)");
                    }
                    return exact_counterfactual(*loaded.fcm, q);
                }
                if (!zset_text.empty()) {
                    const auto zs = split_list(zset_text);
                    return generalized_approx_counterfactual(loaded.model, {zs.begin(), zs.end()}, q);
                }
                return approx_counterfactual(loaded.model, q);
            }();
            if (q.target_values) {
                std::cout << "probability " << answer.at_joint(answer.scope_index(*q.target_values))
                          << "\n";
            } else {
                emit_table(answer, out_path);
            }
        } else if (*cert_cf) {
            const auto loaded = io::load_model(model_path);
            if (!loaded.fcm) {
                throw PreconditionError("counterfactual certificates need a functional model");
            }
            std::optional<std::set<std::string>> zset;
            if (!zset_text.empty()) {
                const auto zs = split_list(zset_text);
                zset = std::set<std::string>(zs.begin(), zs.end());
            }
            const auto evs = split_list(ev_vars_text);
            const Certificate cert = counterfactual_certificate(
                *loaded.fcm, parse_assignment(loaded.model, do_text), split_list(target_text),
                {evs.begin(), evs.end()}, zset);
            std::cout << "divergence_bits " << cert.divergence.bits << "\n"
                      << "bound_bits " << cert.bound.bits << "\n"
                      << "slack_bits " << cert.slack_bits() << "\n"
                      << "preconditions_ok " << (cert.preconditions_ok ? "true" : "false") << "\n";
            for (const auto& term : cert.evidence_terms) {
                std::cout << "evidence";
                for (const auto& [k, v] : term.evidence) {
                    std::cout << " " << k << "=" << loaded.model.variable(k).states[v];
                }
                std::cout << " p=" << term.probability << " kl_bits=" << term.kl_bits << "\n";
            }
            if (!cert.preconditions_ok) return 2;
        } else if (*cert_tr) {
            const auto loaded = io::load_model(model_path);
            const Table j = joint(loaded.model);
            const auto sources = split_list(sources_text);
            std::vector<Table> marginals;
            std::optional<std::size_t> provider;
            for (std::size_t k = 0; k < sources.size(); ++k) {
                marginals.push_back(conditional_piece(j, sources[k], context_var));
                if (!x0_var.empty() && sources[k] == x0_var) provider = k;
            }
            if (!x0_var.empty() && !provider) {
                throw ValidationError("--x0 must name one of the --sources");
            }
            const TransportInputs t{conditional_from_joint(j, {z_var}, sources),
                                    std::move(marginals), marginalize(j, {context_var}), provider};
            const Certificate cert = transport_certificate(j, t, include_x0);
            std::cout << "divergence_bits " << cert.divergence.bits << "\n"
                      << "bound_bits " << cert.bound.bits << "\n"
                      << "slack_bits " << cert.slack_bits() << "\n"
                      << "bound_includes_x0 " << (cert.bound_includes_x0 ? "true" : "false") << "\n"
                      << "preconditions_ok " << (cert.preconditions_ok ? "true" : "false") << "\n";
            if (!cert.preconditions_ok) return 2;
        } else if (*cmd_transport) {
            const auto loaded = io::load_model(model_path);
            const Table j = joint(loaded.model);
            const auto sources = split_list(sources_text);
            std::vector<Table> marginals;
            std::optional<std::size_t> provider;
            for (std::size_t k = 0; k < sources.size(); ++k) {
                marginals.push_back(conditional_piece(j, sources[k], context_var));
                if (!x0_var.empty() && sources[k] == x0_var) provider = k;
            }
            if (!x0_var.empty() && !provider) {
                throw ValidationError("--x0 must name one of the --sources");
            }
            const TransportInputs t{conditional_from_joint(j, {z_var}, sources),
                                    std::move(marginals), marginalize(j, {context_var}), provider};
            emit_table(approx_transport(t), out_path);
            std::cout << "bound_bits " << transport_bound(t, include_x0).bits << "\n";
        } else if (*cmd_sample) {
            if (out_path.empty()) throw ValidationError("sample needs --out");
            const auto loaded = io::load_model(model_path);
            Dataset d = [&] {
                if (do_text.empty()) return sample(loaded.model, n_samples, seed);
                const auto vars = split_list(do_text);
                return randomized_experiment(loaded.model, {vars.begin(), vars.end()}, n_samples,
                                             seed);
            }();
            io::save_dataset(d, out_path);
            std::cout << "wrote " << d.rows << " rows to " << out_path << "\n";
        } else if (*cmd_sandbox) {
            if (out_path.empty()) throw ValidationError("sandbox-integrate needs --out");
            const auto loaded = io::load_model(model_path);
            const Dataset d = io::load_dataset(data_path, loaded.model.variables());
            // the sandbox fit completes the observed-level model; functional
            // inputs are reduced to their induced CGM first
            const CausalModel base = loaded.fcm ? induce_cgm(*loaded.fcm) : loaded.model;
            const CausalModel completed = integrate_sandbox(base, var_name, d, smoothing);
            io::save_model(completed, out_path, std::nullopt, loaded.seed);
            std::cout << "installed p(" << var_name << " | do parents) and wrote " << out_path
                      << "\n";
        } else if (*cmd_policy) {
            const auto loaded = io::load_model(model_path);
            const json u = read_json_file(utility_path);
            Utility utility;
            for (const auto& t : u.at("targets")) utility.targets.push_back(t.get<std::string>());
            utility.values = u.at("values").get<std::vector<double>>();
            PolicySpace space;
            if (grid_step > 0.0) space = {PolicySpace::Kind::stochastic_grid, grid_step};
            const auto [policy, value] = optimize_policy(loaded.model, var_name, utility, space);
            std::cout << "expected_utility " << value << "\n" << io::table_to_string(policy.table);
            if (!out_path.empty()) io::write_table_csv(policy.table, out_path);
        } else if (*cmd_debug) {
            const auto loaded = io::load_model(model_path);
            DebugQuery q;
            q.x_var = x_var;
            q.x_factual = state_index(loaded.model, x_var, x_from);
            q.x_counterfactual = state_index(loaded.model, x_var, x_to);
            q.y_var = y_var;
            q.y_factual = state_index(loaded.model, y_var, y_obs);
            q.y_target = state_index(loaded.model, y_var, y_tgt);
            q.side_evidence = parse_assignment(loaded.model, evidence_text);
            std::optional<std::set<std::string>> zset;
            if (!zset_text.empty()) {
                const auto zs = split_list(zset_text);
                zset = std::set<std::string>(zs.begin(), zs.end());
            }
            const DebugAnswer a = debug_query(loaded.model, q, zset);
            std::cout << "probability " << a.probability << "\n"
                      << "bound_bits " << a.bound.bits << "\n"
                      << "confidence " << (a.low_confidence ? "low (bound above 0.5 bits)" : "high")
                      << "\n";
        } else if (*cmd_pick) {
            const json doc = read_json_file(disclosures_path);
            std::vector<StakeholderDisclosure> disclosures;
            for (const auto& d : doc) {
                StakeholderDisclosure s;
                s.id = d.at("id").get<std::string>();
                if (d.contains("demand")) s.demand_variable = d.at("demand").get<std::string>();
                for (const auto& [name, bits] : d.at("candidates").items()) {
                    s.candidate_entropy_bits[name] = bits.get<double>();
                }
                disclosures.push_back(std::move(s));
            }
            const auto choice = pick_shared_context(disclosures);
            if (!choice) {
                std::cout << "no common candidate; procedure canceled\n";
            } else {
                double sum = 0.0;
                for (const auto& d : disclosures) sum += d.candidate_entropy_bits.at(*choice);
                std::cout << "context " << *choice << "\nsum_entropy_bits " << sum << "\n";
            }
        } else if (*cmd_predict) {
            const auto loaded = io::load_model(model_path);
            const Table j = joint(loaded.model);
            const auto demands = split_list(demands_text);

            // mechanism: p(z | parents of z) in the declared parent order
            const Table& z_cpt = loaded.model.cpt(z_var);
            std::vector<std::string> inputs;
            for (const auto& g : z_cpt.given()) inputs.push_back(g.name);
            const Table mechanism = conditional_from_joint(j, {z_var}, inputs);

            std::vector<StakeholderDisclosure> disclosures;
            std::vector<Policy> policies;
            std::optional<json> policy_doc;
            if (!policies_path.empty()) policy_doc = read_json_file(policies_path);

            std::size_t next_demand = 0;
            for (const auto& input : inputs) {
                if (!x0_var.empty() && input == x0_var) {
                    StakeholderDisclosure provider{"provider", input, {},
                                                   conditional_piece(j, input, context_var), true};
                    disclosures.push_back(std::move(provider));
                    continue;
                }
                if (input == context_var) continue;  // handled inside predict_outcome
                if (next_demand >= demands.size()) {
                    throw ValidationError("mechanism input '" + input +
                                          "' has no matching --demands entry");
                }
                const std::string demand = demands[next_demand++];
                StakeholderDisclosure client{"client-" + demand, demand, {},
                                             conditional_piece(j, demand, context_var), false};
                disclosures.push_back(std::move(client));
                if (demand == input) continue;  // demand revealed directly, no policy

                const Variable& in_var = loaded.model.variable(input);
                const Variable& demand_var = loaded.model.variable(demand);
                if (policy_doc && policy_doc->contains(input)) {
                    const auto& spec = policy_doc->at(input);
                    const auto rows = spec.at("rows").get<std::vector<std::vector<double>>>();
                    std::vector<double> values;
                    for (const auto& row : rows) values.insert(values.end(), row.begin(), row.end());
                    policies.push_back(Policy{input, Table({in_var}, {demand_var}, values)});
                } else {
                    if (in_var.cardinality() != demand_var.cardinality()) {
                        throw ValidationError("identity policy needs matching cardinalities for '" +
                                              demand + "' -> '" + input + "'");
                    }
                    policies.push_back(Policy{
                        input, deterministic_cpt(in_var, {demand_var},
                                                 [](std::span<const std::size_t> s) { return s[0]; })});
                }
            }
            const OutcomePrediction pred =
                predict_outcome(mechanism, policies, disclosures, marginalize(j, {context_var}));
            emit_table(pred.distribution, out_path);
            std::cout << "bound_bits " << pred.bound.bits << "\n";
        } else if (*exp_privacy) {
            std::vector<double> grid;
            for (int i = 0; r_min + static_cast<double>(i) * r_step <= r_max + 1e-9; ++i) {
                grid.push_back(r_min + static_cast<double>(i) * r_step);
            }
            const SweepResult sweep = run_privacy_sweep(grid, n_samples, seed);
            write_sweep_csv(sweep, out_path);
            std::cout << "wrote " << sweep.rows.size() << " rows to " << out_path << "\n";
        } else if (*exp_latency) {
            latency_params.seed = seed;
            const DebugExperimentResult result =
                run_debug_experiment(latency_params, n_obs, n_int, seed);
            write_latency_csv(result, out_path);
            std::cout << "wrote " << result.backdoor.size() << " back-door rows to " << out_path
                      << "\n"
                      << "sandbox P99: predicted " << result.sandbox_p99_pred << " vs true "
                      << result.sandbox_p99_true << " (" << result.sandbox_sign << ")\n";
        } else if (*gen_auction) {
            const FunctionalModel f = gen_auction_model(auction_r);
            io::save_model(f.full_model(), out_path, f.background(), seed);
            std::cout << "wrote " << out_path << "\n";
        } else if (*gen_latency) {
            latency_params.seed = seed;
            const FunctionalModel f = gen_latency_model(latency_params);
            io::save_model(f.full_model(), out_path, f.background(), seed);
            std::cout << "wrote " << out_path << "\n";
        }
    } catch (const PreconditionError& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
