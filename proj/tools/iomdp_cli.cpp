// iomdp: command-line front end for the IOMDP toolkit.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iomdp/iomdp.hpp"

namespace {

using namespace iomdp;

/// Instance flags shared by several verbs.
struct InstanceFlags {
    std::string path;
    bool car = false;
    std::optional<std::size_t> ns;
    std::optional<std::size_t> na;
    std::uint64_t seed = 1;
    double beta = 0.95;

    void attach(CLI::App& cmd, bool with_seed = true) {
        cmd.add_option("--instance", path, "Instance file (JSON)");
        cmd.add_flag("--car", car, "Use the built-in car MDP");
        cmd.add_option("--nS", ns, "Random instance: number of states");
        cmd.add_option("--nA", na, "Random instance: number of actions");
        cmd.add_option("--beta", beta, "Random instance: discount factor")->capture_default_str();
        if (with_seed) cmd.add_option("--seed", seed, "Seed")->capture_default_str();
    }

    [[nodiscard]] InstanceSource source() const {
        InstanceSource src;
        const int chosen = (path.empty() ? 0 : 1) + (car ? 1 : 0) + ((ns || na) ? 1 : 0);
        if (chosen != 1) throw InvalidArgument("choose exactly one of --instance, --car or --nS/--nA");
        if (!path.empty()) {
            src.kind = InstanceSource::Kind::file;
            src.path = path;
        } else if (car) {
            src.kind = InstanceSource::Kind::car;
        } else {
            if (!ns || !na) throw InvalidArgument("random instances need both --nS and --nA");
            src.kind = InstanceSource::Kind::random;
            src.num_states = *ns;
            src.num_actions = *na;
            src.seed = seed;
            src.beta = beta;
        }
        return src;
    }

    [[nodiscard]] MdpSpec load() const { return load_instance(source()); }
};

int cmd_validate(const InstanceFlags& flags) {
    const InstanceSource src = flags.source();
    const MdpSpec spec = src.kind == InstanceSource::Kind::file ? load_spec(src.path) : load_instance(src);
    const auto violations = validate_spec(spec);
    if (violations.empty()) {
        std::cout << "ok: " << spec.num_states << " states, " << spec.num_actions << " actions, beta "
                  << format_double(spec.beta) << "\n";
        return 0;
    }
    for (const auto& v : violations) std::cout << "violation: " << v.message << "\n";
    return static_cast<int>(ExitCode::validation_failure);
}

struct SolveFlags {
    double rho = 0.9;
    std::size_t L = 2;
    std::size_t n = 0;
    std::string solver = "nvi";
    double eps = kDefaultEps;
    std::int64_t max_iterations = kDefaultMaxIterations;
    std::string policy_out = "policy.txt";
    std::string stats_out = "stats.csv";
    std::string trace_out;
};

int cmd_solve(const InstanceFlags& inst, const SolveFlags& f) {
    const MdpSpec spec = inst.load();
    const SolverKind kind = parse_solver(f.solver);
    CsvTable stats;
    stats.header = {"n", "model", "model_states", "solver", "outer_iterations", "inner_iterations", "state_updates",
                    "final_residual", "wall_time_s"};
    CsvTable trace;
    trace.header = {"n", "outer", "inner", "set_size", "sigma", "cumulative_state_updates", "wall_time_s"};

    ChainOptions opts;
    opts.solver = kind;
    opts.max_iterations = f.max_iterations;
    const ChainResult chain = hota_chain(spec, f.rho, f.L, f.n, f.eps, opts);
    for (const auto& step : chain.steps) {
        const ModelShape shape{step.n == 0 ? ModelKind::truncated : ModelKind::high_order, f.L, step.n};
        stats.add(step.n, describe(shape), step.num_states, f.solver, step.stats.outer_iterations,
                  step.stats.inner_iterations, step.stats.state_updates, step.stats.final_residual(),
                  step.stats.wall_time);
        for (const auto& r : step.stats.residual_trace) {
            trace.add(step.n, r.outer, r.inner, r.set_size, r.sigma, r.cumulative_state_updates, r.wall_time_s);
        }
    }
    save_policy(f.policy_out, chain.final_policy());
    write_csv(f.stats_out, stats);
    if (!f.trace_out.empty()) write_csv(f.trace_out, trace);
    const auto& last = chain.steps.back();
    std::cout << describe(chain.final_policy().shape()) << ": " << last.num_states << " states, "
              << chain.total_state_updates << " state updates, policy written to " << f.policy_out << "\n";
    return 0;
}

struct SimulateFlags {
    std::string policy;
    double rho = 0.9;
    std::size_t horizon = kDefaultHorizon;
    std::size_t runs = 2000;
    unsigned threads = 1;
    std::string runs_out;
};

int cmd_simulate(const InstanceFlags& inst, const SimulateFlags& f) {
    const MdpSpec spec = inst.load();
    const Policy policy = load_policy(f.policy);
    const Evaluation ev = evaluate_policy(spec, policy, f.rho, f.horizon, f.runs, inst.seed, f.threads);
    std::cout << "mean " << format_double(ev.mean) << " stderr " << format_double(ev.stderr_) << " runs " << f.runs
              << "\n";
    if (!f.runs_out.empty()) {
        CsvTable t;
        t.header = {"run", "seed", "return", "observations_received", "max_layer_reached"};
        for (std::size_t r = 0; r < ev.runs.size(); ++r) {
            t.add(r, ev.seeds[r], ev.runs[r].discounted_return, ev.runs[r].observations_received,
                  ev.runs[r].max_layer_reached);
        }
        write_csv(f.runs_out, t);
    }
    return 0;
}

struct BoundFlags {
    std::vector<double> rhos;
    std::vector<std::size_t> Ls;
    std::optional<double> delta;
    std::size_t empirical_extra = 0;
    std::size_t regret_depth = 0;
    std::optional<double> epsilon_n;
    std::size_t n = 0;
    std::string output;
};

int cmd_bound(const InstanceFlags& inst, const BoundFlags& f) {
    const bool has_instance = !inst.path.empty() || inst.car || inst.ns || inst.na;
    std::optional<MdpSpec> spec;
    if (has_instance) spec = inst.load();
    // without an instance, --beta is the discount factor itself
    const double beta = spec ? spec->beta : inst.beta;
    if (!spec && !f.delta) throw InvalidArgument("bound: pass --delta or an instance");
    if (f.empirical_extra > 0 && !spec) throw InvalidArgument("bound: --empirical-depth needs an instance");
    if (f.rhos.empty() || f.Ls.empty()) throw InvalidArgument("bound: --rho and --L are required");

    CsvTable table;
    table.header = {"L", "k", "rho", "beta", "delta_mode", "bound_value"};
    for (double rho : f.rhos) {
        for (std::size_t L : f.Ls) {
            double delta = 0.0;
            DeltaMode mode = DeltaMode::reward_cap;
            if (f.delta) {
                delta = *f.delta;
            } else if (f.empirical_extra > 0) {
                const TruncatedModel deep = build_ta(*spec, rho, L + f.empirical_extra);
                const Solution sol = solve(deep, SolverKind::nvi, {}, 1e-9);
                delta = empirical_delta(deep, sol.values, L, L + 1);
                mode = DeltaMode::empirical;
            } else {
                delta = value_upper_bound(*spec);
            }
            const std::string mode_name = f.delta ? "given" : to_string(mode);
            for (std::size_t k = 0; k <= L; ++k) {
                table.add(L, k, rho, beta, mode_name, ta_error_bound(L, k, rho, beta, delta));
            }
            if (f.epsilon_n) {
                try {
                    const std::size_t pick = choose_truncation_depth(f.n, *f.epsilon_n, delta, rho, beta);
                    std::cerr << "rho " << format_double(rho) << ": smallest L meeting epsilon_n is " << pick << "\n";
                } catch (const DepthNotFound& e) {
                    std::cerr << "rho " << format_double(rho) << ": " << e.what() << "\n";
                }
            }
        }
        if (f.regret_depth > 0) {
            if (!spec) throw InvalidArgument("bound: --regret-depth needs an instance");
            const RegretBound rb = regret_bound(*spec, rho, f.regret_depth);
            std::cerr << "rho " << format_double(rho) << ": regret bound per root";
            for (double x : rb.per_root) std::cerr << " " << format_double(x);
            std::cerr << " (tail " << format_double(rb.tail_bound) << ")\n";
        }
    }
    if (f.output.empty()) {
        std::cout << to_csv(table);
    } else {
        write_csv(f.output, table);
    }
    return 0;
}

struct BenchFlags {
    std::string manifest;
    std::vector<double> rhos;
    std::size_t L = 2;
    std::size_t n = 4;
    std::vector<std::size_t> depths;
    std::string solver = "nvi";
    double eps = kDefaultEps;
    std::size_t horizon = kDefaultHorizon;
    std::size_t runs = 2000;
    std::size_t instances = 1;
    unsigned threads = 1;
    std::string output = "results";
};

int cmd_bench(const std::string& driver, const InstanceFlags& inst, const BenchFlags& f) {
    ExperimentConfig c;
    if (!f.manifest.empty()) {
        c = load_manifest(f.manifest);
        if (c.driver != driver) throw InvalidArgument("manifest is for driver '" + c.driver + "', not '" + driver + "'");
    } else {
        c.driver = driver;
        c.instance = inst.source();
        c.instances = f.instances;
        if (!f.rhos.empty()) c.rhos = f.rhos;
        c.L = f.L;
        c.n = f.n;
        c.depths = f.depths;
        c.solver = parse_solver(f.solver);
        c.eps = f.eps;
        c.horizon = f.horizon;
        c.runs = f.runs;
        c.seed = inst.seed;
        c.threads = f.threads;
        c.output = f.output;
    }
    const ExperimentFiles files = run_experiment(c);
    std::cout << read_text_file(files.results);
    std::cerr << "wrote " << files.results.string() << ", " << files.timings.string() << ", "
              << files.manifest.string() << "\n";
    return 0;
}

int cmd_generate(const InstanceFlags& inst, const std::string& output) {
    const MdpSpec spec = inst.load();
    if (output.empty()) {
        std::cout << spec_to_json(spec);
    } else {
        save_spec(output, spec);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solvers, bounds and simulation for MDPs observed over a lossy channel"};
    app.set_version_flag("--version", std::string(iomdp::kVersion));
    app.require_subcommand(1);

    InstanceFlags inst;

    auto* validate = app.add_subcommand("validate", "Check an instance file");
    inst.attach(*validate, false);

    SolveFlags solve_flags;
    auto* solve = app.add_subcommand("solve", "Solve TA(L), or the TA(n, L) chain when --n > 0");
    inst.attach(*solve);
    solve->add_option("--rho", solve_flags.rho, "Observation delivery probability")->capture_default_str();
    solve->add_option("--L", solve_flags.L, "Truncation depth")->capture_default_str();
    solve->add_option("--n", solve_flags.n, "High-order chain length")->capture_default_str();
    solve->add_option("--solver", solve_flags.solver, "vi, nvi or rnvi")->capture_default_str();
    solve->add_option("--eps", solve_flags.eps, "Value accuracy")->capture_default_str();
    solve->add_option("--max-iterations", solve_flags.max_iterations, "Outer iteration limit")->capture_default_str();
    solve->add_option("--policy-out", solve_flags.policy_out, "Policy file")->capture_default_str();
    solve->add_option("--stats-out", solve_flags.stats_out, "Solver statistics CSV")->capture_default_str();
    solve->add_option("--trace-out", solve_flags.trace_out, "Residual trace CSV");

    SimulateFlags sim_flags;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo evaluation of a policy file");
    inst.attach(*simulate);
    simulate->add_option("--policy", sim_flags.policy, "Policy file")->required();
    simulate->add_option("--rho", sim_flags.rho, "Observation delivery probability")->capture_default_str();
    simulate->add_option("--horizon", sim_flags.horizon, "Steps per rollout")->capture_default_str();
    simulate->add_option("--runs", sim_flags.runs, "Number of rollouts")->capture_default_str();
    simulate->add_option("--threads", sim_flags.threads, "Worker threads")->capture_default_str();
    simulate->add_option("--runs-out", sim_flags.runs_out, "Per-run CSV");

    BoundFlags bound_flags;
    auto* bound = app.add_subcommand("bound", "Truncation error bounds");
    inst.attach(*bound, false);
    bound->add_option("--rho", bound_flags.rhos, "Delivery probabilities")->delimiter(',');
    bound->add_option("--L", bound_flags.Ls, "Truncation depths")->delimiter(',');
    bound->add_option("--delta", bound_flags.delta, "Value bound at layers L and L+1");
    bound->add_option("--empirical-depth", bound_flags.empirical_extra,
                      "Estimate delta from TA(L + this) values instead of Rmax/(1-beta)");
    bound->add_option("--regret-depth", bound_flags.regret_depth, "Also report the regret bound at this depth");
    bound->add_option("--epsilon-n", bound_flags.epsilon_n, "Report the smallest L meeting this gap");
    bound->add_option("--n", bound_flags.n, "High-order n for --epsilon-n");
    bound->add_option("--output", bound_flags.output, "CSV path (stdout when omitted)");

    BenchFlags bench_flags;
    std::string driver;
    auto* bench = app.add_subcommand("bench", "Experiment drivers");
    bench->add_option("driver", driver, "compare-solvers, ta-vs-hota, tal-quality, sweep-L or sweep-n")
        ->required()
        ->check(CLI::IsMember(iomdp::experiment_drivers()));
    inst.attach(*bench);
    bench->add_option("--manifest", bench_flags.manifest, "Re-run from a manifest");
    bench->add_option("--rho", bench_flags.rhos, "Delivery probabilities")->delimiter(',');
    bench->add_option("--L", bench_flags.L, "Truncation depth")->capture_default_str();
    bench->add_option("--n", bench_flags.n, "High-order chain length")->capture_default_str();
    bench->add_option("--depths", bench_flags.depths, "Depth list for tal-quality / sweep-L / sweep-n")->delimiter(',');
    bench->add_option("--solver", bench_flags.solver, "vi, nvi or rnvi")->capture_default_str();
    bench->add_option("--eps", bench_flags.eps, "Value accuracy")->capture_default_str();
    bench->add_option("--horizon", bench_flags.horizon, "Steps per rollout")->capture_default_str();
    bench->add_option("--runs", bench_flags.runs, "Rollouts per cell")->capture_default_str();
    bench->add_option("--instances", bench_flags.instances, "Random instances (seed, seed+1, ...)")
        ->capture_default_str();
    bench->add_option("--threads", bench_flags.threads, "Simulation threads")->capture_default_str();
    bench->add_option("--output", bench_flags.output, "Output directory")->capture_default_str();

    std::string gen_output;
    auto* generate = app.add_subcommand("generate", "Write an instance file");
    inst.attach(*generate);
    generate->add_option("--output", gen_output, "Instance path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(iomdp::ExitCode::validation_failure);
    }

    try {
        if (*validate) return cmd_validate(inst);
        if (*solve) return cmd_solve(inst, solve_flags);
        if (*simulate) return cmd_simulate(inst, sim_flags);
        if (*bound) return cmd_bound(inst, bound_flags);
        if (*bench) return cmd_bench(driver, inst, bench_flags);
        if (*generate) return cmd_generate(inst, gen_output);
    } catch (const iomdp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(iomdp::ExitCode::io_failure);
    }
    return 0;
}
