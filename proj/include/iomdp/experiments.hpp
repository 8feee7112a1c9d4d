#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "iomdp/chain.hpp"
#include "iomdp/error.hpp"
#include "iomdp/instances.hpp"
#include "iomdp/io.hpp"
#include "iomdp/sim.hpp"
#include "iomdp/solvers.hpp"
#include "iomdp/truncation.hpp"
#include "iomdp/version.hpp"

namespace iomdp {

/// Where an experiment's MDP comes from.
struct InstanceSource {
    enum class Kind { file, random, car };
    Kind kind = Kind::car;
    std::string path;
    std::uint64_t seed = 1;
    std::size_t num_states = 10;
    std::size_t num_actions = 2;
    double beta = 0.95;
};

[[nodiscard]] inline std::string to_string(InstanceSource::Kind kind) {
    switch (kind) {
        case InstanceSource::Kind::file: return "file";
        case InstanceSource::Kind::random: return "random";
        case InstanceSource::Kind::car: return "car";
    }
    return "?";
}

/// Instance number `index` of a source; random sources step the seed.
[[nodiscard]] inline MdpSpec load_instance(const InstanceSource& src, std::size_t index = 0) {
    switch (src.kind) {
        case InstanceSource::Kind::file: {
            MdpSpec spec = load_spec(src.path);
            require_valid(spec);
            return spec;
        }
        case InstanceSource::Kind::random:
            return gen_random_mdp(src.seed + index, src.num_states, src.num_actions, src.beta);
        case InstanceSource::Kind::car: return car_mdp();
    }
    throw InvalidArgument("unknown instance source");
}

/// Full parameter set of a bench run; serialized as the run manifest.
struct ExperimentConfig {
    std::string driver = "ta-vs-hota";
    InstanceSource instance;
    /// Random sources only: instances seed, seed+1, ...
    std::size_t instances = 1;
    std::vector<double> rhos = {0.9};
    std::size_t L = 2;
    std::size_t n = 4;
    /// Depth list for tal-quality, sweep-L and sweep-n; empty picks the driver default.
    std::vector<std::size_t> depths;
    SolverKind solver = SolverKind::nvi;
    double eps = kDefaultEps;
    std::size_t horizon = kDefaultHorizon;
    std::size_t runs = 2000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string output = "results";
};

inline const std::vector<std::string>& experiment_drivers() {
    static const std::vector<std::string> names = {"compare-solvers", "ta-vs-hota", "tal-quality", "sweep-L",
                                                   "sweep-n"};
    return names;
}

inline void validate_config(const ExperimentConfig& c) {
    const auto& names = experiment_drivers();
    if (std::find(names.begin(), names.end(), c.driver) == names.end()) {
        throw InvalidArgument("unknown bench driver '" + c.driver + "'");
    }
    if (c.rhos.empty()) throw InvalidArgument("at least one rho required");
    for (double rho : c.rhos) require_valid_rho(rho);
    if (!(c.eps > 0.0)) throw InvalidArgument("eps must be positive");
    if (c.horizon < 1) throw InvalidArgument("horizon must be at least 1");
    if (c.runs < 1) throw InvalidArgument("runs must be at least 1");
    if (c.instances < 1) throw InvalidArgument("instances must be at least 1");
    if (c.instance.kind == InstanceSource::Kind::random) {
        if (c.instance.num_states < 1 || c.instance.num_actions < 1) {
            throw InvalidArgument("random instances need nS, nA >= 1");
        }
        if (!(c.instance.beta >= 0.0 && c.instance.beta < 1.0)) throw InvalidArgument("beta must lie in [0, 1)");
    }
    if (c.instance.kind == InstanceSource::Kind::file && c.instance.path.empty()) {
        throw InvalidArgument("file instance source needs a path");
    }
}

// Manifest

[[nodiscard]] inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json inst;
    inst["kind"] = to_string(c.instance.kind);
    if (c.instance.kind == InstanceSource::Kind::file) inst["path"] = c.instance.path;
    if (c.instance.kind == InstanceSource::Kind::random) {
        inst["seed"] = c.instance.seed;
        inst["num_states"] = c.instance.num_states;
        inst["num_actions"] = c.instance.num_actions;
        inst["beta"] = c.instance.beta;
    }
    nlohmann::ordered_json j;
    j["toolkit_version"] = kVersion;
    j["driver"] = c.driver;
    j["instance"] = inst;
    j["instances"] = c.instances;
    j["rhos"] = c.rhos;
    j["L"] = c.L;
    j["n"] = c.n;
    j["depths"] = c.depths;
    j["solver"] = to_string(c.solver);
    j["eps"] = c.eps;
    j["horizon"] = c.horizon;
    j["runs"] = c.runs;
    j["seed"] = c.seed;
    j["seed_rule"] = "run r uses mix64(seed + (r+1)*0x9E3779B97F4A7C15)";
    j["threads"] = c.threads;
    j["output"] = c.output;
    return j;
}

[[nodiscard]] inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& origin = "<manifest>") {
    try {
        ExperimentConfig c;
        c.driver = j.at("driver").get<std::string>();
        const auto& inst = j.at("instance");
        const auto kind = inst.at("kind").get<std::string>();
        if (kind == "file") {
            c.instance.kind = InstanceSource::Kind::file;
            c.instance.path = inst.at("path").get<std::string>();
        } else if (kind == "random") {
            c.instance.kind = InstanceSource::Kind::random;
            c.instance.seed = inst.at("seed").get<std::uint64_t>();
            c.instance.num_states = inst.at("num_states").get<std::size_t>();
            c.instance.num_actions = inst.at("num_actions").get<std::size_t>();
            c.instance.beta = inst.at("beta").get<double>();
        } else if (kind == "car") {
            c.instance.kind = InstanceSource::Kind::car;
        } else {
            throw InvalidArgument(origin + ": unknown instance kind '" + kind + "'");
        }
        c.instances = j.at("instances").get<std::size_t>();
        c.rhos = j.at("rhos").get<std::vector<double>>();
        c.L = j.at("L").get<std::size_t>();
        c.n = j.at("n").get<std::size_t>();
        c.depths = j.at("depths").get<std::vector<std::size_t>>();
        c.solver = parse_solver(j.at("solver").get<std::string>());
        c.eps = j.at("eps").get<double>();
        c.horizon = j.at("horizon").get<std::size_t>();
        c.runs = j.at("runs").get<std::size_t>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.threads = j.at("threads").get<unsigned>();
        c.output = j.at("output").get<std::string>();
        validate_config(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(origin + ": malformed manifest: " + e.what());
    }
}

[[nodiscard]] inline ExperimentConfig load_manifest(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": not a valid JSON document: " + e.what());
    }
    return config_from_json(j, path.string());
}

// Drivers

/// Deterministic results plus machine-dependent timings, kept apart so the
/// results file is reproducible byte for byte.
struct ExperimentResult {
    CsvTable results;
    CsvTable timings;
};

namespace detail {

inline Solution solve_with(const TruncatedModel& model, SolverKind kind, double eps) {
    return solve(model, kind, {}, eps);
}

struct PolicyScore {
    double mean = 0.0;
    double stderr_ = 0.0;
    double exact = 0.0;
};

inline PolicyScore score_policy(const MdpSpec& spec, const Policy& policy, double rho, const ExperimentConfig& c) {
    const auto ev = evaluate_policy(spec, policy, rho, c.horizon, c.runs, c.seed, c.threads);
    return {ev.mean, ev.stderr_, exact_policy_mean(spec, policy, rho)};
}

inline ExperimentResult compare_solvers(const ExperimentConfig& c) {
    ExperimentResult out;
    out.results.header = {"instance", "rho", "L", "solver", "model_states", "outer_iterations", "inner_iterations",
                          "state_updates", "max_abs_diff_vs_vi"};
    out.timings.header = {"instance", "rho", "solver", "wall_time_s"};
    const std::size_t count = c.instance.kind == InstanceSource::Kind::random ? c.instances : 1;
    for (std::size_t k = 0; k < count; ++k) {
        const MdpSpec spec = load_instance(c.instance, k);
        for (double rho : c.rhos) {
            const TruncatedModel model = build_ta(spec, rho, c.L);
            std::vector<double> reference;
            for (SolverKind kind : {SolverKind::vi, SolverKind::nvi, SolverKind::rnvi}) {
                const Solution sol = solve_with(model, kind, c.eps);
                if (kind == SolverKind::vi) reference = sol.values;
                double diff = 0.0;
                for (std::size_t i = 0; i < model.size(); ++i) {
                    diff = std::max(diff, std::abs(sol.values[i] - reference[i]));
                }
                out.results.add(k, rho, c.L, to_string(kind), model.size(), sol.stats.outer_iterations,
                                sol.stats.inner_iterations, sol.stats.state_updates, diff);
                out.timings.add(k, rho, to_string(kind), sol.stats.wall_time);
            }
        }
    }
    return out;
}

inline ExperimentResult ta_vs_hota(const ExperimentConfig& c) {
    ExperimentResult out;
    out.results.header = {"rho", "method", "L", "n", "mean_value", "stderr", "exact_value", "state_updates",
                          "sim_runs"};
    out.timings.header = {"rho", "method", "solve_time_s"};
    const MdpSpec spec = load_instance(c.instance);
    for (double rho : c.rhos) {
        for (std::size_t depth : {c.L, c.L + c.n}) {
            detail::Stopwatch clock;
            const TruncatedModel model = build_ta(spec, rho, depth);
            const Solution sol = solve_with(model, c.solver, c.eps);
            const Policy policy = extract_policy(model, sol.values);
            const double elapsed = clock.seconds();
            const auto score = score_policy(spec, policy, rho, c);
            const std::string method = depth == c.L ? "ta_L" : "ta_L_plus_n";
            out.results.add(rho, method, depth, std::size_t{0}, score.mean, score.stderr_, score.exact,
                            sol.stats.state_updates, c.runs);
            out.timings.add(rho, method, elapsed);
        }
        ChainOptions opts;
        opts.solver = c.solver;
        const ChainResult chain = hota_chain(spec, rho, c.L, c.n, c.eps, opts);
        const auto score = score_policy(spec, chain.final_policy(), rho, c);
        out.results.add(rho, "hota", c.L, c.n, score.mean, score.stderr_, score.exact, chain.total_state_updates,
                        c.runs);
        out.timings.add(rho, "hota", chain.wall_time);
    }
    return out;
}

/// tal-quality and sweep-L: TA(L) policy values over a list of depths.
inline ExperimentResult ta_depths(const ExperimentConfig& c, const std::vector<std::size_t>& depths) {
    ExperimentResult out;
    out.results.header = {"instance", "rho", "L", "model_states", "mean_value", "stderr", "exact_value",
                          "state_updates", "sim_runs"};
    out.timings.header = {"instance", "rho", "L", "solve_time_s"};
    const std::size_t count = c.instance.kind == InstanceSource::Kind::random ? c.instances : 1;
    for (std::size_t k = 0; k < count; ++k) {
        const MdpSpec spec = load_instance(c.instance, k);
        for (double rho : c.rhos) {
            for (std::size_t L : depths) {
                detail::Stopwatch clock;
                const TruncatedModel model = build_ta(spec, rho, L);
                const Solution sol = solve_with(model, c.solver, c.eps);
                const Policy policy = extract_policy(model, sol.values);
                const double elapsed = clock.seconds();
                const auto score = score_policy(spec, policy, rho, c);
                out.results.add(k, rho, L, model.size(), score.mean, score.stderr_, score.exact,
                                sol.stats.state_updates, c.runs);
                out.timings.add(k, rho, L, elapsed);
            }
        }
    }
    return out;
}

inline ExperimentResult sweep_n(const ExperimentConfig& c, const std::vector<std::size_t>& depths) {
    ExperimentResult out;
    out.results.header = {"rho", "L", "n", "model_states", "chain_states", "mean_value", "stderr", "exact_value",
                          "chain_state_updates", "sim_runs"};
    out.timings.header = {"rho", "L", "chain_time_s"};
    const MdpSpec spec = load_instance(c.instance);
    for (double rho : c.rhos) {
        for (std::size_t L : depths) {
            ChainOptions opts;
            opts.solver = c.solver;
            const ChainResult chain = hota_chain(spec, rho, L, c.n, c.eps, opts);
            std::size_t states = 0;
            std::uint64_t updates = 0;
            for (const auto& step : chain.steps) {
                states += step.num_states;
                updates += step.stats.state_updates;
                const auto score = score_policy(spec, step.policy, rho, c);
                out.results.add(rho, L, step.n, step.num_states, states, score.mean, score.stderr_, score.exact,
                                updates, c.runs);
            }
            out.timings.add(rho, L, chain.wall_time);
        }
    }
    return out;
}

}  // namespace detail

/// Runs one driver and returns its tables; nothing is written.
[[nodiscard]] inline ExperimentResult run_experiment_tables(const ExperimentConfig& c) {
    validate_config(c);
    if (c.driver == "compare-solvers") return detail::compare_solvers(c);
    if (c.driver == "ta-vs-hota") return detail::ta_vs_hota(c);
    if (c.driver == "tal-quality") {
        return detail::ta_depths(c, c.depths.empty() ? std::vector<std::size_t>{2, 3, 6} : c.depths);
    }
    if (c.driver == "sweep-L") {
        return detail::ta_depths(c, c.depths.empty() ? std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7} : c.depths);
    }
    return detail::sweep_n(c, c.depths.empty() ? std::vector<std::size_t>{1, 2, 3} : c.depths);
}

struct ExperimentFiles {
    std::filesystem::path results;
    std::filesystem::path timings;
    std::filesystem::path manifest;
};

/// Runs a driver and writes `<driver>.csv`, `<driver>_timing.csv` and
/// `manifest.json` under the configured output directory.
inline ExperimentFiles run_experiment(const ExperimentConfig& c) {
    const ExperimentResult r = run_experiment_tables(c);
    const std::filesystem::path dir = c.output;
    ExperimentFiles files{dir / (c.driver + ".csv"), dir / (c.driver + "_timing.csv"), dir / "manifest.json"};
    write_csv(files.results, r.results);
    write_csv(files.timings, r.timings);
    write_text_file(files.manifest, config_to_json(c).dump(2) + "\n");
    return files;
}

}  // namespace iomdp
