#pragma once

#include <cstdint>
#include <vector>

#include "iomdp/mdp.hpp"
#include "iomdp/solvers.hpp"
#include "iomdp/stats.hpp"
#include "iomdp/truncation.hpp"

namespace iomdp {

/// One member TA(n, L) of a solve chain.
struct ChainStep {
    std::size_t n = 0;
    std::size_t num_states = 0;
    Policy policy;
    std::vector<double> values;
    SolveStats stats;
};

struct ChainResult {
    std::vector<ChainStep> steps;
    std::uint64_t total_state_updates = 0;
    std::size_t total_states = 0;
    /// Wall time of the whole chain, model building included.
    double wall_time = 0.0;

    [[nodiscard]] const Policy& final_policy() const { return steps.back().policy; }
};

struct ChainOptions {
    SolverKind solver = SolverKind::nvi;
    FrozenStates frozen = FrozenStates::update;
    std::int64_t max_iterations = kDefaultMaxIterations;
    std::uint64_t cap = state_cap_from_env();
};

/// Solves TA(0, L), TA(1, L), ..., TA(N, L) in turn.
///
/// Member n freezes the actions its predecessor chose on Z_0..Z_{n−1}.
/// Each solve starts from the predecessor's values on the states the two
/// models share and from the fully observed values φ(·, 1) elsewhere.
[[nodiscard]] inline ChainResult hota_chain(const MdpSpec& spec, double rho, std::size_t L, std::size_t N,
                                            double eps = kDefaultEps, const ChainOptions& options = {}) {
    require_valid(spec);
    require_valid_rho(rho);
    detail::Stopwatch clock;
    const ValueVector v = solve_underlying(spec).value;

    ChainResult out;
    for (std::size_t n = 0; n <= N; ++n) {
        const FrozenPrefix prefix = n == 0 ? FrozenPrefix{} : frozen_prefix_from_policy(out.steps.back().policy, n);
        const TruncatedModel model = build_hota(spec, rho, L, prefix, options.cap);

        std::vector<double> init = warm_start(spec, v, model);
        if (n > 0) {
            const auto& prev = out.steps.back();
            const auto& prev_nodes = prev.policy.nodes();
            for (std::size_t i = 0; i < model.size(); ++i) {
                if (const auto j = prev_nodes.find(model.history(i))) init[i] = prev.values[*j];
            }
        }

        Solution sol;
        switch (options.solver) {
            case SolverKind::vi: sol = value_iteration(model, init, eps, options.max_iterations); break;
            case SolverKind::nvi:
                sol = nested_value_iteration(model, default_nested_sets(model, options.frozen), init, eps,
                                             options.max_iterations);
                break;
            case SolverKind::rnvi:
                sol = reverse_nvi(model, default_nested_sets(model, options.frozen), init, eps,
                                  options.max_iterations);
                break;
        }

        ChainStep step;
        step.n = n;
        step.num_states = model.size();
        step.policy = extract_policy(model, sol.values);
        step.values = std::move(sol.values);
        step.stats = std::move(sol.stats);
        out.total_state_updates += step.stats.state_updates;
        out.total_states += step.num_states;
        out.steps.push_back(std::move(step));
    }
    out.wall_time = clock.seconds();
    return out;
}

}  // namespace iomdp
