#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "iomdp/error.hpp"
#include "iomdp/mdp.hpp"
#include "iomdp/stats.hpp"
#include "iomdp/truncation.hpp"

namespace iomdp {

inline constexpr double kDefaultEps = 1e-6;
inline constexpr std::int64_t kDefaultMaxIterations = 10'000;

/// Values and work ledger returned by every solver.
struct Solution {
    std::vector<double> values;
    SolveStats stats;
};

/// Collection of nested update sets, stored smallest first.
struct NestedSets {
    std::vector<std::vector<std::uint32_t>> sets;

    [[nodiscard]] std::size_t count() const noexcept { return sets.size(); }
    [[nodiscard]] std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> out;
        for (const auto& s : sets) out.push_back(s.size());
        return out;
    }
};

/// Whether frozen TA(n, L) states take part in the nested sweeps.
///
/// `update` backs them up under their single allowed action in every inner
/// iteration, so the solver reaches the model's exact fixed point.
/// `hold` leaves them at their initial values, which is only exact when the
/// initial values already are the fixed point on those states.
enum class FrozenStates { update, hold };

namespace detail {

inline std::vector<std::uint32_t> index_range(std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) out.push_back(static_cast<std::uint32_t>(i));
    return out;
}

}  // namespace detail

/// Layer-based nested sets of a truncated model.
///
/// TA(L): H_l = layers 0..l for l = 1..L (a single all-states set when L = 0).
/// TA(n, L): H_{n,l} = Z_n plus the retained layers n+1..n+l, l = 1..L,
/// preceded by the frozen layers 0..n−1 when `frozen` is `update`.
[[nodiscard]] inline NestedSets default_nested_sets(const TruncatedModel& model,
                                                    FrozenStates frozen = FrozenStates::update) {
    NestedSets out;
    const auto& shape = model.shape();
    if (shape.L == 0) {
        out.sets.push_back(detail::index_range(0, model.size()));
        return out;
    }
    const std::size_t first_layer = shape.kind == ModelKind::high_order ? shape.n : 0;
    const std::size_t begin = frozen == FrozenStates::update ? 0 : model.layer_range(first_layer).first;
    for (std::size_t l = 1; l <= shape.L; ++l) {
        out.sets.push_back(detail::index_range(begin, model.layer_range(first_layer + l).second));
    }
    return out;
}

/// Throws unless `sets` is a valid nested collection for `model`.
inline void require_valid_sets(const TruncatedModel& model, const NestedSets& nested) {
    if (nested.sets.empty()) throw InvalidArgument("nested sets: at least one set required");
    std::vector<std::uint8_t> member(model.size(), 0);
    std::size_t previous = 0;
    for (std::size_t k = 0; k < nested.sets.size(); ++k) {
        const auto& set = nested.sets[k];
        std::vector<std::uint8_t> here(model.size(), 0);
        for (auto i : set) {
            if (i >= model.size()) throw InvalidArgument("nested sets: state index out of range");
            if (here[i]) throw InvalidArgument("nested sets: duplicate state in set " + std::to_string(k));
            here[i] = 1;
        }
        for (std::size_t i = 0; i < model.size(); ++i) {
            if (member[i] && !here[i]) {
                throw InvalidArgument("nested sets: set " + std::to_string(k) + " does not contain set " +
                                      std::to_string(k - 1));
            }
        }
        if (k > 0 && set.size() < previous) throw InvalidArgument("nested sets must be ordered smallest first");
        previous = set.size();
        member.swap(here);
    }
}

/// Called after every inner iteration with the iterate it produced.
struct IterateSnapshot {
    std::int64_t n = 0;          // iterations so far (ψ^n)
    std::int64_t outer = 0;      // 1-based outer iteration
    std::size_t inner = 0;       // 0-based position within the outer iteration
    std::size_t set_size = 0;
    double sigma = 0.0;
    std::span<const double> values;
};
using IterateObserver = std::function<void(const IterateSnapshot&)>;

namespace detail {

inline double backup(const TruncatedModel& model, std::size_t i, std::span<const double> values) {
    double best = -std::numeric_limits<double>::infinity();
    const std::size_t k_end = model.actions(i).size();
    for (std::size_t k = 0; k < k_end; ++k) best = std::max(best, model.q_value(model.slot(i, k), values));
    return best;
}

/// One synchronous (Jacobi) sweep over `set`; returns the max-norm change.
inline double sweep(const TruncatedModel& model, std::span<const std::uint32_t> set, std::vector<double>& psi,
                    std::vector<double>& scratch) {
    scratch.resize(set.size());
    for (std::size_t k = 0; k < set.size(); ++k) scratch[k] = backup(model, set[k], psi);
    double sigma = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) {
        sigma = std::max(sigma, std::abs(scratch[k] - psi[set[k]]));
        psi[set[k]] = scratch[k];
    }
    return sigma;
}

inline std::vector<double> initial_values(const TruncatedModel& model, std::span<const double> init) {
    if (init.empty()) return std::vector<double>(model.size(), 0.0);
    if (init.size() != model.size()) throw InvalidArgument("solver: one initial value per state required");
    return {init.begin(), init.end()};
}

inline void require_positive_eps(double eps) {
    if (!(eps > 0.0)) throw InvalidArgument("solver: eps must be positive");
}

enum class SetOrder { descending, ascending };

inline Solution nested_sweeps(const TruncatedModel& model, const NestedSets& nested, std::span<const double> init,
                              double eps, std::int64_t max_outer, SetOrder order, const IterateObserver& observer,
                              const char* name) {
    require_positive_eps(eps);
    require_valid_sets(model, nested);
    const double threshold = stopping_threshold(eps, model.beta());
    const std::size_t count = nested.count();
    const std::size_t largest = count - 1;
    detail::Stopwatch clock;

    Solution out;
    out.values = initial_values(model, init);
    std::vector<double> scratch;
    double sigma = std::numeric_limits<double>::infinity();
    for (std::int64_t outer = 1; outer <= max_outer; ++outer) {
        out.stats.outer_iterations = outer;
        for (std::size_t l = 0; l < count; ++l) {
            const std::size_t which = order == SetOrder::descending ? largest - l : l;
            const auto& set = nested.sets[which];
            sigma = sweep(model, set, out.values, scratch);
            ++out.stats.inner_iterations;
            out.stats.state_updates += set.size();
            out.stats.residual_trace.push_back({outer, static_cast<std::int64_t>(l), set.size(), sigma,
                                                out.stats.state_updates, clock.seconds()});
            if (observer) observer({out.stats.inner_iterations, outer, l, set.size(), sigma, out.values});
            if (sigma <= threshold) {
                if (which == largest) {
                    out.stats.wall_time = clock.seconds();
                    return out;
                }
                // Descending order restarts from the full set; ascending order
                // would restart from the smallest set forever, so it runs on.
                if (order == SetOrder::descending) break;
            }
        }
    }
    throw ConvergenceError(std::string(name) + " did not converge within " + std::to_string(max_outer) +
                               " outer iterations (last residual " + std::to_string(sigma) + ")",
                           sigma, max_outer);
}

}  // namespace detail

/// Standard synchronous value iteration on a truncated model.
///
/// Stops when a full sweep changes no value by more than eps·(1−β)/(2β),
/// which bounds the distance to the model's fixed point by eps/2.
[[nodiscard]] inline Solution value_iteration(const TruncatedModel& model, std::span<const double> init = {},
                                              double eps = kDefaultEps,
                                              std::int64_t max_iter = kDefaultMaxIterations,
                                              const IterateObserver& observer = {}) {
    NestedSets all;
    all.sets.push_back(detail::index_range(0, model.size()));
    return detail::nested_sweeps(model, all, init, eps, max_iter, detail::SetOrder::descending, observer,
                                 "value_iteration");
}

/// Nested value iteration.
///
/// Each outer iteration sweeps the sets from largest to smallest, one
/// synchronous backup of the set per inner iteration. A converged inner
/// iteration on the full set ends the solve; one on a smaller set ends the
/// outer iteration early. The stopping threshold is the one used by
/// value_iteration, so both land within eps/2 of the same fixed point.
[[nodiscard]] inline Solution nested_value_iteration(const TruncatedModel& model, const NestedSets& sets,
                                                     std::span<const double> init = {}, double eps = kDefaultEps,
                                                     std::int64_t max_outer = kDefaultMaxIterations,
                                                     const IterateObserver& observer = {}) {
    return detail::nested_sweeps(model, sets, init, eps, max_outer, detail::SetOrder::descending, observer,
                                 "nested_value_iteration");
}

/// Nested value iteration with the sets swept smallest first.
[[nodiscard]] inline Solution reverse_nvi(const TruncatedModel& model, const NestedSets& sets,
                                          std::span<const double> init = {}, double eps = kDefaultEps,
                                          std::int64_t max_outer = kDefaultMaxIterations,
                                          const IterateObserver& observer = {}) {
    return detail::nested_sweeps(model, sets, init, eps, max_outer, detail::SetOrder::ascending, observer,
                                 "reverse_nvi");
}

enum class SolverKind { vi, nvi, rnvi };

[[nodiscard]] inline std::string to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::vi: return "vi";
        case SolverKind::nvi: return "nvi";
        case SolverKind::rnvi: return "rnvi";
    }
    return "?";
}

[[nodiscard]] inline SolverKind parse_solver(const std::string& name) {
    if (name == "vi") return SolverKind::vi;
    if (name == "nvi") return SolverKind::nvi;
    if (name == "rnvi") return SolverKind::rnvi;
    throw InvalidArgument("unknown solver '" + name + "' (expected vi, nvi or rnvi)");
}

/// Runs the chosen solver with the model's default nested sets.
[[nodiscard]] inline Solution solve(const TruncatedModel& model, SolverKind kind, std::span<const double> init = {},
                                    double eps = kDefaultEps, std::int64_t max_iter = kDefaultMaxIterations) {
    switch (kind) {
        case SolverKind::vi: return value_iteration(model, init, eps, max_iter);
        case SolverKind::nvi: return nested_value_iteration(model, default_nested_sets(model), init, eps, max_iter);
        case SolverKind::rnvi: return reverse_nvi(model, default_nested_sets(model), init, eps, max_iter);
    }
    throw InvalidArgument("unknown solver");
}

/// Initial values from the fully observed solution: φ(g(h), 1) for every state.
[[nodiscard]] inline std::vector<double> warm_start(const MdpSpec& spec, const ValueVector& v,
                                                    const TruncatedModel& model) {
    std::vector<double> out(model.size());
    Belief b;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto bel = model.belief(i);
        b.probs.assign(bel.begin(), bel.end());
        out[i] = phi_at_rho1(spec, v, b);
    }
    return out;
}

/// Value of a fixed action assignment on a model, by iterating its linear
/// fixed-point equation to within eps.
[[nodiscard]] inline Solution evaluate_fixed_policy(const TruncatedModel& model, std::span<const ActionIndex> actions,
                                                    std::span<const double> init = {}, double eps = kDefaultEps,
                                                    std::int64_t max_iter = 1'000'000) {
    detail::require_positive_eps(eps);
    if (actions.size() != model.size()) throw InvalidArgument("evaluate_fixed_policy: one action per state required");
    std::vector<std::size_t> slots(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto allowed = model.actions(i);
        const auto it = std::find(allowed.begin(), allowed.end(), actions[i]);
        if (it == allowed.end()) throw InvalidArgument("evaluate_fixed_policy: action not allowed in state");
        slots[i] = model.slot(i, static_cast<std::size_t>(it - allowed.begin()));
    }
    const double threshold = stopping_threshold(eps, model.beta());
    detail::Stopwatch clock;
    Solution out;
    out.values = detail::initial_values(model, init);
    std::vector<double> next(model.size());
    for (std::int64_t it = 1; it <= max_iter; ++it) {
        double sigma = 0.0;
        for (std::size_t i = 0; i < model.size(); ++i) {
            next[i] = model.q_value(slots[i], out.values);
            sigma = std::max(sigma, std::abs(next[i] - out.values[i]));
        }
        out.values.swap(next);
        out.stats.outer_iterations = out.stats.inner_iterations = it;
        out.stats.state_updates += model.size();
        out.stats.residual_trace.push_back({it, 0, model.size(), sigma, out.stats.state_updates, clock.seconds()});
        if (sigma <= threshold) {
            out.stats.wall_time = clock.seconds();
            return out;
        }
    }
    throw ConvergenceError("evaluate_fixed_policy did not converge", out.stats.final_residual(), max_iter);
}

}  // namespace iomdp
