#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iomdp/error.hpp"
#include "iomdp/stats.hpp"

namespace iomdp {

using StateIndex = std::uint32_t;
using ActionIndex = std::uint32_t;

/// Absolute tolerance used whenever two probability vectors are compared.
inline constexpr double kBeliefTolerance = 1e-9;

/// A finite, fully observed, discounted MDP.
///
/// `transitions` is stored action-major: entry (a, i, j) is P(j | i, a).
/// `rewards` is stored state-major: entry (s, a) is r(s, a).
/// `initial` is an optional distribution over start states; empty means
/// uniform over all states.
struct MdpSpec {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    double beta = 0.0;
    std::vector<double> transitions;
    std::vector<double> rewards;
    std::vector<double> initial;

    [[nodiscard]] double p(ActionIndex a, StateIndex from, StateIndex to) const {
        return transitions[(a * num_states + from) * num_states + to];
    }
    [[nodiscard]] double& p(ActionIndex a, StateIndex from, StateIndex to) {
        return transitions[(a * num_states + from) * num_states + to];
    }
    [[nodiscard]] std::span<const double> row(ActionIndex a, StateIndex from) const {
        return {transitions.data() + (a * num_states + from) * num_states, num_states};
    }
    [[nodiscard]] double r(StateIndex s, ActionIndex a) const { return rewards[s * num_actions + a]; }
    [[nodiscard]] double& r(StateIndex s, ActionIndex a) { return rewards[s * num_actions + a]; }

    [[nodiscard]] double max_reward() const {
        return rewards.empty() ? 0.0 : *std::max_element(rewards.begin(), rewards.end());
    }

    /// Start-state distribution with the uniform default filled in.
    [[nodiscard]] std::vector<double> initial_distribution() const {
        if (!initial.empty()) return initial;
        return std::vector<double>(num_states, num_states ? 1.0 / static_cast<double>(num_states) : 0.0);
    }

    /// Blank spec of the given shape (all transitions and rewards zero).
    static MdpSpec zeros(std::size_t ns, std::size_t na, double discount) {
        MdpSpec spec;
        spec.num_states = ns;
        spec.num_actions = na;
        spec.beta = discount;
        spec.transitions.assign(na * ns * ns, 0.0);
        spec.rewards.assign(ns * na, 0.0);
        return spec;
    }
};

/// Probability distribution over the underlying states.
struct Belief {
    std::vector<double> probs;

    static Belief one_hot(std::size_t n, StateIndex i) {
        Belief b{std::vector<double>(n, 0.0)};
        b.probs.at(i) = 1.0;
        return b;
    }

    [[nodiscard]] std::size_t size() const noexcept { return probs.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return probs[i]; }

    /// Index of the unit entry when the belief is one-hot within tolerance.
    [[nodiscard]] std::optional<StateIndex> one_hot_index(double tol = kBeliefTolerance) const {
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (std::abs(probs[i] - 1.0) <= tol) return static_cast<StateIndex>(i);
        }
        return std::nullopt;
    }
};

[[nodiscard]] inline bool approx_equal(std::span<const double> a, std::span<const double> b,
                                       double tol = kBeliefTolerance) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > tol) return false;
    }
    return true;
}

/// Optimal value function of the underlying MDP, one entry per state.
struct ValueVector {
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values[i]; }
};

/// A single broken invariant found by validate_spec.
struct Violation {
    std::string message;
    std::optional<std::size_t> action;
    std::optional<std::size_t> row;
};

/// Checks every MdpSpec invariant and reports all of them; never throws.
[[nodiscard]] inline std::vector<Violation> validate_spec(const MdpSpec& spec) {
    std::vector<Violation> out;
    const std::size_t ns = spec.num_states;
    const std::size_t na = spec.num_actions;
    if (ns == 0) out.push_back({"num_states must be positive", {}, {}});
    if (na == 0) out.push_back({"num_actions must be positive", {}, {}});
    if (!(spec.beta >= 0.0 && spec.beta < 1.0)) {
        out.push_back({"discount out of range: beta must lie in [0, 1)", {}, {}});
    }
    if (spec.transitions.size() != na * ns * ns) {
        out.push_back({"transitions has " + std::to_string(spec.transitions.size()) + " entries, expected " +
                           std::to_string(na * ns * ns),
                       {}, {}});
    }
    if (spec.rewards.size() != ns * na) {
        out.push_back({"rewards has " + std::to_string(spec.rewards.size()) + " entries, expected " +
                           std::to_string(ns * na),
                       {}, {}});
    }
    if (!out.empty() && (spec.transitions.size() != na * ns * ns || spec.rewards.size() != ns * na)) {
        return out;
    }

    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t i = 0; i < ns; ++i) {
            double sum = 0.0;
            bool negative = false;
            bool finite = true;
            for (double x : spec.row(static_cast<ActionIndex>(a), static_cast<StateIndex>(i))) {
                if (!std::isfinite(x)) finite = false;
                if (x < 0.0) negative = true;
                sum += x;
            }
            const std::string where = " (action " + std::to_string(a) + ", row " + std::to_string(i) + ")";
            if (!finite) out.push_back({"non-finite transition probability" + where, a, i});
            if (negative) out.push_back({"negative transition probability" + where, a, i});
            if (finite && std::abs(sum - 1.0) > kBeliefTolerance) {
                out.push_back({"row sums to " + std::to_string(sum) + " instead of 1" + where, a, i});
            }
        }
    }
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < na; ++a) {
            const double x = spec.r(static_cast<StateIndex>(s), static_cast<ActionIndex>(a));
            if (!std::isfinite(x) || x < 0.0) {
                out.push_back({"reward must be finite and non-negative (state " + std::to_string(s) + ", action " +
                                   std::to_string(a) + ")",
                               a, s});
            }
        }
    }
    if (!spec.initial.empty()) {
        double sum = 0.0;
        bool bad = spec.initial.size() != ns;
        for (double x : spec.initial) {
            if (!(x >= 0.0)) bad = true;
            sum += x;
        }
        if (bad || std::abs(sum - 1.0) > kBeliefTolerance) {
            out.push_back({"initial distribution must have num_states non-negative entries summing to 1", {}, {}});
        }
    }
    return out;
}

/// Throws InvalidArgument listing every violation when the spec is malformed.
inline void require_valid(const MdpSpec& spec) {
    const auto violations = validate_spec(spec);
    if (violations.empty()) return;
    std::string msg = "invalid MDP specification:";
    for (const auto& v : violations) msg += "\n  " + v.message;
    throw InvalidArgument(msg);
}

/// bᵀ P_a v for a belief b, computed without forming P_aᵀ b.
[[nodiscard]] inline double expected_next_value(const MdpSpec& spec, std::span<const double> b, ActionIndex a,
                                                std::span<const double> v) {
    double total = 0.0;
    for (std::size_t i = 0; i < spec.num_states; ++i) {
        if (b[i] == 0.0) continue;
        double row_value = 0.0;
        const auto row = spec.row(a, static_cast<StateIndex>(i));
        for (std::size_t j = 0; j < spec.num_states; ++j) row_value += row[j] * v[j];
        total += b[i] * row_value;
    }
    return total;
}

/// Expected one-step reward Σ_s b(s) r(s, a).
[[nodiscard]] inline double expected_reward(const MdpSpec& spec, std::span<const double> b, ActionIndex a) {
    double total = 0.0;
    for (std::size_t s = 0; s < spec.num_states; ++s) total += b[s] * spec.r(static_cast<StateIndex>(s), a);
    return total;
}

/// Returned by solve_underlying.
struct UnderlyingSolution {
    ValueVector value;
    SolveStats stats;
};

/// Stopping threshold on successive iterates that guarantees an error of at most `tol`.
[[nodiscard]] inline double stopping_threshold(double tol, double beta) {
    return beta > 0.0 ? tol * (1.0 - beta) / (2.0 * beta) : tol;
}

/// Value iteration on the fully observed MDP.
///
/// Iterates V ← TV from zero until ‖V_{k+1} − V_k‖∞ ≤ tol·(1−β)/(2β), which
/// makes ‖V − V*‖∞ ≤ tol for the returned iterate.
[[nodiscard]] inline UnderlyingSolution solve_underlying(const MdpSpec& spec, double tol = 1e-9,
                                                         std::int64_t max_iter = 100000) {
    require_valid(spec);
    if (!(tol > 0.0)) throw InvalidArgument("solve_underlying: tol must be positive");
    const std::size_t ns = spec.num_states;
    const double threshold = stopping_threshold(tol, spec.beta);
    detail::Stopwatch clock;

    UnderlyingSolution out;
    std::vector<double> v(ns, 0.0), next(ns, 0.0);
    double sigma = std::numeric_limits<double>::infinity();
    for (std::int64_t it = 1; it <= max_iter; ++it) {
        sigma = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < spec.num_actions; ++a) {
                const auto row = spec.row(static_cast<ActionIndex>(a), static_cast<StateIndex>(s));
                double q = 0.0;
                for (std::size_t j = 0; j < ns; ++j) q += row[j] * v[j];
                q = spec.r(static_cast<StateIndex>(s), static_cast<ActionIndex>(a)) + spec.beta * q;
                best = std::max(best, q);
            }
            next[s] = best;
            sigma = std::max(sigma, std::abs(best - v[s]));
        }
        v.swap(next);
        out.stats.outer_iterations = it;
        out.stats.inner_iterations = it;
        out.stats.state_updates += ns;
        out.stats.residual_trace.push_back({it, it, ns, sigma, out.stats.state_updates, clock.seconds()});
        if (sigma <= threshold) {
            out.value.values = std::move(v);
            out.stats.wall_time = clock.seconds();
            return out;
        }
    }
    throw ConvergenceError("solve_underlying did not converge within " + std::to_string(max_iter) +
                               " iterations (last residual " + std::to_string(sigma) + ")",
                           sigma, max_iter);
}

/// J(θ) = Σ_s θ(s) V(s): value when the initial state is drawn from θ and observed.
[[nodiscard]] inline double j_value(const ValueVector& v, const Belief& theta) {
    if (v.size() != theta.size()) throw InvalidArgument("j_value: dimension mismatch");
    double total = 0.0;
    for (std::size_t s = 0; s < v.size(); ++s) total += theta[s] * v[s];
    return total;
}

namespace detail {

inline void check_dims(const MdpSpec& spec, const ValueVector& v, const Belief& b, const char* who) {
    if (v.size() != spec.num_states || b.size() != spec.num_states) {
        throw InvalidArgument(std::string(who) + ": dimension mismatch");
    }
}

}  // namespace detail

/// Greedy action of the perfectly observed controller facing belief b.
///
/// Maximizes Σ_s b(s) r(s,a) + β bᵀ P_a V, smallest index on ties.
[[nodiscard]] inline ActionIndex greedy_action_rho1(const MdpSpec& spec, const ValueVector& v, const Belief& b) {
    detail::check_dims(spec, v, b, "greedy_action_rho1");
    ActionIndex best_a = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (ActionIndex a = 0; a < spec.num_actions; ++a) {
        const double q = expected_reward(spec, b.probs, a) + spec.beta * expected_next_value(spec, b.probs, a, v.values);
        if (q > best) {
            best = q;
            best_a = a;
        }
    }
    return best_a;
}

/// Optimal value of a belief when every future observation is delivered.
///
/// One-hot beliefs return V(i) directly. Any other belief gets one blind
/// decision followed by full observability: max_a {Σ_s b(s)r(s,a) + β bᵀP_aV}.
[[nodiscard]] inline double phi_at_rho1(const MdpSpec& spec, const ValueVector& v, const Belief& b) {
    detail::check_dims(spec, v, b, "phi_at_rho1");
    if (const auto i = b.one_hot_index()) return v[*i];
    double best = -std::numeric_limits<double>::infinity();
    for (ActionIndex a = 0; a < spec.num_actions; ++a) {
        best = std::max(best, expected_reward(spec, b.probs, a) +
                                  spec.beta * expected_next_value(spec, b.probs, a, v.values));
    }
    return best;
}

}  // namespace iomdp
