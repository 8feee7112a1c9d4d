#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "iomdp/error.hpp"
#include "iomdp/mdp.hpp"
#include "iomdp/rng.hpp"
#include "iomdp/tree.hpp"
#include "iomdp/truncation.hpp"

namespace iomdp {

inline constexpr std::size_t kDefaultHorizon = 400;

/// Bernoulli erasure channel: each observation is delivered with prob ρ.
class Channel {
public:
    Channel(double rho, std::uint64_t seed) : rho_(rho), rng_(seed) { require_valid_rho(rho); }

    /// γ_t: true when the observation gets through.
    bool deliver() noexcept { return rng_.uniform() < rho_; }
    [[nodiscard]] double rho() const noexcept { return rho_; }

private:
    double rho_;
    SplitMix64 rng_;
};

/// Index j with the cumulative row mass first exceeding u.
[[nodiscard]] inline StateIndex sample_index(std::span<const double> probs, double u) {
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] <= 0.0) continue;
        acc += probs[j];
        last = j;
        if (u < acc) return static_cast<StateIndex>(j);
    }
    return static_cast<StateIndex>(last);  // rounding slack at the top of the CDF
}

struct RolloutResult {
    double discounted_return = 0.0;
    std::size_t steps = 0;
    std::size_t observations_received = 0;
    std::size_t max_layer_reached = 0;

    friend bool operator==(const RolloutResult&, const RolloutResult&) = default;
};

struct StepRecord {
    std::size_t t = 0;
    StateIndex state = 0;
    ActionIndex action = 0;
    std::size_t layer = 0;
    /// Whether s_{t+1} was observed.
    bool delivered = false;
};

/// One trajectory of the policy on the lossy-observation system.
///
/// s_0 is drawn from the spec's initial distribution (or fixed by `start`)
/// and observed. At each step the action comes from the policy's view of the
/// history, the reward is discounted by β^t, s_{t+1} is sampled from the
/// kernel, and the channel decides whether s_{t+1} reaches the controller.
[[nodiscard]] inline RolloutResult rollout(const MdpSpec& spec, const Policy& policy, double rho, std::size_t horizon,
                                           std::uint64_t seed, std::optional<StateIndex> start = std::nullopt,
                                           std::vector<StepRecord>* trace = nullptr) {
    require_valid_rho(rho);
    if (horizon < 1) throw InvalidArgument("rollout: horizon must be at least 1");
    if (policy.num_roots() != spec.num_states || policy.num_actions() != spec.num_actions) {
        throw InvalidArgument("rollout: policy does not match the spec's dimensions");
    }
    SplitMix64 dynamics(substream(seed, 1));
    Channel channel(rho, substream(seed, 2));

    StateIndex s = 0;
    if (start) {
        if (*start >= spec.num_states) throw InvalidArgument("rollout: start state out of range");
        s = *start;
    } else {
        const auto init = spec.initial_distribution();
        s = sample_index(init, dynamics.uniform());
    }

    PolicyCursor cursor(policy);
    cursor.observe(s);
    RolloutResult out;
    out.observations_received = 1;
    double discount = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const ActionIndex a = cursor.action();
        out.discounted_return += discount * spec.r(s, a);
        discount *= spec.beta;
        const StateIndex next = sample_index(spec.row(a, s), dynamics.uniform());
        ++out.steps;
        bool delivered = false;
        if (t + 1 < horizon) {
            delivered = channel.deliver();
            if (delivered) {
                cursor.observe(next);
                ++out.observations_received;
            } else {
                cursor.lost(a);
                out.max_layer_reached = std::max(out.max_layer_reached, cursor.layer());
            }
        }
        if (trace) trace->push_back({t, s, a, cursor.layer(), delivered});
        s = next;
    }
    return out;
}

struct Evaluation {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::vector<std::uint64_t> seeds;
    std::vector<RolloutResult> runs;
};

/// Monte Carlo estimate of a policy's expected discounted return.
///
/// Run r uses seed substream(seed, r + 1). With threads > 1 the runs are
/// split across workers, but the mean is always summed in run order, so the
/// result does not depend on the thread count. `start` pins s_0 instead of
/// drawing it from the initial distribution.
[[nodiscard]] inline Evaluation evaluate_policy(const MdpSpec& spec, const Policy& policy, double rho,
                                                std::size_t horizon, std::size_t runs, std::uint64_t seed,
                                                unsigned threads = 1,
                                                std::optional<StateIndex> start = std::nullopt) {
    if (runs < 1) throw InvalidArgument("evaluate_policy: runs must be at least 1");
    require_valid(spec);
    Evaluation ev;
    ev.seeds.resize(runs);
    ev.runs.resize(runs);
    for (std::size_t r = 0; r < runs; ++r) ev.seeds[r] = substream(seed, r + 1);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) ev.runs[r] = rollout(spec, policy, rho, horizon, ev.seeds[r], start);
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(runs)));
    if (threads == 1) {
        work(0, runs);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (runs + threads - 1) / threads;
        for (std::size_t begin = 0; begin < runs; begin += chunk) {
            pool.emplace_back(work, begin, std::min(runs, begin + chunk));
        }
    }

    double sum = 0.0;
    for (const auto& r : ev.runs) sum += r.discounted_return;
    ev.mean = sum / static_cast<double>(runs);
    if (runs > 1) {
        double ss = 0.0;
        for (const auto& r : ev.runs) ss += (r.discounted_return - ev.mean) * (r.discounted_return - ev.mean);
        ev.stderr_ = std::sqrt(ss / static_cast<double>(runs - 1) / static_cast<double>(runs));
    }
    return ev;
}

/// β^H·Rmax/(1−β): what a horizon-H rollout can miss of the infinite return.
[[nodiscard]] inline double horizon_tail_bound(const MdpSpec& spec, std::size_t horizon) {
    return std::pow(spec.beta, static_cast<double>(horizon)) * spec.max_reward() / (1.0 - spec.beta);
}

/// Exact infinite-horizon value of deploying `policy` on the lossy system,
/// per observed root state.
///
/// Between observations the controller follows a single action chain from
/// the last observed root, so with x = β(1−ρ) and b_k, a_k the chain's
/// beliefs and actions,
///
///   W(s) = Σ_k x^k [r(b_k, a_k) + βρ Σ_i (P_{a_k}ᵀ b_k)_i W(i)].
///
/// The chain is cut once x^k·Rmax/(1−β) drops below `tol`.
[[nodiscard]] inline std::vector<double> exact_policy_value(const MdpSpec& spec, const Policy& policy, double rho,
                                                            double tol = 1e-12) {
    require_valid(spec);
    require_valid_rho(rho);
    const std::size_t ns = spec.num_states;
    const double beta = spec.beta;
    const double x = beta * (1.0 - rho);
    const double scale = std::max(spec.max_reward(), 1.0) / (1.0 - beta);
    std::size_t depth = 1;
    if (x > 0.0) {
        double w = 1.0;
        while (w * scale >= tol && depth < 100000) {
            w *= x;
            ++depth;
        }
    }

    std::vector<double> c(ns, 0.0);
    std::vector<double> m(ns * ns, 0.0);  // m[s*ns + i]
    for (std::size_t s = 0; s < ns; ++s) {
        PolicyCursor cursor(policy);
        cursor.observe(static_cast<StateIndex>(s));
        std::vector<double> b(ns, 0.0);
        b[s] = 1.0;
        double w = 1.0;
        for (std::size_t k = 0; k < depth; ++k) {
            const ActionIndex a = cursor.action();
            c[s] += w * expected_reward(spec, b, a);
            auto next = propagate(spec, b, a);
            for (std::size_t i = 0; i < ns; ++i) m[s * ns + i] += w * beta * rho * next[i];
            b = std::move(next);
            cursor.lost(a);
            w *= x;
            if (w == 0.0) break;
        }
    }

    // W = c + M W, a β-contraction in sup norm.
    std::vector<double> v(ns, 0.0), nv(ns);
    const double thr = stopping_threshold(tol, beta);
    for (std::size_t it = 0; it < 1000000; ++it) {
        double diff = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            double acc = c[s];
            for (std::size_t i = 0; i < ns; ++i) acc += m[s * ns + i] * v[i];
            nv[s] = acc;
            diff = std::max(diff, std::abs(acc - v[s]));
        }
        v.swap(nv);
        if (diff <= thr) break;
    }
    return v;
}

/// Initial-distribution average of exact_policy_value.
[[nodiscard]] inline double exact_policy_mean(const MdpSpec& spec, const Policy& policy, double rho,
                                              double tol = 1e-12) {
    const auto w = exact_policy_value(spec, policy, rho, tol);
    const auto init = spec.initial_distribution();
    double out = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) out += init[s] * w[s];
    return out;
}

}  // namespace iomdp
