#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iomdp/error.hpp"
#include "iomdp/mdp.hpp"
#include "iomdp/tree.hpp"
#include "iomdp/truncation.hpp"

namespace iomdp {

namespace detail {

inline void require_bound_params(double rho, double beta) {
    require_valid_rho(rho);
    if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in [0, 1)");
}

inline void require_layer(std::size_t L, std::size_t k) {
    if (k > L) throw InvalidArgument("layer index k=" + std::to_string(k) + " exceeds L=" + std::to_string(L));
}

}  // namespace detail

/// Expected discounted occupancy of the truncated layer of TA(L), starting
/// from a node in layer k:
///
///   Σ_{t=L−k}^{L−1} βᵗ(1−ρ)ᵗ + β^L (1−ρ)^L / (1−β).
///
/// Does not depend on the policy.
[[nodiscard]] inline double discounted_visit_weight(std::size_t L, std::size_t k, double rho, double beta) {
    detail::require_bound_params(rho, beta);
    detail::require_layer(L, k);
    const double x = beta * (1.0 - rho);
    double total = std::pow(x, static_cast<double>(L)) / (1.0 - beta);
    for (std::size_t t = L - k; t < L; ++t) total += std::pow(x, static_cast<double>(t));
    return total;
}

/// Worst-case gap between TA(L) values and the exact tree-MDP values on
/// layer k, for δ an upper bound on the optimal values at layers L and L+1.
[[nodiscard]] inline double ta_error_bound(std::size_t L, std::size_t k, double rho, double beta, double delta) {
    detail::require_bound_params(rho, beta);
    detail::require_layer(L, k);
    if (!(delta >= 0.0)) throw InvalidArgument("delta must be non-negative");
    const double x = beta * (1.0 - rho);
    double total = std::pow(x, static_cast<double>(L + 1)) / (1.0 - beta);
    for (std::size_t t = L - k; t < L; ++t) total += std::pow(x, static_cast<double>(t + 1));
    return delta * total;
}

/// Rmax / (1 − β): bounds every optimal value of every formulation.
[[nodiscard]] inline double value_upper_bound(const MdpSpec& spec) {
    require_valid(spec);
    return spec.max_reward() / (1.0 - spec.beta);
}

/// How δ is obtained for the error bounds.
enum class DeltaMode { reward_cap, empirical };

[[nodiscard]] inline std::string to_string(DeltaMode mode) {
    return mode == DeltaMode::reward_cap ? "rmax" : "empirical";
}

/// Largest value over layers [first, last] of a solved model; a tight
/// surrogate for δ when the model is much deeper than the one being bounded.
[[nodiscard]] inline double empirical_delta(const TruncatedModel& model, std::span<const double> values,
                                            std::size_t first_layer, std::size_t last_layer) {
    if (values.size() != model.size()) throw InvalidArgument("empirical_delta: one value per state required");
    double best = 0.0;
    for (std::size_t l = first_layer; l <= last_layer; ++l) {
        const auto [begin, end] = model.layer_range(l);
        for (std::size_t i = begin; i < end; ++i) best = std::max(best, values[i]);
    }
    return best;
}

/// Left side of the depth condition for exact high-order policies:
/// δ·(β^{L+1}(1−ρ)^{L+1}/(1−β) + β^L(1−ρ)^L).
[[nodiscard]] inline double depth_condition_lhs(std::size_t L, double delta, double rho, double beta) {
    detail::require_bound_params(rho, beta);
    const double x = beta * (1.0 - rho);
    return delta * (std::pow(x, static_cast<double>(L + 1)) / (1.0 - beta) + std::pow(x, static_cast<double>(L)));
}

/// No depth up to the limit satisfies the depth condition.
class DepthNotFound : public Error {
public:
    DepthNotFound(const std::string& what, double residual) : Error(what), residual_(residual) {}
    [[nodiscard]] double residual_at_limit() const noexcept { return residual_; }

private:
    double residual_;
};

/// Smallest L ≥ 1 whose depth-condition left side is at most epsilon_n.
///
/// epsilon_n is the caller's estimate of half the smallest action gap over
/// layers 0..n; it cannot be computed without the exact Q-function.
[[nodiscard]] inline std::size_t choose_truncation_depth(std::size_t n, double epsilon_n, double delta, double rho,
                                                         double beta, std::size_t L_max = 64) {
    (void)n;  // δ(n, L) already reflects n; kept for call-site symmetry
    if (!(epsilon_n > 0.0)) throw InvalidArgument("epsilon_n must be positive");
    if (!(delta >= 0.0)) throw InvalidArgument("delta must be non-negative");
    for (std::size_t L = 1; L <= L_max; ++L) {
        if (depth_condition_lhs(L, delta, rho, beta) <= epsilon_n) return L;
    }
    const double residual = depth_condition_lhs(L_max, delta, rho, beta);
    throw DepthNotFound("no truncation depth up to " + std::to_string(L_max) + " meets epsilon_n (left side " +
                            std::to_string(residual) + " at the limit)",
                        residual);
}

/// Regret bound per root state, with the mass it could miss.
struct RegretBound {
    std::vector<double> per_root;
    /// Upper bound on what the finite tree and the finite Neumann sum leave out.
    double tail_bound = 0.0;
    std::size_t neumann_terms = 0;
};

/// Bound on the value lost to observation failures, φ[1] − φ[ρ], at each root.
///
/// Applies the fully observed greedy policy π₁ to the lossy problem. Along
/// each root's π₁ chain τ_k = P_{π₁(b_k)}ᵀ b_k, the per-node regret is
/// η = β(1−ρ)[J(τ) − φ(τ,1)]; the bound is (I − βT)^{-1}η evaluated by a
/// truncated Neumann sum on the chain nodes down to `depth`. Mass leaving
/// the chain below `depth` is dropped, so the result is an under-estimate
/// by at most `tail_bound`.
[[nodiscard]] inline RegretBound regret_bound(const MdpSpec& spec, double rho, std::size_t depth,
                                              std::uint64_t cap = state_cap_from_env()) {
    require_valid(spec);
    require_valid_rho(rho);
    if (depth < 1) throw InvalidArgument("regret_bound: depth must be at least 1");
    const std::size_t ns = spec.num_states;
    const std::size_t per_root = depth + 1;
    const std::uint64_t nodes = detail::checked_mul(ns, per_root);
    if (nodes > cap) throw CapacityError("regret_bound: chain tree exceeds the state cap", nodes, cap);

    const ValueVector v = solve_underlying(spec, 1e-12).value;
    const double beta = spec.beta;

    std::vector<double> eta(ns * per_root, 0.0);
    std::vector<std::vector<double>> tau(ns * per_root);
    for (std::size_t s = 0; s < ns; ++s) {
        Belief b = Belief::one_hot(ns, static_cast<StateIndex>(s));
        for (std::size_t k = 0; k < per_root; ++k) {
            const ActionIndex a = greedy_action_rho1(spec, v, b);
            Belief next{propagate(spec, b.probs, a)};
            const double regret = j_value(v, next) - phi_at_rho1(spec, v, next);
            eta[s * per_root + k] = beta * (1.0 - rho) * std::max(0.0, regret);
            tau[s * per_root + k] = next.probs;
            b = std::move(next);
        }
    }

    RegretBound out;
    const double eta_max = *std::max_element(eta.begin(), eta.end());
    std::vector<double> x = eta;
    if (eta_max > 0.0 && beta > 0.0) {
        // β^T·max η/(1−β) < 1e-9
        std::size_t terms = 0;
        while (std::pow(beta, static_cast<double>(terms)) * eta_max / (1.0 - beta) >= 1e-9) ++terms;
        std::vector<double> next(x.size());
        for (std::size_t t = 0; t < terms; ++t) {
            for (std::size_t s = 0; s < ns; ++s) {
                for (std::size_t k = 0; k < per_root; ++k) {
                    const std::size_t idx = s * per_root + k;
                    double acc = 0.0;
                    for (std::size_t i = 0; i < ns; ++i) acc += tau[idx][i] * x[i * per_root];
                    acc *= rho;
                    if (k + 1 < per_root) acc += (1.0 - rho) * x[idx + 1];
                    next[idx] = eta[idx] + beta * acc;
                }
            }
            x.swap(next);
        }
        out.neumann_terms = terms;
    }
    for (std::size_t s = 0; s < ns; ++s) out.per_root.push_back(x[s * per_root]);

    // Discounted time spent below `depth` is at most (β(1−ρ))^{depth+1}/(1−β),
    // and η never exceeds β(1−ρ)·Rmax/(1−β).
    const double x_fail = beta * (1.0 - rho);
    const double eta_cap = x_fail * spec.max_reward() / (1.0 - beta);
    out.tail_bound = std::pow(x_fail, static_cast<double>(depth + 1)) / (1.0 - beta) * eta_cap + 1e-9;
    return out;
}

}  // namespace iomdp
