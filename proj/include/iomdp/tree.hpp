#pragma once

#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "iomdp/error.hpp"
#include "iomdp/mdp.hpp"

namespace iomdp {

/// Sufficient history: the last observed state followed by every action
/// taken since. Histories are the states of the tree MDP; the number of
/// actions is the node's layer.
struct History {
    StateIndex root = 0;
    std::vector<ActionIndex> actions;

    [[nodiscard]] std::size_t layer() const noexcept { return actions.size(); }
    [[nodiscard]] bool is_root() const noexcept { return actions.empty(); }

    friend bool operator==(const History&, const History&) = default;
    friend auto operator<=>(const History&, const History&) = default;
};

/// Renders `s:u1,u2,...,un`; a root renders as just `s`.
[[nodiscard]] inline std::string to_string(const History& h) {
    std::string out = std::to_string(h.root);
    for (std::size_t k = 0; k < h.actions.size(); ++k) {
        out += (k == 0 ? ':' : ',');
        out += std::to_string(h.actions[k]);
    }
    return out;
}

/// Inverse of to_string. Accepts `s`, `s:` and `s:u1,...,un`.
[[nodiscard]] inline History parse_history(std::string_view text) {
    auto fail = [&] { return InvalidArgument("malformed history id '" + std::string(text) + "'"); };
    auto parse_uint = [&](std::string_view part) {
        std::uint32_t x = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), x);
        if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty()) throw fail();
        return x;
    };
    History h;
    const auto colon = text.find(':');
    h.root = parse_uint(text.substr(0, colon));
    if (colon == std::string_view::npos) return h;
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        h.actions.push_back(parse_uint(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
        if (rest.empty()) throw fail();
    }
    return h;
}

inline void require_valid_history(const MdpSpec& spec, const History& h) {
    if (h.root >= spec.num_states) throw InvalidArgument("history root out of range: " + to_string(h));
    for (ActionIndex a : h.actions) {
        if (a >= spec.num_actions) throw InvalidArgument("history action out of range: " + to_string(h));
    }
}

// Navigation

[[nodiscard]] inline History parent(const History& h) {
    if (h.is_root()) throw InvalidArgument("root history has no parent");
    History p = h;
    p.actions.pop_back();
    return p;
}

[[nodiscard]] inline History child(const History& h, ActionIndex a) {
    History c = h;
    c.actions.push_back(a);
    return c;
}

[[nodiscard]] inline std::vector<History> children(const History& h, std::size_t num_actions) {
    std::vector<History> out;
    out.reserve(num_actions);
    for (ActionIndex a = 0; a < num_actions; ++a) out.push_back(child(h, a));
    return out;
}

[[nodiscard]] inline History ancestor_at_layer(const History& h, std::size_t layer) {
    if (layer > h.layer()) {
        throw InvalidArgument("ancestor_at_layer: layer " + std::to_string(layer) + " is below node " + to_string(h));
    }
    History a;
    a.root = h.root;
    a.actions.assign(h.actions.begin(), h.actions.begin() + static_cast<std::ptrdiff_t>(layer));
    return a;
}

// Beliefs

/// P_aᵀ b: the state distribution one step after taking `a` under belief b.
[[nodiscard]] inline std::vector<double> propagate(const MdpSpec& spec, std::span<const double> b, ActionIndex a) {
    std::vector<double> out(spec.num_states, 0.0);
    for (std::size_t i = 0; i < spec.num_states; ++i) {
        if (b[i] == 0.0) continue;
        const auto row = spec.row(a, static_cast<StateIndex>(i));
        for (std::size_t j = 0; j < spec.num_states; ++j) out[j] += b[i] * row[j];
    }
    return out;
}

/// Belief of a history: P_{u_n}ᵀ ··· P_{u_1}ᵀ e_s.
[[nodiscard]] inline Belief belief_of(const MdpSpec& spec, const History& h) {
    require_valid_history(spec, h);
    Belief b = Belief::one_hot(spec.num_states, h.root);
    for (ActionIndex a : h.actions) b.probs = propagate(spec, b.probs, a);
    return b;
}

// Exact tree kernel

/// Successor of a tree-MDP transition. Root successors have no actions.
struct Successor {
    History next;
    double prob = 0.0;

    friend bool operator==(const Successor&, const Successor&) = default;
};

inline void require_valid_rho(double rho) {
    if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("rho must lie in (0, 1], got " + std::to_string(rho));
}

/// Transition row of the untruncated tree MDP from history h under action a.
///
/// Observation delivered (prob ρ): jump to root i with prob ρ·[P_aᵀ g(h)]_i.
/// Observation lost (prob 1−ρ): move to the child (h, a). Zero-probability
/// entries are omitted.
[[nodiscard]] inline std::vector<Successor> kernel_rows(const MdpSpec& spec, double rho, const History& h,
                                                        ActionIndex a) {
    require_valid_rho(rho);
    if (a >= spec.num_actions) throw InvalidArgument("kernel_rows: action out of range");
    const Belief b = belief_of(spec, h);
    const auto next = propagate(spec, b.probs, a);
    std::vector<Successor> out;
    for (std::size_t i = 0; i < spec.num_states; ++i) {
        const double p = rho * next[i];
        if (p != 0.0) out.push_back({History{static_cast<StateIndex>(i), {}}, p});
    }
    if (rho < 1.0) out.push_back({child(h, a), 1.0 - rho});
    return out;
}

}  // namespace iomdp
