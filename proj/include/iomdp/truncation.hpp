#pragma once

#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iomdp/error.hpp"
#include "iomdp/mdp.hpp"
#include "iomdp/tree.hpp"

namespace iomdp {

inline constexpr std::uint32_t kNoNode = std::numeric_limits<std::uint32_t>::max();

/// Default ceiling on the number of states a truncated model may have.
inline constexpr std::uint64_t kDefaultStateCap = 5'000'000;

/// State cap in force: `IOMDP_STATE_CAP` when set to a positive integer, else the default.
[[nodiscard]] inline std::uint64_t state_cap_from_env() {
    if (const char* env = std::getenv("IOMDP_STATE_CAP")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return v;
    }
    return kDefaultStateCap;
}

enum class ModelKind { truncated, high_order };

/// Which approximation a model (or a policy extracted from it) realizes.
/// `truncated` is TA(L) with n = 0; `high_order` is TA(n, L).
struct ModelShape {
    ModelKind kind = ModelKind::truncated;
    std::size_t L = 0;
    std::size_t n = 0;

    [[nodiscard]] std::size_t boundary_layer() const noexcept { return L + n; }
    friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

[[nodiscard]] inline std::string to_string(ModelKind kind) {
    return kind == ModelKind::truncated ? "ta" : "hota";
}

[[nodiscard]] inline std::string describe(const ModelShape& shape) {
    if (shape.kind == ModelKind::truncated) return "TA(" + std::to_string(shape.L) + ")";
    return "TA(" + std::to_string(shape.n) + "," + std::to_string(shape.L) + ")";
}

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
        throw CapacityError("state count overflows 64 bits", std::numeric_limits<std::uint64_t>::max(),
                            std::numeric_limits<std::uint64_t>::max());
    }
    return a * b;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    if (b > std::numeric_limits<std::uint64_t>::max() - a) {
        throw CapacityError("state count overflows 64 bits", std::numeric_limits<std::uint64_t>::max(),
                            std::numeric_limits<std::uint64_t>::max());
    }
    return a + b;
}

/// 1 + A + A² + ... + A^L
inline std::uint64_t geometric_nodes(std::uint64_t num_actions, std::uint64_t L) {
    std::uint64_t total = 0;
    std::uint64_t power = 1;
    for (std::uint64_t l = 0; l <= L; ++l) {
        total = checked_add(total, power);
        if (l < L) power = checked_mul(power, num_actions);
    }
    return total;
}

inline std::uint64_t ipow(std::uint64_t base, std::uint64_t exp) {
    std::uint64_t out = 1;
    for (std::uint64_t i = 0; i < exp; ++i) out = checked_mul(out, base);
    return out;
}

}  // namespace detail

/// Exact number of states of TA(L) or TA(n, L).
///
/// TA(L) has |S|·(|A|^{L+1} − 1)/(|A| − 1) states (|S|·(L+1) when |A| = 1);
/// TA(n, L) adds |S| per order: |S|·((|A|^{L+1} − 1)/(|A| − 1) + n).
/// Throws CapacityError on 64-bit overflow instead of wrapping.
[[nodiscard]] inline std::uint64_t state_count(ModelKind kind, std::uint64_t num_states, std::uint64_t num_actions,
                                               std::uint64_t L, std::uint64_t n = 0) {
    if (num_actions == 0) throw InvalidArgument("state_count: num_actions must be positive");
    std::uint64_t per_root = detail::geometric_nodes(num_actions, L);
    if (kind == ModelKind::high_order) per_root = detail::checked_add(per_root, n);
    return detail::checked_mul(num_states, per_root);
}

/// Closed-form index of a history inside a complete tree of depth ≥ its layer.
///
/// Layer-major breadth-first: roots take 0..|S|−1, then layer 1 in
/// (root, action) order, and so on. The children of a node are contiguous.
namespace node_ref {

[[nodiscard]] inline std::uint64_t layer_offset(std::uint64_t num_states, std::uint64_t num_actions,
                                                std::uint64_t layer) {
    return layer == 0 ? 0 : state_count(ModelKind::truncated, num_states, num_actions, layer - 1);
}

[[nodiscard]] inline std::uint64_t encode(const History& h, std::uint64_t num_states, std::uint64_t num_actions) {
    std::uint64_t pos = h.root;
    for (ActionIndex a : h.actions) pos = detail::checked_add(detail::checked_mul(pos, num_actions), a);
    return detail::checked_add(layer_offset(num_states, num_actions, h.layer()), pos);
}

[[nodiscard]] inline History decode(std::uint64_t index, std::uint64_t num_states, std::uint64_t num_actions) {
    std::uint64_t layer = 0;
    while (index >= layer_offset(num_states, num_actions, layer + 1)) ++layer;
    std::uint64_t pos = index - layer_offset(num_states, num_actions, layer);
    History h;
    h.actions.resize(layer);
    for (std::uint64_t k = layer; k-- > 0;) {
        h.actions[k] = static_cast<ActionIndex>(pos % num_actions);
        pos /= num_actions;
    }
    h.root = static_cast<StateIndex>(pos);
    return h;
}

[[nodiscard]] inline std::uint64_t parent(std::uint64_t index, std::uint64_t num_states, std::uint64_t num_actions) {
    History h = decode(index, num_states, num_actions);
    if (h.is_root()) throw InvalidArgument("node_ref::parent of a root");
    h.actions.pop_back();
    return encode(h, num_states, num_actions);
}

[[nodiscard]] inline std::uint64_t first_child(std::uint64_t index, std::uint64_t num_states,
                                               std::uint64_t num_actions) {
    History h = decode(index, num_states, num_actions);
    h.actions.push_back(0);
    return encode(h, num_states, num_actions);
}

}  // namespace node_ref

/// Prefix tree over histories: the state enumeration shared by truncated
/// models and the policies extracted from them.
class NodeTable {
public:
    NodeTable() = default;
    NodeTable(std::size_t num_roots, std::size_t num_actions) : num_roots_(num_roots), num_actions_(num_actions) {
        for (std::size_t s = 0; s < num_roots; ++s) push(kNoNode, 0, 0, static_cast<StateIndex>(s));
    }

    [[nodiscard]] std::size_t size() const noexcept { return layer_.size(); }
    [[nodiscard]] std::size_t num_roots() const noexcept { return num_roots_; }
    [[nodiscard]] std::size_t num_actions() const noexcept { return num_actions_; }

    [[nodiscard]] std::size_t layer(std::size_t i) const { return layer_[i]; }
    [[nodiscard]] std::uint32_t parent(std::size_t i) const { return parent_[i]; }
    [[nodiscard]] ActionIndex last_action(std::size_t i) const { return last_action_[i]; }
    [[nodiscard]] StateIndex root(std::size_t i) const { return root_[i]; }

    [[nodiscard]] std::optional<std::size_t> child(std::size_t i, ActionIndex a) const {
        const std::uint32_t c = children_[i * num_actions_ + a];
        if (c == kNoNode) return std::nullopt;
        return c;
    }

    /// Appends (i, a) and returns its index.
    std::size_t add_child(std::size_t i, ActionIndex a) {
        if (children_[i * num_actions_ + a] != kNoNode) throw InvalidArgument("duplicate node in NodeTable");
        const auto idx = size();
        if (idx >= kNoNode) throw CapacityError("node table exceeds 32-bit indexing", idx, kNoNode);
        push(static_cast<std::uint32_t>(i), a, layer_[i] + 1, root_[i]);
        children_[i * num_actions_ + a] = static_cast<std::uint32_t>(idx);
        return idx;
    }

    [[nodiscard]] History history(std::size_t i) const {
        History h;
        h.root = root_[i];
        h.actions.resize(layer_[i]);
        for (std::size_t node = i, k = layer_[i]; k-- > 0; node = parent_[node]) h.actions[k] = last_action_[node];
        return h;
    }

    /// Deepest node on the path of h, and how many of h's actions it consumed.
    [[nodiscard]] std::pair<std::size_t, std::size_t> deepest_ancestor(const History& h) const {
        if (h.root >= num_roots_) throw InvalidArgument("history root out of range: " + to_string(h));
        std::size_t node = h.root;
        std::size_t depth = 0;
        for (ActionIndex a : h.actions) {
            if (a >= num_actions_) throw InvalidArgument("history action out of range: " + to_string(h));
            const auto c = child(node, a);
            if (!c) break;
            node = *c;
            ++depth;
        }
        return {node, depth};
    }

    [[nodiscard]] std::optional<std::size_t> find(const History& h) const {
        const auto [node, depth] = deepest_ancestor(h);
        if (depth != h.layer()) return std::nullopt;
        return node;
    }

private:
    void push(std::uint32_t parent, ActionIndex a, std::size_t layer, StateIndex root) {
        parent_.push_back(parent);
        last_action_.push_back(a);
        layer_.push_back(static_cast<std::uint32_t>(layer));
        root_.push_back(root);
        children_.insert(children_.end(), num_actions_, kNoNode);
    }

    std::size_t num_roots_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<std::uint32_t> parent_;
    std::vector<ActionIndex> last_action_;
    std::vector<std::uint32_t> layer_;
    std::vector<StateIndex> root_;
    std::vector<std::uint32_t> children_;
};

/// Sparse transition entry of a truncated model.
struct KernelEntry {
    std::uint32_t target = 0;
    double prob = 0.0;
};

class TruncatedModel;
struct FrozenPrefix;

namespace detail {
TruncatedModel assemble(const MdpSpec& spec, double rho, ModelShape shape, NodeTable nodes,
                        std::vector<std::optional<ActionIndex>> fixed_action);
}

/// Finite MDP over an enumerated set of tree nodes: TA(L) or TA(n, L).
///
/// States are layer-major, so every root i has index i and each layer is a
/// contiguous index range. Each (state, allowed action) pair owns one
/// sparse kernel row and one expected reward. Boundary states (the deepest
/// layer) replace the move to their child with a self-loop.
class TruncatedModel {
public:
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::size_t num_roots() const noexcept { return nodes_.num_roots(); }
    [[nodiscard]] std::size_t num_actions() const noexcept { return nodes_.num_actions(); }
    [[nodiscard]] double rho() const noexcept { return rho_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] const ModelShape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t boundary_layer() const noexcept { return shape_.boundary_layer(); }
    [[nodiscard]] const NodeTable& nodes() const noexcept { return nodes_; }

    [[nodiscard]] std::size_t layer(std::size_t i) const { return nodes_.layer(i); }
    [[nodiscard]] bool boundary(std::size_t i) const { return nodes_.layer(i) == boundary_layer(); }
    [[nodiscard]] bool frozen(std::size_t i) const { return frozen_[i] != 0; }
    [[nodiscard]] History history(std::size_t i) const { return nodes_.history(i); }
    [[nodiscard]] std::optional<std::size_t> find(const History& h) const { return nodes_.find(h); }

    /// First index of `layer` and one past its last (empty range when absent).
    [[nodiscard]] std::pair<std::size_t, std::size_t> layer_range(std::size_t layer) const {
        if (layer + 1 >= layer_begin_.size()) return {size(), size()};
        return {layer_begin_[layer], layer_begin_[layer + 1]};
    }

    [[nodiscard]] std::span<const ActionIndex> actions(std::size_t i) const {
        return {allowed_.data() + slot_begin_[i], slot_begin_[i + 1] - slot_begin_[i]};
    }
    /// Global slot index of the k-th allowed action of state i.
    [[nodiscard]] std::size_t slot(std::size_t i, std::size_t k) const { return slot_begin_[i] + k; }
    [[nodiscard]] std::span<const KernelEntry> row(std::size_t slot) const {
        return {entries_.data() + row_begin_[slot], row_begin_[slot + 1] - row_begin_[slot]};
    }
    [[nodiscard]] double reward(std::size_t slot) const { return reward_[slot]; }
    [[nodiscard]] std::span<const double> belief(std::size_t i) const {
        return {beliefs_.data() + i * num_roots(), num_roots()};
    }

    /// One-step lookahead value of the slot under `values`.
    [[nodiscard]] double q_value(std::size_t slot, std::span<const double> values) const {
        double acc = 0.0;
        for (const auto& e : row(slot)) acc += e.prob * values[e.target];
        return reward_[slot] + beta_ * acc;
    }

    [[nodiscard]] std::size_t num_kernel_entries() const noexcept { return entries_.size(); }

private:
    friend TruncatedModel detail::assemble(const MdpSpec&, double, ModelShape, NodeTable,
                                           std::vector<std::optional<ActionIndex>>);

    NodeTable nodes_;
    double rho_ = 1.0;
    double beta_ = 0.0;
    ModelShape shape_;
    std::vector<std::uint8_t> frozen_;
    std::vector<std::size_t> layer_begin_;
    std::vector<std::size_t> slot_begin_;
    std::vector<ActionIndex> allowed_;
    std::vector<std::size_t> row_begin_;
    std::vector<KernelEntry> entries_;
    std::vector<double> reward_;
    std::vector<double> beliefs_;
};

namespace detail {

inline void check_capacity(std::uint64_t predicted, std::uint64_t cap, const ModelShape& shape) {
    if (predicted > cap) {
        throw CapacityError(describe(shape) + " would have " + std::to_string(predicted) +
                                " states, above the cap of " + std::to_string(cap) +
                                " (raise IOMDP_STATE_CAP to allow it)",
                            predicted, cap);
    }
}

inline TruncatedModel assemble(const MdpSpec& spec, double rho, ModelShape shape, NodeTable table,
                               std::vector<std::optional<ActionIndex>> fixed_action) {
    const std::size_t ns = spec.num_states;
    const std::size_t na = spec.num_actions;
    TruncatedModel m;
    // belief() reads the table's dimensions, so it goes in first
    m.nodes_ = std::move(table);
    const NodeTable& nodes = m.nodes_;
    m.rho_ = rho;
    m.beta_ = spec.beta;
    m.shape_ = shape;
    const std::size_t count = nodes.size();

    m.beliefs_.assign(count * ns, 0.0);
    m.frozen_.assign(count, 0);
    m.layer_begin_.assign(1, 0);
    m.slot_begin_.reserve(count + 1);
    m.slot_begin_.push_back(0);
    m.row_begin_.push_back(0);

    for (std::size_t i = 0; i < count; ++i) {
        std::span<double> b{m.beliefs_.data() + i * ns, ns};
        if (nodes.layer(i) == 0) {
            b[nodes.root(i)] = 1.0;
        } else {
            const auto next = propagate(spec, m.belief(nodes.parent(i)), nodes.last_action(i));
            std::copy(next.begin(), next.end(), b.begin());
        }
        while (m.layer_begin_.size() <= nodes.layer(i)) m.layer_begin_.push_back(i);
    }
    m.layer_begin_.push_back(count);

    const bool has_child_mass = rho < 1.0;
    for (std::size_t i = 0; i < count; ++i) {
        const bool is_boundary = nodes.layer(i) == shape.boundary_layer();
        std::vector<ActionIndex> allowed;
        if (fixed_action[i]) {
            allowed.push_back(*fixed_action[i]);
            m.frozen_[i] = 1;
        } else {
            for (ActionIndex a = 0; a < na; ++a) allowed.push_back(a);
        }
        for (ActionIndex a : allowed) {
            m.allowed_.push_back(a);
            const auto b = m.belief(i);
            m.reward_.push_back(expected_reward(spec, b, a));
            const auto next = propagate(spec, b, a);
            const std::size_t row_start = m.entries_.size();
            for (std::size_t r = 0; r < ns; ++r) {
                if (next[r] != 0.0) m.entries_.push_back({static_cast<std::uint32_t>(r), rho * next[r]});
            }
            if (has_child_mass) {
                std::size_t target = i;
                if (!is_boundary) {
                    const auto c = nodes.child(i, a);
                    if (!c) throw InvalidArgument("truncated model is missing child " + to_string(child(nodes.history(i), a)));
                    target = *c;
                }
                bool merged = false;
                for (std::size_t e = row_start; e < m.entries_.size(); ++e) {
                    if (m.entries_[e].target == target) {
                        m.entries_[e].prob += 1.0 - rho;
                        merged = true;
                    }
                }
                if (!merged) m.entries_.push_back({static_cast<std::uint32_t>(target), 1.0 - rho});
            }
            m.row_begin_.push_back(m.entries_.size());
        }
        m.slot_begin_.push_back(m.allowed_.size());
    }
    return m;
}

}  // namespace detail

/// Builds TA(L): every history up to layer L, with layer L truncated.
///
/// Throws CapacityError when the predicted state count exceeds `cap`.
[[nodiscard]] inline TruncatedModel build_ta(const MdpSpec& spec, double rho, std::size_t L,
                                             std::uint64_t cap = state_cap_from_env()) {
    require_valid(spec);
    require_valid_rho(rho);
    const ModelShape shape{ModelKind::truncated, L, 0};
    detail::check_capacity(state_count(ModelKind::truncated, spec.num_states, spec.num_actions, L), cap, shape);

    NodeTable nodes(spec.num_states, spec.num_actions);
    std::size_t layer_start = 0;
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t layer_end = nodes.size();
        for (std::size_t i = layer_start; i < layer_end; ++i) {
            for (ActionIndex a = 0; a < spec.num_actions; ++a) nodes.add_child(i, a);
        }
        layer_start = layer_end;
    }
    std::vector<std::optional<ActionIndex>> fixed(nodes.size());
    return detail::assemble(spec, rho, shape, std::move(nodes), std::move(fixed));
}

/// Reachable fronts Z_0, ..., Z_k under a deterministic policy.
///
/// Z_0 holds every root in index order. Member j of Z_{i+1} is the child of
/// member j of Z_i under that member's action, so |Z_i| = |S| throughout.
struct ReachableFront {
    std::vector<std::vector<History>> fronts;
};

/// Z_0: every root, in index order.
[[nodiscard]] inline std::vector<History> root_front(std::size_t num_states) {
    std::vector<History> z;
    z.reserve(num_states);
    for (std::size_t s = 0; s < num_states; ++s) z.push_back(History{static_cast<StateIndex>(s), {}});
    return z;
}

/// Z_{i+1} = {(h, μ(h)) : h ∈ Z_i}, given one action per member of Z_i.
[[nodiscard]] inline std::vector<History> reachable_front(std::span<const History> front,
                                                          std::span<const ActionIndex> actions) {
    if (actions.size() != front.size()) {
        throw InvalidArgument("reachable_front: expected " + std::to_string(front.size()) + " actions, got " +
                              std::to_string(actions.size()));
    }
    std::vector<History> next;
    next.reserve(front.size());
    for (std::size_t j = 0; j < front.size(); ++j) next.push_back(child(front[j], actions[j]));
    return next;
}

/// Frozen part of a TA(n, L) model: Z_0..Z_{n−1} and their fixed actions.
struct FrozenPrefix {
    ReachableFront front;
    std::vector<std::vector<ActionIndex>> actions;

    [[nodiscard]] std::size_t order() const noexcept { return front.fronts.size(); }
};

/// Builds TA(n, L) on top of a frozen prefix of order n.
///
/// States: Z_0..Z_n followed by every descendant of Z_n down to layer n + L.
/// States in Z_0..Z_{n−1} keep their frozen action only. n = 0 is TA(L).
[[nodiscard]] inline TruncatedModel build_hota(const MdpSpec& spec, double rho, std::size_t L,
                                               const FrozenPrefix& frozen,
                                               std::uint64_t cap = state_cap_from_env()) {
    const std::size_t n = frozen.order();
    if (n == 0) return build_ta(spec, rho, L, cap);
    require_valid(spec);
    require_valid_rho(rho);
    const std::size_t ns = spec.num_states;
    const ModelShape shape{ModelKind::high_order, L, n};

    if (frozen.actions.size() != n) throw InvalidArgument("build_hota: one action list per frozen front required");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& z = frozen.front.fronts[i];
        const auto& acts = frozen.actions[i];
        if (z.size() != ns || acts.size() != ns) {
            throw InvalidArgument("build_hota: front Z_" + std::to_string(i) + " must have exactly |S| members");
        }
        for (std::size_t j = 0; j < ns; ++j) {
            if (acts[j] >= spec.num_actions) throw InvalidArgument("build_hota: frozen action out of range");
            const History expected = i == 0 ? History{static_cast<StateIndex>(j), {}}
                                            : child(frozen.front.fronts[i - 1][j], frozen.actions[i - 1][j]);
            if (z[j] != expected) {
                throw InvalidArgument("build_hota: inconsistent front Z_" + std::to_string(i) + " at member " +
                                      std::to_string(j) + " (" + to_string(z[j]) + ", expected " +
                                      to_string(expected) + ")");
            }
        }
    }
    detail::check_capacity(state_count(ModelKind::high_order, ns, spec.num_actions, L, n), cap, shape);

    NodeTable nodes(ns, spec.num_actions);
    std::vector<std::optional<ActionIndex>> fixed;
    for (std::size_t j = 0; j < ns; ++j) fixed.emplace_back(frozen.actions[0][j]);

    // Z_1..Z_n: member j descends from member j of the previous front.
    std::size_t prev_start = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t start = nodes.size();
        for (std::size_t j = 0; j < ns; ++j) {
            nodes.add_child(prev_start + j, frozen.actions[i - 1][j]);
            if (i < n) {
                fixed.emplace_back(frozen.actions[i][j]);
            } else {
                fixed.emplace_back(std::nullopt);
            }
        }
        prev_start = start;
    }
    // G⁻_{n+1}..G⁻_{n+L}: full subtrees below Z_n.
    std::size_t layer_start = prev_start;
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t layer_end = nodes.size();
        for (std::size_t i = layer_start; i < layer_end; ++i) {
            for (ActionIndex a = 0; a < spec.num_actions; ++a) {
                nodes.add_child(i, a);
                fixed.emplace_back(std::nullopt);
            }
        }
        layer_start = layer_end;
    }
    return detail::assemble(spec, rho, shape, std::move(nodes), std::move(fixed));
}

/// Deterministic action assignment over the states of a truncated model.
///
/// The policy keeps its own copy of the node table, so it stays usable after
/// the model is gone and can be serialized on its own. Queries for histories
/// outside the table fall back to the deepest ancestor that is in it: the
/// boundary-layer ancestor for histories generated by the policy itself.
class Policy {
public:
    Policy() = default;
    Policy(NodeTable nodes, std::vector<ActionIndex> actions, ModelShape shape, double rho, double beta)
        : nodes_(std::move(nodes)), actions_(std::move(actions)), shape_(shape), rho_(rho), beta_(beta) {
        if (actions_.size() != nodes_.size()) throw InvalidArgument("Policy: one action per node required");
        for (ActionIndex a : actions_) {
            if (a >= nodes_.num_actions()) throw InvalidArgument("Policy: action out of range");
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::size_t num_roots() const noexcept { return nodes_.num_roots(); }
    [[nodiscard]] std::size_t num_actions() const noexcept { return nodes_.num_actions(); }
    [[nodiscard]] const ModelShape& shape() const noexcept { return shape_; }
    [[nodiscard]] double rho() const noexcept { return rho_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] const NodeTable& nodes() const noexcept { return nodes_; }
    [[nodiscard]] ActionIndex action(std::size_t node) const { return actions_[node]; }
    [[nodiscard]] std::span<const ActionIndex> actions() const noexcept { return actions_; }

    /// Action for an arbitrary history (total: falls back to the deepest known ancestor).
    [[nodiscard]] ActionIndex action_for(const History& h) const { return actions_[nodes_.deepest_ancestor(h).first]; }

private:
    NodeTable nodes_;
    std::vector<ActionIndex> actions_;
    ModelShape shape_;
    double rho_ = 1.0;
    double beta_ = 0.0;
};

[[nodiscard]] inline ActionIndex policy_action(const Policy& policy, const History& h) {
    return policy.action_for(h);
}

/// Incremental tracker of a controller's position in a policy's node table.
///
/// Equivalent to calling policy_action on the full history at every step,
/// but O(1) per step. Once the history leaves the table it stays detached at
/// the deepest known ancestor until the next observation.
class PolicyCursor {
public:
    explicit PolicyCursor(const Policy& policy) : policy_(&policy) {}

    void observe(StateIndex s) {
        node_ = s;
        layer_ = 0;
        detached_ = false;
    }
    void lost(ActionIndex a) {
        ++layer_;
        if (detached_) return;
        if (const auto c = policy_->nodes().child(node_, a)) {
            node_ = *c;
        } else {
            detached_ = true;
        }
    }
    [[nodiscard]] ActionIndex action() const { return policy_->action(node_); }
    [[nodiscard]] std::size_t node() const noexcept { return node_; }
    /// Layer of the true history, which may exceed the table's depth.
    [[nodiscard]] std::size_t layer() const noexcept { return layer_; }

private:
    const Policy* policy_;
    std::size_t node_ = 0;
    std::size_t layer_ = 0;
    bool detached_ = false;
};

/// Greedy policy of a model for the given state values.
///
/// For each state picks the allowed action maximizing the one-step
/// lookahead. Actions whose lookahead lies within `tie_tolerance` of the
/// best count as ties and the smallest index wins.
[[nodiscard]] inline Policy extract_policy(const TruncatedModel& model, std::span<const double> values,
                                           double tie_tolerance = 1e-9) {
    if (values.size() != model.size()) throw InvalidArgument("extract_policy: one value per state required");
    std::vector<ActionIndex> chosen(model.size());
    std::vector<double> q;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto acts = model.actions(i);
        q.resize(acts.size());
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < acts.size(); ++k) {
            q[k] = model.q_value(model.slot(i, k), values);
            best = std::max(best, q[k]);
        }
        ActionIndex pick = acts[0];
        bool found = false;
        for (std::size_t k = 0; k < acts.size(); ++k) {
            if (q[k] >= best - tie_tolerance && (!found || acts[k] < pick)) {
                pick = acts[k];
                found = true;
            }
        }
        chosen[i] = pick;
    }
    return Policy(model.nodes(), std::move(chosen), model.shape(), model.rho(), model.beta());
}

/// Z_0..Z_k generated by following a policy from every root.
[[nodiscard]] inline ReachableFront follow_fronts(const Policy& policy, std::size_t k) {
    ReachableFront out;
    out.fronts.push_back(root_front(policy.num_roots()));
    for (std::size_t i = 0; i < k; ++i) {
        const auto& z = out.fronts.back();
        std::vector<ActionIndex> acts;
        for (const auto& h : z) acts.push_back(policy.action_for(h));
        out.fronts.push_back(reachable_front(z, acts));
    }
    return out;
}

/// Frozen prefix of order n read off a policy: Z_0..Z_{n−1} and its actions.
[[nodiscard]] inline FrozenPrefix frozen_prefix_from_policy(const Policy& policy, std::size_t n) {
    FrozenPrefix out;
    if (n == 0) return out;
    out.front = follow_fronts(policy, n - 1);
    for (const auto& z : out.front.fronts) {
        std::vector<ActionIndex> acts;
        for (const auto& h : z) acts.push_back(policy.action_for(h));
        out.actions.push_back(std::move(acts));
    }
    return out;
}

}  // namespace iomdp
