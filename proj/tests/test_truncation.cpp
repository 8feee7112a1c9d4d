#include <gtest/gtest.h>

#include <cstdlib>

#include "fixtures.hpp"
#include "iomdp/instances.hpp"
#include "iomdp/solvers.hpp"
#include "iomdp/truncation.hpp"

using namespace iomdp;

namespace {

void expect_stochastic(const TruncatedModel& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t k = 0; k < m.actions(i).size(); ++k) {
            double total = 0.0;
            for (const auto& e : m.row(m.slot(i, k))) {
                ASSERT_GE(e.prob, 0.0);
                ASSERT_LT(e.target, m.size());
                total += e.prob;
            }
            ASSERT_NEAR(total, 1.0, 1e-9) << "state " << to_string(m.history(i));
        }
    }
}

}  // namespace

TEST(StateCount, ClosedForms) {
    EXPECT_EQ(state_count(ModelKind::truncated, 2, 2, 2), 14u);
    EXPECT_EQ(state_count(ModelKind::truncated, 9, 4, 2), 189u);
    EXPECT_EQ(state_count(ModelKind::truncated, 200, 3, 5), 72800u);
    EXPECT_EQ(state_count(ModelKind::high_order, 9, 4, 2, 4), 225u);
    EXPECT_EQ(state_count(ModelKind::truncated, 7, 3, 0), 7u);
    EXPECT_EQ(state_count(ModelKind::truncated, 5, 1, 3), 20u);
    EXPECT_EQ(state_count(ModelKind::high_order, 2, 2, 2, 3), 20u);
}

TEST(StateCount, OverflowReported) {
    EXPECT_THROW((void)state_count(ModelKind::truncated, 1000, 1000, 10), CapacityError);
}

TEST(BuildTa, CountsMatchClosedForm) {
    const auto spec = gen_random_mdp(1, 2, 2);
    EXPECT_EQ(build_ta(spec, 0.5, 2).size(), 14u);
    EXPECT_EQ(build_ta(car_mdp(), 0.9, 2).size(), 189u);
    for (std::size_t L = 0; L <= 4; ++L) {
        const auto m = build_ta(gen_random_mdp(2, 3, 3), 0.7, L);
        EXPECT_EQ(m.size(), state_count(ModelKind::truncated, 3, 3, L));
    }
}

TEST(BuildTa, KernelStochasticAndBoundarySelfLoop) {
    const auto spec = gen_random_mdp(5, 4, 3);
    const double rho = 0.6;
    const auto m = build_ta(spec, rho, 3);
    expect_stochastic(m);
    const auto [begin, end] = m.layer_range(3);
    ASSERT_EQ(end, m.size());
    for (std::size_t i = begin; i < end; ++i) {
        ASSERT_TRUE(m.boundary(i));
        for (std::size_t k = 0; k < m.actions(i).size(); ++k) {
            const auto a = m.actions(i)[k];
            const auto next = propagate(spec, m.belief(i), a);
            double self = 0.0;
            for (const auto& e : m.row(m.slot(i, k))) {
                if (e.target == i) {
                    self += e.prob;
                } else {
                    ASSERT_LT(e.target, 4u);
                    EXPECT_NEAR(e.prob, rho * next[e.target], 1e-15);
                }
            }
            EXPECT_NEAR(self, 1.0 - rho, 1e-15);
        }
    }
}

TEST(BuildTa, InteriorRowsMatchExactKernel) {
    const auto spec = gen_random_mdp(6, 3, 2);
    const auto m = build_ta(spec, 0.4, 3);
    for (std::size_t i = 0; i < m.layer_range(3).first; ++i) {
        for (std::size_t k = 0; k < m.actions(i).size(); ++k) {
            const auto exact = kernel_rows(spec, 0.4, m.history(i), m.actions(i)[k]);
            const auto row = m.row(m.slot(i, k));
            ASSERT_EQ(row.size(), exact.size());
            for (std::size_t e = 0; e < row.size(); ++e) {
                EXPECT_EQ(m.history(row[e].target), exact[e].next);
                EXPECT_NEAR(row[e].prob, exact[e].prob, 1e-15);
            }
        }
    }
}

TEST(BuildTa, RewardsAreBeliefWeighted) {
    const auto spec = gen_random_mdp(7, 3, 2);
    const auto m = build_ta(spec, 0.5, 2);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto b = belief_of(spec, m.history(i));
        for (std::size_t k = 0; k < 2; ++k) {
            EXPECT_NEAR(m.reward(m.slot(i, k)), expected_reward(spec, b.probs, m.actions(i)[k]), 1e-15);
        }
    }
}

TEST(BuildTa, LayerZeroMergesSelfLoopIntoRoot) {
    const auto m = build_ta(fixtures::toy_id(), 0.5, 0);
    ASSERT_EQ(m.size(), 2u);
    expect_stochastic(m);
    const auto row = m.row(m.slot(0, 0));
    ASSERT_EQ(row.size(), 1u);
    EXPECT_EQ(row[0].target, 0u);
    EXPECT_DOUBLE_EQ(row[0].prob, 1.0);
}

TEST(BuildTa, RhoOneHasNoChildEntries) {
    const auto m = build_ta(gen_random_mdp(3, 3, 2), 1.0, 2);
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (const auto& e : m.row(m.slot(i, 0))) EXPECT_LT(e.target, 3u);
    }
}

TEST(BuildTa, CapRefusesLargeModels) {
    try {
        (void)build_ta(gen_random_mdp(1, 10, 4), 0.5, 6, 1000);
        FAIL();
    } catch (const CapacityError& e) {
        EXPECT_EQ(e.predicted_states(), state_count(ModelKind::truncated, 10, 4, 6));
        EXPECT_EQ(e.cap(), 1000u);
    }
}

TEST(BuildTa, CapFromEnvironment) {
    ::setenv("IOMDP_STATE_CAP", "50", 1);
    EXPECT_EQ(state_cap_from_env(), 50u);
    EXPECT_THROW((void)build_ta(gen_random_mdp(1, 10, 2), 0.5, 3), CapacityError);
    ::setenv("IOMDP_STATE_CAP", "junk", 1);
    EXPECT_EQ(state_cap_from_env(), kDefaultStateCap);
    ::unsetenv("IOMDP_STATE_CAP");
}

TEST(NodeRef, RoundTripAndModelOrder) {
    const auto m = build_ta(gen_random_mdp(2, 3, 2), 0.5, 4);
    for (std::uint64_t i = 0; i < m.size(); ++i) {
        const History h = node_ref::decode(i, 3, 2);
        EXPECT_EQ(node_ref::encode(h, 3, 2), i);
        EXPECT_EQ(m.history(i), h);
        if (!h.is_root()) {
            EXPECT_EQ(node_ref::parent(i, 3, 2), node_ref::encode(parent(h), 3, 2));
        }
        if (h.layer() < 4) {
            const auto c = node_ref::first_child(i, 3, 2);
            EXPECT_EQ(c, *m.find(child(h, 0)));
            EXPECT_EQ(c + 1, *m.find(child(h, 1)));
        }
    }
}

TEST(ReachableFront, TwoStateTwoActionExample) {
    const auto z0 = root_front(2);
    const std::vector<ActionIndex> mu = {0, 0};
    const auto z1 = reachable_front(z0, mu);
    EXPECT_EQ(z1, (std::vector<History>{History{0, {0}}, History{1, {0}}}));
    EXPECT_EQ(z0, (std::vector<History>{History{0, {}}, History{1, {}}}));
}

TEST(ReachableFront, SizeIsNumStatesAndMissingActionThrows) {
    const auto z0 = root_front(5);
    const std::vector<ActionIndex> mu = {1, 0, 1, 1, 0};
    EXPECT_EQ(reachable_front(z0, mu).size(), 5u);
    const std::vector<ActionIndex> short_mu = {1, 0};
    EXPECT_THROW((void)reachable_front(z0, short_mu), InvalidArgument);
}

TEST(BuildHota, OrderZeroIsTa) {
    const auto spec = gen_random_mdp(4, 3, 2);
    const auto a = build_ta(spec, 0.7, 2);
    const auto b = build_hota(spec, 0.7, 2, FrozenPrefix{});
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(a.num_kernel_entries(), b.num_kernel_entries());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.history(i), b.history(i));
}

TEST(BuildHota, CountsAndTwoStateShape) {
    const auto spec = gen_random_mdp(9, 2, 2);
    FrozenPrefix prefix;
    prefix.front.fronts.push_back(root_front(2));
    prefix.actions.push_back({0, 0});
    const auto m = build_hota(spec, 0.5, 3, prefix);
    EXPECT_EQ(m.size(), state_count(ModelKind::high_order, 2, 2, 3, 1));
    expect_stochastic(m);
    // redundant layer-1 nodes (and their subtrees) are gone
    EXPECT_FALSE(m.find(History{0, {1}}));
    EXPECT_FALSE(m.find(History{1, {1, 0}}));
    EXPECT_TRUE(m.find(History{0, {0, 1, 1, 0}}));
    EXPECT_TRUE(m.frozen(0));
    EXPECT_EQ(m.actions(0).size(), 1u);
    EXPECT_FALSE(m.frozen(*m.find(History{0, {0}})));
    EXPECT_EQ(m.boundary_layer(), 4u);
}

TEST(BuildHota, TwentyStatesForOrderThree) {
    const auto spec = gen_random_mdp(9, 2, 2);
    const auto ta = build_ta(spec, 0.5, 2);
    const auto sol = value_iteration(ta, {}, 1e-9);
    const auto prefix = frozen_prefix_from_policy(extract_policy(ta, sol.values), 3);
    EXPECT_EQ(build_hota(spec, 0.5, 2, prefix).size(), 20u);
}

TEST(BuildHota, InconsistentFrontsRejected) {
    const auto spec = gen_random_mdp(9, 2, 2);
    FrozenPrefix prefix;
    prefix.front.fronts.push_back(root_front(2));
    prefix.actions.push_back({0, 5});
    EXPECT_THROW((void)build_hota(spec, 0.5, 2, prefix), InvalidArgument);
    prefix.actions = {{0, 1}, {1, 1}};
    prefix.front.fronts.push_back({History{0, {1}}, History{1, {1}}});  // member 0 should be 0:0
    EXPECT_THROW((void)build_hota(spec, 0.5, 2, prefix), InvalidArgument);
    prefix.front.fronts.back() = {History{0, {0}}};
    EXPECT_THROW((void)build_hota(spec, 0.5, 2, prefix), InvalidArgument);
}

TEST(BuildHota, MatchesDeeperTaWhenFrozenActionsAreOptimal) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto spec = gen_random_mdp(seed, 4, 2, 0.9);
        const std::size_t L = 2, n = 2;
        const double rho = 0.6;
        const auto deep = build_ta(spec, rho, L + n);
        const auto dsol = value_iteration(deep, {}, 1e-10);
        const auto prefix = frozen_prefix_from_policy(extract_policy(deep, dsol.values), n);
        const auto hota = build_hota(spec, rho, L, prefix);
        const auto hsol = nested_value_iteration(hota, default_nested_sets(hota), {}, 1e-10);
        for (std::size_t i = 0; i < hota.size(); ++i) {
            const auto j = deep.find(hota.history(i));
            ASSERT_TRUE(j);
            EXPECT_NEAR(hsol.values[i], dsol.values[*j], 1e-9);
        }
    }
}

TEST(ExtractPolicy, SingleActionAndTies) {
    const auto m = build_ta(fixtures::toy_id(), 0.5, 2);
    const auto sol = value_iteration(m, {}, 1e-9);
    const auto p = extract_policy(m, sol.values);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p.action(i), 0u);

    auto twin = MdpSpec::zeros(2, 2, 0.5);
    for (ActionIndex a = 0; a < 2; ++a) {
        twin.p(a, 0, 0) = twin.p(a, 1, 1) = 1.0;
        twin.r(0, a) = 1.0;
    }
    const auto tm = build_ta(twin, 0.5, 1);
    const auto tp = extract_policy(tm, value_iteration(tm, {}, 1e-9).values);
    for (std::size_t i = 0; i < tp.size(); ++i) EXPECT_EQ(tp.action(i), 0u);
}

TEST(ExtractPolicy, FrozenStatesKeepTheirAction) {
    const auto spec = gen_random_mdp(9, 3, 3);
    FrozenPrefix prefix;
    prefix.front.fronts.push_back(root_front(3));
    prefix.actions.push_back({2, 1, 2});
    const auto m = build_hota(spec, 0.5, 1, prefix);
    const auto p = extract_policy(m, std::vector<double>(m.size(), 0.0));
    EXPECT_EQ(p.action(0), 2u);
    EXPECT_EQ(p.action(1), 1u);
    EXPECT_EQ(p.action(2), 2u);
}

TEST(PolicyAction, AncestorFallback) {
    const auto spec = gen_random_mdp(3, 3, 2);
    const auto m = build_ta(spec, 0.5, 2);
    const auto p = extract_policy(m, value_iteration(m, {}, 1e-9).values);
    const History inside{1, {0, 1}};
    EXPECT_EQ(policy_action(p, inside), p.action(*m.find(inside)));
    const History deep{1, {0, 1, 1, 0, 1}};
    EXPECT_EQ(policy_action(p, deep), p.action(*m.find(ancestor_at_layer(deep, 2))));
}

TEST(PolicyAction, HotaUsesBoundaryAncestor) {
    const auto spec = gen_random_mdp(3, 3, 2);
    const auto ta = build_ta(spec, 0.5, 1);
    const auto prefix = frozen_prefix_from_policy(extract_policy(ta, value_iteration(ta, {}, 1e-9).values), 1);
    const auto m = build_hota(spec, 0.5, 1, prefix);
    const auto p = extract_policy(m, value_iteration(m, {}, 1e-9).values);
    const History z1 = prefix.front.fronts[0][2];
    History h = child(child(z1, prefix.actions[0][2]), 0);  // layer 2 = boundary
    ASSERT_TRUE(m.find(h));
    History deeper = child(child(h, 1), 1);
    EXPECT_EQ(policy_action(p, deeper), p.action(*m.find(h)));
    // a history leaving the frozen path falls back to its deepest stored ancestor
    const History off{2, {static_cast<ActionIndex>(1 - prefix.actions[0][2]), 0}};
    EXPECT_EQ(policy_action(p, off), p.action(2));
}

TEST(PolicyCursor, MatchesPolicyAction) {
    const auto spec = gen_random_mdp(3, 3, 2);
    const auto m = build_ta(spec, 0.5, 2);
    const auto p = extract_policy(m, value_iteration(m, {}, 1e-9).values);
    SplitMix64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        PolicyCursor cursor(p);
        History h{static_cast<StateIndex>(rng.next() % 3), {}};
        cursor.observe(h.root);
        for (int step = 0; step < 8; ++step) {
            EXPECT_EQ(cursor.action(), policy_action(p, h));
            EXPECT_EQ(cursor.layer(), h.layer());
            const ActionIndex a = static_cast<ActionIndex>(rng.next() % 2);
            cursor.lost(a);
            h.actions.push_back(a);
        }
    }
}

TEST(EqualBeliefs, EqualValues) {
    // every action has the same kernel, so same-layer beliefs coincide
    auto spec = gen_random_mdp(5, 3, 2);
    for (StateIndex i = 0; i < 3; ++i) {
        for (StateIndex j = 0; j < 3; ++j) spec.p(1, i, j) = spec.p(0, i, j);
    }
    const auto m = build_ta(spec, 0.5, 3);
    const auto sol = value_iteration(m, {}, 1e-10);
    std::size_t pairs = 0;
    for (std::size_t l = 1; l < 3; ++l) {
        const auto [b, e] = m.layer_range(l);
        for (std::size_t i = b; i < e; ++i) {
            for (std::size_t j = i + 1; j < e; ++j) {
                if (approx_equal(m.belief(i), m.belief(j), 1e-9)) {
                    ++pairs;
                    EXPECT_NEAR(sol.values[i], sol.values[j], 1e-9);
                }
            }
        }
    }
    EXPECT_GT(pairs, 0u);
}
