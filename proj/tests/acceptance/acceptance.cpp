// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "../fixtures.hpp"
#include "iomdp/iomdp.hpp"

using namespace iomdp;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr std::size_t kRuns = 20000;

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> solve_values(const TruncatedModel& m, double eps) {
    return nested_value_iteration(m, default_nested_sets(m), {}, eps).values;
}

Policy ta_policy(const MdpSpec& spec, double rho, std::size_t L, double eps = 1e-9) {
    const auto m = build_ta(spec, rho, L);
    return extract_policy(m, solve_values(m, eps));
}

const std::array<double, 4> kCarRhos = {0.9, 0.8, 0.6, 0.5};

Verdict criterion1() {
    Verdict v;
    const auto spec = car_mdp();
    const std::array<double, 4> ta_ref = {366, 310, 196, 155};
    const std::array<double, 4> chain_ref = {368, 318, 215, 175};
    for (std::size_t i = 0; i < kCarRhos.size(); ++i) {
        const double rho = kCarRhos[i];
        const auto ta = evaluate_policy(spec, ta_policy(spec, rho, 2), rho, kDefaultHorizon, kRuns, kSeed);
        const auto chain = hota_chain(spec, rho, 2, 4, 1e-9);
        const auto hv = evaluate_policy(spec, chain.final_policy(), rho, kDefaultHorizon, kRuns, kSeed);
        const double dt = (ta.mean - ta_ref[i]) / ta_ref[i];
        const double dh = (hv.mean - chain_ref[i]) / chain_ref[i];
        v.check(std::abs(dt) <= 0.04, fmt("rho=%.1f TA(2)   mean %.2f +- %.2f vs %.0f (%+.1f%%)", rho, ta.mean,
                                          ta.stderr_, ta_ref[i], 100 * dt));
        v.check(std::abs(dh) <= 0.04, fmt("rho=%.1f TA(4,2) mean %.2f +- %.2f vs %.0f (%+.1f%%)", rho, hv.mean,
                                          hv.stderr_, chain_ref[i], 100 * dh));
    }
    return v;
}

// Compares `pol` with `greedy` on the histories `pol` reaches from each root
// in layers 0..n.
std::size_t count_mismatches(const Policy& pol, const Policy& greedy, std::size_t roots, std::size_t n) {
    std::size_t bad = 0;
    for (StateIndex s = 0; s < roots; ++s) {
        History h{s, {}};
        for (std::size_t layer = 0; layer <= n; ++layer) {
            const ActionIndex a = policy_action(pol, h);
            if (a != policy_action(greedy, h)) ++bad;
            h.actions.push_back(a);
        }
    }
    return bad;
}

Verdict criterion2() {
    Verdict v;
    const auto spec = car_mdp();
    for (double rho : kCarRhos) {
        const auto chain = hota_chain(spec, rho, 2, 4, 1e-10);
        const Policy ta6 = ta_policy(spec, rho, 6, 1e-10);
        for (std::size_t n = 1; n <= 4; ++n) {
            const Policy deeper = ta_policy(spec, rho, 2 + n, 1e-10);
            const auto& pol = chain.steps[n].policy;
            const std::size_t vs_same = count_mismatches(pol, deeper, spec.num_states, n);
            const std::size_t vs_six = count_mismatches(pol, ta6, spec.num_states, n);
            v.check(vs_same == 0 && vs_six == 0,
                    fmt("rho=%.1f n=%zu: mismatches vs TA(%zu) %zu, vs TA(6) %zu", rho, n, 2 + n, vs_same, vs_six));
        }
    }
    return v;
}

struct RandomCase {
    MdpSpec spec;
    std::size_t L;
    double rho;
};

std::vector<RandomCase> solver_cases() {
    std::vector<RandomCase> out;
    const std::array<double, 3> rhos = {0.5, 0.7, 0.9};
    for (std::size_t i = 0; i < 20; ++i) {
        out.push_back({gen_random_mdp(1000 + i, 10 + (i * 7) % 31, 2 + i % 2), 2 + i % 4, rhos[i % 3]});
    }
    return out;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

Verdict criterion3() {
    Verdict v;
    const double eps = 1e-8;
    for (const auto& c : solver_cases()) {
        const auto m = build_ta(c.spec, c.rho, c.L);
        const auto vi = value_iteration(m, {}, eps);
        const auto nvi = nested_value_iteration(m, default_nested_sets(m), {}, eps);
        const auto rnvi = reverse_nvi(m, default_nested_sets(m), {}, eps);
        const double dn = max_diff(nvi.values, vi.values), dr = max_diff(rnvi.values, vi.values);
        v.check(dn <= 2 * eps && dr <= 2 * eps,
                fmt("|S|=%zu |A|=%zu L=%zu rho=%.1f: NVI %.2e, R-NVI %.2e", c.spec.num_states, c.spec.num_actions,
                    c.L, c.rho, dn, dr));
    }
    return v;
}

Verdict criterion4() {
    Verdict v;
    const double eps = 1e-6;
    std::size_t nvi_wins = 0, cases = 0;
    bool rnvi_ok = true;
    for (const auto& c : solver_cases()) {
        const auto m = build_ta(c.spec, c.rho, c.L);
        const auto vi = value_iteration(m, {}, eps);
        const auto nvi = nested_value_iteration(m, default_nested_sets(m), {}, eps);
        const auto rnvi = reverse_nvi(m, default_nested_sets(m), {}, eps);
        ++cases;
        if (nvi.stats.state_updates < vi.stats.state_updates) ++nvi_wins;
        const bool r_ok = rnvi.stats.inner_iterations >= vi.stats.outer_iterations;
        rnvi_ok = rnvi_ok && r_ok;
        v.notes.push_back(fmt("       |S|=%zu L=%zu rho=%.1f: updates VI %llu NVI %llu; iterations VI %lld R-NVI "
                              "inner %lld (%.2fx); wall VI %.3fs NVI %.3fs R-NVI %.3fs",
                              c.spec.num_states, c.L, c.rho, static_cast<unsigned long long>(vi.stats.state_updates),
                              static_cast<unsigned long long>(nvi.stats.state_updates),
                              static_cast<long long>(vi.stats.outer_iterations),
                              static_cast<long long>(rnvi.stats.inner_iterations),
                              static_cast<double>(rnvi.stats.inner_iterations) /
                                  static_cast<double>(vi.stats.outer_iterations),
                              vi.stats.wall_time, nvi.stats.wall_time, rnvi.stats.wall_time));
    }
    v.check(nvi_wins >= 18, fmt("NVI fewer state updates than VI in %zu/%zu cases (need 18)", nvi_wins, cases));
    v.check(rnvi_ok, "R-NVI inner iterations >= VI iterations in every case");
    return v;
}

Verdict criterion5() {
    Verdict v;
    const std::array<double, 3> rhos = {0.5, 0.7, 0.9};
    const std::array<double, 3> betas = {0.9, 0.8, 0.7};
    for (std::size_t i = 0; i < 10; ++i) {
        const auto spec = gen_random_mdp(2000 + i, 3 + i % 8, 2, betas[i % 3]);
        const double rho = rhos[(i / 3) % 3];
        for (std::size_t L = 2; L <= 4; ++L) {
            const auto shallow = build_ta(spec, rho, L);
            const auto phi_L = solve_values(shallow, 1e-11);
            const auto deep = build_ta(spec, rho, L + 6);
            const auto phi = solve_values(deep, 1e-11);
            const double delta = empirical_delta(deep, phi, L, L + 1);
            double worst_slack = 1e300;
            bool ok = true;
            for (std::size_t k = 0; k <= L; ++k) {
                const auto [begin, end] = shallow.layer_range(k);
                double gap = 0.0;
                for (std::size_t h = begin; h < end; ++h) {
                    gap = std::max(gap, std::abs(phi_L[h] - phi[*deep.find(shallow.history(h))]));
                }
                const double bound = ta_error_bound(L, k, rho, spec.beta, delta) + 1e-6;
                ok = ok && gap <= bound;
                worst_slack = std::min(worst_slack, bound - gap);
            }
            v.check(ok, fmt("instance %zu |S|=%zu beta=%.1f rho=%.1f L=%zu delta=%.4f: min(bound - gap) %.3e", i,
                            spec.num_states, spec.beta, rho, L, delta, worst_slack));
        }
    }
    bool monotone = true;
    for (std::size_t L = 1; L <= 8; ++L) {
        for (double rho : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            for (double beta : {0.3, 0.5, 0.7, 0.9, 0.99}) {
                for (std::size_t k = 0; k < L; ++k) {
                    monotone = monotone && ta_error_bound(L, k, rho, beta, 1.0) <= ta_error_bound(L, k + 1, rho, beta, 1.0);
                }
            }
        }
    }
    v.check(monotone, "bound non-decreasing in k over L<=8, rho and beta grid");
    return v;
}

std::vector<MdpSpec> theory_instances() {
    std::vector<MdpSpec> out;
    for (std::size_t i = 0; i < 5; ++i) out.push_back(gen_random_mdp(3000 + i, 3 + i, 2, 0.9));
    return out;
}

constexpr double kTheoryEps = 1e-9;

Verdict criterion6() {
    Verdict v;
    const std::array<double, 6> rhos = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    for (std::size_t i = 0; i < 5; ++i) {
        const auto spec = theory_instances()[i];
        const double slack =
            2 * (kTheoryEps + ta_error_bound(8, 0, rhos.front(), spec.beta, value_upper_bound(spec)));
        std::vector<std::vector<double>> roots;
        for (double rho : rhos) {
            const auto m = build_ta(spec, rho, 8);
            const auto vals = solve_values(m, kTheoryEps);
            roots.emplace_back(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(spec.num_states));
        }
        double worst_drop = 0.0;
        for (std::size_t r = 1; r < rhos.size(); ++r) {
            for (std::size_t s = 0; s < spec.num_states; ++s) worst_drop = std::max(worst_drop, roots[r - 1][s] - roots[r][s]);
        }
        const auto V = solve_underlying(spec, 1e-12).value;
        double vgap = 0.0;
        for (std::size_t s = 0; s < spec.num_states; ++s) vgap = std::max(vgap, std::abs(roots.back()[s] - V[s]));
        v.check(worst_drop <= slack && vgap <= slack,
                fmt("instance %zu |S|=%zu: largest drop over rho %.2e, |phi(rho=1) - V| %.2e, slack %.2e", i,
                    spec.num_states, worst_drop, vgap, slack));
    }
    return v;
}

Verdict criterion7() {
    Verdict v;
    for (std::size_t i = 0; i < 5; ++i) {
        const auto spec = theory_instances()[i];
        const auto V = solve_underlying(spec, 1e-12).value;
        for (double rho : {0.5, 0.7, 0.9}) {
            const auto m = build_ta(spec, rho, 8);
            const auto vals = solve_values(m, kTheoryEps);
            const auto rb = regret_bound(spec, rho, 8);
            const double slack =
                kTheoryEps + ta_error_bound(8, 0, rho, spec.beta, value_upper_bound(spec)) + rb.tail_bound;
            double worst = 1e300;
            for (std::size_t s = 0; s < spec.num_states; ++s) {
                worst = std::min(worst, rb.per_root[s] + slack - (V[s] - vals[s]));
            }
            v.check(worst >= 0.0, fmt("instance %zu rho=%.1f: min(bound + slack - regret) %.3e", i, rho, worst));
        }
    }
    for (const auto& [name, spec] : {std::pair{"toy-ID", fixtures::toy_id()}, std::pair{"toy-UNI", fixtures::toy_uni()}}) {
        const auto V = solve_underlying(spec, 1e-13).value;
        for (double rho : {0.5, 0.7, 0.9}) {
            const auto rb = regret_bound(spec, rho, 8);
            const auto m = build_ta(spec, rho, 8);
            const auto vals = value_iteration(m, {}, 1e-12).values;
            double bound = 0.0, regret = 0.0;
            for (std::size_t s = 0; s < spec.num_states; ++s) {
                bound = std::max(bound, std::abs(rb.per_root[s]));
                regret = std::max(regret, std::abs(V[s] - vals[s]));
            }
            v.check(bound == 0.0 && regret <= 1e-10,
                    fmt("%s rho=%.1f: bound %.1e, measured regret %.1e", name, rho, bound, regret));
        }
    }
    return v;
}

Verdict criterion8() {
    Verdict v;
    const auto spec = car_mdp();
    const double rho = 0.5;
    std::vector<Evaluation> evs;
    for (std::size_t L = 1; L <= 7; ++L) {
        evs.push_back(evaluate_policy(spec, ta_policy(spec, rho, L), rho, kDefaultHorizon, kRuns, kSeed));
        v.notes.push_back(fmt("       TA(%zu): %.2f +- %.2f", L, evs.back().mean, evs.back().stderr_));
    }
    for (std::size_t L = 2; L <= 7; ++L) {
        const auto& a = evs[L - 2];
        const auto& b = evs[L - 1];
        const double se = std::max(a.stderr_, b.stderr_);
        v.check(b.mean >= a.mean - 2 * se, fmt("TA(%zu) >= TA(%zu) - 2 SE (diff %+.2f, SE %.2f)", L, L - 1,
                                               b.mean - a.mean, se));
    }
    {
        const auto& a = evs[5];
        const auto& b = evs[6];
        const double se = std::max(a.stderr_, b.stderr_);
        v.check(std::abs(b.mean - a.mean) < se, fmt("plateau |TA(7) - TA(6)| %.2f < SE %.2f", std::abs(b.mean - a.mean), se));
    }
    const auto chain = hota_chain(spec, rho, 2, 4, 1e-9);
    const auto hv = evaluate_policy(spec, chain.final_policy(), rho, kDefaultHorizon, kRuns, kSeed);
    const auto& ta6 = evs[5];
    const double se = std::max(hv.stderr_, ta6.stderr_);
    v.check(std::abs(hv.mean - ta6.mean) <= 2 * se,
            fmt("TA(4,2) %.2f vs TA(6) %.2f within 2 SE (%.2f)", hv.mean, ta6.mean, 2 * se));
    bool linear = true;
    std::size_t total = 0;
    const auto base = static_cast<std::size_t>(state_count(ModelKind::truncated, spec.num_states, spec.num_actions, 2));
    for (std::size_t n = 0; n < chain.steps.size(); ++n) {
        total += chain.steps[n].num_states;
        linear = linear && chain.steps[n].num_states == base + spec.num_states * n &&
                 total == (n + 1) * base + spec.num_states * n * (n + 1) / 2;
    }
    v.check(linear, fmt("chain sizes |S|(|A|^3-1)/(|A|-1) + |S|n, cumulative %zu", total));
    return v;
}

// Layer occupancy of TA(L) from layer k by direct propagation of the layer
// distribution p_t.
double occupancy_by_recursion(std::size_t L, std::size_t k, double rho, double beta) {
    std::vector<double> p(L + 1, 0.0), next(L + 1);
    p[k] = 1.0;
    double total = 0.0, disc = 1.0;
    for (int t = 0; t < 20000 && disc > 1e-18; ++t) {
        total += disc * p[L];
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t j = 0; j <= L; ++j) {
            next[0] += rho * p[j];
            next[std::min(j + 1, L)] += (1 - rho) * p[j];
        }
        p.swap(next);
        disc *= beta;
    }
    return total;
}

Verdict criterion9() {
    Verdict v;
    for (const auto& [name, spec, roots, interior] :
         {std::tuple{"toy-ID", fixtures::toy_id(), std::vector<double>{2, 0}, -1.0},
          std::tuple{"toy-UNI", fixtures::toy_uni(), std::vector<double>{1.5, 0.5}, 1.0}}) {
        for (double rho : {0.3, 0.8}) {
            const auto m = build_ta(spec, rho, 3);
            for (SolverKind kind : {SolverKind::vi, SolverKind::nvi, SolverKind::rnvi}) {
                const auto vals = solve(m, kind, {}, 1e-12).values;
                double err = 0.0;
                for (std::size_t i = 0; i < m.size(); ++i) {
                    const double want = i < spec.num_states ? roots[i]
                                        : interior >= 0   ? interior
                                                          : roots[m.history(i).root];
                    err = std::max(err, std::abs(vals[i] - want));
                }
                v.check(err <= 1e-9, fmt("%s rho=%.1f %s: max error %.1e", name, rho, to_string(kind).c_str(), err));
            }
        }
    }
    double worst = 0.0;
    for (std::size_t L = 0; L <= 6; ++L) {
        for (std::size_t k = 0; k <= L; ++k) {
            for (double beta : {0.3, 0.5, 0.9}) {
                for (double rho : {0.3, 0.5, 0.9}) {
                    worst = std::max(worst, std::abs(discounted_visit_weight(L, k, rho, beta) -
                                                     occupancy_by_recursion(L, k, rho, beta)));
                }
            }
        }
    }
    v.check(worst <= 1e-9, fmt("O_L(k) closed form vs recursion: max error %.2e", worst));
    return v;
}

}  // namespace

int main() {
    using Fn = Verdict (*)();
    const std::array<std::pair<const char*, Fn>, 9> criteria = {{
        {"car TA(2) and TA(4,2) values within 4% of reference", criterion1},
        {"TA(n,2) policy identical to deeper TA greedy policy", criterion2},
        {"NVI and R-NVI fixed points agree with VI", criterion3},
        {"NVI needs fewer state updates than VI", criterion4},
        {"truncation error bound holds and grows with k", criterion5},
        {"root values monotone in rho, equal V at rho=1", criterion6},
        {"regret bound covers measured regret", criterion7},
        {"car depth sweep plateaus; TA(4,2) matches TA(6)", criterion8},
        {"closed-form oracles", criterion9},
    }};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const Verdict v = criteria[i].second();
        for (const auto& note : v.notes) std::printf("%s\n", note.c_str());
        std::printf("criterion %zu: %s  %s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first);
        std::fflush(stdout);
        if (!v.pass) ++failed;
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
