#pragma once

#include <array>
#include <cstdint>

#include "iomdp/error.hpp"
#include "iomdp/mdp.hpp"
#include "iomdp/rng.hpp"

namespace iomdp {

/// Random instance: every transition row is a vector of i.i.d. uniform(0,1)
/// draws normalized to sum to one, rewards are i.i.d. uniform(0,1).
///
/// Draw order is fixed (rows action-major, then rewards state-major) from a
/// single SplitMix64 stream seeded with substream(seed, 0).
[[nodiscard]] inline MdpSpec gen_random_mdp(std::uint64_t seed, std::size_t num_states, std::size_t num_actions,
                                            double beta = 0.95) {
    if (num_states < 1 || num_actions < 1) throw InvalidArgument("gen_random_mdp: need at least one state and action");
    if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("gen_random_mdp: beta must lie in [0, 1)");
    SplitMix64 rng(substream(seed, 0));
    MdpSpec spec = MdpSpec::zeros(num_states, num_actions, beta);
    for (std::size_t a = 0; a < num_actions; ++a) {
        for (std::size_t i = 0; i < num_states; ++i) {
            double total = 0.0;
            for (std::size_t j = 0; j < num_states; ++j) {
                // (0,1]: keeps every row strictly positive
                const double u = 1.0 - rng.uniform();
                spec.p(static_cast<ActionIndex>(a), static_cast<StateIndex>(i), static_cast<StateIndex>(j)) = u;
                total += u;
            }
            for (std::size_t j = 0; j < num_states; ++j) {
                spec.p(static_cast<ActionIndex>(a), static_cast<StateIndex>(i), static_cast<StateIndex>(j)) /= total;
            }
        }
    }
    for (double& r : spec.rewards) r = rng.uniform();
    return spec;
}

namespace car {

inline constexpr std::size_t kStates = 9;
inline constexpr StateIndex kTerminal = 8;
inline constexpr ActionIndex kLeft = 0, kDown = 1, kRight = 2, kUp = 3;
inline constexpr double kReward = 20.0;

/// Clockwise move m_s for the eight track states (0-based).
inline constexpr std::array<ActionIndex, 8> kClockwise = {kLeft, kLeft, kDown, kDown, kRight, kRight, kUp, kUp};

[[nodiscard]] constexpr ActionIndex opposite(ActionIndex a) noexcept { return (a + 2) % 4; }

/// Move that takes the car from track state s back to s−1 (cyclically):
/// the reverse of the clockwise move out of s−1.
[[nodiscard]] constexpr ActionIndex anticlockwise(StateIndex s) noexcept {
    return opposite(kClockwise[(s + 7) % 8]);
}

}  // namespace car

/// Car on an eight-cell ring track plus an absorbing crash state (index 8).
///
/// On track state s, the clockwise move advances to s+1 or stays, each with
/// prob 1/2, and pays 20; the anti-clockwise move retreats to s−1 or stays,
/// each with prob 1/2; any other action crashes. The start distribution is
/// uniform over the track states.
[[nodiscard]] inline MdpSpec car_mdp() {
    using namespace car;
    MdpSpec spec = MdpSpec::zeros(kStates, 4, 0.95);
    for (ActionIndex a = 0; a < 4; ++a) spec.p(a, kTerminal, kTerminal) = 1.0;
    for (StateIndex s = 0; s < 8; ++s) {
        const StateIndex ahead = (s + 1) % 8;
        const StateIndex behind = (s + 7) % 8;
        for (ActionIndex a = 0; a < 4; ++a) {
            if (a == kClockwise[s]) {
                spec.p(a, s, s) += 0.5;
                spec.p(a, s, ahead) += 0.5;
                spec.r(s, a) = kReward;
            } else if (a == anticlockwise(s)) {
                spec.p(a, s, s) += 0.5;
                spec.p(a, s, behind) += 0.5;
            } else {
                spec.p(a, s, kTerminal) = 1.0;
            }
        }
    }
    spec.initial.assign(kStates, 1.0 / 8.0);
    spec.initial[kTerminal] = 0.0;
    return spec;
}

}  // namespace iomdp
