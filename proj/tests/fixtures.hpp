#pragma once

#include <vector>

#include "iomdp/mdp.hpp"
#include "iomdp/rng.hpp"

namespace fixtures {

// Two states, one action, P = I, r = [1, 0], beta = 0.5.
inline iomdp::MdpSpec toy_id() {
    auto spec = iomdp::MdpSpec::zeros(2, 1, 0.5);
    spec.p(0, 0, 0) = 1.0;
    spec.p(0, 1, 1) = 1.0;
    spec.r(0, 0) = 1.0;
    return spec;
}

// Two states, one action, every row [0.5, 0.5], r = [1, 0], beta = 0.5.
inline iomdp::MdpSpec toy_uni() {
    auto spec = iomdp::MdpSpec::zeros(2, 1, 0.5);
    for (iomdp::StateIndex i = 0; i < 2; ++i) {
        spec.p(0, i, 0) = 0.5;
        spec.p(0, i, 1) = 0.5;
    }
    spec.r(0, 0) = 1.0;
    return spec;
}

inline std::vector<double> random_belief(iomdp::SplitMix64& rng, std::size_t n) {
    std::vector<double> b(n);
    double total = 0.0;
    for (double& x : b) total += (x = rng.uniform());
    for (double& x : b) x /= total;
    return b;
}

}  // namespace fixtures
