#pragma once

// Umbrella header.

#include "iomdp/bounds.hpp"
#include "iomdp/chain.hpp"
#include "iomdp/error.hpp"
#include "iomdp/experiments.hpp"
#include "iomdp/instances.hpp"
#include "iomdp/io.hpp"
#include "iomdp/mdp.hpp"
#include "iomdp/rng.hpp"
#include "iomdp/sim.hpp"
#include "iomdp/solvers.hpp"
#include "iomdp/stats.hpp"
#include "iomdp/tree.hpp"
#include "iomdp/truncation.hpp"
#include "iomdp/version.hpp"
