#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

namespace iomdp {

/// One inner iteration of a solver: which set was swept and what it changed.
struct ResidualRecord {
    std::int64_t outer = 0;
    std::int64_t inner = 0;
    std::size_t set_size = 0;
    double sigma = 0.0;
    std::uint64_t cumulative_state_updates = 0;
    double wall_time_s = 0.0;
};

/// Work and convergence ledger shared by every iterative solver.
///
/// `state_updates` counts single-state Bellman backups, which is the
/// machine-independent cost used when comparing solvers.
struct SolveStats {
    std::int64_t outer_iterations = 0;
    std::int64_t inner_iterations = 0;
    std::uint64_t state_updates = 0;
    std::vector<ResidualRecord> residual_trace;
    double wall_time = 0.0;

    [[nodiscard]] double final_residual() const noexcept {
        return residual_trace.empty() ? 0.0 : residual_trace.back().sigma;
    }
};

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail
}  // namespace iomdp
