#pragma once

#include <optional>
#include <utility>

#include "teamrelax/instance.hpp"

namespace teamrelax {

struct ExactResult {
    DetCode bestCode;
    double value = 0.0;
    unsigned long long evaluated = 0;
    std::optional<std::vector<std::pair<DetCode, double>>> table;
    bool heuristic = false;  // true when produced by local search
};

unsigned long long enumeration_count(const Instance& inst);

/// Exhaustive minimum over all deterministic codes; ties broken toward the
/// lexicographically smallest (f, g). Throws budget_error when
/// nX^nS * nShat^nY exceeds the budget.
ExactResult enumerate_optimal(const Instance& inst, bool keepTable = false,
                              unsigned long long budget = 100000000ULL);

/// Coordinate descent on the bilinear objective: alternately the best
/// deterministic encoder for a fixed decoder and vice versa, over several
/// random restarts. Always returns a deterministic local optimum. When given,
/// `trace` receives the (non-increasing) value sequence of the first descent.
ExactResult alternating_best_response(const Instance& inst, const RandomCode& init,
                                      int restarts, unsigned seed,
                                      std::vector<double>* trace = nullptr);

} // namespace teamrelax
