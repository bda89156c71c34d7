#pragma once

// internal helpers shared by the relaxation translation units

#include <optional>
#include <utility>

#include "teamrelax/relaxation.hpp"

namespace teamrelax::detail {

std::optional<std::pair<Mat, Vec>> reduce_to_pair_cost(const Instance& inst);

void gate_saddle(const FGenerator& f, const Mat& channel);

RelaxSolution solve_pair_relaxation(const Vec& pS, const Mat& channel, const Mat& delta,
                                    const Vec& rho, const FGenerator& f, double tol);

std::pair<Multipliers, KKTReport> kkt_reconstruct(const Vec& pS, const Mat& channel,
                                                  const Mat& delta, const Vec& rho,
                                                  const EndToEndPair& pair, const FGenerator& f,
                                                  const std::vector<double>& lambdas);

} // namespace teamrelax::detail
