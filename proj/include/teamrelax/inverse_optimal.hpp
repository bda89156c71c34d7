#pragma once

#include <utility>

#include "teamrelax/exact_solver.hpp"
#include "teamrelax/info_measures.hpp"
#include "teamrelax/instance.hpp"

namespace teamrelax {

/// Multiplier data for inverse-optimal cost synthesis. The synthesized pair
/// reads
///   delta(s,sh) = -(lambda/pS(s)) dI_f(a pS)/da(sh|s) + muA(s) + nuA(sh|s)
///   rho(x)      =   lambda dI_f(channel b)/db(x) + muB + nuB(x)
/// subject to complementarity of (nuA, a) and (nuB, b) and of lambda with the
/// DPI slack.
struct SynthesisSpec {
    FGenerator f;
    double lambda = 0.0;
    Vec muA;    // nS
    double muB = 0.0;
    Mat nuA;    // nS x nShat, >= 0 (empty = zero)
    Vec nuB;    // nX, >= 0 (empty = zero)
};

struct SynthesizedCosts {
    Mat delta;
    Vec rho;
};

struct GastparCosts {
    Vec rho;
    Mat delta;
    std::vector<std::pair<int, int>> flaggedCells;  // (s, shat) with p*(s|shat) = 0
};

struct VerifyReport {
    double candidateValue = 0.0;
    double globalMin = 0.0;
    bool optimal = false;
    bool heuristic = false;  // globalMin from local search, not enumeration
};

SynthesizedCosts synthesize_costs(const Instance& inst, const EndToEndPair& pair,
                                  const SynthesisSpec& spec);

/// The information-theoretic special case:
///   rho(x)       = c1 D(channel(.|x)||P_Y*) + rho0 + beta(x) off supp(b)
///   delta(s,sh)  = -c2 log p*(s|sh) + d0(s)
/// with p* induced by the pair. Cells with p*(s|sh) = 0 are flagged and set
/// above the defined maximum.
GastparCosts gastpar_costs(const Instance& inst, const EndToEndPair& pair, double c1,
                           double c2, double rho0, const Vec& d0, const Vec& beta);

/// Rebuilds the instance with cost delta+rho and checks the candidate against
/// the global optimum (enumeration within budget, else flagged local search).
VerifyReport verify_inverse_optimality(const Instance& inst, const Mat& delta, const Vec& rho,
                                       const DetCode& candidate,
                                       unsigned long long budget = 100000000ULL,
                                       unsigned seed = 0);
VerifyReport verify_inverse_optimality(const Instance& inst, const Mat& delta, const Vec& rho,
                                       const RandomCode& candidate,
                                       unsigned long long budget = 100000000ULL,
                                       unsigned seed = 0);

/// Instance with the synthesized separable cost installed (labels, source and
/// channel preserved), so the result can round-trip through files and the
/// exact solver.
Instance instance_with_costs(const Instance& inst, const Mat& delta, const Vec& rho);

} // namespace teamrelax
