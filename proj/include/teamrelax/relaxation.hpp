#pragma once

#include <optional>

#include "teamrelax/core_ops.hpp"
#include "teamrelax/info_measures.hpp"
#include "teamrelax/instance.hpp"

namespace teamrelax {

/// Lagrange multipliers of the relaxed programs. Sign convention follows the
/// (a,b)-form system: stationarity reads
///   delta(s,sh) = -lambda gA(s,sh) - muA(s) + nuA(sh|s)
///   rho(x)      =  lambda gB(x) - muB + nuB(x)
/// with gA = (1/pS) dI_f(a pS)/da and gB = dI_f(channel b)/db. Multipliers
/// are stored unscaled; the pS scaling enters residual evaluation only.
struct Multipliers {
    Mat lambdaA;   // nS x nShat
    Vec lambdaB;   // nX
    double lambda = 0.0;  // DPI multiplier, >= 0
    Mat lambdaP;   // nX x nY
    Vec muA;       // nS
    double muB = 0.0;
    Mat nuA;       // nS x nShat, >= 0
    Vec nuB;       // nX, >= 0
    std::optional<Tensor4> nu;  // nonnegativity multiplier on Q
};

struct KKTReport {
    double stationarityA = 0.0;
    double stationarityB = 0.0;
    double stationarityQ = 0.0;
    double dpiComplementarity = 0.0;  // |lambda * slack|
    double signViolations = 0.0;
    double primalFeasibility = 0.0;
    double maxResidual = 0.0;

    void finalize() {
        maxResidual = stationarityA;
        for (double v : {stationarityB, stationarityQ, dpiComplementarity,
                         signViolations, primalFeasibility})
            if (v > maxResidual) maxResidual = v;
    }
};

enum class RelaxStatus { optimal, maxIter, infeasible, degenerate };

const char* to_string(RelaxStatus s);

struct RelaxSolution {
    EndToEndPair pair;
    std::optional<JointDist> q;  // filled by the general solver
    double value = 0.0;
    Multipliers mult;
    RelaxStatus status = RelaxStatus::maxIter;
    KKTReport kkt;
    double dpiSlack = 0.0;   // I_f(channel b) - I_f(a pS) at the solution
    double dualValue = 0.0;  // certified lower bound from the dual search
};

struct LambdaGrid {
    double lo = 0.0;
    double hi = 0.0;   // 0 = auto from the cost spread
    int points = 200;  // coarse scan before local refinement
};

struct BoundReport {
    double lb = 0.0;
    double ub = 0.0;
    double gap = 0.0;
    double multiplierIdentityResidual = 0.0;
    double dpiEqualitySlack = 0.0;
    bool ubHeuristic = false;
    RelaxStatus lbStatus = RelaxStatus::maxIter;
};

/// Solves the (a,b)-form relaxation of a delta+rho cost over the f-DPI set:
/// Lagrangian dual over the DPI multiplier, rate-distortion / capacity-cost
/// subproblems per trial lambda (Blahut-Arimoto for negLog, mirror descent
/// otherwise), golden-section maximization of the concave dual followed by a
/// bisection that lands the iterate on the feasible side of the DPI.
/// Refuses f kinds that are neither saddle-certified nor probe-passed on the
/// instance channel.
RelaxSolution solve_relaxation_separable(const Instance& inst, const FGenerator& f, double tol);

/// Relaxation with the concave root term: objective
/// <delta + rho, Q> - alpha sqrt(<rho, Q>), alpha from the stored cross-term
/// data. Outer damped fixed point on R = sqrt(<rho, b>), inner separable
/// solves with effective slope (1 - alpha/(2R)).
RelaxSolution solve_relaxation_bansal(const Instance& inst, double tol);

/// Full relaxation in the joint Q for arbitrary cost tensors: quadratic
/// penalty on max(0, I_f(a pS) - I_f(channel b))^2 with cyclic exact
/// projections onto the affine constraint sets and clipping to
/// nonnegativity; penalty doubled until the violation falls below tol.
RelaxSolution solve_relaxation_general(const Instance& inst, const FGenerator& f, double tol);

/// Reconstructs (muA, nuA, muB, nuB) for trial DPI multipliers on a grid and
/// reports the lambda minimizing the overall residual of the (a,b) system.
std::pair<Multipliers, KKTReport> kkt_residual_separable(const Instance& inst,
                                                         const EndToEndPair& pair,
                                                         const FGenerator& f,
                                                         const LambdaGrid& grid);

/// Evaluates every equation of the joint-form KKT system at the supplied
/// point and multipliers. Zero-probability channel cells are skipped in the
/// lambdaP terms.
KKTReport kkt_residual_general(const Instance& inst, const JointDist& q,
                               const FGenerator& f, const Multipliers& mult);

/// Lower bound from the general relaxation, upper bound from enumeration
/// (or flagged local search beyond budget), the Lagrangian identity
/// | lb + E[muA] + lambda + muB | and the DPI slack at the solution.
BoundReport bound_report(const Instance& inst, const FGenerator& f,
                         double tol = 1e-8,
                         unsigned long long budget = 100000000ULL,
                         unsigned seed = 0);

} // namespace teamrelax
