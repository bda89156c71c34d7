#pragma once

#include "teamrelax/instance.hpp"

namespace teamrelax {

struct MembershipReport {
    double l1Residual = 0.0;
    bool inQ = false;
};

struct Witness {
    bool applicable = false;
    JointDist q1, q2;
    double t = 0.5;
    double residual = 0.0;
};

struct SepReport {
    Vec f1;       // nX
    Mat f2;       // nS x nShat
    Mat f3;       // nX x nY
    double residual = 0.0;
};

/// Lifts a deterministic code to indicator kernels.
RandomCode det_code_to_random(const DetCode& code, const Instance& inst);

/// Q(s,x,y,shat) = pS(s) * Q(x|s) * channel(y|x) * Q(shat|y).
JointDist build_joint_from_code(const Instance& inst, const RandomCode& code);

/// Marginalizes a joint down to (a, b). Rows of a at zero-mass source
/// symbols are uniform.
EndToEndPair induced_endtoend(const JointDist& q, const Vec& pS);

/// <kappa, Q>
double expected_cost(const Instance& inst, const JointDist& q);

/// Direct evaluation for a deterministic code without materializing the joint:
/// sum_s sum_y pS(s) channel(f(s),y) kappa(s,f(s),y,g(y)).
double expected_cost_det(const Instance& inst, const DetCode& code);

/// Same trick for a random code: O(nS nX nY nShat) but no 4-tensor storage.
double expected_cost_random(const Instance& inst, const RandomCode& code);

/// End-to-end pair of a code without building the joint.
EndToEndPair pair_from_random_code(const Instance& inst, const RandomCode& code);
EndToEndPair pair_from_det_code(const Instance& inst, const DetCode& code);

/// Extracts kernels from q by conditioning on positive-mass events (uniform
/// rows at zero mass), rebuilds the factorized tensor and reports the L1
/// distance. inQ additionally requires Q_S = pS and channel consistency on
/// positive-mass x, all within tol.
MembershipReport membership_check(const Instance& inst, const JointDist& q, double tol);

/// Two feasible joints whose midpoint leaves the feasible set: the identity-
/// labeled code against the index-reversed one, t = 1/2.
Witness nonconvexity_witness(const Instance& inst);

/// Least-squares projection of the cost tensor onto
/// { f1(x) + f2(s,shat) + f3(x,y) }; residual is the L2 norm of the remainder.
SepReport separability_projection(const Instance& inst);

} // namespace teamrelax
