#pragma once

#include "teamrelax/tensor.hpp"

namespace teamrelax {

struct BAResult {
    double value = 0.0;       // R or C, nats
    Mat kernel;               // optimizing a(shat|s) (rate-distortion side)
    Vec marginal;             // optimizing b(x) (capacity-cost side)
    double lagrangeSlope = 0.0;
    double achieved = 0.0;    // E[delta] resp. E[rho] at the optimizer
    int iterations = 0;
    bool converged = false;
};

struct RdMode {
    enum class Type { slope, targetD } type = Type::slope;
    double value = 1.0;  // lambda, or D
    int maxIter = 100000;
    static RdMode slope(double lambda, int maxIter = 100000) {
        return {Type::slope, lambda, maxIter};
    }
    static RdMode target(double D) { return {Type::targetD, D, 100000}; }
};

struct CcMode {
    enum class Type { slope, targetP, unconstrained } type = Type::unconstrained;
    double value = 0.0;  // lambda', or P
    int maxIter = 100000;
    static CcMode slope(double lambda, int maxIter = 100000) {
        return {Type::slope, lambda, maxIter};
    }
    static CcMode target(double P) { return {Type::targetP, P, 100000}; }
    static CcMode unconstrained() { return {Type::unconstrained, 0.0, 100000}; }
};

/// Blahut fixed point for the rate-distortion Lagrangian
///   min_a  E[delta] + lambda I(a pS),
/// updates a(shat|s) proportional to a(shat) exp(-delta(s,shat)/lambda).
/// In target mode bisects lambda until |E[delta] - D| <= 1e-8.
BAResult blahut_arimoto_rd(const Vec& pS, const Mat& delta, RdMode mode,
                           const Mat* warmKernel = nullptr);

/// Arimoto iteration for the capacity-cost Lagrangian
///   max_b  I(channel b) - E[rho]/lambda',
/// multiplicative update b(x) ~ b(x) exp(D(channel(.|x)||b_Y) - rho(x)/lambda').
BAResult blahut_arimoto_cc(const Mat& channel, const Vec& rho, CcMode mode,
                           const Vec* warmMarginal = nullptr);

} // namespace teamrelax
