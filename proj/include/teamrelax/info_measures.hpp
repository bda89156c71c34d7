#pragma once

#include "teamrelax/fgen.hpp"
#include "teamrelax/instance.hpp"

namespace teamrelax {

struct Slack {
    double iXY = 0.0;
    double iSShat = 0.0;
    double slack = 0.0;  // iXY - iSShat, >= 0 on feasible joints
};

struct Gradients {
    Mat dA;  // nS x nShat, d I_f(a pS) / d a(shat|s)
    Vec dB;  // nX,        d I_f(channel b) / d b(x)
    bool boundary = false;  // some cell had an undefined gradient (NaN there)
};

struct ProbeReport {
    bool passed = false;
    double worstViolation = 0.0;           // most negative concavity gap in b
    double convexityWorstViolation = 0.0;  // most negative convexity gap in the kernel
};

/// KL divergence in nats; +inf when absolute continuity fails.
double kl_divergence(const Vec& p, const Vec& q);

/// Mutual information of a joint matrix, in nats. Zero cells contribute 0.
double mutual_information(const Mat& joint);

/// D_f(P||Q); +inf is a distinguished return, never a crash.
double f_divergence(const FGenerator& f, const Vec& p, const Vec& q);

/// I_f of a joint: sum p(i,j) f(p(i)p(j)/p(i,j)). Always finite for the
/// shipped kinds (the slope-at-infinity convention covers zero cells).
double f_mutual_information(const FGenerator& f, const Mat& joint);

/// I_f of the pair factorization a(shat|s) pS(s) without forming the matrix.
double f_mi_source(const FGenerator& f, const Vec& pS, const Mat& a);
/// I_f of b(x) channel(y|x).
double f_mi_channel(const FGenerator& f, const Mat& channel, const Vec& b);

/// f-DPI slack of a joint: I_f of the (X,Y) marginal minus I_f of (S,Shat).
Slack dpi_slack(const FGenerator& f, const JointDist& q);

/// Analytic gradients of I_f(a pS) in a and I_f(channel b) in b. For negLog
/// these reduce to pS(s) log(a(shat|s)/a(shat)) and D(channel(.|x)||b_Y) - 1.
/// Cells where a or b vanish get NaN and set the boundary flag.
Gradients f_mi_gradients(const FGenerator& f, const Vec& pS, const Mat& a,
                         const Mat& channel, const Vec& b);

/// The two halves of f_mi_gradients, for callers that only move one block.
Mat f_mi_grad_a(const FGenerator& f, const Vec& pS, const Mat& a, bool* boundary = nullptr);
Vec f_mi_grad_b(const FGenerator& f, const Mat& channel, const Vec& b, bool* boundary = nullptr);

/// Samples random marginals/kernels and probes midpoint concavity of
/// I_f(channel b) in b (the saddle property) and convexity in the kernel.
ProbeReport saddle_probe(const FGenerator& f, const Mat& channel, int trials, unsigned seed);

} // namespace teamrelax
