#pragma once

#include "teamrelax/instance.hpp"

namespace teamrelax {

enum class GaussianProblem { testChannel, bansalBasar, witsenhausen };

struct GaussianSpec {
    double sigma0 = 1.0;
    double sigmaW = 1.0;
    double k0 = 1.0;
    double s01 = 0.0;
    int gridPoints = 17;            // odd, >= 9, so the grid contains 0
    double gridHalfWidthSigmas = 5.0;
    GaussianProblem problem = GaussianProblem::testChannel;

    void validate() const;
};

/// Closed-form reference quantities evaluated at the root of the optimality
/// equation for the encoder gain.
struct ClosedForms {
    double gamma0Star = 0.0;   // positive root
    double gamma1Star = 0.0;
    double gamma0StarStar = 0.0;  // -sgn(s01) * gamma0Star
    double gamma1StarStar = 0.0;
    double optB = 0.0;         // OPT of the root-term relaxation
    double lambdaStar = 0.0;   // 2 gamma1*^2 sigmaW^2 Pbar
    double eq17Residual = 0.0;
    bool degenerate = false;   // no positive root; limit values at gamma0 = 0
};

struct Bounds {
    double rdLHS = 0.0;
    double ccRHS = 0.0;
    double distortionLB = 0.0;
};

struct Refs {
    double klAtX = 0.0;
    double logRatioAtSShat = 0.0;
    double c1 = 0.0;
    double c2AtS = 0.0;
};

double xi0(double sigma0, double sigmaW, double gamma0);
double xi1(double sigma0, double sigmaW, double gamma0);
double pbar(double sigma0, double sigmaW, double gamma0);

/// Uniform grid on [-h sigma, h sigma] with renormalized Gaussian weights;
/// exactly symmetric, mean exactly zero.
std::pair<Vec, Vec> discretize_gaussian(double sigma, int gridPoints, double halfWidthSigmas);

/// Discretized instance for the chosen problem. X spans the widest optimal
/// linear code, Y is the X grid widened by h sigmaW at the same spacing.
/// Test-channel and cross-term costs are stored separably; the two-sided
/// quadratic cost is dense.
Instance build_instance(const GaussianSpec& spec);

/// Bracketing bisection on the optimality equation
/// (2 k0 g s0 - |s01| s0)(g^2 s0^2 + sw^2)^2 = 2 g s0^3 sw^2.
ClosedForms gamma_star(const GaussianSpec& spec);

/// The classical Gaussian chain: rate lower bound, capacity upper bound and
/// the induced distortion lower bound at input power P^2.
Bounds gaussian_bounds(const GaussianSpec& spec, double P);

/// Closed-form divergence and log-ratio of the linear-code solution, with
/// the completion constants reported separately.
Refs eq15_16_reference(const GaussianSpec& spec, double gamma0, double x, double s, double shat);

/// Grid-rounded linear code f(s) = nearest x to gamma0*s, g(y) = nearest
/// shat to gamma1*y; ties toward the smaller label.
DetCode linear_code_on_grid(const Instance& inst, double gamma0, double gamma1);

} // namespace teamrelax
