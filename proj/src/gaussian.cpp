#include "teamrelax/gaussian.hpp"

#include <algorithm>
#include <cmath>

namespace teamrelax {

void GaussianSpec::validate() const {
    if (sigma0 <= 0.0 || sigmaW <= 0.0) throw std::invalid_argument("sigmas must be positive");
    if (k0 <= 0.0) throw std::invalid_argument("k0 must be positive");
    if (gridPoints < 9 || gridPoints % 2 == 0)
        throw std::invalid_argument("gridPoints must be an odd integer >= 9");
    if (gridHalfWidthSigmas < 3.0) throw std::invalid_argument("halfwidth must be >= 3 sigmas");
}

double xi0(double sigma0, double sigmaW, double gamma0) {
    double s2 = gamma0 * gamma0 * sigma0 * sigma0 + sigmaW * sigmaW;
    return sigma0 * sigma0 * sigmaW * sigmaW / (s2 * s2);
}

double xi1(double sigma0, double sigmaW, double gamma0) {
    double s2 = gamma0 * gamma0 * sigma0 * sigma0 + sigmaW * sigmaW;
    return gamma0 * sigma0 * sigma0 / s2;
}

double pbar(double sigma0, double sigmaW, double gamma0) {
    double g2s2 = gamma0 * gamma0 * sigma0 * sigma0;
    return (g2s2 + sigmaW * sigmaW) / g2s2;
}

std::pair<Vec, Vec> discretize_gaussian(double sigma, int gridPoints, double halfWidthSigmas) {
    int n = gridPoints;
    double h = halfWidthSigmas * sigma;
    Vec values(n), probs(n);
    double step = 2.0 * h / (n - 1);
    for (int i = 0; i < n; ++i) values[i] = -h + step * i;
    values[(n - 1) / 2] = 0.0;  // exact center
    for (int i = 0; i < n; ++i)
        probs[i] = std::exp(-values[i] * values[i] / (2.0 * sigma * sigma));
    // exact symmetry, then renormalize
    for (int i = 0; i < n / 2; ++i) {
        double m = 0.5 * (probs[i] + probs[n - 1 - i]);
        probs[i] = probs[n - 1 - i] = m;
    }
    double z = sum(probs);
    for (double& p : probs) p /= z;
    return {values, probs};
}

ClosedForms gamma_star(const GaussianSpec& spec) {
    spec.validate();
    const double s0 = spec.sigma0, sw = spec.sigmaW, k0 = spec.k0;
    const double as01 = std::abs(spec.s01);
    ClosedForms cf;

    // (2 k0 g - |s01|) s0 (g^2 s0^2 + sw^2)^2 - 2 g s0^3 sw^2, root in g > 0
    auto F = [&](double g) {
        double q = g * g * s0 * s0 + sw * sw;
        return (2.0 * k0 * g - as01) * s0 * q * q - 2.0 * g * s0 * s0 * s0 * sw * sw;
    };

    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (F(hi) < 0.0 && guard++ < 200) hi *= 2.0;
    if (spec.s01 == 0.0 && F(1e-14) >= 0.0) {
        // no transmission pays off: k0 >= sigma0^2/sigmaW^2 limit case
        cf.degenerate = true;
        cf.gamma0Star = 0.0;
        cf.gamma1Star = 0.0;
        cf.gamma0StarStar = 0.0;
        cf.gamma1StarStar = 0.0;
        cf.optB = s0 * s0;
        cf.lambdaStar = 0.0;
        cf.eq17Residual = 0.0;
        return cf;
    }
    if (spec.s01 == 0.0) lo = 1e-14;  // skip the trivial root at zero
    for (int it = 0; it < 400 && (hi - lo) > 1e-17 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if (F(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double g = 0.5 * (lo + hi);
    cf.gamma0Star = g;
    cf.gamma1Star = xi1(s0, sw, g);
    double sgn = spec.s01 > 0.0 ? 1.0 : (spec.s01 < 0.0 ? -1.0 : 0.0);
    cf.gamma0StarStar = spec.s01 == 0.0 ? g : -sgn * g;
    cf.gamma1StarStar = xi1(s0, sw, cf.gamma0StarStar);
    cf.eq17Residual = std::abs(F(g));
    cf.optB = sw * sw * s0 * s0 / (g * g * s0 * s0 + sw * sw) + k0 * g * g * s0 * s0 -
              as01 * g * s0 * s0;
    cf.lambdaStar = 2.0 * cf.gamma1Star * cf.gamma1Star * sw * sw * pbar(s0, sw, g);
    return cf;
}

Instance build_instance(const GaussianSpec& spec) {
    spec.validate();
    Instance inst;
    int n = spec.gridPoints;
    double h = spec.gridHalfWidthSigmas;

    auto [sVals, sProbs] = discretize_gaussian(spec.sigma0, n, h);
    inst.nS = n;
    inst.sValues = sVals;
    inst.pS = sProbs;
    inst.nShat = n;
    inst.shatValues = sVals;

    ClosedForms cf = gamma_star(spec);
    double gammaHat = std::max(1.0, std::abs(cf.gamma0Star));
    double sigmaX = spec.sigma0 * gammaHat;
    inst.nX = n;
    inst.xValues = Vec(n);
    double xHalf = h * sigmaX;
    double dx = 2.0 * xHalf / (n - 1);
    for (int i = 0; i < n; ++i) inst.xValues[i] = -xHalf + dx * i;
    inst.xValues[(n - 1) / 2] = 0.0;

    int widen = static_cast<int>(std::ceil(h * spec.sigmaW / dx - 1e-12));
    inst.nY = n + 2 * widen;
    inst.yValues = Vec(inst.nY);
    for (int i = 0; i < inst.nY; ++i) inst.yValues[i] = -xHalf - widen * dx + dx * i;

    if (inst.tensor_entries() > 100000000ULL)
        throw budget_error("grid instance exceeds the tensor budget", inst.tensor_entries(),
                           100000000ULL);

    inst.channel = Mat(inst.nX, inst.nY, 0.0);
    double twoVar = 2.0 * spec.sigmaW * spec.sigmaW;
    for (int x = 0; x < inst.nX; ++x) {
        double z = 0.0;
        for (int y = 0; y < inst.nY; ++y) {
            double d = inst.yValues[y] - inst.xValues[x];
            inst.channel(x, y) = std::exp(-d * d / twoVar);
            z += inst.channel(x, y);
        }
        for (int y = 0; y < inst.nY; ++y) inst.channel(x, y) /= z;
    }

    if (spec.problem == GaussianProblem::witsenhausen) {
        Tensor4 cost(inst.nS, inst.nX, inst.nY, inst.nShat);
        for (int s = 0; s < inst.nS; ++s)
            for (int x = 0; x < inst.nX; ++x) {
                double xs = inst.xValues[x] - inst.sValues[s];
                for (int y = 0; y < inst.nY; ++y)
                    for (int sh = 0; sh < inst.nShat; ++sh) {
                        double xsh = inst.xValues[x] - inst.shatValues[sh];
                        cost.at(s, x, y, sh) = xsh * xsh + xs * xs;
                    }
            }
        inst.denseCost = std::move(cost);
    } else {
        SeparableCost sc;
        sc.delta = Mat(inst.nS, inst.nShat, 0.0);
        for (int s = 0; s < inst.nS; ++s)
            for (int sh = 0; sh < inst.nShat; ++sh) {
                double d = inst.shatValues[sh] - inst.sValues[s];
                sc.delta(s, sh) = d * d;
            }
        sc.rho = Vec(inst.nX, 0.0);
        for (int x = 0; x < inst.nX; ++x) sc.rho[x] = spec.k0 * inst.xValues[x] * inst.xValues[x];
        if (spec.problem == GaussianProblem::bansalBasar && spec.s01 != 0.0) {
            // tau(x,s) = s01 x s stored as sgn(s01) sgn(xs) sqrt(rho tau')
            Vec tp(inst.nS, 0.0);
            for (int s = 0; s < inst.nS; ++s)
                tp[s] = inst.sValues[s] * inst.sValues[s] * spec.s01 * spec.s01 / spec.k0;
            sc.tauPrime = std::move(tp);
            sc.kCross = spec.s01 > 0.0 ? 1.0 : -1.0;
        }
        inst.separable = std::move(sc);
    }
    inst.validate();
    return inst;
}

Bounds gaussian_bounds(const GaussianSpec& spec, double P) {
    if (P < 0.0) throw std::invalid_argument("P must be nonnegative");
    Bounds b;
    double sw2 = spec.sigmaW * spec.sigmaW;
    b.ccRHS = 0.5 * std::log((P * P + sw2) / sw2);
    b.distortionLB = spec.sigma0 * spec.sigma0 * sw2 / (P * P + sw2);
    b.rdLHS = 0.5 * std::log(spec.sigma0 * spec.sigma0 / b.distortionLB);
    return b;
}

Refs eq15_16_reference(const GaussianSpec& spec, double gamma0, double x, double s,
                       double shat) {
    if (gamma0 == 0.0) throw std::invalid_argument("gamma0 must be nonzero");
    Refs r;
    double s0 = spec.sigma0, sw = spec.sigmaW;
    double sy2 = gamma0 * gamma0 * s0 * s0 + sw * sw;  // variance of Y under X = gamma0 S
    double pb = pbar(s0, sw, gamma0);
    double g1 = xi1(s0, sw, gamma0);

    // Gaussian divergence D(N(x, sw^2) || N(0, sy^2)) split into the constant
    // and the x^2/(2 gamma0^2 s0^2 Pbar) parts
    r.c1 = std::log(std::sqrt(sy2) / sw) + sw * sw / (2.0 * sy2) - 0.5;
    r.klAtX = r.c1 + x * x / (2.0 * gamma0 * gamma0 * s0 * s0 * pb);

    // log a(shat|s)/a(shat) as the completed square around Pbar g0 g1 s
    r.c2AtS = std::log(std::sqrt(sy2) / sw) + s * s / (2.0 * s0 * s0);
    double dev = shat - pb * gamma0 * g1 * s;
    r.logRatioAtSShat = -dev * dev / (2.0 * g1 * g1 * sw * sw * pb) + r.c2AtS;
    return r;
}

DetCode linear_code_on_grid(const Instance& inst, double gamma0, double gamma1) {
    DetCode code;
    code.f.resize(inst.nS);
    code.g.resize(inst.nY);
    auto nearest = [](const Vec& grid, double target) {
        // uniform grid; ties resolved toward the smaller label
        int n = static_cast<int>(grid.size());
        double step = (grid[n - 1] - grid[0]) / (n - 1);
        double r = (target - grid[0]) / step;
        int lo = static_cast<int>(std::floor(r));
        int idx;
        if (lo < 0)
            idx = 0;
        else if (lo >= n - 1)
            idx = n - 1;
        else {
            double frac = r - lo;
            idx = frac > 0.5 ? lo + 1 : lo;  // frac == 0.5 stays at the smaller label
        }
        return idx;
    };
    for (int s = 0; s < inst.nS; ++s) code.f[s] = nearest(inst.xValues, gamma0 * inst.sValues[s]);
    for (int y = 0; y < inst.nY; ++y)
        code.g[y] = nearest(inst.shatValues, gamma1 * inst.yValues[y]);
    return code;
}

} // namespace teamrelax
