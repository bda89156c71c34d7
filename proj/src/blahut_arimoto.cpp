#include "teamrelax/blahut_arimoto.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "teamrelax/info_measures.hpp"

namespace teamrelax {

namespace {

constexpr int kMaxIter = 100000;
constexpr double kValueTol = 1e-13;  // relative Lagrangian change

double neg_inf() { return -std::numeric_limits<double>::infinity(); }

// I(a pS) computed directly; the generator-based path allocates per call
double pair_mi(const Vec& pS, const Mat& a) {
    int nS = a.rows, nSh = a.cols;
    Vec marg(nSh, 0.0);
    for (int s = 0; s < nS; ++s)
        for (int sh = 0; sh < nSh; ++sh) marg[sh] += pS[s] * a(s, sh);
    double total = 0.0;
    for (int s = 0; s < nS; ++s) {
        if (pS[s] == 0.0) continue;
        for (int sh = 0; sh < nSh; ++sh) {
            double v = a(s, sh);
            if (v > 0.0 && marg[sh] > 0.0) total += pS[s] * v * std::log(v / marg[sh]);
        }
    }
    return total > 0.0 ? total : 0.0;
}

// argmin rows with ties spread uniformly over the minimizer set
Mat argmin_rows(const Mat& cost) {
    Mat a(cost.rows, cost.cols, 0.0);
    for (int r = 0; r < cost.rows; ++r) {
        double best = cost(r, 0);
        for (int c = 1; c < cost.cols; ++c) best = std::min(best, cost(r, c));
        int count = 0;
        for (int c = 0; c < cost.cols; ++c)
            if (cost(r, c) <= best + 0.0) ++count;
        for (int c = 0; c < cost.cols; ++c)
            if (cost(r, c) <= best) a(r, c) = 1.0 / count;
    }
    return a;
}

struct RdState {
    Mat a;
    double lagrangian = 0.0;  // E[delta] + lambda I
    double rate = 0.0;
    double distortion = 0.0;
    int iterations = 0;
    bool converged = false;
};

RdState rd_fixed_slope(const Vec& pS, const Mat& delta, double lambda, const Mat* warm,
                       int maxIter = kMaxIter) {
    int nS = delta.rows, nSh = delta.cols;
    RdState st;
    if (lambda <= 0.0) {
        st.a = argmin_rows(delta);
        st.rate = pair_mi(pS, st.a);
        st.distortion = 0.0;
        for (int s = 0; s < nS; ++s)
            for (int sh = 0; sh < nSh; ++sh) st.distortion += pS[s] * st.a(s, sh) * delta(s, sh);
        st.lagrangian = st.distortion;
        st.converged = true;
        return st;
    }

    // warm starts are blended with uniform so dead support can revive
    Mat a(nS, nSh, 1.0 / nSh);
    if (warm && warm->rows == nS && warm->cols == nSh)
        for (size_t i = 0; i < a.data.size(); ++i)
            a.data[i] = 0.99 * warm->data[i] + 0.01 / nSh;
    Vec logMarg(nSh, 0.0);
    Vec marg(nSh, 0.0);
    double prev = std::numeric_limits<double>::max();
    for (int it = 0; it < maxIter; ++it) {
        std::fill(marg.begin(), marg.end(), 0.0);
        for (int s = 0; s < nS; ++s)
            for (int sh = 0; sh < nSh; ++sh) marg[sh] += pS[s] * a(s, sh);
        for (int sh = 0; sh < nSh; ++sh)
            logMarg[sh] = marg[sh] > 0.0 ? std::log(marg[sh]) : neg_inf();

        // a(sh|s) ~ marg(sh) exp(-delta/lambda), row-normalized in log domain
        for (int s = 0; s < nS; ++s) {
            double mx = neg_inf();
            for (int sh = 0; sh < nSh; ++sh)
                mx = std::max(mx, logMarg[sh] - delta(s, sh) / lambda);
            double z = 0.0;
            for (int sh = 0; sh < nSh; ++sh) {
                double t = logMarg[sh] - delta(s, sh) / lambda;
                a(s, sh) = std::isfinite(t) ? std::exp(t - mx) : 0.0;
                z += a(s, sh);
            }
            for (int sh = 0; sh < nSh; ++sh) a(s, sh) /= z;
        }

        double dist = 0.0;
        for (int s = 0; s < nS; ++s)
            for (int sh = 0; sh < nSh; ++sh) dist += pS[s] * a(s, sh) * delta(s, sh);
        double rate = pair_mi(pS, a);
        double lag = dist + lambda * rate;
        st.iterations = it + 1;
        if (std::abs(prev - lag) <= kValueTol * (1.0 + std::abs(lag))) {
            st.converged = true;
            st.rate = rate;
            st.distortion = dist;
            st.lagrangian = lag;
            st.a = a;
            return st;
        }
        prev = lag;
        st.rate = rate;
        st.distortion = dist;
        st.lagrangian = lag;
    }
    st.a = a;
    return st;
}

struct CcState {
    Vec b;
    double lagrangian = 0.0;  // lambda I - E[rho] (0*rho in unconstrained mode)
    double info = 0.0;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

CcState cc_fixed_slope(const Mat& channel, const Vec& rho, double lambda, bool useCost,
                       const Vec* warm, int maxIter = kMaxIter) {
    int nX = channel.rows, nY = channel.cols;
    CcState st;
    Vec b(nX, 1.0 / nX);
    if (warm && static_cast<int>(warm->size()) == nX)
        for (int x = 0; x < nX; ++x) b[x] = 0.99 * (*warm)[x] + 0.01 / nX;
    Vec by(nY, 0.0), d(nX, 0.0);
    double prev = -std::numeric_limits<double>::max();
    for (int it = 0; it < maxIter; ++it) {
        std::fill(by.begin(), by.end(), 0.0);
        for (int x = 0; x < nX; ++x)
            for (int y = 0; y < nY; ++y) by[y] += b[x] * channel(x, y);
        for (int x = 0; x < nX; ++x) {
            double acc = 0.0;
            for (int y = 0; y < nY; ++y) {
                double c = channel(x, y);
                if (c > 0.0) acc += c * std::log(c / by[y]);
            }
            d[x] = acc;
        }
        double info = 0.0, cost = 0.0;
        for (int x = 0; x < nX; ++x) {
            info += b[x] * d[x];
            cost += b[x] * rho[x];
        }
        double lag = useCost ? info - cost / lambda : info;
        st.iterations = it + 1;
        st.info = info;
        st.cost = cost;
        st.lagrangian = lag;
        if (std::abs(prev - lag) <= kValueTol * (1.0 + std::abs(lag))) {
            st.converged = true;
            st.b = b;
            return st;
        }
        prev = lag;

        // multiplicative tilt, max-subtracted before exponentiation
        double mx = neg_inf();
        Vec t(nX);
        for (int x = 0; x < nX; ++x) {
            t[x] = d[x] - (useCost ? rho[x] / lambda : 0.0);
            mx = std::max(mx, t[x]);
        }
        double z = 0.0;
        for (int x = 0; x < nX; ++x) {
            b[x] *= std::exp(t[x] - mx);
            z += b[x];
        }
        if (z <= 0.0) {  // all mass decayed; restart from uniform
            std::fill(b.begin(), b.end(), 1.0 / nX);
        } else {
            for (int x = 0; x < nX; ++x) b[x] /= z;
        }
    }
    st.b = b;
    return st;
}

} // namespace

BAResult blahut_arimoto_rd(const Vec& pS, const Mat& delta, RdMode mode,
                           const Mat* warmKernel) {
    if (static_cast<int>(pS.size()) != delta.rows)
        throw std::invalid_argument("blahut_arimoto_rd: pS/delta shape mismatch");
    BAResult out;
    if (mode.type == RdMode::Type::slope) {
        if (mode.value < 0.0) throw std::invalid_argument("slope must be >= 0");
        RdState st = rd_fixed_slope(pS, delta, mode.value, warmKernel, mode.maxIter);
        out.value = st.rate;
        out.kernel = st.a;
        out.lagrangeSlope = mode.value;
        out.achieved = st.distortion;
        out.iterations = st.iterations;
        out.converged = st.converged;
        return out;
    }

    double target = mode.value;
    int nS = delta.rows, nSh = delta.cols;
    double dmin = 0.0;
    for (int s = 0; s < nS; ++s) {
        double best = delta(s, 0);
        for (int sh = 1; sh < nSh; ++sh) best = std::min(best, delta(s, sh));
        dmin += pS[s] * best;
    }
    double dmax = std::numeric_limits<double>::max();
    for (int sh = 0; sh < nSh; ++sh) {
        double acc = 0.0;
        for (int s = 0; s < nS; ++s) acc += pS[s] * delta(s, sh);
        dmax = std::min(dmax, acc);
    }
    if (target < dmin - 1e-9)
        throw std::invalid_argument("target distortion below the achievable minimum");
    if (target >= dmax) {
        // constant reproduction meets the target; rate zero
        Mat a(nS, nSh, 0.0);
        int bestSh = 0;
        double best = std::numeric_limits<double>::max();
        for (int sh = 0; sh < nSh; ++sh) {
            double acc = 0.0;
            for (int s = 0; s < nS; ++s) acc += pS[s] * delta(s, sh);
            if (acc < best) {
                best = acc;
                bestSh = sh;
            }
        }
        for (int s = 0; s < nS; ++s) a(s, bestSh) = 1.0;
        out.value = 0.0;
        out.kernel = a;
        out.achieved = best;
        out.converged = true;
        return out;
    }

    double lo = 1e-9, hi = 1.0;
    RdState sHi = rd_fixed_slope(pS, delta, hi, warmKernel);
    int guard = 0;
    while (sHi.distortion < target && guard++ < 80) {
        hi *= 2.0;
        sHi = rd_fixed_slope(pS, delta, hi, &sHi.a);
    }
    RdState best = sHi;
    int iters = sHi.iterations;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        RdState sm = rd_fixed_slope(pS, delta, mid, &best.a);
        iters += sm.iterations;
        best = sm;
        if (std::abs(sm.distortion - target) <= 1e-8) break;
        if (sm.distortion < target)
            lo = mid;
        else
            hi = mid;
    }
    out.value = best.rate;
    out.kernel = best.a;
    out.lagrangeSlope = 0.5 * (lo + hi);
    out.achieved = best.distortion;
    out.iterations = iters;
    out.converged = best.converged && std::abs(best.distortion - target) <= 1e-8;
    return out;
}

BAResult blahut_arimoto_cc(const Mat& channel, const Vec& rho, CcMode mode,
                           const Vec* warmMarginal) {
    if (!rho.empty() && static_cast<int>(rho.size()) != channel.rows)
        throw std::invalid_argument("blahut_arimoto_cc: rho/channel shape mismatch");
    Vec rho0 = rho.empty() ? Vec(channel.rows, 0.0) : rho;
    BAResult out;
    if (mode.type == CcMode::Type::unconstrained) {
        CcState st = cc_fixed_slope(channel, rho0, 0.0, false, warmMarginal);
        out.value = st.info;
        out.marginal = st.b;
        out.achieved = st.cost;
        out.iterations = st.iterations;
        out.converged = st.converged;
        return out;
    }
    if (mode.type == CcMode::Type::slope) {
        if (mode.value <= 0.0) throw std::invalid_argument("cost slope must be > 0");
        CcState st = cc_fixed_slope(channel, rho0, mode.value, true, warmMarginal, mode.maxIter);
        out.value = st.info;
        out.marginal = st.b;
        out.lagrangeSlope = mode.value;
        out.achieved = st.cost;
        out.iterations = st.iterations;
        out.converged = st.converged;
        return out;
    }

    // target-P mode: E[rho] is nondecreasing in the slope
    double target = mode.value;
    CcState un = cc_fixed_slope(channel, rho0, 0.0, false, warmMarginal);
    int iters = un.iterations;
    if (un.cost <= target) {  // cost constraint inactive
        out.value = un.info;
        out.marginal = un.b;
        out.achieved = un.cost;
        out.iterations = iters;
        out.converged = un.converged;
        return out;
    }
    double pmin = *std::min_element(rho0.begin(), rho0.end());
    if (target < pmin - 1e-9)
        throw std::invalid_argument("target cost below the cheapest input");
    double lo = 1e-9, hi = 1.0;
    CcState sHi = cc_fixed_slope(channel, rho0, hi, true, warmMarginal);
    iters += sHi.iterations;
    int guard = 0;
    while (sHi.cost < target && guard++ < 80) {
        hi *= 2.0;
        sHi = cc_fixed_slope(channel, rho0, hi, true, &sHi.b);
        iters += sHi.iterations;
    }
    CcState best = sHi;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        CcState sm = cc_fixed_slope(channel, rho0, mid, true, &best.b);
        iters += sm.iterations;
        best = sm;
        if (std::abs(sm.cost - target) <= 1e-8) break;
        if (sm.cost < target)
            lo = mid;
        else
            hi = mid;
    }
    out.value = best.info;
    out.marginal = best.b;
    out.lagrangeSlope = 0.5 * (lo + hi);
    out.achieved = best.cost;
    out.iterations = iters;
    out.converged = best.converged && std::abs(best.cost - target) <= 1e-8;
    return out;
}

} // namespace teamrelax
