#include "teamrelax/info_measures.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace teamrelax {

double kl_divergence(const Vec& p, const Vec& q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: length mismatch");
    double total = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) return pos_inf();
        total += p[i] * std::log(p[i] / q[i]);
    }
    return total;
}

double mutual_information(const Mat& joint) {
    Vec r(joint.rows, 0.0), c(joint.cols, 0.0);
    for (int i = 0; i < joint.rows; ++i)
        for (int j = 0; j < joint.cols; ++j) {
            r[i] += joint(i, j);
            c[j] += joint(i, j);
        }
    double total = 0.0;
    for (int i = 0; i < joint.rows; ++i)
        for (int j = 0; j < joint.cols; ++j) {
            double p = joint(i, j);
            if (p > 0.0) total += p * std::log(p / (r[i] * c[j]));
        }
    return total > 0.0 ? total : 0.0;
}

double f_divergence(const FGenerator& f, const Vec& p, const Vec& q) {
    if (p.size() != q.size()) throw std::invalid_argument("f_divergence: length mismatch");
    double total = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (q[i] > 0.0) {
            total += p[i] > 0.0 ? q[i] * f.eval(p[i] / q[i]) : q[i] * f.valueAtZero;
        } else if (p[i] > 0.0) {
            total += p[i] * f.limitAtZero;
        }
        if (std::isinf(total)) return pos_inf();
    }
    return total;
}

// sum over cells of joint * f(product/joint) with the boundary conventions;
// `rowm`/`colm` are the marginals of `joint`.
static double f_mi_cells(const FGenerator& f, const Mat& joint, const Vec& rowm,
                         const Vec& colm) {
    double total = 0.0;
    for (int i = 0; i < joint.rows; ++i) {
        if (rowm[i] == 0.0) continue;
        for (int j = 0; j < joint.cols; ++j) {
            double p = joint(i, j);
            double prod = rowm[i] * colm[j];
            if (p > 0.0)
                total += p * f.eval(prod / p);
            else if (prod > 0.0)
                total += prod * f.limitAtZero;
        }
    }
    return total;
}

double f_mutual_information(const FGenerator& f, const Mat& joint) {
    Vec r(joint.rows, 0.0), c(joint.cols, 0.0);
    for (int i = 0; i < joint.rows; ++i)
        for (int j = 0; j < joint.cols; ++j) {
            r[i] += joint(i, j);
            c[j] += joint(i, j);
        }
    return f_mi_cells(f, joint, r, c);
}

double f_mi_source(const FGenerator& f, const Vec& pS, const Mat& a) {
    int nS = a.rows, nSh = a.cols;
    Vec marg(nSh, 0.0);
    for (int s = 0; s < nS; ++s)
        for (int sh = 0; sh < nSh; ++sh) marg[sh] += pS[s] * a(s, sh);
    double total = 0.0;
    for (int s = 0; s < nS; ++s) {
        if (pS[s] == 0.0) continue;
        for (int sh = 0; sh < nSh; ++sh) {
            double v = a(s, sh);
            if (v > 0.0)
                total += pS[s] * v * f.eval(marg[sh] / v);
            else if (marg[sh] > 0.0)
                total += pS[s] * marg[sh] * f.limitAtZero;
        }
    }
    return total;
}

double f_mi_channel(const FGenerator& f, const Mat& channel, const Vec& b) {
    int nX = channel.rows, nY = channel.cols;
    Vec by(nY, 0.0);
    for (int x = 0; x < nX; ++x)
        for (int y = 0; y < nY; ++y) by[y] += b[x] * channel(x, y);
    double total = 0.0;
    for (int x = 0; x < nX; ++x) {
        if (b[x] == 0.0) continue;
        for (int y = 0; y < nY; ++y) {
            double c = channel(x, y);
            if (c > 0.0)
                total += b[x] * c * f.eval(by[y] / c);
            else if (by[y] > 0.0)
                total += b[x] * by[y] * f.limitAtZero;
        }
    }
    return total;
}

Slack dpi_slack(const FGenerator& f, const JointDist& q) {
    const Tensor4& t = q.q;
    Mat mXY(t.nX, t.nY, 0.0), mSSh(t.nS, t.nShat, 0.0);
    for (int s = 0; s < t.nS; ++s)
        for (int x = 0; x < t.nX; ++x)
            for (int y = 0; y < t.nY; ++y)
                for (int sh = 0; sh < t.nShat; ++sh) {
                    double v = t.at(s, x, y, sh);
                    mXY(x, y) += v;
                    mSSh(s, sh) += v;
                }
    Slack out;
    out.iXY = f_mutual_information(f, mXY);
    out.iSShat = f_mutual_information(f, mSSh);
    out.slack = out.iXY - out.iSShat;
    return out;
}

Mat f_mi_grad_a(const FGenerator& f, const Vec& pS, const Mat& a, bool* boundary) {
    int nS = a.rows, nSh = a.cols;
    Mat dA(nS, nSh, 0.0);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    // d/da(sh|s) of sum_{s,sh} pS(s) a(sh|s) f(u),  u = marg(sh)/a(sh|s).
    // Zero cells contribute pS(s) marg(sh) limitAtZero; their own gradient is
    // undefined (NaN), but they feed a finite correction into the rest of the
    // column through marg.
    Vec marg(nSh, 0.0);
    for (int s = 0; s < nS; ++s)
        for (int sh = 0; sh < nSh; ++sh) marg[sh] += pS[s] * a(s, sh);
    Vec colDeriv(nSh, 0.0);   // sum over a > 0 of pS(s) f'(u(s,sh))
    Vec colZeroMass(nSh, 0.0);  // sum over a = 0 of pS(s)
    for (int sh = 0; sh < nSh; ++sh)
        for (int s = 0; s < nS; ++s) {
            if (pS[s] == 0.0) continue;
            if (a(s, sh) > 0.0)
                colDeriv[sh] += pS[s] * f.deriv(marg[sh] / a(s, sh));
            else
                colZeroMass[sh] += pS[s];
        }
    for (int s = 0; s < nS; ++s)
        for (int sh = 0; sh < nSh; ++sh) {
            if (pS[s] == 0.0) {
                dA(s, sh) = 0.0;
                continue;
            }
            if (a(s, sh) <= 0.0) {
                dA(s, sh) = nan;
                if (boundary) *boundary = true;
                continue;
            }
            double u = marg[sh] / a(s, sh);
            dA(s, sh) = pS[s] * (f.eval(u) - u * f.deriv(u) + colDeriv[sh] +
                                 f.limitAtZero * colZeroMass[sh]);
        }
    return dA;
}

Vec f_mi_grad_b(const FGenerator& f, const Mat& channel, const Vec& b, bool* boundary) {
    int nX = channel.rows, nY = channel.cols;
    Vec dB(nX, 0.0);

    // d/db(x) of sum_{x,y} b(x) ch(x,y) f(u),  u = bY(y)/ch(x,y); cells with
    // ch = 0 contribute b(x) bY(y) * limitAtZero and their own derivative.
    // The formula extends to b(x) = 0 (one-sided derivative); a truly
    // divergent gradient can only come through f(0+) at unreachable outputs.
    Vec by(nY, 0.0);
    for (int x = 0; x < nX; ++x)
        for (int y = 0; y < nY; ++y) by[y] += b[x] * channel(x, y);

    Vec mixDeriv(nY, 0.0);  // sum_x b(x) f'(u(x,y)) over ch > 0 cells
    Vec zeroMass(nY, 0.0);  // sum over ch = 0 cells of b(x)
    for (int y = 0; y < nY; ++y)
        for (int x = 0; x < nX; ++x) {
            double c = channel(x, y);
            if (c > 0.0) {
                if (b[x] > 0.0) mixDeriv[y] += b[x] * f.deriv(by[y] / c);
            } else {
                zeroMass[y] += b[x];
            }
        }
    for (int x = 0; x < nX; ++x) {
        double g = 0.0;
        for (int y = 0; y < nY; ++y) {
            double c = channel(x, y);
            if (c > 0.0) {
                double fu = by[y] > 0.0 ? f.eval(by[y] / c) : f.valueAtZero;
                if (std::isinf(fu)) {
                    if (boundary) *boundary = true;
                    g = fu;
                    break;
                }
                g += c * (fu + mixDeriv[y]);
                g += zeroMass[y] * c * f.limitAtZero;  // zero cells' bY moves with b(x)
            } else if (by[y] > 0.0) {
                g += by[y] * f.limitAtZero;
            }
        }
        dB[x] = g;
    }
    return dB;
}

Gradients f_mi_gradients(const FGenerator& f, const Vec& pS, const Mat& a,
                         const Mat& channel, const Vec& b) {
    Gradients out;
    out.dA = f_mi_grad_a(f, pS, a, &out.boundary);
    out.dB = f_mi_grad_b(f, channel, b, &out.boundary);
    return out;
}

ProbeReport saddle_probe(const FGenerator& f, const Mat& channel, int trials, unsigned seed) {
    if (trials < 1) throw std::invalid_argument("saddle_probe: trials must be >= 1");
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    int nX = channel.rows, nY = channel.cols;

    auto random_simplex = [&](int n) {
        Vec v(n);
        double t = 0.0;
        for (int i = 0; i < n; ++i) {
            v[i] = expo(rng) + 1e-12;
            t += v[i];
        }
        for (double& x : v) x /= t;
        return v;
    };

    ProbeReport rep;
    rep.worstViolation = pos_inf();
    rep.convexityWorstViolation = pos_inf();
    for (int t = 0; t < trials; ++t) {
        // concavity of I_f(channel b) in b at the midpoint
        Vec b1 = random_simplex(nX), b2 = random_simplex(nX), bm(nX);
        for (int x = 0; x < nX; ++x) bm[x] = 0.5 * (b1[x] + b2[x]);
        double gap = f_mi_channel(f, channel, bm) -
                     0.5 * (f_mi_channel(f, channel, b1) + f_mi_channel(f, channel, b2));
        if (gap < rep.worstViolation) rep.worstViolation = gap;

        // convexity in the kernel for a fixed input marginal
        Vec p = random_simplex(nX);
        Mat k1(nX, nY), k2(nX, nY), km(nX, nY);
        for (int x = 0; x < nX; ++x) {
            Vec r1 = random_simplex(nY), r2 = random_simplex(nY);
            for (int y = 0; y < nY; ++y) {
                k1(x, y) = r1[y];
                k2(x, y) = r2[y];
                km(x, y) = 0.5 * (r1[y] + r2[y]);
            }
        }
        double cgap = 0.5 * (f_mi_channel(f, k1, p) + f_mi_channel(f, k2, p)) -
                      f_mi_channel(f, km, p);
        if (cgap < rep.convexityWorstViolation) rep.convexityWorstViolation = cgap;
    }
    rep.passed = rep.worstViolation >= -1e-9 && rep.convexityWorstViolation >= -1e-9;
    return rep;
}

} // namespace teamrelax
