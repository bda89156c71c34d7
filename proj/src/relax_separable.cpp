#include <algorithm>
#include <cmath>

#include "relax_detail.hpp"
#include "teamrelax/blahut_arimoto.hpp"
#include "teamrelax/relaxation.hpp"

namespace teamrelax {

const char* to_string(RelaxStatus s) {
    switch (s) {
        case RelaxStatus::optimal: return "optimal";
        case RelaxStatus::maxIter: return "maxIter";
        case RelaxStatus::infeasible: return "infeasible";
        case RelaxStatus::degenerate: return "degenerate";
    }
    return "unknown";
}

namespace detail {

// (delta, rho) view of a cost that fits the (a,b)-form objective. Dense
// tensors qualify when their separability residual is negligible; the
// (x,y)-block folds into rho through the channel.
std::optional<std::pair<Mat, Vec>> reduce_to_pair_cost(const Instance& inst) {
    if (inst.has_separable() && !inst.separable->has_cross())
        return std::make_pair(inst.separable->delta, inst.separable->rho);
    if (inst.has_separable()) return std::nullopt;  // cross term: Bansal route
    SepReport rep = separability_projection(inst);
    double scale = 0.0;
    for (double v : inst.denseCost->data) scale = std::max(scale, std::abs(v));
    if (rep.residual > 1e-9 * (1.0 + scale) * std::sqrt(double(inst.tensor_entries())))
        return std::nullopt;
    Vec rho(inst.nX, 0.0);
    for (int x = 0; x < inst.nX; ++x) {
        double fold = 0.0;
        for (int y = 0; y < inst.nY; ++y) fold += inst.channel(x, y) * rep.f3(x, y);
        rho[x] = rep.f1[x] + fold;
    }
    return std::make_pair(rep.f2, rho);
}

void gate_saddle(const FGenerator& f, const Mat& channel) {
    if (f.saddleCertified) return;
    ProbeReport probe = saddle_probe(f, channel, 400, 20240u);
    if (!probe.passed)
        throw std::invalid_argument("f generator '" + f.name +
                                    "' is not saddle-certified and failed the saddle probe "
                                    "on this channel; refusing the relaxation");
}

namespace {

struct SubSol {
    Mat a;
    Vec b;
    double aLin = 0.0, bLin = 0.0;  // <delta pS, a>, <rho, b>
    double iA = 0.0, iB = 0.0;
    double dual = 0.0;  // aLin + lambda iA + bLin - lambda iB
    bool converged = true;
    double viol() const { return iA - iB; }
    double primal() const { return aLin + bLin; }
};

struct DualCtx {
    const Vec& pS;
    const Mat& channel;
    const Mat& delta;
    const Vec& rho;
    const FGenerator& f;
};

double lin_a(const DualCtx& c, const Mat& a) {
    double v = 0.0;
    for (int s = 0; s < c.delta.rows; ++s)
        for (int sh = 0; sh < c.delta.cols; ++sh) v += c.pS[s] * a(s, sh) * c.delta(s, sh);
    return v;
}

// argmin rows / simplex vertex mixtures for the lambda = 0 subproblems
Mat argmin_rows_uniform_ties(const Mat& cost) {
    Mat a(cost.rows, cost.cols, 0.0);
    for (int r = 0; r < cost.rows; ++r) {
        double best = cost(r, 0);
        for (int c = 1; c < cost.cols; ++c) best = std::min(best, cost(r, c));
        int n = 0;
        for (int c = 0; c < cost.cols; ++c)
            if (cost(r, c) <= best) ++n;
        for (int c = 0; c < cost.cols; ++c)
            if (cost(r, c) <= best) a(r, c) = 1.0 / n;
    }
    return a;
}

Vec argmin_vec_uniform_ties(const Vec& cost) {
    double best = *std::min_element(cost.begin(), cost.end());
    int n = 0;
    for (double v : cost)
        if (v <= best) ++n;
    Vec b(cost.size(), 0.0);
    for (size_t i = 0; i < cost.size(); ++i)
        if (cost[i] <= best) b[i] = 1.0 / n;
    return b;
}

constexpr double kFloor = 1e-16;

void floor_rows(Mat& m) {
    for (int r = 0; r < m.rows; ++r) {
        double z = 0.0;
        for (int c = 0; c < m.cols; ++c) {
            if (m(r, c) < kFloor) m(r, c) = kFloor;
            z += m(r, c);
        }
        for (int c = 0; c < m.cols; ++c) m(r, c) /= z;
    }
}

void floor_vec(Vec& v) {
    double z = 0.0;
    for (double& x : v) {
        if (x < kFloor) x = kFloor;
        z += x;
    }
    for (double& x : v) x /= z;
}

// exponentiated-gradient minimization of <delta pS, a> + lambda I_f(a pS)
// over the row simplices; used for f kinds without a Blahut fixed point
std::pair<Mat, bool> mirror_a(const DualCtx& c, double lambda, const Mat* warm) {
    int nS = c.delta.rows, nSh = c.delta.cols;
    Mat a(nS, nSh, 1.0 / nSh);
    if (warm && warm->rows == nS)
        for (size_t i = 0; i < a.data.size(); ++i) a.data[i] = 0.99 * warm->data[i] + 0.01 / nSh;
    floor_rows(a);

    auto objective = [&](const Mat& m) {
        return lin_a(c, m) + lambda * f_mi_source(c.f, c.pS, m);
    };
    double obj = objective(a);
    double eta = 0.5;
    int stable = 0;
    bool converged = false;
    for (int it = 0; it < 20000; ++it) {
        Mat dA = f_mi_grad_a(c.f, c.pS, a, nullptr);
        Mat trial(nS, nSh, 0.0);
        bool accepted = false;
        for (int bt = 0; bt < 40 && !accepted; ++bt) {
            for (int s = 0; s < nS; ++s) {
                if (c.pS[s] == 0.0) {
                    for (int sh = 0; sh < nSh; ++sh) trial(s, sh) = 1.0 / nSh;
                    continue;
                }
                double mx = -1e300;
                for (int sh = 0; sh < nSh; ++sh) {
                    double g = c.delta(s, sh) + lambda * dA(s, sh) / c.pS[s];
                    double t = std::log(a(s, sh)) - eta * g;
                    trial(s, sh) = t;
                    mx = std::max(mx, t);
                }
                double z = 0.0;
                for (int sh = 0; sh < nSh; ++sh) {
                    trial(s, sh) = std::exp(trial(s, sh) - mx);
                    z += trial(s, sh);
                }
                for (int sh = 0; sh < nSh; ++sh) trial(s, sh) /= z;
            }
            floor_rows(trial);
            double tObj = objective(trial);
            if (tObj <= obj + 1e-15) {
                accepted = true;
                double delta = obj - tObj;
                a = trial;
                obj = tObj;
                eta = std::min(eta * 1.25, 1e6);
                stable = delta <= 1e-14 * (1.0 + std::abs(obj)) ? stable + 1 : 0;
            } else {
                eta *= 0.5;
                if (eta < 1e-18) {
                    stable = 10;
                    accepted = true;
                }
            }
        }
        if (stable >= 5) {
            converged = true;
            break;
        }
    }
    return {a, converged};
}

// exponentiated-gradient minimization of <rho, b> - lambda I_f(channel b)
std::pair<Vec, bool> mirror_b(const DualCtx& c, double lambda, const Vec* warm) {
    int nX = c.channel.rows;
    Vec b(nX, 1.0 / nX);
    if (warm && static_cast<int>(warm->size()) == nX)
        for (int x = 0; x < nX; ++x) b[x] = 0.99 * (*warm)[x] + 0.01 / nX;
    floor_vec(b);

    auto objective = [&](const Vec& v) {
        return dot(c.rho, v) - lambda * f_mi_channel(c.f, c.channel, v);
    };
    double obj = objective(b);
    double eta = 0.5;
    int stable = 0;
    bool converged = false;
    for (int it = 0; it < 20000; ++it) {
        Vec dB = f_mi_grad_b(c.f, c.channel, b, nullptr);
        bool accepted = false;
        for (int bt = 0; bt < 40 && !accepted; ++bt) {
            Vec trial(nX);
            double mx = -1e300;
            for (int x = 0; x < nX; ++x) {
                double g = c.rho[x] - lambda * dB[x];
                trial[x] = std::log(b[x]) - eta * g;
                mx = std::max(mx, trial[x]);
            }
            double z = 0.0;
            for (int x = 0; x < nX; ++x) {
                trial[x] = std::exp(trial[x] - mx);
                z += trial[x];
            }
            for (int x = 0; x < nX; ++x) trial[x] /= z;
            floor_vec(trial);
            double tObj = objective(trial);
            if (tObj <= obj + 1e-15) {
                accepted = true;
                double delta = obj - tObj;
                b = trial;
                obj = tObj;
                eta = std::min(eta * 1.25, 1e6);
                stable = delta <= 1e-14 * (1.0 + std::abs(obj)) ? stable + 1 : 0;
            } else {
                eta *= 0.5;
                if (eta < 1e-18) {
                    stable = 10;
                    accepted = true;
                }
            }
        }
        if (stable >= 5) {
            converged = true;
            break;
        }
    }
    return {b, converged};
}

// smooth pointwise under-estimator of the total-variation generator; the
// subgradient iteration can stall at the kink, this keeps the dual certified
FGenerator smoothed_tv(double eps) {
    return FGenerator::custom(
        "total-variation-smoothed",
        [eps](double t) {
            double d = t - 1.0;
            return 0.5 * (std::sqrt(d * d + eps * eps) - eps);
        },
        [eps](double t) {
            double d = t - 1.0;
            return 0.5 * d / std::sqrt(d * d + eps * eps);
        },
        0.5 * (std::sqrt(1.0 + eps * eps) - eps), 0.5);
}

SubSol eval_lambda(const DualCtx& c, double lambda, const SubSol* warm) {
    SubSol out;
    bool affineLike = c.f.kind == FGenerator::Kind::affine;
    if (lambda <= 0.0 || affineLike) {
        // the information terms vanish (lambda = 0) or are identically zero
        Mat aCost(c.delta.rows, c.delta.cols, 0.0);
        for (int s = 0; s < c.delta.rows; ++s)
            for (int sh = 0; sh < c.delta.cols; ++sh) aCost(s, sh) = c.delta(s, sh);
        out.a = argmin_rows_uniform_ties(aCost);
        out.b = argmin_vec_uniform_ties(c.rho);
        out.converged = true;
        out.aLin = lin_a(c, out.a);
        out.bLin = dot(c.rho, out.b);
        out.iA = f_mi_source(c.f, c.pS, out.a);
        out.iB = f_mi_channel(c.f, c.channel, out.b);
        out.dual = out.aLin + lambda * out.iA + out.bLin - lambda * out.iB;
        return out;
    }
    if (c.f.kind == FGenerator::Kind::negLog) {
        BAResult rd = blahut_arimoto_rd(c.pS, c.delta, RdMode::slope(lambda),
                                        warm ? &warm->a : nullptr);
        BAResult cc = blahut_arimoto_cc(c.channel, c.rho, CcMode::slope(lambda),
                                        warm ? &warm->b : nullptr);
        out.a = rd.kernel;
        out.b = cc.marginal;
        out.converged = rd.converged && cc.converged;
        out.aLin = lin_a(c, out.a);
        out.bLin = dot(c.rho, out.b);
        out.iA = f_mi_source(c.f, c.pS, out.a);
        out.iB = f_mi_channel(c.f, c.channel, out.b);

        // certified subproblem bounds at the iterates: the log-sum-exp form
        // of the rate-distortion Lagrangian over any output marginal, and
        // the output-distribution capacity bound
        int nS = c.delta.rows, nSh = c.delta.cols;
        Vec marg(nSh, 0.0);
        for (int s = 0; s < nS; ++s)
            for (int sh = 0; sh < nSh; ++sh) marg[sh] += c.pS[s] * out.a(s, sh);
        double aPart = 0.0;
        for (int s = 0; s < nS; ++s) {
            if (c.pS[s] == 0.0) continue;
            double tmax = -1e300;
            for (int sh = 0; sh < nSh; ++sh)
                if (marg[sh] > 0.0)
                    tmax = std::max(tmax, std::log(marg[sh]) - c.delta(s, sh) / lambda);
            double z = 0.0;
            for (int sh = 0; sh < nSh; ++sh)
                if (marg[sh] > 0.0)
                    z += std::exp(std::log(marg[sh]) - c.delta(s, sh) / lambda - tmax);
            aPart += c.pS[s] * (-lambda) * (tmax + std::log(z));
        }
        int nX = c.channel.rows, nY = c.channel.cols;
        Vec by(nY, 0.0);
        for (int x = 0; x < nX; ++x)
            for (int y = 0; y < nY; ++y) by[y] += out.b[x] * c.channel(x, y);
        double worst = -1e300;
        for (int x = 0; x < nX; ++x) {
            double d = 0.0;
            for (int y = 0; y < nY; ++y) {
                double cv = c.channel(x, y);
                if (cv > 0.0) d += cv * std::log(cv / by[y]);
            }
            worst = std::max(worst, lambda * d - c.rho[x]);
        }
        out.dual = aPart - worst;
        return out;
    }

    bool nonsmooth = c.f.kind == FGenerator::Kind::totalVariation;
    double eps = nonsmooth ? 1e-5 / (1.0 + lambda) : 0.0;
    FGenerator sub = nonsmooth ? smoothed_tv(eps) : c.f;
    DualCtx cs{c.pS, c.channel, c.delta, c.rho, sub};
    auto [a, ca] = mirror_a(cs, lambda, warm ? &warm->a : nullptr);
    auto [b, cb] = mirror_b(cs, lambda, warm ? &warm->b : nullptr);
    out.a = std::move(a);
    out.b = std::move(b);
    out.converged = ca && cb;
    out.aLin = lin_a(c, out.a);
    out.bLin = dot(c.rho, out.b);
    out.iA = f_mi_source(c.f, c.pS, out.a);
    out.iB = f_mi_channel(c.f, c.channel, out.b);

    // Frank-Wolfe gaps certify the subproblem values against descent stalls;
    // for the smoothed total variation the b side also gets the -lambda*eps/2
    // shift matching the over-estimator sqrt(d^2+eps^2)/2
    int nS = c.delta.rows, nSh = c.delta.cols, nX = c.channel.rows;
    Mat dA = f_mi_grad_a(sub, c.pS, out.a, nullptr);
    Vec dB = f_mi_grad_b(sub, c.channel, out.b, nullptr);
    double gapA = 0.0;
    for (int s = 0; s < nS; ++s) {
        double cur = 0.0, mn = 1e300;
        for (int sh = 0; sh < nSh; ++sh) {
            double gcell = c.pS[s] * c.delta(s, sh) + lambda * dA(s, sh);
            cur += out.a(s, sh) * gcell;
            mn = std::min(mn, gcell);
        }
        gapA += cur - mn;
    }
    double curB = 0.0, mnB = 1e300;
    for (int x = 0; x < nX; ++x) {
        double gx = c.rho[x] - lambda * dB[x];
        curB += out.b[x] * gx;
        mnB = std::min(mnB, gx);
    }
    double gapB = curB - mnB;
    double aPart = out.aLin + lambda * f_mi_source(sub, c.pS, out.a) - gapA;
    double bPart = out.bLin - lambda * f_mi_channel(sub, c.channel, out.b) - gapB -
                   0.5 * lambda * eps;
    out.dual = aPart + bPart;
    return out;
}

double initial_lambda_max(const DualCtx& c) {
    // 2 * cost spread / smallest nonzero channel divergence (design choice;
    // the bracket doubles adaptively anyway)
    double lo = 1e300, hi = -1e300;
    for (double v : c.delta.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : c.rho) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double spread = hi - lo;
    double dmin = 1e300;
    for (int x = 0; x < c.channel.rows; ++x)
        for (int x2 = 0; x2 < c.channel.rows; ++x2) {
            if (x == x2) continue;
            double d = kl_divergence(row_copy(c.channel, x), row_copy(c.channel, x2));
            if (std::isfinite(d) && d > 1e-12) dmin = std::min(dmin, d);
        }
    if (dmin >= 1e300) dmin = 1e-9;
    double lam = 2.0 * spread / std::max(1e-9, dmin);
    return std::max(lam, 1e-6);
}

struct DualSearchResult {
    SubSol sol;
    double lambda = 0.0;
    double dualValue = 0.0;
    bool converged = true;
};

DualSearchResult dual_search(const DualCtx& c, double tol) {
    DualSearchResult res;
    SubSol s0 = eval_lambda(c, 0.0, nullptr);
    double slackTol = std::min(tol, 1e-9);
    if (s0.viol() <= slackTol) {
        res.sol = s0;
        res.lambda = 0.0;
        res.dualValue = s0.dual;
        res.converged = s0.converged;
        return res;
    }

    double lamHi = initial_lambda_max(c);
    SubSol sHi = eval_lambda(c, lamHi, &s0);
    int guard = 0;
    while (sHi.viol() > 0.0 && guard++ < 60) {
        lamHi *= 2.0;
        sHi = eval_lambda(c, lamHi, &sHi);
    }

    // golden-section maximization of the concave dual on [0, lamHi]
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = lamHi;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    SubSol sx1 = eval_lambda(c, x1, &sHi);
    SubSol sx2 = eval_lambda(c, x2, &sx1);
    // coarse maximization; the feasibility bisection below sharpens lambda
    for (int it = 0; it < 120 && hi - lo > 1e-6 * (1.0 + hi); ++it) {
        if (sx1.dual >= sx2.dual) {
            hi = x2;
            x2 = x1;
            sx2 = sx1;
            x1 = hi - gr * (hi - lo);
            sx1 = eval_lambda(c, x1, &sx2);
        } else {
            lo = x1;
            x1 = x2;
            sx1 = sx2;
            x2 = lo + gr * (hi - lo);
            sx2 = eval_lambda(c, x2, &sx1);
        }
    }

    // land on the feasible side of the DPI with a small duality gap
    double lamLo = 0.0, lamUp = lamHi;
    SubSol sUp = sHi;
    double mid = 0.5 * (lo + hi);
    SubSol sMid = eval_lambda(c, mid, &sx1);
    if (sMid.viol() <= 0.0) {
        lamUp = mid;
        sUp = sMid;
    } else {
        lamLo = mid;
    }
    double gapTol = std::min(tol, 1e-9) * (1.0 + std::abs(sMid.primal()));
    for (int it = 0; it < 90; ++it) {
        if (sUp.viol() <= slackTol && lamUp * std::abs(sUp.viol()) <= gapTol) break;
        double m = 0.5 * (lamLo + lamUp);
        SubSol sm = eval_lambda(c, m, &sUp);
        if (sm.viol() <= 0.0) {
            lamUp = m;
            sUp = sm;
        } else {
            lamLo = m;
        }
        if (lamUp - lamLo <= 1e-16 * (1.0 + lamUp)) break;
    }

    if (sUp.viol() > slackTol) {
        // no strictly feasible iterate found (e.g. a useless channel whose
        // capacity side is flat at zero); report the best near-feasible one
        res.converged = false;
    }
    res.sol = sUp;
    res.lambda = lamUp;
    res.dualValue = sUp.dual;
    res.converged = res.converged && sUp.converged;
    return res;
}

} // namespace

// Multiplier reconstruction for the (a,b) system at the given trial lambdas.
std::pair<Multipliers, KKTReport> kkt_reconstruct(const Vec& pS, const Mat& channel,
                                                  const Mat& delta, const Vec& rho,
                                                  const EndToEndPair& pair, const FGenerator& f,
                                                  const std::vector<double>& lambdas) {
    int nS = delta.rows, nSh = delta.cols, nX = static_cast<int>(rho.size());
    Gradients g = f_mi_gradients(f, pS, pair.a, channel, pair.b);
    double iA = f_mi_source(f, pS, pair.a);
    double iB = f_mi_channel(f, channel, pair.b);
    double slack = iB - iA;

    double feas = std::max(0.0, -slack);
    for (int s = 0; s < nS; ++s) {
        double rs = 0.0;
        for (int sh = 0; sh < nSh; ++sh) rs += pair.a(s, sh);
        feas = std::max(feas, std::abs(rs - 1.0));
    }
    feas = std::max(feas, std::abs(sum(pair.b) - 1.0));

    Multipliers best;
    KKTReport bestRep;
    bool first = true;
    for (double lam : lambdas) {
        if (lam < 0.0) continue;
        Multipliers m;
        m.lambda = lam;
        m.muA = Vec(nS, 0.0);
        m.nuA = Mat(nS, nSh, 0.0);
        m.nuB = Vec(nX, 0.0);

        // stationarity in a: delta = -lambda gA - muA + nuA with gA = dA/pS;
        // rows are exact by construction, zero-mass cells are skipped
        double compA = 0.0;
        for (int s = 0; s < nS; ++s) {
            double mn = 1e300;
            for (int sh = 0; sh < nSh; ++sh) {
                if (pair.a(s, sh) <= 0.0 || pS[s] == 0.0) continue;
                double gA = g.dA(s, sh) / pS[s];
                mn = std::min(mn, delta(s, sh) + lam * gA);
            }
            if (mn >= 1e300) mn = 0.0;
            m.muA[s] = -mn;
            double comp = 0.0;
            for (int sh = 0; sh < nSh; ++sh) {
                if (pair.a(s, sh) <= 0.0 || pS[s] == 0.0) continue;
                double gA = g.dA(s, sh) / pS[s];
                m.nuA(s, sh) = delta(s, sh) + lam * gA + m.muA[s];
                comp += pair.a(s, sh) * m.nuA(s, sh);
            }
            compA = std::max(compA, pS[s] * std::abs(comp));
        }

        double mnB = 1e300;
        for (int x = 0; x < nX; ++x) {
            if (!std::isfinite(g.dB[x])) continue;
            mnB = std::min(mnB, rho[x] - lam * g.dB[x]);
        }
        if (mnB >= 1e300) mnB = 0.0;
        m.muB = -mnB;
        double compB = 0.0;
        for (int x = 0; x < nX; ++x) {
            if (!std::isfinite(g.dB[x])) continue;
            m.nuB[x] = rho[x] - lam * g.dB[x] + m.muB;
            compB += pair.b[x] * m.nuB[x];
        }

        KKTReport rep;
        rep.stationarityA = compA;  // complementarity of (nuA, a), pS-scaled
        rep.stationarityB = std::abs(compB);
        rep.dpiComplementarity = std::abs(lam * slack);
        rep.signViolations = 0.0;
        rep.primalFeasibility = feas;
        rep.finalize();
        if (first || rep.maxResidual < bestRep.maxResidual) {
            best = m;
            bestRep = rep;
            first = false;
        }
    }
    return {best, bestRep};
}

RelaxSolution pack_separable_solution(const Vec& pS, const Mat& channel, const Mat& delta,
                                      const Vec& rho, const FGenerator& f, double tol,
                                      const DualSearchResult& ds) {
    RelaxSolution sol;
    sol.pair.a = ds.sol.a;
    sol.pair.b = ds.sol.b;
    sol.value = ds.sol.primal();
    sol.dualValue = ds.dualValue;
    sol.dpiSlack = ds.sol.iB - ds.sol.iA;

    std::vector<double> lams = {0.0, ds.lambda};
    for (double fac : {0.5, 0.9, 0.99, 1.01, 1.1, 2.0}) lams.push_back(ds.lambda * fac);
    auto [mult, rep] = kkt_reconstruct(pS, channel, delta, rho, sol.pair, f, lams);
    sol.mult = mult;
    sol.kkt = rep;
    bool tight = std::abs(sol.value - sol.dualValue) <= std::max(tol, 1e-9) * (1.0 + std::abs(sol.value));
    sol.status = ds.converged && tight && rep.maxResidual <= std::max(tol, 1e-7)
                     ? RelaxStatus::optimal
                     : RelaxStatus::maxIter;
    return sol;
}

RelaxSolution solve_pair_relaxation(const Vec& pS, const Mat& channel, const Mat& delta,
                                    const Vec& rho, const FGenerator& f, double tol) {
    DualCtx ctx{pS, channel, delta, rho, f};
    DualSearchResult ds = dual_search(ctx, tol);
    return pack_separable_solution(pS, channel, delta, rho, f, tol, ds);
}

} // namespace detail

RelaxSolution solve_relaxation_separable(const Instance& inst, const FGenerator& f, double tol) {
    inst.validate();
    if (tol <= 0.0) throw std::invalid_argument("tol must be positive");
    auto cost = detail::reduce_to_pair_cost(inst);
    if (!cost)
        throw std::invalid_argument(
            "cost is not of the delta+rho form; use the bansal or general solver");
    detail::gate_saddle(f, inst.channel);
    return detail::solve_pair_relaxation(inst.pS, inst.channel, cost->first, cost->second, f, tol);
}

RelaxSolution solve_relaxation_bansal(const Instance& inst, double tol) {
    inst.validate();
    if (tol <= 0.0) throw std::invalid_argument("tol must be positive");
    if (!inst.has_separable())
        throw std::invalid_argument("bansal solver needs the structured cost form");
    const SeparableCost& sc = *inst.separable;
    FGenerator f = FGenerator::neg_log();
    if (!sc.has_cross())
        return solve_relaxation_separable(inst, f, tol);

    double alpha = 0.0;
    for (int s = 0; s < inst.nS; ++s) alpha += (*sc.tauPrime)[s] * inst.pS[s];
    alpha = std::abs(sc.kCross) * std::sqrt(alpha);

    double rhoScale = 0.0;
    for (double v : sc.rho) rhoScale = std::max(rhoScale, std::abs(v));
    double r0sq = 0.0;
    for (int x = 0; x < inst.nX; ++x) r0sq += sc.rho[x] / inst.nX;
    if (r0sq <= 1e-14 * (1.0 + rhoScale)) {
        RelaxSolution sol;
        sol.status = RelaxStatus::degenerate;  // all mass on rho = 0
        return sol;
    }

    double R = std::sqrt(r0sq);
    double rLin = R;  // linearization point of the root term in the last solve
    RelaxSolution inner;
    Vec rhoEff(inst.nX, 0.0);
    for (int it = 0; it < 300; ++it) {
        double cR = 1.0 - alpha / (2.0 * R);
        for (int x = 0; x < inst.nX; ++x) rhoEff[x] = cR * sc.rho[x];
        rLin = R;
        inner = detail::solve_pair_relaxation(inst.pS, inst.channel, sc.delta, rhoEff, f, tol);
        double rb = dot(sc.rho, inner.pair.b);
        if (rb <= 1e-14 * (1.0 + rhoScale)) {
            RelaxSolution sol;
            sol.status = RelaxStatus::degenerate;
            return sol;
        }
        double rNew = std::sqrt(rb);
        double next = 0.5 * (R + rNew);
        if (std::abs(next - R) <= 1e-10) {
            R = next;
            break;
        }
        R = next;
    }

    RelaxSolution sol = inner;
    double rb = dot(sc.rho, sol.pair.b);
    double lin = 0.0;
    for (int s = 0; s < inst.nS; ++s)
        for (int sh = 0; sh < inst.nShat; ++sh)
            lin += inst.pS[s] * sol.pair.a(s, sh) * sc.delta(s, sh);
    sol.value = lin + rb - alpha * std::sqrt(rb);
    // r - alpha sqrt(r) lies above its tangent at rLin^2, so the effective
    // problem's dual bound transfers with a -alpha*rLin/2 offset
    sol.dualValue = inner.dualValue - 0.5 * alpha * rLin;
    if (std::abs(sol.value - sol.dualValue) > std::max(tol, 1e-9) * (1.0 + std::abs(sol.value)) &&
        sol.status == RelaxStatus::optimal)
        sol.status = RelaxStatus::maxIter;
    return sol;
}

std::pair<Multipliers, KKTReport> kkt_residual_separable(const Instance& inst,
                                                         const EndToEndPair& pair,
                                                         const FGenerator& f,
                                                         const LambdaGrid& grid) {
    inst.validate();
    validate_pair(pair, inst);
    auto cost = detail::reduce_to_pair_cost(inst);
    if (!cost)
        throw std::invalid_argument("kkt_residual_separable needs a delta+rho cost");
    const Mat& delta = cost->first;
    const Vec& rho = cost->second;

    std::vector<double> lams = {0.0};
    double hi = grid.hi;
    if (hi <= 0.0) {
        detail::DualCtx ctx{inst.pS, inst.channel, delta, rho, f};
        hi = detail::initial_lambda_max(ctx);
    }
    double lo = std::max(grid.lo, hi * 1e-8);
    int pts = std::max(grid.points, 2);
    for (int i = 0; i < pts; ++i)
        lams.push_back(lo * std::pow(hi / lo, double(i) / (pts - 1)));

    auto [mult, rep] =
        detail::kkt_reconstruct(inst.pS, inst.channel, delta, rho, pair, f, lams);
    // local refinement around the best lambda with a shrinking window
    double w = mult.lambda > 0.0 ? 0.5 * mult.lambda : hi * 1e-8;
    for (int round = 0; round < 10; ++round) {
        std::vector<double> fine;
        double center = mult.lambda;
        for (int i = -8; i <= 8; ++i) fine.push_back(std::max(0.0, center + w * i / 8.0));
        auto [m2, r2] =
            detail::kkt_reconstruct(inst.pS, inst.channel, delta, rho, pair, f, fine);
        if (r2.maxResidual < rep.maxResidual) {
            mult = m2;
            rep = r2;
        }
        w /= 6.0;
    }
    return {mult, rep};
}

} // namespace teamrelax
