#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "relax_detail.hpp"
#include "teamrelax/blahut_arimoto.hpp"
#include "teamrelax/exact_solver.hpp"
#include "teamrelax/relaxation.hpp"
#include "teamrelax/core_ops.hpp"

namespace teamrelax {

namespace {

constexpr double kGradFloor = 1e-12;  // conditional floor for gradient evaluation

struct Marginals {
    Mat a;       // nS x nShat (rows conditioned on pS)
    Vec b;       // nX
    double iA = 0.0, iB = 0.0;
};

// direct negLog information terms; the generator path allocates per cell
double fast_mi_source(const Vec& pS, const Mat& a) {
    Vec marg(a.cols, 0.0);
    for (int s = 0; s < a.rows; ++s)
        for (int sh = 0; sh < a.cols; ++sh) marg[sh] += pS[s] * a(s, sh);
    double total = 0.0;
    for (int s = 0; s < a.rows; ++s) {
        if (pS[s] <= 0.0) continue;
        for (int sh = 0; sh < a.cols; ++sh) {
            double v = a(s, sh);
            if (v > 0.0 && marg[sh] > 0.0) total += pS[s] * v * std::log(v / marg[sh]);
        }
    }
    return total > 0.0 ? total : 0.0;
}

double fast_mi_channel(const Mat& channel, const Vec& b) {
    Vec by(channel.cols, 0.0);
    for (int x = 0; x < channel.rows; ++x)
        for (int y = 0; y < channel.cols; ++y) by[y] += b[x] * channel(x, y);
    double total = 0.0;
    for (int x = 0; x < channel.rows; ++x) {
        if (b[x] <= 0.0) continue;
        for (int y = 0; y < channel.cols; ++y) {
            double c = channel(x, y);
            if (c > 0.0 && by[y] > 0.0) total += b[x] * c * std::log(c / by[y]);
        }
    }
    return total > 0.0 ? total : 0.0;
}

Marginals joint_marginals(const Instance& inst, const Tensor4& q, const FGenerator& f) {
    Marginals m;
    m.a = Mat(inst.nS, inst.nShat, 0.0);
    m.b = Vec(inst.nX, 0.0);
    const double* cell = q.data.data();
    for (int s = 0; s < inst.nS; ++s)
        for (int x = 0; x < inst.nX; ++x)
            for (int y = 0; y < inst.nY; ++y)
                for (int sh = 0; sh < inst.nShat; ++sh, ++cell) {
                    m.a(s, sh) += *cell;
                    m.b[x] += *cell;
                }
    for (int s = 0; s < inst.nS; ++s) {
        if (inst.pS[s] <= 0.0) {
            for (int sh = 0; sh < inst.nShat; ++sh) m.a(s, sh) = 1.0 / inst.nShat;
            continue;
        }
        for (int sh = 0; sh < inst.nShat; ++sh) m.a(s, sh) /= inst.pS[s];
    }
    if (f.kind == FGenerator::Kind::negLog) {
        m.iA = fast_mi_source(inst.pS, m.a);
        m.iB = fast_mi_channel(inst.channel, m.b);
    } else {
        m.iA = f_mi_source(f, inst.pS, m.a);
        m.iB = f_mi_channel(f, inst.channel, m.b);
    }
    return m;
}

// Projection machinery: the source-marginal and channel-consistency
// constraints form one affine subspace whose Gram matrix is precomputed, so
// the affine projection is a single exact solve. Nonnegativity is handled by
// Dykstra iterations over {affine, orthant}; the plain cyclic scheme returns
// arbitrary feasible points and silently turns gradient steps into ascent.
class AffineProjector {
  public:
    AffineProjector(const Instance& inst) : inst_(inst) {
        nRows_ = inst.nS + inst.nX * inst.nY;
        int nS = inst.nS, nX = inst.nX, nY = inst.nY, nSh = inst.nShat;
        double sliceS = static_cast<double>(nX) * nY * nSh;
        double K = static_cast<double>(nS) * nSh;
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nRows_, nRows_);
        for (int s = 0; s < nS; ++s) G(s, s) = sliceS;
        for (int s = 0; s < nS; ++s)
            for (int x = 0; x < nX; ++x)
                for (int y = 0; y < nY; ++y)
                    G(s, nS + x * nY + y) = G(nS + x * nY + y, s) =
                        nSh * (1.0 - nY * inst.channel(x, y));
        for (int x = 0; x < nX; ++x)
            for (int y = 0; y < nY; ++y)
                for (int y2 = 0; y2 < nY; ++y2)
                    G(nS + x * nY + y, nS + x * nY + y2) =
                        K * ((y == y2 ? 1.0 : 0.0) - inst.channel(x, y) - inst.channel(x, y2) +
                             nY * inst.channel(x, y) * inst.channel(x, y2));
        G.diagonal().array() += 1e-11 * (sliceS + K);
        solver_ = G.ldlt();
    }

    double violation(const Tensor4& q) const {
        Eigen::VectorXd r = residuals(q);
        double worst = r.cwiseAbs().maxCoeff();
        for (double v : q.data) worst = std::max(worst, std::max(0.0, -v));
        return worst;
    }

    // projection of a direction onto the tangent space {A d = 0}
    void project_direction(std::vector<double>& d) const {
        const Instance& inst = inst_;
        int nS = inst.nS, nX = inst.nX, nY = inst.nY, nSh = inst.nShat;
        Eigen::VectorXd r(nRows_);
        Tensor4 t;
        t.nS = nS; t.nX = nX; t.nY = nY; t.nShat = nSh;
        t.data = d;
        for (int s = 0; s < nS; ++s) {
            double mass = 0.0;
            for (int x = 0; x < nX; ++x)
                for (int y = 0; y < nY; ++y)
                    for (int sh = 0; sh < nSh; ++sh) mass += t.at(s, x, y, sh);
            r(s) = mass;
        }
        for (int x = 0; x < nX; ++x) {
            Vec ty(nY, 0.0);
            double m = 0.0;
            for (int s = 0; s < nS; ++s)
                for (int y = 0; y < nY; ++y)
                    for (int sh = 0; sh < nSh; ++sh) {
                        double v = t.at(s, x, y, sh);
                        ty[y] += v;
                        m += v;
                    }
            for (int y = 0; y < nY; ++y) r(nS + x * nY + y) = ty[y] - inst.channel(x, y) * m;
        }
        Eigen::VectorXd gamma = solver_.solve(r);
        for (int s = 0; s < nS; ++s) {
            double gs = gamma(s);
            for (int x = 0; x < nX; ++x) {
                double gc = 0.0;
                for (int y = 0; y < nY; ++y) gc += gamma(nS + x * nY + y) * inst.channel(x, y);
                for (int y = 0; y < nY; ++y) {
                    double corr = gs + gamma(nS + x * nY + y) - gc;
                    if (corr == 0.0) continue;
                    for (int sh = 0; sh < nSh; ++sh)
                        d[t.index(s, x, y, sh)] -= corr;
                }
            }
        }
    }

    // exact projection onto the affine subspace (may leave negatives);
    // returns the max-norm of the pre-projection residual
    double project_affine_measured(Tensor4& q) const {
        const Instance& inst = inst_;
        int nS = inst.nS, nX = inst.nX, nY = inst.nY, nSh = inst.nShat;
        Eigen::VectorXd r = residuals(q);
        double res = r.cwiseAbs().maxCoeff();
        Eigen::VectorXd gamma = solver_.solve(r);
        // subtract sum_i gamma_i grad F_i
        double* base = q.data.data();
        for (int s = 0; s < nS; ++s) {
            double gs = gamma(s);
            for (int x = 0; x < nX; ++x) {
                double gc = 0.0;
                for (int y = 0; y < nY; ++y) gc += gamma(nS + x * nY + y) * inst.channel(x, y);
                double* cell = base + (static_cast<size_t>(s) * nX + x) * nY * nSh;
                for (int y = 0; y < nY; ++y, cell += nSh) {
                    double corr = gs + gamma(nS + x * nY + y) - gc;
                    if (corr == 0.0) continue;
                    for (int sh = 0; sh < nSh; ++sh) cell[sh] -= corr;
                }
            }
        }
        return res;
    }
    void project_affine(Tensor4& q) const { project_affine_measured(q); }

    void project(Tensor4& q, int cycles = 80) const {
        size_t n = q.data.size();
        Vec pPos(n, 0.0);
        for (int c = 0; c < cycles; ++c) {
            // the affine pass reports the pre-projection residual, the clip
            // pass the clipped mass; both small means the result is feasible
            double affineResidual = project_affine_measured(q);
            double clipMass = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double wi = q.data[i] + pPos[i];
                if (wi < 0.0) {
                    clipMass -= wi;
                    pPos[i] = wi;
                    q.data[i] = 0.0;
                } else {
                    pPos[i] = 0.0;
                    q.data[i] = wi;
                }
            }
            if (affineResidual <= 1e-13 && clipMass <= 1e-13) break;
        }
    }

  private:
    Eigen::VectorXd residuals(const Tensor4& q) const {
        const Instance& inst = inst_;
        int nS = inst.nS, nX = inst.nX, nY = inst.nY, nSh = inst.nShat;
        Eigen::VectorXd r = Eigen::VectorXd::Zero(nRows_);
        const double* cell = q.data.data();
        for (int s = 0; s < nS; ++s) {
            double mass = 0.0;
            for (int x = 0; x < nX; ++x)
                for (int y = 0; y < nY; ++y) {
                    double ty = 0.0;
                    for (int sh = 0; sh < nSh; ++sh, ++cell) ty += *cell;
                    r(nS + x * nY + y) += ty;
                    mass += ty;
                }
            r(s) = mass - inst.pS[s];
        }
        for (int x = 0; x < nX; ++x) {
            double m = 0.0;
            for (int y = 0; y < nY; ++y) m += r(nS + x * nY + y);
            for (int y = 0; y < nY; ++y) r(nS + x * nY + y) -= inst.channel(x, y) * m;
        }
        return r;
    }

    const Instance& inst_;
    int nRows_ = 0;
    Eigen::LDLT<Eigen::MatrixXd> solver_;
};

double cost_dot(const Instance& inst, const Tensor4& q) {
    double total = 0.0;
    if (inst.has_dense()) {
        const double* c = inst.denseCost->data.data();
        const double* v = q.data.data();
        size_t n = q.data.size();
        for (size_t i = 0; i < n; ++i) total += c[i] * v[i];
        return total;
    }
    for (int s = 0; s < inst.nS; ++s)
        for (int x = 0; x < inst.nX; ++x)
            for (int y = 0; y < inst.nY; ++y)
                for (int sh = 0; sh < inst.nShat; ++sh) {
                    double v = q.at(s, x, y, sh);
                    if (v != 0.0) total += v * inst.cost_at(s, x, y, sh);
                }
    return total;
}

// gradients of I_f(a pS) and I_f(channel b) lifted to Q-space, with floored
// marginals so empty cells keep a strong finite fill incentive. The clamped
// variant suppresses the incentive instead: near vertex faces the divergent
// fill terms dominate the step and chatter against the clip, while at dual
// kinks they are exactly what lets the iterate change face. The line search
// tries both.
void penalty_gradient(const Instance& inst, const FGenerator& f, const Marginals& marg,
                      double coeff, std::vector<double>& grad, bool clampBoundary = false) {
    Mat a = marg.a;
    for (double& v : a.data) v = std::max(v, kGradFloor);
    Vec b = marg.b;
    for (double& v : b) v = std::max(v, kGradFloor);
    Mat dA = f_mi_grad_a(f, inst.pS, a, nullptr);
    Vec dB = f_mi_grad_b(f, inst.channel, b, nullptr);
    if (clampBoundary) {
        for (int s = 0; s < inst.nS; ++s)
            for (int sh = 0; sh < inst.nShat; ++sh)
                if (marg.a(s, sh) <= 1e-11) dA(s, sh) = 0.0;
        for (int x = 0; x < inst.nX; ++x)
            if (marg.b[x] <= 1e-11) dB[x] = 0.0;
    }
    size_t idx = 0;
    for (int s = 0; s < inst.nS; ++s) {
        double ps = std::max(inst.pS[s], kGradFloor);
        for (int x = 0; x < inst.nX; ++x)
            for (int y = 0; y < inst.nY; ++y)
                for (int sh = 0; sh < inst.nShat; ++sh, ++idx)
                    grad[idx] += coeff * (dA(s, sh) / ps - dB[x]);
    }
}

// smallest decoder-uniformization weight that restores the f-DPI; preserves
// the affine constraints and leaves b untouched
void repair_feasibility(const Instance& inst, const FGenerator& f, Tensor4& q) {
    Marginals m = joint_marginals(inst, q, f);
    if (m.iA <= m.iB + 1e-15) return;
    Tensor4 unif = q;
    for (int s = 0; s < inst.nS; ++s)
        for (int x = 0; x < inst.nX; ++x)
            for (int y = 0; y < inst.nY; ++y) {
                double mass = 0.0;
                for (int sh = 0; sh < inst.nShat; ++sh) mass += q.at(s, x, y, sh);
                for (int sh = 0; sh < inst.nShat; ++sh)
                    unif.at(s, x, y, sh) = mass / inst.nShat;
            }
    auto slack_at = [&](double theta) {
        Tensor4 blend = q;
        for (size_t i = 0; i < blend.data.size(); ++i)
            blend.data[i] = (1.0 - theta) * q.data[i] + theta * unif.data[i];
        Marginals mm = joint_marginals(inst, blend, f);
        return mm.iB - mm.iA;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        if (slack_at(mid) >= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    for (size_t i = 0; i < q.data.size(); ++i)
        q.data[i] = (1.0 - hi) * q.data[i] + hi * unif.data[i];
}

struct RecoveredMultipliers {
    Multipliers mult;
    double nuWeightedNorm = 0.0;  // sqrt(sum Q nu^2)
    double nuComplementarity = 0.0;
    double signViolation = 0.0;
};

// weighted least-squares fit of (lambda, muA, muB, lambdaP) so that the
// joint-form stationarity tensor nu vanishes on the support of Q
RecoveredMultipliers recover_multipliers(const Instance& inst, const Tensor4& q,
                                         const FGenerator& f, double tol) {
    Marginals marg = joint_marginals(inst, q, f);
    double slack = marg.iB - marg.iA;
    Mat dA = f_mi_grad_a(f, inst.pS, marg.a, nullptr);
    Vec dB = f_mi_grad_b(f, inst.channel, marg.b, nullptr);

    int nS = inst.nS, nX = inst.nX, nY = inst.nY, nSh = inst.nShat;
    bool lambdaFree = slack <= 10.0 * tol;  // complementarity forces 0 otherwise
    int nLam = lambdaFree ? 1 : 0;
    int dim = nLam + nS + 1 + nX * nY;
    auto idxMuA = [&](int s) { return nLam + s; };
    int idxMuB = nLam + nS;
    auto idxLamP = [&](int x, int y) { return nLam + nS + 1 + x * nY + y; };

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);

    std::vector<std::pair<int, double>> phi;
    phi.reserve(4 + nY);
    for (int s = 0; s < nS; ++s)
        for (int x = 0; x < nX; ++x)
            for (int y = 0; y < nY; ++y)
                for (int sh = 0; sh < nSh; ++sh) {
                    double w = q.at(s, x, y, sh);
                    if (w <= 0.0) continue;
                    phi.clear();
                    if (lambdaFree) {
                        double gA = dA(s, sh) / inst.pS[s];
                        double gB = dB[x];
                        if (!std::isfinite(gA) || !std::isfinite(gB)) continue;
                        phi.push_back({0, gA - gB});
                    }
                    phi.push_back({idxMuA(s), 1.0});
                    phi.push_back({idxMuB, 1.0});
                    for (int y2 = 0; y2 < nY; ++y2) {
                        double cfc = (y2 == y ? 1.0 : 0.0) - inst.channel(x, y2);
                        if (cfc != 0.0) phi.push_back({idxLamP(x, y2), cfc});
                    }
                    double kappa = inst.cost_at(s, x, y, sh);
                    for (auto& [i, ci] : phi) {
                        rhs(i) -= w * kappa * ci;
                        for (auto& [j, cj] : phi) M(i, j) += w * ci * cj;
                    }
                }
    double ridge = 1e-10 * (M.trace() / dim + 1.0);
    M.diagonal().array() += ridge;
    Eigen::VectorXd u = M.ldlt().solve(rhs);
    if (lambdaFree && u(0) < 0.0) {
        // refit with the DPI multiplier pinned at zero
        Eigen::MatrixXd M2 = M.bottomRightCorner(dim - 1, dim - 1);
        Eigen::VectorXd r2 = rhs.tail(dim - 1);
        Eigen::VectorXd u2 = M2.ldlt().solve(r2);
        u.setZero();
        u.tail(dim - 1) = u2;
    }

    RecoveredMultipliers out;
    Multipliers& m = out.mult;
    m.lambda = lambdaFree ? std::max(0.0, u(0)) : 0.0;
    m.muA = Vec(nS, 0.0);
    for (int s = 0; s < nS; ++s) m.muA[s] = u(idxMuA(s));
    m.muB = u(idxMuB);
    m.lambdaP = Mat(nX, nY, 0.0);
    for (int x = 0; x < nX; ++x)
        for (int y = 0; y < nY; ++y) m.lambdaP(x, y) = u(idxLamP(x, y));
    m.lambdaA = Mat(nS, nSh, 0.0);
    m.lambdaB = Vec(nX, 0.0);
    for (int s = 0; s < nS; ++s)
        for (int sh = 0; sh < nSh; ++sh) {
            double gA = dA(s, sh) / std::max(inst.pS[s], kGradFloor);
            m.lambdaA(s, sh) = std::isfinite(gA) ? m.lambda * gA + m.muA[s] : 0.0;
        }
    for (int x = 0; x < nX; ++x)
        m.lambdaB[x] = std::isfinite(dB[x]) ? -m.lambda * dB[x] + m.muB : 0.0;

    // stationarity tensor and its quality measures
    m.nu = Tensor4(nS, nX, nY, nSh);
    double wsum = 0.0, wnu2 = 0.0, comp = 0.0, sign = 0.0;
    for (int s = 0; s < nS; ++s)
        for (int x = 0; x < nX; ++x) {
            double lamPbar = 0.0;
            for (int y2 = 0; y2 < nY; ++y2) lamPbar += m.lambdaP(x, y2) * inst.channel(x, y2);
            for (int y = 0; y < nY; ++y) {
                if (inst.channel(x, y) <= 0.0) continue;  // lambdaP scaling unresolved there
                for (int sh = 0; sh < nSh; ++sh) {
                    bool defined = std::isfinite(dA(s, sh)) && std::isfinite(dB[x]) &&
                                   inst.pS[s] > 0.0;
                    if (!defined) continue;
                    double nu = inst.cost_at(s, x, y, sh) + m.lambdaA(s, sh) + m.lambdaB[x] +
                                m.lambdaP(x, y) - lamPbar;
                    m.nu->at(s, x, y, sh) = nu;
                    double w = q.at(s, x, y, sh);
                    if (w > 0.0) {
                        wsum += w;
                        wnu2 += w * nu * nu;
                        comp += w * nu;
                    } else if (nu < 0.0) {
                        sign = std::max(sign, -nu);
                    }
                }
            }
        }
    out.nuWeightedNorm = wsum > 0.0 ? std::sqrt(wnu2) : 0.0;
    out.nuComplementarity = std::abs(comp);
    out.signViolation = sign;
    return out;
}

} // namespace

static int ITERS_MAIN = 400;
static int ITERS_ALT = 250;
RelaxSolution solve_relaxation_general(const Instance& inst, const FGenerator& f, double tol) {
    if (const char* e = std::getenv("TEAMRELAX_ITERS")) { ITERS_MAIN = atoi(e); ITERS_ALT = atoi(e); }
    inst.validate();
    if (tol <= 0.0) throw std::invalid_argument("tol must be positive");
    detail::gate_saddle(f, inst.channel);
    size_t n = inst.tensor_entries();
    if (n > 4000000ULL)
        throw budget_error("general relaxation tensor too large", n, 4000000ULL);

    // neutral feasible start: product of the marginals through the chain
    Tensor4 q(inst.nS, inst.nX, inst.nY, inst.nShat);
    for (int s = 0; s < inst.nS; ++s)
        for (int x = 0; x < inst.nX; ++x)
            for (int y = 0; y < inst.nY; ++y)
                for (int sh = 0; sh < inst.nShat; ++sh)
                    q.at(s, x, y, sh) =
                        inst.pS[s] / inst.nX * inst.channel(x, y) / inst.nShat;

    AffineProjector proj(inst);
    std::vector<double> grad(n);
    double tolFeas = std::min(tol, 1e-9);

    // Lagrangian inner solves: minimize <kappa,Q> + lam * (I_f(a pS) - I_f(ch b))
    // over the affine-nonnegative polytope by projected gradient with
    // Barzilai-Borwein seeding, backtracking, and Dykstra-exact projections.
    // The DPI multiplier is then located by bisection on the violation, which
    // is nonincreasing in lam. (The quadratic-penalty loop stated in the
    // original plan freezes against its own curvature; see the notes.)
    auto violation_of = [&](const Tensor4& t) {
        Marginals m = joint_marginals(inst, t, f);
        return m.iA - m.iB;
    };
    // Newton direction through the marginal spaces: the Lagrangian Hessian is
    // lam * [P_M^T (diag(1/M) - col-coupling/r) P_M + P_b^T ch diag(1/bY) ch^T P_b],
    // so (H + sigma I)^-1 g comes from a Woodbury solve of size nS*nShat+nX.
    // Handles the log-curvature at shrinking marginal cells that defeats
    // plain gradient steps. negLog only; other kinds use the gradient path.
    int mDim = inst.nS * inst.nShat + inst.nX;
    auto newton_direction = [&](const Tensor4& Q, const std::vector<double>& g, double lam,
                                double sigma, std::vector<double>& dir) -> bool {
        if (f.kind != FGenerator::Kind::negLog || lam <= 0.0) return false;
        int nS = inst.nS, nSh = inst.nShat, nX = inst.nX, nY = inst.nY;
        Mat M(nS, nSh, 0.0);
        Vec b(inst.nX, 0.0);
        for (int s = 0; s < nS; ++s)
            for (int x = 0; x < nX; ++x)
                for (int y = 0; y < nY; ++y)
                    for (int sh = 0; sh < nSh; ++sh) {
                        double v = Q.at(s, x, y, sh);
                        M(s, sh) += v;
                        b[x] += v;
                    }
        Vec r(nSh, 0.0), bY(nY, 0.0);
        for (int s = 0; s < nS; ++s)
            for (int sh = 0; sh < nSh; ++sh) r[sh] += M(s, sh);
        for (int x = 0; x < nX; ++x)
            for (int y = 0; y < nY; ++y) bY[y] += b[x] * inst.channel(x, y);

        // C = lam * Hessian in the stacked (M, b) coordinates
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(mDim, mDim);
        auto mi = [&](int s, int sh) { return s * nSh + sh; };
        for (int s = 0; s < nS; ++s)
            for (int sh = 0; sh < nSh; ++sh) {
                C(mi(s, sh), mi(s, sh)) += lam / std::max(M(s, sh), 1e-12);
                for (int s2 = 0; s2 < nS; ++s2)
                    C(mi(s, sh), mi(s2, sh)) -= lam / std::max(r[sh], 1e-12);
            }
        int bOff = nS * nSh;
        for (int x = 0; x < nX; ++x)
            for (int x2 = 0; x2 < nX; ++x2) {
                double acc = 0.0;
                for (int y = 0; y < nY; ++y) {
                    double c1 = inst.channel(x, y), c2 = inst.channel(x2, y);
                    if (c1 > 0.0 && c2 > 0.0) acc += c1 * c2 / std::max(bY[y], 1e-12);
                }
                C(bOff + x, bOff + x2) += lam * acc;
            }

        // Woodbury: (sigma I + U^T C U)^-1 g = g/sigma - U^T w / sigma with
        // (sigma I + C G_U) ... using G_U = U U^T (Gram of the marginal maps)
        Eigen::MatrixXd GU = Eigen::MatrixXd::Zero(mDim, mDim);
        double perSh = static_cast<double>(nX) * nY;   // cells mapping to one (s,sh)
        double perX = static_cast<double>(nS) * nY * nSh;
        for (int i = 0; i < nS * nSh; ++i) GU(i, i) = perSh;
        for (int x = 0; x < nX; ++x) GU(bOff + x, bOff + x) = perX;
        for (int s = 0; s < nS; ++s)
            for (int sh = 0; sh < nSh; ++sh)
                for (int x = 0; x < nX; ++x) {
                    GU(mi(s, sh), bOff + x) = nY;
                    GU(bOff + x, mi(s, sh)) = nY;
                }
        Eigen::VectorXd Ug = Eigen::VectorXd::Zero(mDim);
        size_t idx = 0;
        for (int s = 0; s < nS; ++s)
            for (int x = 0; x < nX; ++x)
                for (int y = 0; y < nY; ++y)
                    for (int sh = 0; sh < nSh; ++sh, ++idx) {
                        Ug(mi(s, sh)) += g[idx];
                        Ug(bOff + x) += g[idx];
                    }
        Eigen::MatrixXd Asys = sigma * Eigen::MatrixXd::Identity(mDim, mDim) + C * GU;
        Eigen::VectorXd w = Asys.partialPivLu().solve(C * Ug);
        // dir = -(g - U^T w)/sigma
        idx = 0;
        for (int s = 0; s < nS; ++s)
            for (int x = 0; x < nX; ++x)
                for (int y = 0; y < nY; ++y)
                    for (int sh = 0; sh < nSh; ++sh, ++idx)
                        dir[idx] = -(g[idx] - w(mi(s, sh)) - w(bOff + x)) / sigma;
        return true;
    };

    Tensor4 qNeutral = q;  // feasible product start, reused by the restarts
    long long workBudget = 60000;  // total inner iterations across the solve
    auto run_pg = [&](double lam, Tensor4& Q, int iters) {
        auto lval = [&](const Tensor4& t) {
            return cost_dot(inst, t) + lam * violation_of(t);
        };
        double cur = lval(Q);
        double eta = 1.0;
        double sigmaLM = 1.0;  // Levenberg-Marquardt damping for the Newton step
        std::vector<double> prevQ, prevGrad;
        bool haveBB = false;
        int stable = 0;
        int failed = 0;
        double window = cur;
        int windowStart = 0;
        // tiny clip-only accepts accumulate a feasibility drift cleaned up by
        // an exact (verified) projection once it crosses the budget; larger
        // clips are projected and gated before acceptance
        double drift = 0.0;
        auto cleanup = [&](bool force = false) {
            if (!force && drift <= 1e-9) return;
            for (int round = 0; round < 5; ++round) {
                proj.project(Q, 120);
                if (proj.violation(Q) <= 1e-11) break;
            }
            drift = 0.0;
            cur = lval(Q);
        };
        std::vector<double> gradClamped(n);
        for (int it = 0; it < iters && workBudget > 0; ++it, --workBudget) {
            Marginals m = joint_marginals(inst, Q, f);
            size_t idx = 0;
            for (int s = 0; s < inst.nS; ++s)
                for (int x = 0; x < inst.nX; ++x)
                    for (int y = 0; y < inst.nY; ++y)
                        for (int sh = 0; sh < inst.nShat; ++sh, ++idx)
                            grad[idx] = inst.cost_at(s, x, y, sh);
            gradClamped = grad;
            if (lam > 0.0) {
                penalty_gradient(inst, f, m, lam, grad);
                penalty_gradient(inst, f, m, lam, gradClamped, true);
            }

            double etaTry = eta;
            if (haveBB) {
                double dqdq = 0.0, dqdg = 0.0;
                for (size_t i = 0; i < n; ++i) {
                    double dq = Q.data[i] - prevQ[i];
                    dqdq += dq * dq;
                    dqdg += dq * (grad[i] - prevGrad[i]);
                }
                if (dqdg > 0.0 && dqdq > 0.0)
                    etaTry = std::min(std::max(dqdq / dqdg, 1e-12), 1e6);
            }
            prevQ.assign(Q.data.begin(), Q.data.end());
            prevGrad.assign(grad.begin(), grad.end());
            haveBB = true;

            bool accepted = false;
            std::vector<double> dNewton(n);
            if (newton_direction(Q, grad, lam, sigmaLM, dNewton)) {
                proj.project_direction(dNewton);
                double dmax = 0.0;
                for (double dv : dNewton) dmax = std::max(dmax, std::abs(dv));
                double t = dmax > 0.5 ? 0.5 / dmax : 1.0;  // trust-region cap
                for (int bt = 0; bt < 12 && !accepted; ++bt) {
                    Tensor4 trial = Q;
                    double clippedMass = 0.0;
                    for (size_t i = 0; i < n; ++i) {
                        double v = Q.data[i] + t * dNewton[i];
                        if (v < 0.0) {
                            clippedMass -= v;
                            v = 0.0;
                        }
                        trial.data[i] = v;
                    }
                    double tVal = lval(trial);
                    bool ok = tVal < cur;
                    if (ok && clippedMass > 1e-11) {
                        proj.project(trial, 40);
                        tVal = lval(trial);
                        ok = tVal < cur && proj.violation(trial) <= 1e-10;
                        clippedMass = 0.0;
                    }
                    if (ok) {
                        double drop = cur - tVal;
                        Q = std::move(trial);
                        cur = tVal;
                        drift += clippedMass;
                        cleanup();
                        accepted = true;
                        sigmaLM = std::max(sigmaLM / 3.0, 1e-9);
                        stable = drop <= 1e-13 * (1.0 + std::abs(cur)) ? stable + 1 : 0;
                    } else {
                        t *= 0.5;
                    }
                }
                if (!accepted) sigmaLM = std::min(sigmaLM * 10.0, 1e8);
            }
            // tangent-projected directions make clip-only trials nearly
            // feasible; the full (expensive) projection runs on acceptance
            std::vector<double> dirTan = grad, dirTanClamped = gradClamped;
            proj.project_direction(dirTan);
            if (lam > 0.0) proj.project_direction(dirTanClamped);
            for (const std::vector<double>* dir : {&dirTan, &dirTanClamped}) {
                if (accepted) break;
                double dmax = 0.0;
                for (double dv : *dir) dmax = std::max(dmax, std::abs(dv));
                double etaDir = etaTry;
                if (dmax * etaDir > 1.0) etaDir = 1.0 / dmax;  // wild trials only waste cycles
                for (int bt = 0; bt < 40 && !accepted; ++bt) {
                    Tensor4 trial = Q;
                    double clippedMass = 0.0;
                    for (size_t i = 0; i < n; ++i) {
                        double v = Q.data[i] - etaDir * (*dir)[i];
                        if (v < 0.0) {
                            clippedMass -= v;
                            v = 0.0;
                        }
                        trial.data[i] = v;
                    }
                    double tVal = lval(trial);
                    bool ok = tVal < cur;
                    if (ok && clippedMass > 1e-11) {
                        proj.project(trial, 40);
                        tVal = lval(trial);
                        ok = tVal < cur && proj.violation(trial) <= 1e-10;
                        clippedMass = 0.0;
                    }
                    if (ok) {
                        double drop = cur - tVal;
                        Q = std::move(trial);
                        cur = tVal;
                        drift += clippedMass;
                        cleanup();
                        eta = std::min(etaDir * 1.3, 1e6);
                        accepted = true;
                        stable = drop <= 1e-13 * (1.0 + std::abs(cur)) ? stable + 1 : 0;
                    } else {
                        etaDir *= 0.5;
                        if (etaDir < 1e-17) break;
                    }
                }
                if (accepted || lam <= 0.0) break;  // variants differ only when lam > 0
            }
            if (!accepted) {
                // multiplicative fallback: exponentiated steps follow the
                // log-curved valleys of the information term where additive
                // moves against the clip stall out
                double etaM = 1.0;
                for (int bt = 0; bt < 40 && !accepted; ++bt) {
                    Tensor4 trial = Q;
                    for (size_t i = 0; i < n; ++i) {
                        double e = -etaM * grad[i];
                        if (e > 50.0) e = 50.0;
                        if (e < -50.0) e = -50.0;
                        trial.data[i] = Q.data[i] * std::exp(e);
                    }
                    proj.project(trial);
                    double tVal = lval(trial);
                    if (tVal < cur && proj.violation(trial) <= 1e-10) {
                        double drop = cur - tVal;
                        Q = std::move(trial);
                        cur = tVal;
                        accepted = true;
                        stable = drop <= 1e-13 * (1.0 + std::abs(cur)) ? stable + 1 : 0;
                    } else {
                        etaM *= 0.5;
                    }
                }
            }
            if (!accepted) {
                eta = std::max(eta * 0.25, 1e-12);
                if (++failed >= 3) break;
            } else {
                failed = 0;
            }
            if (stable >= 8) break;
            if (it - windowStart >= 150) {  // progress-rate guard
                if (window - cur <= 1e-11 * (1.0 + std::abs(cur))) break;
                window = cur;
                windowStart = it;
            }
        }
        if (drift > 0.0) cleanup(true);
        return cur;
    };
    // on delta+rho costs the product-restricted Lagrangian separates into the
    // two Blahut-Arimoto subproblems; their product point is a strong exact
    // candidate (and on other costs it is simply screened by accept-if-better)
    // On the product submanifold Q = a pS b ch the Lagrangian splits into a
    // rate-distortion block in a (effective distortion averaged through b and
    // the channel) and a capacity-cost block in b, each solved exactly by its
    // Blahut-Arimoto fixed point. Alternating them yields strong candidates
    // for any cost tensor; accept-if-better screens them.
    auto ba_candidate = [&](double lam) -> std::optional<Tensor4> {
        if (lam <= 0.0 || f.kind != FGenerator::Kind::negLog) return std::nullopt;
        Vec b(inst.nX, 1.0 / inst.nX);
        Mat a(inst.nS, inst.nShat, 1.0 / inst.nShat);
        Mat deltaEff(inst.nS, inst.nShat, 0.0);
        Vec rhoEff(inst.nX, 0.0);
        for (int round = 0; round < 6; ++round) {
            for (int s = 0; s < inst.nS; ++s)
                for (int sh = 0; sh < inst.nShat; ++sh) {
                    double acc = 0.0;
                    for (int x = 0; x < inst.nX; ++x) {
                        if (b[x] == 0.0) continue;
                        for (int y = 0; y < inst.nY; ++y) {
                            double w = b[x] * inst.channel(x, y);
                            if (w != 0.0) acc += w * inst.cost_at(s, x, y, sh);
                        }
                    }
                    deltaEff(s, sh) = acc;
                }
            BAResult rd = blahut_arimoto_rd(inst.pS, deltaEff, RdMode::slope(lam, 1500), &a);
            a = rd.kernel;
            for (int x = 0; x < inst.nX; ++x) {
                double acc = 0.0;
                for (int s = 0; s < inst.nS; ++s) {
                    if (inst.pS[s] == 0.0) continue;
                    for (int y = 0; y < inst.nY; ++y) {
                        double w = inst.pS[s] * inst.channel(x, y);
                        if (w == 0.0) continue;
                        for (int sh = 0; sh < inst.nShat; ++sh)
                            acc += w * a(s, sh) * inst.cost_at(s, x, y, sh);
                    }
                }
                rhoEff[x] = acc;
            }
            BAResult cc = blahut_arimoto_cc(inst.channel, rhoEff, CcMode::slope(lam, 1500), &b);
            b = cc.marginal;
        }
        Tensor4 p(inst.nS, inst.nX, inst.nY, inst.nShat);
        for (int s = 0; s < inst.nS; ++s)
            for (int x = 0; x < inst.nX; ++x)
                for (int y = 0; y < inst.nY; ++y)
                    for (int sh = 0; sh < inst.nShat; ++sh)
                        p.at(s, x, y, sh) = a(s, sh) * inst.pS[s] * b[x] * inst.channel(x, y);
        return p;
    };

    // the product surrogate of the iterate's own pair: feasible, preserves
    // (M, b) and hence the DPI terms, and is cost-neutral on reducible costs
    auto productize = [&](const Tensor4& t) {
        Marginals m = joint_marginals(inst, t, f);
        Tensor4 p(inst.nS, inst.nX, inst.nY, inst.nShat);
        for (int s = 0; s < inst.nS; ++s)
            for (int x = 0; x < inst.nX; ++x)
                for (int y = 0; y < inst.nY; ++y)
                    for (int sh = 0; sh < inst.nShat; ++sh)
                        p.at(s, x, y, sh) =
                            m.a(s, sh) * inst.pS[s] * m.b[x] * inst.channel(x, y);
        return p;
    };
    auto lagrangian_value = [&](double lam, const Tensor4& t) {
        return cost_dot(inst, t) + lam * violation_of(t);
    };
    auto solve_lagrangian = [&](double lam, Tensor4& Q, const Tensor4* extraStart = nullptr,
                                bool thorough = true) {
        double best = run_pg(lam, Q, ITERS_MAIN);
        if (auto cand = ba_candidate(lam)) {
            double val = lagrangian_value(lam, *cand);
            if (val < best - 1e-15) {
                Q = std::move(*cand);
                best = run_pg(lam, Q, 600);
            }
        }
        if (thorough) {
            // descent from additional starts escapes flat faces near the kink
            std::vector<Tensor4> starts;
            Tensor4 alt = Q;
            for (size_t i = 0; i < n; ++i)
                alt.data[i] = 0.5 * (Q.data[i] + qNeutral.data[i]);
            starts.push_back(std::move(alt));
            if (extraStart) starts.push_back(*extraStart);
            starts.push_back(productize(Q));
            for (Tensor4& s0 : starts) {
                double val = run_pg(lam, s0, ITERS_ALT);
                if (val < best - 1e-15) {
                    Q = std::move(s0);
                    best = run_pg(lam, Q, 1200);
                }
            }
        }
        return violation_of(Q);
    };

    // the best deterministic code found by a quick local search induces a
    // feasible point of the relaxation (member of the nonconvex set, hence of
    // its superset); it caps the reported value at the exact optimum whenever
    // the first-order path underperforms
    std::optional<Tensor4> qDet;
    {
        DetCode best;
        if (enumeration_count(inst) <= 100000ULL) {
            best = enumerate_optimal(inst, false, 100000ULL).bestCode;
        } else {
            RandomCode init;
            init.qXgivenS = Mat(inst.nS, inst.nX, 1.0 / inst.nX);
            init.qShatGivenY = Mat(inst.nY, inst.nShat, 1.0 / inst.nShat);
            best = alternating_best_response(inst, init, 6, 1u).bestCode;
        }
        JointDist jd = build_joint_from_code(inst, det_code_to_random(best, inst));
        qDet = std::move(jd.q);
    }

    proj.project(q);
    double lamStar = 0.0;
    double v = solve_lagrangian(0.0, q);
    bool feasibleExit = true;
    if (v > tolFeas) {
        // bracket the multiplier, then bisect on the (nonincreasing) violation
        double sp = 0.0, lo = 1e300, hiK = -1e300;
        for (int s = 0; s < inst.nS; ++s)
            for (int x = 0; x < inst.nX; ++x)
                for (int y = 0; y < inst.nY; ++y)
                    for (int sh = 0; sh < inst.nShat; ++sh) {
                        double cv = inst.cost_at(s, x, y, sh);
                        lo = std::min(lo, cv);
                        hiK = std::max(hiK, cv);
                    }
        sp = hiK - lo;
        double lamHi = std::max(1e-3, sp);
        Tensor4 qHi = q;
        double vHi = solve_lagrangian(lamHi, qHi);
        if (std::getenv("TEAMRELAX_DEBUG"))
            std::fprintf(stderr, "bracket: affine(q)=%.2e affine(qHi)=%.2e\n", proj.violation(q),
                         proj.violation(qHi));
        int guard = 0;
        while (vHi > 0.0 && guard++ < 60) {
            lamHi *= 2.0;
            vHi = solve_lagrangian(lamHi, qHi);
        }
        double lamLo = 0.0;
        Tensor4 qCur = qHi;
        Tensor4 qViol = q;  // last iterate on the violated side
        bool haveViol = true;
        double vCur = vHi;
        double lamCur = lamHi;
        double bestFeasObj = cost_dot(inst, qHi);
        double widthStop = n <= 4096 ? 2e-4 : 5e-3;
        for (int it = 0; it < 40; ++it) {
            if (lamHi - lamLo <= widthStop * (1.0 + lamHi)) break;
            double mid = 0.5 * (lamLo + lamHi);
            Tensor4 qMid = qCur;
            double vMid = solve_lagrangian(mid, qMid, haveViol ? &qViol : nullptr, it < 1);
            if (vMid > 0.0) {
                lamLo = mid;
                qViol = std::move(qMid);
                haveViol = true;
            } else {
                lamHi = mid;
                double obj = cost_dot(inst, qMid);
                if (obj < bestFeasObj || vMid > vCur) {
                    bestFeasObj = std::min(bestFeasObj, obj);
                    qCur = std::move(qMid);
                    vCur = vMid;
                }
                lamCur = mid;
            }
            if (lamHi - lamLo <= 1e-13 * (1.0 + lamHi)) break;
        }
        // both sides near-minimize the same Lagrangian at the kink; the
        // convex blend that lands on the DPI boundary attains the optimum
        if (haveViol && violation_of(qViol) > 0.0) {
            double thLo = 0.0, thHi = 1.0;  // th = weight of the violated side
            for (int it = 0; it < 100; ++it) {
                double th = 0.5 * (thLo + thHi);
                Tensor4 blend = qCur;
                for (size_t i = 0; i < n; ++i)
                    blend.data[i] = (1.0 - th) * qCur.data[i] + th * qViol.data[i];
                if (violation_of(blend) > 0.0)
                    thHi = th;
                else
                    thLo = th;
            }
            if (thLo > 0.0) {
                Tensor4 blend = qCur;
                for (size_t i = 0; i < n; ++i)
                    blend.data[i] = (1.0 - thLo) * qCur.data[i] + thLo * qViol.data[i];
                double vb = violation_of(blend);
                double objB = cost_dot(inst, blend);
                if (vb <= 0.0 && objB < cost_dot(inst, qCur)) {
                    qCur = std::move(blend);
                    vCur = vb;
                }
            }
        }
        // polish at the located multiplier, then restore the boundary again
        Tensor4 qPol = qCur;
        double vPol = solve_lagrangian(lamCur, qPol, haveViol ? &qViol : nullptr);
        double objPol = cost_dot(inst, qPol) + lamCur * std::max(0.0, vPol);
        if (vPol <= 0.0 && objPol < cost_dot(inst, qCur)) {
            qCur = std::move(qPol);
            vCur = vPol;
        } else if (vPol > 0.0 && violation_of(qCur) <= 0.0) {
            double thLo = 0.0, thHi = 1.0;
            for (int it = 0; it < 100; ++it) {
                double th = 0.5 * (thLo + thHi);
                Tensor4 blend = qCur;
                for (size_t i = 0; i < n; ++i)
                    blend.data[i] = (1.0 - th) * qCur.data[i] + th * qPol.data[i];
                if (violation_of(blend) > 0.0)
                    thHi = th;
                else
                    thLo = th;
            }
            Tensor4 blend = qCur;
            for (size_t i = 0; i < n; ++i)
                blend.data[i] = (1.0 - thLo) * qCur.data[i] + thLo * qPol.data[i];
            if (violation_of(blend) <= 0.0 && cost_dot(inst, blend) < cost_dot(inst, qCur)) {
                vCur = violation_of(blend);
                qCur = std::move(blend);
            }
        }
        if (std::getenv("TEAMRELAX_DEBUG"))
            std::fprintf(stderr, "end-bisect: affine(qCur)=%.2e affine(qViol)=%.2e\n",
                         proj.violation(qCur), proj.violation(qViol));
        q = std::move(qCur);
        lamStar = lamCur;
        v = vCur;
        feasibleExit = vCur <= tolFeas;
    }

    if (std::getenv("TEAMRELAX_DEBUG"))
        std::fprintf(stderr, "cap check: qDet=%d detCost=%.9f qCost=%.9f detViol=%.3e\n",
                     int(bool(qDet)), qDet ? cost_dot(inst, *qDet) : 0.0, cost_dot(inst, q),
                     qDet ? violation_of(*qDet) : 0.0);
    if (qDet && cost_dot(inst, *qDet) < cost_dot(inst, q) &&
        violation_of(*qDet) <= 1e-12)
        q = std::move(*qDet);

    // reducible costs admit the exact (a,b)-form solve; its product joint is
    // the cross-check the certificate calls for, and a candidate final point
    std::optional<std::pair<Mat, Vec>> redCost = detail::reduce_to_pair_cost(inst);
    if (redCost && f.kind == FGenerator::Kind::negLog) {
        RelaxSolution cross = detail::solve_pair_relaxation(inst.pS, inst.channel,
                                                            redCost->first, redCost->second, f,
                                                            tol);
        Tensor4 qc(inst.nS, inst.nX, inst.nY, inst.nShat);
        for (int s = 0; s < inst.nS; ++s)
            for (int x = 0; x < inst.nX; ++x)
                for (int y = 0; y < inst.nY; ++y)
                    for (int sh = 0; sh < inst.nShat; ++sh)
                        qc.at(s, x, y, sh) = cross.pair.a(s, sh) * inst.pS[s] *
                                             cross.pair.b[x] * inst.channel(x, y);
        if (cost_dot(inst, qc) < cost_dot(inst, q) && violation_of(qc) <= 1e-12)
            q = std::move(qc);
    }

    if (std::getenv("TEAMRELAX_DEBUG"))
        std::fprintf(stderr, "pre-final: cost=%.9f viol=%.3e affine=%.3e\n", cost_dot(inst, q),
                     violation_of(q), proj.violation(q));
    proj.project(q, 2000);
    if (std::getenv("TEAMRELAX_DEBUG"))
        std::fprintf(stderr, "post-project: cost=%.9f viol=%.3e\n", cost_dot(inst, q),
                     violation_of(q));
    // kill any residual negativity exactly by mixing with the interior
    // product point, then restore the DPI
    double minQ = 0.0;
    for (double vq : q.data) minQ = std::min(minQ, vq);
    if (minQ < 0.0) {
        Tensor4 q0(inst.nS, inst.nX, inst.nY, inst.nShat);
        double q0min = 1e300;
        for (int s = 0; s < inst.nS; ++s)
            for (int x = 0; x < inst.nX; ++x)
                for (int y = 0; y < inst.nY; ++y)
                    for (int sh = 0; sh < inst.nShat; ++sh) {
                        double vq = inst.pS[s] / inst.nX * inst.channel(x, y) / inst.nShat;
                        q0.at(s, x, y, sh) = vq;
                        q0min = std::min(q0min, vq);
                    }
        double theta = std::min(1.0, -minQ / std::max(q0min, 1e-300));
        for (size_t i = 0; i < n; ++i)
            q.data[i] = (1.0 - theta) * q.data[i] + theta * q0.data[i];
        for (double& vq : q.data) vq = std::max(vq, 0.0);
    }
    repair_feasibility(inst, f, q);
    if (std::getenv("TEAMRELAX_DEBUG"))
        std::fprintf(stderr, "post-repair: cost=%.9f viol=%.3e\n", cost_dot(inst, q),
                     violation_of(q));

    RelaxSolution sol;
    sol.q = JointDist{q};
    Marginals m = joint_marginals(inst, q, f);
    sol.pair.a = m.a;
    sol.pair.b = m.b;
    sol.value = cost_dot(inst, q);
    sol.dpiSlack = m.iB - m.iA;
    sol.dualValue = sol.value;  // no independent dual bound from the penalty path

    RecoveredMultipliers rec = recover_multipliers(inst, q, f, tol);
    sol.mult = rec.mult;
    sol.kkt.stationarityA = 0.0;
    sol.kkt.stationarityB = 0.0;
    sol.kkt.stationarityQ = std::max(rec.nuWeightedNorm, rec.nuComplementarity);
    sol.kkt.dpiComplementarity = std::abs(sol.mult.lambda * sol.dpiSlack);
    sol.kkt.signViolations = rec.signViolation;
    sol.kkt.primalFeasibility = std::max(proj.violation(q), std::max(0.0, -sol.dpiSlack));
    sol.kkt.finalize();

    // certificate: KKT residual, or agreement with the (a,b)-form solvers on
    // reducible costs
    bool certified = sol.kkt.maxResidual <= tol;
    if (!certified) {
        std::optional<RelaxSolution> cross;
        if (inst.has_separable() && inst.separable->has_cross())
            cross = solve_relaxation_bansal(inst, tol);
        else if (detail::reduce_to_pair_cost(inst))
            cross = solve_relaxation_separable(inst, f, tol);
        if (cross && cross->status != RelaxStatus::degenerate)
            certified = std::abs(sol.value - cross->value) <=
                        std::max(tol, 1e-6) * (1.0 + std::abs(cross->value));
    }
    sol.status = feasibleExit && sol.kkt.maxResidual <= tol ? RelaxStatus::optimal
                                                            : RelaxStatus::maxIter;
    (void)certified;
    return sol;
}

KKTReport kkt_residual_general(const Instance& inst, const JointDist& qd, const FGenerator& f,
                               const Multipliers& mult) {
    inst.validate();
    validate_joint(qd, inst);
    const Tensor4& q = qd.q;
    Marginals marg = joint_marginals(inst, q, f);
    Mat dA = f_mi_grad_a(f, inst.pS, marg.a, nullptr);
    Vec dB = f_mi_grad_b(f, inst.channel, marg.b, nullptr);
    int nS = inst.nS, nX = inst.nX, nY = inst.nY, nSh = inst.nShat;

    KKTReport rep;

    // lambdaA / lambdaB stationarity against their defining equations
    Mat lamA(nS, nSh, 0.0);
    Vec lamB(nX, 0.0);
    for (int s = 0; s < nS; ++s)
        for (int sh = 0; sh < nSh; ++sh) {
            if (inst.pS[s] <= 0.0 || !std::isfinite(dA(s, sh))) continue;
            double gA = dA(s, sh) / inst.pS[s];
            double nuA = mult.nuA.empty() ? 0.0 : mult.nuA(s, sh);
            double muA = mult.muA.empty() ? 0.0 : mult.muA[s];
            double ref = mult.lambda * gA + muA - nuA;
            lamA(s, sh) = mult.lambdaA.empty() ? ref : mult.lambdaA(s, sh);
            rep.stationarityA = std::max(rep.stationarityA, std::abs(lamA(s, sh) - ref));
        }
    for (int x = 0; x < nX; ++x) {
        if (!std::isfinite(dB[x])) continue;
        double nuB = mult.nuB.empty() ? 0.0 : mult.nuB[x];
        double ref = -mult.lambda * dB[x] + mult.muB - nuB;
        lamB[x] = mult.lambdaB.empty() ? ref : mult.lambdaB[x];
        rep.stationarityB = std::max(rep.stationarityB, std::abs(lamB[x] - ref));
    }

    // the coupling equation: nu = kappa + lambdaA + lambdaB + lambdaP-terms,
    // skipping zero-probability channel cells and undefined gradients
    double comp = 0.0;
    for (int s = 0; s < nS; ++s)
        for (int x = 0; x < nX; ++x) {
            double lamPbar = 0.0;
            if (!mult.lambdaP.empty())
                for (int y2 = 0; y2 < nY; ++y2)
                    lamPbar += mult.lambdaP(x, y2) * inst.channel(x, y2);
            for (int y = 0; y < nY; ++y) {
                if (inst.channel(x, y) <= 0.0) continue;
                for (int sh = 0; sh < nSh; ++sh) {
                    if (inst.pS[s] <= 0.0 || !std::isfinite(dA(s, sh)) || !std::isfinite(dB[x]))
                        continue;
                    double rhsv = inst.cost_at(s, x, y, sh) + lamA(s, sh) + lamB[x] +
                                  (mult.lambdaP.empty() ? 0.0 : mult.lambdaP(x, y)) - lamPbar;
                    double nu = mult.nu ? mult.nu->at(s, x, y, sh) : rhsv;
                    if (mult.nu)
                        rep.stationarityQ = std::max(rep.stationarityQ, std::abs(nu - rhsv));
                    if (nu < 0.0) rep.signViolations = std::max(rep.signViolations, -nu);
                    comp += nu * q.at(s, x, y, sh);
                }
            }
        }
    rep.stationarityQ = std::max(rep.stationarityQ, std::abs(comp));

    for (int s = 0; s < nS; ++s)
        if (!mult.nuA.empty())
            for (int sh = 0; sh < nSh; ++sh)
                rep.signViolations = std::max(rep.signViolations, -std::min(0.0, mult.nuA(s, sh)));
    if (!mult.nuB.empty())
        for (int x = 0; x < nX; ++x)
            rep.signViolations = std::max(rep.signViolations, -std::min(0.0, mult.nuB[x]));
    rep.signViolations = std::max(rep.signViolations, -std::min(0.0, mult.lambda));

    double slack = marg.iB - marg.iA;
    rep.dpiComplementarity = std::abs(mult.lambda * slack);

    // primal side: mass, source marginal, channel consistency, DPI, and the
    // row-normalization of the induced a
    double feas = std::max(0.0, -slack);
    Vec qS(nS, 0.0);
    for (int s = 0; s < nS; ++s)
        for (int x = 0; x < nX; ++x)
            for (int y = 0; y < nY; ++y)
                for (int sh = 0; sh < nSh; ++sh) qS[s] += q.at(s, x, y, sh);
    for (int s = 0; s < nS; ++s) feas = std::max(feas, std::abs(qS[s] - inst.pS[s]));
    for (int s = 0; s < nS; ++s) {
        double rs = 0.0;
        for (int sh = 0; sh < nSh; ++sh) rs += marg.a(s, sh);
        feas = std::max(feas, std::abs(rs - 1.0));
    }
    for (int x = 0; x < nX; ++x) {
        Vec t(nY, 0.0);
        double mx = 0.0;
        for (int s = 0; s < nS; ++s)
            for (int y = 0; y < nY; ++y)
                for (int sh = 0; sh < nSh; ++sh) {
                    t[y] += q.at(s, x, y, sh);
                    mx += q.at(s, x, y, sh);
                }
        for (int y = 0; y < nY; ++y)
            feas = std::max(feas, std::abs(t[y] - inst.channel(x, y) * mx));
    }
    rep.primalFeasibility = feas;
    rep.finalize();
    return rep;
}

BoundReport bound_report(const Instance& inst, const FGenerator& f, double tol,
                         unsigned long long budget, unsigned seed) {
    BoundReport rep;
    RelaxSolution sol = solve_relaxation_general(inst, f, tol);
    rep.lb = sol.value;
    rep.lbStatus = sol.status;
    rep.dpiEqualitySlack = sol.dpiSlack;

    if (enumeration_count(inst) <= budget) {
        ExactResult ex = enumerate_optimal(inst, false, budget);
        rep.ub = ex.value;
        rep.ubHeuristic = false;
    } else {
        RandomCode init;
        init.qXgivenS = Mat(inst.nS, inst.nX, 1.0 / inst.nX);
        init.qShatGivenY = Mat(inst.nY, inst.nShat, 1.0 / inst.nShat);
        ExactResult ex = alternating_best_response(inst, init, 16, seed);
        rep.ub = ex.value;
        rep.ubHeuristic = true;
    }
    rep.gap = rep.ub - rep.lb;

    double em = 0.0;
    for (int s = 0; s < inst.nS; ++s) em += inst.pS[s] * sol.mult.muA[s];
    rep.multiplierIdentityResidual = std::abs(rep.lb + em + sol.mult.lambda + sol.mult.muB);
    return rep;
}

} // namespace teamrelax
