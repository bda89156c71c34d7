#include "teamrelax/core_ops.hpp"

#include <cmath>

namespace teamrelax {

RandomCode det_code_to_random(const DetCode& code, const Instance& inst) {
    validate_det_code(code, inst);
    RandomCode rc;
    rc.qXgivenS = Mat(inst.nS, inst.nX, 0.0);
    rc.qShatGivenY = Mat(inst.nY, inst.nShat, 0.0);
    for (int s = 0; s < inst.nS; ++s) rc.qXgivenS(s, code.f[s]) = 1.0;
    for (int y = 0; y < inst.nY; ++y) rc.qShatGivenY(y, code.g[y]) = 1.0;
    return rc;
}

JointDist build_joint_from_code(const Instance& inst, const RandomCode& code) {
    validate_random_code(code, inst);
    JointDist out;
    out.q = Tensor4(inst.nS, inst.nX, inst.nY, inst.nShat);
    for (int s = 0; s < inst.nS; ++s) {
        if (inst.pS[s] == 0.0) continue;
        for (int x = 0; x < inst.nX; ++x) {
            double pse = inst.pS[s] * code.qXgivenS(s, x);
            if (pse == 0.0) continue;
            for (int y = 0; y < inst.nY; ++y) {
                double psey = pse * inst.channel(x, y);
                if (psey == 0.0) continue;
                for (int sh = 0; sh < inst.nShat; ++sh)
                    out.q.at(s, x, y, sh) = psey * code.qShatGivenY(y, sh);
            }
        }
    }
    return out;
}

EndToEndPair induced_endtoend(const JointDist& q, const Vec& pS) {
    const Tensor4& t = q.q;
    int nS = t.nS, nX = t.nX, nY = t.nY, nSh = t.nShat;
    if (static_cast<int>(pS.size()) != nS)
        throw std::invalid_argument("pS length mismatch");

    Vec qS(nS, 0.0);
    Mat mSSh(nS, nSh, 0.0);
    Vec b(nX, 0.0);
    for (int s = 0; s < nS; ++s)
        for (int x = 0; x < nX; ++x)
            for (int y = 0; y < nY; ++y)
                for (int sh = 0; sh < nSh; ++sh) {
                    double v = t.at(s, x, y, sh);
                    qS[s] += v;
                    mSSh(s, sh) += v;
                    b[x] += v;
                }
    for (int s = 0; s < nS; ++s)
        if (std::abs(qS[s] - pS[s]) > 1e-8)
            throw std::invalid_argument("joint S-marginal inconsistent with pS");

    EndToEndPair out;
    out.a = Mat(nS, nSh, 0.0);
    out.b = std::move(b);
    for (int s = 0; s < nS; ++s) {
        if (qS[s] > 0.0) {
            for (int sh = 0; sh < nSh; ++sh) out.a(s, sh) = mSSh(s, sh) / qS[s];
        } else {
            for (int sh = 0; sh < nSh; ++sh) out.a(s, sh) = 1.0 / nSh;
        }
    }
    // exact renormalization against accumulated roundoff
    for (int s = 0; s < nS; ++s) {
        double rs = 0.0;
        for (int sh = 0; sh < nSh; ++sh) rs += out.a(s, sh);
        for (int sh = 0; sh < nSh; ++sh) out.a(s, sh) /= rs;
    }
    double bs = sum(out.b);
    if (bs > 0.0)
        for (double& v : out.b) v /= bs;
    return out;
}

double expected_cost(const Instance& inst, const JointDist& q) {
    validate_joint(q, inst);
    double total = 0.0;
    for (int s = 0; s < inst.nS; ++s)
        for (int x = 0; x < inst.nX; ++x)
            for (int y = 0; y < inst.nY; ++y)
                for (int sh = 0; sh < inst.nShat; ++sh) {
                    double v = q.q.at(s, x, y, sh);
                    if (v != 0.0) total += v * inst.cost_at(s, x, y, sh);
                }
    return total;
}

double expected_cost_det(const Instance& inst, const DetCode& code) {
    double total = 0.0;
    for (int s = 0; s < inst.nS; ++s) {
        if (inst.pS[s] == 0.0) continue;
        int x = code.f[s];
        for (int y = 0; y < inst.nY; ++y) {
            double w = inst.pS[s] * inst.channel(x, y);
            if (w != 0.0) total += w * inst.cost_at(s, x, y, code.g[y]);
        }
    }
    return total;
}

double expected_cost_random(const Instance& inst, const RandomCode& code) {
    double total = 0.0;
    for (int s = 0; s < inst.nS; ++s) {
        if (inst.pS[s] == 0.0) continue;
        for (int x = 0; x < inst.nX; ++x) {
            double pse = inst.pS[s] * code.qXgivenS(s, x);
            if (pse == 0.0) continue;
            for (int y = 0; y < inst.nY; ++y) {
                double psey = pse * inst.channel(x, y);
                if (psey == 0.0) continue;
                for (int sh = 0; sh < inst.nShat; ++sh) {
                    double w = psey * code.qShatGivenY(y, sh);
                    if (w != 0.0) total += w * inst.cost_at(s, x, y, sh);
                }
            }
        }
    }
    return total;
}

EndToEndPair pair_from_random_code(const Instance& inst, const RandomCode& code) {
    EndToEndPair out;
    out.a = Mat(inst.nS, inst.nShat, 0.0);
    out.b = Vec(inst.nX, 0.0);
    for (int s = 0; s < inst.nS; ++s)
        for (int x = 0; x < inst.nX; ++x) {
            double e = code.qXgivenS(s, x);
            out.b[x] += inst.pS[s] * e;
            if (e == 0.0) continue;
            for (int y = 0; y < inst.nY; ++y) {
                double w = e * inst.channel(x, y);
                if (w == 0.0) continue;
                for (int sh = 0; sh < inst.nShat; ++sh)
                    out.a(s, sh) += w * code.qShatGivenY(y, sh);
            }
        }
    return out;
}

EndToEndPair pair_from_det_code(const Instance& inst, const DetCode& code) {
    EndToEndPair out;
    out.a = Mat(inst.nS, inst.nShat, 0.0);
    out.b = Vec(inst.nX, 0.0);
    for (int s = 0; s < inst.nS; ++s) {
        out.b[code.f[s]] += inst.pS[s];
        for (int y = 0; y < inst.nY; ++y)
            out.a(s, code.g[y]) += inst.channel(code.f[s], y);
    }
    return out;
}

MembershipReport membership_check(const Instance& inst, const JointDist& q, double tol) {
    validate_joint(q, inst);
    const Tensor4& t = q.q;
    int nS = t.nS, nX = t.nX, nY = t.nY, nSh = t.nShat;

    Vec qS(nS, 0.0), qX(nX, 0.0), qY(nY, 0.0);
    Mat mSX(nS, nX, 0.0), mXY(nX, nY, 0.0), mYSh(nY, nSh, 0.0);
    for (int s = 0; s < nS; ++s)
        for (int x = 0; x < nX; ++x)
            for (int y = 0; y < nY; ++y)
                for (int sh = 0; sh < nSh; ++sh) {
                    double v = t.at(s, x, y, sh);
                    if (v == 0.0) continue;
                    qS[s] += v;
                    qX[x] += v;
                    qY[y] += v;
                    mSX(s, x) += v;
                    mXY(x, y) += v;
                    mYSh(y, sh) += v;
                }

    Mat enc(nS, nX, 0.0), dec(nY, nSh, 0.0);
    for (int s = 0; s < nS; ++s)
        for (int x = 0; x < nX; ++x)
            enc(s, x) = qS[s] > 0.0 ? mSX(s, x) / qS[s] : 1.0 / nX;
    for (int y = 0; y < nY; ++y)
        for (int sh = 0; sh < nSh; ++sh)
            dec(y, sh) = qY[y] > 0.0 ? mYSh(y, sh) / qY[y] : 1.0 / nSh;

    double residual = 0.0;
    for (int s = 0; s < nS; ++s)
        for (int x = 0; x < nX; ++x)
            for (int y = 0; y < nY; ++y) {
                double base = inst.pS[s] * enc(s, x) * inst.channel(x, y);
                for (int sh = 0; sh < nSh; ++sh)
                    residual += std::abs(t.at(s, x, y, sh) - base * dec(y, sh));
            }

    MembershipReport rep;
    rep.l1Residual = residual;
    bool ok = residual <= tol;
    for (int s = 0; s < nS && ok; ++s) ok = std::abs(qS[s] - inst.pS[s]) <= tol;
    for (int x = 0; x < nX && ok; ++x) {
        if (qX[x] <= 0.0) continue;
        double rowdev = 0.0;
        for (int y = 0; y < nY; ++y) rowdev += std::abs(mXY(x, y) / qX[x] - inst.channel(x, y));
        ok = rowdev <= tol;
    }
    rep.inQ = ok;
    return rep;
}

Witness nonconvexity_witness(const Instance& inst) {
    Witness w;
    if (inst.nX < 2 && inst.nShat < 2) return w;  // the excluded singleton case
    if (inst.nX < 2 || inst.nShat < 2) return w;  // need distinct kernels on both sides
    w.applicable = true;

    auto clampi = [](int v, int hi) { return v > hi ? hi : v; };
    DetCode c1, c2;
    c1.f.resize(inst.nS);
    c1.g.resize(inst.nY);
    c2.f.resize(inst.nS);
    c2.g.resize(inst.nY);
    for (int s = 0; s < inst.nS; ++s) {
        int id = clampi(s, inst.nX - 1);
        c1.f[s] = id;
        c2.f[s] = inst.nX - 1 - id;
    }
    for (int y = 0; y < inst.nY; ++y) {
        int id = clampi(y, inst.nShat - 1);
        c1.g[y] = id;
        c2.g[y] = inst.nShat - 1 - id;
    }

    w.q1 = build_joint_from_code(inst, det_code_to_random(c1, inst));
    w.q2 = build_joint_from_code(inst, det_code_to_random(c2, inst));
    w.t = 0.5;
    JointDist mid;
    mid.q = w.q1.q;
    for (size_t i = 0; i < mid.q.data.size(); ++i)
        mid.q.data[i] = w.t * w.q1.q.data[i] + (1.0 - w.t) * w.q2.q.data[i];
    w.residual = membership_check(inst, mid, 0.0).l1Residual;
    return w;
}

SepReport separability_projection(const Instance& inst) {
    int nS = inst.nS, nX = inst.nX, nY = inst.nY, nSh = inst.nShat;
    SepReport rep;
    rep.f1 = Vec(nX, 0.0);
    rep.f2 = Mat(nS, nSh, 0.0);
    rep.f3 = Mat(nX, nY, 0.0);

    // Backfitting (block Gauss-Seidel on the normal equations). The three
    // component subspaces overlap only in constants, so each block update is
    // a plain average of the current residual over the complementary axes.
    const double denom1 = static_cast<double>(nS) * nY * nSh;
    const double denom2 = static_cast<double>(nX) * nY;
    const double denom3 = static_cast<double>(nS) * nSh;

    auto residual_norm = [&]() {
        double sq = 0.0;
        for (int s = 0; s < nS; ++s)
            for (int x = 0; x < nX; ++x)
                for (int y = 0; y < nY; ++y)
                    for (int sh = 0; sh < nSh; ++sh) {
                        double r = inst.cost_at(s, x, y, sh) - rep.f1[x] - rep.f2(s, sh) -
                                   rep.f3(x, y);
                        sq += r * r;
                    }
        return std::sqrt(sq);
    };

    double prev = residual_norm();
    for (int iter = 0; iter < 400; ++iter) {
        for (int x = 0; x < nX; ++x) {
            double acc = 0.0;
            for (int s = 0; s < nS; ++s)
                for (int y = 0; y < nY; ++y)
                    for (int sh = 0; sh < nSh; ++sh)
                        acc += inst.cost_at(s, x, y, sh) - rep.f2(s, sh) - rep.f3(x, y);
            rep.f1[x] = acc / denom1;
        }
        for (int s = 0; s < nS; ++s)
            for (int sh = 0; sh < nSh; ++sh) {
                double acc = 0.0;
                for (int x = 0; x < nX; ++x)
                    for (int y = 0; y < nY; ++y)
                        acc += inst.cost_at(s, x, y, sh) - rep.f1[x] - rep.f3(x, y);
                rep.f2(s, sh) = acc / denom2;
            }
        for (int x = 0; x < nX; ++x)
            for (int y = 0; y < nY; ++y) {
                double acc = 0.0;
                for (int s = 0; s < nS; ++s)
                    for (int sh = 0; sh < nSh; ++sh)
                        acc += inst.cost_at(s, x, y, sh) - rep.f1[x] - rep.f2(s, sh);
                rep.f3(x, y) = acc / denom3;
            }
        double cur = residual_norm();
        if (std::abs(prev - cur) <= 1e-14 * (1.0 + cur)) {
            prev = cur;
            break;
        }
        prev = cur;
    }
    rep.residual = prev;
    return rep;
}

} // namespace teamrelax
