#include "teamrelax/inverse_optimal.hpp"

#include <algorithm>
#include <cmath>

#include "teamrelax/core_ops.hpp"

namespace teamrelax {

namespace {

void check_complementarity(const SynthesisSpec& spec, const EndToEndPair& pair) {
    if (spec.lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    if (!spec.nuA.empty()) {
        for (int s = 0; s < pair.a.rows; ++s) {
            double dotRow = 0.0;
            for (int sh = 0; sh < pair.a.cols; ++sh) {
                if (spec.nuA(s, sh) < -1e-12)
                    throw std::invalid_argument("nuA must be nonnegative");
                dotRow += pair.a(s, sh) * spec.nuA(s, sh);
            }
            if (std::abs(dotRow) > 1e-10)
                throw std::invalid_argument("complementarity <nuA(.|s), a(.|s)> = 0 violated");
        }
    }
    if (!spec.nuB.empty()) {
        double dotB = 0.0;
        for (size_t x = 0; x < pair.b.size(); ++x) {
            if (spec.nuB[x] < -1e-12) throw std::invalid_argument("nuB must be nonnegative");
            dotB += pair.b[x] * spec.nuB[x];
        }
        if (std::abs(dotB) > 1e-10)
            throw std::invalid_argument("complementarity <nuB, b> = 0 violated");
    }
}

} // namespace

SynthesizedCosts synthesize_costs(const Instance& inst, const EndToEndPair& pair,
                                  const SynthesisSpec& spec) {
    inst.validate();
    validate_pair(pair, inst);
    check_complementarity(spec, pair);

    double iA = f_mi_source(spec.f, inst.pS, pair.a);
    double iB = f_mi_channel(spec.f, inst.channel, pair.b);
    double slack = iB - iA;
    if (slack < -1e-9)
        throw std::invalid_argument("pair violates the f-DPI; not induced by a feasible code");
    if (spec.lambda > 0.0 && slack > 1e-9)
        throw std::invalid_argument(
            "lambda > 0 requires equality in the f-DPI (complementary slackness)");

    Gradients g = f_mi_gradients(spec.f, inst.pS, pair.a, inst.channel, pair.b);

    SynthesizedCosts out;
    out.delta = Mat(inst.nS, inst.nShat, 0.0);
    out.rho = Vec(inst.nX, 0.0);

    double maxDefined = -1e300;
    for (int s = 0; s < inst.nS; ++s)
        for (int sh = 0; sh < inst.nShat; ++sh) {
            double muA = spec.muA.empty() ? 0.0 : spec.muA[s];
            double nuA = spec.nuA.empty() ? 0.0 : spec.nuA(s, sh);
            if (inst.pS[s] > 0.0 && pair.a(s, sh) > 0.0 && std::isfinite(g.dA(s, sh))) {
                out.delta(s, sh) = -spec.lambda * g.dA(s, sh) / inst.pS[s] + muA + nuA;
                maxDefined = std::max(maxDefined, out.delta(s, sh));
            } else {
                out.delta(s, sh) = std::numeric_limits<double>::quiet_NaN();  // fill below
            }
        }
    if (maxDefined <= -1e300) maxDefined = 0.0;
    // zero-support cells: a large finite distortion absorbed by nuA keeps the
    // instance well-posed without touching complementarity
    for (double& v : out.delta.data)
        if (std::isnan(v)) v = maxDefined + 1.0;

    for (int x = 0; x < inst.nX; ++x) {
        double nuB = spec.nuB.empty() ? 0.0 : spec.nuB[x];
        if (!std::isfinite(g.dB[x]))
            throw std::invalid_argument("rho gradient undefined at x=" + std::to_string(x));
        out.rho[x] = spec.lambda * g.dB[x] + spec.muB + nuB;
    }
    return out;
}

GastparCosts gastpar_costs(const Instance& inst, const EndToEndPair& pair, double c1, double c2,
                           double rho0, const Vec& d0, const Vec& beta) {
    inst.validate();
    validate_pair(pair, inst);
    if (c1 <= 0.0 || c2 <= 0.0) throw std::invalid_argument("c1, c2 must be positive");
    if (!d0.empty() && static_cast<int>(d0.size()) != inst.nS)
        throw std::invalid_argument("d0 must have nS entries");
    if (!beta.empty()) {
        if (static_cast<int>(beta.size()) != inst.nX)
            throw std::invalid_argument("beta must have nX entries");
        for (double v : beta)
            if (v < 0.0) throw std::invalid_argument("beta must be nonnegative");
    }

    GastparCosts out;
    out.rho = Vec(inst.nX, 0.0);
    out.delta = Mat(inst.nS, inst.nShat, 0.0);

    Vec py(inst.nY, 0.0);
    for (int x = 0; x < inst.nX; ++x)
        for (int y = 0; y < inst.nY; ++y) py[y] += pair.b[x] * inst.channel(x, y);
    for (int x = 0; x < inst.nX; ++x) {
        double d = kl_divergence(row_copy(inst.channel, x), py);
        out.rho[x] = c1 * d + rho0;
        // beta plays the nuB role: it may only load off the support of b
        if (!beta.empty() && pair.b[x] <= 0.0) out.rho[x] += beta[x];
    }

    Vec aMarg(inst.nShat, 0.0);
    for (int s = 0; s < inst.nS; ++s)
        for (int sh = 0; sh < inst.nShat; ++sh) aMarg[sh] += inst.pS[s] * pair.a(s, sh);
    double maxDefined = -1e300;
    for (int s = 0; s < inst.nS; ++s)
        for (int sh = 0; sh < inst.nShat; ++sh) {
            double post = aMarg[sh] > 0.0 ? pair.a(s, sh) * inst.pS[s] / aMarg[sh] : 0.0;
            if (post > 0.0) {
                out.delta(s, sh) = -c2 * std::log(post) + (d0.empty() ? 0.0 : d0[s]);
                maxDefined = std::max(maxDefined, out.delta(s, sh));
            } else {
                out.flaggedCells.push_back({s, sh});
                out.delta(s, sh) = std::numeric_limits<double>::quiet_NaN();
            }
        }
    if (maxDefined <= -1e300) maxDefined = 0.0;
    for (double& v : out.delta.data)
        if (std::isnan(v)) v = maxDefined + 1.0;
    return out;
}

Instance instance_with_costs(const Instance& inst, const Mat& delta, const Vec& rho) {
    Instance out = inst;
    out.denseCost.reset();
    SeparableCost sc;
    sc.delta = delta;
    sc.rho = rho;
    sc.kCross = 0.0;
    out.separable = std::move(sc);
    out.validate();
    return out;
}

namespace {

VerifyReport verify_impl(const Instance& rebuilt, double candidateValue,
                         unsigned long long budget, unsigned seed) {
    VerifyReport rep;
    rep.candidateValue = candidateValue;
    if (enumeration_count(rebuilt) <= budget) {
        ExactResult ex = enumerate_optimal(rebuilt, false, budget);
        rep.globalMin = ex.value;
        rep.heuristic = false;
    } else {
        RandomCode init;
        init.qXgivenS = Mat(rebuilt.nS, rebuilt.nX, 1.0 / rebuilt.nX);
        init.qShatGivenY = Mat(rebuilt.nY, rebuilt.nShat, 1.0 / rebuilt.nShat);
        ExactResult ex = alternating_best_response(rebuilt, init, 16, seed);
        rep.globalMin = ex.value;
        rep.heuristic = true;
    }
    rep.optimal = candidateValue <= rep.globalMin + 1e-9;
    return rep;
}

} // namespace

VerifyReport verify_inverse_optimality(const Instance& inst, const Mat& delta, const Vec& rho,
                                       const DetCode& candidate, unsigned long long budget,
                                       unsigned seed) {
    Instance rebuilt = instance_with_costs(inst, delta, rho);
    validate_det_code(candidate, rebuilt);
    return verify_impl(rebuilt, expected_cost_det(rebuilt, candidate), budget, seed);
}

VerifyReport verify_inverse_optimality(const Instance& inst, const Mat& delta, const Vec& rho,
                                       const RandomCode& candidate, unsigned long long budget,
                                       unsigned seed) {
    Instance rebuilt = instance_with_costs(inst, delta, rho);
    validate_random_code(candidate, rebuilt);
    return verify_impl(rebuilt, expected_cost_random(rebuilt, candidate), budget, seed);
}

} // namespace teamrelax
