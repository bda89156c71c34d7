#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "teamrelax/tensor.hpp"

namespace teamrelax {

/// Thrown when an operation would exceed the configured work budget
/// (e.g. exhaustive code enumeration or dense-tensor materialization).
struct budget_error : std::runtime_error {
    unsigned long long required;
    unsigned long long budget;
    budget_error(const std::string& what, unsigned long long req, unsigned long long bud)
        : std::runtime_error(what), required(req), budget(bud) {}
};

/// Structured cost kappa(s,x,y,shat) = delta(s,shat) + rho(x) + tau(x,s),
/// where tau(x,s) = kCross * sgn(xValue*sValue) * sqrt(rho(x)*tauPrime(s)).
/// The sign factor makes the expansion reproduce bilinear terms like
/// s01*x*s exactly when rho, tauPrime are the squared-label vectors.
struct SeparableCost {
    Mat delta;                    // nS x nShat distortion
    Vec rho;                      // nX channel-input cost
    std::optional<Vec> tauPrime;  // nS, present iff a cross term exists
    double kCross = 0.0;

    bool has_cross() const { return tauPrime.has_value() && kCross != 0.0; }
};

/// A problem instance: alphabets with real-valued labels, source
/// distribution, channel, and the cost in either dense or separable form.
struct Instance {
    int nS = 0, nX = 0, nY = 0, nShat = 0;
    Vec sValues, xValues, yValues, shatValues;  // labels, default 0..n-1
    Vec pS;                                     // length nS
    Mat channel;                                // nX x nY, row x = P(y|x)

    std::optional<Tensor4> denseCost;
    std::optional<SeparableCost> separable;

    bool has_separable() const { return separable.has_value(); }
    bool has_dense() const { return denseCost.has_value(); }

    double tau_at(int s, int x) const {
        const SeparableCost& sc = *separable;
        if (!sc.has_cross()) return 0.0;
        double prod = sc.rho[x] * (*sc.tauPrime)[s];
        double sgn = (xValues[x] * sValues[s] > 0) ? 1.0 : (xValues[x] * sValues[s] < 0 ? -1.0 : 0.0);
        return sc.kCross * sgn * std::sqrt(prod < 0 ? 0.0 : prod);
    }

    double cost_at(int s, int x, int y, int sh) const {
        if (denseCost) return denseCost->at(s, x, y, sh);
        const SeparableCost& sc = *separable;
        return sc.delta(s, sh) + sc.rho[x] + tau_at(s, x);
    }

    size_t tensor_entries() const {
        return static_cast<size_t>(nS) * nX * nY * nShat;
    }

    /// Expands the separable cost to a dense tensor (budgeted). No-op if a
    /// dense tensor is already present.
    void materialize_dense(unsigned long long budget = 100000000ULL);

    /// Checks all type invariants; throws std::invalid_argument on failure.
    void validate() const;
};

/// Deterministic code: encoder f: S -> X, decoder g: Y -> Shat.
struct DetCode {
    std::vector<int> f;  // length nS, entries in [0, nX)
    std::vector<int> g;  // length nY, entries in [0, nShat)

    bool operator==(const DetCode& o) const { return f == o.f && g == o.g; }
};

/// Random code: stochastic encoder and decoder kernels.
struct RandomCode {
    Mat qXgivenS;     // nS x nX, rows on the simplex
    Mat qShatGivenY;  // nY x nShat
};

/// Full joint distribution over (S, X, Y, Shat).
struct JointDist {
    Tensor4 q;
};

/// The end-to-end pair (a, b): a(shat|s) = Q_{Shat|S}, b(x) = Q_X.
struct EndToEndPair {
    Mat a;  // nS x nShat, row-stochastic
    Vec b;  // length nX, on the simplex
};

void validate_joint(const JointDist& q, const Instance& inst);
void validate_random_code(const RandomCode& code, const Instance& inst);
void validate_det_code(const DetCode& code, const Instance& inst);
void validate_pair(const EndToEndPair& pair, const Instance& inst);

} // namespace teamrelax
