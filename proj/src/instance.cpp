#include "teamrelax/instance.hpp"

#include <cmath>

namespace teamrelax {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

bool is_simplex(const Vec& v, double tol) {
    double total = 0.0;
    for (double x : v) {
        if (x < -tol || !std::isfinite(x)) return false;
        total += x;
    }
    return std::abs(total - 1.0) <= tol;
}

} // namespace

void Instance::materialize_dense(unsigned long long budget) {
    if (denseCost) return;
    require(separable.has_value(), "instance has no cost data");
    unsigned long long n = tensor_entries();
    if (n > budget)
        throw budget_error("dense cost tensor exceeds budget", n, budget);
    Tensor4 t(nS, nX, nY, nShat);
    for (int s = 0; s < nS; ++s)
        for (int x = 0; x < nX; ++x) {
            double base = separable->rho[x] + tau_at(s, x);
            for (int y = 0; y < nY; ++y)
                for (int sh = 0; sh < nShat; ++sh)
                    t.at(s, x, y, sh) = base + separable->delta(s, sh);
        }
    denseCost = std::move(t);
}

void Instance::validate() const {
    require(nS > 0 && nX > 0 && nY > 0 && nShat > 0, "alphabet sizes must be positive");
    require(static_cast<int>(sValues.size()) == nS && static_cast<int>(xValues.size()) == nX &&
                static_cast<int>(yValues.size()) == nY &&
                static_cast<int>(shatValues.size()) == nShat,
            "label arrays must match alphabet sizes");
    require(static_cast<int>(pS.size()) == nS, "pS length mismatch");
    require(is_simplex(pS, 1e-12), "pS must be a probability vector (tol 1e-12)");
    require(channel.rows == nX && channel.cols == nY, "channel must be nX x nY");
    for (int x = 0; x < nX; ++x) {
        double rowsum = 0.0;
        for (int y = 0; y < nY; ++y) {
            double v = channel(x, y);
            require(v >= -1e-12 && std::isfinite(v), "channel entries must be nonnegative");
            rowsum += v;
        }
        require(std::abs(rowsum - 1.0) <= 1e-12, "channel rows must sum to 1 (tol 1e-12)");
    }
    require(denseCost.has_value() || separable.has_value(), "instance needs a cost");
    if (denseCost) {
        require(denseCost->nS == nS && denseCost->nX == nX && denseCost->nY == nY &&
                    denseCost->nShat == nShat,
                "cost tensor shape mismatch");
        for (double v : denseCost->data)
            require(std::isfinite(v), "cost entries must be finite");
    }
    if (separable) {
        const SeparableCost& sc = *separable;
        require(sc.delta.rows == nS && sc.delta.cols == nShat, "delta must be nS x nShat");
        require(static_cast<int>(sc.rho.size()) == nX, "rho length mismatch");
        for (double v : sc.delta.data) require(std::isfinite(v), "delta entries must be finite");
        for (double v : sc.rho) require(std::isfinite(v), "rho entries must be finite");
        if (sc.tauPrime) {
            require(static_cast<int>(sc.tauPrime->size()) == nS, "tauPrime length mismatch");
            for (double v : sc.rho)
                require(v >= 0.0, "rho must be nonnegative when a cross term is present");
            for (double v : *sc.tauPrime)
                require(v >= 0.0 && std::isfinite(v), "tauPrime must be nonnegative");
        }
    }
}

void validate_joint(const JointDist& q, const Instance& inst) {
    if (q.q.nS != inst.nS || q.q.nX != inst.nX || q.q.nY != inst.nY || q.q.nShat != inst.nShat)
        throw std::invalid_argument("joint distribution shape mismatch");
    double total = 0.0;
    for (double v : q.q.data) {
        if (v < -1e-12 || !std::isfinite(v))
            throw std::invalid_argument("joint entries must be nonnegative");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-10)
        throw std::invalid_argument("joint must have total mass 1 (tol 1e-10)");
}

void validate_random_code(const RandomCode& code, const Instance& inst) {
    if (code.qXgivenS.rows != inst.nS || code.qXgivenS.cols != inst.nX)
        throw std::invalid_argument("encoder kernel must be nS x nX");
    if (code.qShatGivenY.rows != inst.nY || code.qShatGivenY.cols != inst.nShat)
        throw std::invalid_argument("decoder kernel must be nY x nShat");
    auto check_rows = [](const Mat& m, const char* what) {
        for (int r = 0; r < m.rows; ++r) {
            double rowsum = 0.0;
            for (int c = 0; c < m.cols; ++c) {
                if (m(r, c) < -1e-12) throw std::invalid_argument(std::string(what) + ": negative entry");
                rowsum += m(r, c);
            }
            if (std::abs(rowsum - 1.0) > 1e-12)
                throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
        }
    };
    check_rows(code.qXgivenS, "encoder kernel");
    check_rows(code.qShatGivenY, "decoder kernel");
}

void validate_det_code(const DetCode& code, const Instance& inst) {
    if (static_cast<int>(code.f.size()) != inst.nS)
        throw std::invalid_argument("encoder must have nS entries");
    if (static_cast<int>(code.g.size()) != inst.nY)
        throw std::invalid_argument("decoder must have nY entries");
    for (int v : code.f)
        if (v < 0 || v >= inst.nX) throw std::invalid_argument("encoder entry out of range");
    for (int v : code.g)
        if (v < 0 || v >= inst.nShat) throw std::invalid_argument("decoder entry out of range");
}

void validate_pair(const EndToEndPair& pair, const Instance& inst) {
    if (pair.a.rows != inst.nS || pair.a.cols != inst.nShat)
        throw std::invalid_argument("pair.a must be nS x nShat");
    if (static_cast<int>(pair.b.size()) != inst.nX)
        throw std::invalid_argument("pair.b must have nX entries");
    for (int s = 0; s < pair.a.rows; ++s) {
        double rowsum = 0.0;
        for (int sh = 0; sh < pair.a.cols; ++sh) {
            if (pair.a(s, sh) < -1e-12) throw std::invalid_argument("pair.a: negative entry");
            rowsum += pair.a(s, sh);
        }
        if (std::abs(rowsum - 1.0) > 1e-12)
            throw std::invalid_argument("pair.a: row does not sum to 1");
    }
    double bsum = 0.0;
    for (double v : pair.b) {
        if (v < -1e-12) throw std::invalid_argument("pair.b: negative entry");
        bsum += v;
    }
    if (std::abs(bsum - 1.0) > 1e-12) throw std::invalid_argument("pair.b does not sum to 1");
}

} // namespace teamrelax
