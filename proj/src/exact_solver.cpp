#include "teamrelax/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "teamrelax/core_ops.hpp"

namespace teamrelax {

namespace {

// saturating nX^nS * nShat^nY
unsigned long long pow_sat(unsigned long long base, int exp) {
    unsigned long long r = 1;
    for (int i = 0; i < exp; ++i) {
        if (base != 0 && r > std::numeric_limits<unsigned long long>::max() / base)
            return std::numeric_limits<unsigned long long>::max();
        r *= base;
    }
    return r;
}

// cf(y, sh) = sum_s pS(s) channel(f(s), y) kappa(s, f(s), y, sh)
Mat decoder_cost_table(const Instance& inst, const std::vector<int>& f) {
    Mat cf(inst.nY, inst.nShat, 0.0);
    for (int s = 0; s < inst.nS; ++s) {
        if (inst.pS[s] == 0.0) continue;
        int x = f[s];
        for (int y = 0; y < inst.nY; ++y) {
            double w = inst.pS[s] * inst.channel(x, y);
            if (w == 0.0) continue;
            for (int sh = 0; sh < inst.nShat; ++sh)
                cf(y, sh) += w * inst.cost_at(s, x, y, sh);
        }
    }
    return cf;
}

double table_value(const Mat& cf, const std::vector<int>& g) {
    double v = 0.0;
    for (int y = 0; y < cf.rows; ++y) v += cf(y, g[y]);
    return v;
}

} // namespace

unsigned long long enumeration_count(const Instance& inst) {
    unsigned long long encoders = pow_sat(inst.nX, inst.nS);
    unsigned long long decoders = pow_sat(inst.nShat, inst.nY);
    if (encoders != 0 && decoders > std::numeric_limits<unsigned long long>::max() / encoders)
        return std::numeric_limits<unsigned long long>::max();
    return encoders * decoders;
}

ExactResult enumerate_optimal(const Instance& inst, bool keepTable, unsigned long long budget) {
    inst.validate();
    unsigned long long total = enumeration_count(inst);
    if (total > budget)
        throw budget_error("enumeration would evaluate " + std::to_string(total) +
                               " codes, budget is " + std::to_string(budget),
                           total, budget);

    ExactResult res;
    res.value = std::numeric_limits<double>::max();
    if (keepTable) res.table.emplace();

    std::vector<int> f(inst.nS, 0), g(inst.nY, 0);
    bool moreF = true;
    while (moreF) {
        Mat cf = decoder_cost_table(inst, f);
        std::fill(g.begin(), g.end(), 0);
        double running = table_value(cf, g);
        bool moreG = true;
        while (moreG) {
            ++res.evaluated;
            // incremental value carries roundoff; recompute before accepting
            if (running < res.value + 1e-9 || keepTable) {
                double exact = table_value(cf, g);
                if (keepTable) res.table->push_back({DetCode{f, g}, exact});
                if (exact < res.value) {
                    res.value = exact;
                    res.bestCode = DetCode{f, g};
                }
            }
            // lexicographic odometer: last decoder digit moves fastest
            moreG = false;
            for (int y = inst.nY - 1; y >= 0; --y) {
                running -= cf(y, g[y]);
                if (g[y] + 1 < inst.nShat) {
                    ++g[y];
                    running += cf(y, g[y]);
                    moreG = true;
                    break;
                }
                g[y] = 0;
                running += cf(y, 0);
            }
        }
        moreF = false;
        for (int s = inst.nS - 1; s >= 0; --s) {
            if (f[s] + 1 < inst.nX) {
                ++f[s];
                moreF = true;
                break;
            }
            f[s] = 0;
        }
    }
    return res;
}

namespace {

// best deterministic decoder against a fixed deterministic encoder
std::vector<int> decoder_best_response(const Instance& inst, const std::vector<int>& f) {
    Mat cf = decoder_cost_table(inst, f);
    std::vector<int> g(inst.nY, 0);
    for (int y = 0; y < inst.nY; ++y) {
        int best = 0;
        for (int sh = 1; sh < inst.nShat; ++sh)
            if (cf(y, sh) < cf(y, best)) best = sh;
        g[y] = best;
    }
    return g;
}

std::vector<int> decoder_best_response_random(const Instance& inst, const Mat& enc) {
    Mat cf(inst.nY, inst.nShat, 0.0);
    for (int s = 0; s < inst.nS; ++s) {
        if (inst.pS[s] == 0.0) continue;
        for (int x = 0; x < inst.nX; ++x) {
            double pe = inst.pS[s] * enc(s, x);
            if (pe == 0.0) continue;
            for (int y = 0; y < inst.nY; ++y) {
                double w = pe * inst.channel(x, y);
                if (w == 0.0) continue;
                for (int sh = 0; sh < inst.nShat; ++sh)
                    cf(y, sh) += w * inst.cost_at(s, x, y, sh);
            }
        }
    }
    std::vector<int> g(inst.nY, 0);
    for (int y = 0; y < inst.nY; ++y) {
        int best = 0;
        for (int sh = 1; sh < inst.nShat; ++sh)
            if (cf(y, sh) < cf(y, best)) best = sh;
        g[y] = best;
    }
    return g;
}

std::vector<int> encoder_best_response(const Instance& inst, const std::vector<int>& g) {
    std::vector<int> f(inst.nS, 0);
    for (int s = 0; s < inst.nS; ++s) {
        double best = std::numeric_limits<double>::max();
        int bestX = 0;
        for (int x = 0; x < inst.nX; ++x) {
            double acc = 0.0;
            for (int y = 0; y < inst.nY; ++y) {
                double c = inst.channel(x, y);
                if (c != 0.0) acc += c * inst.cost_at(s, x, y, g[y]);
            }
            if (acc < best) {
                best = acc;
                bestX = x;
            }
        }
        f[s] = bestX;
    }
    return f;
}

DetCode run_descent(const Instance& inst, std::vector<int> g, unsigned long long& evaluated,
                    std::vector<double>* trace) {
    DetCode code;
    code.g = std::move(g);
    code.f = encoder_best_response(inst, code.g);
    double value = expected_cost_det(inst, code);
    ++evaluated;
    if (trace) trace->push_back(value);
    for (int sweep = 0; sweep < 1000; ++sweep) {
        std::vector<int> g2 = decoder_best_response(inst, code.f);
        std::vector<int> f2 = encoder_best_response(inst, g2);
        DetCode next{f2, g2};
        double v2 = expected_cost_det(inst, next);
        ++evaluated;
        if (trace) trace->push_back(v2);
        if (v2 >= value - 1e-15) {
            if (v2 < value) {
                code = next;
            }
            break;
        }
        code = next;
        value = v2;
    }
    return code;
}

} // namespace

namespace {

bool lex_less(const DetCode& a, const DetCode& b) {
    if (a.f != b.f)
        return std::lexicographical_compare(a.f.begin(), a.f.end(), b.f.begin(), b.f.end());
    return std::lexicographical_compare(a.g.begin(), a.g.end(), b.g.begin(), b.g.end());
}

} // namespace

ExactResult alternating_best_response(const Instance& inst, const RandomCode& init, int restarts,
                                      unsigned seed, std::vector<double>* trace) {
    inst.validate();
    validate_random_code(init, inst);

    ExactResult res;
    res.heuristic = true;
    res.value = std::numeric_limits<double>::max();

    // first run from the supplied initialization
    std::vector<int> g0 = decoder_best_response_random(inst, init.qXgivenS);
    DetCode code = run_descent(inst, g0, res.evaluated, trace);
    res.bestCode = code;
    res.value = expected_cost_det(inst, code);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pickSh(0, inst.nShat - 1);
    for (int r = 0; r < restarts; ++r) {
        std::vector<int> g(inst.nY);
        for (int y = 0; y < inst.nY; ++y) g[y] = pickSh(rng);
        DetCode c = run_descent(inst, g, res.evaluated, nullptr);
        double v = expected_cost_det(inst, c);
        if (v < res.value - 1e-15 ||
            (std::abs(v - res.value) <= 1e-15 && lex_less(c, res.bestCode))) {
            res.value = v;
            res.bestCode = c;
        }
    }
    return res;
}

} // namespace teamrelax
