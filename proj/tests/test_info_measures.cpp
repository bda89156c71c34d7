#include <doctest.h>

#include <cmath>
#include <random>

#include "teamrelax/blahut_arimoto.hpp"
#include "teamrelax/info_measures.hpp"
#include "test_helpers.hpp"

using namespace teamrelax;
using namespace teamrelax::testing;

namespace {

const std::vector<FGenerator> shipped_f = {
    FGenerator::neg_log(), FGenerator::total_variation(), FGenerator::squared_hellinger(),
    FGenerator::chi_square_like(), FGenerator::affine(1.0, 1.0)};

Mat joint_2x2(double a, double b, double c, double d) {
    Mat m(2, 2, 0.0);
    m(0, 0) = a;
    m(0, 1) = b;
    m(1, 0) = c;
    m(1, 1) = d;
    return m;
}

} // namespace

TEST_CASE("f generator contracts: f(1)=0, convexity, derivative") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.05, 10.0);
    for (const FGenerator& f : shipped_f) {
        CAPTURE(f.name);
        CHECK(std::abs(f.eval(1.0)) <= 1e-12);
        for (int i = 0; i < 1000; ++i) {
            double t1 = u(rng), t2 = u(rng), t3 = u(rng);
            if (t1 > t3) std::swap(t1, t3);
            t2 = std::min(std::max(t2, t1), t3);
            if (t3 - t1 < 1e-9) continue;
            double w = (t2 - t1) / (t3 - t1);
            double chord = (1.0 - w) * f.eval(t1) + w * f.eval(t3);
            CHECK(f.eval(t2) <= chord + 1e-10);
        }
        for (int i = 0; i < 200; ++i) {
            double t = u(rng);
            if (std::abs(t - 1.0) < 1e-3 && f.kind == FGenerator::Kind::totalVariation)
                continue;  // kink; subgradient convention
            double h = 1e-6 * std::max(1.0, t);
            double fd = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
            CHECK(f.deriv(t) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("kl_divergence basics") {
    CHECK(kl_divergence({0.3, 0.7}, {0.3, 0.7}) == doctest::Approx(0.0));
    CHECK(kl_divergence({1.0, 0.0}, {0.5, 0.5}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::isinf(kl_divergence({0.5, 0.5}, {1.0, 0.0})));
}

TEST_CASE("mutual_information basics") {
    CHECK(mutual_information(joint_2x2(0.25, 0.25, 0.25, 0.25)) == doctest::Approx(0.0));
    CHECK(mutual_information(joint_2x2(0.5, 0.0, 0.0, 0.5)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // direct summation: 0.8 ln 1.6 + 0.2 ln 0.4
    CHECK(mutual_information(joint_2x2(0.4, 0.1, 0.1, 0.4)) ==
          doctest::Approx(0.19274475702175742).epsilon(1e-12));
}

TEST_CASE("f_divergence basics and conventions") {
    std::mt19937_64 rng(2);
    SUBCASE("vanishes at p = q for every f kind") {
        for (const FGenerator& f : shipped_f) {
            for (int i = 0; i < 20; ++i) {
                Vec p = random_simplex(rng, 4);
                CHECK(std::abs(f_divergence(f, p, p)) <= 1e-12);
            }
        }
    }
    SUBCASE("total variation is half the l1 distance") {
        CHECK(f_divergence(FGenerator::total_variation(), {0.8, 0.2}, {0.5, 0.5}) ==
              doctest::Approx(0.3).epsilon(1e-12));
    }
    SUBCASE("negLog f-divergence swaps the KL arguments") {
        FGenerator f = FGenerator::neg_log();
        for (int i = 0; i < 50; ++i) {
            Vec p = random_simplex(rng, 5), q = random_simplex(rng, 5);
            CHECK(f_divergence(f, p, q) == doctest::Approx(kl_divergence(q, p)).epsilon(1e-10));
        }
    }
    SUBCASE("absolute-continuity failure returns the infinity flag") {
        FGenerator f = FGenerator::neg_log();
        CHECK(std::isinf(f_divergence(f, {0.0, 1.0}, {0.5, 0.5})));
    }
}

TEST_CASE("f_mutual_information basics") {
    std::mt19937_64 rng(3);
    SUBCASE("product joints give zero for every f") {
        for (const FGenerator& f : shipped_f) {
            Vec r = random_simplex(rng, 3), c = random_simplex(rng, 4);
            Mat joint(3, 4, 0.0);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 4; ++j) joint(i, j) = r[i] * c[j];
            CHECK(std::abs(f_mutual_information(f, joint)) <= 1e-12);
        }
    }
    SUBCASE("negLog reduces to mutual information") {
        FGenerator f = FGenerator::neg_log();
        CHECK(f_mutual_information(f, joint_2x2(0.4, 0.1, 0.1, 0.4)) ==
              doctest::Approx(0.19274475702175742).epsilon(1e-10));
        for (int i = 0; i < 1000; ++i) {
            Mat joint(3, 3, 0.0);
            Vec flat = random_simplex(rng, 9);
            joint.data = flat;
            CHECK(f_mutual_information(f, joint) ==
                  doctest::Approx(mutual_information(joint)).epsilon(1e-10));
        }
    }
    SUBCASE("total variation on the diagonal joint") {
        CHECK(f_mutual_information(FGenerator::total_variation(), joint_2x2(0.5, 0.0, 0.0, 0.5)) ==
              doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("f-sum inequality on random nonnegative arrays") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.01, 3.0);
    for (const FGenerator& f : shipped_f) {
        CAPTURE(f.name);
        for (int trial = 0; trial < 1000; ++trial) {
            int n = 2 + static_cast<int>(rng() % 5);
            double lhs = 0.0, sa = 0.0, sb = 0.0;
            for (int i = 0; i < n; ++i) {
                double ai = u(rng), bi = u(rng);
                lhs += bi * f.eval(ai / bi);
                sa += ai;
                sb += bi;
            }
            CHECK(lhs >= sb * f.eval(sa / sb) - 1e-10);
        }
    }
}

TEST_CASE("joint convexity of D_f at midpoints") {
    std::mt19937_64 rng(5);
    for (const FGenerator& f : shipped_f) {
        CAPTURE(f.name);
        for (int trial = 0; trial < 200; ++trial) {
            Vec p1 = random_simplex(rng, 4), q1 = random_simplex(rng, 4);
            Vec p2 = random_simplex(rng, 4), q2 = random_simplex(rng, 4);
            Vec pm(4), qm(4);
            for (int i = 0; i < 4; ++i) {
                pm[i] = 0.5 * (p1[i] + p2[i]);
                qm[i] = 0.5 * (q1[i] + q2[i]);
            }
            double rhs = 0.5 * (f_divergence(f, p1, q1) + f_divergence(f, p2, q2));
            CHECK(f_divergence(f, pm, qm) <= rhs + 1e-10);
        }
    }
}

TEST_CASE("dpi_slack along the four-variable chain") {
    std::mt19937_64 rng(6);
    SUBCASE("identity code over a noiseless channel is lossless") {
        Instance inst = make_instance(2, 2, 2, 2);
        inst.channel = identity_channel(2);
        SeparableCost sc;
        sc.delta = hamming_delta(2, 2);
        sc.rho = Vec(2, 0.0);
        inst.separable = sc;
        JointDist q =
            build_joint_from_code(inst, det_code_to_random(identity_det_code(inst), inst));
        Slack s = dpi_slack(FGenerator::neg_log(), q);
        CHECK(s.slack == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("constant encoder kills both informations") {
        Instance inst = bsc_hamming(0.1);
        DetCode c = identity_det_code(inst);
        std::fill(c.f.begin(), c.f.end(), 0);
        JointDist q = build_joint_from_code(inst, det_code_to_random(c, inst));
        Slack s = dpi_slack(FGenerator::neg_log(), q);
        CHECK(s.iXY == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(s.iSShat == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("identity code over BSC(0.1): slack from direct marginalization") {
        Instance inst = bsc_hamming(0.1);
        JointDist q =
            build_joint_from_code(inst, det_code_to_random(identity_det_code(inst), inst));
        Slack s = dpi_slack(FGenerator::neg_log(), q);
        // chain is S -> X=S -> Y -> Shat=Y: both informations equal I of the BSC
        double iBsc = std::log(2.0) - (-0.1 * std::log(0.1) - 0.9 * std::log(0.9));
        CHECK(s.iXY == doctest::Approx(iBsc).epsilon(1e-12));
        CHECK(s.slack >= -1e-12);
    }
    SUBCASE("f-DPI holds for 1000 random feasible joints and all shipped f") {
        for (int trial = 0; trial < 1000; ++trial) {
            Instance inst = random_instance(rng, 3);
            JointDist q = build_joint_from_code(inst, random_code(rng, inst));
            for (const FGenerator& f : shipped_f) {
                Slack s = dpi_slack(f, q);
                CHECK(s.slack >= -1e-10);
            }
        }
    }
}

namespace {

double fd_grad_a(const FGenerator& f, const Vec& pS, Mat a, int s, int sh, double h) {
    a(s, sh) += h;
    double up = f_mi_source(f, pS, a);
    a(s, sh) -= 2.0 * h;
    double dn = f_mi_source(f, pS, a);
    return (up - dn) / (2.0 * h);
}

double fd_grad_b(const FGenerator& f, const Mat& ch, Vec b, int x, double h) {
    b[x] += h;
    double up = f_mi_channel(f, ch, b);
    b[x] -= 2.0 * h;
    double dn = f_mi_channel(f, ch, b);
    return (up - dn) / (2.0 * h);
}

bool tv_kink_nearby(const Vec& pS, const Mat& a, const Mat& ch, const Vec& b) {
    Vec marg(a.cols, 0.0);
    for (int s = 0; s < a.rows; ++s)
        for (int sh = 0; sh < a.cols; ++sh) marg[sh] += pS[s] * a(s, sh);
    for (int s = 0; s < a.rows; ++s)
        for (int sh = 0; sh < a.cols; ++sh)
            if (std::abs(marg[sh] / a(s, sh) - 1.0) <= 1e-3) return true;
    Vec by(ch.cols, 0.0);
    for (int x = 0; x < ch.rows; ++x)
        for (int y = 0; y < ch.cols; ++y) by[y] += b[x] * ch(x, y);
    for (int x = 0; x < ch.rows; ++x)
        for (int y = 0; y < ch.cols; ++y)
            if (std::abs(by[y] / ch(x, y) - 1.0) <= 1e-3) return true;
    return false;
}

} // namespace

TEST_CASE("f_mi_gradients: negLog closed forms") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        Instance inst = random_instance(rng, 3);
        Mat a = random_kernel(rng, inst.nS, inst.nShat);
        Vec b = random_simplex(rng, inst.nX);
        Gradients g = f_mi_gradients(FGenerator::neg_log(), inst.pS, a, inst.channel, b);
        REQUIRE_FALSE(g.boundary);

        Vec marg(inst.nShat, 0.0);
        for (int s = 0; s < inst.nS; ++s)
            for (int sh = 0; sh < inst.nShat; ++sh) marg[sh] += inst.pS[s] * a(s, sh);
        for (int s = 0; s < inst.nS; ++s)
            for (int sh = 0; sh < inst.nShat; ++sh)
                CHECK(g.dA(s, sh) == doctest::Approx(inst.pS[s] * std::log(a(s, sh) / marg[sh]))
                                         .epsilon(1e-10));

        Vec by(inst.nY, 0.0);
        for (int x = 0; x < inst.nX; ++x)
            for (int y = 0; y < inst.nY; ++y) by[y] += b[x] * inst.channel(x, y);
        for (int x = 0; x < inst.nX; ++x) {
            double d = kl_divergence(row_copy(inst.channel, x), by);
            CHECK(g.dB[x] == doctest::Approx(d - 1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("f_mi_gradients: negLog symmetry cases") {
    SUBCASE("identical rows give zero a-gradient") {
        Instance inst = make_instance(2, 2, 2, 2);
        Mat a(2, 2, 0.0);
        a(0, 0) = a(1, 0) = 0.3;
        a(0, 1) = a(1, 1) = 0.7;
        Vec b = {0.5, 0.5};
        Gradients g = f_mi_gradients(FGenerator::neg_log(), inst.pS, a, inst.channel, b);
        for (double v : g.dA.data) CHECK(std::abs(v) <= 1e-12);
    }
    SUBCASE("uniform b over a symmetric channel gives equal b-gradients") {
        Instance inst = bsc_hamming(0.1);
        Mat a(2, 2, 0.5);
        Vec b = {0.5, 0.5};
        Gradients g = f_mi_gradients(FGenerator::neg_log(), inst.pS, a, inst.channel, b);
        CHECK(g.dB[0] == doctest::Approx(g.dB[1]).epsilon(1e-12));
    }
}

TEST_CASE("f_mi_gradients match central finite differences for all shipped f") {
    std::mt19937_64 rng(8);
    const double h = 1e-5;
    for (const FGenerator& f : shipped_f) {
        CAPTURE(f.name);
        int done = 0;
        while (done < 100) {
            Instance inst = random_instance(rng, 3);
            Mat a = random_kernel(rng, inst.nS, inst.nShat, 0.05);
            Vec b = random_simplex(rng, inst.nX, 0.05);
            if (f.kind == FGenerator::Kind::totalVariation &&
                tv_kink_nearby(inst.pS, a, inst.channel, b))
                continue;  // subgradient points are exempt by convention
            Gradients g = f_mi_gradients(f, inst.pS, a, inst.channel, b);
            REQUIRE_FALSE(g.boundary);
            for (int s = 0; s < inst.nS; ++s)
                for (int sh = 0; sh < inst.nShat; ++sh) {
                    double fd = fd_grad_a(f, inst.pS, a, s, sh, h);
                    double scale = std::max(1.0, std::abs(fd));
                    CHECK(std::abs(g.dA(s, sh) - fd) <= 1e-4 * scale);
                }
            for (int x = 0; x < inst.nX; ++x) {
                double fd = fd_grad_b(f, inst.channel, b, x, h);
                double scale = std::max(1.0, std::abs(fd));
                CHECK(std::abs(g.dB[x] - fd) <= 1e-4 * scale);
            }
            ++done;
        }
    }
}

TEST_CASE("boundary cells produce the distinguished gradient return") {
    Instance inst = bsc_hamming(0.1);
    Mat a(2, 2, 0.0);
    a(0, 0) = 1.0;
    a(1, 0) = 0.5;
    a(1, 1) = 0.5;
    Vec b = {0.5, 0.5};
    Gradients g = f_mi_gradients(FGenerator::neg_log(), inst.pS, a, inst.channel, b);
    CHECK(g.boundary);
    CHECK(std::isnan(g.dA(0, 1)));
}

TEST_CASE("saddle_probe certifies negLog and affine") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        Mat ch = random_kernel(rng, 3, 3);
        ProbeReport pn = saddle_probe(FGenerator::neg_log(), ch, 1000, 42);
        CHECK(pn.passed);
        ProbeReport pa = saddle_probe(FGenerator::affine(1.0, 1.0), ch, 1000, 42);
        CHECK(pa.passed);
        // kernel-side convexity holds for every f kind
        for (const FGenerator& f : shipped_f) {
            ProbeReport p = saddle_probe(f, ch, 300, 43);
            CHECK(p.convexityWorstViolation >= -1e-9);
        }
    }
}

TEST_CASE("saddle_probe records evidence for a non-saddle candidate without asserting") {
    // outcome recorded, not asserted: the probe itself is the oracle
    std::mt19937_64 rng(10);
    Mat ch = random_kernel(rng, 3, 3);
    FGenerator weird = FGenerator::custom(
        "cube", [](double t) { double d = t - 1.0; return d * d * (1 + 0.25 * d * d); },
        [](double t) { double d = t - 1.0; return 2 * d + 0.25 * 4 * d * d * d; }, 1.25, pos_inf());
    ProbeReport p = saddle_probe(weird, ch, 500, 44);
    MESSAGE("custom probe passed=", p.passed, " worst=", p.worstViolation);
}
