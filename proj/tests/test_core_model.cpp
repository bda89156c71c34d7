#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "test_helpers.hpp"

using namespace teamrelax;
using namespace teamrelax::testing;

TEST_CASE("instance invariants are enforced") {
    Instance inst = bsc_hamming(0.1);
    CHECK_NOTHROW(inst.validate());

    Instance bad = inst;
    bad.pS = {0.6, 0.5};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = inst;
    bad.channel(0, 0) = 0.95;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("separable expansion matches the tensor path") {
    std::mt19937_64 rng(7);
    Instance inst = make_instance(3, 3, 4, 2);
    SeparableCost sc;
    sc.delta = Mat(3, 2, 0.0);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (double& v : sc.delta.data) v = u(rng);
    sc.rho = {0.5, 1.25, 2.0};
    sc.tauPrime = Vec{0.2, 0.1, 0.4};
    sc.kCross = -1.0;
    inst.sValues = {-1.0, 0.0, 1.0};
    inst.xValues = {-2.0, 0.0, 2.0};
    inst.separable = sc;
    inst.validate();

    Instance dense = inst;
    dense.materialize_dense();
    for (int s = 0; s < 3; ++s)
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 4; ++y)
                for (int sh = 0; sh < 2; ++sh)
                    CHECK(dense.denseCost->at(s, x, y, sh) ==
                          doctest::Approx(inst.cost_at(s, x, y, sh)).epsilon(1e-12));
}

TEST_CASE("build_joint_from_code: identity case over a noiseless channel") {
    Instance inst = make_instance(2, 2, 2, 2);
    inst.channel = identity_channel(2);
    SeparableCost sc;
    sc.delta = hamming_delta(2, 2);
    sc.rho = Vec(2, 0.0);
    inst.separable = sc;

    DetCode id = identity_det_code(inst);
    JointDist q = build_joint_from_code(inst, det_code_to_random(id, inst));
    for (int s = 0; s < 2; ++s)
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int sh = 0; sh < 2; ++sh) {
                    double expect = (x == s && y == x && sh == y) ? 0.5 : 0.0;
                    CHECK(q.q.at(s, x, y, sh) == doctest::Approx(expect).epsilon(1e-15));
                }
}

TEST_CASE("build_joint_from_code: constant encoder concentrates Q_X") {
    std::mt19937_64 rng(3);
    Instance inst = random_instance(rng, 3);
    DetCode c = identity_det_code(inst);
    std::fill(c.f.begin(), c.f.end(), 0);
    JointDist q = build_joint_from_code(inst, det_code_to_random(c, inst));
    EndToEndPair pair = induced_endtoend(q, inst.pS);
    CHECK(pair.b[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("build_joint_from_code: hand-multiplied BSC entry") {
    // pS=(0.7,0.3), BSC(0.1), identity code: Q(0,0,1,1) = 0.7 * 0.1
    Instance inst = bsc_hamming(0.1);
    inst.pS = {0.7, 0.3};
    DetCode id = identity_det_code(inst);
    JointDist q = build_joint_from_code(inst, det_code_to_random(id, inst));
    CHECK(q.q.at(0, 0, 1, 1) == doctest::Approx(0.07).epsilon(1e-14));
}

TEST_CASE("det_code_to_random produces indicator rows") {
    Instance inst = make_instance(2, 2, 2, 2);
    SeparableCost sc;
    sc.delta = hamming_delta(2, 2);
    sc.rho = Vec(2, 0.0);
    inst.separable = sc;

    DetCode flip;
    flip.f = {1, 0};
    flip.g = {0, 0};
    RandomCode rc = det_code_to_random(flip, inst);
    CHECK(rc.qXgivenS(0, 1) == 1.0);
    CHECK(rc.qXgivenS(1, 0) == 1.0);
    CHECK(rc.qShatGivenY(0, 0) == 1.0);
    CHECK(rc.qShatGivenY(1, 0) == 1.0);

    DetCode bad = flip;
    bad.f = {2, 0};
    CHECK_THROWS_AS(det_code_to_random(bad, inst), std::invalid_argument);
}

TEST_CASE("induced_endtoend: identity code over BSC(0.1) gives the channel as a") {
    Instance inst = bsc_hamming(0.1);
    JointDist q = build_joint_from_code(inst, det_code_to_random(identity_det_code(inst), inst));
    EndToEndPair pair = induced_endtoend(q, inst.pS);
    CHECK(pair.a(0, 0) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(pair.a(0, 1) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(pair.a(1, 0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(pair.a(1, 1) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(pair.b[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("induced_endtoend: product joints have equal rows and round-trip (a,b)") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Instance inst = random_instance(rng, 3);
        Vec b = random_simplex(rng, inst.nX);
        Mat aRows = random_kernel(rng, inst.nS, inst.nShat);
        // product-form joint pS (x) b (x) channel (x) a-row coupling on s only
        Tensor4 t(inst.nS, inst.nX, inst.nY, inst.nShat);
        Vec py(inst.nY, 0.0);
        for (int x = 0; x < inst.nX; ++x)
            for (int y = 0; y < inst.nY; ++y) py[y] += b[x] * inst.channel(x, y);
        for (int s = 0; s < inst.nS; ++s)
            for (int x = 0; x < inst.nX; ++x)
                for (int y = 0; y < inst.nY; ++y)
                    for (int sh = 0; sh < inst.nShat; ++sh)
                        t.at(s, x, y, sh) =
                            inst.pS[s] * b[x] * inst.channel(x, y) * aRows(s, sh);
        EndToEndPair pair = induced_endtoend(JointDist{t}, inst.pS);
        for (int s = 0; s < inst.nS; ++s)
            for (int sh = 0; sh < inst.nShat; ++sh)
                CHECK(pair.a(s, sh) == doctest::Approx(aRows(s, sh)).epsilon(1e-12));
        for (int x = 0; x < inst.nX; ++x)
            CHECK(pair.b[x] == doctest::Approx(b[x]).epsilon(1e-12));
    }
}

TEST_CASE("induced_endtoend rejects joints inconsistent with pS") {
    Instance inst = bsc_hamming(0.1);
    JointDist q = build_joint_from_code(inst, det_code_to_random(identity_det_code(inst), inst));
    Vec wrong = {0.3, 0.7};
    CHECK_THROWS_AS(induced_endtoend(q, wrong), std::invalid_argument);
}

TEST_CASE("expected_cost examples") {
    Instance inst = bsc_hamming(0.1);
    JointDist q = build_joint_from_code(inst, det_code_to_random(identity_det_code(inst), inst));

    SUBCASE("hamming over BSC(0.1), identity code") {
        CHECK(expected_cost(inst, q) == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(expected_cost_det(inst, identity_det_code(inst)) ==
              doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("constant cost is that constant") {
        Instance constInst = inst;
        constInst.separable.reset();
        constInst.denseCost = Tensor4(2, 2, 2, 2, 3.25);
        CHECK(expected_cost(constInst, q) == doctest::Approx(3.25).epsilon(1e-12));
    }
    SUBCASE("noiseless identity chain has zero hamming cost") {
        Instance clean = inst;
        clean.channel = identity_channel(2);
        JointDist q0 =
            build_joint_from_code(clean, det_code_to_random(identity_det_code(clean), clean));
        CHECK(expected_cost(clean, q0) == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("expected_cost agrees with the direct deterministic sum") {
    std::mt19937_64 rng(100);
    for (int trial = 0; trial < 100; ++trial) {
        Instance inst = random_instance(rng, 3);
        std::uniform_int_distribution<int> px(0, inst.nX - 1), pg(0, inst.nShat - 1);
        DetCode c;
        c.f.resize(inst.nS);
        c.g.resize(inst.nY);
        for (int& v : c.f) v = px(rng);
        for (int& v : c.g) v = pg(rng);
        JointDist q = build_joint_from_code(inst, det_code_to_random(c, inst));
        CHECK(expected_cost(inst, q) ==
              doctest::Approx(expected_cost_det(inst, c)).epsilon(1e-12));
    }
}

TEST_CASE("membership_check accepts factorized joints") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Instance inst = random_instance(rng, 3);
        JointDist q = build_joint_from_code(inst, random_code(rng, inst));
        MembershipReport rep = membership_check(inst, q, 1e-10);
        CHECK(rep.l1Residual <= 1e-12);
        CHECK(rep.inQ);
    }
}

TEST_CASE("membership_check rejects a decoder that peeks at the source") {
    // shat = s deterministically while y is noise-corrupted cannot factorize
    Instance inst = bsc_hamming(0.1);
    Tensor4 t(2, 2, 2, 2, 0.0);
    for (int s = 0; s < 2; ++s)
        for (int y = 0; y < 2; ++y) t.at(s, s, y, s) = inst.pS[s] * inst.channel(s, y);
    MembershipReport rep = membership_check(inst, JointDist{t}, 1e-8);
    CHECK(rep.l1Residual > 1e-3);
    CHECK_FALSE(rep.inQ);
}

TEST_CASE("nonconvexity_witness: BSC and noiseless 3x3 cases") {
    SUBCASE("2-2-2-2 uniform BSC(0.1)") {
        Instance inst = bsc_hamming(0.1);
        Witness w = nonconvexity_witness(inst);
        REQUIRE(w.applicable);
        CHECK(w.residual > 1e-6);
        CHECK(membership_check(inst, w.q1, 1e-10).inQ);
        CHECK(membership_check(inst, w.q2, 1e-10).inQ);
    }
    SUBCASE("3-3-3-3 noiseless, distinct permutation codes") {
        Instance inst = make_instance(3, 3, 3, 3);
        inst.channel = identity_channel(3);
        SeparableCost sc;
        sc.delta = hamming_delta(3, 3);
        sc.rho = Vec(3, 0.0);
        inst.separable = sc;
        Witness w = nonconvexity_witness(inst);
        REQUIRE(w.applicable);
        CHECK(w.residual > 1e-6);
    }
    SUBCASE("singleton X and Shat is excluded by the lemma") {
        Instance inst = make_instance(2, 1, 2, 1);
        inst.denseCost = Tensor4(2, 1, 2, 1, 0.0);
        Witness w = nonconvexity_witness(inst);
        CHECK_FALSE(w.applicable);
    }
}

namespace {

// independent least-squares oracle: full design matrix, QR factorization
double lstsq_residual_oracle(const Instance& inst) {
    int nS = inst.nS, nX = inst.nX, nY = inst.nY, nSh = inst.nShat;
    int rows = nS * nX * nY * nSh;
    int cols = nX + nS * nSh + nX * nY;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd y(rows);
    int r = 0;
    for (int s = 0; s < nS; ++s)
        for (int x = 0; x < nX; ++x)
            for (int yy = 0; yy < nY; ++yy)
                for (int sh = 0; sh < nSh; ++sh, ++r) {
                    A(r, x) = 1.0;
                    A(r, nX + s * nSh + sh) = 1.0;
                    A(r, nX + nS * nSh + x * nY + yy) = 1.0;
                    y(r) = inst.cost_at(s, x, yy, sh);
                }
    // the block design matrix is rank deficient (constants shift between
    // blocks); SVD gives the true least-squares residual regardless
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sol = svd.solve(y);
    return (A * sol - y).norm();
}

} // namespace

TEST_CASE("separability_projection matches an independent least-squares oracle") {
    SUBCASE("kappa = k0 x^2 + (s-shat)^2 is already separable") {
        Instance inst = make_instance(3, 3, 3, 3);
        Tensor4 t(3, 3, 3, 3);
        for (int s = 0; s < 3; ++s)
            for (int x = 0; x < 3; ++x)
                for (int y = 0; y < 3; ++y)
                    for (int sh = 0; sh < 3; ++sh)
                        t.at(s, x, y, sh) = 0.25 * x * x + (s - sh) * (s - sh);
        inst.denseCost = t;
        CHECK(separability_projection(inst).residual <= 1e-10);
    }
    SUBCASE("witsenhausen cost on binary labels is not separable") {
        Instance inst = make_instance(2, 2, 2, 2);
        Tensor4 t(2, 2, 2, 2);
        for (int s = 0; s < 2; ++s)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                    for (int sh = 0; sh < 2; ++sh)
                        t.at(s, x, y, sh) = (x - sh) * (x - sh) + (x - s) * (x - s);
        inst.denseCost = t;
        SepReport rep = separability_projection(inst);
        CHECK(rep.residual > 1e-3);
        CHECK(rep.residual == doctest::Approx(lstsq_residual_oracle(inst)).epsilon(1e-8));
    }
    SUBCASE("pure bilinear term x*s is not separable") {
        Instance inst = make_instance(2, 2, 2, 2);
        Tensor4 t(2, 2, 2, 2);
        for (int s = 0; s < 2; ++s)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                    for (int sh = 0; sh < 2; ++sh) t.at(s, x, y, sh) = double(x) * s;
        inst.denseCost = t;
        SepReport rep = separability_projection(inst);
        CHECK(rep.residual > 1e-3);
        CHECK(rep.residual == doctest::Approx(lstsq_residual_oracle(inst)).epsilon(1e-8));
    }
    SUBCASE("random tensors agree with the oracle") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 10; ++trial) {
            Instance inst = random_instance(rng, 3);
            SepReport rep = separability_projection(inst);
            double oracle = lstsq_residual_oracle(inst);
            CHECK(rep.residual == doctest::Approx(oracle).epsilon(1e-7));
        }
    }
}

TEST_CASE("separability residual is invariant under adding separable structure") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        Instance inst = random_instance(rng, 3);
        double base = separability_projection(inst).residual;
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        Vec f1(inst.nX), f3(inst.nX * inst.nY);
        Mat f2(inst.nS, inst.nShat, 0.0);
        for (double& v : f1) v = u(rng);
        for (double& v : f2.data) v = u(rng);
        for (double& v : f3) v = u(rng);
        Instance shifted = inst;
        for (int s = 0; s < inst.nS; ++s)
            for (int x = 0; x < inst.nX; ++x)
                for (int y = 0; y < inst.nY; ++y)
                    for (int sh = 0; sh < inst.nShat; ++sh)
                        shifted.denseCost->at(s, x, y, sh) +=
                            f1[x] + f2(s, sh) + f3[x * inst.nY + y];
        double after = separability_projection(shifted).residual;
        CHECK(after == doctest::Approx(base).epsilon(1e-6));
    }
}

TEST_CASE("eq. (11) round trip: random codes stay in the feasible set") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        Instance inst = random_instance(rng, 3);
        RandomCode rc = random_code(rng, inst);
        JointDist q = build_joint_from_code(inst, rc);
        CHECK(membership_check(inst, q, 1e-10).l1Residual <= 1e-10);
    }
}

TEST_CASE("nonconvexity witness fires on every applicable random instance") {
    std::mt19937_64 rng(31);
    int applicable = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Instance inst = random_instance(rng, 3);
        Witness w = nonconvexity_witness(inst);
        if (!w.applicable) continue;
        ++applicable;
        CHECK(w.residual > 0.0);
    }
    CHECK(applicable == 100);  // generator always has nX, nShat >= 2
}
