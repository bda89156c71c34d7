#include <doctest.h>

#include <random>

#include "teamrelax/exact_solver.hpp"
#include "test_helpers.hpp"

using namespace teamrelax;
using namespace teamrelax::testing;

TEST_CASE("enumeration on the BSC-Hamming instance") {
    SUBCASE("noiseless channel reaches zero") {
        Instance inst = bsc_hamming(0.0);
        ExactResult r = enumerate_optimal(inst);
        CHECK(r.value == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(r.evaluated == 16);
    }
    SUBCASE("BSC(0.1) pays the crossover") {
        Instance inst = bsc_hamming(0.1);
        ExactResult r = enumerate_optimal(inst, true);
        CHECK(r.value == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(r.evaluated == 16);
        REQUIRE(r.table.has_value());
        CHECK(r.table->size() == 16);
        // identity code attains it
        CHECK(r.bestCode.f == std::vector<int>{0, 1});
        CHECK(r.bestCode.g == std::vector<int>{0, 1});
        for (const auto& [code, value] : *r.table) CHECK(value >= r.value - 1e-12);
    }
    SUBCASE("constant cost ties break to the lexicographically smallest code") {
        Instance inst = bsc_hamming(0.1);
        inst.separable.reset();
        inst.denseCost = Tensor4(2, 2, 2, 2, 2.5);
        ExactResult r = enumerate_optimal(inst);
        CHECK(r.value == doctest::Approx(2.5).epsilon(1e-15));
        CHECK(r.bestCode.f == std::vector<int>{0, 0});
        CHECK(r.bestCode.g == std::vector<int>{0, 0});
    }
}

TEST_CASE("enumeration is exhaustive and budget-guarded") {
    std::mt19937_64 rng(41);
    Instance inst = random_instance(rng, 3);
    unsigned long long expect = 1;
    for (int s = 0; s < inst.nS; ++s) expect *= inst.nX;
    for (int y = 0; y < inst.nY; ++y) expect *= inst.nShat;
    ExactResult r = enumerate_optimal(inst);
    CHECK(r.evaluated == expect);
    CHECK_THROWS_AS(enumerate_optimal(inst, false, expect - 1), budget_error);
}

TEST_CASE("no random code beats the enumerated optimum") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        Instance inst = random_instance(rng, 3);
        ExactResult best = enumerate_optimal(inst);
        for (int i = 0; i < 1000; ++i) {
            RandomCode rc = random_code(rng, inst);
            CHECK(expected_cost_random(inst, rc) >= best.value - 1e-10);
        }
    }
}

TEST_CASE("alternating best response") {
    SUBCASE("identity init solves BSC(0.1)-Hamming in two sweeps") {
        Instance inst = bsc_hamming(0.1);
        RandomCode init = det_code_to_random(identity_det_code(inst), inst);
        std::vector<double> trace;
        ExactResult r = alternating_best_response(inst, init, 0, 1, &trace);
        CHECK(r.value == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(trace.size() <= 3);  // converged within two sweeps
        CHECK(r.heuristic);
    }
    SUBCASE("constant cost converges in one sweep to the tie-broken code") {
        Instance inst = bsc_hamming(0.1);
        inst.separable.reset();
        inst.denseCost = Tensor4(2, 2, 2, 2, 1.0);
        RandomCode init = det_code_to_random(identity_det_code(inst), inst);
        ExactResult r = alternating_best_response(inst, init, 0, 1);
        CHECK(r.value == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(r.bestCode.f == std::vector<int>{0, 0});
        CHECK(r.bestCode.g == std::vector<int>{0, 0});
    }
    SUBCASE("monotone descent along the trace") {
        std::mt19937_64 rng(43);
        for (int trial = 0; trial < 20; ++trial) {
            Instance inst = random_instance(rng, 4);
            RandomCode init = random_code(rng, inst);
            std::vector<double> trace;
            alternating_best_response(inst, init, 0, trial, &trace);
            for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
        }
    }
    SUBCASE("never better than enumeration, usually equal with restarts") {
        std::mt19937_64 rng(44);
        int matches = 0;
        const int trials = 100;
        for (int trial = 0; trial < trials; ++trial) {
            std::mt19937_64 gen(1000 + trial);
            Instance inst = make_instance(4, 4, 4, 4);
            inst.pS = random_simplex(gen, 4);
            inst.channel = random_kernel(gen, 4, 4);
            Tensor4 t(4, 4, 4, 4);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            for (double& v : t.data) v = u(gen);
            inst.denseCost = std::move(t);
            ExactResult ex = enumerate_optimal(inst);
            ExactResult ab =
                alternating_best_response(inst, random_code(rng, inst), 20, 77 + trial);
            CHECK(ab.value >= ex.value - 1e-10);
            if (ab.value <= ex.value + 1e-9) ++matches;
        }
        CHECK(matches >= 95);
    }
}
