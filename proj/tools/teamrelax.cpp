// teamrelax: finite-alphabet relaxation toolkit for the S -> X -> Y -> Shat
// information structure. Subcommands cover exact solves, DPI relaxations,
// bound reports, inverse-optimal cost synthesis, KKT residual evaluation,
// discretized-Gaussian instance presets, grid sweeps, and information
// utilities. Exit codes: 0 ok, 2 validation error, 3 solver non-convergence,
// 4 budget refusal.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <iostream>

#include "teamrelax/blahut_arimoto.hpp"
#include "teamrelax/exact_solver.hpp"
#include "teamrelax/gaussian.hpp"
#include "teamrelax/instance_io.hpp"
#include "teamrelax/inverse_optimal.hpp"
#include "teamrelax/relaxation.hpp"

using namespace teamrelax;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kNoConvergence = 3;
constexpr int kBudget = 4;

unsigned long long budget_from_env() {
    if (const char* env = std::getenv("TEAMRELAX_BUDGET")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
    }
    return 100000000ULL;
}

void emit(const JValue& j, const std::string& outputPath) {
    std::string text = j.dump() + "\n";
    if (outputPath.empty() || outputPath == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(outputPath);
    if (!out) throw std::invalid_argument("cannot write output file: " + outputPath);
    out << text;
}

JValue det_code_json(const DetCode& code) {
    JValue j = JValue::object();
    JValue f = JValue::array(), g = JValue::array();
    for (int v : code.f) f.push(JValue(v));
    for (int v : code.g) g.push(JValue(v));
    j.set("f", std::move(f));
    j.set("g", std::move(g));
    return j;
}

GaussianProblem parse_preset(const std::string& name) {
    if (name == "test-channel") return GaussianProblem::testChannel;
    if (name == "bansal-basar") return GaussianProblem::bansalBasar;
    if (name == "witsenhausen") return GaussianProblem::witsenhausen;
    throw std::invalid_argument("unknown preset: " + name);
}

GaussianSpec make_spec(const std::string& preset, double sigma0, double sigmaw, double k0,
                       double s01, int grid, double halfwidth) {
    GaussianSpec spec;
    spec.problem = parse_preset(preset);
    spec.sigma0 = sigma0;
    spec.sigmaW = sigmaw;
    spec.k0 = k0;
    spec.s01 = spec.problem == GaussianProblem::bansalBasar ? s01 : 0.0;
    spec.gridPoints = grid;
    spec.gridHalfWidthSigmas = halfwidth;
    return spec;
}

int run_solve(const std::string& path, const std::string& method, int restarts, unsigned seed,
              const std::string& output) {
    Instance inst = load_instance(path);
    unsigned long long budget = budget_from_env();
    bool canEnumerate = enumeration_count(inst) <= budget;
    if (method == "enumerate" && !canEnumerate)
        throw budget_error("enumeration over budget", enumeration_count(inst), budget);

    JValue j = JValue::object();
    if (method == "enumerate" || (method == "auto" && canEnumerate)) {
        ExactResult r = enumerate_optimal(inst, false, budget);
        j.set("method", "enumerate");
        j.set("value", JValue(r.value));
        j.set("evaluated", JValue(r.evaluated));
        j.set("heuristic", JValue(false));
        j.set("code", det_code_json(r.bestCode));
    } else {
        RandomCode init;
        init.qXgivenS = Mat(inst.nS, inst.nX, 1.0 / inst.nX);
        init.qShatGivenY = Mat(inst.nY, inst.nShat, 1.0 / inst.nShat);
        ExactResult r = alternating_best_response(inst, init, restarts, seed);
        j.set("method", "local-search");
        j.set("value", JValue(r.value));
        j.set("evaluated", JValue(r.evaluated));
        j.set("heuristic", JValue(true));
        j.set("code", det_code_json(r.bestCode));
    }
    emit(j, output);
    return kOk;
}

int run_relax(const std::string& path, std::string mode, const std::string& fName, double tol,
              bool emitQ, const std::string& output) {
    Instance inst = load_instance(path);
    FGenerator f = FGenerator::by_name(fName);
    if (mode == "auto") {
        if (inst.has_separable() && inst.separable->has_cross())
            mode = "bansal";
        else if (inst.has_separable())
            mode = "separable";
        else
            mode = "general";
    }
    RelaxSolution sol;
    if (mode == "separable")
        sol = solve_relaxation_separable(inst, f, tol);
    else if (mode == "bansal")
        sol = solve_relaxation_bansal(inst, tol);
    else if (mode == "general")
        sol = solve_relaxation_general(inst, f, tol);
    else
        throw std::invalid_argument("unknown relax mode: " + mode);
    emit(solution_to_json(sol, emitQ), output);
    return sol.status == RelaxStatus::optimal || sol.status == RelaxStatus::degenerate
               ? kOk
               : kNoConvergence;
}

int run_bound(const std::string& path, const std::string& fName, double tol, unsigned seed,
              const std::string& output) {
    Instance inst = load_instance(path);
    BoundReport rep = bound_report(inst, FGenerator::by_name(fName), tol, budget_from_env(), seed);
    JValue j = JValue::object();
    j.set("lb", JValue(rep.lb));
    j.set("ub", JValue(rep.ub));
    j.set("gap", JValue(rep.gap));
    j.set("multiplierIdentityResidual", JValue(rep.multiplierIdentityResidual));
    j.set("dpiEqualitySlack", JValue(rep.dpiEqualitySlack));
    j.set("ubHeuristic", JValue(rep.ubHeuristic));
    j.set("lbStatus", JValue(to_string(rep.lbStatus)));
    emit(j, output);
    return kOk;
}

int run_inverse(const std::string& path, const std::string& fName, double lambda, unsigned seed,
                const std::string& output, const std::string& instanceOut) {
    Instance inst = load_instance(path);
    FGenerator f = FGenerator::by_name(fName);
    if (inst.nS != inst.nX || inst.nY != inst.nShat)
        throw std::invalid_argument(
            "inverse demo requires nS == nX and nY == nShat (permutation candidate)");

    // demo candidate: seeded permutation code; lossless, so the DPI holds
    // with equality for every f and lambda > 0 is admissible
    std::mt19937_64 rng(seed);
    DetCode code;
    code.f.resize(inst.nS);
    code.g.resize(inst.nY);
    for (int s = 0; s < inst.nS; ++s) code.f[s] = s;
    for (int y = 0; y < inst.nY; ++y) code.g[y] = y;
    std::shuffle(code.f.begin(), code.f.end(), rng);
    std::shuffle(code.g.begin(), code.g.end(), rng);
    EndToEndPair pair = pair_from_det_code(inst, code);

    SynthesisSpec spec;
    spec.f = f;
    spec.lambda = lambda;
    spec.muA = Vec(inst.nS, 0.0);
    spec.muB = 0.0;
    SynthesizedCosts costs = synthesize_costs(inst, pair, spec);
    VerifyReport rep =
        verify_inverse_optimality(inst, costs.delta, costs.rho, code, budget_from_env(), seed);

    if (!instanceOut.empty())
        save_instance(instance_with_costs(inst, costs.delta, costs.rho), instanceOut);

    JValue j = JValue::object();
    j.set("candidate", det_code_json(code));
    j.set("candidateValue", JValue(rep.candidateValue));
    j.set("globalMin", JValue(rep.globalMin));
    j.set("optimal", JValue(rep.optimal));
    j.set("heuristic", JValue(rep.heuristic));
    j.set("delta", JValue::mat(costs.delta));
    j.set("rho", JValue::vec(costs.rho));
    j.set("lambda", JValue(lambda));
    j.set("f", JValue(f.name));
    emit(j, output);
    return kOk;
}

int run_kkt(const std::string& instPath, const std::string& solPath, const std::string& fName,
            const std::string& output) {
    Instance inst = load_instance(instPath);
    RelaxSolution sol = load_solution(solPath);
    FGenerator f = FGenerator::by_name(fName);
    JValue j = JValue::object();
    if (sol.q) {
        sol.q->q.nS = inst.nS;
        sol.q->q.nX = inst.nX;
        sol.q->q.nY = inst.nY;
        sol.q->q.nShat = inst.nShat;
        if (sol.q->q.data.size() != inst.tensor_entries())
            throw std::invalid_argument("q length does not match the instance");
        Multipliers mult;
        mult.lambda = sol.mult.lambda;
        KKTReport rep = kkt_residual_general(inst, *sol.q, f, mult);
        j.set("system", "general");
        j.set("maxResidual", JValue(rep.maxResidual));
        j.set("stationarityQ", JValue(rep.stationarityQ));
        j.set("signViolations", JValue(rep.signViolations));
        j.set("dpiComplementarity", JValue(rep.dpiComplementarity));
        j.set("primalFeasibility", JValue(rep.primalFeasibility));
    } else {
        auto [mult, rep] = kkt_residual_separable(inst, sol.pair, f, {});
        j.set("system", "separable");
        j.set("lambda", JValue(mult.lambda));
        j.set("maxResidual", JValue(rep.maxResidual));
        j.set("stationarityA", JValue(rep.stationarityA));
        j.set("stationarityB", JValue(rep.stationarityB));
        j.set("dpiComplementarity", JValue(rep.dpiComplementarity));
        j.set("primalFeasibility", JValue(rep.primalFeasibility));
    }
    emit(j, output);
    return kOk;
}

int run_gaussian(const GaussianSpec& spec, const std::string& output) {
    Instance inst = build_instance(spec);
    JValue j = instance_to_json(inst);
    emit(j, output);
    return kOk;
}

int run_sweep(const std::string& preset, double sigma0, double sigmaw, double k0, double s01,
              const std::vector<int>& grids, double halfwidth, const std::string& fName,
              double tol, unsigned seed, const std::string& output) {
    FGenerator f = FGenerator::by_name(fName);
    std::string csv = "grid,nS,nX,nY,nShat,relaxValue,heuristicExactValue,closedForm,gap,"
                      "dpiSlack,seconds\n";
    for (int g : grids) {
        auto t0 = std::chrono::steady_clock::now();
        GaussianSpec spec = make_spec(preset, sigma0, sigmaw, k0, s01, g, halfwidth);
        Instance inst = build_instance(spec);
        ClosedForms cf = gamma_star(spec);

        RelaxSolution sol;
        if (inst.has_separable() && inst.separable->has_cross())
            sol = solve_relaxation_bansal(inst, tol);
        else if (inst.has_separable())
            sol = solve_relaxation_separable(inst, f, tol);
        else
            sol = solve_relaxation_general(inst, f, tol);

        DetCode init =
            linear_code_on_grid(inst, cf.gamma0StarStar, cf.gamma1StarStar);
        ExactResult heur =
            alternating_best_response(inst, det_code_to_random(init, inst), 4, seed);
        auto t1 = std::chrono::steady_clock::now();
        double secs = std::chrono::duration<double>(t1 - t0).count();

        char line[512];
        std::snprintf(line, sizeof(line), "%d,%d,%d,%d,%d,%s,%s,%s,%s,%s,%s\n", g, inst.nS,
                      inst.nX, inst.nY, inst.nShat, format_double(sol.value).c_str(),
                      format_double(heur.value).c_str(), format_double(cf.optB).c_str(),
                      format_double(heur.value - sol.value).c_str(),
                      format_double(sol.dpiSlack).c_str(), format_double(secs).c_str());
        csv += line;
    }
    if (output.empty() || output == "-") {
        std::cout << csv;
    } else {
        std::ofstream out(output);
        if (!out) throw std::invalid_argument("cannot write output file: " + output);
        out << csv;
    }
    return kOk;
}

int run_info(const std::string& op, const std::string& path, double targetD, double targetP,
             double slope, const std::string& output) {
    JValue j = JValue::object();
    if (op == "mi" || op == "kl") {
        Instance inst = load_instance(path);
        if (op == "mi") {
            Mat joint(inst.nX, inst.nY, 0.0);
            Vec b(inst.nX, 1.0 / inst.nX);
            for (int x = 0; x < inst.nX; ++x)
                for (int y = 0; y < inst.nY; ++y) joint(x, y) = b[x] * inst.channel(x, y);
            j.set("op", "mi");
            j.set("value", JValue(mutual_information(joint)));
            j.set("note", "I(X;Y) for the uniform input over the instance channel");
        } else {
            double worst = 0.0;
            for (int x = 0; x < inst.nX; ++x)
                for (int x2 = 0; x2 < inst.nX; ++x2) {
                    double d =
                        kl_divergence(row_copy(inst.channel, x), row_copy(inst.channel, x2));
                    if (std::isfinite(d)) worst = std::max(worst, d);
                }
            j.set("op", "kl");
            j.set("maxPairwiseRowDivergence", JValue(worst));
        }
    } else if (op == "rd") {
        Instance inst = load_instance(path);
        if (!inst.has_separable())
            throw std::invalid_argument("rate-distortion needs a separable instance (delta)");
        BAResult r = targetD >= 0.0
                         ? blahut_arimoto_rd(inst.pS, inst.separable->delta, RdMode::target(targetD))
                         : blahut_arimoto_rd(inst.pS, inst.separable->delta, RdMode::slope(slope));
        j.set("op", "rd");
        j.set("rate", JValue(r.value));
        j.set("distortion", JValue(r.achieved));
        j.set("iterations", JValue(r.iterations));
        j.set("converged", JValue(r.converged));
        if (!r.converged) {
            emit(j, output);
            return kNoConvergence;
        }
    } else if (op == "cc") {
        Instance inst = load_instance(path);
        Vec rho = inst.has_separable() ? inst.separable->rho : Vec(inst.nX, 0.0);
        BAResult r = targetP >= 0.0 ? blahut_arimoto_cc(inst.channel, rho, CcMode::target(targetP))
                                    : blahut_arimoto_cc(inst.channel, rho, CcMode::unconstrained());
        j.set("op", "cc");
        j.set("capacity", JValue(r.value));
        j.set("cost", JValue(r.achieved));
        j.set("iterations", JValue(r.iterations));
        j.set("converged", JValue(r.converged));
        if (!r.converged) {
            emit(j, output);
            return kNoConvergence;
        }
    } else {
        throw std::invalid_argument("unknown info op: " + op);
    }
    emit(j, output);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-alphabet DPI relaxation toolkit"};
    app.require_subcommand(1);

    std::string path = "-", output, fName = "neg-log", mode = "auto", method = "auto";
    double tol = 1e-8;
    unsigned seed = 0;
    int restarts = 16;
    bool emitQ = false;

    auto* solve = app.add_subcommand("solve", "exact optimum over deterministic codes");
    solve->add_option("instance", path, "instance JSON, - for stdin");
    solve->add_option("--method", method, "enumerate|local|auto")
        ->check(CLI::IsMember({"enumerate", "local", "auto"}));
    solve->add_option("--restarts", restarts);
    solve->add_option("--seed", seed);
    solve->add_option("-o,--output", output);

    auto* relax = app.add_subcommand("relax", "DPI convex relaxation");
    relax->add_option("instance", path, "instance JSON, - for stdin");
    relax->add_option("--mode", mode, "separable|bansal|general|auto")
        ->check(CLI::IsMember({"separable", "bansal", "general", "auto"}));
    relax->add_option("--f", fName, "f generator name");
    relax->add_option("--tol", tol);
    relax->add_flag("--emit-q", emitQ, "include the joint tensor in the output");
    relax->add_option("-o,--output", output);

    auto* bound = app.add_subcommand("bound", "lower/upper bound report");
    bound->add_option("instance", path);
    bound->add_option("--f", fName);
    bound->add_option("--tol", tol);
    bound->add_option("--seed", seed);
    bound->add_option("-o,--output", output);

    std::string instanceOut;
    double lambda = 1.0;
    auto* inverse = app.add_subcommand("inverse", "inverse-optimal cost synthesis round trip");
    inverse->add_option("instance", path);
    inverse->add_option("--f", fName);
    inverse->add_option("--lambda", lambda);
    inverse->add_option("--seed", seed);
    inverse->add_option("--emit-instance", instanceOut, "write the synthesized instance JSON");
    inverse->add_option("-o,--output", output);

    std::string solPath;
    auto* kkt = app.add_subcommand("kkt", "KKT residuals for a solution file");
    kkt->add_option("instance", path)->required();
    kkt->add_option("solution", solPath)->required();
    kkt->add_option("--f", fName);
    kkt->add_option("-o,--output", output);

    std::string preset = "test-channel";
    double sigma0 = 1.0, sigmaw = 1.0, k0 = 1.0, s01 = 0.0, halfwidth = 5.0;
    int grid = 17;
    auto* gaussian = app.add_subcommand("gaussian", "discretized Gaussian instance presets");
    gaussian->add_option("--preset", preset, "test-channel|bansal-basar|witsenhausen")
        ->check(CLI::IsMember({"test-channel", "bansal-basar", "witsenhausen"}));
    gaussian->add_option("--sigma0", sigma0);
    gaussian->add_option("--sigmaw", sigmaw);
    gaussian->add_option("--k0", k0);
    gaussian->add_option("--s01", s01);
    gaussian->add_option("--grid", grid);
    gaussian->add_option("--halfwidth", halfwidth);
    gaussian->add_option("-o,--output", output);

    std::string gridsArg = "17,33,65";
    auto* sweep = app.add_subcommand("sweep", "grid-refinement convergence study (CSV)");
    sweep->add_option("--preset", preset)
        ->check(CLI::IsMember({"test-channel", "bansal-basar", "witsenhausen"}));
    sweep->add_option("--sigma0", sigma0);
    sweep->add_option("--sigmaw", sigmaw);
    sweep->add_option("--k0", k0);
    sweep->add_option("--s01", s01);
    sweep->add_option("--grids", gridsArg, "comma-separated odd grid sizes");
    sweep->add_option("--halfwidth", halfwidth);
    sweep->add_option("--f", fName);
    sweep->add_option("--tol", tol);
    sweep->add_option("--seed", seed);
    sweep->add_option("-o,--output", output);

    std::string infoOp = "mi";
    double targetD = -1.0, targetP = -1.0, infoSlope = 1.0;
    auto* info = app.add_subcommand("info", "information utilities (MI, divergence, BA)");
    info->add_option("op", infoOp, "mi|kl|rd|cc")->check(CLI::IsMember({"mi", "kl", "rd", "cc"}));
    info->add_option("instance", path);
    info->add_option("--target-d", targetD, "rate-distortion target distortion");
    info->add_option("--target-p", targetP, "capacity-cost target budget");
    info->add_option("--slope", infoSlope, "Lagrangian slope for rd");
    info->add_option("-o,--output", output);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return run_solve(path, method, restarts, seed, output);
        if (relax->parsed()) return run_relax(path, mode, fName, tol, emitQ, output);
        if (bound->parsed()) return run_bound(path, fName, tol, seed, output);
        if (inverse->parsed()) return run_inverse(path, fName, lambda, seed, output, instanceOut);
        if (kkt->parsed()) return run_kkt(path, solPath, fName, output);
        if (gaussian->parsed())
            return run_gaussian(make_spec(preset, sigma0, sigmaw, k0, s01, grid, halfwidth),
                                output);
        if (sweep->parsed()) {
            std::vector<int> grids;
            std::stringstream ss(gridsArg);
            std::string tok;
            while (std::getline(ss, tok, ',')) grids.push_back(std::stoi(tok));
            if (grids.empty()) throw std::invalid_argument("no grid sizes given");
            return run_sweep(preset, sigma0, sigmaw, k0, s01, grids, halfwidth, fName, tol, seed,
                             output);
        }
        if (info->parsed()) return run_info(infoOp, path, targetD, targetP, infoSlope, output);
    } catch (const budget_error& e) {
        std::cerr << "budget refusal: " << e.what() << "\n";
        return kBudget;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
    return kValidation;
}
