#include "teamrelax/instance_io.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace teamrelax {

namespace {

using nlohmann::json;

Vec to_vec(const json& j, const std::string& what, int expect = -1) {
    if (!j.is_array()) throw std::invalid_argument(what + " must be an array");
    Vec v;
    v.reserve(j.size());
    for (const auto& e : j) v.push_back(e.get<double>());
    if (expect >= 0 && static_cast<int>(v.size()) != expect)
        throw std::invalid_argument(what + " has wrong length");
    return v;
}

Mat to_mat(const json& j, const std::string& what, int rows, int cols) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw std::invalid_argument(what + " must have " + std::to_string(rows) + " rows");
    Mat m(rows, cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        Vec row = to_vec(j[r], what + " row", cols);
        for (int c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    return m;
}

Vec default_labels(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
}

} // namespace

std::string read_stream_or_file(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Instance instance_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
    }
    Instance inst;
    for (const char* k : {"nS", "nX", "nY", "nShat", "pS", "channel"})
        if (!j.contains(k)) throw std::invalid_argument(std::string("missing key: ") + k);
    inst.nS = j["nS"].get<int>();
    inst.nX = j["nX"].get<int>();
    inst.nY = j["nY"].get<int>();
    inst.nShat = j["nShat"].get<int>();
    if (inst.nS <= 0 || inst.nX <= 0 || inst.nY <= 0 || inst.nShat <= 0)
        throw std::invalid_argument("alphabet sizes must be positive");
    inst.sValues = j.contains("sValues") ? to_vec(j["sValues"], "sValues", inst.nS)
                                         : default_labels(inst.nS);
    inst.xValues = j.contains("xValues") ? to_vec(j["xValues"], "xValues", inst.nX)
                                         : default_labels(inst.nX);
    inst.yValues = j.contains("yValues") ? to_vec(j["yValues"], "yValues", inst.nY)
                                         : default_labels(inst.nY);
    inst.shatValues = j.contains("shatValues") ? to_vec(j["shatValues"], "shatValues", inst.nShat)
                                               : default_labels(inst.nShat);
    inst.pS = to_vec(j["pS"], "pS", inst.nS);
    inst.channel = to_mat(j["channel"], "channel", inst.nX, inst.nY);

    if (j.contains("separable")) {
        const json& sj = j["separable"];
        SeparableCost sc;
        if (!sj.contains("delta") || !sj.contains("rho"))
            throw std::invalid_argument("separable cost needs delta and rho");
        sc.delta = to_mat(sj["delta"], "delta", inst.nS, inst.nShat);
        sc.rho = to_vec(sj["rho"], "rho", inst.nX);
        if (sj.contains("tauPrime") && !sj["tauPrime"].is_null())
            sc.tauPrime = to_vec(sj["tauPrime"], "tauPrime", inst.nS);
        sc.kCross = sj.value("kCross", 0.0);
        inst.separable = std::move(sc);
    } else if (j.contains("cost")) {
        Vec flat = to_vec(j["cost"], "cost");
        if (flat.size() != inst.tensor_entries())
            throw std::invalid_argument("cost must have nS*nX*nY*nShat entries (flat, row-major)");
        Tensor4 t(inst.nS, inst.nX, inst.nY, inst.nShat);
        t.data = std::move(flat);
        inst.denseCost = std::move(t);
    } else {
        throw std::invalid_argument("instance needs either cost or separable");
    }
    inst.validate();
    return inst;
}

Instance load_instance(const std::string& path) {
    return instance_from_json_text(read_stream_or_file(path));
}

JValue instance_to_json(const Instance& inst) {
    JValue j = JValue::object();
    j.set("nS", JValue(inst.nS));
    j.set("nX", JValue(inst.nX));
    j.set("nY", JValue(inst.nY));
    j.set("nShat", JValue(inst.nShat));
    j.set("sValues", JValue::vec(inst.sValues));
    j.set("xValues", JValue::vec(inst.xValues));
    j.set("yValues", JValue::vec(inst.yValues));
    j.set("shatValues", JValue::vec(inst.shatValues));
    j.set("pS", JValue::vec(inst.pS));
    j.set("channel", JValue::mat(inst.channel));
    if (inst.separable) {
        JValue sj = JValue::object();
        sj.set("delta", JValue::mat(inst.separable->delta));
        sj.set("rho", JValue::vec(inst.separable->rho));
        if (inst.separable->tauPrime) sj.set("tauPrime", JValue::vec(*inst.separable->tauPrime));
        sj.set("kCross", JValue(inst.separable->kCross));
        j.set("separable", std::move(sj));
    } else {
        j.set("cost", JValue::tensor_flat(*inst.denseCost));
    }
    return j;
}

void save_instance(const Instance& inst, const std::string& path) {
    std::string text = instance_to_json(inst).dump() + "\n";
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write file: " + path);
    out << text;
}

JValue solution_to_json(const RelaxSolution& sol, bool includeQ) {
    JValue j = JValue::object();
    j.set("value", JValue(sol.value));
    j.set("a", JValue::mat(sol.pair.a));
    j.set("b", JValue::vec(sol.pair.b));
    j.set("lambda", JValue(sol.mult.lambda));
    JValue kk = JValue::object();
    kk.set("stationarityA", JValue(sol.kkt.stationarityA));
    kk.set("stationarityB", JValue(sol.kkt.stationarityB));
    kk.set("stationarityQ", JValue(sol.kkt.stationarityQ));
    kk.set("dpiComplementarity", JValue(sol.kkt.dpiComplementarity));
    kk.set("signViolations", JValue(sol.kkt.signViolations));
    kk.set("primalFeasibility", JValue(sol.kkt.primalFeasibility));
    kk.set("maxResidual", JValue(sol.kkt.maxResidual));
    kk.set("dpiSlack", JValue(sol.dpiSlack));
    kk.set("dualValue", JValue(sol.dualValue));
    j.set("kkt", std::move(kk));
    j.set("status", JValue(to_string(sol.status)));
    if (includeQ && sol.q) j.set("q", JValue::tensor_flat(sol.q->q));
    return j;
}

RelaxSolution solution_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
    }
    RelaxSolution sol;
    if (!j.contains("a") || !j.contains("b"))
        throw std::invalid_argument("solution file needs a and b");
    int nS = static_cast<int>(j["a"].size());
    int nSh = nS > 0 ? static_cast<int>(j["a"][0].size()) : 0;
    sol.pair.a = to_mat(j["a"], "a", nS, nSh);
    sol.pair.b = to_vec(j["b"], "b");
    sol.value = j.value("value", 0.0);
    sol.mult.lambda = j.value("lambda", 0.0);
    std::string st = j.value("status", "maxIter");
    sol.status = st == "optimal"      ? RelaxStatus::optimal
                 : st == "infeasible" ? RelaxStatus::infeasible
                 : st == "degenerate" ? RelaxStatus::degenerate
                                      : RelaxStatus::maxIter;
    if (j.contains("q")) {
        Vec flat = to_vec(j["q"], "q");
        sol.q = JointDist{};  // shape is resolved against the instance by the caller
        sol.q->q.data = std::move(flat);
    }
    return sol;
}

RelaxSolution load_solution(const std::string& path) {
    return solution_from_json_text(read_stream_or_file(path));
}

} // namespace teamrelax
