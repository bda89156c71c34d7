#pragma once

#include <iosfwd>
#include <string>

#include "teamrelax/instance.hpp"
#include "teamrelax/json_out.hpp"
#include "teamrelax/relaxation.hpp"

namespace teamrelax {

/// Canonical instance schema:
/// {"nS","nX","nY","nShat","sValues","xValues","yValues","shatValues",
///  "pS","channel" (nested rows), "cost" (flat, row-major s,x,y,shat)}
/// with an optional "separable" object {"delta","rho","tauPrime","kCross"}
/// replacing "cost".
Instance instance_from_json_text(const std::string& text);
Instance load_instance(const std::string& path);  // "-" reads stdin
JValue instance_to_json(const Instance& inst);
void save_instance(const Instance& inst, const std::string& path);  // "-" writes stdout

JValue solution_to_json(const RelaxSolution& sol, bool includeQ = false);
/// Reads back {"value","a","b","lambda","status"} and optionally "q".
RelaxSolution solution_from_json_text(const std::string& text);
RelaxSolution load_solution(const std::string& path);

std::string read_stream_or_file(const std::string& path);

} // namespace teamrelax
