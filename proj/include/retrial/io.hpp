#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "retrial/analytic.hpp"
#include "retrial/optimizer.hpp"
#include "retrial/simulator.hpp"

// JSON and CSV boundary. Every parse error surfaces as ConfigError naming the
// offending field or source position.

namespace retrial::io {

using nlohmann::json;

/// Parses text; syntax errors become ConfigError("<source>:<line>:<col>: ...").
json parse(std::string_view text, const std::string& source);
json read_file(const std::string& path);

Distribution distribution_from_json(const json& j, const std::string& where = "distribution");
json to_json(const Distribution& d);

/// Accepts either the explicit form
///   {"rates": {...five rates...}, "service": {...}, "seek": {...}}
/// or the joining-probability form
///   {"lambda_minus":1, "lambda_plus":2, "q":[q1,q2,q3,q4], "M":4, "mu":1.5, "N":3, "alpha":3}.
ModelSpec model_from_json(const json& j);
json to_json(const ModelSpec& m);

/// The joining-probability form as a problem plus q.
struct ParametricModel {
  opt::AdmissionProblem problem;
  opt::Q q;
};
bool is_parametric(const json& j);
ParametricModel parametric_from_json(const json& j);
json to_json(const ParametricModel& p);

opt::AdmissionProblem problem_from_json(const json& j);
json to_json(const opt::AdmissionProblem& p);

json to_json(const StationaryReport& r);
json to_json(const opt::AdmissionSolution& s);
json to_json(const sim::Estimate& e);
json to_json(const sim::SimEstimates& e);

/// Rounds to `digits` significant digits (non-finite values pass through).
double round_sig(double x, int digits = 6);
/// Applies round_sig to every number in the tree.
json rounded(const json& j, int digits = 6);

/// Fixed-point with `decimals` digits, '.' separator, no locale.
std::string fixed(double x, int decimals = 4);
/// Shortest text with `digits` significant digits, no locale.
std::string sig(double x, int digits = 6);

/// Current UTC time as ISO 8601.
std::string utc_timestamp();

}  // namespace retrial::io
