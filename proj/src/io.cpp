#include "retrial/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "retrial/errors.hpp"

namespace retrial::io {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(where, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(where + "." + k, "unknown field");
}

const json& field(const json& j, const std::string& where, const char* key) {
  if (!j.is_object()) fail(where, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(where + "." + key, "missing");
  return *it;
}

double number(const json& j, const std::string& where, const char* key) {
  const json& v = field(j, where, key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

int integer(const json& j, const std::string& where, const char* key) {
  const json& v = field(j, where, key);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<int>();
}

std::vector<double> numbers(const json& j, const std::string& where, const char* key) {
  const json& v = field(j, where, key);
  if (!v.is_array()) fail(where + "." + key, "expected an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(where + "." + key, "expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

template <class F>
auto rethrow_as_config(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json to_json(const ServerStateProbs& p) {
  return {{"C0", p.idle}, {"E2", p.e2}, {"E3", p.e3}, {"E4_E5", p.e45}, {"E6_E7", p.e67}};
}

}  // namespace

json parse(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": malformed JSON");
  }
}

json read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

Distribution distribution_from_json(const json& j, const std::string& where) {
  const json& kind = field(j, where, "kind");
  if (!kind.is_string()) fail(where + ".kind", "expected a string");
  const std::string k = kind.get<std::string>();
  return rethrow_as_config(where, [&] {
    if (k == "exponential") {
      only_keys(j, where, {"kind", "rate"});
      return Distribution::exponential(number(j, where, "rate"));
    }
    if (k == "erlang") {
      only_keys(j, where, {"kind", "phases", "rate"});
      return Distribution::erlang(integer(j, where, "phases"), number(j, where, "rate"));
    }
    if (k == "deterministic") {
      only_keys(j, where, {"kind", "value"});
      return Distribution::deterministic(number(j, where, "value"));
    }
    if (k == "hyperexp") {
      only_keys(j, where, {"kind", "weights", "rates"});
      return Distribution::hyperexponential(numbers(j, where, "weights"),
                                            numbers(j, where, "rates"));
    }
    fail(where + ".kind", "unknown kind '" + k + "'");
  });
}

json to_json(const Distribution& d) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Exponential>)
          return {{"kind", "exponential"}, {"rate", v.rate}};
        else if constexpr (std::is_same_v<T, Erlang>)
          return {{"kind", "erlang"}, {"phases", v.phases}, {"rate", v.rate}};
        else if constexpr (std::is_same_v<T, Deterministic>)
          return {{"kind", "deterministic"}, {"value", v.value}};
        else
          return {{"kind", "hyperexp"}, {"weights", v.weights}, {"rates", v.rates}};
      },
      d.kind());
}

bool is_parametric(const json& j) { return j.is_object() && j.contains("q"); }

ParametricModel parametric_from_json(const json& j) {
  const std::string where = "model";
  only_keys(j, where, {"lambda_minus", "lambda_plus", "q", "M", "mu", "N", "alpha"});
  ParametricModel p;
  p.problem.lambda_minus = number(j, where, "lambda_minus");
  p.problem.lambda_plus = number(j, where, "lambda_plus");
  p.problem.M = integer(j, where, "M");
  p.problem.mu = number(j, where, "mu");
  p.problem.N = integer(j, where, "N");
  p.problem.alpha = number(j, where, "alpha");
  const std::vector<double> q = numbers(j, where, "q");
  if (q.size() != 4) fail(where + ".q", "expected 4 joining probabilities");
  std::copy(q.begin(), q.end(), p.q.begin());
  p.problem.validate();
  p.problem.model(p.q);
  return p;
}

json to_json(const ParametricModel& p) {
  return {{"lambda_minus", p.problem.lambda_minus},
          {"lambda_plus", p.problem.lambda_plus},
          {"q", p.q},
          {"M", p.problem.M},
          {"mu", p.problem.mu},
          {"N", p.problem.N},
          {"alpha", p.problem.alpha}};
}

ModelSpec model_from_json(const json& j) {
  if (is_parametric(j)) {
    const ParametricModel p = parametric_from_json(j);
    return p.problem.model(p.q);
  }
  const std::string where = "model";
  only_keys(j, where, {"rates", "service", "seek"});
  const json& r = field(j, where, "rates");
  const std::string rw = where + ".rates";
  only_keys(r, rw, {"lambda_minus", "lambda_e", "lambda_e_plus", "lambda_r", "lambda_r_plus"});
  RateProfile rates{number(r, rw, "lambda_minus"), number(r, rw, "lambda_e"),
                    number(r, rw, "lambda_e_plus"), number(r, rw, "lambda_r"),
                    number(r, rw, "lambda_r_plus")};
  rethrow_as_config(rw, [&] {
    rates.validate();
    return 0;
  });
  return {rates, distribution_from_json(field(j, where, "service"), where + ".service"),
          distribution_from_json(field(j, where, "seek"), where + ".seek")};
}

json to_json(const ModelSpec& m) {
  const RateProfile& r = m.rates;
  return {{"rates",
           {{"lambda_minus", r.lambda_minus},
            {"lambda_e", r.lambda_e},
            {"lambda_e_plus", r.lambda_e_plus},
            {"lambda_r", r.lambda_r},
            {"lambda_r_plus", r.lambda_r_plus}}},
          {"service", to_json(m.service)},
          {"seek", to_json(m.seek)}};
}

opt::AdmissionProblem problem_from_json(const json& j) {
  const std::string where = "problem";
  only_keys(j, where,
            {"lambda_plus", "lambda_minus", "M", "mu", "N", "alpha", "ex_bound", "ordering"});
  opt::AdmissionProblem p;
  p.lambda_plus = number(j, where, "lambda_plus");
  p.lambda_minus = number(j, where, "lambda_minus");
  p.M = integer(j, where, "M");
  p.mu = number(j, where, "mu");
  p.N = integer(j, where, "N");
  p.alpha = number(j, where, "alpha");
  const json& b = field(j, where, "ex_bound");
  if (b.is_null())
    p.ex_bound = std::numeric_limits<double>::infinity();
  else
    p.ex_bound = number(j, where, "ex_bound");
  if (j.contains("ordering")) {
    if (!j["ordering"].is_boolean()) fail(where + ".ordering", "expected a boolean");
    p.ordering = j["ordering"].get<bool>();
  }
  p.validate();
  return p;
}

json to_json(const opt::AdmissionProblem& p) {
  return {{"lambda_plus", p.lambda_plus}, {"lambda_minus", p.lambda_minus},
          {"M", p.M},                     {"mu", p.mu},
          {"N", p.N},                     {"alpha", p.alpha},
          {"ex_bound", finite_or_null(p.ex_bound)}, {"ordering", p.ordering}};
}

json to_json(const StationaryReport& r) {
  json j = {{"stable", r.stable},
            {"stability_margin", r.stability_margin},
            {"threshold_gap_printed",
             r.threshold_gap_printed ? json(*r.threshold_gap_printed) : json(nullptr)},
            {"threshold_gap_corrected",
             r.threshold_gap_corrected ? json(*r.threshold_gap_corrected) : json(nullptr)},
            {"threshold_form_disagrees", r.threshold_form_disagrees}};
  if (!r.stable) return j;
  j["pi0"] = r.pi0;
  j["p00"] = r.p00;
  j["P_idle"] = r.P_idle;
  j["state_event_probs"] = to_json(r.state_event_probs);
  j["EX"] = r.EX;
  j["TH_S"] = r.TH_S;
  j["ES"] = r.ES;
  j["t_e"] = r.t_e;
  j["t_r"] = r.t_r;
  j["bounds"] = {{"lower", r.bounds.lower}, {"upper", r.bounds.upper}};
  if (!r.orbit_pmf_departure.empty()) j["orbit_pmf_departure"] = r.orbit_pmf_departure;
  if (!r.system_pmf.empty()) j["system_pmf"] = r.system_pmf;
  return j;
}

json to_json(const opt::AdmissionSolution& s) {
  return {{"q", s.q},
          {"TH", s.TH},
          {"EX", finite_or_null(s.EX)},
          {"margin", s.margin},
          {"feasible", s.feasible},
          {"restarts_used", s.restarts_used},
          {"seed", s.seed},
          {"evaluations", s.evaluations}};
}

json to_json(const sim::Estimate& e) {
  return {{"mean", e.mean}, {"half_width", finite_or_null(e.half_width)}};
}

json to_json(const sim::SimEstimates& e) {
  json pmf_dep = json::array(), pmf_sys = json::array();
  for (const auto& x : e.departure_orbit_pmf) pmf_dep.push_back(to_json(x));
  for (const auto& x : e.system_pmf) pmf_sys.push_back(to_json(x));
  std::uint64_t departures = 0, events = 0;
  for (const auto& r : e.replications) {
    departures += r.departures;
    events += r.events;
  }
  return {{"EX_timeavg", to_json(e.EX_timeavg)},
          {"system_timeavg", to_json(e.system_timeavg)},
          {"P_idle", to_json(e.P_idle)},
          {"state_event_probs",
           {{"C0_empty", to_json(e.p_idle_empty)},
            {"E1_with_orbit", to_json(e.p_seek)},
            {"E2", to_json(e.p_e2)},
            {"E3", to_json(e.p_e3)},
            {"E4_E5", to_json(e.p_e45)},
            {"E6_E7", to_json(e.p_e67)}}},
          {"departure_rate", to_json(e.departure_rate)},
          {"admission_rate", to_json(e.admission_rate)},
          {"mean_sojourn", to_json(e.mean_sojourn)},
          {"mean_orbit_wait", to_json(e.mean_orbit_wait)},
          {"orbit_slope", to_json(e.orbit_slope)},
          {"batch_means_departure_orbit", to_json(e.batch_departure_orbit)},
          {"departure_orbit_pmf", pmf_dep},
          {"system_pmf", pmf_sys},
          {"replications", e.replications.size()},
          {"measured_departures", departures},
          {"events", events}};
}

double round_sig(double x, int digits) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific,
                                 digits - 1);
  double out = x;
  std::from_chars(buf, res.ptr, out);
  return out;
}

json rounded(const json& j, int digits) {
  if (j.is_number_float()) return round_sig(j.get<double>(), digits);
  if (j.is_array()) {
    json out = json::array();
    for (const auto& x : j) out.push_back(rounded(x, digits));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = rounded(v, digits);
    return out;
  }
  return j;
}

std::string fixed(double x, int decimals) {
  if (!std::isfinite(x)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, decimals);
  std::string s(buf, res.ptr);
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string sig(double x, int digits) {
  if (!std::isfinite(x)) return "";
  const double r = round_sig(x, digits);
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, r);
  return std::string(buf, res.ptr);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace retrial::io
