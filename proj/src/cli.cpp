#include "retrial/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "retrial/analytic.hpp"
#include "retrial/errors.hpp"
#include "retrial/io.hpp"
#include "retrial/optimizer.hpp"
#include "retrial/oracles.hpp"
#include "retrial/simulator.hpp"

namespace retrial::cli {

namespace {

using io::json;

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError(what + ": '" + s + "' is not a number");
  return v;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError(what + ": '" + s + "' is not an integer");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

json manifest(const std::string& command, json inputs, std::optional<std::uint64_t> seed) {
  json ledger = json::array();
  for (const auto& e : typo_ledger()) ledger.push_back({{"id", e.id}, {"reading", e.reading}});
  return {{"command", command},
          {"inputs", std::move(inputs)},
          {"tool_version", RETRIAL_VERSION},
          {"seed", seed ? json(*seed) : json(nullptr)},
          {"timestamp", io::utc_timestamp()},
          {"typo_ledger", std::move(ledger)}};
}

json canonical_model(const json& in) {
  if (io::is_parametric(in)) return io::to_json(io::parametric_from_json(in));
  return io::to_json(io::model_from_json(in));
}

void emit_text(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path + ": cannot write");
  f << text;
}

void emit(const json& doc, const std::string& path, std::ostream& out) {
  emit_text(doc.dump(2) + "\n", path, out);
}

std::string cell(double x, int digits = 6) { return std::isfinite(x) ? io::sig(x, digits) : ""; }

// ---- analyze ---------------------------------------------------------------

struct AnalyzeOpts {
  std::string model;
  std::size_t pmf_max = 32;
  std::string out;
};

int analyze(const AnalyzeOpts& o, std::ostream& out, std::ostream& err) {
  const json in = io::read_file(o.model);
  const ModelSpec m = io::model_from_json(in);
  const StationaryReport r = stationary_report(m, o.pmf_max);
  const json inputs = {{"model", canonical_model(in)}, {"pmf_max", o.pmf_max}};
  emit({{"manifest", manifest("analyze", inputs, std::nullopt)},
        {"report", io::rounded(io::to_json(r))}},
       o.out, out);
  if (!r.stable) {
    err << "unstable model: stability margin " << io::sig(r.stability_margin) << "\n";
    return kUnstable;
  }
  return kOk;
}

// ---- simulate --------------------------------------------------------------

struct SimOpts {
  std::string model;
  sim::SimConfig cfg;
  std::string out;
};

json sim_inputs(const json& in, const sim::SimConfig& c) {
  return {{"model", canonical_model(in)},
          {"departures", c.measured_departures},
          {"warmup", c.warmup_departures},
          {"reps", c.replications},
          {"pmf_max", c.pmf_max},
          {"batches", c.batches}};
}

int simulate(const SimOpts& o, std::ostream& out, std::ostream&) {
  const json in = io::read_file(o.model);
  const ModelSpec m = io::model_from_json(in);
  const sim::SimEstimates est = sim::run(m, o.cfg);
  emit({{"manifest", manifest("simulate", sim_inputs(in, o.cfg), o.cfg.seed)},
        {"estimates", io::rounded(io::to_json(est))}},
       o.out, out);
  return kOk;
}

// ---- validate --------------------------------------------------------------

struct ValidateOpts {
  std::string model;
  sim::SimConfig cfg;
  std::size_t trunc = 0;  // 0: smallest certified size
  std::string out;
};

constexpr double kPmfTolerance = 1e-8;
constexpr double kCiWidths = 3.0;
constexpr double kTailTolerance = 1e-10;
constexpr std::size_t kMaxCompared = 200;

int validate(const ValidateOpts& o, std::ostream& out, std::ostream& err) {
  const json in = io::read_file(o.model);
  const ModelSpec m = io::model_from_json(in);
  const double margin = stability_margin(m);
  if (!(margin > 0.0)) {
    err << "unstable model: stability margin " << io::sig(margin) << "\n";
    return kUnstable;
  }

  std::size_t size = o.trunc;
  if (size == 0) {
    constexpr std::size_t cap = 1u << 16;
    size = oracles::required_truncation(m, kTailTolerance, 50, cap);
    if (size == 0) {
      err << "truncation insufficient even at max_orbit " << cap << "; try max_orbit >= "
          << 2 * cap << "\n";
      return kTruncation;
    }
  }
  std::vector<double> pi;
  try {
    pi = oracles::embedded_stationary_truncated(m, {size, kTailTolerance});
  } catch (const TruncationInsufficient& e) {
    err << e.what() << "\n";
    return kTruncation;
  }

  bool all_pass = true;
  const std::size_t compared = std::min(size - 1, kMaxCompared);
  json trunc = {{"max_orbit", size},
                {"boundary_mass", pi.back()},
                {"compared_terms", compared + 1},
                {"tolerance", kPmfTolerance}};
  try {
    const auto pmf = oracles::pgf_to_pmf([&](cplx z) { return embedded_pgf(m, z); },
                                         static_cast<int>(compared));
    double linf = 0.0;
    for (std::size_t n = 0; n <= compared; ++n) linf = std::max(linf, std::abs(pmf[n] - pi[n]));
    const bool ok = linf <= kPmfTolerance;
    trunc["pmf_linf"] = linf;
    trunc["verdict"] = ok ? "pass" : "fail";
    all_pass = all_pass && ok;
  } catch (const NotAPgf& e) {
    trunc["pmf_linf"] = nullptr;
    trunc["error"] = e.what();
    trunc["verdict"] = "fail";
    all_pass = false;
  }

  const MomentsThroughput mt = moments_and_throughput(m);
  const ServerStateProbs sp = server_state_probs(m);
  const sim::SimEstimates est = sim::run(m, o.cfg);
  json metrics = json::object();
  auto compare = [&](const char* name, double analytic, const sim::Estimate& e) {
    const bool ok = e.covers(analytic, kCiWidths);
    all_pass = all_pass && ok;
    metrics[name] = {{"analytic", analytic},
                     {"simulation", io::to_json(e)},
                     {"verdict", ok ? "pass" : "fail"}};
  };
  compare("EX", mt.EX, est.EX_timeavg);
  compare("TH_S", mt.TH_S, est.departure_rate);
  compare("ES", mt.ES, est.mean_orbit_wait);
  compare("P_idle", sp.idle, est.P_idle);
  compare("E2", sp.e2, est.p_e2);
  compare("E3", sp.e3, est.p_e3);
  compare("E4_E5", sp.e45, est.p_e45);
  compare("E6_E7", sp.e67, est.p_e67);

  json inputs = sim_inputs(in, o.cfg);
  inputs["trunc"] = o.trunc;
  emit({{"manifest", manifest("validate", inputs, o.cfg.seed)},
        {"truncation", io::rounded(trunc)},
        {"metrics", io::rounded(metrics)},
        {"all_pass", all_pass}},
       o.out, out);
  if (!all_pass) err << "validation failed\n";
  return all_pass ? kOk : kFailed;
}

// ---- sweep -----------------------------------------------------------------

struct SweepOpts {
  std::string model;
  std::string vary;
  std::string metrics = "EX,TH_S,ES,P_idle,margin";
  std::string out;
};

const std::vector<std::string> kSweepKeys = {"lambda_minus", "M",  "N",  "alpha", "mu",
                                             "q1",           "q2", "q3", "q4"};
const std::vector<std::string> kSweepMetrics = {"EX", "TH_S", "ES", "P_idle", "margin"};

// Returns a copy of `base` (explicit or joining-probability JSON) with `key` set to v.
ModelSpec vary_model(const json& base, const std::string& key, double v) {
  const bool integral = key == "M" || key == "N";
  if (integral && v != std::round(v)) throw ConfigError("--vary " + key + ": needs integer steps");
  if (io::is_parametric(base)) {
    io::ParametricModel p = io::parametric_from_json(base);
    if (key == "lambda_minus") p.problem.lambda_minus = v;
    else if (key == "M") p.problem.M = static_cast<int>(v);
    else if (key == "N") p.problem.N = static_cast<int>(v);
    else if (key == "alpha") p.problem.alpha = v;
    else if (key == "mu") p.problem.mu = v;
    else p.q[static_cast<std::size_t>(key[1] - '1')] = v;
    p.problem.validate();
    return p.problem.model(p.q);
  }
  ModelSpec m = io::model_from_json(base);
  if (key == "lambda_minus") {
    m.rates.lambda_minus = v;
    m.rates.validate();
    return m;
  }
  if (key[0] == 'q') throw ConfigError("--vary " + key + ": needs the joining-probability model form");
  const bool service = key == "M" || key == "mu";
  const Distribution& d = service ? m.service : m.seek;
  int phases = 0;
  double rate = 0.0;
  if (const auto* e = std::get_if<Erlang>(&d.kind())) {
    phases = e->phases;
    rate = e->rate;
  } else if (const auto* x = std::get_if<Exponential>(&d.kind())) {
    phases = 1;
    rate = x->rate;
  } else {
    throw ConfigError("--vary " + key + ": needs an Erlang " + (service ? "service" : "seek"));
  }
  if (key == "M" || key == "N") phases = static_cast<int>(v);
  else rate = v;
  try {
    (service ? m.service : m.seek) = Distribution::erlang(phases, rate);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("--vary ") + key + ": " + e.what());
  }
  return m;
}

int sweep(const SweepOpts& o, std::ostream& out, std::ostream&) {
  const auto eq = o.vary.find('=');
  if (eq == std::string::npos) throw ConfigError("--vary: expected key=lo:hi:step");
  const std::string key = o.vary.substr(0, eq);
  if (std::find(kSweepKeys.begin(), kSweepKeys.end(), key) == kSweepKeys.end())
    throw ConfigError("--vary: unknown key '" + key + "'");
  const auto range = split(o.vary.substr(eq + 1), ':');
  if (range.size() != 3) throw ConfigError("--vary: expected key=lo:hi:step");
  const double lo = parse_double(range[0], "--vary lo");
  const double hi = parse_double(range[1], "--vary hi");
  const double step = parse_double(range[2], "--vary step");
  if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("--vary: need step > 0 and hi >= lo");

  const auto metrics = split(o.metrics, ',');
  for (const auto& name : metrics)
    if (std::find(kSweepMetrics.begin(), kSweepMetrics.end(), name) == kSweepMetrics.end())
      throw ConfigError("--metrics: unknown metric '" + name + "'");

  const json base = io::read_file(o.model);
  std::ostringstream csv;
  csv << key;
  for (const auto& name : metrics) csv << ',' << name;
  csv << '\n';
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= count; ++i) {
    const double v = lo + double(i) * step;
    const ModelSpec m = vary_model(base, key, v);
    const double margin = stability_margin(m);
    const bool stable = margin > 0.0;
    MomentsThroughput mt{};
    double p_idle = 0.0;
    if (stable) {
      mt = moments_and_throughput(m);
      p_idle = server_state_probs(m).idle;
    }
    csv << io::sig(v);
    for (const auto& name : metrics) {
      csv << ',';
      if (name == "margin") csv << cell(margin);
      else if (!stable) continue;
      else if (name == "EX") csv << cell(mt.EX);
      else if (name == "TH_S") csv << cell(mt.TH_S);
      else if (name == "ES") csv << cell(mt.ES);
      else csv << cell(p_idle);
    }
    csv << '\n';
  }
  emit_text(csv.str(), o.out, out);
  return kOk;
}

// ---- optimize --------------------------------------------------------------

struct OptimizeOpts {
  std::string problem;
  unsigned restarts = 16;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out;
  std::string csv;
};

int optimize(const OptimizeOpts& o, std::ostream& out, std::ostream& err) {
  const opt::AdmissionProblem p = io::problem_from_json(io::read_file(o.problem));
  opt::SolveOptions so;
  so.threads = o.threads;
  const opt::AdmissionSolution s = opt::solve(p, o.restarts, o.seed, so);
  const json inputs = {{"problem", io::to_json(p)}, {"restarts", o.restarts}};
  emit({{"manifest", manifest("optimize", inputs, o.seed)},
        {"solution", io::rounded(io::to_json(s))}},
       o.out, out);
  if (!o.csv.empty()) {
    std::ostringstream row;
    row << "q1,q2,q3,q4,TH\n";
    for (double q : s.q) row << io::fixed(q) << ',';
    row << io::fixed(s.TH) << '\n';
    emit_text(row.str(), o.csv, out);
  }
  if (!s.feasible) {
    err << "infeasible problem: no feasible joining probabilities found\n";
    return kInfeasible;
  }
  return kOk;
}

// ---- bounds ----------------------------------------------------------------

struct BoundsOpts {
  std::string model;
  std::string seek_sequence;
  bool no_tv = false;
  int pmf_max = 256;
  std::string out;
};

Distribution parse_seek(const std::string& token) {
  const auto f = split(token, ':');
  const std::string what = "--seek-sequence '" + token + "'";
  try {
    if (f.size() == 3 && f[0] == "erlang")
      return Distribution::erlang(parse_int(f[1], what), parse_double(f[2], what));
    if (f.size() == 2 && f[0] == "exponential")
      return Distribution::exponential(parse_double(f[1], what));
    if (f.size() == 2 && f[0] == "deterministic")
      return Distribution::deterministic(parse_double(f[1], what));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
  throw ConfigError(what + ": expected erlang:N:rate, exponential:rate or deterministic:value");
}

std::string seek_token(const Distribution& d) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Erlang>)
          return "erlang:" + std::to_string(v.phases) + ":" + io::sig(v.rate);
        else if constexpr (std::is_same_v<T, Exponential>)
          return "exponential:" + io::sig(v.rate);
        else if constexpr (std::is_same_v<T, Deterministic>)
          return "deterministic:" + io::sig(v.value);
        else
          return "hyperexp";
      },
      d.kind());
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

// lambda^r = lambda^-, lambda^e = lambda_+^e = lambda_+^r.
bool comparison_profile(const RateProfile& r) {
  return same(r.lambda_r, r.lambda_minus) && same(r.lambda_e_plus, r.lambda_e) &&
         same(r.lambda_r_plus, r.lambda_e);
}

std::vector<double> system_pmf(const ModelSpec& m, int n_max) {
  return oracles::pgf_to_pmf([&](cplx z) { return total_system_pgf(m, z); }, n_max);
}

// Sum of |p_n - q_n| over the extracted range plus the difference of the
// remaining masses.
double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0, sp = 0.0, sq = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) {
    d += std::abs(p[n] - q[n]);
    sp += p[n];
    sq += q[n];
  }
  return d + std::abs(sp - sq);
}

int bounds(const BoundsOpts& o, std::ostream& out, std::ostream& err) {
  const json in = io::read_file(o.model);
  const ModelSpec base = io::model_from_json(in);
  if (o.pmf_max < 1) throw ConfigError("--pmf-max must be >= 1");
  std::vector<Distribution> seeks;
  if (o.seek_sequence.empty()) {
    seeks.push_back(base.seek);
  } else {
    for (const auto& tok : split(o.seek_sequence, ',')) seeks.push_back(parse_seek(tok));
  }
  const bool want_tv = !o.no_tv;
  if (want_tv && !comparison_profile(base.rates))
    throw ConfigError(
        "total-variation distance needs lambda_r = lambda_minus and lambda_e = lambda_e_plus = "
        "lambda_r_plus (use --no-tv for bounds only)");

  std::optional<std::vector<double>> limit;
  if (want_tv) {
    const ModelSpec lim{base.rates, base.service, Distribution::deterministic(0.0)};
    if (is_stable(lim)) limit = system_pmf(lim, o.pmf_max);
  }

  std::ostringstream csv;
  csv << "seek,alpha_star,lower,upper,tv_distance\n";
  bool any_unstable = false;
  for (const Distribution& d : seeks) {
    const ModelSpec m{base.rates, base.service, d};
    csv << seek_token(d) << ',' << cell(d.lst(base.rates.lambda_minus)) << ',';
    if (!is_stable(m)) {
      any_unstable = true;
      csv << ",,\n";
      continue;
    }
    const AsymptoticBounds b = asymptotic_bounds(m);
    csv << cell(b.lower) << ',' << cell(b.upper) << ',';
    if (limit) csv << cell(tv_distance(system_pmf(m, o.pmf_max), *limit));
    csv << '\n';
  }
  emit_text(csv.str(), o.out, out);
  if (any_unstable) err << "some seek distributions give an unstable model; cells left empty\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stationary analysis, simulation and admission control for a single-server "
               "retrial queue with event-dependent arrivals"};
  app.set_version_flag("--version", RETRIAL_VERSION);
  app.require_subcommand(1);

  AnalyzeOpts ao;
  auto* a = app.add_subcommand("analyze", "Stationary report of a model as JSON");
  a->add_option("model", ao.model, "Model JSON file")->required();
  a->add_option("--pmf-max", ao.pmf_max, "Length of the extracted pmfs (0: none)");
  a->add_option("--out", ao.out, "Write the report here instead of stdout");

  SimOpts so;
  auto* s = app.add_subcommand("simulate", "Discrete-event simulation estimates as JSON");
  s->add_option("model", so.model, "Model JSON file")->required();
  s->add_option("--departures", so.cfg.measured_departures, "Measured departures per replication");
  s->add_option("--warmup", so.cfg.warmup_departures, "Warm-up departures per replication");
  s->add_option("--reps", so.cfg.replications, "Independent replications");
  s->add_option("--seed", so.cfg.seed, "Base seed");
  s->add_option("--threads", so.cfg.threads, "Worker threads (0: all cores)");
  s->add_option("--pmf-max", so.cfg.pmf_max, "Histogram length");
  s->add_option("--out", so.out, "Write the report here instead of stdout");

  ValidateOpts vo;
  auto* v = app.add_subcommand("validate", "Closed forms against the truncated chain and simulation");
  v->add_option("model", vo.model, "Model JSON file")->required();
  v->add_option("--departures", vo.cfg.measured_departures, "Measured departures per replication");
  v->add_option("--warmup", vo.cfg.warmup_departures, "Warm-up departures per replication");
  v->add_option("--reps", vo.cfg.replications, "Independent replications");
  v->add_option("--trunc", vo.trunc, "Truncation level of the embedded chain (0: automatic)");
  v->add_option("--seed", vo.cfg.seed, "Base seed");
  v->add_option("--threads", vo.cfg.threads, "Worker threads (0: all cores)");
  v->add_option("--out", vo.out, "Write the comparison here instead of stdout");

  SweepOpts wo;
  auto* w = app.add_subcommand("sweep", "Metrics over a one-parameter grid as CSV");
  w->add_option("model", wo.model, "Base model JSON file")->required();
  w->add_option("--vary", wo.vary, "key=lo:hi:step, key in lambda_minus,M,N,alpha,mu,q1..q4")
      ->required();
  w->add_option("--metrics", wo.metrics, "Comma-separated subset of EX,TH_S,ES,P_idle,margin");
  w->add_option("--out", wo.out, "Write the CSV here instead of stdout");

  OptimizeOpts oo;
  auto* op = app.add_subcommand("optimize", "Throughput-maximizing joining probabilities");
  op->add_option("problem", oo.problem, "Problem JSON file")->required();
  op->add_option("--restarts", oo.restarts, "Latin-hypercube starting points");
  op->add_option("--seed", oo.seed, "Seed of the starting points");
  op->add_option("--threads", oo.threads, "Worker threads over restarts");
  op->add_option("--out", oo.out, "Write the solution JSON here instead of stdout");
  op->add_option("--csv", oo.csv, "Also write the table row (4 decimals) here");

  BoundsOpts bo;
  auto* b = app.add_subcommand("bounds", "Fast-seek bounds and distance to the instant-seek limit");
  b->add_option("model", bo.model, "Model JSON file")->required();
  b->add_option("--seek-sequence", bo.seek_sequence,
                "Comma-separated seek laws: erlang:N:rate, exponential:rate, deterministic:value");
  b->add_flag("--no-tv", bo.no_tv, "Bounds only, no total-variation distance");
  b->add_option("--pmf-max", bo.pmf_max, "Coefficients used for the distance");
  b->add_option("--out", bo.out, "Write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*a) return analyze(ao, out, err);
    if (*s) return simulate(so, out, err);
    if (*v) return validate(vo, out, err);
    if (*w) return sweep(wo, out, err);
    if (*op) return optimize(oo, out, err);
    if (*b) return bounds(bo, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const io::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const UnstableModel& e) {
    err << e.what() << "\n";
    return kUnstable;
  } catch (const TruncationInsufficient& e) {
    err << e.what() << "\n";
    return kTruncation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}

}  // namespace retrial::cli
