#include "retrial/simulator.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "retrial/errors.hpp"

namespace retrial::sim {

namespace {

enum class ServerState { idle_empty, seek, e2, e3, e45, e67 };
constexpr std::size_t kStates = 6;

// Online check of the label sequence.
class LabelGrammar {
 public:
  void on(EventLabel l, std::size_t orbit_size) {
    bool ok = true;
    switch (l) {
      case EventLabel::E1:
        ok = last_ != EventLabel::E1;
        orbit_at_e1_ = orbit_size;
        break;
      case EventLabel::E2:
        ok = last_ == EventLabel::E1;
        break;
      case EventLabel::E3:
        ok = last_ == EventLabel::E1 && orbit_at_e1_ > 0;
        break;
      case EventLabel::E4:
        ok = last_ == EventLabel::E2;
        break;
      case EventLabel::E5:
        ok = last_ == EventLabel::E4 || last_ == EventLabel::E5;
        break;
      case EventLabel::E6:
        ok = last_ == EventLabel::E3;
        break;
      case EventLabel::E7:
        ok = last_ == EventLabel::E6 || last_ == EventLabel::E7;
        break;
    }
    if (!ok) throw std::logic_error("simulator: label grammar violated");
    last_ = l;
  }

 private:
  EventLabel last_ = EventLabel::E1;
  std::size_t orbit_at_e1_ = 0;
};

struct Customer {
  double arrival;
  double orbit_join;
};

struct Window {
  bool on = false;
  double start = 0.0;
  std::size_t orbit_start = 0;
  std::array<double, kStates> time_in{};
  double orbit_area = 0.0;
  double system_area = 0.0;
  std::uint64_t departures = 0;
  std::uint64_t admissions = 0;
  double sojourn_sum = 0.0;
  double orbit_wait_sum = 0.0;
  std::vector<double> dep_pmf;
  std::vector<double> sys_pmf;
  std::vector<double> batch_sum;
};

}  // namespace

void SimConfig::validate() const {
  if (measured_departures == 0) throw ConfigError("measured_departures must be > 0");
  if (replications == 0) throw ConfigError("replications must be > 0");
  if (pmf_max == 0) throw ConfigError("pmf_max must be > 0");
  if (batches == 0 || batches > measured_departures)
    throw ConfigError("batches must be in 1..measured_departures");
}

bool Estimate::covers(double x, double widths) const {
  return std::abs(x - mean) <= widths * half_width;
}

Estimate t_interval(const std::vector<double>& xs) {
  Estimate e;
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / double(xs.size());
  if (xs.size() < 2) {
    e.half_width = std::numeric_limits<double>::infinity();
    return e;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - e.mean) * (x - e.mean);
  const double n = double(xs.size());
  const boost::math::students_t dist(n - 1.0);
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  e.half_width = q * std::sqrt(ss / (n - 1.0) / n);
  return e;
}

ReplicationResult run_replication(const ModelSpec& model, const SimConfig& cfg,
                                  std::uint64_t index) {
  model.validate();
  cfg.validate();
  Rng rng = make_stream(cfg.seed, index);
  const RateProfile& r = model.rates;
  const std::size_t bins = cfg.pmf_max;

  double t = 0.0;
  std::deque<Customer> orbit;
  std::uint64_t departures = 0;
  std::uint64_t admissions = 0;
  std::uint64_t events = 0;
  LabelGrammar grammar;
  Window w;
  w.dep_pmf.assign(bins, 0.0);
  w.sys_pmf.assign(bins, 0.0);
  w.batch_sum.assign(cfg.batches, 0.0);
  const std::uint64_t batch_len = cfg.measured_departures / cfg.batches;

  auto advance = [&](double dt, ServerState s) {
    if (w.on) {
      const bool busy = s != ServerState::idle_empty && s != ServerState::seek;
      const std::size_t x = orbit.size();
      const std::size_t n = x + (busy ? 1 : 0);
      w.time_in[static_cast<std::size_t>(s)] += dt;
      w.orbit_area += double(x) * dt;
      w.system_area += double(n) * dt;
      w.sys_pmf[std::min(n, bins - 1)] += dt;
    }
    t += dt;
  };
  auto open_window = [&] {
    w.on = true;
    w.start = t;
    w.orbit_start = orbit.size();
  };

  if (cfg.warmup_departures == 0) open_window();
  const std::uint64_t stop = cfg.warmup_departures + cfg.measured_departures;

  while (true) {
    // Idle: the next service goes to a primary arrival or, after a seek, the orbit head.
    const double arr = exponential_variate(rng, r.lambda_minus);
    bool primary = true;
    double cust_arrival = 0.0;
    double orbit_wait = 0.0;
    if (orbit.empty()) {
      advance(arr, ServerState::idle_empty);
    } else {
      const double seek = model.seek.sample(rng);
      if (arr < seek) {
        advance(arr, ServerState::seek);
      } else {
        advance(seek, ServerState::seek);
        primary = false;
      }
    }
    if (primary) {
      grammar.on(EventLabel::E2, orbit.size());
      cust_arrival = t;
      ++admissions;
      if (w.on) ++w.admissions;
    } else {
      grammar.on(EventLabel::E3, orbit.size());
      const Customer head = orbit.front();
      orbit.pop_front();
      cust_arrival = head.arrival;
      orbit_wait = t - head.orbit_join;
    }
    ++events;

    // Service, with arrivals joining the orbit.
    const ClassRates rates = class_rates(primary ? ArrivalClass::e : ArrivalClass::r, r);
    ServerState state = primary ? ServerState::e2 : ServerState::e3;
    double remaining = model.service.sample(rng);
    double rate = rates.first;
    bool first = true;
    while (true) {
      const double next =
          rate > 0.0 ? exponential_variate(rng, rate) : std::numeric_limits<double>::infinity();
      if (next >= remaining) {
        advance(remaining, state);
        break;
      }
      advance(next, state);
      remaining -= next;
      orbit.push_back({t, t});
      ++admissions;
      if (w.on) ++w.admissions;
      ++events;
      if (primary) {
        grammar.on(first ? EventLabel::E4 : EventLabel::E5, orbit.size());
        state = ServerState::e45;
      } else {
        grammar.on(first ? EventLabel::E6 : EventLabel::E7, orbit.size());
        state = ServerState::e67;
      }
      first = false;
      rate = rates.subsequent;
    }

    ++departures;
    ++events;
    grammar.on(EventLabel::E1, orbit.size());
    if (w.on) {
      const std::uint64_t k = w.departures++;
      w.sojourn_sum += t - cust_arrival;
      w.orbit_wait_sum += orbit_wait;
      w.dep_pmf[std::min(orbit.size(), bins - 1)] += 1.0;
      const std::uint64_t b = std::min<std::uint64_t>(k / batch_len, cfg.batches - 1);
      w.batch_sum[b] += double(orbit.size());
    }
    if (!w.on && departures == cfg.warmup_departures) open_window();
    if (departures == stop) break;
  }

  if (admissions != departures + orbit.size())
    throw std::logic_error("simulator: flow balance violated");

  ReplicationResult res;
  res.duration = t - w.start;
  res.departures = w.departures;
  res.admissions = w.admissions;
  res.events = events;
  const double T = res.duration;
  const double D = double(w.departures);
  auto frac = [&](ServerState s) { return w.time_in[static_cast<std::size_t>(s)] / T; };
  res.orbit_timeavg = w.orbit_area / T;
  res.system_timeavg = w.system_area / T;
  res.p_idle_empty = frac(ServerState::idle_empty);
  res.p_seek = frac(ServerState::seek);
  res.p_e2 = frac(ServerState::e2);
  res.p_e3 = frac(ServerState::e3);
  res.p_e45 = frac(ServerState::e45);
  res.p_e67 = frac(ServerState::e67);
  res.departure_rate = D / T;
  res.admission_rate = double(w.admissions) / T;
  res.mean_sojourn = w.sojourn_sum / D;
  res.mean_orbit_wait = w.orbit_wait_sum / D;
  res.orbit_slope = (double(orbit.size()) - double(w.orbit_start)) / T;
  res.departure_orbit_pmf = std::move(w.dep_pmf);
  for (double& p : res.departure_orbit_pmf) p /= D;
  res.system_pmf = std::move(w.sys_pmf);
  for (double& p : res.system_pmf) p /= T;
  res.batch_departure_orbit = std::move(w.batch_sum);
  for (unsigned b = 0; b < cfg.batches; ++b) {
    const std::uint64_t len =
        b + 1 < cfg.batches ? batch_len : cfg.measured_departures - batch_len * (cfg.batches - 1);
    res.batch_departure_orbit[b] /= double(len);
  }
  return res;
}

SimEstimates run(const ModelSpec& model, const SimConfig& cfg) {
  model.validate();
  cfg.validate();
  std::vector<ReplicationResult> reps(cfg.replications);
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.replications);
  if (workers <= 1) {
    for (unsigned i = 0; i < cfg.replications; ++i) reps[i] = run_replication(model, cfg, i);
  } else {
    std::atomic<unsigned> next{0};
    std::vector<std::exception_ptr> errors(cfg.replications);
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < workers; ++k) {
      pool.emplace_back([&] {
        for (unsigned i = next++; i < cfg.replications; i = next++) {
          try {
            reps[i] = run_replication(model, cfg, i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  auto collect = [&](auto field) {
    std::vector<double> xs;
    xs.reserve(reps.size());
    for (const auto& rr : reps) xs.push_back(field(rr));
    return t_interval(xs);
  };
  SimEstimates est;
  est.EX_timeavg = collect([](const ReplicationResult& x) { return x.orbit_timeavg; });
  est.system_timeavg = collect([](const ReplicationResult& x) { return x.system_timeavg; });
  est.P_idle = collect([](const ReplicationResult& x) { return x.p_idle_empty + x.p_seek; });
  est.p_idle_empty = collect([](const ReplicationResult& x) { return x.p_idle_empty; });
  est.p_seek = collect([](const ReplicationResult& x) { return x.p_seek; });
  est.p_e2 = collect([](const ReplicationResult& x) { return x.p_e2; });
  est.p_e3 = collect([](const ReplicationResult& x) { return x.p_e3; });
  est.p_e45 = collect([](const ReplicationResult& x) { return x.p_e45; });
  est.p_e67 = collect([](const ReplicationResult& x) { return x.p_e67; });
  est.departure_rate = collect([](const ReplicationResult& x) { return x.departure_rate; });
  est.admission_rate = collect([](const ReplicationResult& x) { return x.admission_rate; });
  est.mean_sojourn = collect([](const ReplicationResult& x) { return x.mean_sojourn; });
  est.mean_orbit_wait = collect([](const ReplicationResult& x) { return x.mean_orbit_wait; });
  est.orbit_slope = collect([](const ReplicationResult& x) { return x.orbit_slope; });
  for (std::size_t n = 0; n < cfg.pmf_max; ++n) {
    est.departure_orbit_pmf.push_back(
        collect([n](const ReplicationResult& x) { return x.departure_orbit_pmf[n]; }));
    est.system_pmf.push_back(collect([n](const ReplicationResult& x) { return x.system_pmf[n]; }));
  }
  est.batch_departure_orbit = t_interval(reps.front().batch_departure_orbit);
  est.replications = std::move(reps);
  return est;
}

}  // namespace retrial::sim
