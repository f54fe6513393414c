#pragma once

#include <cstdint>
#include <vector>

#include "retrial/model.hpp"

namespace retrial::sim {

/// State labels: E1 service completion, E2 primary starts service, E3 retrial
/// starts service, E4/E5 first/later arrival during a primary service, E6/E7
/// the same during a retrial service.
enum class EventLabel { E1 = 1, E2, E3, E4, E5, E6, E7 };

struct SimConfig {
  std::uint64_t warmup_departures = 10'000;
  std::uint64_t measured_departures = 100'000;
  unsigned replications = 10;
  std::uint64_t seed = 1;
  /// Histogram length for the pmfs; larger values land in the last bin.
  std::size_t pmf_max = 64;
  /// Worker threads; 0 means hardware concurrency.
  unsigned threads = 0;
  /// Batches for the single-run batch-means estimate.
  unsigned batches = 20;

  /// Throws ConfigError on zero departures or replications.
  void validate() const;
};

struct Estimate {
  double mean = 0.0;
  double half_width = 0.0;  // 95% Student-t; infinite with one replication
  bool covers(double x, double widths = 1.0) const;
};

/// Raw measurements of one replication over its measurement window.
struct ReplicationResult {
  double duration = 0.0;
  std::uint64_t departures = 0;
  std::uint64_t admissions = 0;

  double orbit_timeavg = 0.0;
  double system_timeavg = 0.0;
  double p_idle_empty = 0.0;  // idle, orbit empty
  double p_seek = 0.0;        // idle, orbit nonempty
  double p_e2 = 0.0;
  double p_e3 = 0.0;
  double p_e45 = 0.0;
  double p_e67 = 0.0;
  double departure_rate = 0.0;
  double admission_rate = 0.0;
  double mean_sojourn = 0.0;
  double mean_orbit_wait = 0.0;  // averaged over all departing customers
  double orbit_slope = 0.0;      // orbit growth per unit time over the window
  std::vector<double> departure_orbit_pmf;
  std::vector<double> system_pmf;  // time-average
  std::vector<double> batch_departure_orbit;  // mean orbit size at departures per batch

  std::uint64_t events = 0;
};

struct SimEstimates {
  Estimate EX_timeavg;
  Estimate system_timeavg;
  Estimate P_idle;
  Estimate p_idle_empty;
  Estimate p_seek;  // idle with orbit nonempty (E1 with orbit)
  Estimate p_e2;
  Estimate p_e3;
  Estimate p_e45;
  Estimate p_e67;
  Estimate departure_rate;
  Estimate admission_rate;
  Estimate mean_sojourn;
  Estimate mean_orbit_wait;
  Estimate orbit_slope;
  std::vector<Estimate> departure_orbit_pmf;
  std::vector<Estimate> system_pmf;
  /// Batch means of the departure-epoch orbit size from replication 0.
  Estimate batch_departure_orbit;
  std::vector<ReplicationResult> replications;
};

/// One replication with stream (cfg.seed, index). Throws std::logic_error on
/// a label-grammar or flow-balance violation.
ReplicationResult run_replication(const ModelSpec& model, const SimConfig& cfg,
                                  std::uint64_t index);

/// Independent replications, aggregated in index order.
SimEstimates run(const ModelSpec& model, const SimConfig& cfg);

/// Mean and 95% Student-t half-width of the sample.
Estimate t_interval(const std::vector<double>& xs);

}  // namespace retrial::sim
