#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mhmb/mh_test.h"
#include "mhmb/model.h"

namespace mhmb {

// From step `start` (0-based) onwards the chain runs at `temperature`, and
// with proposal standard deviation `step` when given.
struct TemperaturePhase {
  std::size_t start = 0;
  double temperature = 1.0;
  std::optional<double> step;
};

struct ChainConfig {
  std::size_t samples = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::shared_ptr<const AcceptanceTest> test;
  RandomWalkProposal proposal;
  Theta initial;
  std::vector<TemperaturePhase> schedule;

  void validate(const TargetModel& model) const;
  // Temperature in effect at step t.
  double temperature_at(std::size_t t) const;
};

struct ChainResult {
  std::size_t dimension = 0;
  std::vector<double> samples;  // row t holds the state after step t
  std::vector<std::size_t> batch_sizes;
  std::vector<bool> accepted;
  std::vector<double> epsilons;
  std::vector<double> sem2;
  std::vector<std::size_t> side_scans;
  std::vector<double> step_seconds;
  std::vector<bool> exhausted;
  // Set when the chain stopped early; the vectors then hold the completed
  // prefix.
  std::optional<std::string> error;

  std::size_t size() const { return batch_sizes.size(); }
  std::span<const double> sample(std::size_t t) const {
    return {samples.data() + t * dimension, dimension};
  }
};

// Propose, test, accept or reject, `samples` times. Deterministic for a
// fixed seed. Errors from the model or test stop the chain and are reported
// in ChainResult::error together with the step index.
ChainResult run_chain(const TargetModel& model, const ChainConfig& config);

struct ChainSummary {
  std::size_t steps = 0;
  double acceptance_rate = 0.0;
  double mean_batch = 0.0;
  double median_batch = 0.0;
  double p99_batch = 0.0;
  std::size_t max_batch = 0;
  std::size_t total_data = 0;
  std::size_t total_side_scan = 0;
  std::size_t exhausted_steps = 0;
  // Histogram over bins [2^k, 2^(k+1)); entry k is the count for bin k.
  std::vector<std::size_t> histogram;
};

ChainSummary summarize(const ChainResult& result);

}  // namespace mhmb
