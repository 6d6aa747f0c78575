#include "mhmb/chain.h"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

namespace mhmb {

void ChainConfig::validate(const TargetModel& model) const {
  if (samples < 1) throw Error("chain: T must be >= 1");
  if (!test) throw Error("chain: no acceptance test configured");
  if (initial.size() != model.dimension()) throw Error("chain: initial state has wrong dimension");
  if (proposal.stddev().size() != model.dimension()) {
    throw Error("chain: proposal has wrong dimension");
  }
  if (!(temperature > 0.0)) throw Error("chain: temperature must be > 0");
  for (const auto& p : schedule) {
    if (!(p.temperature > 0.0)) throw Error("chain: scheduled temperature must be > 0");
    if (p.step && !(*p.step >= 0.0)) throw Error("chain: scheduled step must be >= 0");
  }
}

double ChainConfig::temperature_at(std::size_t t) const {
  // Latest phase that has started; the schedule need not be sorted.
  double k = temperature;
  const TemperaturePhase* cur = nullptr;
  for (const auto& p : schedule) {
    if (p.start <= t && (!cur || p.start >= cur->start)) cur = &p;
  }
  if (cur) k = cur->temperature;
  return k;
}

ChainResult run_chain(const TargetModel& model, const ChainConfig& config) {
  config.validate(model);
  auto schedule = config.schedule;
  std::stable_sort(schedule.begin(), schedule.end(),
                   [](const auto& a, const auto& b) { return a.start < b.start; });

  const std::size_t d = model.dimension();
  ChainResult out;
  out.dimension = d;
  out.samples.reserve(config.samples * d);

  Rng rng(config.seed);
  TestWorkspace ws(model.data_size());
  Posterior target{&model, config.temperature};
  RandomWalkProposal proposal = config.proposal;
  std::size_t next_phase = 0;
  Theta theta = config.initial;

  for (std::size_t t = 0; t < config.samples; ++t) {
    while (next_phase < schedule.size() && schedule[next_phase].start <= t) {
      target.temperature = schedule[next_phase].temperature;
      if (schedule[next_phase].step) proposal = RandomWalkProposal::isotropic(d, *schedule[next_phase].step);
      ++next_phase;
    }
    const auto started = std::chrono::steady_clock::now();
    TestDecision dec;
    Theta candidate;
    try {
      candidate = proposal.propose(theta, rng);
      dec = config.test->decide(target, theta, candidate, rng, ws);
    } catch (const std::exception& e) {
      out.error = "step " + std::to_string(t) + ": " + e.what();
      return out;
    }
    const auto elapsed = std::chrono::steady_clock::now() - started;
    if (dec.accept) theta = std::move(candidate);
    out.samples.insert(out.samples.end(), theta.begin(), theta.end());
    out.batch_sizes.push_back(dec.batch_used);
    out.accepted.push_back(dec.accept);
    out.epsilons.push_back(dec.epsilon_estimate);
    out.sem2.push_back(dec.sem2);
    out.side_scans.push_back(dec.side_scan);
    out.exhausted.push_back(dec.exhausted_dataset);
    out.step_seconds.push_back(std::chrono::duration<double>(elapsed).count());
  }
  return out;
}

ChainSummary summarize(const ChainResult& result) {
  ChainSummary s;
  s.steps = result.size();
  if (s.steps == 0) return s;
  std::size_t accepted = 0;
  for (bool a : result.accepted) accepted += a ? 1 : 0;
  s.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(s.steps);

  for (std::size_t b : result.batch_sizes) {
    s.total_data += b;
    s.max_batch = std::max(s.max_batch, b);
    const std::size_t bin = b == 0 ? 0 : static_cast<std::size_t>(std::bit_width(b) - 1);
    if (s.histogram.size() <= bin) s.histogram.resize(bin + 1, 0);
    ++s.histogram[bin];
  }
  for (std::size_t c : result.side_scans) s.total_side_scan += c;
  for (bool e : result.exhausted) s.exhausted_steps += e ? 1 : 0;
  s.mean_batch = static_cast<double>(s.total_data) / static_cast<double>(s.steps);

  std::vector<std::size_t> sorted = result.batch_sizes;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median_batch = n % 2 ? static_cast<double>(sorted[n / 2])
                         : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
  // Nearest-rank percentile.
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
  s.p99_batch = static_cast<double>(sorted[std::max<std::size_t>(rank, 1) - 1]);
  return s;
}

}  // namespace mhmb
