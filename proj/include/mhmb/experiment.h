#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mhmb/chain.h"
#include "mhmb/config.h"
#include "mhmb/correction.h"
#include "mhmb/dataset.h"
#include "mhmb/eval.h"
#include "mhmb/mh_test.h"
#include "mhmb/model.h"

namespace mhmb {

// Environment variable naming the default correction table file.
inline constexpr const char* kTableEnv = "MHMB_CORRECTION_TABLE";

// Everything a `run` needs, resolved from a Config.
struct Experiment {
  std::shared_ptr<const Dataset> data;
  std::shared_ptr<const Dataset> test_data;  // logistic models only
  std::shared_ptr<const TargetModel> model;
  ChainConfig chain;  // seed is the master seed
  std::size_t trials = 1;
  std::filesystem::path output_dir;
  Grid2D grid;
  std::size_t burn_in = 0;
  double data_bin_width = 0.01;  // data histogram used for exact bin probabilities
};

// Builds the model, dataset, test and chain settings. Reads every key it
// knows; callers can then reject leftovers with check_all_used().
Experiment build_experiment(const Config& config);

std::shared_ptr<const AcceptanceTest> build_test(const Config& config);
std::shared_ptr<const CorrectionTable> resolve_table(const Config& config);
Grid2D read_grid(const Config& config);

// Seed of trial `trial` under master seed `seed`.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial);

std::string trial_dir_name(std::size_t trial);

// CSV writers. Floats carry 17 significant digits.
void write_samples_csv(const ChainResult& chain, const std::filesystem::path& path);
void write_histogram_csv(const ChainSummary& summary, const std::filesystem::path& path);
ChainResult read_samples_csv(const std::filesystem::path& path);

std::string format_double(double v);

struct RunReport {
  std::vector<ChainSummary> summaries;
};

// Runs every trial and writes <out>/config.cfg, <out>/summary.csv and
// <out>/trial_NNN/{samples,histogram}.csv. Throws after writing the
// completed trials when a chain fails.
RunReport cmd_run(const Config& config, std::ostream& log);

struct CorrectionRequest {
  double sigma = 1.0;
  double lambda = 10.0;
  int half_count = 4000;
  double half_range = 20.0;
  std::filesystem::path out;
};

CorrectionBuild cmd_make_correction(const CorrectionRequest& request, std::ostream& log);

struct MetricsRequest {
  std::filesystem::path results;
  std::vector<std::string> metrics;  // poisson, chi2, tv, accuracy
  std::optional<std::filesystem::path> reference;  // results dir for tv
  std::optional<Grid2D> grid;
  std::optional<std::filesystem::path> test_images, test_labels;
};

// Writes <results>/metrics.csv (poisson, chi2, tv: one row per trial) and
// <results>/trial_NNN/accuracy.csv.
void cmd_metrics(const MetricsRequest& request, std::ostream& log);

}  // namespace mhmb
