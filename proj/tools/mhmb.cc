// mhmb: correction tables, minibatch M-H experiments and their metrics.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mhmb/experiment.h"
#include "mhmb/stats.h"

namespace {

// Short flags for the most common config keys. Anything else goes through
// --set key=value.
const std::map<std::string, std::string> kRunFlags = {
    {"seed", "chain.seed"},       {"samples", "chain.samples"}, {"trials", "chain.trials"},
    {"temperature", "chain.temperature"}, {"out", "output.dir"}, {"test", "test"},
    {"table", "test.table"},      {"m", "test.m"},              {"delta", "test.delta"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minibatch Metropolis-Hastings with the Barker test and a correction variable"};
  app.require_subcommand(1);

  // make-correction
  mhmb::CorrectionRequest corr;
  auto* mk = app.add_subcommand("make-correction", "Precompute the X_corr table");
  mk->add_option("--sigma", corr.sigma, "Normal std the table complements")->capture_default_str();
  mk->add_option("--lambda", corr.lambda, "Ridge parameter")->capture_default_str();
  mk->add_option("-N,--half-count", corr.half_count, "Grid points per side")->capture_default_str();
  mk->add_option("-V,--half-range", corr.half_range, "Support [-V, V]")->capture_default_str();
  std::string corr_out;
  mk->add_option("-o,--out", corr_out, "Output table file")->required();

  // run
  auto* run = app.add_subcommand("run", "Run the chains described by a config file");
  std::string config_path;
  run->add_option("config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  std::map<std::string, std::string> flag_values;
  for (const auto& [flag, key] : kRunFlags) {
    run->add_option("--" + flag, flag_values[flag], "Override " + key);
  }
  std::vector<std::string> sets;
  run->add_option("--set", sets, "Override any config key: key=value");

  // metrics
  auto* met = app.add_subcommand("metrics", "Compute metrics over a results directory");
  mhmb::MetricsRequest mreq;
  std::string results, reference, test_images, test_labels, metric_list;
  std::vector<double> grid_x, grid_y, grid_bins;
  met->add_option("results", results, "Results directory")->required()->check(CLI::ExistingDirectory);
  met->add_option("--metric", metric_list, "Comma list of poisson, chi2, tv, accuracy")->required();
  met->add_option("--reference", reference, "Reference results directory for tv");
  met->add_option("--grid-x", grid_x, "x_lo x_hi")->expected(2);
  met->add_option("--grid-y", grid_y, "y_lo y_hi")->expected(2);
  met->add_option("--grid-bins", grid_bins, "nx ny")->expected(2);
  met->add_option("--test-images", test_images, "Test images (IDX)");
  met->add_option("--test-labels", test_labels, "Test labels (IDX)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*mk) {
      corr.out = corr_out;
      mhmb::cmd_make_correction(corr, std::cout);
    } else if (*run) {
      mhmb::Config config = mhmb::Config::load(config_path);
      for (const auto& [flag, key] : kRunFlags) {
        if (run->count("--" + flag)) config.set(key, flag_values[flag]);
      }
      for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
          std::cerr << "--set expects key=value, got '" << kv << "'\n";
          return 2;
        }
        config.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      mhmb::cmd_run(config, std::cout);
    } else if (*met) {
      mreq.results = results;
      std::string item;
      for (char c : metric_list + ",") {
        if (c == ',') {
          if (!item.empty()) mreq.metrics.push_back(item);
          item.clear();
        } else {
          item += c;
        }
      }
      for (const auto& m : mreq.metrics) {
        if (m != "poisson" && m != "chi2" && m != "tv" && m != "accuracy") {
          std::cerr << "unknown metric '" << m << "'\n" << met->help();
          return 2;
        }
      }
      if (!reference.empty()) mreq.reference = reference;
      if (!test_images.empty()) mreq.test_images = test_images;
      if (!test_labels.empty()) mreq.test_labels = test_labels;
      if (!grid_x.empty() || !grid_y.empty() || !grid_bins.empty()) {
        mhmb::Grid2D g;
        if (!grid_x.empty()) g.x_lo = grid_x[0], g.x_hi = grid_x[1];
        if (!grid_y.empty()) g.y_lo = grid_y[0], g.y_hi = grid_y[1];
        if (!grid_bins.empty()) {
          g.nx = static_cast<std::size_t>(grid_bins[0]);
          g.ny = static_cast<std::size_t>(grid_bins[1]);
        }
        mreq.grid = g;
      }
      mhmb::cmd_metrics(mreq, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
