#include "mhmb/experiment.h"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mhmb/stats.h"

namespace fs = std::filesystem;

namespace mhmb {
namespace {

void require_file(const fs::path& p, const std::string& key) {
  if (!fs::exists(p)) throw Error(key + ": file not found: " + p.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Per-coordinate proposal standard deviations from proposal.sd or, failing
// that, the diagonal proposal.cov.
RandomWalkProposal read_proposal(const Config& config, std::size_t dim) {
  auto expand = [dim](std::vector<double> v, const char* key) {
    if (v.size() == 1) v.assign(dim, v[0]);
    if (v.size() != dim) {
      throw Error(std::string(key) + ": expected 1 or " + std::to_string(dim) + " values");
    }
    return v;
  };
  if (config.has("proposal.sd")) {
    if (config.has("proposal.cov")) throw Error("set only one of proposal.sd and proposal.cov");
    return RandomWalkProposal(expand(config.get_doubles("proposal.sd"), "proposal.sd"));
  }
  if (config.has("proposal.cov")) {
    const auto cov = expand(config.get_doubles("proposal.cov"), "proposal.cov");
    return RandomWalkProposal::from_covariance(cov);
  }
  throw Error(config.source() + ": missing required key 'proposal.sd'");
}

std::vector<TemperaturePhase> read_schedule(const Config& config) {
  std::vector<TemperaturePhase> out;
  if (!config.has("chain.schedule")) return out;
  const std::string text = config.get("chain.schedule");
  std::istringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    std::istringstream parts(item);
    std::string a, b, c;
    std::getline(parts, a, ':');
    std::getline(parts, b, ':');
    std::getline(parts, c, ':');
    try {
      TemperaturePhase p;
      p.start = std::stoull(a);
      p.temperature = std::stod(b);
      if (!c.empty()) p.step = std::stod(c);
      out.push_back(p);
    } catch (const std::exception&) {
      throw Error("chain.schedule: expected entries start:K[:step], got '" + item + "'");
    }
  }
  return out;
}

void build_model(const Config& config, Experiment& ex) {
  const std::string model = config.get("model");
  const std::uint64_t data_seed = config.get_uint("data.seed", 0);
  const std::string source = config.get("data.source", model == "logistic" ? "idx" : "generate");

  if (model == "mixture" || model == "gaussian_mean") {
    if (source != "generate") throw Error("data.source: " + model + " data must be generated");
    const std::size_t n = config.get_uint("data.n");
    if (n == 0) throw Error("data.n must be >= 1");
    if (model == "mixture") {
      const auto theta = config.has("data.theta") ? config.get_doubles("data.theta")
                                                  : std::vector<double>{0.0, 1.0};
      if (theta.size() != 2) throw Error("data.theta: expected two values");
      ex.data = std::make_shared<Dataset>(generate_mixture_data(n, theta[0], theta[1], data_seed));
      ex.model = std::make_shared<MixtureModel>(ex.data);
    } else {
      ex.data = std::make_shared<Dataset>(
          generate_gaussian_data(n, config.get_double("data.mean", 0.0), data_seed));
      ex.model = std::make_shared<GaussianMeanModel>(ex.data);
    }
  } else if (model == "logistic") {
    if (source != "idx") throw Error("data.source: logistic data must come from idx files");
    const int pos = static_cast<int>(config.get_uint("data.pos_digit", 7));
    const int neg = static_cast<int>(config.get_uint("data.neg_digit", 1));
    auto load = [&](const std::string& img_key, const std::string& lbl_key) {
      const fs::path img = config.get(img_key), lbl = config.get(lbl_key);
      require_file(img, img_key);
      require_file(lbl, lbl_key);
      return mnist_binary_subset(load_idx(img), load_idx(lbl), pos, neg);
    };
    auto train = load("data.images", "data.labels");
    if (const std::size_t limit = config.get_uint("data.limit", 0); limit > 0 && limit < train.rows) {
      train.rows = limit;
      train.features.resize(limit * train.cols);
      train.labels->resize(limit);
    }
    ex.data = std::make_shared<Dataset>(std::move(train));
    if (config.has("data.test_images") || config.has("data.test_labels")) {
      ex.test_data = std::make_shared<Dataset>(load("data.test_images", "data.test_labels"));
    }
    ex.model = std::make_shared<LogisticRegressionModel>(ex.data);
  } else {
    throw Error("model: unknown model '" + model + "' (mixture, gaussian_mean, logistic)");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
  return Rng::derive_seed(seed, trial);
}

std::string trial_dir_name(std::size_t trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%03zu", trial);
  return buf;
}

std::shared_ptr<const CorrectionTable> resolve_table(const Config& config) {
  fs::path path;
  if (config.has("test.table")) {
    path = config.get("test.table");
  } else if (const char* env = std::getenv(kTableEnv); env && *env) {
    path = env;
  } else {
    throw Error(std::string("minibatch test needs a correction table: set test.table or ") +
                kTableEnv + " (build one with `mhmb make-correction`)");
  }
  require_file(path, "correction table");
  return std::make_shared<const CorrectionTable>(load_table(path));
}

std::shared_ptr<const AcceptanceTest> build_test(const Config& config) {
  const std::string kind = config.get("test", "minibatch");
  // Parameters of the other tests may stay in the file when --test switches.
  for (const char* k : {"test.m", "test.delta", "test.table", "test.eps", "test.gamma", "test.p",
                        "test.bound_delta"}) {
    config.recognize(k);
  }
  if (kind == "minibatch") {
    BarkerTestConfig c;
    c.batch = config.get_uint("test.m", c.batch);
    c.delta = config.get_double("test.delta", c.delta);
    c.table = resolve_table(config);
    return std::make_shared<MinibatchBarkerTest>(c);
  }
  if (kind == "full_barker") return std::make_shared<FullBarkerTest>();
  if (kind == "full_metropolis") return std::make_shared<FullMetropolisTest>();
  if (kind == "austere_c" || kind == "austere_nc") {
    return std::make_shared<AustereTest>(
        kind == "austere_c" ? AustereVariant::kConservative : AustereVariant::kNonConservative,
        config.get_uint("test.m", 50), config.get_double("test.eps", 0.005));
  }
  if (kind == "mhsublhd") {
    MhSubLhdParams p;
    p.batch = config.get_uint("test.m", p.batch);
    p.gamma = config.get_double("test.gamma", p.gamma);
    p.p = config.get_double("test.p", p.p);
    p.delta = config.get_double("test.bound_delta", p.delta);
    return std::make_shared<MhSubLhdTest>(p);
  }
  throw Error("test: unknown test '" + kind +
              "' (minibatch, full_barker, full_metropolis, austere_c, austere_nc, mhsublhd)");
}

Grid2D read_grid(const Config& config) {
  Grid2D g;
  if (config.has("grid.x")) {
    const auto v = config.get_doubles("grid.x");
    if (v.size() != 2 || !(v[1] > v[0])) throw Error("grid.x: expected lo, hi");
    g.x_lo = v[0];
    g.x_hi = v[1];
  }
  if (config.has("grid.y")) {
    const auto v = config.get_doubles("grid.y");
    if (v.size() != 2 || !(v[1] > v[0])) throw Error("grid.y: expected lo, hi");
    g.y_lo = v[0];
    g.y_hi = v[1];
  }
  if (config.has("grid.bins")) {
    const auto v = config.get_doubles("grid.bins");
    if (v.size() != 2 || !(v[0] >= 1 && v[1] >= 1)) throw Error("grid.bins: expected nx, ny");
    g.nx = static_cast<std::size_t>(v[0]);
    g.ny = static_cast<std::size_t>(v[1]);
  }
  return g;
}

Experiment build_experiment(const Config& config) {
  Experiment ex;
  build_model(config, ex);
  const std::size_t d = ex.model->dimension();

  ChainConfig& c = ex.chain;
  c.samples = config.get_uint("chain.samples");
  c.temperature = config.get_double("chain.temperature", 1.0);
  c.seed = config.get_uint("chain.seed", 0);
  c.initial = config.has("chain.initial") ? config.get_doubles("chain.initial")
                                          : std::vector<double>(d, 0.0);
  if (c.initial.size() == 1 && d > 1) c.initial.assign(d, c.initial[0]);
  c.proposal = read_proposal(config, d);
  c.schedule = read_schedule(config);
  c.test = build_test(config);
  c.validate(*ex.model);

  ex.trials = config.get_uint("chain.trials", 1);
  if (ex.trials == 0) throw Error("chain.trials must be >= 1");
  ex.output_dir = config.get("output.dir", "results");
  ex.grid = read_grid(config);
  ex.burn_in = config.get_uint("metrics.burn_in", 0);
  ex.data_bin_width = config.get_double("metrics.data_bin_width", 0.01);
  return ex;
}

void write_samples_csv(const ChainResult& chain, const fs::path& path) {
  auto out = open_out(path);
  out << "t";
  for (std::size_t k = 0; k < chain.dimension; ++k) out << ",theta" << k;
  out << ",accept,batch,epsilon\n";
  for (std::size_t t = 0; t < chain.size(); ++t) {
    out << t + 1;
    for (double v : chain.sample(t)) out << ',' << format_double(v);
    out << ',' << (chain.accepted[t] ? 1 : 0) << ',' << chain.batch_sizes[t] << ','
        << format_double(chain.epsilons[t]) << '\n';
  }
}

void write_histogram_csv(const ChainSummary& summary, const fs::path& path) {
  auto out = open_out(path);
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t k = 0; k < summary.histogram.size(); ++k) {
    const std::uint64_t lo = std::uint64_t{1} << k;
    out << lo << ',' << 2 * lo << ',' << summary.histogram[k] << '\n';
  }
}

ChainResult read_samples_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header.front() != "t" || header[header.size() - 3] != "accept") {
    throw Error(path.string() + ": not a samples file");
  }
  ChainResult r;
  r.dimension = header.size() - 4;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    }
    try {
      for (std::size_t k = 0; k < r.dimension; ++k) r.samples.push_back(std::stod(cells[1 + k]));
      r.accepted.push_back(cells[1 + r.dimension] == "1");
      r.batch_sizes.push_back(std::stoull(cells[2 + r.dimension]));
      r.epsilons.push_back(std::stod(cells[3 + r.dimension]));
    } catch (const std::exception&) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  return r;
}

RunReport cmd_run(const Config& config, std::ostream& log) {
  Experiment ex = build_experiment(config);
  config.check_all_used();
  fs::create_directories(ex.output_dir);
  open_out(ex.output_dir / "config.cfg") << config.dump();

  RunReport report;
  auto summary = open_out(ex.output_dir / "summary.csv");
  summary << "trial,seed,steps,acceptance_rate,mean_batch,median_batch,p99_batch,max_batch,"
             "total_data,total_side_scan,exhausted_steps\n";
  for (std::size_t trial = 0; trial < ex.trials; ++trial) {
    ChainConfig cc = ex.chain;
    cc.seed = trial_seed(ex.chain.seed, trial);
    log << "trial " << trial << ": " << cc.test->name() << ", " << cc.samples << " samples, N = "
        << ex.model->data_size() << std::endl;
    const ChainResult chain = run_chain(*ex.model, cc);
    const ChainSummary s = summarize(chain);
    const fs::path dir = ex.output_dir / trial_dir_name(trial);
    fs::create_directories(dir);
    write_samples_csv(chain, dir / "samples.csv");
    write_histogram_csv(s, dir / "histogram.csv");
    summary << trial << ',' << cc.seed << ',' << s.steps << ',' << format_double(s.acceptance_rate)
            << ',' << format_double(s.mean_batch) << ',' << format_double(s.median_batch) << ','
            << format_double(s.p99_batch) << ',' << s.max_batch << ',' << s.total_data << ','
            << s.total_side_scan << ',' << s.exhausted_steps << '\n';
    summary.flush();
    log << "  acceptance " << s.acceptance_rate << ", mean batch " << s.mean_batch
        << ", median " << s.median_batch << std::endl;
    if (chain.error) throw Error("trial " + std::to_string(trial) + ": " + *chain.error);
    report.summaries.push_back(s);
  }
  return report;
}

CorrectionBuild cmd_make_correction(const CorrectionRequest& r, std::ostream& log) {
  if (r.out.empty()) throw Error("make-correction: output path required");
  CorrectionBuild build = build_correction(r.sigma, r.lambda, r.half_count, r.half_range);
  save_table(build.table, r.out);
  log << "sigma = " << format_double(r.sigma) << ", lambda = " << format_double(r.lambda)
      << ", N = " << r.half_count << ", V = " << format_double(r.half_range) << "\n"
      << "solver residual (L-inf) = " << format_double(build.solver_residual) << "\n"
      << "table residual (L-inf)  = " << format_double(build.table.linf_residual) << "\n"
      << "variance = " << format_double(build.table.variance()) << "\n"
      << "wrote " << r.out.string() << std::endl;
  return build;
}

void cmd_metrics(const MetricsRequest& r, std::ostream& log) {
  bool want_poisson = false, want_chi2 = false, want_tv = false, want_acc = false;
  for (const auto& m : r.metrics) {
    if (m == "poisson") want_poisson = true;
    else if (m == "chi2") want_chi2 = true;
    else if (m == "tv") want_tv = true;
    else if (m == "accuracy") want_acc = true;
    else throw Error("unknown metric '" + m + "' (poisson, chi2, tv, accuracy)");
  }
  if (r.metrics.empty()) throw Error("no metric selected");
  if (want_tv && !r.reference) throw Error("tv needs a reference results directory");

  const fs::path cfg_path = r.results / "config.cfg";
  require_file(cfg_path, "results");
  Config config = Config::load(cfg_path);
  if (r.test_images) config.set("data.test_images", r.test_images->string());
  if (r.test_labels) config.set("data.test_labels", r.test_labels->string());
  Experiment ex;
  build_model(config, ex);
  const Grid2D grid = r.grid ? *r.grid : read_grid(config);
  const std::size_t burn_in = config.get_uint("metrics.burn_in", 0);

  std::vector<ChainResult> chains;
  for (std::size_t trial = 0;; ++trial) {
    const fs::path p = r.results / trial_dir_name(trial) / "samples.csv";
    if (!fs::exists(p)) break;
    chains.push_back(read_samples_csv(p));
  }
  if (chains.empty()) throw Error("no trial results under " + r.results.string());

  if (want_acc) {
    if (!ex.test_data) throw Error("accuracy needs a test set (data.test_images/test_labels)");
    for (std::size_t trial = 0; trial < chains.size(); ++trial) {
      const auto curve = accuracy_curve(chains[trial], *ex.test_data);
      auto out = open_out(r.results / trial_dir_name(trial) / "accuracy.csv");
      out << "t,cumulative_data,accuracy\n";
      for (std::size_t t = 0; t < curve.size(); ++t) {
        out << t + 1 << ',' << curve[t].cumulative_data << ','
            << format_double(curve[t].accuracy) << '\n';
      }
      log << "trial " << trial << ": final accuracy " << curve.back().accuracy << std::endl;
    }
  }
  if (!(want_poisson || want_chi2 || want_tv)) return;

  const auto* mixture = dynamic_cast<const MixtureModel*>(ex.model.get());
  std::vector<double> probs;
  if (want_poisson || want_chi2) {
    if (!mixture) throw Error("poisson/chi2 are defined for the mixture model only");
    const double width = config.get_double("metrics.data_bin_width", 0.01);
    if (!(width > 0.0)) throw Error("metrics.data_bin_width must be > 0");
    probs = true_bin_probs(
                mixture_log_posterior(*mixture, config.get_double("chain.temperature", 1.0), width),
                grid)
                .p;
  }
  std::vector<std::size_t> reference;
  if (want_tv) {
    reference.assign(grid.bins(), 0);
    for (std::size_t trial = 0;; ++trial) {
      const fs::path p = *r.reference / trial_dir_name(trial) / "samples.csv";
      if (!fs::exists(p)) break;
      const auto c = bin_counts(read_samples_csv(p), grid, burn_in);
      for (std::size_t j = 0; j < c.size(); ++j) reference[j] += c[j];
    }
  }

  auto out = open_out(r.results / "metrics.csv");
  out << "trial,n";
  if (want_poisson) out << ",poisson_loglike";
  if (want_chi2) out << ",chi_squared";
  if (want_poisson || want_chi2) out << ",impossible";
  if (want_tv) out << ",tv";
  out << '\n';
  for (std::size_t trial = 0; trial < chains.size(); ++trial) {
    const auto counts = bin_counts(chains[trial], grid, burn_in);
    double n = 0.0;
    for (auto c : counts) n += static_cast<double>(c);
    out << trial << ',' << format_double(n);
    bool impossible = false;
    if (want_poisson) {
      const auto v = poisson_loglike(counts, probs, n);
      impossible |= v.impossible;
      out << ',' << format_double(v.value);
    }
    if (want_chi2) {
      const auto v = chi_squared(counts, probs, n);
      impossible |= v.impossible;
      out << ',' << format_double(v.value);
    }
    if (want_poisson || want_chi2) out << ',' << (impossible ? 1 : 0);
    if (want_tv) out << ',' << format_double(tv_distance(counts, reference));
    out << '\n';
  }
  log << "wrote " << (r.results / "metrics.csv").string() << std::endl;
}

}  // namespace mhmb
