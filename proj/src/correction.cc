#include "mhmb/correction.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mhmb/stats.h"

namespace mhmb {
namespace {

constexpr double kMassTolerance = 1e-9;

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_real(std::string_view s, std::string_view what) {
  // strtod accepts the %.17g output exactly, including inf/nan spellings.
  std::string tmp(s);
  char* end = nullptr;
  const double x = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw Error("correction table: malformed " + std::string(what) + " '" + tmp + "'");
  }
  return x;
}

}  // namespace

ConvolutionSystem build_system(double sigma, int half_count, double half_range) {
  const double max_sigma = std::sqrt(kLogisticVariance);
  if (!(sigma > 0.0) || !(sigma < max_sigma)) {
    throw Error("no variance left for correction: sigma must lie in (0, " +
                format_real(max_sigma) + "), got " + format_real(sigma));
  }
  if (half_count < 1) throw Error("build_system: N must be positive");
  if (!(half_range > 0.0)) throw Error("build_system: V must be positive");

  ConvolutionSystem sys;
  sys.spacing = half_range / half_count;
  const Eigen::Index rows = 4 * static_cast<Eigen::Index>(half_count) + 1;
  const Eigen::Index cols = 2 * static_cast<Eigen::Index>(half_count) + 1;
  sys.matrix.resize(rows, cols);
  sys.target.resize(rows);

  // M(i, j) depends on i - j only; tabulate Phi once per offset.
  std::vector<double> phi(rows + cols - 1);
  const Eigen::Index offset0 = -(cols - 1);
  for (std::size_t k = 0; k < phi.size(); ++k) {
    // X_i - Y_j = (i - 2N - (j - N)) h = (i - j - N) h.
    const double diff =
        static_cast<double>(offset0 + static_cast<Eigen::Index>(k) - half_count) *
        sys.spacing;
    phi[k] = normal_cdf(diff / sigma);
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      sys.matrix(i, j) = phi[static_cast<std::size_t>(i - j - offset0)];
    }
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double x = static_cast<double>(i - 2 * half_count) * sys.spacing;
    sys.target(i) = logistic_cdf(x);
  }
  return sys;
}

namespace {

Eigen::MatrixXd gram(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m.cols(), m.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
  return g;
}

Eigen::VectorXd cholesky_solve(Eigen::MatrixXd& a, const Eigen::VectorXd& rhs,
                               double lambda) {
  a.diagonal().array() += lambda;
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error("solve_ridge: normal-equations matrix is not positive definite "
                "at lambda=" + format_real(lambda) + "; retry with lambda > 0");
  }
  Eigen::VectorXd u = llt.solve(rhs);
  if (!u.allFinite()) {
    throw Error("solve_ridge: non-finite solution at lambda=" + format_real(lambda));
  }
  return u;
}

}  // namespace

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& m, const Eigen::VectorXd& v,
                            double lambda) {
  if (m.rows() != v.size()) throw Error("solve_ridge: dimension mismatch");
  if (!(lambda >= 0.0)) throw Error("solve_ridge: lambda must be >= 0");
  Eigen::MatrixXd a = gram(m);
  return cholesky_solve(a, m.transpose() * v, lambda);
}

std::vector<Eigen::VectorXd> solve_ridge_path(const Eigen::MatrixXd& m,
                                              const Eigen::VectorXd& v,
                                              std::span<const double> lambdas) {
  if (m.rows() != v.size()) throw Error("solve_ridge: dimension mismatch");
  const Eigen::MatrixXd g = gram(m);
  const Eigen::VectorXd rhs = m.transpose() * v;
  std::vector<Eigen::VectorXd> out;
  out.reserve(lambdas.size());
  Eigen::MatrixXd work;
  for (double lambda : lambdas) {
    if (!(lambda >= 0.0)) throw Error("solve_ridge: lambda must be >= 0");
    work = g;
    out.push_back(cholesky_solve(work, rhs, lambda));
  }
  return out;
}

double linf_residual(const Eigen::MatrixXd& m, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& v, double h) {
  if (m.cols() != u.size() || m.rows() != v.size()) {
    throw Error("linf_residual: dimension mismatch");
  }
  const Eigen::VectorXd r = h * (m * u) - v;
  return r.cwiseAbs().maxCoeff();
}

double CorrectionTable::mean() const {
  double s = 0.0;
  for (std::size_t j = 0; j < density.size(); ++j) s += y(j) * density[j];
  return s * spacing();
}

double CorrectionTable::variance() const {
  const double mu = mean();
  double s = 0.0;
  for (std::size_t j = 0; j < density.size(); ++j) {
    const double d = y(j) - mu;
    s += d * d * density[j];
  }
  return s * spacing();
}

std::vector<double> cell_cdf(std::span<const double> density, double h) {
  std::vector<double> cdf(density.size() + 1, 0.0);
  for (std::size_t j = 0; j < density.size(); ++j) {
    cdf[j + 1] = cdf[j] + h * density[j];
  }
  for (double& c : cdf) c = std::min(c, 1.0);
  return cdf;
}

CorrectionTable finalize_density(std::span<const double> u, double h) {
  if (u.size() % 2 == 0) throw Error("finalize_density: expected odd length 2N+1");
  if (!(h > 0.0)) throw Error("finalize_density: spacing must be positive");
  const std::size_t n = u.size();
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = std::max(0.0, 0.5 * (u[j] + u[n - 1 - j]));
  }
  const double mass = h * std::accumulate(d.begin(), d.end(), 0.0);
  if (!(mass > 0.0)) throw Error("finalize_density: no positive mass to normalize");
  for (double& x : d) x /= mass;

  CorrectionTable t;
  t.half_count = static_cast<int>((n - 1) / 2);
  t.half_range = h * t.half_count;
  t.density = std::move(d);
  t.cdf = cell_cdf(t.density, h);
  return t;
}

CorrectionBuild build_correction(double sigma, double lambda, int half_count,
                                 double half_range) {
  const ConvolutionSystem sys = build_system(sigma, half_count, half_range);
  const Eigen::VectorXd mass = solve_ridge(sys.matrix, sys.target, lambda);

  CorrectionBuild out;
  out.solver_residual = linf_residual(sys.matrix, mass, sys.target, 1.0);
  const Eigen::VectorXd density = mass / sys.spacing;
  out.table = finalize_density(std::span<const double>(density.data(), density.size()),
                               sys.spacing);
  out.table.sigma = sigma;
  out.table.lambda = lambda;
  out.table.half_count = half_count;
  out.table.half_range = half_range;
  const Eigen::Map<const Eigen::VectorXd> stored(out.table.density.data(),
                                                 out.table.density.size());
  out.table.linf_residual = linf_residual(sys.matrix, stored, sys.target, sys.spacing);
  return out;
}

double recompute_residual(const CorrectionTable& table) {
  const ConvolutionSystem sys =
      build_system(table.sigma, table.half_count, table.half_range);
  const Eigen::Map<const Eigen::VectorXd> stored(table.density.data(),
                                                 table.density.size());
  return linf_residual(sys.matrix, stored, sys.target, sys.spacing);
}

double correction_quantile(const CorrectionTable& table, double uniform) {
  const auto& cdf = table.cdf;
  const double h = table.spacing();
  // Cell k spans [Y_k - h/2, Y_k + h/2] and cdf[k] .. cdf[k+1].
  auto it = std::upper_bound(cdf.begin(), cdf.end(), uniform);
  if (it == cdf.begin()) return -table.half_range;
  if (it == cdf.end()) return table.half_range;
  const std::size_t k = static_cast<std::size_t>(it - cdf.begin()) - 1;
  const double lo = cdf[k];
  const double hi = cdf[k + 1];
  const double left = table.y(k) - 0.5 * h;
  const double x = hi > lo ? left + h * (uniform - lo) / (hi - lo) : left;
  return std::clamp(x, -table.half_range, table.half_range);
}

double sample_correction(const CorrectionTable& table, Rng& rng) {
  return correction_quantile(table, rng.uniform());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string serialize_table(const CorrectionTable& table) {
  std::string body;
  body.reserve(table.density.size() * 26 + 200);
  body += "sigma=" + format_real(table.sigma) + "\n";
  body += "lambda=" + format_real(table.lambda) + "\n";
  body += "N=" + std::to_string(table.half_count) + "\n";
  body += "V=" + format_real(table.half_range) + "\n";
  body += "residual=" + format_real(table.linf_residual) + "\n";
  for (double d : table.density) body += format_real(d) + "\n";
  char sum[40];
  std::snprintf(sum, sizeof sum, "checksum=%016llx\n",
                static_cast<unsigned long long>(fnv1a64(body)));
  return body + sum;
}

void check_table(const CorrectionTable& t) {
  if (t.half_count < 1 || !(t.half_range > 0.0)) {
    throw Error("correction table: invariant violated (grid)");
  }
  if (t.density.size() != 2 * static_cast<std::size_t>(t.half_count) + 1 ||
      t.cdf.size() != t.density.size() + 1) {
    throw Error("correction table: invariant violated (length)");
  }
  double sum = 0.0;
  for (double d : t.density) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw Error("correction table: invariant violated (negative density)");
    }
    sum += d;
  }
  if (std::abs(sum * t.spacing() - 1.0) > kMassTolerance) {
    throw Error("correction table: invariant violated (mass)");
  }
  if (t.cdf.front() != 0.0 || std::abs(t.cdf.back() - 1.0) > kMassTolerance ||
      !std::is_sorted(t.cdf.begin(), t.cdf.end())) {
    throw Error("correction table: invariant violated (cdf)");
  }
}

CorrectionTable parse_table(std::string_view text) {
  const std::size_t pos = text.rfind("checksum=");
  if (pos == std::string_view::npos || (pos > 0 && text[pos - 1] != '\n')) {
    throw Error("correction table: missing checksum line (truncated file?)");
  }
  const std::string_view body = text.substr(0, pos);
  std::string_view hex = text.substr(pos + 9);
  while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r')) hex.remove_suffix(1);
  std::uint64_t expected = 0;
  auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), expected, 16);
  if (ec != std::errc() || ptr != hex.data() + hex.size() || hex.empty()) {
    throw Error("correction table: malformed checksum");
  }
  if (expected != fnv1a64(body)) throw Error("correction table: checksum mismatch");

  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < body.size();) {
    const std::size_t end = body.find('\n', start);
    if (end == std::string_view::npos) throw Error("correction table: malformed line ending");
    lines.push_back(body.substr(start, end - start));
    start = end + 1;
  }
  const char* keys[] = {"sigma=", "lambda=", "N=", "V=", "residual="};
  if (lines.size() < 5) throw Error("correction table: malformed header");
  std::string_view vals[5];
  for (int k = 0; k < 5; ++k) {
    const std::string_view key = keys[k];
    if (lines[k].substr(0, key.size()) != key) {
      throw Error("correction table: malformed header, expected '" + std::string(key) + "'");
    }
    vals[k] = lines[k].substr(key.size());
  }
  CorrectionTable t;
  t.sigma = parse_real(vals[0], "sigma");
  t.lambda = parse_real(vals[1], "lambda");
  {
    int n = 0;
    auto r = std::from_chars(vals[2].data(), vals[2].data() + vals[2].size(), n);
    if (r.ec != std::errc() || r.ptr != vals[2].data() + vals[2].size()) {
      throw Error("correction table: malformed N");
    }
    t.half_count = n;
  }
  t.half_range = parse_real(vals[3], "V");
  t.linf_residual = parse_real(vals[4], "residual");
  if (t.half_count < 1) throw Error("correction table: invariant violated (N)");
  const std::size_t expected_len = 2 * static_cast<std::size_t>(t.half_count) + 1;
  if (lines.size() - 5 != expected_len) {
    throw Error("correction table: expected " + std::to_string(expected_len) +
                " density values, found " + std::to_string(lines.size() - 5));
  }
  t.density.reserve(expected_len);
  for (std::size_t k = 5; k < lines.size(); ++k) {
    t.density.push_back(parse_real(lines[k], "density"));
  }
  for (double d : t.density) {
    if (!(d >= 0.0)) throw Error("correction table: invariant violated (negative density)");
  }
  t.cdf = cell_cdf(t.density, t.spacing());
  check_table(t);
  return t;
}

void save_table(const CorrectionTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  const std::string text = serialize_table(table);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

CorrectionTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open correction table '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_table(ss.str());
}

}  // namespace mhmb
