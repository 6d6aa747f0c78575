#include "mhmb/dataset.h"

#include <zlib.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "mhmb/stats.h"

namespace mhmb {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t x) {
  out.push_back(static_cast<std::uint8_t>(x >> 24));
  out.push_back(static_cast<std::uint8_t>(x >> 16));
  out.push_back(static_cast<std::uint8_t>(x >> 8));
  out.push_back(static_cast<std::uint8_t>(x));
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error("gzip: inflateInit failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::uint8_t chunk[1 << 16];
  int rc = Z_OK;
  do {
    zs.next_out = chunk;
    zs.avail_out = sizeof chunk;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error("gzip: corrupt stream");
    }
    out.insert(out.end(), chunk, chunk + (sizeof chunk - zs.avail_out));
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error("gzip: truncated stream");
  return out;
}

}  // namespace

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error("idx: truncated header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != 0x00000801u && magic != 0x00000803u) throw Error("idx: bad magic");
  const std::size_t ndims = magic & 0xffu;
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) throw Error("idx: truncated header");

  IdxTensor t;
  std::uint64_t total = 1;
  for (std::size_t k = 0; k < ndims; ++k) {
    const std::uint32_t d = read_be32(bytes, 4 + 4 * k);
    t.dims.push_back(d);
    total *= d;
    if (total > (std::uint64_t{1} << 40)) throw Error("idx: dimension overflow");
  }
  const std::size_t payload = bytes.size() - header;
  if (payload < total) throw Error("idx: truncated payload");
  if (payload > total) throw Error("idx: trailing bytes after payload");
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

std::vector<std::uint8_t> write_idx(const IdxTensor& t) {
  if (t.dims.size() != 1 && t.dims.size() != 3) {
    throw Error("idx: only 1-D and 3-D tensors are supported");
  }
  std::vector<std::uint8_t> out;
  write_be32(out, 0x00000800u | static_cast<std::uint32_t>(t.dims.size()));
  for (std::uint32_t d : t.dims) write_be32(out, d);
  out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes);
  return bytes;
}

IdxTensor load_idx(const std::filesystem::path& path) {
  return parse_idx(read_file_bytes(path));
}

Dataset mnist_binary_subset(const IdxTensor& images, const IdxTensor& labels,
                            int pos_digit, int neg_digit) {
  if (images.dims.size() != 3 || labels.dims.size() != 1) {
    throw Error("mnist: expected 3-D images and 1-D labels");
  }
  if (images.dims[0] != labels.dims[0]) throw Error("mnist: image/label count mismatch");
  const std::size_t d = std::size_t{images.dims[1]} * images.dims[2];

  Dataset out;
  out.cols = d;
  out.labels.emplace();
  for (std::size_t i = 0; i < labels.dims[0]; ++i) {
    const int label = labels.data[i];
    if (label != pos_digit && label != neg_digit) continue;
    const std::uint8_t* px = images.data.data() + i * d;
    for (std::size_t k = 0; k < d; ++k) out.features.push_back(px[k] / 255.0);
    out.labels->push_back(label == pos_digit ? 1 : -1);
    ++out.rows;
  }
  out.provenance = "mnist " + std::to_string(pos_digit) + "-vs-" + std::to_string(neg_digit);
  return out;
}

Dataset generate_mixture_data(std::size_t n, double theta1, double theta2,
                              std::uint64_t seed) {
  if (n == 0) throw Error("generate_mixture_data: n must be >= 1");
  Rng rng(seed);
  Dataset out;
  out.rows = n;
  out.cols = 1;
  out.features.resize(n);
  const double sd = std::sqrt(2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double centre = rng.uniform() < 0.5 ? theta1 : theta1 + theta2;
    out.features[i] = centre + sd * rng.normal();
  }
  out.provenance = "mixture seed=" + std::to_string(seed);
  return out;
}

Dataset generate_gaussian_data(std::size_t n, double mean, std::uint64_t seed) {
  if (n == 0) throw Error("generate_gaussian_data: n must be >= 1");
  Rng rng(seed);
  Dataset out;
  out.rows = n;
  out.cols = 1;
  out.features.resize(n);
  for (double& x : out.features) x = mean + rng.normal();
  out.provenance = "gaussian seed=" + std::to_string(seed);
  return out;
}

std::vector<std::size_t> draw_minibatch(std::size_t n, std::size_t b, Rng& rng,
                                        const std::unordered_set<std::size_t>& exclude) {
  std::size_t excluded = 0;
  for (std::size_t e : exclude) excluded += e < n ? 1 : 0;
  if (b + excluded > n) throw Error("draw_minibatch: insufficient remaining data");

  std::vector<std::size_t> pool;
  pool.reserve(n - excluded);
  for (std::size_t i = 0; i < n; ++i) {
    if (!exclude.contains(i)) pool.push_back(i);
  }
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t j = k + rng.below(pool.size() - k);
    std::swap(pool[k], pool[j]);
  }
  pool.resize(b);
  return pool;
}

MinibatchSampler::MinibatchSampler(std::size_t n) : perm_(n) {
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
}

void MinibatchSampler::reset() {
  for (std::size_t k = used_; k-- > 0;) std::swap(perm_[k], perm_[swapped_with_[k]]);
  swapped_with_.clear();
  used_ = 0;
}

std::span<const std::size_t> MinibatchSampler::next(std::size_t b, Rng& rng) {
  if (b > remaining()) throw Error("draw_minibatch: insufficient remaining data");
  const std::size_t n = perm_.size();
  for (std::size_t k = used_; k < used_ + b; ++k) {
    const std::size_t j = k + rng.below(n - k);
    std::swap(perm_[k], perm_[j]);
    swapped_with_.push_back(j);
  }
  const std::span<const std::size_t> out(perm_.data() + used_, b);
  used_ += b;
  return out;
}

}  // namespace mhmb
