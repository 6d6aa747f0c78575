#include <gtest/gtest.h>

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "mhmb/dataset.h"
#include "mhmb/stats.h"

using namespace mhmb;

namespace {

std::vector<std::uint8_t> bytes(std::initializer_list<int> xs) {
  std::vector<std::uint8_t> out;
  for (int x : xs) out.push_back(static_cast<std::uint8_t>(x));
  return out;
}

void write_file(const std::filesystem::path& p, const std::vector<std::uint8_t>& data) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

}  // namespace

TEST(Idx, LabelVector) {
  const auto t = parse_idx(bytes({0, 0, 8, 1, 0, 0, 0, 3, 1, 7, 1}));
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{3}));
  EXPECT_EQ(t.data, bytes({1, 7, 1}));
}

TEST(Idx, ImageTensor) {
  const auto t = parse_idx(
      bytes({0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{2, 2, 2}));
  EXPECT_EQ(t.data.size(), 8u);
  EXPECT_EQ(t.data[7], 8);
}

TEST(Idx, Errors) {
  auto message = [](const std::vector<std::uint8_t>& b) {
    try {
      parse_idx(b);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(bytes({0, 0, 8, 1, 0, 0, 0, 3, 1, 7})).find("truncated"), std::string::npos);
  EXPECT_NE(message(bytes({0, 0, 8, 2, 0, 0, 0, 1, 1})).find("bad magic"), std::string::npos);
  EXPECT_NE(message(bytes({0, 0, 8, 3, 0, 0, 0, 2})).find("truncated"), std::string::npos);
  EXPECT_NE(message(bytes({0, 0, 8, 1, 0, 0, 0, 1, 1, 2})).find("trailing"), std::string::npos);
  EXPECT_NE(message(bytes({0, 0, 8, 3, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0, 0, 1, 0}))
                .find("overflow"),
            std::string::npos);
}

TEST(Idx, RoundTripRandomTensors) {
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    IdxTensor t;
    if (k % 2) {
      t.dims = {static_cast<std::uint32_t>(1 + rng.below(5)), static_cast<std::uint32_t>(1 + rng.below(4)),
                static_cast<std::uint32_t>(1 + rng.below(4))};
    } else {
      t.dims = {static_cast<std::uint32_t>(rng.below(50))};
    }
    std::size_t n = 1;
    for (auto d : t.dims) n *= d;
    t.data.resize(n);
    for (auto& b : t.data) b = static_cast<std::uint8_t>(rng.below(256));
    const auto back = parse_idx(write_idx(t));
    EXPECT_EQ(back.dims, t.dims);
    EXPECT_EQ(back.data, t.data);
  }
}

TEST(Idx, GzipIsTransparent) {
  IdxTensor t{{4}, {9, 8, 7, 6}};
  const auto raw = write_idx(t);
  uLongf cap = compressBound(raw.size()) + 32;
  std::vector<std::uint8_t> gz(cap);
  z_stream zs{};
  ASSERT_EQ(deflateInit2(&zs, 6, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY), Z_OK);
  zs.next_in = const_cast<Bytef*>(raw.data());
  zs.avail_in = static_cast<uInt>(raw.size());
  zs.next_out = gz.data();
  zs.avail_out = static_cast<uInt>(gz.size());
  ASSERT_EQ(deflate(&zs, Z_FINISH), Z_STREAM_END);
  gz.resize(zs.total_out);
  deflateEnd(&zs);

  const auto dir = std::filesystem::temp_directory_path();
  write_file(dir / "mhmb_plain.idx", raw);
  write_file(dir / "mhmb_gz.idx.gz", gz);
  EXPECT_EQ(load_idx(dir / "mhmb_plain.idx").data, t.data);
  EXPECT_EQ(load_idx(dir / "mhmb_gz.idx.gz").data, t.data);
  std::filesystem::remove(dir / "mhmb_plain.idx");
  std::filesystem::remove(dir / "mhmb_gz.idx.gz");
}

TEST(Mnist, BinarySubset) {
  IdxTensor images{{4, 1, 2}, {0, 0, 255, 255, 51, 102, 9, 9}};
  IdxTensor labels{{4}, {0, 1, 7, 9}};
  const auto d = mnist_binary_subset(images, labels);
  ASSERT_EQ(d.rows, 2u);
  EXPECT_EQ(d.cols, 2u);
  EXPECT_EQ(*d.labels, (std::vector<int>{-1, 1}));
  EXPECT_EQ(d.row(0)[0], 1.0);
  EXPECT_EQ(d.row(0)[1], 1.0);
  EXPECT_DOUBLE_EQ(d.row(1)[0], 0.2);
  EXPECT_DOUBLE_EQ(d.row(1)[1], 0.4);
}

TEST(Mnist, CountMismatchFails) {
  IdxTensor images{{2, 1, 1}, {0, 0}};
  IdxTensor labels{{3}, {1, 7, 1}};
  EXPECT_THROW(mnist_binary_subset(images, labels), Error);
}

TEST(Generate, MixtureMoments) {
  const auto d = generate_mixture_data(1000000, 0.0, 1.0, 3);
  double mean = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) mean += d.scalar(i);
  mean /= d.size();
  EXPECT_NEAR(mean, 0.5, 3.0 * std::sqrt(2.25 / 1e6));
}

TEST(Generate, DegenerateMixtureIsNormal) {
  const auto d = generate_mixture_data(200000, 0.0, 0.0, 4);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    s += d.scalar(i);
    s2 += d.scalar(i) * d.scalar(i);
  }
  const double mean = s / d.size();
  EXPECT_NEAR(s2 / d.size() - mean * mean, 2.0, 0.02);
}

TEST(Generate, Deterministic) {
  EXPECT_EQ(generate_mixture_data(1000, 0.0, 1.0, 5).features,
            generate_mixture_data(1000, 0.0, 1.0, 5).features);
  EXPECT_NE(generate_mixture_data(1000, 0.0, 1.0, 5).features,
            generate_mixture_data(1000, 0.0, 1.0, 6).features);
  EXPECT_EQ(generate_gaussian_data(100, 1.0, 7).features,
            generate_gaussian_data(100, 1.0, 7).features);
}

TEST(Minibatch, FullDrawIsPermutation) {
  Rng rng(1);
  auto idx = draw_minibatch(50, 50, rng);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(idx[i], i);
}

TEST(Minibatch, ExclusionGivesDisjointSets) {
  Rng rng(2);
  const auto a = draw_minibatch(100, 30, rng);
  const std::unordered_set<std::size_t> ex(a.begin(), a.end());
  const auto b = draw_minibatch(100, 70, rng, ex);
  std::set<std::size_t> all(a.begin(), a.end());
  for (auto i : b) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 100u);
  EXPECT_THROW(draw_minibatch(100, 71, rng, ex), Error);
}

TEST(Minibatch, Uniform) {
  Rng rng(3);
  std::vector<int> hits(10, 0);
  const int n = 100000;
  for (int k = 0; k < n; ++k) ++hits[draw_minibatch(10, 1, rng)[0]];
  const double se = std::sqrt(0.1 * 0.9 / n);
  for (int h : hits) EXPECT_NEAR(h / double(n), 0.1, 3.0 * se);
}

TEST(Sampler, IncrementalDrawsAreDistinct) {
  MinibatchSampler s(1000);
  Rng rng(4);
  for (int round = 0; round < 3; ++round) {
    s.reset();
    std::set<std::size_t> seen;
    while (s.remaining() > 0) {
      for (auto i : s.next(std::min<std::size_t>(64, s.remaining()), rng)) {
        EXPECT_TRUE(seen.insert(i).second);
      }
    }
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_THROW(s.next(1, rng), Error);
  }
}

TEST(Sampler, DrawDependsOnRngAlone) {
  MinibatchSampler s(500), fresh(500);
  Rng warm(9);
  s.next(300, warm);
  s.reset();
  Rng a(5), b(5);
  const auto x = s.next(40, a);
  const auto y = fresh.next(40, b);
  EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
}
