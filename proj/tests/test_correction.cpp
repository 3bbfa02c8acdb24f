#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "helpers.hpp"
#include "topoaug/cct.hpp"
#include "topoaug/correction.hpp"
#include "topoaug/phantom.hpp"

using namespace topoaug;

namespace {

using fixture::ball;
using fixture::blurred_septum;
using fixture::solid_torus;

BinaryMask single(Dims d, Index3 p) {
  BinaryMask m(d);
  m.at(p) = 1;
  return m;
}

} // namespace

TEST(CorrectionParams, ThresholdInsideUnitInterval) {
  CorrectionParams p;
  p.threshold = 0.0;
  EXPECT_THROW(p.validate(), DataError);
  p.threshold = 1.0;
  EXPECT_THROW(p.validate(), DataError);
  p.threshold = 0.3;
  EXPECT_NO_THROW(p.validate());
}

TEST(FastMarching, HardBallFromCentre) {
  const Dims d{21, 21, 21};
  const BinaryMask b = ball(d, 7.5);
  for (auto dir : {CorrectionDirection::Grow, CorrectionDirection::Shrink, CorrectionDirection::Auto}) {
    CorrectionParams params;
    params.direction = dir;
    EXPECT_EQ(fast_marching_correct(to_scalar(b), single(d, {10, 10, 10}), params), b);
  }
}

TEST(FastMarching, TorusCutToBall) {
  const Dims d{32, 32, 16};
  const BinaryMask t = solid_torus(d, 9, 3.5);
  ASSERT_EQ(betti_numbers(t), (TopologySignature{1, 1, 0, 0}));
  CorrectionParams params;
  const BinaryMask templ = single(d, {static_cast<int>(15.5 + 9), 15, 7});
  ASSERT_EQ(t.at(24, 15, 7), 1);
  const BinaryMask out = fast_marching_correct(to_scalar(t), templ, params);
  EXPECT_EQ(betti_numbers(out), (TopologySignature{1, 0, 0, 1}));
  EXPECT_TRUE(is_subset(out, t));
  // the cut is small relative to the torus
  const CorrectionDiff diff = correction_diff(t, out);
  EXPECT_EQ(diff.added, 0u);
  EXPECT_GT(diff.removed, 0u);
  EXPECT_LT(diff.fraction_changed, 0.1);
}

TEST(FastMarching, BlurredSeptumKeepsTemplateTopology) {
  PhantomSpec spec;
  spec.kind = PhantomKind::TwoChamberOneChannel;
  spec.dims = {48, 48, 48};
  spec.wall_thickness_vox = 1;
  const Phantom p = generate_phantom(spec);
  const CctTemplate templ = derive_cct_template(p.labels, p.schema);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ScalarVolume s = blurred_septum(p, seed);
    const BinaryMask naive = threshold_at_least(s, 0.5);
    const BinaryMask out = fast_marching_correct(s, templ.mask, {});
    EXPECT_EQ(betti_numbers(out), templ.signature);
    EXPECT_EQ(betti_numbers(out), p.expected);
    // the naive threshold leaks through the septum, the correction does not
    EXPECT_NE(betti_numbers(naive), p.expected) << "seed " << seed;
  }
}

TEST(FastMarching, ConsistentInputUnchangedAtThreshold) {
  PhantomSpec spec;
  spec.kind = PhantomKind::TwoChamberTwoChannel;
  spec.dims = {48, 48, 48};
  const Phantom p = generate_phantom(spec);
  const CctTemplate templ = derive_cct_template(p.labels, p.schema);
  const BinaryMask pool = bloodpool_mask(p.labels, p.schema);
  ASSERT_EQ(betti_numbers(pool), templ.signature);
  for (auto dir : {CorrectionDirection::Grow, CorrectionDirection::Shrink, CorrectionDirection::Auto}) {
    CorrectionParams params;
    params.direction = dir;
    EXPECT_EQ(fast_marching_correct(to_scalar(pool), templ.mask, params), pool);
  }
}

TEST(FastMarching, ShrinkFillsUnwantedCavity) {
  const BinaryMask shell = testutil::hollow_cube(7);
  const Dims d = shell.dims();
  CorrectionParams params;
  params.direction = CorrectionDirection::Shrink;
  ScalarVolume s = to_scalar(shell);
  s.at(4, 4, 4) = 0.2; // cavity, reachable with scalar > 0
  const BinaryMask out = fast_marching_correct(s, single(d, {1, 1, 1}), params);
  EXPECT_EQ(betti_numbers(out), (TopologySignature{1, 0, 0, 1}));
  EXPECT_EQ(out.at(4, 4, 4), 1);
}

TEST(FastMarching, TemplateVoxelsAlwaysIncluded) {
  const Dims d{9, 9, 9};
  ScalarVolume s(d, Spacing{}, 0.0);
  const BinaryMask templ = single(d, {4, 4, 4});
  const BinaryMask out = fast_marching_correct(s, templ, {});
  EXPECT_EQ(out, templ);
}

TEST(FastMarching, Errors) {
  const Dims d{5, 5, 5};
  EXPECT_THROW(fast_marching_correct(ScalarVolume(d), BinaryMask(d), {}), DataError);
  EXPECT_THROW(fast_marching_correct(ScalarVolume(Dims{4, 5, 5}), single(d, {1, 1, 1}), {}),
               DimensionError);
}

TEST(FastMarching, RandomProbabilityMapsMatchTemplateSignature) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Dims d{14, 14, 14};
  const BinaryMask ring = solid_torus(d, 4, 1.6);
  BinaryMask t = topological_erosion(ring);
  ASSERT_EQ(betti_numbers(t), (TopologySignature{1, 1, 0, 0}));
  for (int k = 0; k < 10; ++k) {
    ScalarVolume s(d);
    for (auto &v : s.data()) v = u(rng);
    for (auto dir : {CorrectionDirection::Grow, CorrectionDirection::Shrink, CorrectionDirection::Auto}) {
      CorrectionParams params;
      params.direction = dir;
      params.conn = k % 2 ? ConnectivityPair::fg6() : ConnectivityPair::fg26();
      const BinaryMask out = fast_marching_correct(s, t, params);
      ASSERT_EQ(betti_numbers(out, params.conn), betti_numbers(t, params.conn));
      ASSERT_TRUE(is_subset(t, out));
    }
  }
}

TEST(FastMarching, GrowAcceptsOnlyAboveThreshold) {
  const Dims d{12, 12, 12};
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScalarVolume s(d);
  for (auto &v : s.data()) v = u(rng);
  const BinaryMask templ = single(d, {6, 6, 6});
  const BinaryMask out = fast_marching_correct(s, templ, {});
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] && !templ[i]) {
      ASSERT_GE(s[i], 0.5);
    }
  }
}

TEST(CorrectionDiff, IdenticalMasks) {
  const BinaryMask m = testutil::cube(3);
  const CorrectionDiff d = correction_diff(m, m);
  EXPECT_EQ(d.added, 0u);
  EXPECT_EQ(d.removed, 0u);
  EXPECT_EQ(d.fraction_changed, 0.0);
}

TEST(CorrectionDiff, OneVoxelAdded) {
  const BinaryMask m = testutil::cube(3);
  BinaryMask after = m;
  after.at(0, 0, 0) = 1;
  const CorrectionDiff d = correction_diff(m, after);
  EXPECT_EQ(d.added, 1u);
  EXPECT_EQ(d.removed, 0u);
  EXPECT_DOUBLE_EQ(d.fraction_changed, 1.0 / 27.0);
}

TEST(CorrectionDiff, MatchesXorPopcount) {
  PhantomSpec spec;
  spec.kind = PhantomKind::TwoChamberOneChannel;
  spec.dims = {48, 48, 48};
  spec.wall_thickness_vox = 1;
  const Phantom p = generate_phantom(spec);
  const CctTemplate templ = derive_cct_template(p.labels, p.schema);
  const ScalarVolume s = blurred_septum(p, 3);
  const BinaryMask before = threshold_at_least(s, 0.5);
  const BinaryMask after = fast_marching_correct(s, templ.mask, {});
  std::size_t x = 0, base = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    x += (before[i] != 0) != (after[i] != 0);
    base += before[i] != 0;
  }
  const CorrectionDiff d = correction_diff(before, after);
  EXPECT_EQ(d.added + d.removed, x);
  EXPECT_DOUBLE_EQ(d.fraction_changed, static_cast<double>(x) / static_cast<double>(base));
  EXPECT_GT(x, 0u);
}

TEST(CorrectionDiff, DimsMismatch) {
  EXPECT_THROW(correction_diff(BinaryMask(Dims{2, 2, 2}), BinaryMask(Dims{2, 2, 3})),
               DimensionError);
}
