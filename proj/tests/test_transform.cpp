#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "topoaug/phantom.hpp"
#include "topoaug/topology.hpp"
#include "topoaug/transform.hpp"

using namespace topoaug;

namespace {

ScalarVolume random_volume(Dims d, std::uint64_t seed) {
  ScalarVolume v(d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto &x : v.data()) x = u(rng);
  return v;
}

double mean_of(const ScalarVolume &v) {
  double s = 0;
  for (double x : v.data()) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(const ScalarVolume &v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v.data()) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

SpatialTransform translation(Vec3 mm, Dims d) {
  TransformParams p;
  p.translation_mm = mm;
  return make_transform(p, d, Spacing{});
}

// Pearson chi-square over `bins` equal bins of [lo, hi].
double chi_square(const std::vector<double> &xs, double lo, double hi, int bins,
                  std::vector<int> &counts) {
  counts.assign(bins, 0);
  for (double x : xs) {
    int b = static_cast<int>((x - lo) / (hi - lo) * bins);
    counts[std::clamp(b, 0, bins - 1)]++;
  }
  const double e = static_cast<double>(xs.size()) / bins;
  double chi = 0;
  for (int c : counts) chi += (c - e) * (c - e) / e;
  return chi;
}

} // namespace

TEST(SampleTransform, ZeroRangesGiveIdentity) {
  const Dims d{16, 16, 16};
  const SpatialTransform t = sample_transform(AugmentationSpec::identity(9), 3, d, Spacing{});
  EXPECT_EQ(t.pullback(), identity4());
  EXPECT_FALSE(t.displacement().has_value());
  const ScalarVolume v = random_volume(d, 1);
  EXPECT_EQ(resample_trilinear(v, t), v);
}

TEST(SampleTransform, DeterministicInSeedAndIndex) {
  const Dims d{32, 32, 32};
  AugmentationSpec spec;
  spec.seed = 77;
  EXPECT_EQ(sample_transform(spec, 5, d, Spacing{}), sample_transform(spec, 5, d, Spacing{}));
  EXPECT_NE(sample_transform(spec, 5, d, Spacing{}).params(),
            sample_transform(spec, 6, d, Spacing{}).params());
  AugmentationSpec other = spec;
  other.seed = 78;
  EXPECT_NE(sample_transform(spec, 5, d, Spacing{}).params(),
            sample_transform(other, 5, d, Spacing{}).params());
}

TEST(SampleTransform, ParametersWithinRanges) {
  const Dims d{32, 32, 32};
  AugmentationSpec spec;
  spec.seed = 3;
  spec.translation_range_mm = {2, 2, 2};
  for (std::uint64_t i = 0; i < 200; ++i) {
    const SpatialTransform t = sample_transform(spec, i, d, Spacing{});
    const TransformParams &p = t.params();
    for (int a = 0; a < 3; ++a) {
      ASSERT_LE(std::abs(p.rotation_deg[a]), 10.0);
      ASSERT_GE(p.scale[a], 0.9);
      ASSERT_LE(p.scale[a], 1.1);
      ASSERT_LE(std::abs(p.translation_mm[a]), 2.0);
    }
    ASSERT_LE(p.max_displacement_mm, 3.0 + 1e-12);
    for (const Vec3 &v : t.displacement()->vectors()) {
      ASSERT_LE(std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]), 3.0 + 1e-12);
    }
    ASSERT_TRUE(t.invertible());
  }
}

TEST(SampleTransform, HistogramsAreUniform) {
  // Uniform within 5% per bin at this sample size is a statement about the
  // expected counts, so both the per-bin deviation (with a 4 sigma allowance)
  // and a chi-square test on 9 degrees of freedom are checked.
  const Dims d{16, 16, 16};
  AugmentationSpec spec;
  spec.seed = 2024;
  spec.deformation.max_displacement_vox = 0.0;
  const int n = 1000, bins = 10;
  std::vector<double> rot, scale;
  for (int i = 0; i < n; ++i) {
    const TransformParams p = sample_transform(spec, i, d, Spacing{}).params();
    rot.push_back(p.rotation_deg[0]);
    scale.push_back(p.scale[1]);
  }
  std::vector<int> counts;
  const double expected = static_cast<double>(n) / bins;
  const double sigma = std::sqrt(expected * (1.0 - 1.0 / bins));
  for (auto *xs : {&rot, &scale}) {
    const bool is_rot = xs == &rot;
    const double chi = chi_square(*xs, is_rot ? -10 : 0.9, is_rot ? 10 : 1.1, bins, counts);
    EXPECT_LT(chi, 27.88); // p = 0.001 for 9 degrees of freedom
    for (int c : counts) EXPECT_LT(std::abs(c - expected), 4 * sigma);
  }
}

TEST(SampleTransform, InvalidSpec) {
  AugmentationSpec spec;
  spec.scale_range[0] = {1.1, 0.9};
  EXPECT_THROW(sample_transform(spec, 0, Dims{8, 8, 8}, Spacing{}), DataError);
}

TEST(ResampleTrilinear, IdentityIsExact) {
  const ScalarVolume v = random_volume(Dims{9, 7, 5}, 4);
  EXPECT_EQ(resample_trilinear(v, SpatialTransform::identity()), v);
}

TEST(ResampleTrilinear, OneVoxelShift) {
  const Dims d{8, 6, 5};
  const ScalarVolume v = random_volume(d, 8);
  const ScalarVolume out = resample_trilinear(v, translation({1, 0, 0}, d));
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y) {
      EXPECT_EQ(out.at(0, y, z), 0.0);
      for (int x = 1; x < d.nx; ++x) EXPECT_EQ(out.at(x, y, z), v.at(x - 1, y, z));
    }
}

TEST(ResampleTrilinear, HalfVoxelStepEdge) {
  const Dims d{10, 4, 4};
  ScalarVolume v(d);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 5; x < d.nx; ++x) v.at(x, y, z) = 1.0;
  const ScalarVolume out = resample_trilinear(v, translation({0.5, 0, 0}, d));
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y) {
      EXPECT_DOUBLE_EQ(out.at(5, y, z), 0.5);
      EXPECT_DOUBLE_EQ(out.at(4, y, z), 0.0);
      EXPECT_DOUBLE_EQ(out.at(6, y, z), 1.0);
    }
}

TEST(ResampleTrilinear, UnitIntervalIsPreserved) {
  const Dims d{24, 24, 24};
  AugmentationSpec spec;
  spec.seed = 12;
  const ScalarVolume v = random_volume(d, 13);
  for (int i = 0; i < 5; ++i) {
    const ScalarVolume out = resample_trilinear(v, sample_transform(spec, i, d, Spacing{}));
    for (double x : out.data()) {
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, 1.0 + 1e-12);
    }
  }
}

TEST(ResampleTrilinear, NonInvertible) {
  TransformParams p;
  p.scale = {1, 0, 1};
  const Dims d{4, 4, 4};
  const SpatialTransform t = make_transform(p, d, Spacing{});
  EXPECT_FALSE(t.invertible());
  EXPECT_THROW(resample_trilinear(ScalarVolume(d), t), DataError);
  EXPECT_THROW(resample_nearest(BinaryMask(d), t), DataError);
}

TEST(ResampleNearest, IdentityIsExact) {
  PhantomSpec spec;
  spec.kind = PhantomKind::Torus;
  spec.dims = {32, 32, 32};
  const Phantom p = generate_phantom(spec);
  EXPECT_EQ(resample_nearest(p.labels, SpatialTransform::identity()), p.labels);
}

TEST(ResampleNearest, QuarterTurnOfAnL) {
  const Dims d{5, 5, 5};
  BinaryMask m(d);
  m.at(2, 2, 2) = m.at(3, 2, 2) = m.at(2, 3, 2) = 1;
  TransformParams p;
  p.rotation_deg = {0, 0, 90};
  const BinaryMask out = resample_nearest(m, make_transform(p, d, Spacing{}));
  // (x, y) -> (-y, x) about the centre
  BinaryMask ref(d);
  ref.at(2, 2, 2) = ref.at(2, 3, 2) = ref.at(1, 2, 2) = 1;
  EXPECT_EQ(out, ref);
}

TEST(ResampleNearest, LatticeSymmetriesAreExact) {
  const Dims d{9, 9, 9};
  std::mt19937_64 rng(5);
  BinaryMask m(d);
  std::bernoulli_distribution b(0.3);
  for (auto &v : m.data()) v = b(rng);
  const auto sig = betti_numbers(m);
  for (int code = 0; code < 48; ++code) {
    const SpatialTransform t = orthogonal_transform(code, d, Spacing{});
    const BinaryMask out = resample_nearest(m, t);
    ASSERT_EQ(popcount(out), popcount(m)) << "code " << code;
    ASSERT_EQ(betti_numbers(out), sig) << "code " << code;
  }
  EXPECT_THROW(orthogonal_transform(48, d, Spacing{}), DataError);
}

TEST(ResampleNearest, OutOfBoundsIsBackground) {
  const Dims d{4, 4, 4};
  LabelVolume v(d, Spacing{}, 2);
  const LabelVolume out = resample_nearest(v, translation({2, 0, 0}, d), Label{0});
  EXPECT_EQ(out.at(0, 0, 0), 0);
  EXPECT_EQ(out.at(1, 0, 0), 0);
  EXPECT_EQ(out.at(2, 0, 0), 2);
}

TEST(ResampleNearest, SmallRotationsBreakThinWalls) {
  PhantomSpec ps;
  ps.kind = PhantomKind::TwoChamberTwoChannel;
  ps.wall_thickness_vox = 1;
  const Phantom p = generate_phantom(ps);
  AugmentationSpec spec;
  spec.seed = 42;
  int violations = 0;
  for (int i = 0; i < 100 && violations == 0; ++i) {
    const SpatialTransform t = sample_transform(spec, i, p.labels.dims(), p.labels.spacing());
    const LabelVolume out = resample_nearest(p.labels, t);
    violations += betti_numbers(bloodpool_mask(out, p.schema)) != p.expected;
  }
  EXPECT_GE(violations, 1);
}

TEST(PerturbIntensity, IdentitySettings) {
  const ScalarVolume v = random_volume(Dims{6, 6, 6}, 3);
  AugmentationSpec spec = AugmentationSpec::identity(1);
  EXPECT_EQ(perturb_intensity(v, spec, 0), v);
}

TEST(PerturbIntensity, BiasTwoDoubles) {
  const ScalarVolume v = random_volume(Dims{6, 6, 6}, 3);
  AugmentationSpec spec = AugmentationSpec::identity(1);
  spec.intensity.bias_range = {2.0, 2.0};
  const ScalarVolume out = perturb_intensity(v, spec, 4);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(out[i], 2.0 * v[i]);
}

TEST(PerturbIntensity, NoiseMeanWithinStandardError) {
  const Dims d{32, 32, 32};
  AugmentationSpec spec = AugmentationSpec::identity(5);
  spec.intensity.noise_sigma = 0.1;
  const double bound = 3.0 * 0.1 / std::sqrt(static_cast<double>(d.count()));
  for (int i = 0; i < 5; ++i) {
    const ScalarVolume out = perturb_intensity(ScalarVolume(d), spec, i);
    EXPECT_LT(std::abs(mean_of(out)), bound);
    EXPECT_NEAR(std::sqrt(variance_of(out)), 0.1, 0.005);
  }
}

TEST(PerturbIntensity, Deterministic) {
  const ScalarVolume v = random_volume(Dims{6, 6, 6}, 3);
  AugmentationSpec spec;
  spec.seed = 10;
  EXPECT_EQ(perturb_intensity(v, spec, 2), perturb_intensity(v, spec, 2));
  EXPECT_NE(perturb_intensity(v, spec, 2), perturb_intensity(v, spec, 3));
}

TEST(Normalize, TwoValues) {
  ScalarVolume v(Dims{4, 1, 1}, Spacing{}, std::vector<double>{0, 2, 0, 2});
  const ScalarVolume out = normalize(v);
  EXPECT_EQ(out.values(), (std::vector<double>{-1, 1, -1, 1}));
}

TEST(Normalize, AlreadyNormalized) {
  const ScalarVolume once = normalize(random_volume(Dims{10, 10, 10}, 6));
  const ScalarVolume twice = normalize(once);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(twice[i], once[i], 1e-6);
}

TEST(Normalize, RandomVolumeMoments) {
  const ScalarVolume out = normalize(random_volume(Dims{20, 20, 20}, 7));
  EXPECT_NEAR(mean_of(out), 0.0, 1e-6);
  EXPECT_NEAR(variance_of(out), 1.0, 1e-6);
}

TEST(Normalize, ConstantVolume) {
  EXPECT_THROW(normalize(ScalarVolume(Dims{3, 3, 3}, Spacing{}, 4.0)), DataError);
}

TEST(DisplacementField, InterpolatesControlGrid) {
  const Dims cd{2, 2, 2};
  std::vector<Vec3> v(8, Vec3{0, 0, 0});
  v[1] = {2, 0, 0}; // control point (1, 0, 0)
  const DisplacementField f(cd, 4.0, v);
  EXPECT_DOUBLE_EQ(f.at(0, 0, 0)[0], 0.0);
  EXPECT_DOUBLE_EQ(f.at(4, 0, 0)[0], 2.0);
  EXPECT_DOUBLE_EQ(f.at(2, 0, 0)[0], 1.0);
  EXPECT_DOUBLE_EQ(f.at(2, 2, 0)[0], 0.5);
  EXPECT_THROW(DisplacementField(cd, 4.0, std::vector<Vec3>(7)), DataError);
}
