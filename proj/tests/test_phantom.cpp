#include <gtest/gtest.h>

#include "topoaug/phantom.hpp"
#include "topoaug/topology.hpp"

using namespace topoaug;

namespace {

PhantomSpec graph(int chambers, std::vector<std::pair<int, int>> edges, int rc = 2) {
  PhantomSpec s;
  s.kind = PhantomKind::ChamberGraph;
  s.chambers = chambers;
  s.edges = std::move(edges);
  s.channel_radius_vox = rc;
  return s;
}

} // namespace

TEST(Phantom, ExpectedSignatures) {
  const std::map<PhantomKind, TopologySignature> expected{
      {PhantomKind::Ball, {1, 0, 0, 1}},
      {PhantomKind::Shell, {1, 0, 1, 2}},
      {PhantomKind::Torus, {1, 1, 0, 0}},
      {PhantomKind::TwoChamberOneChannel, {1, 0, 0, 1}},
      {PhantomKind::TwoChamberTwoChannel, {1, 1, 0, 0}},
      {PhantomKind::ChamberGraph, {1, 1, 0, 0}},
  };
  for (int w : {1, 2}) {
    for (const auto &[kind, sig] : expected) {
      PhantomSpec s;
      s.kind = kind;
      s.wall_thickness_vox = w;
      const Phantom p = generate_phantom(s);
      EXPECT_EQ(p.expected, sig) << to_string(kind);
      const BinaryMask pool = bloodpool_mask(p.labels, p.schema);
      EXPECT_EQ(betti_numbers(pool, ConnectivityPair::fg26()), sig) << to_string(kind);
      EXPECT_EQ(betti_numbers(pool, ConnectivityPair::fg6()), sig) << to_string(kind);
      EXPECT_TRUE(is_well_composed(pool).well_composed) << to_string(kind);
    }
  }
}

TEST(Phantom, LabelsFollowSchema) {
  for (const auto &[kind, name] : phantom_kind_names()) {
    PhantomSpec s;
    s.kind = kind;
    const Phantom p = generate_phantom(s);
    EXPECT_NO_THROW(p.schema.validate());
    EXPECT_NO_THROW(require_schema_labels(p.labels, p.schema));
    for (Label l : p.schema.bloodpool_sublabels) EXPECT_GT(count_label(p.labels, l), 0u) << name;
    EXPECT_GT(count_label(p.labels, p.schema.myocardium), 0u) << name;
    // nothing within two voxels of the grid border
    const Dims d = p.labels.dims();
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          const bool edge = std::min({x, y, z, d.nx - 1 - x, d.ny - 1 - y, d.nz - 1 - z}) < 2;
          if (edge) {
            ASSERT_EQ(p.labels.at(x, y, z), p.schema.background) << name;
          }
        }
  }
}

TEST(Phantom, WallSeparatesBloodPoolFromBackground) {
  PhantomSpec s;
  s.kind = PhantomKind::TwoChamberTwoChannel;
  s.wall_thickness_vox = 1;
  const Phantom p = generate_phantom(s);
  const Dims d = p.labels.dims();
  for (int z = 1; z + 1 < d.nz; ++z)
    for (int y = 1; y + 1 < d.ny; ++y)
      for (int x = 1; x + 1 < d.nx; ++x) {
        if (!p.schema.is_bloodpool(p.labels.at(x, y, z))) continue;
        for (const Index3 &o : detail::kOffsets26)
          ASSERT_NE(p.labels.at(x + o.x, y + o.y, z + o.z), p.schema.background);
      }
}

TEST(Phantom, DeterministicInSeed) {
  PhantomSpec s;
  s.kind = PhantomKind::Torus;
  s.dims = {40, 40, 40};
  s.seed = 5;
  const Phantom a = generate_phantom(s), b = generate_phantom(s);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.labels, b.labels);
  s.seed = 6;
  const Phantom c = generate_phantom(s);
  EXPECT_NE(a.image, c.image);
  EXPECT_EQ(a.labels, c.labels);
}

TEST(Phantom, ImageContrast) {
  PhantomSpec s;
  s.kind = PhantomKind::Ball;
  const Phantom p = generate_phantom(s);
  // deep inside the pool is bright, far outside is dark
  EXPECT_GT(p.image.at(32, 32, 32), 0.8);
  EXPECT_LT(p.image.at(3, 3, 3), 0.2);
}

TEST(Phantom, GraphCycleRank) {
  struct G {
    int c;
    std::vector<std::pair<int, int>> e;
  };
  const std::vector<G> graphs{
      {2, {{0, 1}}},
      {2, {{0, 1}, {0, 1}}},
      {3, {}},
      {3, {{0, 1}, {1, 2}}},
      {4, {}},
      {4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}}},
      {4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}},
      {5, {}},
      {3, {{0, 1}, {1, 2}, {2, 0}, {0, 1}}},
  };
  for (const G &g : graphs) {
    const int rc = g.e.size() == 6 ? 1 : 2;
    const Phantom p = generate_phantom(graph(g.c, g.e, rc));
    const int edges = g.e.empty() ? (g.c > 2 ? g.c : g.c - 1) : static_cast<int>(g.e.size());
    const int b1 = edges - g.c + 1;
    EXPECT_EQ(p.expected.b1, b1) << g.c << " chambers, " << edges << " channels";
    EXPECT_EQ(p.expected.b0, 1);
    EXPECT_EQ(betti_numbers(bloodpool_mask(p.labels, p.schema)).b1, b1);
    EXPECT_EQ(p.schema.bloodpool_sublabels.size(), static_cast<std::size_t>(g.c + edges));
  }
}

TEST(Phantom, GeometryErrors) {
  PhantomSpec s;
  s.dims = {8, 8, 8};
  s.kind = PhantomKind::TwoChamberTwoChannel;
  EXPECT_THROW(generate_phantom(s), DataError);
  s.dims = {64, 64, 64};
  s.wall_thickness_vox = 0;
  EXPECT_THROW(generate_phantom(s), DataError);
  EXPECT_THROW(generate_phantom(graph(3, {{0, 1}})), DataError);  // disconnected
  EXPECT_THROW(generate_phantom(graph(3, {{0, 3}, {1, 2}})), DataError);
  EXPECT_THROW(generate_phantom(graph(2, {{0, 0}})), DataError);
}

TEST(Phantom, KindNames) {
  for (const auto &[kind, name] : phantom_kind_names()) EXPECT_EQ(parse_phantom_kind(name), kind);
  EXPECT_THROW(parse_phantom_kind("heart"), DataError);
}
