#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "stadr/harness.hpp"

using namespace stadr;
using std::numbers::pi;

TEST(Harness, ReferenceCoefficientFunctions) {
  const Point s{3.0, 12.0};
  const double u = (s.x / 15 + 0.5) * pi / 3, w = (s.y / 15 + 0.5) * pi / 3;
  const Point om = true_advection(s), v = true_anisotropy(s);
  EXPECT_NEAR(om.x, 30 * std::sin(u) * std::cos(w), 1e-12);
  EXPECT_NEAR(om.y, -30 * std::cos(u) * std::sin(w), 1e-12);
  EXPECT_NEAR(v.x, -0.7 * std::cos(u) * std::sin(w), 1e-12);
  EXPECT_NEAR(v.y, -0.7 * std::sin(w) * std::cos(u), 1e-12);
  const PointwiseModel m = true_model();
  EXPECT_NEAR(m.log_kappa(s), -2.0, 1e-15);
  EXPECT_NEAR(m.log_gamma(s), -1.0, 1e-15);
  EXPECT_NEAR(m.log_tau, -4.0, 1e-15);
}

TEST(Harness, PointwiseFieldsAreTapered) {
  const GridSpec g = build_grid({0, 15, 0, 15}, 10, 10, 2, 3, 0.5);
  const CoefficientFieldValues f = true_model_fields(g);
  EXPECT_EQ(f.kind, ModelKind::NStatAD);
  EXPECT_NEAR(f.evolution.kappa2[0], std::exp(-4.0), 1e-15);
  EXPECT_NEAR(f.tau, std::exp(-4.0), 1e-15);
  // Interior face: full strength. Outer boundary face: zero.
  const int fi = 7 * (g.mb() + 1) + 7;
  const Point c = g.vertical_face_center(7, 7);
  EXPECT_NEAR(f.omega.wx_v[fi], true_advection(c).x, 1e-12);
  EXPECT_NEAR(f.omega.wx_v[7 * (g.mb() + 1)], 0.0, 1e-12);
}

TEST(Harness, CellsInRectangle) {
  const GridSpec g = build_grid({0, 15, 0, 15}, 30, 30, 3, 2, 1.0);
  const auto masked = cells_in_rectangle(g, {6.1, 11.6, 3.7, 9.5});
  // Centers at 0.25 + 0.5 k: x in {6.25..11.25} (11), y in {3.75..9.25} (12).
  EXPECT_EQ(masked.size(), 11u * 12u);
  EXPECT_EQ(interior_cells(g).size(), 900u);
  for (int c : masked) {
    const Point p = g.cell_center(c);
    EXPECT_TRUE(p.x >= 6.1 && p.x <= 11.6 && p.y >= 3.7 && p.y <= 9.5);
  }
}

TEST(Harness, NamesRoundTrip) {
  for (auto m : {CandidateModel::NStatTrue, CandidateModel::NStatAD, CandidateModel::StatAD, CandidateModel::NStatSep})
    EXPECT_EQ(parse_candidate_model(to_string(m)), m);
  EXPECT_FALSE(fitted_kind(CandidateModel::NStatTrue).has_value());
  EXPECT_EQ(*fitted_kind(CandidateModel::StatAD), ModelKind::StatAD);
  EXPECT_EQ(parse_scale("paper"), StudyScale::Paper);
  EXPECT_THROW(parse_scale("huge"), std::invalid_argument);
  const StudyConfig paper = StudyConfig::for_scale(StudyScale::Paper);
  EXPECT_EQ(paper.m, 50);
  EXPECT_EQ(paper.n_train, 20);
}

TEST(Harness, ReplicatesIndependentOfWorkerCount) {
  const GridSpec g = build_grid({0, 15, 0, 15}, 6, 6, 1, 3, 0.5);
  const auto f = true_model_fields(g);
  const auto a = simulate_replicates(g, f, 3, 1e-3, 5, 1, 1);
  const auto b = simulate_replicates(g, f, 3, 1e-3, 5, 1, 3);
  const auto c = simulate_replicates(g, f, 3, 1e-3, 5, 2, 1);
  ASSERT_EQ(a.size(), 3u);
  for (size_t r = 0; r < 3; ++r) EXPECT_EQ(a[r], b[r]);
  EXPECT_NE(a[0], c[0]);
}

TEST(Harness, PathIsContiguousAndInsideInterior) {
  const GridSpec g = OceanConfig{}.grid();
  const PathConfig cfg;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Trajectory t = generate_path(g, seed, cfg);
    ASSERT_FALSE(t.events.empty());
    EXPECT_EQ(t.events.front().time_index, 0);
    for (size_t e = 0; e < t.events.size(); ++e) {
      const auto c = g.cell(t.events[e].cell);
      EXPECT_TRUE(g.is_interior_cell(c.i, c.j));
      EXPECT_LT(t.events[e].time_index, g.num_times());
      if (e == 0) continue;
      const auto p = g.cell(t.events[e - 1].cell);
      EXPECT_LE(std::abs(c.i - p.i) + std::abs(c.j - p.j), 1);
      EXPECT_GE(t.events[e].time_index, t.events[e - 1].time_index);
    }
    EXPECT_NEAR(t.duration_minutes, 90.0, 1e-12);
    EXPECT_NEAR(t.length_cells, cfg.speed_mps * 90 * 60 / cfg.cell_size_m, 1e-6);
  }
  const auto a = generate_path(g, 3, cfg), b = generate_path(g, 3, cfg);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (size_t e = 0; e < a.events.size(); ++e) EXPECT_EQ(a.events[e].cell, b.events[e].cell);
}

TEST(Harness, DetrendingReconstructs) {
  std::vector<Eigen::VectorXd> fields;
  for (int s = 0; s < 3; ++s) fields.push_back(Eigen::VectorXd::LinSpaced(8, s, 2.0 * s + 1.0));
  const SegmentedData d = detrend_segments(4, 2, fields);
  for (int s = 0; s < 3; ++s) {
    EXPECT_LT((d.reconstruct(s) - fields[static_cast<size_t>(s)]).norm(), 1e-12);
    const Eigen::VectorXd r = d.residuals[static_cast<size_t>(s)];
    EXPECT_LT((r.head(4) + r.tail(4)).norm(), 1e-12);
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  for (const auto& m : d.means) mean += m / 3.0;
  EXPECT_LT((d.spatial_mean() - mean).norm(), 1e-12);
}

TEST(Harness, OceanFieldsAreDeterministic) {
  OceanConfig cfg;
  cfg.m = 8;
  cfg.n = 7;
  cfg.num_times = 3;
  const GridSpec g = cfg.grid();
  const auto a = synth_ocean_fields(g, 4, 2, cfg), b = synth_ocean_fields(g, 4, 2, cfg);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[1], b[1]);
  EXPECT_EQ(a[0].size(), static_cast<Eigen::Index>(g.latent_size()));
  EXPECT_TRUE(a[0].allFinite());
}
