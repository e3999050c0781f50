#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rcap/error.hpp"
#include "rcap/ldp.hpp"

using namespace rcap;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& ex) {
    return ex.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Ldp, EllM) {
  EXPECT_EQ(ell_M(3, 2.0, 2.0, 100), 20);
  EXPECT_EQ(ell_M(2, 2.0, 1.0, 1), 1);
  EXPECT_EQ(ell_M(3, 3.0, 1.0, 7), 3);
  EXPECT_EQ(kind_of([] { ell_M(2, 3.0, 1.0, 5); }), ErrorKind::OutOfRange);
  EXPECT_EQ(kind_of([] { ell_M(2, 1.0, 1.0, 5); }), ErrorKind::OutOfRange);
}

TEST(Ldp, GScaling) {
  EXPECT_NEAR(g_scaling(2, 1.5, 10, 100), 1000.0, 1e-9);
  EXPECT_NEAR(g_scaling(2, 2.0, 1, 5), 25.0, 1e-12);
  EXPECT_NEAR(g_scaling(2, 3.0, 4, 8), 128.0, 1e-12);
}

TEST(Ldp, TheoreticalRate) {
  EXPECT_NEAR(theoretical_rate(2, 0.5, 1.0, 1.0), 4.0, 1e-14);
  EXPECT_NEAR(theoretical_rate(2, 1.5, 1.0, 2.0, 0.37), 2.0 * 0.37, 1e-12);
  EXPECT_NEAR(theoretical_rate(2, 2.0, 1.0, 1.0), 0.5, 1e-14);
  EXPECT_NEAR(theoretical_rate(3, 1.0, 2.0, 0.5), 6.0, 1e-14);
  EXPECT_EQ(kind_of([] { theoretical_rate(2, 1.5, 1.0, 1.0); }), ErrorKind::MissingLambda);
  EXPECT_EQ(kind_of([] { theoretical_rate(2, 3.0, 1.0, 1.0); }), ErrorKind::OutOfRange);
  EXPECT_EQ(kind_of([] { theoretical_rate(2, 0.5, 1.0, 0.0); }), ErrorKind::InvalidArgument);
}

TEST(Ldp, ScalingReportJson) {
  auto rep = scaling_report(2, 2.0, 16, 32, 1.0, 1.0, 1.0);
  EXPECT_EQ(rep.ell, ell_M(2, 2.0, 1.0, 16));
  EXPECT_NEAR(rep.rate, 0.5, 1e-14);
  EXPECT_NE(to_json(rep).find("\"ell\""), std::string::npos);
}

TEST(Ldp, InclusionGeometry) {
  auto box = passage_box(2, 32, 0.5);
  auto g = inclusion_geometry(box, 32, 8);
  EXPECT_EQ(g.boundary0.size(), 64u);
  EXPECT_EQ(g.boundary1.size(), 64u);
  for (EdgeId e = 0; e < box->num_edges(); ++e) {
    EXPECT_EQ(g.inside0[e] + g.inside1[e] + g.outside[e], 1) << e;
  }
  EXPECT_EQ(kind_of([&] { inclusion_geometry(box, 32, 16); }), ErrorKind::GeometryError);
  EXPECT_EQ(kind_of([&] { inclusion_geometry(passage_box(2, 32, 0.1), 32, 8); }), ErrorKind::GeometryError);
}

TEST(Ldp, InclusionExamples) {
  const int n = 32, ell = 8;
  const double mu = 0.5, xi = 1.0, eps = 0.1;
  auto box = passage_box(2, n, 1.0);
  auto g = inclusion_geometry(box, n, ell);

  // Heavy balls, moderate elsewhere: the premise and the tail both hold.
  WeightConfig heavy{box, std::vector<double>(box->num_edges(), 1.0)};
  for (EdgeId e = 0; e < box->num_edges(); ++e) {
    if (g.inside0[e] || g.inside1[e]) heavy.tau[e] = 10.0;
  }
  auto out = event_inclusion_check(g, heavy, mu, xi, eps);
  EXPECT_TRUE(out.f1 && out.f2 && out.g);
  EXPECT_TRUE(out.tail);
  EXPECT_TRUE(out.holds);

  // A free outer corridor breaks G, so the implication is vacuous.
  WeightConfig cheap = heavy;
  for (EdgeId e = 0; e < box->num_edges(); ++e) {
    if (g.outside[e]) cheap.tau[e] = 0.0;
  }
  auto vac = event_inclusion_check(g, cheap, mu, xi, eps);
  EXPECT_FALSE(vac.g);
  EXPECT_TRUE(vac.holds);
}

TEST(Ldp, AdversarialAndRandomTrialsNeverViolate) {
  auto box = passage_box(2, 32, 1.0);
  auto g = inclusion_geometry(box, 32, 8);
  auto adv = adversarial_configurations(g, 0.5, 1.0, 0.1);
  EXPECT_EQ(adv.size(), 10u);
  for (const auto& cfg : adv) EXPECT_TRUE(event_inclusion_check(g, cfg, 0.5, 1.0, 0.1).holds);

  auto rep = inclusion_trials(2, 32, 8, 0.5, 1.0, 0.1, WeightModel{1.0, 2.0, 0.0}, 100);
  EXPECT_EQ(rep.violations, 0);
  EXPECT_EQ(rep.trials, 100);
  EXPECT_EQ(rep.adversarial, 10);
  EXPECT_GT(rep.premise_true, 0);
}

TEST(Ldp, PlainEstimateMatchesGammaTail) {
  // d = 1: T(0, 4) is a sum of four Exp(1) weights; threshold (1 + 0.5) 4.
  const double exact = oracle::gamma_tail(4, 6.0);
  TailOptions opts;
  opts.samples = 40'000;
  auto plain = estimate_upper_tail(1, WeightModel{1.0, 1.0, 0.0}, 4, 0.5, 1.0, opts);
  EXPECT_NEAR(plain.p_hat, exact, 3 * plain.stderr_p);
  opts.method = TailMethod::Tilted;
  opts.samples = 20'000;
  auto tilted = estimate_upper_tail(1, WeightModel{1.0, 1.0, 0.0}, 4, 0.5, 1.0, opts);
  EXPECT_NEAR(tilted.p_hat, exact, 3 * tilted.stderr_p);
  EXPECT_LT(std::abs(agreement_z(plain, tilted)), 3.0);
}

TEST(Ldp, NoHitsIsFlaggedLowConfidence) {
  TailOptions opts;
  opts.samples = 100;
  auto est = estimate_upper_tail(2, WeightModel{1.0, 2.0, 0.0}, 4, 50.0, 0.7, opts);
  EXPECT_EQ(est.p_hat, 0.0);
  EXPECT_EQ(est.stderr_p, 0.0);
  EXPECT_EQ(est.hits, 0);
  EXPECT_TRUE(est.low_confidence);
  EXPECT_TRUE(std::isinf(est.log_p_hat));
}

TEST(Ldp, TiltedEstimateIsThreadIndependent) {
  TailOptions a;
  a.samples = 600;
  a.method = TailMethod::Tilted;
  TailOptions b = a;
  b.threads = 3;
  auto x = estimate_upper_tail(2, WeightModel{1.0, 0.5, 0.0}, 8, 0.5, 0.2, a);
  auto y = estimate_upper_tail(2, WeightModel{1.0, 0.5, 0.0}, 8, 0.5, 0.2, b);
  EXPECT_EQ(to_json(x), to_json(y));
}

TEST(Ldp, ProposalRegions) {
  auto box = passage_box(2, 8, 1.0);
  TailOptions opts;
  opts.method = TailMethod::Tilted;
  auto small = tail_proposal(*box, WeightModel{1.0, 0.5, 0.0}, 8, 0.5, opts);
  EXPECT_EQ(small.components.size(), 2u);
  auto large = tail_proposal(*box, WeightModel{1.0, 2.0, 0.0}, 8, 0.5, opts);
  EXPECT_EQ(large.components.size(), 1u);
  for (const auto& comp : large.components) {
    for (auto [e, t] : comp) {
      EXPECT_LT(e, box->num_edges());
      EXPECT_GE(t, 0.0);
      EXPECT_LT(t, 1.0);
    }
  }
  EXPECT_THROW(tilt_region_from_string("everywhere"), Error);
  EXPECT_EQ(tail_method_from_string("tilted"), TailMethod::Tilted);
}

TEST(Ldp, RateCurveRejectsZeroXi) {
  EXPECT_EQ(kind_of([] { rate_curve(2, WeightModel{1.0, 0.5, 0.0}, 0.0, {8}, 0.2, 0.01); }),
            ErrorKind::InvalidArgument);
}

TEST(Ldp, RateCurveRows) {
  TailOptions opts;
  opts.samples = 500;
  opts.method = TailMethod::Tilted;
  auto curve = rate_curve(2, WeightModel{1.0, 0.5, 0.0}, 1.0, {8, 12}, 0.21, 0.01, opts);
  ASSERT_EQ(curve.rows.size(), 2u);
  EXPECT_NEAR(curve.theoretical, 4.0, 1e-14);
  for (const auto& row : curve.rows) {
    EXPECT_NEAR(row.scale, std::sqrt(row.n), 1e-12);
    EXPECT_GT(row.normalized, 0.0);
    EXPECT_NEAR(row.normalized, -row.estimate.log_p_hat / row.scale, 1e-12);
  }
  const auto csv = rate_csv(curve);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "n,p_hat,stderr,hits,scale,normalized,normalized_mu_low,normalized_mu_high,theoretical");
}

TEST(Ldp, LocalizationDegenerateWhenOriginEdgeIsHuge) {
  auto box = passage_box(1, 6, 1.0);
  TailOptions opts;
  opts.samples = 200;
  const VertexId plus = *box->index_of(Point{1});
  opts.fixed = {{*box->edge_between(box->source(), plus), 1e6}};
  auto stat = localization_stat(1, WeightModel{1.0, 1.0, 0.0}, 6, 0.5, 1.0, 1, 0.25, opts);
  EXPECT_EQ(stat.hits, 200);
  EXPECT_EQ(stat.freq_loc, 0.0);
  EXPECT_EQ(stat.signal, 1.0);
}

TEST(Ldp, LocalizationNeedsHits) {
  TailOptions opts;
  opts.samples = 50;
  EXPECT_EQ(kind_of([&] { localization_stat(2, WeightModel{1.0, 2.0, 0.0}, 6, 20.0, 0.7, 1, 0.25, opts); }),
            ErrorKind::InsufficientHits);
}

TEST(Ldp, SumTailSingleSummandIsWeibull) {
  WeightModel m{1.0, 0.5, 0.0};
  auto table = sum_tail_check(m, 1, {1.0, 4.0, 9.0}, 200'000);
  for (const auto& row : table.rows) {
    const double p = tail(m, row.n);
    EXPECT_NEAR(row.p_hat, p, 3 * std::sqrt(p * (1 - p) / 200'000)) << row.n;
  }
}

TEST(Ldp, SumTailTwoExponentials) {
  auto table = sum_tail_check(WeightModel{1.0, 1.0, 0.0}, 2, {1.0, 3.0, 6.0}, 200'000);
  for (const auto& row : table.rows) {
    const double p = oracle::erlang2_tail(1.0, row.n);
    EXPECT_NEAR(row.p_hat, p, 3 * std::sqrt(p * (1 - p) / 200'000)) << row.n;
  }
}

TEST(Ldp, SumTailMatchesQuadrature) {
  const std::vector<double> levels = {10.0, 40.0, 100.0};
  auto table = sum_tail_check(WeightModel{1.0, 0.5, 0.0}, 3, levels, 1'000'000);
  ASSERT_EQ(table.rows.size(), levels.size());
  for (const auto& row : table.rows) {
    const double exact = oracle::weibull_sum3_tail(1.0, 0.5, row.n);
    EXPECT_NEAR(row.envelope, std::exp(-0.8 * std::sqrt(row.n)), 1e-15);
    EXPECT_NEAR(row.p_hat, exact, 3 * row.stderr_p) << row.n;
    // The Monte Carlo verdict agrees with the exact one whenever the margin
    // exceeds the noise.
    if (std::abs(exact - row.envelope) > 3 * row.stderr_p) EXPECT_EQ(row.holds, exact <= row.envelope) << row.n;
  }
  EXPECT_TRUE(table.rows.back().holds);
  EXPECT_THROW(sum_tail_check(WeightModel{1.0, 2.0, 0.0}, 3, {4.0}, 10), Error);
}
