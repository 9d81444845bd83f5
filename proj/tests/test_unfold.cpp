#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include <tensorcomp/experiment.hpp>
#include <tensorcomp/matrix_estimation.hpp>
#include <tensorcomp/random_models.hpp>
#include <tensorcomp/unfold_completion.hpp>

#include "oracles.hpp"

using namespace tensorcomp;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double rel_err(const Tensor& est, const Tensor& truth) {
  return (est.as_vector() - truth.as_vector()).norm() / truth.as_vector().norm();
}

Tensor unit_rank_one(int k, int d, std::uint64_t seed) {
  const Vector a = oracle::random_matrix(d, 1, seed).col(0).normalized();
  return from_components(std::vector<Vector>{a}, k);
}

// Algorithm 1 assembled from the public steps, with the two halves in either
// role. Used to check complete_unfold and the role-exchange property.
Tensor unfold_by_hand(const PartialTensor& y, std::uint64_t seed, bool swap, double factor = 3.0) {
  const auto split = split_two(y.mask(), seed);
  const auto& e1 = swap ? split.second : split.first;
  const auto& e2 = swap ? split.first : split.second;
  const Tensor y1 = project_mask(y, e1).tensor();
  const Tensor y2 = project_mask(y, e2).tensor();
  const double delta1 = split.delta1;
  const Matrix b = build_B(y1, delta1);
  const double lambda = lambda_star_simulation(static_cast<double>(y.n()), y.dim(), op_norm(b), factor, y.order());
  return denoise(y1, y2, delta1 / (1.0 - delta1), threshold_projector(b, lambda));
}

}  // namespace

// ---- random models ----

TEST(RandomModels, SingleBasisComponent) {
  Vector e1 = Vector::Zero(3);
  e1(0) = 1.0;
  const Tensor t = from_components(std::vector<Vector>{e1}, 3);
  EXPECT_EQ(t.at({0, 0, 0}), 1.0);
  EXPECT_EQ(frobenius(t), 1.0);
  const Tensor t4 = from_components(std::vector<Vector>{e1}, 4);
  EXPECT_EQ(t4.at({0, 0, 0, 0}), 1.0);
  EXPECT_EQ(frobenius(t4), 1.0);
}

TEST(RandomModels, TwoOrthonormalComponents) {
  Matrix a = Matrix::Zero(2, 4);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  const Tensor t = from_components(a, 3);
  int nonzero = 0;
  for (double v : t.values()) nonzero += v != 0.0;
  EXPECT_EQ(nonzero, 2);
  EXPECT_EQ(t.at({0, 0, 0}), 1.0);
  EXPECT_EQ(t.at({1, 1, 1}), 1.0);
}

TEST(RandomModels, FrobeniusIdentity) {
  const Matrix a = oracle::random_matrix(2, 3, 5);
  const Tensor t = from_components(a, 3);
  double direct = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l) {
        double v = 0.0;
        for (int s = 0; s < 2; ++s) v += a(s, i) * a(s, j) * a(s, l);
        direct += v * v;
      }
  double gram = 0.0;
  for (int s = 0; s < 2; ++s)
    for (int u = 0; u < 2; ++u) gram += std::pow(a.row(s).dot(a.row(u)), 3);
  EXPECT_NEAR(direct, gram, 1e-10);
  EXPECT_NEAR(t.as_vector().squaredNorm(), gram, 1e-10);
}

TEST(RandomModels, ExactSymmetryAndDeterminism) {
  for (auto dist : {ComponentDistribution::gaussian, ComponentDistribution::rademacher})
    for (int k : {3, 4}) {
      RandomTensorSpec spec{6, 5, k, dist, 42};
      const auto g = generate(spec);
      EXPECT_TRUE(g.tensor.symmetric());
      EXPECT_EQ(symmetry_defect(g.tensor), 0.0);
      const auto h = generate(spec);
      EXPECT_EQ(g.components, h.components);
      spec.seed = 43;
      EXPECT_NE(generate(spec).components, g.components);
    }
  EXPECT_THROW(from_components(std::vector<Vector>{Vector::Ones(3), Vector::Ones(4)}, 3), std::invalid_argument);
}

TEST(RandomModels, IsometricAndSymmetricLaws) {
  const int d = 8, draws = 10000;
  for (auto dist : {ComponentDistribution::gaussian, ComponentDistribution::rademacher}) {
    Rng rng(dist == ComponentDistribution::gaussian ? 1 : 2);
    const Matrix a = random_components(draws, d, dist, rng);
    // A1: each coordinate mean within 3 sigma of zero (sigma^2 = 1/d per draw).
    const Vector mean = a.colwise().mean();
    const double se = std::sqrt(1.0 / d / draws);
    EXPECT_LT(mean.cwiseAbs().maxCoeff(), 4.0 * se);
    // A2: second moment I/d.
    const Matrix second = a.transpose() * a / draws;
    EXPECT_LT((second - Matrix::Identity(d, d) / d).cwiseAbs().maxCoeff(), 5.0 * std::sqrt(2.0) / d / std::sqrt(draws));
    // E||a||^2 = 1 within 3 standard errors.
    const Vector norms = a.rowwise().squaredNorm();
    const double m = norms.mean();
    const double sd = std::sqrt((norms.array() - m).square().sum() / (draws - 1));
    EXPECT_LT(std::abs(m - 1.0), 3.0 * sd / std::sqrt(draws) + 1e-15);
    if (dist == ComponentDistribution::rademacher) {
      EXPECT_LT((a.cwiseAbs().array() - 1.0 / std::sqrt(d)).abs().maxCoeff(), 1e-15);
    }
  }
}

TEST(RandomModels, GaussianUnfoldingParamsAtD50) {
  const int d = 50, r = 4;
  int full_rank = 0;
  std::vector<double> mus, alpha_ratio;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = unfolding_params(generate({d, r, 3, ComponentDistribution::gaussian, seed}).tensor);
    full_rank += p.big_r == r;
    mus.push_back(p.mu);
    alpha_ratio.push_back(p.alpha / (std::pow(2.0 * std::log(d), 3) / r));
  }
  EXPECT_GE(full_rank, 95);
  EXPECT_GE(median(mus), 0.5);
  EXPECT_LE(median(mus), 2.0);
  EXPECT_GE(median(alpha_ratio), 0.5);
  EXPECT_LE(median(alpha_ratio), 2.0);
}

TEST(RandomModels, MuApproachesOneAsDGrows) {
  auto median_mu = [](int d) {
    std::vector<double> mus;
    for (std::uint64_t seed = 0; seed < 20; ++seed)
      mus.push_back(unfolding_params(generate({d, 4, 3, ComponentDistribution::gaussian, seed}).tensor).mu);
    return median(mus);
  };
  EXPECT_LT(median_mu(80), median_mu(20));
}

TEST(Sampling, ExactIsUniformSubset) {
  Rng rng(9);
  const auto m = sample_exact(3, 4, 20, rng);
  EXPECT_EQ(m.size(), 20u);
  Rng again(9);
  EXPECT_EQ(sample_exact(3, 4, 20, again), m);
  EXPECT_EQ(sample_exact(3, 2, 8, rng), ObservationMask::full(3, 2));
  EXPECT_THROW(sample_exact(3, 2, 9, rng), std::invalid_argument);

  // Inclusion frequency of every position is n / d^k.
  std::vector<int> hits(27, 0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const auto m9 = sample_exact(3, 3, 9, rng);
    for (auto lin : m9.entries()) ++hits[lin];
  }
  const double p = 9.0 / 27.0;
  const double sd = std::sqrt(trials * p * (1 - p));
  for (int h : hits) EXPECT_LT(std::abs(h - trials * p), 5 * sd);
}

TEST(Sampling, BernoulliRate) {
  Rng rng(11);
  const auto m = sample_bernoulli(3, 20, 0.1, rng);
  const double sd = std::sqrt(8000 * 0.1 * 0.9);
  EXPECT_LT(std::abs(static_cast<double>(m.size()) - 800.0), 5 * sd);
  EXPECT_TRUE(sample_bernoulli(3, 3, 0.0, rng).empty());
  EXPECT_EQ(sample_bernoulli(3, 3, 1.0, rng).size(), 27u);
}

TEST(Rng, DocumentedTransformsAndStreams) {
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
  std::set<std::uint64_t> seeds;
  for (int rep = 0; rep < 100; ++rep) seeds.insert(stream_seed(1, 2, 30, rep));
  EXPECT_EQ(seeds.size(), 100u);
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(1, 3, 2));
  Rng u(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    ASSERT_LT(u.below(7), 7u);
  }
}

// ---- split_two ----

TEST(SplitTwo, SmallAndOdd) {
  const ObservationMask two(3, 3, {4, 9});
  const auto s = split_two(two, 1);
  EXPECT_EQ(s.first.size(), 1u);
  EXPECT_EQ(s.second.size(), 1u);
  EXPECT_DOUBLE_EQ(s.delta1, 2.0 / (2.0 * 27.0));
  const auto odd = split_two(ObservationMask(3, 3, {1, 2, 3, 4, 5}), 2);
  EXPECT_EQ(odd.first.size(), 3u);
  EXPECT_EQ(odd.second.size(), 2u);
  EXPECT_THROW(split_two(ObservationMask(3, 3, {}), 1), std::invalid_argument);
}

TEST(SplitTwo, PartitionAndDeterminism) {
  Rng rng(3);
  int differing = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto e = sample_exact(3, 5, 10 + rng.below(100), rng);
    for (auto mode : {SplitMode::exact, SplitMode::bernoulli}) {
      const auto s = split_two(e, 100 + trial, mode);
      std::vector<std::uint64_t> both;
      std::set_union(s.first.entries().begin(), s.first.entries().end(), s.second.entries().begin(),
                     s.second.entries().end(), std::back_inserter(both));
      EXPECT_EQ(both.size(), e.size());
      EXPECT_EQ(s.first.size() + s.second.size(), e.size());
      EXPECT_TRUE(s.first.is_subset_of(e));
      EXPECT_TRUE(s.second.is_subset_of(e));
      EXPECT_EQ(split_two(e, 100 + trial, mode).first, s.first);
    }
    differing += split_two(e, 1).first != split_two(e, 2).first;
  }
  EXPECT_GE(differing, 29);
}

// ---- build_B ----

TEST(BuildB, FullRateIsGram) {
  const Tensor y = oracle::random_tensor(3, 3, 4);
  const RowMatrix z = unfold(y, 1, 2).values;
  EXPECT_LT((build_B(y, 1.0) - Matrix(z * z.transpose())).cwiseAbs().maxCoeff(), 1e-14);
  const Tensor y4 = oracle::random_tensor(4, 2, 4);
  EXPECT_EQ(build_B(y4, 0.3).rows(), 4);
  EXPECT_LT((build_B(y4, 0.3) - bhat(unfold(y4, 2, 2).values, 0.3)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(build_B(y, 0.0), std::invalid_argument);
}

TEST(BuildB, SingleEntry) {
  Tensor y(3, 2);
  y.set({0, 0, 0}, 3.0);
  const Matrix b = build_B(y, 0.25);
  Matrix want = Matrix::Zero(2, 2);
  want(0, 0) = 9.0 / 0.25;
  EXPECT_EQ(b, want);
}

// ---- thresholds ----

TEST(LambdaStar, TheoremOneExamples) {
  const int d = 10, k = 3;
  // alpha R mu^{1/2} d^{3/2} / n = 1/8.
  const UnfoldingParams p{2, 3.0, 4.0};
  const double n = 8.0 * p.alpha * p.big_r * std::sqrt(p.mu) * std::pow(d, 1.5);
  const double op = 2.5;
  EXPECT_NEAR(lambda_star_theorem1(p, n, d, k, op) / (std::pow(3.0 * std::log(d), 8) * op), 1.0, 1e-12);
  EXPECT_NEAR(lambda_star_theorem1(p, 2 * n, d, k, op) / lambda_star_theorem1(p, n, d, k, op), std::pow(2.0, -2.0 / 3.0),
              1e-12);
  EXPECT_NEAR(lambda_star_theorem1(p, n, d, k, 3 * op) / lambda_star_theorem1(p, n, d, k, op), 3.0, 1e-12);
  EXPECT_THROW(lambda_star_theorem1(p, 0.0, d, k, op), std::invalid_argument);
  EXPECT_THROW(lambda_star_theorem1(UnfoldingParams{0, 1, 1}, n, d, k, op), std::invalid_argument);
}

TEST(LambdaStar, CanonicalSlackReducesToClosedForm) {
  for (int k : {3, 4, 5}) {
    const UnfoldingParams p{3, 7.5, 1.7};
    const int d = 12;
    const double n = 5000, op = 1.3;
    const double t = canonical_slack(p, d, k);
    EXPECT_NEAR(lambda_star_slack(p, t, n, d, k, op) / lambda_star_theorem1(p, n, d, k, op), 1.0, 1e-12);
    const auto rc = regime_check(p, n, d, k);
    const double klog = k * std::log(d);
    EXPECT_NEAR(rc.n_lower / (32 * std::pow(klog, 12) * p.alpha * p.big_r * std::sqrt(p.mu) * std::pow(d, k / 2.0)),
                1.0, 1e-12);
    EXPECT_NEAR(rc.n_upper / (std::pow(klog, 16) * p.alpha * p.big_r * p.mu * p.mu * std::pow(d, k - k / 2)), 1.0,
                1e-12);
  }
}

TEST(LambdaStar, RegimeWarnings) {
  const UnfoldingParams p{2, 3.0, 1.0};
  const auto low = regime_check(p, 10.0, 20, 3, 1.0);
  EXPECT_FALSE(low.n_in_window);
  EXPECT_EQ(low.warnings.size(), 1u);
  const auto big_rank = regime_check(UnfoldingParams{40, 3.0, 1.0}, 10.0, 20, 3, 1.0);
  EXPECT_FALSE(big_rank.rank_ok);
  EXPECT_EQ(big_rank.warnings.size(), 2u);
  EXPECT_NEAR(r_max(16, 3), 8.0, 1e-12);
  EXPECT_NEAR(r_max(4, 4), 16.0, 1e-12);
  EXPECT_NEAR(r_max(4, 5), 8.0, 1e-12);
}

TEST(LambdaStar, SimulationExamples) {
  EXPECT_NEAR(lambda_star_simulation(1e4, 100, 1.0), 3.0 * std::pow(0.1, 2.0 / 3.0), 1e-12);
  EXPECT_NEAR(lambda_star_simulation(1e4, 100, 1.0), 0.64633, 1e-5);
  const int d = 20;
  EXPECT_NEAR(lambda_star_simulation(std::pow(3.0, 1.5) * std::pow(d, 1.5), d, 2.0), 2.0, 1e-12);
  EXPECT_LT(lambda_star_simulation(1e30, d, 1.0), 1e-15);
}

// ---- denoise ----

TEST(Denoise, IdentityProjectorReturnsRescaledSum) {
  const Tensor y1 = oracle::random_tensor(3, 3, 1);
  const Tensor y2 = oracle::random_tensor(3, 3, 2);
  const Tensor got = denoise(y1, y2, 0.25, SpectralProjector::identity(3));
  const Tensor want = y1 + 4.0 * y2;
  EXPECT_LT((got.as_vector() - want.as_vector()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(denoise(y1, y2, 0.0, SpectralProjector::identity(3)), std::invalid_argument);
}

TEST(Denoise, FullObservationHalvesRecoverTruth) {
  const Tensor t = unit_rank_one(3, 4, 3);
  const auto y = project_mask(t, ObservationMask::full(3, 4));
  const auto s = split_two(y.mask(), 5);
  EXPECT_DOUBLE_EQ(s.delta1, 0.5);
  const Tensor y1 = project_mask(y, s.first).tensor();
  const Tensor y2 = project_mask(y, s.second).tensor();
  const double delta2 = s.delta1 / (1 - s.delta1);
  EXPECT_EQ(delta2, 1.0);
  const Tensor sum = denoise(y1, y2, delta2, SpectralProjector::identity(4));
  EXPECT_TRUE(std::equal(sum.values().begin(), sum.values().end(), t.values().begin()));
}

TEST(Denoise, ConditionallyUnbiasedGivenFirstHalf) {
  // d = 2, k = 3: E1 fixed with 4 entries, the other 4 revealed Bernoulli(delta2).
  const Tensor t = oracle::random_tensor(3, 2, 8);
  const ObservationMask e1(3, 2, {0, 3, 5, 6});
  const std::vector<std::uint64_t> rest = {1, 2, 4, 7};
  const Tensor y1 = project_mask(t, e1).tensor();
  for (double delta2 : {1.0 / 3.0, 0.5, 0.9}) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(8);
    oracle::for_each_bernoulli_mask(4, delta2, [&](std::uint64_t bits, double p) {
      std::vector<std::uint64_t> e2;
      for (int i = 0; i < 4; ++i)
        if ((bits >> i) & 1u) e2.push_back(rest[static_cast<std::size_t>(i)]);
      const Tensor y2 = project_mask(t, ObservationMask(3, 2, e2)).tensor();
      mean += p * denoise(y1, y2, delta2, SpectralProjector::identity(2)).as_vector();
    });
    EXPECT_LT((mean - t.as_vector()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

// ---- complete_unfold ----

TEST(CompleteUnfold, ZeroObservationsGiveZeroEstimate) {
  Rng rng(1);
  const auto y = project_mask(Tensor(3, 5), sample_exact(3, 5, 40, rng));
  for (auto mode : {LambdaMode::simulation, LambdaMode::fixed}) {
    UnfoldConfig cfg;
    cfg.lambda_mode = mode;
    const auto res = complete_unfold(y, cfg);
    EXPECT_EQ(max_abs(res.estimate), 0.0);
    EXPECT_EQ(res.diagnostics.rank_q, 0);
  }
}

TEST(CompleteUnfold, FullObservationEstimateIsProjectedTruth) {
  // With every entry observed the rescaled sum is T itself, so the estimate is
  // Qcal(T); Q comes from half of the entries and so is only close to span{a}.
  for (int k : {3, 4, 5}) {
    const int d = k == 3 ? 20 : 3;
    const Tensor t = unit_rank_one(k, d, 17);
    UnfoldConfig cfg;
    cfg.lambda_mode = LambdaMode::fixed;
    cfg.lambda_value = 0.1;
    cfg.seed = 3;
    const auto y = project_mask(t, ObservationMask::full(k, d));
    const auto res = complete_unfold(y, cfg);
    const auto split = split_two(y.mask(), cfg.seed);
    const auto q = threshold_projector(build_B(project_mask(y, split.first).tensor(), split.delta1), 0.1);
    const Tensor want = apply_mode_projection(t, q, ProjectionPattern::unfolding);
    EXPECT_LT((res.estimate.as_vector() - want.as_vector()).cwiseAbs().maxCoeff(), 1e-12) << "k=" << k;
  }
}

TEST(CompleteUnfold, FullObservationErrorShrinksWithD) {
  auto err = [](int d) {
    const Tensor t = unit_rank_one(3, d, 5);
    UnfoldConfig cfg;
    cfg.lambda_mode = LambdaMode::fixed;
    cfg.lambda_value = 0.1;
    const auto res = complete_unfold(project_mask(t, ObservationMask::full(3, d)), cfg);
    EXPECT_EQ(res.diagnostics.rank_q, 1);
    return rel_err(res.estimate, t);
  };
  const double e20 = err(20), e40 = err(40);
  EXPECT_LT(e40, e20);
  EXPECT_LT(e40, 0.2);
}

TEST(CompleteUnfold, MatchesStepwiseAssemblyAndIsProjected) {
  const Tensor t = generate({12, 3, 3, ComponentDistribution::gaussian, 2}).tensor;
  Rng rng(6);
  const auto y = project_mask(t, sample_exact(3, 12, 900, rng));
  UnfoldConfig cfg;
  cfg.seed = 77;
  const auto res = complete_unfold(y, cfg);
  const Tensor manual = unfold_by_hand(y, 77, false);
  EXPECT_LT((res.estimate.as_vector() - manual.as_vector()).cwiseAbs().maxCoeff(), 1e-12);

  // Re-applying the same projector leaves the estimate fixed.
  const auto split = split_two(y.mask(), 77);
  const Matrix b = build_B(project_mask(y, split.first).tensor(), split.delta1);
  const auto q = threshold_projector(b, res.diagnostics.lambda_star);
  EXPECT_EQ(q.rank(), res.diagnostics.rank_q);
  const Tensor again = apply_mode_projection(res.estimate, q, ProjectionPattern::unfolding);
  EXPECT_LT((again.as_vector() - res.estimate.as_vector()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(res.diagnostics.delta2, res.diagnostics.delta / (1 - res.diagnostics.delta), 1e-15);
}

TEST(CompleteUnfold, RankOfQBoundedWhenThresholdExceedsNoise) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor t = generate({10, 2, 3, ComponentDistribution::gaussian, seed}).tensor;
    Rng rng(seed);
    const auto y = project_mask(t, sample_exact(3, 10, 800, rng));
    const auto split = split_two(y.mask(), seed);
    const Matrix b = build_B(project_mask(y, split.first).tensor(), split.delta1);
    const RowMatrix x = unfold(t, 1, 2).values;
    const double noise = op_norm(Matrix(b - x * x.transpose()));
    UnfoldConfig cfg;
    cfg.seed = seed;
    cfg.lambda_mode = LambdaMode::fixed;
    cfg.lambda_value = noise * 1.0001;
    const auto res = complete_unfold(y, cfg);
    EXPECT_LE(res.diagnostics.rank_q, numerical_rank(x));
  }
}

TEST(CompleteUnfold, ScaleEquivariance) {
  const Tensor t = generate({10, 2, 3, ComponentDistribution::gaussian, 4}).tensor;
  Rng rng(4);
  const auto mask = sample_exact(3, 10, 500, rng);
  const double c = 3.5;
  UnfoldConfig cfg;
  cfg.lambda_mode = LambdaMode::theorem;
  cfg.params = unfolding_params(t);
  cfg.slack = 1.0;
  const auto a = complete_unfold(project_mask(t, mask), cfg);
  const auto b = complete_unfold(project_mask(c * t, mask), cfg);
  EXPECT_NEAR(b.diagnostics.lambda_star / a.diagnostics.lambda_star, c * c, 1e-10);
  EXPECT_EQ(a.diagnostics.rank_q, b.diagnostics.rank_q);
  EXPECT_LT((b.estimate.as_vector() - c * a.estimate.as_vector()).norm(), 1e-10 * b.estimate.as_vector().norm() + 1e-300);
  cfg.lambda_mode = LambdaMode::simulation;
  const auto sa = complete_unfold(project_mask(t, mask), cfg);
  const auto sb = complete_unfold(project_mask(c * t, mask), cfg);
  EXPECT_GT(sa.diagnostics.rank_q, 0);
  EXPECT_LT((sb.estimate.as_vector() - c * sa.estimate.as_vector()).norm(), 1e-10 * sb.estimate.as_vector().norm());
}

TEST(CompleteUnfold, ExchangingHalvesKeepsExpectedError) {
  const int d = 15, reps = 100;
  double err_a = 0.0, err_b = 0.0, norm = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    const Tensor t = generate({d, 3, 3, ComponentDistribution::gaussian, stream_seed(9, rep)}).tensor;
    Rng rng(stream_seed(10, rep));
    const auto y = project_mask(t, sample_exact(3, d, static_cast<std::uint64_t>(10 * std::pow(d, 1.5)), rng));
    const double tn = t.as_vector().squaredNorm();
    err_a += (unfold_by_hand(y, rep, false).as_vector() - t.as_vector()).squaredNorm();
    err_b += (unfold_by_hand(y, rep, true).as_vector() - t.as_vector()).squaredNorm();
    norm += tn;
  }
  const double a = err_a / norm, b = err_b / norm;
  EXPECT_LT(std::abs(a - b), 0.2 * std::max(a, b)) << a << " vs " << b;
}

TEST(CompleteUnfold, MoreSamplesLowerError) {
  const int d = 30, r = 4, reps = 20;
  auto median_mse = [&](double mult) {
    std::vector<double> errs;
    for (int rep = 0; rep < reps; ++rep) {
      const Tensor t = generate({d, r, 3, ComponentDistribution::gaussian, stream_seed(1, rep)}).tensor;
      Rng rng(stream_seed(2, rep));
      const auto y = project_mask(t, sample_exact(3, d, static_cast<std::uint64_t>(mult * std::pow(d, 1.5)), rng));
      UnfoldConfig cfg;
      cfg.seed = stream_seed(3, rep);
      errs.push_back(mse(t, complete_unfold(y, cfg).estimate));
    }
    return median(errs);
  };
  EXPECT_LT(median_mse(40), median_mse(10));
}

TEST(CompleteUnfold, DiagnosticsAndWarnings) {
  const Tensor t = generate({10, 2, 3, ComponentDistribution::gaussian, 1}).tensor;
  Rng rng(1);
  const auto y = project_mask(t, sample_exact(3, 10, 300, rng));
  UnfoldConfig cfg;
  cfg.params = unfolding_params(t);
  const auto res = complete_unfold(y, cfg);
  EXPECT_FALSE(res.diagnostics.warnings.empty());  // far below the guarantee window
  EXPECT_EQ(res.diagnostics.n, 300u);
  EXPECT_EQ(res.diagnostics.split_sizes[0] + res.diagnostics.split_sizes[1], 300u);
  const auto kv = res.diagnostics.to_key_values();
  EXPECT_NE(kv.find("rank_q="), std::string::npos);
  EXPECT_NE(kv.find("warning="), std::string::npos);
  EXPECT_EQ(res.estimate.order(), 3);
  EXPECT_EQ(res.estimate.dim(), 10);
}

TEST(CompleteUnfold, RejectsInvalidInput) {
  UnfoldConfig cfg;
  EXPECT_THROW(complete_unfold(project_mask(Tensor(3, 3), ObservationMask(3, 3, {})), cfg), std::invalid_argument);
  EXPECT_THROW(complete_unfold(project_mask(Tensor(2, 3), ObservationMask::full(2, 3)), cfg), std::invalid_argument);
  const auto y = project_mask(oracle::random_tensor(3, 3, 1), ObservationMask::full(3, 3));
  cfg.lambda_mode = LambdaMode::theorem;
  EXPECT_THROW(complete_unfold(y, cfg), std::invalid_argument);
  cfg.lambda_mode = LambdaMode::fixed;
  cfg.lambda_value = -1.0;
  EXPECT_THROW(complete_unfold(y, cfg), std::invalid_argument);
  cfg.lambda_value = 0.1;
  cfg.slack = 0.5;
  EXPECT_THROW(complete_unfold(y, cfg), std::invalid_argument);
}
