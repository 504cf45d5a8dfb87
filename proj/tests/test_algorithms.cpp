#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "linbet/baselines.hpp"
#include "linbet/ellipsoid.hpp"
#include "linbet/menu.hpp"
#include "linbet/policy.hpp"
#include "linbet/tofu.hpp"
#include "linbet/validation.hpp"

using namespace linbet;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Matrix cols(std::initializer_list<Vector> vs) {
  Matrix m(vs.begin()->size(), static_cast<Eigen::Index>(vs.size()));
  Eigen::Index c = 0;
  for (const auto& v : vs) m.col(c++) = v;
  return m;
}

ConfidenceEllipsoid make_ellipsoid(const Matrix& V, const Vector& center, double radius) {
  return {center, radius, V, V.inverse()};
}

// 2x2 straight-line oracle in long double.
using LD = long double;
struct M2 {
  LD a, b, c;  // symmetric [[a, b], [b, c]]
};

M2 inv_sqrt_2x2(M2 m) {
  // sqrt(A) = (A + s I) / t with s = sqrt(det A), t = sqrt(tr A + 2 s)
  const LD s = std::sqrt(m.a * m.c - m.b * m.b);
  const LD t = std::sqrt(m.a + m.c + 2 * s);
  const M2 r{(m.a + s) / t, m.b / t, (m.c + s) / t};
  const LD det = r.a * r.c - r.b * r.b;
  return {r.c / det, -r.b / det, r.a / det};
}

}  // namespace

// ---------------------------------------------------------------------------
// Optimistic selection

TEST(OptimisticSelection, ZeroRadiusPicksBestMean) {
  const auto ell = make_ellipsoid(Matrix::Identity(2, 2), vec({1, 0}), 0.0);
  EXPECT_EQ(select_optimistic_arm(ell, cols({vec({1, 0}), vec({0, 1})})), 0u);
}

TEST(OptimisticSelection, ValueReducesToRadiusTimesNorm) {
  const auto ell = make_ellipsoid(Matrix::Identity(2, 2), vec({0, 0}), 1.0);
  const Matrix arms = cols({vec({1, 0}), vec({0, 2})});
  EXPECT_EQ(select_optimistic_arm(ell, arms), 1u);
  EXPECT_DOUBLE_EQ(optimistic_values(ell, arms)(1), 2.0);
}

TEST(OptimisticSelection, TiesAndDegenerateArms) {
  const auto ell = make_ellipsoid(Matrix::Identity(3, 3), vec({1, 1, 1}), 2.0);
  EXPECT_EQ(select_optimistic_arm(ell, Matrix::Ones(3, 5)), 0u);
  EXPECT_EQ(select_optimistic_arm(ell, Matrix::Zero(3, 4)), 0u);
  EXPECT_THROW(select_optimistic_arm(ell, Matrix(3, 0)), InvalidInput);
}

TEST(OptimisticSelection, DominatesRejectionSamples) {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix V = detail::random_spd(2, rng, 0.5, 4.0);
    const auto ell = make_ellipsoid(V, detail::gaussian_vector(2, rng), 1.5);
    Matrix arms(2, 10);
    for (Eigen::Index a = 0; a < 10; ++a) arms.col(a) = detail::gaussian_vector(2, rng);
    const Vector values = optimistic_values(ell, arms);
    // Bounding box of the ellipsoid: |theta_i - c_i| <= beta sqrt((V^{-1})_{ii}).
    const Vector half = ell.radius * ell.metric_inverse.diagonal().cwiseSqrt();
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector best = Vector::Constant(10, -INFINITY);
    int accepted = 0;
    while (accepted < 10000) {
      Vector theta = ell.center;
      for (Eigen::Index i = 0; i < 2; ++i) theta(i) += half(i) * u(rng);
      if (!ell.contains(theta)) continue;
      ++accepted;
      for (Eigen::Index a = 0; a < 10; ++a) {
        const double v = arms.col(a).dot(theta);
        ASSERT_LE(v, values(a) + 1e-12);
        best(a) = std::max(best(a), v);
      }
    }
    for (Eigen::Index a = 0; a < 10; ++a) {
      const double scale = ell.radius * weighted_norm(ell.metric_inverse, arms.col(a));
      EXPECT_LE(values(a) - best(a), 0.02 * scale + 1e-12);
    }
  }
}

TEST(OptimisticSelection, MaximizerIdentity) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + trial % 6;
    const auto ell = make_ellipsoid(detail::random_spd(d, rng), detail::gaussian_vector(d, rng), 0.3 + trial % 4);
    const Vector x = detail::gaussian_vector(d, rng);
    const Vector theta = optimistic_parameter(ell, x);
    EXPECT_NEAR(ell.distance(theta), ell.radius, 1e-9 * (1 + ell.radius));
    EXPECT_NEAR(x.dot(theta), optimistic_values(ell, Matrix(x))(0), 1e-9);
  }
}

TEST(OptimisticSelection, ScalingValuesKeepsArgmax) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix V = detail::random_spd(4, rng);
    const Vector c = detail::gaussian_vector(4, rng);
    Matrix arms(4, 12);
    for (Eigen::Index a = 0; a < 12; ++a) arms.col(a) = detail::gaussian_vector(4, rng);
    const auto base = make_ellipsoid(V, c, 1.7);
    const double k = 0.1 + trial;
    const auto scaled = make_ellipsoid(V, k * c, k * 1.7);
    EXPECT_EQ(select_optimistic_arm(base, arms), select_optimistic_arm(scaled, arms));
  }
}

TEST(OptimisticSelection, BoundaryDominance) {
  const auto r = check_ellipsoid_dominance(200, 200, 5);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Ellipsoid, InitialRegionAndCertify) {
  DesignState s(3, 2.0);
  const auto e = ConfidenceEllipsoid::initial(s, 5.0);
  EXPECT_EQ(e.center, Vector::Zero(3));
  EXPECT_DOUBLE_EQ(e.radius, std::sqrt(2.0) * 5.0);
  EXPECT_TRUE(e.contains(Vector::Constant(3, 5.0 / std::sqrt(3.0)) * (1 - 1e-12)));
}

// ---------------------------------------------------------------------------
// Median selection

TEST(MedianSelection, IdenticalEstimatesTieToFirst) {
  const Matrix est = Matrix::Ones(3, 3);
  const auto sel = select_median_estimate(est, Matrix::Identity(3, 3));
  EXPECT_EQ(sel.index, 0u);
  for (double r : sel.radii) EXPECT_EQ(r, 0.0);
}

TEST(MedianSelection, LowerMedianConvention) {
  // Points on a line at 0, 1, 3, 10 with V = I: distances from each point
  // 0: {1,3,10} -> 2nd smallest 3 ; 1: {1,2,9} -> 2 ; 3: {3,2,7} -> 3 ; 10: {10,9,7} -> 9
  const Matrix est = cols({vec({0}), vec({1}), vec({3}), vec({10})});
  const auto sel = select_median_estimate(est, Matrix::Identity(1, 1));
  EXPECT_EQ(sel.index, 1u);
  EXPECT_EQ(sel.radii, (std::vector<double>{3, 2, 3, 9}));
  // k = 4: ceil(3/2) = 2nd smallest of 3 distances; k = 5: ceil(4/2) = 2nd smallest of 4
  const Matrix five = cols({vec({0}), vec({1}), vec({2}), vec({4}), vec({8})});
  const auto s5 = select_median_estimate(five, Matrix::Identity(1, 1));
  EXPECT_EQ(s5.radii, (std::vector<double>{2, 1, 2, 3, 6}));
  EXPECT_EQ(s5.index, 1u);
  EXPECT_DOUBLE_EQ(lower_median({4, 1, 3, 2}), 2.0);
  EXPECT_DOUBLE_EQ(lower_median({5, 1, 3}), 3.0);
  EXPECT_THROW(lower_median({}), InvalidInput);
  EXPECT_THROW(select_median_estimate(Matrix(2, 0), Matrix::Identity(2, 2)), InvalidInput);
}

TEST(MedianSelection, BallPropertyOnSyntheticConfigurations) {
  const auto r = check_median_of_means_ball(1000, {5, 25, 373}, 11);
  EXPECT_TRUE(r.pass) << r.detail;
}

// ---------------------------------------------------------------------------
// MENU

TEST(Menu, ScheduleArithmetic) {
  auto s = menu_schedule(20000, 0.1);
  EXPECT_EQ(s.k, 317u);  // ceil(24 ln(2e5 e)) = ceil(316.95)
  EXPECT_EQ(s.N, 63u);
  s = menu_schedule(20000, 0.01);
  EXPECT_EQ(s.k, 373u);  // ceil(372.21)
  EXPECT_EQ(s.N, 53u);
  EXPECT_EQ(373u * 53u, 19769u);
  for (std::size_t T : {400u, 1000u, 12345u, 100000u}) {
    for (double delta : {0.5, 0.1, 0.01}) {
      const auto sc = menu_schedule(T, delta);
      EXPECT_EQ(static_cast<double>(sc.k), std::ceil(24.0 * (1.0 + std::log(T / delta))));
      EXPECT_EQ(sc.N, T / sc.k);
      EXPECT_LE(sc.k * sc.N, T);
    }
  }
}

TEST(Menu, HorizonGate) {
  const double gate = 256.0 + 24.0 * std::log(std::numbers::e / 0.1);
  EXPECT_NEAR(menu_min_horizon(0.1), gate, 1e-12);
  EXPECT_THROW(check_menu_horizon(335, 0.1), ConfigError);
  EXPECT_NO_THROW(check_menu_horizon(336, 0.1));
  try {
    check_menu_horizon(100, 0.1);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("256 + 24 log(e/delta)"), std::string::npos);
  }
}

TEST(Menu, RadiusFormula) {
  MenuParams p{10, 3.0, 1.0, 0.1, 1.0, std::sqrt(10.0), 20000, std::nullopt};
  EXPECT_NEAR(menu_radius(p, 1), 3.0 * (std::sqrt(270.0) + std::sqrt(10.0)), 1e-12);
  EXPECT_NEAR(menu_radius(p, 1), 58.78, 5e-3);
  EXPECT_DOUBLE_EQ(menu_radius(p, 1), menu_radius(p, 50));
  p.epsilon = 0.5;
  double prev = 0.0;
  for (std::size_t n = 1; n <= 200; ++n) {
    const double b = menu_radius(p, n);
    const double oracle = 3.0 * (std::pow(90.0 * 3.0, 1.0 / 1.5) * std::pow(n, 0.5 / 3.0) + std::sqrt(10.0));
    EXPECT_NEAR(b, oracle, 1e-9 * oracle);
    EXPECT_GE(b, prev);
    EXPECT_GE(b, std::sqrt(p.lambda) * p.S);
    prev = b;
  }
}

TEST(Menu, IdenticalStreamsGiveIdenticalEstimates) {
  MenuParams p{2, 1.0, 1.0, 0.1, 1.0, 1.0, 30, std::size_t{3}};
  MenuState st(p);
  EXPECT_EQ(st.k(), 3u);
  EXPECT_EQ(st.N(), 10u);
  const std::array<double, 3> y = {0.7, 0.7, 0.7};
  st.update(vec({1, 0.5}), y);
  EXPECT_EQ(st.selected_group(), 0u);
  EXPECT_LE((st.estimates().col(0) - st.estimates().col(2)).norm(), 0.0);
}

TEST(Menu, GroupSumIdentityAgainstScratchRegression) {
  Rng rng(4);
  const std::size_t d = 4, k = 7;
  MenuParams p{d, 3.0, 1.0, 0.1, 1.0, 2.0, 700, k};
  MenuState st(p);
  std::vector<Vector> xs;
  std::vector<std::vector<double>> ys;
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int n = 0; n < 40; ++n) {
    xs.push_back(detail::unit_ball_point(d, rng));
    std::vector<double> y(k);
    for (auto& v : y) v = normal(rng);
    ys.push_back(y);
    st.update(xs.back(), y);
  }
  Matrix V = Matrix::Identity(4, 4);
  for (const auto& x : xs) V += x * x.transpose();
  const Matrix Vinv = V.fullPivLu().inverse();
  for (std::size_t j = 0; j < k; ++j) {
    Vector s = Vector::Zero(4);
    for (std::size_t n = 0; n < xs.size(); ++n) s += ys[n][j] * xs[n];
    EXPECT_LE((st.estimates().col(static_cast<Eigen::Index>(j)) - Vinv * s).cwiseAbs().maxCoeff(), 1e-8);
  }
  EXPECT_EQ(st.group_sums().cols(), static_cast<Eigen::Index>(k));  // O(k d) storage
  EXPECT_EQ(st.epoch(), 40u);
  // center is the estimate with the smallest median distance
  const auto sel = select_median_estimate(st.estimates(), V);
  EXPECT_EQ(st.selected_group(), sel.index);
  EXPECT_EQ(st.ellipsoid().center, st.estimates().col(static_cast<Eigen::Index>(sel.index)));
  EXPECT_DOUBLE_EQ(st.ellipsoid().radius, menu_radius(p, 40));
}

TEST(Menu, CertifyAndDisplacement) {
  MenuParams p{3, 1.0, 1.0, 0.1, 1.0, 1.0, 30, std::size_t{3}};
  MenuState st(p);
  const std::array<double, 3> y = {1.0, 2.0, 3.0};
  st.update(vec({1, 0, 0}), y);
  const auto& e = st.ellipsoid();
  EXPECT_TRUE(st.certify(e.center));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(e.metric);
  const Vector dir = eig.eigenvectors().col(0) / std::sqrt(eig.eigenvalues()(0));  // unit V-norm
  EXPECT_FALSE(st.certify(e.center + 2.0 * e.radius * dir));
  EXPECT_TRUE(st.certify(e.center + 0.99 * e.radius * dir));
}

TEST(Menu, Errors) {
  MenuParams p{2, 1.0, 1.0, 0.1, 1.0, 1.0, 20000, std::nullopt};
  MenuState st(p);
  std::vector<double> wrong(st.k() - 1, 0.0);
  EXPECT_THROW(st.update(vec({1, 0}), wrong), InvalidInput);
  std::vector<double> bad(st.k(), 0.0);
  bad[3] = NAN;
  EXPECT_THROW(st.update(vec({1, 0}), bad), InvalidInput);
  p.epsilon = 1.5;
  EXPECT_THROW(MenuState{p}, ConfigError);
  p.epsilon = 1.0;
  p.T = 100;  // k > T, no full epoch
  EXPECT_THROW(MenuState{p}, ConfigError);
  EXPECT_THROW(menu_schedule(1000, 1.5), ConfigError);
}

// ---------------------------------------------------------------------------
// TOFU

TEST(Tofu, ThresholdAndRadiusFormulas) {
  TofuParams p{10, 7.7, 0.5, 0.1, 1.0, std::sqrt(10.0), 10000};
  for (std::size_t t : {1u, 10u, 500u, 10000u}) {
    const double growth = std::pow(static_cast<double>(t), 0.5 / 3.0);
    EXPECT_NEAR(tofu_threshold(p, t), std::pow(7.7 / std::log(2.0 * 10 * 10000 / 0.1), 1.0 / 1.5) * growth, 1e-12);
    EXPECT_NEAR(tofu_radius(p, t),
                4.0 * std::sqrt(10.0) * std::pow(7.7, 1.0 / 1.5) * std::pow(std::log(2e5 / 0.1), 0.5 / 1.5) * growth +
                    std::sqrt(10.0),
                1e-9);
  }
  p.convention = TruncationConvention::Literal;
  EXPECT_NEAR(tofu_threshold(p, 64), std::pow(7.7 / std::log(2.0 * 10000 / 0.1), 2.0) * 2.0, 1e-12);
  TofuParams q{10, 7.7, 0.5, 0.1, 1.0, 1.0, 10000};
  double prev = 0.0;
  for (std::size_t t = 1; t <= 1000; ++t) {
    EXPECT_GE(tofu_radius(q, t), prev);
    prev = tofu_radius(q, t);
  }
  EXPECT_EQ(parse_truncation_convention("algorithm-line-4"), TruncationConvention::Literal);
  EXPECT_THROW(parse_truncation_convention("two-sided"), ConfigError);
}

TEST(Tofu, NoClipIdentity) {
  const auto r = check_noclip_identity(100, 3);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Tofu, SingleHugeObservationIsFullyClipped) {
  TofuParams p{3, 1.0, 1.0, 0.1, 1.0, 1.0, 100};
  TofuState st(p);
  st.update(vec({0.5, 0.3, 0.2}), 1e9);
  EXPECT_EQ(st.last_clipped(), 3u);
  EXPECT_EQ(st.ellipsoid().center, Vector::Zero(3));
}

TEST(Tofu, HandcraftedHistoryMatchesLongDoubleOracle) {
  // lambda = 1, history x = (1,0), (0,1), (1,1), y = (1, 2, 40)
  DesignState design(2, 1.0);
  const Matrix X = cols({vec({1, 0}), vec({0, 1}), vec({1, 1})});
  const Vector y = vec({1, 2, 40});
  for (Eigen::Index t = 0; t < 3; ++t) design.update(X.col(t));

  const M2 V{3, 1, 3};
  const M2 M = inv_sqrt_2x2(V);
  const std::array<std::array<LD, 2>, 3> xs = {{{1, 0}, {0, 1}, {1, 1}}};
  const std::array<LD, 3> ys = {1, 2, 40};
  std::array<std::array<LD, 3>, 2> uy{};
  for (int tau = 0; tau < 3; ++tau) {
    uy[0][tau] = (M.a * xs[tau][0] + M.b * xs[tau][1]) * ys[tau];
    uy[1][tau] = (M.b * xs[tau][0] + M.c * xs[tau][1]) * ys[tau];
  }
  // u_{i,3} y_3 = 20 for both rows and every other term is below 2, so 15 clips exactly the third column.
  const LD threshold = 15;
  std::array<LD, 2> z{0, 0};
  int clipped = 0;
  for (int i = 0; i < 2; ++i)
    for (int tau = 0; tau < 3; ++tau)
      if (std::fabs(uy[i][tau]) <= threshold) z[i] += uy[i][tau];
      else ++clipped;
  const LD t0 = M.a * z[0] + M.b * z[1], t1 = M.b * z[0] + M.c * z[1];

  Matrix scratch;
  const auto est = truncated_estimate(design, X, y, static_cast<double>(threshold), TruncationConvention::Proof,
                                      scratch);
  EXPECT_EQ(est.clipped, static_cast<std::size_t>(clipped));
  EXPECT_EQ(clipped, 2);
  EXPECT_NEAR(est.theta(0), static_cast<double>(t0), 1e-13);
  EXPECT_NEAR(est.theta(1), static_cast<double>(t1), 1e-13);

  // Asymmetric history so exactly one term is clipped.
  DesignState d2(2, 1.0);
  const Matrix X2 = cols({vec({1, 0}), vec({0.2, 1}), vec({1, 0.5})});
  const Vector y2 = vec({1, -3, 12});
  for (Eigen::Index t = 0; t < 3; ++t) d2.update(X2.col(t));
  const Matrix V2 = d2.V();
  const M2 Mb = inv_sqrt_2x2({V2(0, 0), V2(0, 1), V2(1, 1)});
  std::array<std::array<LD, 3>, 2> w{};
  for (int tau = 0; tau < 3; ++tau) {
    w[0][tau] = (Mb.a * X2(0, tau) + Mb.b * X2(1, tau)) * y2(tau);
    w[1][tau] = (Mb.b * X2(0, tau) + Mb.c * X2(1, tau)) * y2(tau);
  }
  std::vector<LD> mags;
  for (auto& row : w)
    for (LD v : row) mags.push_back(std::fabs(v));
  std::sort(mags.begin(), mags.end());
  const LD thr = (mags[4] + mags[5]) / 2;  // clips only the largest
  std::array<LD, 2> zz{0, 0};
  for (int i = 0; i < 2; ++i)
    for (int tau = 0; tau < 3; ++tau)
      if (std::fabs(w[i][tau]) <= thr) zz[i] += w[i][tau];
  const auto est2 =
      truncated_estimate(d2, X2, y2, static_cast<double>(thr), TruncationConvention::Proof, scratch);
  EXPECT_EQ(est2.clipped, 1u);
  EXPECT_NEAR(est2.theta(0), static_cast<double>(Mb.a * zz[0] + Mb.b * zz[1]), 1e-13);
  EXPECT_NEAR(est2.theta(1), static_cast<double>(Mb.b * zz[0] + Mb.c * zz[1]), 1e-13);
}

TEST(Tofu, LiteralConventionIsOneSided) {
  DesignState design(1, 1.0);
  const Matrix X = cols({vec({1})});
  design.update(X.col(0));
  Matrix scratch;
  const Vector y = vec({-100});
  const auto proof = truncated_estimate(design, X, y, 1.0, TruncationConvention::Proof, scratch);
  const auto literal = truncated_estimate(design, X, y, 1.0, TruncationConvention::Literal, scratch);
  EXPECT_EQ(proof.clipped, 1u);
  EXPECT_EQ(literal.clipped, 0u);
  EXPECT_NEAR(literal.theta(0), -50.0, 1e-12);  // ridge: 1/(1+1) * (-100)
  EXPECT_THROW(truncated_estimate(design, cols({vec({1}), vec({1})}), y, 1.0, TruncationConvention::Proof, scratch),
               InvalidInput);
}

TEST(Tofu, StateKeepsFullHistoryAndGrows) {
  TofuParams p{2, 5.0, 1.0, 0.1, 1.0, 1.0, 4};
  TofuState st(p);
  for (int t = 0; t < 9; ++t) st.update(vec({1.0, 0.1 * t}), 0.5 * t);
  EXPECT_EQ(st.t(), 9u);
  EXPECT_EQ(st.history_arms().cols(), 9);
  EXPECT_EQ(st.history_payoffs().size(), 9);
  EXPECT_DOUBLE_EQ(st.history_payoffs()(8), 4.0);
  EXPECT_DOUBLE_EQ(st.ellipsoid().radius, tofu_radius(p, 9));
  EXPECT_THROW(st.update(vec({1.0, 0.0}), NAN), InvalidInput);
  EXPECT_THROW(st.update(vec({1.0}), 1.0), InvalidInput);
  EXPECT_TRUE(st.certify(st.ellipsoid().center));
}

// ---------------------------------------------------------------------------
// MoM

TEST(Mom, ScheduleAndGroups) {
  auto s = mom_schedule(20000, 1.0);
  EXPECT_EQ(s.N, 142u);
  EXPECT_EQ(s.k, 140u);
  EXPECT_LE(s.N * s.k, 20000u);
  s = mom_schedule(20000, 0.5);
  EXPECT_EQ(s.N, static_cast<std::size_t>(std::ceil(std::pow(20000.0, 0.4))));
  MomParams p{10, 3.0, 1.0, 0.1, 1.0, 1.0, 20000, std::nullopt};
  EXPECT_EQ(mom_group_count(p, 140), 98u);  // ceil(8 ln(2e5)) = ceil(97.65)
  EXPECT_EQ(mom_group_count(p, 50), 50u);
  p.groups = 7;
  EXPECT_EQ(mom_group_count(p, 140), 7u);
  EXPECT_THROW(mom_schedule(0, 1.0), ConfigError);
}

TEST(Mom, MedianOfGroupMeans) {
  const std::vector<double> flat(12, 2.5);
  EXPECT_DOUBLE_EQ(median_of_group_means(flat, 4), 2.5);
  const std::vector<double> spike = {0, 0, 0, 100};
  EXPECT_DOUBLE_EQ(median_of_group_means(spike, 2), 0.0);
  // remainder dropped: groups {1,2},{3,4},{5,6}; 7 unused
  const std::vector<double> rem = {1, 2, 3, 4, 5, 6, 700};
  EXPECT_DOUBLE_EQ(median_of_group_means(rem, 3), 3.5);
  EXPECT_THROW(median_of_group_means(spike, 5), InvalidInput);
  EXPECT_THROW(median_of_group_means(spike, 0), InvalidInput);
}

TEST(Mom, RidgeOverSummaries) {
  MomParams p{2, 1.0, 1.0, 0.1, 1.0, 1.0, 400, std::nullopt};
  MomState st(p);
  ASSERT_EQ(st.k(), 20u);
  std::vector<double> y(st.k(), 3.0);
  st.update(vec({1, 0}), y);
  EXPECT_DOUBLE_EQ(st.last_summary(), 3.0);
  EXPECT_NEAR(st.ellipsoid().center(0), 1.5, 1e-15);
  EXPECT_DOUBLE_EQ(st.ellipsoid().radius, mom_radius(p, st.groups(), st.k(), 1));
  EXPECT_THROW(st.update(vec({1, 0}), std::vector<double>(3, 1.0)), InvalidInput);
}

TEST(Mom, RadiusFormula) {
  MomParams p{10, 3.0, 1.0, 0.1, 2.0, 3.0, 20000, std::nullopt};
  EXPECT_NEAR(mom_radius(p, 98, 140, 4), std::sqrt(36.0) * std::sqrt(98.0 / 140.0) * 2.0 + std::sqrt(2.0) * 3.0,
              1e-12);
}

// ---------------------------------------------------------------------------
// CRT

TEST(Crt, TruncatesOnceAtObservation) {
  CrtParams p{2, 2.0, 1.0, 0.1, 1.0, 1.0, 1.0, 1000};
  CrtState st(p);
  const double b1 = crt_threshold(p, 1);
  EXPECT_NEAR(b1, std::sqrt(2.0 / std::log(2.0 * 1000 / 0.1)), 1e-15);
  st.update(vec({1, 0}), 0.5 * b1);
  EXPECT_DOUBLE_EQ(st.last_stored(), 0.5 * b1);
  st.update(vec({1, 0}), 100.0);
  EXPECT_DOUBLE_EQ(st.last_stored(), 0.0);
  st.update(vec({1, 0}), -100.0);
  EXPECT_DOUBLE_EQ(st.last_stored(), 0.0);
  // center uses the stored values only: (0.5 b1) / (1 + 3)
  EXPECT_NEAR(st.ellipsoid().center(0), 0.5 * b1 / 4.0, 1e-15);
  // later rounds raise B_t but never revisit earlier payoffs
  for (int i = 0; i < 50; ++i) st.update(vec({0, 1}), 0.0);
  EXPECT_NEAR(st.ellipsoid().center(0), 0.5 * b1 / 4.0, 1e-15);
  EXPECT_THROW(st.update(vec({1, 0}), INFINITY), InvalidInput);
}

TEST(Crt, ThresholdMonotoneAndRadiusFormula) {
  CrtParams p{10, 10.0, 0.5, 0.1, 1.0, std::sqrt(10.0), std::sqrt(10.0), 10000};
  double prev = 0.0;
  for (std::size_t t = 1; t <= 10000; ++t) {
    const double b = crt_threshold(p, t);
    ASSERT_GE(b, prev);
    prev = b;
  }
  const double t = 100.0;
  const double oracle = 4.0 * std::pow(10.0, 1 / 1.5) * std::pow(std::log(2e4 / 0.1), 0.5 / 1.5) *
                            std::pow(t, 0.5 / 3.0) * std::sqrt(10.0 * std::log(1.0 + t * 10.0 / 10.0)) +
                        std::sqrt(10.0);
  EXPECT_NEAR(crt_radius(p, 100), oracle, 1e-9 * oracle);
}

// ---------------------------------------------------------------------------
// Policy interface

TEST(Policy, FactoryResolvesInstanceBounds) {
  const auto s1 = generate_instance(DatasetId::S1, 1);
  AlgoConfig cfg;
  auto menu = make_policy(cfg, s1, 20000);
  EXPECT_EQ(menu->pulls_per_decision(), 317u);
  EXPECT_EQ(menu->decisions(), 63u);
  EXPECT_EQ(menu->effective_rounds(), 19971u);
  cfg.algo = Algorithm::Mom;
  auto mom = make_policy(cfg, s1, 20000);
  EXPECT_EQ(mom->effective_rounds(), 140u * 142u);
  cfg.algo = Algorithm::Tofu;
  EXPECT_EQ(make_policy(cfg, s1, 500)->effective_rounds(), 500u);
  cfg.algo = Algorithm::Crt;
  EXPECT_EQ(make_policy(cfg, s1, 500)->effective_rounds(), 500u);
  cfg.pin_center = Vector::Zero(3);
  EXPECT_THROW(make_policy(cfg, s1, 500), ConfigError);
}

TEST(Policy, ConfigJson) {
  const auto cfg = parse_algo_config(nlohmann::json::parse(
      R"({"algo": "tofu", "lambda": 2, "delta": 0.05, "S": "auto", "moment_bound": 4.5,
          "truncation_convention": "literal", "menu_constant": 0.09})"));
  EXPECT_EQ(cfg.algo, Algorithm::Tofu);
  EXPECT_EQ(cfg.lambda, 2.0);
  EXPECT_EQ(cfg.delta, 0.05);
  EXPECT_FALSE(cfg.S.has_value());
  EXPECT_EQ(cfg.moment_bound, 4.5);
  EXPECT_EQ(cfg.truncation, TruncationConvention::Literal);
  EXPECT_EQ(cfg.menu_constant, 0.09);
  const auto back = parse_algo_config(algo_config_to_json(cfg));
  EXPECT_EQ(back.algo, cfg.algo);
  EXPECT_EQ(back.moment_bound, cfg.moment_bound);
  EXPECT_THROW(parse_algo_config(nlohmann::json::parse(R"({"algo": "ucb"})")), ConfigError);
  EXPECT_THROW(parse_algo_config(nlohmann::json::parse(R"({"delta": 1.5})")), ConfigError);
  EXPECT_THROW(parse_algo_config(nlohmann::json::parse(R"({"lambda": 0})")), ConfigError);
  EXPECT_THROW(parse_algo_config(nlohmann::json::parse(R"({"S": "big"})")), ConfigError);
  EXPECT_THROW(parse_algo_config(nlohmann::json::parse(R"({"lambda": "one"})")), ConfigError);
}
