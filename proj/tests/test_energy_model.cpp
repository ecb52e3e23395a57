#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "eaplan/energy_model.hpp"

namespace eaplan {
namespace {

// h(t) = a0/T + (2/T) sum_j (a_j cos(w j t) + b_j sin(w j t)), written out here
// independently of the library.
double series(const std::vector<double>& a, const std::vector<double>& b, double T, double t) {
  double y = a[0] / T;
  for (std::size_t j = 1; j < a.size(); ++j) {
    const double arg = 2.0 * kPi * static_cast<double>(j) * t / T;
    y += 2.0 / T * (a[j] * std::cos(arg) + b[j - 1] * std::sin(arg));
  }
  return y;
}

FourierCoefficients random_coefficients(std::mt19937_64& rng, int order) {
  std::uniform_real_distribution<double> a0(500.0, 3000.0);
  std::uniform_real_distribution<double> ab(-100.0, 100.0);
  FourierCoefficients f;
  f.a.push_back(a0(rng));
  for (int j = 0; j < order; ++j) {
    f.a.push_back(ab(rng));
    f.b.push_back(ab(rng));
  }
  return f;
}

double pair_norm(const EnergyState& q, int j) { return std::hypot(q(2 * j - 1), q(2 * j)); }

TEST(BuildModel, FirstOrderMatrices) {
  const EnergyModel model = build_model(1, 2.0 * kPi, 0, 1);
  Eigen::MatrixXd A(3, 3);
  A << 0, 0, 0, 0, 0, 1, 0, -1, 0;
  EXPECT_TRUE(model.A.isApprox(A, 1e-15));
  Eigen::RowVectorXd C(3);
  C << 1, 1, 0;
  C /= 2.0 * kPi;
  EXPECT_TRUE(model.C.isApprox(C, 1e-15));
  EXPECT_EQ(model.B.rows(), 3);
  EXPECT_EQ(model.B.cols(), 1);
  EXPECT_EQ(model.B(0, 0), 1.0);
  EXPECT_EQ(model.B.bottomRows(2).norm(), 0.0);
}

TEST(BuildModel, Errors) {
  EXPECT_THROW(build_model(0, 60.0, 1, 1), Error);
  try {
    build_model(0, 60.0, 1, 1);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidOrder);
  }
  try {
    build_model(3, 0.0, 1, 1);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidPeriod);
  }
}

TEST(BuildModel, ThirdOrderStructure) {
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  EXPECT_EQ(model.m(), 7);
  EXPECT_EQ(model.n(), 2);
  EXPECT_EQ(model.B(0, 0), 0.0);  // path parameter column
  EXPECT_EQ(model.B(0, 1), 1.0);
  EXPECT_TRUE((model.A + model.A.transpose()).isZero(0.0));
  for (int j = 1; j <= 3; ++j) EXPECT_NEAR(model.A(2 * j - 1, 2 * j), model.omega * j, 1e-15);
}

TEST(InitialState, OutputMatchesSeriesAtZero) {
  const EnergyModel model = build_model(1, 2.0 * kPi, 0, 1);
  const FourierCoefficients f{{2.0, 4.0}, {6.0}};
  const EnergyState q = initial_state(model, f);
  EXPECT_NEAR(output(model, q), series(f.a, f.b, model.period, 0.0), 1e-15);
  EXPECT_EQ(q(0), 2.0);
}

TEST(InitialState, ZeroCoefficientsGiveZeroOutput) {
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  const EnergyState q = initial_state(model, {{0, 0, 0, 0}, {0, 0, 0}});
  EXPECT_EQ(q.norm(), 0.0);
  EXPECT_EQ(output(model, q), 0.0);
  EXPECT_EQ(output(model, EnergyState::Zero(7)), 0.0);
}

TEST(InitialState, LengthMismatch) {
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  EXPECT_THROW(initial_state(model, {{1, 2}, {3}}), Error);
}

TEST(Step, FullPeriodReturnsToStart) {
  std::mt19937_64 rng(1);
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  const EnergyState q0 = initial_state(model, random_coefficients(rng, 3));
  const int steps = 6000;
  EnergyState q = q0;
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(2);
  for (int k = 0; k < steps; ++k) q = step(model, q, u, model.period / steps);
  EXPECT_LT((q - q0).norm() / q0.norm(), 1e-9);
}

TEST(Step, ComputeInputOnlyMovesAlphaZero) {
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  EnergyState q = EnergyState::Zero(7);
  q(1) = 3.0;
  Eigen::VectorXd u(2);
  u << 0.0, 2.5;
  const double h = 0.01;
  const EnergyState next = step(model, q, u, h);
  const EnergyState free = step(model, q, Eigen::VectorXd::Zero(2), h);
  EXPECT_NEAR(next(0) - q(0), 2.5 * h, 1e-15);
  EXPECT_TRUE(next.tail(6).isApprox(free.tail(6), 0.0));
}

TEST(Step, RejectsBadArguments) {
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  EXPECT_THROW(step(model, EnergyState::Zero(7), Eigen::VectorXd::Zero(2), 0.0), Error);
  EXPECT_THROW(step(model, EnergyState::Zero(7), Eigen::VectorXd::Zero(3), 0.01), Error);
}

TEST(Step, PropagatorAndTransitionAgree) {
  std::mt19937_64 rng(2);
  const EnergyModel model = build_model(3, 47.0, 1, 1);
  EnergyState a = initial_state(model, random_coefficients(rng, 3));
  EnergyState b = a;
  const Propagator prop(model, 0.01);
  for (int k = 0; k < 1000; ++k) prop(a);
  b = transition(model, 10.0) * b;
  EXPECT_LT((a - b).norm() / b.norm(), 1e-10);
}

class ZeroInputEquivalence : public ::testing::TestWithParam<int> {};

TEST_P(ZeroInputEquivalence, MatchesSeriesOverOnePeriod) {
  const int order = GetParam();
  std::mt19937_64 rng(100 + order);
  for (int trial = 0; trial < 5; ++trial) {
    const double T = 30.0 + 10.0 * trial;
    const EnergyModel model = build_model(order, T, 1, 1);
    const FourierCoefficients f = random_coefficients(rng, order);
    EnergyState q = initial_state(model, f);
    const int points = 1000;
    const double h = T / points;
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(2);
    for (int k = 0; k < points; ++k) {
      const double truth = series(f.a, f.b, T, k * h);
      EXPECT_LT(std::abs(output(model, q) - truth) / std::abs(truth), 1e-6) << "k=" << k;
      q = step(model, q, u, h);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Orders, ZeroInputEquivalence, ::testing::Values(1, 2, 3, 4, 5));

TEST(Harmonics, PairNormsConservedUnderAnyInput) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 10.0);
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  EnergyState q = initial_state(model, random_coefficients(rng, 3));
  std::vector<double> start;
  for (int j = 1; j <= 3; ++j) start.push_back(pair_norm(q, j));
  for (int k = 0; k < 10000; ++k) {
    Eigen::VectorXd u(2);
    u << noise(rng), noise(rng);
    q = step(model, q, u, 0.01);
    if (k % 7 == 0) q = apply_change(model, q, u);
  }
  for (int j = 1; j <= 3; ++j) EXPECT_NEAR(pair_norm(q, j), start[j - 1], 1e-9 * start[j - 1]);
}

TEST(ApplyChange, ShiftsOutputByInput) {
  std::mt19937_64 rng(4);
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  const EnergyState q = initial_state(model, random_coefficients(rng, 3));
  Eigen::VectorXd u(2);
  u << 7.0, 5.0;
  const EnergyState shifted = apply_change(model, q, u);
  EXPECT_NEAR(output(model, shifted) - output(model, q), 5.0, 1e-12);
  EXPECT_TRUE(shifted.tail(6).isApprox(q.tail(6), 0.0));
}

TEST(WithPeriod, PreservesOutput) {
  std::mt19937_64 rng(5);
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  const EnergyState q = initial_state(model, random_coefficients(rng, 3));
  const auto [next, q2] = with_period(model, q, 75.0);
  EXPECT_DOUBLE_EQ(next.period, 75.0);
  EXPECT_NEAR(output(next, q2), output(model, q), 1e-10);
}

TEST(ScalePath, Examples) {
  const ScalingFactors s = scale_path({{-1000.0, 0.0}}, 300.0, 360.0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s.nu[0], 0.06, 1e-15);
  EXPECT_NEAR(s.tau[0], 360.0, 1e-12);
  EXPECT_NEAR(s.apply(0, -1000.0), 300.0, 1e-12);

  const ScalingFactors zero_lo = scale_path({{0.0, 10.0}}, 300.0, 360.0);
  EXPECT_DOUBLE_EQ(zero_lo.tau[0], 300.0);

  const ScalingFactors two = scale_path({{0.0, 10.0}, {0.0, 20.0}}, 300.0, 360.0);
  EXPECT_DOUBLE_EQ(two.tau[0] + two.tau[1], 300.0);
  EXPECT_NEAR(two.apply(0, 10.0) + two.apply(1, 20.0), 360.0, 1e-12);
}

TEST(ScaleCompute, Examples) {
  const ScalingFactors s = scale_compute({{2.0, 10.0}}, [](double c) { return c == 2.0 ? 4.0 : 9.0; });
  EXPECT_DOUBLE_EQ(s.nu[0], 0.625);
  EXPECT_DOUBLE_EQ(s.tau[0], 2.75);
  EXPECT_DOUBLE_EQ(s.apply(0, 2.0), 4.0);
  EXPECT_DOUBLE_EQ(s.apply(0, 10.0), 9.0);

  const ScalingFactors flat = scale_compute({{2.0, 10.0}}, [](double) { return 3.3; });
  EXPECT_EQ(flat.nu[0], 0.0);
  EXPECT_DOUBLE_EQ(flat.tau[0], 3.3);
}

TEST(ScaleCompute, PredictorFailureIsReported) {
  try {
    scale_compute({{2.0, 10.0}}, [](double) -> double { throw Error(Errc::OutOfRange, "x"); });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PredictorUndefined);
  }
}

TEST(ControlInput, Examples) {
  const ScalingFactors s = concat(scale_path({{-1000.0, 0.0}}, 300.0, 360.0),
                                  scale_compute({{2.0, 10.0}}, [](double c) { return c == 2.0 ? 4.0 : 9.0; }));
  const ParamVector c{{-200.0}, {2.0}};
  EXPECT_EQ(control_input(c, c, s).norm(), 0.0);
  const Eigen::VectorXd u = control_input(c, {{-200.0}, {10.0}}, s);
  EXPECT_DOUBLE_EQ(u(1), 5.0);
  EXPECT_EQ(u(0), 0.0);
}

TEST(ControlInput, TranslationInvariant) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> any(-50.0, 50.0);
  const ScalingFactors s{{0.06, 0.625}, {360.0, 2.75}};
  for (int trial = 0; trial < 100; ++trial) {
    const ParamVector a{{any(rng)}, {any(rng)}};
    const ParamVector b{{any(rng)}, {any(rng)}};
    const double k = any(rng);
    const ParamVector a2{{a.path[0] + k}, {a.compute[0] + k}};
    const ParamVector b2{{b.path[0] + k}, {b.compute[0] + k}};
    EXPECT_TRUE(control_input(a, b, s).isApprox(control_input(a2, b2, s), 1e-9));
  }
}

TEST(ModelCsv, DumpsEveryEntry) {
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  std::ostringstream out;
  write_model_csv(out, model);
  std::size_t lines = 0;
  for (char ch : out.str()) lines += ch == '\n';
  EXPECT_EQ(lines, 1u + 49u + 14u + 7u);
}

}  // namespace
}  // namespace eaplan
