#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ecolab/continuous.hpp"

using namespace ecolab;

namespace {

const LVParams kLV{1.0, 0.5, 0.1, 0.02};

Scenario single_species(double r, double s, double x0, double horizon, double step) {
  Scenario sc;
  sc.name = "single";
  sc.species = {{"x", "x", Role::producer, 0, r, s}};
  sc.initial_densities = {{"x", x0}};
  sc.integrator.step = step;
  sc.horizon = horizon;
  return sc;
}

// P' = P(1 - 0.1P - 0.1H), H' = H(-0.2 + 0.1P - 0.3T), T' = T(-0.3 + 0.1H)
Scenario food_chain() {
  Scenario s;
  s.species = {{"plant", "plant", Role::producer, 0, 1.0, 0.1},
               {"herbivore", "herbivore", Role::consumer, 1, 0.2, 0.0},
               {"carnivore", "carnivore", Role::consumer, 2, 0.3, 0.0}};
  s.interactions = {{"herbivore", "plant", InteractionKind::predation, 0.1, 0.0, LinearLV{0.1}, {}},
                    {"carnivore", "herbivore", InteractionKind::predation, 0.1, 0.0, LinearLV{0.3}, {}}};
  s.initial_densities = {{"plant", 10}, {"herbivore", 2}, {"carnivore", 1}};
  s.horizon = 10;
  return s;
}

}  // namespace

TEST(LvDerivative, InteriorEquilibriumIsExactlyZero) {
  const auto d = lv_derivative(25.0, 10.0, kLV);
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[1], 0.0);
  const auto eq = lv_equilibrium(kLV);
  EXPECT_EQ(eq[0], 25.0);
  EXPECT_EQ(eq[1], 10.0);
}

TEST(LvDerivative, PredatorFreeAxis) {
  const auto d = lv_derivative(7.0, 0.0, kLV);
  EXPECT_EQ(d[0], 7.0);
  EXPECT_EQ(d[1], 0.0);
}

TEST(LvDerivative, RejectsBadInput) {
  EXPECT_THROW(lv_derivative(std::nan(""), 1.0, kLV), InvalidInput);
  EXPECT_THROW(lv_derivative(1.0, INFINITY, kLV), InvalidInput);
  EXPECT_THROW(lv_derivative(-1.0, 1.0, kLV), InvalidInput);
}

// Division followed by multiplication does not always round-trip in binary
// floating point (a=49, r=1 is a counterexample), so the general property
// is checked to rounding level.
TEST(LvDerivative, EquilibriumVanishesToRoundingForRandomParameters) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const LVParams p{u(rng), u(rng), u(rng), u(rng)};
    const auto eq = lv_equilibrium(p);
    const auto d = lv_derivative(eq[0], eq[1], p);
    EXPECT_LE(std::abs(d[0]), 4 * std::numeric_limits<double>::epsilon() * p.r * eq[0]);
    EXPECT_LE(std::abs(d[1]), 4 * std::numeric_limits<double>::epsilon() * p.r_prime * eq[1]);
  }
}

TEST(FirstIntegral, GoldenValue) {
  // a'x - r' ln x + a y - r ln y at (30, 8), evaluated independently
  EXPECT_NEAR(lv_first_integral(30.0, 8.0, kLV), -2.380040232510914, 1e-14);
  EXPECT_NEAR(lv_first_integral(25.0, 10.0, kLV), -2.4120230054281464, 1e-14);
}

TEST(FirstIntegral, MinimumAtEquilibrium) {
  const double v0 = lv_first_integral(25.0, 10.0, kLV);
  for (double dx : {-1.0, -0.01, 0.01, 1.0})
    for (double dy : {-1.0, -0.01, 0.0, 0.01, 1.0}) EXPECT_GT(lv_first_integral(25.0 + dx, 10.0 + dy, kLV), v0);
}

TEST(FirstIntegral, RequiresPositiveDensities) {
  EXPECT_THROW(lv_first_integral(0.0, 1.0, kLV), InvalidInput);
  EXPECT_THROW(lv_first_integral(1.0, -1.0, kLV), InvalidInput);
}

TEST(FunctionalResponse, HollingAsymptote) {
  const double v = functional_response_eval(HollingII{2.0, 0.5}, 1e6);
  EXPECT_NEAR(v, 2.0, 2.0 * 1e-3);
  EXPECT_LT(v, 2.0);
}

TEST(FunctionalResponse, ZeroPreyZeroConsumption) {
  EXPECT_EQ(functional_response_eval(LinearLV{3.0}, 0.0), 0.0);
  EXPECT_EQ(functional_response_eval(HollingII{3.0, 0.2}, 0.0), 0.0);
  EXPECT_EQ(functional_response_eval(IvlevSaturating{3.0, 1.0}, 0.0), 0.0);
}

TEST(FunctionalResponse, IvlevAtLn2) {
  EXPECT_NEAR(functional_response_eval(IvlevSaturating{3.0, 1.0}, std::numbers::ln2), 1.5, 1e-15);
}

TEST(FunctionalResponse, HollingWithoutHandlingIsLinear) {
  for (double x : {0.0, 0.3, 7.0, 1e4})
    EXPECT_EQ(functional_response_eval(HollingII{0.7, 0.0}, x), functional_response_eval(LinearLV{0.7}, x));
}

TEST(FunctionalResponse, RejectsNegativeDensity) {
  EXPECT_THROW(functional_response_eval(LinearLV{1.0}, -0.1), InvalidInput);
}

TEST(FunctionalResponse, MonotoneNonDecreasing) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> par(0.0, 5.0), dens(0.0, 100.0);
  for (int i = 0; i < 3000; ++i) {
    const FunctionalResponse frs[] = {LinearLV{par(rng)}, HollingII{par(rng), par(rng)},
                                      IvlevSaturating{par(rng), par(rng)}};
    double x1 = dens(rng), x2 = dens(rng);
    if (x1 > x2) std::swap(x1, x2);
    for (const auto& fr : frs) {
      const double v1 = functional_response_eval(fr, x1);
      EXPECT_GE(v1, 0.0);
      EXPECT_LE(v1, functional_response_eval(fr, x2));
    }
  }
}

TEST(Glv, ReducesExactlyToClassicalSystem) {
  const auto s = lv_scenario(kLV, 30, 8);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), y = u(rng);
    const auto g = glv_derivative(std::vector<double>{x, y}, s);
    const auto l = lv_derivative(x, y, kLV);
    ASSERT_EQ(g[0], l[0]);
    ASSERT_EQ(g[1], l[1]);
  }
}

TEST(Glv, ZeroStateZeroDerivative) {
  const auto d = glv_derivative(std::vector<double>{0, 0, 0}, food_chain());
  EXPECT_EQ(d, (std::vector<double>{0, 0, 0}));
}

TEST(Glv, FoodChainInteriorEquilibrium) {
  const auto d = glv_derivative(std::vector<double>{7.0, 3.0, 5.0 / 3.0}, food_chain());
  for (double v : d) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(Glv, ChecksDimensionAndSign) {
  EXPECT_THROW(glv_derivative(std::vector<double>{1, 2}, food_chain()), InvalidInput);
  EXPECT_THROW(glv_derivative(std::vector<double>{1, -2, 1}, food_chain()), InvalidInput);
}

TEST(Glv, CompetitionAndMutualismSigns) {
  Scenario s;
  s.species = {{"u", "u", Role::producer, 0, 1.0, 0.0}, {"v", "v", Role::producer, 0, 1.0, 0.0}};
  s.interactions = {{"u", "v", InteractionKind::competition, 0.1, 0.2, LinearLV{}, {}}};
  s.initial_densities = {{"u", 1}, {"v", 1}};
  auto d = glv_derivative(std::vector<double>{2, 3}, s);
  EXPECT_DOUBLE_EQ(d[0], 2 - 0.1 * 6);
  EXPECT_DOUBLE_EQ(d[1], 3 - 0.2 * 6);
  s.interactions[0].kind = InteractionKind::cooperation;
  d = glv_derivative(std::vector<double>{2, 3}, s);
  EXPECT_DOUBLE_EQ(d[0], 2 + 0.1 * 6);
  EXPECT_DOUBLE_EQ(d[1], 3 + 0.2 * 6);
}

TEST(Glv, SaturatingResponseConversion) {
  // aggressor gains coef_first * FR(x_victim) / a * x_aggressor
  auto s = lv_scenario(kLV, 30, 8);
  s.interactions[0].response = HollingII{0.1, 0.5};
  const double x = 30, y = 8;
  const auto d = glv_derivative(std::vector<double>{x, y}, s);
  const double fr = 0.1 * x / (1 + 0.1 * 0.5 * x);
  EXPECT_NEAR(d[0], 1.0 * x - fr * y, 1e-12);
  EXPECT_NEAR(d[1], -0.5 * y + 0.02 * fr / 0.1 * y, 1e-12);
}

TEST(Continuum, Endpoints) {
  const double s = 0.3;
  auto f = continuum_community({1.0, s, 1, 1});
  EXPECT_EQ(f.kind, InteractionKind::symbiosis);
  EXPECT_EQ(f.benefit_first, s);
  EXPECT_EQ(f.benefit_second, s);
  f = continuum_community({-1.0, s, 1, 1});
  EXPECT_EQ(f.kind, InteractionKind::parasitism);
  EXPECT_EQ(f.benefit_first, s);
  EXPECT_EQ(f.benefit_second, -s);
  f = continuum_community({0.0, s, 1, 1});
  EXPECT_EQ(f.benefit_first, s);
  EXPECT_EQ(f.benefit_second, 0.0);
}

TEST(Continuum, LinearInAlpha) {
  for (double a = -1.0; a <= 1.0; a += 0.125) EXPECT_DOUBLE_EQ(continuum_community({a, 2.0, 1, 1}).benefit_second, 2.0 * a);
}

TEST(Continuum, Rejections) {
  EXPECT_THROW(continuum_community({1.01, 1, 1, 1}), InvalidInput);
  EXPECT_THROW(continuum_community({0.5, 1, 0, 1}), InvalidInput);
  EXPECT_THROW(continuum_community({0.5, 0, 1, 1}), InvalidInput);
}

TEST(Continuum, ParasiticEndMatchesSignedCoupling) {
  // the expanded entry must reproduce (+s, alpha*s) per-capita couplings
  Scenario sc;
  sc.species = {{"a", "a", Role::producer, 0, 0.0, 0.1}, {"b", "b", Role::producer, 0, 0.0, 0.1}};
  sc.initial_densities = {{"a", 1}, {"b", 1}};
  for (double alpha : {-1.0, -0.4, 0.0, 0.6, 1.0}) {
    sc.interactions = {{"a", "b", InteractionKind::symbiosis, 0, 0, LinearLV{}, ContinuumSource{alpha, 0.2}}};
    const double x = 3, y = 5;
    const auto d = glv_derivative(std::vector<double>{x, y}, sc);
    EXPECT_NEAR(d[0], -0.1 * x * x + 0.2 * x * y, 1e-14) << alpha;
    EXPECT_NEAR(d[1], -0.1 * y * y + alpha * 0.2 * x * y, 1e-14) << alpha;
  }
}

TEST(Integrate, ConstantTrajectory) {
  const auto r = simulate(single_species(0.0, 0.0, 5.0, 2.0, 0.1));
  for (std::size_t i = 0; i < r.trajectory.size(); ++i) EXPECT_EQ(r.trajectory.at(i, 0), 5.0);
  EXPECT_EQ(r.trajectory.times().back(), 2.0);
}

TEST(Integrate, ExponentialGrowthRk4) {
  const auto r = simulate(single_species(1.0, 0.0, 1.0, 1.0, 0.001));
  EXPECT_NEAR(r.trajectory.back()[0], std::numbers::e, 1e-6 * std::numbers::e);
  EXPECT_EQ(r.trajectory.size(), 1001u);
}

TEST(Integrate, ExponentialGrowthRk45) {
  auto s = single_species(1.0, 0.0, 1.0, 1.0, 0.1);
  s.integrator.method = IntegratorMethod::rk45_adaptive;
  const auto r = simulate(s);
  EXPECT_NEAR(r.trajectory.back()[0], std::numbers::e, 1e-6 * std::numbers::e);
  EXPECT_EQ(r.trajectory.times().back(), 1.0);
}

TEST(Integrate, LogisticApproachesCarryingCapacity) {
  auto s = single_species(1.0, 0.1, 0.5, 50.0, 0.5);
  s.integrator.method = IntegratorMethod::rk45_adaptive;
  EXPECT_NEAR(simulate(s).trajectory.back()[0], 10.0, 1e-6);
}

TEST(Integrate, ClosedOrbitReturnsToStart) {
  auto s = lv_scenario(kLV, 30, 8, 20.0, 0.01);
  const auto tr = simulate(s).trajectory;
  // after the first full loop the orbit passes within 1% of its start
  double best = INFINITY;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.times()[i] < 0.5 * lv_linear_period(kLV)) continue;
    best = std::min(best, std::hypot(tr.at(i, 0) - 30.0, tr.at(i, 1) - 8.0));
  }
  EXPECT_LT(best, 0.01 * std::hypot(30.0, 8.0));
}

TEST(Integrate, RK45ConservesFirstIntegral) {
  auto s = lv_scenario(kLV, 30, 8, 100.0, 0.1);
  s.integrator.method = IntegratorMethod::rk45_adaptive;
  const auto tr = simulate(s).trajectory;
  const double v0 = lv_first_integral(30, 8, kLV);
  for (std::size_t i = 0; i < tr.size(); ++i)
    ASSERT_LT(std::abs(lv_first_integral(tr.at(i, 0), tr.at(i, 1), kLV) - v0) / std::abs(v0), 1e-5);
}

TEST(Integrate, Deterministic) {
  auto s = food_chain();
  s.integrator.method = IntegratorMethod::rk45_adaptive;
  EXPECT_EQ(simulate(s).trajectory, simulate(s).trajectory);
}

TEST(Integrate, ExtinctionIsClampedAndReported) {
  auto s = single_species(1.0, 0.0, 1.0, 30.0, 0.01);
  s.species[0].role = Role::consumer;  // pure decline e^-t
  s.integrator.extinction_epsilon = 1e-6;
  const auto r = simulate(s);
  ASSERT_EQ(r.extinctions.size(), 1u);
  EXPECT_EQ(r.extinctions[0].id, "x");
  EXPECT_NEAR(r.extinctions[0].time, std::log(1e6), 0.02);
  EXPECT_EQ(r.trajectory.back()[0], 0.0);
}

TEST(Integrate, NeverNegative) {
  // predator crash from a strongly unbalanced start
  auto s = lv_scenario({1.0, 3.0, 2.0, 0.01}, 1, 50, 30, 0.05);
  s.integrator.extinction_epsilon = 1e-3;
  const auto r = simulate(s);
  for (std::size_t i = 0; i < r.trajectory.size(); ++i)
    for (double v : r.trajectory.row(i)) ASSERT_GE(v, 0.0);
}

TEST(Integrate, UnlimitedMutualismDivergence) {
  Scenario s;
  s.species = {{"a", "a", Role::producer, 0, 0.1, 0.0}, {"b", "b", Role::producer, 0, 0.1, 0.0}};
  s.interactions = {{"a", "b", InteractionKind::symbiosis, 1.0, 1.0, LinearLV{}, {}}};
  s.initial_densities = {{"a", 1}, {"b", 1}};
  s.horizon = 10;
  const auto r = simulate(s);
  EXPECT_TRUE(r.diverged);
  EXPECT_LT(r.trajectory.times().back(), 10.0);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings.back().find("divergence"), std::string::npos);
}

TEST(Integrate, NonFiniteDerivativeReportsTimeAndState) {
  const auto s = single_species(1.0, 0.0, 1.0, 1.0, 0.1);
  auto bad = [](std::span<const double> x, std::span<double> dx) { dx[0] = x[0] > 1.2 ? NAN : x[0]; };
  try {
    integrate(s, bad);
    FAIL();
  } catch (const RuntimeFailure& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("t="), std::string::npos);
    EXPECT_NE(msg.find("state="), std::string::npos);
  }
}

TEST(Period, NearEquilibriumMatchesLinearization) {
  const auto tr = simulate(lv_scenario(kLV, 26, 10, 100, 0.01)).trajectory;
  const auto period = measure_period(tr, 0, 25.0);
  ASSERT_TRUE(period);
  EXPECT_NEAR(*period, lv_linear_period(kLV), 0.05 * lv_linear_period(kLV));
}
