#include <gtest/gtest.h>

#include <algorithm>
#include <string>

#include "ecolab/continuous.hpp"
#include "ecolab/core.hpp"

using namespace ecolab;

namespace {

Scenario two_species() { return lv_scenario({1.0, 0.5, 0.1, 0.02}, 30.0, 8.0); }

bool has_issue(const std::vector<Issue>& issues, IssueCode code, const std::string& text) {
  return std::any_of(issues.begin(), issues.end(), [&](const Issue& i) {
    return i.code == code && i.message.find(text) != std::string::npos;
  });
}

}  // namespace

TEST(Validate, ValidScenarioPasses) {
  const auto s = two_species();
  EXPECT_TRUE(check_scenario(s).empty());
  EXPECT_EQ(&validate_scenario(s), &s);
}

TEST(Validate, Idempotent) {
  const auto s = two_species();
  const Scenario once = validate_scenario(s);
  EXPECT_EQ(validate_scenario(once), s);
}

TEST(Validate, NegativeDensity) {
  auto s = two_species();
  s.initial_densities["prey"] = -1.0;
  try {
    validate_scenario(s);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(has_issue(e.issues(), IssueCode::negative_density, "negative density"));
  }
}

TEST(Validate, DanglingReference) {
  auto s = two_species();
  s.interactions[0].second = "ghost";
  const auto issues = check_scenario(s);
  EXPECT_TRUE(has_issue(issues, IssueCode::dangling_reference, "dangling reference"));
  EXPECT_TRUE(has_issue(issues, IssueCode::dangling_reference, "ghost"));
}

TEST(Validate, ReportsEveryViolation) {
  auto s = two_species();
  s.species.push_back(s.species[0]);                       // duplicate id
  s.interactions.push_back({"prey", "prey", InteractionKind::competition, 0.1, 0.1, LinearLV{}, {}});
  s.interactions.push_back({"predator", "ghost", InteractionKind::competition, 0.1, 0.1, LinearLV{}, {}});
  s.initial_densities["predator"] = -2.0;
  const auto issues = check_scenario(s);
  EXPECT_TRUE(has_issue(issues, IssueCode::duplicate_id, "duplicate species id"));
  EXPECT_TRUE(has_issue(issues, IssueCode::self_interaction, "self-interaction"));
  EXPECT_TRUE(has_issue(issues, IssueCode::dangling_reference, "dangling reference"));
  EXPECT_TRUE(has_issue(issues, IssueCode::negative_density, "negative density"));
  EXPECT_THROW(validate_scenario(s), ValidationError);
}

TEST(Validate, DuplicatePairEitherOrder) {
  auto s = two_species();
  s.interactions.push_back({"prey", "predator", InteractionKind::competition, 0.1, 0.1, LinearLV{}, {}});
  EXPECT_TRUE(has_issue(check_scenario(s), IssueCode::duplicate_pair, "more than one entry"));
}

TEST(Validate, MissingDensityAndHorizon) {
  auto s = two_species();
  s.initial_densities.erase("predator");
  s.horizon = 0.0;
  const auto issues = check_scenario(s);
  EXPECT_TRUE(has_issue(issues, IssueCode::missing_density, "predator"));
  EXPECT_TRUE(has_issue(issues, IssueCode::invalid_horizon, "horizon"));
}

TEST(Validate, ProducerMustSitAtLevelZero) {
  auto s = two_species();
  s.species[0].trophic_level = 2;
  EXPECT_TRUE(has_issue(check_scenario(s), IssueCode::invalid_species, "trophic_level 0"));
}

TEST(Validate, SexualInteractionIsNotCommunityLevel) {
  auto s = two_species();
  s.interactions[0].kind = InteractionKind::sexual;
  EXPECT_TRUE(has_issue(check_scenario(s), IssueCode::invalid_interaction, "sexual"));
}

TEST(Validate, AntagonisticCoefSecondMustBeZero) {
  auto s = two_species();
  s.interactions[0].coef_second = 0.3;
  EXPECT_TRUE(has_issue(check_scenario(s), IssueCode::invalid_interaction, "coef_second"));
}

TEST(Validate, IntegratorSettings) {
  auto s = two_species();
  s.integrator.step = 0.0;
  s.integrator.rel_tol = -1.0;
  const auto issues = check_scenario(s);
  EXPECT_EQ(std::count_if(issues.begin(), issues.end(),
                          [](const Issue& i) { return i.code == IssueCode::invalid_integrator; }),
            2);
}

TEST(Validate, ContinuumNeedsSelfLimitation) {
  auto s = two_species();
  s.interactions[0] = {"predator", "prey", InteractionKind::symbiosis, 0, 0, LinearLV{}, ContinuumSource{0.5, 0.1}};
  EXPECT_TRUE(has_issue(check_scenario(s), IssueCode::invalid_interaction, "self_limitation > 0"));
  s.species[0].self_limitation = 0.1;
  s.species[1].self_limitation = 0.1;
  EXPECT_TRUE(check_scenario(s).empty());
  s.interactions[0].continuum->alpha = 1.5;
  EXPECT_TRUE(has_issue(check_scenario(s), IssueCode::invalid_interaction, "alpha"));
}

TEST(InteractionKindNames, RoundTrip) {
  for (auto k : {InteractionKind::predation, InteractionKind::parasitism, InteractionKind::competition,
                 InteractionKind::symbiosis, InteractionKind::cooperation, InteractionKind::sexual})
    EXPECT_EQ(interaction_kind_from(to_string(k)), k);
  EXPECT_FALSE(interaction_kind_from("mutualism"));
}

TEST(TrajectoryInvariants, EnforcedOnAppend) {
  Trajectory tr({"a", "b"});
  EXPECT_THROW(tr.append(0.5, std::vector<double>{1, 2}), InvalidInput);  // must start at 0
  tr.append(0.0, std::vector<double>{1, 2});
  EXPECT_THROW(tr.append(0.0, std::vector<double>{1, 2}), InvalidInput);  // strictly increasing
  EXPECT_THROW(tr.append(1.0, std::vector<double>{1}), InvalidInput);     // width
  EXPECT_THROW(tr.append(1.0, std::vector<double>{-1, 2}), InvalidInput);
  EXPECT_THROW(tr.append(1.0, std::vector<double>{1, std::nan("")}), InvalidInput);
  tr.append(1.0, std::vector<double>{3, 4});
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_EQ(tr.at(1, 1), 4.0);
  EXPECT_EQ(tr.column(0), (std::vector<double>{1, 3}));
  EXPECT_EQ(tr.back()[0], 3.0);
}
