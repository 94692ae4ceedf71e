#include "cfgevade/report.hpp"

#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace cfgevade {
namespace {

CampaignStats ThreeTrials() {
  return CampaignStats::aggregate(1, {TrialStats::from_counts(10, 10, 4), TrialStats::from_counts(10, 8, 5),
                                      TrialStats::from_counts(10, 9, 9)});
}

TEST(RenderTable, MeanAndMedianPercentages) {
  const auto text = render_table({ThreeTrials()});
  // s_g = {0.4, 0.5, 0.9}.
  EXPECT_NE(text.find("60.00%"), std::string::npos) << text;
  EXPECT_NE(text.find("50.00%"), std::string::npos) << text;
  EXPECT_NE(text.find("Rounds"), std::string::npos);
}

TEST(RenderTable, ColumnsAlign) {
  const auto c1 = ThreeTrials();
  auto c5 = CampaignStats::aggregate(5, {TrialStats::from_counts(2500, 2255, 2193)});
  const auto text = render_table({c1, c5});
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (auto nl = text.find('\n'); nl != std::string::npos; nl = text.find('\n', start)) {
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  ASSERT_EQ(lines.size(), 4u);
  for (const auto& l : lines) EXPECT_EQ(l.size(), lines[0].size()) << l;
  EXPECT_NE(lines[3].find("87.72%"), std::string::npos);
  EXPECT_NE(lines[3].find("97.25%"), std::string::npos);
  EXPECT_NE(lines[3].find("2255"), std::string::npos);
}

TEST(RenderTable, UndefinedSuccessRate) {
  const auto c = CampaignStats::aggregate(1, {TrialStats::from_counts(4, 0, 0)});
  EXPECT_NE(render_table({c}).find("n/a"), std::string::npos);
}

TEST(ReportJson, RoundTripRecomputesSummary) {
  const std::vector<CampaignStats> in{ThreeTrials(), CampaignStats::aggregate(2, {TrialStats::from_counts(3, 0, 0, 1)})};
  const auto j = report_json(in);
  EXPECT_EQ(j["campaigns"][0]["trials"][1]["a_s"], 5);
  EXPECT_TRUE(j["campaigns"][1]["summary"]["mean_s_n"].is_null());
  const auto back = campaigns_from_json(Json::parse(j.dump()));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(report_json(back).dump(), j.dump());
  EXPECT_EQ(back[1].trials[0].skipped_benign, 1u);
}

TEST(ReportJson, RejectsBadShapes) {
  EXPECT_THROW(campaigns_from_json(Json::parse("[]")), SchemaViolation);
  EXPECT_THROW(campaigns_from_json(Json::parse(R"({"campaigns":[{"rounds":1}]})")), SchemaViolation);
  EXPECT_THROW(campaigns_from_json(Json::parse(R"({"campaigns":[{"rounds":1,"trials":[{"a_a":1,"a_i":2,"a_s":0}]}]})")),
               DataError);
}

TEST(OutcomeJson, CarriesReplacementLedger) {
  AttackOutcome o;
  o.sample = "m";
  o.status = AttackStatus::Success;
  o.rounds_used = 1;
  o.history = {{"a", "b"}, {"a", "sym.imp.X.dll"}};
  o.replacements = {{{"b", "sym.imp.X.dll", 0.25}}};
  const auto j = to_json(o, 2);
  EXPECT_EQ(j["status"], "success");
  EXPECT_EQ(j["trial"], 2);
  EXPECT_EQ(j["replacements"][0][0]["original"], "b");
  EXPECT_EQ(j["final_calls"][1], "sym.imp.X.dll");
}

}  // namespace
}  // namespace cfgevade
