#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "ddm_support.hpp"
#include "saopt/ddm.hpp"

using namespace saopt;
using namespace saopt::testing;

namespace {

DdmErrorKind kind_of(const std::string& text) {
  try {
    parse_ddm(text);
  } catch (const DdmError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "document was accepted";
  return DdmErrorKind::MalformedDocument;
}

}  // namespace

TEST(Ddm, ListingDocumentParsesToExpectedModel) {
  auto ddm = parse_ddm(listing_text());
  EXPECT_EQ(ddm.use_case.name, "platooning_coordination");
  EXPECT_EQ(ddm.use_case.available_strategies, (std::vector<std::string>{"s_1", "s_2"}));
  EXPECT_EQ(ddm.use_case.fallback_rules, "Path.To.Rules");

  ASSERT_EQ(ddm.context.data.size(), 2u);
  EXPECT_EQ(ddm.context.data[0].name, "context1");
  EXPECT_EQ(ddm.context.data[0].data_type, DataType::Int);
  EXPECT_EQ(ddm.context.data[1].name, "context2");
  EXPECT_EQ(ddm.context.data[1].data_type, DataType::Double);
  EXPECT_EQ(ddm.context.situation_detection.algorithm, DetectionAlgorithm::DBSCAN);
  EXPECT_EQ(ddm.context.situation_detection.number("min_samples"), 120);
  EXPECT_EQ(ddm.context.situation_detection.number("eps"), 34);

  const auto& opts = ddm.parameter_options.options;
  ASSERT_EQ(opts.size(), 2u);
  EXPECT_EQ(opts[0].name, "param1");
  EXPECT_EQ(opts[0].data_type, DataType::Int);
  EXPECT_EQ(opts[0].min, 0);
  EXPECT_EQ(opts[0].max, 100);
  EXPECT_FALSE(opts[0].strategies.has_value());
  EXPECT_EQ(opts[1].name, "param2");
  EXPECT_EQ(opts[1].data_type, DataType::Double);
  EXPECT_EQ(opts[1].min, 0.0);
  EXPECT_EQ(opts[1].max, 2.0);
  EXPECT_EQ(opts[1].strategies, (std::vector<std::string>{"s_1"}));

  const auto& sel = ddm.selection();
  EXPECT_EQ(sel.observations_between_adaptations, 1);
  EXPECT_EQ(sel.min_optimization_attempts, 5);
  EXPECT_EQ(sel.window_size, 5);
  EXPECT_EQ(sel.threshold_exceeds, 3);
  EXPECT_EQ(sel.method, TriggerMethod::Hypervolume);
  EXPECT_EQ(sel.hypervolume_threshold, 3.4);

  const auto& pm1 = ddm.performance_measures.at("pm1");
  EXPECT_EQ(pm1.data_type, DataType::Int);
  EXPECT_TRUE(pm1.higher_is_better);
  EXPECT_EQ(pm1.reference_value, -1);
  const auto& pm2 = ddm.performance_measures.at("pm2");
  EXPECT_EQ(pm2.data_type, DataType::Double);
  EXPECT_FALSE(pm2.higher_is_better);
  EXPECT_EQ(pm2.reference_value, 100.0);
}

TEST(Ddm, ParametersForStrategy) {
  auto ddm = parse_ddm(listing_text());
  auto s1 = parameters_for_strategy(ddm, "s_1");
  ASSERT_EQ(s1.size(), 2u);
  EXPECT_EQ(s1[0].name, "param1");
  EXPECT_EQ(s1[1].name, "param2");
  auto s2 = parameters_for_strategy(ddm, "s_2");
  ASSERT_EQ(s2.size(), 1u);
  EXPECT_EQ(s2[0].name, "param1");
  try {
    parameters_for_strategy(ddm, "s_9");
    FAIL();
  } catch (const DdmError& e) {
    EXPECT_EQ(e.kind(), DdmErrorKind::UnknownStrategy);
  }
}

TEST(Ddm, ParametersForStrategyMatchesBruteForce) {
  auto ddm = parse_ddm(listing_text());
  for (const auto& s : ddm.use_case.available_strategies) {
    std::vector<std::string> expected;
    for (const auto& o : ddm.parameter_options.options) {
      bool applies = !o.strategies;
      if (o.strategies) {
        for (const auto& t : *o.strategies) applies = applies || t == s;
      }
      if (applies) expected.push_back(o.name);
    }
    std::vector<std::string> got;
    for (const auto& o : parameters_for_strategy(ddm, s)) got.push_back(o.name);
    EXPECT_EQ(got, expected) << s;
  }
}

TEST(Ddm, RoundTrip) {
  auto ddm = parse_ddm(listing_text());
  auto text = serialize_ddm(ddm);
  EXPECT_EQ(parse_ddm(text), ddm) << text;

  auto thr = replace(replace(listing_text(), "method: \"hypervolume\"", "method: \"threshold\""), "reference_value: -1",
                     "reference_value: -1\n    threshold_value: 3");
  thr = replace(thr, "reference_value: 100.0", "reference_value: 100.0\n    threshold_value: 0.123456789012345");
  auto model = parse_ddm(thr);
  EXPECT_EQ(parse_ddm(serialize_ddm(model)), model);
}

TEST(Ddm, ErrorsCarryKeyPath) {
  try {
    parse_ddm(replace(listing_text(), "      max: 100\n", "      max: 0\n"));
    FAIL();
  } catch (const DdmError& e) {
    EXPECT_EQ(e.kind(), DdmErrorKind::BadRange);
    EXPECT_EQ(e.key_path(), "parameter_options.options.param1");
  }
}


TEST(Ddm, MutationsAreRejectedWithNamedError) {
  const auto cases = ddm_mutations();
  ASSERT_EQ(cases.size(), 20u);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    EXPECT_EQ(kind_of(cases[i].first), cases[i].second) << "mutation " << i;
  }
}

TEST(Ddm, MalformedYaml) { EXPECT_EQ(kind_of("use_case: [unclosed"), DdmErrorKind::MalformedDocument); }
