#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "hetkey/config.hpp"
#include "hetkey/report.hpp"

namespace hetkey {
namespace {

const std::string kDir = HETKEY_CONFIG_DIR;

constexpr const char* kBase = R"({
  "model": {"n": 500, "r": 2, "mu": [0.5, 0.5], "K": [10, 15], "P": 10000,
            "alpha": [[0.3, 0.2], [0.2, 0.3]]},
  "sweep": {"axis": "K1", "range": [10, 35], "step": 1, "linked_rule": "K2=K1+5"},
  "run": {"trials": 400, "master_seed": 7, "workers": 2}
})";

std::string field_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

TEST(ParseConfig, BaseDocument) {
  const auto cfg = parse_config_text(kBase);
  EXPECT_EQ(cfg.model.n, 500u);
  EXPECT_EQ(cfg.model.keys.ring_size(1), 15u);
  EXPECT_EQ(cfg.model.channel(0, 1), 0.2);
  ASSERT_TRUE(cfg.sweep);
  EXPECT_EQ(cfg.sweep->axis.kind, SweepAxis::KeyRingK1);
  EXPECT_EQ(cfg.sweep->axis.k_offsets, (std::vector<std::uint32_t>{0, 5}));
  ASSERT_EQ(cfg.sweep->values.size(), 26u);
  EXPECT_EQ(cfg.sweep->values.front(), 10.0);
  EXPECT_EQ(cfg.sweep->values.back(), 35.0);
  EXPECT_EQ(cfg.run.trials, 400u);
  EXPECT_EQ(cfg.run.master_seed, 7u);
  EXPECT_EQ(cfg.run.workers, 2u);
}

TEST(ParseConfig, ShippedConfigsLoad) {
  for (const char* name : {"k1_sweep_alpha12_0.2", "k1_sweep_alpha12_0.4", "k1_sweep_alpha12_0.6",
                           "k1_sweep_alpha11_0.2", "k1_sweep_alpha11_0.4", "k1_sweep_alpha11_0.6",
                           "alpha_diag_sweep_K1_20", "alpha_diag_sweep_K1_50", "alpha12_sweep_K1_20",
                           "alpha12_sweep_K1_35",
                           "homogeneous_single_class"}) {
    EXPECT_NO_THROW(load_config(kDir + "/" + name + ".json")) << name;
  }
  const auto diag = load_config(kDir + "/alpha_diag_sweep_K1_50.json");
  EXPECT_EQ(diag.sweep->axis.kind, SweepAxis::AlphaDiagonal);
  EXPECT_EQ(diag.sweep->values.size(), 21u);
  EXPECT_EQ(diag.sweep->values[3], 0.15);
  EXPECT_EQ(diag.sweep->values.back(), 1.0);
  const auto entry = load_config(kDir + "/alpha12_sweep_K1_25.json");
  EXPECT_EQ(entry.sweep->axis.kind, SweepAxis::AlphaEntry);
  EXPECT_EQ(entry.sweep->axis.row, 0u);
  EXPECT_EQ(entry.sweep->axis.col, 1u);
}

TEST(ParseConfig, UnknownFieldsAreNamed) {
  EXPECT_EQ(field_of(replace(kBase, "\"n\": 500", "\"n\": 500, \"seed\": 1")), "model.seed");
  EXPECT_EQ(field_of(replace(kBase, "\"step\": 1", "\"step\": 1, \"stride\": 2")), "sweep.stride");
  EXPECT_EQ(field_of(replace(kBase, "\"workers\": 2", "\"workers\": 2, \"thread\": 2")), "run.thread");
  EXPECT_EQ(field_of(replace(kBase, "\"run\":", "\"extra\": 0, \"run\":")), "config.extra");
}

TEST(ParseConfig, ErrorsCarryTheFieldPath) {
  EXPECT_EQ(field_of(replace(kBase, "\"mu\": [0.5, 0.5]", "\"mu\": [0.5, 0.6]")), "model.mu");
  EXPECT_EQ(field_of(replace(kBase, "\"mu\": [0.5, 0.5]", "\"mu\": [1.0]")), "model.mu");
  EXPECT_EQ(field_of(replace(kBase, "\"K\": [10, 15]", "\"K\": [10, 6000]")), "model.K");
  EXPECT_EQ(field_of(replace(kBase, "[0.2, 0.3]]", "[0.25, 0.3]]")), "model.alpha");
  EXPECT_EQ(field_of(replace(kBase, "[0.2, 0.3]]", "[0.2, \"x\"]]")), "model.alpha[1][1]");
  EXPECT_EQ(field_of(replace(kBase, "\"n\": 500", "\"n\": -3")), "model.n");
  EXPECT_EQ(field_of(replace(kBase, "\"n\": 500,", "")), "model.n");
  EXPECT_EQ(field_of(replace(kBase, "\"trials\": 400", "\"trials\": 0")), "run.trials");
  EXPECT_EQ(field_of(replace(kBase, "\"axis\": \"K1\"", "\"axis\": \"K9\"")), "sweep.axis");
  EXPECT_EQ(field_of(replace(kBase, "\"axis\": \"K1\"", "\"axis\": \"alpha_13\"")), "sweep.axis");
  EXPECT_EQ(field_of(replace(kBase, "\"step\": 1", "\"step\": 0")), "sweep.step");
  EXPECT_EQ(field_of(replace(kBase, "[10, 35]", "[10, 5000]")), "sweep.values");
  EXPECT_EQ(field_of("{\"model\": "), "config");
}

TEST(ParseConfig, InvalidSweepValueMessageNamesTheValue) {
  try {
    parse_config_text(replace(kBase, "[10, 35]", "[4990, 4998]"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("K1=4996"), std::string::npos) << e.what();
  }
}

TEST(LinkedRule, ParsesOffsets) {
  using config_detail::parse_linked_rule;
  EXPECT_EQ(parse_linked_rule("K2=K1+5", 2, "x"), (std::vector<std::uint32_t>{0, 5}));
  EXPECT_EQ(parse_linked_rule(" K3 = K1 + 12 ,K2=K1", 3, "x"), (std::vector<std::uint32_t>{0, 0, 12}));
  EXPECT_THROW(parse_linked_rule("K2=K1*2", 2, "x"), ConfigError);
  EXPECT_THROW(parse_linked_rule("K2=K1+1", 3, "x"), ConfigError);
  EXPECT_THROW(parse_linked_rule("K4=K1+1", 3, "x"), ConfigError);
  EXPECT_EQ(config_detail::format_linked_rule({0, 5, 12}), "K2=K1+5, K3=K1+12");
}

TEST(LinkedRule, DefaultsToBaseProfileGaps) {
  const auto cfg = parse_config_text(replace(kBase, ", \"linked_rule\": \"K2=K1+5\"", ""));
  EXPECT_EQ(cfg.sweep->axis.k_offsets, (std::vector<std::uint32_t>{0, 5}));
}

TEST(ToJson, RoundTrips) {
  for (const char* name :
       {"k1_sweep_alpha12_0.4", "alpha_diag_sweep_K1_20", "alpha12_sweep_K1_30", "homogeneous_single_class"}) {
    const auto cfg = load_config(kDir + "/" + name + ".json");
    EXPECT_EQ(parse_config(to_json(cfg)), cfg) << name;
  }
  const auto explicit_cfg = parse_config_text(R"({
    "model": {"n": 50, "r": 1, "mu": [1], "K": [3], "P": 100, "alpha": [[0.5]]},
    "sweep": {"axis": "explicit", "points": [
      {"n": 50, "r": 1, "mu": [1], "K": [3], "P": 100, "alpha": [[0.5]]},
      {"n": 80, "r": 2, "mu": [0.3, 0.7], "K": [2, 4], "P": 100, "alpha": [[1, 0.5], [0.5, 0]]}]}
  })");
  EXPECT_EQ(explicit_cfg.sweep->explicit_points.size(), 2u);
  EXPECT_EQ(parse_config(to_json(explicit_cfg)), explicit_cfg);
}

TEST(SweepCsv, HeaderAndRow) {
  EXPECT_EQ(std::count(kSweepCsvHeader.begin(), kSweepCsvHeader.end(), ','), 17);
  SweepResult sweep;
  sweep.axis = "K1";
  SweepRow row;
  row.value = 22;
  row.n = 500;
  row.stats.trials = 400;
  row.stats.no_isolated_successes = 300;
  row.stats.connected_successes = 100;
  row.stats.mean_isolated = 1.0 / 3.0;
  row.ci_no_isolated = {0.7, 0.8};
  row.ci_connected = {0.2, 0.3};
  row.analytic_E_In = 0.5;
  row.c_n = 1.0625;
  row.is_predicted_threshold = true;
  sweep.rows.push_back(row);
  std::ostringstream os;
  write_sweep_csv(os, sweep);
  EXPECT_EQ(os.str(), std::string(kSweepCsvHeader) +
                          "\nK1,22,500,400,300,100,0.75,0.7,0.8,0.25,0.2,0.3,0.333333333333,0.5,0,0,1.0625,1\n");
}

TEST(DerivedTable, ReportsMinimizingClassOneBased) {
  const auto cfg = load_config(kDir + "/k1_sweep_alpha11_0.4.json");
  auto params = cfg.experiment().params_at(12);  // K1 = 22
  std::ostringstream os;
  write_derived_table(os, params, derive(params));
  const auto text = os.str();
  EXPECT_NE(text.find("m = 2"), std::string::npos) << text;
  EXPECT_NE(text.find("prediction (from c_n) = one-law"), std::string::npos) << text;

  params.channel = ChannelMatrix::uniform(2, 0.0);
  std::ostringstream zero;
  write_derived_table(zero, params, derive(params));
  EXPECT_NE(zero.str().find("zero-law (c_n = 0)"), std::string::npos);
}

}  // namespace
}  // namespace hetkey
