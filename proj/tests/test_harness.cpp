#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "crowd_al/dataset_io.hpp"
#include "crowd_al/error.hpp"
#include "crowd_al/experiment.hpp"
#include "crowd_al/records.hpp"

using namespace crowd_al;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("crowd_al_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = path_ / name;
    std::ofstream(p) << text;
    return p;
  }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.annotators = {6, 4, {0.1, 1.0}, {1.0, 2.0}};
  c.budget = 25;
  c.repetitions = 2;
  c.base_seed = 5;
  c.seed_pool_size = 5;
  return c;
}

// Well-specified problem: y = wᵀx exactly, x ~ N(0, I).
RawDataset linear_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  RawDataset raw;
  raw.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < raw.features.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.features.cols(); ++j) raw.features(i, j) = n01(rng);
  Vector w(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = 1.0 + 0.5 * static_cast<double>(j);
  raw.targets = raw.features * w;
  return raw;
}

RoundRecord sample_record() {
  RoundRecord r;
  r.rep = 2;
  r.round = 7;
  r.instance = 41;
  r.annotator = 3;
  r.label = -12.3456789012;
  r.accepted = false;
  r.rmse = 4.000000001;
  r.regret = 1.0 / 3.0;
  r.discarded = 9;
  r.payment = 123456.789;
  return r;
}

}  // namespace

TEST(LoadCsv, NumericRowsWithoutHeader) {
  const auto raw = parse_csv("1,2,3\n4,5,6");
  EXPECT_EQ(raw.size(), 2u);
  EXPECT_EQ(raw.dim(), 2u);
  EXPECT_EQ(raw.targets[0], 3.0);
  EXPECT_EQ(raw.targets[1], 6.0);
  EXPECT_EQ(raw.features(1, 0), 4.0);
  EXPECT_TRUE(raw.header.empty());
}

TEST(LoadCsv, HeaderSkipped) {
  const auto raw = parse_csv("a,b,y\n1,2,3\n4,5,6\n");
  EXPECT_EQ(raw.size(), 2u);
  EXPECT_EQ(raw.header, (std::vector<std::string>{"a", "b", "y"}));
}

TEST(LoadCsv, BadCellNamesLocation) {
  try {
    parse_csv("1,2,3\n4,x,6\n");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'x'"), std::string::npos) << msg;
  }
  EXPECT_THROW(parse_csv("1\n2\n"), FormatError);
  EXPECT_THROW(parse_csv("1,2,3\n4,5\n"), FormatError);
  EXPECT_THROW(parse_csv(""), FormatError);
}

TEST(LoadCsv, FileAndMissingFile) {
  TempDir dir;
  const auto p = dir.write("d.csv", "x1,x2,target\r\n0.5,1e3,-2\r\n\r\n1,2,3\r\n");
  const auto raw = load_csv(p);
  EXPECT_EQ(raw.size(), 2u);
  EXPECT_EQ(raw.features(0, 1), 1000.0);
  EXPECT_EQ(raw.targets[0], -2.0);
  EXPECT_THROW(load_csv(dir.path() / "missing.csv"), IoError);
}

TEST(Rmse, Examples) {
  const Vector z = (Vector(2) << 3.0, 4.0).finished();
  EXPECT_EQ(rmse(z, z), 0.0);
  EXPECT_NEAR(rmse(Vector::Zero(2), z), std::sqrt(12.5), 1e-15);
  EXPECT_NEAR(std::sqrt(12.5), 3.535534, 1e-6);
  EXPECT_EQ(rmse(Vector::Constant(1, 5.0), Vector::Constant(1, 3.0)), 2.0);
  EXPECT_THROW(rmse(Vector::Zero(2), Vector::Zero(3)), InvalidInput);
  EXPECT_THROW(rmse(Vector(0), Vector(0)), InvalidInput);
}

TEST(Records, EmptyListIsHeaderOnly) {
  std::ostringstream out;
  write_records({}, out, RecordFormat::csv);
  EXPECT_EQ(out.str(), std::string(kRecordHeader) + "\n");
  std::ostringstream jl;
  write_records({}, jl, RecordFormat::jsonl);
  EXPECT_EQ(jl.str(), "");
}

TEST(Records, OneRecordIsTwoCsvLines) {
  const std::vector<RoundRecord> one{sample_record()};
  std::ostringstream out;
  write_records(one, out, RecordFormat::csv);
  EXPECT_EQ(out.str(), std::string(kRecordHeader) +
                           "\n2,7,41,3,-12.3456789,0,4,0.333333333,9,123456.789\n");
}

TEST(Records, BaselineRowLeavesFieldsEmpty) {
  RoundRecord base;
  base.rmse = 2.5;
  const std::vector<RoundRecord> one{base};
  std::ostringstream csv, jl;
  write_records(one, csv, RecordFormat::csv);
  write_records(one, jl, RecordFormat::jsonl);
  EXPECT_NE(csv.str().find("\n0,0,,,,,2.5,0,0,0\n"), std::string::npos) << csv.str();
  const auto j = nlohmann::json::parse(jl.str());
  EXPECT_TRUE(j["instance"].is_null());
  EXPECT_TRUE(j["accepted"].is_null());
  EXPECT_EQ(j["rmse"].get<double>(), 2.5);
}

TEST(Records, RoundTripBothFormats) {
  std::vector<RoundRecord> records{sample_record(), RoundRecord{}};
  records[1].accepted = true;
  records[1].rmse = 1e-300;
  for (RecordFormat fmt : {RecordFormat::csv, RecordFormat::jsonl}) {
    std::stringstream buf;
    write_records(records, buf, fmt);
    const auto back = read_records(buf, fmt);
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      EXPECT_EQ(back[i].rep, records[i].rep);
      EXPECT_EQ(back[i].instance, records[i].instance);
      EXPECT_EQ(back[i].annotator, records[i].annotator);
      EXPECT_EQ(back[i].accepted, records[i].accepted);
      EXPECT_EQ(back[i].discarded, records[i].discarded);
      EXPECT_EQ(back[i].label.has_value(), records[i].label.has_value());
      if (records[i].label) EXPECT_NEAR(*back[i].label, *records[i].label, 1e-8 * std::abs(*records[i].label));
      EXPECT_NEAR(back[i].rmse, records[i].rmse, 1e-8 * records[i].rmse);
      EXPECT_NEAR(back[i].regret, records[i].regret, 1e-8 * records[i].regret);
      EXPECT_NEAR(back[i].payment, records[i].payment, 1e-8 * records[i].payment);
    }
    // Re-emitting what was read is a fixed point.
    std::stringstream again;
    write_records(back, again, fmt);
    std::stringstream first;
    write_records(records, first, fmt);
    EXPECT_EQ(again.str(), first.str());
  }
}

TEST(Records, JsonLinesFieldOrder) {
  const std::vector<RoundRecord> one{sample_record()};
  std::ostringstream out;
  write_records(one, out, RecordFormat::jsonl);
  const std::string line = out.str();
  std::size_t last = 0;
  for (const char* key : {"rep", "round", "instance", "annotator", "label", "accepted", "rmse",
                          "regret", "discarded", "payment"}) {
    const auto at = line.find(std::string("\"") + key + "\"");
    ASSERT_NE(at, std::string::npos) << key;
    EXPECT_GE(at, last) << key;
    last = at;
  }
  EXPECT_EQ(line.back(), '\n');
}

TEST(Records, EmitErrorsNamePath) {
  const std::vector<RoundRecord> one{sample_record()};
  try {
    emit_records(one, "/nonexistent/dir/out.csv", RecordFormat::csv);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/out.csv"), std::string::npos);
  }
  EXPECT_THROW(parse_record_format("xml"), InvalidInput);
  EXPECT_EQ(parse_record_format("json-lines"), RecordFormat::jsonl);
}

TEST(Config, JsonRoundTripAndStrictKeys) {
  ExperimentConfig c = small_config();
  c.strategy = Strategy::instance_only;
  c.u = 12.0;
  c.s_grid = {0.5, 2.0};
  c.strategic.enabled = true;
  c.strategic.cost_kind = CostKind::threshold;
  c.strategic.b = 2.0;
  c.target_rmse = 3.5;
  const auto j = config_to_json(c);
  const auto back = config_from_json(j);
  EXPECT_EQ(config_to_json(back), j);
  EXPECT_EQ(back.strategy, Strategy::instance_only);
  EXPECT_EQ(*back.u, 12.0);
  EXPECT_EQ(back.annotators.m, 6u);

  auto bad = j;
  bad["budgett"] = 3;
  EXPECT_THROW(config_from_json(bad), InvalidInput);
  bad = j;
  bad["scheme"]["beta_mid"] = 1.0;
  EXPECT_THROW(config_from_json(bad), InvalidInput);
  bad = j;
  bad["test_fraction"] = 1.5;
  EXPECT_THROW(config_from_json(bad), InvalidInput);
}

TEST(Config, DatasetPathResolvedAgainstConfigFile) {
  TempDir dir;
  fs::create_directories(dir.path() / "cfg");
  dir.write("data.csv", "1,2,3\n");
  const auto p = dir.write("cfg/exp.json", R"({"dataset_path": "../data.csv", "budget": 4})");
  const auto c = load_config(p);
  EXPECT_EQ(fs::weakly_canonical(c.dataset_path), fs::weakly_canonical(dir.path() / "data.csv"));
  EXPECT_EQ(c.budget, 4u);
  const auto broken = dir.write("broken.json", "{budget: }");
  EXPECT_THROW(load_config(broken), FormatError);
  EXPECT_THROW(load_config(dir.path() / "none.json"), IoError);
}

TEST(Experiment, ZeroBudgetEmitsBaselineOnly) {
  auto c = small_config();
  c.budget = 0;
  const auto raw = make_synthetic_dataset(120, 3, 1);
  const auto result = run_experiment(c, raw);
  ASSERT_EQ(result.records.size(), 2u);
  for (std::size_t rep = 0; rep < 2; ++rep) {
    EXPECT_EQ(result.records[rep].rep, rep);
    EXPECT_EQ(result.records[rep].round, 0u);
    EXPECT_FALSE(result.records[rep].instance.has_value());
    EXPECT_GT(result.records[rep].rmse, 0.0);
  }
}

TEST(Experiment, RandomStrategyIsDeterministic) {
  auto c = small_config();
  c.strategy = Strategy::random;
  const auto raw = make_synthetic_dataset(150, 4, 2);
  const auto a = run_experiment(c, raw);
  const auto b = run_experiment(c, raw);
  EXPECT_EQ(a.records, b.records);
  c.base_seed += 1;
  EXPECT_NE(run_experiment(c, raw).records, a.records);
}

TEST(Experiment, RoundInvariants) {
  const auto raw = make_synthetic_dataset(200, 3, 3);
  for (Strategy s : {Strategy::robust_ucb, Strategy::random, Strategy::instance_only, Strategy::single_source}) {
    auto c = small_config();
    c.strategy = s;
    const auto result = run_experiment(c, raw);
    ASSERT_EQ(result.records.size(), c.repetitions * (c.budget + 1));
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
      std::set<std::size_t> instances;
      double regret = 0.0, paid = 0.0;
      std::size_t discarded = 0;
      for (const auto& r : result.records) {
        if (r.rep != rep) continue;
        EXPECT_GE(r.rmse, 0.0);
        EXPECT_GE(r.regret, regret);
        EXPECT_GE(r.discarded, discarded);
        EXPECT_GE(r.payment, paid);
        regret = r.regret;
        discarded = r.discarded;
        paid = r.payment;
        if (r.round == 0) continue;
        ASSERT_TRUE(r.instance && r.annotator && r.label && r.accepted);
        EXPECT_TRUE(instances.insert(*r.instance).second) << "instance relabeled";
      }
      EXPECT_EQ(instances.size(), c.budget);
      const auto& summary = result.summaries[rep];
      EXPECT_EQ(summary.rounds, c.budget);
      EXPECT_EQ(summary.regret, regret);
      if (s == Strategy::single_source) {
        EXPECT_EQ(summary.participants, 1u);
        EXPECT_EQ(summary.regret, 0.0);
      }
    }
  }
}

TEST(Experiment, PoolExhaustionTruncates) {
  auto c = small_config();
  c.repetitions = 1;
  c.budget = 100;
  const auto raw = make_synthetic_dataset(30, 2, 4);  // 21 training rows, 5 in the seed pool
  const auto result = run_experiment(c, raw);
  EXPECT_TRUE(result.summaries[0].truncated);
  EXPECT_EQ(result.summaries[0].rounds, 16u);
  EXPECT_EQ(result.records.size(), 17u);
}

TEST(Experiment, TargetRmseStopsEarly) {
  auto c = small_config();
  c.repetitions = 1;
  c.target_rmse = 1e6;
  const auto result = run_experiment(c, make_synthetic_dataset(100, 2, 5));
  EXPECT_EQ(result.summaries[0].rounds, 1u);
  EXPECT_FALSE(result.summaries[0].truncated);
}

TEST(Experiment, StrategicAnnotatorsAndPayments) {
  auto c = small_config();
  c.repetitions = 1;
  c.strategic.enabled = true;
  c.strategic.cost_kind = CostKind::quadratic;
  c.strategic.a = 0.01;
  c.transform_kind = TransformKind::linear;
  const auto result = run_experiment(c, linear_dataset(120, 3, 6));
  EXPECT_EQ(result.summaries[0].participants, 6u);
  EXPECT_GT(result.summaries[0].paid, 0.0);
  EXPECT_LE(result.summaries[0].paid, c.scheme.budget * static_cast<double>(c.budget));

  c.strategic.cost_kind = CostKind::linear;
  c.strategic.a = 100.0;
  EXPECT_THROW(run_experiment(c, make_synthetic_dataset(120, 3, 6)), InvalidInput);
}

TEST(Experiment, RobustUcbFavoursTheAccurateAnnotator) {
  ExperimentConfig c;
  c.annotators = {2, 1, {0.2, 0.2}, {2.0, 2.0}};
  c.budget = 300;
  c.repetitions = 10;
  c.base_seed = 100;
  c.transform_kind = TransformKind::linear;
  const auto raw = linear_dataset(500, 3, 7);
  const auto result = run_experiment(c, raw);
  double share = 0.0;
  for (const auto& s : result.summaries) {
    share += static_cast<double>(s.pulls[0]) / static_cast<double>(s.pulls[0] + s.pulls[1]);
  }
  EXPECT_GT(share / 10.0, 0.6);
}

TEST(Experiment, SingleSourceAnchorsCrowdStrategies) {
  auto c = small_config();
  c.repetitions = 4;
  c.budget = 40;
  c.transform_kind = TransformKind::linear;
  const auto raw = linear_dataset(300, 4, 8);
  auto mean_final = [&](Strategy s) {
    c.strategy = s;
    double total = 0.0;
    for (const auto& summary : run_experiment(c, raw).summaries) total += summary.final_rmse;
    return total / static_cast<double>(c.repetitions);
  };
  const double anchor = mean_final(Strategy::single_source);
  for (Strategy s : {Strategy::robust_ucb, Strategy::random, Strategy::instance_only}) {
    EXPECT_LE(anchor, mean_final(s)) << to_string(s);
  }
}

TEST(Experiment, RecordFilesAreByteIdentical) {
  TempDir dir;
  auto c = small_config();
  c.strategy = Strategy::robust_ucb;
  const auto raw = make_synthetic_dataset(150, 3, 9);
  for (RecordFormat fmt : {RecordFormat::csv, RecordFormat::jsonl}) {
    emit_records(run_experiment(c, raw).records, dir.path() / "a", fmt);
    emit_records(run_experiment(c, raw).records, dir.path() / "b", fmt);
    const auto a = slurp(dir.path() / "a");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir.path() / "b"));
  }
}

TEST(Experiment, ScaleGridPicksFromCandidates) {
  auto c = small_config();
  c.s_grid = {0.5, 2.0, 8.0};
  const auto raw = make_synthetic_dataset(150, 3, 10);
  const auto split = prepare_split(raw, c, 3);
  EXPECT_TRUE(split.spec.scale == 0.5 || split.spec.scale == 2.0 || split.spec.scale == 8.0);
  EXPECT_EQ(split.train.rows() + split.test.rows(), 150);
  EXPECT_EQ(split.test.rows(), 45);
  EXPECT_EQ(split.spec.centers.rows(), 3);
  std::set<std::size_t> ids(split.train_ids.begin(), split.train_ids.end());
  ids.insert(split.test_ids.begin(), split.test_ids.end());
  EXPECT_EQ(ids.size(), 150u);
}

TEST(Experiment, FullPoolFitReportsPerRepetition) {
  auto c = small_config();
  c.repetitions = 3;
  const auto fits = run_fit(c, make_synthetic_dataset(200, 4, 11));
  ASSERT_EQ(fits.size(), 3u);
  for (const auto& f : fits) {
    EXPECT_GT(f.rmse, 0.0);
    EXPECT_TRUE(f.converged);
  }
}

TEST(Experiment, ConfigValidation) {
  auto c = small_config();
  c.repetitions = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = small_config();
  c.annotators.good = 7;
  EXPECT_THROW(run_experiment(c, make_synthetic_dataset(50, 2, 1)), InvalidInput);
  EXPECT_THROW(parse_strategy("greedy"), InvalidInput);
  EXPECT_EQ(parse_strategy(to_string(Strategy::single_source)), Strategy::single_source);
}
