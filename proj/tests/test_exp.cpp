#include <doctest.h>

#include <set>

#include <json.hpp>

#include "ibw/errors.hpp"
#include "ibw/exp.hpp"

using namespace ibw;
using namespace ibw::exp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ibw-test-exp" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.out = out.string();
  c.dataset = "synthetic";
  c.synthetic_dim = 16;
  c.synthetic_classes = 4;
  c.n_train = 200;
  c.n_test = 200;
  c.labels = "real";
  c.hidden = {16};
  c.epochs = 4;
  c.batch_size = 50;
  c.lr_decay_epochs = {2};
  c.seed = 5;
  return c;
}

// CSV text with the named timing column blanked
std::string without_column(const std::string& text, const std::string& col) {
  auto t = parse_csv(text, "t");
  const auto it = std::find(t.header.begin(), t.header.end(), col);
  REQUIRE(it != t.header.end());
  const auto i = static_cast<std::size_t>(it - t.header.begin());
  for (auto& r : t.rows) r[i].clear();
  return to_csv(t);
}

CsvTable sweep_table(std::vector<std::tuple<double, double, std::string>> beta_acc_mode) {
  CsvTable t{kSweepHeader, {}};
  for (const auto& [beta, acc, mode] : beta_acc_mode) {
    CellResult r;
    r.sweep = "beta-n";
    r.label_mode = mode;
    r.beta = beta;
    r.n = 512;
    r.train_acc = acc;
    t.rows.push_back(sweep_row(r));
  }
  return t;
}

}  // namespace

TEST_CASE("config parses sections, comments and lists") {
  const auto kv = parse_key_values("seed = 4 # trailing\n[train]\nbeta = 0.5\nlr_decay_epochs = [10, 20]\n"
                                   "[data]\nlabels = \"real\"\n");
  CHECK(kv.at("seed") == "4");
  CHECK(kv.at("train.beta") == "0.5");
  ExperimentConfig c;
  c.apply(kv);
  CHECK(c.seed == 4);
  CHECK(c.beta == 0.5);
  CHECK(c.lr_decay_epochs == std::vector<std::size_t>{10, 20});
  CHECK(c.labels == "real");
}

TEST_CASE("config dump round trips") {
  ExperimentConfig c;
  c.betas = {0.01, 0.3, 7.0};
  c.beta = 1.0 / 3.0;
  c.hidden = {5, 7};
  ExperimentConfig d;
  d.apply(parse_key_values(c.dump()));
  CHECK(d.dump() == c.dump());
  CHECK(d.beta == c.beta);
  CHECK(d.betas == c.betas);
}

TEST_CASE("config errors") {
  ExperimentConfig c;
  CHECK_THROWS_AS(c.apply({{"train.nope", "1"}}), ConfigError);
  CHECK_THROWS_AS(c.apply({{"train.beta", "abc"}}), ConfigError);
  CHECK_THROWS_AS(c.apply({{"model.hidden", "3"}}), ConfigError);
  CHECK_THROWS_AS(parse_key_values("just words\n"), ConfigError);
  ExperimentConfig bad;
  bad.labels = "other";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.corruption = 2.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), std::exception);
}

TEST_CASE("csv round trip and errors") {
  CsvTable t{{"a", "b"}, {{"1", "x,y"}, {"2.5", "quote \" here"}, {"", ""}}};
  const auto back = parse_csv(to_csv(t), "mem");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK_THROWS_WITH_AS(parse_csv("a,b\n1,2\n3\n", "f.csv"), doctest::Contains("f.csv:3"), FormatError);
  CHECK_THROWS_AS(parse_csv("a,b\n\"open,2\n", "g.csv"), FormatError);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
}

TEST_CASE("train with zero epochs writes a header-only history") {
  const auto dir = scratch("zero");
  auto c = small_config(dir);
  c.epochs = 0;
  CHECK(cmd_train(c) == 0);
  const auto h = parse_csv(read_text(dir / "history.csv"), "history");
  CHECK(h.header == kHistoryHeader);
  CHECK(h.rows.empty());
}

TEST_CASE("train is deterministic and matches a one-cell sweep") {
  const auto a = scratch("det-a"), b = scratch("det-b"), s = scratch("det-s");
  CHECK(cmd_train(small_config(a)) == 0);
  CHECK(cmd_train(small_config(b)) == 0);
  CHECK(without_column(read_text(a / "history.csv"), "seconds") ==
        without_column(read_text(b / "history.csv"), "seconds"));
  CHECK(without_column(read_text(a / "train.csv"), "wall_seconds") ==
        without_column(read_text(b / "train.csv"), "wall_seconds"));
  CHECK(fs::exists(a / "model.ckpt"));
  CHECK(fs::exists(a / "summary.json"));

  auto c = small_config(s);
  c.betas = {c.beta};
  c.ns = {c.n_train};
  CHECK(cmd_sweep_beta_n(c) == 0);
  auto one = parse_csv(read_text(a / "train.csv"), "train");
  auto cell = parse_csv(read_text(s / "sweep_beta_n.csv"), "sweep");
  REQUIRE(one.rows.size() == 1);
  REQUIRE(cell.rows.size() == 1);
  for (std::size_t i = 0; i < kSweepHeader.size(); ++i) {
    const auto& col = kSweepHeader[i];
    if (col == "sweep" || col == "wall_seconds") continue;
    INFO(col);
    CHECK(one.rows[0][i] == cell.rows[0][i]);
  }
}

TEST_CASE("sweep has one row per cell and parallel equals serial") {
  const auto a = scratch("grid-1"), b = scratch("grid-2");
  auto c = small_config(a);
  c.labels = "random";
  c.betas = {0.01, 1.0};
  c.ns = {100, 200};
  c.epochs = 2;
  CHECK(cmd_sweep_beta_n(c) == 0);
  c.out = b.string();
  c.jobs = 2;
  CHECK(cmd_sweep_beta_n(c) == 0);
  const auto ta = without_column(read_text(a / "sweep_beta_n.csv"), "wall_seconds");
  const auto tb = without_column(read_text(b / "sweep_beta_n.csv"), "wall_seconds");
  CHECK(parse_csv(ta, "a").rows.size() == 4);
  CHECK(ta == tb);
}

TEST_CASE("report on no inputs") {
  const auto dir = scratch("report-empty");
  CHECK(cmd_report({}, dir) == 0);
  const auto j = nlohmann::json::parse(read_text(dir / "report.json"));
  CHECK(j["schema_version"] == kSchemaVersion);
  CHECK(j["sweep_rows"].empty());
  CHECK(j["transition_beta"].empty());
}

TEST_CASE("report transition beta and order independence") {
  const auto t1 = sweep_table({{0.05, 0.97, "random"}, {3.0, 0.15, "random"}});
  const auto j = nlohmann::json::parse(report_json({{"s.csv", t1}}));
  REQUIRE(j["transition_beta"].size() == 1);
  const double tb = j["transition_beta"][0]["transition_beta"];
  CHECK(tb > 0.05);
  CHECK(tb <= 3.0);

  const auto t2 = sweep_table({{1.0, 0.4, "random"}, {0.5, 0.8, "real"}});
  CsvTable nuis{kNuisanceHeader, {}};
  NuisanceRow r;
  r.kind = "calibration";
  r.rho = 0.8;
  nuis.rows.push_back(nuisance_row(r));
  const auto ab = report_json({{"a.csv", t1}, {"b.csv", t2}, {"n.csv", nuis}});
  const auto ba = report_json({{"n.csv", nuis}, {"b.csv", t2}, {"a.csv", t1}});
  CHECK(ab == ba);
  const auto jj = nlohmann::json::parse(ab);
  CHECK(jj["transition_beta"][0]["transition_beta"] == 1.0);
  CHECK(jj["sweep_rows"].size() == 4);
  CHECK(jj["nuisance_rows"].size() == 1);
}

TEST_CASE("report rejects malformed input") {
  const auto dir = scratch("report-bad");
  write_text(dir / "bad.csv", "sweep,beta\nx,1,2\n");
  write_text(dir / "other.csv", "p,q\n1,2\n");
  CHECK(cmd_report({dir / "bad.csv"}, dir) == 2);
  CHECK(cmd_report({dir / "other.csv"}, dir) == 2);
  CHECK(cmd_report({dir / "missing.csv"}, dir) == 2);
}

TEST_CASE("emitted CSVs round trip through report") {
  const auto dir = scratch("roundtrip");
  auto c = small_config(dir);
  CHECK(cmd_train(c) == 0);
  CHECK(cmd_report({dir / "train.csv", dir / "history.csv"}, dir) == 0);
  const auto j = nlohmann::json::parse(read_text(dir / "report.json"));
  const auto row = parse_csv(read_text(dir / "train.csv"), "t");
  REQUIRE(j["sweep_rows"].size() == 1);
  for (std::size_t i = 0; i < row.header.size(); ++i) {
    const auto& v = j["sweep_rows"][0][row.header[i]];
    const std::string text = v.is_string() ? v.get<std::string>() : format_double(v.get<double>());
    CHECK(text == row.rows[0][i]);
  }
  CHECK(j["history_rows_ignored"] == c.epochs);
}

TEST_CASE("verify-bounds checks pass and perturbation keeps the inequality") {
  ExperimentConfig c;
  c.verify_samples = 20000;
  for (const auto& chk : verify_bounds_checks(c)) {
    INFO(chk.name);
    CHECK(chk.pass);
  }
  c.verify_alpha_perturbation = 0.3;
  bool saw_jensen = false;
  for (const auto& chk : verify_bounds_checks(c)) {
    if (chk.name.find("jensen") == std::string::npos) continue;
    saw_jensen = true;
    INFO(chk.name);
    CHECK(chk.pass);
  }
  CHECK(saw_jensen);
}

TEST_CASE("verify-bounds report") {
  const auto dir = scratch("verify");
  ExperimentConfig c;
  c.out = dir.string();
  c.verify_samples = 20000;
  CHECK(cmd_verify_bounds(c) == 0);
  const auto j = nlohmann::json::parse(read_text(dir / "verify_bounds.json"));
  CHECK(j["all_pass"] == true);
  std::set<std::string> names;
  for (const auto& chk : j["checks"]) {
    CHECK(chk.contains("values"));
    CHECK(chk.contains("tolerance"));
    names.insert(chk["name"].get<std::string>());
  }
  CHECK(names.size() == j["checks"].size());
}
