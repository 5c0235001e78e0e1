#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <set>

#include <json.hpp>

#include "ibw/errors.hpp"
#include "ibw/exp.hpp"

namespace ibw::exp {

namespace {

using ojson = nlohmann::ordered_json;

std::optional<double> as_number(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// numbers where the text round-trips exactly, strings otherwise
ojson cell_value(const std::string& s) {
  if (const auto v = as_number(s); v && format_double(*v) == s) return *v;
  return s;
}

std::size_t column(const CsvTable& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  return static_cast<std::size_t>(it - t.header.begin());
}

double num(const std::vector<std::string>& row, std::size_t col) { return as_number(row[col]).value_or(NAN); }

ojson row_object(const CsvTable& t, const std::vector<std::string>& row) {
  ojson o;
  for (std::size_t i = 0; i < t.header.size(); ++i) o[t.header[i]] = cell_value(row[i]);
  return o;
}

}  // namespace

std::string report_json(const std::vector<std::pair<std::string, CsvTable>>& tables) {
  // rows of each kind, pooled and sorted so the input order does not matter
  std::vector<std::vector<std::string>> sweep_rows, nuisance_rows, history_rows;
  std::vector<std::string> inputs;
  for (const auto& [name, t] : tables) {
    inputs.push_back(name);
    auto& dst = t.header == kSweepHeader ? sweep_rows : t.header == kNuisanceHeader ? nuisance_rows : history_rows;
    dst.insert(dst.end(), t.rows.begin(), t.rows.end());
  }
  std::sort(inputs.begin(), inputs.end());
  const CsvTable sweep_t{kSweepHeader, {}}, nuis_t{kNuisanceHeader, {}};
  auto key_sort = [](const CsvTable& t, std::vector<std::vector<std::string>>& rows,
                     const std::vector<std::string>& text_cols, const std::vector<std::string>& num_cols) {
    std::sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
      for (const auto& c : text_cols) {
        const auto i = column(t, c);
        if (a[i] != b[i]) return a[i] < b[i];
      }
      for (const auto& c : num_cols) {
        const auto i = column(t, c);
        const double x = num(a, i), y = num(b, i);
        if (x != y) return x < y;
      }
      return a < b;
    });
  };
  key_sort(sweep_t, sweep_rows, {"sweep", "label_mode"}, {"n", "beta", "corruption", "seed"});
  key_sort(nuis_t, nuisance_rows, {"kind"}, {"rho", "beta"});

  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["inputs"] = inputs;

  auto sweeps = ojson::array();
  for (const auto& r : sweep_rows) sweeps.push_back(row_object(sweep_t, r));
  j["sweep_rows"] = sweeps;

  // transition beta: first grid beta (ascending) where random-label train_acc < 0.5
  const auto c_mode = column(sweep_t, "label_mode"), c_n = column(sweep_t, "n"), c_beta = column(sweep_t, "beta"),
             c_acc = column(sweep_t, "train_acc"), c_err = column(sweep_t, "error"),
             c_sweep = column(sweep_t, "sweep"), c_corr = column(sweep_t, "corruption"),
             c_info = column(sweep_t, "info_nats_per_sample"), c_seed = column(sweep_t, "seed");
  auto transitions = ojson::array();
  std::set<std::pair<double, std::string>> groups;
  for (const auto& r : sweep_rows)
    if (r[c_mode] == "random" && r[c_err].empty()) groups.insert({num(r, c_n), r[c_seed]});
  for (const auto& [n, seed] : groups) {
    ojson t;
    t["n"] = n;
    t["seed"] = cell_value(seed);
    t["transition_beta"] = nullptr;
    for (const auto& r : sweep_rows)  // already sorted by beta
      if (r[c_mode] == "random" && r[c_err].empty() && num(r, c_n) == n && r[c_seed] == seed &&
          num(r, c_acc) < 0.5) {
        t["transition_beta"] = num(r, c_beta);
        break;
      }
    transitions.push_back(t);
  }
  j["transition_beta"] = transitions;

  // corruption sweeps: info per sample by level and the full - zero increase
  auto corruption = ojson::array();
  std::set<std::tuple<double, double, std::string>> cgroups;
  for (const auto& r : sweep_rows)
    if (r[c_sweep] == "corruption" && r[c_err].empty()) cgroups.insert({num(r, c_n), num(r, c_beta), r[c_seed]});
  for (const auto& [n, beta, seed] : cgroups) {
    ojson g;
    g["n"] = n;
    g["beta"] = beta;
    g["seed"] = cell_value(seed);
    auto levels = ojson::array();
    std::optional<double> zero, full;
    for (const auto& r : sweep_rows)
      if (r[c_sweep] == "corruption" && r[c_err].empty() && num(r, c_n) == n && num(r, c_beta) == beta &&
          r[c_seed] == seed) {
        levels.push_back({{"corruption", num(r, c_corr)}, {"info_nats_per_sample", num(r, c_info)}});
        if (num(r, c_corr) == 0.0) zero = num(r, c_info);
        if (num(r, c_corr) == 1.0) full = num(r, c_info);
      }
    g["levels"] = levels;
    g["increase_full_minus_zero"] = zero && full ? ojson(*full - *zero) : ojson(nullptr);
    g["reference_nats_per_sample"] = std::log(10.0);
    corruption.push_back(g);
  }
  j["corruption"] = corruption;

  auto nuis = ojson::array();
  for (const auto& r : nuisance_rows) nuis.push_back(row_object(nuis_t, r));
  j["nuisance_rows"] = nuis;
  j["history_rows_ignored"] = history_rows.size();
  return j.dump(2) + "\n";
}

int cmd_report(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out) {
  std::vector<std::pair<std::string, CsvTable>> tables;
  for (const auto& p : inputs) {
    try {
      CsvTable t = parse_csv(read_text(p), p.string());
      if (t.header != kSweepHeader && t.header != kNuisanceHeader && t.header != kHistoryHeader)
        throw FormatError(p.string() + ":1: unrecognised header", 0);
      tables.emplace_back(p.filename().string(), std::move(t));
    } catch (const std::exception& e) {
      std::cerr << "report: " << e.what() << "\n";
      return 2;
    }
  }
  const std::string text = report_json(tables);
  write_text(out / "report.json", text);
  std::cout << text;
  return 0;
}

}  // namespace ibw::exp
