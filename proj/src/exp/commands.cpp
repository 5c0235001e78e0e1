#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include <json.hpp>

#include "ibw/errors.hpp"
#include "ibw/exp.hpp"
#include "ibw/info.hpp"

namespace ibw::exp {

namespace {

constexpr std::uint64_t kInitStream = 0x696E6974;
constexpr std::uint64_t kClutterStream = 0x636C7472;
constexpr std::uint64_t kMiStream = 0x6D697361;
constexpr std::uint64_t kDiscStream = 0x64697363;
constexpr std::uint64_t kCalibrationStream = 0x63616C69;

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double effective_corruption(const ExperimentConfig& cfg, const std::string& label_mode) {
  return label_mode == "random" ? 1.0 : cfg.corruption;
}

std::string b(bool v) { return v ? "1" : "0"; }

// Runs f(i) for i in [0, n) on up to `jobs` threads. Nested kernel regions
// run serially inside each task.
template <typename F>
void parallel_cells(std::size_t n, int jobs, F&& f) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::size_t i = 0; i < n; ++i) f(i);
}

void write_sweep(const std::filesystem::path& path, const std::vector<CellResult>& cells) {
  CsvTable t{kSweepHeader, {}};
  for (const auto& c : cells) t.rows.push_back(sweep_row(c));
  write_text(path, to_csv(t));
}

int sweep_exit(const std::vector<CellResult>& cells) {
  int failed = 0;
  for (const auto& c : cells)
    if (!c.error.empty()) {
      std::cerr << "cell beta=" << c.beta << " n=" << c.n << " corruption=" << c.corruption << " failed: " << c.error
                << "\n";
      ++failed;
    }
  return failed ? 1 : 0;
}

}  // namespace

const std::vector<std::string> kSweepHeader{
    "sweep",      "label_mode", "beta",     "n",         "corruption",         "seed",       "epochs_run", "converged",
    "train_acc",  "train_acc_det", "test_acc", "ce_nats_per_sample", "info_nats", "info_nats_per_sample",
    "wall_seconds", "error"};

const std::vector<std::string> kHistoryHeader{"epoch",     "ce_nats_per_sample",   "train_acc",
                                              "info_nats", "info_nats_per_sample", "seconds"};

const std::vector<std::string> kNuisanceHeader{"kind",      "beta",      "rho",     "mi_nats", "std_error", "n_samples",
                                               "train_acc", "disc_loss", "clipped", "true_mi", "error"};

std::vector<std::string> sweep_row(const CellResult& r) {
  return {r.sweep,
          r.label_mode,
          format_double(r.beta),
          std::to_string(r.n),
          format_double(r.corruption),
          std::to_string(r.seed),
          std::to_string(r.epochs_run),
          b(r.converged),
          format_double(r.train_acc),
          format_double(r.train_acc_det),
          format_double(r.test_acc),
          format_double(r.ce_nats_per_sample),
          format_double(r.info_nats),
          format_double(r.info_nats_per_sample),
          format_double(r.wall_seconds),
          r.error};
}

CsvTable history_table(const vnn::TrainHistory& h) {
  CsvTable t{kHistoryHeader, {}};
  for (const auto& e : h.epochs)
    t.rows.push_back({std::to_string(e.epoch), format_double(e.ce_nats_per_sample), format_double(e.train_acc),
                      format_double(e.info_nats), format_double(e.info_nats_per_sample), format_double(e.seconds)});
  return t;
}

std::vector<std::string> nuisance_row(const NuisanceRow& r) {
  return {r.kind,
          format_double(r.beta),
          format_double(r.rho),
          format_double(r.estimate.value),
          format_double(r.estimate.std_error),
          std::to_string(r.estimate.n_samples),
          format_double(r.train_acc),
          format_double(r.estimate.discriminator_loss),
          std::to_string(r.estimate.clipped),
          format_double(r.true_mi),
          r.error};
}

TrainedCell run_cell(const ExperimentConfig& cfg, const std::string& sweep, const std::string& label_mode,
                     double beta, std::size_t n, double corruption, bool until_plateau) {
  const auto t0 = clock_type::now();
  const Splits s = load_splits(cfg, n, corruption);
  Rng init = Rng::derived(cfg.seed, kInitStream);
  auto net = vnn::init_network(cfg.network_spec(s.train.feature_dim(), s.train.num_classes), init);
  auto tc = cfg.train_config();
  tc.beta = beta;
  if (until_plateau) {
    tc.plateau_window = cfg.plateau_window;
    tc.plateau_tol = cfg.plateau_tol;
  }

  TrainedCell out;
  out.trained = vnn::train(std::move(net), s.train, tc);
  auto& r = out.result;
  r.sweep = sweep;
  r.label_mode = label_mode;
  r.beta = beta;
  r.n = n;
  r.corruption = corruption;
  r.seed = cfg.seed;
  const auto& h = out.trained.history;
  r.epochs_run = h.epochs.size();
  r.converged = h.converged;
  if (!h.epochs.empty()) {
    r.train_acc = h.epochs.back().train_acc;
    r.ce_nats_per_sample = h.epochs.back().ce_nats_per_sample;
  }
  r.train_acc_det = vnn::evaluate(out.trained.net, s.train).accuracy;
  r.test_acc = s.test.size() ? vnn::evaluate(out.trained.net, s.test).accuracy : 0.0;
  r.info_nats = vnn::network_info_nats(out.trained.net);
  r.info_nats_per_sample = r.info_nats / static_cast<double>(n);
  r.wall_seconds = seconds_since(t0);
  return out;
}

int cmd_train(const ExperimentConfig& cfg) {
  const std::filesystem::path out(cfg.out);
  TrainedCell cell;
  try {
    cell = run_cell(cfg, "train", cfg.labels, cfg.beta, cfg.n_train, effective_corruption(cfg, cfg.labels), false);
  } catch (const TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 3;
  }
  write_text(out / "history.csv", to_csv(history_table(cell.trained.history)));
  write_sweep(out / "train.csv", {cell.result});
  data::save_checkpoint(out / "model.ckpt",
                        data::network_checkpoint(cell.trained.net, {{"command", "train"},
                                                                    {"seed", std::to_string(cfg.seed)},
                                                                    {"beta", format_double(cfg.beta)}}));

  const auto ir = info::info_report(cell.trained.net, cfg.n_train);
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "train";
  j["train_acc"] = cell.result.train_acc;
  j["train_acc_det"] = cell.result.train_acc_det;
  j["test_acc"] = cell.result.test_acc;
  j["ce_nats_per_sample"] = cell.result.ce_nats_per_sample;
  j["info_nats_mod_C"] = ir.total_info_nats;
  j["info_nats_per_sample_mod_C"] = ir.info_nats_per_sample;
  j["layer_info_nats"] = ir.layer_info_nats;
  j["layer_effective_alpha"] = ir.layer_effective_alpha;
  try {
    const auto br = info::bound_report(cell.trained.net);
    auto layers = nlohmann::ordered_json::array();
    for (const auto& l : br.layers)
      layers.push_back({{"alpha", l.alpha}, {"B", l.lower}, {"B_plus_1", l.upper}, {"dim_z", l.dim_z}});
    j["layer_bounds"] = layers;
    j["multilayer_bound_nats"] = br.multilayer_bound_nats;
  } catch (const DomainError&) {
    j["multilayer_bound_nats"] = nullptr;  // no stochastic layer
  }
  write_text(out / "summary.json", j.dump(2) + "\n");
  std::printf("train_acc %.4f  test_acc %.4f  info/N %.4f nats\n", cell.result.train_acc, cell.result.test_acc,
              ir.info_nats_per_sample);
  return 0;
}

int cmd_sweep_beta_n(const ExperimentConfig& cfg) {
  struct Key {
    double beta;
    std::size_t n;
  };
  std::vector<Key> keys;
  for (auto n : cfg.ns)
    for (double beta : cfg.betas) keys.push_back({beta, n});
  const double corruption = effective_corruption(cfg, cfg.labels);
  std::vector<CellResult> cells(keys.size());
  parallel_cells(keys.size(), cfg.jobs, [&](std::size_t i) {
    try {
      cells[i] = run_cell(cfg, "beta-n", cfg.labels, keys[i].beta, keys[i].n, corruption, false).result;
    } catch (const std::exception& e) {
      cells[i] = CellResult{};
      cells[i].sweep = "beta-n";
      cells[i].label_mode = cfg.labels;
      cells[i].beta = keys[i].beta;
      cells[i].n = keys[i].n;
      cells[i].corruption = corruption;
      cells[i].seed = cfg.seed;
      cells[i].error = e.what();
    }
  });
  write_sweep(std::filesystem::path(cfg.out) / "sweep_beta_n.csv", cells);
  return sweep_exit(cells);
}

int cmd_sweep_corruption(const ExperimentConfig& cfg) {
  if (!(cfg.beta < 1.0)) throw ConfigError("sweep-corruption needs train.beta < 1");
  std::vector<CellResult> cells(cfg.corruptions.size());
  parallel_cells(cells.size(), cfg.jobs, [&](std::size_t i) {
    const double p = cfg.corruptions[i];
    try {
      cells[i] = run_cell(cfg, "corruption", "corrupted", cfg.beta, cfg.n_train, p, true).result;
    } catch (const std::exception& e) {
      cells[i] = CellResult{};
      cells[i].sweep = "corruption";
      cells[i].label_mode = "corrupted";
      cells[i].beta = cfg.beta;
      cells[i].n = cfg.n_train;
      cells[i].corruption = p;
      cells[i].seed = cfg.seed;
      cells[i].error = e.what();
    }
  });
  const std::filesystem::path out(cfg.out);
  write_sweep(out / "sweep_corruption.csv", cells);

  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "sweep-corruption";
  j["beta"] = cfg.beta;
  j["n"] = cfg.n_train;
  auto levels = nlohmann::ordered_json::array();
  for (const auto& c : cells)
    levels.push_back({{"corruption", c.corruption},
                      {"info_nats_per_sample", c.info_nats_per_sample},
                      {"converged", c.converged},
                      {"epochs_run", c.epochs_run}});
  j["levels"] = levels;
  // highest minus lowest corruption level
  if (cells.size() >= 2) {
    auto by_p = [](const CellResult& a, const CellResult& b) { return a.corruption < b.corruption; };
    const auto [lo, hi] = std::minmax_element(cells.begin(), cells.end(), by_p);
    j["increase_nats_per_sample"] = hi->info_nats_per_sample - lo->info_nats_per_sample;
  }
  j["reference_nats_per_sample"] = std::log(10.0);
  write_text(out / "sweep_corruption.json", j.dump(2) + "\n");
  return sweep_exit(cells);
}

NuisanceRow nuisance_calibration(const ExperimentConfig& cfg, double rho) {
  NuisanceRow row;
  row.kind = "calibration";
  row.rho = rho;
  row.true_mi = nuisance::true_gaussian_mi(rho);
  Rng rng = Rng::derived(cfg.seed, kCalibrationStream + static_cast<std::uint64_t>(std::llround(rho * 1e6)));
  const auto joint = nuisance::synthetic_correlated_gaussian(rho, cfg.calibration_samples, rng);
  auto dc = cfg.discriminator_config();
  dc.hidden = cfg.calibration_hidden;
  row.estimate = nuisance::estimate_mi(joint, dc, cfg.nuisance_eval_fraction, rng);
  return row;
}

namespace {

// clean training images, their clutter-trained classifier, and the scaler
struct ClutterModel {
  DatasetSplit clean;
  FeatureScaler scaler;
  vnn::NetworkState net;
  double train_acc = 0.0;
};

ClutterModel train_on_clutter(const ExperimentConfig& cfg, double beta) {
  const DatasetSplit images = load_images(cfg);
  if (images.features.rank() != 3) throw ConfigError("nuisance-mi needs an image dataset");
  if (cfg.n_train > images.size()) throw ConfigError("data.n_train exceeds the dataset");
  ClutterModel m;
  m.clean = subset(images, 0, cfg.n_train);
  const nuisance::ClutterConfig cc{cfg.clutter_squares, cfg.clutter_size, cfg.clutter_intensity, cfg.seed};
  Rng crng = Rng::derived(cfg.seed, kClutterStream);
  DatasetSplit train = flattened(nuisance::generate_cluttered(m.clean, cc, crng).data);
  m.scaler = FeatureScaler::fit(train.features);
  train.features = m.scaler.apply(train.features);

  Rng init = Rng::derived(cfg.seed, kInitStream);
  auto net = vnn::init_network(cfg.network_spec(train.feature_dim(), train.num_classes), init);
  auto tc = cfg.train_config();
  tc.beta = beta;
  auto res = vnn::train(std::move(net), train, tc);
  m.net = std::move(res.net);
  m.train_acc = res.history.epochs.empty() ? 0.0 : res.history.epochs.back().train_acc;
  return m;
}

// Fresh clutter on cycled training images: x = f(y, n).
nuisance::ClutteredSet fresh_clutter(const ExperimentConfig& cfg, const DatasetSplit& clean) {
  std::vector<std::size_t> rows(cfg.nuisance_samples);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i % clean.size();
  const DatasetSplit cycled = gather(clean, rows);
  const nuisance::ClutterConfig cc{cfg.clutter_squares, cfg.clutter_size, cfg.clutter_intensity, cfg.seed};
  Rng rng = Rng::derived(cfg.seed, kMiStream);
  return nuisance::generate_cluttered(cycled, cc, rng);
}

Tensor flat_rows(const Tensor& t) { return t.reshaped({t.dim(0), t.row_size()}); }

}  // namespace

NuisanceRow nuisance_clutter(const ExperimentConfig& cfg, double beta) {
  NuisanceRow row;
  row.kind = "clutter";
  row.beta = beta;
  const ClutterModel m = train_on_clutter(cfg, beta);
  row.train_acc = m.train_acc;

  const auto set = fresh_clutter(cfg, m.clean);
  const Tensor x = m.scaler.apply(flat_rows(set.data.features));
  // z: last hidden activation under the deterministic pass
  const auto acts = vnn::forward_deterministic_all(m.net, x);
  const Tensor& z = acts.at(acts.size() - 3);
  Rng rng = Rng::derived(cfg.seed, kDiscStream);
  row.estimate = nuisance::estimate_mi({z, flat_rows(set.nuisance)}, cfg.discriminator_config(),
                                       cfg.nuisance_eval_fraction, rng);
  return row;
}

NuisanceRow nuisance_label_check(const ExperimentConfig& cfg) {
  NuisanceRow row;
  row.kind = "labels";
  const DatasetSplit images = load_images(cfg);
  if (images.features.rank() != 3) throw ConfigError("nuisance-mi needs an image dataset");
  const DatasetSplit clean = subset(images, 0, std::min(cfg.n_train, images.size()));
  const auto set = fresh_clutter(cfg, clean);
  Tensor y({set.size(), static_cast<std::size_t>(set.data.num_classes)});
  for (std::size_t i = 0; i < set.size(); ++i) y(i, static_cast<std::size_t>(set.data.labels[i])) = 1.0;
  Rng rng = Rng::derived(cfg.seed, kDiscStream + 1);
  row.estimate =
      nuisance::estimate_mi({y, flat_rows(set.nuisance)}, cfg.discriminator_config(), cfg.nuisance_eval_fraction, rng);
  return row;
}

int cmd_nuisance_mi(const ExperimentConfig& cfg) {
  struct Task {
    std::string kind;
    double value;
  };
  std::vector<Task> tasks;
  for (double rho : cfg.calibration_rhos) tasks.push_back({"calibration", rho});
  tasks.push_back({"labels", 0.0});
  for (double beta : cfg.betas) tasks.push_back({"clutter", beta});

  std::vector<NuisanceRow> rows(tasks.size());
  parallel_cells(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const auto& t = tasks[i];
    try {
      if (t.kind == "calibration")
        rows[i] = nuisance_calibration(cfg, t.value);
      else if (t.kind == "labels")
        rows[i] = nuisance_label_check(cfg);
      else
        rows[i] = nuisance_clutter(cfg, t.value);
    } catch (const std::exception& e) {
      rows[i] = NuisanceRow{};
      rows[i].kind = t.kind;
      (t.kind == "calibration" ? rows[i].rho : rows[i].beta) = t.value;
      rows[i].error = e.what();
    }
  });
  CsvTable table{kNuisanceHeader, {}};
  int failed = 0;
  for (const auto& r : rows) {
    table.rows.push_back(nuisance_row(r));
    if (!r.error.empty()) {
      std::cerr << r.kind << " row failed: " << r.error << "\n";
      ++failed;
    }
  }
  write_text(std::filesystem::path(cfg.out) / "nuisance_mi.csv", to_csv(table));
  return failed ? 1 : 0;
}

}  // namespace ibw::exp
