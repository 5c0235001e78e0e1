#pragma once

// Experiment harness behind the `ibw` command-line tool.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ibw/data.hpp"
#include "ibw/dataset.hpp"
#include "ibw/nuisance.hpp"
#include "ibw/vnn.hpp"

namespace ibw::exp {

inline constexpr int kSchemaVersion = 1;

// ---- configuration ----

// Flat key/value view of a TOML-style file: `key = value` lines, `#`
// comments, `[section]` headers prefixing keys with "section.". Values are
// kept as text; arrays are written `[a, b, c]`.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text, const std::string& origin = "config");

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out = "out";
  int jobs = 1;

  // data
  std::string dataset = "mnist5k";  // mnist5k | synthetic
  std::string data_dir = IBW_DATA_DIR;
  std::size_t n_train = 512;
  std::size_t n_test = 2048;
  std::string labels = "random";  // random | real
  double corruption = 0.0;        // train only
  std::size_t synthetic_dim = 16;
  double synthetic_margin = 4.0;
  int synthetic_classes = 4;

  // model and training
  std::vector<std::size_t> hidden{128, 128};
  std::string activation = "relu";
  std::string noise = "log-normal";
  double init_log_alpha = -6.0;
  double beta = 0.1;
  std::size_t epochs = 60;
  std::size_t batch_size = 128;
  double lr = 0.02;
  std::vector<std::size_t> lr_decay_epochs{40};
  double lr_decay_factor = 0.1;
  double momentum = 0.9;
  double log_alpha_lr_factor = 1.0;

  // sweeps
  std::vector<double> betas{0.05, 3.0};
  std::vector<std::size_t> ns{512};
  std::vector<double> corruptions{0.0, 0.5, 1.0};
  std::size_t plateau_window = 10;
  double plateau_tol = 1e-3;

  // nuisance
  int clutter_squares = 10;
  int clutter_size = 4;
  double clutter_intensity = 1.0;
  std::size_t nuisance_samples = 20000;
  double nuisance_eval_fraction = 0.2;
  std::vector<std::size_t> disc_hidden{256, 256};
  std::size_t disc_epochs = 30;
  std::size_t disc_batch_size = 128;
  double disc_lr = 0.01;
  std::vector<double> calibration_rhos{0.0, 0.5, 0.8};
  std::size_t calibration_samples = 50000;
  std::vector<std::size_t> calibration_hidden{64, 64};

  // verify-bounds
  std::size_t verify_samples = 100000;
  std::size_t verify_dim_x = 512;
  std::size_t verify_dim_z = 4;
  std::vector<double> verify_alphas{0.1, 0.5, 1.0};
  std::size_t verify_flat_k = 8;
  double verify_alpha_perturbation = 0.0;

  // Applies every key in kv; unknown keys or unparsable values -> ConfigError.
  void apply(const KeyValues& kv);
  // Every key with its current value, in the file format.
  std::string dump() const;
  void validate() const;

  vnn::TrainConfig train_config() const;
  vnn::NetworkSpec network_spec(std::size_t input_dim, int num_classes) const;
  nuisance::DiscriminatorConfig discriminator_config() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

// ---- datasets ----

struct Splits {
  DatasetSplit train;  // flattened, standardised with the training scaler
  DatasetSplit test;
};

// Training rows are the first n_train, test rows the last n_test; labels of
// the training split are corrupted with probability `corruption`.
Splits load_splits(const ExperimentConfig& cfg, std::size_t n_train, double corruption);
// Unflattened, unscaled images of the configured dataset.
DatasetSplit load_images(const ExperimentConfig& cfg);

// ---- CSV ----

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string format_double(double v);  // shortest round-trip text
std::string to_csv(const CsvTable& t);
// Throws FormatError (offset = byte position) naming the line on malformed input.
CsvTable parse_csv(const std::string& text, const std::string& origin);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// ---- results ----

struct CellResult {
  std::string sweep;  // train | beta-n | corruption
  std::string label_mode;
  double beta = 0.0;
  std::size_t n = 0;
  double corruption = 0.0;
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  bool converged = false;
  double train_acc = 0.0;      // last epoch, sampled forward passes
  double train_acc_det = 0.0;  // deterministic pass after training
  double test_acc = 0.0;
  double ce_nats_per_sample = 0.0;
  double info_nats = 0.0;
  double info_nats_per_sample = 0.0;
  double wall_seconds = 0.0;
  std::string error;
};

extern const std::vector<std::string> kSweepHeader;
extern const std::vector<std::string> kHistoryHeader;
extern const std::vector<std::string> kNuisanceHeader;

std::vector<std::string> sweep_row(const CellResult& r);
CsvTable history_table(const vnn::TrainHistory& h);

struct TrainedCell {
  CellResult result;
  vnn::TrainResult trained;
};

// One training cell; exceptions propagate.
TrainedCell run_cell(const ExperimentConfig& cfg, const std::string& sweep, const std::string& label_mode,
                     double beta, std::size_t n, double corruption, bool until_plateau);

// ---- commands; return the process exit code ----

int cmd_train(const ExperimentConfig& cfg);
int cmd_sweep_beta_n(const ExperimentConfig& cfg);
int cmd_sweep_corruption(const ExperimentConfig& cfg);
int cmd_verify_bounds(const ExperimentConfig& cfg);
int cmd_nuisance_mi(const ExperimentConfig& cfg);
int cmd_report(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out);

// ---- pieces the commands and tests share ----

struct Check {
  std::string name;
  bool pass = false;
  std::map<std::string, double> values;
  std::string tolerance;
};

std::vector<Check> verify_bounds_checks(const ExperimentConfig& cfg);

struct NuisanceRow {
  std::string kind;  // calibration | clutter | labels
  double beta = 0.0;
  double rho = 0.0;
  info::MIEstimate estimate;
  double train_acc = 0.0;
  double true_mi = 0.0;
  std::string error;
};

std::vector<std::string> nuisance_row(const NuisanceRow& r);
NuisanceRow nuisance_calibration(const ExperimentConfig& cfg, double rho);
NuisanceRow nuisance_clutter(const ExperimentConfig& cfg, double beta);
// I(n;y) estimate for the clutter generator; should be ~0.
NuisanceRow nuisance_label_check(const ExperimentConfig& cfg);

// Merged summary of sweep / nuisance CSV files as JSON text.
std::string report_json(const std::vector<std::pair<std::string, CsvTable>>& tables);

}  // namespace ibw::exp
