#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "ibw/errors.hpp"
#include "ibw/exp.hpp"

namespace ibw::exp {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// drop a trailing comment that is not inside quotes
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("config key '" + key + "': cannot read '" + value + "' as " + want);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

std::vector<std::string> to_items(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') bad_value(key, v, "a list [a, b, ...]");
  std::vector<std::string> items;
  const std::string body = trim(std::string_view(v).substr(1, v.size() - 2));
  if (body.empty()) return items;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& raw, F&& each) {
  std::vector<T> out;
  for (const auto& item : to_items(key, raw)) out.push_back(static_cast<T>(each(key, item)));
  return out;
}

template <typename T>
std::string list_text(const std::vector<T>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>)
      s += format_double(xs[i]);
    else
      s += std::to_string(xs[i]);
  }
  return s + "]";
}

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

Field f_double(const char* key, double& x) {
  return {key, [&x] { return format_double(x); }, [&x, key](const std::string& v) { x = to_double(key, v); }};
}
Field f_size(const char* key, std::size_t& x) {
  return {key, [&x] { return std::to_string(x); },
          [&x, key](const std::string& v) { x = static_cast<std::size_t>(to_u64(key, v)); }};
}
Field f_int(const char* key, int& x) {
  return {key, [&x] { return std::to_string(x); }, [&x, key](const std::string& v) {
            const double d = to_double(key, v);
            if (d != std::floor(d) || std::fabs(d) > 1e9) bad_value(key, v, "an integer");
            x = static_cast<int>(d);
          }};
}
Field f_u64(const char* key, std::uint64_t& x) {
  return {key, [&x] { return std::to_string(x); }, [&x, key](const std::string& v) { x = to_u64(key, v); }};
}
Field f_string(const char* key, std::string& x) {
  return {key, [&x] { return "\"" + x + "\""; }, [&x](const std::string& v) { x = unquote(trim(v)); }};
}
Field f_doubles(const char* key, std::vector<double>& x) {
  return {key, [&x] { return list_text(x); },
          [&x, key](const std::string& v) { x = to_list<double>(key, v, to_double); }};
}
Field f_sizes(const char* key, std::vector<std::size_t>& x) {
  return {key, [&x] { return list_text(x); },
          [&x, key](const std::string& v) { x = to_list<std::size_t>(key, v, to_u64); }};
}

std::vector<Field> fields(ExperimentConfig& c) {
  return {
      f_u64("seed", c.seed),
      f_string("out", c.out),
      f_int("jobs", c.jobs),
      f_string("data.dataset", c.dataset),
      f_string("data.dir", c.data_dir),
      f_size("data.n_train", c.n_train),
      f_size("data.n_test", c.n_test),
      f_string("data.labels", c.labels),
      f_double("data.corruption", c.corruption),
      f_size("data.synthetic_dim", c.synthetic_dim),
      f_double("data.synthetic_margin", c.synthetic_margin),
      f_int("data.synthetic_classes", c.synthetic_classes),
      f_sizes("model.hidden", c.hidden),
      f_string("model.activation", c.activation),
      f_string("model.noise", c.noise),
      f_double("model.init_log_alpha", c.init_log_alpha),
      f_double("train.beta", c.beta),
      f_size("train.epochs", c.epochs),
      f_size("train.batch_size", c.batch_size),
      f_double("train.lr", c.lr),
      f_sizes("train.lr_decay_epochs", c.lr_decay_epochs),
      f_double("train.lr_decay_factor", c.lr_decay_factor),
      f_double("train.momentum", c.momentum),
      f_double("train.log_alpha_lr_factor", c.log_alpha_lr_factor),
      f_doubles("sweep.betas", c.betas),
      f_sizes("sweep.ns", c.ns),
      f_doubles("sweep.corruptions", c.corruptions),
      f_size("sweep.plateau_window", c.plateau_window),
      f_double("sweep.plateau_tol", c.plateau_tol),
      f_int("nuisance.clutter_squares", c.clutter_squares),
      f_int("nuisance.clutter_size", c.clutter_size),
      f_double("nuisance.clutter_intensity", c.clutter_intensity),
      f_size("nuisance.samples", c.nuisance_samples),
      f_double("nuisance.eval_fraction", c.nuisance_eval_fraction),
      f_sizes("nuisance.disc_hidden", c.disc_hidden),
      f_size("nuisance.disc_epochs", c.disc_epochs),
      f_size("nuisance.disc_batch_size", c.disc_batch_size),
      f_double("nuisance.disc_lr", c.disc_lr),
      f_doubles("nuisance.calibration_rhos", c.calibration_rhos),
      f_size("nuisance.calibration_samples", c.calibration_samples),
      f_sizes("nuisance.calibration_hidden", c.calibration_hidden),
      f_size("verify.samples", c.verify_samples),
      f_size("verify.dim_x", c.verify_dim_x),
      f_size("verify.dim_z", c.verify_dim_z),
      f_doubles("verify.alphas", c.verify_alphas),
      f_size("verify.flat_k", c.verify_flat_k),
      f_double("verify.alpha_perturbation", c.verify_alpha_perturbation),
  };
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::stringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (s.front() == '[' && s.find('=') == std::string::npos) {
      if (s.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    kv[section.empty() ? key : section + "." + key] = trim(std::string_view(s).substr(eq + 1));
  }
  return kv;
}

void ExperimentConfig::apply(const KeyValues& kv) {
  auto fs = fields(*this);
  for (const auto& [key, value] : kv) {
    auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return f.key == key; });
    if (it == fs.end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(value);
  }
}

std::string ExperimentConfig::dump() const {
  auto fs = fields(const_cast<ExperimentConfig&>(*this));
  std::string out, section;
  for (const auto& f : fs) {
    const auto dot = f.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : f.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? f.key : f.key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + f.get() + "\n";
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (dataset != "mnist5k" && dataset != "synthetic") throw ConfigError("data.dataset must be mnist5k or synthetic");
  if (labels != "random" && labels != "real") throw ConfigError("data.labels must be random or real");
  if (!(corruption >= 0.0 && corruption <= 1.0)) throw ConfigError("data.corruption must lie in [0, 1]");
  if (n_train == 0) throw ConfigError("data.n_train must be >= 1");
  if (synthetic_classes < 2) throw ConfigError("data.synthetic_classes must be >= 2");
  vnn::NoiseModel::parse(noise);
  const auto act = vnn::parse_activation(activation);
  if (act == vnn::Activation::SoftmaxHead) throw ConfigError("model.activation must be relu or elu");
  for (auto h : hidden)
    if (h == 0) throw ConfigError("model.hidden widths must be positive");
  vnn::validate(train_config());
  if (betas.empty()) throw ConfigError("sweep.betas must be nonempty");
  if (ns.empty()) throw ConfigError("sweep.ns must be nonempty");
  if (corruptions.empty()) throw ConfigError("sweep.corruptions must be nonempty");
  for (double b : betas)
    if (!(b >= 0.0)) throw ConfigError("sweep.betas must be >= 0");
  for (double p : corruptions)
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sweep.corruptions must lie in [0, 1]");
  for (auto n : ns)
    if (n == 0) throw ConfigError("sweep.ns must be positive");
  nuisance::validate(nuisance::ClutterConfig{clutter_squares, clutter_size, clutter_intensity, seed});
  nuisance::validate(discriminator_config());
  if (!(nuisance_eval_fraction > 0.0 && nuisance_eval_fraction < 1.0))
    throw ConfigError("nuisance.eval_fraction must lie in (0, 1)");
  for (double r : calibration_rhos)
    if (!(std::fabs(r) < 1.0)) throw ConfigError("nuisance.calibration_rhos must satisfy |rho| < 1");
  if (verify_samples < 2 || verify_dim_x == 0 || verify_dim_z == 0 || verify_flat_k == 0)
    throw ConfigError("verify sizes must be positive (samples >= 2)");
  for (double a : verify_alphas)
    if (!(a > 0.0)) throw ConfigError("verify.alphas must be positive");
}

vnn::TrainConfig ExperimentConfig::train_config() const {
  vnn::TrainConfig t;
  t.beta = beta;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.lr.value = lr;
  t.lr.decay_epochs = lr_decay_epochs;
  t.lr.decay_factor = lr_decay_factor;
  t.momentum = momentum;
  t.seed = seed;
  t.init_log_alpha = init_log_alpha;
  t.noise = vnn::NoiseModel::parse(noise);
  t.log_alpha_lr_factor = log_alpha_lr_factor;
  return t;
}

vnn::NetworkSpec ExperimentConfig::network_spec(std::size_t input_dim, int num_classes) const {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(static_cast<std::size_t>(num_classes));
  return vnn::NetworkSpec::mlp(sizes, vnn::parse_activation(activation), vnn::NoiseModel::parse(noise),
                               init_log_alpha);
}

nuisance::DiscriminatorConfig ExperimentConfig::discriminator_config() const {
  nuisance::DiscriminatorConfig d;
  d.hidden = disc_hidden;
  d.epochs = disc_epochs;
  d.batch_size = disc_batch_size;
  d.learning_rate = disc_lr;
  return d;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg;
  cfg.apply(parse_key_values(read_text(path), path.string()));
  return cfg;
}

}  // namespace ibw::exp
