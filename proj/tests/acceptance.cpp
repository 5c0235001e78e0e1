// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [OUT_DIR] [--only N,M,...]

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ibw/data.hpp"
#include "ibw/errors.hpp"
#include "ibw/exp.hpp"
#include "ibw/info.hpp"
#include "ibw/nuisance.hpp"
#include "ibw/vnn.hpp"

using namespace ibw;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = IBW_SOURCE_DIR;
fs::path g_out;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using clock_type = std::chrono::steady_clock;

double minutes_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count() / 60.0;
}

exp::ExperimentConfig config(const std::string& name, const std::string& out) {
  auto c = exp::load_config(kSource / "configs" / name);
  c.out = (g_out / out).string();
  return c;
}

exp::CsvTable read_csv(const fs::path& p) { return exp::parse_csv(exp::read_text(p), p.string()); }

std::size_t col(const exp::CsvTable& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw InputError("no column " + name);
  return static_cast<std::size_t>(it - t.header.begin());
}

double num(const std::string& s) { return std::stod(s); }

std::string drop_columns(const std::string& csv, std::initializer_list<const char*> cols) {
  auto t = exp::parse_csv(csv, "csv");
  for (const char* c : cols)
    if (auto it = std::find(t.header.begin(), t.header.end(), c); it != t.header.end()) {
      const auto i = static_cast<std::size_t>(it - t.header.begin());
      for (auto& r : t.rows) r[i].clear();
    }
  return exp::to_csv(t);
}

// ---- criteria ----

void random_labels(Outcome& o) {
  const auto t0 = clock_type::now();
  const auto cfg = config("random_labels.toml", "random_labels");
  o.require(exp::cmd_sweep_beta_n(cfg) == 0, "sweep exit code");
  const auto t = read_csv(fs::path(cfg.out) / "sweep_beta_n.csv");
  std::map<double, double> acc;
  for (const auto& r : t.rows) acc[num(r[col(t, "beta")])] = num(r[col(t, "train_acc")]);
  o.require(acc.count(0.05) && acc.count(3.0), "both cells present");
  o.require(acc[0.05] >= 0.90, "train_acc(0.05) >= 0.90");
  o.require(acc[3.0] <= 0.20, "train_acc(3) <= 0.20");
  o.require(exp::cmd_report({fs::path(cfg.out) / "sweep_beta_n.csv"}, cfg.out) == 0, "report exit code");
  const auto j = nlohmann::json::parse(exp::read_text(fs::path(cfg.out) / "report.json"));
  double tb = NAN;
  if (j["transition_beta"].size() == 1 && j["transition_beta"][0]["transition_beta"].is_number())
    tb = j["transition_beta"][0]["transition_beta"];
  o.require(tb > 0.05 && tb <= 3.0, "transition beta in (0.05, 3]");
  const double m = minutes_since(t0);
  o.require(m <= 15.0, "runtime <= 15 min");
  o.detail << "train_acc(beta=0.05)=" << acc[0.05] << " train_acc(beta=3)=" << acc[3.0] << " transition_beta=" << tb
           << " minutes=" << m;
}

void real_labels(Outcome& o) {
  const auto t0 = clock_type::now();
  const auto cfg = config("real_labels.toml", "real_labels");
  o.require(exp::cmd_train(cfg) == 0, "train exit code");
  const auto t = read_csv(fs::path(cfg.out) / "train.csv");
  const double tr = num(t.rows.at(0)[col(t, "train_acc")]);
  const double te = num(t.rows.at(0)[col(t, "test_acc")]);
  const auto n_test = cfg.n_test;
  o.require(tr >= 0.85, "train_acc >= 0.85");
  o.require(te >= 0.80, "test_acc >= 0.80");
  o.require(n_test == 2048, "2048 test samples");
  const double m = minutes_since(t0);
  o.require(m <= 10.0, "runtime <= 10 min");
  o.detail << "train_acc=" << tr << " test_acc=" << te << " minutes=" << m;
}

void corruption(Outcome& o) {
  const auto t0 = clock_type::now();
  const auto cfg = config("corruption.toml", "corruption");
  o.require(cfg.beta == 0.1 && cfg.n_train == 2048, "beta 0.1, N 2048");
  o.require(exp::cmd_sweep_corruption(cfg) == 0, "sweep exit code");
  const auto t = read_csv(fs::path(cfg.out) / "sweep_corruption.csv");
  std::vector<std::pair<double, double>> levels;
  for (const auto& r : t.rows) levels.emplace_back(num(r[col(t, "corruption")]), num(r[col(t, "info_nats_per_sample")]));
  std::sort(levels.begin(), levels.end());
  o.require(levels.size() == 3 && levels.front().first == 0.0 && levels.back().first == 1.0, "levels {0, 0.5, 1}");
  for (std::size_t i = 1; i < levels.size(); ++i)
    o.require(levels[i].second >= levels[i - 1].second - 0.2, "non-decreasing within 0.2 nats/sample");
  const double inc = levels.back().second - levels.front().second;
  o.require(inc >= 1.0 && inc <= 5.0, "increase in [1, 5] nats/sample");
  const auto j = nlohmann::json::parse(exp::read_text(fs::path(cfg.out) / "sweep_corruption.json"));
  o.require(std::fabs(j["reference_nats_per_sample"].get<double>() - std::log(10.0)) < 1e-12, "ln 10 reference");
  const double m = minutes_since(t0);
  o.require(m <= 30.0, "runtime <= 30 min");
  o.detail << "info/N:";
  for (const auto& [p, v] : levels) o.detail << " p=" << p << ":" << v;
  o.detail << " increase=" << inc << " (reference " << std::log(10.0) << ") minutes=" << m;
}

void duality(Outcome& o) {
  const auto t0 = clock_type::now();
  const std::size_t n = 100000, dx = 512, dz = 4;
  Rng rng = Rng::derived(0, 1);
  const Tensor x = sample_standard_normal(rng, {n, dx});
  const Tensor w = sample_standard_normal(rng, {dz, dx});
  for (double a : {0.1, 0.5, 1.0}) {
    const std::vector<double> alphas(dz, a);
    const auto cf = info::duality_closed_form(w, alphas, x);
    Rng mr = Rng::derived(0, 2);
    const auto mc = info::mc_mi_gaussian(w, alphas, x, mr);
    const double se = std::hypot(cf.std_error, mc.std_error);
    const double per = cf.value / static_cast<double>(dz);
    const double b = info::bound_fn(a);
    o.require(std::fabs(cf.value - mc.value) <= 3 * se, "closed form vs MC within 3 SE");
    o.require(per >= b && per <= b + 0.05 + 3 * cf.std_error / dz, "B(alpha) <= I/dim z <= B + 0.05 + 3 SE");
    o.detail << " alpha=" << a << ": cf=" << cf.value << " mc=" << mc.value << " se=" << se << " per=" << per
             << " B=" << b;
  }
  const double m = minutes_since(t0);
  o.require(m <= 2.0, "runtime <= 2 min");
  o.detail << " minutes=" << m;
}

void flat_minima(Outcome& o) {
  // diagonal quadratic loss: per coordinate the Lagrangian is
  // alpha w^2 H - (beta / 2) log alpha; grid-search its minimiser
  Rng rng = Rng::derived(0, 3);
  const std::size_t k = 8;
  const double beta = 0.5;
  std::vector<double> w(k), h(k);
  for (std::size_t i = 0; i < k; ++i) {
    w[i] = 0.2 + rng.uniform() * 2.0;
    h[i] = 0.1 + rng.uniform() * 5.0;
  }
  const auto formula = info::optimal_alpha_quadratic(w, h, beta);
  double worst = 0.0;
  std::vector<double> log_opt;
  for (std::size_t i = 0; i < k; ++i) {
    auto f = [&](double la) { return std::exp(la) * w[i] * w[i] * h[i] - 0.5 * beta * la; };
    double lo = -30.0, hi = 10.0;
    for (int round = 0; round < 12; ++round) {
      const int pts = 200;
      double best = lo, best_f = f(lo);
      for (int p = 1; p <= pts; ++p) {
        const double la = lo + (hi - lo) * p / pts;
        if (f(la) < best_f) best = la, best_f = f(la);
      }
      const double step = (hi - lo) / pts;
      lo = best - step;
      hi = best + step;
    }
    const double grid = std::exp(0.5 * (lo + hi));
    worst = std::max(worst, std::fabs(grid - *formula[i]) / *formula[i]);
    log_opt.push_back(std::log(grid));
  }
  o.require(worst <= 1e-6, "grid optimum matches beta/(2 w^2 H) within 1e-6 relative");
  const double exact = info::info_in_weights(log_opt);
  const double bound = info::flat_minima_bound(w, h, beta);
  o.require(bound >= exact, "flat_minima_bound >= exact info at the optimum");
  const std::vector<double> w1{w[0]}, h1{h[0]};
  const double lone = info::info_in_weights(std::vector<double>{std::log(*info::optimal_alpha_quadratic(w1, h1, beta)[0])});
  const double eq = std::fabs(info::flat_minima_bound(w1, h1, beta) - lone);
  o.require(eq <= 1e-9, "equality at K = 1 within 1e-9");
  o.detail << "max_rel_err=" << worst << " bound=" << bound << " exact=" << exact << " k1_gap=" << eq;
}

void gradients(Outcome& o) {
  using namespace vnn;
  double worst = 0.0;
  std::size_t checked = 0;
  for (auto kind : {NoiseKind::LogNormal, NoiseKind::GaussianMultiplicative, NoiseKind::None})
    for (auto act : {Activation::ReLU, Activation::ELU}) {
      NetworkSpec spec;
      spec.noise = NoiseModel{kind};
      spec.layers = {DenseSpec{4, 3, {}}, act, DenseSpec{3, 2, {}}, Activation::SoftmaxHead};
      Rng rng = Rng::derived(0, 4);
      auto net = init_network(spec, rng);
      for (auto* d : net.dense_layers())
        for (double& v : d->log_alpha.data()) v = -2.5 + rng.uniform() * 2.0;
      const Tensor x = sample_standard_normal(rng, {5, 4});
      const std::vector<int> y{0, 1, 1, 0, 1};
      const auto eps = draw_noise(net, 5, rng);
      const double beta = 0.3, n_total = 50.0, delta = 1e-4;
      const auto r = loss_and_grad_with_noise(net, x, y, beta, n_total, eps);
      for (std::size_t l = 0; l < 2; ++l) {
        auto* d = net.dense_layers()[l];
        const std::pair<Tensor*, const Tensor*> params[] = {
            {&d->w_mean, &r.grads[l].w_mean}, {&d->bias, &r.grads[l].bias}, {&d->log_alpha, &r.grads[l].log_alpha}};
        for (const auto& [p, g] : params)
          for (std::size_t i = 0; i < p->size(); ++i) {
            const double saved = (*p)[i];
            (*p)[i] = saved + delta;
            const double up = loss_and_grad_with_noise(net, x, y, beta, n_total, eps).total_loss;
            (*p)[i] = saved - delta;
            const double down = loss_and_grad_with_noise(net, x, y, beta, n_total, eps).total_loss;
            (*p)[i] = saved;
            const double numeric = (up - down) / (2 * delta);
            const double rel = std::fabs((*g)[i] - numeric) / std::max({std::fabs(numeric), std::fabs((*g)[i]), 1e-3});
            worst = std::max(worst, rel);
            ++checked;
          }
      }
    }
  o.require(worst <= 1e-4, "relative error <= 1e-4");
  o.detail << "parameters=" << checked << " max_rel_err=" << worst;
}

void calibration(Outcome& o) {
  const auto t0 = clock_type::now();
  const auto cfg = config("nuisance.toml", "calibration");
  o.require(cfg.calibration_samples == 50000, "N = 5e4");
  for (double rho : {0.0, 0.5, 0.8}) {
    const auto row = exp::nuisance_calibration(cfg, rho);
    o.require(std::fabs(row.estimate.value - row.true_mi) <= 0.1, "|estimate - true| <= 0.1");
    o.detail << " rho=" << rho << ": est=" << row.estimate.value << " true=" << row.true_mi;
  }
  const double m = minutes_since(t0);
  o.require(m <= 5.0, "runtime <= 5 min");
  o.detail << " minutes=" << m;
}

void invariance(Outcome& o) {
  const auto t0 = clock_type::now();
  auto cfg = config("nuisance.toml", "nuisance");
  cfg.calibration_rhos = {};  // already covered by criterion 7
  o.require(exp::cmd_nuisance_mi(cfg) == 0, "nuisance-mi exit code");
  const auto rows = read_csv(fs::path(cfg.out) / "nuisance_mi.csv").rows;
  const exp::CsvTable h{exp::kNuisanceHeader, {}};
  std::vector<std::tuple<double, double, double, double>> pts;  // beta, mi, se, train_acc
  for (const auto& r : rows)
    if (r[col(h, "kind")] == "clutter")
      pts.emplace_back(num(r[col(h, "beta")]), num(r[col(h, "mi_nats")]), num(r[col(h, "std_error")]),
                       num(r[col(h, "train_acc")]));
  std::sort(pts.begin(), pts.end());
  o.require(pts.size() == 3, "three betas");
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double se = std::hypot(std::get<2>(pts[i]), std::get<2>(pts[i - 1]));
    o.require(std::get<1>(pts[i]) <= std::get<1>(pts[i - 1]) + se, "I(z;n) non-increasing within 1 SE");
  }
  for (const auto& [beta, mi, se, acc] : pts) {
    if (beta <= 0.1) o.require(acc >= 0.8, "train_acc >= 0.8 for beta <= 0.1");
    o.detail << " beta=" << beta << ": I=" << mi << "+-" << se << " train_acc=" << acc;
  }
  for (const auto& r : rows)
    if (r[col(h, "kind")] == "labels") o.detail << " I(n;y)=" << r[col(h, "mi_nats")];
  const double m = minutes_since(t0);
  o.require(m <= 45.0, "runtime <= 45 min");
  o.detail << " minutes=" << m;
}

void pac_bayes(Outcome& o) {
  const double v = info::pac_bayes_bound(50, 10, 100, 1, std::log(10.0));
  o.require(std::fabs(v - 1.460517) <= 1e-6 && std::fabs(v - (50 + std::log(10.0) * 10) / 50.0) <= 1e-9,
            "example value");
  double prev = -INFINITY;
  bool mono = true;
  for (double kl : {0.0, 1.0, 2.0, 4.0, 8.0}) {
    const double b = info::pac_bayes_bound(50, kl, 100, 1, std::log(10.0));
    mono = mono && b > prev;
    prev = b;
  }
  o.require(mono, "strictly increasing in KL");
  o.detail << "value=" << v;
}

void infrastructure(Outcome& o) {
  // IDX corpus
  const fs::path dir = kSource / "tests" / "fixtures" / "idx";
  const auto manifest = nlohmann::json::parse(exp::read_text(dir / "manifest.json"));
  std::size_t ok = 0;
  for (const auto& c : manifest) {
    try {
      const auto d = data::load_idx(dir / c["images"].get<std::string>(), dir / c["labels"].get<std::string>());
      ok += c["ok"].get<bool>() && d.features.shape() == c["shape"].get<Tensor::Shape>();
    } catch (const FormatError& e) {
      ok += !c["ok"].get<bool>() && e.offset() == c["offset"].get<std::size_t>() &&
            std::string(e.what()).find(c["message"].get<std::string>()) != std::string::npos;
    }
  }
  o.require(ok == manifest.size(), "IDX corpus diagnostics");

  // checkpoint
  Rng rng = Rng::derived(0, 5);
  auto net = vnn::init_network(vnn::NetworkSpec::mlp({6, 5, 3}), rng);
  for (auto* d : net.dense_layers())
    for (double& v : d->log_alpha.data()) v = -12.0 + 12.0 * rng.uniform();
  const fs::path ck = g_out / "infra" / "net.ckpt";
  fs::create_directories(ck.parent_path());
  data::save_checkpoint(ck, data::network_checkpoint(net));
  const auto back = data::network_from_checkpoint(data::load_checkpoint(ck));
  bool exact = true;
  for (std::size_t l = 0; l < 2; ++l) {
    const auto *a = net.dense_layers()[l], *b = back.dense_layers()[l];
    for (auto [x, y] : {std::pair{&a->w_mean, &b->w_mean}, {&a->bias, &b->bias}, {&a->log_alpha, &b->log_alpha}})
      exact = exact && x->shape() == y->shape() &&
              std::memcmp(x->data().data(), y->data().data(), x->size() * sizeof(double)) == 0;
  }
  const Tensor probe = sample_standard_normal(rng, {7, 6});
  const Tensor ya = vnn::forward_deterministic(net, probe), yb = vnn::forward_deterministic(back, probe);
  exact = exact && std::memcmp(ya.data().data(), yb.data().data(), ya.size() * sizeof(double)) == 0;
  o.require(exact, "checkpoint round trip bit-exact");

  // sweep reproducibility
  auto cfg = config("random_labels.toml", "infra/a");
  cfg.epochs = 3;
  cfg.ns = {256};
  o.require(exp::cmd_sweep_beta_n(cfg) == 0, "sweep a");
  const auto a = exp::read_text(fs::path(cfg.out) / "sweep_beta_n.csv");
  cfg.out = (g_out / "infra" / "b").string();
  o.require(exp::cmd_sweep_beta_n(cfg) == 0, "sweep b");
  const auto b = exp::read_text(fs::path(cfg.out) / "sweep_beta_n.csv");
  o.require(drop_columns(a, {"wall_seconds"}) == drop_columns(b, {"wall_seconds"}), "identical sweep CSVs");
  o.detail << "idx_fixtures=" << ok << "/" << manifest.size() << " checkpoint_exact=" << exact;
}

}  // namespace

int main(int argc, char** argv) {
  g_out = fs::temp_directory_path() / "ibw-acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      g_out = argv[i];
    }
  }

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"random-label phase transition", random_labels},
      {"real-label fit", real_labels},
      {"memorisation cost of corrupted labels", corruption},
      {"duality identity and one-layer tightness", duality},
      {"flat-minima chain", flat_minima},
      {"gradient correctness", gradients},
      {"MI estimator calibration", calibration},
      {"invariance trend", invariance},
      {"PAC-Bayes arithmetic", pac_bayes},
      {"infrastructure", infrastructure},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << " | "
              << o.detail.str() << std::endl;
  }
  return failed ? 1 : 0;
}
