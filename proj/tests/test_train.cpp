#include <doctest.h>

#include "ibw/data.hpp"
#include "ibw/errors.hpp"
#include "ibw/vnn.hpp"

using namespace ibw;
using namespace ibw::vnn;

namespace {

DatasetSplit toy_separable() {
  DatasetSplit d;
  d.features = Tensor::matrix({{1, 1}, {2, 1.5}, {-1, -1}, {-1.5, -2}});
  d.labels = {0, 0, 1, 1};
  d.num_classes = 2;
  return d;
}

TrainConfig toy_config() {
  TrainConfig c;
  c.beta = 0.0;
  c.epochs = 200;
  c.batch_size = 4;
  c.lr.value = 0.05;
  c.lr.decay_epochs = {};
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("epochs = 0 leaves the net unchanged") {
  Rng rng(1);
  const auto net = init_network(NetworkSpec::mlp({2, 2}), rng);
  auto cfg = toy_config();
  cfg.epochs = 0;
  const auto res = train(net, toy_separable(), cfg);
  CHECK(res.history.epochs.empty());
  CHECK(res.net.dense_layers()[0]->w_mean == net.dense_layers()[0]->w_mean);
}

TEST_CASE("separable toy set reaches train accuracy 1") {
  Rng rng(2);
  const auto net = init_network(NetworkSpec::mlp({2, 8, 2}), rng);
  const auto res = train(net, toy_separable(), toy_config());
  REQUIRE(res.history.epochs.size() == 200);
  CHECK(res.history.epochs.back().train_acc == 1.0);
  CHECK(evaluate(res.net, toy_separable()).accuracy == 1.0);
}

TEST_CASE("training is bit-for-bit deterministic") {
  Rng rng(3);
  const auto net = init_network(NetworkSpec::mlp({16, 8, 3}), rng);
  Rng drng(4);
  const auto data = data::synthetic_gaussian_dataset(16, 200, 3, 3.0, drng);
  auto cfg = toy_config();
  cfg.beta = 0.5;
  cfg.epochs = 5;
  cfg.batch_size = 32;
  const auto a = train(net, data, cfg);
  const auto b = train(net, data, cfg);
  REQUIRE(a.history.epochs.size() == b.history.epochs.size());
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
    CHECK(a.history.epochs[e].ce_nats_per_sample == b.history.epochs[e].ce_nats_per_sample);
    CHECK(a.history.epochs[e].info_nats == b.history.epochs[e].info_nats);
  }
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(a.net.dense_layers()[l]->w_mean == b.net.dense_layers()[l]->w_mean);
    CHECK(a.net.dense_layers()[l]->log_alpha == b.net.dense_layers()[l]->log_alpha);
  }
}

TEST_CASE("empty dataset is an input error") {
  Rng rng(5);
  const auto net = init_network(NetworkSpec::mlp({2, 2}), rng);
  DatasetSplit empty;
  empty.features = Tensor({0, 2});
  empty.num_classes = 2;
  CHECK_THROWS_AS(train(net, empty, toy_config()), InputError);
  CHECK_THROWS_AS(evaluate(net, empty), InputError);
}

TEST_CASE("config validation") {
  auto cfg = toy_config();
  cfg.beta = -1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = toy_config();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = toy_config();
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("lr schedule decays") {
  LrSchedule s;
  CHECK(s.at_epoch(0) == 0.02);
  CHECK(s.at_epoch(39) == 0.02);
  CHECK(s.at_epoch(40) == doctest::Approx(0.002).epsilon(1e-15));
}

TEST_CASE("untrained net on balanced random labels is at chance") {
  Rng rng(6);
  const auto net = init_network(NetworkSpec::mlp({20, 16, 10}), rng);
  Rng drng(7);
  auto data = data::synthetic_gaussian_dataset(20, 1000, 10, 0.0, drng);
  const auto r = evaluate(net, data);
  CHECK(r.accuracy >= 0.05);
  CHECK(r.accuracy <= 0.15);
  CHECK(r.accuracy <= 1.0);
}

TEST_CASE("stochastic-avg(1) with tiny noise equals deterministic accuracy") {
  Rng rng(8);
  const auto net = init_network(NetworkSpec::mlp({16, 16, 4}, Activation::ReLU, {}, -12.0), rng);
  Rng drng(9);
  const auto data = data::synthetic_gaussian_dataset(16, 300, 4, 4.0, drng);
  Rng erng(10);
  const auto s = evaluate_stochastic(net, data, 1, erng);
  const auto d = evaluate(net, data);
  CHECK(s.accuracy == doctest::Approx(d.accuracy).epsilon(0.01));
  CHECK(s.accuracy >= 0.0);
  CHECK(s.accuracy <= 1.0);
}

TEST_CASE("margin 0 synthetic data cannot be learned beyond chance") {
  Rng drng(11);
  const auto train_set = data::synthetic_gaussian_dataset(8, 2000, 4, 0.0, drng);
  const auto test_set = data::synthetic_gaussian_dataset(8, 2000, 4, 0.0, drng);
  Rng rng(12);
  auto net = init_network(NetworkSpec::mlp({8, 4}), rng);
  auto cfg = toy_config();
  cfg.epochs = 10;
  cfg.batch_size = 64;
  const auto res = train(net, train_set, cfg);
  CHECK(evaluate(res.net, test_set).accuracy <= 0.25 + 0.05);
}

TEST_CASE("margin 10 synthetic data is nearly separable by a linear model") {
  Rng drng(13);
  const auto data = data::synthetic_gaussian_dataset(16, 1000, 4, 10.0, drng);
  Rng rng(14);
  auto net = init_network(NetworkSpec::mlp({16, 4}), rng);
  auto cfg = toy_config();
  cfg.epochs = 20;
  cfg.batch_size = 50;
  const auto res = train(net, data, cfg);
  CHECK(evaluate(res.net, data).accuracy >= 0.99);
}
