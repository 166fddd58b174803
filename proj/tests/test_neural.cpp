// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aod/ml_estimators.hpp"
#include "aod/neural/model_io.hpp"
#include "aod/neural/training.hpp"

#include <cstdio>
#include <filesystem>

using namespace aod;

namespace {

ArrayGeometry geom(int m) {
  ArrayGeometry g;
  g.num_antennas = m;
  return g;
}

PilotSchedule random_schedule(int m, int l, int q, double power, Rng& rng) {
  Eigen::MatrixXd phases(l, m);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < m; ++j) phases(i, j) = rng.uniform(-1.0, 1.0);
  PilotSchedule s;
  s.beamformers = make_beamformers(power, m, phases);
  s.block_symbols.resize(q);
  for (int i = 0; i < q; ++i) s.block_symbols(i) = rng.cnormal();
  return s;
}

// Tiny network configuration used by the gradient gate.
NetConfig tiny_net_config(int m, int cols) {
  NetConfig cfg;
  cfg.input_rows = m + 1;
  cfg.input_cols = cols;
  cfg.hidden_width = 4;
  cfg.scale_sigma = noise_variance_watts(-165.0, 1.2e5);
  cfg.scale_xi = channel_gain(35.0, 1.0, 3.0, 28e9);
  return cfg;
}

DatasetSpec tiny_spec(PilotMode mode) {
  DatasetSpec spec;
  spec.num_thetas = 1;
  spec.num_ranges = 2;
  spec.num_beamformer_sets = 1;
  spec.num_symbol_sets = 2;
  spec.num_noise = 1;
  spec.num_slots = 2;
  spec.num_blocks = 2;
  spec.mode = mode;
  spec.test_fraction = 0.0;
  return spec;
}

}  // namespace

TEST_CASE("pilot feature construction") {
  Rng rng(1);
  const PilotSchedule schedule = random_schedule(4, 3, 3, 1.0, rng);

  SUBCASE("SML columns repeat with period L") {
    const PilotFeature f = build_pilot_feature(schedule, PilotMode::kSml);
    CHECK(f.x.cols() == 9);
    for (int q = 1; q < 3; ++q)
      for (int l = 0; l < 3; ++l)
        CHECK((f.x.col(q * 3 + l) - f.x.col(l)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("DML with unit symbols equals the SML feature") {
    PilotSchedule unit = schedule;
    unit.block_symbols.setOnes();
    const PilotFeature dml = build_pilot_feature(unit, PilotMode::kDml);
    const PilotFeature sml = build_pilot_feature(unit, PilotMode::kSml);
    CHECK((dml.x - sml.x).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("DML column law: column qL+l is c_q x_l") {
    const PilotFeature f = build_pilot_feature(schedule, PilotMode::kDml);
    for (int q = 0; q < 3; ++q)
      for (int l = 0; l < 3; ++l) {
        const CVec expected = schedule.block_symbols(q) * schedule.beamformers[l];
        CHECK((f.x.col(q * 3 + l) - expected).cwiseAbs().maxCoeff() < 1e-15);
      }
  }
}

TEST_CASE("input tensor layout and round trip") {
  Rng rng(2);
  const PilotSchedule schedule = random_schedule(4, 3, 2, 1.0, rng);
  const PilotFeature feature = build_pilot_feature(schedule, PilotMode::kDml);
  ObservationBatch batch;
  batch.y.resize(3, 2);
  for (int q = 0; q < 2; ++q)
    for (int l = 0; l < 3; ++l) batch.y(l, q) = rng.cnormal();

  const FeatureTensor tensor = build_input_tensor(feature, batch);
  CHECK(tensor.num_rows == 5);
  CHECK(tensor.num_cols == 6);

  SUBCASE("row 0 is vec(Y) slot-fastest") {
    for (int q = 0; q < 2; ++q)
      for (int l = 0; l < 3; ++l) {
        CHECK(tensor.at(0, 0, q * 3 + l) == batch.y(l, q).real());
        CHECK(tensor.at(1, 0, q * 3 + l) == batch.y(l, q).imag());
      }
  }

  SUBCASE("round trip is lossless") {
    const auto [x, y] = split_input_tensor(tensor, 3);
    CHECK((x - feature.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((y - batch.y).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("all-real inputs zero the imaginary channel") {
    PilotSchedule real_sched = schedule;
    for (auto& bf : real_sched.beamformers) bf = bf.cwiseAbs().cast<Complex>();
    real_sched.block_symbols = real_sched.block_symbols.cwiseAbs().cast<Complex>();
    ObservationBatch real_batch;
    real_batch.y = batch.y.cwiseAbs().cast<Complex>();
    const FeatureTensor t =
        build_input_tensor(build_pilot_feature(real_sched, PilotMode::kDml), real_batch);
    for (int r = 0; r < t.num_rows; ++r)
      for (int k = 0; k < t.num_cols; ++k) CHECK(t.at(1, r, k) == 0.0);
  }

  SUBCASE("column mismatch is rejected") {
    ObservationBatch bad;
    bad.y.resize(3, 3);
    bad.y.setZero();
    CHECK_THROWS_AS(build_input_tensor(feature, bad), std::invalid_argument);
  }
}

TEST_CASE("network forward contract") {
  const NetConfig cfg = tiny_net_config(2, 4);
  const CompactNet net(cfg);
  Rng rng(3);
  std::vector<double> params = net.init_params(rng);
  NetWorkspace ws;

  SUBCASE("outputs are always in range, including extreme magnitudes") {
    Rng in_rng(4);
    for (double scale : {1e-6, 1.0, 1e6}) {
      std::vector<double> input(static_cast<std::size_t>(2 * cfg.input_rows * cfg.input_cols));
      for (auto& v : input) v = scale * in_rng.normal();
      const HeadValues h = net.forward(params, input, ws);
      CHECK(h.theta_rad > 0.0);
      CHECK(h.theta_rad < kPi / 2.0);
      CHECK(h.sigma2 > 0.0);
      CHECK(h.xi > 0.0);
      CHECK(std::isfinite(h.theta_rad + h.sigma2 + h.xi));
    }
  }

  SUBCASE("zero head gives theta = pi/4 and softplus(0) scales") {
    const auto& lay = net.layout();
    std::vector<double> zero_head = params;
    for (std::size_t i = lay.head_w; i < lay.total; ++i) zero_head[i] = 0.0;
    std::vector<double> input(static_cast<std::size_t>(2 * cfg.input_rows * cfg.input_cols), 0.3);
    const HeadValues h = net.forward(zero_head, input, ws);
    CHECK(h.theta_rad == doctest::Approx(kPi / 4.0).epsilon(1e-15));
    CHECK(h.sigma2 == doctest::Approx(std::log(2.0) * cfg.scale_sigma).epsilon(1e-12));
    CHECK(h.xi == doctest::Approx(std::log(2.0) * cfg.scale_xi).epsilon(1e-12));
  }

  SUBCASE("purity: identical inputs give identical outputs") {
    Rng in_rng(5);
    std::vector<double> input(static_cast<std::size_t>(2 * cfg.input_rows * cfg.input_cols));
    for (auto& v : input) v = in_rng.normal();
    NetWorkspace ws2;
    const HeadValues a = net.forward(params, input, ws);
    const HeadValues b = net.forward(params, input, ws2);
    CHECK(a.theta_rad == b.theta_rad);
    CHECK(a.sigma2 == b.sigma2);
    CHECK(a.xi == b.xi);
  }
}

TEST_CASE("dml loss examples") {
  const ArrayGeometry g = geom(8);
  Rng rng(6);
  const PilotSchedule schedule = random_schedule(8, 6, 4, 0.0316, rng);
  Scenario sc;
  sc.theta_rad = 0.7;
  sc.range_m = 30.0;
  sc.channel_gain_xi = channel_gain(30.0, 1.0, 3.0, g.carrier_freq_hz);
  sc.noise_var_w = 0.0;
  sc.tx_power_w = 0.0316;
  Rng sim(7);
  const ObservationBatch clean = simulate_observations(g, sc, schedule, sim);
  const PilotFeature feature = build_pilot_feature(schedule, PilotMode::kDml);

  SUBCASE("truth outputs on noiseless data give zero loss and zero gradients") {
    HeadValues truth{sc.theta_rad, 1.0, sc.channel_gain_xi.real()};
    HeadGrad grad;
    const double loss = dml_sample_loss(g, feature.x, clean.y, truth, &grad);
    CHECK(loss < 1e-18 * clean.y.squaredNorm());
    CHECK(std::abs(grad.d_theta) < 1e-12);
    CHECK(std::abs(grad.d_xi) < 1e-12);
    CHECK(grad.d_sigma2 == 0.0);
  }

  SUBCASE("xi = 0 returns the batch energy") {
    HeadValues zero_xi{0.9, 1.0, 0.0};
    CHECK(dml_sample_loss(g, feature.x, clean.y, zero_xi) ==
          doctest::Approx(clean.y.squaredNorm()).epsilon(1e-12));
  }

  SUBCASE("network loss can never beat the exact minimizer") {
    GridConfig grid;
    Rng noise_rng(8);
    Scenario noisy = sc;
    noisy.noise_var_w = noise_variance_watts(-165.0, 1.2e5);
    Rng heads_rng(9);
    for (int i = 0; i < 20; ++i) {
      Rng sim_i(100 + i);
      const ObservationBatch batch = simulate_observations(g, noisy, schedule, sim_i);
      const DmlFit fit = dml_estimate(g, schedule, batch, grid);
      HeadValues h{heads_rng.uniform(0.05, kPi / 2 - 0.05), 1.0,
                   heads_rng.uniform(0.0, 2.0) * std::abs(noisy.channel_gain_xi)};
      CHECK(dml_sample_loss(g, feature.x, batch.y, h) >= fit.residual - 1e-18);
    }
  }
}

TEST_CASE("sml loss examples") {
  const ArrayGeometry g = geom(8);
  Rng rng(10);
  const PilotSchedule schedule = random_schedule(8, 6, 4, 0.0316, rng);
  const CMat beams = schedule.beamformer_matrix();
  const double xi_true = channel_gain(30.0, 1.0, 3.0, g.carrier_freq_hz);
  const double sigma2 = noise_variance_watts(-165.0, 1.2e5);

  SUBCASE("truth outputs with the analytic covariance give lndet + L") {
    const ModelCovariance mc =
        model_covariance(g, 0.7, xi_true * xi_true, sigma2, schedule.beamformers);
    HeadValues truth{0.7, sigma2, xi_true};
    const double loss = sml_sample_loss(g, beams, mc.c_y, truth);
    Eigen::LLT<CMat> llt(mc.c_y);
    double log_det = 0.0;
    for (int i = 0; i < 6; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i).real());
    CHECK(loss == doctest::Approx(log_det + 6.0).epsilon(1e-12));
  }

  SUBCASE("network loss can never beat the exact SML minimizer") {
    GridConfig grid;
    Scenario sc;
    sc.theta_rad = 0.7;
    sc.range_m = 30.0;
    sc.channel_gain_xi = xi_true;
    sc.noise_var_w = sigma2;
    sc.tx_power_w = 0.0316;
    Rng heads_rng(11);
    for (int i = 0; i < 10; ++i) {
      Rng sim_i(200 + i);
      const ObservationBatch batch = simulate_observations(g, sc, schedule, sim_i);
      const SmlFit fit = sml_estimate(g, schedule.beamformers, batch, grid, 4);
      const CMat c_hat = sample_covariance(batch).c_hat;
      HeadValues h{heads_rng.uniform(0.05, kPi / 2 - 0.05),
                   sigma2 * heads_rng.uniform(0.5, 2.0), xi_true * heads_rng.uniform(0.0, 2.0)};
      CHECK(sml_sample_loss(g, beams, c_hat, h) >= fit.nll - 1e-9 * std::abs(fit.nll));
    }
  }

  SUBCASE("invalid covariance parameters clamp instead of crashing") {
    const CMat c_hat = CMat::Identity(6, 6);
    HeadValues bad{0.7, 0.0, 1.0};  // sigma2 = 0 cannot be factorized
    HeadGrad grad{1.0, 1.0, 1.0};
    CHECK(sml_sample_loss(g, beams, c_hat, bad, &grad) == kSmlLossClamp);
    CHECK(grad.d_theta == 0.0);
    CHECK(grad.d_sigma2 == 0.0);
    CHECK(grad.d_xi == 0.0);
  }

  SUBCASE("loss reads only the beamformers, never the symbols") {
    Rng sym_rng(12);
    PilotSchedule other = schedule;
    for (int q = 0; q < 4; ++q) other.block_symbols(q) = sym_rng.cnormal();
    const PilotFeature f1 = build_pilot_feature(schedule, PilotMode::kSml);
    const PilotFeature f2 = build_pilot_feature(other, PilotMode::kSml);
    CHECK((f1.x - f2.x).cwiseAbs().maxCoeff() == 0.0);  // identical by construction
    // Same injected Y -> identical loss through the feature-driven path.
    ObservationBatch y_fixed;
    y_fixed.y.resize(6, 4);
    Rng y_rng(13);
    for (int q = 0; q < 4; ++q)
      for (int l = 0; l < 6; ++l) y_fixed.y(l, q) = y_rng.cnormal();
    const CMat c_hat = sample_covariance(y_fixed).c_hat;
    HeadValues h{0.5, sigma2, xi_true};
    const double l1 = sml_sample_loss(g, beamformers_from_feature(f1.x, 6), c_hat, h);
    const double l2 = sml_sample_loss(g, beamformers_from_feature(f2.x, 6), c_hat, h);
    CHECK(l1 == l2);
  }
}

TEST_CASE("gradient gate: backward matches finite differences on the tiny net") {
  const ArrayGeometry g = geom(2);

  for (PilotMode mode : {PilotMode::kDml, PilotMode::kSml}) {
    CAPTURE(mode == PilotMode::kDml ? "dml" : "sml");
    DatasetSpec spec = tiny_spec(mode);
    Rng ds_rng(14);
    const Dataset dataset = generate_dataset(spec, g, ds_rng);
    REQUIRE(dataset.samples.size() == 4);

    const NetConfig cfg = tiny_net_config(2, 4);
    const CompactNet net(cfg);
    Rng init(15);
    std::vector<double> params = net.init_params(init);

    const InputScaling scaling = compute_input_scaling(dataset);
    const TrainContext ctx = TrainContext::build(dataset, mode, scaling);
    const std::vector<int> batch = {0, 1, 2, 3};

    const BatchGradient bg =
        batch_loss_and_grad(net, params, dataset, ctx, batch, 1, Execution::kSerial);

    double max_grad = 0.0;
    for (double v : bg.grad) max_grad = std::max(max_grad, std::abs(v));
    REQUIRE(max_grad > 0.0);

    const double h = 1e-4;
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = ctx.loss_scale * batch_loss(net, params, dataset, ctx, batch);
      params[i] = saved - h;
      const double down = ctx.loss_scale * batch_loss(net, params, dataset, ctx, batch);
      params[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(bg.grad[i]), 1e-6 * max_grad});
      worst = std::max(worst, std::abs(fd - bg.grad[i]) / denom);
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("batch gradient structure") {
  const ArrayGeometry g = geom(2);
  DatasetSpec spec = tiny_spec(PilotMode::kDml);
  Rng ds_rng(16);
  const Dataset dataset = generate_dataset(spec, g, ds_rng);
  const NetConfig cfg = tiny_net_config(2, 4);
  const CompactNet net(cfg);
  Rng init(17);
  const std::vector<double> params = net.init_params(init);
  const InputScaling scaling = compute_input_scaling(dataset);
  const TrainContext ctx = TrainContext::build(dataset, PilotMode::kDml, scaling);

  SUBCASE("duplicated-sample batch equals the single-sample gradient") {
    const std::vector<int> one = {1};
    const std::vector<int> two = {1, 1};
    const BatchGradient a = batch_loss_and_grad(net, params, dataset, ctx, one, 1,
                                                Execution::kSerial);
    const BatchGradient b = batch_loss_and_grad(net, params, dataset, ctx, two, 2,
                                                Execution::kSerial);
    CHECK(a.mean_loss == b.mean_loss);
    CHECK(a.grad == b.grad);
  }

  SUBCASE("serial and parallel shard reductions agree bitwise") {
    const std::vector<int> batch = {0, 1, 2, 3};
    const BatchGradient a =
        batch_loss_and_grad(net, params, dataset, ctx, batch, 4, Execution::kSerial);
    const BatchGradient b =
        batch_loss_and_grad(net, params, dataset, ctx, batch, 4, Execution::kParallel);
    CHECK(a.mean_loss == b.mean_loss);
    CHECK(a.grad == b.grad);
  }
}

TEST_CASE("adamw optimizer") {
  SUBCASE("zero gradient applies pure decoupled decay") {
    AdamWConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.weight_decay = 0.1;
    AdamW opt(3, cfg);
    std::vector<double> params = {1.0, -2.0, 0.5};
    std::vector<double> grad = {0.0, 0.0, 0.0};
    opt.step(params, grad);
    CHECK(params[0] == 1.0 * (1.0 - 0.01 * 0.1));
    CHECK(params[1] == -2.0 * (1.0 - 0.01 * 0.1));
    CHECK(params[2] == 0.5 * (1.0 - 0.01 * 0.1));
  }

  SUBCASE("first step with a constant gradient moves by about the learning rate") {
    AdamWConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.weight_decay = 0.0;
    cfg.grad_clip_norm = 0.0;
    AdamW opt(4, cfg);
    std::vector<double> params = {0.0, 0.0, 0.0, 0.0};
    std::vector<double> grad = {0.5, -3.0, 1e-2, 7.0};
    opt.step(params, grad);
    for (double w : params) {
      CHECK(std::abs(w) >= 0.99 * cfg.learning_rate);
      CHECK(std::abs(w) <= cfg.learning_rate);
    }
  }

  SUBCASE("two successive steps are deterministic") {
    AdamWConfig cfg;
    AdamW o1(2, cfg), o2(2, cfg);
    std::vector<double> p1 = {0.3, -0.7}, p2 = {0.3, -0.7};
    std::vector<double> g1 = {0.1, 0.2}, g2 = {0.1, 0.2};
    o1.step(p1, g1);
    o2.step(p2, g2);
    std::vector<double> h1 = {-0.05, 0.4}, h2 = {-0.05, 0.4};
    o1.step(p1, h1);
    o2.step(p2, h2);
    CHECK(p1 == p2);
  }

  SUBCASE("global norm clipping caps the applied gradient") {
    AdamWConfig cfg;
    cfg.grad_clip_norm = 1.0;
    AdamW opt(2, cfg);
    std::vector<double> params = {0.0, 0.0};
    std::vector<double> grad = {30.0, 40.0};  // norm 50
    opt.step(params, grad);
    CHECK(std::sqrt(grad[0] * grad[0] + grad[1] * grad[1]) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("dataset generation") {
  const ArrayGeometry g = geom(2);

  SUBCASE("enumeration size is the product of the counts") {
    DatasetSpec spec = tiny_spec(PilotMode::kDml);
    spec.num_thetas = 2;
    spec.num_ranges = 2;
    spec.num_beamformer_sets = 1;
    spec.num_symbol_sets = 1;
    spec.num_noise = 3;
    Rng rng(18);
    const Dataset ds = generate_dataset(spec, g, rng);
    CHECK(ds.samples.size() == 12);
    CHECK(spec.total_samples() == 12);
  }

  SUBCASE("paper-scale spec counts 1.1 million combinations") {
    DatasetSpec spec;
    spec.num_thetas = 200;
    spec.num_ranges = 220;
    spec.num_beamformer_sets = 5;
    spec.num_symbol_sets = 5;
    spec.num_noise = 1;
    CHECK(spec.total_samples() == 1100000);
  }

  SUBCASE("same seed reproduces the dataset bitwise") {
    DatasetSpec spec = tiny_spec(PilotMode::kSml);
    Rng r1(19), r2(19);
    const Dataset a = generate_dataset(spec, g, r1);
    const Dataset b = generate_dataset(spec, g, r2);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      CHECK(a.samples[i].data.y == b.samples[i].data.y);
      CHECK(a.samples[i].data.pilot_feature == b.samples[i].data.pilot_feature);
      CHECK(a.samples[i].theta_true_rad == b.samples[i].theta_true_rad);
    }
    CHECK(a.train_indices == b.train_indices);
    CHECK(a.test_indices == b.test_indices);
  }

  SUBCASE("cache round trip") {
    DatasetSpec spec = tiny_spec(PilotMode::kDml);
    Rng rng(20);
    const Dataset ds = generate_dataset(spec, g, rng);
    const std::string path = (std::filesystem::temp_directory_path() / "aod_ds.bin").string();
    save_dataset_cache(ds, path);
    const Dataset loaded = load_dataset_cache(path);
    REQUIRE(loaded.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      CHECK(loaded.samples[i].data.y == ds.samples[i].data.y);
      CHECK(loaded.samples[i].theta_true_rad == ds.samples[i].theta_true_rad);
    }
    CHECK(loaded.train_indices == ds.train_indices);
    std::filesystem::remove(path);
  }
}

TEST_CASE("training loop contracts") {
  const ArrayGeometry g = geom(2);
  DatasetSpec spec = tiny_spec(PilotMode::kDml);
  Rng ds_rng(21);
  const Dataset dataset = generate_dataset(spec, g, ds_rng);
  const NetConfig cfg = tiny_net_config(2, 4);
  const CompactNet net(cfg);

  SUBCASE("zero learning rate leaves parameters at the initialization") {
    TrainConfig tc;
    tc.mode = PilotMode::kDml;
    tc.learning_rate = 0.0;
    tc.weight_decay = 0.1;
    tc.batch_size = 4;
    tc.epochs = 1;
    tc.seed = 5;
    const TrainResult result = train(net, dataset, tc);
    Rng init = Rng(tc.seed).substream(101);
    const std::vector<double> expected = net.init_params(init);
    CHECK(result.params == expected);  // decay is eta * lambda * w = 0 here
  }

  SUBCASE("seed determinism: identical configs give identical parameters") {
    TrainConfig tc;
    tc.mode = PilotMode::kDml;
    tc.batch_size = 2;
    tc.epochs = 3;
    tc.seed = 77;
    const TrainResult a = train(net, dataset, tc);
    const TrainResult b = train(net, dataset, tc);
    CHECK(a.params == b.params);
    CHECK(a.epoch_mean_loss == b.epoch_mean_loss);
  }

  SUBCASE("mode mismatch is rejected") {
    TrainConfig tc;
    tc.mode = PilotMode::kSml;
    CHECK_THROWS_AS(train(net, dataset, tc), std::invalid_argument);
  }
}

TEST_CASE("tiny training task reaches the oracle floor") {
  // Fixed angle, 512 samples, 200 epochs; strong SNR so the exact solver's
  // per-sample minima form a tight floor.
  const ArrayGeometry g = geom(4);
  DatasetSpec spec;
  spec.num_thetas = 1;
  spec.num_ranges = 8;
  spec.num_beamformer_sets = 4;
  spec.num_symbol_sets = 4;
  spec.num_noise = 4;
  spec.num_slots = 3;
  spec.num_blocks = 3;
  spec.mode = PilotMode::kDml;
  spec.tx_power_w = dbm_to_watts(30.0);
  spec.test_fraction = 0.25;
  // A fixed angle inside the squash head's initial basin: this gate checks
  // the training machinery end to end, not global search over sidelobes.
  spec.theta_lo_rad = 0.70;
  spec.theta_hi_rad = 0.90;
  Rng ds_rng(22);
  const Dataset dataset = generate_dataset(spec, g, ds_rng);
  REQUIRE(dataset.samples.size() == 512);

  NetConfig cfg = tiny_net_config(4, 9);
  cfg.hidden_width = 32;
  const CompactNet net(cfg);

  TrainConfig tc;
  tc.mode = PilotMode::kDml;
  tc.batch_size = 16;
  tc.learning_rate = 3e-3;
  tc.lr_decay = 0.99;
  tc.weight_decay = 0.0;  // memorization task: decay only fights the floor
  tc.epochs = 200;
  tc.seed = 9;
  const TrainResult result = train(net, dataset, tc);
  const TrainContext ctx = TrainContext::build(dataset, PilotMode::kDml, result.scaling);

  // Oracle floor: mean of per-sample exact-DML minima over the training set.
  GridConfig grid;
  double oracle = 0.0;
  for (int idx : dataset.train_indices) {
    const DataSample& s = dataset.sample(idx);
    PilotSchedule sched;
    sched.beamformers.resize(3);
    // SML/DML features both start with the beamformer columns only when the
    // symbols are unknown; for DML features rebuild the schedule explicitly.
    // The dataset used DML mode, so columns are c_q * x_l; recover both.
    // Simplest exact route: run the estimator on (Y, schedule) rebuilt from
    // the stored feature via the first block's columns and symbol ratios.
    // c_0 is unidentifiable from the feature alone (absorbed by xi), so fix
    // c_0 = feature column scaling by declaring c_0 = 1.
    CVec c(3);
    c(0) = Complex(1.0, 0.0);
    for (int l = 0; l < 3; ++l) sched.beamformers[l] = s.pilot_feature.col(l);
    for (int q = 1; q < 3; ++q) {
      // ratio of block q to block 0 in any nonzero coordinate
      const CVec col0 = s.pilot_feature.col(0);
      const CVec colq = s.pilot_feature.col(q * 3);
      int pick = 0;
      for (int m = 0; m < 4; ++m)
        if (std::abs(col0(m)) > std::abs(col0(pick))) pick = m;
      c(q) = colq(pick) / col0(pick);
    }
    sched.block_symbols = c;
    ObservationBatch batch;
    batch.y = s.y;
    oracle += dml_estimate(g, sched, batch, grid).residual;
  }
  oracle /= static_cast<double>(dataset.train_indices.size());

  const double final_loss = result.epoch_mean_loss.back();
  MESSAGE("final loss ", final_loss, " vs oracle ", oracle);
  CHECK(final_loss <= 2.0 * oracle);

  // Stability contract: last epoch within 5% of the best epoch.
  double best = result.epoch_mean_loss.front();
  for (double v : result.epoch_mean_loss) best = std::min(best, v);
  CHECK(final_loss <= 1.05 * best);

  // Trained model beats the untrained initialization and lands under 2 deg.
  Rng init = Rng(tc.seed).substream(101);
  const std::vector<double> untrained = net.init_params(init);
  const double mae_untrained =
      evaluate_mae_degrees(net, untrained, dataset, ctx, dataset.test_indices);
  const double mae_trained =
      evaluate_mae_degrees(net, result.params, dataset, ctx, dataset.test_indices);
  MESSAGE("MAE untrained ", mae_untrained, " trained ", mae_trained);
  CHECK(mae_trained < mae_untrained);
  CHECK(mae_trained < 2.0);
}

TEST_CASE("evaluate_mae arithmetic") {
  const ArrayGeometry g = geom(2);
  DatasetSpec spec = tiny_spec(PilotMode::kDml);
  Rng ds_rng(23);
  Dataset dataset = generate_dataset(spec, g, ds_rng);
  // Rewrite labels to pi/8 and 3pi/8 and use the zero-head constant pi/4
  // predictor: MAE must be exactly 22.5 degrees.
  REQUIRE(dataset.samples.size() == 4);
  dataset.samples[0].theta_true_rad = kPi / 8.0;
  dataset.samples[1].theta_true_rad = 3.0 * kPi / 8.0;
  dataset.samples[2].theta_true_rad = kPi / 8.0;
  dataset.samples[3].theta_true_rad = 3.0 * kPi / 8.0;

  const NetConfig cfg = tiny_net_config(2, 4);
  const CompactNet net(cfg);
  Rng init(24);
  std::vector<double> params = net.init_params(init);
  for (std::size_t i = net.layout().head_w; i < net.layout().total; ++i) params[i] = 0.0;

  const InputScaling scaling = compute_input_scaling(dataset);
  const TrainContext ctx = TrainContext::build(dataset, PilotMode::kDml, scaling);
  const std::vector<int> all = {0, 1, 2, 3};
  CHECK(evaluate_mae_degrees(net, params, dataset, ctx, all) ==
        doctest::Approx(22.5).epsilon(1e-12));

  // Perfect predictor: label everything pi/4.
  for (auto& s : dataset.samples) s.theta_true_rad = kPi / 4.0;
  CHECK(evaluate_mae_degrees(net, params, dataset, ctx, all) ==
        doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(evaluate_mae_degrees(net, params, dataset, ctx, std::vector<int>{}),
                  std::invalid_argument);
}

TEST_CASE("model file round trip") {
  ModelFile model;
  model.mode = PilotMode::kSml;
  model.num_antennas = 2;
  model.num_slots = 2;
  model.num_blocks = 2;
  model.net = tiny_net_config(2, 4);
  model.scaling.scale_y = 1.5e6;
  model.scaling.scale_x = 12.5;
  model.train_config.learning_rate = 2e-4;
  model.train_config.epochs = 42;
  model.train_config.seed = 1234;
  const CompactNet net(model.net);
  Rng rng(25);
  model.params = net.init_params(rng);

  const std::string path = (std::filesystem::temp_directory_path() / "aod_model.bin").string();
  save_model(model, path);
  const ModelFile loaded = load_model(path);
  CHECK(loaded.mode == model.mode);
  CHECK(loaded.num_antennas == model.num_antennas);
  CHECK(loaded.net.hidden_width == model.net.hidden_width);
  CHECK(loaded.scaling.scale_y == model.scaling.scale_y);
  CHECK(loaded.scaling.scale_x == model.scaling.scale_x);
  CHECK(loaded.train_config.epochs == 42);
  CHECK(loaded.params == model.params);

  // Corrupt magic is rejected.
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOTAMODELFILE";
  }
  CHECK_THROWS(load_model(path));
  std::filesystem::remove(path);
}
