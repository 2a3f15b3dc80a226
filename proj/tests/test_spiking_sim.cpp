#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spikeforge/convert.hpp"
#include "spikeforge/rng.hpp"
#include "spikeforge/sim.hpp"
#include "spikeforge/synthetic.hpp"
#include "spikeforge/train.hpp"

using namespace spikeforge;

namespace {

SimConfig quick_cfg(double duration_ms, std::uint64_t seed = 0)
{
	SimConfig cfg;
	cfg.duration_ms = duration_ms;
	cfg.seed = seed;
	return cfg;
}

/// One input pixel wired to one IF neuron with the given weight.
SpikingNetwork passthrough_net(double weight)
{
	SpikingNetwork snn;
	snn.input_shape = {1, 1, 1};
	ConnectionTable table;
	table.rows.push_back({0, 0, weight, 1.0});
	IfPopulation pop;
	pop.name = "out";
	pop.size = 1;
	pop.threshold = 1.0;
	pop.shape = {1};
	snn.populations.push_back(pop);
	snn.connections.push_back(LayerConnections::from_table(table, 1, 1));
	return snn;
}

}  // namespace

TEST_CASE("poisson_encode: zero pixels never spike, saturated pixels always do")
{
	SimConfig cfg = quick_cfg(200);
	Tensor img = Tensor::from({1, 1, 2}, {0.0, 1.0});
	std::mt19937_64 rng(3);
	SpikeRaster raster = poisson_encode(img, cfg, rng);
	REQUIRE(raster.layers.size() == 1);
	CHECK(raster.layers[0][0].empty());
	CHECK(raster.layers[0][1].size() == 200);  // probability clamps to 1 per step
	for (std::size_t t = 0; t < 200; t++) {
		CHECK(raster.layers[0][1][t] == t);
	}
}

TEST_CASE("poisson_encode: empirical rate concentrates around p")
{
	SimConfig cfg = quick_cfg(100000);
	for (double p : {0.1, 0.5, 0.9}) {
		Tensor img = Tensor::from({1, 1, 1}, {p});
		std::mt19937_64 rng(derive_seed(42, static_cast<std::uint64_t>(p * 10), 0));
		SpikeRaster raster = poisson_encode(img, cfg, rng);
		const double rate = static_cast<double>(raster.layers[0][0].size()) / 100000.0;
		const double bound = 4.0 * std::sqrt(p * (1.0 - p) / 100000.0);
		CHECK(std::abs(rate - p) <= bound);
	}
}

TEST_CASE("poisson_encode: deterministic given the seed")
{
	SimConfig cfg = quick_cfg(500);
	Tensor img = Tensor::from({1, 2, 2}, {0.2, 0.4, 0.6, 0.8});
	std::mt19937_64 a(7), b(7);
	SpikeRaster ra = poisson_encode(img, cfg, a);
	SpikeRaster rb = poisson_encode(img, cfg, b);
	REQUIRE(ra.layers[0] == rb.layers[0]);
}

TEST_CASE("if_step: constant 0.3 against threshold 1 gives exactly 6 spikes in 20 steps")
{
	IfState state(1, 1.0);
	std::vector<std::uint8_t> spikes;
	int count = 0;
	for (int t = 0; t < 20; t++) {
		if_step(state, {0.3}, spikes);
		count += spikes[0];
	}
	CHECK(count == 6);
}

TEST_CASE("if_step: zero input stays quiescent; threshold equality fires every step")
{
	IfState zero(3, 1.0);
	std::vector<std::uint8_t> spikes;
	for (int t = 0; t < 50; t++) {
		if_step(zero, {0.0, 0.0, 0.0}, spikes);
		CHECK(spikes == std::vector<std::uint8_t>{0, 0, 0});
	}
	for (double v : zero.v) {
		CHECK(v == 0.0);
	}

	IfState unit(1, 1.0);
	for (int t = 0; t < 50; t++) {
		if_step(unit, {1.0}, spikes);
		CHECK(spikes[0] == 1);
	}
}

TEST_CASE("if_step: membrane floors at zero after inhibitory input")
{
	IfState state(1, 1.0);
	std::vector<std::uint8_t> spikes;
	if_step(state, {-5.0}, spikes);
	CHECK(state.v[0] == 0.0);
	if_step(state, {0.5}, spikes);
	CHECK(state.v[0] == doctest::Approx(0.5));
	CHECK_THROWS_AS(if_step(state, {0.0, 0.0}, spikes), std::invalid_argument);
}

TEST_CASE("if_step: constant current spike counts stay in the analytic band")
{
	std::mt19937_64 rng(11);
	for (int trial = 0; trial < 50; trial++) {
		const double c = uniform_range(rng, 1e-3, 1.0);
		const std::size_t T = 50 + bounded(rng, 400);
		IfState state(1, 1.0);
		std::vector<std::uint8_t> spikes;
		std::size_t count = 0;
		for (std::size_t t = 0; t < T; t++) {
			if_step(state, {c}, spikes);
			count += spikes[0];
		}
		const double expected = std::floor(c * static_cast<double>(T));
		CHECK(static_cast<double>(count) >= expected - 1e-9);
		CHECK(static_cast<double>(count) <= expected + 1.0 + 1e-9);
	}
}

TEST_CASE("simulate_sample: all-zero image is silent and ties break to class 0")
{
	SpikingNetwork snn = passthrough_net(1.0);
	SimConfig cfg = quick_cfg(100);
	Tensor img({1, 1, 1});
	auto res = simulate_sample(snn, img, cfg, 1, true);
	CHECK(res.predicted_class == 0);
	CHECK(res.output_counts[0] == 0);
	for (const auto &train : res.raster.layers[1]) {
		CHECK(train.empty());
	}
}

TEST_CASE("simulate_sample: saturated pixel through weight 1 fires every step")
{
	SpikingNetwork snn = passthrough_net(1.0);
	SimConfig cfg = quick_cfg(200);
	Tensor img = Tensor::from({1, 1, 1}, {1.0});
	auto res = simulate_sample(snn, img, cfg, 5);
	CHECK(res.output_counts[0] == 200);
	CHECK(res.rates[0][0] == 1.0);
}

TEST_CASE("simulate_sample: deterministic per stream seed, raster spike times strictly increase")
{
	SpikingNetwork snn = passthrough_net(0.7);
	SimConfig cfg = quick_cfg(400);
	Tensor img = Tensor::from({1, 1, 1}, {0.6});
	auto a = simulate_sample(snn, img, cfg, 77, true);
	auto b = simulate_sample(snn, img, cfg, 77, true);
	REQUIRE(a.output_counts == b.output_counts);
	REQUIRE(a.raster.layers == b.raster.layers);
	for (const auto &layer : a.raster.layers) {
		for (const auto &train : layer) {
			for (std::size_t i = 1; i < train.size(); i++) {
				REQUIRE(train[i] > train[i - 1]);
				REQUIRE(train[i] < a.raster.total_steps);
			}
		}
	}
}

namespace {

struct ToyFixture {
	TrainedNetwork ann;
	SpikingNetwork snn;
	LabeledSet test_set;

	ToyFixture()
	{
		GestureDataset ds = toy_two_class_dataset(120, 31);
		SplitDataset split = stratified_split(ds, 0.25, 13);
		NetworkSpec spec;
		spec.input_shape = {1, 8, 8};
		spec.layers = {LayerSpec::conv2d(4, 3, 3, 1, 1), LayerSpec::avg_pool(2, 2),
		               LayerSpec::flatten(), LayerSpec::dense(8), LayerSpec::dense(2)};
		TrainOptions opt;
		opt.lr = 0.1;
		opt.epochs = 25;
		opt.batch_size = 8;
		opt.seed = 2;
		ann = train(spec, to_labeled(split.train), opt);
		std::vector<Tensor> calib(split.train.images.begin(),
		                          split.train.images.begin() + 32);
		snn = convert_network(ann, compute_activation_scales(ann, calib, 99.9));
		test_set = to_labeled(split.test);
	}
};

}  // namespace

TEST_CASE("run_evaluation: num_runs entries, determinism, batch and thread independence")
{
	ToyFixture fx;
	SimConfig cfg = quick_cfg(100, 9);
	cfg.num_runs = 20;
	EvaluationReport report = run_evaluation(fx.snn, fx.test_set, cfg, &fx.ann);
	REQUIRE(report.run_accuracies.size() == 20);
	REQUIRE(report.ann_accuracy.has_value());

	double mean = 0;
	for (double a : report.run_accuracies) {
		mean += a;
	}
	mean /= 20.0;
	CHECK(report.mean_accuracy == doctest::Approx(mean).epsilon(1e-12));

	EvaluationReport again = run_evaluation(fx.snn, fx.test_set, cfg, &fx.ann);
	REQUIRE(again.run_accuracies == report.run_accuracies);
	REQUIRE(again.mean_accuracy == report.mean_accuracy);
	REQUIRE(again.std_accuracy == report.std_accuracy);

	SimConfig serial = cfg;
	serial.batch_size = 1;
	serial.threads = 1;
	serial.num_runs = 3;
	SimConfig wide = cfg;
	wide.batch_size = 8;
	wide.threads = 4;
	wide.num_runs = 3;
	EvaluationReport r1 = run_evaluation(fx.snn, fx.test_set, serial);
	EvaluationReport r8 = run_evaluation(fx.snn, fx.test_set, wide);
	REQUIRE(r1.run_accuracies == r8.run_accuracies);
}

TEST_CASE("run_evaluation: evaluate_ann off leaves ann_accuracy unset")
{
	ToyFixture fx;
	SimConfig cfg = quick_cfg(50, 4);
	cfg.num_runs = 2;
	cfg.evaluate_ann = false;
	EvaluationReport report = run_evaluation(fx.snn, fx.test_set, cfg, &fx.ann);
	CHECK_FALSE(report.ann_accuracy.has_value());
	LabeledSet empty;
	CHECK_THROWS_AS(run_evaluation(fx.snn, empty, cfg), std::invalid_argument);
}

TEST_CASE("converted toy network agrees with the ANN on long-duration runs")
{
	ToyFixture fx;
	SimConfig cfg = quick_cfg(2000, 21);
	std::size_t agree = 0;
	for (std::size_t i = 0; i < fx.test_set.size(); i++) {
		const auto res =
		    simulate_sample(fx.snn, fx.test_set.images[i], cfg, derive_seed(21, 0, i));
		if (res.predicted_class == predict_class(fx.ann, fx.test_set.images[i])) {
			agree++;
		}
	}
	CHECK(static_cast<double>(agree) >= 0.9 * static_cast<double>(fx.test_set.size()));
}

TEST_CASE("SimConfig validation catches the documented misuses")
{
	SimConfig cfg;
	cfg.duration_ms = 201.0;
	cfg.dt_ms = 2.0;
	CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
	cfg = SimConfig{};
	cfg.batch_size = 0;
	CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
	cfg = SimConfig{};
	cfg.num_runs = 0;
	CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
	cfg = SimConfig{};
	CHECK(cfg.total_steps() == 200);
}
