#include "spikeforge/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "spikeforge/connections_io.hpp"
#include "spikeforge/parallel.hpp"
#include "spikeforge/rng.hpp"

namespace spikeforge {

void SimConfig::validate() const
{
	if (duration_ms <= 0.0 || dt_ms <= 0.0 || input_rate_hz <= 0.0) {
		throw std::invalid_argument("SimConfig: duration, dt and input rate must be positive");
	}
	const double steps = duration_ms / dt_ms;
	if (std::abs(steps - std::round(steps)) > 1e-9) {
		throw std::invalid_argument("SimConfig: duration_ms must be divisible by dt_ms");
	}
	if (batch_size == 0) {
		throw std::invalid_argument("SimConfig: batch_size must be >= 1");
	}
	if (num_runs == 0) {
		throw std::invalid_argument("SimConfig: num_runs must be >= 1");
	}
}

std::size_t SimConfig::total_steps() const
{
	validate();
	return static_cast<std::size_t>(std::llround(duration_ms / dt_ms));
}

SpikeRaster poisson_encode(const Tensor &image, const SimConfig &cfg, std::mt19937_64 &rng)
{
	const std::size_t steps = cfg.total_steps();
	const std::size_t n = image.numel();
	std::vector<double> prob(n);
	for (std::size_t i = 0; i < n; i++) {
		prob[i] = std::min(1.0, image[i] * cfg.input_rate_hz * cfg.dt_ms / 1000.0);
	}

	SpikeRaster raster;
	raster.total_steps = steps;
	raster.layers.assign(1, std::vector<std::vector<std::uint32_t>>(n));
	for (std::uint32_t t = 0; t < steps; t++) {
		for (std::size_t i = 0; i < n; i++) {
			if (prob[i] > 0.0 && uniform_double(rng) < prob[i]) {
				raster.layers[0][i].push_back(t);
			}
		}
	}
	return raster;
}

void if_step(IfState &state, const std::vector<double> &input_current,
             std::vector<std::uint8_t> &spikes_out)
{
	if (input_current.size() != state.v.size()) {
		throw std::invalid_argument("if_step: state and input sizes differ");
	}
	spikes_out.assign(state.v.size(), 0);
	const double fire_level = state.threshold * (1.0 - 1e-9);
	for (std::size_t i = 0; i < state.v.size(); i++) {
		double v = state.v[i] + input_current[i];
		if (v >= fire_level) {
			spikes_out[i] = 1;
			v -= state.threshold;
		}
		if (v < 0.0) {
			v = 0.0;
		}
		state.v[i] = v;
	}
}

SampleResult simulate_sample(const SpikingNetwork &snn, const Tensor &image, const SimConfig &cfg,
                             std::uint64_t stream_seed, bool record_raster)
{
	snn.validate();
	if (image.numel() != snn.input_size()) {
		throw std::invalid_argument("simulate_sample: image size " +
		                            std::to_string(image.numel()) +
		                            " does not match network input " +
		                            std::to_string(snn.input_size()));
	}
	const std::size_t steps = cfg.total_steps();
	const std::size_t n_pop = snn.populations.size();

	std::vector<double> prob(image.numel());
	for (std::size_t i = 0; i < prob.size(); i++) {
		prob[i] = std::min(1.0, image[i] * cfg.input_rate_hz * cfg.dt_ms / 1000.0);
	}
	std::mt19937_64 rng(stream_seed);

	std::vector<IfState> states;
	states.reserve(n_pop);
	for (const auto &p : snn.populations) {
		states.emplace_back(p.size, p.threshold);
	}

	SampleResult result;
	result.raster.total_steps = steps;
	std::vector<std::vector<std::uint32_t>> counts(n_pop);
	for (std::size_t k = 0; k < n_pop; k++) {
		counts[k].assign(snn.populations[k].size, 0);
	}
	if (record_raster) {
		result.raster.layers.assign(n_pop + 1, {});
		result.raster.layers[0].assign(snn.input_size(), {});
		for (std::size_t k = 0; k < n_pop; k++) {
			result.raster.layers[k + 1].assign(snn.populations[k].size, {});
		}
	}

	std::vector<std::uint8_t> in_spikes(snn.input_size());
	std::vector<std::vector<std::uint8_t>> pop_spikes(n_pop);
	std::vector<double> current;
	// One feedforward sweep per tick; a presynaptic spike reaches its target
	// within the same step (the tabulated 1 ms delay is interchange data).
	for (std::uint32_t t = 0; t < steps; t++) {
		for (std::size_t i = 0; i < in_spikes.size(); i++) {
			in_spikes[i] = prob[i] > 0.0 && uniform_double(rng) < prob[i] ? 1 : 0;
			if (record_raster && in_spikes[i]) {
				result.raster.layers[0][i].push_back(t);
			}
		}
		const std::vector<std::uint8_t> *pre = &in_spikes;
		for (std::size_t k = 0; k < n_pop; k++) {
			const LayerConnections &conn = snn.connections[k];
			current.assign(conn.post_size, 0.0);
			for (std::size_t post = 0; post < conn.post_size; post++) {
				double acc = conn.bias_current[post] * cfg.dt_ms / snn.dt_ms;
				for (std::size_t r = conn.row_offsets[post]; r < conn.row_offsets[post + 1];
				     r++) {
					if ((*pre)[conn.pre_index[r]]) {
						acc += conn.weight[r];
					}
				}
				current[post] = acc;
			}
			if_step(states[k], current, pop_spikes[k]);
			for (std::size_t i = 0; i < pop_spikes[k].size(); i++) {
				if (pop_spikes[k][i]) {
					counts[k][i]++;
					if (record_raster) {
						result.raster.layers[k + 1][i].push_back(t);
					}
				}
			}
			pre = &pop_spikes[k];
		}
	}

	result.rates.reserve(n_pop);
	for (std::size_t k = 0; k < n_pop; k++) {
		Tensor r({snn.populations[k].size});
		for (std::size_t i = 0; i < counts[k].size(); i++) {
			r[i] = static_cast<double>(counts[k][i]) / static_cast<double>(steps);
		}
		result.rates.push_back(std::move(r));
	}
	result.output_counts = counts.back();
	std::size_t best = 0;
	for (std::size_t i = 1; i < result.output_counts.size(); i++) {
		if (result.output_counts[i] > result.output_counts[best]) {
			best = i;
		}
	}
	result.predicted_class = best;
	return result;
}

EvaluationReport run_evaluation(const SpikingNetwork &snn, const LabeledSet &test_set,
                                const SimConfig &cfg, const TrainedNetwork *ann)
{
	cfg.validate();
	if (test_set.size() == 0) {
		throw std::invalid_argument("run_evaluation: empty test set");
	}

	EvaluationReport report;
	report.config = cfg;
	report.sample_count = test_set.size();

	for (std::size_t run = 0; run < cfg.num_runs; run++) {
		std::vector<std::uint8_t> hit(test_set.size(), 0);
		// Per-sample seed streams keep results independent of batching and
		// thread count; batches bound how much work is in flight at once.
		for (std::size_t start = 0; start < test_set.size(); start += cfg.batch_size) {
			const std::size_t end = std::min(test_set.size(), start + cfg.batch_size);
			parallel_for(
			    end - start,
			    [&](std::size_t j) {
				    const std::size_t i = start + j;
				    const std::uint64_t stream = derive_seed(cfg.seed, run, i);
				    const auto res = simulate_sample(snn, test_set.images[i], cfg, stream);
				    hit[i] = res.predicted_class == test_set.labels[i] ? 1 : 0;
			    },
			    cfg.threads);
		}
		std::size_t correct = 0;
		for (auto h : hit) {
			correct += h;
		}
		report.run_accuracies.push_back(static_cast<double>(correct) /
		                                static_cast<double>(test_set.size()));
	}

	double sum = 0.0;
	for (double a : report.run_accuracies) {
		sum += a;
	}
	report.mean_accuracy = sum / static_cast<double>(report.run_accuracies.size());
	double var = 0.0;
	for (double a : report.run_accuracies) {
		var += (a - report.mean_accuracy) * (a - report.mean_accuracy);
	}
	report.std_accuracy = std::sqrt(var / static_cast<double>(report.run_accuracies.size()));

	if (cfg.evaluate_ann && ann) {
		report.ann_accuracy = accuracy(*ann, test_set);
	}
	return report;
}

namespace {

nlohmann::json config_json(const SimConfig &cfg)
{
	return {{"duration_ms", cfg.duration_ms}, {"dt_ms", cfg.dt_ms},
	        {"input_rate_hz", cfg.input_rate_hz}, {"batch_size", cfg.batch_size},
	        {"num_runs", cfg.num_runs}, {"evaluate_ann", cfg.evaluate_ann},
	        {"seed", cfg.seed}};
}

}  // namespace

void write_evaluation_json(const EvaluationReport &report, const std::filesystem::path &path)
{
	nlohmann::json j;
	j["run_accuracies"] = report.run_accuracies;
	j["mean_accuracy"] = report.mean_accuracy;
	j["std_accuracy"] = report.std_accuracy;
	if (report.ann_accuracy) {
		j["ann_accuracy"] = *report.ann_accuracy;
	}
	j["sample_count"] = report.sample_count;
	j["config"] = config_json(report.config);
	std::ofstream out(path, std::ios::trunc);
	if (!out) {
		throw std::runtime_error("write_evaluation_json: cannot write " + path.string());
	}
	out << j.dump(2) << "\n";
}

EvaluationReport read_evaluation_json(const std::filesystem::path &path)
{
	std::ifstream in(path);
	if (!in) {
		throw std::runtime_error("read_evaluation_json: cannot open " + path.string());
	}
	nlohmann::json j;
	try {
		in >> j;
	}
	catch (const nlohmann::json::exception &e) {
		throw std::runtime_error("read_evaluation_json: " + path.string() + ": " + e.what());
	}
	EvaluationReport report;
	report.run_accuracies = j.at("run_accuracies").get<std::vector<double>>();
	report.mean_accuracy = j.at("mean_accuracy").get<double>();
	report.std_accuracy = j.at("std_accuracy").get<double>();
	report.sample_count = j.value("sample_count", std::size_t{0});
	if (j.contains("ann_accuracy")) {
		report.ann_accuracy = j.at("ann_accuracy").get<double>();
	}
	if (j.contains("config")) {
		const auto &c = j.at("config");
		report.config.duration_ms = c.value("duration_ms", 200.0);
		report.config.dt_ms = c.value("dt_ms", 1.0);
		report.config.input_rate_hz = c.value("input_rate_hz", 1000.0);
		report.config.batch_size = c.value("batch_size", std::size_t{8});
		report.config.num_runs = c.value("num_runs", std::size_t{20});
		report.config.evaluate_ann = c.value("evaluate_ann", true);
		report.config.seed = c.value("seed", std::uint64_t{0});
	}
	return report;
}

void write_evaluation_csv(const EvaluationReport &report, const std::filesystem::path &path)
{
	std::ofstream out(path, std::ios::trunc);
	if (!out) {
		throw std::runtime_error("write_evaluation_csv: cannot write " + path.string());
	}
	out << "run,snn_acc,ann_acc\n";
	for (std::size_t r = 0; r < report.run_accuracies.size(); r++) {
		out << r << "," << format_double(report.run_accuracies[r]) << ",";
		if (report.ann_accuracy) {
			out << format_double(*report.ann_accuracy);
		}
		out << "\n";
	}
}

}  // namespace spikeforge
