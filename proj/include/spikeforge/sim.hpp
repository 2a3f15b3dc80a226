#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "spikeforge/convert.hpp"
#include "spikeforge/tensor.hpp"
#include "spikeforge/train.hpp"

namespace spikeforge {

/// Run-time constants of the simulation stage.
struct SimConfig {
	double duration_ms = 200.0;
	double dt_ms = 1.0;
	double input_rate_hz = 1000.0;
	std::size_t batch_size = 8;
	std::size_t num_runs = 20;
	bool evaluate_ann = true;
	std::uint64_t seed = 0;
	std::size_t threads = 0;  // 0 = hardware concurrency

	void validate() const;
	std::size_t total_steps() const;
};

/// Spike time steps per neuron per layer for one simulated sample.
struct SpikeRaster {
	std::vector<std::vector<std::vector<std::uint32_t>>> layers;  // [layer][neuron] -> steps
	std::size_t total_steps = 0;
};

/**
 * @brief Bernoulli rate coding: pixel p spikes each step with probability
 * min(1, p * rate_hz * dt / 1000).
 */
SpikeRaster poisson_encode(const Tensor &image, const SimConfig &cfg, std::mt19937_64 &rng);

/// Membrane state of one IF population (threshold crossings reset by subtraction).
struct IfState {
	std::vector<double> v;
	double threshold = 1.0;

	explicit IfState(std::size_t size, double threshold_)
	    : v(size, 0.0), threshold(threshold_)
	{
	}
};

/**
 * @brief One clock tick: v += input; v >= threshold fires and subtracts the
 * threshold; the membrane floors at 0 after inhibitory input.
 *
 * The crossing test allows a 1e-9 relative epsilon so long constant-current
 * runs hit their analytic spike counts despite accumulated rounding.
 */
void if_step(IfState &state, const std::vector<double> &input_current,
             std::vector<std::uint8_t> &spikes_out);

struct SampleResult {
	SpikeRaster raster;                  // populated when record_raster is set
	std::vector<Tensor> rates;           // per population, spike_count / total_steps
	std::vector<std::uint32_t> output_counts;
	std::size_t predicted_class = 0;
};

/**
 * @brief Runs one image for cfg.duration_ms; prediction is the argmax of
 * output spike counts, ties broken toward the lowest class index.
 */
SampleResult simulate_sample(const SpikingNetwork &snn, const Tensor &image,
                             const SimConfig &cfg, std::uint64_t stream_seed,
                             bool record_raster = false);

struct EvaluationReport {
	std::vector<double> run_accuracies;
	double mean_accuracy = 0.0;
	double std_accuracy = 0.0;  // population standard deviation over runs
	std::optional<double> ann_accuracy;
	std::size_t sample_count = 0;
	SimConfig config;
};

/**
 * @brief num_runs independent repetitions over the test set with fresh
 * Poisson streams derived from cfg.seed; optionally scores the source ANN
 * on the same samples. Results are independent of batch size and thread
 * count (per-sample seed streams).
 */
EvaluationReport run_evaluation(const SpikingNetwork &snn, const LabeledSet &test_set,
                                const SimConfig &cfg, const TrainedNetwork *ann = nullptr);

void write_evaluation_json(const EvaluationReport &report, const std::filesystem::path &path);
void write_evaluation_csv(const EvaluationReport &report, const std::filesystem::path &path);
EvaluationReport read_evaluation_json(const std::filesystem::path &path);

}  // namespace spikeforge
