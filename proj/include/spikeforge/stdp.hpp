#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spikeforge/sim.hpp"
#include "spikeforge/tensor.hpp"
#include "spikeforge/train.hpp"

namespace spikeforge {

/// Learning-window constants: potentiation/depression amplitudes and trace time constants.
struct StdpParams {
	double a_plus = 0.01;
	double a_minus = 0.012;
	double tau_plus_ms = 20.0;
	double tau_minus_ms = 20.0;
	double w_min = 0.0;
	double w_max = 1.0;

	void validate() const;
};

/**
 * @brief The learning window: weight change as a function of
 * delta_t = t_post - t_pre.
 *
 * Pre before post (delta_t > 0) potentiates by a_plus * exp(-dt/tau_plus);
 * post before pre depresses by a_minus * exp(dt/tau_minus); 0 at delta_t = 0.
 */
double stdp_window(double delta_t_ms, const StdpParams &params);

/**
 * @brief One trainable layer: bounded weights, pre/post traces, adaptive
 * per-neuron thresholds under winner-take-all inhibition.
 */
struct StdpLayer {
	std::size_t pre_size = 0, post_size = 0;
	std::vector<double> weights;      // [post][pre], clipped to [w_min, w_max]
	std::vector<double> pre_trace;
	std::vector<double> post_trace;
	std::vector<double> thresholds;    // adaptive component included
	double base_threshold = 1.0;
	double theta_plus = 0.05;          // homeostatic bump per spike
	double theta_decay_tau_ms = 2000;  // decay of the adaptive part toward base

	StdpLayer() = default;
	StdpLayer(std::size_t pre, std::size_t post, const StdpParams &params, std::uint64_t seed);

	void reset_traces();
	void reset_state();  // traces + membrane-free state between samples
};

/**
 * @brief Trace-based online STDP over recorded spike trains.
 *
 * Per step: traces decay by exp(-dt/tau); post spikes add a_plus * pre_trace
 * to their column, pre spikes subtract a_minus * post_trace; traces bump
 * after both, so simultaneous pairs contribute nothing. Equivalent to the
 * all-pairs window sum; every update is clipped to [w_min, w_max].
 *
 * Spike trains are per-neuron sorted step lists over [0, total_steps).
 */
void stdp_apply(StdpLayer &layer, const std::vector<std::vector<std::uint32_t>> &pre_spikes,
                const std::vector<std::vector<std::uint32_t>> &post_spikes,
                const StdpParams &params, double dt_ms, std::size_t total_steps);

struct StdpNetwork {
	std::vector<StdpLayer> layers;
	std::vector<std::size_t> label_assignment;  // output neuron -> class
	Tensor response;                            // [output neuron, class] mean rates
	StdpParams params;
};

struct StdpTrainOptions {
	std::size_t epochs = 1;
	std::uint64_t seed = 0;
	double base_threshold = 1.0;
	double theta_plus = 0.05;
	double theta_decay_tau_ms = 2000;
	bool verbose = false;
};

/**
 * @brief Greedy layer-wise unsupervised training with WTA inhibition.
 *
 * arch lists the population sizes after the input (e.g. {64, 10}); each
 * layer is trained with the ones before it frozen. Labels feed only the
 * post-hoc neuron-to-class assignment, never the updates.
 *
 * @throws std::runtime_error if a layer stays silent over a whole epoch
 */
StdpNetwork train_unsupervised(const LabeledSet &train_set, const std::vector<std::size_t> &arch,
                               const StdpParams &params, const StdpTrainOptions &options,
                               const SimConfig &cfg);

/// Classifies by the assigned class of the most active output neuron.
std::size_t stdp_classify(const StdpNetwork &net, const Tensor &image, const SimConfig &cfg,
                          std::uint64_t stream_seed);

/// Runs the frozen network on one sample; returns per-layer spike trains.
std::vector<std::vector<std::vector<std::uint32_t>>> stdp_forward_spikes(
    const StdpNetwork &net, const Tensor &image, const SimConfig &cfg,
    std::uint64_t stream_seed);

void save_label_assignment(const StdpNetwork &net, const std::filesystem::path &path);

}  // namespace spikeforge
