#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spikeforge/pipeline.hpp"

using namespace spikeforge;

int main(int argc, char **argv)
{
	CLI::App app{"spikeforge: train a CNN on hand-gesture images, convert it to a spiking "
	             "network of integrate-and-fire neurons, simulate it with Poisson-coded "
	             "inputs, and measure conversion fidelity"};
	app.require_subcommand(1);

	std::string config_path;
	std::string workdir;
	app.add_option("--config", config_path, "INI config file");
	app.add_option("--workdir", workdir, "working directory for pipeline artifacts");

	// Stage flags mirror config keys as --kebab-case. Only values the user
	// actually passed override the config file.
	std::string dataset_root, manifest;
	std::size_t input_h = 0, input_w = 0, classes = 0;
	double test_fraction = 0;
	std::uint64_t split_seed = 0;
	bool by_subject = false;

	auto *prepare = app.add_subcommand("prepare-data",
	                                   "load, resize and split the gesture dataset");
	prepare->add_option("--dataset-root", dataset_root,
	                    "dataset directory (or 'synthetic[:N]' for the built-in corpus)");
	prepare->add_option("--manifest", manifest, "dataset manifest JSON");
	prepare->add_option("--input-h", input_h, "target image height");
	prepare->add_option("--input-w", input_w, "target image width");
	prepare->add_option("--test-fraction", test_fraction, "held-out fraction");
	prepare->add_option("--split-seed", split_seed, "split seed");
	prepare->add_flag("--by-subject", by_subject, "hold out whole subjects instead");

	double lr = 0;
	std::size_t epochs = 0, ann_batch = 0;
	std::uint64_t ann_seed = 0;
	auto *train_cmd = app.add_subcommand("train-ann", "train the convolutional classifier");
	train_cmd->add_option("--lr", lr, "SGD learning rate");
	train_cmd->add_option("--epochs", epochs, "training epochs");
	train_cmd->add_option("--batch-size", ann_batch, "mini-batch size");
	train_cmd->add_option("--seed", ann_seed, "training seed");
	train_cmd->add_option("--classes", classes, "number of classes");

	double percentile = 0;
	std::size_t calibration_samples = 0;
	auto *convert_cmd =
	    app.add_subcommand("convert", "convert the trained network to spiking form");
	convert_cmd->add_option("--percentile", percentile, "activation normalization percentile");
	convert_cmd->add_option("--calibration-samples", calibration_samples,
	                        "training samples used for normalization");

	SubcommandExtras extras;
	auto *export_cmd =
	    app.add_subcommand("export-connections", "write per-layer connection tables");
	export_cmd->add_option("--source", extras.export_source, "ann or stdp")
	    ->check(CLI::IsMember({"ann", "stdp"}));
	export_cmd->add_option("--out", extras.export_out, "destination directory");
	export_cmd->add_option("--percentile", percentile, "activation normalization percentile");

	double duration_ms = 0, dt_ms = 0, input_rate_hz = 0;
	std::size_t sim_batch = 0, num_runs = 0, threads = 0;
	bool no_evaluate_ann = false;
	std::uint64_t sim_seed = 0;
	auto *simulate_cmd =
	    app.add_subcommand("simulate", "run the spiking network over the test set");
	simulate_cmd->add_option("--duration-ms", duration_ms, "simulated time per sample");
	simulate_cmd->add_option("--dt-ms", dt_ms, "simulation time step");
	simulate_cmd->add_option("--input-rate-hz", input_rate_hz, "Poisson input rate");
	simulate_cmd->add_option("--batch-size", sim_batch, "samples in flight per batch");
	simulate_cmd->add_option("--num-runs", num_runs, "independent repetitions");
	simulate_cmd->add_flag("--no-evaluate-ann", no_evaluate_ann,
	                       "skip scoring the source network");
	simulate_cmd->add_option("--seed", sim_seed, "simulation seed");
	simulate_cmd->add_option("--threads", threads, "worker threads (0 = all cores)");

	std::vector<std::size_t> arch;
	std::size_t stdp_epochs = 0;
	std::uint64_t stdp_seed = 0;
	double stdp_threshold = 0;
	auto *stdp_cmd = app.add_subcommand("stdp-train", "train spiking layers from scratch");
	stdp_cmd->add_option("--arch", arch, "layer sizes, e.g. --arch 64 10");
	stdp_cmd->add_option("--epochs", stdp_epochs, "passes over the training set");
	stdp_cmd->add_option("--seed", stdp_seed, "training seed");
	stdp_cmd->add_option("--threshold", stdp_threshold, "base firing threshold");

	std::size_t correlation_samples = 0;
	auto *report_cmd =
	    app.add_subcommand("report", "per-layer ANN/SNN correlation and report files");
	report_cmd->add_option("--correlation-samples", correlation_samples,
	                       "test samples used for the correlation");

	CLI11_PARSE(app, argc, argv);

	PipelineConfig cfg;
	try {
		if (!config_path.empty()) {
			cfg = parse_config(config_path);
		}
	}
	catch (const std::exception &e) {
		std::cerr << e.what() << "\n";
		return 1;
	}

	// Precedence: CLI flag > SPIKEFORGE_WORKDIR > config file > default.
	if (const char *env = std::getenv("SPIKEFORGE_WORKDIR"); env && *env) {
		cfg.workdir = env;
	}
	if (app.count("--workdir")) {
		cfg.workdir = workdir;
	}

	if (prepare->count("--dataset-root")) cfg.dataset_root = dataset_root;
	if (prepare->count("--manifest")) cfg.manifest = manifest;
	if (prepare->count("--input-h")) cfg.input_h = input_h;
	if (prepare->count("--input-w")) cfg.input_w = input_w;
	if (prepare->count("--test-fraction")) cfg.test_fraction = test_fraction;
	if (prepare->count("--split-seed")) cfg.split_seed = split_seed;
	if (prepare->count("--by-subject")) cfg.by_subject = true;

	if (train_cmd->count("--lr")) cfg.lr = lr;
	if (train_cmd->count("--epochs")) cfg.epochs = epochs;
	if (train_cmd->count("--batch-size")) cfg.batch_size = ann_batch;
	if (train_cmd->count("--seed")) cfg.seed = ann_seed;
	if (train_cmd->count("--classes")) cfg.classes = classes;

	if (convert_cmd->count("--percentile") || export_cmd->count("--percentile")) {
		cfg.percentile = percentile;
	}
	if (convert_cmd->count("--calibration-samples")) {
		cfg.calibration_samples = calibration_samples;
	}

	if (simulate_cmd->count("--duration-ms")) cfg.sim.duration_ms = duration_ms;
	if (simulate_cmd->count("--dt-ms")) cfg.sim.dt_ms = dt_ms;
	if (simulate_cmd->count("--input-rate-hz")) cfg.sim.input_rate_hz = input_rate_hz;
	if (simulate_cmd->count("--batch-size")) cfg.sim.batch_size = sim_batch;
	if (simulate_cmd->count("--num-runs")) cfg.sim.num_runs = num_runs;
	if (simulate_cmd->count("--no-evaluate-ann")) cfg.sim.evaluate_ann = false;
	if (simulate_cmd->count("--seed")) cfg.sim.seed = sim_seed;
	if (simulate_cmd->count("--threads")) cfg.sim.threads = threads;

	if (stdp_cmd->count("--arch")) cfg.stdp_arch = arch;
	if (stdp_cmd->count("--epochs")) cfg.stdp_epochs = stdp_epochs;
	if (stdp_cmd->count("--seed")) cfg.stdp_seed = stdp_seed;
	if (stdp_cmd->count("--threshold")) cfg.stdp_threshold = stdp_threshold;

	if (report_cmd->count("--correlation-samples")) {
		cfg.correlation_samples = correlation_samples;
	}

	try {
		cfg.sim.validate();
	}
	catch (const std::exception &e) {
		std::cerr << e.what() << "\n";
		return 1;
	}

	const std::string name = app.get_subcommands().front()->get_name();
	return run_subcommand(name, cfg, extras, std::cout, std::cerr);
}
