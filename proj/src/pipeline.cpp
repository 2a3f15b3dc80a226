#include "spikeforge/pipeline.hpp"

#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "spikeforge/connections_io.hpp"
#include "spikeforge/dataset.hpp"
#include "spikeforge/diagnostics.hpp"
#include "spikeforge/network_io.hpp"
#include "spikeforge/npz.hpp"
#include "spikeforge/rng.hpp"
#include "spikeforge/synthetic.hpp"

namespace spikeforge {

namespace fs = std::filesystem;

namespace {

void require_file(const fs::path &path, const std::string &stage)
{
	if (!fs::exists(path)) {
		throw MissingPrerequisite(path.string(), stage);
	}
}

GestureDataset load_source_dataset(const PipelineConfig &cfg)
{
	if (cfg.dataset_root.empty()) {
		throw std::runtime_error(
		    "prepare-data: [paths] dataset_root is not set (use a directory path, or "
		    "'synthetic[:samples_per_class_per_subject]' for the built-in corpus)");
	}
	if (cfg.dataset_root.rfind("synthetic", 0) == 0) {
		std::size_t per = 20;
		const std::size_t colon = cfg.dataset_root.find(':');
		if (colon != std::string::npos) {
			per = static_cast<std::size_t>(std::stoull(cfg.dataset_root.substr(colon + 1)));
		}
		return synthetic_gesture_dataset(per, cfg.input_h, cfg.input_w, cfg.split_seed);
	}
	std::optional<DatasetManifest> manifest;
	if (!cfg.manifest.empty()) {
		manifest = DatasetManifest::load(cfg.manifest);
	}
	return load_image_dir(cfg.dataset_root, manifest);
}

int stage_prepare_data(const PipelineConfig &cfg, const WorkdirLayout &wd, std::ostream &out)
{
	GestureDataset raw = load_source_dataset(cfg);
	GestureDataset processed = preprocess(raw, cfg.input_h, cfg.input_w);
	SplitDataset split = cfg.by_subject
	                         ? split_by_subject(processed, cfg.test_fraction, cfg.split_seed)
	                         : stratified_split(processed, cfg.test_fraction, cfg.split_seed);
	fs::create_directories(wd.root);
	save_dataset_npz(split, wd.dataset());
	out << "prepare-data: " << split.train.size() << " train / " << split.test.size()
	    << " test samples at " << cfg.input_h << "x" << cfg.input_w << " -> "
	    << wd.dataset().string() << "\n";
	return 0;
}

int stage_train_ann(const PipelineConfig &cfg, const WorkdirLayout &wd, std::ostream &out)
{
	require_file(wd.dataset(), "prepare-data");
	SplitDataset split = load_dataset_npz(wd.dataset());
	LabeledSet train_set = to_labeled(split.train);
	LabeledSet test_set = to_labeled(split.test);

	NetworkSpec spec = cfg.ann_spec();
	spec.input_shape = {split.train.images[0].shape[0], split.train.images[0].shape[1],
	                    split.train.images[0].shape[2]};

	TrainOptions options;
	options.lr = cfg.lr;
	options.epochs = cfg.epochs;
	options.batch_size = cfg.batch_size;
	options.seed = cfg.seed;
	options.threads = cfg.sim.threads;
	TrainedNetwork net = train(spec, train_set, options, &test_set);
	save_network(net, wd.ann());
	out << "train-ann: train accuracy " << net.meta.final_train_accuracy << ", test accuracy "
	    << net.meta.final_test_accuracy << " -> " << wd.ann().string() << "\n";
	return 0;
}

void write_scales_json(const ScaleReport &scales, const fs::path &path)
{
	nlohmann::json j;
	j["percentile"] = scales.percentile;
	j["calibration_samples"] = scales.calibration_samples;
	nlohmann::json per_layer = nlohmann::json::array();
	for (std::size_t i = 0; i < scales.scales.size(); i++) {
		per_layer.push_back({{"layer", scales.layer_names[i]},
		                     {"scale", scales.scales[i]},
		                     {"all_zero", static_cast<bool>(scales.all_zero[i])}});
	}
	j["scales"] = per_layer;
	std::ofstream f(path, std::ios::trunc);
	f << j.dump(2) << "\n";
}

SpikingNetwork build_converted_network(const PipelineConfig &cfg, const WorkdirLayout &wd,
                                       std::ostream &out)
{
	require_file(wd.ann(), "train-ann");
	require_file(wd.dataset(), "prepare-data");
	TrainedNetwork net = load_network(wd.ann());
	SplitDataset split = load_dataset_npz(wd.dataset());
	std::vector<Tensor> calibration;
	for (std::size_t i = 0; i < std::min(cfg.calibration_samples, split.train.size()); i++) {
		calibration.push_back(split.train.images[i]);
	}
	ScaleReport scales = compute_activation_scales(net, calibration, cfg.percentile);
	out << "convert: activation scales at percentile " << cfg.percentile << ":";
	for (std::size_t i = 0; i < scales.scales.size(); i++) {
		out << " " << scales.layer_names[i] << "=" << scales.scales[i];
	}
	out << "\n";
	SpikingNetwork snn = convert_network(net, scales);
	write_scales_json(scales, wd.root / "scales.json");
	return snn;
}

int stage_convert(const PipelineConfig &cfg, const WorkdirLayout &wd, std::ostream &out)
{
	SpikingNetwork snn = build_converted_network(cfg, wd, out);
	export_connections(snn, wd.connections());
	std::size_t synapses = 0;
	for (const auto &c : snn.connections) {
		synapses += c.synapse_count();
	}
	out << "convert: " << snn.populations.size() << " populations, " << synapses
	    << " synapses -> " << wd.connections().string() << "\n";
	return 0;
}

int stage_export_connections(const PipelineConfig &cfg, const WorkdirLayout &wd,
                             const SubcommandExtras &extras, std::ostream &out)
{
	const fs::path dest =
	    extras.export_out.empty() ? wd.root / "connections-export" : fs::path(extras.export_out);
	if (extras.export_source == "ann") {
		SpikingNetwork snn = build_converted_network(cfg, wd, out);
		export_connections(snn, dest);
	}
	else if (extras.export_source == "stdp") {
		require_file(wd.stdp_layers(), "stdp-train");
		auto records = read_npz(wd.stdp_layers());
		SpikingNetwork snn;
		std::size_t k = 0;
		std::size_t prev = 0;
		while (true) {
			auto wi = records.find("layer" + std::to_string(k) + "_weights");
			if (wi == records.end()) {
				break;
			}
			const Tensor &w = wi->second;  // [post, pre]
			if (k == 0) {
				snn.input_shape = {w.shape[1]};
				prev = w.shape[1];
			}
			ConnectionTable table;
			for (std::size_t m = 0; m < w.shape[0]; m++) {
				for (std::size_t n = 0; n < w.shape[1]; n++) {
					table.rows.push_back({n, m, w.at(m, n), snn.dt_ms});
				}
			}
			auto base = records.find("layer" + std::to_string(k) + "_base_threshold");
			IfPopulation pop;
			pop.name = "stdp_layer_" + std::to_string(k);
			pop.size = w.shape[0];
			pop.threshold = base != records.end() && base->second.numel() ? base->second[0] : 1.0;
			pop.ann_layer_index = k;
			pop.shape = {w.shape[0]};
			snn.populations.push_back(pop);
			snn.connections.push_back(LayerConnections::from_table(table, prev, w.shape[0]));
			prev = w.shape[0];
			k++;
		}
		if (snn.populations.empty()) {
			throw std::runtime_error("export-connections: no layers found in " +
			                         wd.stdp_layers().string());
		}
		export_connections(snn, dest);
		if (fs::exists(wd.stdp_assignment())) {
			fs::copy_file(wd.stdp_assignment(), dest / "label_assignment.json",
			              fs::copy_options::overwrite_existing);
		}
	}
	else {
		throw std::runtime_error("export-connections: unknown source '" + extras.export_source +
		                         "' (expected ann or stdp)");
	}
	out << "export-connections: wrote " << dest.string() << "\n";
	return 0;
}

int stage_simulate(const PipelineConfig &cfg, const WorkdirLayout &wd, std::ostream &out)
{
	require_file(wd.connections() / "populations.txt", "convert");
	require_file(wd.dataset(), "prepare-data");
	TrainedNetwork ann;
	const bool with_ann = cfg.sim.evaluate_ann;
	if (with_ann) {
		require_file(wd.ann(), "train-ann");
		ann = load_network(wd.ann());
	}
	SplitDataset split = load_dataset_npz(wd.dataset());
	LabeledSet test_set = to_labeled(split.test);

	const auto sizes = read_population_sizes(wd.connections());
	SpikingNetwork snn = import_connections(wd.connections(), sizes);
	EvaluationReport report = run_evaluation(snn, test_set, cfg.sim, with_ann ? &ann : nullptr);

	fs::create_directories(wd.reports());
	write_evaluation_json(report, wd.evaluation());
	write_evaluation_csv(report, wd.reports() / "accuracy.csv");
	out << "simulate: mean SNN accuracy " << report.mean_accuracy << " (std "
	    << report.std_accuracy << ") over " << report.run_accuracies.size() << " runs";
	if (report.ann_accuracy) {
		out << ", ANN accuracy " << *report.ann_accuracy;
	}
	out << "\n";
	return 0;
}

int stage_stdp_train(const PipelineConfig &cfg, const WorkdirLayout &wd, std::ostream &out)
{
	require_file(wd.dataset(), "prepare-data");
	SplitDataset split = load_dataset_npz(wd.dataset());
	LabeledSet train_set = to_labeled(split.train);

	StdpTrainOptions options;
	options.epochs = cfg.stdp_epochs;
	options.seed = cfg.stdp_seed;
	options.base_threshold = cfg.stdp_threshold;
	StdpNetwork net = train_unsupervised(train_set, cfg.stdp_arch, cfg.stdp, options, cfg.sim);

	std::map<std::string, Tensor> records;
	for (std::size_t k = 0; k < net.layers.size(); k++) {
		const auto &layer = net.layers[k];
		Tensor w({layer.post_size, layer.pre_size});
		w.data = layer.weights;
		Tensor th({layer.thresholds.size()});
		th.data = layer.thresholds;
		records["layer" + std::to_string(k) + "_weights"] = std::move(w);
		records["layer" + std::to_string(k) + "_thresholds"] = std::move(th);
		records["layer" + std::to_string(k) + "_base_threshold"] =
		    Tensor::from({}, {layer.base_threshold});
	}
	records["response"] = net.response;
	fs::create_directories(wd.root);
	write_npz(records, wd.stdp_layers());
	save_label_assignment(net, wd.stdp_assignment());
	out << "stdp-train: " << net.layers.size() << " layers -> " << wd.stdp_layers().string()
	    << ", assignment -> " << wd.stdp_assignment().string() << "\n";
	return 0;
}

int stage_report(const PipelineConfig &cfg, const WorkdirLayout &wd, std::ostream &out)
{
	require_file(wd.connections() / "populations.txt", "convert");
	require_file(wd.ann(), "train-ann");
	require_file(wd.dataset(), "prepare-data");
	require_file(wd.evaluation(), "simulate");

	TrainedNetwork ann = load_network(wd.ann());
	SplitDataset split = load_dataset_npz(wd.dataset());
	EvaluationReport eval = read_evaluation_json(wd.evaluation());
	const auto sizes = read_population_sizes(wd.connections());
	SpikingNetwork snn = import_connections(wd.connections(), sizes);

	const std::size_t n_samples = std::min(cfg.correlation_samples, split.test.size());
	if (n_samples == 0) {
		throw std::runtime_error("report: test set is empty");
	}

	// Population order mirrors the ANN's non-flatten layers.
	std::vector<std::string> names;
	std::vector<std::size_t> layer_of_pop;
	for (std::size_t i = 0; i < ann.spec.layers.size(); i++) {
		if (ann.spec.layers[i].kind != LayerKind::Flatten) {
			names.push_back(ann.spec.layers[i].name(i));
			layer_of_pop.push_back(i);
		}
	}

	std::vector<std::vector<Tensor>> ann_acts(n_samples), snn_rates(n_samples);
	std::vector<std::pair<double, double>> final_pairs;
	for (std::size_t s = 0; s < n_samples; s++) {
		const Tensor &img = split.test.images[s];
		ForwardTrace trace = forward_all(ann, img);
		const auto res =
		    simulate_sample(snn, img, cfg.sim, derive_seed(cfg.sim.seed, 0xD1A6, s));
		for (std::size_t k = 0; k < layer_of_pop.size(); k++) {
			const std::size_t li = layer_of_pop[k];
			Tensor act = (li + 1 == ann.spec.layers.size()) ? trace.logits
			                                                : trace.activations[li];
			act.shape = {act.numel()};
			ann_acts[s].push_back(std::move(act));
			snn_rates[s].push_back(res.rates[k]);
		}
		for (std::size_t j = 0; j < ann_acts[s].back().numel(); j++) {
			final_pairs.emplace_back(ann_acts[s].back()[j], snn_rates[s].back()[j]);
		}
	}

	CorrelationReport corr = correlation_report(ann_acts, snn_rates, names);
	emit_report(corr, &eval, wd.reports(), final_pairs);
	out << "report: per-layer ANN/SNN correlation over " << n_samples << " samples:";
	for (const auto &lc : corr.layers) {
		out << " " << lc.layer_name << "=";
		if (lc.r) {
			out << *lc.r;
		}
		else {
			out << "undefined";
		}
	}
	out << "\nreport: wrote " << (wd.reports() / "correlations.csv").string() << ", "
	    << (wd.reports() / "summary.json").string() << "\n";
	return 0;
}

}  // namespace

int run_subcommand(const std::string &name, const PipelineConfig &cfg,
                   const SubcommandExtras &extras, std::ostream &out, std::ostream &err)
{
	WorkdirLayout wd{cfg.workdir};
	try {
		if (name == "prepare-data") {
			return stage_prepare_data(cfg, wd, out);
		}
		if (name == "train-ann") {
			return stage_train_ann(cfg, wd, out);
		}
		if (name == "convert") {
			return stage_convert(cfg, wd, out);
		}
		if (name == "export-connections") {
			return stage_export_connections(cfg, wd, extras, out);
		}
		if (name == "simulate") {
			return stage_simulate(cfg, wd, out);
		}
		if (name == "stdp-train") {
			return stage_stdp_train(cfg, wd, out);
		}
		if (name == "report") {
			return stage_report(cfg, wd, out);
		}
		err << "unknown subcommand '" << name << "'\n";
		return 1;
	}
	catch (const MissingPrerequisite &e) {
		err << name << ": " << e.what() << "\n";
		return 2;
	}
	catch (const std::exception &e) {
		err << name << ": " << e.what() << "\n";
		return 1;
	}
}

int run_subcommand(const std::string &name, const PipelineConfig &cfg, std::ostream &out,
                   std::ostream &err)
{
	return run_subcommand(name, cfg, SubcommandExtras{}, out, err);
}

}  // namespace spikeforge
