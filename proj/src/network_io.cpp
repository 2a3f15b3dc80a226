#include "spikeforge/network_io.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "spikeforge/npz.hpp"

namespace spikeforge {

using nlohmann::json;

std::string network_spec_to_json(const NetworkSpec &spec, const TrainingMeta *meta)
{
	json layers = json::array();
	for (const auto &l : spec.layers) {
		json jl;
		jl["kind"] = layer_kind_name(l.kind);
		switch (l.kind) {
			case LayerKind::Conv2d:
				jl["out_channels"] = l.out_channels;
				jl["kernel_h"] = l.kernel_h;
				jl["kernel_w"] = l.kernel_w;
				jl["stride"] = l.stride;
				jl["padding"] = l.padding;
				break;
			case LayerKind::AvgPool:
				jl["size"] = l.pool_size;
				jl["stride"] = l.pool_stride;
				break;
			case LayerKind::Flatten:
				break;
			case LayerKind::Dense:
				jl["units"] = l.units;
				break;
		}
		layers.push_back(jl);
	}
	json j;
	j["input_shape"] = spec.input_shape;
	j["layers"] = layers;
	if (meta) {
		j["meta"] = {{"epochs", meta->epochs},
		             {"final_train_accuracy", meta->final_train_accuracy},
		             {"final_test_accuracy", meta->final_test_accuracy},
		             {"seed", meta->seed},
		             {"epoch_losses", meta->epoch_losses}};
	}
	return j.dump(2) + "\n";
}

NetworkSpec network_spec_from_json(const std::string &text, TrainingMeta *meta_out)
{
	json j;
	try {
		j = json::parse(text);
	}
	catch (const json::exception &e) {
		throw std::runtime_error(std::string("spec.json: parse error: ") + e.what());
	}
	NetworkSpec spec;
	spec.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
	for (const auto &jl : j.at("layers")) {
		const std::string kind = jl.at("kind").get<std::string>();
		if (kind == "conv2d") {
			spec.layers.push_back(LayerSpec::conv2d(
			    jl.at("out_channels").get<std::size_t>(), jl.at("kernel_h").get<std::size_t>(),
			    jl.at("kernel_w").get<std::size_t>(), jl.at("stride").get<std::size_t>(),
			    jl.at("padding").get<std::size_t>()));
		}
		else if (kind == "avg_pool") {
			spec.layers.push_back(LayerSpec::avg_pool(jl.at("size").get<std::size_t>(),
			                                          jl.at("stride").get<std::size_t>()));
		}
		else if (kind == "flatten") {
			spec.layers.push_back(LayerSpec::flatten());
		}
		else if (kind == "dense") {
			spec.layers.push_back(LayerSpec::dense(jl.at("units").get<std::size_t>()));
		}
		else {
			throw std::runtime_error("spec.json: unknown layer kind '" + kind + "'");
		}
	}
	if (meta_out && j.contains("meta")) {
		const auto &m = j.at("meta");
		meta_out->epochs = m.value("epochs", std::size_t{0});
		meta_out->final_train_accuracy = m.value("final_train_accuracy", 0.0);
		meta_out->final_test_accuracy = m.value("final_test_accuracy", -1.0);
		meta_out->seed = m.value("seed", std::uint64_t{0});
		if (m.contains("epoch_losses")) {
			meta_out->epoch_losses = m.at("epoch_losses").get<std::vector<double>>();
		}
	}
	return spec;
}

void save_network(const TrainedNetwork &net, const std::filesystem::path &path)
{
	std::vector<ZipEntry> entries;
	const std::string spec_json = network_spec_to_json(net.spec, &net.meta);
	entries.push_back({"spec.json",
	                   std::vector<std::uint8_t>(spec_json.begin(), spec_json.end())});
	for (std::size_t i = 0; i < net.spec.layers.size(); i++) {
		if (!net.spec.layers[i].has_params()) {
			continue;
		}
		entries.push_back(
		    {"layer" + std::to_string(i) + "_weights.npy", encode_npy(net.weights[i])});
		entries.push_back({"layer" + std::to_string(i) + "_bias.npy", encode_npy(net.biases[i])});
	}
	write_zip(path, entries);
}

TrainedNetwork load_network(const std::filesystem::path &path)
{
	TrainedNetwork net;
	std::map<std::string, Tensor> params;
	bool have_spec = false;
	for (const auto &entry : read_zip(path)) {
		if (entry.name == "spec.json") {
			net.spec = network_spec_from_json(
			    std::string(entry.data.begin(), entry.data.end()), &net.meta);
			have_spec = true;
		}
		else if (entry.name.size() > 4 &&
		         entry.name.substr(entry.name.size() - 4) == ".npy") {
			params[entry.name.substr(0, entry.name.size() - 4)] =
			    decode_npy(entry.data, entry.name);
		}
	}
	if (!have_spec) {
		throw std::runtime_error("load_network: " + path.string() + " lacks spec.json");
	}
	net.weights.resize(net.spec.layers.size());
	net.biases.resize(net.spec.layers.size());
	for (std::size_t i = 0; i < net.spec.layers.size(); i++) {
		if (!net.spec.layers[i].has_params()) {
			continue;
		}
		auto wi = params.find("layer" + std::to_string(i) + "_weights");
		auto bi = params.find("layer" + std::to_string(i) + "_bias");
		if (wi == params.end() || bi == params.end()) {
			throw std::runtime_error("load_network: " + path.string() +
			                         " lacks parameters for layer " + std::to_string(i));
		}
		net.weights[i] = wi->second;
		net.biases[i] = bi->second;
	}
	// Shape check against the spec before handing the network out.
	auto shapes = net.spec.layer_output_shapes();
	std::vector<std::size_t> cur = net.spec.input_shape;
	for (std::size_t i = 0; i < net.spec.layers.size(); i++) {
		const auto &l = net.spec.layers[i];
		if (l.kind == LayerKind::Conv2d &&
		    net.weights[i].shape !=
		        std::vector<std::size_t>{l.out_channels, cur[0], l.kernel_h, l.kernel_w}) {
			throw std::runtime_error("load_network: layer " + std::to_string(i) +
			                         " weight shape " + shape_str(net.weights[i].shape) +
			                         " does not match the spec");
		}
		if (l.kind == LayerKind::Dense &&
		    net.weights[i].shape != std::vector<std::size_t>{l.units, shape_numel(cur)}) {
			throw std::runtime_error("load_network: layer " + std::to_string(i) +
			                         " weight shape " + shape_str(net.weights[i].shape) +
			                         " does not match the spec");
		}
		cur = shapes[i];
	}
	return net;
}

}  // namespace spikeforge
