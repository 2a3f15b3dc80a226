#include "spikeforge/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "spikeforge/connections_io.hpp"

namespace spikeforge {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y)
{
	if (x.size() != y.size()) {
		throw std::invalid_argument("pearson: vectors have different lengths (" +
		                            std::to_string(x.size()) + " vs " +
		                            std::to_string(y.size()) + ")");
	}
	if (x.size() < 2) {
		throw std::invalid_argument("pearson: need at least 2 points");
	}
	// Welford-style streaming co-moments.
	double mean_x = 0.0, mean_y = 0.0, m2x = 0.0, m2y = 0.0, cxy = 0.0;
	for (std::size_t i = 0; i < x.size(); i++) {
		const double n = static_cast<double>(i + 1);
		const double dx = x[i] - mean_x;
		const double dy = y[i] - mean_y;
		mean_x += dx / n;
		mean_y += dy / n;
		m2x += dx * (x[i] - mean_x);
		m2y += dy * (y[i] - mean_y);
		cxy += dx * (y[i] - mean_y);
	}
	if (m2x == 0.0 || m2y == 0.0) {
		return std::nullopt;  // constant vector: correlation undefined
	}
	double r = cxy / std::sqrt(m2x * m2y);
	return std::min(1.0, std::max(-1.0, r));
}

CorrelationReport correlation_report(const std::vector<std::vector<Tensor>> &ann_activations,
                                     const std::vector<std::vector<Tensor>> &snn_rates,
                                     const std::vector<std::string> &layer_names)
{
	if (ann_activations.size() != snn_rates.size()) {
		throw std::invalid_argument("correlation_report: sample counts differ");
	}
	if (ann_activations.empty()) {
		throw std::invalid_argument("correlation_report: no samples");
	}
	const std::size_t n_layers = layer_names.size();
	for (std::size_t s = 0; s < ann_activations.size(); s++) {
		if (ann_activations[s].size() != n_layers || snn_rates[s].size() != n_layers) {
			throw std::invalid_argument("correlation_report: layer counts differ at sample " +
			                            std::to_string(s));
		}
		for (std::size_t l = 0; l < n_layers; l++) {
			if (ann_activations[s][l].numel() != snn_rates[s][l].numel()) {
				throw std::invalid_argument(
				    "correlation_report: neuron counts differ in layer " + layer_names[l] +
				    " at sample " + std::to_string(s));
			}
		}
	}

	CorrelationReport report;
	for (std::size_t l = 0; l < n_layers; l++) {
		std::vector<double> acts, rates;
		for (std::size_t s = 0; s < ann_activations.size(); s++) {
			const auto &a = ann_activations[s][l];
			const auto &r = snn_rates[s][l];
			acts.insert(acts.end(), a.data.begin(), a.data.end());
			rates.insert(rates.end(), r.data.begin(), r.data.end());
		}
		LayerCorrelation lc;
		lc.layer_name = layer_names[l];
		lc.sample_count = ann_activations.size();
		lc.neuron_count = ann_activations[0][l].numel();
		lc.r = pearson(acts, rates);
		report.layers.push_back(std::move(lc));
	}

	const std::size_t last = n_layers - 1;
	for (std::size_t s = 0; s < ann_activations.size(); s++) {
		const auto &a = ann_activations[s][last];
		const auto &r = snn_rates[s][last];
		report.final_layer_per_sample.push_back(pearson(a.data, r.data));
	}
	return report;
}

namespace {

std::string r_to_string(const std::optional<double> &r)
{
	return r ? format_double(*r) : "undefined";
}

void write_scatter_svg(const std::filesystem::path &path,
                       const std::vector<std::pair<double, double>> &points)
{
	const double width = 480.0, height = 360.0, margin = 48.0;
	double max_x = 1e-12, max_y = 1e-12, min_x = 0.0, min_y = 0.0;
	for (const auto &[x, y] : points) {
		max_x = std::max(max_x, x);
		max_y = std::max(max_y, y);
		min_x = std::min(min_x, x);
		min_y = std::min(min_y, y);
	}
	auto sx = [&](double x) {
		return margin + (x - min_x) / (max_x - min_x) * (width - 2 * margin);
	};
	auto sy = [&](double y) {
		return height - margin - (y - min_y) / (max_y - min_y) * (height - 2 * margin);
	};

	std::ofstream out(path, std::ios::trunc);
	if (!out) {
		throw std::runtime_error("emit_report: cannot write " + path.string());
	}
	out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
	    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
	    << "\" height=\"" << height << "\">\n"
	    << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
	    << "  <line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
	    << width - margin << "\" y2=\"" << height - margin
	    << "\" stroke=\"black\" stroke-width=\"1\"/>\n"
	    << "  <line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
	    << "\" y2=\"" << height - margin << "\" stroke=\"black\" stroke-width=\"1\"/>\n"
	    << "  <text x=\"" << width / 2 << "\" y=\"" << height - 10
	    << "\" font-size=\"12\" text-anchor=\"middle\">final-layer activation</text>\n"
	    << "  <text x=\"14\" y=\"" << height / 2
	    << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
	    << height / 2 << ")\">spike rate</text>\n";
	for (const auto &[x, y] : points) {
		out << "  <circle cx=\"" << format_double(sx(x)) << "\" cy=\"" << format_double(sy(y))
		    << "\" r=\"2.5\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
	}
	out << "</svg>\n";
}

}  // namespace

void emit_report(const CorrelationReport &report, const EvaluationReport *eval_report,
                 const std::filesystem::path &out_dir,
                 const std::vector<std::pair<double, double>> &final_layer_pairs)
{
	std::filesystem::create_directories(out_dir);

	{
		std::ofstream out(out_dir / "correlations.csv", std::ios::trunc);
		if (!out) {
			throw std::runtime_error("emit_report: cannot write " +
			                         (out_dir / "correlations.csv").string());
		}
		out << "layer,r,n\n";
		for (const auto &lc : report.layers) {
			out << lc.layer_name << "," << r_to_string(lc.r) << ","
			    << lc.sample_count * lc.neuron_count << "\n";
		}
	}

	{
		std::ofstream out(out_dir / "accuracy.csv", std::ios::trunc);
		if (!out) {
			throw std::runtime_error("emit_report: cannot write " +
			                         (out_dir / "accuracy.csv").string());
		}
		out << "run,snn_acc,ann_acc\n";
		if (eval_report) {
			for (std::size_t r = 0; r < eval_report->run_accuracies.size(); r++) {
				out << r << "," << format_double(eval_report->run_accuracies[r]) << ",";
				if (eval_report->ann_accuracy) {
					out << format_double(*eval_report->ann_accuracy);
				}
				out << "\n";
			}
		}
	}

	{
		nlohmann::json j;
		nlohmann::json layers = nlohmann::json::array();
		for (const auto &lc : report.layers) {
			nlohmann::json jl;
			jl["layer"] = lc.layer_name;
			if (lc.r) {
				jl["r"] = *lc.r;
			}
			else {
				jl["r"] = "undefined";
			}
			jl["samples"] = lc.sample_count;
			jl["neurons"] = lc.neuron_count;
			layers.push_back(jl);
		}
		j["correlations"] = layers;
		nlohmann::json per_sample = nlohmann::json::array();
		for (const auto &r : report.final_layer_per_sample) {
			if (r) {
				per_sample.push_back(*r);
			}
			else {
				per_sample.push_back("undefined");
			}
		}
		j["final_layer_per_sample_r"] = per_sample;
		if (eval_report) {
			j["evaluation"] = {{"run_accuracies", eval_report->run_accuracies},
			                   {"mean_accuracy", eval_report->mean_accuracy},
			                   {"std_accuracy", eval_report->std_accuracy},
			                   {"sample_count", eval_report->sample_count}};
			if (eval_report->ann_accuracy) {
				j["evaluation"]["ann_accuracy"] = *eval_report->ann_accuracy;
			}
		}
		std::ofstream out(out_dir / "summary.json", std::ios::trunc);
		if (!out) {
			throw std::runtime_error("emit_report: cannot write " +
			                         (out_dir / "summary.json").string());
		}
		out << j.dump(2) << "\n";
	}

	write_scatter_svg(out_dir / "final_layer_scatter.svg", final_layer_pairs);
}

}  // namespace spikeforge
