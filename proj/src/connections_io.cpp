#include "spikeforge/connections_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spikeforge {

namespace fs = std::filesystem;

std::string format_double(double value)
{
	char buf[64];
	auto res = std::to_chars(buf, buf + sizeof(buf), value);
	return std::string(buf, res.ptr);
}

namespace {

[[noreturn]] void row_error(const fs::path &file, std::size_t line, const std::string &what)
{
	throw std::runtime_error(file.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double_field(const std::string &tok, const fs::path &file, std::size_t line,
                          const char *what)
{
	double v = 0.0;
	auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
	if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
		row_error(file, line, std::string("malformed ") + what + " '" + tok + "'");
	}
	return v;
}

std::size_t parse_index_field(const std::string &tok, const fs::path &file, std::size_t line,
                              const char *what)
{
	std::size_t v = 0;
	auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
	if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
		row_error(file, line, std::string("malformed ") + what + " '" + tok + "'");
	}
	return v;
}

}  // namespace

void export_connections(const SpikingNetwork &snn, const fs::path &dir)
{
	fs::create_directories(dir);

	{
		std::ofstream pops(dir / "populations.txt", std::ios::trunc);
		if (!pops) {
			throw std::runtime_error("export_connections: cannot write " +
			                         (dir / "populations.txt").string());
		}
		// Layer 0 is the spike source; converted populations follow in order.
		pops << "0 " << snn.input_size() << " 1\n";
		for (std::size_t k = 0; k < snn.populations.size(); k++) {
			pops << (k + 1) << " " << snn.populations[k].size << " "
			     << format_double(snn.populations[k].threshold) << "\n";
		}
	}

	for (std::size_t k = 0; k < snn.connections.size(); k++) {
		const auto name = "layer_" + std::to_string(k) + "_to_" + std::to_string(k + 1) + ".txt";
		std::ofstream out(dir / name, std::ios::trunc);
		if (!out) {
			throw std::runtime_error("export_connections: cannot write " + (dir / name).string());
		}
		const ConnectionTable table = snn.connections[k].to_table();
		std::string line;
		for (const auto &r : table.rows) {
			line.clear();
			line += std::to_string(r.pre);
			line += ' ';
			line += std::to_string(r.post);
			line += ' ';
			line += format_double(r.weight);
			line += ' ';
			line += format_double(r.delay_ms);
			line += '\n';
			out << line;
		}

		bool any_bias = false;
		for (double b : snn.connections[k].bias_current) {
			if (b != 0.0) {
				any_bias = true;
				break;
			}
		}
		if (any_bias) {
			std::ofstream bout(dir / ("layer_" + std::to_string(k + 1) + "_biases.txt"),
			                   std::ios::trunc);
			for (std::size_t post = 0; post < snn.connections[k].bias_current.size(); post++) {
				const double b = snn.connections[k].bias_current[post];
				if (b != 0.0) {
					bout << post << " " << format_double(b) << "\n";
				}
			}
		}
	}
}

std::vector<std::size_t> read_population_sizes(const fs::path &dir)
{
	const fs::path pop_file = dir / "populations.txt";
	std::ifstream in(pop_file);
	if (!in) {
		throw std::runtime_error("read_population_sizes: cannot open " + pop_file.string());
	}
	std::vector<std::pair<std::size_t, std::size_t>> entries;
	std::string line;
	std::size_t line_no = 0;
	while (std::getline(in, line)) {
		line_no++;
		if (line.empty()) {
			continue;
		}
		std::istringstream ss(line);
		std::string a, b, c;
		if (!(ss >> a >> b >> c)) {
			row_error(pop_file, line_no, "expected 'layer_index size threshold'");
		}
		entries.emplace_back(parse_index_field(a, pop_file, line_no, "layer index"),
		                     parse_index_field(b, pop_file, line_no, "population size"));
	}
	std::vector<std::size_t> sizes(entries.size(), 0);
	for (const auto &[idx, size] : entries) {
		if (idx >= sizes.size()) {
			throw std::runtime_error("read_population_sizes: non-contiguous layer indices in " +
			                         pop_file.string());
		}
		sizes[idx] = size;
	}
	return sizes;
}

SpikingNetwork import_connections(const fs::path &dir, const std::vector<std::size_t> &layer_sizes)
{
	if (layer_sizes.size() < 2) {
		throw std::invalid_argument("import_connections: need at least input and one layer");
	}

	// populations.txt supplies thresholds when present.
	std::vector<double> thresholds(layer_sizes.size(), 1.0);
	const fs::path pop_file = dir / "populations.txt";
	if (fs::exists(pop_file)) {
		std::ifstream in(pop_file);
		std::string line;
		std::size_t line_no = 0;
		while (std::getline(in, line)) {
			line_no++;
			if (line.empty()) {
				continue;
			}
			std::istringstream ss(line);
			std::string a, b, c;
			if (!(ss >> a >> b >> c)) {
				row_error(pop_file, line_no, "expected 'layer_index size threshold'");
			}
			const std::size_t idx = parse_index_field(a, pop_file, line_no, "layer index");
			const std::size_t size = parse_index_field(b, pop_file, line_no, "population size");
			if (idx >= layer_sizes.size()) {
				row_error(pop_file, line_no,
				          "layer index " + a + " outside the given layer_sizes");
			}
			if (size != layer_sizes[idx]) {
				row_error(pop_file, line_no,
				          "population size " + b + " conflicts with expected " +
				              std::to_string(layer_sizes[idx]));
			}
			thresholds[idx] = parse_double_field(c, pop_file, line_no, "threshold");
		}
	}

	SpikingNetwork snn;
	snn.input_shape = {layer_sizes[0]};
	for (std::size_t k = 1; k < layer_sizes.size(); k++) {
		const fs::path file =
		    dir / ("layer_" + std::to_string(k - 1) + "_to_" + std::to_string(k) + ".txt");
		std::ifstream in(file);
		if (!in) {
			throw std::runtime_error("import_connections: cannot open " + file.string());
		}
		ConnectionTable table;
		std::string line;
		std::size_t line_no = 0;
		while (std::getline(in, line)) {
			line_no++;
			if (line.empty()) {
				continue;
			}
			std::istringstream ss(line);
			std::string pre_s, post_s, w_s, d_s, extra;
			if (!(ss >> pre_s >> post_s >> w_s >> d_s) || (ss >> extra)) {
				row_error(file, line_no, "expected 'pre post weight delay_ms'");
			}
			SynapseRow row;
			row.pre = parse_index_field(pre_s, file, line_no, "pre index");
			row.post = parse_index_field(post_s, file, line_no, "post index");
			row.weight = parse_double_field(w_s, file, line_no, "weight");
			row.delay_ms = parse_double_field(d_s, file, line_no, "delay");
			if (row.pre >= layer_sizes[k - 1]) {
				row_error(file, line_no,
				          "pre index " + pre_s + " outside population of size " +
				              std::to_string(layer_sizes[k - 1]));
			}
			if (row.post >= layer_sizes[k]) {
				row_error(file, line_no,
				          "post index " + post_s + " outside population of size " +
				              std::to_string(layer_sizes[k]));
			}
			if (row.delay_ms <= 0.0) {
				row_error(file, line_no, "delay must be positive");
			}
			table.rows.push_back(row);
		}
		LayerConnections conn =
		    LayerConnections::from_table(table, layer_sizes[k - 1], layer_sizes[k]);

		const fs::path bias_file = dir / ("layer_" + std::to_string(k) + "_biases.txt");
		if (fs::exists(bias_file)) {
			std::ifstream bin(bias_file);
			std::size_t bline = 0;
			while (std::getline(bin, line)) {
				bline++;
				if (line.empty()) {
					continue;
				}
				std::istringstream ss(line);
				std::string post_s, b_s;
				if (!(ss >> post_s >> b_s)) {
					row_error(bias_file, bline, "expected 'post_index bias'");
				}
				const std::size_t post = parse_index_field(post_s, bias_file, bline, "post index");
				if (post >= layer_sizes[k]) {
					row_error(bias_file, bline,
					          "post index " + post_s + " outside population of size " +
					              std::to_string(layer_sizes[k]));
				}
				conn.bias_current[post] = parse_double_field(b_s, bias_file, bline, "bias");
			}
		}

		IfPopulation pop;
		pop.name = "layer_" + std::to_string(k);
		pop.size = layer_sizes[k];
		pop.threshold = thresholds[k];
		pop.ann_layer_index = k - 1;
		pop.shape = {layer_sizes[k]};
		snn.populations.push_back(std::move(pop));
		snn.connections.push_back(std::move(conn));
	}
	snn.validate();
	return snn;
}

}  // namespace spikeforge
