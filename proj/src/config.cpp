#include "spikeforge/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace spikeforge {

NetworkSpec PipelineConfig::ann_spec() const
{
	return NetworkSpec::default_gesture_net(input_h, input_w, classes, conv1_channels,
	                                        conv2_channels, dense1_units, dense2_units);
}

namespace {

struct ParseCtx {
	std::string name;
	std::size_t line = 0;

	[[noreturn]] void fail(const std::string &what) const
	{
		throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
	}
};

std::string trim(const std::string &s)
{
	std::size_t a = s.find_first_not_of(" \t\r");
	std::size_t b = s.find_last_not_of(" \t\r");
	return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

double parse_number(const ParseCtx &ctx, const std::string &key, const std::string &value)
{
	double v = 0.0;
	auto res = std::from_chars(value.data(), value.data() + value.size(), v);
	if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
		ctx.fail("value '" + value + "' for key '" + key + "' is not a number");
	}
	return v;
}

std::size_t parse_count(const ParseCtx &ctx, const std::string &key, const std::string &value,
                        std::size_t min_value = 1)
{
	const double v = parse_number(ctx, key, value);
	if (v < static_cast<double>(min_value) || v != static_cast<double>(static_cast<std::size_t>(v))) {
		ctx.fail("key '" + key + "' must be an integer >= " + std::to_string(min_value) +
		         ", got '" + value + "'");
	}
	return static_cast<std::size_t>(v);
}

std::uint64_t parse_seed(const ParseCtx &ctx, const std::string &key, const std::string &value)
{
	std::uint64_t v = 0;
	auto res = std::from_chars(value.data(), value.data() + value.size(), v);
	if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
		ctx.fail("value '" + value + "' for key '" + key + "' is not a non-negative integer");
	}
	return v;
}

bool parse_bool(const ParseCtx &ctx, const std::string &key, const std::string &value)
{
	if (value == "true" || value == "True" || value == "1" || value == "yes") {
		return true;
	}
	if (value == "false" || value == "False" || value == "0" || value == "no") {
		return false;
	}
	ctx.fail("value '" + value + "' for key '" + key + "' is not a boolean");
}

std::vector<std::size_t> parse_size_list(const ParseCtx &ctx, const std::string &key,
                                         const std::string &value)
{
	std::vector<std::size_t> out;
	std::string item;
	std::istringstream ss(value);
	while (std::getline(ss, item, ',')) {
		std::istringstream inner(trim(item));
		std::string tok;
		while (inner >> tok) {
			out.push_back(parse_count(ctx, key, tok));
		}
	}
	if (out.empty()) {
		ctx.fail("key '" + key + "' needs at least one size");
	}
	return out;
}

}  // namespace

PipelineConfig parse_config_text(const std::string &text, const std::string &name)
{
	PipelineConfig cfg;
	ParseCtx ctx{name, 0};
	std::string section;

	using Setter = std::function<void(const ParseCtx &, const std::string &, const std::string &)>;
	const std::map<std::string, std::map<std::string, Setter>> schema = {
	    {"paths",
	     {
	         {"dataset_root", [&](const ParseCtx &, const std::string &, const std::string &v) { cfg.dataset_root = v; }},
	         {"workdir", [&](const ParseCtx &, const std::string &, const std::string &v) { cfg.workdir = v; }},
	         {"manifest", [&](const ParseCtx &, const std::string &, const std::string &v) { cfg.manifest = v; }},
	     }},
	    {"ann",
	     {
	         {"input_h", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.input_h = parse_count(c, k, v, 8); }},
	         {"input_w", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.input_w = parse_count(c, k, v, 8); }},
	         {"conv1_channels", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.conv1_channels = parse_count(c, k, v); }},
	         {"conv2_channels", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.conv2_channels = parse_count(c, k, v); }},
	         {"dense1_units", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.dense1_units = parse_count(c, k, v); }},
	         {"dense2_units", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.dense2_units = parse_count(c, k, v); }},
	         {"classes", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.classes = parse_count(c, k, v, 2); }},
	         {"lr",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.lr = parse_number(c, k, v);
		          if (cfg.lr < 0.0) {
			          c.fail("lr must be >= 0");
		          }
	          }},
	         {"epochs", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.epochs = parse_count(c, k, v, 0); }},
	         {"batch_size", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.batch_size = parse_count(c, k, v); }},
	         {"seed", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.seed = parse_seed(c, k, v); }},
	         {"test_fraction",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.test_fraction = parse_number(c, k, v);
		          if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
			          c.fail("test_fraction must be in (0, 1)");
		          }
	          }},
	         {"split_seed", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.split_seed = parse_seed(c, k, v); }},
	         {"by_subject", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.by_subject = parse_bool(c, k, v); }},
	     }},
	    {"conversion",
	     {
	         {"percentile",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.percentile = parse_number(c, k, v);
		          if (!(cfg.percentile > 50.0 && cfg.percentile <= 100.0)) {
			          c.fail("percentile must be in (50, 100]");
		          }
	          }},
	         {"calibration_samples", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.calibration_samples = parse_count(c, k, v); }},
	     }},
	    {"simulation",
	     {
	         {"duration_ms",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.sim.duration_ms = parse_number(c, k, v);
		          if (cfg.sim.duration_ms <= 0.0) {
			          c.fail("duration_ms must be positive");
		          }
	          }},
	         {"dt_ms",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.sim.dt_ms = parse_number(c, k, v);
		          if (cfg.sim.dt_ms <= 0.0) {
			          c.fail("dt_ms must be positive");
		          }
	          }},
	         {"input_rate_hz",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.sim.input_rate_hz = parse_number(c, k, v);
		          if (cfg.sim.input_rate_hz <= 0.0) {
			          c.fail("input_rate_hz must be positive");
		          }
	          }},
	         {"batch_size", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.sim.batch_size = parse_count(c, k, v); }},
	         {"num_runs", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.sim.num_runs = parse_count(c, k, v); }},
	         {"evaluate_ann", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.sim.evaluate_ann = parse_bool(c, k, v); }},
	         {"seed", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.sim.seed = parse_seed(c, k, v); }},
	         {"threads", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.sim.threads = parse_count(c, k, v, 0); }},
	     }},
	    {"stdp",
	     {
	         {"a_plus",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.stdp.a_plus = parse_number(c, k, v);
		          if (cfg.stdp.a_plus <= 0.0) {
			          c.fail("a_plus must be positive");
		          }
	          }},
	         {"a_minus",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.stdp.a_minus = parse_number(c, k, v);
		          if (cfg.stdp.a_minus <= 0.0) {
			          c.fail("a_minus must be positive");
		          }
	          }},
	         {"tau_plus_ms",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.stdp.tau_plus_ms = parse_number(c, k, v);
		          if (cfg.stdp.tau_plus_ms <= 0.0) {
			          c.fail("tau_plus_ms must be positive");
		          }
	          }},
	         {"tau_minus_ms",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.stdp.tau_minus_ms = parse_number(c, k, v);
		          if (cfg.stdp.tau_minus_ms <= 0.0) {
			          c.fail("tau_minus_ms must be positive");
		          }
	          }},
	         {"w_min", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.stdp.w_min = parse_number(c, k, v); }},
	         {"w_max", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.stdp.w_max = parse_number(c, k, v); }},
	         {"arch", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.stdp_arch = parse_size_list(c, k, v); }},
	         {"epochs", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.stdp_epochs = parse_count(c, k, v, 0); }},
	         {"seed", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.stdp_seed = parse_seed(c, k, v); }},
	         {"threshold",
	          [&](const ParseCtx &c, const std::string &k, const std::string &v) {
		          cfg.stdp_threshold = parse_number(c, k, v);
		          if (cfg.stdp_threshold <= 0.0) {
			          c.fail("threshold must be positive");
		          }
	          }},
	     }},
	    {"report",
	     {
	         {"correlation_samples", [&](const ParseCtx &c, const std::string &k, const std::string &v) { cfg.correlation_samples = parse_count(c, k, v); }},
	     }},
	};

	std::istringstream in(text);
	std::string raw;
	while (std::getline(in, raw)) {
		ctx.line++;
		std::string line = raw;
		const std::size_t hash = line.find('#');
		if (hash != std::string::npos) {
			line = line.substr(0, hash);
		}
		line = trim(line);
		if (line.empty()) {
			continue;
		}
		if (line.front() == '[') {
			if (line.back() != ']') {
				ctx.fail("unterminated section header '" + line + "'");
			}
			section = trim(line.substr(1, line.size() - 2));
			if (schema.find(section) == schema.end()) {
				ctx.fail("unknown section [" + section + "]");
			}
			continue;
		}
		const std::size_t eq = line.find('=');
		if (eq == std::string::npos) {
			ctx.fail("expected 'key = value', got '" + line + "'");
		}
		const std::string key = trim(line.substr(0, eq));
		const std::string value = trim(line.substr(eq + 1));
		if (section.empty()) {
			ctx.fail("key '" + key + "' appears before any [section]");
		}
		const auto &keys = schema.at(section);
		auto it = keys.find(key);
		if (it == keys.end()) {
			ctx.fail("unknown key '" + key + "' in [" + section + "]");
		}
		if (value.empty()) {
			ctx.fail("key '" + key + "' has an empty value");
		}
		it->second(ctx, key, value);
	}

	// Cross-key constraints, reported against the whole file.
	ctx.line = 0;
	if (!(cfg.stdp.w_min < cfg.stdp.w_max)) {
		throw std::runtime_error(name + ": [stdp] w_min must be below w_max");
	}
	try {
		cfg.sim.validate();
	}
	catch (const std::exception &e) {
		throw std::runtime_error(name + ": [simulation] " + e.what());
	}
	return cfg;
}

PipelineConfig parse_config(const std::filesystem::path &path)
{
	std::ifstream in(path);
	if (!in) {
		throw std::runtime_error("parse_config: cannot open " + path.string());
	}
	std::stringstream buf;
	buf << in.rdbuf();
	return parse_config_text(buf.str(), path.string());
}

}  // namespace spikeforge
