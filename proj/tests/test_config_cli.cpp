#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spikeforge/config.hpp"
#include "spikeforge/pipeline.hpp"
#include "spikeforge/sim.hpp"

using namespace spikeforge;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const std::string &tag)
{
	const fs::path dir = fs::temp_directory_path() / ("spikeforge_cli_" + tag);
	fs::remove_all(dir);
	fs::create_directories(dir);
	return dir;
}

std::string slurp(const fs::path &path)
{
	std::ifstream in(path, std::ios::binary);
	std::stringstream ss;
	ss << in.rdbuf();
	return ss.str();
}

}  // namespace

TEST_CASE("parse_config: empty file keeps every documented default")
{
	PipelineConfig cfg = parse_config_text("", "empty.ini");
	CHECK(cfg.sim.batch_size == 8);
	CHECK(cfg.sim.duration_ms == 200.0);
	CHECK(cfg.sim.num_runs == 20);
	CHECK(cfg.sim.input_rate_hz == 1000.0);
	CHECK(cfg.sim.evaluate_ann == true);
	CHECK(cfg.sim.dt_ms == 1.0);
	CHECK(cfg.percentile == 99.9);
	CHECK(cfg.lr == 0.01);
	CHECK(cfg.input_h == 32);
	CHECK(cfg.input_w == 32);
	CHECK(cfg.stdp.a_plus == 0.01);
	CHECK(cfg.stdp.a_minus == 0.012);
	CHECK(cfg.stdp.tau_plus_ms == 20.0);
	CHECK(cfg.stdp.w_min == 0.0);
	CHECK(cfg.stdp.w_max == 1.0);
}

TEST_CASE("parse_config: a single key overrides only that key")
{
	PipelineConfig cfg =
	    parse_config_text("[simulation]\nduration_ms = 50\n", "one.ini");
	CHECK(cfg.sim.duration_ms == 50.0);
	CHECK(cfg.sim.batch_size == 8);
	CHECK(cfg.sim.num_runs == 20);
}

TEST_CASE("parse_config: comments, whitespace, and several sections")
{
	const std::string text =
	    "# pipeline settings\n"
	    "[paths]\n"
	    "workdir = /tmp/w  # trailing comment\n"
	    "\n"
	    "[ann]\n"
	    "lr = 0.1\n"
	    "epochs = 3\n"
	    "[stdp]\n"
	    "arch = 64, 10\n";
	PipelineConfig cfg = parse_config_text(text, "multi.ini");
	CHECK(cfg.workdir == "/tmp/w");
	CHECK(cfg.lr == 0.1);
	CHECK(cfg.epochs == 3);
	REQUIRE(cfg.stdp_arch == std::vector<std::size_t>{64, 10});
}

TEST_CASE("parse_config: violations carry the file name and line number")
{
	CHECK_THROWS_WITH_AS(parse_config_text("[simulation]\nbatch_size = 0\n", "bad.ini"),
	                     doctest::Contains("bad.ini:2"), std::runtime_error);
	CHECK_THROWS_WITH_AS(parse_config_text("[simulation]\nbatch_size = 0\n", "bad.ini"),
	                     doctest::Contains(">= 1"), std::runtime_error);
	CHECK_THROWS_WITH_AS(parse_config_text("[simulation]\nnonsense = 1\n", "bad.ini"),
	                     doctest::Contains("unknown key 'nonsense'"), std::runtime_error);
	CHECK_THROWS_WITH_AS(parse_config_text("[florp]\n", "bad.ini"),
	                     doctest::Contains("unknown section"), std::runtime_error);
	CHECK_THROWS_WITH_AS(parse_config_text("[ann]\nlr = fast\n", "bad.ini"),
	                     doctest::Contains("not a number"), std::runtime_error);
	CHECK_THROWS_WITH_AS(parse_config_text("lr = 1\n", "bad.ini"),
	                     doctest::Contains("before any [section]"), std::runtime_error);
	CHECK_THROWS_WITH_AS(parse_config_text("[conversion]\npercentile = 40\n", "bad.ini"),
	                     doctest::Contains("(50, 100]"), std::runtime_error);
	// Cross-key constraint: duration must stay divisible by dt.
	CHECK_THROWS_WITH_AS(
	    parse_config_text("[simulation]\nduration_ms = 201\ndt_ms = 2\n", "bad.ini"),
	    doctest::Contains("divisible"), std::runtime_error);
	CHECK_THROWS_AS(parse_config(fs::path("/nonexistent/config.ini")), std::runtime_error);
}

namespace {

PipelineConfig toy_pipeline_config(const fs::path &workdir)
{
	PipelineConfig cfg;
	cfg.workdir = workdir.string();
	cfg.dataset_root = "synthetic:4";
	cfg.input_h = 12;
	cfg.input_w = 12;
	cfg.epochs = 2;
	cfg.lr = 0.1;
	cfg.seed = 5;
	cfg.split_seed = 6;
	cfg.calibration_samples = 16;
	cfg.sim.duration_ms = 40;
	cfg.sim.num_runs = 2;
	cfg.sim.seed = 7;
	cfg.correlation_samples = 4;
	cfg.stdp_arch = {4};
	cfg.stdp_epochs = 1;
	cfg.stdp_threshold = 3.0;
	return cfg;
}

int run_stage(const std::string &name, const PipelineConfig &cfg)
{
	std::ostringstream out, err;
	const int rc = run_subcommand(name, cfg, out, err);
	INFO(name, ": ", out.str(), err.str());
	return rc;
}

}  // namespace

TEST_CASE("pipeline: simulate before convert exits 2 and names convert")
{
	const fs::path wd = make_temp_dir("order");
	PipelineConfig cfg = toy_pipeline_config(wd);
	REQUIRE(run_stage("prepare-data", cfg) == 0);
	REQUIRE(run_stage("train-ann", cfg) == 0);
	std::ostringstream out, err;
	const int rc = run_subcommand("simulate", cfg, out, err);
	CHECK(rc == 2);
	CHECK(err.str().find("convert") != std::string::npos);
}

TEST_CASE("pipeline: report before simulate exits 2 and names simulate")
{
	const fs::path wd = make_temp_dir("order2");
	PipelineConfig cfg = toy_pipeline_config(wd);
	REQUIRE(run_stage("prepare-data", cfg) == 0);
	REQUIRE(run_stage("train-ann", cfg) == 0);
	REQUIRE(run_stage("convert", cfg) == 0);
	std::ostringstream out, err;
	const int rc = run_subcommand("report", cfg, out, err);
	CHECK(rc == 2);
	CHECK(err.str().find("simulate") != std::string::npos);
}

TEST_CASE("pipeline: unknown subcommand and internal failures map to exit 1")
{
	const fs::path wd = make_temp_dir("err1");
	PipelineConfig cfg = toy_pipeline_config(wd);
	std::ostringstream out, err;
	CHECK(run_subcommand("frobnicate", cfg, out, err) == 1);
	PipelineConfig broken = cfg;
	broken.dataset_root = "/nonexistent/directory";
	CHECK(run_subcommand("prepare-data", broken, out, err) == 1);
}

TEST_CASE("pipeline: full toy run twice produces byte-identical artifacts and reports")
{
	const fs::path wd_a = make_temp_dir("det_a");
	const fs::path wd_b = make_temp_dir("det_b");
	for (const auto &wd : {wd_a, wd_b}) {
		PipelineConfig cfg = toy_pipeline_config(wd);
		// Exercise thread-count independence along the way.
		cfg.sim.threads = (wd == wd_a) ? 1 : 4;
		for (const char *stage :
		     {"prepare-data", "train-ann", "convert", "simulate", "report", "stdp-train"}) {
			REQUIRE(run_stage(stage, cfg) == 0);
		}
	}
	for (const char *artifact :
	     {"dataset.npz", "ann.npz", "connections/populations.txt",
	      "connections/layer_0_to_1.txt", "reports/evaluation.json", "reports/accuracy.csv",
	      "reports/correlations.csv", "reports/summary.json", "stdp_layers.npz",
	      "stdp_assignment.json", "scales.json"}) {
		INFO(artifact);
		REQUIRE(slurp(wd_a / artifact) == slurp(wd_b / artifact));
	}

	// Idempotent re-run inside one workdir.
	PipelineConfig cfg = toy_pipeline_config(wd_a);
	cfg.sim.threads = 2;
	const std::string before = slurp(wd_a / "reports/summary.json");
	for (const char *stage : {"simulate", "report"}) {
		REQUIRE(run_stage(stage, cfg) == 0);
	}
	REQUIRE(slurp(wd_a / "reports/summary.json") == before);
}

TEST_CASE("pipeline: every artifact feeds the next stage without manual edits")
{
	const fs::path wd = make_temp_dir("chain");
	PipelineConfig cfg = toy_pipeline_config(wd);
	for (const char *stage : {"prepare-data", "train-ann", "convert", "simulate", "report"}) {
		REQUIRE(run_stage(stage, cfg) == 0);
	}
	CHECK(fs::exists(wd / "dataset.npz"));
	CHECK(fs::exists(wd / "ann.npz"));
	CHECK(fs::exists(wd / "connections" / "populations.txt"));
	CHECK(fs::exists(wd / "reports" / "summary.json"));
	CHECK(fs::exists(wd / "reports" / "final_layer_scatter.svg"));

	SubcommandExtras extras;
	extras.export_source = "ann";
	extras.export_out = (wd / "conn-copy").string();
	std::ostringstream out, err;
	REQUIRE(run_subcommand("export-connections", cfg, extras, out, err) == 0);
	CHECK(slurp(wd / "conn-copy" / "layer_0_to_1.txt") ==
	      slurp(wd / "connections" / "layer_0_to_1.txt"));

	REQUIRE(run_stage("stdp-train", cfg) == 0);
	extras.export_source = "stdp";
	extras.export_out = (wd / "stdp-conn").string();
	REQUIRE(run_subcommand("export-connections", cfg, extras, out, err) == 0);
	CHECK(fs::exists(wd / "stdp-conn" / "populations.txt"));
	CHECK(fs::exists(wd / "stdp-conn" / "label_assignment.json"));
}

#ifdef SPIKEFORGE_CLI_BIN
namespace {

int run_cli(const std::string &args, const fs::path &capture)
{
	const std::string cmd = std::string(SPIKEFORGE_CLI_BIN) + " " + args + " > " +
	                        capture.string() + " 2>&1";
	const int status = std::system(cmd.c_str());
	return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli: flag > config precedence and env-var workdir override")
{
	const fs::path wd = make_temp_dir("clibin");
	const fs::path cfg_file = wd / "cfg.ini";
	{
		std::ofstream f(cfg_file);
		f << "[paths]\nworkdir = " << (wd / "from_config").string() << "\n"
		  << "[ann]\nepochs = 1\nlr = 0.1\ninput_h = 12\ninput_w = 12\n"
		  << "[simulation]\nnum_runs = 5\nduration_ms = 30\nseed = 3\n";
	}
	const fs::path log = wd / "log.txt";

	// --workdir flag wins over the config file value.
	REQUIRE(run_cli("--config " + cfg_file.string() + " --workdir " + (wd / "flagged").string() +
	                    " prepare-data --dataset-root synthetic:3",
	                log) == 0);
	CHECK(fs::exists(wd / "flagged" / "dataset.npz"));
	CHECK_FALSE(fs::exists(wd / "from_config" / "dataset.npz"));

	// SPIKEFORGE_WORKDIR beats the config file when no flag is given.
	::setenv("SPIKEFORGE_WORKDIR", (wd / "enved").string().c_str(), 1);
	REQUIRE(run_cli("--config " + cfg_file.string() +
	                    " prepare-data --dataset-root synthetic:3",
	                log) == 0);
	::unsetenv("SPIKEFORGE_WORKDIR");
	CHECK(fs::exists(wd / "enved" / "dataset.npz"));

	// --num-runs beats the config file's 5.
	const std::string base = "--config " + cfg_file.string() + " --workdir " +
	                         (wd / "flagged").string() + " ";
	REQUIRE(run_cli(base + "train-ann", log) == 0);
	REQUIRE(run_cli(base + "convert", log) == 0);
	REQUIRE(run_cli(base + "simulate --num-runs 3", log) == 0);
	EvaluationReport eval =
	    read_evaluation_json(wd / "flagged" / "reports" / "evaluation.json");
	CHECK(eval.run_accuracies.size() == 3);
	CHECK(eval.config.num_runs == 3);

	// simulate in an empty workdir exits 2 and names convert.
	CHECK(run_cli("--workdir " + (wd / "fresh").string() + " simulate", log) == 2);
	CHECK(slurp(log).find("convert") != std::string::npos);

	// Config errors surface with their line number and exit 1.
	{
		std::ofstream f(wd / "broken.ini");
		f << "[simulation]\nbatch_size = 0\n";
	}
	CHECK(run_cli("--config " + (wd / "broken.ini").string() + " simulate", log) == 1);
	CHECK(slurp(log).find("broken.ini:2") != std::string::npos);
}

#ifdef GESTURE_GEN_BIN
TEST_CASE("cli: generated image tree feeds prepare-data unchanged")
{
	const fs::path wd = make_temp_dir("gen");
	const fs::path log = wd / "log.txt";
	const fs::path tree = wd / "tree";
	{
		const std::string cmd = std::string(GESTURE_GEN_BIN) + " --out " + tree.string() +
		                        " --samples 2 --height 16 --width 16 --seed 3 > " +
		                        log.string() + " 2>&1";
		REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
	}
	REQUIRE(fs::exists(tree / "subject_00" / "class_00" / "0000.pgm"));
	REQUIRE(run_cli("--workdir " + (wd / "w").string() +
	                    " prepare-data --dataset-root " + tree.string() +
	                    " --input-h 12 --input-w 12",
	                log) == 0);
	CHECK(fs::exists(wd / "w" / "dataset.npz"));
	CHECK(slurp(log).find("160 train / 40 test") != std::string::npos);
}
#endif
#endif
