#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "spikeforge/config.hpp"

namespace spikeforge {

/// Stable artifact names inside the workdir; stages are re-runnable because
/// each one consumes these and nothing else.
struct WorkdirLayout {
	std::filesystem::path root;

	std::filesystem::path dataset() const { return root / "dataset.npz"; }
	std::filesystem::path ann() const { return root / "ann.npz"; }
	std::filesystem::path connections() const { return root / "connections"; }
	std::filesystem::path reports() const { return root / "reports"; }
	std::filesystem::path stdp_layers() const { return root / "stdp_layers.npz"; }
	std::filesystem::path stdp_assignment() const { return root / "stdp_assignment.json"; }
	std::filesystem::path evaluation() const { return reports() / "evaluation.json"; }
};

/// Raised when a stage's inputs are missing; names the stage to run first.
struct MissingPrerequisite : std::runtime_error {
	std::string stage_to_run;

	MissingPrerequisite(const std::string &missing, const std::string &stage)
	    : std::runtime_error(missing + " not found; run `" + stage + "` first"),
	      stage_to_run(stage)
	{
	}
};

/**
 * @brief Runs one pipeline stage: prepare-data, train-ann, convert,
 * export-connections, simulate, stdp-train or report.
 *
 * Exit codes: 0 success, 1 internal failure, 2 missing prerequisite
 * (the message names the stage to run first). Re-running a stage with the
 * same config and seeds rewrites its artifacts byte-identically.
 */
int run_subcommand(const std::string &name, const PipelineConfig &cfg, std::ostream &out,
                   std::ostream &err);

/// Options only some subcommands honor (kept out of PipelineConfig).
struct SubcommandExtras {
	std::string export_source = "ann";  // ann | stdp
	std::string export_out;             // empty = <workdir>/connections-export
};

int run_subcommand(const std::string &name, const PipelineConfig &cfg,
                   const SubcommandExtras &extras, std::ostream &out, std::ostream &err);

}  // namespace spikeforge
