#pragma once

#include "mdlab/config.hpp"

namespace mdlab {

/// Batch subcommands: deterministic primary outputs (CSV or JSON tables)
/// plus one provenance sidecar per command under cfg.outDir(). Throwing
/// maps onto the CLI exit codes (2 config, 3 precondition, 4 invariant).
void cmdSimulate(const ExperimentConfig& cfg);
void cmdCoeffs(const ExperimentConfig& cfg);
void cmdBound(const ExperimentConfig& cfg);
void cmdVerify(const ExperimentConfig& cfg);
void cmdRate(const ExperimentConfig& cfg);
void cmdCvm(const ExperimentConfig& cfg);
void cmdLil(const ExperimentConfig& cfg);
void cmdBlocks(const ExperimentConfig& cfg);

}  // namespace mdlab
