#pragma once

#include <string>
#include <vector>

#include "cibm/config.hpp"

namespace cibm {

// Command entry points; each writes its artifacts under cfg.out and throws on
// error. run_cli dispatches `cibm <command> [--config f] [--key value ...]`,
// prints errors to stderr and returns the process exit code (0 iff no error).

void cmd_train(const TrainConfig& cfg);
void cmd_eval(const TrainConfig& cfg);
void cmd_intervene(const TrainConfig& cfg);
void cmd_leakage(const TrainConfig& cfg);
void cmd_corrupt_sweep(const TrainConfig& cfg);
void cmd_infoplane(const TrainConfig& cfg);
void cmd_gendata(const TrainConfig& cfg);

int run_cli(const std::vector<std::string>& args);

}  // namespace cibm
