#pragma once

#include "kcs/config.hpp"

namespace kcs {

// Executes the task described by the config (fit | ci | simulate | band),
// writing artifacts into the configured output directory. Returns a process
// exit status; failures print the error chain to stderr.
int run(const ConfigFile& cfg);

}  // namespace kcs
