#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "bcran/config.hpp"

namespace bcran {

struct ExperimentPreset {
    std::string name;
    std::string description;
};

const std::vector<ExperimentPreset>& experiment_presets();
bool is_experiment(const std::string& name);

// Runs one named experiment and writes its CSV outputs into out_dir.
//   bc-delay        confirmation delay across block size, timer and arrival
//                   rate, both chains
//   bc-overhead     propagated-bit overhead across the same grid
//   sharing-random  static vs dynamic sharing across operator counts and
//                   user profiles
//   mno-mvno        two-operator ownership case study, time series output
// Returns 0 on success, 1 on runtime failure, 2 for an unknown preset.
int run_experiment(const std::string& name, const SimConfig& base, const std::string& out_dir,
                   uint64_t seed, int replications, std::ostream& log);

}  // namespace bcran
