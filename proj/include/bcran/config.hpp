#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcran/dcf.hpp"
#include "bcran/ledger.hpp"
#include "bcran/market.hpp"
#include "bcran/topology.hpp"

#include "json.hpp"

namespace bcran {

enum class InterferenceMode {
    // Cells where the serving operator currently holds no resources reuse
    // the band and interfere; its own coordinated cells do not.
    holder_coordinated,
    // Every other cell interferes.
    all_cells
};

struct ProfileMix {
    double low = 1.0 / 3.0;
    double average = 1.0 / 3.0;
    double high = 1.0 / 3.0;
};

struct SimConfig {
    uint64_t seed = 1;
    int replications = 1;
    double horizon_s = 600.0;
    double epoch_s = 1.0;  // demand-change period

    int64_t tx_size_bits = 3000;
    double lambda_tps = 1.0;         // open-loop arrival rate for the ledger presets
    int64_t workload_tx_count = 2000;  // transactions per grid point in those presets

    int num_cells = 19;
    double cell_radius_m = 10.0;
    RadioParams radio;
    InterferenceMode interference = InterferenceMode::holder_coordinated;

    int n_users = 200;
    ProfileMix profile_mix;
    std::array<UserProfile, 3> profiles = default_profiles();

    int n_operators = 2;
    std::vector<double> ownership_ratios;  // empty -> equal split
    int slices_per_cell = 10;
    double lease_duration_s = 10.0;
    double lease_price_min = 0.1;
    double lease_price_max = 1.0;
    AuctionPolicy policy;
    double acceptance_c = 5.0;
    bool dynamic_sharing = true;
    bool reauction_each_epoch = true;

    LedgerConfig public_ledger = default_public_ledger();
    LedgerConfig private_ledger = default_private_ledger();
    DcfParams dcf;

    static std::array<UserProfile, 3> default_profiles();
    static LedgerConfig default_public_ledger();
    static LedgerConfig default_private_ledger();

    // Copies the shared DCF parameters into any dcf-backed ledger link.
    SimConfig finalized() const;
};

// Aggregated validation failures, one entry per offending key path.
class ConfigValidationError : public std::runtime_error {
 public:
    explicit ConfigValidationError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

 private:
    std::vector<std::string> issues_;
};

// Builds a config from JSON; every unknown key, type mismatch, and invariant
// violation is collected and reported in one ConfigValidationError.
SimConfig config_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const SimConfig& cfg);

uint64_t config_hash(const SimConfig& cfg);

// Reads and parses a JSON file. Syntax errors surface with the parser's
// line/byte position; validation errors aggregate as above.
SimConfig parse_config_file(const std::string& path);

// Applies a dotted-path override such as "market.operators=3". The value is
// parsed as JSON when possible and falls back to a plain string.
void apply_override(nlohmann::json& j, const std::string& dotted_key, const std::string& value);

}  // namespace bcran
