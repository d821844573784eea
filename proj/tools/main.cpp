#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bcran/config.hpp"
#include "bcran/csv.hpp"
#include "bcran/presets.hpp"
#include "bcran/sim.hpp"

namespace {

// Single-scenario mode: one time-series file plus one summary row per
// replication, written into out_dir.
int run_single(const bcran::SimConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string prov = [&] {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "0x%016llx",
                      static_cast<unsigned long long>(bcran::config_hash(cfg)));
        return "scenario config_hash=" + std::string(buf) + " seed=" + std::to_string(cfg.seed) +
               " replications=" + std::to_string(cfg.replications);
    }();

    bcran::CsvWriter series({"seed", "t_s", "aggregate_capacity_bps", "mean_acceptance",
                             "mean_ap_load", "active_subscriptions", "n_zero_alloc",
                             "active_leases"});
    series.set_provenance(prov);
    bcran::CsvWriter summary({"seed", "mean_capacity_bps", "mean_acceptance", "mean_ap_load",
                              "n_requests", "n_auctions", "n_unserved", "n_leases",
                              "public_mean_Tc_s", "private_mean_Tc_s"});
    summary.set_provenance(prov);

    std::vector<double> capacities;
    for (int rep = 0; rep < cfg.replications; ++rep) {
        const uint64_t seed = cfg.seed + static_cast<uint64_t>(rep);
        const bcran::ScenarioMetrics m = bcran::run_scenario(cfg, seed);
        for (const bcran::EpochRecord& r : m.series)
            series.add_row({std::to_string(seed), bcran::format_sig9(r.t),
                            bcran::format_sig9(r.aggregate_capacity_bps),
                            bcran::format_sig9(r.mean_acceptance),
                            bcran::format_sig9(r.mean_ap_load),
                            std::to_string(r.active_subscriptions),
                            std::to_string(r.zero_allocation_subs),
                            std::to_string(r.active_leases)});
        summary.add_row({std::to_string(seed), bcran::format_sig9(m.mean_capacity_bps()),
                         bcran::format_sig9(m.mean_acceptance()),
                         bcran::format_sig9(m.mean_ap_load()), std::to_string(m.service_requests),
                         std::to_string(m.service_auctions), std::to_string(m.unserved_awards),
                         std::to_string(m.leases_granted),
                         bcran::format_sig9(m.public_ledger.mean_tc()),
                         bcran::format_sig9(m.private_ledger.mean_tc())});
        capacities.push_back(m.mean_capacity_bps());
    }
    const std::string series_path = (std::filesystem::path(out_dir) / "scenario_timeseries.csv").string();
    const std::string summary_path = (std::filesystem::path(out_dir) / "scenario_summary.csv").string();
    series.write_file(series_path);
    summary.write_file(summary_path);

    const bcran::SummaryStat cap = bcran::aggregate_metrics(capacities);
    std::cout << "wrote " << series_path << "\n";
    std::cout << "wrote " << summary_path << "\n";
    std::cout << "mean aggregate capacity: " << bcran::format_sig9(cap.mean) << " bit/s (+/- "
              << bcran::format_sig9(cap.ci95_half) << ", 95% CI over " << cfg.replications
              << " replication" << (cfg.replications == 1 ? "" : "s") << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event simulator of blockchain-coordinated RAN sharing"};
    std::string config_path;
    std::string experiment;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_given = false;
    int replications = 0;
    std::vector<std::string> overrides;

    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--experiment", experiment, "experiment preset name");
    auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides config)");
    app.add_option("--replications", replications, "replication count (overrides config)");
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--set", overrides,
                   "dotted-path config override, e.g. --set market.operators=3 (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems exit 2, --help exits 0
    }
    seed_given = seed_opt->count() > 0;

    try {
        nlohmann::json raw = nlohmann::json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "cannot open config file: " << config_path << "\n";
                return 2;
            }
            try {
                raw = nlohmann::json::parse(in);
            } catch (const nlohmann::json::parse_error& e) {
                std::cerr << "JSON syntax error in " << config_path << ": " << e.what() << "\n";
                return 2;
            }
        }
        for (const std::string& kv : overrides) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) {
                std::cerr << "--set expects key=value, got '" << kv << "'\n";
                return 2;
            }
            bcran::apply_override(raw, kv.substr(0, eq), kv.substr(eq + 1));
        }

        bcran::SimConfig cfg = bcran::config_from_json(raw);
        if (seed_given) cfg.seed = seed;
        if (replications > 0) cfg.replications = replications;

        if (!experiment.empty())
            return bcran::run_experiment(experiment, cfg, out_dir, cfg.seed, cfg.replications,
                                         std::cout);
        return run_single(cfg, out_dir);
    } catch (const bcran::ConfigValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
