#include "bcran/presets.hpp"

#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include "bcran/csv.hpp"
#include "bcran/sim.hpp"

namespace bcran {

namespace {

// Work-stealing loop over independent grid points; results land in
// index-addressed slots so output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers_n = std::min<std::size_t>(hw, n);
    if (workers_n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> workers;
    workers.reserve(workers_n);
    for (std::size_t w = 0; w < workers_n; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

const std::vector<int64_t> kBlockSizeSweep = {3000,  6000,  9000,  12000, 15000,
                                              18000, 21000, 24000, 27000, 30000};
const std::vector<double> kWaitSweep = {0.1, 5.0};
const std::vector<double> kLambdaSweep = {0.1, 1.0, 10.0, 100.0};

std::string provenance_line(const std::string& preset, const SimConfig& cfg, uint64_t seed,
                            int replications) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    return "preset=" + preset + " config_hash=" + buf + " seed=" + std::to_string(seed) +
           " replications=" + std::to_string(replications);
}

std::string out_path(const std::string& out_dir, const std::string& file) {
    return (std::filesystem::path(out_dir) / file).string();
}

struct LedgerGridPoint {
    std::string ledger_name;
    int64_t block_size_bits = 0;
    double t_wait_s = 0.0;
    double lambda_tps = 0.0;
    uint64_t seed = 0;
    LedgerMetrics metrics;
};

std::vector<LedgerGridPoint> run_ledger_grid(const SimConfig& base, uint64_t seed,
                                             int replications) {
    const SimConfig cfg = base.finalized();
    std::vector<LedgerGridPoint> points;
    for (const char* ledger_name : {"public", "private"}) {
        for (int64_t sb : kBlockSizeSweep) {
            for (double tw : kWaitSweep) {
                for (double lambda : kLambdaSweep) {
                    for (int rep = 0; rep < replications; ++rep) {
                        LedgerGridPoint p;
                        p.ledger_name = ledger_name;
                        p.block_size_bits = sb;
                        p.t_wait_s = tw;
                        p.lambda_tps = lambda;
                        p.seed = seed + static_cast<uint64_t>(rep);
                        points.push_back(std::move(p));
                    }
                }
            }
        }
    }
    parallel_for(points.size(), [&](std::size_t i) {
        LedgerGridPoint& p = points[i];
        LedgerConfig lc = p.ledger_name == "public" ? cfg.public_ledger : cfg.private_ledger;
        lc.block_size_bits = p.block_size_bits;
        lc.max_wait_s = p.t_wait_s;
        const std::string label = "grid/" + p.ledger_name + "/" + std::to_string(p.block_size_bits) +
                                  "/" + format_sig9(p.t_wait_s) + "/" + format_sig9(p.lambda_tps);
        p.metrics = run_poisson_workload(lc, p.lambda_tps, cfg.tx_size_bits, cfg.workload_tx_count,
                                         substream_seed(p.seed, label));
    });
    return points;
}

int preset_bc_delay(const SimConfig& base, const std::string& out_dir, uint64_t seed,
                    int replications, std::ostream& log) {
    const auto points = run_ledger_grid(base, seed, replications);
    CsvWriter csv({"preset", "seed", "ledger", "S_B_bits", "T_wait_s", "lambda_tps", "mean_Tc_s",
                   "p_fork_emp", "mean_Tqueue_s", "mean_Tmine_s", "mean_Tprop_s", "n_tx"});
    csv.set_provenance(provenance_line("bc-delay", base, seed, replications));
    for (const LedgerGridPoint& p : points) {
        const LedgerMetrics& m = p.metrics;
        csv.add_row({"bc-delay", std::to_string(p.seed), p.ledger_name,
                     std::to_string(p.block_size_bits), format_sig9(p.t_wait_s),
                     format_sig9(p.lambda_tps), format_sig9(m.mean_tc()),
                     format_sig9(m.p_fork_empirical()), format_sig9(m.mean_queue()),
                     format_sig9(m.mean_mine()), format_sig9(m.mean_prop()),
                     std::to_string(m.confirmed)});
    }
    const std::string path = out_path(out_dir, "bc_delay.csv");
    csv.write_file(path);
    log << "wrote " << path << " (" << csv.rows() << " rows)\n";
    return 0;
}

int preset_bc_overhead(const SimConfig& base, const std::string& out_dir, uint64_t seed,
                       int replications, std::ostream& log) {
    const auto points = run_ledger_grid(base, seed, replications);
    CsvWriter csv({"preset", "seed", "ledger", "S_B_bits", "T_wait_s", "lambda_tps",
                   "overhead_ratio", "p_fork_emp", "blocks_appended", "blocks_orphaned",
                   "bits_propagated", "n_tx"});
    csv.set_provenance(provenance_line("bc-overhead", base, seed, replications));
    for (const LedgerGridPoint& p : points) {
        const LedgerMetrics& m = p.metrics;
        csv.add_row({"bc-overhead", std::to_string(p.seed), p.ledger_name,
                     std::to_string(p.block_size_bits), format_sig9(p.t_wait_s),
                     format_sig9(p.lambda_tps), format_sig9(overhead_ratio(m)),
                     format_sig9(m.p_fork_empirical()), std::to_string(m.blocks_appended),
                     std::to_string(m.blocks_orphaned), std::to_string(m.total_bits_propagated()),
                     std::to_string(m.confirmed)});
    }
    const std::string path = out_path(out_dir, "bc_overhead.csv");
    csv.write_file(path);
    log << "wrote " << path << " (" << csv.rows() << " rows)\n";
    return 0;
}

int preset_sharing_random(const SimConfig& base, const std::string& out_dir, uint64_t seed,
                          int replications, std::ostream& log) {
    struct Run {
        int operators = 0;
        int profile = 0;
        bool dynamic_mode = false;
        uint64_t seed = 0;
        ScenarioMetrics metrics;
    };
    static const char* profile_names[3] = {"low", "average", "high"};
    std::vector<Run> runs;
    for (int m = 2; m <= 5; ++m)
        for (int prof = 0; prof < 3; ++prof)
            for (int mode = 0; mode < 2; ++mode)
                for (int rep = 0; rep < replications; ++rep)
                    runs.push_back(Run{m, prof, mode == 1, seed + static_cast<uint64_t>(rep), {}});

    parallel_for(runs.size(), [&](std::size_t i) {
        Run& r = runs[i];
        SimConfig cfg = base;
        cfg.n_operators = r.operators;
        cfg.ownership_ratios.clear();  // equal split across operators
        cfg.profile_mix = ProfileMix{r.profile == 0 ? 1.0 : 0.0, r.profile == 1 ? 1.0 : 0.0,
                                     r.profile == 2 ? 1.0 : 0.0};
        cfg.dynamic_sharing = r.dynamic_mode;
        r.metrics = run_scenario(cfg, r.seed);
    });

    CsvWriter csv({"preset", "seed", "mode", "operators", "profile", "mean_capacity_bps",
                   "mean_acceptance", "mean_ap_load", "n_auctions", "n_unserved", "n_leases"});
    csv.set_provenance(provenance_line("sharing-random", base, seed, replications));
    for (const Run& r : runs) {
        csv.add_row({"sharing-random", std::to_string(r.seed), r.dynamic_mode ? "dynamic" : "static",
                     std::to_string(r.operators), profile_names[r.profile],
                     format_sig9(r.metrics.mean_capacity_bps()),
                     format_sig9(r.metrics.mean_acceptance()), format_sig9(r.metrics.mean_ap_load()),
                     std::to_string(r.metrics.service_auctions),
                     std::to_string(r.metrics.unserved_awards),
                     std::to_string(r.metrics.leases_granted)});
    }
    const std::string path = out_path(out_dir, "sharing_random.csv");
    csv.write_file(path);
    log << "wrote " << path << " (" << csv.rows() << " rows)\n";
    return 0;
}

int preset_mno_mvno(const SimConfig& base, const std::string& out_dir, uint64_t seed,
                    int replications, std::ostream& log) {
    struct Run {
        std::string ownership;
        std::vector<double> ratios;
        bool dynamic_mode = false;
        uint64_t seed = 0;
        ScenarioMetrics metrics;
    };
    std::vector<Run> runs;
    const std::vector<std::pair<std::string, std::vector<double>>> arms = {
        {"1.0-0.0", {1.0, 0.0}}, {"0.5-0.5", {0.5, 0.5}}};
    for (const auto& arm : arms)
        for (int mode = 0; mode < 2; ++mode)
            for (int rep = 0; rep < replications; ++rep)
                runs.push_back(Run{arm.first, arm.second, mode == 1, seed + static_cast<uint64_t>(rep), {}});

    parallel_for(runs.size(), [&](std::size_t i) {
        Run& r = runs[i];
        SimConfig cfg = base;
        cfg.n_operators = 2;
        cfg.ownership_ratios = r.ratios;
        cfg.dynamic_sharing = r.dynamic_mode;
        r.metrics = run_scenario(cfg, r.seed);
    });

    CsvWriter series({"preset", "seed", "mode", "ownership", "t_s", "aggregate_capacity_bps",
                      "mean_acceptance", "mean_ap_load", "n_zero_alloc", "active_leases"});
    series.set_provenance(provenance_line("mno-mvno", base, seed, replications));
    CsvWriter summary({"preset", "seed", "mode", "ownership", "mean_capacity_bps",
                       "mean_acceptance", "mean_ap_load", "n_unserved", "n_leases"});
    summary.set_provenance(provenance_line("mno-mvno", base, seed, replications));
    for (const Run& r : runs) {
        const std::string mode = r.dynamic_mode ? "dynamic" : "static";
        for (const EpochRecord& rec : r.metrics.series) {
            series.add_row({"mno-mvno", std::to_string(r.seed), mode, r.ownership,
                            format_sig9(rec.t), format_sig9(rec.aggregate_capacity_bps),
                            format_sig9(rec.mean_acceptance), format_sig9(rec.mean_ap_load),
                            std::to_string(rec.zero_allocation_subs),
                            std::to_string(rec.active_leases)});
        }
        summary.add_row({"mno-mvno", std::to_string(r.seed), mode, r.ownership,
                         format_sig9(r.metrics.mean_capacity_bps()),
                         format_sig9(r.metrics.mean_acceptance()),
                         format_sig9(r.metrics.mean_ap_load()),
                         std::to_string(r.metrics.unserved_awards),
                         std::to_string(r.metrics.leases_granted)});
    }
    const std::string series_path = out_path(out_dir, "mno_mvno_timeseries.csv");
    const std::string summary_path = out_path(out_dir, "mno_mvno_summary.csv");
    series.write_file(series_path);
    summary.write_file(summary_path);
    log << "wrote " << series_path << " (" << series.rows() << " rows)\n";
    log << "wrote " << summary_path << " (" << summary.rows() << " rows)\n";
    return 0;
}

}  // namespace

const std::vector<ExperimentPreset>& experiment_presets() {
    static const std::vector<ExperimentPreset> presets = {
        {"bc-delay", "confirmation delay vs block size, timer and arrival rate, both chains"},
        {"bc-overhead", "propagated-bit overhead over the same grid"},
        {"sharing-random", "static vs dynamic sharing across operator counts and user profiles"},
        {"mno-mvno", "two-operator ownership case study with per-epoch time series"},
    };
    return presets;
}

bool is_experiment(const std::string& name) {
    for (const ExperimentPreset& p : experiment_presets())
        if (p.name == name) return true;
    return false;
}

int run_experiment(const std::string& name, const SimConfig& base, const std::string& out_dir,
                   uint64_t seed, int replications, std::ostream& log) {
    if (!is_experiment(name)) {
        log << "unknown experiment '" << name << "'; valid names:\n";
        for (const ExperimentPreset& p : experiment_presets())
            log << "  " << p.name << "  -  " << p.description << "\n";
        return 2;
    }
    if (replications < 1) {
        log << "replications must be >= 1\n";
        return 2;
    }
    std::filesystem::create_directories(out_dir);
    if (name == "bc-delay") return preset_bc_delay(base, out_dir, seed, replications, log);
    if (name == "bc-overhead") return preset_bc_overhead(base, out_dir, seed, replications, log);
    if (name == "sharing-random") return preset_sharing_random(base, out_dir, seed, replications, log);
    return preset_mno_mvno(base, out_dir, seed, replications, log);
}

}  // namespace bcran
