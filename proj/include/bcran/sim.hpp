#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bcran/config.hpp"
#include "bcran/ledger.hpp"
#include "bcran/market.hpp"
#include "bcran/topology.hpp"

namespace bcran {

struct EpochRecord {
    double t = 0.0;
    double aggregate_capacity_bps = 0.0;
    double mean_acceptance = 0.0;
    double mean_ap_load = 0.0;
    int active_subscriptions = 0;
    int zero_allocation_subs = 0;
    int active_leases = 0;
};

struct ScenarioMetrics {
    std::vector<EpochRecord> series;
    LedgerMetrics public_ledger;
    LedgerMetrics private_ledger;

    int64_t service_requests = 0;          // request transactions submitted
    int64_t service_auctions = 0;          // auctions resolved (one per confirmed request)
    int64_t service_awards_activated = 0;  // award transactions confirmed
    int64_t rejected_requests = 0;         // auctions with no eligible operator
    int64_t unserved_awards = 0;           // awards retired without ever delivering
    int64_t ran_requests = 0;
    int64_t leases_granted = 0;
    int64_t lease_reversions = 0;

    double mean_capacity_bps() const;
    double mean_acceptance() const;
    double mean_ap_load() const;
};

// One full scenario at one seed: hex deployment, user drop, per-epoch demand
// redraws, service auctions gated by public-chain confirmations, deficit-
// driven resource leases gated by private-chain confirmations, and per-epoch
// capacity / acceptance / load evaluation. Deterministic per (config, seed).
ScenarioMetrics run_scenario(const SimConfig& cfg, uint64_t seed);

// Runs the same seed with resource trading disabled and enabled. All RNG
// substreams are shared, so the pair differs only by the trading mechanism.
std::pair<ScenarioMetrics, ScenarioMetrics> compare_static_dynamic(const SimConfig& cfg,
                                                                   uint64_t seed);

// Redraws every user's demand share uniformly inside its profile range.
void demand_epoch(std::vector<UserEquipment>& users, std::span<const UserProfile> profiles,
                  Rng& rng);

struct SummaryStat {
    double mean = 0.0;
    double ci95_half = 0.0;  // zero width for a single replication
};

SummaryStat aggregate_metrics(std::span<const double> values);

}  // namespace bcran
