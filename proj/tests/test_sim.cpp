#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bcran/sim.hpp"

using namespace bcran;

namespace {

// Small, fast scenario: one ring of cells, quick chains.
SimConfig small_config() {
    SimConfig cfg;
    cfg.num_cells = 7;
    cfg.n_users = 30;
    cfg.n_operators = 2;
    cfg.horizon_s = 40.0;
    cfg.epoch_s = 1.0;
    cfg.public_ledger.max_wait_s = 0.5;
    cfg.private_ledger.max_wait_s = 0.5;
    cfg.lease_duration_s = 5.0;
    return cfg;
}

}  // namespace

TEST_CASE("zero horizon yields an empty series") {
    SimConfig cfg = small_config();
    cfg.horizon_s = 0.0;
    const ScenarioMetrics m = run_scenario(cfg, 1);
    CHECK(m.series.empty());
    CHECK(m.service_requests == 0);
}

TEST_CASE("degenerate single user, single operator") {
    SimConfig cfg;
    cfg.num_cells = 1;
    cfg.n_users = 1;
    cfg.n_operators = 1;
    cfg.horizon_s = 20.0;
    cfg.public_ledger.max_wait_s = 0.2;
    cfg.private_ledger.max_wait_s = 0.2;
    // Pin the demand so the expected capacity is reproducible here.
    for (UserProfile& p : cfg.profiles) {
        p.demand_min = 0.4;
        p.demand_max = 0.4;
    }
    const uint64_t seed = 11;
    const ScenarioMetrics m = run_scenario(cfg, seed);

    // The sole operator always wins, and once the award chain confirms the
    // user gets its full demand from the only cell.
    const Topology topo = build_hex_deployment(1, cfg.cell_radius_m, cfg.radio);
    const auto users = drop_users(topo, 1, substream_seed(seed, "topology"));
    const double sinr = sinr_linear(users[0], topo, {});
    const double expected = capacity_bps(0.4 * cfg.radio.bandwidth_hz, sinr);

    bool served_seen = false;
    for (const EpochRecord& r : m.series) {
        if (r.active_subscriptions == 1 && r.aggregate_capacity_bps > 0.0) {
            served_seen = true;
            CHECK(r.aggregate_capacity_bps == doctest::Approx(expected).epsilon(1e-9));
            CHECK(r.mean_ap_load == doctest::Approx(0.4).epsilon(1e-9));
        }
    }
    CHECK(served_seen);
    CHECK(m.unserved_awards == 0);
}

TEST_CASE("auction conservation audit over the trace") {
    const SimConfig cfg = small_config();
    const ScenarioMetrics m = run_scenario(cfg, 3);
    REQUIRE(m.service_requests > 0);

    // Each confirmed request resolves exactly one auction, and each auction
    // submits exactly one award transaction, so the public chain carried
    // requests + auctions and confirmed auctions + activations.
    CHECK(m.public_ledger.submitted == m.service_requests + m.service_auctions);
    CHECK(m.public_ledger.confirmed == m.service_auctions + m.service_awards_activated);
    CHECK(m.rejected_requests == 0);

    // Whatever is not resolved is still in flight at the horizon.
    const int64_t pending_requests = m.service_requests - m.service_auctions;
    const int64_t pending_awards =
        m.service_auctions - m.rejected_requests - m.service_awards_activated;
    CHECK(pending_requests >= 0);
    CHECK(pending_awards >= 0);
    CHECK(m.public_ledger.submitted - m.public_ledger.confirmed ==
          pending_requests + pending_awards);
}

TEST_CASE("demand redraws stay inside the profile ranges") {
    SimConfig cfg;
    const auto& profiles = cfg.profiles;
    std::vector<UserEquipment> users(3);
    for (int i = 0; i < 3; ++i) users[static_cast<std::size_t>(i)].profile = i;

    Rng rng(77);
    double sums[3] = {0, 0, 0};
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        demand_epoch(users, std::span<const UserProfile>(profiles.data(), profiles.size()), rng);
        for (int p = 0; p < 3; ++p) {
            const double d = users[static_cast<std::size_t>(p)].demand_share;
            CHECK(d >= profiles[static_cast<std::size_t>(p)].demand_min);
            CHECK(d <= profiles[static_cast<std::size_t>(p)].demand_max);
            sums[p] += d;
        }
    }
    for (int p = 0; p < 3; ++p) {
        const UserProfile& prof = profiles[static_cast<std::size_t>(p)];
        const double mid = (prof.demand_min + prof.demand_max) / 2.0;
        const double sigma = (prof.demand_max - prof.demand_min) / std::sqrt(12.0) / std::sqrt(n);
        CHECK(std::abs(sums[p] / n - mid) < 3.0 * sigma);
    }
}

TEST_CASE("replication summaries: mean and confidence interval") {
    const std::vector<double> one = {2.5};
    const SummaryStat single = aggregate_metrics(one);
    CHECK(single.mean == doctest::Approx(2.5));
    CHECK(single.ci95_half == doctest::Approx(0.0));

    const std::vector<double> same = {1.0, 1.0, 1.0, 1.0};
    CHECK(aggregate_metrics(same).ci95_half == doctest::Approx(0.0));

    const std::vector<double> vals = {1.0, 2.0, 3.0, 4.0};
    const SummaryStat s = aggregate_metrics(vals);
    CHECK(s.mean == doctest::Approx(2.5).epsilon(1e-12));
    // Closed form: sd = sqrt(5/3), half width = 1.959963985 * sd / 2.
    CHECK(s.ci95_half ==
          doctest::Approx(1.959963985 * std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-9));
    CHECK_THROWS_AS(aggregate_metrics(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("scenario runs are deterministic per (config, seed)") {
    const SimConfig cfg = small_config();
    const ScenarioMetrics a = run_scenario(cfg, 42);
    const ScenarioMetrics b = run_scenario(cfg, 42);
    REQUIRE(a.series.size() == b.series.size());
    for (std::size_t i = 0; i < a.series.size(); ++i) {
        CHECK(a.series[i].aggregate_capacity_bps == b.series[i].aggregate_capacity_bps);
        CHECK(a.series[i].mean_acceptance == b.series[i].mean_acceptance);
        CHECK(a.series[i].active_leases == b.series[i].active_leases);
    }
    CHECK(a.public_ledger.tc_sum == b.public_ledger.tc_sum);
    CHECK(a.leases_granted == b.leases_granted);

    const ScenarioMetrics c = run_scenario(cfg, 43);
    CHECK(c.public_ledger.tc_sum != a.public_ledger.tc_sum);
}

TEST_CASE("common random numbers: modes share the public-chain trace") {
    const SimConfig cfg = small_config();
    const auto [stat, dyn] = compare_static_dynamic(cfg, 7);

    // The sharing toggle must not perturb the service side at all.
    CHECK(stat.public_ledger.submitted == dyn.public_ledger.submitted);
    CHECK(stat.public_ledger.tc_sum == dyn.public_ledger.tc_sum);
    CHECK(stat.service_auctions == dyn.service_auctions);
    CHECK(stat.service_awards_activated == dyn.service_awards_activated);

    // Only the dynamic run trades resources.
    CHECK(stat.leases_granted == 0);
    CHECK(stat.private_ledger.submitted == 0);
    CHECK(dyn.ran_requests > 0);
}

TEST_CASE("monopolized ownership: static starves, dynamic leases") {
    SimConfig cfg = small_config();
    cfg.n_users = 40;
    cfg.horizon_s = 60.0;
    cfg.ownership_ratios = {1.0, 0.0};
    const auto [stat, dyn] = compare_static_dynamic(cfg, 19);

    CHECK(stat.unserved_awards > 0);
    CHECK(dyn.leases_granted > 0);
    CHECK(dyn.mean_acceptance() > stat.mean_acceptance());
    CHECK(dyn.mean_capacity_bps() >= stat.mean_capacity_bps());
}

TEST_CASE("AP load stays in [0, 1] and acceptance in [0, 1)") {
    const SimConfig cfg = small_config();
    const ScenarioMetrics m = run_scenario(cfg, 23);
    REQUIRE(!m.series.empty());
    for (const EpochRecord& r : m.series) {
        CHECK(r.mean_ap_load >= 0.0);
        CHECK(r.mean_ap_load <= 1.0);
        CHECK(r.mean_acceptance >= 0.0);
        CHECK(r.mean_acceptance < 1.0);
        CHECK(r.aggregate_capacity_bps >= 0.0);
    }
}
