#include "bcran/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "bcran/events.hpp"

namespace bcran {

double ScenarioMetrics::mean_capacity_bps() const {
    if (series.empty()) return 0.0;
    double s = 0.0;
    for (const EpochRecord& r : series) s += r.aggregate_capacity_bps;
    return s / static_cast<double>(series.size());
}

double ScenarioMetrics::mean_acceptance() const {
    if (series.empty()) return 0.0;
    double s = 0.0;
    for (const EpochRecord& r : series) s += r.mean_acceptance;
    return s / static_cast<double>(series.size());
}

double ScenarioMetrics::mean_ap_load() const {
    if (series.empty()) return 0.0;
    double s = 0.0;
    for (const EpochRecord& r : series) s += r.mean_ap_load;
    return s / static_cast<double>(series.size());
}

void demand_epoch(std::vector<UserEquipment>& users, std::span<const UserProfile> profiles,
                  Rng& rng) {
    for (UserEquipment& ue : users) {
        const UserProfile& p = profiles[static_cast<std::size_t>(ue.profile)];
        ue.demand_share = rng.uniform(p.demand_min, p.demand_max);
    }
}

SummaryStat aggregate_metrics(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("aggregate_metrics: no values");
    SummaryStat out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() == 1) return out;  // single replication: zero-width interval
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    out.ci95_half = 1.959963985 * sd / std::sqrt(static_cast<double>(values.size()));
    return out;
}

namespace {

struct Subscription {
    bool active = false;
    int op = -1;
    double price = 0.0;
    double delivered_total = 0.0;  // sum of allocated shares over epochs
    int evaluations = 0;           // allocation rounds seen while active
};

class ScenarioRunner {
 public:
    ScenarioRunner(const SimConfig& raw_cfg, uint64_t seed)
        : cfg_(raw_cfg.finalized()),
          rng_market_(substream(seed, "market")),
          rng_demands_(substream(seed, "demands")),
          topo_(build_hex_deployment(cfg_.num_cells, cfg_.cell_radius_m, cfg_.radio)),
          public_ledger_(cfg_.public_ledger, queue_, substream_seed(seed, "ledger-public")),
          private_ledger_(cfg_.private_ledger, queue_, substream_seed(seed, "ledger-private")) {
        std::vector<double> ratios = cfg_.ownership_ratios;
        if (ratios.empty())
            ratios.assign(static_cast<std::size_t>(cfg_.n_operators),
                          1.0 / static_cast<double>(cfg_.n_operators));
        const std::vector<int> owners = allocate_cells_to_owners(topo_.num_cells(), ratios);
        for (int c = 0; c < topo_.num_cells(); ++c) topo_.set_cell_owner(c, owners[static_cast<std::size_t>(c)]);

        market_.emplace(topo_, cfg_.n_operators, cfg_.slices_per_cell, cfg_.lease_duration_s,
                        cfg_.lease_price_min, cfg_.lease_price_max, rng_market_);

        users_ = drop_users(topo_, cfg_.n_users, substream_seed(seed, "topology"));
        Rng rng_profiles = substream(seed, "profiles");
        const double mix_total = cfg_.profile_mix.low + cfg_.profile_mix.average + cfg_.profile_mix.high;
        for (UserEquipment& ue : users_) {
            const double u = rng_profiles.uniform01() * mix_total;
            ue.profile = u < cfg_.profile_mix.low ? 0
                         : u < cfg_.profile_mix.low + cfg_.profile_mix.average ? 1
                                                                               : 2;
        }

        subs_.resize(users_.size());
        chain_in_flight_.assign(users_.size(), 0);
        deficit_in_flight_.assign(
            static_cast<std::size_t>(cfg_.n_operators) * static_cast<std::size_t>(topo_.num_cells()), 0);

        // Static link budget per (user, cell); positions never move.
        rx_mw_.assign(users_.size(), std::vector<double>(static_cast<std::size_t>(topo_.num_cells())));
        total_rx_mw_.assign(users_.size(), 0.0);
        for (std::size_t u = 0; u < users_.size(); ++u) {
            for (int c = 0; c < topo_.num_cells(); ++c) {
                const double d = link_distance_m(users_[u].x, users_[u].y, topo_.cell(c));
                rx_mw_[u][static_cast<std::size_t>(c)] =
                    dbm_to_milliwatt(received_power_dbm(d, cfg_.radio));
                total_rx_mw_[u] += rx_mw_[u][static_cast<std::size_t>(c)];
            }
        }
        noise_mw_ = dbm_to_milliwatt(cfg_.radio.noise_dbm);

        public_ledger_.set_confirmation_sink([this](const Transaction& tx) { on_public_confirmed(tx); });
        private_ledger_.set_confirmation_sink([this](const Transaction& tx) { on_private_confirmed(tx); });
    }

    ScenarioMetrics run() {
        for (int64_t k = 0;; ++k) {
            const double t = static_cast<double>(k) * cfg_.epoch_s;
            if (t >= cfg_.horizon_s - 1e-12) break;
            queue_.schedule_at(t, [this, t] { on_epoch(t); });
        }
        queue_.run_until(cfg_.horizon_s);

        for (std::size_t u = 0; u < subs_.size(); ++u) retire_subscription(static_cast<int>(u));
        metrics_.public_ledger = public_ledger_.metrics();
        metrics_.private_ledger = private_ledger_.metrics();
        return std::move(metrics_);
    }

 private:
    int cell_count() const { return topo_.num_cells(); }
    std::size_t flat(int op, int cell) const {
        return static_cast<std::size_t>(op) * static_cast<std::size_t>(cell_count()) +
               static_cast<std::size_t>(cell);
    }

    void on_epoch(double t) {
        metrics_.lease_reversions += static_cast<int64_t>(market_->expire_leases(t).size());
        demand_epoch(users_, std::span<const UserProfile>(cfg_.profiles.data(), cfg_.profiles.size()),
                     rng_demands_);
        evaluate(t);
        if (cfg_.dynamic_sharing) check_deficits();
        submit_requests(t);
    }

    // Demand and holdings per (operator, cell), refreshed each epoch.
    void refresh_matrices() {
        held_.assign(static_cast<std::size_t>(cfg_.n_operators) * static_cast<std::size_t>(cell_count()),
                     0.0);
        demand_.assign(held_.size(), 0.0);
        for (const ResourceUnit& unit : market_->units()) held_[flat(unit.holder, unit.cell)] += unit.share;
        for (std::size_t u = 0; u < users_.size(); ++u) {
            const Subscription& sub = subs_[u];
            if (!sub.active) continue;
            demand_[flat(sub.op, *users_[u].serving_cell)] += users_[u].demand_share;
        }
    }

    double user_sinr(std::size_t u, int op) const {
        const int serving = *users_[u].serving_cell;
        const double signal = rx_mw_[u][static_cast<std::size_t>(serving)];
        double interference = 0.0;
        if (cfg_.interference == InterferenceMode::all_cells) {
            interference = total_rx_mw_[u] - signal;
        } else {
            // Cells where the serving operator holds any share are treated as
            // coordinated; all remaining cells reuse the band.
            interference = total_rx_mw_[u] - signal;
            for (int c = 0; c < cell_count(); ++c) {
                if (c == serving) continue;
                if (held_[flat(op, c)] > 0.0) interference -= rx_mw_[u][static_cast<std::size_t>(c)];
            }
        }
        if (interference < 0.0) interference = 0.0;
        return signal / (noise_mw_ + interference);
    }

    void evaluate(double t) {
        refresh_matrices();
        std::vector<double> ap_load(static_cast<std::size_t>(cell_count()), 0.0);
        double capacity_sum = 0.0;
        double acceptance_sum = 0.0;
        int active = 0;
        int zero_alloc = 0;

        for (std::size_t u = 0; u < users_.size(); ++u) {
            Subscription& sub = subs_[u];
            if (!sub.active) continue;
            ++active;
            ++sub.evaluations;
            const int cell = *users_[u].serving_cell;
            const double dem = demand_[flat(sub.op, cell)];
            const double avail = held_[flat(sub.op, cell)];
            const double scale = dem > 0.0 ? std::min(1.0, avail / dem) : 0.0;
            const double b_share = users_[u].demand_share * scale;
            if (b_share <= 0.0) {
                ++zero_alloc;
                continue;  // zero share, zero capacity, zero acceptance
            }
            sub.delivered_total += b_share;
            ap_load[static_cast<std::size_t>(cell)] += b_share;
            const double sinr = user_sinr(u, sub.op);
            capacity_sum += capacity_bps(b_share * cfg_.radio.bandwidth_hz, sinr);
            const UserProfile& prof = cfg_.profiles[static_cast<std::size_t>(users_[u].profile)];
            acceptance_sum +=
                service_acceptance(b_share, sub.price, prof.psi, prof.xi, cfg_.acceptance_c);
        }

        EpochRecord rec;
        rec.t = t;
        rec.aggregate_capacity_bps = capacity_sum;
        rec.mean_acceptance =
            users_.empty() ? 0.0 : acceptance_sum / static_cast<double>(users_.size());
        double load_sum = 0.0;
        for (double l : ap_load) load_sum += l;
        rec.mean_ap_load = ap_load.empty() ? 0.0 : load_sum / static_cast<double>(ap_load.size());
        rec.active_subscriptions = active;
        rec.zero_allocation_subs = zero_alloc;
        rec.active_leases = market_->active_leases();
        metrics_.series.push_back(rec);
    }

    void check_deficits() {
        for (int op = 0; op < cfg_.n_operators; ++op) {
            for (int cell = 0; cell < cell_count(); ++cell) {
                const double dem = demand_[flat(op, cell)];
                if (dem <= held_[flat(op, cell)] + 1e-9) continue;
                if (deficit_in_flight_[flat(op, cell)]) continue;
                auto request = market_->request_ran_resources(op, dem, cell);
                if (!request) continue;
                deficit_in_flight_[flat(op, cell)] = 1;
                ++metrics_.ran_requests;
                const TxId id =
                    private_ledger_.submit_transaction(TxKind::resource_request, cfg_.tx_size_bits);
                pending_ran_[id] = *request;
            }
        }
    }

    void submit_requests(double t) {
        for (std::size_t u = 0; u < users_.size(); ++u) {
            if (chain_in_flight_[u]) continue;
            if (subs_[u].active && !cfg_.reauction_each_epoch) continue;
            chain_in_flight_[u] = 1;
            ++metrics_.service_requests;
            const double at = t + rng_demands_.uniform(0.0, cfg_.epoch_s * 0.95);
            const int user = static_cast<int>(u);
            queue_.schedule_at(at, [this, user] {
                const TxId id =
                    public_ledger_.submit_transaction(TxKind::service_request, cfg_.tx_size_bits);
                pending_requests_[id] = ServiceRequestInfo{user, *users_[static_cast<std::size_t>(user)].serving_cell,
                                                           users_[static_cast<std::size_t>(user)].demand_share};
            });
        }
    }

    double committed_demand(int op, int cell) const {
        double dem = 0.0;
        for (std::size_t u = 0; u < users_.size(); ++u)
            if (subs_[u].active && subs_[u].op == op && *users_[u].serving_cell == cell)
                dem += users_[u].demand_share;
        return dem;
    }

    // An award counts as permanently unserved when it saw at least one
    // allocation round and never delivered anything.
    void retire_subscription(int user) {
        Subscription& sub = subs_[static_cast<std::size_t>(user)];
        if (sub.active && sub.evaluations > 0 && sub.delivered_total <= 0.0)
            ++metrics_.unserved_awards;
        sub.active = false;
    }

    void on_public_confirmed(const Transaction& tx) {
        if (tx.kind == TxKind::service_request) {
            const auto it = pending_requests_.find(tx.id);
            if (it == pending_requests_.end()) return;
            const ServiceRequestInfo info = it->second;
            pending_requests_.erase(it);
            ++metrics_.service_auctions;
            if (cfg_.n_operators == 0) {
                ++metrics_.rejected_requests;
                chain_in_flight_[static_cast<std::size_t>(info.user)] = 0;
                return;
            }
            auto free_share = [this, &info](int op) {
                return std::max(0.0, market_->held_share(op, info.cell) - committed_demand(op, info.cell));
            };
            const Award award =
                market_->run_service_auction(info, cfg_.policy, rng_market_, queue_.now(), free_share);
            const TxId id =
                public_ledger_.submit_transaction(TxKind::service_award, cfg_.tx_size_bits);
            pending_awards_[id] = award;
        } else if (tx.kind == TxKind::service_award) {
            const auto it = pending_awards_.find(tx.id);
            if (it == pending_awards_.end()) return;
            const Award award = it->second;
            pending_awards_.erase(it);
            retire_subscription(award.user);
            Subscription& sub = subs_[static_cast<std::size_t>(award.user)];
            sub.active = true;
            sub.op = award.op;
            sub.price = award.price;
            sub.delivered_total = 0.0;
            sub.evaluations = 0;
            ++metrics_.service_awards_activated;
            chain_in_flight_[static_cast<std::size_t>(award.user)] = 0;
        }
    }

    void on_private_confirmed(const Transaction& tx) {
        if (tx.kind != TxKind::resource_request) return;  // lease records need no action
        const auto it = pending_ran_.find(tx.id);
        if (it == pending_ran_.end()) return;
        const RanRequest request = it->second;
        pending_ran_.erase(it);
        deficit_in_flight_[flat(request.op, request.cell)] = 0;
        auto own_need = [this](int op, int cell) { return committed_demand(op, cell); };
        const auto lease = market_->run_ran_auction(request, queue_.now(), own_need);
        if (lease) {
            ++metrics_.leases_granted;
            private_ledger_.submit_transaction(TxKind::resource_lease, cfg_.tx_size_bits);
        }
    }

    SimConfig cfg_;
    EventQueue queue_;
    Rng rng_market_;
    Rng rng_demands_;
    Topology topo_;
    std::optional<Market> market_;
    Ledger public_ledger_;
    Ledger private_ledger_;

    std::vector<UserEquipment> users_;
    std::vector<Subscription> subs_;
    std::vector<char> chain_in_flight_;
    std::vector<char> deficit_in_flight_;
    std::vector<double> held_;
    std::vector<double> demand_;
    std::vector<std::vector<double>> rx_mw_;
    std::vector<double> total_rx_mw_;
    double noise_mw_ = 0.0;

    std::unordered_map<TxId, ServiceRequestInfo> pending_requests_;
    std::unordered_map<TxId, Award> pending_awards_;
    std::unordered_map<TxId, RanRequest> pending_ran_;

    ScenarioMetrics metrics_;
};

}  // namespace

ScenarioMetrics run_scenario(const SimConfig& cfg, uint64_t seed) {
    ScenarioRunner runner(cfg, seed);
    return runner.run();
}

std::pair<ScenarioMetrics, ScenarioMetrics> compare_static_dynamic(const SimConfig& cfg,
                                                                   uint64_t seed) {
    SimConfig static_cfg = cfg;
    static_cfg.dynamic_sharing = false;
    SimConfig dynamic_cfg = cfg;
    dynamic_cfg.dynamic_sharing = true;
    return {run_scenario(static_cfg, seed), run_scenario(dynamic_cfg, seed)};
}

}  // namespace bcran
