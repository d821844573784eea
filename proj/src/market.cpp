#include "bcran/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bcran {

std::pair<std::size_t, double> buyer_utility(std::span<const double> weights,
                                             const std::vector<Bid>& bids) {
    if (bids.empty()) throw std::invalid_argument("buyer_utility: no bids");
    for (double w : weights)
        if (w < 0.0 || w > 1.0) throw std::invalid_argument("buyer_utility: weights must be in [0,1]");
    for (const Bid& b : bids)
        if (b.features.size() != weights.size())
            throw std::invalid_argument("buyer_utility: feature vector length mismatch");

    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        double score = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) score += weights[k] * bids[i].features[k];
        const bool wins = i == 0 || score > best_score ||
                          (score == best_score && bids[i].seller < bids[best].seller);
        if (wins) {
            best = i;
            best_score = score;
        }
    }
    return {best, best_score};
}

double service_acceptance(double allocated_share, double price, double psi, double xi,
                          double c_norm) {
    if (allocated_share < 0.0) throw std::invalid_argument("service_acceptance: negative share");
    if (price < 0.0) throw std::invalid_argument("service_acceptance: negative price");
    if (!(c_norm > 0.0)) throw std::invalid_argument("service_acceptance: c must be > 0");
    if (psi < 0.0 && allocated_share == 0.0)
        throw std::invalid_argument("service_acceptance: b = 0 with negative psi");
    if (xi < 0.0 && price == 0.0)
        throw std::invalid_argument("service_acceptance: p = 0 with negative xi");
    const double exponent = c_norm * std::pow(allocated_share, psi) * std::pow(price, xi);
    if (!std::isfinite(exponent)) throw std::invalid_argument("service_acceptance: non-finite input");
    return -std::expm1(-exponent);
}

Market::Market(const Topology& topo, int n_operators, int slices_per_cell, double lease_duration_s,
               double lease_price_min, double lease_price_max, Rng& setup_rng)
    : lease_duration_s_(lease_duration_s), bandwidth_hz_(topo.params().bandwidth_hz) {
    if (n_operators < 1) throw std::invalid_argument("Market: need at least one operator");
    if (slices_per_cell < 1) throw std::invalid_argument("Market: slices_per_cell must be >= 1");
    if (!(lease_duration_s > 0.0)) throw std::invalid_argument("Market: lease duration must be > 0");
    if (lease_price_min < 0.0 || lease_price_max < lease_price_min)
        throw std::invalid_argument("Market: bad lease price range");

    operators_.reserve(static_cast<std::size_t>(n_operators));
    for (int m = 0; m < n_operators; ++m)
        operators_.push_back(OperatorInfo{m, setup_rng.uniform(lease_price_min, lease_price_max)});

    units_by_cell_.resize(static_cast<std::size_t>(topo.num_cells()));
    const double share = 1.0 / static_cast<double>(slices_per_cell);
    for (const Cell& cell : topo.cells()) {
        if (cell.owner < 0 || cell.owner >= n_operators)
            throw std::invalid_argument("Market: cell owner outside operator range");
        for (int s = 0; s < slices_per_cell; ++s) {
            ResourceUnit u;
            u.id = static_cast<int>(units_.size());
            u.cell = cell.id;
            u.slice = s;
            u.owner = cell.owner;
            u.holder = cell.owner;
            u.share = share;
            units_by_cell_[static_cast<std::size_t>(cell.id)].push_back(u.id);
            units_.push_back(u);
        }
    }
}

double Market::held_share(int op, int cell) const {
    double total = 0.0;
    for (int uid : units_by_cell_.at(static_cast<std::size_t>(cell)))
        if (units_[static_cast<std::size_t>(uid)].holder == op)
            total += units_[static_cast<std::size_t>(uid)].share;
    return total;
}

double Market::owned_share(int op, int cell) const {
    double total = 0.0;
    for (int uid : units_by_cell_.at(static_cast<std::size_t>(cell)))
        if (units_[static_cast<std::size_t>(uid)].owner == op)
            total += units_[static_cast<std::size_t>(uid)].share;
    return total;
}

bool Market::holds_any(int op, int cell) const {
    for (int uid : units_by_cell_.at(static_cast<std::size_t>(cell)))
        if (units_[static_cast<std::size_t>(uid)].holder == op) return true;
    return false;
}

int Market::active_leases() const {
    int n = 0;
    for (const ResourceUnit& u : units_)
        if (u.lease_expiry_s) ++n;
    return n;
}

Award Market::run_service_auction(const ServiceRequestInfo& request, const AuctionPolicy& policy,
                                  Rng& rng, double now,
                                  const std::function<double(int)>& free_share_of_op) {
    if (operators_.empty()) throw std::invalid_argument("run_service_auction: no operators");

    int winner = 0;
    double price = 0.0;
    if (policy.kind == AuctionPolicy::Kind::random_uniform) {
        winner = rng.uniform_int(0, n_operators() - 1);
        price = rng.uniform01();
    } else {
        std::vector<Bid> bids;
        bids.reserve(operators_.size());
        for (const OperatorInfo& o : operators_) {
            const double p = rng.uniform01();
            const double free = free_share_of_op ? free_share_of_op(o.id) : held_share(o.id, request.cell);
            const double deliverable =
                request.demand_share > 0.0 ? std::min(1.0, free / request.demand_share) : 1.0;
            bids.push_back(Bid{o.id, {1.0 - p, deliverable, 0.5}, p});
        }
        const auto [idx, score] = buyer_utility(policy.weights, bids);
        (void)score;
        winner = bids[idx].seller;
        price = bids[idx].price;
    }

    const double free =
        free_share_of_op ? free_share_of_op(winner) : held_share(winner, request.cell);
    Award award;
    award.user = request.user;
    award.op = winner;
    award.price = price;
    award.sla_share = request.demand_share;
    award.allocated_share = std::min(request.demand_share, std::max(0.0, free));
    award.bandwidth_hz = award.allocated_share * bandwidth_hz_;
    award.start_s = now;
    return award;
}

std::optional<RanRequest> Market::request_ran_resources(int op, double needed_share,
                                                        int cell) const {
    const double held = held_share(op, cell);
    if (needed_share <= held + 1e-12) return std::nullopt;
    return RanRequest{op, cell, needed_share - held};
}

std::vector<int> Market::leasable_units(int op, int cell, double keep_share) const {
    // Owner-held, not currently leased, beyond what the owner keeps back for
    // its own load. Leased-in units are never re-leased.
    std::vector<int> result;
    double kept = 0.0;
    for (int uid : units_by_cell_.at(static_cast<std::size_t>(cell))) {
        const ResourceUnit& u = units_[static_cast<std::size_t>(uid)];
        if (u.owner != op || u.holder != op || u.lease_expiry_s) continue;
        if (kept + 1e-12 < keep_share)
            kept += u.share;
        else
            result.push_back(uid);
    }
    return result;
}

std::optional<Lease> Market::run_ran_auction(
    const RanRequest& request, double now,
    const std::function<double(int, int)>& own_required_share) {
    int best_op = -1;
    std::vector<int> best_units;
    for (const OperatorInfo& o : operators_) {
        if (o.id == request.op) continue;
        const double keep = own_required_share ? own_required_share(o.id, request.cell) : 0.0;
        std::vector<int> avail = leasable_units(o.id, request.cell, keep);
        if (avail.empty()) continue;
        if (best_op < 0 || o.lease_price < operators_[static_cast<std::size_t>(best_op)].lease_price) {
            best_op = o.id;
            best_units = std::move(avail);
        }
    }
    if (best_op < 0) return std::nullopt;

    Lease lease;
    lease.from_op = best_op;
    lease.to_op = request.op;
    lease.cell = request.cell;
    lease.price = operators_[static_cast<std::size_t>(best_op)].lease_price;
    lease.start_s = now;
    lease.expiry_s = now + lease_duration_s_;
    double granted = 0.0;
    for (int uid : best_units) {
        if (granted + 1e-12 >= request.deficit_share) break;
        ResourceUnit& u = units_[static_cast<std::size_t>(uid)];
        u.holder = request.op;
        u.lease_expiry_s = lease.expiry_s;
        granted += u.share;
        lease.units.push_back(uid);
    }
    if (lease.units.empty()) return std::nullopt;
    return lease;
}

std::vector<int> Market::expire_leases(double now) {
    std::vector<int> reverted;
    for (ResourceUnit& u : units_) {
        if (u.lease_expiry_s && *u.lease_expiry_s <= now + 1e-12) {
            u.holder = u.owner;
            u.lease_expiry_s.reset();
            reverted.push_back(u.id);
        }
    }
    return reverted;
}

}  // namespace bcran
