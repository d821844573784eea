#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcran/rng.hpp"
#include "bcran/topology.hpp"

namespace bcran {

struct UserProfile {
    std::string name;  // low / average / high
    double demand_min = 0.0;
    double demand_max = 0.0;
    double psi = 0.1;  // bandwidth sensitivity
    double xi = 0.1;   // price sensitivity
};

struct Bid {
    int seller = 0;
    std::vector<double> features;  // one scalar per feature, higher is better
    double price = 0.0;
};

struct ServiceRequestInfo {
    int user = 0;
    int cell = 0;
    double demand_share = 0.0;
};

struct Award {
    int user = -1;
    int op = -1;
    double price = 0.0;
    double sla_share = 0.0;        // requested share, the agreed KPI
    double allocated_share = 0.0;  // granted at award time
    double bandwidth_hz = 0.0;
    double start_s = 0.0;
    double duration_s = 0.0;  // <= 0: until replaced
};

struct RanRequest {
    int op = 0;
    int cell = 0;
    double deficit_share = 0.0;
};

struct Lease {
    int from_op = 0;
    int to_op = 0;
    int cell = 0;
    std::vector<int> units;
    double price = 0.0;
    double start_s = 0.0;
    double expiry_s = 0.0;
};

struct AuctionPolicy {
    enum class Kind { random_uniform, utility };
    Kind kind = Kind::random_uniform;
    // Weights for the utility policy over (price attractiveness, deliverable
    // share, reputation); each must lie in [0, 1].
    std::vector<double> weights = {1.0, 0.0, 0.0};
};

// One slice of one cell's bandwidth. The owner never changes; the holder
// moves while a lease is active and reverts on expiry.
struct ResourceUnit {
    int id = 0;
    int cell = 0;
    int slice = 0;
    int owner = 0;
    int holder = 0;
    double share = 0.0;
    std::optional<double> lease_expiry_s;
};

struct OperatorInfo {
    int id = 0;
    double lease_price = 0.0;  // fixed for the whole scenario
};

// Weighted argmax over the bids. Ties break toward the lowest seller id.
// Returns (index into bids, winning score).
std::pair<std::size_t, double> buyer_utility(std::span<const double> weights,
                                             const std::vector<Bid>& bids);

// A = 1 - exp(-c * b^psi * p^xi). Zero allocated share or zero price gives 0.
double service_acceptance(double allocated_share, double price, double psi, double xi,
                          double c_norm);

class Market {
 public:
    // Carves every cell into slices_per_cell equal units owned by the cell
    // owner, and draws each operator's fixed lease price once.
    Market(const Topology& topo, int n_operators, int slices_per_cell, double lease_duration_s,
           double lease_price_min, double lease_price_max, Rng& setup_rng);

    int n_operators() const { return static_cast<int>(operators_.size()); }
    const OperatorInfo& op(int id) const { return operators_.at(static_cast<std::size_t>(id)); }
    const std::vector<ResourceUnit>& units() const { return units_; }
    double lease_duration_s() const { return lease_duration_s_; }
    double bandwidth_hz() const { return bandwidth_hz_; }

    double held_share(int op, int cell) const;
    double owned_share(int op, int cell) const;
    bool holds_any(int op, int cell) const;
    int active_leases() const;

    // Service reverse auction among all operators. The random policy draws a
    // winner uniformly and a price on [0,1); the utility policy draws one
    // price per operator and scores bids with the configured weights.
    // free_share_of_op, when given, caps the granted share.
    Award run_service_auction(const ServiceRequestInfo& request, const AuctionPolicy& policy,
                              Rng& rng, double now,
                              const std::function<double(int)>& free_share_of_op = {});

    // Emits a request only when the operator's holdings in the cell cannot
    // cover the need; the deficit rides in the request payload.
    std::optional<RanRequest> request_ran_resources(int op, double needed_share, int cell) const;

    // Reverse auction over operators holding unused units in the cell: the
    // lowest fixed lease price wins and transfers holdership until expiry.
    // own_required_share(op, cell) tells how much a supplier must keep back
    // for its own subscribers.
    std::optional<Lease> run_ran_auction(const RanRequest& request, double now,
                                         const std::function<double(int, int)>& own_required_share);

    // Reverts every lease with expiry <= now; returns the reverted unit ids.
    std::vector<int> expire_leases(double now);

 private:
    std::vector<int> leasable_units(int op, int cell, double keep_share) const;

    std::vector<OperatorInfo> operators_;
    std::vector<ResourceUnit> units_;
    std::vector<std::vector<int>> units_by_cell_;
    double lease_duration_s_ = 10.0;
    double bandwidth_hz_ = 20e6;
};

}  // namespace bcran
