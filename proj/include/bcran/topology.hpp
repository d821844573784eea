#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bcran {

double thermal_noise_dbm(double bandwidth_hz, double noise_figure_db);

// Propagation and link-budget constants of the deployment.
struct RadioParams {
    double tx_power_dbm = 20.0;
    double pl0_db = 5.0;    // loss at the 1 m reference distance
    double alpha = 4.4;     // path-loss exponent
    double sigma_db = 9.5;  // shadowing factor, applied deterministically at half value
    double gamma_db = 30.0; // obstacles factor, half value per 10 m of distance
    double bandwidth_hz = 20e6;
    double carrier_hz = 5e9;
    double noise_dbm = -93.98970004336019;  // thermal floor over 20 MHz + 7 dB noise figure
};

struct Cell {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    double radius = 0.0;
    int owner = 0;  // operator that owns this cell's radio resources
};

class Topology {
 public:
    Topology() = default;
    Topology(std::vector<Cell> cells, RadioParams params)
        : cells_(std::move(cells)), params_(params) {}

    const std::vector<Cell>& cells() const { return cells_; }
    const Cell& cell(int id) const { return cells_.at(static_cast<std::size_t>(id)); }
    int num_cells() const { return static_cast<int>(cells_.size()); }
    const RadioParams& params() const { return params_; }

    // Ownership is fixed before the simulation starts; the layout itself
    // never changes after construction.
    void set_cell_owner(int cell_id, int op) { cells_.at(static_cast<std::size_t>(cell_id)).owner = op; }

 private:
    std::vector<Cell> cells_;
    RadioParams params_;
};

struct UserEquipment {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    std::optional<int> serving_cell;
    std::optional<int> subscribed_op;
    double demand_share = 0.0;  // fraction of the AP capacity the user asks for
    int profile = 0;            // index into the profile table
};

// Center cell plus complete surrounding rings; num_cells must be 1, 7, 19, 37, ...
// Neighboring centers sit sqrt(3) * radius apart. Deterministic spiral order.
Topology build_hex_deployment(int num_cells, double radius_m, RadioParams params);

// Assigns whole cells to operators so that per-operator counts track the
// requested ratios; deterministic greedy largest-deficit order.
std::vector<int> allocate_cells_to_owners(int n_cells, std::span<const double> ratios);

// Uniform drop over the union of the cell disks (cell picked uniformly, then
// a uniform point in its disk); the sampled cell becomes the serving cell.
std::vector<UserEquipment> drop_users(const Topology& topo, int n, uint64_t rng_seed);

// PL(d) = PL0 + 10*alpha*log10(d) + sigma/2 + (d/10)*(gamma/2), d in meters.
double path_loss_db(double distance_m, const RadioParams& params);

double received_power_dbm(double distance_m, const RadioParams& params);

double dbm_to_milliwatt(double dbm);

// Distance used for link budgets; floors at the 1 m reference distance.
double link_distance_m(double ue_x, double ue_y, const Cell& cell);

// Linear SINR of a user against the given co-channel cells. The serving cell
// must be set and must not be in the interferer list.
double sinr_linear(const UserEquipment& ue, const Topology& topo,
                   std::span<const int> co_channel_cells);

// Shannon capacity b * log2(1 + sinr).
double capacity_bps(double bandwidth_hz, double sinr);

}  // namespace bcran
