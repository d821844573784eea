#include "bcran/topology.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bcran/rng.hpp"

namespace bcran {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double thermal_noise_dbm(double bandwidth_hz, double noise_figure_db) {
    return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

double dbm_to_milliwatt(double dbm) { return std::pow(10.0, dbm / 10.0); }

Topology build_hex_deployment(int num_cells, double radius_m, RadioParams params) {
    if (!(radius_m > 0.0)) throw std::invalid_argument("build_hex_deployment: radius must be > 0");
    int rings = -1;
    for (int k = 0;; ++k) {
        const int cells_for_k = 1 + 3 * k * (k + 1);
        if (cells_for_k == num_cells) {
            rings = k;
            break;
        }
        if (cells_for_k > num_cells) break;
    }
    if (rings < 0) {
        throw std::invalid_argument(
            "build_hex_deployment: num_cells=" + std::to_string(num_cells) +
            " does not form complete hexagonal rings (valid: 1, 7, 19, 37, ...)");
    }

    // Axial hex coordinates, pointy-top orientation; neighbor spacing sqrt(3)*R.
    static constexpr int dq[6] = {1, 1, 0, -1, -1, 0};
    static constexpr int dr[6] = {0, -1, -1, 0, 1, 1};

    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(num_cells));
    auto push = [&](int q, int r) {
        const double x = radius_m * (std::sqrt(3.0) * (q + r / 2.0));
        const double y = radius_m * (1.5 * r);
        cells.push_back(Cell{static_cast<int>(cells.size()), x, y, radius_m, 0});
    };

    push(0, 0);
    for (int ring = 1; ring <= rings; ++ring) {
        int q = -ring;
        int r = ring;
        for (int side = 0; side < 6; ++side) {
            for (int step = 0; step < ring; ++step) {
                push(q, r);
                q += dq[side];
                r += dr[side];
            }
        }
    }
    return Topology(std::move(cells), params);
}

std::vector<int> allocate_cells_to_owners(int n_cells, std::span<const double> ratios) {
    if (ratios.empty()) throw std::invalid_argument("allocate_cells_to_owners: empty ratios");
    double total = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw std::invalid_argument("allocate_cells_to_owners: negative ratio");
        total += r;
    }
    if (!(total > 0.0)) throw std::invalid_argument("allocate_cells_to_owners: ratios sum to zero");

    std::vector<double> quota(ratios.size());
    for (std::size_t i = 0; i < ratios.size(); ++i)
        quota[i] = static_cast<double>(n_cells) * ratios[i] / total;

    // Greedy largest-deficit assignment interleaves owners along the spiral
    // cell order, which spreads each operator's cells over the map.
    std::vector<int> owner(static_cast<std::size_t>(n_cells), 0);
    std::vector<double> assigned(ratios.size(), 0.0);
    for (int c = 0; c < n_cells; ++c) {
        std::size_t best = 0;
        double best_deficit = quota[0] - assigned[0];
        for (std::size_t i = 1; i < ratios.size(); ++i) {
            const double deficit = quota[i] - assigned[i];
            if (deficit > best_deficit + 1e-12) {
                best = i;
                best_deficit = deficit;
            }
        }
        owner[static_cast<std::size_t>(c)] = static_cast<int>(best);
        assigned[best] += 1.0;
    }
    return owner;
}

std::vector<UserEquipment> drop_users(const Topology& topo, int n, uint64_t rng_seed) {
    if (n < 0) throw std::invalid_argument("drop_users: n must be >= 0");
    if (topo.num_cells() == 0) throw std::invalid_argument("drop_users: empty topology");
    Rng rng(rng_seed);
    std::vector<UserEquipment> users;
    users.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int c = rng.uniform_int(0, topo.num_cells() - 1);
        const Cell& cell = topo.cell(c);
        const double r = cell.radius * std::sqrt(rng.uniform01());
        const double theta = 2.0 * kPi * rng.uniform01();
        UserEquipment ue;
        ue.id = i;
        ue.x = cell.x + r * std::cos(theta);
        ue.y = cell.y + r * std::sin(theta);
        ue.serving_cell = c;
        users.push_back(ue);
    }
    return users;
}

double path_loss_db(double distance_m, const RadioParams& params) {
    if (!(distance_m > 0.0)) throw std::invalid_argument("path_loss_db: distance must be > 0");
    return params.pl0_db + 10.0 * params.alpha * std::log10(distance_m) + params.sigma_db / 2.0 +
           (distance_m / 10.0) * (params.gamma_db / 2.0);
}

double received_power_dbm(double distance_m, const RadioParams& params) {
    return params.tx_power_dbm - path_loss_db(distance_m, params);
}

double link_distance_m(double ue_x, double ue_y, const Cell& cell) {
    const double d = std::hypot(ue_x - cell.x, ue_y - cell.y);
    return d < 1.0 ? 1.0 : d;
}

double sinr_linear(const UserEquipment& ue, const Topology& topo,
                   std::span<const int> co_channel_cells) {
    if (!ue.serving_cell) throw std::invalid_argument("sinr_linear: UE has no serving cell");
    const int serving = *ue.serving_cell;
    if (serving < 0 || serving >= topo.num_cells())
        throw std::invalid_argument("sinr_linear: serving cell out of range");

    const RadioParams& p = topo.params();
    const double signal_mw =
        dbm_to_milliwatt(received_power_dbm(link_distance_m(ue.x, ue.y, topo.cell(serving)), p));
    double interference_mw = 0.0;
    for (int c : co_channel_cells) {
        if (c == serving)
            throw std::invalid_argument("sinr_linear: serving cell listed as interferer");
        if (c < 0 || c >= topo.num_cells())
            throw std::invalid_argument("sinr_linear: interferer cell out of range");
        interference_mw +=
            dbm_to_milliwatt(received_power_dbm(link_distance_m(ue.x, ue.y, topo.cell(c)), p));
    }
    const double noise_mw = dbm_to_milliwatt(p.noise_dbm);
    return signal_mw / (noise_mw + interference_mw);
}

double capacity_bps(double bandwidth_hz, double sinr) {
    if (bandwidth_hz < 0.0) throw std::invalid_argument("capacity_bps: negative bandwidth");
    if (sinr < 0.0) throw std::invalid_argument("capacity_bps: negative SINR");
    return bandwidth_hz * std::log2(1.0 + sinr);
}

}  // namespace bcran
