#include "bcran/dcf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bcran {

double he20_rate_bps(int mcs_index) {
    static constexpr double rates_mbps[12] = {8.6,  17.2,  25.8,  34.4,  51.6,  68.8,
                                              77.4, 86.0, 103.2, 114.7, 129.0, 143.4};
    if (mcs_index < 0 || mcs_index > 11)
        throw std::invalid_argument("he20_rate_bps: MCS index must be 0..11");
    return rates_mbps[mcs_index] * 1e6;
}

double DcfParams::rate_bps() const {
    return data_rate_bps > 0.0 ? data_rate_bps : he20_rate_bps(mcs_index);
}

void validate(const DcfParams& p) {
    if (p.cw_min < 1) throw std::invalid_argument("DcfParams: cw_min must be >= 1");
    if (p.max_backoff_stage < 0) throw std::invalid_argument("DcfParams: max_backoff_stage < 0");
    if (p.r_max < 0) throw std::invalid_argument("DcfParams: r_max must be >= 0");
    if (p.mcs_index < 0 || p.mcs_index > 11)
        throw std::invalid_argument("DcfParams: mcs_index must be 0..11");
    const double durations[] = {p.empty_slot_us, p.sifs_us, p.difs_us,      p.rts_us,
                                p.cts_us,        p.ack_us,  p.phy_header_us};
    for (double d : durations)
        if (!(d > 0.0)) throw std::invalid_argument("DcfParams: durations must be > 0");
    if (p.data_rate_bps < 0.0) throw std::invalid_argument("DcfParams: negative data rate");
}

int64_t contention_window(const DcfParams& params, int stage) {
    const int capped = std::min(stage, params.max_backoff_stage);
    return (int64_t{1} << capped) * params.cw_min;
}

namespace {

// Renewal argument: a packet reaches stage w with probability p^w and spends
// E[CW(w)-1]/2 + 1 slots there (countdown plus the transmit slot), so
//   tau = sum_w p^w / sum_w p^w * (backoff_w + 1).
double tau_from_collision(double p, const DcfParams& params) {
    double pw = 1.0;
    double attempts = 0.0;
    double slots = 0.0;
    for (int w = 0; w <= params.r_max; ++w) {
        const double mean_backoff = (static_cast<double>(contention_window(params, w)) - 1.0) / 2.0;
        attempts += pw;
        slots += pw * (mean_backoff + 1.0);
        pw *= p;
    }
    return attempts / slots;
}

}  // namespace

std::pair<double, double> solve_tau(int n_nodes, const DcfParams& params, double tol,
                                    int max_iter) {
    validate(params);
    if (n_nodes < 1) throw std::invalid_argument("solve_tau: n_nodes must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("solve_tau: tol must be > 0");

    double p = 0.0;
    double residual = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const double tau = tau_from_collision(p, params);
        const double target = n_nodes == 1 ? 0.0 : 1.0 - std::pow(1.0 - tau, n_nodes - 1);
        residual = std::abs(target - p);
        if (residual < tol) return {tau, p};
        p = 0.5 * (p + target);  // damping keeps the alternating iteration stable
    }
    throw std::runtime_error("solve_tau: no convergence after " + std::to_string(max_iter) +
                             " iterations (last residual " + std::to_string(residual) + ")");
}

SlotProbabilities slot_probabilities(double tau, int n_nodes) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("slot_probabilities: tau not in [0,1]");
    if (n_nodes < 1) throw std::invalid_argument("slot_probabilities: n_nodes must be >= 1");
    SlotProbabilities out;
    out.empty = std::pow(1.0 - tau, n_nodes);
    out.success = n_nodes * tau * std::pow(1.0 - tau, n_nodes - 1);
    out.collision = 1.0 - out.empty - out.success;
    if (out.collision < 0.0) out.collision = 0.0;  // guard fp round-off near tau = 0 or 1
    return out;
}

SlotDurations slot_durations(const DcfParams& params, int64_t payload_bits) {
    validate(params);
    if (payload_bits <= 0) throw std::invalid_argument("slot_durations: payload_bits must be > 0");
    const double us = 1e-6;
    const double t_data = params.phy_header_us * us + static_cast<double>(payload_bits) / params.rate_bps();
    SlotDurations out;
    out.empty_s = params.empty_slot_us * us;
    out.success_s = params.rts_us * us + 3.0 * params.sifs_us * us + params.cts_us * us + t_data +
                    params.ack_us * us;
    out.collision_s = params.rts_us * us + params.difs_us * us;
    return out;
}

double expected_slot(const SlotProbabilities& probs, const SlotDurations& durations) {
    const double total = probs.empty + probs.success + probs.collision;
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("expected_slot: probabilities must sum to 1");
    return probs.empty * durations.empty_s + probs.success * durations.success_s +
           probs.collision * durations.collision_s;
}

std::vector<double> stage_distribution(double p_collision, int r_max) {
    if (p_collision < 0.0 || p_collision >= 1.0)
        throw std::invalid_argument("stage_distribution: p_collision must be in [0,1)");
    if (r_max < 0) throw std::invalid_argument("stage_distribution: r_max must be >= 0");
    std::vector<double> pi(static_cast<std::size_t>(r_max) + 1);
    double pw = 1.0;
    double norm = 0.0;
    for (int w = 0; w <= r_max; ++w) {
        pi[static_cast<std::size_t>(w)] = pw;
        norm += pw;
        pw *= p_collision;
    }
    for (double& v : pi) v /= norm;  // equals p^w (1-p) / (1 - p^(r_max+1))
    return pi;
}

double expected_backoff_slots(double p_collision, const DcfParams& params) {
    validate(params);
    const std::vector<double> pi = stage_distribution(p_collision, params.r_max);
    double slots = 0.0;
    for (int w = 0; w <= params.r_max; ++w) {
        const double mean_backoff = (static_cast<double>(contention_window(params, w)) - 1.0) / 2.0;
        slots += pi[static_cast<std::size_t>(w)] * mean_backoff;
    }
    return slots;
}

DcfSolution solve(int n_nodes, const DcfParams& params, int64_t payload_bits, double tol,
                  int max_iter) {
    DcfSolution sol;
    const auto [tau, p_c] = solve_tau(n_nodes, params, tol, max_iter);
    sol.tau = tau;
    sol.p_collision = p_c;
    sol.probs = slot_probabilities(tau, n_nodes);
    sol.durations = slot_durations(params, payload_bits);
    sol.expected_slot_s = expected_slot(sol.probs, sol.durations);
    sol.expected_backoff_slots = expected_backoff_slots(p_c, params);
    return sol;
}

double access_delay(int n_nodes, int64_t payload_bits, const DcfParams& params, double tol,
                    int max_iter) {
    const DcfSolution sol = solve(n_nodes, params, payload_bits, tol, max_iter);
    return sol.expected_backoff_slots * sol.expected_slot_s + sol.durations.success_s;
}

}  // namespace bcran
