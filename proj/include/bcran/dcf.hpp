#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace bcran {

// Saturation model of the 802.11 DCF (Bianchi-style slotted analysis).
// Contention windows double per backoff stage up to a cap, a finite
// retransmission limit truncates the stage distribution, and the per-slot
// transmit probability tau is closed by the usual fixed point
//   tau = f(p_c),  p_c = 1 - (1 - tau)^(N-1).

struct DcfParams {
    int cw_min = 16;
    int max_backoff_stage = 6;  // window stops doubling at this stage
    int r_max = 7;              // retransmission limit; stages run 0..r_max
    int mcs_index = 5;          // 20 MHz, 1 spatial stream, 0.8 us GI rate table
    double empty_slot_us = 9.0;
    double sifs_us = 16.0;
    double difs_us = 34.0;
    double rts_us = 28.0;  // control frames at the 24 Mb/s legacy basic rate
    double cts_us = 28.0;
    double ack_us = 28.0;
    double phy_header_us = 40.0;
    double data_rate_bps = 0.0;  // 0 -> derived from mcs_index

    double rate_bps() const;
};

void validate(const DcfParams& params);

// PHY rate for 20 MHz, single spatial stream, 0.8 us guard interval.
double he20_rate_bps(int mcs_index);

// CW(w) = 2^min(w, cap) * cw_min.
int64_t contention_window(const DcfParams& params, int stage);

struct SlotProbabilities {
    double empty = 0.0;
    double success = 0.0;
    double collision = 0.0;
};

struct SlotDurations {
    double empty_s = 0.0;
    double success_s = 0.0;
    double collision_s = 0.0;
};

struct DcfSolution {
    double tau = 0.0;
    double p_collision = 0.0;
    SlotProbabilities probs;
    SlotDurations durations;
    double expected_slot_s = 0.0;
    double expected_backoff_slots = 0.0;
};

// Damped fixed-point solve of (tau, p_c). For n_nodes == 1 the collision
// probability is exactly zero and tau reduces to 2 / (cw_min + 1).
std::pair<double, double> solve_tau(int n_nodes, const DcfParams& params, double tol = 1e-10,
                                    int max_iter = 10000);

// p_e = (1-tau)^N, p_s = N tau (1-tau)^(N-1), p_c = 1 - p_e - p_s.
SlotProbabilities slot_probabilities(double tau, int n_nodes);

// empty = 9 us; success = RTS + 3 SIFS + CTS + DATA + ACK; collision = RTS + DIFS.
// DATA = PHY header + payload / rate.
SlotDurations slot_durations(const DcfParams& params, int64_t payload_bits);

double expected_slot(const SlotProbabilities& probs, const SlotDurations& durations);

// pi_w = p^w (1-p) / (1 - p^(r_max+1)) for w = 0..r_max; sums to 1.
std::vector<double> stage_distribution(double p_collision, int r_max);

// E[phi] = sum_w pi_w * (CW(w) - 1) / 2, with the window capped at the
// doubling limit while the stage index runs to the retransmission limit.
double expected_backoff_slots(double p_collision, const DcfParams& params);

DcfSolution solve(int n_nodes, const DcfParams& params, int64_t payload_bits, double tol = 1e-10,
                  int max_iter = 10000);

// Expected contention delay of one successful transfer: the backoff countdown
// in generic slots plus the successful exchange itself. Retries enter through
// the stage-weighted backoff.
double access_delay(int n_nodes, int64_t payload_bits, const DcfParams& params, double tol = 1e-10,
                    int max_iter = 10000);

}  // namespace bcran
