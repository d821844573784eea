#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "bcran/dcf.hpp"
#include "bcran/events.hpp"
#include "bcran/rng.hpp"

namespace bcran {

using TxId = uint64_t;
using BlockId = uint64_t;

enum class TxKind { service_request, service_award, resource_request, resource_lease };
enum class BlockStatus { pending, appended, orphaned };
enum class LedgerKind { public_chain, private_chain };

struct Transaction {
    TxId id = 0;
    TxKind kind = TxKind::service_request;
    int64_t size_bits = 0;
    // Event-clock timestamps; negative means not reached yet.
    double created_at = -1.0;
    double uploaded_at = -1.0;
    double confirmed_at = -1.0;
};

struct Block {
    BlockId id = 0;
    BlockId parent = 0;  // 0 is the genesis sentinel
    std::vector<TxId> txs;
    int64_t payload_bits = 0;
    int64_t header_bits = 0;
    double mining_started_at = -1.0;
    double mined_at = -1.0;
    double propagated_at = -1.0;
    BlockStatus status = BlockStatus::pending;
};

struct LinkModel {
    enum class Kind { constant, dcf };
    Kind kind = Kind::constant;
    double constant_delay_s = 0.010;
    DcfParams dcf;
    // dcf uploads contend among the live submitter count unless pinned here.
    std::optional<int> fixed_contenders;
};

struct LedgerConfig {
    LedgerKind kind = LedgerKind::private_chain;
    int64_t block_size_bits = 15000;  // payload budget per block
    double max_wait_s = 5.0;          // oldest-pending age that forces a block
    double mining_rate_bps = 10.0;    // blocks per second
    int64_t header_bits = 1000;
    int n_peers = 10;  // contenders while a mined block propagates (dcf link)
    LinkModel link;
    // Test hook: pins the per-block orphan probability. Public chain only.
    std::optional<double> fork_probability_override;
    bool collect_trace = false;
};

struct TxTraceRecord {
    TxId id = 0;
    double t_up = 0.0;
    double t_queue_total = 0.0;
    double t_mine_total = 0.0;
    double t_prop_total = 0.0;
    double t_confirm = 0.0;
    int attempts = 0;
};

struct LedgerMetrics {
    int64_t submitted = 0;
    int64_t uploaded = 0;
    int64_t confirmed = 0;
    int64_t blocks_mined = 0;
    int64_t blocks_appended = 0;
    int64_t blocks_orphaned = 0;

    // Propagated volume; orphaned blocks re-count when their transactions
    // ride in a later block, which is exactly the wasted traffic.
    int64_t bits_propagated_payload = 0;
    int64_t bits_propagated_header = 0;
    int64_t confirmed_payload_bits = 0;
    int64_t uploaded_payload_bits = 0;

    double tup_sum = 0.0;
    double tc_sum = 0.0;
    // Per (transaction, block attempt) sums; these are the component means
    // that feed the closed-form confirmation-delay cross-check.
    double queue_sum_attempt = 0.0;
    double mine_sum_attempt = 0.0;
    double prop_sum_attempt = 0.0;
    int64_t tx_attempts = 0;
    // Per-block sums.
    double mine_sum_block = 0.0;
    double prop_sum_block = 0.0;

    std::vector<TxTraceRecord> trace;

    int64_t total_bits_propagated() const { return bits_propagated_payload + bits_propagated_header; }
    double mean_tc() const { return confirmed > 0 ? tc_sum / static_cast<double>(confirmed) : 0.0; }
    double mean_tup() const { return uploaded > 0 ? tup_sum / static_cast<double>(uploaded) : 0.0; }
    double mean_queue() const {
        return tx_attempts > 0 ? queue_sum_attempt / static_cast<double>(tx_attempts) : 0.0;
    }
    double mean_mine() const {
        return tx_attempts > 0 ? mine_sum_attempt / static_cast<double>(tx_attempts) : 0.0;
    }
    double mean_prop() const {
        return tx_attempts > 0 ? prop_sum_attempt / static_cast<double>(tx_attempts) : 0.0;
    }
    double p_fork_empirical() const {
        return blocks_mined > 0 ? static_cast<double>(blocks_orphaned) / static_cast<double>(blocks_mined)
                                : 0.0;
    }
};

double sample_mining_time(Rng& rng, double mu);

// Probability that a competing block appears during the propagation window
// of a freshly mined block, under aggregate exponential mining.
double fork_probability(double mu, double t_prop);

// T_c = T_up + (T_queue + T_mine + T_prop) / (1 - p_fork).
double analytic_confirmation_delay(double t_up, double t_queue, double t_mine, double t_prop,
                                   double p_fork);

// Share of propagated bits that did not end up as confirmed payload:
// block headers plus everything re-propagated because of orphaned blocks.
double overhead_ratio(const LedgerMetrics& metrics);

// Single-chain discrete-event pipeline: upload -> mempool -> block formation
// (size fill or waiting-time trigger) -> exponential mining -> propagation ->
// fork resolution. One block is in flight at a time; orphaned blocks return
// their transactions to the head of the mempool and they retry until a block
// of theirs is appended.
class Ledger {
 public:
    Ledger(LedgerConfig cfg, EventQueue& queue, uint64_t rng_seed);

    void set_confirmation_sink(std::function<void(const Transaction&)> sink) {
        sink_ = std::move(sink);
    }

    // Creates the transaction at the current event time and schedules its
    // upload over the configured link. Oversized transactions are rejected.
    TxId submit_transaction(TxKind kind, int64_t size_bits);

    // Forms a block now if the fill or timer condition holds and the miner is
    // idle. Driven internally; exposed for direct inspection.
    std::optional<BlockId> try_form_block();

    double upload_delay(int64_t size_bits) const;
    double propagation_delay(int64_t total_block_bits) const;

    const LedgerConfig& config() const { return cfg_; }
    const LedgerMetrics& metrics() const { return metrics_; }
    const std::vector<Transaction>& transactions() const { return txs_; }
    const Transaction& transaction(TxId id) const { return txs_.at(static_cast<std::size_t>(id - 1)); }
    const std::vector<Block>& blocks() const { return blocks_; }
    std::vector<TxId> mempool_snapshot() const;
    std::size_t mempool_size() const { return mempool_.size(); }
    int64_t mempool_bits() const { return mempool_bits_; }
    bool miner_busy() const { return miner_busy_; }
    bool drained() const { return uploads_in_flight_ == 0 && mempool_.empty() && !miner_busy_; }

 private:
    struct MempoolEntry {
        TxId id;
        double entered_at;  // of the current attempt
    };
    struct PendingAccounting {
        double queue = 0.0;
        double mine = 0.0;
        double prop = 0.0;
        int attempts = 0;
    };

    Transaction& tx_mut(TxId id) { return txs_.at(static_cast<std::size_t>(id - 1)); }
    PendingAccounting& acct(TxId id) { return acct_.at(static_cast<std::size_t>(id - 1)); }
    void on_uploaded(TxId id);
    void maybe_form_block();
    void on_mined(BlockId id);
    void on_propagated(BlockId id);
    double oldest_pending_entry() const;

    LedgerConfig cfg_;
    EventQueue& queue_;
    Rng rng_;
    std::function<void(const Transaction&)> sink_;

    std::vector<Transaction> txs_;  // id - 1 == index
    std::vector<PendingAccounting> acct_;
    std::vector<Block> blocks_;
    std::deque<MempoolEntry> mempool_;
    int64_t mempool_bits_ = 0;
    int uploads_in_flight_ = 0;
    bool miner_busy_ = false;
    BlockId chain_tip_ = 0;
    double armed_timer_at_ = -1.0;
    LedgerMetrics metrics_;
};

// Open-loop driver: submits n_tx transactions with exponential inter-arrival
// times at rate lambda_tps, then drains the pipeline completely.
LedgerMetrics run_poisson_workload(const LedgerConfig& cfg, double lambda_tps, int64_t tx_size_bits,
                                   int64_t n_tx, uint64_t seed,
                                   TxKind kind = TxKind::service_request);

}  // namespace bcran
