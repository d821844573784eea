#include "bcran/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bcran {

double sample_mining_time(Rng& rng, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("sample_mining_time: mu must be > 0");
    return rng.exponential(mu);
}

double fork_probability(double mu, double t_prop) {
    if (!(mu > 0.0)) throw std::invalid_argument("fork_probability: mu must be > 0");
    if (t_prop < 0.0) throw std::invalid_argument("fork_probability: t_prop must be >= 0");
    return -std::expm1(-mu * t_prop);
}

double analytic_confirmation_delay(double t_up, double t_queue, double t_mine, double t_prop,
                                   double p_fork) {
    if (p_fork < 0.0 || p_fork >= 1.0)
        throw std::invalid_argument("analytic_confirmation_delay: p_fork must be in [0,1)");
    return t_up + (t_queue + t_mine + t_prop) / (1.0 - p_fork);
}

double overhead_ratio(const LedgerMetrics& m) {
    const double total = static_cast<double>(m.total_bits_propagated());
    if (!(total > 0.0)) throw std::invalid_argument("overhead_ratio: no bits transmitted");
    return (total - static_cast<double>(m.confirmed_payload_bits)) / total;
}

namespace {

void validate(const LedgerConfig& cfg) {
    if (cfg.block_size_bits <= 0) throw std::invalid_argument("LedgerConfig: block_size_bits <= 0");
    if (!(cfg.max_wait_s > 0.0)) throw std::invalid_argument("LedgerConfig: max_wait_s must be > 0");
    if (!(cfg.mining_rate_bps > 0.0))
        throw std::invalid_argument("LedgerConfig: mining_rate_bps must be > 0");
    if (cfg.header_bits < 0) throw std::invalid_argument("LedgerConfig: header_bits < 0");
    if (cfg.n_peers < 1) throw std::invalid_argument("LedgerConfig: n_peers must be >= 1");
    if (cfg.link.kind == LinkModel::Kind::constant && cfg.link.constant_delay_s < 0.0)
        throw std::invalid_argument("LedgerConfig: negative constant link delay");
    if (cfg.link.kind == LinkModel::Kind::dcf) bcran::validate(cfg.link.dcf);
    if (cfg.fork_probability_override) {
        const double p = *cfg.fork_probability_override;
        if (p < 0.0 || p >= 1.0)
            throw std::invalid_argument("LedgerConfig: fork_probability_override not in [0,1)");
        if (cfg.kind == LedgerKind::private_chain && p > 0.0)
            throw std::invalid_argument("LedgerConfig: a private chain is fork-free");
    }
}

}  // namespace

Ledger::Ledger(LedgerConfig cfg, EventQueue& queue, uint64_t rng_seed)
    : cfg_(cfg), queue_(queue), rng_(rng_seed) {
    validate(cfg_);
}

double Ledger::upload_delay(int64_t size_bits) const {
    if (cfg_.link.kind == LinkModel::Kind::constant) return cfg_.link.constant_delay_s;
    const int contenders = cfg_.link.fixed_contenders
                               ? std::max(1, *cfg_.link.fixed_contenders)
                               : std::max(1, uploads_in_flight_ + 1);
    return access_delay(contenders, size_bits, cfg_.link.dcf);
}

double Ledger::propagation_delay(int64_t total_block_bits) const {
    if (cfg_.link.kind == LinkModel::Kind::constant) return cfg_.link.constant_delay_s;
    return access_delay(std::max(1, cfg_.n_peers), total_block_bits, cfg_.link.dcf);
}

TxId Ledger::submit_transaction(TxKind kind, int64_t size_bits) {
    if (size_bits <= 0) throw std::invalid_argument("submit_transaction: size_bits must be > 0");
    if (size_bits > cfg_.block_size_bits)
        throw std::invalid_argument("submit_transaction: transaction of " +
                                    std::to_string(size_bits) + " bits can never fit a block of " +
                                    std::to_string(cfg_.block_size_bits) + " bits");

    Transaction tx;
    tx.id = static_cast<TxId>(txs_.size()) + 1;
    tx.kind = kind;
    tx.size_bits = size_bits;
    tx.created_at = queue_.now();
    const double delay = upload_delay(size_bits);
    txs_.push_back(tx);
    acct_.emplace_back();
    ++uploads_in_flight_;
    ++metrics_.submitted;
    const TxId id = tx.id;
    queue_.schedule_in(delay, [this, id] { on_uploaded(id); });
    return id;
}

void Ledger::on_uploaded(TxId id) {
    Transaction& tx = tx_mut(id);
    tx.uploaded_at = queue_.now();
    --uploads_in_flight_;
    ++metrics_.uploaded;
    metrics_.uploaded_payload_bits += tx.size_bits;
    metrics_.tup_sum += tx.uploaded_at - tx.created_at;
    mempool_.push_back(MempoolEntry{id, queue_.now()});
    mempool_bits_ += tx.size_bits;
    maybe_form_block();
}

double Ledger::oldest_pending_entry() const {
    // Returned transactions sit at the head with fresh entry times, so the
    // minimum is scanned, not read off the front. Only reached while the
    // pool holds less than one block of payload.
    double oldest = mempool_.front().entered_at;
    for (const MempoolEntry& e : mempool_) oldest = std::min(oldest, e.entered_at);
    return oldest;
}

void Ledger::maybe_form_block() {
    if (miner_busy_ || mempool_.empty()) return;
    if (mempool_bits_ < cfg_.block_size_bits) {
        const double due_at = oldest_pending_entry() + cfg_.max_wait_s;
        if (queue_.now() + 1e-12 < due_at) {
            if (armed_timer_at_ != due_at) {
                armed_timer_at_ = due_at;
                queue_.schedule_at(due_at, [this, due_at] {
                    if (armed_timer_at_ == due_at) {
                        armed_timer_at_ = -1.0;
                        maybe_form_block();
                    }
                });
            }
            return;
        }
    }
    try_form_block();
}

std::optional<BlockId> Ledger::try_form_block() {
    if (miner_busy_ || mempool_.empty()) return std::nullopt;
    const double now = queue_.now();
    const bool fill = mempool_bits_ >= cfg_.block_size_bits;
    const bool timer = now + 1e-12 >= oldest_pending_entry() + cfg_.max_wait_s;
    if (!fill && !timer) return std::nullopt;

    Block block;
    block.id = static_cast<BlockId>(blocks_.size()) + 1;
    block.parent = chain_tip_;
    block.header_bits = cfg_.header_bits;
    block.mining_started_at = now;
    // Oldest-first prefix that fits the payload budget.
    while (!mempool_.empty()) {
        const MempoolEntry& head = mempool_.front();
        const Transaction& tx = transaction(head.id);
        if (block.payload_bits + tx.size_bits > cfg_.block_size_bits) break;
        block.payload_bits += tx.size_bits;
        block.txs.push_back(head.id);
        metrics_.queue_sum_attempt += now - head.entered_at;
        ++metrics_.tx_attempts;
        PendingAccounting& a = acct(head.id);
        a.queue += now - head.entered_at;
        ++a.attempts;
        mempool_bits_ -= tx.size_bits;
        mempool_.pop_front();
    }
    armed_timer_at_ = -1.0;
    miner_busy_ = true;

    const double t_mine = sample_mining_time(rng_, cfg_.mining_rate_bps);
    const BlockId id = block.id;
    blocks_.push_back(std::move(block));
    queue_.schedule_in(t_mine, [this, id] { on_mined(id); });
    return id;
}

void Ledger::on_mined(BlockId id) {
    Block& block = blocks_.at(static_cast<std::size_t>(id - 1));
    block.mined_at = queue_.now();
    ++metrics_.blocks_mined;
    metrics_.mine_sum_block += block.mined_at - block.mining_started_at;
    const double t_prop = propagation_delay(block.header_bits + block.payload_bits);
    queue_.schedule_in(t_prop, [this, id] { on_propagated(id); });
}

void Ledger::on_propagated(BlockId id) {
    Block& block = blocks_.at(static_cast<std::size_t>(id - 1));
    block.propagated_at = queue_.now();
    const double t_mine = block.mined_at - block.mining_started_at;
    const double t_prop = block.propagated_at - block.mined_at;
    const auto n_tx = static_cast<double>(block.txs.size());
    metrics_.prop_sum_block += t_prop;
    metrics_.mine_sum_attempt += t_mine * n_tx;
    metrics_.prop_sum_attempt += t_prop * n_tx;
    metrics_.bits_propagated_payload += block.payload_bits;
    metrics_.bits_propagated_header += block.header_bits;
    for (TxId tx : block.txs) {
        PendingAccounting& a = acct(tx);
        a.mine += t_mine;
        a.prop += t_prop;
    }

    bool orphaned = false;
    if (cfg_.kind == LedgerKind::public_chain) {
        const double p = cfg_.fork_probability_override
                             ? *cfg_.fork_probability_override
                             : fork_probability(cfg_.mining_rate_bps, t_prop);
        orphaned = rng_.uniform01() < p;
    }

    if (orphaned) {
        block.status = BlockStatus::orphaned;
        ++metrics_.blocks_orphaned;
        // Back to the head of the pool, order preserved; queue time of the
        // next attempt starts now.
        for (auto it = block.txs.rbegin(); it != block.txs.rend(); ++it) {
            mempool_.push_front(MempoolEntry{*it, queue_.now()});
            mempool_bits_ += transaction(*it).size_bits;
        }
    } else {
        block.status = BlockStatus::appended;
        ++metrics_.blocks_appended;
        chain_tip_ = block.id;
        metrics_.confirmed_payload_bits += block.payload_bits;
        for (TxId txid : block.txs) {
            Transaction& tx = tx_mut(txid);
            tx.confirmed_at = queue_.now();
            ++metrics_.confirmed;
            metrics_.tc_sum += tx.confirmed_at - tx.created_at;
            if (cfg_.collect_trace) {
                const PendingAccounting& a = acct(txid);
                metrics_.trace.push_back(TxTraceRecord{txid, tx.uploaded_at - tx.created_at, a.queue,
                                                       a.mine, a.prop, tx.confirmed_at, a.attempts});
            }
        }
        if (sink_) {
            const std::vector<TxId> confirmed = block.txs;
            for (TxId txid : confirmed) sink_(transaction(txid));
        }
    }
    miner_busy_ = false;
    maybe_form_block();
}

std::vector<TxId> Ledger::mempool_snapshot() const {
    std::vector<TxId> ids;
    ids.reserve(mempool_.size());
    for (const MempoolEntry& e : mempool_) ids.push_back(e.id);
    return ids;
}

LedgerMetrics run_poisson_workload(const LedgerConfig& cfg, double lambda_tps, int64_t tx_size_bits,
                                   int64_t n_tx, uint64_t seed, TxKind kind) {
    if (!(lambda_tps > 0.0))
        throw std::invalid_argument("run_poisson_workload: lambda_tps must be > 0");
    EventQueue queue;
    Ledger ledger(cfg, queue, substream_seed(seed, "ledger"));
    Rng arrivals = substream(seed, "arrivals");
    double t = 0.0;
    for (int64_t i = 0; i < n_tx; ++i) {
        t += arrivals.exponential(lambda_tps);
        queue.schedule_at(t, [&ledger, kind, tx_size_bits] {
            ledger.submit_transaction(kind, tx_size_bits);
        });
    }
    queue.run_all();
    return ledger.metrics();
}

}  // namespace bcran
