#include "bcran/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bcran {

using nlohmann::json;

std::array<UserProfile, 3> SimConfig::default_profiles() {
    // Sensitivities stay inside the 0.01..0.2 band; heavier users weigh
    // bandwidth more, lighter users weigh price more.
    return {UserProfile{"low", 0.001, 0.01, 0.05, 0.20},
            UserProfile{"average", 0.005, 0.02, 0.10, 0.10},
            UserProfile{"high", 0.01, 0.025, 0.20, 0.05}};
}

LedgerConfig SimConfig::default_public_ledger() {
    LedgerConfig cfg;
    cfg.kind = LedgerKind::public_chain;
    cfg.link.kind = LinkModel::Kind::dcf;
    return cfg;
}

LedgerConfig SimConfig::default_private_ledger() {
    LedgerConfig cfg;
    cfg.kind = LedgerKind::private_chain;
    cfg.link.kind = LinkModel::Kind::constant;
    cfg.link.constant_delay_s = 0.010;
    return cfg;
}

SimConfig SimConfig::finalized() const {
    SimConfig out = *this;
    if (out.public_ledger.link.kind == LinkModel::Kind::dcf) out.public_ledger.link.dcf = out.dcf;
    if (out.private_ledger.link.kind == LinkModel::Kind::dcf) out.private_ledger.link.dcf = out.dcf;
    return out;
}

ConfigValidationError::ConfigValidationError(std::vector<std::string> issues)
    : std::runtime_error([&issues] {
          std::ostringstream os;
          os << "invalid configuration (" << issues.size() << " issue"
             << (issues.size() == 1 ? "" : "s") << "):";
          for (const std::string& i : issues) os << "\n  - " << i;
          return os.str();
      }()),
      issues_(std::move(issues)) {}

namespace {

// Walks one JSON object level, checking types and collecting unknown keys.
class Section {
 public:
    Section(const json* node, std::string path, std::vector<std::string>& issues)
        : node_(node), path_(std::move(path)), issues_(issues) {}

    bool present() const { return node_ != nullptr; }

    Section child(const std::string& key) {
        known_.insert(key);
        if (!node_ || !node_->contains(key)) return Section(nullptr, join(key), issues_);
        const json& c = (*node_)[key];
        if (!c.is_object()) {
            issues_.push_back(join(key) + ": expected an object");
            return Section(nullptr, join(key), issues_);
        }
        return Section(&c, join(key), issues_);
    }

    template <typename T>
    void number(const std::string& key, T& out) {
        known_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        const json& v = (*node_)[key];
        if (!v.is_number()) {
            issues_.push_back(join(key) + ": expected a number");
            return;
        }
        out = v.get<T>();
    }

    void boolean(const std::string& key, bool& out) {
        known_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        const json& v = (*node_)[key];
        if (!v.is_boolean()) {
            issues_.push_back(join(key) + ": expected true or false");
            return;
        }
        out = v.get<bool>();
    }

    void text(const std::string& key, std::string& out) {
        known_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        const json& v = (*node_)[key];
        if (!v.is_string()) {
            issues_.push_back(join(key) + ": expected a string");
            return;
        }
        out = v.get<std::string>();
    }

    void number_array(const std::string& key, std::vector<double>& out) {
        known_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        const json& v = (*node_)[key];
        if (!v.is_array()) {
            issues_.push_back(join(key) + ": expected an array of numbers");
            return;
        }
        std::vector<double> parsed;
        for (const json& e : v) {
            if (!e.is_number()) {
                issues_.push_back(join(key) + ": expected an array of numbers");
                return;
            }
            parsed.push_back(e.get<double>());
        }
        out = std::move(parsed);
    }

    void finish() {
        if (!node_) return;
        for (auto it = node_->begin(); it != node_->end(); ++it)
            if (!known_.count(it.key())) issues_.push_back(join(it.key()) + ": unknown key");
    }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    void issue(const std::string& key, const std::string& msg) { issues_.push_back(join(key) + ": " + msg); }

 private:
    const json* node_;
    std::string path_;
    std::vector<std::string>& issues_;
    std::set<std::string> known_;
};

void read_profile(Section& users, const std::string& name, UserProfile& p,
                  std::vector<std::string>& issues) {
    Section s = users.child(name);
    s.number("demand_min", p.demand_min);
    s.number("demand_max", p.demand_max);
    s.number("psi", p.psi);
    s.number("xi", p.xi);
    s.finish();
    if (!(p.demand_min > 0.0) || !(p.demand_max < 1.0) || p.demand_max < p.demand_min)
        issues.push_back("users.profiles." + name + ": demand range must satisfy 0 < min <= max < 1");
}

void read_ledger(Section& parent, const std::string& name, LedgerConfig& cfg,
                 std::vector<std::string>& issues) {
    Section s = parent.child(name);
    s.number("block_size_bits", cfg.block_size_bits);
    s.number("max_wait_s", cfg.max_wait_s);
    s.number("mining_rate_bps", cfg.mining_rate_bps);
    s.number("header_bits", cfg.header_bits);
    s.number("n_peers", cfg.n_peers);
    s.boolean("collect_trace", cfg.collect_trace);
    Section link = s.child("link");
    std::string link_type = cfg.link.kind == LinkModel::Kind::dcf ? "dcf" : "constant";
    link.text("type", link_type);
    link.number("delay_s", cfg.link.constant_delay_s);
    int fixed = cfg.link.fixed_contenders.value_or(0);
    link.number("fixed_contenders", fixed);
    link.finish();
    s.finish();
    if (link_type == "dcf")
        cfg.link.kind = LinkModel::Kind::dcf;
    else if (link_type == "constant")
        cfg.link.kind = LinkModel::Kind::constant;
    else
        issues.push_back(name + ".link.type: must be \"constant\" or \"dcf\"");
    if (fixed > 0) cfg.link.fixed_contenders = fixed;
    if (cfg.block_size_bits <= 0) issues.push_back(name + ".block_size_bits: must be > 0");
    if (!(cfg.max_wait_s > 0.0)) issues.push_back(name + ".max_wait_s: must be > 0");
    if (!(cfg.mining_rate_bps > 0.0)) issues.push_back(name + ".mining_rate_bps: must be > 0");
    if (cfg.header_bits < 0) issues.push_back(name + ".header_bits: must be >= 0");
    if (cfg.n_peers < 1) issues.push_back(name + ".n_peers: must be >= 1");
    if (cfg.link.constant_delay_s < 0.0) issues.push_back(name + ".link.delay_s: must be >= 0");
}

}  // namespace

SimConfig config_from_json(const json& j) {
    std::vector<std::string> issues;
    if (!j.is_object()) throw ConfigValidationError({"top level: expected a JSON object"});
    SimConfig cfg;

    Section root(&j, "", issues);
    double seed_num = static_cast<double>(cfg.seed);
    root.number("seed", seed_num);
    cfg.seed = static_cast<uint64_t>(seed_num);
    root.number("replications", cfg.replications);
    root.number("horizon_s", cfg.horizon_s);
    root.number("epoch_s", cfg.epoch_s);
    root.number("tx_size_bits", cfg.tx_size_bits);
    root.number("lambda_tps", cfg.lambda_tps);
    root.number("workload_tx_count", cfg.workload_tx_count);

    Section topo = root.child("topology");
    topo.number("num_cells", cfg.num_cells);
    topo.number("cell_radius_m", cfg.cell_radius_m);
    topo.finish();

    Section radio = root.child("radio");
    radio.number("tx_power_dbm", cfg.radio.tx_power_dbm);
    radio.number("pl0_db", cfg.radio.pl0_db);
    radio.number("alpha", cfg.radio.alpha);
    radio.number("sigma_db", cfg.radio.sigma_db);
    radio.number("gamma_db", cfg.radio.gamma_db);
    radio.number("bandwidth_hz", cfg.radio.bandwidth_hz);
    radio.number("carrier_hz", cfg.radio.carrier_hz);
    double noise_figure_db = 7.0;
    radio.number("noise_figure_db", noise_figure_db);
    double noise_dbm_override = 0.0;
    bool has_noise_override = radio.present() && j.contains("radio") && j["radio"].contains("noise_dbm");
    radio.number("noise_dbm", noise_dbm_override);
    std::string interference = "holder_coordinated";
    radio.text("interference", interference);
    radio.finish();
    if (cfg.radio.bandwidth_hz > 0.0)
        cfg.radio.noise_dbm = thermal_noise_dbm(cfg.radio.bandwidth_hz, noise_figure_db);
    if (has_noise_override) cfg.radio.noise_dbm = noise_dbm_override;
    if (interference == "holder_coordinated")
        cfg.interference = InterferenceMode::holder_coordinated;
    else if (interference == "all_cells")
        cfg.interference = InterferenceMode::all_cells;
    else
        issues.push_back("radio.interference: must be \"holder_coordinated\" or \"all_cells\"");

    Section users = root.child("users");
    users.number("count", cfg.n_users);
    Section mix = users.child("profile_mix");
    mix.number("low", cfg.profile_mix.low);
    mix.number("average", cfg.profile_mix.average);
    mix.number("high", cfg.profile_mix.high);
    mix.finish();
    Section prof = users.child("profiles");
    read_profile(prof, "low", cfg.profiles[0], issues);
    read_profile(prof, "average", cfg.profiles[1], issues);
    read_profile(prof, "high", cfg.profiles[2], issues);
    prof.finish();
    users.finish();

    Section market = root.child("market");
    market.number("operators", cfg.n_operators);
    market.number_array("ownership_ratios", cfg.ownership_ratios);
    market.number("slices_per_cell", cfg.slices_per_cell);
    market.number("lease_duration_s", cfg.lease_duration_s);
    market.number("lease_price_min", cfg.lease_price_min);
    market.number("lease_price_max", cfg.lease_price_max);
    std::string policy = cfg.policy.kind == AuctionPolicy::Kind::utility ? "utility" : "random_uniform";
    market.text("policy", policy);
    market.number_array("utility_weights", cfg.policy.weights);
    market.number("acceptance_c", cfg.acceptance_c);
    market.boolean("dynamic_sharing", cfg.dynamic_sharing);
    market.boolean("reauction_each_epoch", cfg.reauction_each_epoch);
    market.finish();
    if (policy == "random_uniform")
        cfg.policy.kind = AuctionPolicy::Kind::random_uniform;
    else if (policy == "utility")
        cfg.policy.kind = AuctionPolicy::Kind::utility;
    else
        issues.push_back("market.policy: must be \"random_uniform\" or \"utility\"");

    read_ledger(root, "public_ledger", cfg.public_ledger, issues);
    read_ledger(root, "private_ledger", cfg.private_ledger, issues);

    Section dcf = root.child("dcf");
    dcf.number("cw_min", cfg.dcf.cw_min);
    dcf.number("max_backoff_stage", cfg.dcf.max_backoff_stage);
    dcf.number("r_max", cfg.dcf.r_max);
    dcf.number("mcs_index", cfg.dcf.mcs_index);
    dcf.number("empty_slot_us", cfg.dcf.empty_slot_us);
    dcf.number("sifs_us", cfg.dcf.sifs_us);
    dcf.number("difs_us", cfg.dcf.difs_us);
    dcf.number("rts_us", cfg.dcf.rts_us);
    dcf.number("cts_us", cfg.dcf.cts_us);
    dcf.number("ack_us", cfg.dcf.ack_us);
    dcf.number("phy_header_us", cfg.dcf.phy_header_us);
    dcf.number("data_rate_bps", cfg.dcf.data_rate_bps);
    dcf.finish();

    root.finish();

    // Cross-field invariants.
    if (cfg.replications < 1) issues.push_back("replications: must be >= 1");
    if (cfg.horizon_s < 0.0) issues.push_back("horizon_s: must be >= 0");
    if (!(cfg.epoch_s > 0.0)) issues.push_back("epoch_s: must be > 0");
    if (cfg.tx_size_bits <= 0) issues.push_back("tx_size_bits: must be > 0");
    if (!(cfg.lambda_tps > 0.0)) issues.push_back("lambda_tps: must be > 0");
    if (cfg.workload_tx_count < 1) issues.push_back("workload_tx_count: must be >= 1");
    bool ring_ok = false;
    for (int k = 0; 1 + 3 * k * (k + 1) <= cfg.num_cells; ++k)
        if (1 + 3 * k * (k + 1) == cfg.num_cells) ring_ok = true;
    if (!ring_ok) issues.push_back("topology.num_cells: must be 1, 7, 19, 37, ... (complete rings)");
    if (!(cfg.cell_radius_m > 0.0)) issues.push_back("topology.cell_radius_m: must be > 0");
    if (!(cfg.radio.alpha > 0.0)) issues.push_back("radio.alpha: must be > 0");
    if (!(cfg.radio.bandwidth_hz > 0.0)) issues.push_back("radio.bandwidth_hz: must be > 0");
    if (cfg.n_users < 0) issues.push_back("users.count: must be >= 0");
    if (cfg.profile_mix.low < 0.0 || cfg.profile_mix.average < 0.0 || cfg.profile_mix.high < 0.0 ||
        cfg.profile_mix.low + cfg.profile_mix.average + cfg.profile_mix.high <= 0.0)
        issues.push_back("users.profile_mix: fractions must be >= 0 and not all zero");
    for (const UserProfile& p : cfg.profiles)
        if (p.psi < -1.0 || p.psi > 1.0 || p.xi < -1.0 || p.xi > 1.0)
            issues.push_back("users.profiles." + p.name + ": psi and xi must be in [-1, 1]");
    if (cfg.n_operators < 1) issues.push_back("market.operators: must be >= 1");
    if (!cfg.ownership_ratios.empty()) {
        if (static_cast<int>(cfg.ownership_ratios.size()) != cfg.n_operators)
            issues.push_back("market.ownership_ratios: length must equal market.operators");
        double total = 0.0;
        bool negative = false;
        for (double r : cfg.ownership_ratios) {
            total += r;
            negative = negative || r < 0.0;
        }
        if (negative || std::abs(total - 1.0) > 1e-9)
            issues.push_back("market.ownership_ratios: must be non-negative and sum to 1");
    }
    if (cfg.slices_per_cell < 1) issues.push_back("market.slices_per_cell: must be >= 1");
    if (!(cfg.lease_duration_s > 0.0)) issues.push_back("market.lease_duration_s: must be > 0");
    if (cfg.lease_price_min < 0.0 || cfg.lease_price_max < cfg.lease_price_min)
        issues.push_back("market.lease_price_min/max: need 0 <= min <= max");
    if (cfg.policy.kind == AuctionPolicy::Kind::utility) {
        if (cfg.policy.weights.size() != 3)
            issues.push_back("market.utility_weights: expected 3 weights");
        for (double w : cfg.policy.weights)
            if (w < 0.0 || w > 1.0) issues.push_back("market.utility_weights: weights must be in [0,1]");
    }
    if (!(cfg.acceptance_c > 0.0)) issues.push_back("market.acceptance_c: must be > 0");
    if (cfg.public_ledger.block_size_bits < cfg.tx_size_bits)
        issues.push_back("public_ledger.block_size_bits: smaller than tx_size_bits");
    if (cfg.private_ledger.block_size_bits < cfg.tx_size_bits)
        issues.push_back("private_ledger.block_size_bits: smaller than tx_size_bits");
    cfg.public_ledger.kind = LedgerKind::public_chain;
    cfg.private_ledger.kind = LedgerKind::private_chain;
    if (cfg.dcf.cw_min < 1) issues.push_back("dcf.cw_min: must be >= 1");
    if (cfg.dcf.r_max < 0) issues.push_back("dcf.r_max: must be >= 0");
    if (cfg.dcf.max_backoff_stage < 0) issues.push_back("dcf.max_backoff_stage: must be >= 0");
    if (cfg.dcf.mcs_index < 0 || cfg.dcf.mcs_index > 11) issues.push_back("dcf.mcs_index: must be 0..11");

    if (!issues.empty()) throw ConfigValidationError(std::move(issues));
    return cfg;
}

json config_to_json(const SimConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["replications"] = cfg.replications;
    j["horizon_s"] = cfg.horizon_s;
    j["epoch_s"] = cfg.epoch_s;
    j["tx_size_bits"] = cfg.tx_size_bits;
    j["lambda_tps"] = cfg.lambda_tps;
    j["workload_tx_count"] = cfg.workload_tx_count;
    j["topology"] = {{"num_cells", cfg.num_cells}, {"cell_radius_m", cfg.cell_radius_m}};
    j["radio"] = {{"tx_power_dbm", cfg.radio.tx_power_dbm},
                  {"pl0_db", cfg.radio.pl0_db},
                  {"alpha", cfg.radio.alpha},
                  {"sigma_db", cfg.radio.sigma_db},
                  {"gamma_db", cfg.radio.gamma_db},
                  {"bandwidth_hz", cfg.radio.bandwidth_hz},
                  {"carrier_hz", cfg.radio.carrier_hz},
                  {"noise_dbm", cfg.radio.noise_dbm},
                  {"interference", cfg.interference == InterferenceMode::all_cells
                                       ? "all_cells"
                                       : "holder_coordinated"}};
    json profiles;
    for (const UserProfile& p : cfg.profiles)
        profiles[p.name] = {{"demand_min", p.demand_min},
                            {"demand_max", p.demand_max},
                            {"psi", p.psi},
                            {"xi", p.xi}};
    j["users"] = {{"count", cfg.n_users},
                  {"profile_mix",
                   {{"low", cfg.profile_mix.low},
                    {"average", cfg.profile_mix.average},
                    {"high", cfg.profile_mix.high}}},
                  {"profiles", profiles}};
    j["market"] = {{"operators", cfg.n_operators},
                   {"ownership_ratios", cfg.ownership_ratios},
                   {"slices_per_cell", cfg.slices_per_cell},
                   {"lease_duration_s", cfg.lease_duration_s},
                   {"lease_price_min", cfg.lease_price_min},
                   {"lease_price_max", cfg.lease_price_max},
                   {"policy", cfg.policy.kind == AuctionPolicy::Kind::utility ? "utility"
                                                                              : "random_uniform"},
                   {"utility_weights", cfg.policy.weights},
                   {"acceptance_c", cfg.acceptance_c},
                   {"dynamic_sharing", cfg.dynamic_sharing},
                   {"reauction_each_epoch", cfg.reauction_each_epoch}};
    auto ledger_json = [](const LedgerConfig& lc) {
        json l = {{"block_size_bits", lc.block_size_bits},
                  {"max_wait_s", lc.max_wait_s},
                  {"mining_rate_bps", lc.mining_rate_bps},
                  {"header_bits", lc.header_bits},
                  {"n_peers", lc.n_peers},
                  {"collect_trace", lc.collect_trace},
                  {"link",
                   {{"type", lc.link.kind == LinkModel::Kind::dcf ? "dcf" : "constant"},
                    {"delay_s", lc.link.constant_delay_s}}}};
        if (lc.link.fixed_contenders) l["link"]["fixed_contenders"] = *lc.link.fixed_contenders;
        return l;
    };
    j["public_ledger"] = ledger_json(cfg.public_ledger);
    j["private_ledger"] = ledger_json(cfg.private_ledger);
    j["dcf"] = {{"cw_min", cfg.dcf.cw_min},
                {"max_backoff_stage", cfg.dcf.max_backoff_stage},
                {"r_max", cfg.dcf.r_max},
                {"mcs_index", cfg.dcf.mcs_index},
                {"empty_slot_us", cfg.dcf.empty_slot_us},
                {"sifs_us", cfg.dcf.sifs_us},
                {"difs_us", cfg.dcf.difs_us},
                {"rts_us", cfg.dcf.rts_us},
                {"cts_us", cfg.dcf.cts_us},
                {"ack_us", cfg.dcf.ack_us},
                {"phy_header_us", cfg.dcf.phy_header_us},
                {"data_rate_bps", cfg.dcf.data_rate_bps}};
    return j;
}

uint64_t config_hash(const SimConfig& cfg) {
    return fnv1a64(config_to_json(cfg).dump());
}

SimConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigValidationError({"cannot open config file: " + path});
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigValidationError({std::string("JSON syntax error: ") + e.what()});
    }
    return config_from_json(j);
}

void apply_override(json& j, const std::string& dotted_key, const std::string& value) {
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // plain string
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted_key.find('.', start);
        const std::string key = dotted_key.substr(start, dot - start);
        if (key.empty()) throw ConfigValidationError({"--set: empty key segment in " + dotted_key});
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

}  // namespace bcran
