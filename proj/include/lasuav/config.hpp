// SPDX-License-Identifier: Apache-2.0
//
// lasuav - link-level simulator and learning-based resource allocation for a
// lens-antenna-subarray UAV downlink with rate-splitting multiple access
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef LASUAV_CONFIG_HPP
#define LASUAV_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lasuav/ddpg_agent.hpp"
#include "lasuav/mdp_env.hpp"
#include "lasuav/meta_learner.hpp"

namespace lasuav {

inline constexpr const char* kArtifactVersion = "0.1.0";

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string name = "lasuav";
};

/// Desk-scale experiment sizes; `--full` swaps in the full-scale ones.
struct SweepConfig {
    std::vector<double> snr_list{0.0, 5.0, 10.0, 15.0, 20.0};
    std::vector<int> lens_counts{1, 2, 4, 8};
    std::vector<int> k_list{1, 2, 3};
    int n_draws = 100;
    int n_episodes = 200;
    int n_meta_tasks = 50;
    int n_holdout_tasks = 10;
    int eval_episodes = 3;
    int adapt_warmup_steps = 64;

    void validate() const {
        if (snr_list.empty() || lens_counts.empty() || k_list.empty())
            throw ConfigError("config.sweep: empty sweep list");
        if (n_draws < 1 || n_episodes < 1 || n_meta_tasks < 1 || n_holdout_tasks < 1 ||
            eval_episodes < 1 || adapt_warmup_steps < 0)
            throw ConfigError("config.sweep: sizes must be positive");
    }
};

struct ExperimentConfig {
    ScenarioConfig scenario;
    AgentConfig agent;
    MetaConfig meta;
    SweepConfig sweep;
    RunConfig run;

    void validate() const {
        scenario.validate();
        agent.validate();
        meta.validate();
        sweep.validate();
    }
};

namespace cfgio {

/// Strict block reader: unknown keys are fatal, type or bound violations name
/// the offending field.
class Reader {
  public:
    Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw ConfigError(path_ + ": expected an object");
    }

    void require_keys(const std::vector<std::string>& allowed) const {
        for (const auto& item : j_.items()) {
            bool known = false;
            for (const auto& k : allowed)
                if (item.key() == k)
                    known = true;
            if (!known)
                throw ConfigError(path_ + "." + item.key() + ": unknown key");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    Reader block(const char* key) const {
        if (!j_.contains(key))
            return Reader(empty_, path_ + "." + key);
        return Reader(j_.at(key), path_ + "." + key);
    }

    void num(const char* key, double& out, double lo, double hi) const {
        if (!j_.contains(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_number())
            throw ConfigError(field(key) + ": expected a number");
        const double x = v.get<double>();
        check_bounds(key, x, lo, hi);
        out = x;
    }

    void integer(const char* key, int& out, long lo, long hi) const {
        if (!j_.contains(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer())
            throw ConfigError(field(key) + ": expected an integer");
        const long x = v.get<long>();
        check_bounds(key, static_cast<double>(x), static_cast<double>(lo), static_cast<double>(hi));
        out = static_cast<int>(x);
    }

    void integer(const char* key, long& out, long lo, long hi) const {
        int tmp = static_cast<int>(out);
        integer(key, tmp, lo, hi);
        out = tmp;
    }

    void uint64(const char* key, std::uint64_t& out) const {
        if (!j_.contains(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned() && !v.is_number_integer())
            throw ConfigError(field(key) + ": expected an unsigned integer");
        out = v.get<std::uint64_t>();
    }

    void flag(const char* key, bool& out) const {
        if (!j_.contains(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_boolean())
            throw ConfigError(field(key) + ": expected a boolean");
        out = v.get<bool>();
    }

    void str(const char* key, std::string& out) const {
        if (!j_.contains(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_string())
            throw ConfigError(field(key) + ": expected a string");
        out = v.get<std::string>();
    }

    void num_list(const char* key, std::vector<double>& out, double lo, double hi) const {
        if (!j_.contains(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_array())
            throw ConfigError(field(key) + ": expected an array of numbers");
        std::vector<double> tmp;
        for (const auto& e : v) {
            if (!e.is_number())
                throw ConfigError(field(key) + ": expected an array of numbers");
            const double x = e.get<double>();
            check_bounds(key, x, lo, hi);
            tmp.push_back(x);
        }
        out = tmp;
    }

    void int_list(const char* key, std::vector<int>& out, long lo, long hi) const {
        std::vector<double> tmp;
        for (int x : out)
            tmp.push_back(x);
        num_list(key, tmp, static_cast<double>(lo), static_cast<double>(hi));
        out.clear();
        for (double x : tmp) {
            if (x != static_cast<long>(x))
                throw ConfigError(field(key) + ": expected integers");
            out.push_back(static_cast<int>(x));
        }
    }

    void pair(const char* key, Eigen::Vector2d& out) const {
        if (!j_.contains(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError(field(key) + ": expected [x, y]");
        out.x() = v[0].get<double>();
        out.y() = v[1].get<double>();
    }

    std::string field(const char* key) const { return path_ + "." + std::string(key); }

  private:
    void check_bounds(const char* key, double x, double lo, double hi) const {
        if (!(x >= lo) || !(x <= hi))
            throw ConfigError(field(key) + ": value " + std::to_string(x) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }

    static const nlohmann::json empty_;
    const nlohmann::json& j_;
    std::string path_;
};

inline const nlohmann::json Reader::empty_ = nlohmann::json::object();

} // namespace cfgio

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["scenario"] = {{"k_users", c.scenario.k_users},
                     {"n_beams", c.scenario.n_beams},
                     {"beam_cap", c.scenario.beam_cap},
                     {"q_min", {c.scenario.q_min.x(), c.scenario.q_min.y()}},
                     {"q_max", {c.scenario.q_max.x(), c.scenario.q_max.y()}},
                     {"altitude", c.scenario.altitude},
                     {"v_max", c.scenario.v_max},
                     {"dt", c.scenario.dt},
                     {"p_max", c.scenario.p_max},
                     {"r_min_qos", c.scenario.r_min_qos},
                     {"mu_penalty", c.scenario.mu_penalty},
                     {"penalty_floor", c.scenario.penalty_floor},
                     {"r_star_fixed", c.scenario.r_star_fixed},
                     {"snr_db_set", c.scenario.snr_db_set},
                     {"horizon", c.scenario.horizon},
                     {"include_position_in_state", c.scenario.include_position_in_state}};
    j["las"] = {{"n_x", c.scenario.las.n_x},           {"n_y", c.scenario.las.n_y},
                {"n_lens", c.scenario.las.n_lens},     {"n_rf", c.scenario.las.n_rf},
                {"b_bits", c.scenario.las.b_bits},     {"wavelength", c.scenario.las.wavelength}};
    j["channel"] = {{"angular_spread_deg", c.scenario.channel.angular_spread_deg},
                    {"apply_path_loss", c.scenario.channel.apply_path_loss}};
    j["rates"] = {{"common_gain", c.scenario.rates.common_gain == CommonGainMode::CommonPrecoder
                                      ? "common"
                                      : "verbatim"},
                  {"interference", c.scenario.rates.interference == InterferenceMode::Standard
                                       ? "standard"
                                       : "verbatim"},
                  {"decodability", c.scenario.rates.decodability == DecodabilityScope::PerBeam
                                       ? "per_beam"
                                       : "global"}};
    j["power_model"] = {{"p_baseband", c.scenario.power.p_baseband},
                        {"p_rfchain", c.scenario.power.p_rfchain},
                        {"p_ps", c.scenario.power.p_ps},
                        {"p_switch", c.scenario.power.p_switch},
                        {"p_hov", c.scenario.power.p_hov}};
    j["agent"] = {{"discount", c.agent.discount},
                  {"lr_actor", c.agent.lr_actor},
                  {"lr_critic", c.agent.lr_critic},
                  {"soft_update_rho", c.agent.soft_update_rho},
                  {"batch_size", c.agent.batch_size},
                  {"noise_scale", c.agent.noise_scale},
                  {"noise_floor", c.agent.noise_floor},
                  {"noise_decay_steps", c.agent.noise_decay_steps},
                  {"warmup_steps", c.agent.warmup_steps},
                  {"hidden_width", c.agent.hidden_width},
                  {"n_hidden_layers", c.agent.n_hidden_layers},
                  {"grad_clip", c.agent.grad_clip},
                  {"buffer_capacity", c.agent.buffer_capacity}};
    j["meta"] = {{"tasks_per_batch", c.meta.tasks_per_batch},
                 {"local_steps", c.meta.local_steps},
                 {"lr_local_actor", c.meta.lr_local_actor},
                 {"lr_local_critic", c.meta.lr_local_critic},
                 {"lr_global_actor", c.meta.lr_global_actor},
                 {"lr_global_critic", c.meta.lr_global_critic},
                 {"support_size", c.meta.support_size},
                 {"query_size", c.meta.query_size},
                 {"meta_train_iters", c.meta.meta_train_iters},
                 {"adapt_iters", c.meta.adapt_iters},
                 {"grad_clip", c.meta.grad_clip}};
    j["sweep"] = {{"snr_list", c.sweep.snr_list},
                  {"lens_counts", c.sweep.lens_counts},
                  {"k_list", c.sweep.k_list},
                  {"n_draws", c.sweep.n_draws},
                  {"n_episodes", c.sweep.n_episodes},
                  {"n_meta_tasks", c.sweep.n_meta_tasks},
                  {"n_holdout_tasks", c.sweep.n_holdout_tasks},
                  {"eval_episodes", c.sweep.eval_episodes},
                  {"adapt_warmup_steps", c.sweep.adapt_warmup_steps}};
    j["run"] = {{"seed", c.run.seed}, {"out_dir", c.run.out_dir}, {"name", c.run.name}};
    return j;
}

/// Desk-scale defaults: full physical parameter set, reduced training sizes.
inline ExperimentConfig default_config() {
    ExperimentConfig c;
    c.agent.hidden_width = 128;
    c.agent.noise_decay_steps = 4000;
    c.meta.n_tasks = c.sweep.n_meta_tasks;
    c.meta.meta_train_iters = 150;
    return c;
}

/// Full-scale settings behind the --full flag (multi-hour budget).
inline void apply_full_scale(ExperimentConfig& c) {
    c.agent.hidden_width = 256;
    c.agent.noise_decay_steps = 100000;
    c.sweep.n_draws = 500;
    c.sweep.n_episodes = 500;
    c.sweep.n_meta_tasks = 1000;
    c.meta.n_tasks = 1000;
    c.meta.meta_train_iters = 10000;
    c.meta.adapt_iters = 1000;
}

inline ExperimentConfig config_from_json(const nlohmann::json& root) {
    ExperimentConfig c = default_config();
    cfgio::Reader top(root, "config");
    top.require_keys({"scenario", "las", "channel", "rates", "power_model", "agent", "meta",
                      "sweep", "run"});

    const auto sc = top.block("scenario");
    sc.require_keys({"k_users", "n_beams", "beam_cap", "q_min", "q_max", "altitude", "v_max", "dt",
                     "p_max", "r_min_qos", "mu_penalty", "penalty_floor", "r_star_fixed",
                     "snr_db_set", "horizon", "include_position_in_state"});
    sc.integer("k_users", c.scenario.k_users, 1, 64);
    sc.integer("n_beams", c.scenario.n_beams, 1, 64);
    sc.integer("beam_cap", c.scenario.beam_cap, 1, 64);
    sc.pair("q_min", c.scenario.q_min);
    sc.pair("q_max", c.scenario.q_max);
    sc.num("altitude", c.scenario.altitude, 1e-3, 1e5);
    sc.num("v_max", c.scenario.v_max, 1e-9, 1e6);
    sc.num("dt", c.scenario.dt, 1e-9, 1e6);
    sc.num("p_max", c.scenario.p_max, 1e-12, 1e9);
    sc.num("r_min_qos", c.scenario.r_min_qos, 0.0, 1e6);
    sc.num("mu_penalty", c.scenario.mu_penalty, 0.0, 1e9);
    sc.num("penalty_floor", c.scenario.penalty_floor, -1e9, 0.0);
    sc.num("r_star_fixed", c.scenario.r_star_fixed, 0.0, 1e6);
    sc.num_list("snr_db_set", c.scenario.snr_db_set, -100.0, 200.0);
    sc.integer("horizon", c.scenario.horizon, 1, 1000000);
    sc.flag("include_position_in_state", c.scenario.include_position_in_state);

    const auto las = top.block("las");
    las.require_keys({"n_x", "n_y", "n_lens", "n_rf", "b_bits", "wavelength"});
    int n_x = c.scenario.las.n_x, n_y = c.scenario.las.n_y, n_lens = c.scenario.las.n_lens,
        n_rf = c.scenario.las.n_rf, b_bits = c.scenario.las.b_bits;
    double wavelength = c.scenario.las.wavelength;
    las.integer("n_x", n_x, 1, 4096);
    las.integer("n_y", n_y, 1, 4096);
    las.integer("n_lens", n_lens, 1, 4096);
    las.integer("n_rf", n_rf, 1, 4096);
    las.integer("b_bits", b_bits, 1, 16);
    las.num("wavelength", wavelength, 1e-9, 1e3);
    try {
        c.scenario.las = LasConfig::make(n_x, n_y, n_lens, n_rf, b_bits, wavelength);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config.las: " + std::string(e.what()));
    }

    const auto chan = top.block("channel");
    chan.require_keys({"angular_spread_deg", "apply_path_loss"});
    chan.num("angular_spread_deg", c.scenario.channel.angular_spread_deg, 0.0, 90.0);
    chan.flag("apply_path_loss", c.scenario.channel.apply_path_loss);

    const auto rates = top.block("rates");
    rates.require_keys({"common_gain", "interference", "decodability"});
    std::string common_gain = "common", interference = "standard", decodability = "per_beam";
    rates.str("common_gain", common_gain);
    rates.str("interference", interference);
    rates.str("decodability", decodability);
    if (common_gain == "common")
        c.scenario.rates.common_gain = CommonGainMode::CommonPrecoder;
    else if (common_gain == "verbatim")
        c.scenario.rates.common_gain = CommonGainMode::PrivatePrecoderVerbatim;
    else
        throw ConfigError("config.rates.common_gain: expected \"common\" or \"verbatim\"");
    if (interference == "standard")
        c.scenario.rates.interference = InterferenceMode::Standard;
    else if (interference == "verbatim")
        c.scenario.rates.interference = InterferenceMode::VerbatimGainIndex;
    else
        throw ConfigError("config.rates.interference: expected \"standard\" or \"verbatim\"");
    if (decodability == "per_beam")
        c.scenario.rates.decodability = DecodabilityScope::PerBeam;
    else if (decodability == "global")
        c.scenario.rates.decodability = DecodabilityScope::Global;
    else
        throw ConfigError("config.rates.decodability: expected \"per_beam\" or \"global\"");

    const auto pm = top.block("power_model");
    pm.require_keys({"p_baseband", "p_rfchain", "p_ps", "p_switch", "p_hov"});
    pm.num("p_baseband", c.scenario.power.p_baseband, 0.0, 1e6);
    pm.num("p_rfchain", c.scenario.power.p_rfchain, 0.0, 1e6);
    pm.num("p_ps", c.scenario.power.p_ps, 0.0, 1e6);
    pm.num("p_switch", c.scenario.power.p_switch, 0.0, 1e6);
    pm.num("p_hov", c.scenario.power.p_hov, 0.0, 1e6);

    const auto ag = top.block("agent");
    ag.require_keys({"discount", "lr_actor", "lr_critic", "soft_update_rho", "batch_size",
                     "noise_scale", "noise_floor", "noise_decay_steps", "warmup_steps",
                     "hidden_width", "n_hidden_layers", "grad_clip", "buffer_capacity"});
    ag.num("discount", c.agent.discount, 0.0, 0.999999);
    ag.num("lr_actor", c.agent.lr_actor, 1e-12, 10.0);
    ag.num("lr_critic", c.agent.lr_critic, 1e-12, 10.0);
    ag.num("soft_update_rho", c.agent.soft_update_rho, 1e-9, 1.0);
    ag.integer("batch_size", c.agent.batch_size, 1, 1000000);
    ag.num("noise_scale", c.agent.noise_scale, 0.0, 10.0);
    ag.num("noise_floor", c.agent.noise_floor, 0.0, 10.0);
    ag.integer("noise_decay_steps", c.agent.noise_decay_steps, 1, 1000000000);
    ag.integer("warmup_steps", c.agent.warmup_steps, 0, 1000000000);
    ag.integer("hidden_width", c.agent.hidden_width, 1, 65536);
    ag.integer("n_hidden_layers", c.agent.n_hidden_layers, 1, 64);
    ag.num("grad_clip", c.agent.grad_clip, 1e-9, 1e9);
    ag.integer("buffer_capacity", c.agent.buffer_capacity, 1, 100000000);

    const auto mt = top.block("meta");
    mt.require_keys({"tasks_per_batch", "local_steps", "lr_local_actor", "lr_local_critic",
                     "lr_global_actor", "lr_global_critic", "support_size", "query_size",
                     "meta_train_iters", "adapt_iters", "grad_clip"});
    mt.integer("tasks_per_batch", c.meta.tasks_per_batch, 1, 100000);
    mt.integer("local_steps", c.meta.local_steps, 0, 100000);
    mt.num("lr_local_actor", c.meta.lr_local_actor, 1e-12, 10.0);
    mt.num("lr_local_critic", c.meta.lr_local_critic, 1e-12, 10.0);
    mt.num("lr_global_actor", c.meta.lr_global_actor, 1e-12, 10.0);
    mt.num("lr_global_critic", c.meta.lr_global_critic, 1e-12, 10.0);
    mt.integer("support_size", c.meta.support_size, 1, 1000000);
    mt.integer("query_size", c.meta.query_size, 1, 1000000);
    mt.integer("meta_train_iters", c.meta.meta_train_iters, 0, 1000000000);
    mt.integer("adapt_iters", c.meta.adapt_iters, 0, 1000000000);
    mt.num("grad_clip", c.meta.grad_clip, 1e-9, 1e9);

    const auto sw = top.block("sweep");
    sw.require_keys({"snr_list", "lens_counts", "k_list", "n_draws", "n_episodes", "n_meta_tasks",
                     "n_holdout_tasks", "eval_episodes", "adapt_warmup_steps"});
    sw.num_list("snr_list", c.sweep.snr_list, -100.0, 200.0);
    sw.int_list("lens_counts", c.sweep.lens_counts, 1, 4096);
    sw.int_list("k_list", c.sweep.k_list, 1, 64);
    sw.integer("n_draws", c.sweep.n_draws, 1, 1000000);
    sw.integer("n_episodes", c.sweep.n_episodes, 1, 1000000);
    sw.integer("n_meta_tasks", c.sweep.n_meta_tasks, 1, 1000000);
    sw.integer("n_holdout_tasks", c.sweep.n_holdout_tasks, 1, 1000000);
    sw.integer("eval_episodes", c.sweep.eval_episodes, 1, 1000000);
    sw.integer("adapt_warmup_steps", c.sweep.adapt_warmup_steps, 0, 1000000000);
    c.meta.n_tasks = c.sweep.n_meta_tasks;

    const auto rn = top.block("run");
    rn.require_keys({"seed", "out_dir", "name"});
    rn.uint64("seed", c.run.seed);
    rn.str("out_dir", c.run.out_dir);
    rn.str("name", c.run.name);

    c.validate();
    return c;
}

/// Loads either a plain config or a previously emitted manifest (the manifest
/// carries the config snapshot under "config").
inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    if (j.contains("config") && j.contains("config_hash"))
        j = j.at("config");
    return config_from_json(j);
}

/// FNV-1a content fingerprint of the canonical (key-sorted) config dump.
inline std::string config_hash(const ExperimentConfig& c) {
    const std::string dump = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace lasuav

#endif
