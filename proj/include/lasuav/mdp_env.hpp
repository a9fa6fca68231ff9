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

#ifndef LASUAV_MDP_ENV_HPP
#define LASUAV_MDP_ENV_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lasuav/array_channel.hpp"
#include "lasuav/precoding.hpp"
#include "lasuav/rng.hpp"
#include "lasuav/rsma_rates.hpp"

namespace lasuav {

/// Scenario-level knobs shared by tasks: user count, beam structure, box and
/// speed limits, power budget, QoS shaping and the transmitter architecture.
struct ScenarioConfig {
    int k_users = 4;
    int n_beams = 4;  // J, max simultaneously used beams
    int beam_cap = 2; // max |S_j|
    Eigen::Vector2d q_min{-100.0, -100.0};
    Eigen::Vector2d q_max{100.0, 100.0};
    double altitude = 100.0; // m
    double v_max = 20.0;     // m/s
    double dt = 1.0;         // s
    double p_max = 50.0;     // W
    double r_min_qos = 1.0;  // bps/Hz, per-user floor shaped into the reward
    double mu_penalty = 10.0;
    double penalty_floor = -10.0; // reward assigned when precoding fails
    double r_star_fixed = 0.1;    // bps/Hz, used by fixed-split evaluations
    std::vector<double> snr_db_set{5.0};
    int horizon = 20;
    bool include_position_in_state = true;
    LasConfig las = LasConfig::make(8, 4, 4, 2, 4);
    PowerModel power;
    ChannelOptions channel;
    RateOptions rates;

    double p_las() const { return power.p_las(las.n_rf); }
    double transmit_budget() const { return p_max - p_las() - power.p_hov; }
    int n_slots() const { return n_beams * beam_cap; }
    int state_dim() const { return 2 * k_users + (include_position_in_state ? 2 : 0); }
    int action_dim() const { return 2 * n_slots() + 4 + las.n_lens * las.m_per_lens; }

    void validate() const {
        las.validate();
        if (k_users < 1)
            throw std::invalid_argument("scenario: k_users must be >= 1");
        if (n_beams < 1 || beam_cap < 1)
            throw std::invalid_argument("scenario: n_beams and beam_cap must be >= 1");
        if (k_users > n_beams * beam_cap)
            throw CapacityError("scenario: users exceed beam capacity");
        if (!(q_max.x() > q_min.x()) || !(q_max.y() > q_min.y()))
            throw std::invalid_argument("scenario: degenerate box");
        if (!(altitude > 0.0) || !(v_max > 0.0) || !(dt > 0.0))
            throw std::invalid_argument("scenario: altitude, v_max and dt must be positive");
        if (!(transmit_budget() > 0.0))
            throw BudgetError("scenario: p_max does not cover DC and hovering power");
        if (!(r_min_qos >= 0.0) || !(mu_penalty >= 0.0) || !(r_star_fixed >= 0.0))
            throw std::invalid_argument("scenario: negative QoS parameter");
        if (snr_db_set.empty())
            throw std::invalid_argument("scenario: snr_db_set must be non-empty");
        if (horizon < 1)
            throw std::invalid_argument("scenario: horizon must be >= 1");
    }
};

/// One MDP instance from the meta task distribution: user placement, channel
/// seed and operating SNR.
struct Task {
    int id = 0;
    std::vector<GroundUser> users;
    std::uint64_t channel_seed = 0;
    double snr_db = 5.0;
};

struct MdpState {
    Eigen::VectorXd v;
};

/// Experience tuple stored for off-policy training.
struct Transition {
    Eigen::VectorXd state;
    Eigen::VectorXd raw_action;
    Eigen::VectorXd next_state;
    double reward = 0.0;
};

/// The feasible image of a raw action: powers within budget, pose within box
/// and speed limit, one-hot lens selections, decodable common-rate shares.
struct DecodedAction {
    PowerAllocation alloc;
    UavPose pose;
    std::vector<Eigen::VectorXd> gamma;
    CommonRateSplit split;
    PrecoderSet precoders;
    RateReport report;
    double reward = 0.0;
    double qos_penalty = 0.0;
    bool precoder_failure = false;
};

struct StepInfo {
    RateReport report;
    double reward = 0.0;
    double qos_penalty = 0.0;
    UavPose pose;
    bool precoder_failure = false;
};

namespace detail {

/// Scale entries down so their sum does not exceed `cap` (exact in the final
/// floating-point comparison, not just analytically).
inline void scale_into_budget(double& first, Eigen::MatrixXd& rest, double cap) {
    double total = first + rest.sum();
    if (total <= cap || total <= 0.0)
        return;
    const double f = cap / total;
    first *= f;
    rest *= f;
    while (first + rest.sum() > cap) {
        first *= 0.9999999999999999;
        rest *= 0.9999999999999999;
    }
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

} // namespace detail

/// Episodic wrapper around the physical system. Pure given the task: gains
/// and spread offsets are drawn once from the task seed, geometry follows the
/// pose, and no hidden randomness enters step().
class Environment {
  public:
    Environment(ScenarioConfig scenario, Task task)
        : scenario_(std::move(scenario)), task_(std::move(task)) {
        scenario_.validate();
        if (static_cast<int>(task_.users.size()) != scenario_.k_users)
            throw std::invalid_argument("Environment: task user count mismatch");
        draws_ = draw_channel_params(task_.users, task_.channel_seed, scenario_.channel);
        PowerAllocation proto = make_allocation();
        noise_ = noise_from_snr(task_.snr_db, proto, scenario_.k_users);
        reset();
    }

    const ScenarioConfig& scenario() const { return scenario_; }
    const Task& task() const { return task_; }
    const BeamAssignment& assignment() const { return assignment_; }
    const UavPose& pose() const { return pose_; }
    double noise_power() const { return noise_; }
    int state_dim() const { return scenario_.state_dim(); }
    int action_dim() const { return scenario_.action_dim(); }
    int step_index() const { return t_; }
    bool episode_over() const { return t_ >= scenario_.horizon; }

    /// Per-dimension scale mapping a [-1,1] policy output onto the raw action
    /// space (position deltas are in meters, everything else is unitless).
    Eigen::VectorXd action_scale() const {
        Eigen::VectorXd s = Eigen::VectorXd::Ones(action_dim());
        const int base = scenario_.n_slots() + 2;
        s[base] = scenario_.v_max * scenario_.dt;
        s[base + 1] = scenario_.v_max * scenario_.dt;
        return s;
    }

    MdpState reset() {
        pose_ = UavPose{(scenario_.q_min + scenario_.q_max) / 2.0, scenario_.altitude};
        channel_ = realize_channel(scenario_.las, pose_, task_.users, draws_, scenario_.channel);
        assignment_ = cluster_on_best_beams(channel_);
        t_ = 0;
        const DecodedAction d = project_action(Eigen::VectorXd::Zero(action_dim()));
        last_interference_ = d.precoder_failure ? Eigen::VectorXd::Zero(2 * scenario_.k_users)
                                                : interference_features(d.report);
        state_ = make_state(last_interference_, pose_);
        return MdpState{state_};
    }

    /// Feasible decode of a raw action against the current pose; does not
    /// advance the episode.
    DecodedAction project_action(const Eigen::VectorXd& raw) const {
        if (raw.size() != action_dim())
            throw std::invalid_argument("project_action: wrong action dimension");
        if (!raw.allFinite())
            throw std::invalid_argument("project_action: raw action must be finite");
        DecodedAction d;
        const int n_slots = scenario_.n_slots();

        // Transmit powers: softmax over the active stream logits plus the
        // common-stream logit, scaled by the learned total-power fraction.
        std::vector<std::pair<int, int>> active; // (beam, user)
        std::vector<double> logits;
        for (int j = 0; j < scenario_.n_beams; ++j) {
            const auto& members = assignment_.users_of_beam[static_cast<std::size_t>(j)];
            for (std::size_t i = 0; i < members.size(); ++i) {
                active.emplace_back(j, members[i]);
                logits.push_back(raw[j * scenario_.beam_cap + static_cast<int>(i)]);
            }
        }
        logits.push_back(raw[n_slots]); // common stream
        const double scalar = (clamp1(raw[n_slots + 1]) + 1.0) / 2.0;
        const double budget = scenario_.transmit_budget();
        const double target = budget * scalar;
        Eigen::VectorXd fractions =
            detail::softmax(Eigen::Map<const Eigen::VectorXd>(logits.data(),
                                                              static_cast<Eigen::Index>(logits.size())));
        d.alloc = make_allocation();
        for (std::size_t i = 0; i < active.size(); ++i)
            d.alloc.p_private(active[i].first, active[i].second) = fractions[static_cast<Eigen::Index>(i)] * target;
        d.alloc.p_common = fractions[fractions.size() - 1] * target;
        detail::scale_into_budget(d.alloc.p_common, d.alloc.p_private, budget);
        while (!d.alloc.within_budget()) {
            d.alloc.p_common *= 0.9999999999999999;
            d.alloc.p_private *= 0.9999999999999999;
        }

        // Pose: norm-limited delta, then box clip.
        const int pos = n_slots + 2;
        Eigen::Vector2d delta{raw[pos], raw[pos + 1]};
        const double limit = scenario_.v_max * scenario_.dt;
        if (delta.norm() > limit) {
            delta *= limit / delta.norm();
            while (delta.norm() > limit)
                delta *= 0.9999999999999999;
        }
        d.pose.q_u.x() = std::clamp(pose_.q_u.x() + delta.x(), scenario_.q_min.x(), scenario_.q_max.x());
        d.pose.q_u.y() = std::clamp(pose_.q_u.y() + delta.y(), scenario_.q_min.y(), scenario_.q_max.y());
        d.pose.z_u = scenario_.altitude;

        // Lens selections from the score block.
        const int lens_base = n_slots + 4;
        Eigen::MatrixXd scores(scenario_.las.n_lens, scenario_.las.m_per_lens);
        for (int l = 0; l < scenario_.las.n_lens; ++l)
            for (int m = 0; m < scenario_.las.m_per_lens; ++m)
                scores(l, m) = raw[lens_base + l * scenario_.las.m_per_lens + m];
        d.gamma = select_lens_beams(scores);

        // Rebuild the physical layer at the new pose.
        const ChannelRealization ch =
            realize_channel(scenario_.las, d.pose, task_.users, draws_, scenario_.channel);
        d.precoders.gamma = d.gamma;
        d.precoders.w_lens = assemble_lens_matrix(d.gamma);
        d.split.r_star = Eigen::MatrixXd::Zero(scenario_.n_beams, scenario_.k_users);
        try {
            d.precoders.w_rf = quantize_rf(
                ideal_rf_phases(ch.h, d.precoders.w_lens, scenario_.las.n_rf), scenario_.las);
            d.precoders.w_bb = zero_forcing(ch.h, d.precoders.w_lens, d.precoders.w_rf);
            d.precoders.w_bb_common = common_precoder(ch.h, d.precoders.w_lens, d.precoders.w_rf);
            d.report = system_report(ch.h, d.precoders, d.alloc, d.split, assignment_, noise_,
                                     scenario_.rates);
            project_split(raw, d);
            apply_split(d);
            d.qos_penalty = qos_penalty(d.report);
            d.reward = d.report.sum_se - d.qos_penalty;
        } catch (const RankDeficiencyError&) {
            d.precoder_failure = true;
            d.reward = scenario_.penalty_floor;
        }
        return d;
    }

    /// Raw vector that re-decodes (at the current pose) to the same feasible
    /// action; inverse of project_action up to floating-point rounding.
    Eigen::VectorXd encode_action(const DecodedAction& d) const {
        Eigen::VectorXd raw = Eigen::VectorXd::Zero(action_dim());
        const int n_slots = scenario_.n_slots();
        const double total = d.alloc.total_transmit();
        const auto fraction_logit = [total](double p) {
            return p > 0.0 ? std::log(p / total) : -745.0; // exp underflows to a zero share
        };
        if (total > 0.0) {
            for (int j = 0; j < scenario_.n_beams; ++j) {
                const auto& members = assignment_.users_of_beam[static_cast<std::size_t>(j)];
                for (std::size_t i = 0; i < members.size(); ++i)
                    raw[j * scenario_.beam_cap + static_cast<int>(i)] =
                        fraction_logit(d.alloc.p_private(j, members[i]));
            }
            raw[n_slots] = fraction_logit(d.alloc.p_common);
        }
        raw[n_slots + 1] = 2.0 * (total / scenario_.transmit_budget()) - 1.0;
        raw[n_slots + 2] = d.pose.q_u.x() - pose_.q_u.x();
        raw[n_slots + 3] = d.pose.q_u.y() - pose_.q_u.y();
        const int lens_base = n_slots + 4;
        for (int l = 0; l < scenario_.las.n_lens; ++l)
            for (int m = 0; m < scenario_.las.m_per_lens; ++m)
                raw[lens_base + l * scenario_.las.m_per_lens + m] = d.gamma[static_cast<std::size_t>(l)][m];
        const int split_base = lens_base + scenario_.las.n_lens * scenario_.las.m_per_lens;
        for (int j = 0; j < scenario_.n_beams; ++j) {
            const auto& members = assignment_.users_of_beam[static_cast<std::size_t>(j)];
            const double beam_total = d.split.r_star.row(j).sum();
            for (std::size_t i = 0; i < members.size(); ++i) {
                const double share =
                    beam_total > 0.0 ? d.split.r_star(j, members[i]) / beam_total : 0.5;
                raw[split_base + j * scenario_.beam_cap + static_cast<int>(i)] = 2.0 * share - 1.0;
            }
        }
        return raw;
    }

    std::tuple<MdpState, double, StepInfo> step(const Eigen::VectorXd& raw) {
        DecodedAction d = project_action(raw);
        pose_ = d.pose;
        if (!d.precoder_failure)
            last_interference_ = interference_features(d.report);
        state_ = make_state(last_interference_, pose_);
        ++t_;
        StepInfo info{d.report, d.reward, d.qos_penalty, d.pose, d.precoder_failure};
        return {MdpState{state_}, d.reward, info};
    }

    MdpState state() const { return MdpState{state_}; }

  private:
    static double clamp1(double x) { return std::clamp(x, -1.0, 1.0); }

    PowerAllocation make_allocation() const {
        PowerAllocation a;
        a.p_private = Eigen::MatrixXd::Zero(scenario_.n_beams, scenario_.k_users);
        a.p_las = scenario_.p_las();
        a.p_hov = scenario_.power.p_hov;
        a.p_max = scenario_.p_max;
        return a;
    }

    /// Restrict the steering codebook to the n_beams directions with the
    /// strongest aggregate response, then cluster users among them.
    BeamAssignment cluster_on_best_beams(const ChannelRealization& ch) const {
        const std::vector<Eigen::VectorXcd> candidates =
            strongest_beams(ch, upa_codebook(scenario_.las), scenario_.n_beams);
        BeamAssignment asg = cluster_users(ch, candidates, scenario_.beam_cap);
        asg.n_beams = scenario_.n_beams; // label space is the configured J
        asg.users_of_beam.resize(static_cast<std::size_t>(scenario_.n_beams));
        return asg;
    }

    /// Fill d.split so each beam's shares are proportional to the requested
    /// logits and sum exactly to that beam's decodable margin.
    void project_split(const Eigen::VectorXd& raw, DecodedAction& d) const {
        const int split_base = scenario_.n_slots() + 4 + scenario_.las.n_lens * scenario_.las.m_per_lens;
        const bool global = scenario_.rates.decodability == DecodabilityScope::Global;
        double global_min = std::numeric_limits<double>::infinity();
        if (global)
            for (int j = 0; j < scenario_.n_beams; ++j)
                for (int k : assignment_.users_of_beam[static_cast<std::size_t>(j)])
                    global_min = std::min(global_min, d.report.r_common(j, k));

        std::vector<double> shares(static_cast<std::size_t>(scenario_.k_users), 0.0);
        double denom_global = 0.0;
        for (int j = 0; j < scenario_.n_beams; ++j) {
            const auto& members = assignment_.users_of_beam[static_cast<std::size_t>(j)];
            if (members.empty())
                continue;
            double denom = 0.0;
            double beam_min = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < members.size(); ++i) {
                const double x = raw[split_base + j * scenario_.beam_cap + static_cast<int>(i)];
                const double s = std::max(0.0, (x + 1.0) / 2.0);
                shares[static_cast<std::size_t>(members[i])] = s;
                denom += s;
                beam_min = std::min(beam_min, d.report.r_common(j, members[i]));
            }
            if (denom == 0.0) { // all-zero request: split equally
                for (int k : members)
                    shares[static_cast<std::size_t>(k)] = 1.0;
                denom = static_cast<double>(members.size());
            }
            if (global) {
                denom_global += denom;
                continue;
            }
            for (int k : members)
                d.split.r_star(j, k) = shares[static_cast<std::size_t>(k)] / denom * beam_min;
            double head = 0.0;
            Eigen::MatrixXd row = d.split.r_star.row(j);
            detail::scale_into_budget(head, row, beam_min);
            d.split.r_star.row(j) = row;
        }
        if (global) {
            for (int j = 0; j < scenario_.n_beams; ++j)
                for (int k : assignment_.users_of_beam[static_cast<std::size_t>(j)])
                    d.split.r_star(j, k) = shares[static_cast<std::size_t>(k)] / denom_global * global_min;
            double head = 0.0;
            detail::scale_into_budget(head, d.split.r_star, global_min);
        }
    }

    /// Recompute the rate totals after the split projection.
    void apply_split(DecodedAction& d) const {
        d.report.sum_se = 0.0;
        for (int j = 0; j < scenario_.n_beams; ++j)
            for (int k : assignment_.users_of_beam[static_cast<std::size_t>(j)]) {
                d.report.r_overall(j, k) = d.split.r_star(j, k) + d.report.r_private(j, k);
                d.report.sum_se += d.report.r_overall(j, k);
            }
        d.report.ee = d.report.sum_se / d.alloc.total_consumed();
    }

    double qos_penalty(const RateReport& report) const {
        double acc = 0.0;
        for (int j = 0; j < scenario_.n_beams; ++j)
            for (int k : assignment_.users_of_beam[static_cast<std::size_t>(j)])
                acc += std::max(0.0, scenario_.r_min_qos - report.r_overall(j, k));
        return scenario_.mu_penalty * acc;
    }

    /// Interference entries in deterministic (beam asc, member asc) order:
    /// per served pair, [I, I'].
    Eigen::VectorXd interference_features(const RateReport& report) const {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * scenario_.k_users);
        int idx = 0;
        for (int j = 0; j < scenario_.n_beams; ++j)
            for (int k : assignment_.users_of_beam[static_cast<std::size_t>(j)]) {
                f[idx++] = report.i_all(j, k);
                f[idx++] = report.i_private(j, k);
            }
        return f;
    }

    Eigen::VectorXd make_state(const Eigen::VectorXd& interference, const UavPose& pose) const {
        Eigen::VectorXd s(state_dim());
        s.head(interference.size()) = interference;
        if (scenario_.include_position_in_state) {
            const Eigen::Vector2d span = scenario_.q_max - scenario_.q_min;
            s[s.size() - 2] = 2.0 * (pose.q_u.x() - scenario_.q_min.x()) / span.x() - 1.0;
            s[s.size() - 1] = 2.0 * (pose.q_u.y() - scenario_.q_min.y()) / span.y() - 1.0;
        }
        return s;
    }

    ScenarioConfig scenario_;
    Task task_;
    ChannelDraws draws_;
    ChannelRealization channel_;
    BeamAssignment assignment_;
    UavPose pose_;
    Eigen::VectorXd state_;
    Eigen::VectorXd last_interference_;
    double noise_ = 0.0;
    int t_ = 0;
};

/// i.i.d. tasks: user positions uniform in the box, distinct channel seeds,
/// SNR drawn from the configured set. Deterministic under the master seed.
inline std::vector<Task> sample_tasks(int n, std::uint64_t master_seed,
                                      const ScenarioConfig& scenario) {
    if (n < 1)
        throw std::invalid_argument("sample_tasks: n must be >= 1");
    std::vector<Task> tasks;
    tasks.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(master_seed, static_cast<std::uint64_t>(2 * i)));
        Task t;
        t.id = i;
        for (int k = 0; k < scenario.k_users; ++k) {
            GroundUser u;
            u.id = k;
            u.q_k.x() = rng.uniform(scenario.q_min.x(), scenario.q_max.x());
            u.q_k.y() = rng.uniform(scenario.q_min.y(), scenario.q_max.y());
            t.users.push_back(u);
        }
        t.channel_seed = derive_seed(master_seed, static_cast<std::uint64_t>(2 * i + 1));
        t.snr_db = scenario.snr_db_set[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(scenario.snr_db_set.size()) - 1))];
        tasks.push_back(std::move(t));
    }
    return tasks;
}

} // namespace lasuav

#endif
