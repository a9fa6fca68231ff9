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

#ifndef LASUAV_DDPG_AGENT_HPP
#define LASUAV_DDPG_AGENT_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lasuav/mdp_env.hpp"
#include "lasuav/neural_core.hpp"
#include "lasuav/rng.hpp"

namespace lasuav {

struct AgentConfig {
    double discount = 0.9;
    double lr_actor = 1e-3;
    double lr_critic = 1e-3;
    double soft_update_rho = 0.005;
    int batch_size = 64;
    double noise_scale = 0.2;
    double noise_floor = 0.01;
    long noise_decay_steps = 20000;
    int warmup_steps = 500;
    int hidden_width = 256;
    int n_hidden_layers = 4;
    double grad_clip = 1.0;
    int buffer_capacity = 100000;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(discount >= 0.0) || discount >= 1.0)
            throw std::invalid_argument("agent: discount must be in [0, 1)");
        if (batch_size < 1 || batch_size > buffer_capacity)
            throw std::invalid_argument("agent: need 1 <= batch_size <= buffer_capacity");
        if (!(lr_actor > 0.0) || !(lr_critic > 0.0))
            throw std::invalid_argument("agent: learning rates must be positive");
        if (!(soft_update_rho > 0.0) || soft_update_rho > 1.0)
            throw std::invalid_argument("agent: soft_update_rho must be in (0, 1]");
        if (hidden_width < 1 || n_hidden_layers < 1)
            throw std::invalid_argument("agent: invalid network shape");
        if (noise_scale < 0.0 || noise_floor < 0.0 || noise_decay_steps < 1)
            throw std::invalid_argument("agent: invalid noise schedule");
        if (warmup_steps < 0)
            throw std::invalid_argument("agent: warmup_steps must be >= 0");
    }
};

/// Bounded FIFO store of transitions; eviction is strictly oldest-first.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(int capacity) : capacity_(capacity) {
        if (capacity < 1)
            throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
        storage_.reserve(static_cast<std::size_t>(capacity));
    }

    int capacity() const { return capacity_; }
    int size() const { return static_cast<int>(storage_.size()); }

    void append(Transition t) {
        if (size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[cursor_] = std::move(t);
            cursor_ = (cursor_ + 1) % static_cast<std::size_t>(capacity_);
        }
    }

    /// i-th stored transition in FIFO order (0 = oldest).
    const Transition& at(int i) const {
        return storage_[(cursor_ + static_cast<std::size_t>(i)) % storage_.size()];
    }

    /// Uniform mini-batch without replacement.
    std::vector<const Transition*> sample(int batch, Rng& rng) const {
        if (batch > size())
            throw std::invalid_argument("ReplayBuffer: batch larger than buffer");
        std::vector<const Transition*> out;
        out.reserve(static_cast<std::size_t>(batch));
        for (int idx : rng.sample_without_replacement(size(), batch))
            out.push_back(&storage_[static_cast<std::size_t>(idx)]);
        return out;
    }

  private:
    int capacity_;
    std::vector<Transition> storage_;
    std::size_t cursor_ = 0; // next eviction slot once full
};

/// Feature map applied to raw states before they reach the networks: the
/// leading interference entries are squashed as log10(1 + I / sigma^2),
/// position entries pass through.
struct StateScaler {
    int n_log_dims = 0;
    double noise_power = 1.0;

    Eigen::VectorXd apply(const Eigen::VectorXd& s) const {
        Eigen::VectorXd out = s;
        for (int i = 0; i < n_log_dims && i < s.size(); ++i)
            out[i] = std::log10(1.0 + s[i] / noise_power);
        return out;
    }
};

struct ActorCritic {
    Mlp actor;
    Mlp critic;
};

/// Deterministic policy output plus exploration noise, clipped to [-1, 1].
inline Eigen::VectorXd act(const Mlp& actor, const Eigen::VectorXd& state_features,
                           double noise_scale, Rng& rng) {
    Eigen::VectorXd a = forward_one(actor, state_features);
    if (noise_scale > 0.0)
        for (Eigen::Index i = 0; i < a.size(); ++i)
            a[i] += noise_scale * rng.normal();
    return a.cwiseMax(-1.0).cwiseMin(1.0);
}

/// Bootstrapped regression target: reward + discount * Q'(s', actor'(s')).
inline double critic_target(double reward, const Eigen::VectorXd& next_state_features,
                            const Mlp& target_actor, const Mlp& target_critic, double discount) {
    const Eigen::VectorXd a = forward_one(target_actor, next_state_features);
    Eigen::VectorXd in(next_state_features.size() + a.size());
    in << next_state_features, a;
    return reward + discount * forward_one(target_critic, in)[0];
}

namespace detail {

struct BatchMatrices {
    Eigen::MatrixXd states;      // scaled features
    Eigen::MatrixXd actions;     // policy space, [-1, 1]
    Eigen::MatrixXd next_states; // scaled features
    Eigen::RowVectorXd rewards;
};

inline BatchMatrices batch_matrices(const std::vector<const Transition*>& batch,
                                    const StateScaler& scaler,
                                    const Eigen::VectorXd& action_scale) {
    if (batch.empty())
        throw std::invalid_argument("train batch must be non-empty");
    const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
    BatchMatrices m;
    m.states.resize(batch.front()->state.size(), b);
    m.actions.resize(batch.front()->raw_action.size(), b);
    m.next_states.resize(batch.front()->next_state.size(), b);
    m.rewards.resize(b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const Transition& t = *batch[static_cast<std::size_t>(i)];
        m.states.col(i) = scaler.apply(t.state);
        m.actions.col(i) = t.raw_action.cwiseQuotient(action_scale);
        m.next_states.col(i) = scaler.apply(t.next_state);
        m.rewards[i] = t.reward;
    }
    return m;
}

inline Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
    Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

} // namespace detail

/// Mean-squared critic loss against targets bootstrapped through `targets`;
/// fills `out` with the gradient w.r.t. the critic of `nets` when non-null.
inline double critic_loss_grad(const ActorCritic& nets, const ActorCritic& targets,
                               const std::vector<const Transition*>& batch, double discount,
                               const StateScaler& scaler, const Eigen::VectorXd& action_scale,
                               Gradients* out) {
    const auto m = detail::batch_matrices(batch, scaler, action_scale);
    const Eigen::Index b = m.rewards.size();
    const Eigen::MatrixXd next_actions = forward(targets.actor, m.next_states);
    const Eigen::MatrixXd q_next =
        forward(targets.critic, detail::stack(m.next_states, next_actions));
    const Eigen::RowVectorXd chi = m.rewards + discount * q_next.row(0);
    const Eigen::MatrixXd critic_in = detail::stack(m.states, m.actions);
    const Eigen::MatrixXd q = forward(nets.critic, critic_in);
    const Eigen::RowVectorXd diff = q.row(0) - chi;
    const double loss = diff.squaredNorm() / static_cast<double>(b);
    if (out != nullptr) {
        const Eigen::MatrixXd upstream = (2.0 / static_cast<double>(b)) * diff;
        *out = backward(nets.critic, critic_in, upstream).grads;
    }
    return loss;
}

/// Actor loss -mean Q(s, actor(s)); fills `out` with its gradient w.r.t. the
/// actor parameters (deterministic policy gradient chained through the critic).
inline double actor_loss_grad(const ActorCritic& nets,
                              const std::vector<const Transition*>& batch,
                              const StateScaler& scaler, const Eigen::VectorXd& action_scale,
                              Gradients* out) {
    const auto m = detail::batch_matrices(batch, scaler, action_scale);
    const Eigen::Index b = m.rewards.size();
    const Eigen::MatrixXd actions = forward(nets.actor, m.states);
    const Eigen::MatrixXd critic_in = detail::stack(m.states, actions);
    const Eigen::MatrixXd q = forward(nets.critic, critic_in);
    const double objective = q.row(0).mean();
    if (out != nullptr) {
        const Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(1, b, 1.0 / static_cast<double>(b));
        const Eigen::MatrixXd dq_dinput = backward(nets.critic, critic_in, ones).input_grad;
        const Eigen::MatrixXd dq_daction = dq_dinput.bottomRows(actions.rows());
        *out = backward(nets.actor, m.states, -dq_daction).grads;
    }
    return -objective;
}

struct TrainDiagnostics {
    double critic_loss = 0.0;
    double actor_objective = 0.0;
};

struct StepDiagnostics {
    long step = 0;
    int episode = 0;
    double reward = 0.0;
    double episode_return = 0.0;
    double critic_loss = 0.0;
    double actor_objective = 0.0;
    double noise_scale = 0.0;
};

/// Off-policy actor-critic learner with target networks, Adam updates,
/// global-norm gradient clipping and decayed Gaussian exploration.
class DdpgAgent {
  public:
    DdpgAgent(int state_dim, int action_dim, const AgentConfig& cfg,
              const StateScaler& scaler = {},
              const Eigen::VectorXd& action_scale = Eigen::VectorXd())
        : DdpgAgent(make_nets(state_dim, action_dim, cfg), cfg, scaler,
                    action_scale.size() > 0 ? action_scale
                                            : Eigen::VectorXd::Ones(action_dim)) {}

    DdpgAgent(ActorCritic nets, const AgentConfig& cfg, const StateScaler& scaler,
              const Eigen::VectorXd& action_scale)
        : cfg_(cfg), nets_(std::move(nets)), targets_(nets_), opt_actor_(nets_.actor),
          opt_critic_(nets_.critic), scaler_(scaler), action_scale_(action_scale),
          rng_(cfg.seed) {
        cfg_.validate();
        if (action_scale_.size() != nets_.actor.output_dim())
            throw std::invalid_argument("DdpgAgent: action scale dimension mismatch");
    }

    static ActorCritic make_nets(int state_dim, int action_dim, const AgentConfig& cfg) {
        Rng rng(derive_seed(cfg.seed, 0xA0));
        std::vector<int> actor_sizes{state_dim};
        std::vector<int> critic_sizes{state_dim + action_dim};
        for (int l = 0; l < cfg.n_hidden_layers; ++l) {
            actor_sizes.push_back(cfg.hidden_width);
            critic_sizes.push_back(cfg.hidden_width);
        }
        actor_sizes.push_back(action_dim);
        critic_sizes.push_back(1);
        ActorCritic nets;
        nets.actor = Mlp::make(actor_sizes, Activation::Relu, Activation::Tanh, rng);
        nets.critic = Mlp::make(critic_sizes, Activation::Relu, Activation::Identity, rng);
        return nets;
    }

    const AgentConfig& config() const { return cfg_; }
    const Mlp& actor() const { return nets_.actor; }
    const Mlp& critic() const { return nets_.critic; }
    const ActorCritic& nets() const { return nets_; }
    const StateScaler& scaler() const { return scaler_; }
    const Eigen::VectorXd& action_scale() const { return action_scale_; }
    long global_step() const { return global_step_; }

    double current_noise() const {
        const double frac =
            std::min(1.0, static_cast<double>(global_step_) / static_cast<double>(cfg_.noise_decay_steps));
        return cfg_.noise_scale + (cfg_.noise_floor - cfg_.noise_scale) * frac;
    }

    /// Policy-space action in [-1, 1]; noise_scale = 0 is deterministic.
    Eigen::VectorXd act(const Eigen::VectorXd& raw_state, double noise_scale) {
        return lasuav::act(nets_.actor, scaler_.apply(raw_state), noise_scale, rng_);
    }

    Eigen::VectorXd act_deterministic(const Eigen::VectorXd& raw_state) const {
        Eigen::VectorXd a = forward_one(nets_.actor, scaler_.apply(raw_state));
        return a.cwiseMax(-1.0).cwiseMin(1.0);
    }

    TrainDiagnostics train_step(const std::vector<const Transition*>& batch) {
        Gradients g_critic;
        const double critic_loss = critic_loss_grad(nets_, targets_, batch, cfg_.discount,
                                                    scaler_, action_scale_, &g_critic);
        clip_global_norm(g_critic, cfg_.grad_clip);
        opt_critic_.step(nets_.critic, g_critic, cfg_.lr_critic);

        Gradients g_actor;
        const double actor_loss =
            actor_loss_grad(nets_, batch, scaler_, action_scale_, &g_actor);
        clip_global_norm(g_actor, cfg_.grad_clip);
        opt_actor_.step(nets_.actor, g_actor, cfg_.lr_actor);

        soft_update(targets_.actor, nets_.actor, cfg_.soft_update_rho);
        soft_update(targets_.critic, nets_.critic, cfg_.soft_update_rho);
        return {critic_loss, -actor_loss};
    }

    /// T environment steps; appends transitions, trains after each step once
    /// the warmup is met (when `train`), returns the episode return.
    double run_episode(Environment& env, ReplayBuffer& buffer, bool train,
                       std::vector<StepDiagnostics>* sink = nullptr) {
        MdpState s = env.reset();
        const Eigen::VectorXd scale = env.action_scale();
        double episode_return = 0.0;
        for (int t = 0; t < env.scenario().horizon; ++t) {
            Eigen::VectorXd policy_action;
            if (train && global_step_ < cfg_.warmup_steps) {
                policy_action.resize(env.action_dim());
                for (Eigen::Index i = 0; i < policy_action.size(); ++i)
                    policy_action[i] = rng_.uniform(-1.0, 1.0);
            } else {
                policy_action = act(s.v, train ? current_noise() : 0.0);
            }
            const Eigen::VectorXd raw = policy_action.cwiseProduct(scale);
            auto [s2, reward, info] = env.step(raw);
            buffer.append(Transition{s.v, raw, s2.v, reward});
            episode_return += reward;
            TrainDiagnostics diag;
            if (train) {
                ++global_step_;
                if (global_step_ > cfg_.warmup_steps && buffer.size() >= cfg_.batch_size)
                    diag = train_step(buffer.sample(cfg_.batch_size, rng_));
            }
            if (sink != nullptr)
                sink->push_back({global_step_, episode_index_, reward, episode_return,
                                 diag.critic_loss, diag.actor_objective,
                                 train ? current_noise() : 0.0});
            s = s2;
        }
        ++episode_index_;
        return episode_return;
    }

    /// Mean return of noise-free rollouts; does not touch buffers or nets.
    double evaluate(Environment& env, int n_episodes) {
        double acc = 0.0;
        for (int e = 0; e < n_episodes; ++e) {
            MdpState s = env.reset();
            const Eigen::VectorXd scale = env.action_scale();
            for (int t = 0; t < env.scenario().horizon; ++t) {
                const Eigen::VectorXd raw = act_deterministic(s.v).cwiseProduct(scale);
                auto [s2, reward, info] = env.step(raw);
                acc += reward;
                s = s2;
            }
        }
        return acc / static_cast<double>(n_episodes);
    }

  private:
    AgentConfig cfg_;
    ActorCritic nets_;
    ActorCritic targets_;
    AdamOptimizer opt_actor_;
    AdamOptimizer opt_critic_;
    StateScaler scaler_;
    Eigen::VectorXd action_scale_;
    Rng rng_;
    long global_step_ = 0;
    int episode_index_ = 0;
};

} // namespace lasuav

#endif
