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

#ifndef LASUAV_META_LEARNER_HPP
#define LASUAV_META_LEARNER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lasuav/ddpg_agent.hpp"
#include "lasuav/mdp_env.hpp"
#include "lasuav/neural_core.hpp"

namespace lasuav {

struct MetaConfig {
    int n_tasks = 50;
    int tasks_per_batch = 5;
    int local_steps = 5;
    double lr_local_actor = 1e-3;
    double lr_local_critic = 1e-3;
    double lr_global_actor = 1e-3;
    double lr_global_critic = 1e-3;
    int support_size = 64;
    int query_size = 64;
    int meta_train_iters = 200;
    int adapt_iters = 1000;
    double grad_clip = 1.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_tasks < 1 || tasks_per_batch < 1 || tasks_per_batch > n_tasks)
            throw std::invalid_argument("meta: need 1 <= tasks_per_batch <= n_tasks");
        if (local_steps < 0 || meta_train_iters < 0 || adapt_iters < 0)
            throw std::invalid_argument("meta: negative iteration count");
        if (!(lr_local_actor > 0.0) || !(lr_local_critic > 0.0) || !(lr_global_actor > 0.0) ||
            !(lr_global_critic > 0.0))
            throw std::invalid_argument("meta: learning rates must be positive");
        if (support_size < 1 || query_size < 1)
            throw std::invalid_argument("meta: support/query sizes must be >= 1");
    }
};

enum class BatchKind { Support, Query };

/// What a task exposes to the meta-learner: experience collection plus the
/// loss/gradient of its critic and actor objectives on held batches. The
/// support and query batches are disjoint samples from the task's memory.
class MetaTask {
  public:
    virtual ~MetaTask() = default;

    /// Collect experience under `policy` and draw fresh disjoint batches.
    /// Returning false skips the task for this round.
    virtual bool prepare(const ActorCritic& policy, int support_size, int query_size) = 0;

    /// Loss at `at`; fills `out` with the parameter gradient when non-null.
    virtual double critic_loss_grad(const ActorCritic& at, BatchKind kind, Gradients* out) = 0;
    virtual double actor_loss_grad(const ActorCritic& at, BatchKind kind, Gradients* out) = 0;

    virtual bool trains_actor() const { return true; }
    virtual double last_return() const { return 0.0; }
};

/// Global parameters, one optional local parameter set per task, and the
/// iteration counter.
struct MetaState {
    Mlp global_actor;
    Mlp global_critic;
    std::vector<std::optional<ActorCritic>> local;
    long iteration = 0;

    ActorCritic global() const { return ActorCritic{global_actor, global_critic}; }
};

struct LocalUpdateResult {
    ActorCritic params;
    double support_critic_loss = 0.0;
    double support_actor_loss = 0.0;
};

/// Inner adaptation: `local_steps` plain gradient steps on the support batch,
/// starting from copies of the global parameters (which stay untouched).
inline LocalUpdateResult local_update(const ActorCritic& global, MetaTask& task,
                                      const MetaConfig& cfg) {
    LocalUpdateResult res;
    res.params = global;
    Gradients g;
    res.support_critic_loss = task.critic_loss_grad(res.params, BatchKind::Support,
                                                    cfg.local_steps > 0 ? &g : nullptr);
    if (task.trains_actor())
        res.support_actor_loss = task.actor_loss_grad(res.params, BatchKind::Support, nullptr);
    for (int step = 0; step < cfg.local_steps; ++step) {
        if (step > 0)
            task.critic_loss_grad(res.params, BatchKind::Support, &g);
        clip_global_norm(g, cfg.grad_clip);
        sgd_step(res.params.critic, g, cfg.lr_local_critic);
        if (task.trains_actor()) {
            Gradients ga;
            task.actor_loss_grad(res.params, BatchKind::Support, &ga);
            clip_global_norm(ga, cfg.grad_clip);
            sgd_step(res.params.actor, ga, cfg.lr_local_actor);
        }
    }
    return res;
}

struct Contribution {
    MetaTask* task = nullptr;
    ActorCritic local;
};

struct GlobalUpdateResult {
    double query_critic_loss = 0.0;
    double query_actor_loss = 0.0;
    int n_tasks = 0;
};

/// Outer aggregation: one plain step on the global parameters along the sum
/// of query-batch gradients evaluated at the per-task local parameters
/// (first-order approximation of the two-level objective).
inline GlobalUpdateResult global_update(MetaState& state,
                                        const std::vector<Contribution>& contributions,
                                        const MetaConfig& cfg) {
    if (contributions.empty())
        throw std::invalid_argument("global_update: no task contributed");
    GlobalUpdateResult res;
    Gradients critic_sum = Gradients::zeros_like(state.global_critic);
    Gradients actor_sum = Gradients::zeros_like(state.global_actor);
    bool any_actor = false;
    for (const Contribution& c : contributions) {
        Gradients g;
        res.query_critic_loss += c.task->critic_loss_grad(c.local, BatchKind::Query, &g);
        critic_sum.add(g);
        if (c.task->trains_actor()) {
            Gradients ga;
            res.query_actor_loss += c.task->actor_loss_grad(c.local, BatchKind::Query, &ga);
            actor_sum.add(ga);
            any_actor = true;
        }
        ++res.n_tasks;
    }
    clip_global_norm(critic_sum, cfg.grad_clip);
    sgd_step(state.global_critic, critic_sum, cfg.lr_global_critic);
    if (any_actor) {
        clip_global_norm(actor_sum, cfg.grad_clip);
        sgd_step(state.global_actor, actor_sum, cfg.lr_global_actor);
    }
    res.query_critic_loss /= static_cast<double>(res.n_tasks);
    res.query_actor_loss /= static_cast<double>(res.n_tasks);
    ++state.iteration;
    return res;
}

struct MetaCurveRow {
    long iteration = 0;
    double mean_support_loss = 0.0;
    double mean_query_loss = 0.0;
    double mean_task_return = 0.0;
    int tasks_contributing = 0;
};

/// Two-level loop: sample a task batch, collect experience per task with its
/// current local policy, adapt locally on support sets, then take one global
/// step on the query sets (a synchronization barrier per batch).
inline MetaState meta_train(std::vector<std::unique_ptr<MetaTask>>& tasks, const ActorCritic& init,
                            const MetaConfig& cfg, std::vector<MetaCurveRow>* curves = nullptr) {
    cfg.validate();
    if (static_cast<int>(tasks.size()) < cfg.tasks_per_batch)
        throw std::invalid_argument("meta_train: fewer tasks than tasks_per_batch");
    MetaState state;
    state.global_actor = init.actor;
    state.global_critic = init.critic;
    state.local.resize(tasks.size());
    Rng rng(derive_seed(cfg.seed, 0x4D));

    for (long iter = 0; iter < cfg.meta_train_iters; ++iter) {
        const std::vector<int> batch =
            rng.sample_without_replacement(static_cast<int>(tasks.size()), cfg.tasks_per_batch);
        std::vector<Contribution> contributions;
        MetaCurveRow row;
        row.iteration = iter;
        for (int id : batch) {
            auto& task = *tasks[static_cast<std::size_t>(id)];
            const ActorCritic& policy =
                state.local[static_cast<std::size_t>(id)] ? *state.local[static_cast<std::size_t>(id)]
                                                          : state.global();
            if (!task.prepare(policy, cfg.support_size, cfg.query_size))
                continue;
            LocalUpdateResult lr = local_update(state.global(), task, cfg);
            state.local[static_cast<std::size_t>(id)] = lr.params;
            row.mean_support_loss += lr.support_critic_loss;
            row.mean_task_return += task.last_return();
            contributions.push_back({&task, std::move(lr.params)});
        }
        if (!contributions.empty()) {
            const GlobalUpdateResult gu = global_update(state, contributions, cfg);
            row.mean_query_loss = gu.query_critic_loss;
            row.mean_support_loss /= static_cast<double>(contributions.size());
            row.mean_task_return /= static_cast<double>(contributions.size());
            row.tasks_contributing = gu.n_tasks;
        }
        if (curves != nullptr)
            curves->push_back(row);
    }
    return state;
}

/// DDPG system task: owns an environment, a replay memory and an exploration
/// stream; losses are the DDPG critic regression (the current parameters act
/// as their own bootstrap targets inside the plain inner steps) and the
/// deterministic-policy-gradient actor objective.
class DdpgMetaTask final : public MetaTask {
  public:
    DdpgMetaTask(const ScenarioConfig& scenario, const Task& task, const AgentConfig& agent_cfg,
                 std::uint64_t seed, double exploration_noise = 0.2)
        : env_(scenario, task), buffer_(agent_cfg.buffer_capacity), discount_(agent_cfg.discount),
          noise_(exploration_noise), rng_(seed),
          scaler_{2 * scenario.k_users, env_.noise_power()}, action_scale_(env_.action_scale()) {}

    Environment& env() { return env_; }
    ReplayBuffer& memory() { return buffer_; }
    const StateScaler& scaler() const { return scaler_; }

    bool prepare(const ActorCritic& policy, int support_size, int query_size) override {
        const int needed = support_size + query_size;
        if (buffer_.capacity() < needed)
            return false;
        do {
            collect_episode(policy);
        } while (buffer_.size() < needed);
        const std::vector<int> idx = rng_.sample_without_replacement(buffer_.size(), needed);
        support_.clear();
        query_.clear();
        for (int i = 0; i < support_size; ++i)
            support_.push_back(&buffer_.at(idx[static_cast<std::size_t>(i)]));
        for (int i = support_size; i < needed; ++i)
            query_.push_back(&buffer_.at(idx[static_cast<std::size_t>(i)]));
        return true;
    }

    double critic_loss_grad(const ActorCritic& at, BatchKind kind, Gradients* out) override {
        return lasuav::critic_loss_grad(at, at, batch(kind), discount_, scaler_, action_scale_,
                                        out);
    }

    double actor_loss_grad(const ActorCritic& at, BatchKind kind, Gradients* out) override {
        return lasuav::actor_loss_grad(at, batch(kind), scaler_, action_scale_, out);
    }

    double last_return() const override { return last_return_; }

  private:
    const std::vector<const Transition*>& batch(BatchKind kind) const {
        const auto& b = kind == BatchKind::Support ? support_ : query_;
        if (b.empty())
            throw std::logic_error("DdpgMetaTask: batches not prepared");
        return b;
    }

    void collect_episode(const ActorCritic& policy) {
        MdpState s = env_.reset();
        last_return_ = 0.0;
        for (int t = 0; t < env_.scenario().horizon; ++t) {
            const Eigen::VectorXd a =
                act(policy.actor, scaler_.apply(s.v), noise_, rng_).cwiseProduct(action_scale_);
            auto [s2, reward, info] = env_.step(a);
            buffer_.append(Transition{s.v, a, s2.v, reward});
            last_return_ += reward;
            s = s2;
        }
    }

    Environment env_;
    ReplayBuffer buffer_;
    double discount_;
    double noise_;
    Rng rng_;
    StateScaler scaler_;
    Eigen::VectorXd action_scale_;
    std::vector<const Transition*> support_;
    std::vector<const Transition*> query_;
    double last_return_ = 0.0;
};

struct AdaptReport {
    double return_before = 0.0;
    double return_after = 0.0;
    ActorCritic adapted;
    std::vector<StepDiagnostics> diagnostics;
};

/// Few-step adaptation on a fresh task: standard DDPG training initialized at
/// the global parameters, with evaluation rollouts before and after.
inline AdaptReport meta_adapt(const ActorCritic& init, const ScenarioConfig& scenario,
                              const Task& task, const MetaConfig& meta_cfg,
                              const AgentConfig& agent_cfg, int eval_episodes = 3) {
    Environment env(scenario, task);
    const StateScaler scaler{2 * scenario.k_users, env.noise_power()};
    DdpgAgent agent(init, agent_cfg, scaler, env.action_scale());
    ReplayBuffer buffer(agent_cfg.buffer_capacity);
    AdaptReport report;
    report.return_before = agent.evaluate(env, eval_episodes);
    while (agent.global_step() < meta_cfg.adapt_iters)
        agent.run_episode(env, buffer, true, &report.diagnostics);
    report.return_after = agent.evaluate(env, eval_episodes);
    report.adapted = agent.nets();
    return report;
}

} // namespace lasuav

#endif
