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

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>

#include "lasuav/experiments.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    bool full = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--config", opts.config_path, "JSON config (or a previous manifest)");
    sub->add_option("--seed", opts.seed, "master seed override");
    sub->add_option("--out", opts.out_dir, "output directory override");
    sub->add_flag("--full", opts.full, "full-scale study sizes (multi-hour budget)");
}

lasuav::ExperimentConfig resolve_config(const CommonOpts& opts) {
    lasuav::ExperimentConfig cfg =
        opts.config_path.empty() ? lasuav::default_config() : lasuav::load_config(opts.config_path);
    if (opts.seed >= 0)
        cfg.run.seed = static_cast<std::uint64_t>(opts.seed);
    if (!opts.out_dir.empty())
        cfg.run.out_dir = opts.out_dir;
    if (opts.full)
        lasuav::apply_full_scale(cfg);
    cfg.validate();
    return cfg;
}

int cmd_convergence(const CommonOpts& opts) {
    const auto cfg = resolve_config(opts);
    const auto dir = lasuav::prepare_run_dir(cfg, "convergence");
    write_manifest(dir, cfg, "convergence");
    const auto result = lasuav::run_convergence(cfg);
    lasuav::returns_table(result.plain_returns).write(dir / "convergence_plain.csv");
    lasuav::returns_table(result.meta_returns).write(dir / "convergence_meta.csv");
    lasuav::diagnostics_table(result.plain_diag).write(dir / "diag_plain.csv");
    lasuav::diagnostics_table(result.meta_diag).write(dir / "diag_meta.csv");
    lasuav::meta_curves_table(result.meta_curves).write(dir / "meta_curves.csv");
    nlohmann::json summary;
    summary["plain_final_mean"] = result.plain_final_mean;
    summary["meta_final_mean"] = result.meta_final_mean;
    lasuav::write_json(dir / "summary.json", summary);
    std::printf("convergence: plain final-window mean %.4f, meta %.4f -> %s\n",
                result.plain_final_mean, result.meta_final_mean, dir.c_str());
    return 0;
}

int cmd_lens_sweep(const CommonOpts& opts) {
    const auto cfg = resolve_config(opts);
    const auto dir = lasuav::prepare_run_dir(cfg, "lens-sweep");
    write_manifest(dir, cfg, "lens-sweep");
    const auto result = lasuav::run_lens_sweep(cfg, cfg.sweep.lens_counts, cfg.sweep.snr_list);
    lasuav::lens_sweep_table(result).write(dir / "lens_sweep.csv");
    std::printf("lens-sweep: %zu cells, %d draws each -> %s\n", result.rows.size(),
                result.n_draws, dir.c_str());
    return 0;
}

int cmd_rsma_vs_oma(const CommonOpts& opts) {
    const auto cfg = resolve_config(opts);
    const auto dir = lasuav::prepare_run_dir(cfg, "rsma-vs-oma");
    write_manifest(dir, cfg, "rsma-vs-oma");
    const auto result = lasuav::run_rsma_vs_oma(cfg, cfg.sweep.snr_list, cfg.sweep.k_list);
    lasuav::rsma_oma_table(result).write(dir / "rsma_vs_oma.csv");
    for (const auto& row : result.rows)
        if (row.k_users == 3 && row.snr_db == 10.0)
            std::printf("rsma-vs-oma: SNR=10dB K=3 gain %.2f%% (+- %.2f%%)\n", row.gain_pct,
                        row.gain_stderr_pct);
    std::printf("rsma-vs-oma: %zu cells -> %s\n", result.rows.size(), dir.c_str());
    return 0;
}

int cmd_ee_table(const CommonOpts& opts) {
    const auto cfg = resolve_config(opts);
    const auto dir = lasuav::prepare_run_dir(cfg, "ee-table");
    write_manifest(dir, cfg, "ee-table");
    const auto result = lasuav::run_ee_table(cfg, cfg.sweep.snr_list);
    lasuav::ee_table_table(result).write(dir / "ee_table.csv");
    std::printf("ee-table: %zu cells -> %s\n", result.rows.size(), dir.c_str());
    return 0;
}

int cmd_verify(const CommonOpts& opts) {
    const auto cfg = resolve_config(opts);
    const auto dir = lasuav::prepare_run_dir(cfg, "verify");
    const auto rep = lasuav::emit_verify(cfg, dir);
    for (const auto& a : rep.assertions)
        std::printf("[%s] %-24s measured=%.6g threshold=%.6g  %s\n", a.pass ? "PASS" : "FAIL",
                    a.name.c_str(), a.measured, a.threshold, a.detail.c_str());
    std::printf("verify: %s -> %s\n", rep.all_pass() ? "all assertions passed" : "FAILURES",
                dir.c_str());
    return rep.all_pass() ? 0 : 1;
}

int cmd_adapt(const CommonOpts& opts) {
    auto cfg = resolve_config(opts);
    const auto dir = lasuav::prepare_run_dir(cfg, "adapt");
    write_manifest(dir, cfg, "adapt");
    const auto result = lasuav::run_meta_advantage(cfg);
    lasuav::meta_curves_table(result.curves).write(dir / "meta_curves.csv");
    lasuav::CsvTable rows({"task", "before_meta", "after_meta", "before_random", "after_random"});
    for (const auto& r : result.rows)
        rows.add_row({lasuav::csv_num(r.task_id), lasuav::csv_num(r.before_meta),
                      lasuav::csv_num(r.after_meta), lasuav::csv_num(r.before_random),
                      lasuav::csv_num(r.after_random)});
    rows.write(dir / "adaptation.csv");
    lasuav::save_checkpoint(result.meta_init.actor, (dir / "meta_actor.json").string());
    lasuav::save_checkpoint(result.meta_init.critic, (dir / "meta_critic.json").string());

    const auto tasks = lasuav::sample_tasks(cfg.sweep.n_meta_tasks + 1,
                                            lasuav::derive_seed(cfg.run.seed, 0x600),
                                            cfg.scenario);
    lasuav::episode_trace(cfg.scenario, tasks.back(), result.meta_init)
        .write(dir / "episode_trace.csv");

    nlohmann::json summary;
    summary["mean_meta_return"] = result.mean_meta;
    summary["mean_random_return"] = result.mean_random;
    lasuav::write_json(dir / "summary.json", summary);
    std::printf("adapt: mean return meta %.4f vs random %.4f over %zu held-out tasks -> %s\n",
                result.mean_meta, result.mean_random, result.rows.size(), dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lens-antenna-subarray UAV downlink simulator and resource allocator"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto* convergence = app.add_subcommand("convergence", "meta-DDPG vs plain DDPG curves");
    auto* lens = app.add_subcommand("lens-sweep", "spectral efficiency across lens counts");
    auto* rsma = app.add_subcommand("rsma-vs-oma", "rate-splitting vs orthogonal access");
    auto* ee = app.add_subcommand("ee-table", "energy efficiency, multi- vs single-lens");
    auto* verify = app.add_subcommand("verify", "run the named assertion suite");
    auto* adapt = app.add_subcommand("adapt", "meta-adaptation demo on a fresh task");
    for (auto* sub : {convergence, lens, rsma, ee, verify, adapt})
        add_common(sub, opts);

    CLI11_PARSE(app, argc, argv);
    try {
        if (convergence->parsed())
            return cmd_convergence(opts);
        if (lens->parsed())
            return cmd_lens_sweep(opts);
        if (rsma->parsed())
            return cmd_rsma_vs_oma(opts);
        if (ee->parsed())
            return cmd_ee_table(opts);
        if (verify->parsed())
            return cmd_verify(opts);
        if (adapt->parsed())
            return cmd_adapt(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
