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

#ifndef LASUAV_RSMA_RATES_HPP
#define LASUAV_RSMA_RATES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lasuav/precoding.hpp"

namespace lasuav {

class BudgetError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Transmitter DC power: baseband plus per-chain RF, phase-shifter and switch
/// terms. Placeholder constants, configurable; not calibrated to hardware.
struct PowerModel {
    double p_baseband = 0.2; // W
    double p_rfchain = 0.16; // W per RF chain
    double p_ps = 0.04;      // W per phase shifter
    double p_switch = 0.005; // W per switch
    double p_hov = 10.0;     // W, hovering

    double p_las(int n_rf) const { return p_baseband + n_rf * (p_rfchain + p_ps + p_switch); }
};

/// Stream powers (watts). p_private(j, k) is zero for pairs outside the beam
/// assignment. The budget covers DC, hovering, common and private powers.
struct PowerAllocation {
    double p_common = 0.0;
    Eigen::MatrixXd p_private; // n_beams x k_users
    double p_las = 0.0;
    double p_hov = 0.0;
    double p_max = 0.0;

    double total_transmit() const { return p_common + p_private.sum(); }
    double total_consumed() const { return p_las + p_hov + total_transmit(); }
    bool within_budget() const { return total_consumed() <= p_max; }

    void validate() const {
        if (p_common < 0.0 || p_las < 0.0 || p_hov < 0.0 || (p_private.array() < 0.0).any())
            throw std::invalid_argument("PowerAllocation: powers must be nonnegative");
        if (!within_budget())
            throw BudgetError("PowerAllocation: power budget exceeded");
    }
};

/// Per-user shares of the common stream's rate, bps/Hz; zero off-assignment.
struct CommonRateSplit {
    Eigen::MatrixXd r_star; // n_beams x k_users

    double beam_total(int beam) const { return r_star.row(beam).sum(); }
    double total() const { return r_star.sum(); }
};

enum class CommonGainMode {
    CommonPrecoder,          // numerator gain through w_bb_common
    PrivatePrecoderVerbatim, // numerator gain through the user's private column
};

enum class InterferenceMode {
    Standard,         // interference gain h_k -> interfering stream's precoder
    VerbatimGainIndex // every term uses the user's own-stream gain
};

enum class DecodabilityScope {
    PerBeam, // sum of shares within beam j  <= min common rate within beam j
    Global   // sum of all shares            <= min common rate over all users
};

struct RateOptions {
    CommonGainMode common_gain = CommonGainMode::CommonPrecoder;
    InterferenceMode interference = InterferenceMode::Standard;
    DecodabilityScope decodability = DecodabilityScope::PerBeam;
};

/// Interference terms, rates and efficiency figures for one system state.
/// Matrix entries live at assigned (beam, user) pairs; `served` marks them.
struct RateReport {
    Eigen::MatrixXd i_private; // I' seen when decoding the private stream
    Eigen::MatrixXd i_all;     // I seen when decoding the common stream
    Eigen::MatrixXd r_common;  // bps/Hz
    Eigen::MatrixXd r_private; // bps/Hz
    Eigen::MatrixXd r_overall; // r_star + r_private
    Eigen::MatrixXd served;    // 1.0 at assigned pairs
    double sum_se = 0.0;       // bps/Hz
    double ee = 0.0;           // bps/Hz per watt
    double noise_power = 0.0;  // sigma^2, watts
};

namespace detail {

/// |h_k W_lens W_rf x|^2 for a digital-stage vector x.
inline double chain_gain(const Eigen::MatrixXcd& h, const PrecoderSet& pre, Eigen::Index user,
                         const Eigen::VectorXcd& digital) {
    const Eigen::VectorXcd analog = pre.w_rf * digital;              // N_Lens
    const Eigen::VectorXcd full = pre.w_lens * analog;               // N_t
    const std::complex<double> g = (h.row(user) * full)(0);
    return std::norm(g);
}

/// K x K matrix of |h_k W_lens W_rf w_bb_{k'}|^2 (row: user, col: stream).
inline Eigen::MatrixXd stream_gains(const Eigen::MatrixXcd& h, const PrecoderSet& pre) {
    const Eigen::MatrixXcd g = h * pre.w_lens * pre.w_rf * pre.w_bb; // K x K
    return g.cwiseAbs2();
}

inline Eigen::VectorXd common_gains(const Eigen::MatrixXcd& h, const PrecoderSet& pre) {
    const Eigen::VectorXcd g = h * pre.w_lens * pre.w_rf * pre.w_bb_common; // K
    return g.cwiseAbs2();
}

/// Total received private-stream power at `user`; `exclude_user` drops that
/// user's own stream from the sum (pass -1 to keep every stream).
inline double received_private_power(const Eigen::MatrixXd& gains, const PowerAllocation& alloc,
                                     Eigen::Index user, Eigen::Index exclude_user,
                                     InterferenceMode mode) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < alloc.p_private.rows(); ++j)
        for (Eigen::Index k = 0; k < alloc.p_private.cols(); ++k) {
            const double p = alloc.p_private(j, k);
            if (p == 0.0 || k == exclude_user)
                continue;
            const double g = mode == InterferenceMode::Standard ? gains(user, k) : gains(user, user);
            acc += g * p;
        }
    return acc;
}

inline double log2_rate(double signal, double interference, double noise) {
    return std::log2(1.0 + signal / (interference + noise));
}

} // namespace detail

/// Common-stream rate of user k in beam j, bps/Hz.
inline double common_rate(const Eigen::MatrixXcd& h, const PrecoderSet& pre,
                          const PowerAllocation& alloc, int /*beam*/, int user, double noise,
                          const RateOptions& opt = {}) {
    if (!(noise > 0.0))
        throw std::invalid_argument("common_rate: noise must be positive");
    const Eigen::MatrixXd gains = detail::stream_gains(h, pre);
    const double num_gain = opt.common_gain == CommonGainMode::CommonPrecoder
                                ? detail::chain_gain(h, pre, user, pre.w_bb_common)
                                : gains(user, user);
    const double i_all = detail::received_private_power(gains, alloc, user, -1, opt.interference);
    return detail::log2_rate(num_gain * alloc.p_common, i_all, noise);
}

/// Private-stream rate of user k in beam j after common-stream cancellation.
inline double private_rate(const Eigen::MatrixXcd& h, const PrecoderSet& pre,
                           const PowerAllocation& alloc, int beam, int user, double noise,
                           const RateOptions& opt = {}) {
    if (!(noise > 0.0))
        throw std::invalid_argument("private_rate: noise must be positive");
    const Eigen::MatrixXd gains = detail::stream_gains(h, pre);
    const double i_other = detail::received_private_power(gains, alloc, user, user, opt.interference);
    return detail::log2_rate(gains(user, user) * alloc.p_private(beam, user), i_other, noise);
}

/// min_k common rate of beam j minus the sum of shares it must carry;
/// nonnegative iff the shares are decodable.
inline double decodability_margin(const RateReport& report, const CommonRateSplit& split, int beam,
                                  DecodabilityScope scope = DecodabilityScope::PerBeam) {
    double min_common = std::numeric_limits<double>::infinity();
    double shares = 0.0;
    for (Eigen::Index j = 0; j < report.served.rows(); ++j) {
        if (scope == DecodabilityScope::PerBeam && j != beam)
            continue;
        for (Eigen::Index k = 0; k < report.served.cols(); ++k)
            if (report.served(j, k) != 0.0) {
                min_common = std::min(min_common, report.r_common(j, k));
                shares += split.r_star(j, k);
            }
    }
    if (!std::isfinite(min_common))
        return std::numeric_limits<double>::infinity(); // beam serves no one
    return min_common - shares;
}

/// Full RSMA rate report for one system state.
inline RateReport system_report(const Eigen::MatrixXcd& h, const PrecoderSet& pre,
                                const PowerAllocation& alloc, const CommonRateSplit& split,
                                const BeamAssignment& assignment, double noise,
                                const RateOptions& opt = {}) {
    if (!(noise > 0.0))
        throw std::invalid_argument("system_report: noise must be positive");
    const Eigen::Index n_beams = alloc.p_private.rows();
    const Eigen::Index k_users = alloc.p_private.cols();
    RateReport rep;
    rep.i_private = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.i_all = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.r_common = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.r_private = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.r_overall = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.served = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.noise_power = noise;

    const Eigen::MatrixXd gains = detail::stream_gains(h, pre);
    const Eigen::VectorXd cgains = detail::common_gains(h, pre);
    for (int j = 0; j < assignment.n_beams; ++j) {
        for (int k : assignment.users_of_beam[static_cast<std::size_t>(j)]) {
            rep.served(j, k) = 1.0;
            const double i_all =
                detail::received_private_power(gains, alloc, k, -1, opt.interference);
            const double i_other =
                detail::received_private_power(gains, alloc, k, k, opt.interference);
            const double cg = opt.common_gain == CommonGainMode::CommonPrecoder ? cgains(k)
                                                                                : gains(k, k);
            rep.i_all(j, k) = i_all;
            rep.i_private(j, k) = i_other;
            rep.r_common(j, k) = detail::log2_rate(cg * alloc.p_common, i_all, noise);
            rep.r_private(j, k) =
                detail::log2_rate(gains(k, k) * alloc.p_private(j, k), i_other, noise);
            rep.r_overall(j, k) = split.r_star(j, k) + rep.r_private(j, k);
            rep.sum_se += rep.r_overall(j, k);
        }
    }
    rep.ee = rep.sum_se / alloc.total_consumed();
    return rep;
}

/// Orthogonal baseline: no common stream; users within a beam get equal time
/// shares free of intra-beam interference. Power accounting is unchanged.
inline RateReport oma_report(const Eigen::MatrixXcd& h, const PrecoderSet& pre,
                             const PowerAllocation& alloc, const BeamAssignment& assignment,
                             double noise) {
    if (!(noise > 0.0))
        throw std::invalid_argument("oma_report: noise must be positive");
    const Eigen::Index n_beams = alloc.p_private.rows();
    const Eigen::Index k_users = alloc.p_private.cols();
    RateReport rep;
    rep.i_private = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.i_all = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.r_common = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.r_private = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.r_overall = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.served = Eigen::MatrixXd::Zero(n_beams, k_users);
    rep.noise_power = noise;

    const Eigen::MatrixXd gains = detail::stream_gains(h, pre);
    for (int j = 0; j < assignment.n_beams; ++j) {
        const auto& members = assignment.users_of_beam[static_cast<std::size_t>(j)];
        if (members.empty())
            continue;
        const double share = 1.0 / static_cast<double>(members.size());
        for (int k : members) {
            rep.served(j, k) = 1.0;
            rep.r_private(j, k) =
                share * detail::log2_rate(gains(k, k) * alloc.p_private(j, k), 0.0, noise);
            rep.r_overall(j, k) = rep.r_private(j, k);
            rep.sum_se += rep.r_overall(j, k);
        }
    }
    rep.ee = rep.sum_se / alloc.total_consumed();
    return rep;
}

/// Recompute overall rates and totals for a (new) common-rate split, leaving
/// the interference terms and per-stream rates untouched.
inline void apply_common_split(RateReport& rep, const CommonRateSplit& split,
                               const PowerAllocation& alloc) {
    rep.sum_se = 0.0;
    for (Eigen::Index j = 0; j < rep.served.rows(); ++j)
        for (Eigen::Index k = 0; k < rep.served.cols(); ++k)
            if (rep.served(j, k) != 0.0) {
                rep.r_overall(j, k) = split.r_star(j, k) + rep.r_private(j, k);
                rep.sum_se += rep.r_overall(j, k);
            }
    rep.ee = rep.sum_se / alloc.total_consumed();
}

/// Equal per-user shares that exhaust the decodable margin (sum of shares
/// equals the binding minimum common rate).
inline CommonRateSplit tight_common_split(const RateReport& rep, const BeamAssignment& assignment,
                                          DecodabilityScope scope = DecodabilityScope::PerBeam) {
    CommonRateSplit split;
    split.r_star = Eigen::MatrixXd::Zero(rep.served.rows(), rep.served.cols());
    if (scope == DecodabilityScope::PerBeam) {
        for (int j = 0; j < assignment.n_beams; ++j) {
            const auto& members = assignment.users_of_beam[static_cast<std::size_t>(j)];
            if (members.empty())
                continue;
            double beam_min = std::numeric_limits<double>::infinity();
            for (int k : members)
                beam_min = std::min(beam_min, rep.r_common(j, k));
            for (int k : members)
                split.r_star(j, k) = beam_min / static_cast<double>(members.size());
        }
    } else {
        double global_min = std::numeric_limits<double>::infinity();
        int n_served = 0;
        for (int j = 0; j < assignment.n_beams; ++j)
            for (int k : assignment.users_of_beam[static_cast<std::size_t>(j)]) {
                global_min = std::min(global_min, rep.r_common(j, k));
                ++n_served;
            }
        if (n_served > 0)
            for (int j = 0; j < assignment.n_beams; ++j)
                for (int k : assignment.users_of_beam[static_cast<std::size_t>(j)])
                    split.r_star(j, k) = global_min / static_cast<double>(n_served);
    }
    return split;
}

/// Noise power for a target SNR: sigma^2 = P_nominal / 10^(snr/10) with
/// P_nominal the per-user share of the transmit budget.
inline double noise_from_snr(double snr_db, const PowerAllocation& alloc, int k_users) {
    if (!std::isfinite(snr_db))
        throw std::invalid_argument("noise_from_snr: snr must be finite");
    const double budget = alloc.p_max - alloc.p_las - alloc.p_hov;
    if (!(budget > 0.0))
        throw BudgetError("noise_from_snr: p_max does not cover DC and hovering power");
    const double p_nominal = budget / static_cast<double>(k_users);
    return p_nominal / std::pow(10.0, snr_db / 10.0);
}

} // namespace lasuav

#endif
