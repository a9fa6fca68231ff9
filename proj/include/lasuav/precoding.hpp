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

#ifndef LASUAV_PRECODING_HPP
#define LASUAV_PRECODING_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "lasuav/array_channel.hpp"

namespace lasuav {

class RankDeficiencyError : public std::runtime_error {
  public:
    explicit RankDeficiencyError(double cond)
        : std::runtime_error("effective channel is rank deficient (condition number " +
                             std::to_string(cond) + ")"),
          condition_number(cond) {}
    double condition_number;
};

class CapacityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// User clustering onto beams: beam_of_user[k] = j, users_of_beam[j] = S_j.
/// The S_j are pairwise disjoint and cover all users.
struct BeamAssignment {
    std::vector<int> beam_of_user;
    std::vector<std::vector<int>> users_of_beam;
    int n_beams = 0;

    int cluster_size(int beam) const { return static_cast<int>(users_of_beam[static_cast<std::size_t>(beam)].size()); }
};

/// Three-stage precoder chain. w_lens is the 0/1 block-diagonal switch stage
/// (column l carries gamma[l] in rows [l*M, (l+1)*M)), w_rf the constant-
/// modulus analog stage with quantized phases, w_bb the digital stage with
/// unit-norm columns, and w_bb_common the digital vector of the common stream.
struct PrecoderSet {
    Eigen::MatrixXd w_lens;
    std::vector<Eigen::VectorXd> gamma;
    Eigen::MatrixXcd w_rf;
    Eigen::MatrixXcd w_bb;
    Eigen::VectorXcd w_bb_common;
};

/// Greedy assignment of users to the strongest candidate beams, capped at
/// `cap` users per beam. Pairs are visited by descending |response|, ties
/// broken by lowest user index then lowest beam index.
inline BeamAssignment cluster_users(const ChannelRealization& ch,
                                    const std::vector<Eigen::VectorXcd>& candidate_beams, int cap) {
    if (candidate_beams.empty())
        throw std::invalid_argument("cluster_users: candidate beam set is empty");
    if (cap < 1)
        throw std::invalid_argument("cluster_users: cap must be >= 1");
    const int k_users = ch.n_users();
    const int n_beams = static_cast<int>(candidate_beams.size());
    if (k_users > cap * n_beams)
        throw CapacityError("cluster_users: " + std::to_string(k_users) + " users exceed capacity " +
                            std::to_string(cap) + " x " + std::to_string(n_beams) + " beams");

    struct Pair {
        double response;
        int user;
        int beam;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(k_users) * static_cast<std::size_t>(n_beams));
    for (int k = 0; k < k_users; ++k)
        for (int b = 0; b < n_beams; ++b) {
            const std::complex<double> r = ch.h.row(k).dot(candidate_beams[static_cast<std::size_t>(b)]);
            pairs.push_back({std::abs(r), k, b});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.response != b.response)
            return a.response > b.response;
        if (a.user != b.user)
            return a.user < b.user;
        return a.beam < b.beam;
    });

    BeamAssignment out;
    out.n_beams = n_beams;
    out.beam_of_user.assign(static_cast<std::size_t>(k_users), -1);
    out.users_of_beam.assign(static_cast<std::size_t>(n_beams), {});
    int assigned = 0;
    for (const Pair& p : pairs) {
        if (assigned == k_users)
            break;
        if (out.beam_of_user[static_cast<std::size_t>(p.user)] >= 0)
            continue;
        if (static_cast<int>(out.users_of_beam[static_cast<std::size_t>(p.beam)].size()) >= cap)
            continue;
        out.beam_of_user[static_cast<std::size_t>(p.user)] = p.beam;
        out.users_of_beam[static_cast<std::size_t>(p.beam)].push_back(p.user);
        ++assigned;
    }
    for (auto& members : out.users_of_beam)
        std::sort(members.begin(), members.end());
    return out;
}

/// One-hot selection vector per lens at the row-wise argmax of `scores`
/// (n_lens x m_per_lens). Ties break to the lowest index.
inline std::vector<Eigen::VectorXd> select_lens_beams(const Eigen::MatrixXd& scores) {
    if (!scores.allFinite())
        throw std::invalid_argument("select_lens_beams: scores must be finite");
    std::vector<Eigen::VectorXd> gamma;
    gamma.reserve(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index l = 0; l < scores.rows(); ++l) {
        Eigen::Index best = 0;
        for (Eigen::Index m = 1; m < scores.cols(); ++m)
            if (scores(l, m) > scores(l, best))
                best = m;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(scores.cols());
        g[best] = 1.0;
        gamma.push_back(std::move(g));
    }
    return gamma;
}

/// Block-diagonal N_t x N_Lens switch matrix from per-lens selections.
inline Eigen::MatrixXd assemble_lens_matrix(const std::vector<Eigen::VectorXd>& gamma) {
    const int n_lens = static_cast<int>(gamma.size());
    if (n_lens == 0)
        throw std::invalid_argument("assemble_lens_matrix: no selections");
    const int m = static_cast<int>(gamma.front().size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_lens) * m, n_lens);
    for (int l = 0; l < n_lens; ++l) {
        if (gamma[static_cast<std::size_t>(l)].size() != m)
            throw std::invalid_argument("assemble_lens_matrix: ragged selections");
        w.block(static_cast<Eigen::Index>(l) * m, l, m, 1) = gamma[static_cast<std::size_t>(l)];
    }
    return w;
}

/// Nearest b_bits-grid phase (phases {2 pi b / 2^B}), entries of magnitude
/// 1/sqrt(n_lens). Quantization error is at most pi / 2^B per entry.
inline Eigen::MatrixXcd quantize_rf(const Eigen::MatrixXd& ideal_phases, const LasConfig& cfg) {
    const double levels = std::pow(2.0, cfg.b_bits);
    const double step = 2.0 * std::numbers::pi / levels;
    const double mag = 1.0 / std::sqrt(static_cast<double>(cfg.n_lens));
    Eigen::MatrixXcd w(ideal_phases.rows(), ideal_phases.cols());
    for (Eigen::Index r = 0; r < ideal_phases.rows(); ++r)
        for (Eigen::Index c = 0; c < ideal_phases.cols(); ++c) {
            double b = std::round(ideal_phases(r, c) / step);
            b = b - levels * std::floor(b / levels); // wrap into [0, 2^B)
            w(r, c) = std::polar(mag, step * b);
        }
    return w;
}

inline Eigen::MatrixXcd effective_channel(const Eigen::MatrixXcd& h, const Eigen::MatrixXd& w_lens,
                                          const Eigen::MatrixXcd& w_rf) {
    return h * w_lens * w_rf;
}

/// Digital stage on the effective channel H_eff = H W_lens W_rf: the
/// interference-inverting solution (Gram(H_eff))^-1 H_eff^H, computed through
/// the SVD so that wide (K < N_RF) effective channels resolve to the
/// minimum-norm inverse. Throws when cond(H_eff) exceeds `cond_threshold`.
/// With `normalize_columns`, each user's column is scaled to unit norm and
/// per-stream power is carried by the power allocation instead.
inline Eigen::MatrixXcd zero_forcing_effective(const Eigen::MatrixXcd& h_eff,
                                               bool normalize_columns = true,
                                               double cond_threshold = 1e8) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h_eff, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double s_max = s.size() > 0 ? s[0] : 0.0;
    const double s_min = s.size() > 0 ? s[s.size() - 1] : 0.0;
    if (!(s_min > 0.0) || s_max / s_min > cond_threshold)
        throw RankDeficiencyError(s_min > 0.0 ? s_max / s_min
                                              : std::numeric_limits<double>::infinity());
    const Eigen::VectorXcd inv = s.cwiseInverse().cast<std::complex<double>>();
    Eigen::MatrixXcd w_bb =
        svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint(); // N_RF x K
    if (normalize_columns)
        for (Eigen::Index c = 0; c < w_bb.cols(); ++c) {
            const double n = w_bb.col(c).norm();
            if (n > 0.0)
                w_bb.col(c) /= n;
        }
    return w_bb;
}

inline Eigen::MatrixXcd zero_forcing(const Eigen::MatrixXcd& h, const Eigen::MatrixXd& w_lens,
                                     const Eigen::MatrixXcd& w_rf, bool normalize_columns = true,
                                     double cond_threshold = 1e8) {
    return zero_forcing_effective(effective_channel(h, w_lens, w_rf), normalize_columns,
                                  cond_threshold);
}

/// Unit-norm digital vector for the common stream: over the candidate set
/// {matched filter to each user's effective channel, matched filter to the
/// user average}, pick the one maximizing the minimum per-user gain. Ties
/// break to the earliest candidate.
inline Eigen::VectorXcd common_precoder_effective(const Eigen::MatrixXcd& h_eff) {
    const Eigen::Index k_users = h_eff.rows();
    if (k_users == 0)
        throw std::invalid_argument("common_precoder: no users");
    std::vector<Eigen::VectorXcd> candidates;
    for (Eigen::Index k = 0; k < k_users; ++k) {
        Eigen::VectorXcd mf = h_eff.row(k).conjugate().transpose();
        const double n = mf.norm();
        if (n > 0.0)
            candidates.push_back(mf / n);
    }
    Eigen::VectorXcd avg = h_eff.colwise().sum().conjugate().transpose();
    if (avg.norm() > 0.0)
        candidates.push_back(avg / avg.norm());
    if (candidates.empty())
        throw RankDeficiencyError(std::numeric_limits<double>::infinity());

    Eigen::Index best = 0;
    double best_min_gain = -1.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        double min_gain = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < k_users; ++k) {
            const std::complex<double> g = (h_eff.row(k) * candidates[c])(0);
            min_gain = std::min(min_gain, std::norm(g));
        }
        if (min_gain > best_min_gain) {
            best_min_gain = min_gain;
            best = static_cast<Eigen::Index>(c);
        }
    }
    return candidates[static_cast<std::size_t>(best)];
}

inline Eigen::VectorXcd common_precoder(const Eigen::MatrixXcd& h, const Eigen::MatrixXd& w_lens,
                                        const Eigen::MatrixXcd& w_rf) {
    return common_precoder_effective(effective_channel(h, w_lens, w_rf));
}

/// Ideal (pre-quantization) analog phases: RF chain f conjugate-matches the
/// aggregate selected-element channel of the users it serves, with users
/// mapped to chains round-robin by user index.
inline Eigen::MatrixXd ideal_rf_phases(const Eigen::MatrixXcd& h, const Eigen::MatrixXd& w_lens,
                                       int n_rf) {
    const Eigen::MatrixXcd selected = h * w_lens; // K x N_Lens
    const int k_users = static_cast<int>(selected.rows());
    const int n_lens = static_cast<int>(selected.cols());
    Eigen::MatrixXd phases = Eigen::MatrixXd::Zero(n_lens, n_rf);
    for (int f = 0; f < n_rf; ++f) {
        Eigen::VectorXcd agg = Eigen::VectorXcd::Zero(n_lens);
        for (int k = f; k < k_users; k += n_rf)
            agg += selected.row(k).transpose();
        if (agg.isZero(0.0)) // chain without users: fall back to the first user
            agg = selected.row(0).transpose();
        for (int l = 0; l < n_lens; ++l)
            phases(l, f) = -std::arg(agg[l]);
    }
    return phases;
}

/// The n strongest codebook directions by aggregate squared response over all
/// users, returned in ascending codebook order.
inline std::vector<Eigen::VectorXcd> strongest_beams(const ChannelRealization& ch,
                                                     const std::vector<Eigen::VectorXcd>& codebook,
                                                     int n) {
    std::vector<std::pair<double, int>> scored;
    for (std::size_t b = 0; b < codebook.size(); ++b) {
        double acc = 0.0;
        for (int k = 0; k < ch.n_users(); ++k)
            acc += std::norm((ch.h.row(k) * codebook[b])(0));
        scored.emplace_back(-acc, static_cast<int>(b));
    }
    std::sort(scored.begin(), scored.end());
    const int keep = std::min<int>(n, static_cast<int>(codebook.size()));
    std::vector<int> idx;
    for (int i = 0; i < keep; ++i)
        idx.push_back(scored[static_cast<std::size_t>(i)].second);
    std::sort(idx.begin(), idx.end());
    std::vector<Eigen::VectorXcd> out;
    for (int i : idx)
        out.push_back(codebook[static_cast<std::size_t>(i)]);
    return out;
}

/// Steering codebook on the uniform n_x x n_y angular grid over
/// [-pi/2, pi/2]^2; the clustering candidate set.
inline std::vector<Eigen::VectorXcd> upa_codebook(const LasConfig& cfg) {
    std::vector<Eigen::VectorXcd> beams;
    beams.reserve(static_cast<std::size_t>(cfg.n_t));
    const double half_pi = std::numbers::pi / 2.0;
    for (int i = 0; i < cfg.n_x; ++i) {
        const double az = cfg.n_x == 1 ? 0.0 : -half_pi + i * std::numbers::pi / (cfg.n_x - 1);
        for (int j = 0; j < cfg.n_y; ++j) {
            const double el = cfg.n_y == 1 ? 0.0 : -half_pi + j * std::numbers::pi / (cfg.n_y - 1);
            beams.push_back(steering_vector(cfg, az, el));
        }
    }
    return beams;
}

} // namespace lasuav

#endif
