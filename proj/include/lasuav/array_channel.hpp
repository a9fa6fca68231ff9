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

#ifndef LASUAV_ARRAY_CHANNEL_HPP
#define LASUAV_ARRAY_CHANNEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "lasuav/rng.hpp"

namespace lasuav {

constexpr double kSpeedOfLight = 2.99792458e8; // m/s

/// Transmitter geometry: UPA of n_x * n_y elements split into n_lens lenses,
/// each lens feeding m_per_lens elements, driven by n_rf RF chains through
/// b_bits-resolution phase shifters. Antenna spacing is half a wavelength.
struct LasConfig {
    int n_t = 0;
    int n_lens = 0;
    int m_per_lens = 0;
    int n_rf = 0;
    int n_x = 0;
    int n_y = 0;
    int b_bits = 0;
    double wavelength = 0.0; // meters
    double spacing = 0.0;    // meters

    static LasConfig make(int n_x, int n_y, int n_lens, int n_rf, int b_bits,
                          double wavelength = kSpeedOfLight / 0.2e12) {
        LasConfig c;
        c.n_x = n_x;
        c.n_y = n_y;
        c.n_t = n_x * n_y;
        c.n_lens = n_lens;
        c.m_per_lens = n_lens > 0 ? c.n_t / n_lens : 0;
        c.n_rf = n_rf;
        c.b_bits = b_bits;
        c.wavelength = wavelength;
        c.spacing = wavelength / 2.0;
        c.validate();
        return c;
    }

    void validate() const {
        if (n_x < 1 || n_y < 1)
            throw std::invalid_argument("LasConfig: n_x and n_y must be >= 1");
        if (n_t != n_x * n_y)
            throw std::invalid_argument("LasConfig: n_t must equal n_x * n_y");
        if (n_lens < 1 || n_t % n_lens != 0 || m_per_lens != n_t / n_lens)
            throw std::invalid_argument("LasConfig: n_t must split evenly into n_lens lenses");
        if (n_rf < 1 || n_rf > n_t)
            throw std::invalid_argument("LasConfig: need 1 <= n_rf <= n_t");
        if (b_bits < 1)
            throw std::invalid_argument("LasConfig: b_bits must be >= 1");
        if (!(wavelength > 0.0))
            throw std::invalid_argument("LasConfig: wavelength must be positive");
        if (std::abs(spacing - wavelength / 2.0) > 1e-15 * wavelength)
            throw std::invalid_argument("LasConfig: spacing must equal wavelength / 2");
    }
};

struct UavPose {
    Eigen::Vector2d q_u{0.0, 0.0}; // ground-plane coordinate, meters
    double z_u = 0.0;              // altitude, meters

    void validate() const {
        if (!(z_u > 0.0))
            throw std::invalid_argument("UavPose: altitude must be positive");
    }
};

struct GroundUser {
    int id = 0;
    Eigen::Vector2d q_k{0.0, 0.0}; // meters, zero altitude
};

struct UserGeometry {
    double azimuth = 0.0;   // radians
    double elevation = 0.0; // radians, in [0, pi/2)
    double distance = 0.0;  // meters
};

struct ChannelOptions {
    double angular_spread_deg = 5.0;
    bool apply_path_loss = false; // multiply gains by lambda / (4 pi d)
};

/// Per-user draws that stay fixed while the transmitter moves: complex gain
/// and the angular spread offsets. Derived deterministically from a seed and
/// the user id, so user sets can be extended without disturbing earlier users.
struct ChannelDraws {
    std::vector<std::complex<double>> gain;
    std::vector<double> az_offset; // radians
    std::vector<double> el_offset; // radians
};

struct ChannelRealization {
    Eigen::MatrixXcd h; // K x N_t, row k = gain[k] * steering(azimuth[k], elevation[k])
    std::vector<double> aod_azimuth;
    std::vector<double> aod_elevation;
    std::vector<std::complex<double>> gain;
    std::vector<double> distance;

    int n_users() const { return static_cast<int>(h.rows()); }
};

/// UPA steering vector: Kronecker product of the n1-indexed horizontal factor
/// exp(-j 2 pi d sin(az) sin(el) n1 / lambda) and the n2-indexed vertical
/// factor exp(-j 2 pi d cos(el) n2 / lambda), scaled once by 1/sqrt(n_t).
inline Eigen::VectorXcd steering_vector(const LasConfig& cfg, double azimuth, double elevation) {
    const double ratio = cfg.spacing / cfg.wavelength;
    const double phase_h = -2.0 * std::numbers::pi * ratio * std::sin(azimuth) * std::sin(elevation);
    const double phase_v = -2.0 * std::numbers::pi * ratio * std::cos(elevation);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.n_t));
    Eigen::VectorXcd out(cfg.n_t);
    for (int n1 = 0; n1 < cfg.n_x; ++n1) {
        const std::complex<double> horiz = std::polar(1.0, phase_h * n1);
        for (int n2 = 0; n2 < cfg.n_y; ++n2)
            out[static_cast<Eigen::Index>(n1) * cfg.n_y + n2] = scale * horiz * std::polar(1.0, phase_v * n2);
    }
    return out;
}

/// Azimuth/elevation/distance of a ground user as seen from the UAV.
inline UserGeometry user_geometry(const UavPose& pose, const GroundUser& user) {
    pose.validate();
    UserGeometry g;
    const Eigen::Vector2d delta = pose.q_u - user.q_k;
    const double ground_range = delta.norm();
    g.elevation = std::atan(ground_range / pose.z_u);
    g.azimuth = std::atan2(delta.y(), delta.x());
    g.distance = std::sqrt(ground_range * ground_range + pose.z_u * pose.z_u);
    return g;
}

/// Fixed per-user randomness for a channel seed. Draw order per user:
/// azimuth offset, elevation offset, complex gain.
inline ChannelDraws draw_channel_params(const std::vector<GroundUser>& users, std::uint64_t seed,
                                        const ChannelOptions& opt = {}) {
    ChannelDraws d;
    d.gain.reserve(users.size());
    d.az_offset.reserve(users.size());
    d.el_offset.reserve(users.size());
    const double spread = opt.angular_spread_deg * std::numbers::pi / 180.0;
    for (const GroundUser& u : users) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(u.id)));
        d.az_offset.push_back(rng.uniform(-spread, spread));
        d.el_offset.push_back(rng.uniform(-spread, spread));
        d.gain.push_back(rng.cnormal(1.0));
    }
    return d;
}

/// Channel rows for a given pose with previously drawn gains/offsets. Spread
/// offsets are added to the geometric angles and clipped to [-pi/2, pi/2].
inline ChannelRealization realize_channel(const LasConfig& cfg, const UavPose& pose,
                                          const std::vector<GroundUser>& users,
                                          const ChannelDraws& draws, const ChannelOptions& opt = {}) {
    if (users.empty())
        throw std::invalid_argument("realize_channel: users must be non-empty");
    if (draws.gain.size() != users.size())
        throw std::invalid_argument("realize_channel: draws do not match user count");
    const double half_pi = std::numbers::pi / 2.0;
    ChannelRealization ch;
    ch.h.resize(static_cast<Eigen::Index>(users.size()), cfg.n_t);
    for (std::size_t k = 0; k < users.size(); ++k) {
        const UserGeometry geo = user_geometry(pose, users[k]);
        const double az = std::clamp(geo.azimuth + draws.az_offset[k], -half_pi, half_pi);
        const double el = std::clamp(geo.elevation + draws.el_offset[k], -half_pi, half_pi);
        std::complex<double> gain = draws.gain[k];
        if (opt.apply_path_loss)
            gain *= cfg.wavelength / (4.0 * std::numbers::pi * geo.distance);
        ch.h.row(static_cast<Eigen::Index>(k)) = gain * steering_vector(cfg, az, el).transpose();
        ch.aod_azimuth.push_back(az);
        ch.aod_elevation.push_back(el);
        ch.gain.push_back(gain);
        ch.distance.push_back(geo.distance);
    }
    return ch;
}

/// One-shot LoS channel draw: geometry from the pose, +-spread on the angles,
/// CN(0,1) gains. Deterministic for a fixed seed.
inline ChannelRealization draw_channel(const LasConfig& cfg, const UavPose& pose,
                                       const std::vector<GroundUser>& users, std::uint64_t seed,
                                       const ChannelOptions& opt = {}) {
    return realize_channel(cfg, pose, users, draw_channel_params(users, seed, opt), opt);
}

} // namespace lasuav

#endif
