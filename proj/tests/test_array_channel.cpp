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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>

#include "lasuav/array_channel.hpp"
#include "test_oracles.hpp"

using namespace lasuav;
using Catch::Approx;

namespace {
const double kPi = std::numbers::pi;

std::vector<GroundUser> four_users() {
    return {{0, {10.0, 20.0}}, {1, {-30.0, 5.0}}, {2, {50.0, -40.0}}, {3, {-60.0, -70.0}}};
}
} // namespace

TEST_CASE("LasConfig invariants", "[array_channel]") {
    const LasConfig cfg = LasConfig::make(8, 4, 4, 2, 4);
    CHECK(cfg.n_t == 32);
    CHECK(cfg.m_per_lens == 8);
    CHECK(cfg.spacing == Approx(cfg.wavelength / 2.0));
    CHECK_THROWS_AS(LasConfig::make(8, 4, 5, 2, 4), std::invalid_argument); // 5 lenses, 32 antennas
    CHECK_THROWS_AS(LasConfig::make(8, 4, 4, 64, 4), std::invalid_argument); // n_rf > n_t
    CHECK_THROWS_AS(LasConfig::make(8, 4, 4, 2, 0), std::invalid_argument);  // b_bits
}

TEST_CASE("steering vector trivial cases", "[array_channel]") {
    const LasConfig single = LasConfig::make(1, 1, 1, 1, 4);
    const Eigen::VectorXcd a = steering_vector(single, 0.7, -0.3);
    REQUIRE(a.size() == 1);
    CHECK(std::abs(a[0] - std::complex<double>{1.0, 0.0}) < 1e-15);

    const LasConfig cfg = LasConfig::make(4, 2, 2, 2, 4);
    const Eigen::VectorXcd b = steering_vector(cfg, 0.0, kPi / 2.0);
    const double expected = 1.0 / std::sqrt(8.0);
    for (Eigen::Index i = 0; i < b.size(); ++i)
        CHECK(std::abs(b[i] - std::complex<double>{expected, 0.0}) < 1e-12);
}

TEST_CASE("steering vector matches scalar-loop evaluation", "[array_channel]") {
    const LasConfig cfg = LasConfig::make(2, 2, 2, 2, 4);
    const Eigen::VectorXcd a = steering_vector(cfg, kPi / 4.0, kPi / 4.0);
    const auto ref = oracles::steering(2, 2, 0.5, kPi / 4.0, kPi / 4.0); // lambda = 2 d
    REQUIRE(a.size() == static_cast<Eigen::Index>(ref.size()));
    for (Eigen::Index i = 0; i < a.size(); ++i)
        CHECK(std::abs(a[i] - ref[static_cast<std::size_t>(i)]) < 1e-14);

    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const int nx = rng.uniform_int(1, 8);
        const int ny = rng.uniform_int(1, 8);
        const LasConfig c = LasConfig::make(nx, ny, 1, 1, 4);
        const double az = rng.uniform(-kPi / 2, kPi / 2);
        const double el = rng.uniform(-kPi / 2, kPi / 2);
        const Eigen::VectorXcd got = steering_vector(c, az, el);
        const auto want = oracles::steering(nx, ny, 0.5, az, el);
        for (Eigen::Index i = 0; i < got.size(); ++i)
            CHECK(std::abs(got[i] - want[static_cast<std::size_t>(i)]) < 1e-13);
    }
}

TEST_CASE("steering vector norm and element magnitude", "[array_channel]") {
    Rng rng(3);
    for (int nx = 1; nx <= 8; ++nx)
        for (int ny = 1; ny <= 8; ++ny) {
            const LasConfig cfg = LasConfig::make(nx, ny, 1, 1, 4);
            for (int trial = 0; trial < 2; ++trial) {
                const double az = rng.uniform(-kPi / 2, kPi / 2);
                const double el = rng.uniform(-kPi / 2, kPi / 2);
                const Eigen::VectorXcd a = steering_vector(cfg, az, el);
                CHECK(std::abs(a.norm() - 1.0) < 1e-12);
                const double mag = 1.0 / std::sqrt(static_cast<double>(nx * ny));
                for (Eigen::Index i = 0; i < a.size(); ++i)
                    CHECK(std::abs(std::abs(a[i]) - mag) < 1e-12);
            }
        }
}

TEST_CASE("steering vector phase aliasing", "[array_channel]") {
    // pi - azimuth preserves sin(azimuth), hence the whole phase profile
    const LasConfig cfg = LasConfig::make(8, 4, 4, 2, 4);
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const double az = rng.uniform(-kPi / 2, kPi / 2);
        const double el = rng.uniform(-kPi / 2, kPi / 2);
        const Eigen::VectorXcd a = steering_vector(cfg, az, el);
        const Eigen::VectorXcd b = steering_vector(cfg, kPi - az, el);
        CHECK((a - b).norm() < 1e-12);
    }
}

TEST_CASE("user geometry hand cases", "[array_channel]") {
    const UavPose above{{0.0, 0.0}, 100.0};
    const UserGeometry below = user_geometry(above, {0, {0.0, 0.0}});
    CHECK(below.elevation == Approx(0.0).margin(1e-15));
    CHECK(below.distance == Approx(100.0));

    const UserGeometry east = user_geometry(above, {1, {100.0, 0.0}});
    CHECK(east.elevation == Approx(kPi / 4.0));
    CHECK(east.distance == Approx(100.0 * std::sqrt(2.0)));
    CHECK(east.azimuth == Approx(kPi)); // atan2(+0, -100)

    const UavPose fifty{{0.0, 0.0}, 50.0};
    const UserGeometry south = user_geometry(fifty, {2, {0.0, -50.0}});
    CHECK(south.elevation == Approx(kPi / 4.0));
    CHECK(south.azimuth == Approx(kPi / 2.0));
    CHECK(south.distance == Approx(50.0 * std::sqrt(2.0)));
}

TEST_CASE("geometry grows with ground range", "[array_channel]") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const UavPose pose{{rng.uniform(-50, 50), rng.uniform(-50, 50)}, rng.uniform(10, 200)};
        const Eigen::Vector2d dir{rng.normal(), rng.normal()};
        if (dir.norm() < 1e-6)
            continue;
        const double range = rng.uniform(1.0, 80.0);
        const GroundUser near{0, pose.q_u + range * dir.normalized()};
        const GroundUser far{1, pose.q_u + 2.0 * range * dir.normalized()};
        const UserGeometry g1 = user_geometry(pose, near);
        const UserGeometry g2 = user_geometry(pose, far);
        CHECK(g2.elevation > g1.elevation);
        CHECK(g2.distance > g1.distance);
        CHECK(g1.elevation >= 0.0);
        CHECK(g1.elevation < kPi / 2.0);
    }
}

TEST_CASE("channel draw is deterministic and reconstructible", "[array_channel]") {
    const LasConfig cfg = LasConfig::make(8, 4, 4, 2, 4);
    const UavPose pose{{0.0, 0.0}, 100.0};
    const auto users = four_users();

    const ChannelRealization a = draw_channel(cfg, pose, users, 7);
    const ChannelRealization b = draw_channel(cfg, pose, users, 7);
    CHECK((a.h - b.h).norm() == 0.0);

    for (int k = 0; k < a.n_users(); ++k) {
        // unit-norm steering: row norm equals the gain magnitude
        CHECK(std::abs(a.h.row(k).norm() - std::abs(a.gain[static_cast<std::size_t>(k)])) < 1e-12);
        const Eigen::VectorXcd rebuilt =
            a.gain[static_cast<std::size_t>(k)] *
            steering_vector(cfg, a.aod_azimuth[static_cast<std::size_t>(k)],
                            a.aod_elevation[static_cast<std::size_t>(k)]);
        CHECK((a.h.row(k).transpose() - rebuilt).norm() < 1e-12);
        const UserGeometry geo = user_geometry(pose, users[static_cast<std::size_t>(k)]);
        CHECK(a.distance[static_cast<std::size_t>(k)] == Approx(geo.distance));
    }

    const ChannelRealization c = draw_channel(cfg, pose, users, 8);
    CHECK((a.h - c.h).norm() > 1e-6);
}

TEST_CASE("angular spread stays within +-5 degrees of geometry", "[array_channel]") {
    const LasConfig cfg = LasConfig::make(8, 4, 4, 2, 4);
    const UavPose pose{{0.0, 0.0}, 100.0};
    const auto users = four_users();
    const double spread = 5.0 * kPi / 180.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const ChannelRealization ch = draw_channel(cfg, pose, users, seed);
        for (std::size_t k = 0; k < users.size(); ++k) {
            const UserGeometry geo = user_geometry(pose, users[k]);
            CHECK(std::abs(ch.aod_azimuth[k] - geo.azimuth) <= spread + 1e-12);
            CHECK(std::abs(ch.aod_elevation[k] - geo.elevation) <= spread + 1e-12);
            CHECK(std::abs(ch.aod_elevation[k]) <= kPi / 2.0);
        }
    }
}

TEST_CASE("gain is unit-variance complex Gaussian", "[array_channel]") {
    std::vector<GroundUser> many;
    for (int i = 0; i < 100000; ++i)
        many.push_back({i, {0.0, 0.0}});
    const ChannelDraws draws = draw_channel_params(many, 12345);
    double acc = 0.0;
    double mean_re = 0.0;
    for (const auto& g : draws.gain) {
        acc += std::norm(g);
        mean_re += g.real();
    }
    const double variance = acc / static_cast<double>(many.size());
    CHECK(variance > 0.98);
    CHECK(variance < 1.02);
    CHECK(std::abs(mean_re) / static_cast<double>(many.size()) < 0.01);
}

TEST_CASE("optional free-space loss scales gains", "[array_channel]") {
    const LasConfig cfg = LasConfig::make(8, 4, 4, 2, 4);
    const UavPose pose{{0.0, 0.0}, 100.0};
    const auto users = four_users();
    ChannelOptions with_loss;
    with_loss.apply_path_loss = true;
    const ChannelRealization plain = draw_channel(cfg, pose, users, 9);
    const ChannelRealization scaled = draw_channel(cfg, pose, users, 9, with_loss);
    for (std::size_t k = 0; k < users.size(); ++k) {
        const double d = plain.distance[k];
        const double factor = cfg.wavelength / (4.0 * kPi * d);
        CHECK(std::abs(scaled.gain[k]) == Approx(std::abs(plain.gain[k]) * factor));
    }
}
