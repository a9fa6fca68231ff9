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

#include "lasuav/precoding.hpp"
#include "test_oracles.hpp"

using namespace lasuav;
using Catch::Approx;

namespace {

Eigen::MatrixXcd random_complex(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = rng.cnormal();
    return m;
}

ChannelRealization channel_with_rows(const Eigen::MatrixXcd& h) {
    ChannelRealization ch;
    ch.h = h;
    for (int k = 0; k < h.rows(); ++k) {
        ch.aod_azimuth.push_back(0.0);
        ch.aod_elevation.push_back(0.0);
        ch.gain.push_back({1.0, 0.0});
        ch.distance.push_back(100.0);
    }
    return ch;
}

} // namespace

TEST_CASE("cluster_users basics", "[precoding]") {
    // single user, single beam
    Eigen::MatrixXcd h1(1, 4);
    h1 << 1.0, 0.0, 0.0, 0.0;
    std::vector<Eigen::VectorXcd> one_beam{Eigen::VectorXcd::Unit(4, 0)};
    const BeamAssignment a1 = cluster_users(channel_with_rows(h1), one_beam, 2);
    REQUIRE(a1.n_beams == 1);
    CHECK(a1.beam_of_user == std::vector<int>{0});
    CHECK(a1.users_of_beam[0] == std::vector<int>{0});

    // users aligned one-per-beam must each get their own beam
    std::vector<Eigen::VectorXcd> beams;
    for (int b = 0; b < 4; ++b)
        beams.push_back(Eigen::VectorXcd::Unit(4, b));
    Eigen::MatrixXcd h4 = Eigen::MatrixXcd::Identity(4, 4);
    const BeamAssignment a4 = cluster_users(channel_with_rows(h4), beams, 2);
    for (int k = 0; k < 4; ++k)
        CHECK(a4.beam_of_user[static_cast<std::size_t>(k)] == k);

    // 5 users cannot fit in 2 beams of capacity 2
    Eigen::MatrixXcd h5 = Eigen::MatrixXcd::Ones(5, 4);
    std::vector<Eigen::VectorXcd> two_beams{Eigen::VectorXcd::Unit(4, 0),
                                            Eigen::VectorXcd::Unit(4, 1)};
    CHECK_THROWS_AS(cluster_users(channel_with_rows(h5), two_beams, 2), CapacityError);
}

TEST_CASE("cluster_users respects cap and covers all users", "[precoding]") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const int k_users = rng.uniform_int(1, 8);
        const int n_beams = rng.uniform_int(2, 6);
        const int cap = rng.uniform_int(2, 3);
        if (k_users > cap * n_beams)
            continue;
        std::vector<Eigen::VectorXcd> beams;
        for (int b = 0; b < n_beams; ++b) {
            Eigen::VectorXcd v = random_complex(6, 1, rng);
            beams.push_back(v / v.norm());
        }
        const BeamAssignment asg =
            cluster_users(channel_with_rows(random_complex(k_users, 6, rng)), beams, cap);
        int total = 0;
        for (int j = 0; j < asg.n_beams; ++j) {
            CHECK(static_cast<int>(asg.users_of_beam[static_cast<std::size_t>(j)].size()) <= cap);
            total += static_cast<int>(asg.users_of_beam[static_cast<std::size_t>(j)].size());
            for (int k : asg.users_of_beam[static_cast<std::size_t>(j)])
                CHECK(asg.beam_of_user[static_cast<std::size_t>(k)] == j);
        }
        CHECK(total == k_users);
    }
}

TEST_CASE("select_lens_beams argmax with ties to the lowest index", "[precoding]") {
    Eigen::MatrixXd row(1, 3);
    row << 0.1, 0.9, 0.3;
    const auto gamma = select_lens_beams(row);
    REQUIRE(gamma.size() == 1);
    CHECK(gamma[0][0] == 0.0);
    CHECK(gamma[0][1] == 1.0);
    CHECK(gamma[0][2] == 0.0);

    const auto tie = select_lens_beams(Eigen::MatrixXd::Constant(1, 5, 0.4));
    CHECK(tie[0][0] == 1.0);
    CHECK(tie[0].sum() == 1.0);
}

TEST_CASE("assembled lens matrix has the block-diagonal pattern", "[precoding]") {
    Rng rng(31);
    const int n_lens = 4, m = 8;
    Eigen::MatrixXd scores(n_lens, m);
    for (int l = 0; l < n_lens; ++l)
        for (int c = 0; c < m; ++c)
            scores(l, c) = rng.uniform(0.0, 1.0);
    const auto gamma = select_lens_beams(scores);
    const Eigen::MatrixXd w = assemble_lens_matrix(gamma);
    REQUIRE(w.rows() == n_lens * m);
    REQUIRE(w.cols() == n_lens);
    CHECK(w.sum() == Approx(static_cast<double>(n_lens))); // exactly n_lens ones
    for (int l = 0; l < n_lens; ++l) {
        Eigen::Index argmax = 0;
        scores.row(l).maxCoeff(&argmax);
        for (int r = 0; r < n_lens * m; ++r) {
            const double expected = (r == l * m + static_cast<int>(argmax)) ? 1.0 : 0.0;
            CHECK(w(r, l) == expected);
        }
    }
}

TEST_CASE("quantize_rf snaps to the B-bit grid", "[precoding]") {
    const LasConfig cfg = LasConfig::make(8, 4, 4, 2, 4);
    const double mag = 1.0 / std::sqrt(4.0);

    Eigen::MatrixXd zero(1, 1);
    zero << 0.0;
    CHECK(std::abs(quantize_rf(zero, cfg)(0, 0) - std::complex<double>{mag, 0.0}) < 1e-15);

    Eigen::MatrixXd offgrid(1, 1);
    offgrid << 2.0 * std::numbers::pi * 1.4 / 16.0;
    const auto q = quantize_rf(offgrid, cfg);
    CHECK(std::arg(q(0, 0)) == Approx(2.0 * std::numbers::pi / 16.0)); // nearest is b = 1

    LasConfig one_bit = LasConfig::make(8, 4, 4, 2, 1);
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd phases(1, 1);
        phases << rng.uniform(-10.0, 10.0);
        const auto q1 = quantize_rf(phases, one_bit)(0, 0);
        CHECK(std::abs(std::abs(q1) - 1.0 / 2.0) < 1e-15);
        const double ph = std::arg(q1);
        CHECK((std::abs(ph) < 1e-12 || std::abs(std::abs(ph) - std::numbers::pi) < 1e-12));
    }
}

TEST_CASE("quantize_rf error bound and idempotence", "[precoding]") {
    const LasConfig cfg = LasConfig::make(8, 4, 4, 2, 4);
    Rng rng(13);
    Eigen::MatrixXd phases(4, 2);
    for (Eigen::Index r = 0; r < 4; ++r)
        for (Eigen::Index c = 0; c < 2; ++c)
            phases(r, c) = rng.uniform(-8.0, 8.0);
    const Eigen::MatrixXcd q = quantize_rf(phases, cfg);
    const double half_step = std::numbers::pi / 16.0;
    for (Eigen::Index r = 0; r < 4; ++r)
        for (Eigen::Index c = 0; c < 2; ++c) {
            double err = std::remainder(std::arg(q(r, c)) - phases(r, c), 2.0 * std::numbers::pi);
            CHECK(std::abs(err) <= half_step + 1e-12);
        }
    Eigen::MatrixXd quantized_phases(4, 2);
    for (Eigen::Index r = 0; r < 4; ++r)
        for (Eigen::Index c = 0; c < 2; ++c)
            quantized_phases(r, c) = std::arg(q(r, c));
    const Eigen::MatrixXcd q2 = quantize_rf(quantized_phases, cfg);
    CHECK((q - q2).norm() == 0.0);
}

TEST_CASE("zero forcing inverts exactly when k equals n_rf", "[precoding]") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::MatrixXcd h_eff = random_complex(2, 2, rng);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h_eff);
        if (svd.singularValues()(1) < 1e-3)
            continue;
        const Eigen::MatrixXcd w = zero_forcing_effective(h_eff, false);
        CHECK((h_eff * w - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-8);
    }
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(3, 3);
    CHECK((zero_forcing_effective(eye, false) - eye).norm() < 1e-12);
}

TEST_CASE("overloaded zero forcing matches the Gram-Schmidt projector", "[precoding]") {
    Rng rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXcd h_eff = random_complex(4, 2, rng); // k = 4 > n_rf = 2
        std::vector<std::vector<std::complex<double>>> rows(4,
                                                            std::vector<std::complex<double>>(2));
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 2; ++c)
                rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = h_eff(r, c);
        const auto ref = oracles::gram_schmidt_pinv(rows);
        const Eigen::MatrixXcd w = zero_forcing_effective(h_eff, false);
        REQUIRE(w.rows() == 2);
        REQUIRE(w.cols() == 4);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 4; ++c)
                CHECK(std::abs(w(r, c) -
                               ref[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) <
                      1e-8);
        // H_eff * W is the orthogonal projector onto the column space
        const Eigen::MatrixXcd proj = h_eff * w;
        CHECK((proj * proj - proj).norm() < 1e-8);
        CHECK((proj - proj.adjoint()).norm() < 1e-8);
    }
}

TEST_CASE("zero forcing is invariant to channel scaling", "[precoding]") {
    Rng rng(47);
    const LasConfig cfg = LasConfig::make(8, 4, 4, 2, 4);
    const Eigen::MatrixXcd h = random_complex(2, 32, rng);
    const Eigen::MatrixXd w_lens =
        assemble_lens_matrix(select_lens_beams(Eigen::MatrixXd::Identity(4, 8)));
    const Eigen::MatrixXcd w_rf = quantize_rf(ideal_rf_phases(h, w_lens, 2), cfg);
    const Eigen::MatrixXcd w1 = zero_forcing(h, w_lens, w_rf);
    const Eigen::MatrixXcd w2 = zero_forcing(Eigen::MatrixXcd(3.7 * h), w_lens, w_rf);
    CHECK((w1 - w2).norm() < 1e-10);
}

TEST_CASE("rank-deficient effective channel is reported", "[precoding]") {
    Eigen::MatrixXcd h_eff(2, 2);
    h_eff << 1.0, 2.0, 1.0, 2.0; // identical rows
    try {
        zero_forcing_effective(h_eff);
        FAIL("expected RankDeficiencyError");
    } catch (const RankDeficiencyError& e) {
        CHECK(e.condition_number > 1e8);
    }
}

TEST_CASE("common precoder candidate policy", "[precoding]") {
    // one user: matched filter
    Eigen::MatrixXcd one(1, 2);
    one << std::complex<double>{1.0, 1.0}, std::complex<double>{0.0, -2.0};
    const Eigen::VectorXcd w1 = common_precoder_effective(one);
    const Eigen::VectorXcd mf = one.row(0).conjugate().transpose().normalized();
    CHECK((w1 - mf).norm() < 1e-12);

    // identical users: still the matched filter
    Eigen::MatrixXcd twin(2, 2);
    twin.row(0) = one.row(0);
    twin.row(1) = one.row(0);
    CHECK((common_precoder_effective(twin) - mf).norm() < 1e-12);

    // orthogonal users: exhaustive scan over the candidate set
    Eigen::MatrixXcd ortho(2, 2);
    ortho << 1.0, 0.0, 0.0, 0.5;
    const Eigen::VectorXcd chosen = common_precoder_effective(ortho);
    std::vector<Eigen::VectorXcd> candidates;
    for (int k = 0; k < 2; ++k)
        candidates.push_back(ortho.row(k).conjugate().transpose().normalized());
    candidates.push_back(ortho.colwise().sum().conjugate().transpose().normalized());
    double best = -1.0;
    Eigen::VectorXcd best_w;
    for (const auto& cand : candidates) {
        double min_gain = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 2; ++k)
            min_gain = std::min(min_gain, std::norm((ortho.row(k) * cand)(0)));
        if (min_gain > best) {
            best = min_gain;
            best_w = cand;
        }
    }
    CHECK((chosen - best_w).norm() < 1e-12);
    double chosen_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 2; ++k)
        chosen_min = std::min(chosen_min, std::norm((ortho.row(k) * chosen)(0)));
    CHECK(chosen_min == Approx(best));
}

TEST_CASE("ideal rf phases give distinct chains", "[precoding]") {
    Rng rng(53);
    const Eigen::MatrixXcd h = random_complex(4, 32, rng);
    const Eigen::MatrixXd w_lens =
        assemble_lens_matrix(select_lens_beams(Eigen::MatrixXd::Identity(4, 8)));
    const Eigen::MatrixXd phases = ideal_rf_phases(h, w_lens, 2);
    REQUIRE(phases.rows() == 4);
    REQUIRE(phases.cols() == 2);
    CHECK((phases.col(0) - phases.col(1)).norm() > 1e-12);
}
