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
//
// Test-only reference implementations, kept independent of the library code
// paths they check: plain scalar loops, no shared helpers.

#ifndef LASUAV_TEST_ORACLES_HPP
#define LASUAV_TEST_ORACLES_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "lasuav/neural_core.hpp"
#include "lasuav/rng.hpp"

namespace oracles {

/// Element-by-element steering vector: two explicit exponential factors and a
/// hand-rolled Kronecker product.
inline std::vector<std::complex<double>> steering(int n_x, int n_y, double d_over_lambda,
                                                  double azimuth, double elevation) {
    const std::complex<double> j{0.0, 1.0};
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<std::complex<double>> horiz, vert, out;
    for (int n1 = 0; n1 < n_x; ++n1)
        horiz.push_back(std::exp(-j * two_pi * d_over_lambda * std::sin(azimuth) *
                                 std::sin(elevation) * static_cast<double>(n1)));
    for (int n2 = 0; n2 < n_y; ++n2)
        vert.push_back(std::exp(-j * two_pi * d_over_lambda * std::cos(elevation) *
                                static_cast<double>(n2)));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_x * n_y));
    for (int n1 = 0; n1 < n_x; ++n1)
        for (int n2 = 0; n2 < n_y; ++n2)
            out.push_back(scale * horiz[static_cast<std::size_t>(n1)] *
                          vert[static_cast<std::size_t>(n2)]);
    return out;
}

/// Least-squares inverse of a tall-or-square complex matrix through scalar
/// modified Gram-Schmidt: A = Q R, pinv(A) = R^-1 Q^H by back-substitution.
/// A is row-major, rows x cols, rows >= cols, full column rank.
inline std::vector<std::vector<std::complex<double>>>
gram_schmidt_pinv(const std::vector<std::vector<std::complex<double>>>& a) {
    const std::size_t rows = a.size();
    const std::size_t cols = a.front().size();
    std::vector<std::vector<std::complex<double>>> q(rows,
                                                     std::vector<std::complex<double>>(cols));
    std::vector<std::vector<std::complex<double>>> r(cols,
                                                     std::vector<std::complex<double>>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t c = 0; c < cols; ++c)
            q[i][c] = a[i][c];
    for (std::size_t c = 0; c < cols; ++c) {
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < rows; ++i)
            norm_sq += std::norm(q[i][c]);
        const double norm = std::sqrt(norm_sq);
        r[c][c] = norm;
        for (std::size_t i = 0; i < rows; ++i)
            q[i][c] /= norm;
        for (std::size_t c2 = c + 1; c2 < cols; ++c2) {
            std::complex<double> proj{0.0, 0.0};
            for (std::size_t i = 0; i < rows; ++i)
                proj += std::conj(q[i][c]) * q[i][c2];
            r[c][c2] = proj;
            for (std::size_t i = 0; i < rows; ++i)
                q[i][c2] -= proj * q[i][c];
        }
    }
    // x_col solves R x = Q^H e_row, assembled column-wise into pinv (cols x rows)
    std::vector<std::vector<std::complex<double>>> pinv(cols,
                                                        std::vector<std::complex<double>>(rows));
    for (std::size_t row = 0; row < rows; ++row) {
        std::vector<std::complex<double>> rhs(cols);
        for (std::size_t c = 0; c < cols; ++c)
            rhs[c] = std::conj(q[row][c]); // (Q^H)_{c,row}
        for (std::size_t c = cols; c-- > 0;) {
            std::complex<double> acc = rhs[c];
            for (std::size_t c2 = c + 1; c2 < cols; ++c2)
                acc -= r[c][c2] * pinv[c2][row];
            pinv[c][row] = acc / r[c][c];
        }
    }
    return pinv;
}

/// Max relative error between reverse-mode and central-difference gradients
/// over `n_configs` random network shapes. The loss is a fixed random linear
/// functional of the outputs. Pre-activations near the rectifier kink are
/// resampled so the finite differences stay two-sided smooth.
inline double gradient_check_max_rel_error(int n_configs, std::uint64_t seed) {
    using namespace lasuav;
    double worst = 0.0;
    Rng rng(seed);
    for (int cfg_i = 0; cfg_i < n_configs; ++cfg_i) {
        const int n_hidden = rng.uniform_int(0, 3);
        std::vector<int> sizes{rng.uniform_int(1, 5)};
        for (int l = 0; l < n_hidden; ++l)
            sizes.push_back(rng.uniform_int(1, 6));
        sizes.push_back(rng.uniform_int(1, 4));
        const Activation hidden = cfg_i % 2 == 0 ? Activation::Relu : Activation::Tanh;
        const Activation output = cfg_i % 3 == 0 ? Activation::Tanh : Activation::Identity;
        const int batch = rng.uniform_int(1, 3);

        Mlp net{};
        Eigen::MatrixXd x;
        bool clean = false;
        while (!clean) { // keep rectifier inputs away from the kink
            net = Mlp::make(sizes, hidden, output, rng);
            x = Eigen::MatrixXd::Zero(sizes.front(), batch);
            for (Eigen::Index r = 0; r < x.rows(); ++r)
                for (Eigen::Index c = 0; c < x.cols(); ++c)
                    x(r, c) = rng.uniform(-1.5, 1.5);
            clean = true;
            Eigen::MatrixXd a = x;
            for (int l = 0; l < net.n_layers(); ++l) {
                Eigen::MatrixXd z =
                    (net.weights[static_cast<std::size_t>(l)] * a).colwise() +
                    net.biases[static_cast<std::size_t>(l)];
                if (net.activations[static_cast<std::size_t>(l)] == Activation::Relu &&
                    z.cwiseAbs().minCoeff() < 1e-3)
                    clean = false;
                a = net.activations[static_cast<std::size_t>(l)] == Activation::Relu
                        ? z.cwiseMax(0.0)
                        : (net.activations[static_cast<std::size_t>(l)] == Activation::Tanh
                               ? z.array().tanh().matrix().eval()
                               : z);
            }
        }

        Eigen::MatrixXd c_weights(sizes.back(), batch);
        for (Eigen::Index r = 0; r < c_weights.rows(); ++r)
            for (Eigen::Index c = 0; c < c_weights.cols(); ++c)
                c_weights(r, c) = rng.uniform(-1.0, 1.0);
        const auto loss = [&](const Mlp& m) {
            return (forward(m, x).array() * c_weights.array()).sum();
        };

        const BackwardResult analytic = backward(net, x, c_weights);
        const double eps = 1e-5;
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r)
                for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
                    Mlp plus = net, minus = net;
                    plus.weights[l](r, c) += eps;
                    minus.weights[l](r, c) -= eps;
                    const double numeric = (loss(plus) - loss(minus)) / (2.0 * eps);
                    const double a = analytic.grads.weights[l](r, c);
                    worst = std::max(worst, std::abs(a - numeric) /
                                                std::max({1.0, std::abs(a), std::abs(numeric)}));
                }
            for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
                Mlp plus = net, minus = net;
                plus.biases[l][r] += eps;
                minus.biases[l][r] -= eps;
                const double numeric = (loss(plus) - loss(minus)) / (2.0 * eps);
                const double a = analytic.grads.biases[l][r];
                worst = std::max(worst, std::abs(a - numeric) /
                                            std::max({1.0, std::abs(a), std::abs(numeric)}));
            }
        }
    }
    return worst;
}

} // namespace oracles

#endif
