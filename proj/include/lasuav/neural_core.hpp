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

#ifndef LASUAV_NEURAL_CORE_HPP
#define LASUAV_NEURAL_CORE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lasuav/rng.hpp"

namespace lasuav {

enum class Activation { Identity, Relu, Tanh };

inline std::string activation_name(Activation a) {
    switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    }
    return "identity";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "identity")
        return Activation::Identity;
    if (s == "relu")
        return Activation::Relu;
    if (s == "tanh")
        return Activation::Tanh;
    throw std::invalid_argument("unknown activation tag: " + s);
}

/// Fully-connected network parameters. Value-semantic: copies are independent.
/// weights[l] is (layer_sizes[l+1] x layer_sizes[l]); activations has one tag
/// per affine layer.
struct Mlp {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    std::vector<Activation> activations;

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    int n_layers() const { return static_cast<int>(weights.size()); }

    /// Xavier-uniform initialization: U(+-sqrt(6 / (fan_in + fan_out))).
    static Mlp make(const std::vector<int>& sizes, Activation hidden, Activation output, Rng& rng) {
        if (sizes.size() < 2)
            throw std::invalid_argument("Mlp: need at least input and output sizes");
        Mlp net;
        net.layer_sizes = sizes;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const int fan_in = sizes[l];
            const int fan_out = sizes[l + 1];
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            Eigen::MatrixXd w(fan_out, fan_in);
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c)
                    w(r, c) = rng.uniform(-limit, limit);
            net.weights.push_back(std::move(w));
            net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
            net.activations.push_back(l + 2 == sizes.size() ? output : hidden);
        }
        return net;
    }

    bool same_shape(const Mlp& other) const {
        return layer_sizes == other.layer_sizes && activations == other.activations;
    }
};

/// Per-parameter partials, shape-congruent with an Mlp.
struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static Gradients zeros_like(const Mlp& net) {
        Gradients g;
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            g.weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
            g.biases.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
        }
        return g;
    }

    void add(const Gradients& other) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] += other.weights[l];
            biases[l] += other.biases[l];
        }
    }

    void scale(double s) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] *= s;
            biases[l] *= s;
        }
    }

    double squared_norm() const {
        double acc = 0.0;
        for (std::size_t l = 0; l < weights.size(); ++l)
            acc += weights[l].squaredNorm() + biases[l].squaredNorm();
        return acc;
    }

    double global_norm() const { return std::sqrt(squared_norm()); }
};

namespace detail {

inline Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& z) {
    switch (a) {
    case Activation::Identity: return z;
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
    }
    return z;
}

/// Derivative of the activation expressed through pre-activation z and
/// post-activation y.
inline Eigen::MatrixXd activation_grad(Activation a, const Eigen::MatrixXd& z,
                                       const Eigen::MatrixXd& y) {
    switch (a) {
    case Activation::Identity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: return (1.0 - y.array().square()).matrix();
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

} // namespace detail

/// Forward pass; columns of x are independent samples.
inline Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& x) {
    if (x.rows() != net.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    Eigen::MatrixXd a = x;
    for (int l = 0; l < net.n_layers(); ++l) {
        Eigen::MatrixXd z = (net.weights[static_cast<std::size_t>(l)] * a).colwise() +
                            net.biases[static_cast<std::size_t>(l)];
        a = detail::apply_activation(net.activations[static_cast<std::size_t>(l)], z);
    }
    return a;
}

inline Eigen::VectorXd forward_one(const Mlp& net, const Eigen::VectorXd& x) {
    return forward(net, Eigen::MatrixXd(x)).col(0);
}

struct BackwardResult {
    Gradients grads;           // summed over the batch columns
    Eigen::MatrixXd input_grad; // d(loss)/d(input), same shape as x
};

/// Reverse-mode gradients of a scalar loss whose partials w.r.t. the network
/// output are `upstream` (same shape as the output).
inline BackwardResult backward(const Mlp& net, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& upstream) {
    if (x.rows() != net.input_dim())
        throw std::invalid_argument("backward: input dimension mismatch");
    if (upstream.rows() != net.output_dim() || upstream.cols() != x.cols())
        throw std::invalid_argument("backward: upstream dimension mismatch");

    const int n_layers = net.n_layers();
    std::vector<Eigen::MatrixXd> pre(static_cast<std::size_t>(n_layers));
    std::vector<Eigen::MatrixXd> post(static_cast<std::size_t>(n_layers) + 1);
    post[0] = x;
    for (int l = 0; l < n_layers; ++l) {
        pre[static_cast<std::size_t>(l)] =
            (net.weights[static_cast<std::size_t>(l)] * post[static_cast<std::size_t>(l)])
                .colwise() +
            net.biases[static_cast<std::size_t>(l)];
        post[static_cast<std::size_t>(l) + 1] = detail::apply_activation(
            net.activations[static_cast<std::size_t>(l)], pre[static_cast<std::size_t>(l)]);
    }

    BackwardResult res;
    res.grads = Gradients::zeros_like(net);
    Eigen::MatrixXd delta = upstream;
    for (int l = n_layers - 1; l >= 0; --l) {
        const auto idx = static_cast<std::size_t>(l);
        delta = delta.cwiseProduct(
            detail::activation_grad(net.activations[idx], pre[idx], post[idx + 1]));
        res.grads.weights[idx] = delta * post[idx].transpose();
        res.grads.biases[idx] = delta.rowwise().sum();
        delta = (net.weights[idx].transpose() * delta).eval();
    }
    res.input_grad = delta;
    return res;
}

/// Plain gradient-descent step: p <- p - lr * g.
inline void sgd_step(Mlp& net, const Gradients& grads, double lr) {
    if (!(lr > 0.0))
        throw std::invalid_argument("sgd_step: learning rate must be positive");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        net.weights[l] -= lr * grads.weights[l];
        net.biases[l] -= lr * grads.biases[l];
    }
}

/// Polyak averaging: target <- (1 - rho) * target + rho * online.
inline void soft_update(Mlp& target, const Mlp& online, double rho) {
    if (!(rho > 0.0) || rho > 1.0)
        throw std::invalid_argument("soft_update: rho must be in (0, 1]");
    if (!target.same_shape(online))
        throw std::invalid_argument("soft_update: shape mismatch");
    for (std::size_t l = 0; l < target.weights.size(); ++l) {
        target.weights[l] = (1.0 - rho) * target.weights[l] + rho * online.weights[l];
        target.biases[l] = (1.0 - rho) * target.biases[l] + rho * online.biases[l];
    }
}

/// Scale gradients down so the global norm does not exceed max_norm.
inline void clip_global_norm(Gradients& grads, double max_norm) {
    const double n = grads.global_norm();
    if (n > max_norm && n > 0.0)
        grads.scale(max_norm / n);
}

/// Adaptive-moment optimizer with bias-corrected first/second moments.
class AdamOptimizer {
  public:
    explicit AdamOptimizer(const Mlp& net, double beta1 = 0.9, double beta2 = 0.999,
                           double epsilon = 1e-8)
        : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(Gradients::zeros_like(net)),
          v_(Gradients::zeros_like(net)) {}

    void step(Mlp& net, const Gradients& grads, double lr) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, t_);
        const double c2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            m_.weights[l] = beta1_ * m_.weights[l] + (1.0 - beta1_) * grads.weights[l];
            v_.weights[l] =
                beta2_ * v_.weights[l] + (1.0 - beta2_) * grads.weights[l].cwiseAbs2();
            m_.biases[l] = beta1_ * m_.biases[l] + (1.0 - beta1_) * grads.biases[l];
            v_.biases[l] = beta2_ * v_.biases[l] + (1.0 - beta2_) * grads.biases[l].cwiseAbs2();
            net.weights[l].array() -= lr * (m_.weights[l].array() / c1) /
                                      ((v_.weights[l].array() / c2).sqrt() + epsilon_);
            net.biases[l].array() -= lr * (m_.biases[l].array() / c1) /
                                     ((v_.biases[l].array() / c2).sqrt() + epsilon_);
        }
    }

  private:
    double beta1_, beta2_, epsilon_;
    long t_ = 0;
    Gradients m_, v_;
};

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json to_checkpoint(const Mlp& net) {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["layer_sizes"] = net.layer_sizes;
    std::vector<std::string> acts;
    for (Activation a : net.activations)
        acts.push_back(activation_name(a));
    j["activations"] = acts;
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        std::vector<double> w(net.weights[l].size());
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            w.data(), net.weights[l].rows(), net.weights[l].cols()) = net.weights[l];
        std::vector<double> b(net.biases[l].data(), net.biases[l].data() + net.biases[l].size());
        layers.push_back({{"weights", w}, {"biases", b}});
    }
    j["layers"] = layers;
    return j;
}

inline Mlp from_checkpoint(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != kCheckpointVersion)
        throw std::invalid_argument("checkpoint: unsupported format version");
    Mlp net;
    net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    for (const auto& name : j.at("activations"))
        net.activations.push_back(activation_from_name(name.get<std::string>()));
    const auto& layers = j.at("layers");
    if (layers.size() + 1 != net.layer_sizes.size() || layers.size() != net.activations.size())
        throw std::invalid_argument("checkpoint: inconsistent layer count");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto w = layers[l].at("weights").get<std::vector<double>>();
        const auto b = layers[l].at("biases").get<std::vector<double>>();
        const int rows = net.layer_sizes[l + 1];
        const int cols = net.layer_sizes[l];
        if (static_cast<int>(w.size()) != rows * cols || static_cast<int>(b.size()) != rows)
            throw std::invalid_argument("checkpoint: parameter size mismatch");
        net.weights.emplace_back(
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                           Eigen::RowMajor>>(w.data(), rows, cols));
        net.biases.emplace_back(Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
    }
    return net;
}

inline void save_checkpoint(const Mlp& net, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << to_checkpoint(net).dump(2) << "\n";
}

inline Mlp load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_checkpoint: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return from_checkpoint(j);
}

} // namespace lasuav

#endif
