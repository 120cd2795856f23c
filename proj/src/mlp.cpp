#include "minexp/mlp.hpp"

#include <cmath>

#include "minexp/errors.hpp"

namespace minexp::dql {

namespace {

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void check_sizes(const std::vector<int>& sizes) {
    if (sizes.size() < 2) throw input_error("mlp needs at least input and output layers");
    for (int s : sizes) {
        if (s < 1) throw input_error("mlp layer sizes must be positive");
    }
}

}  // namespace

Mlp Mlp::zeros(const std::vector<int>& sizes) {
    check_sizes(sizes);
    Mlp net;
    net.layer_sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        net.weights.emplace_back(Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]));
        net.biases.emplace_back(Eigen::VectorXd::Zero(sizes[l + 1]));
    }
    return net;
}

Mlp Mlp::xavier(const std::vector<int>& sizes, Rng& rng) {
    Mlp net = zeros(sizes);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const double limit = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
        auto& w = net.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                w(i, j) = rng.uniform(-limit, limit);
            }
        }
    }
    return net;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs, ForwardCache* cache) const {
    if (inputs.rows() != input_size()) throw input_error("mlp input dimension mismatch");
    if (cache) {
        cache->activations.clear();
        cache->preactivations.clear();
        cache->activations.push_back(inputs);
    }
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Eigen::MatrixXd z = (weights[l] * a).colwise() + biases[l];
        const bool hidden = l + 1 < weights.size();
        if (hidden) {
            a = z.unaryExpr([](double x) { return softplus(x); });
        } else {
            a = z;
        }
        if (cache) {
            cache->preactivations.push_back(std::move(z));
            cache->activations.push_back(a);
        }
    }
    return a;
}

void Mlp::apply_gradient(const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                         double lr) {
    const std::size_t n = weights.size();
    Eigen::MatrixXd delta = output_grad;  // linear output layer
    for (std::size_t l = n; l-- > 0;) {
        const Eigen::MatrixXd& prev_act = cache.activations[l];
        const Eigen::MatrixXd grad_w = delta * prev_act.transpose();
        const Eigen::VectorXd grad_b = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = weights[l].transpose() * delta;
            delta = back.cwiseProduct(
                cache.preactivations[l - 1].unaryExpr([](double x) { return sigmoid(x); }));
        }
        weights[l].noalias() -= lr * grad_w;
        biases[l] -= lr * grad_b;
    }
}

void Mlp::blend_from(const Mlp& other, double rate) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l] = rate * other.weights[l] + (1.0 - rate) * weights[l];
        biases[l] = rate * other.biases[l] + (1.0 - rate) * biases[l];
    }
}

double Mlp::parameter_distance(const Mlp& other) const {
    double sq = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        sq += (weights[l] - other.weights[l]).squaredNorm();
        sq += (biases[l] - other.biases[l]).squaredNorm();
    }
    return std::sqrt(sq);
}

bool Mlp::same_shape(const Mlp& other) const {
    return layer_sizes == other.layer_sizes;
}

}  // namespace minexp::dql
