#pragma once

#include <Eigen/Dense>
#include <vector>

#include "minexp/rng.hpp"

namespace minexp::dql {

// Fully connected network with softplus hidden activations and a linear
// output layer. Columns are samples: forward maps (in x batch) to
// (out x batch).
struct Mlp {
    std::vector<int> layer_sizes;            // e.g. {10, 64, 64, 4}
    std::vector<Eigen::MatrixXd> weights;    // layer l: (sizes[l+1] x sizes[l])
    std::vector<Eigen::VectorXd> biases;

    static Mlp zeros(const std::vector<int>& sizes);
    // Xavier-uniform weights, zero biases.
    static Mlp xavier(const std::vector<int>& sizes, Rng& rng);

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t n_layers() const { return weights.size(); }

    struct ForwardCache {
        std::vector<Eigen::MatrixXd> activations;  // [0] = input, per layer after
        std::vector<Eigen::MatrixXd> preactivations;
    };

    Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, ForwardCache* cache = nullptr) const;

    // One SGD step given dLoss/dOutput for the batch in cache.
    void apply_gradient(const ForwardCache& cache, const Eigen::MatrixXd& output_grad, double lr);

    // this = rate * other + (1 - rate) * this, elementwise over all parameters.
    void blend_from(const Mlp& other, double rate);

    // Euclidean distance between parameter vectors (diagnostics/tests).
    double parameter_distance(const Mlp& other) const;

    bool same_shape(const Mlp& other) const;
};

}  // namespace minexp::dql
