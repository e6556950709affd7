#pragma once

#include <cstdint>
#include <vector>

#include "axmlp/dataset.hpp"

namespace axmlp {

/// Layer sizes: (#inputs, hidden..., #outputs). The toolchain is built for
/// one hidden layer of at most 5 units, but nothing here assumes it.
using Topology = std::vector<int>;

/// Validates sizes; warns to stderr when a hidden layer exceeds 5 units.
void check_topology(const Topology& t);

/// Total multiply-accumulate count of a fully-parallel inference.
int64_t mac_count(const Topology& t);

/// Real-valued MLP: ReLU hidden activations, linear outputs.
struct FloatMLP {
    Topology topology;
    // weights[l][j][i]: layer l, output unit j, input i. biases[l][j].
    std::vector<std::vector<std::vector<double>>> weights;
    std::vector<std::vector<double>> biases;

    size_t num_layers() const { return weights.size(); }
};

struct TrainConfig {
    int epochs = 300;
    double lr = 0.1;
    int batch = 16;
    uint32_t seed = 1;
};

/// Mini-batch SGD with softmax cross-entropy loss; returns the epoch
/// checkpoint with the best training accuracy. Deterministic under seed.
FloatMLP train_float(const QuantizedDataset& train, const Topology& topology, const TrainConfig& cfg);
FloatMLP train_float(const Dataset& normalized_train, const Topology& topology, const TrainConfig& cfg);

/// Forward pass of the float model; returns output activations.
std::vector<double> forward_float(const FloatMLP& m, const std::vector<double>& x);
int classify_float(const FloatMLP& m, const std::vector<double>& x);
double accuracy_float(const FloatMLP& m, const QuantizedDataset& ds);

/// Integer-coefficient MLP with per-layer fixed-point scales.
///
/// Coefficient c of layer l stands for the real weight c * 2^-frac_bits[l];
/// an integer activation of layer l stands for value * input_scale(l), where
/// input_scale(0) = 1/(2^input_bits - 1) and deeper scales chain through the
/// per-layer product scale.
struct QuantizedMLP {
    Topology topology;
    std::vector<std::vector<std::vector<int>>> coefficients;  // in [-127, 127]
    std::vector<std::vector<int64_t>> biases;                 // at the layer's product scale
    std::vector<int> frac_bits;                               // f_l, may be negative
    int input_bits = 4;

    size_t num_layers() const { return coefficients.size(); }
};

/// f_l = largest integer with round(max|W_l| * 2^f_l) <= 127 (7 when the
/// layer is all zero); coefficients rounded and clamped to [-127, 127];
/// biases rounded at the layer's product scale.
QuantizedMLP quantize(const FloatMLP& m, int input_bits = 4);

/// Real value represented by one integer unit of layer l's inputs.
double input_scale(const QuantizedMLP& m, size_t layer);

/// Float model with weights c * 2^-f_l and biases at their real values;
/// classifies identically to infer_exact on every input.
FloatMLP dequantize(const QuantizedMLP& m);

/// Per-layer input activation vectors recorded during exact inference.
struct InferenceTrace {
    std::vector<std::vector<int64_t>> layer_inputs;  // layer_inputs[l][i]
};

/// Bit-exact integer inference: S = sum(a_i * w_i) + bias in unbounded
/// arithmetic, ReLU on hidden layers, argmax with lowest-index tie-break.
int infer_exact(const QuantizedMLP& m, const std::vector<uint32_t>& x, InferenceTrace* trace = nullptr);

/// Output-layer sums (pre-argmax) of exact inference.
std::vector<int64_t> infer_exact_sums(const QuantizedMLP& m, const std::vector<uint32_t>& x,
                                      InferenceTrace* trace = nullptr);

double accuracy(const QuantizedMLP& m, const QuantizedDataset& ds);

/// Declared input bus width of every layer: input_bits for layer 0, then the
/// width of the widest possible post-ReLU accumulator of the previous layer.
std::vector<int> layer_input_widths(const QuantizedMLP& m);

}  // namespace axmlp
