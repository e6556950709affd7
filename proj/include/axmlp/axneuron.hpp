#pragma once

#include <optional>
#include <span>
#include <vector>

#include "axmlp/mlp.hpp"

namespace axmlp {

/// Per-layer mean input activations and per-product significance ratios.
/// g[l][j][i] is only meaningful where coefficient (l,j,i) is nonzero; zero
/// coefficients carry no product and their entry is NaN.
struct SignificanceMap {
    std::vector<std::vector<double>> layer_means;       // [layer][input]
    std::vector<std::vector<std::vector<double>>> g;    // [layer][neuron][input]
};

/// Truncation configuration: keep k MSBs of every product whose significance
/// is <= the layer threshold. A disengaged threshold means no truncation in
/// that layer.
struct AxConfig {
    int k = 3;  // in [1, 3]
    std::vector<std::optional<double>> g_per_layer;

    bool truncates(size_t layer, double g_i) const {
        return g_per_layer[layer].has_value() && g_i <= *g_per_layer[layer];
    }
};

/// Mean of every layer's input activations over the training set, captured
/// with exact inference (raw quantized inputs for layer 0, post-ReLU
/// accumulator values deeper).
std::vector<std::vector<double>> capture_means(const QuantizedMLP& m, const QuantizedDataset& train);

/// G_i = | w_i E[a_i] / sum_j(E[a_j] w_j) | over the nonzero-coefficient
/// products of one neuron. A vanishing denominator (|d| < 1e-9) falls back to
/// sum_j |E[a_j] w_j|; if that is zero too, every G_i is 0.
std::vector<double> significance(const std::vector<int>& coefficients,
                                 const std::vector<double>& means);

/// capture_means + significance for the whole model.
SignificanceMap build_significance(const QuantizedMLP& m, const QuantizedDataset& train);

/// Keeps the top k bits of a width-n product: p[n-1 : n-k] * 2^(n-k).
/// Identity when k >= n.
uint64_t truncate_product(uint64_t p, int n, int k);

/// One product entering an approximate summation.
struct AxProduct {
    int coefficient;    // signed, nonzero
    int64_t input;      // nonnegative activation value
    int input_width;    // declared bus width of the input
    double g;           // significance of this product
};

/// Approximate neuron sum: positive and negative products accumulate into
/// separate trees (negatives by absolute value), low-significance products
/// keep only k MSBs, and the negative subtotal is folded in through bitwise
/// NOT. With any negative term present the result is S_p - S_n - 1; without
/// one it is S_p exactly. The bias joins its sign's tree untruncated.
int64_t ax_neuron_sum(std::span<const AxProduct> products, int64_t bias,
                      std::optional<double> g_threshold, int k);

/// Full-model approximate inference; hidden ReLU, argmax with lowest-index
/// tie-break.
int infer_approx(const QuantizedMLP& m, const SignificanceMap& sig, const AxConfig& ax,
                 const std::vector<uint32_t>& x);

/// Output-layer sums of approximate inference (pre-argmax).
std::vector<int64_t> infer_approx_sums(const QuantizedMLP& m, const SignificanceMap& sig,
                                       const AxConfig& ax, const std::vector<uint32_t>& x);

double accuracy_approx(const QuantizedMLP& m, const SignificanceMap& sig, const AxConfig& ax,
                       const QuantizedDataset& ds);

}  // namespace axmlp
