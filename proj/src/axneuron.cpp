#include "axmlp/axneuron.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace axmlp {

std::vector<std::vector<double>> capture_means(const QuantizedMLP& m, const QuantizedDataset& train) {
    if (train.size() == 0) throw InputError("cannot capture activation means on an empty dataset");

    std::vector<std::vector<double>> sums;
    for (size_t l = 0; l < m.num_layers(); ++l)
        sums.emplace_back(m.topology[l], 0.0);

    InferenceTrace trace;
    for (const auto& x : train.features) {
        infer_exact(m, x, &trace);
        for (size_t l = 0; l < sums.size(); ++l)
            for (size_t i = 0; i < sums[l].size(); ++i)
                sums[l][i] += static_cast<double>(trace.layer_inputs[l][i]);
    }
    const double inv_n = 1.0 / static_cast<double>(train.size());
    for (auto& layer : sums)
        for (double& v : layer) v *= inv_n;
    return sums;
}

std::vector<double> significance(const std::vector<int>& coefficients,
                                 const std::vector<double>& means) {
    constexpr double kEps = 1e-9;
    std::vector<double> g(coefficients.size(), std::numeric_limits<double>::quiet_NaN());

    double denom = 0.0, abs_denom = 0.0;
    for (size_t i = 0; i < coefficients.size(); ++i) {
        if (coefficients[i] == 0) continue;
        const double term = means[i] * coefficients[i];
        denom += term;
        abs_denom += std::abs(term);
    }

    for (size_t i = 0; i < coefficients.size(); ++i) {
        if (coefficients[i] == 0) continue;
        const double num = coefficients[i] * means[i];
        if (std::abs(denom) >= kEps)
            g[i] = std::abs(num / denom);
        else if (abs_denom > 0.0)
            g[i] = std::abs(num) / abs_denom;
        else
            g[i] = 0.0;
    }
    return g;
}

SignificanceMap build_significance(const QuantizedMLP& m, const QuantizedDataset& train) {
    SignificanceMap sig;
    sig.layer_means = capture_means(m, train);
    for (size_t l = 0; l < m.num_layers(); ++l) {
        std::vector<std::vector<double>> layer;
        layer.reserve(m.coefficients[l].size());
        for (const auto& row : m.coefficients[l])
            layer.push_back(significance(row, sig.layer_means[l]));
        sig.g.push_back(std::move(layer));
    }
    return sig;
}

uint64_t truncate_product(uint64_t p, int n, int k) {
    if (k < 1) throw InputError("kept MSB count must be >= 1");
    if (n < bitsize(p)) throw InputError("product value exceeds its declared width");
    if (k >= n) return p;
    const int drop = n - k;
    return (p >> drop) << drop;
}

int64_t ax_neuron_sum(std::span<const AxProduct> products, int64_t bias,
                      std::optional<double> g_threshold, int k) {
    int64_t s_p = 0, s_n = 0;
    bool has_negative = bias < 0;

    for (const auto& prod : products) {
        if (prod.coefficient == 0) continue;
        const uint64_t mag = static_cast<uint64_t>(std::abs(int64_t{prod.coefficient}));
        uint64_t p = mag * static_cast<uint64_t>(prod.input);
        const int n = bitsize(mag) + prod.input_width;
        if (g_threshold.has_value() && prod.g <= *g_threshold)
            p = truncate_product(p, n, k);
        if (prod.coefficient > 0) {
            s_p += static_cast<int64_t>(p);
        } else {
            s_n += static_cast<int64_t>(p);
            has_negative = true;
        }
    }

    if (bias >= 0)
        s_p += bias;
    else
        s_n += -bias;

    // The negative tree folds in through bitwise NOT; at the design widths
    // this is exactly S_p - S_n - 1 (the hardware inverts even when S_n == 0).
    return has_negative ? s_p - s_n - 1 : s_p;
}

std::vector<int64_t> infer_approx_sums(const QuantizedMLP& m, const SignificanceMap& sig,
                                       const AxConfig& ax, const std::vector<uint32_t>& x) {
    if (ax.g_per_layer.size() != m.num_layers())
        throw InputError("ax config layer count does not match the model");
    if (ax.k < 1 || ax.k > 3) throw InputError("k must be in [1, 3]");
    if (x.size() != static_cast<size_t>(m.topology.front()))
        throw InputError("input width does not match the model topology");

    const auto widths = layer_input_widths(m);
    std::vector<int64_t> act(x.begin(), x.end());

    for (size_t l = 0; l < m.num_layers(); ++l) {
        const bool hidden = l + 1 < m.num_layers();
        std::vector<int64_t> next(m.coefficients[l].size());
        std::vector<AxProduct> prods;
        for (size_t j = 0; j < next.size(); ++j) {
            const auto& row = m.coefficients[l][j];
            prods.clear();
            for (size_t i = 0; i < row.size(); ++i) {
                if (row[i] == 0) continue;
                prods.push_back({row[i], act[i], widths[l], sig.g[l][j][i]});
            }
            int64_t s = ax_neuron_sum(prods, m.biases[l][j], ax.g_per_layer[l], ax.k);
            next[j] = hidden ? std::max<int64_t>(0, s) : s;
        }
        act = std::move(next);
    }
    return act;
}

int infer_approx(const QuantizedMLP& m, const SignificanceMap& sig, const AxConfig& ax,
                 const std::vector<uint32_t>& x) {
    auto sums = infer_approx_sums(m, sig, ax, x);
    return static_cast<int>(std::max_element(sums.begin(), sums.end()) - sums.begin());
}

double accuracy_approx(const QuantizedMLP& m, const SignificanceMap& sig, const AxConfig& ax,
                       const QuantizedDataset& ds) {
    if (ds.size() == 0) throw InputError("accuracy over an empty dataset");
    size_t correct = 0;
    for (size_t i = 0; i < ds.size(); ++i)
        if (infer_approx(m, sig, ax, ds.features[i]) == ds.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace axmlp
