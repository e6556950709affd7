#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "axmlp/axneuron.hpp"
#include "axmlp/mlp.hpp"

namespace testutil {

inline std::string data_path(const std::string& name) {
    return std::string(AXMLP_DATA_DIR) + "/" + name;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::path("axmlp_test_tmp") / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string write_tmp(const std::string& name, const std::string& content) {
    auto dir = std::filesystem::path("axmlp_test_tmp");
    std::filesystem::create_directories(dir);
    auto path = dir / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

// Random quantized model with coefficients in [-127, 127]. Bias magnitudes
// stay small so the sums remain interesting after ReLU.
inline axmlp::QuantizedMLP random_model(axmlp::Rng& rng, const axmlp::Topology& topology,
                                        int input_bits = 4) {
    axmlp::QuantizedMLP m;
    m.topology = topology;
    m.input_bits = input_bits;
    for (size_t l = 0; l + 1 < topology.size(); ++l) {
        std::vector<std::vector<int>> w(topology[l + 1], std::vector<int>(topology[l]));
        for (auto& row : w)
            for (int& v : row) v = static_cast<int>(axmlp::rng_below(rng, 255)) - 127;
        m.coefficients.push_back(std::move(w));
        std::vector<int64_t> b(topology[l + 1]);
        for (auto& v : b) v = static_cast<int64_t>(axmlp::rng_below(rng, 201)) - 100;
        m.biases.push_back(std::move(b));
        m.frac_bits.push_back(6);
    }
    return m;
}

inline axmlp::SignificanceMap random_significance(axmlp::Rng& rng, const axmlp::QuantizedMLP& m) {
    axmlp::SignificanceMap sig;
    for (size_t l = 0; l < m.num_layers(); ++l) {
        sig.layer_means.emplace_back(m.topology[l], 1.0);
        std::vector<std::vector<double>> layer;
        for (const auto& row : m.coefficients[l]) {
            std::vector<double> g(row.size(), std::numeric_limits<double>::quiet_NaN());
            for (size_t i = 0; i < row.size(); ++i)
                if (row[i] != 0) g[i] = axmlp::rng_unit(rng);
            layer.push_back(std::move(g));
        }
        sig.g.push_back(std::move(layer));
    }
    return sig;
}

inline std::vector<uint32_t> random_input(axmlp::Rng& rng, int n, int input_bits = 4) {
    std::vector<uint32_t> x(n);
    for (auto& v : x) v = axmlp::rng_below(rng, 1u << input_bits);
    return x;
}

}  // namespace testutil
