#pragma once

#include <optional>
#include <string>

#include "axmlp/axneuron.hpp"
#include "axmlp/cost_model.hpp"
#include "axmlp/mlp.hpp"

namespace axmlp {

/// Canonical model interchange document: topology, per-layer integer
/// coefficients, biases and fractional bits, the input bit-width, and an
/// optional embedded truncation config.
std::string model_to_json(const QuantizedMLP& m, const AxConfig* ax = nullptr);

struct LoadedModel {
    QuantizedMLP model;
    std::optional<AxConfig> ax;
};

LoadedModel model_from_json(const std::string& text);

std::string ax_config_to_json(const AxConfig& ax);
AxConfig ax_config_from_json(const std::string& text);

std::string lut_to_json(const MultiplierAreaLut& lut);
MultiplierAreaLut lut_from_json(const std::string& text);

std::string clustering_to_json(const Clustering& c);
Clustering clustering_from_json(const std::string& text);

std::string significance_to_json(const SignificanceMap& sig);
SignificanceMap significance_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace axmlp
