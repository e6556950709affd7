#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "axmlp/common.hpp"

namespace axmlp {

/// Tabular classification dataset. Rows are samples, labels are dense
/// class indices in [0, num_classes).
struct Dataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    std::vector<std::string> feature_names;  // empty when the CSV had no header
    int num_classes = 0;

    size_t size() const { return features.size(); }
    size_t num_features() const { return features.empty() ? 0 : features[0].size(); }
};

/// Per-feature min/max computed on the training split only.
struct NormalizationParams {
    std::vector<double> min;
    std::vector<double> max;
};

/// Dataset with features quantized to unsigned `input_bits`-wide integers.
struct QuantizedDataset {
    std::vector<std::vector<uint32_t>> features;
    std::vector<int> labels;
    int input_bits = 4;
    int num_classes = 0;

    size_t size() const { return features.size(); }
    size_t num_features() const { return features.empty() ? 0 : features[0].size(); }
};

/// Loads a comma-separated file. A header row is auto-detected by a
/// non-numeric first row. `label_column` selects the class column by header
/// name, by 0-based index, or "last" (the default). Labels are re-indexed
/// densely from 0 in order of first appearance.
Dataset load_csv(const std::string& path, const std::string& label_column = "last");

/// Deterministic shuffled split; |train| = round(train_fraction * N).
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, uint32_t seed);

struct NormalizedSplit {
    Dataset train;
    Dataset test;
    NormalizationParams params;
};

/// Min-max normalization fit on train only; both splits are clamped to [0,1].
/// Constant feature columns map to 0.
NormalizedSplit normalize(const Dataset& train, const Dataset& test);

/// q = round_half_up(x * (2^input_bits - 1)). Features must be in [0,1].
QuantizedDataset quantize_inputs(const Dataset& ds, int input_bits);

}  // namespace axmlp
