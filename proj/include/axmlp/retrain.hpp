#pragma once

#include <cstdint>
#include <vector>

#include "axmlp/cost_model.hpp"
#include "axmlp/mlp.hpp"

namespace axmlp {

/// Signed coefficient values a retraining stage may use. Symmetric, sorted,
/// and growing as clusters are consumed.
using ValueSet = std::vector<int>;

/// Union of +-magnitudes of clusters 0..max_cluster.
ValueSet build_vc(const Clustering& clustering, int max_cluster);

/// Nearest ValueSet member of round(w * 2^frac_bits) clamped to [-127, 127];
/// distance ties prefer the smaller absolute value.
std::vector<std::vector<int>> project(const std::vector<std::vector<double>>& weights, int frac_bits,
                                      const ValueSet& vc);
int project_value(int quantized, const ValueSet& vc);

/// Area-aware checkpoint score:
///   S = alpha * acc'/acc0 + (1 - alpha) * (AR0 - AR')/AR0,
/// with AR the summed bespoke-multiplier area. AR0 == 0 zeroes the area term.
double score(double acc_prime, double acc_baseline, double ar_prime, double ar_baseline,
             double alpha);

struct RetrainConfig {
    double threshold = 0.02;     // T: allowed train-accuracy loss
    double alpha = 0.8;
    int epochs_per_stage = 10;   // m
    double lr = 0.05;
    double lr_growth = 2.0;      // rho, applied on stagnation
    int batch = 16;
    uint32_t seed = 1;
};

struct ScoreHistoryRow {
    int stage = 0;
    int epoch = 0;  // 0 is the stage's initial projection
    double lr = 0.0;
    double score = 0.0;
    double train_accuracy = 0.0;
    double multiplier_area = 0.0;
    bool coefficients_changed = false;
};

struct RetrainResult {
    QuantizedMLP model;
    int highest_cluster = 0;
    int epochs = 0;
    bool satisfied = false;
    double baseline_train_accuracy = 0.0;
    double train_accuracy = 0.0;
    std::vector<ScoreHistoryRow> history;
};

/// Printing-friendly retraining: widen VC cluster by cluster, retrain with
/// shadow weights projected in the forward pass (straight-through gradients),
/// keep the best-scoring projected checkpoint per stage, grow the learning
/// rate while the projection stagnates below threshold, and stop at the
/// first stage whose checkpoint is within T of the baseline train accuracy.
RetrainResult retrain(const QuantizedMLP& baseline, const QuantizedDataset& train,
                      const Clustering& clustering, const MultiplierAreaLut& lut,
                      const RetrainConfig& cfg);

}  // namespace axmlp
