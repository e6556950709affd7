#pragma once

#include <string>
#include <vector>

#include "axmlp/cost_model.hpp"

namespace axmlp {

/// One evaluated truncation configuration of the fixed retrained model.
struct DesignPoint {
    AxConfig config;
    double train_accuracy = 0.0;  // optimization axis
    double test_accuracy = 0.0;   // reporting only
    AreaReport area;
    int64_t truncated_products = 0;  // selection tie-break
};

/// Non-dominated points under (maximize train accuracy, minimize total
/// area), sorted by area ascending.
using ParetoFront = std::vector<DesignPoint>;

/// Exhaustive configuration grid: k in {1,2,3} crossed with per-layer
/// threshold candidates {none} + the layer's distinct significance values
/// (capped to `cap` evenly spaced quantiles when there are more).
std::vector<AxConfig> enumerate_configs(const QuantizedMLP& m, const SignificanceMap& sig,
                                        int cap = 8);

/// Candidate count per layer (for the exhaustiveness check 3 * prod |c_l|).
std::vector<size_t> candidate_counts(const QuantizedMLP& m, const SignificanceMap& sig, int cap = 8);

DesignPoint evaluate(const QuantizedMLP& m, const SignificanceMap& sig, const AxConfig& cfg,
                     const QuantizedDataset& train, const QuantizedDataset& test,
                     const GateCosts& costs = {});

/// Evaluates every config; parallel over configurations with a result vector
/// indexed like `configs` (so parallel == serial). jobs <= 0 picks a default
/// from AXMLP_JOBS or the hardware concurrency.
std::vector<DesignPoint> evaluate_all(const QuantizedMLP& m, const SignificanceMap& sig,
                                      const std::vector<AxConfig>& configs,
                                      const QuantizedDataset& train, const QuantizedDataset& test,
                                      int jobs = 0, const GateCosts& costs = {});

ParetoFront pareto(const std::vector<DesignPoint>& points);

struct Selection {
    DesignPoint point;
    bool satisfied = false;
};

/// Cheapest front member with train accuracy >= baseline - budget; area ties
/// go to the design with fewer truncated products. Falls back to the
/// highest-accuracy member, flagged unsatisfied.
Selection select(const ParetoFront& front, double budget, double baseline_accuracy);

/// CSV with one row per design point (also used for the scatter data).
std::string design_points_csv(const std::vector<DesignPoint>& points);

}  // namespace axmlp
