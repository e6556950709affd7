#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "axmlp/dse.hpp"
#include "axmlp/retrain.hpp"

namespace axmlp {

/// Everything one end-to-end run needs. Loaded from a JSON manifest.
struct RunManifest {
    std::string dataset_path;
    std::string label_column = "last";
    Topology topology;
    std::vector<uint32_t> seeds{1};
    double split_fraction = 0.7;
    double threshold = 0.02;  // T: total accuracy-loss budget
    double alpha = 0.8;
    int epochs_per_stage = 10;
    int input_bits = 4;
    int dse_cap = 8;
    int jobs = 0;  // 0: AXMLP_JOBS env or hardware default
    std::string out_dir = "out";

    // Training hyperparameters (float training and retraining).
    int train_epochs = 300;
    double train_lr = 0.1;
    int train_batch = 16;
    double retrain_lr = 0.05;
    int retrain_batch = 16;
    double lr_growth = 2.0;
};

RunManifest manifest_from_json(const std::string& text);
std::string manifest_to_json(const RunManifest& m);

struct Metrics {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double multiplier_area = 0.0;
    double total_area = 0.0;
    double power = 0.0;
    int logic_depth = 0;
    int64_t mac_count = 0;
};

struct Report {
    uint32_t seed = 0;
    Metrics baseline;   // quantized model, exact circuit
    Metrics retrained;  // printing-friendly model, exact circuit
    Metrics selected;   // chosen approximate design
    AxConfig selected_config;
    int highest_cluster = 0;
    int retrain_epochs = 0;
    bool retrain_satisfied = false;
    bool budget_satisfied = false;  // selected train acc within T of baseline
    double threshold = 0.0;
    size_t evaluated_points = 0;
    size_t front_size = 0;
};

/// baseline/selected per metric; selected == 0 reports "inf".
struct ReductionTable {
    double multiplier_area_x = 0.0;
    double total_area_x = 0.0;
    double power_x = 0.0;
    double depth_x = 0.0;
};

ReductionTable report_compare(const Metrics& baseline, const Metrics& selected);
std::string reduction_csv(const ReductionTable& t);
std::string reduction_text(const ReductionTable& t);

/// Runs train -> quantize -> cluster -> retrain -> significance -> DSE ->
/// select -> RTL -> report for every seed (subdirectories when more than
/// one), writing all artifacts under out_dir. The budget goes to retraining
/// first; DSE selection gets the unspent remainder. Returns the (median)
/// report. A stage failure leaves a `.partial` marker in out_dir and
/// rethrows tagged with the stage name.
Report run_pipeline(const RunManifest& manifest);

std::string report_to_json(const Report& r);

}  // namespace axmlp
