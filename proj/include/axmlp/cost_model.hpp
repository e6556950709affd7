#pragma once

#include <array>
#include <map>
#include <set>
#include <vector>

#include "axmlp/axneuron.hpp"
#include "axmlp/mlp.hpp"

namespace axmlp {

/// Abstract gate-unit constants. Absolute values are unitless; only ratios
/// and orderings are meaningful.
struct GateCosts {
    double full_adder = 1.0;
    double inverter_per_bit = 0.1;
    double relu_per_bit = 0.2;
    double comparator_per_bit = 1.0;
    double kappa = 1.0;  // power = kappa * total_area
};

/// Shift-add area of one hardwired multiplier: with D nonzero CSD digits,
/// (D - 1) adders of (input_width + bitsize(|w|)) full adders each. Powers
/// of two and zero cost nothing.
double mult_area(uint32_t magnitude, int input_width, const GateCosts& costs = {});

/// Precomputed multiplier areas for |w| in [0, 127] per input width.
/// Lookups for widths without a precomputed column fall back to the
/// analytical model with the costs the table was built with.
class MultiplierAreaLut {
public:
    using Column = std::array<double, 128>;

    explicit MultiplierAreaLut(const GateCosts& costs = {}) : costs_(costs) {}

    double area(uint32_t magnitude, int input_width) const;
    const Column& column(int input_width) const;
    std::vector<int> widths() const;
    void add_width(int input_width);
    void set_column(int input_width, const Column& column);  // fixtures / JSON load
    const GateCosts& costs() const { return costs_; }

private:
    GateCosts costs_;
    std::map<int, Column> columns_;
};

MultiplierAreaLut build_lut(const std::set<int>& input_widths, const GateCosts& costs = {});

/// K-means grouping of coefficient magnitudes by multiplier area, relabeled
/// C0..C(K-1) by ascending mean area. C0 is the zero-area group.
struct Clustering {
    std::array<int, 128> cluster_of{};  // magnitude -> cluster index
    std::vector<double> mean_area;      // per cluster, ascending
    int num_clusters = 0;

    std::vector<int> members(int cluster) const;
};

/// 1-D Lloyd iteration, deterministically seeded at evenly spaced quantiles
/// of the sorted area values. Collapses (with a warning) when fewer than K
/// distinct areas exist.
Clustering cluster_coefficients(const MultiplierAreaLut& lut, int k = 4, int input_width = 4);

struct AreaReport {
    double multiplier_area = 0.0;
    double adder_area = 0.0;
    double negation_area = 0.0;
    double relu_area = 0.0;
    double argmax_area = 0.0;
    double total_area = 0.0;
    double power_proxy = 0.0;
    int logic_depth = 0;
};

/// Analytical area/power/depth of the bespoke circuit for `m`, exact when no
/// config is given, truncation-aware otherwise.
AreaReport network_area(const QuantizedMLP& m, const SignificanceMap* sig = nullptr,
                        const AxConfig* ax = nullptr, const GateCosts& costs = {});

double power_proxy(const AreaReport& report, double kappa = 1.0);

/// Sum of bespoke multiplier areas only (the retraining score's AR term).
double multiplier_area_sum(const QuantizedMLP& m, const MultiplierAreaLut& lut);

/// Adder-node count (multiplier chains + trees + merges) assumed by the cost
/// model; the lowered netlist must instantiate exactly this many.
int planned_adder_count(const QuantizedMLP& m, const SignificanceMap* sig = nullptr,
                        const AxConfig* ax = nullptr);

}  // namespace axmlp
