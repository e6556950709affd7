#include "axmlp/neuron_plan.hpp"

#include <algorithm>
#include <cmath>

namespace axmlp {

namespace {

int trailing_zeros(uint64_t v) {
    if (v == 0) return 0;
    int z = 0;
    while (!(v & 1)) {
        v >>= 1;
        ++z;
    }
    return z;
}

SummandPlan plan_product(int coefficient, int input_width, bool truncated, int k) {
    SummandPlan s;
    s.coefficient = coefficient;
    const uint64_t mag = static_cast<uint64_t>(std::abs(int64_t{coefficient}));
    const uint64_t a_max = (uint64_t{1} << input_width) - 1;
    const int mag_bits = bitsize(mag);
    s.product_width = mag_bits + input_width;
    s.mult_adders = std::max(0, csd(mag).nonzero_digits() - 1);

    uint64_t max_value = mag * a_max;
    int lsb = trailing_zeros(mag);
    if (truncated && k < s.product_width) {
        const int drop = s.product_width - k;
        max_value = (max_value >> drop) << drop;
        lsb = std::max(lsb, drop);
        s.truncated = true;
    }
    s.max_value = max_value;
    s.msb = std::max(lsb, bitsize(max_value) - 1);
    s.lsb = lsb;
    return s;
}

SummandPlan plan_bias(uint64_t magnitude) {
    SummandPlan s;
    s.is_bias = true;
    s.max_value = magnitude;
    s.lsb = trailing_zeros(magnitude);
    s.msb = bitsize(magnitude) - 1;
    return s;
}

uint64_t sum_max(const std::vector<SummandPlan>& side) {
    uint64_t s = 0;
    for (const auto& item : side) s += item.max_value;
    return s;
}

}  // namespace

NeuronPlan plan_neuron(const std::vector<int>& coefficients, int64_t bias, int input_width,
                       const std::vector<double>& g_row, std::optional<double> g_threshold, int k) {
    NeuronPlan plan;

    for (size_t i = 0; i < coefficients.size(); ++i) {
        const int c = coefficients[i];
        if (c == 0) continue;  // no summand, no hardware
        const bool trunc = g_threshold.has_value() && g_row[i] <= *g_threshold;
        SummandPlan s = plan_product(c, input_width, trunc, k);
        s.input_index = i;
        if (c < 0) plan.has_negative_branch = true;
        if (s.max_value == 0) continue;  // truncated to a constant zero
        (c > 0 ? plan.positive : plan.negative).push_back(s);
    }

    if (bias > 0) {
        plan.positive.push_back(plan_bias(static_cast<uint64_t>(bias)));
    } else if (bias < 0) {
        plan.negative.push_back(plan_bias(static_cast<uint64_t>(-bias)));
        plan.has_negative_branch = true;
    }

    plan.sp_max = sum_max(plan.positive);
    plan.sn_max = sum_max(plan.negative);
    plan.w_p = std::max(1, bitsize(plan.sp_max));
    plan.w_n = std::max(1, bitsize(plan.sn_max));
    plan.w_f = plan.has_negative_branch ? std::max(plan.w_p, plan.w_n) + 1 : plan.w_p;
    plan.w_out = plan.w_p;  // result after ReLU (or the max positive output value)
    return plan;
}

std::vector<std::vector<NeuronPlan>> plan_network(const QuantizedMLP& m,
                                                  const SignificanceMap* sig,
                                                  const AxConfig* ax) {
    if (ax && !sig) throw InputError("a truncation config needs a significance map");
    if (ax && ax->g_per_layer.size() != m.num_layers())
        throw InputError("ax config layer count does not match the model");

    const auto widths = layer_input_widths(m);
    const std::vector<double> no_g;

    std::vector<std::vector<NeuronPlan>> plans(m.num_layers());
    for (size_t l = 0; l < m.num_layers(); ++l) {
        std::optional<double> g_l = ax ? ax->g_per_layer[l] : std::nullopt;
        for (size_t j = 0; j < m.coefficients[l].size(); ++j) {
            const std::vector<double>& g_row = sig ? sig->g[l][j] : no_g;
            plans[l].push_back(plan_neuron(m.coefficients[l][j], m.biases[l][j], widths[l],
                                           g_row, g_l, ax ? ax->k : 3));
        }
    }
    return plans;
}

TreeItem reduce_tree(std::vector<TreeItem> items,
                     const std::function<size_t(const TreeItem&, const TreeItem&, const TreeItem&)>& on_add) {
    if (items.empty()) return TreeItem{0, 0, 0, 0, 0};
    while (items.size() > 1) {
        std::vector<TreeItem> next;
        next.reserve((items.size() + 1) / 2);
        for (size_t i = 0; i + 1 < items.size(); i += 2) {
            const TreeItem& a = items[i];
            const TreeItem& b = items[i + 1];
            TreeItem out;
            out.max_value = a.max_value + b.max_value;
            out.lsb = std::min(a.lsb, b.lsb);
            out.msb = std::max(out.lsb, bitsize(out.max_value) - 1);
            out.depth = std::max(a.depth, b.depth) + 1;
            out.ref = on_add(a, b, out);
            next.push_back(out);
        }
        if (items.size() % 2) next.push_back(items.back());
        items = std::move(next);
    }
    return items[0];
}

}  // namespace axmlp
