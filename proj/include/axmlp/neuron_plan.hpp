#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "axmlp/axneuron.hpp"
#include "axmlp/csd.hpp"

namespace axmlp {

/// One operand entering a neuron's adder tree, with its design-time bit span
/// and worst-case value. Truncated products span only their kept MSBs (plus
/// whatever trailing zeros the coefficient already guarantees).
struct SummandPlan {
    int coefficient = 0;     // signed; 0 marks the bias summand
    size_t input_index = 0;
    bool is_bias = false;
    bool truncated = false;
    int product_width = 0;   // nominal n_i = size(|w|) + size(a); 0 for bias
    int lsb = 0;
    int msb = 0;             // value-based: bitsize(max_value) - 1
    uint64_t max_value = 0;
    int mult_adders = 0;     // CSD nonzero digits - 1 (0 for bias / powers of two)
};

/// Design-time structure of one approximate neuron (Fig-style split trees).
struct NeuronPlan {
    std::vector<SummandPlan> positive;   // includes a positive bias
    std::vector<SummandPlan> negative;   // absolute values; includes |negative bias|
    bool has_negative_branch = false;    // any negative coefficient or negative bias
    uint64_t sp_max = 0;                 // max possible positive subtotal
    uint64_t sn_max = 0;
    int w_p = 1;                         // widths, each >= 1
    int w_n = 1;
    int w_f = 1;                         // final: max(w_p, w_n) + 1 when split, else w_p
    int w_out = 1;                       // post-ReLU / forwarded value width
};

/// Plans one neuron. `g_row` gives per-input significance (NaN where the
/// coefficient is zero); a disengaged threshold disables truncation.
/// Truncated summands whose worst-case value collapses to zero are dropped.
NeuronPlan plan_neuron(const std::vector<int>& coefficients, int64_t bias, int input_width,
                       const std::vector<double>& g_row, std::optional<double> g_threshold, int k);

/// Plans every neuron of the model. Passing no significance/config plans the
/// exact (untruncated) circuit. Layer input widths always come from the
/// untruncated model so product sizes are configuration-independent.
std::vector<std::vector<NeuronPlan>> plan_network(const QuantizedMLP& m,
                                                  const SignificanceMap* sig,
                                                  const AxConfig* ax);

/// Item tracked through a balanced adder-tree reduction.
struct TreeItem {
    int lsb = 0;
    int msb = 0;
    uint64_t max_value = 0;
    int depth = 0;   // adder levels accumulated below this item
    size_t ref = 0;  // caller-owned handle (e.g. netlist node id)
};

/// Pairwise adjacent reduction to a single item; on_add(a, b, out) fires per
/// adder with out's span/depth prefilled and must return the new ref.
/// This is the one tree shape shared by the cost model and the RTL emitter.
TreeItem reduce_tree(std::vector<TreeItem> items,
                     const std::function<size_t(const TreeItem&, const TreeItem&, const TreeItem&)>& on_add);

/// Full-adder count of one tree addition per the span model.
inline int adder_fa_units(const TreeItem& a, const TreeItem& b) {
    return std::max(a.msb, b.msb) + 1 - std::max(a.lsb, b.lsb);
}

inline TreeItem summand_tree_item(const SummandPlan& s) {
    return TreeItem{s.lsb, s.msb, s.max_value, s.mult_adders, 0};
}

}  // namespace axmlp
