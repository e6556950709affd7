#include "axmlp/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "axmlp/csd.hpp"
#include "axmlp/neuron_plan.hpp"

namespace axmlp {

double mult_area(uint32_t magnitude, int input_width, const GateCosts& costs) {
    if (magnitude > 127) throw InputError("coefficient magnitude exceeds 127");
    if (input_width < 1) throw InputError("input width must be >= 1");
    const int d = csd(magnitude).nonzero_digits();
    if (d <= 1) return 0.0;  // zero or a power of two: wiring only
    return (d - 1) * (input_width + bitsize(magnitude)) * costs.full_adder;
}

double MultiplierAreaLut::area(uint32_t magnitude, int input_width) const {
    auto it = columns_.find(input_width);
    if (it == columns_.end()) return mult_area(magnitude, input_width, costs_);
    return it->second[magnitude];
}

const MultiplierAreaLut::Column& MultiplierAreaLut::column(int input_width) const {
    auto it = columns_.find(input_width);
    if (it == columns_.end())
        throw InputError("multiplier LUT has no column for input width " + std::to_string(input_width));
    return it->second;
}

std::vector<int> MultiplierAreaLut::widths() const {
    std::vector<int> w;
    for (const auto& [width, col] : columns_) w.push_back(width);
    return w;
}

void MultiplierAreaLut::add_width(int input_width) {
    Column col{};
    for (uint32_t mag = 0; mag <= 127; ++mag) col[mag] = mult_area(mag, input_width, costs_);
    columns_[input_width] = col;
}

void MultiplierAreaLut::set_column(int input_width, const Column& column) {
    columns_[input_width] = column;
}

MultiplierAreaLut build_lut(const std::set<int>& input_widths, const GateCosts& costs) {
    MultiplierAreaLut lut(costs);
    for (int w : input_widths) lut.add_width(w);
    return lut;
}

std::vector<int> Clustering::members(int cluster) const {
    std::vector<int> out;
    for (int mag = 0; mag <= 127; ++mag)
        if (cluster_of[mag] == cluster) out.push_back(mag);
    return out;
}

Clustering cluster_coefficients(const MultiplierAreaLut& lut, int k, int input_width) {
    const auto& areas = lut.column(input_width);

    std::vector<double> sorted(areas.begin(), areas.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    if (static_cast<int>(distinct.size()) < k) {
        std::cerr << "warning: only " << distinct.size() << " distinct multiplier areas; "
                  << "clustering collapses to " << distinct.size() << " groups\n";
        k = static_cast<int>(distinct.size());
    }

    // Deterministic init: the k quantiles of the sorted area values, nudged
    // up to distinct values so no centroid starts duplicated.
    std::vector<double> centroids(k);
    for (int c = 0; c < k; ++c) {
        size_t idx = (k == 1) ? 0 : (c * (sorted.size() - 1)) / (k - 1);
        centroids[c] = sorted[idx];
    }
    for (int c = 1; c < k; ++c) {
        if (centroids[c] <= centroids[c - 1]) {
            auto it = std::upper_bound(distinct.begin(), distinct.end(), centroids[c - 1]);
            centroids[c] = (it != distinct.end()) ? *it : centroids[c - 1];
        }
    }

    std::array<int, 128> assign{};
    for (int iter = 0; iter < 1000; ++iter) {
        bool changed = (iter == 0);
        for (int mag = 0; mag <= 127; ++mag) {
            int best = 0;
            double best_d = std::abs(areas[mag] - centroids[0]);
            for (int c = 1; c < k; ++c) {
                double d = std::abs(areas[mag] - centroids[c]);
                if (d < best_d) {  // ties keep the lower cluster
                    best_d = d;
                    best = c;
                }
            }
            if (assign[mag] != best) {
                assign[mag] = best;
                changed = true;
            }
        }
        if (!changed) break;
        for (int c = 0; c < k; ++c) {
            double sum = 0.0;
            int count = 0;
            for (int mag = 0; mag <= 127; ++mag)
                if (assign[mag] == c) {
                    sum += areas[mag];
                    ++count;
                }
            if (count > 0) centroids[c] = sum / count;
        }
    }

    // Relabel by ascending mean area.
    std::vector<std::pair<double, int>> order;
    for (int c = 0; c < k; ++c) {
        double sum = 0.0;
        int count = 0;
        for (int mag = 0; mag <= 127; ++mag)
            if (assign[mag] == c) {
                sum += areas[mag];
                ++count;
            }
        if (count > 0) order.emplace_back(sum / count, c);
    }
    std::sort(order.begin(), order.end());

    Clustering result;
    result.num_clusters = static_cast<int>(order.size());
    std::vector<int> relabel(k, 0);
    for (size_t new_c = 0; new_c < order.size(); ++new_c) {
        relabel[order[new_c].second] = static_cast<int>(new_c);
        result.mean_area.push_back(order[new_c].first);
    }
    for (int mag = 0; mag <= 127; ++mag) result.cluster_of[mag] = relabel[assign[mag]];
    return result;
}

namespace {

struct NeuronCost {
    double adder_area = 0.0;
    int tree_adders = 0;
    int out_depth = 0;  // adder levels from the layer inputs to this neuron's output
};

// input_depths[i]: adder/comparator count already behind layer input i.
NeuronCost cost_neuron(const NeuronPlan& plan, const std::vector<int>& input_depths,
                       const GateCosts& costs) {
    NeuronCost nc;

    auto run_tree = [&](const std::vector<SummandPlan>& side) -> TreeItem {
        std::vector<TreeItem> items;
        items.reserve(side.size());
        for (const auto& s : side) {
            TreeItem it = summand_tree_item(s);
            it.depth += s.is_bias ? 0 : input_depths[s.input_index];
            items.push_back(it);
        }
        return reduce_tree(items, [&](const TreeItem& a, const TreeItem& b, const TreeItem&) {
            nc.adder_area += adder_fa_units(a, b) * costs.full_adder;
            ++nc.tree_adders;
            return size_t{0};
        });
    };

    TreeItem pos = run_tree(plan.positive);
    TreeItem neg = run_tree(plan.negative);

    if (plan.has_negative_branch) {
        const bool has_merge = !plan.positive.empty();
        if (has_merge) {
            // The inverted subtotal occupies the full final bus.
            TreeItem inv{0, plan.w_f - 1, (uint64_t{1} << plan.w_f) - 1, neg.depth, 0};
            nc.adder_area += adder_fa_units(pos, inv) * costs.full_adder;
            ++nc.tree_adders;
            nc.out_depth = std::max(pos.depth, neg.depth) + 1;
        } else {
            nc.out_depth = neg.depth;  // S' is just the inverted bus
        }
    } else {
        nc.out_depth = pos.depth;
    }
    return nc;
}

int neuron_mult_adders(const std::vector<int>& coefficients) {
    int total = 0;
    for (int c : coefficients)
        if (c != 0)
            total += std::max(0, csd(static_cast<uint64_t>(std::abs(int64_t{c}))).nonzero_digits() - 1);
    return total;
}

}  // namespace

AreaReport network_area(const QuantizedMLP& m, const SignificanceMap* sig, const AxConfig* ax,
                        const GateCosts& costs) {
    const auto plans = plan_network(m, sig, ax);
    const auto widths = layer_input_widths(m);

    AreaReport r;
    std::vector<int> input_depths(m.topology.front(), 0);
    for (size_t l = 0; l < plans.size(); ++l) {
        const bool hidden = l + 1 < plans.size();
        std::vector<int> out_depths(plans[l].size(), 0);
        for (size_t j = 0; j < plans[l].size(); ++j) {
            const NeuronPlan& plan = plans[l][j];
            for (int c : m.coefficients[l][j])
                if (c != 0)
                    r.multiplier_area += mult_area(static_cast<uint32_t>(std::abs(c)), widths[l], costs);

            NeuronCost nc = cost_neuron(plan, input_depths, costs);
            r.adder_area += nc.adder_area;
            if (plan.has_negative_branch) r.negation_area += costs.inverter_per_bit * plan.w_n;
            if (hidden) r.relu_area += costs.relu_per_bit * plan.w_out;
            out_depths[j] = nc.out_depth;
        }
        input_depths = std::move(out_depths);
    }

    // Argmax comparator tournament over the output sums.
    const auto& out_plans = plans.back();
    int final_depth = input_depths.empty() ? 0 : *std::max_element(input_depths.begin(), input_depths.end());
    if (out_plans.size() > 1) {
        int cmp_width = 1;
        for (const auto& p : out_plans) cmp_width = std::max(cmp_width, p.w_f);
        r.argmax_area += static_cast<double>(out_plans.size() - 1) * cmp_width * costs.comparator_per_bit;

        std::vector<TreeItem> items;
        items.reserve(out_plans.size());
        for (size_t j = 0; j < out_plans.size(); ++j)
            items.push_back(TreeItem{0, 0, 0, input_depths[j], 0});
        TreeItem root = reduce_tree(items, [](const TreeItem&, const TreeItem&, const TreeItem&) {
            return size_t{0};
        });
        final_depth = root.depth;
    }

    r.total_area = r.multiplier_area + r.adder_area + r.negation_area + r.relu_area + r.argmax_area;
    r.power_proxy = costs.kappa * r.total_area;
    r.logic_depth = final_depth;
    return r;
}

double power_proxy(const AreaReport& report, double kappa) {
    return kappa * report.total_area;
}

double multiplier_area_sum(const QuantizedMLP& m, const MultiplierAreaLut& lut) {
    const auto widths = layer_input_widths(m);
    double total = 0.0;
    for (size_t l = 0; l < m.num_layers(); ++l)
        for (const auto& row : m.coefficients[l])
            for (int c : row)
                if (c != 0) total += lut.area(static_cast<uint32_t>(std::abs(c)), widths[l]);
    return total;
}

int planned_adder_count(const QuantizedMLP& m, const SignificanceMap* sig, const AxConfig* ax) {
    const auto plans = plan_network(m, sig, ax);
    const GateCosts costs;
    int total = 0;
    for (size_t l = 0; l < plans.size(); ++l) {
        const std::vector<int> zero_depths(m.topology[l], 0);
        for (size_t j = 0; j < plans[l].size(); ++j) {
            total += neuron_mult_adders(m.coefficients[l][j]);
            total += cost_neuron(plans[l][j], zero_depths, costs).tree_adders;
        }
    }
    return total;
}

}  // namespace axmlp
