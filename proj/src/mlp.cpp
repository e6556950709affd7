#include "axmlp/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace axmlp {

void check_topology(const Topology& t) {
    if (t.size() < 2) throw InputError("topology needs at least an input and an output size");
    for (int s : t)
        if (s < 1) throw InputError("topology sizes must be >= 1");
    for (size_t l = 1; l + 1 < t.size(); ++l)
        if (t[l] > 5)
            std::cerr << "warning: hidden layer of " << t[l]
                      << " units exceeds the intended bespoke scale (<= 5)\n";
}

int64_t mac_count(const Topology& t) {
    check_topology(t);
    int64_t n = 0;
    for (size_t l = 0; l + 1 < t.size(); ++l) n += int64_t{t[l]} * t[l + 1];
    return n;
}

std::vector<double> forward_float(const FloatMLP& m, const std::vector<double>& x) {
    std::vector<double> act = x;
    for (size_t l = 0; l < m.num_layers(); ++l) {
        const bool hidden = l + 1 < m.num_layers();
        std::vector<double> next(m.weights[l].size());
        for (size_t j = 0; j < next.size(); ++j) {
            double s = m.biases[l][j];
            const auto& row = m.weights[l][j];
            for (size_t i = 0; i < row.size(); ++i) s += row[i] * act[i];
            next[j] = hidden ? std::max(0.0, s) : s;
        }
        act = std::move(next);
    }
    return act;
}

int classify_float(const FloatMLP& m, const std::vector<double>& x) {
    auto out = forward_float(m, x);
    return static_cast<int>(std::max_element(out.begin(), out.end()) - out.begin());
}

namespace {

std::vector<std::vector<double>> dequantize_features(const QuantizedDataset& ds) {
    const double s = 1.0 / ((1u << ds.input_bits) - 1u);
    std::vector<std::vector<double>> out;
    out.reserve(ds.size());
    for (const auto& row : ds.features) {
        std::vector<double> r(row.size());
        for (size_t i = 0; i < row.size(); ++i) r[i] = row[i] * s;
        out.push_back(std::move(r));
    }
    return out;
}

FloatMLP init_model(const Topology& t, Rng& rng) {
    FloatMLP m;
    m.topology = t;
    for (size_t l = 0; l + 1 < t.size(); ++l) {
        const int fan_in = t[l], fan_out = t[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::vector<std::vector<double>> w(fan_out, std::vector<double>(fan_in));
        for (auto& row : w)
            for (double& v : row) v = rng_uniform(rng, -limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

double train_accuracy_float(const FloatMLP& m, const std::vector<std::vector<double>>& xs,
                            const std::vector<int>& ys) {
    size_t correct = 0;
    for (size_t i = 0; i < xs.size(); ++i)
        if (classify_float(m, xs[i]) == ys[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(xs.size());
}

FloatMLP train_float_impl(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
                          int num_classes, const Topology& topology, const TrainConfig& cfg) {
    check_topology(topology);
    if (xs.empty()) throw InputError("cannot train on an empty dataset");
    if (static_cast<size_t>(topology.front()) != xs[0].size())
        throw InputError("topology input size does not match the feature count");
    if (topology.back() != num_classes)
        throw InputError("topology output size does not match the class count");

    Rng rng(cfg.seed);
    FloatMLP m = init_model(topology, rng);
    FloatMLP best = m;
    double best_acc = train_accuracy_float(m, xs, ys);

    const size_t n = xs.size();
    const size_t nl = m.num_layers();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng_shuffle(rng, order);
        for (size_t start = 0; start < n; start += cfg.batch) {
            const size_t stop = std::min(n, start + cfg.batch);

            auto gw = m.weights;  // zeroed gradient accumulators, same shapes
            auto gb = m.biases;
            for (auto& lw : gw)
                for (auto& row : lw) std::fill(row.begin(), row.end(), 0.0);
            for (auto& lb : gb) std::fill(lb.begin(), lb.end(), 0.0);

            for (size_t s = start; s < stop; ++s) {
                // Forward, keeping activations per layer.
                std::vector<std::vector<double>> acts{xs[order[s]]};
                for (size_t l = 0; l < nl; ++l) {
                    const bool hidden = l + 1 < nl;
                    std::vector<double> next(m.weights[l].size());
                    for (size_t j = 0; j < next.size(); ++j) {
                        double sum = m.biases[l][j];
                        for (size_t i = 0; i < acts[l].size(); ++i)
                            sum += m.weights[l][j][i] * acts[l][i];
                        next[j] = hidden ? std::max(0.0, sum) : sum;
                    }
                    acts.push_back(std::move(next));
                }

                // Softmax cross-entropy gradient at the output.
                auto& out = acts.back();
                double mx = *std::max_element(out.begin(), out.end());
                double z = 0.0;
                for (double v : out) z += std::exp(v - mx);
                if (!std::isfinite(z) || z <= 0.0)
                    throw std::runtime_error("non-finite loss during training");
                std::vector<double> delta(out.size());
                for (size_t j = 0; j < out.size(); ++j)
                    delta[j] = std::exp(out[j] - mx) / z - (static_cast<int>(j) == ys[order[s]] ? 1.0 : 0.0);

                for (size_t l = nl; l-- > 0;) {
                    std::vector<double> prev_delta(acts[l].size(), 0.0);
                    for (size_t j = 0; j < delta.size(); ++j) {
                        gb[l][j] += delta[j];
                        for (size_t i = 0; i < acts[l].size(); ++i) {
                            gw[l][j][i] += delta[j] * acts[l][i];
                            prev_delta[i] += m.weights[l][j][i] * delta[j];
                        }
                    }
                    if (l > 0)
                        for (size_t i = 0; i < prev_delta.size(); ++i)
                            if (acts[l][i] <= 0.0) prev_delta[i] = 0.0;  // ReLU gate
                    delta = std::move(prev_delta);
                }
            }

            const double scale = cfg.lr / static_cast<double>(stop - start);
            for (size_t l = 0; l < nl; ++l) {
                for (size_t j = 0; j < m.weights[l].size(); ++j) {
                    m.biases[l][j] -= scale * gb[l][j];
                    for (size_t i = 0; i < m.weights[l][j].size(); ++i)
                        m.weights[l][j][i] -= scale * gw[l][j][i];
                }
            }
        }

        double acc = train_accuracy_float(m, xs, ys);
        if (acc > best_acc) {
            best_acc = acc;
            best = m;
        }
    }
    return best;
}

}  // namespace

FloatMLP train_float(const QuantizedDataset& train, const Topology& topology, const TrainConfig& cfg) {
    return train_float_impl(dequantize_features(train), train.labels, train.num_classes, topology, cfg);
}

FloatMLP train_float(const Dataset& normalized_train, const Topology& topology, const TrainConfig& cfg) {
    return train_float_impl(normalized_train.features, normalized_train.labels,
                            normalized_train.num_classes, topology, cfg);
}

double accuracy_float(const FloatMLP& m, const QuantizedDataset& ds) {
    if (ds.size() == 0) throw InputError("accuracy over an empty dataset");
    auto xs = dequantize_features(ds);
    size_t correct = 0;
    for (size_t i = 0; i < xs.size(); ++i)
        if (classify_float(m, xs[i]) == ds.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(xs.size());
}

QuantizedMLP quantize(const FloatMLP& m, int input_bits) {
    if (input_bits < 1) throw InputError("input_bits must be >= 1");

    QuantizedMLP q;
    q.topology = m.topology;
    q.input_bits = input_bits;

    double scale = 1.0 / ((1u << input_bits) - 1u);  // real value of one input unit
    for (size_t l = 0; l < m.num_layers(); ++l) {
        double max_w = 0.0;
        for (const auto& row : m.weights[l])
            for (double w : row) {
                if (!std::isfinite(w)) throw std::runtime_error("non-finite weight in layer " + std::to_string(l));
                max_w = std::max(max_w, std::abs(w));
            }

        int f;
        if (max_w == 0.0) {
            f = 7;  // all-zero layer: any scale works
        } else {
            f = static_cast<int>(std::floor(std::log2(127.5 / max_w)));
            while (round_half_up(max_w * std::ldexp(1.0, f + 1)) <= 127.0) ++f;
            while (round_half_up(max_w * std::ldexp(1.0, f)) > 127.0) --f;
        }
        q.frac_bits.push_back(f);

        std::vector<std::vector<int>> coeffs;
        coeffs.reserve(m.weights[l].size());
        for (const auto& row : m.weights[l]) {
            std::vector<int> c(row.size());
            for (size_t i = 0; i < row.size(); ++i) {
                int64_t v = iround_half_up(row[i] * std::ldexp(1.0, f));
                c[i] = static_cast<int>(std::clamp<int64_t>(v, -127, 127));
            }
            coeffs.push_back(std::move(c));
        }
        q.coefficients.push_back(std::move(coeffs));

        // Bias at the product scale: one unit = input_scale * 2^-f.
        const double unit = scale * std::ldexp(1.0, -f);
        std::vector<int64_t> b(m.biases[l].size());
        constexpr int64_t kBiasClamp = int64_t{1} << 30;  // wide safety bound
        for (size_t j = 0; j < b.size(); ++j)
            b[j] = std::clamp(iround_half_up(m.biases[l][j] / unit), -kBiasClamp, kBiasClamp);
        q.biases.push_back(std::move(b));

        scale = unit;  // next layer's inputs carry this scale
    }
    return q;
}

double input_scale(const QuantizedMLP& m, size_t layer) {
    double s = 1.0 / ((1u << m.input_bits) - 1u);
    for (size_t l = 0; l < layer; ++l) s *= std::ldexp(1.0, -m.frac_bits[l]);
    return s;
}

FloatMLP dequantize(const QuantizedMLP& m) {
    FloatMLP f;
    f.topology = m.topology;
    for (size_t l = 0; l < m.num_layers(); ++l) {
        const double w_scale = std::ldexp(1.0, -m.frac_bits[l]);
        const double b_scale = input_scale(m, l) * w_scale;
        std::vector<std::vector<double>> w;
        for (const auto& row : m.coefficients[l]) {
            std::vector<double> r(row.size());
            for (size_t i = 0; i < row.size(); ++i) r[i] = row[i] * w_scale;
            w.push_back(std::move(r));
        }
        f.weights.push_back(std::move(w));
        std::vector<double> b(m.biases[l].size());
        for (size_t j = 0; j < b.size(); ++j) b[j] = static_cast<double>(m.biases[l][j]) * b_scale;
        f.biases.push_back(std::move(b));
    }
    return f;
}

std::vector<int64_t> infer_exact_sums(const QuantizedMLP& m, const std::vector<uint32_t>& x,
                                      InferenceTrace* trace) {
    if (x.size() != static_cast<size_t>(m.topology.front()))
        throw InputError("input width does not match the model topology");

    std::vector<int64_t> act(x.begin(), x.end());
    if (trace) trace->layer_inputs.assign(1, act);

    for (size_t l = 0; l < m.num_layers(); ++l) {
        const bool hidden = l + 1 < m.num_layers();
        std::vector<int64_t> next(m.coefficients[l].size());
        for (size_t j = 0; j < next.size(); ++j) {
            int64_t s = m.biases[l][j];
            const auto& row = m.coefficients[l][j];
            for (size_t i = 0; i < row.size(); ++i) s += int64_t{row[i]} * act[i];
            next[j] = hidden ? std::max<int64_t>(0, s) : s;
        }
        act = std::move(next);
        if (trace && l + 1 < m.num_layers()) trace->layer_inputs.push_back(act);
    }
    return act;
}

int infer_exact(const QuantizedMLP& m, const std::vector<uint32_t>& x, InferenceTrace* trace) {
    auto sums = infer_exact_sums(m, x, trace);
    return static_cast<int>(std::max_element(sums.begin(), sums.end()) - sums.begin());
}

double accuracy(const QuantizedMLP& m, const QuantizedDataset& ds) {
    if (ds.size() == 0) throw InputError("accuracy over an empty dataset");
    size_t correct = 0;
    for (size_t i = 0; i < ds.size(); ++i)
        if (infer_exact(m, ds.features[i]) == ds.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

std::vector<int> layer_input_widths(const QuantizedMLP& m) {
    std::vector<int> widths{m.input_bits};
    for (size_t l = 0; l + 1 < m.num_layers(); ++l) {
        const int64_t a_max = (int64_t{1} << widths[l]) - 1;
        int64_t layer_max = 0;
        for (size_t j = 0; j < m.coefficients[l].size(); ++j) {
            int64_t s = std::max<int64_t>(0, m.biases[l][j]);
            for (int c : m.coefficients[l][j])
                if (c > 0) s += int64_t{c} * a_max;
            layer_max = std::max(layer_max, s);
        }
        widths.push_back(std::max(1, bitsize(static_cast<uint64_t>(layer_max))));
    }
    return widths;
}

}  // namespace axmlp
