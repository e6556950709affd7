#include "axmlp/retrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace axmlp {

ValueSet build_vc(const Clustering& clustering, int max_cluster) {
    if (max_cluster < 0 || max_cluster >= clustering.num_clusters)
        throw InputError("cluster index out of range");
    ValueSet vc;
    for (int mag = 0; mag <= 127; ++mag) {
        if (clustering.cluster_of[mag] <= max_cluster) {
            vc.push_back(mag);
            if (mag != 0) vc.push_back(-mag);
        }
    }
    std::sort(vc.begin(), vc.end());
    return vc;
}

int project_value(int quantized, const ValueSet& vc) {
    if (vc.empty()) throw InputError("cannot project onto an empty value set");
    int best = vc.front();
    long best_dist = std::abs(long{quantized} - best);
    for (int v : vc) {
        const long dist = std::abs(long{quantized} - v);
        if (dist < best_dist ||
            (dist == best_dist && (std::abs(v) < std::abs(best) ||
                                   (std::abs(v) == std::abs(best) && v < best)))) {
            best = v;
            best_dist = dist;
        }
    }
    return best;
}

std::vector<std::vector<int>> project(const std::vector<std::vector<double>>& weights, int frac_bits,
                                      const ValueSet& vc) {
    std::vector<std::vector<int>> out;
    out.reserve(weights.size());
    const double scale = std::ldexp(1.0, frac_bits);
    for (const auto& row : weights) {
        std::vector<int> r(row.size());
        for (size_t i = 0; i < row.size(); ++i) {
            const int q = static_cast<int>(std::clamp<int64_t>(iround_half_up(row[i] * scale), -127, 127));
            r[i] = project_value(q, vc);
        }
        out.push_back(std::move(r));
    }
    return out;
}

double score(double acc_prime, double acc_baseline, double ar_prime, double ar_baseline,
             double alpha) {
    if (acc_baseline <= 0.0) throw InputError("baseline accuracy must be positive");
    const double area_term =
        (ar_baseline > 0.0) ? (ar_baseline - ar_prime) / ar_baseline : 0.0;
    return alpha * (acc_prime / acc_baseline) + (1.0 - alpha) * area_term;
}

namespace {

std::vector<std::vector<double>> dequantized_features(const QuantizedDataset& ds) {
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

// Snapshot of the shadow model projected onto VC, with biases re-quantized
// at the baseline product scales.
QuantizedMLP snapshot(const FloatMLP& shadow, const QuantizedMLP& baseline, const ValueSet& vc) {
    QuantizedMLP q;
    q.topology = baseline.topology;
    q.input_bits = baseline.input_bits;
    q.frac_bits = baseline.frac_bits;
    for (size_t l = 0; l < shadow.num_layers(); ++l) {
        q.coefficients.push_back(project(shadow.weights[l], baseline.frac_bits[l], vc));
        const double unit = input_scale(baseline, l) * std::ldexp(1.0, -baseline.frac_bits[l]);
        std::vector<int64_t> b(shadow.biases[l].size());
        constexpr int64_t kBiasClamp = int64_t{1} << 30;
        for (size_t j = 0; j < b.size(); ++j)
            b[j] = std::clamp(iround_half_up(shadow.biases[l][j] / unit), -kBiasClamp, kBiasClamp);
        q.biases.push_back(std::move(b));
    }
    return q;
}

// One epoch of mini-batch SGD where the forward pass sees the projected
// coefficients and gradients flow straight through to the shadow weights.
void train_epoch_projected(FloatMLP& shadow, const QuantizedMLP& baseline, const ValueSet& vc,
                           const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
                           double lr, int batch, std::vector<size_t>& order, Rng& rng) {
    rng_shuffle(rng, order);
    const size_t n = xs.size();
    const size_t nl = shadow.num_layers();

    for (size_t start = 0; start < n; start += batch) {
        const size_t stop = std::min(n, start + batch);

        // Effective weights for this batch: dequantized projection.
        std::vector<std::vector<std::vector<double>>> eff(nl);
        for (size_t l = 0; l < nl; ++l) {
            const auto proj = project(shadow.weights[l], baseline.frac_bits[l], vc);
            const double w_scale = std::ldexp(1.0, -baseline.frac_bits[l]);
            eff[l].resize(proj.size());
            for (size_t j = 0; j < proj.size(); ++j) {
                eff[l][j].resize(proj[j].size());
                for (size_t i = 0; i < proj[j].size(); ++i) eff[l][j][i] = proj[j][i] * w_scale;
            }
        }

        auto gw = shadow.weights;
        auto gb = shadow.biases;
        for (auto& lw : gw)
            for (auto& row : lw) std::fill(row.begin(), row.end(), 0.0);
        for (auto& lb : gb) std::fill(lb.begin(), lb.end(), 0.0);

        for (size_t s = start; s < stop; ++s) {
            std::vector<std::vector<double>> acts{xs[order[s]]};
            for (size_t l = 0; l < nl; ++l) {
                const bool hidden = l + 1 < nl;
                std::vector<double> next(eff[l].size());
                for (size_t j = 0; j < next.size(); ++j) {
                    double sum = shadow.biases[l][j];
                    for (size_t i = 0; i < acts[l].size(); ++i) sum += eff[l][j][i] * acts[l][i];
                    next[j] = hidden ? std::max(0.0, sum) : sum;
                }
                acts.push_back(std::move(next));
            }

            auto& out = acts.back();
            const double mx = *std::max_element(out.begin(), out.end());
            double z = 0.0;
            for (double v : out) z += std::exp(v - mx);
            if (!std::isfinite(z) || z <= 0.0)
                throw std::runtime_error("non-finite loss during retraining");
            std::vector<double> delta(out.size());
            for (size_t j = 0; j < out.size(); ++j)
                delta[j] = std::exp(out[j] - mx) / z - (static_cast<int>(j) == ys[order[s]] ? 1.0 : 0.0);

            for (size_t l = nl; l-- > 0;) {
                std::vector<double> prev_delta(acts[l].size(), 0.0);
                for (size_t j = 0; j < delta.size(); ++j) {
                    gb[l][j] += delta[j];
                    for (size_t i = 0; i < acts[l].size(); ++i) {
                        gw[l][j][i] += delta[j] * acts[l][i];
                        prev_delta[i] += eff[l][j][i] * delta[j];
                    }
                }
                if (l > 0)
                    for (size_t i = 0; i < prev_delta.size(); ++i)
                        if (acts[l][i] <= 0.0) prev_delta[i] = 0.0;
                delta = std::move(prev_delta);
            }
        }

        const double scale = lr / static_cast<double>(stop - start);
        for (size_t l = 0; l < nl; ++l)
            for (size_t j = 0; j < shadow.weights[l].size(); ++j) {
                shadow.biases[l][j] -= scale * gb[l][j];
                for (size_t i = 0; i < shadow.weights[l][j].size(); ++i)
                    shadow.weights[l][j][i] -= scale * gw[l][j][i];
            }
    }
}

}  // namespace

RetrainResult retrain(const QuantizedMLP& baseline, const QuantizedDataset& train,
                      const Clustering& clustering, const MultiplierAreaLut& lut,
                      const RetrainConfig& cfg) {
    if (cfg.threshold < 0.0 || cfg.threshold > 1.0) throw InputError("threshold must be in [0, 1]");
    if (cfg.alpha <= 0.0 || cfg.alpha > 1.0) throw InputError("alpha must be in (0, 1]");
    if (cfg.epochs_per_stage < 1) throw InputError("epochs per stage must be >= 1");
    if (cfg.lr_growth <= 1.0) throw InputError("learning-rate growth factor must be > 1");

    const double acc0 = accuracy(baseline, train);
    const double ar0 = multiplier_area_sum(baseline, lut);
    const double floor_acc = acc0 - cfg.threshold;

    const auto xs = dequantized_features(train);
    const auto& ys = train.labels;
    std::vector<size_t> order(xs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(cfg.seed);

    RetrainResult result;
    result.baseline_train_accuracy = acc0;

    QuantizedMLP fallback_model;
    double fallback_acc = -1.0;

    for (int stage = 0; stage < clustering.num_clusters; ++stage) {
        const ValueSet vc = build_vc(clustering, stage);
        FloatMLP shadow = dequantize(baseline);
        double lr = cfg.lr;

        QuantizedMLP candidate = snapshot(shadow, baseline, vc);
        auto prev_coeffs = candidate.coefficients;

        QuantizedMLP stage_best = candidate;
        double stage_best_acc = accuracy(candidate, train);
        double stage_best_score = score(stage_best_acc, acc0, multiplier_area_sum(candidate, lut),
                                        ar0, cfg.alpha);
        result.history.push_back({stage, 0, lr, stage_best_score, stage_best_acc,
                                  multiplier_area_sum(candidate, lut), false});

        for (int epoch = 1; epoch <= cfg.epochs_per_stage; ++epoch) {
            train_epoch_projected(shadow, baseline, vc, xs, ys, lr, cfg.batch, order, rng);
            ++result.epochs;

            candidate = snapshot(shadow, baseline, vc);
            const double acc = accuracy(candidate, train);
            const double ar = multiplier_area_sum(candidate, lut);
            const double s = score(acc, acc0, ar, ar0, cfg.alpha);
            const bool changed = candidate.coefficients != prev_coeffs;

            if (s > stage_best_score) {
                stage_best_score = s;
                stage_best = candidate;
                stage_best_acc = acc;
            }
            result.history.push_back({stage, epoch, lr, s, acc, ar, changed});

            // Stagnating below threshold: grow the learning rate to allow
            // jumps between codebook values; reset as soon as anything moves.
            if (!changed && acc < floor_acc)
                lr *= cfg.lr_growth;
            else
                lr = cfg.lr;
            prev_coeffs = candidate.coefficients;
        }

        result.highest_cluster = stage;
        if (stage_best_acc >= floor_acc) {
            result.model = std::move(stage_best);
            result.train_accuracy = stage_best_acc;
            result.satisfied = true;
            return result;
        }
        if (stage == clustering.num_clusters - 1) {
            fallback_model = std::move(stage_best);
            fallback_acc = stage_best_acc;
        }
    }

    // No stage met the threshold: hand back the last stage's best checkpoint.
    result.model = std::move(fallback_model);
    result.train_accuracy = fallback_acc;
    result.satisfied = false;
    return result;
}

}  // namespace axmlp
