#include "axmlp/dse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace axmlp {

namespace {

std::vector<std::vector<double>> layer_candidates(const QuantizedMLP& m, const SignificanceMap& sig,
                                                  int cap) {
    std::vector<std::vector<double>> out;
    for (size_t l = 0; l < m.num_layers(); ++l) {
        std::vector<double> values;
        for (size_t j = 0; j < m.coefficients[l].size(); ++j)
            for (size_t i = 0; i < m.coefficients[l][j].size(); ++i)
                if (m.coefficients[l][j][i] != 0 && !std::isnan(sig.g[l][j][i]))
                    values.push_back(sig.g[l][j][i]);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());

        if (cap > 0 && static_cast<int>(values.size()) > cap) {
            // Evenly spaced quantile representatives, endpoints included.
            std::vector<double> picked;
            for (int q = 0; q < cap; ++q) {
                size_t idx = (cap == 1) ? 0
                                        : (static_cast<size_t>(q) * (values.size() - 1)) / (cap - 1);
                picked.push_back(values[idx]);
            }
            picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
            values = std::move(picked);
        }
        out.push_back(std::move(values));
    }
    return out;
}

}  // namespace

std::vector<size_t> candidate_counts(const QuantizedMLP& m, const SignificanceMap& sig, int cap) {
    std::vector<size_t> counts;
    for (const auto& values : layer_candidates(m, sig, cap))
        counts.push_back(values.size() + 1);  // + the no-truncation choice
    return counts;
}

std::vector<AxConfig> enumerate_configs(const QuantizedMLP& m, const SignificanceMap& sig, int cap) {
    const auto candidates = layer_candidates(m, sig, cap);
    const size_t layers = candidates.size();

    std::vector<AxConfig> configs;
    for (int k = 1; k <= 3; ++k) {
        std::vector<size_t> pick(layers, 0);  // 0 = none, v >= 1 = candidates[l][v-1]
        while (true) {
            AxConfig cfg;
            cfg.k = k;
            cfg.g_per_layer.resize(layers);
            for (size_t l = 0; l < layers; ++l)
                if (pick[l] > 0) cfg.g_per_layer[l] = candidates[l][pick[l] - 1];
            configs.push_back(std::move(cfg));

            size_t l = 0;
            while (l < layers && ++pick[l] > candidates[l].size()) {
                pick[l] = 0;
                ++l;
            }
            if (l == layers) break;
        }
    }
    return configs;
}

DesignPoint evaluate(const QuantizedMLP& m, const SignificanceMap& sig, const AxConfig& cfg,
                     const QuantizedDataset& train, const QuantizedDataset& test,
                     const GateCosts& costs) {
    DesignPoint p;
    p.config = cfg;
    p.train_accuracy = accuracy_approx(m, sig, cfg, train);
    p.test_accuracy = accuracy_approx(m, sig, cfg, test);
    p.area = network_area(m, &sig, &cfg, costs);
    for (size_t l = 0; l < m.num_layers(); ++l) {
        if (!cfg.g_per_layer[l].has_value()) continue;
        for (size_t j = 0; j < m.coefficients[l].size(); ++j)
            for (size_t i = 0; i < m.coefficients[l][j].size(); ++i)
                if (m.coefficients[l][j][i] != 0 && cfg.truncates(l, sig.g[l][j][i]))
                    ++p.truncated_products;
    }
    return p;
}

namespace {

int default_jobs() {
    if (const char* env = std::getenv("AXMLP_JOBS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

std::vector<DesignPoint> evaluate_all(const QuantizedMLP& m, const SignificanceMap& sig,
                                      const std::vector<AxConfig>& configs,
                                      const QuantizedDataset& train, const QuantizedDataset& test,
                                      int jobs, const GateCosts& costs) {
    if (jobs <= 0) jobs = default_jobs();
    jobs = std::min<int>(jobs, static_cast<int>(configs.size()));

    std::vector<DesignPoint> results(configs.size());
    if (jobs <= 1) {
        for (size_t i = 0; i < configs.size(); ++i)
            results[i] = evaluate(m, sig, configs[i], train, test, costs);
        return results;
    }

    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (int t = 0; t < jobs; ++t) {
        workers.emplace_back([&]() {
            try {
                for (size_t i = next.fetch_add(1); i < configs.size(); i = next.fetch_add(1))
                    results[i] = evaluate(m, sig, configs[i], train, test, costs);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
    return results;
}

ParetoFront pareto(const std::vector<DesignPoint>& points) {
    if (points.empty()) throw InputError("cannot take the Pareto front of no points");

    std::vector<size_t> order(points.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (points[a].area.total_area != points[b].area.total_area)
            return points[a].area.total_area < points[b].area.total_area;
        if (points[a].train_accuracy != points[b].train_accuracy)
            return points[a].train_accuracy > points[b].train_accuracy;
        return a < b;  // duplicates keep the earliest
    });

    ParetoFront front;
    double best_acc = -1.0;
    for (size_t idx : order) {
        if (points[idx].train_accuracy > best_acc) {
            front.push_back(points[idx]);
            best_acc = points[idx].train_accuracy;
        }
    }
    return front;
}

Selection select(const ParetoFront& front, double budget, double baseline_accuracy) {
    if (front.empty()) throw InputError("cannot select from an empty front");
    const double floor_acc = baseline_accuracy - budget;

    const DesignPoint* chosen = nullptr;
    for (const auto& p : front) {
        if (p.train_accuracy < floor_acc) continue;
        if (!chosen || p.area.total_area < chosen->area.total_area ||
            (p.area.total_area == chosen->area.total_area &&
             p.truncated_products < chosen->truncated_products))
            chosen = &p;
    }
    if (chosen) return {*chosen, true};

    const DesignPoint* best = &front.front();
    for (const auto& p : front)
        if (p.train_accuracy > best->train_accuracy) best = &p;
    return {*best, false};
}

std::string design_points_csv(const std::vector<DesignPoint>& points) {
    std::string out = "k,g_per_layer,train_acc,test_acc,mult_area,total_area,power,depth\n";
    char buf[160];
    for (const auto& p : points) {
        out += std::to_string(p.config.k);
        out += ',';
        for (size_t l = 0; l < p.config.g_per_layer.size(); ++l) {
            if (l) out += ';';
            if (p.config.g_per_layer[l].has_value()) {
                std::snprintf(buf, sizeof buf, "%.9g", *p.config.g_per_layer[l]);
                out += buf;
            } else {
                out += "none";
            }
        }
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.9g,%.9g,%.9g,%d\n", p.train_accuracy,
                      p.test_accuracy, p.area.multiplier_area, p.area.total_area,
                      p.area.power_proxy, p.area.logic_depth);
        out += buf;
    }
    return out;
}

}  // namespace axmlp
