#include <cmath>
#include <set>

#include "axmlp/dse.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace axmlp;

namespace {

// Significance map with prescribed distinct G values per layer, spread over
// the nonzero coefficients round-robin.
SignificanceMap sig_with_values(const QuantizedMLP& m,
                                const std::vector<std::vector<double>>& per_layer_values) {
    SignificanceMap sig;
    for (size_t l = 0; l < m.num_layers(); ++l) {
        sig.layer_means.emplace_back(m.topology[l], 1.0);
        std::vector<std::vector<double>> layer;
        size_t counter = 0;
        for (const auto& row : m.coefficients[l]) {
            std::vector<double> g(row.size(), std::numeric_limits<double>::quiet_NaN());
            for (size_t i = 0; i < row.size(); ++i)
                if (row[i] != 0)
                    g[i] = per_layer_values[l][counter++ % per_layer_values[l].size()];
            layer.push_back(std::move(g));
        }
        sig.g.push_back(std::move(layer));
    }
    return sig;
}

QuantizedDataset random_dataset(Rng& rng, int n, int features, int classes) {
    QuantizedDataset ds;
    ds.input_bits = 4;
    ds.num_classes = classes;
    for (int i = 0; i < n; ++i) {
        ds.features.push_back(testutil::random_input(rng, features));
        ds.labels.push_back(static_cast<int>(rng_below(rng, classes)));
    }
    return ds;
}

// Brute-force domination check, kept deliberately separate from pareto().
bool dominated(const DesignPoint& p, const std::vector<DesignPoint>& all) {
    for (const auto& q : all) {
        if (q.train_accuracy >= p.train_accuracy && q.area.total_area <= p.area.total_area &&
            (q.train_accuracy > p.train_accuracy || q.area.total_area < p.area.total_area))
            return true;
    }
    return false;
}

DesignPoint point(double acc, double area, int64_t truncated = 0) {
    DesignPoint p;
    p.train_accuracy = acc;
    p.area.total_area = area;
    p.truncated_products = truncated;
    return p;
}

}  // namespace

TEST_CASE("enumerate_configs counts k times the per-layer candidate grids") {
    Rng rng(1);
    // Single-layer model (no hidden): 2 distinct G values -> 3 * (2+1).
    QuantizedMLP m1 = testutil::random_model(rng, {4, 2});
    SignificanceMap s1 = sig_with_values(m1, {{0.1, 0.4}});
    CHECK(enumerate_configs(m1, s1, 0).size() == 9);

    // Two layers with 3 and 2 distinct values -> 3 * 4 * 3 = 36.
    QuantizedMLP m2 = testutil::random_model(rng, {4, 3, 2});
    SignificanceMap s2 = sig_with_values(m2, {{0.1, 0.2, 0.3}, {0.5, 0.6}});
    CHECK(enumerate_configs(m2, s2, 0).size() == 36);
}

TEST_CASE("the candidate cap keeps quantile representatives") {
    Rng rng(2);
    QuantizedMLP m = testutil::random_model(rng, {10, 4});
    std::vector<double> twenty;
    for (int i = 0; i < 20; ++i) twenty.push_back(0.01 * (i + 1));
    SignificanceMap sig = sig_with_values(m, {twenty});

    auto counts = candidate_counts(m, sig, 8);
    CHECK(counts[0] == 9);  // none + 8 quantiles
    CHECK(enumerate_configs(m, sig, 8).size() == 3 * 9);

    // Uncapped keeps everything.
    CHECK(candidate_counts(m, sig, 0)[0] == 21);
}

TEST_CASE("every enumeration includes the all-none anchor") {
    Rng rng(3);
    QuantizedMLP m = testutil::random_model(rng, {5, 3, 3});
    SignificanceMap sig = testutil::random_significance(rng, m);
    auto configs = enumerate_configs(m, sig, 4);
    int anchors = 0;
    for (const auto& c : configs) {
        bool none = true;
        for (const auto& g : c.g_per_layer) none = none && !g.has_value();
        anchors += none;
    }
    CHECK(anchors == 3);  // one per k
}

TEST_CASE("evaluate is deterministic and respects cost monotonicity") {
    Rng rng(4);
    QuantizedMLP m = testutil::random_model(rng, {5, 3, 3});
    SignificanceMap sig = testutil::random_significance(rng, m);
    QuantizedDataset train = random_dataset(rng, 50, 5, 3);
    QuantizedDataset test = random_dataset(rng, 30, 5, 3);

    AxConfig small, big;
    small.k = big.k = 2;
    small.g_per_layer = {0.3, std::nullopt};
    big.g_per_layer = {0.8, 0.5};  // truncates a superset

    DesignPoint a1 = evaluate(m, sig, small, train, test);
    DesignPoint a2 = evaluate(m, sig, small, train, test);
    CHECK(a1.train_accuracy == a2.train_accuracy);
    CHECK(a1.area.total_area == a2.area.total_area);

    DesignPoint b = evaluate(m, sig, big, train, test);
    CHECK(b.truncated_products >= a1.truncated_products);
    CHECK(b.area.total_area <= a1.area.total_area);
}

TEST_CASE("all-none evaluation matches the exact model on a nonnegative net") {
    Rng rng(5);
    QuantizedMLP m = testutil::random_model(rng, {4, 3, 2});
    for (auto& layer : m.coefficients)
        for (auto& row : layer)
            for (int& c : row) c = std::abs(c);
    for (auto& layer : m.biases)
        for (auto& b : layer) b = std::abs(b);

    QuantizedDataset train = random_dataset(rng, 40, 4, 2);
    QuantizedDataset test = random_dataset(rng, 20, 4, 2);
    SignificanceMap sig = build_significance(m, train);

    AxConfig none;
    none.k = 2;
    none.g_per_layer = {std::nullopt, std::nullopt};
    DesignPoint p = evaluate(m, sig, none, train, test);
    CHECK(p.train_accuracy == accuracy(m, train));
}

TEST_CASE("pareto keeps exactly the non-dominated points") {
    std::vector<DesignPoint> pts{point(0.9, 10), point(0.8, 5), point(0.85, 12)};
    ParetoFront front = pareto(pts);
    REQUIRE(front.size() == 2);
    CHECK(front[0].area.total_area == 5);
    CHECK(front[1].area.total_area == 10);

    CHECK(pareto({point(0.5, 3)}).size() == 1);

    // Exact duplicates collapse to one survivor.
    ParetoFront dup = pareto({point(0.7, 4), point(0.7, 4), point(0.7, 4)});
    CHECK(dup.size() == 1);

    CHECK_THROWS_AS(pareto(std::vector<DesignPoint>{}), InputError);
}

TEST_CASE("pareto agrees with the brute-force domination oracle") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<DesignPoint> pts;
        const int n = 2 + rng_below(rng, 40);
        for (int i = 0; i < n; ++i)
            pts.push_back(point(0.05 * rng_below(rng, 21), rng_below(rng, 15)));

        ParetoFront front = pareto(pts);
        for (const auto& p : front) CHECK_FALSE(dominated(p, pts));

        size_t non_dominated = 0;
        std::set<std::pair<double, double>> seen;
        for (const auto& p : pts) {
            if (dominated(p, pts)) continue;
            if (seen.insert({p.train_accuracy, p.area.total_area}).second) ++non_dominated;
        }
        CHECK(front.size() == non_dominated);
        for (size_t i = 1; i < front.size(); ++i)
            CHECK(front[i].area.total_area >= front[i - 1].area.total_area);
    }
}

TEST_CASE("select picks the cheapest qualifying member and flags failures") {
    ParetoFront front = pareto({point(0.98, 8), point(0.96, 4)});

    Selection s1 = select(front, 0.01, 0.98);
    CHECK(s1.satisfied);
    CHECK(s1.point.area.total_area == 8);

    Selection s2 = select(front, 0.05, 0.98);
    CHECK(s2.satisfied);
    CHECK(s2.point.area.total_area == 4);

    Selection s3 = select(front, 0.0, 0.99);
    CHECK_FALSE(s3.satisfied);
    CHECK(s3.point.train_accuracy == 0.98);

    // Equal-area ties go to fewer truncated products.
    ParetoFront tie{point(0.98, 4, 7), point(0.97, 4, 2)};
    Selection s4 = select(tie, 0.05, 0.98);
    CHECK(s4.point.truncated_products == 2);
}

TEST_CASE("parallel evaluation yields the identical point set") {
    Rng rng(7);
    QuantizedMLP m = testutil::random_model(rng, {5, 3, 3});
    QuantizedDataset train = random_dataset(rng, 60, 5, 3);
    QuantizedDataset test = random_dataset(rng, 30, 5, 3);
    SignificanceMap sig = build_significance(m, train);

    auto configs = enumerate_configs(m, sig, 5);
    auto counts = candidate_counts(m, sig, 5);
    size_t expected = 3;
    for (size_t c : counts) expected *= c;
    CHECK(configs.size() == expected);

    auto serial = evaluate_all(m, sig, configs, train, test, 1);
    auto parallel = evaluate_all(m, sig, configs, train, test, 4);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].train_accuracy == parallel[i].train_accuracy);
        CHECK(serial[i].test_accuracy == parallel[i].test_accuracy);
        CHECK(serial[i].area.total_area == parallel[i].area.total_area);
        CHECK(serial[i].config.k == parallel[i].config.k);
    }
}
