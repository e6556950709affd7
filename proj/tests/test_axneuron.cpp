#include <cmath>

#include "axmlp/axneuron.hpp"
#include "axmlp/model_io.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace axmlp;

namespace {

// Random neuron description plus matching inputs.
struct RandomNeuron {
    std::vector<AxProduct> products;
    int64_t bias;
};

RandomNeuron random_neuron(Rng& rng, int max_inputs = 16, int input_width = 4) {
    RandomNeuron rn;
    const int n = 1 + rng_below(rng, max_inputs);
    for (int i = 0; i < n; ++i) {
        AxProduct p;
        p.coefficient = static_cast<int>(rng_below(rng, 255)) - 127;
        p.input = rng_below(rng, 1u << input_width);
        p.input_width = input_width;
        p.g = rng_unit(rng);
        rn.products.push_back(p);
    }
    rn.bias = static_cast<int64_t>(rng_below(rng, 401)) - 200;
    return rn;
}

int64_t exact_sum(const RandomNeuron& rn) {
    int64_t s = rn.bias;
    for (const auto& p : rn.products) s += int64_t{p.coefficient} * p.input;
    return s;
}

bool has_negative(const RandomNeuron& rn) {
    if (rn.bias < 0) return true;
    for (const auto& p : rn.products)
        if (p.coefficient < 0) return true;
    return false;
}

}  // namespace

TEST_CASE("capture_means averages traced layer inputs") {
    QuantizedMLP m;
    m.topology = {2, 2, 2};
    m.coefficients = {{{1, 0}, {0, 1}}, {{1, 1}, {1, 0}}};
    m.biases = {{0, 0}, {0, 0}};
    m.frac_bits = {6, 6};
    m.input_bits = 4;

    QuantizedDataset ds;
    ds.input_bits = 4;
    ds.num_classes = 2;
    ds.features = {{5, 0}, {5, 10}};
    ds.labels = {0, 1};

    auto means = capture_means(m, ds);
    CHECK(means[0][0] == doctest::Approx(5.0));   // constant input column
    CHECK(means[0][1] == doctest::Approx(5.0));   // {0, 10}
    CHECK(means[1][0] == doctest::Approx(5.0));   // identity hidden neuron 0
    CHECK(means[1][1] == doctest::Approx(5.0));

    // Cross-check the hidden means against an explicit trace average.
    double sum0 = 0;
    for (const auto& x : ds.features) {
        InferenceTrace t;
        infer_exact(m, x, &t);
        sum0 += static_cast<double>(t.layer_inputs[1][0]);
    }
    CHECK(means[1][0] == doctest::Approx(sum0 / ds.features.size()));

    CHECK_THROWS_AS(capture_means(m, QuantizedDataset{}), InputError);
}

TEST_CASE("significance follows the product-ratio definition") {
    CHECK(significance({3}, {2.0})[0] == doctest::Approx(1.0));

    auto g = significance({4, 1}, {2.0, 4.0});
    CHECK(g[0] == doctest::Approx(2.0 / 3.0));
    CHECK(g[1] == doctest::Approx(1.0 / 3.0));

    // Sign cancellation drives the denominator to zero: absolute fallback.
    auto g2 = significance({1, -1}, {1.0, 1.0});
    CHECK(g2[0] == doctest::Approx(0.5));
    CHECK(g2[1] == doctest::Approx(0.5));

    // All-zero means: every significance is zero.
    auto g3 = significance({1, -1}, {0.0, 0.0});
    CHECK(g3[0] == 0.0);
    CHECK(g3[1] == 0.0);

    // Zero coefficients carry no product.
    auto g4 = significance({0, 2}, {1.0, 1.0});
    CHECK(std::isnan(g4[0]));
    CHECK(g4[1] == doctest::Approx(1.0));
}

TEST_CASE("truncate_product keeps the top field and nothing else") {
    CHECK(truncate_product(90, 7, 3) == 80);  // 1011010 -> 101 << 4
    CHECK(truncate_product(90, 7, 9) == 90);  // k >= n
    CHECK(truncate_product(0, 7, 1) == 0);
    CHECK_THROWS_AS(truncate_product(128, 7, 3), InputError);

    Rng rng(3);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 2 + rng_below(rng, 12);
        const int k = 1 + rng_below(rng, 3);
        const uint64_t p = rng_below(rng, 1u << n);
        const uint64_t t = truncate_product(p, n, k);
        CHECK(t == testutil::kept_msbs_oracle(p, n, k));
        CHECK(truncate_product(t, n, k) == t);  // idempotent
        CHECK(t <= p);
        CHECK(p - t < (uint64_t{1} << std::max(0, n - k)));
    }
}

TEST_CASE("truncate_product is monotone") {
    Rng rng(4);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 2 + rng_below(rng, 10);
        const int k = 1 + rng_below(rng, 3);
        uint64_t p1 = rng_below(rng, 1u << n);
        uint64_t p2 = rng_below(rng, 1u << n);
        if (p1 > p2) std::swap(p1, p2);
        CHECK(truncate_product(p1, n, k) <= truncate_product(p2, n, k));
    }
}

TEST_CASE("ax_neuron_sum reproduces the worked truncation example") {
    std::vector<AxProduct> products{{2, 8, 4, 0.5}, {-3, 8, 4, 0.5}};
    const int64_t s = ax_neuron_sum(products, 0, 1e9, 1);
    CHECK(s == -1);
    CHECK(std::max<int64_t>(0, s) == 0);  // ReLU agrees with exact ReLU(-8)
}

TEST_CASE("ax_neuron_sum: exact without negatives, exact minus one with them") {
    Rng rng(5);
    int mixed = 0;
    for (int trial = 0; trial < 5000; ++trial) {
        RandomNeuron rn = random_neuron(rng);
        const int64_t got = ax_neuron_sum(rn.products, rn.bias, std::nullopt, 3);
        if (has_negative(rn)) {
            CHECK(got == exact_sum(rn) - 1);
            ++mixed;
        } else {
            CHECK(got == exact_sum(rn));
        }
    }
    CHECK(mixed > 100);
}

TEST_CASE("ax_neuron_sum matches the brute-force oracle under truncation") {
    Rng rng(6);
    for (int trial = 0; trial < 5000; ++trial) {
        RandomNeuron rn = random_neuron(rng);
        const int k = 1 + rng_below(rng, 3);
        std::optional<double> g;
        if (rng_below(rng, 4) != 0) g = rng_unit(rng);
        CHECK(ax_neuron_sum(rn.products, rn.bias, g, k) ==
              testutil::axsum_oracle(rn.products, rn.bias, g, k));
    }
}

TEST_CASE("truncation error per neuron stays within the derived bound") {
    Rng rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        RandomNeuron rn = random_neuron(rng);
        const int k = 1 + rng_below(rng, 3);
        const double g = rng_unit(rng);
        const int64_t approx = ax_neuron_sum(rn.products, rn.bias, g, k);
        const int64_t exact = exact_sum(rn);

        int64_t bound = has_negative(rn) ? 1 : 0;
        for (const auto& p : rn.products) {
            if (p.coefficient == 0 || p.g > g) continue;
            const uint64_t mag = static_cast<uint64_t>(std::abs(int64_t{p.coefficient}));
            const int n = bitsize(mag) + p.input_width;
            if (k < n) bound += int64_t{1} << (n - k);
        }
        CHECK(std::abs(exact - approx) <= bound);
    }
}

TEST_CASE("raising the threshold only grows the truncated set") {
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        RandomNeuron rn = random_neuron(rng);
        double g1 = rng_unit(rng), g2 = rng_unit(rng);
        if (g1 > g2) std::swap(g1, g2);
        for (const auto& p : rn.products)
            if (p.g <= g1) CHECK(p.g <= g2);
    }
}

TEST_CASE("infer_approx equals infer_exact when nothing is approximated") {
    Rng rng(9);
    QuantizedMLP m = testutil::random_model(rng, {4, 3, 3});
    // Force every coefficient and bias nonnegative: no negation branch.
    for (auto& layer : m.coefficients)
        for (auto& row : layer)
            for (int& c : row) c = std::abs(c);
    for (auto& layer : m.biases)
        for (auto& b : layer) b = std::abs(b);

    QuantizedDataset ds;
    ds.input_bits = 4;
    ds.num_classes = 3;
    for (int i = 0; i < 100; ++i) {
        ds.features.push_back(testutil::random_input(rng, 4));
        ds.labels.push_back(i % 3);
    }
    SignificanceMap sig = build_significance(m, ds);
    AxConfig none;
    none.k = 3;
    none.g_per_layer = {std::nullopt, std::nullopt};
    for (const auto& x : ds.features) {
        CHECK(infer_approx(m, sig, none, x) == infer_exact(m, x));
        CHECK(infer_approx_sums(m, sig, none, x) == infer_exact_sums(m, x));
    }
}

TEST_CASE("infer_approx with mixed signs is exact minus one per split neuron") {
    Rng rng(10);
    QuantizedMLP m;
    m.topology = {3, 2};
    m.coefficients = {{{5, -9, 3}, {-2, 7, -11}}};
    m.biases = {{4, -6}};
    m.frac_bits = {6};
    m.input_bits = 4;

    SignificanceMap sig;
    sig.layer_means = {{1.0, 1.0, 1.0}};
    sig.g = {{significance(m.coefficients[0][0], sig.layer_means[0]),
              significance(m.coefficients[0][1], sig.layer_means[0])}};

    AxConfig none;
    none.k = 3;
    none.g_per_layer = {std::nullopt};
    for (int t = 0; t < 200; ++t) {
        auto x = testutil::random_input(rng, 3);
        auto approx = infer_approx_sums(m, sig, none, x);
        auto exact = infer_exact_sums(m, x);
        CHECK(approx[0] == exact[0] - 1);
        CHECK(approx[1] == exact[1] - 1);
    }
}

TEST_CASE("more kept bits cannot hurt accuracy in the bulk of random models") {
    Rng rng(11);
    int k3_wins = 0, trials = 120;
    for (int t = 0; t < trials; ++t) {
        QuantizedMLP m = testutil::random_model(rng, {5, 3, 3});

        // Labels come from the exact model itself, so the un-approximated
        // accuracy is 1 and truncation damage is what gets measured.
        QuantizedDataset ds;
        ds.input_bits = 4;
        ds.num_classes = 3;
        for (int i = 0; i < 60; ++i) {
            ds.features.push_back(testutil::random_input(rng, 5));
            ds.labels.push_back(infer_exact(m, ds.features.back()));
        }

        SignificanceMap sig = build_significance(m, ds);
        AxConfig k1, k3;
        k1.k = 1;
        k3.k = 3;
        k1.g_per_layer = k3.g_per_layer = {2.0, 2.0};
        if (accuracy_approx(m, sig, k3, ds) >= accuracy_approx(m, sig, k1, ds)) ++k3_wins;
    }
    CHECK(k3_wins >= trials * 9 / 10);
}

TEST_CASE("significance map JSON round-trips including NaN holes") {
    Rng rng(12);
    QuantizedMLP m = testutil::random_model(rng, {3, 2, 2});
    m.coefficients[0][0][1] = 0;
    QuantizedDataset ds;
    ds.input_bits = 4;
    ds.num_classes = 2;
    for (int i = 0; i < 10; ++i) {
        ds.features.push_back(testutil::random_input(rng, 3));
        ds.labels.push_back(i % 2);
    }
    SignificanceMap sig = build_significance(m, ds);
    SignificanceMap back = significance_from_json(significance_to_json(sig));
    CHECK(back.layer_means == sig.layer_means);
    for (size_t l = 0; l < sig.g.size(); ++l)
        for (size_t j = 0; j < sig.g[l].size(); ++j)
            for (size_t i = 0; i < sig.g[l][j].size(); ++i) {
                if (std::isnan(sig.g[l][j][i]))
                    CHECK(std::isnan(back.g[l][j][i]));
                else
                    CHECK(back.g[l][j][i] == sig.g[l][j][i]);
            }
}

TEST_CASE("infer_approx rejects mismatched configs") {
    Rng rng(13);
    QuantizedMLP m = testutil::random_model(rng, {3, 2, 2});
    SignificanceMap sig = testutil::random_significance(rng, m);
    AxConfig bad;
    bad.k = 2;
    bad.g_per_layer = {std::nullopt};  // one layer too few
    CHECK_THROWS_AS(infer_approx(m, sig, bad, {1, 2, 3}), InputError);
}
