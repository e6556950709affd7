#include <algorithm>

#include "axmlp/cost_model.hpp"
#include "axmlp/netlist.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace axmlp;

namespace {

QuantizedMLP tiny_model(const Topology& t, std::vector<std::vector<std::vector<int>>> coeffs,
                        std::vector<std::vector<int64_t>> biases) {
    QuantizedMLP m;
    m.topology = t;
    m.coefficients = std::move(coeffs);
    m.biases = std::move(biases);
    m.frac_bits.assign(t.size() - 1, 6);
    m.input_bits = 4;
    return m;
}

}  // namespace

TEST_CASE("a power-of-two weight lowers to pure wiring") {
    QuantizedMLP m = tiny_model({1, 1}, {{{4}}}, {{0}});
    NetlistIR ir = lower(m);
    CHECK(count_adder_nodes(ir) == 0);
    CHECK(interpret(ir, {3}).output_sums[0] == 12);
}

TEST_CASE("all-positive neurons have no NOT node; mixed ones have one") {
    QuantizedMLP pos = tiny_model({2, 1}, {{{3, 5}}}, {{7}});
    NetlistIR ir_pos = lower(pos);
    for (const Node& n : ir_pos.nodes) CHECK(n.kind != NodeKind::Not);

    QuantizedMLP mixed = tiny_model({2, 1}, {{{3, -5}}}, {{7}});
    NetlistIR ir_mixed = lower(mixed);
    int nots = 0;
    for (const Node& n : ir_mixed.nodes) nots += (n.kind == NodeKind::Not);
    CHECK(nots == 1);
}

TEST_CASE("logic depth counts adder and comparator levels") {
    // Two power-of-two products into one adder.
    QuantizedMLP two = tiny_model({2, 1}, {{{2, 4}}}, {{0}});
    CHECK(logic_depth(lower(two)) == 1);

    // Eight power-of-two products: 3 tree levels, plus the S_p/S_n merge.
    QuantizedMLP eight =
        tiny_model({8, 1}, {{{1, 2, 4, 8, 16, 32, 64, 2}}}, {{0}});
    CHECK(logic_depth(lower(eight)) == 3);

    QuantizedMLP eight_neg =
        tiny_model({8, 1}, {{{1, 2, 4, 8, 16, 32, 64, -2}}}, {{0}});
    CHECK(logic_depth(lower(eight_neg)) == 4);
}

TEST_CASE("interpret matches exact inference on all-positive models") {
    Rng rng(1);
    QuantizedMLP m = testutil::random_model(rng, {4, 3, 3});
    for (auto& layer : m.coefficients)
        for (auto& row : layer)
            for (int& c : row) c = std::abs(c);
    for (auto& layer : m.biases)
        for (auto& b : layer) b = std::abs(b);

    NetlistIR ir = lower(m);
    for (int t = 0; t < 300; ++t) {
        auto x = testutil::random_input(rng, 4);
        InterpretResult r = interpret(ir, x);
        CHECK(r.output_sums == infer_exact_sums(m, x));
        CHECK(r.class_index == infer_exact(m, x));
    }
}

TEST_CASE("interpret reproduces the minus-one negation identity") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        QuantizedMLP m = testutil::random_model(rng, {4, 3});
        NetlistIR ir = lower(m);
        for (int t = 0; t < 50; ++t) {
            auto x = testutil::random_input(rng, 4);
            auto sums = interpret(ir, x).output_sums;
            auto exact = infer_exact_sums(m, x);
            for (size_t j = 0; j < sums.size(); ++j) {
                bool has_neg = m.biases[0][j] < 0;
                for (int c : m.coefficients[0][j]) has_neg = has_neg || c < 0;
                CHECK(sums[j] == exact[j] - (has_neg ? 1 : 0));
            }
        }
    }
}

TEST_CASE("interpret classifies identically to infer_approx under any config") {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        QuantizedMLP m = testutil::random_model(rng, {5, 3, 3});
        SignificanceMap sig = testutil::random_significance(rng, m);
        AxConfig ax;
        ax.k = 1 + rng_below(rng, 3);
        ax.g_per_layer.resize(2);
        for (auto& g : ax.g_per_layer)
            if (rng_below(rng, 3) != 0) g = rng_unit(rng);

        NetlistIR ir = lower(m, &sig, &ax);
        for (int t = 0; t < 60; ++t) {
            auto x = testutil::random_input(rng, 5);
            InterpretResult r = interpret(ir, x);
            CHECK(r.class_index == infer_approx(m, sig, ax, x));
            CHECK(r.output_sums == infer_approx_sums(m, sig, ax, x));
        }
    }
}

TEST_CASE("netlist adder count equals the cost model's plan") {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        QuantizedMLP m = testutil::random_model(rng, {5, 3, 3});
        SignificanceMap sig = testutil::random_significance(rng, m);
        AxConfig ax;
        ax.k = 1 + rng_below(rng, 3);
        ax.g_per_layer = {rng_unit(rng), rng_unit(rng)};

        CHECK(count_adder_nodes(lower(m)) == planned_adder_count(m));
        CHECK(count_adder_nodes(lower(m, &sig, &ax)) == planned_adder_count(m, &sig, &ax));
    }
}

TEST_CASE("netlist logic depth equals the analytic depth report") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        QuantizedMLP m = testutil::random_model(rng, {5, 3, 3});
        SignificanceMap sig = testutil::random_significance(rng, m);
        AxConfig ax;
        ax.k = 1 + rng_below(rng, 3);
        ax.g_per_layer = {rng_unit(rng), std::nullopt};

        CHECK(logic_depth(lower(m)) == network_area(m).logic_depth);
        CHECK(logic_depth(lower(m, &sig, &ax)) == network_area(m, &sig, &ax).logic_depth);
    }
}

TEST_CASE("equivalence also holds for deeper topologies") {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        QuantizedMLP m = testutil::random_model(rng, {4, 3, 3, 2});
        SignificanceMap sig = testutil::random_significance(rng, m);
        AxConfig ax;
        ax.k = 1 + rng_below(rng, 3);
        ax.g_per_layer = {rng_unit(rng), std::nullopt, rng_unit(rng)};

        NetlistIR ir = lower(m, &sig, &ax);
        CHECK(count_adder_nodes(ir) == planned_adder_count(m, &sig, &ax));
        CHECK(logic_depth(ir) == network_area(m, &sig, &ax).logic_depth);
        for (int t = 0; t < 40; ++t) {
            auto x = testutil::random_input(rng, 4);
            CHECK(interpret(ir, x).output_sums == infer_approx_sums(m, sig, ax, x));
        }
    }
}

TEST_CASE("edge shapes survive the equivalence chain") {
    Rng rng(10);

    // Purely negative neuron: the positive tree is empty, S' = ~S_n.
    QuantizedMLP neg = tiny_model({2, 2}, {{{-3, -5}, {-1, -127}}}, {{0, -9}});
    NetlistIR ir_neg = lower(neg);
    for (int t = 0; t < 100; ++t) {
        auto x = testutil::random_input(rng, 2);
        auto sums = interpret(ir_neg, x).output_sums;
        auto exact = infer_exact_sums(neg, x);
        CHECK(sums[0] == exact[0] - 1);
        CHECK(sums[1] == exact[1] - 1);
    }

    // Single output: the class index is constantly zero.
    QuantizedMLP single = tiny_model({2, 1}, {{{5, -2}}}, {{-4}});
    NetlistIR ir_single = lower(single);
    CHECK(interpret(ir_single, {3, 3}).class_index == 0);

    // Large biases widen the trees without breaking widths. The negative
    // bias of neuron 1 alone forces its negation branch.
    QuantizedMLP wide = tiny_model({2, 2}, {{{7, -7}, {127, 127}}},
                                   {{int64_t{1} << 20, -(int64_t{1} << 20)}});
    NetlistIR ir_wide = lower(wide);
    for (int t = 0; t < 100; ++t) {
        auto x = testutil::random_input(rng, 2);
        auto sums = interpret(ir_wide, x).output_sums;
        auto exact = infer_exact_sums(wide, x);
        CHECK(sums[0] == exact[0] - 1);
        CHECK(sums[1] == exact[1] - 1);
    }

    // 1-bit inputs.
    QuantizedMLP narrow = tiny_model({3, 2, 2}, {{{1, -1, 1}, {2, 2, -2}}, {{3, -3}, {1, 1}}},
                                     {{1, -1}, {0, 2}});
    narrow.input_bits = 1;
    NetlistIR ir_narrow = lower(narrow);
    SignificanceMap sig = testutil::random_significance(rng, narrow);
    AxConfig none;
    none.k = 3;
    none.g_per_layer = {std::nullopt, std::nullopt};
    for (int t = 0; t < 50; ++t) {
        auto x = testutil::random_input(rng, 3, 1);
        CHECK(interpret(ir_narrow, x).output_sums == infer_approx_sums(narrow, sig, none, x));
        CHECK(interpret(ir_narrow, x).class_index == infer_approx(narrow, sig, none, x));
    }
}

TEST_CASE("emitted Verilog is deterministic, multiplication-free, fully ported") {
    Rng rng(6);
    QuantizedMLP m = testutil::random_model(rng, {4, 3, 2});
    SignificanceMap sig = testutil::random_significance(rng, m);
    AxConfig ax;
    ax.k = 2;
    ax.g_per_layer = {0.5, std::nullopt};
    NetlistIR ir = lower(m, &sig, &ax);

    const std::string v1 = emit_verilog(ir, "mlp_top");
    const std::string v2 = emit_verilog(lower(m, &sig, &ax), "mlp_top");
    CHECK(v1 == v2);
    CHECK(v1.find('*') == std::string::npos);

    size_t ports = 0, pos = 0;
    while ((pos = v1.find("input  wire", pos)) != std::string::npos) {
        ++ports;
        pos += 1;
    }
    CHECK(ports == 4);
    CHECK(v1.find("output wire") != std::string::npos);
}

TEST_CASE("testbench carries one assertion per vector and is deterministic") {
    Rng rng(7);
    QuantizedMLP m = testutil::random_model(rng, {3, 2, 2});
    NetlistIR ir = lower(m);

    std::vector<std::pair<std::vector<uint32_t>, int>> vectors;
    for (int t = 0; t < 10; ++t) {
        auto x = testutil::random_input(rng, 3);
        vectors.emplace_back(x, interpret(ir, x).class_index);
    }
    const std::string tb1 = emit_testbench(ir, "mlp_top", vectors);
    const std::string tb2 = emit_testbench(ir, "mlp_top", vectors);
    CHECK(tb1 == tb2);

    size_t asserts = 0, pos = 0;
    while ((pos = tb1.find("if (class_idx === ", pos)) != std::string::npos) {
        ++asserts;
        pos += 1;
    }
    CHECK(asserts == 10);
    CHECK_THROWS_AS(emit_testbench(ir, "mlp_top", {}), InputError);
}

TEST_CASE("the validator rejects broken graphs") {
    Rng rng(8);
    QuantizedMLP m = testutil::random_model(rng, {3, 2, 2});
    NetlistIR ir = lower(m);
    CHECK_NOTHROW(validate(ir));

    NetlistIR cyclic = ir;
    // Point some adder's operand forward: breaks topological order.
    for (size_t i = 0; i < cyclic.nodes.size(); ++i) {
        if (cyclic.nodes[i].kind == NodeKind::Add) {
            cyclic.nodes[i].a = static_cast<uint32_t>(cyclic.nodes.size() - 1);
            break;
        }
    }
    CHECK_THROWS(validate(cyclic));
    CHECK_THROWS(logic_depth(cyclic));

    NetlistIR bad_width = ir;
    bad_width.nodes[bad_width.input_ports[0]].width = 0;
    CHECK_THROWS(validate(bad_width));
}

TEST_CASE("IR JSON dump lists every node with its width") {
    QuantizedMLP m = tiny_model({2, 2}, {{{3, -1}, {2, 2}}}, {{1, -1}});
    NetlistIR ir = lower(m);
    const std::string j = ir_to_json(ir);
    CHECK(j.find("\"nodes\"") != std::string::npos);
    CHECK(j.find("\"width\"") != std::string::npos);
    const std::string j2 = ir_to_json(ir);
    CHECK(j == j2);
}
