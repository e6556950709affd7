#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "axmlp/axneuron.hpp"
#include "axmlp/mlp.hpp"

namespace axmlp {

enum class NodeKind {
    Input,    // feature port; p0 = port index
    Const,    // p0 = value
    Shl,      // a shifted left by p0 (pure wiring)
    Add,      // (a + b) mod 2^width
    Sub,      // a - b, operands arranged so the result is nonnegative
    Slice,    // a[p1:p0] (msb:lsb)
    Not,      // (2^width - 1) - zext(a): bitwise NOT with ones padding
    Relu,     // max(0, a) where a may be signed; output width <= a's width
    ZeroExt,  // zero extension of a
    SignExt,  // sign extension of a
    Ge,       // signed(a) >= signed(b), equal widths, 1-bit result
    Mux,      // a ? b : c
    Output,   // class index port; forwards a
};

struct Node {
    NodeKind kind;
    int width = 1;          // declared bus width, >= 1
    bool is_signed = false; // numeric interpretation of the bit pattern
    uint32_t a = 0, b = 0, c = 0;
    int64_t p0 = 0, p1 = 0;
};

/// Signal-level circuit graph. Node operands always reference earlier nodes,
/// so storage order is a topological order.
struct NetlistIR {
    std::vector<Node> nodes;
    std::vector<uint32_t> input_ports;   // Input node per feature
    std::vector<uint32_t> output_sums;   // output-layer neuron sums
    uint32_t class_output = 0;           // node driving the class index port
    int input_bits = 4;
    int num_classes = 2;
};

/// Lowers the model to the split-tree bespoke structure. Pass significance
/// and config for an approximate circuit, or neither for the exact one.
NetlistIR lower(const QuantizedMLP& m, const SignificanceMap* sig = nullptr,
                const AxConfig* ax = nullptr);

/// Structural checks: operand ordering (acyclicity), width consistency,
/// payload ranges. Throws on violation.
void validate(const NetlistIR& ir);

struct InterpretResult {
    std::vector<int64_t> output_sums;
    int class_index = 0;
};

/// Bit-exact topological evaluation with wrap-around at declared widths.
InterpretResult interpret(const NetlistIR& ir, const std::vector<uint32_t>& x);

/// Longest input-to-output path counted in adder/comparator nodes.
int logic_depth(const NetlistIR& ir);

int count_adder_nodes(const NetlistIR& ir);

/// Self-contained combinational Verilog-2001 module. Byte-deterministic.
std::string emit_verilog(const NetlistIR& ir, const std::string& module_name);

/// Self-checking testbench asserting expected classes for given inputs.
std::string emit_testbench(const NetlistIR& ir, const std::string& module_name,
                           const std::vector<std::pair<std::vector<uint32_t>, int>>& vectors);

/// Node-list JSON dump for debugging.
std::string ir_to_json(const NetlistIR& ir);

}  // namespace axmlp
