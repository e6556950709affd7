#include "axmlp/netlist.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "axmlp/csd.hpp"
#include "axmlp/neuron_plan.hpp"
#include "json.hpp"

namespace axmlp {

namespace {

class Builder {
public:
    explicit Builder(NetlistIR& ir) : ir_(ir) {}

    uint32_t add_node(Node n) {
        if (n.width < 1 || n.width > 62)
            throw std::runtime_error("netlist bus width out of range: " + std::to_string(n.width));
        ir_.nodes.push_back(n);
        return static_cast<uint32_t>(ir_.nodes.size() - 1);
    }

    uint32_t input(int port, int width) {
        Node n{NodeKind::Input, width};
        n.p0 = port;
        return add_node(n);
    }
    uint32_t constant(uint64_t value) {
        Node n{NodeKind::Const, std::max(1, bitsize(value))};
        n.p0 = static_cast<int64_t>(value);
        return add_node(n);
    }
    uint32_t shl(uint32_t a, int shift) {
        if (shift == 0) return a;
        Node n{NodeKind::Shl, ir_.nodes[a].width + shift};
        n.a = a;
        n.p0 = shift;
        return add_node(n);
    }
    uint32_t add(uint32_t a, uint32_t b, int width, bool is_signed = false) {
        Node n{NodeKind::Add, width, is_signed};
        n.a = a;
        n.b = b;
        return add_node(n);
    }
    uint32_t sub(uint32_t a, uint32_t b, int width) {
        Node n{NodeKind::Sub, width};
        n.a = a;
        n.b = b;
        return add_node(n);
    }
    uint32_t slice(uint32_t a, int msb, int lsb) {
        Node n{NodeKind::Slice, msb - lsb + 1};
        n.a = a;
        n.p0 = lsb;
        n.p1 = msb;
        return add_node(n);
    }
    uint32_t bit_not(uint32_t a, int width) {
        Node n{NodeKind::Not, width, true};
        n.a = a;
        return add_node(n);
    }
    uint32_t relu(uint32_t a, int out_width) {
        Node n{NodeKind::Relu, out_width};
        n.a = a;
        return add_node(n);
    }
    uint32_t zero_ext(uint32_t a, int width, bool as_signed = false) {
        if (width == ir_.nodes[a].width && !as_signed) return a;
        Node n{NodeKind::ZeroExt, width, as_signed};
        n.a = a;
        return add_node(n);
    }
    uint32_t sign_ext(uint32_t a, int width) {
        if (width == ir_.nodes[a].width) return a;
        Node n{NodeKind::SignExt, width, true};
        n.a = a;
        return add_node(n);
    }
    uint32_t ge(uint32_t a, uint32_t b) {
        Node n{NodeKind::Ge, 1};
        n.a = a;
        n.b = b;
        return add_node(n);
    }
    uint32_t mux(uint32_t sel, uint32_t t, uint32_t f, bool is_signed = false) {
        Node n{NodeKind::Mux, ir_.nodes[t].width, is_signed};
        n.a = sel;
        n.b = t;
        n.c = f;
        return add_node(n);
    }
    uint32_t output(uint32_t a) {
        Node n{NodeKind::Output, ir_.nodes[a].width};
        n.a = a;
        return add_node(n);
    }

    int width(uint32_t id) const { return ir_.nodes[id].width; }

private:
    NetlistIR& ir_;
};

// Shift-add expansion of a constant multiplier from the CSD digits,
// most significant first. Returns the product node; every partial result
// is a positive multiple of the input.
uint32_t build_multiplier(Builder& b, uint32_t input_node, uint32_t magnitude, uint64_t a_max) {
    const CsdForm form = csd(magnitude);
    std::vector<std::pair<int, int>> digits;  // (position, digit), MSB first
    for (size_t i = form.digits.size(); i-- > 0;)
        if (form.digits[i] != 0) digits.emplace_back(static_cast<int>(i), form.digits[i]);

    uint64_t prefix = uint64_t{1} << digits.front().first;  // leading digit is always +1
    uint32_t acc = b.shl(input_node, digits.front().first);
    for (size_t d = 1; d < digits.size(); ++d) {
        const auto [pos, digit] = digits[d];
        const uint32_t term = b.shl(input_node, pos);
        if (digit > 0) {
            prefix += uint64_t{1} << pos;
            acc = b.add(acc, term, bitsize(prefix * a_max));
        } else {
            prefix -= uint64_t{1} << pos;
            acc = b.sub(acc, term, std::max(1, bitsize(prefix * a_max)));
        }
    }
    return acc;
}

uint64_t mask_of(int width) { return (width >= 64) ? ~uint64_t{0} : ((uint64_t{1} << width) - 1); }

int64_t numeric(const Node& n, uint64_t raw) {
    if (n.is_signed && (raw >> (n.width - 1)) != 0)
        return static_cast<int64_t>(raw) - static_cast<int64_t>(uint64_t{1} << n.width);
    return static_cast<int64_t>(raw);
}

}  // namespace

NetlistIR lower(const QuantizedMLP& m, const SignificanceMap* sig, const AxConfig* ax) {
    NetlistIR ir;
    ir.input_bits = m.input_bits;
    ir.num_classes = m.topology.back();
    Builder b(ir);

    const auto plans = plan_network(m, sig, ax);
    const auto widths = layer_input_widths(m);

    std::vector<uint32_t> act;
    for (int i = 0; i < m.topology.front(); ++i) {
        act.push_back(b.input(i, m.input_bits));
        ir.input_ports.push_back(act.back());
    }

    std::vector<bool> sum_signed;
    for (size_t l = 0; l < plans.size(); ++l) {
        const bool hidden = l + 1 < plans.size();
        const uint64_t a_max = mask_of(widths[l]);
        std::vector<uint32_t> next;
        sum_signed.clear();

        for (size_t j = 0; j < plans[l].size(); ++j) {
            const NeuronPlan& plan = plans[l][j];
            const auto& coeffs = m.coefficients[l][j];

            // Full product for every nonzero coefficient; the priced
            // multiplier stays even when its summand truncates away.
            std::vector<uint32_t> product(coeffs.size(), 0);
            for (size_t i = 0; i < coeffs.size(); ++i) {
                if (coeffs[i] == 0) continue;
                const uint32_t mag = static_cast<uint32_t>(std::abs(int64_t{coeffs[i]}));
                product[i] = build_multiplier(b, act[i], mag, a_max);
            }

            auto lower_tree = [&](const std::vector<SummandPlan>& side) -> uint32_t {
                std::vector<TreeItem> items;
                for (const auto& s : side) {
                    TreeItem it = summand_tree_item(s);
                    if (s.is_bias) {
                        it.ref = b.constant(s.max_value);
                    } else if (s.truncated) {
                        const uint32_t p = product[s.input_index];
                        const int pw = b.width(p);
                        const uint32_t sliced = b.slice(p, pw - 1, s.lsb);
                        it.ref = b.shl(sliced, s.lsb);
                    } else {
                        it.ref = product[s.input_index];
                    }
                    items.push_back(it);
                }
                if (items.empty()) return b.constant(0);
                TreeItem root = reduce_tree(items, [&](const TreeItem& x, const TreeItem& y,
                                                       const TreeItem& out) {
                    return static_cast<size_t>(b.add(static_cast<uint32_t>(x.ref),
                                                     static_cast<uint32_t>(y.ref), out.msb + 1));
                });
                return static_cast<uint32_t>(root.ref);
            };

            uint32_t sum;
            bool sum_is_signed;
            if (plan.has_negative_branch) {
                const uint32_t neg_root = lower_tree(plan.negative);
                const uint32_t inv = b.bit_not(neg_root, plan.w_f);
                if (!plan.positive.empty()) {
                    const uint32_t pos_root = lower_tree(plan.positive);
                    sum = b.add(pos_root, inv, plan.w_f, true);
                } else {
                    sum = inv;
                }
                sum_is_signed = true;
            } else {
                sum = lower_tree(plan.positive);
                sum_is_signed = false;
            }

            if (hidden) {
                uint32_t h = b.relu(sum, plan.w_out);
                h = b.zero_ext(h, widths[l + 1]);
                next.push_back(h);
            } else {
                next.push_back(sum);
                sum_signed.push_back(sum_is_signed);
                ir.output_sums.push_back(sum);
            }
        }
        if (hidden) act = std::move(next);
    }

    // Argmax tournament with lowest-index tie-break: on equal values the
    // comparison keeps the earlier operand.
    const auto& out_plans = plans.back();
    const size_t n_out = ir.output_sums.size();
    const int idx_width = std::max(1, bitsize(static_cast<uint64_t>(ir.num_classes - 1)));
    if (n_out == 1) {
        ir.class_output = b.output(b.constant(0));
    } else {
        int cmp_width = 1;
        for (size_t j = 0; j < n_out; ++j)
            cmp_width = std::max(cmp_width, out_plans[j].w_f + (sum_signed[j] ? 0 : 1));

        struct Entry {
            uint32_t value, index;
            int depth;
        };
        std::vector<Entry> entries;
        for (size_t j = 0; j < n_out; ++j) {
            uint32_t v = sum_signed[j] ? b.sign_ext(ir.output_sums[j], cmp_width)
                                       : b.zero_ext(ir.output_sums[j], cmp_width, true);
            uint32_t idx = b.zero_ext(b.constant(j), idx_width);
            entries.push_back({v, idx, 0});
        }
        while (entries.size() > 1) {
            std::vector<Entry> round;
            for (size_t i = 0; i + 1 < entries.size(); i += 2) {
                const uint32_t keep_first = b.ge(entries[i].value, entries[i + 1].value);
                const uint32_t v = b.mux(keep_first, entries[i].value, entries[i + 1].value, true);
                const uint32_t idx = b.mux(keep_first, entries[i].index, entries[i + 1].index);
                round.push_back({v, idx, 0});
            }
            if (entries.size() % 2) round.push_back(entries.back());
            entries = std::move(round);
        }
        ir.class_output = b.output(entries[0].index);
    }

    validate(ir);
    return ir;
}

void validate(const NetlistIR& ir) {
    auto check = [](bool ok, const std::string& what) {
        if (!ok) throw std::runtime_error("invalid netlist: " + what);
    };
    for (size_t i = 0; i < ir.nodes.size(); ++i) {
        const Node& n = ir.nodes[i];
        check(n.width >= 1 && n.width <= 62, "width out of range at node " + std::to_string(i));
        auto op = [&](uint32_t ref) {
            check(ref < i, "operand of node " + std::to_string(i) + " breaks topological order (cycle)");
        };
        switch (n.kind) {
            case NodeKind::Input:
                check(n.p0 >= 0, "negative port index");
                break;
            case NodeKind::Const:
                check(n.p0 >= 0 && bitsize(static_cast<uint64_t>(n.p0)) <= n.width, "constant too wide");
                break;
            case NodeKind::Shl:
                op(n.a);
                check(n.width == ir.nodes[n.a].width + n.p0, "shift width mismatch");
                break;
            case NodeKind::Add:
            case NodeKind::Sub:
                op(n.a);
                op(n.b);
                break;
            case NodeKind::Slice:
                op(n.a);
                check(n.p0 >= 0 && n.p1 >= n.p0 && n.p1 < ir.nodes[n.a].width, "slice out of range");
                check(n.width == n.p1 - n.p0 + 1, "slice width mismatch");
                break;
            case NodeKind::Not:
                op(n.a);
                check(n.width >= ir.nodes[n.a].width, "NOT narrower than its operand");
                break;
            case NodeKind::Relu:
                op(n.a);
                check(n.width <= ir.nodes[n.a].width, "ReLU wider than its operand");
                break;
            case NodeKind::ZeroExt:
            case NodeKind::SignExt:
                op(n.a);
                check(n.width >= ir.nodes[n.a].width, "extension narrows its operand");
                break;
            case NodeKind::Ge:
                op(n.a);
                op(n.b);
                check(n.width == 1, "comparator must be 1 bit");
                check(ir.nodes[n.a].width == ir.nodes[n.b].width, "comparator width mismatch");
                break;
            case NodeKind::Mux:
                op(n.a);
                op(n.b);
                op(n.c);
                check(ir.nodes[n.a].width == 1, "mux select must be 1 bit");
                check(ir.nodes[n.b].width == n.width && ir.nodes[n.c].width == n.width,
                      "mux operand width mismatch");
                break;
            case NodeKind::Output:
                op(n.a);
                check(n.width == ir.nodes[n.a].width, "output width mismatch");
                break;
        }
    }
    for (uint32_t port : ir.input_ports)
        check(port < ir.nodes.size() && ir.nodes[port].kind == NodeKind::Input, "bad input port list");
    check(ir.class_output < ir.nodes.size() &&
              ir.nodes[ir.class_output].kind == NodeKind::Output,
          "bad class output");
}

InterpretResult interpret(const NetlistIR& ir, const std::vector<uint32_t>& x) {
    if (x.size() != ir.input_ports.size())
        throw InputError("input vector width does not match the netlist ports");
    for (uint32_t v : x)
        if (bitsize(v) > ir.input_bits) throw InputError("input value exceeds the port width");

    std::vector<uint64_t> value(ir.nodes.size(), 0);
    for (size_t i = 0; i < ir.nodes.size(); ++i) {
        const Node& n = ir.nodes[i];
        if (n.a >= i && n.kind != NodeKind::Input && n.kind != NodeKind::Const)
            throw std::runtime_error("netlist is not in topological order (cycle)");
        const uint64_t mask = mask_of(n.width);
        switch (n.kind) {
            case NodeKind::Input:
                value[i] = x[static_cast<size_t>(n.p0)] & mask;
                break;
            case NodeKind::Const:
                value[i] = static_cast<uint64_t>(n.p0) & mask;
                break;
            case NodeKind::Shl:
                value[i] = (value[n.a] << n.p0) & mask;
                break;
            case NodeKind::Add:
                value[i] = (value[n.a] + value[n.b]) & mask;
                break;
            case NodeKind::Sub:
                value[i] = (value[n.a] - value[n.b]) & mask;
                break;
            case NodeKind::Slice:
                value[i] = (value[n.a] >> n.p0) & mask;
                break;
            case NodeKind::Not:
                value[i] = mask ^ value[n.a];
                break;
            case NodeKind::Relu: {
                const int64_t v = numeric(ir.nodes[n.a], value[n.a]);
                value[i] = (v < 0) ? 0 : (static_cast<uint64_t>(v) & mask);
                break;
            }
            case NodeKind::ZeroExt:
                value[i] = value[n.a];
                break;
            case NodeKind::SignExt: {
                const Node& src = ir.nodes[n.a];
                uint64_t v = value[n.a];
                if ((v >> (src.width - 1)) != 0) v |= mask ^ mask_of(src.width);
                value[i] = v;
                break;
            }
            case NodeKind::Ge:
                value[i] = numeric(ir.nodes[n.a], value[n.a]) >= numeric(ir.nodes[n.b], value[n.b]);
                break;
            case NodeKind::Mux:
                value[i] = value[n.a] ? value[n.b] : value[n.c];
                break;
            case NodeKind::Output:
                value[i] = value[n.a];
                break;
        }
    }

    InterpretResult res;
    for (uint32_t id : ir.output_sums)
        res.output_sums.push_back(numeric(ir.nodes[id], value[id]));
    res.class_index = static_cast<int>(value[ir.class_output]);
    return res;
}

int logic_depth(const NetlistIR& ir) {
    std::vector<int> depth(ir.nodes.size(), 0);
    int longest = 0;
    for (size_t i = 0; i < ir.nodes.size(); ++i) {
        const Node& n = ir.nodes[i];
        int in = 0;
        auto take = [&](uint32_t ref) {
            if (ref >= i) throw std::runtime_error("cycle detected in netlist");
            in = std::max(in, depth[ref]);
        };
        switch (n.kind) {
            case NodeKind::Input:
            case NodeKind::Const:
                break;
            case NodeKind::Mux:
                take(n.a);
                take(n.b);
                take(n.c);
                break;
            case NodeKind::Add:
            case NodeKind::Sub:
            case NodeKind::Ge:
                take(n.a);
                take(n.b);
                break;
            default:
                take(n.a);
                break;
        }
        const bool counts = n.kind == NodeKind::Add || n.kind == NodeKind::Sub || n.kind == NodeKind::Ge;
        depth[i] = in + (counts ? 1 : 0);
        longest = std::max(longest, depth[i]);
    }
    return longest;
}

int count_adder_nodes(const NetlistIR& ir) {
    int n = 0;
    for (const Node& node : ir.nodes)
        n += (node.kind == NodeKind::Add || node.kind == NodeKind::Sub);
    return n;
}

namespace {

const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Input: return "input";
        case NodeKind::Const: return "const";
        case NodeKind::Shl: return "shl";
        case NodeKind::Add: return "add";
        case NodeKind::Sub: return "sub";
        case NodeKind::Slice: return "slice";
        case NodeKind::Not: return "not";
        case NodeKind::Relu: return "relu";
        case NodeKind::ZeroExt: return "zext";
        case NodeKind::SignExt: return "sext";
        case NodeKind::Ge: return "ge";
        case NodeKind::Mux: return "mux";
        case NodeKind::Output: return "output";
    }
    return "?";
}

std::string wire_name(const NetlistIR& ir, uint32_t id) {
    if (ir.nodes[id].kind == NodeKind::Input)
        return "in" + std::to_string(ir.nodes[id].p0);
    return "n" + std::to_string(id);
}

std::string zeros(int count) {
    return std::to_string(count) + "'b" + std::string(static_cast<size_t>(count), '0');
}

}  // namespace

std::string emit_verilog(const NetlistIR& ir, const std::string& module_name) {
    validate(ir);
    std::ostringstream v;
    v << "// Bespoke fully-parallel MLP classifier (combinational, one inference per cycle).\n";
    v << "// Generated netlist; all coefficient multiplications are hardwired shift-add networks.\n";
    v << "module " << module_name << " (\n";
    for (size_t i = 0; i < ir.input_ports.size(); ++i)
        v << "  input  wire [" << ir.input_bits - 1 << ":0] in" << i << ",\n";
    const int out_width = ir.nodes[ir.class_output].width;
    v << "  output wire [" << out_width - 1 << ":0] class_idx\n";
    v << ");\n\n";

    for (size_t i = 0; i < ir.nodes.size(); ++i) {
        const Node& n = ir.nodes[i];
        if (n.kind == NodeKind::Input || n.kind == NodeKind::Output) continue;
        const std::string name = wire_name(ir, static_cast<uint32_t>(i));
        auto opa = wire_name(ir, n.a);
        v << "  wire [" << n.width - 1 << ":0] " << name << ";\n";
        switch (n.kind) {
            case NodeKind::Const:
                v << "  assign " << name << " = " << n.width << "'d" << n.p0 << ";\n";
                break;
            case NodeKind::Shl:
                v << "  assign " << name << " = {" << opa << ", " << zeros(static_cast<int>(n.p0))
                  << "};\n";
                break;
            case NodeKind::Add:
                v << "  assign " << name << " = " << opa << " + " << wire_name(ir, n.b) << ";\n";
                break;
            case NodeKind::Sub:
                v << "  assign " << name << " = " << opa << " - " << wire_name(ir, n.b) << ";\n";
                break;
            case NodeKind::Slice:
                v << "  assign " << name << " = " << opa << "[" << n.p1 << ":" << n.p0 << "];\n";
                break;
            case NodeKind::Not: {
                const int pad = n.width - ir.nodes[n.a].width;
                if (pad > 0)
                    v << "  assign " << name << " = {{" << pad << "{1'b1}}, ~" << opa << "};\n";
                else
                    v << "  assign " << name << " = ~" << opa << ";\n";
                break;
            }
            case NodeKind::Relu: {
                const Node& src = ir.nodes[n.a];
                if (src.is_signed)
                    v << "  assign " << name << " = " << opa << "[" << src.width - 1 << "] ? "
                      << n.width << "'d0 : " << opa << "[" << n.width - 1 << ":0];\n";
                else
                    v << "  assign " << name << " = " << opa << ";\n";
                break;
            }
            case NodeKind::ZeroExt: {
                const int pad = n.width - ir.nodes[n.a].width;
                if (pad > 0)
                    v << "  assign " << name << " = {{" << pad << "{1'b0}}, " << opa << "};\n";
                else
                    v << "  assign " << name << " = " << opa << ";\n";
                break;
            }
            case NodeKind::SignExt: {
                const Node& src = ir.nodes[n.a];
                const int pad = n.width - src.width;
                v << "  assign " << name << " = {{" << pad << "{" << opa << "[" << src.width - 1
                  << "]}}, " << opa << "};\n";
                break;
            }
            case NodeKind::Ge:
                v << "  assign " << name << " = ($signed(" << opa << ") >= $signed("
                  << wire_name(ir, n.b) << "));\n";
                break;
            case NodeKind::Mux:
                v << "  assign " << name << " = " << opa << " ? " << wire_name(ir, n.b) << " : "
                  << wire_name(ir, n.c) << ";\n";
                break;
            default:
                break;
        }
    }

    v << "\n  assign class_idx = " << wire_name(ir, ir.nodes[ir.class_output].a) << ";\n";
    v << "\nendmodule\n";
    return v.str();
}

std::string emit_testbench(const NetlistIR& ir, const std::string& module_name,
                           const std::vector<std::pair<std::vector<uint32_t>, int>>& vectors) {
    if (vectors.empty()) throw InputError("testbench needs at least one vector");
    validate(ir);

    const int out_width = ir.nodes[ir.class_output].width;
    std::ostringstream v;
    v << "`timescale 1ms/1us\n";
    v << "module " << module_name << "_tb;\n";
    for (size_t i = 0; i < ir.input_ports.size(); ++i)
        v << "  reg [" << ir.input_bits - 1 << ":0] in" << i << ";\n";
    v << "  wire [" << out_width - 1 << ":0] class_idx;\n";
    v << "  integer pass_count;\n  integer fail_count;\n\n";
    v << "  " << module_name << " dut (\n";
    for (size_t i = 0; i < ir.input_ports.size(); ++i)
        v << "    .in" << i << "(in" << i << "),\n";
    v << "    .class_idx(class_idx)\n  );\n\n";
    v << "  initial begin\n";
    v << "    pass_count = 0;\n    fail_count = 0;\n";
    for (size_t t = 0; t < vectors.size(); ++t) {
        const auto& [inputs, expected] = vectors[t];
        if (inputs.size() != ir.input_ports.size())
            throw InputError("testbench vector width does not match the netlist ports");
        v << "\n";
        for (size_t i = 0; i < inputs.size(); ++i)
            v << "    in" << i << " = " << ir.input_bits << "'d" << inputs[i] << ";\n";
        v << "    #10;\n";
        v << "    if (class_idx === " << out_width << "'d" << expected
          << ") pass_count = pass_count + 1;\n";
        v << "    else begin\n";
        v << "      fail_count = fail_count + 1;\n";
        v << "      $display(\"FAIL vector " << t << ": got %0d, expected " << expected
          << "\", class_idx);\n";
        v << "    end\n";
    }
    v << "\n    $display(\"%0d passed, %0d failed\", pass_count, fail_count);\n";
    v << "    $finish;\n  end\nendmodule\n";
    return v.str();
}

std::string ir_to_json(const NetlistIR& ir) {
    nlohmann::json j;
    j["input_bits"] = ir.input_bits;
    j["num_classes"] = ir.num_classes;
    j["input_ports"] = ir.input_ports;
    j["output_sums"] = ir.output_sums;
    j["class_output"] = ir.class_output;
    nlohmann::json nodes = nlohmann::json::array();
    for (const Node& n : ir.nodes) {
        nlohmann::json e;
        e["kind"] = kind_name(n.kind);
        e["width"] = n.width;
        if (n.is_signed) e["signed"] = true;
        switch (n.kind) {
            case NodeKind::Input: e["port"] = n.p0; break;
            case NodeKind::Const: e["value"] = n.p0; break;
            case NodeKind::Shl: e["a"] = n.a; e["shift"] = n.p0; break;
            case NodeKind::Slice: e["a"] = n.a; e["msb"] = n.p1; e["lsb"] = n.p0; break;
            case NodeKind::Add:
            case NodeKind::Sub:
            case NodeKind::Ge: e["a"] = n.a; e["b"] = n.b; break;
            case NodeKind::Mux: e["sel"] = n.a; e["t"] = n.b; e["f"] = n.c; break;
            default: e["a"] = n.a; break;
        }
        nodes.push_back(std::move(e));
    }
    j["nodes"] = std::move(nodes);
    return j.dump(2) + "\n";
}

}  // namespace axmlp
