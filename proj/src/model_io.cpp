#include "axmlp/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace axmlp {

using nlohmann::json;

namespace {

json ax_to_json(const AxConfig& ax) {
    json j;
    j["k"] = ax.k;
    json g = json::array();
    for (const auto& v : ax.g_per_layer) {
        if (v.has_value())
            g.push_back(*v);
        else
            g.push_back(nullptr);
    }
    j["g_per_layer"] = std::move(g);
    return j;
}

AxConfig ax_from_json(const json& j) {
    AxConfig ax;
    ax.k = j.at("k").get<int>();
    for (const auto& v : j.at("g_per_layer")) {
        if (v.is_null())
            ax.g_per_layer.push_back(std::nullopt);
        else
            ax.g_per_layer.push_back(v.get<double>());
    }
    return ax;
}

}  // namespace

std::string ax_config_to_json(const AxConfig& ax) {
    return ax_to_json(ax).dump(2) + "\n";
}

AxConfig ax_config_from_json(const std::string& text) {
    try {
        return ax_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed ax config JSON: ") + e.what());
    }
}

std::string model_to_json(const QuantizedMLP& m, const AxConfig* ax) {
    json j;
    j["topology"] = m.topology;
    j["input_bits"] = m.input_bits;
    json layers = json::array();
    for (size_t l = 0; l < m.num_layers(); ++l) {
        json layer;
        layer["coefficients"] = m.coefficients[l];
        layer["biases"] = m.biases[l];
        layer["frac_bits"] = m.frac_bits[l];
        layers.push_back(std::move(layer));
    }
    j["layers"] = std::move(layers);
    if (ax) j["ax"] = ax_to_json(*ax);
    return j.dump(2) + "\n";
}

LoadedModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed model JSON: ") + e.what());
    }
    try {
        LoadedModel out;
        QuantizedMLP& m = out.model;
        m.topology = j.at("topology").get<Topology>();
        m.input_bits = j.at("input_bits").get<int>();
        for (const auto& layer : j.at("layers")) {
            m.coefficients.push_back(layer.at("coefficients").get<std::vector<std::vector<int>>>());
            m.biases.push_back(layer.at("biases").get<std::vector<int64_t>>());
            m.frac_bits.push_back(layer.at("frac_bits").get<int>());
        }
        if (j.contains("ax")) out.ax = ax_from_json(j.at("ax"));

        check_topology(m.topology);
        if (m.num_layers() + 1 != m.topology.size())
            throw InputError("model layer count does not match its topology");
        for (size_t l = 0; l < m.num_layers(); ++l) {
            if (m.coefficients[l].size() != static_cast<size_t>(m.topology[l + 1]) ||
                m.biases[l].size() != static_cast<size_t>(m.topology[l + 1]))
                throw InputError("layer " + std::to_string(l) + " shape mismatch");
            for (const auto& row : m.coefficients[l]) {
                if (row.size() != static_cast<size_t>(m.topology[l]))
                    throw InputError("layer " + std::to_string(l) + " row width mismatch");
                for (int c : row)
                    if (c < -127 || c > 127)
                        throw InputError("coefficient out of [-127, 127] in layer " + std::to_string(l));
            }
        }
        if (out.ax && out.ax->g_per_layer.size() != m.num_layers())
            throw InputError("embedded ax config layer count mismatch");
        return out;
    } catch (const json::exception& e) {
        throw InputError(std::string("model JSON missing fields: ") + e.what());
    }
}

std::string lut_to_json(const MultiplierAreaLut& lut) {
    json j;
    const GateCosts& c = lut.costs();
    j["costs"] = {{"full_adder", c.full_adder},
                  {"inverter_per_bit", c.inverter_per_bit},
                  {"relu_per_bit", c.relu_per_bit},
                  {"comparator_per_bit", c.comparator_per_bit},
                  {"kappa", c.kappa}};
    json widths;
    for (int w : lut.widths()) {
        const auto& col = lut.column(w);
        widths[std::to_string(w)] = std::vector<double>(col.begin(), col.end());
    }
    j["widths"] = std::move(widths);
    return j.dump(2) + "\n";
}

MultiplierAreaLut lut_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
        GateCosts c;
        const auto& jc = j.at("costs");
        c.full_adder = jc.at("full_adder").get<double>();
        c.inverter_per_bit = jc.at("inverter_per_bit").get<double>();
        c.relu_per_bit = jc.at("relu_per_bit").get<double>();
        c.comparator_per_bit = jc.at("comparator_per_bit").get<double>();
        c.kappa = jc.at("kappa").get<double>();
        MultiplierAreaLut lut(c);
        for (const auto& [key, col] : j.at("widths").items()) {
            const auto values = col.get<std::vector<double>>();
            if (values.size() != 128) throw InputError("LUT column must have 128 entries");
            MultiplierAreaLut::Column column{};
            std::copy(values.begin(), values.end(), column.begin());
            lut.set_column(std::stoi(key), column);
        }
        return lut;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed LUT JSON: ") + e.what());
    }
}

std::string clustering_to_json(const Clustering& c) {
    json j;
    j["num_clusters"] = c.num_clusters;
    j["mean_area"] = c.mean_area;
    j["cluster_of"] = std::vector<int>(c.cluster_of.begin(), c.cluster_of.end());
    return j.dump(2) + "\n";
}

Clustering clustering_from_json(const std::string& text) {
    try {
        json j = json::parse(text);
        Clustering c;
        c.num_clusters = j.at("num_clusters").get<int>();
        c.mean_area = j.at("mean_area").get<std::vector<double>>();
        auto v = j.at("cluster_of").get<std::vector<int>>();
        if (v.size() != c.cluster_of.size()) throw InputError("cluster_of must have 128 entries");
        std::copy(v.begin(), v.end(), c.cluster_of.begin());
        return c;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed clustering JSON: ") + e.what());
    }
}

std::string significance_to_json(const SignificanceMap& sig) {
    json j;
    j["layer_means"] = sig.layer_means;
    json g_layers = json::array();
    for (const auto& layer : sig.g) {
        json neurons = json::array();
        for (const auto& row : layer) {
            json r = json::array();
            for (double v : row) {
                if (std::isnan(v))
                    r.push_back(nullptr);
                else
                    r.push_back(v);
            }
            neurons.push_back(std::move(r));
        }
        g_layers.push_back(std::move(neurons));
    }
    j["g"] = std::move(g_layers);
    return j.dump(2) + "\n";
}

SignificanceMap significance_from_json(const std::string& text) {
    try {
        json j = json::parse(text);
        SignificanceMap sig;
        sig.layer_means = j.at("layer_means").get<std::vector<std::vector<double>>>();
        for (const auto& layer : j.at("g")) {
            std::vector<std::vector<double>> neurons;
            for (const auto& row : layer) {
                std::vector<double> r;
                for (const auto& v : row)
                    r.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : v.get<double>());
                neurons.push_back(std::move(r));
            }
            sig.g.push_back(std::move(neurons));
        }
        return sig;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed significance JSON: ") + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << content;
    if (!out) throw InputError("failed writing file: " + path);
}

}  // namespace axmlp
