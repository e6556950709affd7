#include "axmlp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>

#include "axmlp/model_io.hpp"
#include "axmlp/netlist.hpp"
#include "json.hpp"

namespace axmlp {

using nlohmann::json;
namespace fs = std::filesystem;

RunManifest manifest_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed manifest JSON: ") + e.what());
    }
    try {
        RunManifest m;
        m.dataset_path = j.at("dataset").get<std::string>();
        m.topology = j.at("topology").get<Topology>();
        m.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("label_column")) m.label_column = j["label_column"].get<std::string>();
        if (j.contains("seeds"))
            m.seeds = j["seeds"].get<std::vector<uint32_t>>();
        else if (j.contains("seed"))
            m.seeds = {j["seed"].get<uint32_t>()};
        if (j.contains("split")) m.split_fraction = j["split"].get<double>();
        if (j.contains("threshold")) m.threshold = j["threshold"].get<double>();
        if (j.contains("alpha")) m.alpha = j["alpha"].get<double>();
        if (j.contains("epochs_per_stage")) m.epochs_per_stage = j["epochs_per_stage"].get<int>();
        if (j.contains("input_bits")) m.input_bits = j["input_bits"].get<int>();
        if (j.contains("dse_cap")) m.dse_cap = j["dse_cap"].get<int>();
        if (j.contains("jobs")) m.jobs = j["jobs"].get<int>();
        if (j.contains("train")) {
            const auto& t = j["train"];
            if (t.contains("epochs")) m.train_epochs = t["epochs"].get<int>();
            if (t.contains("lr")) m.train_lr = t["lr"].get<double>();
            if (t.contains("batch")) m.train_batch = t["batch"].get<int>();
        }
        if (j.contains("retrain_lr")) m.retrain_lr = j["retrain_lr"].get<double>();
        if (j.contains("retrain_batch")) m.retrain_batch = j["retrain_batch"].get<int>();
        if (j.contains("lr_growth")) m.lr_growth = j["lr_growth"].get<double>();

        if (m.threshold < 0.0 || m.threshold > 1.0) throw InputError("budget must be in [0, 1]");
        if (m.seeds.empty()) throw InputError("manifest needs at least one seed");
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("manifest missing fields: ") + e.what());
    }
}

std::string manifest_to_json(const RunManifest& m) {
    json j;
    j["dataset"] = m.dataset_path;
    j["label_column"] = m.label_column;
    j["topology"] = m.topology;
    j["seeds"] = m.seeds;
    j["split"] = m.split_fraction;
    j["threshold"] = m.threshold;
    j["alpha"] = m.alpha;
    j["epochs_per_stage"] = m.epochs_per_stage;
    j["input_bits"] = m.input_bits;
    j["dse_cap"] = m.dse_cap;
    j["jobs"] = m.jobs;
    j["out_dir"] = m.out_dir;
    j["train"] = {{"epochs", m.train_epochs}, {"lr", m.train_lr}, {"batch", m.train_batch}};
    j["retrain_lr"] = m.retrain_lr;
    j["retrain_batch"] = m.retrain_batch;
    j["lr_growth"] = m.lr_growth;
    return j.dump(2) + "\n";
}

namespace {

double ratio_or_inf(double baseline, double selected) {
    if (selected == 0.0) return std::numeric_limits<double>::infinity();
    return baseline / selected;
}

json ratio_json(double r) {
    if (std::isinf(r)) return "inf";
    return r;
}

json metrics_json(const Metrics& m) {
    json j;
    j["train_accuracy"] = m.train_accuracy;
    j["test_accuracy"] = m.test_accuracy;
    j["multiplier_area"] = m.multiplier_area;
    j["total_area"] = m.total_area;
    j["power"] = m.power;
    j["logic_depth"] = m.logic_depth;
    j["mac_count"] = m.mac_count;
    return j;
}

Metrics metrics_of(const QuantizedMLP& m, const QuantizedDataset& train,
                   const QuantizedDataset& test) {
    Metrics x;
    x.train_accuracy = accuracy(m, train);
    x.test_accuracy = accuracy(m, test);
    const AreaReport r = network_area(m);
    x.multiplier_area = r.multiplier_area;
    x.total_area = r.total_area;
    x.power = r.power_proxy;
    x.logic_depth = r.logic_depth;
    x.mac_count = mac_count(m.topology);
    return x;
}

std::string score_history_csv(const RetrainResult& r) {
    std::string out = "stage,epoch,lr,score,train_acc,mult_area,changed\n";
    char buf[128];
    for (const auto& row : r.history) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%.6f,%.9g,%d\n", row.stage, row.epoch,
                      row.lr, row.score, row.train_accuracy, row.multiplier_area,
                      row.coefficients_changed ? 1 : 0);
        out += buf;
    }
    return out;
}

template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const InputError& e) {
        throw InputError(std::string("stage '") + name + "' failed: " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage '") + name + "' failed: " + e.what());
    }
}

Report run_one(const RunManifest& mf, uint32_t seed, const fs::path& dir) {
    fs::create_directories(dir);
    write_text_file((dir / ".partial").string(), "run in progress or aborted\n");

    Report rep;
    rep.seed = seed;
    rep.threshold = mf.threshold;

    // Dataset: load, split, normalize on train, quantize to the input grid.
    QuantizedDataset train_q, test_q;
    stage("dataset", [&] {
        Dataset ds = load_csv(mf.dataset_path, mf.label_column);
        auto [train, test] = split(ds, mf.split_fraction, seed);
        NormalizedSplit norm = normalize(train, test);
        train_q = quantize_inputs(norm.train, mf.input_bits);
        test_q = quantize_inputs(norm.test, mf.input_bits);
        return 0;
    });

    FloatMLP float_model;
    stage("train", [&] {
        TrainConfig tc{mf.train_epochs, mf.train_lr, mf.train_batch, seed};
        float_model = train_float(train_q, mf.topology, tc);
        return 0;
    });

    QuantizedMLP baseline;
    stage("quantize", [&] {
        baseline = quantize(float_model, mf.input_bits);
        write_text_file((dir / "mlp_baseline.json").string(), model_to_json(baseline));
        rep.baseline = metrics_of(baseline, train_q, test_q);
        return 0;
    });

    MultiplierAreaLut lut;
    Clustering clustering;
    stage("cluster", [&] {
        std::set<int> widths;
        for (int w = 1; w <= 32; ++w) widths.insert(w);
        lut = build_lut(widths);
        clustering = cluster_coefficients(lut);
        write_text_file((dir / "lut.json").string(), lut_to_json(lut));
        write_text_file((dir / "clusters.json").string(), clustering_to_json(clustering));
        return 0;
    });

    RetrainResult retrained;
    stage("retrain", [&] {
        RetrainConfig rc;
        rc.threshold = mf.threshold;
        rc.alpha = mf.alpha;
        rc.epochs_per_stage = mf.epochs_per_stage;
        rc.lr = mf.retrain_lr;
        rc.lr_growth = mf.lr_growth;
        rc.batch = mf.retrain_batch;
        rc.seed = seed;
        retrained = retrain(baseline, train_q, clustering, lut, rc);
        write_text_file((dir / "mlp_prime.json").string(), model_to_json(retrained.model));
        write_text_file((dir / "score_history.csv").string(), score_history_csv(retrained));
        rep.retrained = metrics_of(retrained.model, train_q, test_q);
        rep.highest_cluster = retrained.highest_cluster;
        rep.retrain_epochs = retrained.epochs;
        rep.retrain_satisfied = retrained.satisfied;
        return 0;
    });

    SignificanceMap sig;
    stage("significance", [&] {
        sig = build_significance(retrained.model, train_q);
        write_text_file((dir / "significance.json").string(), significance_to_json(sig));
        return 0;
    });

    std::vector<DesignPoint> points;
    ParetoFront front;
    stage("axdse", [&] {
        auto configs = enumerate_configs(retrained.model, sig, mf.dse_cap);
        points = evaluate_all(retrained.model, sig, configs, train_q, test_q, mf.jobs);
        front = pareto(points);
        write_text_file((dir / "pareto.csv").string(), design_points_csv(front));
        write_text_file((dir / "dse_points.csv").string(), design_points_csv(points));
        rep.evaluated_points = points.size();
        rep.front_size = front.size();
        return 0;
    });

    Selection sel;
    stage("select", [&] {
        // Budget policy: retraining spends first, DSE gets the remainder.
        const double remaining =
            mf.threshold - (rep.baseline.train_accuracy - rep.retrained.train_accuracy);
        sel = select(front, remaining, rep.retrained.train_accuracy);
        rep.budget_satisfied = sel.satisfied;
        rep.selected_config = sel.point.config;
        rep.selected.train_accuracy = sel.point.train_accuracy;
        rep.selected.test_accuracy = sel.point.test_accuracy;
        rep.selected.multiplier_area = sel.point.area.multiplier_area;
        rep.selected.total_area = sel.point.area.total_area;
        rep.selected.power = sel.point.area.power_proxy;
        rep.selected.logic_depth = sel.point.area.logic_depth;
        rep.selected.mac_count = rep.baseline.mac_count;
        write_text_file((dir / "mlp_selected.json").string(),
                        model_to_json(retrained.model, &sel.point.config));
        return 0;
    });

    stage("emit-rtl", [&] {
        NetlistIR ir = lower(retrained.model, &sig, &sel.point.config);
        write_text_file((dir / "mlp.v").string(), emit_verilog(ir, "axmlp_top"));
        std::vector<std::pair<std::vector<uint32_t>, int>> vectors;
        const size_t n_vec = std::min<size_t>(20, test_q.size());
        for (size_t i = 0; i < n_vec; ++i)
            vectors.emplace_back(test_q.features[i], interpret(ir, test_q.features[i]).class_index);
        write_text_file((dir / "mlp_tb.v").string(), emit_testbench(ir, "axmlp_top", vectors));
        write_text_file((dir / "ir.json").string(), ir_to_json(ir));
        return 0;
    });

    stage("report", [&] {
        write_text_file((dir / "report.json").string(), report_to_json(rep));
        const ReductionTable t = report_compare(rep.baseline, rep.selected);
        write_text_file((dir / "report.csv").string(), reduction_csv(t));
        write_text_file((dir / "report.txt").string(), reduction_text(t));
        return 0;
    });

    fs::remove(dir / ".partial");
    return rep;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return (n % 2) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Metrics median_metrics(const std::vector<Report>& reports, Metrics Report::* field) {
    auto pick = [&](double Metrics::* m) {
        std::vector<double> v;
        for (const auto& r : reports) v.push_back((r.*field).*m);
        return median(v);
    };
    Metrics out;
    out.train_accuracy = pick(&Metrics::train_accuracy);
    out.test_accuracy = pick(&Metrics::test_accuracy);
    out.multiplier_area = pick(&Metrics::multiplier_area);
    out.total_area = pick(&Metrics::total_area);
    out.power = pick(&Metrics::power);
    {
        std::vector<double> v;
        for (const auto& r : reports) v.push_back((r.*field).logic_depth);
        out.logic_depth = static_cast<int>(median(v));
    }
    out.mac_count = (reports.front().*field).mac_count;
    return out;
}

}  // namespace

ReductionTable report_compare(const Metrics& baseline, const Metrics& selected) {
    ReductionTable t;
    t.multiplier_area_x = ratio_or_inf(baseline.multiplier_area, selected.multiplier_area);
    t.total_area_x = ratio_or_inf(baseline.total_area, selected.total_area);
    t.power_x = ratio_or_inf(baseline.power, selected.power);
    t.depth_x = ratio_or_inf(static_cast<double>(baseline.logic_depth),
                             static_cast<double>(selected.logic_depth));
    return t;
}

namespace {

std::string format_ratio(double r) {
    if (std::isinf(r)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", r);
    return buf;
}

}  // namespace

std::string reduction_csv(const ReductionTable& t) {
    std::string out = "metric,reduction_x\n";
    out += "multiplier_area," + format_ratio(t.multiplier_area_x) + "\n";
    out += "total_area," + format_ratio(t.total_area_x) + "\n";
    out += "power," + format_ratio(t.power_x) + "\n";
    out += "logic_depth," + format_ratio(t.depth_x) + "\n";
    return out;
}

std::string reduction_text(const ReductionTable& t) {
    std::string out;
    out += "reduction vs exact bespoke baseline (baseline / selected)\n";
    out += "  multiplier area : " + format_ratio(t.multiplier_area_x) + "x\n";
    out += "  total area      : " + format_ratio(t.total_area_x) + "x\n";
    out += "  power proxy     : " + format_ratio(t.power_x) + "x\n";
    out += "  logic depth     : " + format_ratio(t.depth_x) + "x\n";
    return out;
}

std::string report_to_json(const Report& r) {
    json j;
    j["seed"] = r.seed;
    j["threshold"] = r.threshold;
    j["baseline"] = metrics_json(r.baseline);
    j["retrained"] = metrics_json(r.retrained);
    j["retrained"]["highest_cluster"] = r.highest_cluster;
    j["retrained"]["epochs"] = r.retrain_epochs;
    j["retrained"]["satisfied"] = r.retrain_satisfied;
    j["selected"] = metrics_json(r.selected);
    json ax;
    ax["k"] = r.selected_config.k;
    json g = json::array();
    for (const auto& v : r.selected_config.g_per_layer) {
        if (v.has_value())
            g.push_back(*v);
        else
            g.push_back(nullptr);
    }
    ax["g_per_layer"] = std::move(g);
    j["selected"]["config"] = std::move(ax);
    j["budget_satisfied"] = r.budget_satisfied;
    j["evaluated_points"] = r.evaluated_points;
    j["front_size"] = r.front_size;
    const ReductionTable t = report_compare(r.baseline, r.selected);
    j["reduction"] = {{"multiplier_area_x", ratio_json(t.multiplier_area_x)},
                      {"total_area_x", ratio_json(t.total_area_x)},
                      {"power_x", ratio_json(t.power_x)},
                      {"logic_depth_x", ratio_json(t.depth_x)}};
    return j.dump(2) + "\n";
}

Report run_pipeline(const RunManifest& manifest) {
    check_topology(manifest.topology);
    const fs::path root(manifest.out_dir);
    fs::create_directories(root);
    write_text_file((root / "manifest.json").string(), manifest_to_json(manifest));

    if (manifest.seeds.size() == 1) return run_one(manifest, manifest.seeds[0], root);

    std::vector<Report> reports;
    for (uint32_t seed : manifest.seeds)
        reports.push_back(run_one(manifest, seed, root / ("seed_" + std::to_string(seed))));

    // Median-of-seeds summary for accuracy-sensitive checks.
    Report agg = reports.front();
    agg.baseline = median_metrics(reports, &Report::baseline);
    agg.retrained = median_metrics(reports, &Report::retrained);
    agg.selected = median_metrics(reports, &Report::selected);
    {
        std::vector<double> hc, ep;
        size_t satisfied = 0;
        for (const auto& r : reports) {
            hc.push_back(r.highest_cluster);
            ep.push_back(r.retrain_epochs);
            satisfied += r.budget_satisfied;
        }
        agg.highest_cluster = static_cast<int>(median(hc));
        agg.retrain_epochs = static_cast<int>(median(ep));
        agg.budget_satisfied = satisfied * 2 > reports.size();
    }
    write_text_file((root / "report.json").string(), report_to_json(agg));
    return agg;
}

}  // namespace axmlp
