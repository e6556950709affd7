// Command-line front end: train, cluster, retrain, axdse, emit-rtl, and the
// manifest-driven end-to-end run.

#include <cstdlib>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "axmlp/dse.hpp"
#include "axmlp/model_io.hpp"
#include "axmlp/netlist.hpp"
#include "axmlp/pipeline.hpp"

using namespace axmlp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnsatisfied = 1;
constexpr int kExitInputError = 2;
constexpr int kExitInternalError = 3;

struct DataOptions {
    std::string path;
    std::string label_column = "last";
    double split_fraction = 0.7;
    uint32_t seed = 1;
    int input_bits = 4;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
    cmd->add_option("--data", d.path, "dataset CSV")->required();
    cmd->add_option("--label-col", d.label_column, "label column (name, index, or 'last')");
    cmd->add_option("--split", d.split_fraction, "train fraction");
    cmd->add_option("--seed", d.seed, "split/training seed");
    cmd->add_option("--input-bits", d.input_bits, "input quantization bits");
}

struct SplitData {
    QuantizedDataset train;
    QuantizedDataset test;
};

SplitData prepare(const DataOptions& d) {
    Dataset ds = load_csv(d.path, d.label_column);
    auto [train, test] = split(ds, d.split_fraction, d.seed);
    NormalizedSplit norm = normalize(train, test);
    return {quantize_inputs(norm.train, d.input_bits), quantize_inputs(norm.test, d.input_bits)};
}

MultiplierAreaLut full_lut() {
    std::set<int> widths;
    for (int w = 1; w <= 32; ++w) widths.insert(w);
    return build_lut(widths);
}

int cmd_train(const DataOptions& d, const std::vector<int>& topology, const TrainConfig& tc,
              const std::string& out) {
    SplitData data = prepare(d);
    FloatMLP fm = train_float(data.train, topology, tc);
    QuantizedMLP qm = quantize(fm, d.input_bits);
    write_text_file(out, model_to_json(qm));
    std::cout << "train accuracy " << accuracy(qm, data.train) << ", test accuracy "
              << accuracy(qm, data.test) << "\n";
    return kExitOk;
}

int cmd_cluster(int input_bits, const std::string& lut_out, const std::string& clusters_out) {
    MultiplierAreaLut lut = full_lut();
    Clustering clustering = cluster_coefficients(lut, 4, input_bits);
    if (!lut_out.empty()) write_text_file(lut_out, lut_to_json(lut));
    if (!clusters_out.empty()) write_text_file(clusters_out, clustering_to_json(clustering));
    for (int c = 0; c < clustering.num_clusters; ++c) {
        std::cout << "C" << c << " (mean area " << clustering.mean_area[c] << "):";
        for (int mag : clustering.members(c)) std::cout << ' ' << mag;
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_retrain(const DataOptions& d, const std::string& model_path, const RetrainConfig& rc,
                const std::string& out, std::string history_out) {
    if (history_out.empty()) history_out = out + ".history.csv";
    SplitData data = prepare(d);
    QuantizedMLP baseline = model_from_json(read_text_file(model_path)).model;
    MultiplierAreaLut lut = full_lut();
    Clustering clustering = cluster_coefficients(lut);

    RetrainResult res = retrain(baseline, data.train, clustering, lut, rc);
    write_text_file(out, model_to_json(res.model));
    if (!history_out.empty()) {
        std::string csv = "stage,epoch,lr,score,train_acc,mult_area,changed\n";
        for (const auto& row : res.history) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%.6f,%.9g,%d\n", row.stage, row.epoch,
                          row.lr, row.score, row.train_accuracy, row.multiplier_area,
                          row.coefficients_changed ? 1 : 0);
            csv += buf;
        }
        write_text_file(history_out, csv);
    }
    std::cout << "baseline train accuracy " << res.baseline_train_accuracy << "\n"
              << "retrained train accuracy " << res.train_accuracy << " (highest cluster C"
              << res.highest_cluster << ", " << res.epochs << " epochs)\n";
    return res.satisfied ? kExitOk : kExitUnsatisfied;
}

int cmd_axdse(const DataOptions& d, const std::string& model_path, double budget, int cap, int jobs,
              const std::string& out, std::string points_out, const std::string& sig_out) {
    if (points_out.empty()) points_out = out + ".points.csv";  // Fig-5 style scatter data
    SplitData data = prepare(d);
    QuantizedMLP model = model_from_json(read_text_file(model_path)).model;
    SignificanceMap sig = build_significance(model, data.train);
    if (!sig_out.empty()) write_text_file(sig_out, significance_to_json(sig));

    auto configs = enumerate_configs(model, sig, cap);
    auto points = evaluate_all(model, sig, configs, data.train, data.test, jobs);
    ParetoFront front = pareto(points);
    write_text_file(out, design_points_csv(front));
    if (!points_out.empty()) write_text_file(points_out, design_points_csv(points));

    const double baseline_acc = accuracy(model, data.train);
    Selection sel = select(front, budget, baseline_acc);
    std::cout << "evaluated " << points.size() << " configs, front size " << front.size() << "\n"
              << "selected k=" << sel.point.config.k << " train accuracy "
              << sel.point.train_accuracy << " total area " << sel.point.area.total_area
              << (sel.satisfied ? "" : " (budget unsatisfied)") << "\n";
    return sel.satisfied ? kExitOk : kExitUnsatisfied;
}

int cmd_emit_rtl(const std::string& model_path, const std::string& ax_path,
                 const std::string& sig_path, const std::string& module_name,
                 const std::string& out, const std::string& tb_out, const std::string& ir_out,
                 int tb_vectors, uint32_t seed) {
    LoadedModel loaded = model_from_json(read_text_file(model_path));
    if (!ax_path.empty()) loaded.ax = ax_config_from_json(read_text_file(ax_path));

    SignificanceMap sig;
    const SignificanceMap* sig_ptr = nullptr;
    const AxConfig* ax_ptr = nullptr;
    if (loaded.ax.has_value()) {
        if (sig_path.empty())
            throw InputError("a truncation config needs --sig for the per-product significances");
        sig = significance_from_json(read_text_file(sig_path));
        sig_ptr = &sig;
        ax_ptr = &*loaded.ax;
    }

    NetlistIR ir = lower(loaded.model, sig_ptr, ax_ptr);
    write_text_file(out, emit_verilog(ir, module_name));
    if (!ir_out.empty()) write_text_file(ir_out, ir_to_json(ir));

    if (!tb_out.empty()) {
        Rng rng(seed);
        std::vector<std::pair<std::vector<uint32_t>, int>> vectors;
        const uint32_t max_in = (1u << loaded.model.input_bits) - 1u;
        for (int t = 0; t < tb_vectors; ++t) {
            std::vector<uint32_t> x(loaded.model.topology.front());
            for (auto& v : x) v = rng_below(rng, max_in + 1);
            vectors.emplace_back(x, interpret(ir, x).class_index);
        }
        write_text_file(tb_out, emit_testbench(ir, module_name, vectors));
    }
    std::cout << "emitted " << ir.nodes.size() << " netlist nodes, logic depth "
              << logic_depth(ir) << "\n";
    return kExitOk;
}

int cmd_run(const std::string& manifest_path, int seeds_override, int jobs_override) {
    RunManifest mf = manifest_from_json(read_text_file(manifest_path));
    if (seeds_override > 0) {
        const uint32_t base = mf.seeds.front();
        mf.seeds.clear();
        for (int i = 0; i < seeds_override; ++i) mf.seeds.push_back(base + i);
    }
    if (jobs_override > 0) mf.jobs = jobs_override;

    Report rep = run_pipeline(mf);
    std::cout << reduction_text(report_compare(rep.baseline, rep.selected));
    std::cout << "baseline train/test accuracy " << rep.baseline.train_accuracy << "/"
              << rep.baseline.test_accuracy << "\n"
              << "selected train/test accuracy " << rep.selected.train_accuracy << "/"
              << rep.selected.test_accuracy << "\n"
              << "budget " << (rep.budget_satisfied ? "satisfied" : "NOT satisfied") << "\n";
    return rep.budget_satisfied ? kExitOk : kExitUnsatisfied;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bespoke approximate MLP circuit toolkit"};
    app.require_subcommand(1);

    DataOptions data;
    std::vector<int> topology;
    TrainConfig tc;
    RetrainConfig rc;
    std::string model_path, out_path, tb_path, ir_path, history_path, points_path, sig_path;
    std::string module_name = "axmlp_top";
    std::string manifest_path;
    double budget = 0.02;
    int cap = 8, jobs = 0, tb_vectors = 20, seeds_override = 0;
    int cluster_bits = 4;

    auto* train = app.add_subcommand("train", "train and quantize a model");
    add_data_options(train, data);
    train->add_option("--topology", topology, "layer sizes, e.g. 9 3 2")->required()->expected(-2);
    train->add_option("--epochs", tc.epochs, "training epochs");
    train->add_option("--lr", tc.lr, "learning rate");
    train->add_option("--batch", tc.batch, "mini-batch size");
    train->add_option("--out", out_path, "model JSON output")->required();

    auto* cluster = app.add_subcommand("cluster", "build the multiplier area LUT and clusters");
    cluster->add_option("--input-bits", cluster_bits, "input width used for clustering");
    cluster->add_option("--emit", out_path, "LUT JSON output");
    cluster->add_option("--emit-clusters", history_path, "clustering JSON output");

    auto* retrain_cmd = app.add_subcommand("retrain", "printing-friendly retraining");
    add_data_options(retrain_cmd, data);
    retrain_cmd->add_option("--model", model_path, "baseline model JSON")->required();
    retrain_cmd->add_option("--threshold", rc.threshold, "accuracy-loss threshold T");
    retrain_cmd->add_option("--alpha", rc.alpha, "score weight alpha");
    retrain_cmd->add_option("--epochs-per-stage", rc.epochs_per_stage, "epochs per cluster stage");
    retrain_cmd->add_option("--lr", rc.lr, "retraining learning rate");
    retrain_cmd->add_option("--batch", rc.batch, "mini-batch size");
    retrain_cmd->add_option("--out", out_path, "retrained model JSON output")->required();
    retrain_cmd->add_option("--history", history_path, "score-history CSV output");

    auto* axdse = app.add_subcommand("axdse", "exhaustive truncation design-space exploration");
    add_data_options(axdse, data);
    axdse->add_option("--model", model_path, "retrained model JSON")->required();
    axdse->add_option("--budget", budget, "remaining accuracy-loss budget");
    axdse->add_option("--cap", cap, "max threshold candidates per layer");
    axdse->add_option("--jobs", jobs, "parallel evaluation threads");
    axdse->add_option("--out", out_path, "Pareto front CSV output")->required();
    axdse->add_option("--points", points_path, "all evaluated points CSV (scatter data)");
    axdse->add_option("--sig", sig_path, "significance map JSON output");

    std::string ax_path;
    auto* emit = app.add_subcommand("emit-rtl", "lower a model to Verilog");
    emit->add_option("--model", model_path, "model JSON (may embed an ax config)")->required();
    emit->add_option("--ax-config", ax_path, "ax config JSON (overrides the embedded one)");
    emit->add_option("--sig", sig_path, "significance map JSON (needed with an ax config)");
    emit->add_option("--module", module_name, "Verilog module name");
    emit->add_option("--out", out_path, "Verilog output")->required();
    emit->add_option("--tb", tb_path, "self-checking testbench output");
    emit->add_option("--tb-vectors", tb_vectors, "random testbench vector count");
    emit->add_option("--seed", data.seed, "testbench vector seed");
    emit->add_option("--ir", ir_path, "netlist JSON dump");

    auto* run = app.add_subcommand("run", "full pipeline from a manifest");
    run->add_option("manifest", manifest_path, "run manifest JSON")->required();
    run->add_option("--seeds", seeds_override, "median-of-n seeds (overrides the manifest)");
    run->add_option("--jobs", jobs, "parallel DSE threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            tc.seed = data.seed;
            return cmd_train(data, topology, tc, out_path);
        }
        if (cluster->parsed()) return cmd_cluster(cluster_bits, out_path, history_path);
        if (retrain_cmd->parsed()) {
            rc.seed = data.seed;
            return cmd_retrain(data, model_path, rc, out_path, history_path);
        }
        if (axdse->parsed())
            return cmd_axdse(data, model_path, budget, cap, jobs, out_path, points_path, sig_path);
        if (emit->parsed())
            return cmd_emit_rtl(model_path, ax_path, sig_path, module_name, out_path, tb_path,
                                ir_path, tb_vectors, data.seed);
        if (run->parsed()) return cmd_run(manifest_path, seeds_override, jobs);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternalError;
    }
    return kExitOk;
}
