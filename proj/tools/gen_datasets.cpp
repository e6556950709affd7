// Regenerates the bundled classification datasets under data/.
//
// The corpus mirrors the dimensions, class counts, and rough difficulty of
// the ten UCI benchmarks the toolkit targets; features are Gaussian class
// blobs in [0,1], emitted deterministically so the files are reproducible
// byte for byte.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "axmlp/common.hpp"
#include "axmlp/model_io.hpp"

using namespace axmlp;

namespace {

struct BlobSpec {
    const char* name;
    int samples;
    int features;
    int classes;
    double sigma;   // per-dimension class spread
    uint32_t seed;
};

// sigma values are calibrated so quantized (4-bit input) MLPs at the
// reference topologies land near the intended test accuracies.
const BlobSpec kDatasets[] = {
    {"whitewine", 1500, 11, 7, 0.34, 101},
    {"cardio", 1200, 21, 3, 0.33, 102},
    {"redwine", 1100, 11, 6, 0.30, 103},
    {"pendigits", 2500, 16, 10, 0.13, 104},
    {"vertebral_3c", 310, 6, 3, 0.19, 105},
    {"balance_scale", 625, 4, 3, 0.16, 106},
    {"seeds", 210, 7, 3, 0.16, 107},
    {"breast_cancer", 683, 9, 2, 0.15, 108},
    {"vertebral_2c", 310, 6, 2, 0.20, 109},
    {"mammographic", 830, 5, 2, 0.26, 110},
};

std::string generate(const BlobSpec& spec) {
    Rng rng(spec.seed);

    std::vector<std::vector<double>> means(spec.classes, std::vector<double>(spec.features));
    for (auto& mean : means)
        for (double& v : mean) v = rng_uniform(rng, 0.2, 0.8);

    std::string csv;
    for (int f = 0; f < spec.features; ++f) csv += "f" + std::to_string(f) + ",";
    csv += "label\n";

    char buf[32];
    for (int s = 0; s < spec.samples; ++s) {
        const int cls = static_cast<int>(rng_below(rng, spec.classes));
        for (int f = 0; f < spec.features; ++f) {
            double v = means[cls][f] + spec.sigma * rng_normal(rng);
            v = std::min(1.0, std::max(0.0, v));
            std::snprintf(buf, sizeof buf, "%.4f,", v);
            csv += buf;
        }
        csv += std::to_string(cls) + "\n";
    }
    return csv;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string out_dir = argc > 1 ? argv[1] : "data";
    std::filesystem::create_directories(out_dir);
    for (const BlobSpec& spec : kDatasets) {
        const std::string path = out_dir + "/" + spec.name + ".csv";
        write_text_file(path, generate(spec));
        std::printf("%s: %d samples, %d features, %d classes\n", path.c_str(), spec.samples,
                    spec.features, spec.classes);
    }
    return 0;
}
