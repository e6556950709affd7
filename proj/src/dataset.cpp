#include "axmlp/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace axmlp {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset file: " + path);

    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split_line(line));
    }
    if (rows.empty()) throw InputError("dataset file is empty: " + path);

    // Header row: a first-row cell is non-numeric while the cell below it is
    // numeric. A column that is non-numeric throughout (string labels) is not
    // evidence of a header.
    double tmp;
    bool has_header = false;
    if (rows.size() > 1) {
        for (size_t c = 0; c < rows[0].size() && c < rows[1].size(); ++c)
            if (!parse_double(rows[0][c], tmp) && parse_double(rows[1][c], tmp)) {
                has_header = true;
                break;
            }
    }
    std::vector<std::string> header;
    size_t first_data = 0;
    if (has_header) {
        header = rows[0];
        first_data = 1;
        if (rows.size() == 1) throw InputError("dataset has a header but no data rows: " + path);
    }

    const size_t cols = rows[first_data].size();
    if (cols < 2) throw InputError("dataset needs at least one feature column and a label column");

    // Resolve the label column: name, 0-based index, or "last".
    size_t label_idx;
    if (label_column == "last" || label_column.empty()) {
        label_idx = cols - 1;
    } else {
        auto it = std::find(header.begin(), header.end(), label_column);
        if (it != header.end()) {
            label_idx = static_cast<size_t>(it - header.begin());
        } else {
            int idx = -1;
            auto res = std::from_chars(label_column.data(), label_column.data() + label_column.size(), idx);
            if (res.ec != std::errc{} || res.ptr != label_column.data() + label_column.size())
                throw InputError("label column '" + label_column + "' not found in " + path);
            if (idx < 0 || static_cast<size_t>(idx) >= cols)
                throw InputError("label column index " + label_column + " out of range (file has " +
                                 std::to_string(cols) + " columns)");
            label_idx = static_cast<size_t>(idx);
        }
    }

    Dataset ds;
    std::map<std::string, int> label_ids;  // dense re-index, first-appearance order
    for (size_t r = first_data; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() != cols)
            throw InputError("row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                             " columns, expected " + std::to_string(cols));
        std::vector<double> feat;
        feat.reserve(cols - 1);
        for (size_t c = 0; c < cols; ++c) {
            if (c == label_idx) continue;
            double v;
            if (!parse_double(cells[c], v))
                throw InputError("non-numeric feature cell '" + cells[c] + "' at row " +
                                 std::to_string(r + 1) + ", column " + std::to_string(c + 1));
            feat.push_back(v);
        }
        auto [it, inserted] = label_ids.try_emplace(cells[label_idx], static_cast<int>(label_ids.size()));
        (void)inserted;
        ds.features.push_back(std::move(feat));
        ds.labels.push_back(it->second);
    }

    ds.num_classes = static_cast<int>(label_ids.size());
    if (ds.num_classes < 2)
        throw InputError("dataset has fewer than 2 classes: " + path);

    if (!header.empty()) {
        for (size_t c = 0; c < cols; ++c)
            if (c != label_idx) ds.feature_names.push_back(header[c]);
    }
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, uint32_t seed) {
    if (ds.size() == 0) throw InputError("cannot split an empty dataset");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InputError("train fraction must be in (0, 1)");

    std::vector<size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    Rng rng(seed);
    rng_shuffle(rng, idx);

    const size_t n_train = static_cast<size_t>(
        iround_half_up(train_fraction * static_cast<double>(ds.size())));

    Dataset train, test;
    train.num_classes = test.num_classes = ds.num_classes;
    train.feature_names = test.feature_names = ds.feature_names;
    for (size_t i = 0; i < idx.size(); ++i) {
        Dataset& dst = (i < n_train) ? train : test;
        dst.features.push_back(ds.features[idx[i]]);
        dst.labels.push_back(ds.labels[idx[i]]);
    }
    return {std::move(train), std::move(test)};
}

namespace {

void apply_normalization(Dataset& ds, const NormalizationParams& p) {
    for (auto& row : ds.features) {
        for (size_t c = 0; c < row.size(); ++c) {
            double range = p.max[c] - p.min[c];
            double v = (range > 0.0) ? (row[c] - p.min[c]) / range : 0.0;
            row[c] = std::clamp(v, 0.0, 1.0);
        }
    }
}

}  // namespace

NormalizedSplit normalize(const Dataset& train, const Dataset& test) {
    if (train.size() == 0) throw InputError("cannot normalize with an empty training split");
    const size_t nf = train.num_features();

    NormalizationParams p;
    p.min.assign(nf, 0.0);
    p.max.assign(nf, 0.0);
    for (size_t c = 0; c < nf; ++c) {
        double lo = train.features[0][c], hi = train.features[0][c];
        for (const auto& row : train.features) {
            lo = std::min(lo, row[c]);
            hi = std::max(hi, row[c]);
        }
        p.min[c] = lo;
        p.max[c] = hi;
    }

    NormalizedSplit out{train, test, std::move(p)};
    apply_normalization(out.train, out.params);
    apply_normalization(out.test, out.params);
    return out;
}

QuantizedDataset quantize_inputs(const Dataset& ds, int input_bits) {
    if (input_bits < 1) throw InputError("input_bits must be >= 1");
    const uint32_t q_max = (1u << input_bits) - 1u;

    QuantizedDataset out;
    out.input_bits = input_bits;
    out.num_classes = ds.num_classes;
    out.labels = ds.labels;
    out.features.reserve(ds.size());
    for (const auto& row : ds.features) {
        std::vector<uint32_t> q(row.size());
        for (size_t c = 0; c < row.size(); ++c) {
            int64_t v = iround_half_up(row[c] * static_cast<double>(q_max));
            q[c] = static_cast<uint32_t>(std::clamp<int64_t>(v, 0, q_max));
        }
        out.features.push_back(std::move(q));
    }
    return out;
}

}  // namespace axmlp
