#include "tsem/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace tsem {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_str(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_value(const std::string& tok, const std::string& where) {
    std::string t = trim(tok);
    try {
        std::size_t used = 0;
        double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        if (!std::isfinite(v)) throw DataError(where + ": non-finite value '" + t + "'");
        return v;
    } catch (const DataError&) {
        throw;
    } catch (const std::exception&) {
        throw DataError(where + ": cannot parse value '" + t + "'");
    }
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void MTSDataset::validate() const {
    if (instances.size() != labels.size()) throw DataError("dataset: instance/label count mismatch");
    if (n_features <= 0 || seq_length <= 0) throw DataError("dataset: non-positive dimensions");
    std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (static_cast<int>(instances[i].size()) != n_features * seq_length) {
            throw DataError("dataset: instance " + std::to_string(i) + " has wrong size");
        }
        for (double v : instances[i]) {
            if (!std::isfinite(v)) throw DataError("dataset: non-finite value in instance " + std::to_string(i));
        }
        int lbl = labels[i];
        if (lbl < 0 || lbl >= n_classes) {
            throw DataError("dataset: label " + std::to_string(lbl) + " outside [0," + std::to_string(n_classes) + ")");
        }
        seen[static_cast<std::size_t>(lbl)] = true;
    }
    if (!instances.empty()) {
        for (int k = 0; k < n_classes; ++k) {
            if (!seen[static_cast<std::size_t>(k)]) {
                // Contiguous label range: every class id below K must occur.
                throw DataError("dataset: class " + std::to_string(k) + " has no instances");
            }
        }
    }
}

MTSDataset load_uea_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_uea_text: cannot open " + path);
    MTSDataset ds;
    ds.provenance = path;
    std::vector<std::string> declared_labels;
    bool in_data = false;
    std::string line;
    int line_no = 0;
    std::map<std::string, int> label_index;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::string where = path + ":" + std::to_string(line_no);
        if (!in_data && (s[0] == '@')) {
            std::istringstream is(s);
            std::string directive;
            is >> directive;
            for (auto& c : directive) c = static_cast<char>(std::tolower(c));
            if (directive == "@data") {
                in_data = true;
            } else if (directive == "@classlabel") {
                std::string flag, lbl;
                is >> flag;
                while (is >> lbl) declared_labels.push_back(lbl);
            }
            // @problemName, @seriesLength, @dimensions etc. are informative;
            // actual shapes are cross-checked from the payload.
            continue;
        }
        if (!in_data) throw DataError(where + ": payload before @data directive");
        auto fields = split_str(s, ':');
        if (fields.size() < 2) throw DataError(where + ": expected channels ':' label");
        std::string label_tok = trim(fields.back());
        fields.pop_back();
        int d = static_cast<int>(fields.size());
        std::vector<std::vector<double>> channels;
        for (int c = 0; c < d; ++c) {
            auto toks = split_str(fields[static_cast<std::size_t>(c)], ',');
            std::vector<double> vals;
            vals.reserve(toks.size());
            for (const auto& t : toks) vals.push_back(parse_value(t, where));
            channels.push_back(std::move(vals));
        }
        int t_len = static_cast<int>(channels[0].size());
        for (int c = 1; c < d; ++c) {
            if (static_cast<int>(channels[static_cast<std::size_t>(c)].size()) != t_len) {
                throw DataError(where + ": ragged channel lengths");
            }
        }
        if (ds.instances.empty()) {
            ds.n_features = d;
            ds.seq_length = t_len;
        } else if (d != ds.n_features || t_len != ds.seq_length) {
            throw DataError(where + ": instance shape " + std::to_string(d) + "x" + std::to_string(t_len) +
                            " differs from " + std::to_string(ds.n_features) + "x" + std::to_string(ds.seq_length));
        }
        if (!declared_labels.empty() &&
            std::find(declared_labels.begin(), declared_labels.end(), label_tok) == declared_labels.end()) {
            throw DataError(where + ": unknown label '" + label_tok + "'");
        }
        auto it = label_index.find(label_tok);
        int lbl;
        if (it == label_index.end()) {
            lbl = static_cast<int>(label_index.size());
            label_index.emplace(label_tok, lbl);
        } else {
            lbl = it->second;
        }
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(d) * t_len);
        for (const auto& ch : channels) flat.insert(flat.end(), ch.begin(), ch.end());
        ds.instances.push_back(std::move(flat));
        ds.labels.push_back(lbl);
    }
    if (ds.instances.empty()) throw DataError(path + ": no instances found");
    ds.n_classes = static_cast<int>(label_index.size());
    ds.class_names.resize(static_cast<std::size_t>(ds.n_classes));
    for (const auto& [name, idx] : label_index) ds.class_names[static_cast<std::size_t>(idx)] = name;
    ds.validate();
    return ds;
}

void save_uea_text(const MTSDataset& ds, const std::string& path, const std::string& problem_name) {
    std::ofstream out(path);
    if (!out) throw DataError("save_uea_text: cannot write " + path);
    out << "@problemName " << problem_name << "\n";
    out << "@timeStamps false\n@missing false\n@univariate " << (ds.n_features == 1 ? "true" : "false") << "\n";
    out << "@dimensions " << ds.n_features << "\n@equalLength true\n@seriesLength " << ds.seq_length << "\n";
    out << "@classLabel true";
    for (int k = 0; k < ds.n_classes; ++k) {
        out << " " << (k < static_cast<int>(ds.class_names.size()) && !ds.class_names[k].empty()
                           ? ds.class_names[k]
                           : std::to_string(k));
    }
    out << "\n@data\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (int c = 0; c < ds.n_features; ++c) {
            for (int t = 0; t < ds.seq_length; ++t) {
                if (t) out << ",";
                out << format_value(ds.instances[i][static_cast<std::size_t>(c * ds.seq_length + t)]);
            }
            out << ":";
        }
        int lbl = ds.labels[i];
        out << (lbl < static_cast<int>(ds.class_names.size()) && !ds.class_names[lbl].empty()
                    ? ds.class_names[lbl]
                    : std::to_string(lbl))
            << "\n";
    }
}

MTSDataset load_csv(const std::string& dir) {
    fs::path root(dir);
    fs::path manifest = root / "labels.csv";
    std::ifstream mf(manifest);
    if (!mf) throw DataError("load_csv: missing manifest " + manifest.string());
    MTSDataset ds;
    ds.provenance = dir;
    std::string line;
    int line_no = 0;
    std::vector<std::pair<std::string, int>> entries;
    int max_label = -1;
    while (std::getline(mf, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty()) continue;
        if (line_no == 1 && s.rfind("instance_id", 0) == 0) continue;
        auto toks = split_str(s, ',');
        if (toks.size() != 2) throw DataError(manifest.string() + ":" + std::to_string(line_no) + ": expected id,label");
        int lbl = static_cast<int>(parse_value(toks[1], manifest.string() + ":" + std::to_string(line_no)));
        entries.emplace_back(trim(toks[0]), lbl);
        max_label = std::max(max_label, lbl);
    }
    if (entries.empty()) throw DataError("load_csv: empty manifest " + manifest.string());
    ds.n_classes = max_label + 1;
    for (const auto& [id, lbl] : entries) {
        fs::path f = root / (id + ".csv");
        std::ifstream in(f);
        if (!in) throw DataError("load_csv: missing instance file " + f.string());
        std::vector<double> flat;
        int cols = -1, rows = 0, ln = 0;
        std::string row;
        while (std::getline(in, row)) {
            ++ln;
            std::string rs = trim(row);
            if (rs.empty()) continue;
            auto toks = split_str(rs, ',');
            if (cols < 0) cols = static_cast<int>(toks.size());
            if (static_cast<int>(toks.size()) != cols) {
                throw DataError(f.string() + ":" + std::to_string(ln) + ": ragged row");
            }
            for (const auto& t : toks) flat.push_back(parse_value(t, f.string() + ":" + std::to_string(ln)));
            ++rows;
        }
        if (ds.instances.empty()) {
            ds.n_features = rows;
            ds.seq_length = cols;
        } else if (rows != ds.n_features || cols != ds.seq_length) {
            throw DataError(f.string() + ": shape differs from first instance");
        }
        ds.instances.push_back(std::move(flat));
        ds.labels.push_back(lbl);
    }
    for (int k = 0; k < ds.n_classes; ++k) ds.class_names.push_back(std::to_string(k));
    ds.validate();
    return ds;
}

void save_csv(const MTSDataset& ds, const std::string& dir) {
    fs::path root(dir);
    fs::create_directories(root);
    std::ofstream mf(root / "labels.csv");
    if (!mf) throw DataError("save_csv: cannot write manifest in " + dir);
    mf << "instance_id,label\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "instance_%05zu", i);
        mf << id << "," << ds.labels[i] << "\n";
        std::ofstream f(root / (std::string(id) + ".csv"));
        for (int c = 0; c < ds.n_features; ++c) {
            for (int t = 0; t < ds.seq_length; ++t) {
                if (t) f << ",";
                f << format_value(ds.instances[i][static_cast<std::size_t>(c * ds.seq_length + t)]);
            }
            f << "\n";
        }
    }
}

ChannelStats compute_channel_stats(const MTSDataset& ds) {
    ChannelStats st;
    st.mean.assign(static_cast<std::size_t>(ds.n_features), 0.0);
    st.std_dev.assign(static_cast<std::size_t>(ds.n_features), 1.0);
    if (ds.instances.empty()) return st;
    std::int64_t n = static_cast<std::int64_t>(ds.size()) * ds.seq_length;
    for (int c = 0; c < ds.n_features; ++c) {
        double s = 0.0;
        for (const auto& inst : ds.instances) {
            for (int t = 0; t < ds.seq_length; ++t) s += inst[static_cast<std::size_t>(c * ds.seq_length + t)];
        }
        double mean = s / static_cast<double>(n);
        double v = 0.0;
        for (const auto& inst : ds.instances) {
            for (int t = 0; t < ds.seq_length; ++t) {
                double d = inst[static_cast<std::size_t>(c * ds.seq_length + t)] - mean;
                v += d * d;
            }
        }
        double sd = std::sqrt(v / static_cast<double>(n));
        st.mean[static_cast<std::size_t>(c)] = mean;
        st.std_dev[static_cast<std::size_t>(c)] = sd < 1e-8 ? 1.0 : sd;  // constant-channel guard
    }
    return st;
}

MTSDataset apply_normalization(const MTSDataset& ds, const ChannelStats& stats) {
    if (static_cast<int>(stats.mean.size()) != ds.n_features) {
        throw DataError("apply_normalization: stats have " + std::to_string(stats.mean.size()) +
                        " channels, dataset has " + std::to_string(ds.n_features));
    }
    MTSDataset out = ds;
    out.stats = stats;
    for (auto& inst : out.instances) {
        for (int c = 0; c < ds.n_features; ++c) {
            for (int t = 0; t < ds.seq_length; ++t) {
                auto& v = inst[static_cast<std::size_t>(c * ds.seq_length + t)];
                v = (v - stats.mean[static_cast<std::size_t>(c)]) / stats.std_dev[static_cast<std::size_t>(c)];
            }
        }
    }
    return out;
}

MTSDataset z_normalize(const MTSDataset& ds) {
    return apply_normalization(ds, compute_channel_stats(ds));
}

double SyntheticSpec::bump_center(int k) const {
    int groups = (n_classes + n_features - 1) / n_features;
    return seq_length * (1.0 + 2.0 * (k / n_features)) / (2.0 * groups);
}

std::pair<int, int> SyntheticSpec::bump_window(int k) const {
    double c = bump_center(k);
    int lo = static_cast<int>(std::floor(c - 2.0 * bump_sigma));
    int hi = static_cast<int>(std::ceil(c + 2.0 * bump_sigma));
    return {lo, hi};
}

void SyntheticSpec::validate() const {
    if (n_features <= 0 || seq_length <= 0 || n_classes <= 0) throw UsageError("synthetic: non-positive dimensions");
    if (bump_sigma <= 0.0 || noise_sigma < 0.0) throw UsageError("synthetic: invalid sigma");
    if (n_instances < n_classes) throw UsageError("synthetic: need at least one instance per class");
    for (int k = 0; k < n_classes; ++k) {
        auto [lo, hi] = bump_window(k);
        if (lo < 0 || hi >= seq_length) {
            throw UsageError("synthetic: bump window for class " + std::to_string(k) + " [" +
                             std::to_string(lo) + "," + std::to_string(hi) + "] leaves [0," +
                             std::to_string(seq_length) + ")");
        }
    }
}

MTSDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    MTSDataset ds;
    ds.n_features = spec.n_features;
    ds.seq_length = spec.seq_length;
    ds.n_classes = spec.n_classes;
    ds.provenance = "synthetic";
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (int k = 0; k < spec.n_classes; ++k) ds.class_names.push_back(std::to_string(k));
    for (int i = 0; i < spec.n_instances; ++i) {
        int k = i % spec.n_classes;  // balanced classes
        std::vector<double> inst(static_cast<std::size_t>(spec.n_features) * spec.seq_length);
        if (spec.noise_sigma > 0.0) {
            for (auto& v : inst) v = noise(rng);
        }
        int ch = spec.bump_channel(k);
        double c = spec.bump_center(k);
        for (int t = 0; t < spec.seq_length; ++t) {
            double d = t - c;
            inst[static_cast<std::size_t>(ch * spec.seq_length + t)] +=
                spec.amplitude * std::exp(-d * d / (2.0 * spec.bump_sigma * spec.bump_sigma));
        }
        ds.instances.push_back(std::move(inst));
        ds.labels.push_back(k);
    }
    ds.validate();
    return ds;
}

std::pair<MTSDataset, MTSDataset> split(const MTSDataset& ds, double train_ratio, std::uint64_t seed) {
    if (train_ratio < 0.0 || train_ratio > 1.0) throw UsageError("split: ratio must be in [0,1]");
    MTSDataset tr, te;
    tr.n_features = te.n_features = ds.n_features;
    tr.seq_length = te.seq_length = ds.seq_length;
    tr.n_classes = te.n_classes = ds.n_classes;
    tr.class_names = te.class_names = ds.class_names;
    tr.provenance = ds.provenance + "/train";
    te.provenance = ds.provenance + "/test";
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.n_classes));
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    for (auto& idx : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(idx.size())));
        for (std::size_t j = 0; j < idx.size(); ++j) {
            auto& dst = j < n_train ? tr : te;
            dst.instances.push_back(ds.instances[idx[j]]);
            dst.labels.push_back(ds.labels[idx[j]]);
        }
    }
    return {tr, te};
}

}  // namespace tsem
