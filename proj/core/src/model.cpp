#include "tsem/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace tsem {

namespace {

TensorPtr same_pad_time_1d(Tape* tape, const TensorPtr& x, int w) {
    int lo = (w - 1) / 2, hi = w - 1 - lo;
    return (lo == 0 && hi == 0) ? x : pad1d(tape, x, lo, hi);
}

TensorPtr same_pad_time_2d(Tape* tape, const TensorPtr& x, int w) {
    int lo = (w - 1) / 2, hi = w - 1 - lo;
    return (lo == 0 && hi == 0) ? x : pad2d(tape, x, 0, 0, lo, hi);
}

// Padding so a stride-2 time conv yields ceil(T/2).
TensorPtr halving_pad_time_2d(Tape* tape, const TensorPtr& x, int w) {
    int t = x->dim(2);
    int t_out = (t + 1) / 2;
    int total = std::max(0, 2 * (t_out - 1) + w - t);
    int lo = total / 2, hi = total - lo;
    return (lo == 0 && hi == 0) ? x : pad2d(tape, x, 0, 0, lo, hi);
}

std::uint64_t fnv1a(std::uint64_t h, const void* ptr, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(ptr);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

void write_raw(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::ifstream& in, void* p, std::size_t n, const std::string& what) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw DataError("checkpoint: truncated file while reading " + what);
}

}  // namespace

std::string arch_name(Arch a) {
    switch (a) {
        case Arch::MtexCnn: return "mtexcnn";
        case Arch::Xcm: return "xcm";
        case Arch::Tsem: return "tsem";
    }
    return "?";
}

Arch arch_from_name(const std::string& name) {
    if (name == "mtexcnn" || name == "mtex-cnn") return Arch::MtexCnn;
    if (name == "xcm") return Arch::Xcm;
    if (name == "tsem") return Arch::Tsem;
    throw UsageError("unknown architecture '" + name + "' (expected mtexcnn|xcm|tsem)");
}

int ModelConfig::window_size() const {
    int w = static_cast<int>(std::llround(window_fraction * seq_length));
    w = std::clamp(w, 1, 500);
    return std::min(w, seq_length);
}

void ModelConfig::validate() const {
    if (n_features < 1 || seq_length < 1 || n_classes < 2) {
        throw UsageError("model config: need D >= 1, T >= 1, K >= 2");
    }
    if (window_fraction <= 0.0 || window_fraction > 1.0) {
        throw UsageError("model config: window_fraction must be in (0,1]");
    }
    if (filters_2d < 1 || filters_1d < 1) throw UsageError("model config: filter counts must be positive");
}

Model Model::build(const ModelConfig& config) {
    config.validate();
    Model m;
    m.config_ = config;
    int d = config.n_features, k = config.n_classes;
    int w = config.window_size();
    int f2 = config.filters_2d, f1 = config.filters_1d;
    std::mt19937_64 rng(config.seed);

    auto param = [&m](const std::string& name, std::vector<int> shape) {
        auto t = Tensor::zeros(std::move(shape), true);
        m.params_[name] = t;
        return t;
    };
    auto conv_param = [&](const std::string& name, std::vector<int> shape, int fan_in) {
        auto t = param(name + ".w", std::move(shape));
        init_uniform_fan_in(t, fan_in, rng);
        param(name + ".b", {t->dim(0)});
    };

    switch (config.arch) {
        case Arch::Xcm:
            conv_param("b1.conv", {f2, 1, 1, w}, w);
            conv_param("b1.red", {1, f2, 1, 1}, f2);
            conv_param("b2.conv", {f1, d, w}, d * w);
            conv_param("b2.red", {1, f1, 1}, f1);
            conv_param("fin.conv", {f1, d + 1, w}, (d + 1) * w);
            m.bn_states_["b1.bn"] = {};
            m.bn_states_["b2.bn"] = {};
            break;
        case Arch::Tsem: {
            conv_param("b1.conv", {f2, 1, 1, w}, w);
            auto lw = param("lstm.w", {4 * w, d + w});
            init_uniform_fan_in(lw, d + w, rng);
            auto lb = param("lstm.b", {4 * w});
            for (int i = 0; i < w; ++i) lb->data[static_cast<std::size_t>(w + i)] = 1.0;  // forget gate
            // Full-height kernel: same padding keeps (D,T) while letting the
            // head stay sensitive to which feature row activates.
            conv_param("fin.conv", {f1, f2, d, w}, f2 * d * w);
            m.bn_states_["b1.bn"] = {};
            break;
        }
        case Arch::MtexCnn:
            conv_param("c1", {f2, 1, 1, w}, w);
            conv_param("c2", {f2, f2, 1, w}, f2 * w);
            conv_param("red", {1, f2, 1, 1}, f2);
            conv_param("t1", {f1, 1, w}, w);
            conv_param("t2", {f1, f1, w}, f1 * w);
            break;
    }
    auto dw = param("dense.w", {k, f1});
    init_uniform_fan_in(dw, f1, rng);
    param("dense.b", {k});
    return m;
}

MapLayout Model::map_layout() const {
    switch (config_.arch) {
        case Arch::Tsem: return MapLayout::FeatureTime;
        case Arch::Xcm: return MapLayout::TimeOnly;
        case Arch::MtexCnn: return MapLayout::FlatStrided;
    }
    return MapLayout::FeatureTime;
}

int Model::map_time_extent() const {
    if (config_.arch == Arch::MtexCnn) {
        int t1 = (config_.seq_length + 1) / 2;
        return (t1 + 1) / 2;
    }
    return config_.seq_length;
}

ForwardResult Model::head(TensorPtr pre_gap, Tape* tape, ForwardResult res, const ForwardOptions& o) const {
    if (o.ablate_pre_gap_channel >= 0) {
        if (o.ablate_pre_gap_channel >= pre_gap->dim(0)) {
            throw UsageError("ablation channel " + std::to_string(o.ablate_pre_gap_channel) + " out of range");
        }
        auto mask = Tensor::full(pre_gap->shape, 1.0);
        int inner = pre_gap->size() / pre_gap->dim(0);
        for (int i = 0; i < inner; ++i) mask->data[static_cast<std::size_t>(o.ablate_pre_gap_channel * inner + i)] = 0.0;
        pre_gap = mul(tape, pre_gap, mask);
    }
    res.activations["pre_gap_maps"] = pre_gap;
    auto pooled = global_average_pool(tape, pre_gap);
    auto logits = add(tape, matvec(tape, params_.at("dense.w"), pooled), params_.at("dense.b"));
    auto probs = softmax(tape, logits);
    res.activations["logits"] = logits;
    res.activations["probs"] = probs;
    res.logits = logits;
    res.probs = probs;
    return res;
}

ForwardResult Model::forward_xcm(const TensorPtr& x, Tape* tape, const ForwardOptions& o) const {
    int d = config_.n_features, t = config_.seq_length, w = config_.window_size();
    auto mode = o.train_mode ? BatchNormMode::Train : BatchNormMode::Infer;
    ForwardResult res;

    // Branch 1: 2-D over (D,T), kernel 1 x w, T preserved.
    auto x2 = reshape(tape, x, {1, d, t});
    // Bias applied after normalization: it acts as the learned shift the
    // normalization would otherwise cancel.
    auto a1 = conv2d_forward(tape, same_pad_time_2d(tape, x2, w), params_.at("b1.conv.w"), 0, 0, 1, 1);
    a1 = batchnorm_forward(tape, a1, 0, mode, bn_states_["b1.bn"]);
    a1 = relu(tape, add_channel_bias(tape, a1, params_.at("b1.conv.b")));
    res.activations["branch1_maps"] = a1;
    auto r1 = conv2d_forward(tape, a1, params_.at("b1.red.w"), 0, 0, 1, 1);
    r1 = add_channel_bias(tape, r1, params_.at("b1.red.b"));  // (1,D,T)

    // Branch 2: 1-D over time with D input channels.
    auto a2 = conv1d_forward(tape, same_pad_time_1d(tape, x, w), params_.at("b2.conv.w"), 0, 1);
    a2 = batchnorm_forward(tape, a2, 0, mode, bn_states_["b2.bn"]);
    a2 = relu(tape, add_channel_bias(tape, a2, params_.at("b2.conv.b")));
    auto r2 = conv1d_forward(tape, a2, params_.at("b2.red.w"), 0, 1);
    r2 = add_channel_bias(tape, r2, params_.at("b2.red.b"));  // (1,T)
    res.activations["temporal_vector"] = reshape(tape, r2, {t});

    // Concatenate the temporal map as an extra feature row: (D+1,T).
    auto cat = concat0(tape, {reshape(tape, r1, {d, t}), r2});
    res.activations["concat_maps"] = cat;

    auto fin = conv1d_forward(tape, same_pad_time_1d(tape, cat, w), params_.at("fin.conv.w"), 0, 1);
    fin = add_channel_bias(tape, fin, params_.at("fin.conv.b"));
    fin = relu(tape, fin);  // (f1,T)
    return head(fin, tape, std::move(res), o);
}

ForwardResult Model::forward_tsem(const TensorPtr& x, Tape* tape, const ForwardOptions& o) const {
    int d = config_.n_features, t = config_.seq_length, w = config_.window_size();
    auto mode = o.train_mode ? BatchNormMode::Train : BatchNormMode::Infer;
    ForwardResult res;

    // Branch 1 as in XCM, but all filters_2d maps are kept for fusion.
    auto x2 = reshape(tape, x, {1, d, t});
    auto a1 = conv2d_forward(tape, same_pad_time_2d(tape, x2, w), params_.at("b1.conv.w"), 0, 0, 1, 1);
    a1 = batchnorm_forward(tape, a1, 0, mode, bn_states_["b1.bn"]);
    a1 = relu(tape, add_channel_bias(tape, a1, params_.at("b1.conv.b")));
    res.activations["branch1_prefuse"] = a1;

    // Branch 2: LSTM over the raw sequence, hidden size = window size;
    // final hidden state upsampled to T and rectified into the gate.
    TensorPtr gate;
    if (o.gate_override) {
        if (static_cast<int>(o.gate_override->size()) != t) {
            throw UsageError("gate override must have length T=" + std::to_string(t));
        }
        gate = Tensor::of({t}, *o.gate_override);
    } else {
        LstmParams lp{params_.at("lstm.w"), params_.at("lstm.b"), w};
        auto lstm_out = lstm_forward(tape, transpose2d(tape, x), lp);
        gate = relu(tape, upsample_linear_1d(tape, lstm_out.final_hidden, t));
    }
    res.activations["temporal_vector"] = gate;

    auto fused = mul_time_gate(tape, a1, gate);  // (f2,D,T)
    res.activations["branch1_maps"] = fused;

    int dlo = (d - 1) / 2, dhi = d - 1 - dlo;
    int tlo = (w - 1) / 2, thi = w - 1 - tlo;
    auto fin = conv2d_forward(tape, pad2d(tape, fused, dlo, dhi, tlo, thi),
                              params_.at("fin.conv.w"), 0, 0, 1, 1);
    fin = add_channel_bias(tape, fin, params_.at("fin.conv.b"));
    fin = relu(tape, fin);  // (f1,D,T), T preserved for CAM alignment
    if (fin->dim(2) != t) throw DimensionError("tsem: pre-GAP maps lost the time extent");
    return head(fin, tape, std::move(res), o);
}

ForwardResult Model::forward_mtexcnn(const TensorPtr& x, Tape* tape, const ForwardOptions& o) const {
    int d = config_.n_features, t = config_.seq_length, w = config_.window_size();
    ForwardResult res;

    // Two stride-2 time convolutions, then 1x1 reduction.
    auto x2 = reshape(tape, x, {1, d, t});
    auto c1 = conv2d_forward(tape, halving_pad_time_2d(tape, x2, w), params_.at("c1.w"), 0, 0, 1, 2);
    c1 = relu(tape, add_channel_bias(tape, c1, params_.at("c1.b")));
    auto c2 = conv2d_forward(tape, halving_pad_time_2d(tape, c1, w), params_.at("c2.w"), 0, 0, 1, 2);
    c2 = relu(tape, add_channel_bias(tape, c2, params_.at("c2.b")));
    res.activations["branch1_maps"] = c2;  // (f2, D, T/4)
    auto red = conv2d_forward(tape, c2, params_.at("red.w"), 0, 0, 1, 1);
    red = relu(tape, add_channel_bias(tape, red, params_.at("red.b")));  // (1, D, T/4)

    // Flatten features into one sequence and run the 1-D stage.
    int t4 = red->dim(2);
    auto seq = reshape(tape, red, {1, d * t4});
    auto t1 = conv1d_forward(tape, same_pad_time_1d(tape, seq, w), params_.at("t1.w"), 0, 1);
    t1 = relu(tape, add_channel_bias(tape, t1, params_.at("t1.b")));
    auto t2 = conv1d_forward(tape, same_pad_time_1d(tape, t1, w), params_.at("t2.w"), 0, 1);
    t2 = relu(tape, add_channel_bias(tape, t2, params_.at("t2.b")));  // (f1, D*T/4)
    return head(t2, tape, std::move(res), o);
}

ForwardResult Model::forward(const TensorPtr& instance, Tape* tape, const ForwardOptions& opts) const {
    if (instance->ndim() != 2 || instance->dim(0) != config_.n_features ||
        instance->dim(1) != config_.seq_length) {
        throw DimensionError("forward: instance " + shape_to_string(instance->shape) + " does not match config (" +
                             std::to_string(config_.n_features) + "," + std::to_string(config_.seq_length) + ")");
    }
    switch (config_.arch) {
        case Arch::Xcm: return forward_xcm(instance, tape, opts);
        case Arch::Tsem: return forward_tsem(instance, tape, opts);
        case Arch::MtexCnn: return forward_mtexcnn(instance, tape, opts);
    }
    throw UsageError("forward: bad architecture");
}

std::vector<double> Model::predict_proba(const TensorPtr& instance) const {
    return forward(instance, nullptr).probs->data;
}

int Model::predict_class(const TensorPtr& instance) const {
    auto p = predict_proba(instance);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<TensorPtr> Model::parameters() const {
    std::vector<TensorPtr> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) out.push_back(t);
    return out;
}

std::uint64_t Model::parameter_checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& [name, t] : params_) {
        h = fnv1a(h, name.data(), name.size());
        h = fnv1a(h, t->data.data(), t->data.size() * sizeof(double));
    }
    return h;
}

std::int64_t Model::parameter_count() const {
    std::int64_t n = 0;
    for (const auto& [name, t] : params_) n += t->size();
    return n;
}

namespace {
constexpr char kMagic[4] = {'T', 'S', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void Model::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot write " + path);
    write_raw(out, kMagic, 4);
    write_raw(out, &kVersion, sizeof(kVersion));
    std::uint8_t arch = static_cast<std::uint8_t>(config_.arch);
    write_raw(out, &arch, 1);
    std::int32_t dims[5] = {config_.n_features, config_.seq_length, config_.n_classes,
                            config_.filters_2d, config_.filters_1d};
    write_raw(out, dims, sizeof(dims));
    write_raw(out, &config_.window_fraction, sizeof(double));
    write_raw(out, &config_.seed, sizeof(std::uint64_t));

    std::uint32_t n_params = static_cast<std::uint32_t>(params_.size());
    write_raw(out, &n_params, sizeof(n_params));
    for (const auto& [name, t] : params_) {
        std::uint16_t len = static_cast<std::uint16_t>(name.size());
        write_raw(out, &len, sizeof(len));
        write_raw(out, name.data(), name.size());
        std::uint8_t nd = static_cast<std::uint8_t>(t->ndim());
        write_raw(out, &nd, 1);
        for (int e : t->shape) {
            std::int32_t v = e;
            write_raw(out, &v, sizeof(v));
        }
        write_raw(out, t->data.data(), t->data.size() * sizeof(double));
    }
    std::uint32_t n_bn = static_cast<std::uint32_t>(bn_states_.size());
    write_raw(out, &n_bn, sizeof(n_bn));
    for (const auto& [name, st] : bn_states_) {
        std::uint16_t len = static_cast<std::uint16_t>(name.size());
        write_raw(out, &len, sizeof(len));
        write_raw(out, name.data(), name.size());
        write_raw(out, &st.momentum, sizeof(double));
        std::uint8_t init = st.initialized ? 1 : 0;
        write_raw(out, &init, 1);
        std::uint32_t sz = static_cast<std::uint32_t>(st.running_mean.size());
        write_raw(out, &sz, sizeof(sz));
        write_raw(out, st.running_mean.data(), sz * sizeof(double));
        write_raw(out, st.running_var.data(), sz * sizeof(double));
    }
}

Model Model::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    char magic[4];
    read_raw(in, magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("checkpoint: bad magic bytes (not a TSEM checkpoint)");
    std::uint32_t version = 0;
    read_raw(in, &version, sizeof(version), "version");
    if (version != kVersion) {
        throw DataError("checkpoint: unsupported format version " + std::to_string(version));
    }
    std::uint8_t arch = 0;
    read_raw(in, &arch, 1, "arch");
    if (arch > 2) throw DataError("checkpoint: bad architecture id " + std::to_string(arch));
    ModelConfig cfg;
    cfg.arch = static_cast<Arch>(arch);
    std::int32_t dims[5];
    read_raw(in, dims, sizeof(dims), "dimensions");
    cfg.n_features = dims[0];
    cfg.seq_length = dims[1];
    cfg.n_classes = dims[2];
    cfg.filters_2d = dims[3];
    cfg.filters_1d = dims[4];
    read_raw(in, &cfg.window_fraction, sizeof(double), "window fraction");
    read_raw(in, &cfg.seed, sizeof(std::uint64_t), "seed");

    Model m = Model::build(cfg);
    std::uint32_t n_params = 0;
    read_raw(in, &n_params, sizeof(n_params), "parameter count");
    if (n_params != m.params_.size()) {
        throw DimensionError("checkpoint: has " + std::to_string(n_params) + " parameters, config implies " +
                             std::to_string(m.params_.size()));
    }
    for (std::uint32_t i = 0; i < n_params; ++i) {
        std::uint16_t len = 0;
        read_raw(in, &len, sizeof(len), "parameter name");
        std::string name(len, '\0');
        read_raw(in, name.data(), len, "parameter name");
        std::uint8_t nd = 0;
        read_raw(in, &nd, 1, "parameter rank");
        std::vector<int> shape(nd);
        for (auto& e : shape) {
            std::int32_t v = 0;
            read_raw(in, &v, sizeof(v), "parameter shape");
            e = v;
        }
        auto it = m.params_.find(name);
        if (it == m.params_.end()) throw DimensionError("checkpoint: unexpected parameter '" + name + "'");
        if (it->second->shape != shape) {
            throw DimensionError("checkpoint: parameter '" + name + "' has shape " + shape_to_string(shape) +
                                 ", config implies " + shape_to_string(it->second->shape));
        }
        read_raw(in, it->second->data.data(), it->second->data.size() * sizeof(double), name);
    }
    std::uint32_t n_bn = 0;
    read_raw(in, &n_bn, sizeof(n_bn), "batchnorm count");
    for (std::uint32_t i = 0; i < n_bn; ++i) {
        std::uint16_t len = 0;
        read_raw(in, &len, sizeof(len), "batchnorm name");
        std::string name(len, '\0');
        read_raw(in, name.data(), len, "batchnorm name");
        BatchNormState st;
        read_raw(in, &st.momentum, sizeof(double), "batchnorm momentum");
        std::uint8_t init = 0;
        read_raw(in, &init, 1, "batchnorm flag");
        st.initialized = init != 0;
        std::uint32_t sz = 0;
        read_raw(in, &sz, sizeof(sz), "batchnorm size");
        st.running_mean.resize(sz);
        st.running_var.resize(sz);
        read_raw(in, st.running_mean.data(), sz * sizeof(double), "batchnorm mean");
        read_raw(in, st.running_var.data(), sz * sizeof(double), "batchnorm var");
        m.bn_states_[name] = st;
    }
    return m;
}

TrainReport train(Model& model, const MTSDataset& train_set, const MTSDataset* val_set,
                  const TrainOptions& opts) {
    if (train_set.n_features != model.config().n_features || train_set.seq_length != model.config().seq_length) {
        throw DimensionError("train: dataset shape (" + std::to_string(train_set.n_features) + "," +
                             std::to_string(train_set.seq_length) + ") does not match model config");
    }
    if (train_set.n_classes > model.config().n_classes) {
        throw DimensionError("train: dataset has more classes than the model");
    }
    auto t0 = std::chrono::steady_clock::now();
    TrainReport report;
    AdamState adam;
    auto params = model.parameters();
    // Decay targets: weight tensors only; biases stay unregularized.
    std::vector<TensorPtr> decay_params;
    if (opts.weight_decay > 0.0) {
        for (const auto& [name, p] : model.named_parameters()) {
            if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".w") == 0) decay_params.push_back(p);
        }
    }
    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_metric = -1e300;
    int since_best = 0;
    // Best-epoch snapshot: restored at the end so early stopping hands back
    // the weights (and batchnorm statistics) that scored best, not the last.
    std::vector<std::vector<double>> best_params;
    std::map<std::string, BatchNormState> best_bn;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch_size)) {
            std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
            for (auto& p : params) p->zero_grad();
            for (std::size_t i = start; i < end; ++i) {
                Tape tape;
                auto inst = train_set.instance_tensor(order[i]);
                ForwardOptions fo;
                fo.train_mode = true;
                auto res = model.forward(inst, &tape, fo);
                auto loss = cross_entropy_loss(&tape, res.logits, {train_set.labels[order[i]]});
                if (!std::isfinite(loss->data[0])) {
                    throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
                }
                epoch_loss += loss->data[0];
                ++seen;
                tape.backward(loss);
            }
            double inv = 1.0 / static_cast<double>(end - start);
            for (auto& p : params) {
                for (auto& g : p->grad) g *= inv;
            }
            adam_step(params, adam, opts.lr);
            for (auto& p : decay_params) {
                for (auto& v : p->data) v -= opts.lr * opts.weight_decay * v;
            }
        }
        epoch_loss /= static_cast<double>(seen);
        report.epoch_loss.push_back(epoch_loss);
        report.train_accuracy.push_back(evaluate_accuracy(model, train_set));
        double metric = -epoch_loss;
        if (val_set && !val_set->instances.empty()) {
            report.val_accuracy.push_back(evaluate_accuracy(model, *val_set));
            metric = report.val_accuracy.back();
        }
        report.epochs_run = epoch + 1;
        if (metric > best_metric + 1e-12) {
            best_metric = metric;
            since_best = 0;
            best_params.clear();
            for (const auto& p : params) best_params.push_back(p->data);
            best_bn = model.bn_states_;
        } else if (++since_best >= opts.early_stop_patience) {
            break;
        }
    }
    if (!best_params.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->data = best_params[i];
        model.bn_states_ = best_bn;
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.params_checksum = model.parameter_checksum();
    return report;
}

double evaluate_accuracy(const Model& model, const MTSDataset& ds) {
    if (ds.instances.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (model.predict_class(ds.instance_tensor(i)) == ds.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace tsem
