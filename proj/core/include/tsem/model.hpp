#ifndef TSEM_MODEL_HPP
#define TSEM_MODEL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsem/data.hpp"
#include "tsem/ops.hpp"
#include "tsem/tensor.hpp"

namespace tsem {

enum class Arch { MtexCnn, Xcm, Tsem };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& name);

struct ModelConfig {
    int n_features = 0;   // D
    int seq_length = 0;   // T
    int n_classes = 0;    // K
    double window_fraction = 0.2;
    int filters_2d = 16;
    int filters_1d = 16;
    Arch arch = Arch::Tsem;
    std::uint64_t seed = 42;

    // w = clamp(round(window_fraction * T), 1, 500), additionally capped at T.
    int window_size() const;
    void validate() const;  // throws UsageError
};

// How the CAM-read activation maps relate to the D x T input.
enum class MapLayout {
    FeatureTime,   // maps are (D,T): aligned 1:1 (tsem)
    TimeOnly,      // maps are (T): replicate across features (xcm)
    FlatStrided,   // maps are (D*T'): reshape to (D,T'), upsample time (mtex-cnn)
};

struct ForwardOptions {
    bool train_mode = false;
    // Test hook: replaces the TSEM temporal gate with the given length-T vector.
    const std::vector<double>* gate_override = nullptr;
    // Ablation hook: zeroes this channel of "pre_gap_maps" before the head.
    int ablate_pre_gap_channel = -1;
};

// Per-call activation snapshot; callers own it, so concurrent forwards on a
// trained (read-only) model are safe.
struct ForwardResult {
    std::map<std::string, TensorPtr> activations;
    TensorPtr logits;
    TensorPtr probs;
};

struct TrainOptions {
    int epochs = 50;
    int batch_size = 32;
    double lr = 1e-3;
    double weight_decay = 0.0;  // decoupled, applied to weight tensors only
    std::uint64_t seed = 0;
    int early_stop_patience = 10;
};

struct TrainReport {
    std::vector<double> epoch_loss;
    std::vector<double> train_accuracy;
    std::vector<double> val_accuracy;  // empty when no validation set
    double wall_seconds = 0.0;
    std::uint64_t params_checksum = 0;
    int epochs_run = 0;
};

class Model {
  public:
    static Model build(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    MapLayout map_layout() const;
    // Temporal extent of the pre-GAP maps (T, or the strided extent for mtex-cnn).
    int map_time_extent() const;

    ForwardResult forward(const TensorPtr& instance, Tape* tape, const ForwardOptions& opts = {}) const;
    std::vector<double> predict_proba(const TensorPtr& instance) const;
    int predict_class(const TensorPtr& instance) const;

    std::vector<TensorPtr> parameters() const;
    const std::map<std::string, TensorPtr>& named_parameters() const { return params_; }
    // Dense head weights (K, C) feeding softmax; used by the CAM method.
    TensorPtr dense_weights() const { return params_.at("dense.w"); }
    std::uint64_t parameter_checksum() const;
    std::int64_t parameter_count() const;

    void save(const std::string& path) const;
    static Model load(const std::string& path);

  private:
    ModelConfig config_;
    std::map<std::string, TensorPtr> params_;
    mutable std::map<std::string, BatchNormState> bn_states_;

    ForwardResult forward_xcm(const TensorPtr& x, Tape* tape, const ForwardOptions& o) const;
    ForwardResult forward_tsem(const TensorPtr& x, Tape* tape, const ForwardOptions& o) const;
    ForwardResult forward_mtexcnn(const TensorPtr& x, Tape* tape, const ForwardOptions& o) const;
    ForwardResult head(TensorPtr pre_gap, Tape* tape, ForwardResult res, const ForwardOptions& o) const;

    friend TrainReport train(Model& model, const MTSDataset& train_set, const MTSDataset* val_set,
                             const TrainOptions& opts);
};

// Mini-batch Adam training; deterministic given opts.seed. Throws
// NumericError naming the epoch on divergence.
TrainReport train(Model& model, const MTSDataset& train_set, const MTSDataset* val_set,
                  const TrainOptions& opts);

// Fraction of correctly classified instances.
double evaluate_accuracy(const Model& model, const MTSDataset& ds);

}  // namespace tsem

#endif
