#ifndef TSEM_DATA_HPP
#define TSEM_DATA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsem/tensor.hpp"

namespace tsem {

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> std_dev;
};

// Set of equal-shape D x T instances with class ids in [0, K).
struct MTSDataset {
    int n_features = 0;   // D
    int seq_length = 0;   // T
    int n_classes = 0;    // K
    std::vector<std::vector<double>> instances;  // row-major D*T each
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::optional<ChannelStats> stats;
    std::string provenance;

    std::size_t size() const { return instances.size(); }
    TensorPtr instance_tensor(std::size_t i) const {
        return Tensor::of({n_features, seq_length}, instances[i]);
    }
    // Throws DataError when invariants (equal shapes, finite values,
    // contiguous labels) are violated.
    void validate() const;
};

// UEA-style text format (.ts): '@' header directives, then one line per
// instance with channels separated by ':' and a trailing class label.
MTSDataset load_uea_text(const std::string& path);
void save_uea_text(const MTSDataset& ds, const std::string& path, const std::string& problem_name = "dataset");

// Directory layout: instance_#####.csv (D rows x T columns) + labels.csv
// manifest with columns instance_id,label.
MTSDataset load_csv(const std::string& dir);
void save_csv(const MTSDataset& ds, const std::string& dir);

// Per-channel z-normalization. Stats are computed over `ds` (the training
// split) and can be re-applied verbatim to held-out data.
ChannelStats compute_channel_stats(const MTSDataset& ds);
MTSDataset apply_normalization(const MTSDataset& ds, const ChannelStats& stats);
MTSDataset z_normalize(const MTSDataset& ds);

struct SyntheticSpec {
    int n_features = 3;     // D
    int seq_length = 64;    // T
    int n_classes = 6;      // K
    double bump_sigma = 3.0;
    double amplitude = 2.0;
    double noise_sigma = 0.3;
    int n_instances = 600;
    std::uint64_t seed = 42;

    // Class k places a Gaussian bump on channel (k mod D) centered at
    // T*(1+2*floor(k/D)) / (2*ceil(K/D)).
    int bump_channel(int k) const { return k % n_features; }
    double bump_center(int k) const;
    // Inclusive [t_min, t_max] window of +/- 2*bump_sigma around the center.
    std::pair<int, int> bump_window(int k) const;
    void validate() const;  // throws UsageError when the window leaves [0,T)
};

MTSDataset generate_synthetic(const SyntheticSpec& spec);

// Stratified, deterministic split; `train_ratio` = 1.0 gives an empty test set.
std::pair<MTSDataset, MTSDataset> split(const MTSDataset& ds, double train_ratio, std::uint64_t seed);

}  // namespace tsem

#endif
