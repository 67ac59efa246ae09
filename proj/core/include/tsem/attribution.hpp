#ifndef TSEM_ATTRIBUTION_HPP
#define TSEM_ATTRIBUTION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tsem/model.hpp"

namespace tsem {

enum class Method {
    Cam,
    GradCam,
    GradCamPP,
    SmoothGradCamPP,
    XGradCam,
    AblationCam,
    ScoreCam,
    IntegratedScoreCam,
    ActivationSmoothedScoreCam,
    InputSmoothedScoreCam,
};

const std::vector<Method>& all_methods();
std::string method_name(Method m);
Method method_from_name(const std::string& name);

enum class MapNormalization { Raw, MinMax, Sum1 };

// D x T non-negative saliency matrix aligned 1:1 with the input instance.
struct ExplanationMap {
    int n_features = 0;  // D
    int seq_length = 0;  // T
    std::vector<double> values;  // row-major D*T
    Method method = Method::Cam;
    int target_class = 0;
    MapNormalization normalization = MapNormalization::Raw;

    double at(int d, int t) const { return values[static_cast<std::size_t>(d * seq_length + t)]; }
};

struct CamContext {
    const Model* model = nullptr;
    std::string activation_key = "pre_gap_maps";
    int smooth_samples = 8;        // n
    double noise_sigma = 0.1;      // sigma, relative to the value range
    int integration_steps = 8;     // m
    std::uint64_t seed = 0;

    void validate() const;
};

// Dispatches on method; all ten share the context. Throws UsageError for an
// unknown activation key or out-of-range class id.
ExplanationMap explain(const CamContext& ctx, const TensorPtr& instance, int target_class, Method method);

ExplanationMap cam(const CamContext& ctx, const TensorPtr& instance, int target_class);
ExplanationMap grad_cam(const CamContext& ctx, const TensorPtr& instance, int target_class);
ExplanationMap grad_cam_pp(const CamContext& ctx, const TensorPtr& instance, int target_class);
ExplanationMap smooth_grad_cam_pp(const CamContext& ctx, const TensorPtr& instance, int target_class);
ExplanationMap xgrad_cam(const CamContext& ctx, const TensorPtr& instance, int target_class);
ExplanationMap ablation_cam(const CamContext& ctx, const TensorPtr& instance, int target_class);
ExplanationMap score_cam(const CamContext& ctx, const TensorPtr& instance, int target_class);
ExplanationMap integrated_score_cam(const CamContext& ctx, const TensorPtr& instance, int target_class);
ExplanationMap activation_smoothed_score_cam(const CamContext& ctx, const TensorPtr& instance, int target_class);
ExplanationMap input_smoothed_score_cam(const CamContext& ctx, const TensorPtr& instance, int target_class);

// minmax -> [0,1]; sum1 -> divides by the map total; raw -> identity.
ExplanationMap normalize_map(const ExplanationMap& map, MapNormalization mode);

}  // namespace tsem

#endif
