#ifndef TSEM_OPS_HPP
#define TSEM_OPS_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "tsem/tensor.hpp"

namespace tsem {

// Elementwise / linear-algebra primitives. Every op computes the forward
// value and, when `tape` is non-null and an input requires grad, records a
// backward closure on the tape. Passing tape = nullptr runs inference only.

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(Tape* tape, const TensorPtr& a, double s);
TensorPtr relu(Tape* tape, const TensorPtr& x);
TensorPtr sigmoid(Tape* tape, const TensorPtr& x);
TensorPtr tanh_op(Tape* tape, const TensorPtr& x);
// Row-wise softmax over the last axis (1-D input = one row), max-subtracted.
TensorPtr softmax(Tape* tape, const TensorPtr& x);
TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b);  // (m,k)x(k,n)
TensorPtr matvec(Tape* tape, const TensorPtr& w, const TensorPtr& x);  // (m,k)x(k)
TensorPtr concat0(Tape* tape, const std::vector<TensorPtr>& parts);    // along axis 0
TensorPtr slice0(Tape* tape, const TensorPtr& x, int start, int len);  // along axis 0
TensorPtr reshape(Tape* tape, const TensorPtr& x, std::vector<int> shape);
TensorPtr transpose2d(Tape* tape, const TensorPtr& x);
TensorPtr sum_all(Tape* tape, const TensorPtr& x);  // -> scalar {1}

// Adds b[c] to every element of channel c (axis 0).
TensorPtr add_channel_bias(Tape* tape, const TensorPtr& x, const TensorPtr& b);
// Multiplies x(C,D,T) along the time axis by gate g(T), broadcast over C,D.
TensorPtr mul_time_gate(Tape* tape, const TensorPtr& x, const TensorPtr& g);

// Zero padding, differentiable. lo/hi per spatial axis.
TensorPtr pad1d(Tape* tape, const TensorPtr& x, int lo, int hi);          // (C,L)
TensorPtr pad2d(Tape* tape, const TensorPtr& x, int lo_h, int hi_h, int lo_w, int hi_w);  // (C,H,W)

// Direct convolutions. input (C_in,D,T) * kernels (C_out,C_in,kH,kW),
// symmetric per-axis padding, stride >= 1.
TensorPtr conv2d_forward(Tape* tape, const TensorPtr& input, const TensorPtr& kernels,
                         int pad_h, int pad_w, int stride_h, int stride_w);
TensorPtr conv1d_forward(Tape* tape, const TensorPtr& input, const TensorPtr& kernels,
                         int pad, int stride);

// Piecewise-linear resampling of a length-L vector to length T; endpoints
// preserved, L = 1 broadcasts.
TensorPtr upsample_linear_1d(Tape* tape, const TensorPtr& x, int target_length);

// Per-channel mean over all non-channel axes: (C,...) -> (C).
TensorPtr global_average_pool(Tape* tape, const TensorPtr& x);

struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    bool initialized = false;
};

enum class BatchNormMode { Train, Infer };

// Normalizes over every axis except `channel_axis`. Train mode uses batch
// statistics and updates the running state; infer mode uses the running state.
TensorPtr batchnorm_forward(Tape* tape, const TensorPtr& x, int channel_axis,
                            BatchNormMode mode, BatchNormState& state, double eps = 1e-5);

// Mean over the batch of -log softmax(logits)[label]. logits (B,K) or (K).
TensorPtr cross_entropy_loss(Tape* tape, const TensorPtr& logits, const std::vector<int>& labels);

struct LstmParams {
    // Combined gate matrix, rows ordered [input, forget, cell, output]:
    // w (4H, F+H) applied to [x_t ; h_{t-1}], bias b (4H).
    TensorPtr w;
    TensorPtr b;
    int hidden_size = 0;
};

struct LstmOutput {
    TensorPtr hidden_seq;   // (T, H)
    TensorPtr final_hidden; // (H)
};

// Standard LSTM recurrence over input (T, F), sigmoid gates and tanh cell
// candidate. Throws NumericError naming the time step on non-finite values.
LstmOutput lstm_forward(Tape* tape, const TensorPtr& input, const LstmParams& params);

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t step = 0;
};

// Standard Adam update with bias correction, applied in place.
void adam_step(const std::vector<TensorPtr>& params, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Fan-in-scaled uniform init (limit = sqrt(1/fan_in)).
void init_uniform_fan_in(const TensorPtr& t, int fan_in, std::mt19937_64& rng);

}  // namespace tsem

#endif
