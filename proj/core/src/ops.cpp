#include "tsem/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tsem {

namespace {

bool any_requires_grad(std::initializer_list<TensorPtr> ins) {
    for (const auto& t : ins) {
        if (t && t->requires_grad) return true;
    }
    return false;
}

TensorPtr result_like(std::vector<int> shape, Tape* tape, std::initializer_list<TensorPtr> ins) {
    auto out = Tensor::zeros(std::move(shape));
    if (tape && any_requires_grad(ins)) out->set_requires_grad(true);
    return out;
}

void check_same_shape(const char* op, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a->shape) +
                             " vs " + shape_to_string(b->shape));
    }
}

}  // namespace

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    check_same_shape("add", a, b);
    auto out = result_like(a->shape, tape, {a, b});
    for (int i = 0; i < a->size(); ++i) out->data[i] = a->data[i] + b->data[i];
    if (out->requires_grad) {
        tape->record([a, b, out] {
            for (int i = 0; i < out->size(); ++i) {
                if (a->requires_grad) a->grad[i] += out->grad[i];
                if (b->requires_grad) b->grad[i] += out->grad[i];
            }
        });
    }
    return out;
}

TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    check_same_shape("mul", a, b);
    auto out = result_like(a->shape, tape, {a, b});
    for (int i = 0; i < a->size(); ++i) out->data[i] = a->data[i] * b->data[i];
    if (out->requires_grad) {
        tape->record([a, b, out] {
            for (int i = 0; i < out->size(); ++i) {
                if (a->requires_grad) a->grad[i] += out->grad[i] * b->data[i];
                if (b->requires_grad) b->grad[i] += out->grad[i] * a->data[i];
            }
        });
    }
    return out;
}

TensorPtr scale(Tape* tape, const TensorPtr& a, double s) {
    auto out = result_like(a->shape, tape, {a});
    for (int i = 0; i < a->size(); ++i) out->data[i] = a->data[i] * s;
    if (out->requires_grad) {
        tape->record([a, out, s] {
            for (int i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i] * s;
        });
    }
    return out;
}

TensorPtr relu(Tape* tape, const TensorPtr& x) {
    auto out = result_like(x->shape, tape, {x});
    for (int i = 0; i < x->size(); ++i) out->data[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
    if (out->requires_grad) {
        tape->record([x, out] {
            for (int i = 0; i < out->size(); ++i) {
                if (x->data[i] > 0.0) x->grad[i] += out->grad[i];
            }
        });
    }
    return out;
}

TensorPtr sigmoid(Tape* tape, const TensorPtr& x) {
    auto out = result_like(x->shape, tape, {x});
    for (int i = 0; i < x->size(); ++i) {
        double v = x->data[i];
        out->data[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                : std::exp(v) / (1.0 + std::exp(v));
    }
    if (out->requires_grad) {
        tape->record([x, out] {
            for (int i = 0; i < out->size(); ++i) {
                double y = out->data[i];
                x->grad[i] += out->grad[i] * y * (1.0 - y);
            }
        });
    }
    return out;
}

TensorPtr tanh_op(Tape* tape, const TensorPtr& x) {
    auto out = result_like(x->shape, tape, {x});
    for (int i = 0; i < x->size(); ++i) out->data[i] = std::tanh(x->data[i]);
    if (out->requires_grad) {
        tape->record([x, out] {
            for (int i = 0; i < out->size(); ++i) {
                double y = out->data[i];
                x->grad[i] += out->grad[i] * (1.0 - y * y);
            }
        });
    }
    return out;
}

TensorPtr softmax(Tape* tape, const TensorPtr& x) {
    int cols = x->shape.back();
    int rows = x->size() / cols;
    auto out = result_like(x->shape, tape, {x});
    for (int r = 0; r < rows; ++r) {
        const double* in = x->data.data() + static_cast<std::ptrdiff_t>(r) * cols;
        double* o = out->data.data() + static_cast<std::ptrdiff_t>(r) * cols;
        double mx = in[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (int j = 0; j < cols; ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        for (int j = 0; j < cols; ++j) o[j] /= sum;
    }
    if (out->requires_grad) {
        tape->record([x, out, rows, cols] {
            for (int r = 0; r < rows; ++r) {
                const double* y = out->data.data() + static_cast<std::ptrdiff_t>(r) * cols;
                const double* dy = out->grad.data() + static_cast<std::ptrdiff_t>(r) * cols;
                double* dx = x->grad.data() + static_cast<std::ptrdiff_t>(r) * cols;
                double dot = 0.0;
                for (int j = 0; j < cols; ++j) dot += dy[j] * y[j];
                for (int j = 0; j < cols; ++j) dx[j] += y[j] * (dy[j] - dot);
            }
        });
    }
    return out;
}

TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->ndim() != 2 || b->ndim() != 2 || a->dim(1) != b->dim(0)) {
        throw DimensionError("matmul: incompatible shapes " + shape_to_string(a->shape) +
                             " x " + shape_to_string(b->shape));
    }
    int m = a->dim(0), k = a->dim(1), n = b->dim(1);
    auto out = result_like({m, n}, tape, {a, b});
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            double av = a->data[i * k + p];
            if (av == 0.0) continue;
            for (int j = 0; j < n; ++j) out->data[i * n + j] += av * b->data[p * n + j];
        }
    }
    if (out->requires_grad) {
        tape->record([a, b, out, m, k, n] {
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n; ++j) {
                    double g = out->grad[i * n + j];
                    if (g == 0.0) continue;
                    for (int p = 0; p < k; ++p) {
                        if (a->requires_grad) a->grad[i * k + p] += g * b->data[p * n + j];
                        if (b->requires_grad) b->grad[p * n + j] += g * a->data[i * k + p];
                    }
                }
            }
        });
    }
    return out;
}

TensorPtr matvec(Tape* tape, const TensorPtr& w, const TensorPtr& x) {
    if (w->ndim() != 2 || x->ndim() != 1 || w->dim(1) != x->dim(0)) {
        throw DimensionError("matvec: incompatible shapes " + shape_to_string(w->shape) +
                             " x " + shape_to_string(x->shape));
    }
    int m = w->dim(0), k = w->dim(1);
    auto out = result_like({m}, tape, {w, x});
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int p = 0; p < k; ++p) s += w->data[i * k + p] * x->data[p];
        out->data[i] = s;
    }
    if (out->requires_grad) {
        tape->record([w, x, out, m, k] {
            for (int i = 0; i < m; ++i) {
                double g = out->grad[i];
                if (g == 0.0) continue;
                for (int p = 0; p < k; ++p) {
                    if (w->requires_grad) w->grad[i * k + p] += g * x->data[p];
                    if (x->requires_grad) x->grad[p] += g * w->data[i * k + p];
                }
            }
        });
    }
    return out;
}

TensorPtr concat0(Tape* tape, const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw UsageError("concat0: no inputs");
    std::vector<int> trailing(parts[0]->shape.begin() + 1, parts[0]->shape.end());
    int total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        std::vector<int> t(p->shape.begin() + 1, p->shape.end());
        if (t != trailing) {
            throw DimensionError("concat0: trailing shape mismatch " + shape_to_string(p->shape) +
                                 " vs " + shape_to_string(parts[0]->shape));
        }
        total += p->dim(0);
        rg = rg || p->requires_grad;
    }
    std::vector<int> out_shape = {total};
    out_shape.insert(out_shape.end(), trailing.begin(), trailing.end());
    auto out = Tensor::zeros(out_shape);
    if (tape && rg) out->set_requires_grad(true);
    int offset = 0;
    for (const auto& p : parts) {
        std::copy(p->data.begin(), p->data.end(), out->data.begin() + offset);
        offset += p->size();
    }
    if (out->requires_grad) {
        auto parts_copy = parts;
        tape->record([parts_copy, out] {
            int off = 0;
            for (const auto& p : parts_copy) {
                if (p->requires_grad) {
                    for (int i = 0; i < p->size(); ++i) p->grad[i] += out->grad[off + i];
                }
                off += p->size();
            }
        });
    }
    return out;
}

TensorPtr slice0(Tape* tape, const TensorPtr& x, int start, int len) {
    if (start < 0 || len <= 0 || start + len > x->dim(0)) {
        throw DimensionError("slice0: range [" + std::to_string(start) + "," +
                             std::to_string(start + len) + ") out of axis-0 extent " +
                             std::to_string(x->dim(0)));
    }
    int inner = x->size() / x->dim(0);
    std::vector<int> out_shape = x->shape;
    out_shape[0] = len;
    auto out = result_like(out_shape, tape, {x});
    std::copy(x->data.begin() + static_cast<std::ptrdiff_t>(start) * inner,
              x->data.begin() + static_cast<std::ptrdiff_t>(start + len) * inner, out->data.begin());
    if (out->requires_grad) {
        tape->record([x, out, start, inner] {
            for (int i = 0; i < out->size(); ++i) x->grad[start * inner + i] += out->grad[i];
        });
    }
    return out;
}

TensorPtr reshape(Tape* tape, const TensorPtr& x, std::vector<int> shape) {
    if (shape_product(shape) != x->size()) {
        throw DimensionError("reshape: cannot view " + shape_to_string(x->shape) + " as " +
                             shape_to_string(shape));
    }
    auto out = result_like(std::move(shape), tape, {x});
    out->data = x->data;
    if (out->requires_grad) {
        tape->record([x, out] {
            for (int i = 0; i < out->size(); ++i) x->grad[i] += out->grad[i];
        });
    }
    return out;
}

TensorPtr transpose2d(Tape* tape, const TensorPtr& x) {
    if (x->ndim() != 2) throw DimensionError("transpose2d: expected 2-D, got " + shape_to_string(x->shape));
    int r = x->dim(0), c = x->dim(1);
    auto out = result_like({c, r}, tape, {x});
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) out->data[j * r + i] = x->data[i * c + j];
    }
    if (out->requires_grad) {
        tape->record([x, out, r, c] {
            for (int i = 0; i < r; ++i) {
                for (int j = 0; j < c; ++j) x->grad[i * c + j] += out->grad[j * r + i];
            }
        });
    }
    return out;
}

TensorPtr sum_all(Tape* tape, const TensorPtr& x) {
    auto out = result_like({1}, tape, {x});
    double s = 0.0;
    for (double v : x->data) s += v;
    out->data[0] = s;
    if (out->requires_grad) {
        tape->record([x, out] {
            for (int i = 0; i < x->size(); ++i) x->grad[i] += out->grad[0];
        });
    }
    return out;
}

TensorPtr add_channel_bias(Tape* tape, const TensorPtr& x, const TensorPtr& b) {
    if (b->ndim() != 1 || b->dim(0) != x->dim(0)) {
        throw DimensionError("add_channel_bias: bias " + shape_to_string(b->shape) +
                             " does not match channels of " + shape_to_string(x->shape));
    }
    int channels = x->dim(0);
    int inner = x->size() / channels;
    auto out = result_like(x->shape, tape, {x, b});
    for (int c = 0; c < channels; ++c) {
        for (int i = 0; i < inner; ++i) out->data[c * inner + i] = x->data[c * inner + i] + b->data[c];
    }
    if (out->requires_grad) {
        tape->record([x, b, out, channels, inner] {
            for (int c = 0; c < channels; ++c) {
                for (int i = 0; i < inner; ++i) {
                    double g = out->grad[c * inner + i];
                    if (x->requires_grad) x->grad[c * inner + i] += g;
                    if (b->requires_grad) b->grad[c] += g;
                }
            }
        });
    }
    return out;
}

TensorPtr mul_time_gate(Tape* tape, const TensorPtr& x, const TensorPtr& g) {
    if (x->ndim() != 3 || g->ndim() != 1 || g->dim(0) != x->dim(2)) {
        throw DimensionError("mul_time_gate: gate " + shape_to_string(g->shape) +
                             " does not match time axis of " + shape_to_string(x->shape));
    }
    int outer = x->dim(0) * x->dim(1);
    int t_len = x->dim(2);
    auto out = result_like(x->shape, tape, {x, g});
    for (int o = 0; o < outer; ++o) {
        for (int t = 0; t < t_len; ++t) out->data[o * t_len + t] = x->data[o * t_len + t] * g->data[t];
    }
    if (out->requires_grad) {
        tape->record([x, g, out, outer, t_len] {
            for (int o = 0; o < outer; ++o) {
                for (int t = 0; t < t_len; ++t) {
                    double dy = out->grad[o * t_len + t];
                    if (x->requires_grad) x->grad[o * t_len + t] += dy * g->data[t];
                    if (g->requires_grad) g->grad[t] += dy * x->data[o * t_len + t];
                }
            }
        });
    }
    return out;
}

TensorPtr pad1d(Tape* tape, const TensorPtr& x, int lo, int hi) {
    if (x->ndim() != 2) throw DimensionError("pad1d: expected (C,L), got " + shape_to_string(x->shape));
    if (lo < 0 || hi < 0) throw UsageError("pad1d: negative padding");
    int c_n = x->dim(0), l_in = x->dim(1), l_out = l_in + lo + hi;
    auto out = result_like({c_n, l_out}, tape, {x});
    for (int c = 0; c < c_n; ++c) {
        for (int i = 0; i < l_in; ++i) out->data[c * l_out + lo + i] = x->data[c * l_in + i];
    }
    if (out->requires_grad) {
        tape->record([x, out, c_n, l_in, l_out, lo] {
            for (int c = 0; c < c_n; ++c) {
                for (int i = 0; i < l_in; ++i) x->grad[c * l_in + i] += out->grad[c * l_out + lo + i];
            }
        });
    }
    return out;
}

TensorPtr pad2d(Tape* tape, const TensorPtr& x, int lo_h, int hi_h, int lo_w, int hi_w) {
    if (x->ndim() != 3) throw DimensionError("pad2d: expected (C,H,W), got " + shape_to_string(x->shape));
    if (lo_h < 0 || hi_h < 0 || lo_w < 0 || hi_w < 0) throw UsageError("pad2d: negative padding");
    int c_n = x->dim(0), h_in = x->dim(1), w_in = x->dim(2);
    int h_out = h_in + lo_h + hi_h, w_out = w_in + lo_w + hi_w;
    auto out = result_like({c_n, h_out, w_out}, tape, {x});
    for (int c = 0; c < c_n; ++c) {
        for (int i = 0; i < h_in; ++i) {
            for (int j = 0; j < w_in; ++j) {
                out->data[(c * h_out + lo_h + i) * w_out + lo_w + j] = x->data[(c * h_in + i) * w_in + j];
            }
        }
    }
    if (out->requires_grad) {
        tape->record([x, out, c_n, h_in, w_in, h_out, w_out, lo_h, lo_w] {
            for (int c = 0; c < c_n; ++c) {
                for (int i = 0; i < h_in; ++i) {
                    for (int j = 0; j < w_in; ++j) {
                        x->grad[(c * h_in + i) * w_in + j] +=
                            out->grad[(c * h_out + lo_h + i) * w_out + lo_w + j];
                    }
                }
            }
        });
    }
    return out;
}

TensorPtr conv2d_forward(Tape* tape, const TensorPtr& input, const TensorPtr& kernels,
                         int pad_h, int pad_w, int stride_h, int stride_w) {
    if (input->ndim() != 3) {
        throw DimensionError("conv2d: input must be (C_in,D,T), got " + shape_to_string(input->shape));
    }
    if (kernels->ndim() != 4) {
        throw DimensionError("conv2d: kernels must be (C_out,C_in,kH,kW), got " + shape_to_string(kernels->shape));
    }
    if (kernels->dim(1) != input->dim(0)) {
        throw DimensionError("conv2d: kernel C_in " + std::to_string(kernels->dim(1)) +
                             " != input C_in " + std::to_string(input->dim(0)));
    }
    if (stride_h < 1 || stride_w < 1) throw UsageError("conv2d: stride must be >= 1");
    if (pad_h < 0 || pad_w < 0) throw UsageError("conv2d: negative padding");
    int c_in = input->dim(0), h_in = input->dim(1), w_in = input->dim(2);
    int c_out = kernels->dim(0), k_h = kernels->dim(2), k_w = kernels->dim(3);
    if (k_h > h_in + 2 * pad_h || k_w > w_in + 2 * pad_w) {
        throw DimensionError("conv2d: kernel " + std::to_string(k_h) + "x" + std::to_string(k_w) +
                             " exceeds padded input " + std::to_string(h_in + 2 * pad_h) + "x" +
                             std::to_string(w_in + 2 * pad_w));
    }
    int h_out = (h_in + 2 * pad_h - k_h) / stride_h + 1;
    int w_out = (w_in + 2 * pad_w - k_w) / stride_w + 1;
    auto out = result_like({c_out, h_out, w_out}, tape, {input, kernels});
    const double* in_p = input->data.data();
    const double* k_p = kernels->data.data();
    double* out_p = out->data.data();
    for (int co = 0; co < c_out; ++co) {
        for (int oh = 0; oh < h_out; ++oh) {
            int ih0 = oh * stride_h - pad_h;
            for (int ow = 0; ow < w_out; ++ow) {
                int iw0 = ow * stride_w - pad_w;
                double s = 0.0;
                if (ih0 >= 0 && ih0 + k_h <= h_in && iw0 >= 0 && iw0 + k_w <= w_in) {
                    // Fully interior window: contiguous rows, no bounds checks.
                    for (int ci = 0; ci < c_in; ++ci) {
                        for (int kh = 0; kh < k_h; ++kh) {
                            const double* row = in_p + (ci * h_in + ih0 + kh) * w_in + iw0;
                            const double* ker = k_p + ((co * c_in + ci) * k_h + kh) * k_w;
                            for (int kw = 0; kw < k_w; ++kw) s += row[kw] * ker[kw];
                        }
                    }
                } else {
                    for (int ci = 0; ci < c_in; ++ci) {
                        for (int kh = 0; kh < k_h; ++kh) {
                            int ih = ih0 + kh;
                            if (ih < 0 || ih >= h_in) continue;
                            for (int kw = 0; kw < k_w; ++kw) {
                                int iw = iw0 + kw;
                                if (iw < 0 || iw >= w_in) continue;
                                s += in_p[(ci * h_in + ih) * w_in + iw] *
                                     k_p[((co * c_in + ci) * k_h + kh) * k_w + kw];
                            }
                        }
                    }
                }
                out_p[(co * h_out + oh) * w_out + ow] = s;
            }
        }
    }
    if (out->requires_grad) {
        tape->record([input, kernels, out, c_in, h_in, w_in, c_out, k_h, k_w, h_out, w_out,
                      pad_h, pad_w, stride_h, stride_w] {
            for (int co = 0; co < c_out; ++co) {
                for (int oh = 0; oh < h_out; ++oh) {
                    int ih0 = oh * stride_h - pad_h;
                    for (int ow = 0; ow < w_out; ++ow) {
                        double g = out->grad[(co * h_out + oh) * w_out + ow];
                        if (g == 0.0) continue;
                        int iw0 = ow * stride_w - pad_w;
                        for (int ci = 0; ci < c_in; ++ci) {
                            for (int kh = 0; kh < k_h; ++kh) {
                                int ih = ih0 + kh;
                                if (ih < 0 || ih >= h_in) continue;
                                for (int kw = 0; kw < k_w; ++kw) {
                                    int iw = iw0 + kw;
                                    if (iw < 0 || iw >= w_in) continue;
                                    if (input->requires_grad) {
                                        input->grad[(ci * h_in + ih) * w_in + iw] +=
                                            g * kernels->data[((co * c_in + ci) * k_h + kh) * k_w + kw];
                                    }
                                    if (kernels->requires_grad) {
                                        kernels->grad[((co * c_in + ci) * k_h + kh) * k_w + kw] +=
                                            g * input->data[(ci * h_in + ih) * w_in + iw];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

TensorPtr conv1d_forward(Tape* tape, const TensorPtr& input, const TensorPtr& kernels,
                         int pad, int stride) {
    if (input->ndim() != 2) {
        throw DimensionError("conv1d: input must be (C_in,T), got " + shape_to_string(input->shape));
    }
    if (kernels->ndim() != 3) {
        throw DimensionError("conv1d: kernels must be (C_out,C_in,k), got " + shape_to_string(kernels->shape));
    }
    // Reuse the 2-D kernel with a unit feature axis.
    auto in3 = reshape(tape, input, {input->dim(0), 1, input->dim(1)});
    auto k4 = reshape(tape, kernels, {kernels->dim(0), kernels->dim(1), 1, kernels->dim(2)});
    auto out3 = conv2d_forward(tape, in3, k4, 0, pad, 1, stride);
    return reshape(tape, out3, {out3->dim(0), out3->dim(2)});
}

TensorPtr upsample_linear_1d(Tape* tape, const TensorPtr& x, int target_length) {
    if (x->ndim() != 1) throw DimensionError("upsample_linear_1d: expected 1-D, got " + shape_to_string(x->shape));
    int l = x->dim(0);
    if (l < 1 || target_length < 1) throw UsageError("upsample_linear_1d: lengths must be >= 1");
    auto out = result_like({target_length}, tape, {x});
    // (index, weight) pairs per output sample, saved for backward.
    std::vector<int> i0(static_cast<std::size_t>(target_length));
    std::vector<double> w1(static_cast<std::size_t>(target_length));
    for (int t = 0; t < target_length; ++t) {
        if (l == 1 || target_length == 1) {
            i0[t] = 0;
            w1[t] = 0.0;
        } else {
            double pos = static_cast<double>(t) * (l - 1) / (target_length - 1);
            int lo = std::min(static_cast<int>(pos), l - 2);
            i0[t] = lo;
            w1[t] = pos - lo;
        }
        int hi = std::min(i0[t] + 1, l - 1);
        out->data[t] = (1.0 - w1[t]) * x->data[i0[t]] + w1[t] * x->data[hi];
    }
    if (out->requires_grad) {
        tape->record([x, out, i0, w1, l, target_length] {
            for (int t = 0; t < target_length; ++t) {
                int hi = std::min(i0[t] + 1, l - 1);
                x->grad[i0[t]] += out->grad[t] * (1.0 - w1[t]);
                x->grad[hi] += out->grad[t] * w1[t];
            }
        });
    }
    return out;
}

TensorPtr global_average_pool(Tape* tape, const TensorPtr& x) {
    if (x->ndim() < 1) throw DimensionError("global_average_pool: scalar input");
    int channels = x->dim(0);
    int inner = x->size() / channels;
    auto out = result_like({channels}, tape, {x});
    for (int c = 0; c < channels; ++c) {
        double s = 0.0;
        for (int i = 0; i < inner; ++i) s += x->data[c * inner + i];
        out->data[c] = s / inner;
    }
    if (out->requires_grad) {
        tape->record([x, out, channels, inner] {
            for (int c = 0; c < channels; ++c) {
                double g = out->grad[c] / inner;
                for (int i = 0; i < inner; ++i) x->grad[c * inner + i] += g;
            }
        });
    }
    return out;
}

TensorPtr batchnorm_forward(Tape* tape, const TensorPtr& x, int channel_axis,
                            BatchNormMode mode, BatchNormState& state, double eps) {
    if (eps <= 0.0) throw UsageError("batchnorm: eps must be positive");
    if (channel_axis < 0 || channel_axis >= x->ndim()) {
        throw DimensionError("batchnorm: channel axis " + std::to_string(channel_axis) +
                             " out of range for " + shape_to_string(x->shape));
    }
    int c_n = x->dim(channel_axis);
    // `initialized` flips on the first Train batch, which seeds the running
    // statistics directly. Infer on a never-trained state falls back to the
    // identity statistics without claiming initialization.
    bool first_batch = !state.initialized;
    if (state.running_mean.empty()) {
        state.running_mean.assign(static_cast<std::size_t>(c_n), 0.0);
        state.running_var.assign(static_cast<std::size_t>(c_n), 1.0);
    }
    if (mode == BatchNormMode::Train) state.initialized = true;
    if (static_cast<int>(state.running_mean.size()) != c_n) {
        throw DimensionError("batchnorm: state has " + std::to_string(state.running_mean.size()) +
                             " channels, input has " + std::to_string(c_n));
    }
    // Strides for walking the channel axis.
    int outer = 1, inner = 1;
    for (int a = 0; a < channel_axis; ++a) outer *= x->dim(a);
    for (int a = channel_axis + 1; a < x->ndim(); ++a) inner *= x->dim(a);
    int per_channel = outer * inner;

    std::vector<double> mean(static_cast<std::size_t>(c_n), 0.0);
    std::vector<double> var(static_cast<std::size_t>(c_n), 0.0);
    if (mode == BatchNormMode::Train) {
        for (int c = 0; c < c_n; ++c) {
            double s = 0.0;
            for (int o = 0; o < outer; ++o) {
                const double* p = x->data.data() + (static_cast<std::ptrdiff_t>(o) * c_n + c) * inner;
                for (int i = 0; i < inner; ++i) s += p[i];
            }
            mean[c] = s / per_channel;
            double v = 0.0;
            for (int o = 0; o < outer; ++o) {
                const double* p = x->data.data() + (static_cast<std::ptrdiff_t>(o) * c_n + c) * inner;
                for (int i = 0; i < inner; ++i) {
                    double d = p[i] - mean[c];
                    v += d * d;
                }
            }
            var[c] = v / per_channel;
            // The first batch seeds the running statistics directly; later
            // batches blend in with the configured momentum.
            if (first_batch) {
                state.running_mean[c] = mean[c];
                state.running_var[c] = var[c];
            } else {
                state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean[c];
                state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * var[c];
            }
        }
    } else {
        mean = state.running_mean;
        var = state.running_var;
    }

    auto out = result_like(x->shape, tape, {x});
    std::vector<double> inv_std(static_cast<std::size_t>(c_n));
    for (int c = 0; c < c_n; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    for (int o = 0; o < outer; ++o) {
        for (int c = 0; c < c_n; ++c) {
            const double* p = x->data.data() + (static_cast<std::ptrdiff_t>(o) * c_n + c) * inner;
            double* q = out->data.data() + (static_cast<std::ptrdiff_t>(o) * c_n + c) * inner;
            for (int i = 0; i < inner; ++i) q[i] = (p[i] - mean[c]) * inv_std[c];
        }
    }
    if (out->requires_grad) {
        bool train = mode == BatchNormMode::Train;
        tape->record([x, out, c_n, outer, inner, per_channel, inv_std, train] {
            for (int c = 0; c < c_n; ++c) {
                if (train) {
                    double sum_dy = 0.0, sum_dy_xhat = 0.0;
                    for (int o = 0; o < outer; ++o) {
                        std::ptrdiff_t base = (static_cast<std::ptrdiff_t>(o) * c_n + c) * inner;
                        for (int i = 0; i < inner; ++i) {
                            sum_dy += out->grad[base + i];
                            sum_dy_xhat += out->grad[base + i] * out->data[base + i];
                        }
                    }
                    double mean_dy = sum_dy / per_channel;
                    double mean_dy_xhat = sum_dy_xhat / per_channel;
                    for (int o = 0; o < outer; ++o) {
                        std::ptrdiff_t base = (static_cast<std::ptrdiff_t>(o) * c_n + c) * inner;
                        for (int i = 0; i < inner; ++i) {
                            x->grad[base + i] += inv_std[c] * (out->grad[base + i] - mean_dy -
                                                               out->data[base + i] * mean_dy_xhat);
                        }
                    }
                } else {
                    for (int o = 0; o < outer; ++o) {
                        std::ptrdiff_t base = (static_cast<std::ptrdiff_t>(o) * c_n + c) * inner;
                        for (int i = 0; i < inner; ++i) x->grad[base + i] += out->grad[base + i] * inv_std[c];
                    }
                }
            }
        });
    }
    return out;
}

TensorPtr cross_entropy_loss(Tape* tape, const TensorPtr& logits, const std::vector<int>& labels) {
    int k = logits->shape.back();
    int batch = logits->size() / k;
    if (static_cast<int>(labels.size()) != batch) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                             std::to_string(batch));
    }
    for (int lbl : labels) {
        if (lbl < 0 || lbl >= k) throw UsageError("cross_entropy: label " + std::to_string(lbl) + " out of range");
    }
    auto out = result_like({1}, tape, {logits});
    // Saved per-row softmax for backward.
    std::vector<double> probs(static_cast<std::size_t>(logits->size()));
    double total = 0.0;
    for (int r = 0; r < batch; ++r) {
        const double* in = logits->data.data() + static_cast<std::ptrdiff_t>(r) * k;
        double mx = in[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            probs[r * k + j] = std::exp(in[j] - mx);
            sum += probs[r * k + j];
        }
        double logsum = std::log(sum) + mx;
        for (int j = 0; j < k; ++j) probs[r * k + j] /= sum;
        total += logsum - in[labels[static_cast<std::size_t>(r)]];
    }
    out->data[0] = total / batch;
    if (out->requires_grad) {
        tape->record([logits, out, probs, labels, batch, k] {
            double g = out->grad[0] / batch;
            for (int r = 0; r < batch; ++r) {
                for (int j = 0; j < k; ++j) {
                    double delta = j == labels[static_cast<std::size_t>(r)] ? 1.0 : 0.0;
                    logits->grad[r * k + j] += g * (probs[r * k + j] - delta);
                }
            }
        });
    }
    return out;
}

LstmOutput lstm_forward(Tape* tape, const TensorPtr& input, const LstmParams& params) {
    if (input->ndim() != 2) throw DimensionError("lstm: input must be (T,F), got " + shape_to_string(input->shape));
    int t_len = input->dim(0), f_n = input->dim(1), h_n = params.hidden_size;
    if (h_n < 1) throw UsageError("lstm: hidden size must be >= 1");
    if (params.w->ndim() != 2 || params.w->dim(0) != 4 * h_n || params.w->dim(1) != f_n + h_n) {
        throw DimensionError("lstm: weight shape " + shape_to_string(params.w->shape) + " inconsistent with F=" +
                             std::to_string(f_n) + " H=" + std::to_string(h_n));
    }
    if (params.b->ndim() != 1 || params.b->dim(0) != 4 * h_n) {
        throw DimensionError("lstm: bias shape " + shape_to_string(params.b->shape) + " must be (4H)");
    }
    TensorPtr h = Tensor::zeros({h_n});
    TensorPtr c = Tensor::zeros({h_n});
    std::vector<TensorPtr> hidden_rows;
    hidden_rows.reserve(static_cast<std::size_t>(t_len));
    for (int t = 0; t < t_len; ++t) {
        auto x_t = reshape(tape, slice0(tape, input, t, 1), {f_n});
        auto xh = concat0(tape, {x_t, h});
        auto z = add(tape, matvec(tape, params.w, xh), params.b);
        auto gate_i = sigmoid(tape, slice0(tape, z, 0, h_n));
        auto gate_f = sigmoid(tape, slice0(tape, z, h_n, h_n));
        auto cand = tanh_op(tape, slice0(tape, z, 2 * h_n, h_n));
        auto gate_o = sigmoid(tape, slice0(tape, z, 3 * h_n, h_n));
        c = add(tape, mul(tape, gate_f, c), mul(tape, gate_i, cand));
        h = mul(tape, gate_o, tanh_op(tape, c));
        for (int i = 0; i < h_n; ++i) {
            if (!std::isfinite(h->data[i]) || !std::isfinite(c->data[i])) {
                throw NumericError("lstm: non-finite state at time step " + std::to_string(t));
            }
        }
        hidden_rows.push_back(h);
    }
    LstmOutput out;
    out.hidden_seq = reshape(tape, concat0(tape, hidden_rows), {t_len, h_n});
    out.final_hidden = h;
    return out;
}

void adam_step(const std::vector<TensorPtr>& params, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i]->data.size(), 0.0);
            state.v[i].assign(params[i]->data.size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) throw UsageError("adam: state/parameter count mismatch");
    state.step += 1;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        if (!p.requires_grad) continue;
        if (state.m[i].size() != p.data.size()) throw UsageError("adam: parameter size changed");
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            double g = p.grad[j];
            state.m[i][j] = beta1 * state.m[i][j] + (1.0 - beta1) * g;
            state.v[i][j] = beta2 * state.v[i][j] + (1.0 - beta2) * g * g;
            double m_hat = state.m[i][j] / bc1;
            double v_hat = state.v[i][j] / bc2;
            p.data[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

void init_uniform_fan_in(const TensorPtr& t, int fan_in, std::mt19937_64& rng) {
    double limit = std::sqrt(1.0 / std::max(1, fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : t->data) v = dist(rng);
}

}  // namespace tsem
