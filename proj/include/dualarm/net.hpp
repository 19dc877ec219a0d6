#pragma once

#include "dualarm/types.hpp"

#include <random>
#include <vector>

namespace dualarm::net {

/// Affine layer y = W x + b.
struct Layer {
  Mat W;
  Vec b;
};

/// Fully connected network with ReLU between layers and an identity output.
/// layers[l] maps activation l -> pre-activation l; the last pre-activation
/// is the network output.
struct MlpParams {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows()); }
  std::size_t parameter_count() const;
  bool same_shape(const MlpParams& other) const;
  void set_zero();

  static MlpParams zeros_like(const MlpParams& ref);
};

/// Build an MLP with the given layer widths (dims.front() = input,
/// dims.back() = output). Weights and biases are drawn uniformly from
/// [-1/sqrt(fan_in), 1/sqrt(fan_in)]; the final layer is additionally scaled
/// by final_scale so policy heads can start near zero output.
MlpParams make_mlp(const std::vector<int>& dims, std::mt19937_64& rng, double final_scale = 1.0);

/// Intermediate pre-activations kept for the backward pass (single input).
struct ForwardCache {
  Vec input;
  std::vector<Vec> pre;  // pre[l] = z_l
};

/// Batch variant; columns are independent samples.
struct BatchCache {
  Mat input;
  std::vector<Mat> pre;
};

Vec mlp_forward(const MlpParams& p, const Vec& x, ForwardCache* cache = nullptr);
Mat mlp_forward(const MlpParams& p, const Mat& X, BatchCache* cache = nullptr);

/// Backpropagate d(loss)/d(output) through the cached forward pass. Returns
/// parameter gradients shaped like p; optionally also the gradient w.r.t. the
/// network input. ReLU uses subgradient 0 at exactly 0.
MlpParams mlp_backward(const MlpParams& p, const ForwardCache& cache, const Vec& grad_out,
                       Vec* input_grad = nullptr);
MlpParams mlp_backward(const MlpParams& p, const BatchCache& cache, const Mat& grad_out,
                       Mat* input_grad = nullptr);

/// Adam with bias correction; moments are shaped like the parameters.
struct AdamState {
  std::vector<Layer> m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState like(const MlpParams& p);
};

/// One Adam update in place. Throws NumericError on non-finite gradient
/// entries without touching params or moments.
void adam_step(AdamState& opt, MlpParams& params, const MlpParams& grads, double lr);

/// Scalar Adam (used for the entropy temperature).
struct ScalarAdam {
  double m = 0, v = 0;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(ScalarAdam& opt, double& param, double grad, double lr);

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

struct SquashedSample {
  Vec action;      // in (-1, 1)^d
  Vec pre_tanh;    // u = mean + exp(log_std) * noise
  double log_prob; // log density of action under the squashed Gaussian
};

/// Sample a tanh-squashed diagonal Gaussian given standard-normal noise.
/// log_std is clamped to [kLogStdMin, kLogStdMax] before use. The density
/// correction uses log(1 - tanh(u)^2) = 2(log 2 - u - softplus(-2u)), which is
/// stable for saturated actions.
SquashedSample tanh_gaussian_sample(const Vec& mean, const Vec& log_std, const Vec& noise);

/// log N(u; mean, diag exp(log_std)^2) summed over dimensions, minus the tanh
/// volume correction at u. Same value tanh_gaussian_sample reports.
double tanh_gaussian_log_prob(const Vec& mean, const Vec& log_std, const Vec& pre_tanh);

}  // namespace dualarm::net
