#include "dualarm/net.hpp"

#include <cmath>

namespace dualarm::net {
namespace {

inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline Mat relu(const Mat& z) { return z.cwiseMax(0.0); }
inline Vec relu(const Vec& z) { return z.cwiseMax(0.0); }

// Subgradient 0 at exactly 0.
inline Mat relu_mask(const Mat& z) { return (z.array() > 0.0).cast<double>().matrix(); }
inline Vec relu_mask(const Vec& z) { return (z.array() > 0.0).cast<double>().matrix(); }

void check_layers(const MlpParams& p) {
  require(!p.layers.empty(), "mlp: no layers");
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const Layer& lay = p.layers[l];
    require(lay.W.rows() == lay.b.size(), "mlp: bias/weight row mismatch");
    if (l > 0)
      require(lay.W.cols() == p.layers[l - 1].W.rows(), "mlp: inter-layer width mismatch");
  }
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += static_cast<std::size_t>(l.W.size()) + l.b.size();
  return n;
}

bool MlpParams::same_shape(const MlpParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l)
    if (layers[l].W.rows() != other.layers[l].W.rows() ||
        layers[l].W.cols() != other.layers[l].W.cols())
      return false;
  return true;
}

void MlpParams::set_zero() {
  for (Layer& l : layers) {
    l.W.setZero();
    l.b.setZero();
  }
}

MlpParams MlpParams::zeros_like(const MlpParams& ref) {
  MlpParams z;
  z.layers.reserve(ref.layers.size());
  for (const Layer& l : ref.layers)
    z.layers.push_back({Mat::Zero(l.W.rows(), l.W.cols()), Vec::Zero(l.b.size())});
  return z;
}

MlpParams make_mlp(const std::vector<int>& dims, std::mt19937_64& rng, double final_scale) {
  require(dims.size() >= 2, "make_mlp: need at least input and output widths");
  for (int d : dims) require(d > 0, "make_mlp: non-positive layer width");

  MlpParams p;
  p.layers.resize(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer& lay = p.layers[l];
    lay.W.resize(fan_out, fan_in);
    lay.b.resize(fan_out);
    // Fixed fill order (row-major over W, then b) keeps seeding reproducible.
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) lay.W(r, c) = u(rng);
    for (int r = 0; r < fan_out; ++r) lay.b(r) = u(rng);
    if (l + 2 == dims.size()) {
      lay.W *= final_scale;
      lay.b *= final_scale;
    }
  }
  return p;
}

Vec mlp_forward(const MlpParams& p, const Vec& x, ForwardCache* cache) {
  check_layers(p);
  require(x.size() == p.input_dim(), "mlp_forward: input size mismatch");
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->pre.reserve(p.layers.size());
  }
  Vec a = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    Vec z = p.layers[l].W * a + p.layers[l].b;
    if (cache) cache->pre.push_back(z);
    a = (l + 1 < p.layers.size()) ? relu(z) : std::move(z);
  }
  return a;
}

Mat mlp_forward(const MlpParams& p, const Mat& X, BatchCache* cache) {
  check_layers(p);
  require(X.rows() == p.input_dim(), "mlp_forward: input size mismatch");
  if (cache) {
    cache->input = X;
    cache->pre.clear();
    cache->pre.reserve(p.layers.size());
  }
  Mat a = X;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    Mat z = (p.layers[l].W * a).colwise() + p.layers[l].b;
    if (cache) cache->pre.push_back(z);
    a = (l + 1 < p.layers.size()) ? relu(z) : std::move(z);
  }
  return a;
}

MlpParams mlp_backward(const MlpParams& p, const ForwardCache& cache, const Vec& grad_out,
                       Vec* input_grad) {
  require(cache.pre.size() == p.layers.size(), "mlp_backward: cache/param mismatch");
  require(grad_out.size() == p.output_dim(), "mlp_backward: output gradient size mismatch");

  MlpParams grads = MlpParams::zeros_like(p);
  Vec g = grad_out;  // d loss / d z_l
  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
    const Vec a = (l == 0) ? cache.input : relu(cache.pre[l - 1]);
    grads.layers[l].W = g * a.transpose();
    grads.layers[l].b = g;
    if (l > 0)
      g = (p.layers[l].W.transpose() * g).cwiseProduct(relu_mask(cache.pre[l - 1]));
    else if (input_grad)
      *input_grad = p.layers[0].W.transpose() * g;
  }
  return grads;
}

MlpParams mlp_backward(const MlpParams& p, const BatchCache& cache, const Mat& grad_out,
                       Mat* input_grad) {
  require(cache.pre.size() == p.layers.size(), "mlp_backward: cache/param mismatch");
  require(grad_out.rows() == p.output_dim() && grad_out.cols() == cache.input.cols(),
          "mlp_backward: output gradient shape mismatch");

  MlpParams grads = MlpParams::zeros_like(p);
  Mat g = grad_out;
  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
    const Mat a = (l == 0) ? cache.input : relu(cache.pre[l - 1]);
    grads.layers[l].W = g * a.transpose();
    grads.layers[l].b = g.rowwise().sum();
    if (l > 0)
      g = (p.layers[l].W.transpose() * g).cwiseProduct(relu_mask(cache.pre[l - 1]));
    else if (input_grad)
      *input_grad = p.layers[0].W.transpose() * g;
  }
  return grads;
}

AdamState AdamState::like(const MlpParams& p) {
  AdamState s;
  s.m = MlpParams::zeros_like(p).layers;
  s.v = MlpParams::zeros_like(p).layers;
  return s;
}

void adam_step(AdamState& opt, MlpParams& params, const MlpParams& grads, double lr) {
  require(params.same_shape(grads), "adam_step: gradient shape mismatch");
  require(opt.m.size() == params.layers.size(), "adam_step: optimizer shape mismatch");
  for (const Layer& g : grads.layers)
    if (!all_finite(g.W) || !all_finite(g.b))
      throw NumericError("adam_step: non-finite gradient");

  opt.step += 1;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));

  auto update = [&](Eigen::Ref<Mat> p, Eigen::Ref<Mat> m, Eigen::Ref<Mat> v, const Mat& g) {
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.eps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].W, opt.m[l].W, opt.v[l].W, grads.layers[l].W);
    update(params.layers[l].b, opt.m[l].b, opt.v[l].b, grads.layers[l].b);
  }
}

void adam_step(ScalarAdam& opt, double& param, double grad, double lr) {
  if (!std::isfinite(grad)) throw NumericError("adam_step: non-finite scalar gradient");
  opt.step += 1;
  opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grad;
  opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grad * grad;
  const double mh = opt.m / (1.0 - std::pow(opt.beta1, static_cast<double>(opt.step)));
  const double vh = opt.v / (1.0 - std::pow(opt.beta2, static_cast<double>(opt.step)));
  param -= lr * mh / (std::sqrt(vh) + opt.eps);
}

SquashedSample tanh_gaussian_sample(const Vec& mean, const Vec& log_std, const Vec& noise) {
  require(mean.size() == log_std.size() && mean.size() == noise.size(),
          "tanh_gaussian_sample: size mismatch");
  const Vec ls = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  SquashedSample s;
  s.pre_tanh = mean + ls.array().exp().matrix().cwiseProduct(noise);
  s.action = s.pre_tanh.array().tanh().matrix();

  constexpr double half_log_2pi = 0.9189385332046727;  // 0.5*log(2*pi)
  double lp = 0.0;
  for (int i = 0; i < mean.size(); ++i) {
    const double u = s.pre_tanh[i];
    lp += -ls[i] - half_log_2pi - 0.5 * noise[i] * noise[i];
    lp -= 2.0 * (std::log(2.0) - u - softplus(-2.0 * u));
  }
  s.log_prob = lp;
  return s;
}

double tanh_gaussian_log_prob(const Vec& mean, const Vec& log_std, const Vec& pre_tanh) {
  require(mean.size() == log_std.size() && mean.size() == pre_tanh.size(),
          "tanh_gaussian_log_prob: size mismatch");
  const Vec ls = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  constexpr double half_log_2pi = 0.9189385332046727;
  double lp = 0.0;
  for (int i = 0; i < mean.size(); ++i) {
    const double sd = std::exp(ls[i]);
    const double z = (pre_tanh[i] - mean[i]) / sd;
    lp += -ls[i] - half_log_2pi - 0.5 * z * z;
    lp -= 2.0 * (std::log(2.0) - pre_tanh[i] - softplus(-2.0 * pre_tanh[i]));
  }
  return lp;
}

}  // namespace dualarm::net
