#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nib/common.hpp"
#include "nib/losses.hpp"
#include "nib/random.hpp"

namespace nib {

using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

enum class ArchKind { mlp, small_cnn };

/// MLP: `widths` are hidden layer widths.
/// SmallCNN: `widths` are 3x3 convolution widths; every second convolution
/// has stride 2. The convolutions are followed by a `fc_width` hidden
/// dense layer and the output layer.
struct ArchSpec {
  ArchKind kind = ArchKind::mlp;
  std::vector<int> widths = {32, 32};
  int fc_width = 128;

  static ArchSpec mlp(std::vector<int> hidden) { return {ArchKind::mlp, std::move(hidden), 0}; }
  static ArchSpec small_cnn(std::vector<int> conv = {32, 32, 64, 64, 128, 128}, int fc = 128) {
    return {ArchKind::small_cnn, std::move(conv), fc};
  }

  std::string describe() const {
    std::ostringstream os;
    os << (kind == ArchKind::mlp ? "mlp[" : "small_cnn[");
    for (std::size_t i = 0; i < widths.size(); ++i) os << (i ? "," : "") << widths[i];
    os << "]";
    if (kind == ArchKind::small_cnn) os << "+fc" << fc_width;
    return os.str();
  }
};

/// Row-major batch x classes probability table.
struct Probabilities {
  std::size_t rows = 0;
  std::size_t classes = 0;
  std::vector<Real> data;

  std::span<const Real> row(std::size_t i) const { return {data.data() + i * classes, classes}; }
  std::span<Real> row(std::size_t i) { return {data.data() + i * classes, classes}; }
};

namespace detail {

// Activations are (features x batch) with one sample per column; image
// features are flattened channel-planar.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::size_t param_count() const { return 0; }
  virtual std::size_t out_dim() const = 0;
  virtual void init(std::span<Real> /*params*/, Rng& /*rng*/) const {}
  virtual void forward(std::span<const Real> params, const Matrix& in, Matrix& out) const = 0;
  // Accumulates parameter gradients into `grad`; writes input gradient to
  // `din` unless it is null.
  virtual void backward(std::span<const Real> params, const Matrix& in, const Matrix& out,
                        const Matrix& dout, std::span<Real> grad, Matrix* din) const = 0;
};

class Dense final : public Layer {
 public:
  Dense(std::size_t in, std::size_t out, Real init_gain) : in_(in), out_(out), gain_(init_gain) {}

  std::size_t param_count() const override { return out_ * in_ + out_; }
  std::size_t out_dim() const override { return out_; }

  void init(std::span<Real> p, Rng& rng) const override {
    const Real sd = std::sqrt(gain_ / static_cast<Real>(in_));
    for (std::size_t i = 0; i < out_ * in_; ++i) p[i] = rng.normal(0.0, sd);
    for (std::size_t i = out_ * in_; i < p.size(); ++i) p[i] = 0;
  }

  void forward(std::span<const Real> p, const Matrix& in, Matrix& out) const override {
    ConstMatrixMap w(p.data(), out_, in_);
    Eigen::Map<const Eigen::VectorXd> b(p.data() + out_ * in_, out_);
    out.noalias() = w * in;
    out.colwise() += b;
  }

  void backward(std::span<const Real> p, const Matrix& in, const Matrix& /*out*/,
                const Matrix& dout, std::span<Real> grad, Matrix* din) const override {
    MatrixMap gw(grad.data(), out_, in_);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + out_ * in_, out_);
    gw.noalias() += dout * in.transpose();
    gb += dout.rowwise().sum();
    if (din) {
      ConstMatrixMap w(p.data(), out_, in_);
      din->noalias() = w.transpose() * dout;
    }
  }

 private:
  std::size_t in_, out_;
  Real gain_;
};

class Relu final : public Layer {
 public:
  explicit Relu(std::size_t dim) : dim_(dim) {}
  std::size_t out_dim() const override { return dim_; }

  void forward(std::span<const Real>, const Matrix& in, Matrix& out) const override {
    out = in.cwiseMax(0.0);
  }

  void backward(std::span<const Real>, const Matrix& in, const Matrix&, const Matrix& dout,
                std::span<Real>, Matrix* din) const override {
    if (din) *din = (in.array() > 0).select(dout.array(), 0.0).matrix();
  }

 private:
  std::size_t dim_;
};

/// 3x3 convolution, padding 1.
class Conv3x3 final : public Layer {
 public:
  Conv3x3(int in_c, int in_h, int in_w, int out_c, int stride)
      : in_c_(in_c), in_h_(in_h), in_w_(in_w), out_c_(out_c), stride_(stride),
        out_h_((in_h - 1) / stride + 1), out_w_((in_w - 1) / stride + 1) {}

  int out_h() const { return out_h_; }
  int out_w() const { return out_w_; }
  std::size_t patch() const { return static_cast<std::size_t>(in_c_) * 9; }
  std::size_t positions() const { return static_cast<std::size_t>(out_h_) * out_w_; }

  std::size_t param_count() const override { return out_c_ * patch() + out_c_; }
  std::size_t out_dim() const override { return out_c_ * positions(); }

  void init(std::span<Real> p, Rng& rng) const override {
    const Real sd = std::sqrt(2.0 / static_cast<Real>(patch()));
    for (std::size_t i = 0; i < out_c_ * patch(); ++i) p[i] = rng.normal(0.0, sd);
    for (std::size_t i = out_c_ * patch(); i < p.size(); ++i) p[i] = 0;
  }

  void forward(std::span<const Real> p, const Matrix& in, Matrix& out) const override {
    ConstMatrixMap w(p.data(), out_c_, patch());
    Eigen::Map<const Eigen::RowVectorXd> b(p.data() + out_c_ * patch(), out_c_);
    out.resize(out_dim(), in.cols());
    Matrix cols(positions(), patch());
    for (Eigen::Index s = 0; s < in.cols(); ++s) {
      im2col(in.col(s).data(), cols);
      MatrixMap o(out.col(s).data(), positions(), out_c_);
      o.noalias() = cols * w.transpose();
      o.rowwise() += b;
    }
  }

  void backward(std::span<const Real> p, const Matrix& in, const Matrix&, const Matrix& dout,
                std::span<Real> grad, Matrix* din) const override {
    ConstMatrixMap w(p.data(), out_c_, patch());
    MatrixMap gw(grad.data(), out_c_, patch());
    Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + out_c_ * patch(), out_c_);
    Matrix cols(positions(), patch());
    Matrix dcols(positions(), patch());
    if (din) din->setZero(in.rows(), in.cols());
    for (Eigen::Index s = 0; s < in.cols(); ++s) {
      ConstMatrixMap d(dout.col(s).data(), positions(), out_c_);
      im2col(in.col(s).data(), cols);
      gw.noalias() += d.transpose() * cols;
      gb += d.colwise().sum();
      if (din) {
        dcols.noalias() = d * w;
        col2im(dcols, din->col(s).data());
      }
    }
  }

 private:
  template <typename F>
  void for_each_tap(F&& f) const {
    for (int c = 0; c < in_c_; ++c)
      for (int kh = 0; kh < 3; ++kh)
        for (int kw = 0; kw < 3; ++kw) {
          const std::size_t q = static_cast<std::size_t>(c) * 9 + kh * 3 + kw;
          for (int oh = 0; oh < out_h_; ++oh) {
            const int ih = oh * stride_ + kh - 1;
            for (int ow = 0; ow < out_w_; ++ow) {
              const int iw = ow * stride_ + kw - 1;
              const std::size_t pos = static_cast<std::size_t>(oh) * out_w_ + ow;
              if (ih < 0 || ih >= in_h_ || iw < 0 || iw >= in_w_) {
                f(pos, q, std::nullopt);
              } else {
                f(pos, q, std::optional<std::size_t>(
                              (static_cast<std::size_t>(c) * in_h_ + ih) * in_w_ + iw));
              }
            }
          }
        }
  }

  void im2col(const Real* x, Matrix& cols) const {
    for_each_tap([&](std::size_t pos, std::size_t q, std::optional<std::size_t> src) {
      cols(pos, q) = src ? x[*src] : 0.0;
    });
  }

  void col2im(const Matrix& dcols, Real* dx) const {
    for_each_tap([&](std::size_t pos, std::size_t q, std::optional<std::size_t> src) {
      if (src) dx[*src] += dcols(pos, q);
    });
  }

  int in_c_, in_h_, in_w_, out_c_, stride_, out_h_, out_w_;
};

}  // namespace detail

/// Forward activations kept for a backward pass.
struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] is the input
  Probabilities probs;
};

/// Feed-forward classifier with a softmax output. Parameters live in one
/// flat vector; each layer owns a contiguous slice. Copies share the
/// immutable layer descriptions and own their parameters.
class Classifier {
 public:
  Classifier(const ArchSpec& spec, int classes, std::vector<int> input_shape)
      : spec_(spec), classes_(classes), input_shape_(std::move(input_shape)) {
    build();
  }

  const ArchSpec& spec() const { return spec_; }
  int classes() const { return classes_; }
  const std::vector<int>& input_shape() const { return input_shape_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t param_count() const { return params_.size(); }

  std::span<const Real> params() const { return params_; }
  std::span<Real> params() { return params_; }

  std::vector<std::size_t> block_sizes() const {
    std::vector<std::size_t> out;
    for (const auto& l : layers_)
      if (l->param_count()) out.push_back(l->param_count());
    return out;
  }

  /// He-normal (variance 2 / fan_in) for hidden layers, variance 0.01 / fan_in
  /// for the output layer, zero biases.
  void initialize(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x696e6974ULL));
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i]->init(slice(i), rng);
  }

  /// `features` holds `rows` samples of `input_dim()` values each.
  ForwardCache forward(std::span<const Real> features, std::size_t rows) const {
    if (features.size() != rows * input_dim_)
      throw ParameterError("feature buffer does not match input shape");
    ForwardCache cache;
    cache.activations.resize(layers_.size() + 1);
    cache.activations[0] = ConstMatrixMap(features.data(), input_dim_, rows);
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i]->forward(cslice(i), cache.activations[i], cache.activations[i + 1]);

    const Matrix& logits = cache.activations.back();
    cache.probs.rows = rows;
    cache.probs.classes = classes_;
    cache.probs.data.resize(rows * classes_);
    for (std::size_t s = 0; s < rows; ++s) {
      const auto z = logits.col(static_cast<Eigen::Index>(s));
      const Real m = z.maxCoeff();
      Real sum = 0;
      auto out = cache.probs.row(s);
      for (int k = 0; k < classes_; ++k) sum += (out[k] = std::exp(z(k) - m));
      for (int k = 0; k < classes_; ++k) out[k] /= sum;
    }
    return cache;
  }

  Probabilities predict_proba(std::span<const Real> features, std::size_t rows) const {
    return forward(features, rows).probs;
  }

  /// Parameter gradient given d(loss)/d(logits), one column per sample.
  std::vector<Real> backward(const ForwardCache& cache, const Matrix& dlogits) const {
    std::vector<Real> grad(params_.size(), 0.0);
    Matrix d = dlogits, dprev;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      layers_[i]->backward(cslice(i), cache.activations[i], cache.activations[i + 1], d,
                           std::span<Real>(grad).subspan(offsets_[i], layers_[i]->param_count()),
                           i > 0 ? &dprev : nullptr);
      if (i > 0) std::swap(d, dprev);
    }
    return grad;
  }

 private:
  void build() {
    if (classes_ < 2) throw ParameterError("classifier needs at least 2 classes");
    if (input_shape_.empty()) throw ParameterError("empty input shape");
    input_dim_ = 1;
    for (int s : input_shape_) {
      if (s <= 0) throw ParameterError("input shape entries must be positive");
      input_dim_ *= static_cast<std::size_t>(s);
    }
    for (int w : spec_.widths)
      if (w <= 0) throw ParameterError("layer widths must be positive");

    std::size_t dim = input_dim_;
    auto dense = [&](std::size_t out, Real gain) {
      layers_.push_back(std::make_shared<detail::Dense>(dim, out, gain));
      dim = out;
    };
    auto relu = [&] { layers_.push_back(std::make_shared<detail::Relu>(dim)); };

    if (spec_.kind == ArchKind::mlp) {
      for (int w : spec_.widths) {
        dense(static_cast<std::size_t>(w), 2.0);
        relu();
      }
    } else {
      if (input_shape_.size() != 3)
        throw ParameterError("small_cnn needs a (C,H,W) input shape");
      if (spec_.widths.empty()) throw ParameterError("small_cnn needs convolution widths");
      if (spec_.fc_width <= 0) throw ParameterError("fc width must be positive");
      int c = input_shape_[0], h = input_shape_[1], w = input_shape_[2];
      for (std::size_t i = 0; i < spec_.widths.size(); ++i) {
        const int stride = (i % 2 == 1) ? 2 : 1;
        auto conv = std::make_shared<detail::Conv3x3>(c, h, w, spec_.widths[i], stride);
        h = conv->out_h();
        w = conv->out_w();
        c = spec_.widths[i];
        dim = conv->out_dim();
        layers_.push_back(std::move(conv));
        relu();
      }
      dense(static_cast<std::size_t>(spec_.fc_width), 2.0);
      relu();
    }
    dense(static_cast<std::size_t>(classes_), 0.01);

    offsets_.clear();
    std::size_t total = 0;
    for (const auto& l : layers_) {
      offsets_.push_back(total);
      total += l->param_count();
    }
    params_.assign(total, 0.0);
  }

  std::span<Real> slice(std::size_t i) {
    return std::span<Real>(params_).subspan(offsets_[i], layers_[i]->param_count());
  }
  std::span<const Real> cslice(std::size_t i) const {
    return std::span<const Real>(params_).subspan(offsets_[i], layers_[i]->param_count());
  }

  ArchSpec spec_;
  int classes_;
  std::vector<int> input_shape_;
  std::size_t input_dim_ = 0;
  std::vector<std::shared_ptr<const detail::Layer>> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<Real> params_;
};

inline Classifier init_classifier(const ArchSpec& spec, int classes,
                                  const std::vector<int>& input_shape, std::uint64_t seed) {
  Classifier c(spec, classes, input_shape);
  c.initialize(seed);
  return c;
}

/// Absent soft labels (unseen class rows) drop the IC term for that sample.
using SoftLabel = std::optional<std::span<const Real>>;

/// Per-sample loss of one prediction. With an absent soft label the sample
/// is scored by cross-entropy alone (reported with lambda = 1).
inline LossBreakdown sample_loss(std::span<const Real> p, Label y, const SoftLabel& soft,
                                 Real lambda) {
  const Real cls = cross_entropy(p, y);
  if (!soft) return {cls, 0.0, cls, 1.0};
  return overall_loss(cls, ic_loss(*soft, p), lambda);
}

/// Adds d(sample_loss)/dp, scaled by `weight`, into `g`.
inline void add_sample_loss_grad(std::span<const Real> p, Label y, const SoftLabel& soft,
                                 Real lambda, Real weight, std::span<Real> g) {
  if (!soft) {
    add_cross_entropy_grad(p, y, weight, g);
    return;
  }
  add_cross_entropy_grad(p, y, weight * lambda, g);
  add_ic_grad(*soft, p, weight * (1 - lambda), g);
}

struct GradientResult {
  std::vector<Real> grad;
  std::vector<LossBreakdown> parts;
  Probabilities probs;
  Real mean_loss = 0;
};

/// Gradient of the batch mean of  lambda * CE + (1 - lambda) * IC  over the
/// given samples. Soft labels are constants.
inline GradientResult grad_overall(const Classifier& net, std::span<const Real> features,
                                   std::span<const Label> labels,
                                   std::span<const SoftLabel> soft, Real lambda) {
  check_lambda(lambda);
  const std::size_t rows = labels.size();
  if (soft.size() != rows) throw ParameterError("soft label count does not match batch");
  if (rows == 0) throw ParameterError("empty batch");
  ForwardCache cache = net.forward(features, rows);
  const int k = net.classes();

  GradientResult out;
  out.parts.reserve(rows);
  Matrix dlogits(k, static_cast<Eigen::Index>(rows));
  std::vector<Real> g(k);
  const Real weight = 1.0 / static_cast<Real>(rows);
  for (std::size_t s = 0; s < rows; ++s) {
    const auto p = cache.probs.row(s);
    if (soft[s] && soft[s]->size() != p.size())
      throw ParameterError("soft label length does not match class count");
    out.parts.push_back(sample_loss(p, labels[s], soft[s], lambda));
    out.mean_loss += out.parts.back().overall * weight;
    std::fill(g.begin(), g.end(), 0.0);
    add_sample_loss_grad(p, labels[s], soft[s], lambda, weight, g);
    softmax_backward(p, g, std::span<Real>(dlogits.col(static_cast<Eigen::Index>(s)).data(), k));
  }
  out.grad = net.backward(cache, dlogits);
  out.probs = std::move(cache.probs);
  return out;
}

// ---------------------------------------------------------------------------
// Adaptive-moment optimizer

struct AdamState {
  std::vector<Real> m;
  std::vector<Real> v;
  std::uint64_t step = 0;
  Real lr = 0.001;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;

  explicit AdamState(std::size_t n = 0, Real learning_rate = 0.001)
      : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

/// Bias-corrected Adam step on a flat parameter vector.
inline void apply_update(std::span<Real> params, AdamState& st, std::span<const Real> grad) {
  if (grad.size() != params.size() || st.m.size() != params.size())
    throw ParameterError("gradient shape does not match parameters");
  ++st.step;
  const Real c1 = 1 - std::pow(st.beta1, static_cast<Real>(st.step));
  const Real c2 = 1 - std::pow(st.beta2, static_cast<Real>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1 - st.beta2) * grad[i] * grad[i];
    const Real mhat = st.m[i] / c1;
    const Real vhat = st.v[i] / c2;
    params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

inline void apply_update(Classifier& net, AdamState& st, std::span<const Real> grad) {
  apply_update(net.params(), st, grad);
}

// ---------------------------------------------------------------------------
// Checkpoints: "NIBCKPT1", u64 block count, u64 size per block, then the
// parameters as little-endian IEEE doubles.

inline void save_checkpoint(const Classifier& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write("NIBCKPT1", 8);
  const auto blocks = net.block_sizes();
  const std::uint64_t nb = blocks.size();
  out.write(reinterpret_cast<const char*>(&nb), sizeof nb);
  for (std::uint64_t b : blocks) out.write(reinterpret_cast<const char*>(&b), sizeof b);
  out.write(reinterpret_cast<const char*>(net.params().data()),
            static_cast<std::streamsize>(net.param_count() * sizeof(Real)));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

inline void load_checkpoint(Classifier& net, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "NIBCKPT1")
    throw FormatError("bad checkpoint header in " + path.string());
  std::uint64_t nb = 0;
  in.read(reinterpret_cast<char*>(&nb), sizeof nb);
  std::vector<std::uint64_t> blocks(nb);
  for (auto& b : blocks) in.read(reinterpret_cast<char*>(&b), sizeof b);
  const auto expect = net.block_sizes();
  if (!in || blocks.size() != expect.size() ||
      !std::equal(blocks.begin(), blocks.end(), expect.begin()))
    throw FormatError("checkpoint shape does not match architecture");
  in.read(reinterpret_cast<char*>(net.params().data()),
          static_cast<std::streamsize>(net.param_count() * sizeof(Real)));
  if (!in) throw FormatError("truncated checkpoint " + path.string());
}

}  // namespace nib
