#include "vcsp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vcsp/errors.hpp"
#include "vcsp/rng.hpp"

namespace vcsp {
namespace {

double snap_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void snap_layer(Layer& l) {
  l.weight = l.weight.unaryExpr([](double v) { return snap_f32(v); });
  l.bias = l.bias.unaryExpr([](double v) { return snap_f32(v); });
}

// out(i,j) += w * in(i+di, j+dj) over the overlap of the shifted grids.
void shifted_axpy(Eigen::MatrixXd& out, const Eigen::MatrixXd& in, double w,
                  int di, int dj) {
  const Eigen::Index rows = out.rows() - std::abs(di);
  const Eigen::Index cols = out.cols() - std::abs(dj);
  if (rows <= 0 || cols <= 0 || w == 0.0) return;
  out.block(std::max(0, -di), std::max(0, -dj), rows, cols) +=
      w * in.block(std::max(0, di), std::max(0, dj), rows, cols);
}

double shifted_dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int di, int dj) {
  const Eigen::Index rows = a.rows() - std::abs(di);
  const Eigen::Index cols = a.cols() - std::abs(dj);
  if (rows <= 0 || cols <= 0) return 0.0;
  return a.block(std::max(0, -di), std::max(0, -dj), rows, cols)
      .cwiseProduct(b.block(std::max(0, di), std::max(0, dj), rows, cols))
      .sum();
}

Planes conv_forward(const Layer& l, const Planes& in) {
  if (static_cast<int>(in.ch.size()) != l.in_ch) {
    throw std::invalid_argument("conv: channel count mismatch");
  }
  const int pad_h = l.kh / 2, pad_w = l.kw / 2;
  Planes out{in.h, in.w, {}};
  out.ch.resize(l.out_ch);
  for (int oc = 0; oc < l.out_ch; ++oc) {
    out.ch[oc] = Eigen::MatrixXd::Constant(in.h, in.w, l.bias(oc));
    for (int ic = 0; ic < l.in_ch; ++ic) {
      for (int ki = 0; ki < l.kh; ++ki) {
        for (int kj = 0; kj < l.kw; ++kj) {
          shifted_axpy(out.ch[oc], in.ch[ic], l.weight(oc, (ic * l.kh + ki) * l.kw + kj),
                       ki - pad_h, kj - pad_w);
        }
      }
    }
  }
  return out;
}

Planes conv_backward_input(const Layer& l, const Planes& g_out) {
  const int pad_h = l.kh / 2, pad_w = l.kw / 2;
  Planes g_in{g_out.h, g_out.w, {}};
  g_in.ch.assign(l.in_ch, Eigen::MatrixXd::Zero(g_out.h, g_out.w));
  for (int oc = 0; oc < l.out_ch; ++oc) {
    for (int ic = 0; ic < l.in_ch; ++ic) {
      for (int ki = 0; ki < l.kh; ++ki) {
        for (int kj = 0; kj < l.kw; ++kj) {
          // mirror of the forward shift
          shifted_axpy(g_in.ch[ic], g_out.ch[oc], l.weight(oc, (ic * l.kh + ki) * l.kw + kj),
                       pad_h - ki, pad_w - kj);
        }
      }
    }
  }
  return g_in;
}

void conv_weight_grad(const Layer& l, const Planes& in, const Planes& g_out,
                      Eigen::MatrixXd& gw, Eigen::VectorXd& gb) {
  const int pad_h = l.kh / 2, pad_w = l.kw / 2;
  for (int oc = 0; oc < l.out_ch; ++oc) {
    gb(oc) += g_out.ch[oc].sum();
    for (int ic = 0; ic < l.in_ch; ++ic) {
      for (int ki = 0; ki < l.kh; ++ki) {
        for (int kj = 0; kj < l.kw; ++kj) {
          gw(oc, (ic * l.kh + ki) * l.kw + kj) +=
              shifted_dot(g_out.ch[oc], in.ch[ic], ki - pad_h, kj - pad_w);
        }
      }
    }
  }
}

void relu_inplace(Planes& p) {
  for (auto& m : p.ch) m = m.cwiseMax(0.0);
}

Planes maxpool_forward(const Planes& in,
                       std::vector<Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>>& argmax) {
  if (in.h % 2 != 0 || in.w % 2 != 0) {
    throw std::invalid_argument("maxpool: feature map dims must be even");
  }
  Planes out{in.h / 2, in.w / 2, {}};
  out.ch.resize(in.ch.size());
  argmax.resize(in.ch.size());
  for (std::size_t c = 0; c < in.ch.size(); ++c) {
    out.ch[c].resize(out.h, out.w);
    argmax[c].resize(out.h, out.w);
    for (Eigen::Index i = 0; i < out.h; ++i) {
      for (Eigen::Index j = 0; j < out.w; ++j) {
        double best = in.ch[c](2 * i, 2 * j);
        std::int8_t arg = 0;
        for (int k = 1; k < 4; ++k) {
          const double v = in.ch[c](2 * i + k / 2, 2 * j + k % 2);
          if (v > best) {  // first maximal element in scan order wins
            best = v;
            arg = static_cast<std::int8_t>(k);
          }
        }
        out.ch[c](i, j) = best;
        argmax[c](i, j) = arg;
      }
    }
  }
  return out;
}

Planes maxpool_backward(
    const Planes& g_out,
    const std::vector<Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>>& argmax) {
  Planes g_in{g_out.h * 2, g_out.w * 2, {}};
  g_in.ch.assign(g_out.ch.size(), Eigen::MatrixXd::Zero(g_out.h * 2, g_out.w * 2));
  for (std::size_t c = 0; c < g_out.ch.size(); ++c) {
    for (Eigen::Index i = 0; i < g_out.h; ++i) {
      for (Eigen::Index j = 0; j < g_out.w; ++j) {
        const int k = argmax[c](i, j);
        g_in.ch[c](2 * i + k / 2, 2 * j + k % 2) = g_out.ch[c](i, j);
      }
    }
  }
  return g_in;
}

Eigen::VectorXd flatten(const Planes& p) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(p.ch.size()) * p.h * p.w);
  Eigen::Index off = 0;
  for (const auto& m : p.ch) {
    for (Eigen::Index i = 0; i < p.h; ++i) {
      for (Eigen::Index j = 0; j < p.w; ++j) v(off++) = m(i, j);
    }
  }
  return v;
}

Planes unflatten(const Eigen::VectorXd& v, std::size_t channels, Eigen::Index h, Eigen::Index w) {
  Planes p{h, w, {}};
  p.ch.resize(channels);
  Eigen::Index off = 0;
  for (auto& m : p.ch) {
    m.resize(h, w);
    for (Eigen::Index i = 0; i < h; ++i) {
      for (Eigen::Index j = 0; j < w; ++j) m(i, j) = v(off++);
    }
  }
  return p;
}

struct LayerGrads {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

// Shared backward pass. Fills weight grads when `grads` is non-null and
// returns the input-pixel gradient when `want_input` is set.
PixelMatrix<Real> backward(const ModelParams& params, const ForwardTrace& t, int label,
                           std::vector<LayerGrads>* grads, bool want_input) {
  const int num_dense = static_cast<int>(t.dense_in.size());
  const int num_conv = static_cast<int>(t.conv_in.size());

  Eigen::VectorXd g = softmax(t.logits);
  g(label) -= 1.0;

  int dense_idx = num_dense - 1;
  for (int li = static_cast<int>(params.layers.size()) - 1; li >= 0; --li) {
    const Layer& l = params.layers[li];
    if (l.type != Layer::Type::Dense) break;
    if (grads) {
      (*grads)[li].weight += g * t.dense_in[dense_idx].transpose();
      (*grads)[li].bias += g;
    }
    g = l.weight.transpose() * g;
    if (dense_idx > 0) {
      // ReLU between consecutive dense layers
      g = (t.dense_pre[dense_idx - 1].array() > 0.0).select(g, 0.0);
    }
    --dense_idx;
  }

  if (num_conv == 0) {
    // dense-only model: g is already the input gradient
    if (!want_input) return {};
    PixelMatrix<Real> gi(g.size() / 3, 3);
    for (Eigen::Index p = 0; p < gi.rows(); ++p) {
      for (int c = 0; c < 3; ++c) gi(p, c) = g(c * gi.rows() + p);
    }
    return gi;
  }

  const Eigen::Index fh = t.conv_pre.back().h / 2;
  const Eigen::Index fw = t.conv_pre.back().w / 2;
  Planes gp = unflatten(g, t.conv_pre.back().ch.size(), fh, fw);

  for (int ci = num_conv - 1; ci >= 0; --ci) {
    const Layer& l = params.layers[ci];
    Planes ga = maxpool_backward(gp, t.pool_argmax[ci]);
    for (std::size_t c = 0; c < ga.ch.size(); ++c) {
      ga.ch[c] = (t.conv_pre[ci].ch[c].array() > 0.0).select(ga.ch[c], 0.0);
    }
    if (grads) {
      conv_weight_grad(l, t.conv_in[ci], ga, (*grads)[ci].weight, (*grads)[ci].bias);
    }
    if (ci > 0 || want_input) {
      gp = conv_backward_input(l, ga);
    }
  }

  if (!want_input) return {};
  PixelMatrix<Real> gi(gp.h * gp.w, 3);
  for (Eigen::Index i = 0; i < gp.h; ++i) {
    for (Eigen::Index j = 0; j < gp.w; ++j) {
      for (int c = 0; c < 3; ++c) gi(i * gp.w + j, c) = gp.ch[c](i, j);
    }
  }
  return gi;
}

}  // namespace

Planes image_to_planes(const Image& img) {
  Planes p{img.height, img.width, {}};
  p.ch.resize(3);
  for (int c = 0; c < 3; ++c) {
    p.ch[c].resize(img.height, img.width);
    for (Eigen::Index i = 0; i < img.height; ++i) {
      for (Eigen::Index j = 0; j < img.width; ++j) p.ch[c](i, j) = img(i, j, c);
    }
  }
  return p;
}

ModelParams make_reference_model(Eigen::Index input_h, Eigen::Index input_w,
                                 int num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("model needs >= 2 classes");
  if (input_h % 4 != 0 || input_w % 4 != 0 || input_h < 4 || input_w < 4) {
    throw std::invalid_argument("reference model needs input dims divisible by 4");
  }
  Rng rng(derive_seed(seed, 0x1417u));
  ModelParams params;
  auto he_uniform = [&](Eigen::MatrixXd& w, int fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
    }
  };

  Layer c1{Layer::Type::Conv, 8, 3, 3, 3, Eigen::MatrixXd(8, 27), Eigen::VectorXd::Zero(8)};
  he_uniform(c1.weight, 27);
  Layer c2{Layer::Type::Conv, 16, 8, 3, 3, Eigen::MatrixXd(16, 72), Eigen::VectorXd::Zero(16)};
  he_uniform(c2.weight, 72);
  const int feat = static_cast<int>(16 * (input_h / 4) * (input_w / 4));
  Layer d{Layer::Type::Dense, 0, 0, 0, 0, Eigen::MatrixXd(num_classes, feat),
          Eigen::VectorXd::Zero(num_classes)};
  he_uniform(d.weight, feat);

  params.layers = {std::move(c1), std::move(c2), std::move(d)};
  for (auto& l : params.layers) snap_layer(l);
  return params;
}

ForwardTrace forward_trace(const ModelParams& params, const Image& img) {
  if (params.layers.empty()) throw std::invalid_argument("empty model");
  ForwardTrace t;
  bool flattened = false;
  Planes cur;
  Eigen::VectorXd vec;

  for (const Layer& l : params.layers) {
    if (l.type == Layer::Type::Conv) {
      if (flattened) throw std::invalid_argument("conv after dense is unsupported");
      if (t.conv_in.empty()) {
        if (l.in_ch != 3) throw std::invalid_argument("first conv must take 3 channels");
        cur = image_to_planes(img);
      }
      t.conv_in.push_back(cur);
      Planes pre = conv_forward(l, cur);
      t.conv_pre.push_back(pre);
      relu_inplace(pre);
      t.pool_argmax.emplace_back();
      cur = maxpool_forward(pre, t.pool_argmax.back());
    } else {
      if (!flattened) {
        vec = t.conv_in.empty() ? flatten(image_to_planes(img)) : flatten(cur);
        t.flat = vec;
        flattened = true;
      }
      if (l.weight.cols() != vec.size()) {
        throw std::invalid_argument("dense layer input size mismatch");
      }
      if (!t.dense_pre.empty()) vec = vec.cwiseMax(0.0);  // ReLU between denses
      t.dense_in.push_back(vec);
      vec = l.weight * vec + l.bias;
      t.dense_pre.push_back(vec);
    }
  }
  if (t.dense_pre.empty()) throw std::invalid_argument("model must end in a dense layer");
  t.logits = t.dense_pre.back();
  return t;
}

Logits forward_one(const ModelParams& params, const Image& img) {
  return forward_trace(params, img).logits;
}

std::vector<Logits> forward(const ModelParams& params, std::span<const Image> batch) {
  std::vector<Logits> out;
  out.reserve(batch.size());
  for (const Image& img : batch) out.push_back(forward_one(params, img));
  return out;
}

Eigen::VectorXd softmax(const Logits& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

Real cross_entropy(const Logits& logits, int label) {
  if (label < 0 || label >= logits.size()) {
    throw std::out_of_range("cross_entropy: label out of range");
  }
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(label);
}

PixelMatrix<Real> input_gradient(const ModelParams& params, const Image& img, int label) {
  const ForwardTrace t = forward_trace(params, img);
  return backward(params, t, label, nullptr, true);
}

int predict(const ModelParams& params, const Image& img) {
  const Logits l = forward_one(params, img);
  int best = 0;
  for (int k = 1; k < l.size(); ++k) {
    if (l(k) > l(best)) best = k;  // ties stay at the lowest index
  }
  return best;
}

Real mean_loss(const ModelParams& params, std::span<const Image> images,
               std::span<const int> labels) {
  if (images.empty()) throw std::invalid_argument("mean_loss: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    sum += cross_entropy(forward_one(params, images[i]), labels[i]);
  }
  return sum / static_cast<double>(images.size());
}

ModelParams train(std::span<const Image> images, std::span<const int> labels,
                  int num_classes, const TrainConfig& cfg) {
  if (images.empty()) throw std::invalid_argument("train: empty dataset");
  if (images.size() != labels.size()) throw std::invalid_argument("train: size mismatch");
  if (cfg.epochs < 1 || cfg.learning_rate <= 0.0 || cfg.batch_size < 1) {
    throw std::invalid_argument("train: bad config");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw std::invalid_argument("train: label out of range");
  }

  ModelParams params =
      make_reference_model(images[0].height, images[0].width, num_classes, cfg.seed);
  std::vector<LayerGrads> grads(params.layers.size());
  std::vector<LayerGrads> vel(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    vel[i].weight = Eigen::MatrixXd::Zero(params.layers[i].weight.rows(),
                                          params.layers[i].weight.cols());
    vel[i].bias = Eigen::VectorXd::Zero(params.layers[i].bias.size());
  }

  Rng rng(derive_seed(cfg.seed, 0x7a31u));
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t i = 0; i < params.layers.size(); ++i) {
        grads[i].weight = Eigen::MatrixXd::Zero(params.layers[i].weight.rows(),
                                                params.layers[i].weight.cols());
        grads[i].bias = Eigen::VectorXd::Zero(params.layers[i].bias.size());
      }
      double batch_loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const ForwardTrace t = forward_trace(params, images[order[b]]);
        batch_loss += cross_entropy(t.logits, labels[order[b]]);
        backward(params, t, labels[order[b]], &grads, false);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericError("train: non-finite loss");
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < params.layers.size(); ++i) {
        vel[i].weight = cfg.momentum * vel[i].weight - cfg.learning_rate * inv * grads[i].weight;
        vel[i].bias = cfg.momentum * vel[i].bias - cfg.learning_rate * inv * grads[i].bias;
        params.layers[i].weight += vel[i].weight;
        params.layers[i].bias += vel[i].bias;
      }
    }
  }
  for (auto& l : params.layers) snap_layer(l);
  return params;
}

Real accuracy(const ModelParams& params, std::span<const Image> images,
              std::span<const int> labels) {
  if (images.empty()) throw std::invalid_argument("accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (predict(params, images[i]) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(images.size());
}

}  // namespace vcsp
