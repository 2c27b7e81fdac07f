#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "vcsp/image.hpp"

namespace vcsp {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  Real learning_rate = 0.05;
  Real momentum = 0.9;
  std::uint64_t seed = 0;
};

/// One weight layer. The network structure is implied by the layer list:
/// every conv is followed by ReLU and 2x2 max-pool, the feature maps are then
/// flattened (channel-major), and dense layers follow with ReLU between
/// consecutive dense layers and none after the last.
struct Layer {
  enum class Type : std::uint8_t { Conv = 0, Dense = 1 };
  Type type = Type::Dense;
  int out_ch = 0, in_ch = 0, kh = 0, kw = 0;  // conv dims; dense uses weight shape
  Eigen::MatrixXd weight;  // conv: out_ch x (in_ch*kh*kw); dense: out x in
  Eigen::VectorXd bias;
};

struct ModelParams {
  std::vector<Layer> layers;

  int num_classes() const {
    return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
  }
};

using Logits = Eigen::VectorXd;

/// Channel planes of one feature map.
struct Planes {
  Eigen::Index h = 0, w = 0;
  std::vector<Eigen::MatrixXd> ch;
};

/// Forward intermediates kept for backprop and for activation signatures.
struct ForwardTrace {
  std::vector<Planes> conv_in;    // input to each conv
  std::vector<Planes> conv_pre;   // pre-ReLU conv outputs
  std::vector<std::vector<Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>>>
      pool_argmax;                // 2x2 window winner (di*2+dj), per conv, per channel
  Eigen::VectorXd flat;
  std::vector<Eigen::VectorXd> dense_in;   // input to each dense
  std::vector<Eigen::VectorXd> dense_pre;  // dense outputs before activation
  Logits logits;
};

/// conv(3x3, 8, pad 1) -> ReLU -> pool -> conv(3x3, 16, pad 1) -> ReLU ->
/// pool -> dense(num_classes). He-uniform weights, zero biases, weights
/// snapped to f32 so serialization is lossless.
ModelParams make_reference_model(Eigen::Index input_h, Eigen::Index input_w,
                                 int num_classes, std::uint64_t seed);

Planes image_to_planes(const Image& img);

ForwardTrace forward_trace(const ModelParams& params, const Image& img);
Logits forward_one(const ModelParams& params, const Image& img);
std::vector<Logits> forward(const ModelParams& params, std::span<const Image> batch);

Eigen::VectorXd softmax(const Logits& logits);

/// -log softmax(logits)[label] via log-sum-exp.
Real cross_entropy(const Logits& logits, int label);

/// Exact backpropagated d(cross_entropy)/d(input pixels), one row per pixel.
PixelMatrix<Real> input_gradient(const ModelParams& params, const Image& img, int label);

/// Argmax class; ties break toward the lowest index.
int predict(const ModelParams& params, const Image& img);

Real mean_loss(const ModelParams& params, std::span<const Image> images,
               std::span<const int> labels);

/// Minibatch SGD with momentum on the reference architecture. Deterministic
/// given the seed; throws NumericError if the loss goes non-finite.
ModelParams train(std::span<const Image> images, std::span<const int> labels,
                  int num_classes, const TrainConfig& cfg);

Real accuracy(const ModelParams& params, std::span<const Image> images,
              std::span<const int> labels);

}  // namespace vcsp
