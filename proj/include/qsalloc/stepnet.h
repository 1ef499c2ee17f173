// Copyright 2026 The qsalloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Forward inference for the quantization-step generation network. The network
// maps an RGB image to a single-channel map at 1/16 resolution whose values
// (after a softplus head) are strictly positive quantization steps.
//
// Arithmetic is 32-bit float with a fixed accumulation order (input channel,
// then kernel row, then kernel column), so results are bit-reproducible.

#ifndef QSALLOC_STEPNET_H_
#define QSALLOC_STEPNET_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "qsalloc/image_io.h"

namespace qsalloc {

// Channel-major C x H x W grid of floats.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int c, int h, int w)
      : channels(c), height(h), width(w), data(size_t(c) * h * w, 0.0f) {}

  float at(int c, int y, int x) const {
    return data[(size_t(c) * height + y) * width + x];
  }
  float& at(int c, int y, int x) {
    return data[(size_t(c) * height + y) * width + x];
  }
};

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_size = 0;
  int stride = 1;
  // out x in x k x k, row-major.
  std::vector<float> weights;
  std::vector<float> bias;

  float weight(int o, int i, int ky, int kx) const {
    return weights[((size_t(o) * in_channels + i) * kernel_size + ky) *
                       kernel_size +
                   kx];
  }
};

enum class LayerKind { kConv, kResBlock };

// A plain convolution, or a residual block: conv3x3 -> ReLU -> conv3x3 plus
// the identity skip. For residual blocks |conv| and |conv2| are CH -> CH,
// stride 1.
struct Layer {
  LayerKind kind = LayerKind::kConv;
  ConvLayer conv;
  ConvLayer conv2;
};

struct ModelWeights {
  std::vector<Layer> layers;
};

// Checks channel chaining, 3-channel input, single-channel output, parameter
// counts, finiteness, and that the strides compose to exactly 16.
absl::Status ValidateModel(const ModelWeights& model);

// QSNW1 text format:
//   QSNW1
//   layers N
//   conv IN OUT K STRIDE <OUT*IN*K*K weights> <OUT biases>
//   resblock CH <conv1 weights> <conv1 biases> <conv2 weights> <conv2 biases>
absl::StatusOr<ModelWeights> ParseWeights(std::string_view text);
absl::StatusOr<ModelWeights> LoadWeights(const std::string& path);
std::string EncodeWeights(const ModelWeights& model);

// "Same-ceil" convolution: output dims are ceil(dim / stride); the total pad
// max((out-1)*stride + k - in, 0) is split with floor(pad/2) on the leading
// side, and out-of-range taps replicate the nearest edge sample.
absl::StatusOr<Tensor> Conv2d(const Tensor& input, const ConvLayer& layer);

// ln(1 + e^x), overflow-safe.
double Softplus(double x);

// Normalizes samples to [0, 1] and runs every layer, without the softplus
// head. Output is 1 x ceil(H/16) x ceil(W/16).
absl::StatusOr<Tensor> ForwardPreActivation(const RasterImage& image,
                                            const ModelWeights& model);

// Positive step grid at 1/16 resolution, row-major.
struct StepMap {
  int grid_w = 0;
  int grid_h = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[size_t(y) * grid_w + x]; }
  bool operator==(const StepMap&) const = default;
};

constexpr int kStepMapDownsample = 16;

absl::StatusOr<StepMap> InferStepMap(const RasterImage& image,
                                     const ModelWeights& model);

// A constant map sized for a width x height image.
StepMap UniformStepMap(int width, int height, double value);

// QSMAP text format: "QSMAP 1", "W H", then H rows of W positive values.
std::string EncodeStepMap(const StepMap& map);
absl::StatusOr<StepMap> DecodeStepMap(std::string_view text);
absl::Status SaveStepMap(const StepMap& map, const std::string& path);
absl::StatusOr<StepMap> LoadStepMap(const std::string& path);

// Seeded weights for the reference topology
//   conv3x3/2 (3->C), [ResBlock(C), conv3x3/2 (C->C)] x 3, ResBlock(C),
//   conv3x3/1 (C->1)
// No trained parameters ship with the library; these exist for tests, demos
// and benchmarking. The head bias is chosen so a flat image maps to steps
// near 1.
ModelWeights MakeFixtureWeights(uint64_t seed, int channels = 64);

}  // namespace qsalloc

#endif  // QSALLOC_STEPNET_H_
