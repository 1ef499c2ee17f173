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

#include "qsalloc/stepnet.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "qsalloc/file_util.h"
#include "qsalloc/grid_text.h"

namespace qsalloc {
namespace {

absl::Status ValidateConv(const ConvLayer& c, int index) {
  if (c.in_channels < 1 || c.out_channels < 1 || c.kernel_size < 1 ||
      c.stride < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("layer ", index, ": non-positive shape parameter"));
  }
  const size_t expect =
      size_t(c.out_channels) * c.in_channels * c.kernel_size * c.kernel_size;
  if (c.weights.size() != expect || c.bias.size() != size_t(c.out_channels)) {
    return absl::InvalidArgumentError(
        absl::StrCat("layer ", index, ": parameter count mismatch"));
  }
  for (float v : c.weights) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError(
          absl::StrCat("layer ", index, ": non-finite value"));
    }
  }
  for (float v : c.bias) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError(
          absl::StrCat("layer ", index, ": non-finite value"));
    }
  }
  return absl::OkStatus();
}

// Reads |count| finite values into |out|.
absl::Status ReadParams(TokenStream& tokens, size_t count, int index,
                        std::vector<float>* out) {
  out->clear();
  out->reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const std::optional<double> v = tokens.NextReal();
    if (!v) {
      return absl::InvalidArgumentError(
          absl::StrCat("layer ", index, ": parameter count mismatch"));
    }
    const float f = static_cast<float>(*v);
    if (!std::isfinite(*v) || !std::isfinite(f)) {
      return absl::InvalidArgumentError(
          absl::StrCat("layer ", index, ": non-finite value"));
    }
    out->push_back(f);
  }
  return absl::OkStatus();
}

absl::Status ReadConvParams(TokenStream& tokens, int index, ConvLayer* c) {
  const size_t n =
      size_t(c->out_channels) * c->in_channels * c->kernel_size * c->kernel_size;
  if (absl::Status s = ReadParams(tokens, n, index, &c->weights); !s.ok()) {
    return s;
  }
  return ReadParams(tokens, size_t(c->out_channels), index, &c->bias);
}

std::optional<int> ShapeInt(TokenStream& tokens) {
  const std::optional<int64_t> v = tokens.NextInt();
  if (!v || *v < 1 || *v > 4096) return std::nullopt;
  return static_cast<int>(*v);
}

void AppendConvParams(const ConvLayer& c, std::string* out) {
  for (size_t i = 0; i < c.weights.size(); ++i) {
    *out += (i % 16 == 0) ? '\n' : ' ';
    *out += FormatReal(c.weights[i]);
  }
  *out += '\n';
  for (size_t i = 0; i < c.bias.size(); ++i) {
    if (i > 0) *out += ' ';
    *out += FormatReal(c.bias[i]);
  }
  *out += '\n';
}

// Head gain of the fixture network. Random features are weakly spatially
// varying; amplifying the head makes block-level step differences visible
// after 64x64 averaging.
constexpr double kFixtureHeadGain = 6.0;

class FixtureRng {
 public:
  explicit FixtureRng(uint64_t seed) : engine_(seed) {}
  // Uniform in [-a, a).
  float Symmetric(double a) {
    const double u = double(engine_() >> 11) * 0x1.0p-53;
    return static_cast<float>((2.0 * u - 1.0) * a);
  }

 private:
  std::mt19937_64 engine_;
};

ConvLayer FixtureConv(FixtureRng& rng, int in, int out, int k, int stride,
                      double gain) {
  ConvLayer c;
  c.in_channels = in;
  c.out_channels = out;
  c.kernel_size = k;
  c.stride = stride;
  const double bound = gain * std::sqrt(3.0 / (double(in) * k * k));
  c.weights.resize(size_t(out) * in * k * k);
  for (float& w : c.weights) w = rng.Symmetric(bound);
  c.bias.resize(out);
  for (float& b : c.bias) b = rng.Symmetric(0.05);
  return c;
}

Layer FixtureResBlock(FixtureRng& rng, int ch) {
  Layer l;
  l.kind = LayerKind::kResBlock;
  l.conv = FixtureConv(rng, ch, ch, 3, 1, 1.0);
  l.conv2 = FixtureConv(rng, ch, ch, 3, 1, 0.25);
  return l;
}

Layer PlainLayer(ConvLayer c) {
  Layer l;
  l.kind = LayerKind::kConv;
  l.conv = std::move(c);
  return l;
}

}  // namespace

absl::Status ValidateModel(const ModelWeights& model) {
  if (model.layers.empty()) {
    return absl::InvalidArgumentError("model has no layers");
  }
  int channels = 3;
  int64_t stride_product = 1;
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& l = model.layers[i];
    const int index = static_cast<int>(i);
    if (absl::Status s = ValidateConv(l.conv, index); !s.ok()) return s;
    if (l.conv.in_channels != channels) {
      return absl::InvalidArgumentError(absl::StrCat(
          "layer ", index, ": expects ", l.conv.in_channels,
          " input channels, previous layer produces ", channels));
    }
    if (l.kind == LayerKind::kResBlock) {
      if (absl::Status s = ValidateConv(l.conv2, index); !s.ok()) return s;
      const int ch = l.conv.in_channels;
      if (l.conv.out_channels != ch || l.conv2.in_channels != ch ||
          l.conv2.out_channels != ch || l.conv.stride != 1 ||
          l.conv2.stride != 1) {
        return absl::InvalidArgumentError(absl::StrCat(
            "layer ", index, ": residual block must be CH->CH, stride 1"));
      }
    }
    channels = l.conv.out_channels;
    stride_product *= l.conv.stride;
    if (stride_product > 16) break;
  }
  if (stride_product != kStepMapDownsample) {
    return absl::InvalidArgumentError(absl::StrCat(
        "layer strides compose to ", stride_product, ", expected 16"));
  }
  if (channels != 1) {
    return absl::InvalidArgumentError("final layer must have 1 output channel");
  }
  return absl::OkStatus();
}

absl::StatusOr<ModelWeights> ParseWeights(std::string_view text) {
  TokenStream tokens(text);
  const std::string magic(tokens.Next());
  if (magic != "QSNW1") {
    if (absl::StartsWith(magic, "QSNW")) {
      return absl::InvalidArgumentError(
          absl::StrCat("unsupported version '", magic, "'"));
    }
    return absl::InvalidArgumentError(absl::StrCat("bad magic '", magic, "'"));
  }
  if (tokens.Next() != "layers") {
    return absl::InvalidArgumentError("expected 'layers N'");
  }
  const std::optional<int64_t> count = tokens.NextInt();
  if (!count || *count < 1 || *count > 10000) {
    return absl::InvalidArgumentError("bad layer count");
  }
  ModelWeights model;
  for (int i = 0; i < *count; ++i) {
    const std::string kind(tokens.Next());
    Layer layer;
    if (kind == "conv") {
      const auto in = ShapeInt(tokens), out = ShapeInt(tokens),
                 k = ShapeInt(tokens), stride = ShapeInt(tokens);
      if (!in || !out || !k || !stride) {
        return absl::InvalidArgumentError(
            absl::StrCat("layer ", i, ": malformed conv header"));
      }
      layer.conv = ConvLayer{*in, *out, *k, *stride, {}, {}};
      if (absl::Status s = ReadConvParams(tokens, i, &layer.conv); !s.ok()) {
        return s;
      }
    } else if (kind == "resblock") {
      const auto ch = ShapeInt(tokens);
      if (!ch) {
        return absl::InvalidArgumentError(
            absl::StrCat("layer ", i, ": malformed resblock header"));
      }
      layer.kind = LayerKind::kResBlock;
      layer.conv = ConvLayer{*ch, *ch, 3, 1, {}, {}};
      layer.conv2 = ConvLayer{*ch, *ch, 3, 1, {}, {}};
      if (absl::Status s = ReadConvParams(tokens, i, &layer.conv); !s.ok()) {
        return s;
      }
      if (absl::Status s = ReadConvParams(tokens, i, &layer.conv2); !s.ok()) {
        return s;
      }
    } else if (kind.empty()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "declared ", *count, " layers, found ", i));
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("layer ", i, ": parameter count mismatch near '", kind,
                       "'"));
    }
    model.layers.push_back(std::move(layer));
  }
  if (!tokens.AtEnd()) {
    return absl::InvalidArgumentError(
        "parameter count mismatch: trailing values after last layer");
  }
  if (absl::Status s = ValidateModel(model); !s.ok()) return s;
  return model;
}

absl::StatusOr<ModelWeights> LoadWeights(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<ModelWeights> model = ParseWeights(*text);
  if (!model.ok()) {
    return absl::Status(model.status().code(),
                        absl::StrCat(path, ": ", model.status().message()));
  }
  return model;
}

std::string EncodeWeights(const ModelWeights& model) {
  std::string out = absl::StrCat("QSNW1\nlayers ", model.layers.size(), "\n");
  for (const Layer& l : model.layers) {
    if (l.kind == LayerKind::kConv) {
      absl::StrAppend(&out, "conv ", l.conv.in_channels, " ",
                      l.conv.out_channels, " ", l.conv.kernel_size, " ",
                      l.conv.stride);
      AppendConvParams(l.conv, &out);
    } else {
      absl::StrAppend(&out, "resblock ", l.conv.in_channels);
      AppendConvParams(l.conv, &out);
      AppendConvParams(l.conv2, &out);
    }
  }
  return out;
}

absl::StatusOr<Tensor> Conv2d(const Tensor& input, const ConvLayer& layer) {
  if (input.channels != layer.in_channels) {
    return absl::InvalidArgumentError(
        absl::StrCat("conv2d channel mismatch: input has ", input.channels,
                     ", layer expects ", layer.in_channels));
  }
  const int k = layer.kernel_size, s = layer.stride;
  const int out_h = (input.height + s - 1) / s;
  const int out_w = (input.width + s - 1) / s;
  const int pad_y = std::max((out_h - 1) * s + k - input.height, 0) / 2;
  const int pad_x = std::max((out_w - 1) * s + k - input.width, 0) / 2;

  // Replicate padding: clamped source indices per kernel tap.
  std::vector<int> src_row(size_t(k) * out_h), src_col(size_t(k) * out_w);
  for (int t = 0; t < k; ++t) {
    for (int y = 0; y < out_h; ++y) {
      src_row[size_t(t) * out_h + y] =
          std::clamp(y * s + t - pad_y, 0, input.height - 1);
    }
    for (int x = 0; x < out_w; ++x) {
      src_col[size_t(t) * out_w + x] =
          std::clamp(x * s + t - pad_x, 0, input.width - 1);
    }
  }

  Tensor out(layer.out_channels, out_h, out_w);
  const size_t plane = size_t(out_h) * out_w;
  const size_t in_plane = size_t(input.height) * input.width;
  for (int o = 0; o < layer.out_channels; ++o) {
    float* acc = out.data.data() + o * plane;
    // Each output sample accumulates in (channel, row, column) tap order.
    for (int i = 0; i < layer.in_channels; ++i) {
      const float* src = input.data.data() + i * in_plane;
      for (int ky = 0; ky < k; ++ky) {
        const int* rows = src_row.data() + size_t(ky) * out_h;
        for (int kx = 0; kx < k; ++kx) {
          const float w = layer.weight(o, i, ky, kx);
          if (w == 0.0f) continue;
          const int* cols = src_col.data() + size_t(kx) * out_w;
          for (int y = 0; y < out_h; ++y) {
            const float* src_line = src + size_t(rows[y]) * input.width;
            float* acc_line = acc + size_t(y) * out_w;
            for (int x = 0; x < out_w; ++x) {
              acc_line[x] += w * src_line[cols[x]];
            }
          }
        }
      }
    }
    const float b = layer.bias[o];
    for (size_t j = 0; j < plane; ++j) acc[j] += b;
  }
  return out;
}

double Softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

absl::StatusOr<Tensor> ForwardPreActivation(const RasterImage& image,
                                            const ModelWeights& model) {
  if (image.channels() != 3) {
    return absl::InvalidArgumentError("step inference needs an RGB image");
  }
  if (absl::Status s = ValidateModel(model); !s.ok()) return s;

  Tensor x(3, image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int xx = 0; xx < image.width(); ++xx) {
      for (int c = 0; c < 3; ++c) {
        x.at(c, y, xx) = static_cast<float>(image.at(xx, y, c)) / 255.0f;
      }
    }
  }
  for (const Layer& layer : model.layers) {
    absl::StatusOr<Tensor> y = Conv2d(x, layer.conv);
    if (!y.ok()) return y.status();
    if (layer.kind == LayerKind::kResBlock) {
      for (float& v : y->data) v = std::max(v, 0.0f);
      absl::StatusOr<Tensor> z = Conv2d(*y, layer.conv2);
      if (!z.ok()) return z.status();
      for (size_t j = 0; j < z->data.size(); ++j) z->data[j] += x.data[j];
      x = *std::move(z);
    } else {
      x = *std::move(y);
    }
  }
  return x;
}

absl::StatusOr<StepMap> InferStepMap(const RasterImage& image,
                                     const ModelWeights& model) {
  absl::StatusOr<Tensor> pre = ForwardPreActivation(image, model);
  if (!pre.ok()) return pre.status();
  StepMap map;
  map.grid_w = pre->width;
  map.grid_h = pre->height;
  map.values.reserve(pre->data.size());
  for (float v : pre->data) map.values.push_back(Softplus(v));
  return map;
}

StepMap UniformStepMap(int width, int height, double value) {
  StepMap map;
  map.grid_w = (width + kStepMapDownsample - 1) / kStepMapDownsample;
  map.grid_h = (height + kStepMapDownsample - 1) / kStepMapDownsample;
  map.values.assign(size_t(map.grid_w) * map.grid_h, value);
  return map;
}

std::string EncodeStepMap(const StepMap& map) {
  std::string out = absl::StrCat("QSMAP 1\n", map.grid_w, " ", map.grid_h, "\n");
  for (int y = 0; y < map.grid_h; ++y) {
    for (int x = 0; x < map.grid_w; ++x) {
      if (x > 0) out += ' ';
      out += FormatReal(map.at(x, y));
    }
    out += '\n';
  }
  return out;
}

absl::StatusOr<StepMap> DecodeStepMap(std::string_view text) {
  TokenStream tokens(text);
  if (tokens.Next() != "QSMAP") {
    return absl::InvalidArgumentError("expected tag QSMAP");
  }
  const auto version = tokens.NextInt();
  if (!version || *version != 1) {
    return absl::InvalidArgumentError("QSMAP: unsupported version");
  }
  const auto w = tokens.NextInt(), h = tokens.NextInt();
  if (!w || !h || *w < 1 || *h < 1 || *w > (1 << 20) || *h > (1 << 20)) {
    return absl::InvalidArgumentError("QSMAP: malformed dimensions");
  }
  StepMap map;
  map.grid_w = static_cast<int>(*w);
  map.grid_h = static_cast<int>(*h);
  const size_t count = size_t(map.grid_w) * map.grid_h;
  map.values.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const auto v = tokens.NextReal();
    if (!v || !std::isfinite(*v) || *v <= 0.0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "QSMAP: expected ", count, " positive finite values"));
    }
    map.values.push_back(*v);
  }
  if (!tokens.AtEnd()) {
    return absl::InvalidArgumentError("QSMAP: trailing data");
  }
  return map;
}

absl::Status SaveStepMap(const StepMap& map, const std::string& path) {
  return WriteFileAtomic(path, EncodeStepMap(map));
}

absl::StatusOr<StepMap> LoadStepMap(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<StepMap> map = DecodeStepMap(*text);
  if (!map.ok()) {
    return absl::Status(map.status().code(),
                        absl::StrCat(path, ": ", map.status().message()));
  }
  return map;
}

ModelWeights MakeFixtureWeights(uint64_t seed, int channels) {
  FixtureRng rng(seed);
  ModelWeights m;
  m.layers.push_back(PlainLayer(FixtureConv(rng, 3, channels, 3, 2, 1.0)));
  for (int stage = 0; stage < 3; ++stage) {
    m.layers.push_back(FixtureResBlock(rng, channels));
    m.layers.push_back(
        PlainLayer(FixtureConv(rng, channels, channels, 3, 2, 1.0)));
  }
  m.layers.push_back(FixtureResBlock(rng, channels));
  ConvLayer head = FixtureConv(rng, channels, 1, 3, 1, kFixtureHeadGain);
  // softplus(0.5413) ~= 1.
  head.bias[0] = 0.5413f;
  m.layers.push_back(PlainLayer(std::move(head)));
  return m;
}

}  // namespace qsalloc
