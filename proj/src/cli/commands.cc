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

#include "cli/commands.h"

#include <algorithm>
#include <optional>
#include <utility>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "qsalloc/alloc.h"
#include "qsalloc/bdrate.h"
#include "qsalloc/file_util.h"
#include "qsalloc/grid_text.h"
#include "qsalloc/image_io.h"
#include "qsalloc/metrics.h"
#include "qsalloc/stepnet.h"
#include "qsalloc/toysim.h"

namespace qsalloc::cli {
namespace {

using Json = nlohmann::ordered_json;
using OutputFiles = std::vector<std::pair<std::string, std::string>>;

int Fail(std::ostream& err, int code, const absl::Status& status) {
  err << "error: " << status.message() << "\n";
  return code;
}

int Fail(std::ostream& err, int code, std::string_view message) {
  err << "error: " << message << "\n";
  return code;
}

Json ManifestBase(std::string_view command) {
  Json m;
  m["tool"] = "qsalloc";
  m["version"] = kToolVersion;
  m["command"] = command;
  return m;
}

// The manifest lists every other output and is committed with them.
int CommitWithManifest(Json manifest, const std::string& manifest_path,
                       OutputFiles files, std::ostream& err) {
  Json outputs = Json::array();
  for (const auto& f : files) outputs.push_back(f.first);
  outputs.push_back(manifest_path);
  manifest["outputs"] = outputs;
  files.emplace_back(manifest_path, manifest.dump(2) + "\n");
  if (absl::Status s = WriteFilesAtomic(files); !s.ok()) {
    return Fail(err, kExitWrite, s);
  }
  return kExitOk;
}

// --- stepmap ---------------------------------------------------------------

struct StepmapArgs {
  std::string image;
  std::string weights;
  std::string out;
};

int RunStepmap(const StepmapArgs& a, std::ostream& out, std::ostream& err) {
  absl::StatusOr<RasterImage> image = LoadPpm(a.image);
  if (!image.ok()) return Fail(err, kExitBadInput, image.status());
  absl::StatusOr<ModelWeights> weights = LoadWeights(a.weights);
  if (!weights.ok()) return Fail(err, kExitBadInput, weights.status());
  absl::StatusOr<StepMap> map = InferStepMap(*image, *weights);
  if (!map.ok()) {
    return Fail(err, kExitInference,
                absl::StrCat(a.weights, ": ", map.status().message()));
  }
  if (absl::Status s = SaveStepMap(*map, a.out); !s.ok()) {
    return Fail(err, kExitWrite, s);
  }
  const auto [lo, hi] = std::minmax_element(map->values.begin(),
                                            map->values.end());
  out << "grid " << map->grid_w << "x" << map->grid_h << ", steps ["
      << FormatReal(*lo) << ", " << FormatReal(*hi) << "]\n";
  return kExitOk;
}

// --- qpmap -----------------------------------------------------------------

struct QpmapArgs {
  std::string stepmap;
  std::string image;
  std::string weights;
  int width = 0;
  int height = 0;
  int base_qp = 37;
  double beta = kDefaultBeta;
  std::string beta_map;
  double slope = 1.0;
  int clamp = 4;
  int n_const = 3;
  int block_size = 64;
  double eps = 1e-6;
  std::string out;
};

int RunQpmap(const QpmapArgs& a, std::ostream& out, std::ostream& err) {
  const bool from_map = !a.stepmap.empty();
  const bool from_image = !a.image.empty();
  if (from_map && from_image) {
    return Fail(err, kExitBadInput,
                "ambiguous source: give either --stepmap or --image, not both");
  }
  if (!from_map && !from_image) {
    return Fail(err, kExitBadInput,
                "no step-map source: give --stepmap or --image with --weights");
  }
  if (from_image && a.weights.empty()) {
    return Fail(err, kExitBadInput, "--image needs --weights");
  }

  AllocConfig cfg;
  cfg.base_qp = a.base_qp;
  cfg.slope = a.slope;
  cfg.clamp = a.clamp;
  cfg.n_const = a.n_const;
  cfg.block_size = a.block_size;
  cfg.eps = a.eps;
  cfg.beta = a.beta;
  if (absl::Status s = ValidateConfig(cfg); !s.ok()) {
    return Fail(err, kExitBadInput, s);
  }
  if (!a.beta_map.empty()) {
    absl::StatusOr<BlockGridFile> f =
        ReadBlockGridFile(a.beta_map, GridTag::kBetaMap);
    if (!f.ok()) return Fail(err, kExitBadInput, f.status());
    cfg.beta = *BetaMapFromFile(*f);
  }

  StepMap map;
  int width = 0, height = 0;
  Json inputs;
  if (from_map) {
    absl::StatusOr<StepMap> loaded = LoadStepMap(a.stepmap);
    if (!loaded.ok()) return Fail(err, kExitBadInput, loaded.status());
    map = *std::move(loaded);
    width = a.width > 0 ? a.width : map.grid_w * kStepMapDownsample;
    height = a.height > 0 ? a.height : map.grid_h * kStepMapDownsample;
    inputs["stepmap"] = a.stepmap;
  } else {
    absl::StatusOr<RasterImage> image = LoadPpm(a.image);
    if (!image.ok()) return Fail(err, kExitBadInput, image.status());
    absl::StatusOr<ModelWeights> weights = LoadWeights(a.weights);
    if (!weights.ok()) return Fail(err, kExitBadInput, weights.status());
    absl::StatusOr<StepMap> inferred = InferStepMap(*image, *weights);
    if (!inferred.ok()) {
      return Fail(err, kExitInference,
                  absl::StrCat(a.weights, ": ", inferred.status().message()));
    }
    map = *std::move(inferred);
    width = image->width();
    height = image->height();
    inputs["image"] = a.image;
    inputs["weights"] = a.weights;
  }
  if (!a.beta_map.empty()) inputs["beta_map"] = a.beta_map;

  absl::StatusOr<BlockAllocation> alloc =
      BuildAllocation(map, width, height, cfg);
  if (!alloc.ok()) {
    const int code = alloc.status().code() == absl::StatusCode::kFailedPrecondition
                         ? kExitGridMismatch
                         : kExitBadInput;
    return Fail(err, code, alloc.status());
  }

  Json config;
  config["base_qp"] = cfg.base_qp;
  if (a.beta_map.empty()) {
    config["beta"] = a.beta;
  } else {
    config["beta"] = nullptr;
    config["beta_map"] = a.beta_map;
  }
  config["slope"] = cfg.slope;
  config["clamp"] = cfg.clamp;
  config["n_const"] = cfg.n_const;
  config["block_size"] = cfg.block_size;
  config["eps"] = cfg.eps;
  config["frame_width"] = width;
  config["frame_height"] = height;
  Json table = Json::object();
  for (const auto& [qp, lambda] : AllocConfig::LambdaAlignmentTable()) {
    table[std::to_string(qp)] = lambda;
  }
  config["lambda_table"] = table;
  if (const auto lambda = cfg.AlignmentLambda()) {
    config["alignment_lambda"] = *lambda;
  } else {
    config["alignment_lambda"] = nullptr;
  }

  Json manifest = ManifestBase("qpmap");
  manifest["inputs"] = inputs;
  manifest["config"] = config;
  OutputFiles files = {
      {a.out + ".qpmap", EncodeBlockGridFile(QpMapFile(*alloc))},
      {a.out + ".lscale", EncodeBlockGridFile(LambdaScaleFile(*alloc))},
  };
  if (int rc = CommitWithManifest(manifest, a.out + ".manifest.json",
                                  std::move(files), err);
      rc != kExitOk) {
    return rc;
  }
  int lo = 0, hi = 0;
  for (const BlockRecord& b : alloc->blocks) {
    lo = std::min(lo, b.dqp);
    hi = std::max(hi, b.dqp);
  }
  out << "blocks " << alloc->grid.blocks_x << "x" << alloc->grid.blocks_y
      << ", dQP [" << lo << ", " << hi << "]\n";
  return kExitOk;
}

// --- metrics ---------------------------------------------------------------

struct MetricsArgs {
  std::string reference;
  std::string test;
  bool luma_only = false;
  bool via_yuv420 = false;
  std::optional<double> lpips;
  bool header = false;
};

absl::StatusOr<RasterImage> Yuv420RoundTrip(const RasterImage& img) {
  absl::StatusOr<YuvFrame> frame = RgbToYuv420(img);
  if (!frame.ok()) return frame.status();
  return Yuv420ToRgb(*frame);
}

int RunMetrics(const MetricsArgs& a, std::ostream& out, std::ostream& err) {
  absl::StatusOr<RasterImage> ref = LoadPpm(a.reference);
  if (!ref.ok()) return Fail(err, kExitBadInput, ref.status());
  absl::StatusOr<RasterImage> test = LoadPpm(a.test);
  if (!test.ok()) return Fail(err, kExitBadInput, test.status());
  if (a.via_yuv420) {
    ref = Yuv420RoundTrip(*ref);
    test = Yuv420RoundTrip(*test);
    if (!ref.ok()) return Fail(err, kExitBadInput, ref.status());
    if (!test.ok()) return Fail(err, kExitBadInput, test.status());
  }
  MetricOptions options;
  options.luma_only = a.luma_only;
  absl::StatusOr<MetricReport> report =
      EvaluatePair(*ref, *test, options, a.lpips);
  if (!report.ok()) return Fail(err, kExitBadInput, report.status());

  std::string label = a.test;
  if (a.via_yuv420) label += "@yuv420";
  if (a.luma_only) label += "@y";
  if (a.header) {
    out << "file,psnr_db,ssim,msssim" << (a.lpips ? ",lpips_db" : "") << "\n";
  }
  out << label << "," << FormatReal(report->psnr) << ","
      << FormatReal(report->ssim) << "," << FormatReal(report->ms_ssim);
  if (report->lpips_db) out << "," << FormatReal(*report->lpips_db);
  out << "\n";
  return kExitOk;
}

// --- bdrate ----------------------------------------------------------------

struct BdrateArgs {
  std::string anchor;
  std::string test;
  std::string metric = "psnr";
  bool piecewise = false;
};

absl::StatusOr<RdCurve> LoadCurve(const std::string& path, MetricTag tag,
                                  bool raw) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<RdCurve> curve = ParseRdCsv(*text, tag, raw);
  if (!curve.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": ", curve.status().message()));
  }
  if (absl::StatusOr<RdCurve> n = NormalizeCurve(*curve); !n.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": ", n.status().message()));
  }
  return curve;
}

int RunBdrate(const BdrateArgs& a, std::ostream& out, std::ostream& err) {
  bool raw = false;
  absl::StatusOr<MetricTag> tag = ParseMetricTag(a.metric, &raw);
  if (!tag.ok()) return Fail(err, kExitUsage, tag.status());
  absl::StatusOr<RdCurve> anchor = LoadCurve(a.anchor, *tag, raw);
  if (!anchor.ok()) return Fail(err, kExitBadInput, anchor.status());
  absl::StatusOr<RdCurve> test = LoadCurve(a.test, *tag, raw);
  if (!test.ok()) return Fail(err, kExitBadInput, test.status());
  absl::StatusOr<BdResult> bd = BjontegaardDelta(
      *anchor, *test,
      a.piecewise ? BdInterpolation::kPiecewiseCubic : BdInterpolation::kCubic);
  if (!bd.ok()) {
    const int code = bd.status().code() == absl::StatusCode::kOutOfRange
                         ? kExitNoOverlap
                         : kExitBadInput;
    return Fail(err, code, bd.status());
  }
  Json j;
  j["bd_rate_percent"] = bd->bd_rate_percent;
  j["bd_quality"] = bd->bd_quality;
  j["overlap"] = {bd->overlap_lo, bd->overlap_hi};
  out << j.dump() << "\n";
  return kExitOk;
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string image;
  std::string qpmap;
  std::vector<int> qps;
  std::string out;
};

int RunSimulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  absl::StatusOr<RasterImage> image = LoadPpm(a.image);
  if (!image.ok()) return Fail(err, kExitBadInput, image.status());
  QpPlan plan;
  Json inputs;
  inputs["image"] = a.image;
  if (!a.qpmap.empty()) {
    absl::StatusOr<BlockGridFile> f = ReadBlockGridFile(a.qpmap, GridTag::kQpMap);
    if (!f.ok()) return Fail(err, kExitBadInput, f.status());
    absl::StatusOr<QpPlan> p = QpPlan::FromQpMapFile(*f);
    if (!p.ok()) return Fail(err, kExitBadInput, p.status());
    plan = *std::move(p);
    inputs["qpmap"] = a.qpmap;
  }
  std::vector<int> qps = a.qps;
  if (qps.empty()) {
    if (a.qpmap.empty()) {
      return Fail(err, kExitUsage, "give --qp, --qpmap, or both");
    }
    qps.push_back(plan.base_qp);
  }
  absl::StatusOr<YuvFrame> frame = RgbToYuv420(*image);
  if (!frame.ok()) return Fail(err, kExitBadInput, frame.status());

  std::vector<RatePoint> rd;
  OutputFiles files;
  Json points = Json::array();
  for (int qp : qps) {
    plan.base_qp = qp;
    absl::StatusOr<EncodeResult> enc = EncodeImage(frame->luma, plan);
    if (!enc.ok()) {
      const int code =
          enc.status().code() == absl::StatusCode::kFailedPrecondition
              ? kExitGridMismatch
              : kExitBadInput;
      return Fail(err, code, enc.status());
    }
    const std::string stem = absl::StrCat(a.out, ".qp", qp);
    files.emplace_back(stem + ".bits",
                       EncodeBlockGridFile(BitsFile(*enc, qp)));
    files.emplace_back(stem + ".ppm",
                       EncodePpm(PlaneToRgb(enc->reconstruction)));
    rd.push_back({enc->point.rate, enc->point.quality});
    Json p;
    p["qp"] = qp;
    p["rate_bpp"] = enc->point.rate;
    p["mse"] = enc->point.distortion;
    p["psnr_db"] = enc->point.quality;
    p["total_bits"] = enc->point.total_bits;
    points.push_back(p);
    out << "qp " << qp << ": " << FormatReal(enc->point.rate) << " bpp, MSE "
        << FormatReal(enc->point.distortion) << ", PSNR "
        << FormatReal(enc->point.quality) << " dB\n";
  }
  files.insert(files.begin(), {a.out + ".rd.csv", EncodeRdCsv(rd)});

  Json manifest = ManifestBase("simulate");
  manifest["inputs"] = inputs;
  manifest["config"] = {{"qps", qps}, {"tu_size", kTuSize}};
  manifest["points"] = points;
  return CommitWithManifest(manifest, a.out + ".manifest.json",
                            std::move(files), err);
}

// --- convert / fixture-weights ---------------------------------------------

int RunConvert(const std::string& image_path, const std::string& out_path,
               std::ostream& out, std::ostream& err) {
  absl::StatusOr<RasterImage> image = LoadPpm(image_path);
  if (!image.ok()) return Fail(err, kExitBadInput, image.status());
  absl::StatusOr<YuvFrame> frame = RgbToYuv420(*image);
  if (!frame.ok()) return Fail(err, kExitBadInput, frame.status());
  if (absl::Status s = WriteFileAtomic(out_path, EncodeYuv420(*frame));
      !s.ok()) {
    return Fail(err, kExitWrite, s);
  }
  out << image->width() << "x" << image->height() << " 4:2:0 written to "
      << out_path << "\n";
  return kExitOk;
}

int RunFixtureWeights(uint64_t seed, int channels, const std::string& path,
                      std::ostream& err) {
  if (channels < 1) return Fail(err, kExitUsage, "--channels must be >= 1");
  if (absl::Status s =
          WriteFileAtomic(path, EncodeWeights(MakeFixtureWeights(seed, channels)));
      !s.ok()) {
    return Fail(err, kExitWrite, s);
  }
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{
      "Perceptual QP-map derivation from quantization step maps, with "
      "metrics, BD-rate and a toy block codec.\n"
      "Exit codes: 0 ok, 1 usage, 2 bad input, 3 inference, 4 write, "
      "5 grid mismatch, 6 no curve overlap.",
      "qsalloc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  StepmapArgs step;
  auto* c_step = app.add_subcommand(
      "stepmap", "Infer a QSMAP step map from an image and QSNW1 weights");
  c_step->add_option("--image", step.image, "Input P6 PPM")->required();
  c_step->add_option("--weights", step.weights, "QSNW1 weight file")
      ->required();
  c_step->add_option("--out", step.out, "Output QSMAP path")->required();

  QpmapArgs qp;
  auto* c_qp = app.add_subcommand(
      "qpmap", "Derive QPMAP and LSCALE sidecars from a step map");
  c_qp->add_option("--stepmap", qp.stepmap, "QSMAP input");
  c_qp->add_option("--image", qp.image, "P6 PPM input (with --weights)");
  c_qp->add_option("--weights", qp.weights, "QSNW1 weights for --image");
  c_qp->add_option("--width", qp.width,
                   "Frame width for --stepmap (default 16 x grid width)");
  c_qp->add_option("--height", qp.height,
                   "Frame height for --stepmap (default 16 x grid height)");
  c_qp->add_option("--base-qp", qp.base_qp, "Frame QP, 0..63")->required();
  auto* beta_opt =
      c_qp->add_option("--beta", qp.beta, "Scalar R-lambda exponent")
          ->capture_default_str();
  c_qp->add_option("--beta-map", qp.beta_map, "BMAP file of per-block beta")
      ->excludes(beta_opt);
  c_qp->add_option("--slope", qp.slope, "Offset slope multiplier")
      ->capture_default_str();
  c_qp->add_option("--clamp", qp.clamp, "Maximum |dQP|")->capture_default_str();
  c_qp->add_option("--n-const", qp.n_const, "QP steps per lambda doubling")
      ->capture_default_str();
  c_qp->add_option("--block-size", qp.block_size, "QP block size in pixels")
      ->capture_default_str();
  c_qp->add_option("--eps", qp.eps, "Step floor before the reciprocal")
      ->capture_default_str();
  c_qp->add_option("--out", qp.out,
                   "Output prefix (.qpmap, .lscale, .manifest.json)")
      ->required();

  MetricsArgs met;
  auto* c_met = app.add_subcommand(
      "metrics", "Print file,psnr_db,ssim,msssim[,lpips_db] for an image pair");
  c_met->add_option("reference", met.reference, "Reference PPM")->required();
  c_met->add_option("test", met.test, "Test PPM")->required();
  c_met->add_flag("--luma-only", met.luma_only, "Score the BT.601 luma only");
  c_met->add_flag("--via-yuv420", met.via_yuv420,
                  "Pass both images through 4:2:0 and back first");
  c_met->add_option("--lpips", met.lpips,
                    "Raw LPIPS value to append in dB");
  c_met->add_flag("--header", met.header, "Print a CSV header line");

  BdrateArgs bd;
  auto* c_bd = app.add_subcommand(
      "bdrate", "Bjontegaard delta between two rate_bpp,quality CSV curves");
  c_bd->add_option("anchor", bd.anchor, "Anchor RD CSV")->required();
  c_bd->add_option("test", bd.test, "Test RD CSV")->required();
  c_bd->add_option("--metric", bd.metric,
                   "psnr | ssim | msssim | lpips_db | lpips (raw, converted)")
      ->capture_default_str();
  c_bd->add_flag("--piecewise", bd.piecewise,
                 "Monotone piecewise-cubic interpolation instead of a cubic "
                 "fit");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand(
      "simulate", "Encode the luma plane with the toy block-DCT codec");
  c_sim->add_option("--image", sim.image, "Input P6 PPM")->required();
  c_sim->add_option("--qpmap", sim.qpmap, "QPMAP of per-block offsets");
  c_sim->add_option("--qp", sim.qps,
                    "Base QP(s); overrides the QPMAP base QP")
      ->delimiter(',');
  c_sim->add_option("--out", sim.out,
                    "Output prefix (.rd.csv, .qpN.bits, .qpN.ppm, "
                    ".manifest.json)")
      ->required();

  std::string conv_image, conv_out;
  auto* c_conv = app.add_subcommand(
      "convert", "Write a PPM as raw planar YUV 4:2:0 (BT.601 limited range)");
  c_conv->add_option("--image", conv_image, "Input P6 PPM")->required();
  c_conv->add_option("--out", conv_out, "Output .yuv path")->required();

  uint64_t fx_seed = 1;
  int fx_channels = 64;
  std::string fx_out;
  auto* c_fx = app.add_subcommand(
      "fixture-weights",
      "Write seeded (untrained) weights for the reference topology");
  c_fx->add_option("--seed", fx_seed, "RNG seed")->capture_default_str();
  c_fx->add_option("--channels", fx_channels, "Feature width")
      ->capture_default_str();
  c_fx->add_option("--out", fx_out, "Output QSNW1 path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (c_step->parsed()) return RunStepmap(step, out, err);
  if (c_qp->parsed()) return RunQpmap(qp, out, err);
  if (c_met->parsed()) return RunMetrics(met, out, err);
  if (c_bd->parsed()) return RunBdrate(bd, out, err);
  if (c_sim->parsed()) return RunSimulate(sim, out, err);
  if (c_conv->parsed()) return RunConvert(conv_image, conv_out, out, err);
  if (c_fx->parsed()) return RunFixtureWeights(fx_seed, fx_channels, fx_out, err);
  return kExitUsage;
}

}  // namespace qsalloc::cli
