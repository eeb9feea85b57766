#include "guicheck/layout_score.hpp"

#include "guicheck/error.hpp"
#include "guicheck/image_io.hpp"
#include "guicheck/subprocess.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unistd.h>

namespace guicheck::layout {

namespace {

std::array<double, 3> mean_rgb(const RasterImage& img) {
  std::array<double, 3> sum{};
  for (const Rgb& p : img.pixels) {
    sum[0] += p.r;
    sum[1] += p.g;
    sum[2] += p.b;
  }
  const double n = static_cast<double>(img.pixels.size());
  return {sum[0] / n, sum[1] / n, sum[2] / n};
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

RasterImage preprocess(const RasterImage& img) {
  if (img.empty()) fail(ErrorCode::EmptyInput, "preprocess of empty image");
  const double scale = std::min(static_cast<double>(kInputSize) / img.width, static_cast<double>(kInputSize) / img.height);
  const int w = std::clamp(static_cast<int>(std::lround(img.width * scale)), 1, kInputSize);
  const int h = std::clamp(static_cast<int>(std::lround(img.height * scale)), 1, kInputSize);
  const RasterImage scaled = (w == img.width && h == img.height) ? img : resize_nearest(img, w, h);

  RasterImage out(kInputSize, kInputSize, Rgb{0, 0, 0});
  const int ox = (kInputSize - w) / 2;
  const int oy = (kInputSize - h) / 2;
  for (int y = 0; y < h; ++y) {
    std::copy_n(scaled.pixels.begin() + static_cast<std::ptrdiff_t>(y) * w, w,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(oy + y) * kInputSize + ox);
  }
  return out;
}

GridScoreParts grid_score_parts(const RasterImage& ref, const RasterImage& gen) {
  const RasterImage a = preprocess(ref);
  const RasterImage b = preprocess(gen);

  GridScoreParts parts;
  const auto ma = mean_rgb(a);
  const auto mb = mean_rgb(b);
  const double dist = std::sqrt((ma[0] - mb[0]) * (ma[0] - mb[0]) + (ma[1] - mb[1]) * (ma[1] - mb[1]) +
                                (ma[2] - mb[2]) * (ma[2] - mb[2]));
  parts.global = std::clamp(1.0 - dist / kMaxColorDistance, 0.0, 1.0);

  constexpr int cell = kInputSize / kGridCells;
  int matched = 0;
  for (int gy = 0; gy < kGridCells; ++gy) {
    for (int gx = 0; gx < kGridCells; ++gx) {
      const Bounds region{gx * cell, gy * cell, cell, cell};
      if (colors_match(dominant_color(a.crop(region)), dominant_color(b.crop(region)))) ++matched;
    }
  }
  parts.local = static_cast<double>(matched) / (kGridCells * kGridCells);
  // Written as a deficit so that two perfect terms give exactly 1.0.
  parts.score = std::clamp(1.0 - (0.3 * (1.0 - parts.global) + 0.7 * (1.0 - parts.local)), 0.0, 1.0);
  return parts;
}

double grid_score(const RasterImage& ref, const RasterImage& gen) {
  return grid_score_parts(ref, gen).score;
}

SidecarScorer::SidecarScorer(std::vector<std::string> command) {
  proc_ = std::make_unique<Subprocess>(SpawnOptions{std::move(command), {}, std::nullopt, true});
  scratch_ = std::filesystem::temp_directory_path() /
             ("guicheck-sidecar-" + std::to_string(::getpid()) + "-" + std::to_string(proc_->pid()));
  std::filesystem::create_directories(scratch_);
}

SidecarScorer::~SidecarScorer() {
  proc_.reset();
  std::error_code ec;
  std::filesystem::remove_all(scratch_, ec);
}

double SidecarScorer::score(const RasterImage& ref, const RasterImage& gen) {
  const int id = counter_++;
  const auto ref_path = scratch_ / ("ref-" + std::to_string(id) + ".png");
  const auto gen_path = scratch_ / ("gen-" + std::to_string(id) + ".png");
  write_png(ref_path, ref);
  write_png(gen_path, gen);
  const double s = score_files(ref_path, gen_path);
  std::error_code ec;
  std::filesystem::remove(ref_path, ec);
  std::filesystem::remove(gen_path, ec);
  return s;
}

double SidecarScorer::score_files(const std::filesystem::path& ref, const std::filesystem::path& gen) {
  const nlohmann::json req = {{"ref", ref.string()}, {"gen", gen.string()}};
  if (!proc_->write_line(req.dump())) fail(ErrorCode::ProtocolError, "scorer sidecar closed its input");
  const auto line = proc_->read_line(std::chrono::seconds(60));
  if (!line) fail(ErrorCode::ProtocolError, "scorer sidecar did not respond");
  try {
    const auto reply = nlohmann::json::parse(*line);
    if (reply.contains("error")) fail(ErrorCode::ProtocolError, "scorer sidecar error: " + reply["error"].dump());
    const double s = reply.at("score").get<double>();
    if (!(s >= 0.0 && s <= 1.0)) fail(ErrorCode::ProtocolError, "scorer sidecar returned out-of-range score");
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ProtocolError, std::string("malformed sidecar response: ") + e.what());
  }
}

std::string_view to_string(DamageKind k) {
  switch (k) {
    case DamageKind::Deletion: return "deletion";
    case DamageKind::Shift: return "shift";
    case DamageKind::Collapse: return "collapse";
    case DamageKind::Style: return "style";
  }
  return "unknown";
}

DamageKind damage_kind_from(std::string_view s) {
  for (auto k : {DamageKind::Deletion, DamageKind::Shift, DamageKind::Collapse, DamageKind::Style}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::SyntaxError, "unknown damage kind '" + std::string(s) + "'");
}

double PenaltyWeights::of(DamageKind k) const {
  switch (k) {
    case DamageKind::Deletion: return deletion;
    case DamageKind::Shift: return shift;
    case DamageKind::Collapse: return collapse;
    case DamageKind::Style: return style;
  }
  return 0.0;
}

double total_penalty(std::span<const DamageSpec> damages, const PenaltyWeights& weights) {
  double sum = 0.0;
  for (const auto& d : damages) sum += weights.of(d.kind) * d.severity;
  return sum;
}

double label_of(std::span<const DamageSpec> damages, const PenaltyWeights& weights) {
  return std::clamp(1.0 - total_penalty(damages, weights), 0.0, 1.0);
}

double mae(std::span<const double> preds, std::span<const double> labels) {
  if (preds.size() != labels.size() || preds.empty()) {
    fail(ErrorCode::LengthMismatch, "mae needs equal, non-zero lengths (" + std::to_string(preds.size()) + " vs " +
                                        std::to_string(labels.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += std::abs(labels[i] - preds[i]);
  return sum / static_cast<double>(preds.size());
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.empty()) fail(ErrorCode::LengthMismatch, "spearman needs equal, non-zero lengths");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

}  // namespace guicheck::layout
