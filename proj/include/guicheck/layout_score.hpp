#pragma once

#include "guicheck/geometry.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace guicheck {

class Subprocess;

namespace layout {

inline constexpr int kInputSize = 640;
inline constexpr int kGridCells = 8;

/// Similarity contract: score(ref, gen) in [0,1] and score(x, x) == 1.
class Scorer {
public:
  virtual ~Scorer() = default;
  virtual double score(const RasterImage& ref, const RasterImage& gen) = 0;
};

/// Aspect-preserving fit into 640x640, centered, padded with black.
RasterImage preprocess(const RasterImage& img);

struct GridScoreParts {
  double global = 0.0;  // 1 - mean-color distance / max distance
  double local = 0.0;   // fraction of 8x8 cells whose dominant colors match
  double score = 0.0;   // 0.3 * global + 0.7 * local, clamped
};

GridScoreParts grid_score_parts(const RasterImage& ref, const RasterImage& gen);
double grid_score(const RasterImage& ref, const RasterImage& gen);

class GridScorer final : public Scorer {
public:
  double score(const RasterImage& ref, const RasterImage& gen) override { return grid_score(ref, gen); }
};

/// Scorer backed by an external process speaking line-delimited JSON:
/// {"ref": path, "gen": path} -> {"score": number}, one response per request,
/// in order. Images are written to a private temp directory as PNG.
/// Not thread-safe; one connection per worker.
class SidecarScorer final : public Scorer {
public:
  explicit SidecarScorer(std::vector<std::string> command);
  ~SidecarScorer() override;

  double score(const RasterImage& ref, const RasterImage& gen) override;

  /// Path-level request, for callers that already have files on disk.
  double score_files(const std::filesystem::path& ref, const std::filesystem::path& gen);

private:
  std::unique_ptr<Subprocess> proc_;
  std::filesystem::path scratch_;
  int counter_ = 0;
};

enum class DamageKind { Deletion, Shift, Collapse, Style };

std::string_view to_string(DamageKind k);
DamageKind damage_kind_from(std::string_view s);

struct DamageSpec {
  DamageKind kind = DamageKind::Deletion;
  double severity = 1.0;  // (0, 1]

  friend bool operator==(const DamageSpec&, const DamageSpec&) = default;
};

/// Per-kind linear penalty weights. Configuration, not ground truth.
struct PenaltyWeights {
  double deletion = 0.25;
  double shift = 0.15;
  double collapse = 0.35;
  double style = 0.10;

  double of(DamageKind k) const;
};

double total_penalty(std::span<const DamageSpec> damages, const PenaltyWeights& weights = {});

/// clamp(1 - sum w(kind) * severity, 0, 1)
double label_of(std::span<const DamageSpec> damages, const PenaltyWeights& weights = {});

/// Mean absolute error; throws LengthMismatch for unequal or empty inputs.
double mae(std::span<const double> preds, std::span<const double> labels);

/// Spearman rank correlation with average ranks for ties; 0 when either side is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

}  // namespace layout
}  // namespace guicheck
