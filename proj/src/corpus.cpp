#include "guicheck/corpus.hpp"

#include "guicheck/error.hpp"
#include "guicheck/image_io.hpp"
#include "guicheck/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace guicheck::layout {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

void clamp_into(Bounds& b, const Bounds& canvas) {
  b.w = std::clamp(b.w, 1, canvas.w);
  b.h = std::clamp(b.h, 1, canvas.h);
  b.x = std::clamp(b.x, canvas.x, canvas.x + canvas.w - b.w);
  b.y = std::clamp(b.y, canvas.y, canvas.y + canvas.h - b.h);
}

Rgb random_color_away_from(Rng& rng, Rgb avoid, double min_distance) {
  for (;;) {
    Rgb c{static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
          static_cast<std::uint8_t>(rng.below(256))};
    if (color_distance(c, avoid) >= min_distance) return c;
  }
}

struct DamageContext {
  double base_area = 0.0;             // total widget area of the undamaged page
  std::set<std::string> touched;      // widgets already hit by an earlier damage
};

/// Untouched widgets first (shuffled), then already damaged ones.
std::vector<std::string> candidates(const sim::Page& page, const DamageContext& ctx, Rng& rng) {
  std::vector<std::string> fresh, used;
  for (const auto& w : page.widgets) (ctx.touched.count(w.name) ? used : fresh).push_back(w.name);
  rng.shuffle(fresh);
  rng.shuffle(used);
  fresh.insert(fresh.end(), used.begin(), used.end());
  return fresh;
}

sim::WidgetSpec* widget_named(sim::Page& page, const std::string& name) {
  for (auto& w : page.widgets) {
    if (w.name == name) return &w;
  }
  return nullptr;
}

double area(const Bounds& b) { return static_cast<double>(b.w) * b.h; }

// Each damage changes roughly weight * severity of the page's widget area, so
// the visual impact tracks the label across damage kinds.
void damage_once(sim::Page& page, const DamageSpec& d, double weight, Rng rng, DamageContext& ctx) {
  double remaining = weight * d.severity * ctx.base_area;
  for (const auto& name : candidates(page, ctx, rng)) {
    if (remaining <= 0.0) break;
    sim::WidgetSpec* w = widget_named(page, name);
    Bounds& b = w->bounds;
    ctx.touched.insert(name);
    switch (d.kind) {
      case DamageKind::Deletion: {
        if (area(b) <= remaining) {
          remaining -= area(b);
          std::erase_if(page.widgets, [&](const sim::WidgetSpec& x) { return x.name == name; });
        } else {
          b.h -= static_cast<int>(std::ceil(remaining / b.w));
          remaining = 0.0;
          if (b.h < 1) std::erase_if(page.widgets, [&](const sim::WidgetSpec& x) { return x.name == name; });
        }
        break;
      }
      case DamageKind::Collapse: {
        const int collapsed = std::max(1, b.h / 10);
        const double lost = static_cast<double>(b.h - collapsed) * b.w;
        if (lost <= remaining) {
          remaining -= lost;
          b.h = collapsed;
        } else {
          b.h = std::max(collapsed, b.h - static_cast<int>(std::ceil(remaining / b.w)));
          remaining = 0.0;
        }
        break;
      }
      case DamageKind::Shift: {
        // Displacing by d along one axis changes about 2 * d * (cross extent).
        const bool horizontal = rng.below(2) == 0;
        const int extent = horizontal ? b.w : b.h;
        const int cross = horizontal ? b.h : b.w;
        const int dist = std::clamp(static_cast<int>(std::ceil(remaining / (2.0 * cross))), 1, extent);
        remaining -= 2.0 * dist * cross;
        const Bounds before = b;
        const int sign = rng.below(2) ? 1 : -1;
        for (int attempt = 0; attempt < 2 && b == before; ++attempt) {
          b = before;
          const int step = (attempt == 0 ? sign : -sign) * dist;
          if (horizontal) {
            b.x += step;
          } else {
            b.y += step;
          }
          clamp_into(b, page.canvas);
        }
        break;
      }
      case DamageKind::Style: {
        Rgb restyled{static_cast<std::uint8_t>(255 - w->fill.r), static_cast<std::uint8_t>(255 - w->fill.g),
                     static_cast<std::uint8_t>(255 - w->fill.b)};
        if (color_distance(restyled, w->fill) < 120.0 || color_distance(restyled, page.background) < 120.0) {
          restyled = random_color_away_from(rng, w->fill, 120.0);
        }
        if (area(b) <= remaining) {
          remaining -= area(b);
          w->fill = restyled;
        } else {
          // Only the top part of the widget changes style.
          const int rows = std::clamp(static_cast<int>(std::ceil(remaining / b.w)), 1, b.h);
          remaining = 0.0;
          sim::WidgetSpec patch = *w;
          patch.name = name + "~restyled";
          patch.actions.clear();
          patch.text.reset();
          patch.fill = restyled;
          patch.bounds.h = rows;
          ctx.touched.insert(patch.name);
          page.widgets.push_back(std::move(patch));
        }
        break;
      }
    }
  }
}

/// Damage specs whose weighted penalty sums to `penalty`.
std::vector<DamageSpec> draw_damages(Rng& rng, double penalty, const PenaltyWeights& weights) {
  static constexpr DamageKind kKinds[] = {DamageKind::Deletion, DamageKind::Shift, DamageKind::Collapse,
                                          DamageKind::Style};
  std::vector<DamageSpec> out;
  double remaining = penalty;
  while (remaining > 1e-9) {
    const DamageKind kind = kKinds[rng.below(4)];
    const double w = weights.of(kind);
    if (w <= 0.0) continue;
    double portion = remaining;
    if (remaining > 0.08 && rng.below(2) == 0) portion = remaining * rng.uniform(0.4, 0.6);
    const double severity = std::min(1.0, portion / w);
    out.push_back({kind, severity});
    remaining -= severity * w;
  }
  return out;
}

}  // namespace

std::string_view to_string(Provenance::Kind k) {
  switch (k) {
    case Provenance::Kind::Scaled: return "scaled";
    case Provenance::Kind::Damaged: return "damaged";
    case Provenance::Kind::Unrelated: return "unrelated";
  }
  return "unknown";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

sim::Page apply_damage(const sim::Page& page, std::span<const DamageSpec> damages, std::uint64_t seed,
                       const PenaltyWeights& weights) {
  sim::Page out = page;
  DamageContext ctx;
  for (const auto& w : page.widgets) ctx.base_area += area(w.bounds);
  for (std::size_t i = 0; i < damages.size(); ++i) {
    damage_once(out, damages[i], weights.of(damages[i].kind), Rng(seed ^ ((i + 1) * kGolden)), ctx);
  }
  return out;
}

VariantSet gen_variants(const sim::Page& page, std::span<const sim::Page> pool, std::uint64_t seed,
                        const PenaltyWeights& weights) {
  std::vector<const sim::Page*> donors;
  for (const auto& p : pool) {
    if (!(p == page)) donors.push_back(&p);
  }
  if (donors.empty()) fail(ErrorCode::EmptyPool, "no unrelated page available for '" + page.id + "'");

  Rng rng(seed);
  VariantSet set;
  set.reference = sim::render_page(page);

  for (int i = 0; i < kScaledVariants; ++i) {
    const double factor = rng.uniform(0.7, 1.3);
    Provenance prov;
    prov.kind = Provenance::Kind::Scaled;
    prov.factor = factor;
    set.variants.push_back({scale_image(set.reference, factor), 1.0, prov});
  }

  // Target penalties spread evenly over [0.1, 0.9] with a small jitter; each
  // damaged variant extends the previous variant's damage list.
  const std::uint64_t damage_seed = rng.next();
  std::vector<DamageSpec> damages;
  double reached = 0.0;
  for (int i = 0; i < kDamagedVariants; ++i) {
    const double target = 0.1 + 0.2 * i + rng.uniform(-0.04, 0.04);
    auto more = draw_damages(rng, target - reached, weights);
    damages.insert(damages.end(), more.begin(), more.end());
    reached = total_penalty(damages, weights);
    Provenance prov;
    prov.kind = Provenance::Kind::Damaged;
    prov.damages = damages;
    set.variants.push_back({sim::render_page(apply_damage(page, damages, damage_seed, weights)), label_of(damages, weights), prov});
  }

  std::vector<std::size_t> order(donors.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (int i = 0; i < kUnrelatedVariants; ++i) {
    const sim::Page& donor = *donors[order[static_cast<std::size_t>(i) % order.size()]];
    Provenance prov;
    prov.kind = Provenance::Kind::Unrelated;
    prov.source = donor.id;
    set.variants.push_back({sim::render_page(donor), 0.0, prov});
  }
  return set;
}

sim::Page random_page(std::uint64_t seed, std::string id) {
  Rng rng(seed);
  static constexpr std::pair<int, int> kCanvases[] = {{320, 240}, {400, 300}, {480, 360}, {640, 480}};
  const auto [cw, ch] = kCanvases[rng.below(std::size(kCanvases))];

  sim::Page page;
  page.id = std::move(id);
  page.canvas = Bounds{0, 0, cw, ch};
  page.background = Rgb{static_cast<std::uint8_t>(rng.range(215, 250)), static_cast<std::uint8_t>(rng.range(215, 250)),
                        static_cast<std::uint8_t>(rng.range(215, 250))};

  auto widget = [&](std::string name, std::string role, Bounds b) {
    sim::WidgetSpec w;
    w.name = std::move(name);
    w.role = std::move(role);
    clamp_into(b, page.canvas);
    w.bounds = b;
    w.fill = random_color_away_from(rng, page.background, 120.0);
    page.widgets.push_back(std::move(w));
    return &page.widgets.back();
  };

  const int header_h = static_cast<int>(ch * rng.uniform(0.12, 0.18));
  widget("header", "panel", {0, 0, cw, header_h});
  const int sidebar_w = static_cast<int>(cw * rng.uniform(0.2, 0.28));
  const bool has_sidebar = rng.below(4) != 0;
  if (has_sidebar) widget("sidebar", "panel", {0, header_h, sidebar_w, ch - header_h});

  const int area_x = has_sidebar ? sidebar_w : 0;
  const int area_w = cw - area_x;
  const int area_h = ch - header_h;
  const int cols = rng.range(2, 4);
  const int rows = rng.range(2, 3);
  const int gap = 8;
  const int cell_w = (area_w - gap * (cols + 1)) / cols;
  const int cell_h = (area_h - gap * (rows + 2) - 30) / rows;
  int card = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      widget("card_" + std::to_string(card++), "panel",
             {area_x + gap + c * (cell_w + gap), header_h + gap + r * (cell_h + gap), cell_w, cell_h});
    }
  }
  const int buttons = rng.range(1, 3);
  for (int b = 0; b < buttons; ++b) {
    auto* w = widget("button_" + std::to_string(b), "push button",
                     {cw - (b + 1) * (70 + gap), ch - 30 - gap / 2, 70, 30});
    w->actions = {NodeAction::Click};
    w->text = "Action " + std::to_string(b);
  }
  return page;
}

Split Corpus::split_of(std::size_t pair_index) const {
  if (std::find(train.begin(), train.end(), pair_index) != train.end()) return Split::Train;
  if (std::find(val.begin(), val.end(), pair_index) != val.end()) return Split::Val;
  return Split::Test;
}

SplitIndices corpus_split(std::size_t n, std::uint64_t seed) {
  if (n < 10) fail(ErrorCode::TooFew, "corpus split needs at least 10 pairs, got " + std::to_string(n));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng(seed).shuffle(idx);
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  SplitIndices out;
  out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  return out;
}

Corpus build_corpus(std::span<const CorpusInstance> instances, const std::filesystem::path& out_dir,
                    std::uint64_t seed, const PenaltyWeights& weights) {
  std::vector<sim::Page> pool;
  for (const auto& inst : instances) pool.push_back(inst.page);
  const auto image_dir = out_dir / "images";
  std::filesystem::create_directories(image_dir);

  Corpus corpus;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const VariantSet set = gen_variants(inst.page, pool, seed ^ ((i + 1) * kGolden), weights);
    const std::string ref_rel = "images/" + inst.id + "_ref.png";
    write_png(out_dir / ref_rel, set.reference);
    for (std::size_t v = 0; v < set.variants.size(); ++v) {
      const std::string gen_rel = "images/" + inst.id + "_v" + std::to_string(v) + ".png";
      write_png(out_dir / gen_rel, set.variants[v].image);
      corpus.pairs.push_back({ref_rel, gen_rel, set.variants[v].label, set.variants[v].provenance});
    }
  }
  auto split = corpus_split(corpus.pairs.size(), seed);
  corpus.train = std::move(split.train);
  corpus.val = std::move(split.val);
  corpus.test = std::move(split.test);
  return corpus;
}

std::string manifest_jsonl(const Corpus& corpus) {
  std::vector<Split> split_of(corpus.pairs.size(), Split::Test);
  for (auto i : corpus.train) split_of[i] = Split::Train;
  for (auto i : corpus.val) split_of[i] = Split::Val;

  std::ostringstream out;
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const auto& p = corpus.pairs[i];
    nlohmann::ordered_json prov;
    prov["kind"] = std::string(to_string(p.provenance.kind));
    switch (p.provenance.kind) {
      case Provenance::Kind::Scaled: prov["factor"] = p.provenance.factor; break;
      case Provenance::Kind::Damaged: {
        auto list = nlohmann::ordered_json::array();
        for (const auto& d : p.provenance.damages) {
          list.push_back({{"kind", std::string(to_string(d.kind))}, {"severity", d.severity}});
        }
        prov["damages"] = list;
        break;
      }
      case Provenance::Kind::Unrelated: prov["source"] = p.provenance.source; break;
    }
    nlohmann::ordered_json rec;
    rec["ref"] = p.ref_path;
    rec["gen"] = p.gen_path;
    rec["label"] = p.label;
    rec["provenance"] = prov;
    rec["split"] = std::string(to_string(split_of[i]));
    out << rec.dump() << "\n";
  }
  return out.str();
}

Corpus parse_manifest(std::string_view jsonl) {
  Corpus corpus;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      LabeledPair p;
      p.ref_path = rec.at("ref").get<std::string>();
      p.gen_path = rec.at("gen").get<std::string>();
      p.label = rec.at("label").get<double>();
      const auto& prov = rec.at("provenance");
      const std::string kind = prov.at("kind").get<std::string>();
      if (kind == "scaled") {
        p.provenance.kind = Provenance::Kind::Scaled;
        p.provenance.factor = prov.at("factor").get<double>();
      } else if (kind == "damaged") {
        p.provenance.kind = Provenance::Kind::Damaged;
        for (const auto& d : prov.at("damages")) {
          p.provenance.damages.push_back({damage_kind_from(d.at("kind").get<std::string>()), d.at("severity").get<double>()});
        }
      } else if (kind == "unrelated") {
        p.provenance.kind = Provenance::Kind::Unrelated;
        p.provenance.source = prov.at("source").get<std::string>();
      } else {
        fail(ErrorCode::SyntaxError, "unknown provenance '" + kind + "'");
      }
      const std::string split = rec.at("split").get<std::string>();
      const std::size_t idx = corpus.pairs.size();
      if (split == "train") {
        corpus.train.push_back(idx);
      } else if (split == "val") {
        corpus.val.push_back(idx);
      } else if (split == "test") {
        corpus.test.push_back(idx);
      } else {
        fail(ErrorCode::SyntaxError, "unknown split '" + split + "'");
      }
      corpus.pairs.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::SyntaxError, std::string("manifest line: ") + e.what());
    }
  }
  return corpus;
}

}  // namespace guicheck::layout
