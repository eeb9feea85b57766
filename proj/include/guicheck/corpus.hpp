#pragma once

// Perturbation corpus: each page yields ten labeled (reference, variant)
// pairs. Scaled copies are labeled 1.0, progressively damaged copies get a
// linear penalty label, unrelated pages are labeled 0.

#include "guicheck/layout_score.hpp"
#include "guicheck/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace guicheck::layout {

inline constexpr int kScaledVariants = 3;
inline constexpr int kDamagedVariants = 5;
inline constexpr int kUnrelatedVariants = 2;
inline constexpr int kVariantsPerPage = kScaledVariants + kDamagedVariants + kUnrelatedVariants;

struct Provenance {
  enum class Kind { Scaled, Damaged, Unrelated };
  Kind kind = Kind::Scaled;
  double factor = 1.0;               // Scaled
  std::vector<DamageSpec> damages;   // Damaged
  std::string source;                // Unrelated: id of the donor page

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

std::string_view to_string(Provenance::Kind k);

struct Variant {
  RasterImage image;
  double label = 0.0;
  Provenance provenance;
};

struct VariantSet {
  RasterImage reference;
  std::vector<Variant> variants;  // 3 scaled, 5 damaged (increasing penalty), 2 unrelated
};

/// Applies damage specs in order at the model level. Each spec alters about
/// weight * severity of the page's widget area, preferring widgets no earlier
/// spec touched. Deterministic in (page, damages, seed); a prefix of the list
/// always produces the same intermediate page.
sim::Page apply_damage(const sim::Page& page, std::span<const DamageSpec> damages, std::uint64_t seed,
                       const PenaltyWeights& weights = {});

/// Throws EmptyPool when the pool holds no page other than `page`.
VariantSet gen_variants(const sim::Page& page, std::span<const sim::Page> pool, std::uint64_t seed,
                        const PenaltyWeights& weights = {});

/// Procedural page of flat widgets (header, sidebar, content blocks, buttons).
sim::Page random_page(std::uint64_t seed, std::string id);

struct LabeledPair {
  std::string ref_path;
  std::string gen_path;
  double label = 0.0;
  Provenance provenance;
};

enum class Split { Train, Val, Test };
std::string_view to_string(Split s);

struct Corpus {
  std::vector<LabeledPair> pairs;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  Split split_of(std::size_t pair_index) const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, then floor(0.8n) / floor(0.1n) / remainder. Throws TooFew when n < 10.
SplitIndices corpus_split(std::size_t n, std::uint64_t seed);

struct CorpusInstance {
  std::string id;
  sim::Page page;
};

/// Renders every instance's variants under out_dir/images and returns the
/// split corpus with paths relative to out_dir.
Corpus build_corpus(std::span<const CorpusInstance> instances, const std::filesystem::path& out_dir,
                    std::uint64_t seed, const PenaltyWeights& weights = {});

/// One JSON object per line: {ref, gen, label, provenance, split}.
std::string manifest_jsonl(const Corpus& corpus);
Corpus parse_manifest(std::string_view jsonl);

}  // namespace guicheck::layout
