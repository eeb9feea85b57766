#include "doctest.h"

#include "fixtures.hpp"
#include "guicheck/corpus.hpp"
#include "guicheck/error.hpp"
#include "guicheck/image_io.hpp"
#include "guicheck/layout_score.hpp"

#include <cmath>

using namespace guicheck;
using namespace guicheck::layout;
namespace t = guicheck::testing;

TEST_CASE("preprocess letterboxes into 640x640") {
  const RasterImage square(640, 640, Rgb{9, 9, 9});
  CHECK(preprocess(square) == square);

  const RasterImage tall = preprocess(RasterImage(320, 640, Rgb{200, 0, 0}));
  CHECK(tall.width == 640);
  CHECK(tall.height == 640);
  CHECK(tall.at(159, 300) == Rgb{0, 0, 0});
  CHECK(tall.at(160, 300) == Rgb{200, 0, 0});
  CHECK(tall.at(479, 300) == Rgb{200, 0, 0});
  CHECK(tall.at(480, 300) == Rgb{0, 0, 0});

  const RasterImage wide = preprocess(RasterImage(1280, 640, Rgb{0, 200, 0}));
  CHECK(wide.at(300, 159) == Rgb{0, 0, 0});
  CHECK(wide.at(300, 160) == Rgb{0, 200, 0});
  CHECK(wide.at(300, 479) == Rgb{0, 200, 0});
  CHECK(wide.at(300, 480) == Rgb{0, 0, 0});

  CHECK_THROWS_AS(preprocess(RasterImage{}), Error);
}

TEST_CASE("grid score extremes") {
  // Square inputs: letterbox padding would otherwise be shared black.
  const RasterImage black(100, 100, Rgb{0, 0, 0});
  const RasterImage white(100, 100, Rgb{255, 255, 255});
  CHECK(grid_score(black, black) == 1.0);
  const auto parts = grid_score_parts(black, white);
  CHECK(parts.global == doctest::Approx(0.0));
  CHECK(parts.local == 0.0);
  CHECK(parts.score == doctest::Approx(0.0));
}

TEST_CASE("grid score terms follow their definitions") {
  // Left half differs: half of the cells (and half of the mean) change.
  RasterImage ref(640, 640, Rgb{0, 0, 0});
  RasterImage gen = ref;
  gen.fill_rect({0, 0, 320, 640}, Rgb{255, 255, 255});
  const auto parts = grid_score_parts(ref, gen);
  const double mean_dist = std::sqrt(3.0) * 127.5;
  CHECK(parts.global == doctest::Approx(1.0 - mean_dist / kMaxColorDistance).epsilon(1e-3));
  CHECK(parts.local == doctest::Approx(0.5));
  CHECK(parts.score == doctest::Approx(0.3 * parts.global + 0.7 * 0.5));
}

TEST_CASE("grid score is symmetric and bounded on rendered pages") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const RasterImage a = sim::render_page(random_page(seed, "a"));
    const RasterImage b = sim::render_page(random_page(seed + 100, "b"));
    const double ab = grid_score(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(std::abs(ab - grid_score(b, a)) <= 0.02);
    CHECK(grid_score(a, a) == 1.0);
  }
}

TEST_CASE("grid score survives proportional scaling") {
  const RasterImage ref = sim::render(sim::initial_state(t::form_app()));
  for (double f : {0.7, 0.85, 1.15, 1.3}) CHECK(grid_score(ref, scale_image(ref, f)) >= 0.98);
}

TEST_CASE("penalty labels") {
  const std::vector<DamageSpec> all = {{DamageKind::Collapse, 1.0},
                                       {DamageKind::Deletion, 1.0},
                                       {DamageKind::Shift, 1.0},
                                       {DamageKind::Style, 1.0}};
  CHECK(label_of(all) == doctest::Approx(0.15));
  const std::vector<DamageSpec> half_shift = {{DamageKind::Shift, 0.5}};
  CHECK(label_of(half_shift) == doctest::Approx(0.925));
  CHECK(label_of(std::vector<DamageSpec>{}) == 1.0);

  std::vector<DamageSpec> many(10, DamageSpec{DamageKind::Collapse, 1.0});
  CHECK(label_of(many) == 0.0);

  // Monotone in severity under any non-negative weights.
  const PenaltyWeights w{0.4, 0.1, 0.2, 0.3};
  for (auto k : {DamageKind::Deletion, DamageKind::Shift, DamageKind::Collapse, DamageKind::Style}) {
    double prev = 1.0;
    for (double sev = 0.1; sev <= 1.0; sev += 0.1) {
      const std::vector<DamageSpec> d = {{k, sev}};
      const double l = label_of(d, w);
      CHECK(l < prev);
      prev = l;
    }
  }
  CHECK(damage_kind_from("style") == DamageKind::Style);
  CHECK_THROWS_AS(damage_kind_from("blur"), Error);
}

TEST_CASE("mae and spearman") {
  const std::vector<double> a = {0.5};
  const std::vector<double> b = {0.6};
  CHECK(mae(a, b) == doctest::Approx(0.1));
  CHECK(mae(std::vector<double>{0, 1}, std::vector<double>{1, 1}) == doctest::Approx(0.5));
  CHECK(mae(b, b) == 0.0);
  CHECK_THROWS_AS(mae(a, std::vector<double>{}), Error);
  CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), Error);

  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
  // Ties share average ranks: ranks x = 1, 2.5, 2.5, 4.
  CHECK(spearman(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4}) ==
        doctest::Approx(0.9486832981).epsilon(1e-6));
  CHECK(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}) == 0.0);
}

TEST_CASE("sidecar scorer speaks line-delimited json") {
  t::TempDir dir("sidecar");
  SidecarScorer scorer({"python3", (t::support_dir() / "fake_sidecar.py").string()});
  const RasterImage img(8, 8, Rgb{1, 2, 3});
  CHECK(scorer.score(img, img) == doctest::Approx(0.25));
  write_png(dir / "same.png", img);
  CHECK(scorer.score_files(dir / "same.png", dir / "other.png") == doctest::Approx(1.0));
  CHECK(scorer.score(img, img) == doctest::Approx(0.25));
  try {
    scorer.score_files(dir / "a.png", dir / "crash.png");
    FAIL("expected a protocol error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProtocolError);
  }
}
