// guicheck: validate evaluation scripts, run suites, build scorer corpora and
// drive the repair loop from the command line.
//
// Exit codes: 0 success, 1 validation or assertion failures, 2 usage or
// structure errors.

#include "guicheck/corpus.hpp"
#include "guicheck/debug_loop.hpp"
#include "guicheck/error.hpp"
#include "guicheck/ies.hpp"
#include "guicheck/image_io.hpp"
#include "guicheck/suite.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace guicheck;

namespace {

constexpr int kOk = 0;
constexpr int kFindings = 1;
constexpr int kUsage = 2;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) fail(ErrorCode::IoError, "cannot write " + p.string());
}

std::vector<std::string> split_command(const std::string& cmd) {
  std::istringstream in(cmd);
  std::vector<std::string> out;
  for (std::string part; in >> part;) out.push_back(part);
  return out;
}

int cmd_validate(const fs::path& ies_path, const fs::path& meta_path) {
  ies::Script script = ies::parse(slurp(ies_path));
  ies::TaskMetadata meta = ies::parse_metadata(slurp(meta_path));
  const auto report = ies::validate_against_metadata(script, meta);
  for (const auto& f : report.findings) {
    std::cout << "step " << f.step_index << ": " << ies::to_string(f.severity) << " " << ies::to_string(f.kind) << ": "
              << f.message << "\n";
  }
  if (report.has_errors()) return kFindings;
  std::cout << script.task_id() << ": ok (" << script.steps().size() << " steps)\n";
  return kOk;
}

struct RunArgs {
  fs::path suite;
  std::string backend = "sim";
  std::string scorer = "grid";
  std::string sidecar_cmd;
  fs::path out = "report";
  fs::path config;
  std::optional<int> workers;
  std::optional<double> layout_gate;
  std::optional<double> timeout;
};

Config effective_config(const fs::path& path) {
  return path.empty() ? Config{} : load_config(path);
}

int cmd_run(const RunArgs& a) {
  RunOptions options;
  options.config = effective_config(a.config);
  if (a.workers) options.config.workers = *a.workers;
  if (a.layout_gate) options.config.layout_gate = *a.layout_gate;
  if (a.timeout) options.config.fs_timeout_s = *a.timeout;
  check_config(options.config);
  options.backend = a.backend == "atspi" ? Backend::AccessibilityBus : Backend::Sim;
  options.driver = default_driver_options();
  if (a.scorer == "sidecar") {
    const auto cmd = split_command(a.sidecar_cmd);
    if (cmd.empty()) fail(ErrorCode::ConfigError, "--scorer sidecar needs --sidecar-cmd");
    options.scorer = [cmd] { return std::make_unique<layout::SidecarScorer>(cmd); };
  }
  const SuiteResult result = run_suite(a.suite, options);
  write_reports(result, a.out);
  const auto& s = result.suite;
  std::cout << "tasks " << s.n_tasks << "  resolved " << s.resolved_pct << "%  fs " << s.fs_pct << "%  ae " << s.ae
            << "%  ac " << s.ac << "%  ck " << s.ck << "%  visual " << s.avg_visual << "  cost " << s.avg_cost << "\n";
  std::cout << "reports written to " << a.out.string() << "\n";
  return kOk;
}

int cmd_corpus(const fs::path& pages_dir, std::uint64_t seed, const fs::path& manifest, const fs::path& config_path) {
  const Config config = effective_config(config_path);
  if (!fs::is_directory(pages_dir)) fail(ErrorCode::IoError, "pages directory not found: " + pages_dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(pages_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<layout::CorpusInstance> instances;
  for (const auto& f : files) {
    const sim::AppModel model = sim::load_model(slurp(f));
    for (const auto& page : model.pages) {
      const std::string id = model.pages.size() == 1 ? f.stem().string() : f.stem().string() + "_" + page.id;
      instances.push_back({id, page});
    }
  }
  if (instances.size() < 2) {
    fail(ErrorCode::EmptyPool, "need at least 2 pages for unrelated variants, found " + std::to_string(instances.size()));
  }
  const fs::path out_dir = manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
  const layout::Corpus corpus = layout::build_corpus(instances, out_dir, seed, config.penalty_weights);
  spill(manifest, layout::manifest_jsonl(corpus));
  std::cout << corpus.pairs.size() << " pairs from " << instances.size() << " pages (train " << corpus.train.size()
            << ", val " << corpus.val.size() << ", test " << corpus.test.size() << ")\n";
  return kOk;
}

int cmd_pages(int count, std::uint64_t seed, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "page%03d", i);
    sim::AppModel model;
    model.pages.push_back(layout::random_page(seed + static_cast<std::uint64_t>(i), id));
    model.initial_page = id;
    spill(out_dir / (std::string(id) + ".json"), sim::serialize_model(model));
  }
  std::cout << count << " page models written to " << out_dir.string() << "\n";
  return kOk;
}

agent::Reasoners load_reasoners(const fs::path& path) {
  const auto cfg = nlohmann::json::parse(slurp(path));
  const fs::path base = path.parent_path();
  agent::Reasoners r;
  if (cfg.contains("kind")) {
    std::shared_ptr<agent::Reasoner> shared = agent::load_reasoner(cfg, base);
    r.operator_ = shared;
    r.fixer = shared;
    return r;
  }
  if (!cfg.contains("operator") || !cfg.contains("fixer")) {
    fail(ErrorCode::ConfigError, "reasoner config needs either 'kind' or 'operator' and 'fixer' entries");
  }
  r.operator_ = agent::load_reasoner(cfg["operator"], base);
  r.fixer = agent::load_reasoner(cfg["fixer"], base);
  if (cfg.contains("planner")) r.planner = agent::load_reasoner(cfg["planner"], base);
  return r;
}

struct DebugArgs {
  fs::path workspace;
  std::string instruction;
  fs::path screens;
  fs::path reasoner;
  std::string ablation = "none";
  fs::path trace;
  fs::path config;
};

int cmd_debug(const DebugArgs& a) {
  const Config config = effective_config(a.config);
  agent::DebugConfig dc;
  dc.planner_max = config.planner_max;
  dc.operator_max = config.operator_max;
  dc.history_window = config.history_window;
  dc.ablation = agent::ablation_from(a.ablation);
  agent::Reasoners reasoners;
  try {
    reasoners = load_reasoners(a.reasoner);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("reasoner config: ") + e.what());
  }

  std::string instruction = a.instruction;
  if (instruction.starts_with("@")) instruction = slurp(instruction.substr(1));
  std::vector<std::string> screens;
  if (!a.screens.empty() && fs::is_directory(a.screens)) {
    for (const auto& e : fs::directory_iterator(a.screens)) {
      if (e.path().extension() == ".png") screens.push_back(e.path().string());
    }
    std::sort(screens.begin(), screens.end());
  }

  agent::Workspace ws(a.workspace);
  DriverOptions driver = default_driver_options();
  driver.timeout_s = config.fs_timeout_s;
  agent::DebugTrace trace;
  const auto result = agent::run_debug_loop(ws, instruction, screens, agent::workspace_env(driver), reasoners, dc, &trace);
  if (!a.trace.empty()) spill(a.trace, trace.to_jsonl());
  double cost = 0.0;
  try {
    cost = eval::cost_of(result.usage, config.price_table);
  } catch (const Error& e) {
    std::cerr << "warning: " << e.what() << "\n";
  }
  std::cout << "iterations " << result.iterations << "  operator " << result.operator_dispatches << "  fixer "
            << result.fixer_dispatches << "  patches " << result.patches_applied << "  cost " << cost << "\n";
  std::cout << (result.terminated ? "terminated: " : "aborted: ") << result.termination_reason << "\n";
  return result.terminated ? kOk : kFindings;
}

int cmd_render(const fs::path& model_path, const std::string& page_id, const fs::path& out) {
  const sim::AppModel model = sim::load_model(slurp(model_path));
  const sim::Page* page = model.page(page_id.empty() ? model.initial_page : page_id);
  if (!page) fail(ErrorCode::NotFound, "no page '" + page_id + "' in " + model_path.string());
  write_png(out, sim::render_page(*page));
  return kOk;
}

int cmd_score(const fs::path& ref, const fs::path& gen, const std::string& scorer, const std::string& sidecar_cmd) {
  double s = 0.0;
  if (scorer == "sidecar") {
    layout::SidecarScorer sc(split_command(sidecar_cmd));
    s = sc.score_files(fs::absolute(ref), fs::absolute(gen));
  } else {
    const auto parts = layout::grid_score_parts(read_png(ref), read_png(gen));
    std::cout << "global " << parts.global << "  local " << parts.local << "\n";
    s = parts.score;
  }
  std::cout << "score " << s << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guicheck: GUI program evaluation and repair"};
  app.require_subcommand(1);

  fs::path ies_path, meta_path;
  auto* validate = app.add_subcommand("validate", "Check an evaluation script against its task metadata");
  validate->add_option("ies", ies_path, "ies.yaml")->required();
  validate->add_option("meta", meta_path, "meta.yaml")->required();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Evaluate every task of a suite directory");
  run->add_option("suite", run_args.suite, "Suite directory")->required();
  run->add_option("--backend", run_args.backend, "sim or atspi")->check(CLI::IsMember({"sim", "atspi"}));
  run->add_option("--scorer", run_args.scorer, "grid or sidecar")->check(CLI::IsMember({"grid", "sidecar"}));
  run->add_option("--sidecar-cmd", run_args.sidecar_cmd, "Command line of the scorer sidecar");
  run->add_option("--out", run_args.out, "Report directory");
  run->add_option("--config", run_args.config, "Config JSON");
  run->add_option("--workers", run_args.workers, "Parallel tasks")->check(CLI::PositiveNumber);
  run->add_option("--layout-gate", run_args.layout_gate, "Fail layout steps scoring below this");
  run->add_option("--timeout", run_args.timeout, "Seconds to wait for an app to start");

  fs::path pages_dir, manifest = "corpus/manifest.jsonl", corpus_config;
  std::uint64_t seed = 0;
  auto* corpus = app.add_subcommand("corpus", "Build the labeled layout-similarity corpus");
  corpus->add_option("pages", pages_dir, "Directory of page model JSON files")->required();
  corpus->add_option("--seed", seed, "Random seed");
  corpus->add_option("--out", manifest, "Manifest path; images go next to it");
  corpus->add_option("--config", corpus_config, "Config JSON (penalty weights)");

  int page_count = 10;
  std::uint64_t page_seed = 0;
  fs::path pages_out;
  auto* pages = app.add_subcommand("pages", "Write procedurally generated page models");
  pages->add_option("--count", page_count, "Number of pages")->check(CLI::PositiveNumber);
  pages->add_option("--seed", page_seed, "Random seed");
  pages->add_option("--out", pages_out, "Output directory")->required();

  DebugArgs debug_args;
  auto* debug = app.add_subcommand("debug", "Run the repair loop on a workspace");
  debug->add_option("workspace", debug_args.workspace, "Workspace directory")->required();
  debug->add_option("instruction", debug_args.instruction, "Task instruction, or @file")->required();
  debug->add_option("screens", debug_args.screens, "Directory of reference screenshots");
  debug->add_option("--reasoner", debug_args.reasoner, "Reasoner config JSON")->required();
  debug->add_option("--ablation", debug_args.ablation, "none, no-operator or no-bug-screenshot")
      ->check(CLI::IsMember({"none", "no-operator", "no-bug-screenshot"}));
  debug->add_option("--trace", debug_args.trace, "Write the debug trace (JSONL) here");
  debug->add_option("--config", debug_args.config, "Config JSON");

  fs::path model_path, render_out;
  std::string page_id;
  auto* render = app.add_subcommand("render", "Render a simulator page to PNG");
  render->add_option("model", model_path, "App model JSON")->required();
  render->add_option("--page", page_id, "Page id (initial page by default)");
  render->add_option("--out", render_out, "PNG path")->required();

  fs::path ref_png, gen_png;
  std::string score_scorer = "grid", score_sidecar;
  auto* score = app.add_subcommand("score", "Layout similarity of two screenshots");
  score->add_option("ref", ref_png, "Reference PNG")->required();
  score->add_option("gen", gen_png, "Candidate PNG")->required();
  score->add_option("--scorer", score_scorer, "grid or sidecar")->check(CLI::IsMember({"grid", "sidecar"}));
  score->add_option("--sidecar-cmd", score_sidecar, "Command line of the scorer sidecar");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(ies_path, meta_path);
    if (*run) return cmd_run(run_args);
    if (*corpus) return cmd_corpus(pages_dir, seed, manifest, corpus_config);
    if (*pages) return cmd_pages(page_count, page_seed, pages_out);
    if (*debug) return cmd_debug(debug_args);
    if (*render) return cmd_render(model_path, page_id, render_out);
    if (*score) return cmd_score(ref_png, gen_png, score_scorer, score_sidecar);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
