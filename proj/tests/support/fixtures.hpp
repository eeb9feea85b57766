#pragma once

// Shared builders for tests: temp directories, random scripts, a small form
// application and the faulted repair suite.

#include "guicheck/ies.hpp"
#include "guicheck/rng.hpp"
#include "guicheck/sim.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace guicheck::testing {

namespace fs = std::filesystem;

/// Directory holding the helper scripts (fake bridge, fake sidecar).
fs::path support_dir();

class TempDir {
public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
  fs::path path_;
};

std::string read_file(const fs::path& p);
void write_file(const fs::path& p, const std::string& content);

/// Random valid script; every step kind appears at least once when
/// `cover_all` is set. Strings include quoting hazards (colons, quotes, '#').
ies::Script random_script(Rng& rng, int index, bool cover_all = true);

// Form application used across tests. Page "home": title label, name entry,
// submit and next buttons, status label. Page "done": thanks label and back
// button. Transitions: submit sets the status text, next -> done, back -> home.
inline constexpr Rgb kTitleFill{0x33, 0x33, 0x66};
inline constexpr Rgb kSubmitFill{0x22, 0x55, 0xcc};
inline constexpr Rgb kNextFill{0x22, 0xaa, 0x44};
inline constexpr Rgb kThanksFill{0xaa, 0x88, 0x22};
inline constexpr std::size_t kSubmitRule = 0;
inline constexpr std::size_t kNextRule = 1;
inline constexpr std::size_t kBackRule = 2;

sim::AppModel form_app();
ies::Script form_script(const std::string& task_id);
ies::TaskMetadata form_metadata();

struct RepairTask {
  std::string id;
  std::string fault;     // fault kind
  std::string bug_text;  // what the operator rules report for this fault
  sim::AppModel broken;
  sim::AppModel fixed;
};

/// The ten faulted variants of the form app.
std::vector<RepairTask> repair_tasks();

/// Scripted operator rules: a fault-agnostic test plan for the form app.
nlohmann::json operator_rules();
/// Fixer rules for one task: the repair keyed on the operator's report, plus
/// a static-review rule when the fault is visible in the source text.
nlohmann::json fixer_rules(const RepairTask& task);

/// Writes <suite>/<id>/{ies.yaml, meta.yaml, app.json, screens/done.png} for
/// every task, using the broken model.
void write_repair_suite(const fs::path& suite_dir, const std::vector<RepairTask>& tasks);

/// Writes reasoner.json, operator_rules.json and fixer_rules.json into dir and
/// returns the path of reasoner.json.
fs::path write_reasoner_config(const fs::path& dir, const RepairTask& task);

}  // namespace guicheck::testing
