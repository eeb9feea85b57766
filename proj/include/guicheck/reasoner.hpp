#pragma once

// Agent decisions and the reasoners that produce them.

#include "guicheck/accessibility.hpp"
#include "guicheck/evaluator.hpp"
#include "guicheck/geometry.hpp"
#include "guicheck/selector.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace guicheck::agent {

enum class DecisionType { Plan, Interact, ReportBug, Edit, Finish };

std::string_view to_string(DecisionType t);

struct FileEdit {
  std::string path;     // workspace-relative
  std::string content;  // full replacement

  friend bool operator==(const FileEdit&, const FileEdit&) = default;
};

/// Wire form: {"type", "target"?: {name, role?, nth?}, "action"?: "click"|"input_text"|"select",
/// "payload"?, "report"?, "edits"?: [{path, content}]}.
struct Decision {
  DecisionType type = DecisionType::Finish;
  std::optional<Selector> target;
  std::optional<NodeAction> action;  // Click, SetText or Select
  std::string payload;
  std::string report;
  std::vector<FileEdit> edits;

  friend bool operator==(const Decision&, const Decision&) = default;
};

/// Throws ReasonerError for anything outside the schema.
Decision decision_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const Decision& d);

enum class Agent { Planner, Operator, Fixer };

std::string_view to_string(Agent a);

struct ContextEntry {
  std::string role;  // instruction, reference, history, observation, bug, logs, file, memory
  std::string text;
  std::optional<RasterImage> image;
};

struct Context {
  Agent agent = Agent::Operator;
  std::vector<ContextEntry> entries;

  std::string text() const;
  std::size_t image_count() const;
  std::size_t count(std::string_view role) const;
};

struct Proposal {
  Decision decision;
  eval::Usage usage;
};

class Reasoner {
public:
  virtual ~Reasoner() = default;
  /// Throws ReasonerError when no valid decision can be produced.
  virtual Proposal propose(const Context& context) = 0;
};

struct ScriptedRule {
  std::optional<Agent> agent;  // any agent when unset
  std::string pattern;
  Decision decision;
};

/// Ordered rules searched against Context::text(); first match wins.
class ScriptedReasoner final : public Reasoner {
public:
  explicit ScriptedReasoner(std::vector<ScriptedRule> rules, std::string model = "scripted");

  Proposal propose(const Context& context) override;

  /// {"model"?: name, "rules": [{"agent"?, "pattern", "decision"}]}. Throws ConfigError.
  static std::unique_ptr<ScriptedReasoner> from_json(const nlohmann::json& j);
  static std::unique_ptr<ScriptedReasoner> from_file(const std::filesystem::path& path);

private:
  struct Compiled {
    ScriptedRule rule;
    std::regex re;
  };
  std::vector<Compiled> rules_;
  std::string model_;
};

/// HTTP endpoint contract. Request body:
///   {"model", "agent", "context": [{"role", "text", "image"?: base64 PNG}]}
/// Response body:
///   {"decision": Decision, "usage": {"prompt_tokens", "completion_tokens"}}
/// The bearer key is read from the named environment variable at call time.
class RemoteReasoner final : public Reasoner {
public:
  RemoteReasoner(std::string endpoint_url, std::string api_key_env, std::string model, double timeout_s = 120.0);

  Proposal propose(const Context& context) override;

  static nlohmann::ordered_json request_body(const std::string& model, const Context& context);

private:
  std::string scheme_host_;
  std::string path_;
  std::string api_key_env_;
  std::string model_;
  double timeout_s_;
};

/// {kind: "scripted", rules_path} | {kind: "remote", endpoint_url, api_key_env, model_name}.
/// Relative rule paths resolve against base_dir. Throws ConfigError.
std::unique_ptr<Reasoner> load_reasoner(const nlohmann::json& config, const std::filesystem::path& base_dir);

}  // namespace guicheck::agent
