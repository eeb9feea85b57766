#include "guicheck/reasoner.hpp"

#include "guicheck/error.hpp"
#include "guicheck/image_io.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace guicheck::agent {

namespace {

constexpr DecisionType kDecisionTypes[] = {DecisionType::Plan, DecisionType::Interact, DecisionType::ReportBug,
                                           DecisionType::Edit, DecisionType::Finish};

std::string_view action_token(NodeAction a) {
  switch (a) {
    case NodeAction::Click: return "click";
    case NodeAction::SetText: return "input_text";
    case NodeAction::Select: return "select";
    case NodeAction::Focus: break;
  }
  return "focus";
}

[[noreturn]] void bad(const std::string& msg) { fail(ErrorCode::ReasonerError, "malformed decision: " + msg); }

std::string string_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return {};
  if (!j[key].is_string()) bad(std::string(key) + " must be a string");
  return j[key].get<std::string>();
}

Agent agent_from(std::string_view s) {
  for (auto a : {Agent::Planner, Agent::Operator, Agent::Fixer}) {
    if (to_string(a) == s) return a;
  }
  fail(ErrorCode::ConfigError, "unknown agent '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(DecisionType t) {
  switch (t) {
    case DecisionType::Plan: return "plan";
    case DecisionType::Interact: return "interact";
    case DecisionType::ReportBug: return "report_bug";
    case DecisionType::Edit: return "edit";
    case DecisionType::Finish: return "finish";
  }
  return "unknown";
}

std::string_view to_string(Agent a) {
  switch (a) {
    case Agent::Planner: return "planner";
    case Agent::Operator: return "operator";
    case Agent::Fixer: return "fixer";
  }
  return "unknown";
}

Decision decision_from_json(const nlohmann::json& j) {
  if (!j.is_object()) bad("not an object");
  static const std::set<std::string> kKeys = {"type", "target", "action", "payload", "report", "edits"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) bad("unknown key '" + key + "'");
  }
  Decision d;
  const std::string type = string_field(j, "type");
  bool known = false;
  for (auto t : kDecisionTypes) {
    if (to_string(t) == type) {
      d.type = t;
      known = true;
    }
  }
  if (!known) bad("unknown type '" + type + "'");

  if (j.contains("target")) {
    const auto& t = j["target"];
    if (!t.is_object() || !t.contains("name") || !t["name"].is_string()) bad("target needs a name");
    Selector sel;
    sel.name = t["name"].get<std::string>();
    if (t.contains("role")) {
      if (!t["role"].is_string()) bad("target role must be a string");
      sel.role = t["role"].get<std::string>();
    }
    if (t.contains("nth")) {
      if (!t["nth"].is_number_integer() || t["nth"].get<int>() < 0) bad("target nth must be a non-negative integer");
      sel.nth = t["nth"].get<int>();
    }
    d.target = sel;
  }
  if (j.contains("action")) {
    const std::string a = string_field(j, "action");
    if (a == "click") {
      d.action = NodeAction::Click;
    } else if (a == "input_text") {
      d.action = NodeAction::SetText;
    } else if (a == "select") {
      d.action = NodeAction::Select;
    } else {
      bad("unknown action '" + a + "'");
    }
  }
  d.payload = string_field(j, "payload");
  d.report = string_field(j, "report");
  if (j.contains("edits")) {
    if (!j["edits"].is_array()) bad("edits must be a list");
    for (const auto& e : j["edits"]) {
      if (!e.is_object() || !e.contains("path") || !e.contains("content") || !e["path"].is_string() ||
          !e["content"].is_string()) {
        bad("each edit needs string path and content");
      }
      d.edits.push_back({e["path"].get<std::string>(), e["content"].get<std::string>()});
    }
  }

  switch (d.type) {
    case DecisionType::Interact:
      if (!d.target || !d.action) bad("interact needs target and action");
      break;
    case DecisionType::ReportBug:
      if (d.report.empty()) bad("report_bug needs a report");
      break;
    case DecisionType::Edit:
      if (d.edits.empty()) bad("edit needs at least one edit");
      break;
    case DecisionType::Plan:
    case DecisionType::Finish:
      break;
  }
  return d;
}

nlohmann::ordered_json to_json(const Decision& d) {
  nlohmann::ordered_json j;
  j["type"] = std::string(to_string(d.type));
  if (d.target) {
    nlohmann::ordered_json t;
    t["name"] = d.target->name;
    if (d.target->role) t["role"] = *d.target->role;
    if (d.target->nth != 0) t["nth"] = d.target->nth;
    j["target"] = t;
  }
  if (d.action) j["action"] = std::string(action_token(*d.action));
  if (!d.payload.empty()) j["payload"] = d.payload;
  if (!d.report.empty()) j["report"] = d.report;
  if (!d.edits.empty()) {
    j["edits"] = nlohmann::ordered_json::array();
    for (const auto& e : d.edits) j["edits"].push_back({{"path", e.path}, {"content", e.content}});
  }
  return j;
}

std::string Context::text() const {
  std::string out;
  for (const auto& e : entries) {
    out += "== " + e.role + " ==\n";
    out += e.text;
    if (!e.text.empty() && e.text.back() != '\n') out += '\n';
  }
  return out;
}

std::size_t Context::image_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.image.has_value();
  return n;
}

std::size_t Context::count(std::string_view role) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.role == role;
  return n;
}

ScriptedReasoner::ScriptedReasoner(std::vector<ScriptedRule> rules, std::string model) : model_(std::move(model)) {
  for (auto& r : rules) {
    try {
      std::regex re(r.pattern, std::regex::ECMAScript);
      rules_.push_back({std::move(r), std::move(re)});
    } catch (const std::regex_error& e) {
      fail(ErrorCode::ConfigError, "bad rule pattern '" + r.pattern + "': " + e.what());
    }
  }
}

Proposal ScriptedReasoner::propose(const Context& context) {
  const std::string text = context.text();
  for (const auto& c : rules_) {
    if (c.rule.agent && *c.rule.agent != context.agent) continue;
    if (std::regex_search(text, c.re)) return Proposal{c.rule.decision, eval::Usage{model_, 0, 0}};
  }
  fail(ErrorCode::ReasonerError, "no scripted rule matches the " + std::string(to_string(context.agent)) + " context");
}

std::unique_ptr<ScriptedReasoner> ScriptedReasoner::from_json(const nlohmann::json& j) {
  try {
    std::vector<ScriptedRule> rules;
    for (const auto& r : j.at("rules")) {
      ScriptedRule rule;
      if (r.contains("agent")) rule.agent = agent_from(r["agent"].get<std::string>());
      rule.pattern = r.at("pattern").get<std::string>();
      try {
        rule.decision = decision_from_json(r.at("decision"));
      } catch (const Error& e) {
        fail(ErrorCode::ConfigError, std::string("rule decision: ") + e.what());
      }
      rules.push_back(std::move(rule));
    }
    return std::make_unique<ScriptedReasoner>(std::move(rules), j.value("model", std::string("scripted")));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("scripted rules: ") + e.what());
  }
}

std::unique_ptr<ScriptedReasoner> ScriptedReasoner::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot read rules file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_json(nlohmann::json::parse(buf.str()));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ConfigError, "rules file " + path.string() + ": " + e.what());
  }
}

RemoteReasoner::RemoteReasoner(std::string endpoint_url, std::string api_key_env, std::string model, double timeout_s)
    : api_key_env_(std::move(api_key_env)), model_(std::move(model)), timeout_s_(timeout_s) {
  const auto scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::ConfigError, "endpoint url needs a scheme: " + endpoint_url);
  if (endpoint_url.compare(0, scheme_end, "http") != 0) {
    fail(ErrorCode::ConfigError, "only http endpoints are supported: " + endpoint_url);
  }
  const auto path_start = endpoint_url.find('/', scheme_end + 3);
  scheme_host_ = endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint_url.substr(path_start);
}

nlohmann::ordered_json RemoteReasoner::request_body(const std::string& model, const Context& context) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["agent"] = std::string(to_string(context.agent));
  body["context"] = nlohmann::ordered_json::array();
  for (const auto& e : context.entries) {
    nlohmann::ordered_json entry{{"role", e.role}, {"text", e.text}};
    if (e.image) entry["image"] = base64_encode(encode_png(*e.image));
    body["context"].push_back(entry);
  }
  return body;
}

Proposal RemoteReasoner::propose(const Context& context) {
  httplib::Client client(scheme_host_);
  const auto secs = static_cast<time_t>(timeout_s_);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  httplib::Headers headers;
  if (!api_key_env_.empty()) {
    const char* key = std::getenv(api_key_env_.c_str());
    if (!key) fail(ErrorCode::ConfigError, "environment variable " + api_key_env_ + " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto res = client.Post(path_, headers, request_body(model_, context).dump(), "application/json");
  if (!res) fail(ErrorCode::ReasonerError, "reasoner endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) fail(ErrorCode::ReasonerError, "reasoner endpoint returned HTTP " + std::to_string(res->status));
  try {
    const auto reply = nlohmann::json::parse(res->body);
    Proposal p;
    p.decision = decision_from_json(reply.at("decision"));
    p.usage.model = model_;
    if (reply.contains("usage")) {
      p.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
      p.usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ReasonerError, std::string("reasoner response: ") + e.what());
  }
}

std::unique_ptr<Reasoner> load_reasoner(const nlohmann::json& config, const std::filesystem::path& base_dir) {
  try {
    const std::string kind = config.at("kind").get<std::string>();
    if (kind == "scripted") {
      std::filesystem::path rules = config.at("rules_path").get<std::string>();
      if (rules.is_relative()) rules = base_dir / rules;
      return ScriptedReasoner::from_file(rules);
    }
    if (kind == "remote") {
      return std::make_unique<RemoteReasoner>(config.at("endpoint_url").get<std::string>(),
                                              config.value("api_key_env", std::string{}),
                                              config.at("model_name").get<std::string>());
    }
    fail(ErrorCode::ConfigError, "unknown reasoner kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("reasoner config: ") + e.what());
  }
}

}  // namespace guicheck::agent
