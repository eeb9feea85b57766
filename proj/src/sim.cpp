#include "guicheck/sim.hpp"

#include "guicheck/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace guicheck::sim {

using Json = nlohmann::ordered_json;

namespace {

// ---- JSON helpers -------------------------------------------------------

const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(ErrorCode::SyntaxError, where + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) fail(ErrorCode::SyntaxError, where + ": missing '" + key + "'");
  return *it;
}

std::string string_field(const Json& obj, const char* key, const std::string& where) {
  const Json& v = field(obj, key, where);
  if (!v.is_string()) fail(ErrorCode::SyntaxError, where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

int int_value(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(ErrorCode::SyntaxError, where + " must be an integer");
  return v.get<int>();
}

Rgb rgb_value(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) fail(ErrorCode::SyntaxError, where + " must be [r,g,b]");
  return make_rgb(int_value(v[0], where), int_value(v[1], where), int_value(v[2], where));
}

Bounds bounds_value(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4) fail(ErrorCode::SyntaxError, where + " must be [x,y,w,h]");
  Bounds b{int_value(v[0], where), int_value(v[1], where), int_value(v[2], where), int_value(v[3], where)};
  if (!b.valid()) fail(ErrorCode::SyntaxError, where + " needs a non-negative origin and positive extent");
  return b;
}

Selector selector_value(const Json& obj, const std::string& where) {
  Selector sel;
  sel.name = string_field(obj, "name", where);
  if (auto it = obj.find("role"); it != obj.end() && !it->is_null()) sel.role = it->get<std::string>();
  if (auto it = obj.find("nth"); it != obj.end() && !it->is_null()) sel.nth = int_value(*it, where + ".nth");
  return sel;
}

Json selector_json(const Selector& sel) {
  Json j = Json::object();
  j["name"] = sel.name;
  if (sel.role) j["role"] = *sel.role;
  if (sel.nth != 0) j["nth"] = sel.nth;
  return j;
}

Json rgb_json(Rgb c) { return Json::array({int{c.r}, int{c.g}, int{c.b}}); }
Json bounds_json(const Bounds& b) { return Json::array({b.x, b.y, b.w, b.h}); }

Effect parse_effect(const Json& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) fail(ErrorCode::SyntaxError, where + " must be a single-key object");
  const auto& [key, body] = *j.items().begin();
  if (key == "navigate") {
    if (!body.is_string()) fail(ErrorCode::SyntaxError, where + ".navigate must be a page id");
    return effect::Navigate{body.get<std::string>()};
  }
  if (key == "set_text") return effect::SetText{selector_value(body, where), string_field(body, "text", where)};
  if (key == "set_fill") return effect::SetFill{selector_value(body, where), rgb_value(field(body, "rgb", where), where)};
  if (key == "remove_widget") return effect::RemoveWidget{selector_value(body, where)};
  if (key == "add_state") {
    return effect::AddState{selector_value(body, where), node_state_from(string_field(body, "state", where))};
  }
  if (key == "append_log") {
    if (!body.is_string()) fail(ErrorCode::SyntaxError, where + ".append_log must be text");
    return effect::AppendLog{body.get<std::string>()};
  }
  fail(ErrorCode::SyntaxError, where + ": unknown effect '" + key + "'");
}

Json effect_json(const Effect& e) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, effect::Navigate>) {
          return Json{{"navigate", v.page_id}};
        } else if constexpr (std::is_same_v<T, effect::SetText>) {
          Json body = selector_json(v.target);
          body["text"] = v.text;
          return Json{{"set_text", body}};
        } else if constexpr (std::is_same_v<T, effect::SetFill>) {
          Json body = selector_json(v.target);
          body["rgb"] = rgb_json(v.fill);
          return Json{{"set_fill", body}};
        } else if constexpr (std::is_same_v<T, effect::RemoveWidget>) {
          return Json{{"remove_widget", selector_json(v.target)}};
        } else if constexpr (std::is_same_v<T, effect::AddState>) {
          Json body = selector_json(v.target);
          body["state"] = std::string(to_string(v.state));
          return Json{{"add_state", body}};
        } else {
          return Json{{"append_log", v.text}};
        }
      },
      e);
}

FaultSpec parse_fault(const Json& j, const std::string& where) {
  const std::string kind = string_field(j, "kind", where);
  if (kind == "wrong_fill") return fault::WrongFill{selector_value(j, where), rgb_value(field(j, "rgb", where), where)};
  if (kind == "missing_widget") return fault::MissingWidget{selector_value(j, where)};
  if (kind == "dead_transition") {
    const int idx = int_value(field(j, "rule", where), where + ".rule");
    if (idx < 0) fail(ErrorCode::SyntaxError, where + ".rule must be non-negative");
    return fault::DeadTransition{static_cast<std::size_t>(idx)};
  }
  if (kind == "overlap_shift") {
    return fault::OverlapShift{selector_value(j, where), int_value(field(j, "dx", where), where + ".dx"),
                               int_value(field(j, "dy", where), where + ".dy")};
  }
  fail(ErrorCode::SyntaxError, where + ": unknown fault kind '" + kind + "'");
}

Json fault_json(const FaultSpec& f) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, fault::DeadTransition>) {
          return Json{{"kind", "dead_transition"}, {"rule", v.rule_index}};
        } else {
          Json j = Json{{"kind", ""}};
          const Json sel = selector_json(v.target);
          for (auto& [k, val] : sel.items()) j[k] = val;
          if constexpr (std::is_same_v<T, fault::WrongFill>) {
            j["kind"] = "wrong_fill";
            j["rgb"] = rgb_json(v.fill);
          } else if constexpr (std::is_same_v<T, fault::MissingWidget>) {
            j["kind"] = "missing_widget";
          } else {
            j["kind"] = "overlap_shift";
            j["dx"] = v.dx;
            j["dy"] = v.dy;
          }
          return j;
        }
      },
      f);
}

WidgetSpec parse_widget(const Json& j, const std::string& where) {
  WidgetSpec w;
  w.name = string_field(j, "name", where);
  w.role = string_field(j, "role", where);
  w.bounds = bounds_value(field(j, "bounds", where), where + ".bounds");
  w.fill = rgb_value(field(j, "fill", where), where + ".fill");
  if (auto it = j.find("states"); it != j.end()) {
    w.states.clear();
    for (const auto& s : *it) w.states.insert(node_state_from(s.get<std::string>()));
  }
  if (auto it = j.find("actions"); it != j.end()) {
    for (const auto& a : *it) w.actions.insert(node_action_from(a.get<std::string>()));
  }
  if (auto it = j.find("text"); it != j.end() && !it->is_null()) w.text = it->get<std::string>();
  return w;
}

bool widget_matches(const WidgetSpec& w, const Selector& sel, bool normalized) {
  if (sel.role && *sel.role != w.role) return false;
  const NameMatch m = match_name(sel.name, w.name);
  return normalized ? m != NameMatch::None : m == NameMatch::Exact;
}

bool resolvable_anywhere(const std::vector<Page>& pages, const Selector& sel) {
  return std::any_of(pages.begin(), pages.end(),
                     [&](const Page& p) { return resolve_widget(p, sel).has_value(); });
}

Rgb text_color_for(Rgb fill) {
  const double luma = 0.299 * fill.r + 0.587 * fill.g + 0.114 * fill.b;
  return luma > 128.0 ? Rgb{0, 0, 0} : Rgb{255, 255, 255};
}

void paint_widget(RasterImage& img, const Bounds& canvas, const WidgetSpec& w) {
  const Bounds at{w.bounds.x - canvas.x, w.bounds.y - canvas.y, w.bounds.w, w.bounds.h};
  img.fill_rect(at, w.fill);
  if (!w.text || w.text->empty()) return;
  const int bar_h = std::max(1, static_cast<int>(std::lround(0.6 * at.h)));
  const int per_char = std::max(1, bar_h / 2);
  const int max_w = std::max(1, static_cast<int>(0.4 * at.w));
  const int bar_w = std::min(max_w, static_cast<int>(w.text->size()) * per_char);
  img.fill_rect(Bounds{at.x + (at.w - bar_w) / 2, at.y + (at.h - bar_h) / 2, bar_w, bar_h}, text_color_for(w.fill));
}

Page& page_by_id(std::vector<Page>& pages, std::string_view id) {
  for (auto& p : pages) {
    if (p.id == id) return p;
  }
  fail(ErrorCode::DanglingReference, "unknown page '" + std::string(id) + "'");
}

}  // namespace

std::string_view fault_kind(const FaultSpec& f) {
  switch (f.index()) {
    case 0: return "wrong_fill";
    case 1: return "missing_widget";
    case 2: return "dead_transition";
    default: return "overlap_shift";
  }
}

const Page* AppModel::page(std::string_view id) const {
  for (const auto& p : pages) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const Page& SimState::page() const {
  for (const auto& p : pages) {
    if (p.id == current_page) return p;
  }
  fail(ErrorCode::DanglingReference, "current page '" + current_page + "' missing");
}

Page& SimState::page() { return const_cast<Page&>(std::as_const(*this).page()); }

std::optional<std::size_t> resolve_widget(const Page& page, const Selector& sel) {
  for (bool normalized : {false, true}) {
    int seen = 0;
    for (std::size_t i = 0; i < page.widgets.size(); ++i) {
      if (widget_matches(page.widgets[i], sel, normalized) && seen++ == sel.nth) return i;
    }
  }
  return std::nullopt;
}

void check_model(const AppModel& model) {
  if (model.pages.empty()) fail(ErrorCode::SyntaxError, "model has no pages");
  std::set<std::string> ids;
  for (const auto& page : model.pages) {
    if (!ids.insert(page.id).second) fail(ErrorCode::SyntaxError, "duplicate page '" + page.id + "'");
    if (!page.canvas.valid()) fail(ErrorCode::SyntaxError, "page '" + page.id + "' has an invalid canvas");
    std::set<std::string> names;
    for (const auto& w : page.widgets) {
      if (!names.insert(w.name).second) {
        fail(ErrorCode::SyntaxError, "duplicate widget '" + w.name + "' on page '" + page.id + "'");
      }
      if (!page.canvas.contains(w.bounds)) {
        fail(ErrorCode::SyntaxError, "widget '" + w.name + "' lies outside the canvas of '" + page.id + "'");
      }
    }
  }
  if (!model.page(model.initial_page)) {
    fail(ErrorCode::DanglingReference, "initial_page '" + model.initial_page + "' does not exist");
  }
  if (model.start_delay < 0) fail(ErrorCode::SyntaxError, "start_delay must be non-negative");

  auto need_selector = [&](const Selector& sel, const std::string& where) {
    if (!resolvable_anywhere(model.pages, sel)) {
      fail(ErrorCode::DanglingReference, where + ": selector " + describe(sel) + " matches no widget");
    }
  };
  for (std::size_t r = 0; r < model.transitions.size(); ++r) {
    const std::string where = "transition " + std::to_string(r);
    need_selector(model.transitions[r].on.target, where);
    for (const auto& e : model.transitions[r].effects) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, effect::Navigate>) {
              if (!model.page(v.page_id)) {
                fail(ErrorCode::DanglingReference, where + ": navigate to unknown page '" + v.page_id + "'");
              }
            } else if constexpr (!std::is_same_v<T, effect::AppendLog>) {
              need_selector(v.target, where);
            }
          },
          e);
    }
  }
  for (std::size_t i = 0; i < model.faults.size(); ++i) {
    const std::string where = "fault " + std::to_string(i);
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, fault::DeadTransition>) {
            if (v.rule_index >= model.transitions.size()) {
              fail(ErrorCode::DanglingReference, where + ": no transition rule " + std::to_string(v.rule_index));
            }
          } else {
            need_selector(v.target, where);
          }
        },
        model.faults[i]);
  }
}

AppModel load_model(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::SyntaxError, e.what());
  }
  AppModel model;
  try {
    model.initial_page = string_field(doc, "initial_page", "model");
    const Json& pages = field(doc, "pages", "model");
    if (!pages.is_object()) fail(ErrorCode::SyntaxError, "pages must be an object");
    for (const auto& [id, body] : pages.items()) {
      const std::string where = "page '" + id + "'";
      Page page;
      page.id = id;
      page.canvas = bounds_value(field(body, "canvas", where), where + ".canvas");
      page.background = rgb_value(field(body, "background", where), where + ".background");
      if (auto it = body.find("widgets"); it != body.end()) {
        for (std::size_t i = 0; i < it->size(); ++i) {
          page.widgets.push_back(parse_widget((*it)[i], where + ".widgets[" + std::to_string(i) + "]"));
        }
      }
      model.pages.push_back(std::move(page));
    }
    if (auto it = doc.find("transitions"); it != doc.end()) {
      for (std::size_t r = 0; r < it->size(); ++r) {
        const std::string where = "transitions[" + std::to_string(r) + "]";
        const Json& rule = (*it)[r];
        const Json& on = field(rule, "on", where);
        TransitionRule tr;
        tr.on.target = selector_value(on, where + ".on");
        tr.on.action = node_action_from(string_field(on, "action", where + ".on"));
        if (auto p = on.find("payload"); p != on.end() && !p->is_null()) tr.on.payload_match = p->get<std::string>();
        if (auto effects = rule.find("effects"); effects != rule.end()) {
          for (std::size_t e = 0; e < effects->size(); ++e) {
            tr.effects.push_back(parse_effect((*effects)[e], where + ".effects[" + std::to_string(e) + "]"));
          }
        }
        model.transitions.push_back(std::move(tr));
      }
    }
    if (auto it = doc.find("crash_on_start"); it != doc.end() && !it->is_null()) {
      model.crash_on_start = it->get<std::string>();
    }
    if (auto it = doc.find("start_delay"); it != doc.end() && !it->is_null()) {
      if (!it->is_number()) fail(ErrorCode::SyntaxError, "start_delay must be a number");
      model.start_delay = it->get<double>();
    }
    if (auto it = doc.find("faults"); it != doc.end()) {
      for (std::size_t i = 0; i < it->size(); ++i) {
        model.faults.push_back(parse_fault((*it)[i], "faults[" + std::to_string(i) + "]"));
      }
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::SyntaxError, e.what());
  }
  check_model(model);
  return model;
}

AppModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open model file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

std::string serialize_model(const AppModel& model) {
  Json doc = Json::object();
  doc["initial_page"] = model.initial_page;
  Json pages = Json::object();
  for (const auto& page : model.pages) {
    Json widgets = Json::array();
    for (const auto& w : page.widgets) {
      Json wj = Json::object();
      wj["name"] = w.name;
      wj["role"] = w.role;
      wj["bounds"] = bounds_json(w.bounds);
      wj["fill"] = rgb_json(w.fill);
      Json states = Json::array();
      for (auto s : w.states) states.push_back(std::string(to_string(s)));
      Json actions = Json::array();
      for (auto a : w.actions) actions.push_back(std::string(to_string(a)));
      wj["states"] = states;
      wj["actions"] = actions;
      if (w.text) wj["text"] = *w.text;
      widgets.push_back(std::move(wj));
    }
    pages[page.id] = Json{{"canvas", bounds_json(page.canvas)}, {"background", rgb_json(page.background)},
                          {"widgets", widgets}};
  }
  doc["pages"] = pages;
  Json transitions = Json::array();
  for (const auto& tr : model.transitions) {
    Json on = selector_json(tr.on.target);
    on["action"] = std::string(to_string(tr.on.action));
    if (tr.on.payload_match) on["payload"] = *tr.on.payload_match;
    Json effects = Json::array();
    for (const auto& e : tr.effects) effects.push_back(effect_json(e));
    transitions.push_back(Json{{"on", on}, {"effects", effects}});
  }
  doc["transitions"] = transitions;
  if (model.crash_on_start) doc["crash_on_start"] = *model.crash_on_start;
  if (model.start_delay != 0.0) doc["start_delay"] = model.start_delay;
  if (!model.faults.empty()) {
    Json faults = Json::array();
    for (const auto& f : model.faults) faults.push_back(fault_json(f));
    doc["faults"] = faults;
  }
  return doc.dump(2) + "\n";
}

SimState initial_state(const AppModel& model) {
  SimState state;
  state.current_page = model.initial_page;
  state.pages = model.pages;

  // A fault targets every page holding a matching widget.
  auto for_each_target = [&](const Selector& sel, auto&& fn) {
    for (auto& page : state.pages) {
      if (auto idx = resolve_widget(page, sel)) fn(page, *idx);
    }
  };
  for (const auto& f : model.faults) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, fault::WrongFill>) {
            for_each_target(v.target, [&](Page& p, std::size_t i) { p.widgets[i].fill = v.fill; });
          } else if constexpr (std::is_same_v<T, fault::MissingWidget>) {
            for_each_target(v.target, [&](Page& p, std::size_t i) {
              p.widgets.erase(p.widgets.begin() + static_cast<std::ptrdiff_t>(i));
            });
          } else if constexpr (std::is_same_v<T, fault::DeadTransition>) {
            state.dead_rules.insert(v.rule_index);
          } else {
            for_each_target(v.target, [&](Page& p, std::size_t i) {
              Bounds& b = p.widgets[i].bounds;
              b.x = std::clamp(b.x + v.dx, p.canvas.x, p.canvas.x + p.canvas.w - b.w);
              b.y = std::clamp(b.y + v.dy, p.canvas.y, p.canvas.y + p.canvas.h - b.h);
            });
          }
        },
        f);
  }
  return state;
}

ApplyResult apply_action(const AppModel& model, const SimState& state, const Selector& target, NodeAction action,
                         const std::string& payload) {
  ApplyResult result{state, ApplyOutcome::NoEffect, std::nullopt};
  const Page& page = state.page();
  const auto widget_idx = resolve_widget(page, target);
  if (!widget_idx) return result;
  const WidgetSpec& widget = page.widgets[*widget_idx];

  for (std::size_t r = 0; r < model.transitions.size(); ++r) {
    const Trigger& on = model.transitions[r].on;
    const bool matches = on.action == action && widget_matches(widget, Selector{on.target.role, on.target.name, 0}, false) &&
                         (!on.payload_match || *on.payload_match == payload);
    if (!matches) continue;
    result.rule_index = r;
    if (state.dead_rules.contains(r)) return result;

    SimState next = state;
    for (const Effect& e : model.transitions[r].effects) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, effect::Navigate>) {
              next.current_page = v.page_id;
            } else if constexpr (std::is_same_v<T, effect::AppendLog>) {
              next.logs.push_back(v.text);
            } else {
              Page& live = page_by_id(next.pages, next.current_page);
              const auto idx = resolve_widget(live, v.target);
              if (!idx) {
                next.logs.push_back("effect skipped: no widget " + describe(v.target) + " on page '" + live.id + "'");
                return;
              }
              WidgetSpec& w = live.widgets[*idx];
              if constexpr (std::is_same_v<T, effect::SetText>) {
                w.text = v.text;
              } else if constexpr (std::is_same_v<T, effect::SetFill>) {
                w.fill = v.fill;
              } else if constexpr (std::is_same_v<T, effect::RemoveWidget>) {
                live.widgets.erase(live.widgets.begin() + static_cast<std::ptrdiff_t>(*idx));
              } else {
                w.states.insert(v.state);
              }
            }
          },
          e);
    }
    result.state = std::move(next);
    result.outcome = ApplyOutcome::Applied;
    return result;
  }
  return result;
}

RasterImage render_page(const Page& page) {
  RasterImage img(page.canvas.w, page.canvas.h, page.background);
  for (const auto& w : page.widgets) {
    if (w.states.contains(NodeState::Visible)) paint_widget(img, page.canvas, w);
  }
  return img;
}

RasterImage render(const SimState& state) { return render_page(state.page()); }

AccessibilityNode accessibility_tree(const SimState& state) {
  const Page& page = state.page();
  AccessibilityNode root;
  root.node_id = page.id;
  root.role = "window";
  root.name = page.id;
  root.bounds = Bounds{0, 0, page.canvas.w, page.canvas.h};
  root.states = {NodeState::Visible, NodeState::Enabled};
  for (const auto& w : page.widgets) {
    AccessibilityNode node;
    node.node_id = page.id + "/" + w.name;
    node.role = w.role;
    node.name = w.name;
    node.bounds = Bounds{w.bounds.x - page.canvas.x, w.bounds.y - page.canvas.y, w.bounds.w, w.bounds.h};
    node.states = w.states;
    node.actions = w.actions;
    node.value = w.text;
    root.children.push_back(std::move(node));
  }
  return root;
}

}  // namespace guicheck::sim
