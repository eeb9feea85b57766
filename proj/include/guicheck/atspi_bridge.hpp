#pragma once

// Accessibility-bus adapter.
//
// The harness does not link an accessibility library. It launches the target
// program, then talks to a bridge process (for example a small pyatspi
// script) over stdin/stdout, one JSON object per line, strictly in order:
//
//   {"op":"attach","pid":N}                              -> {"ok":true}
//   {"op":"snapshot"}                                    -> {"tree":<node>|null}
//   {"op":"act","node_id":ID,"action":A,"payload":P}     -> {"outcome":"accepted"}
//                                                         | {"outcome":"rejected","reason":R,"detail":D}
//                                                         | {"error":"stale","detail":D}
//   {"op":"screenshot","path":PNG}                       -> {"ok":true}
//
// Any request may instead be answered with {"error":"..."}. A node is
// {"id","role","name","bounds":[x,y,w,h],"states":[...],"actions":[...],
//  "value"?,"children":[...]} using the same state/action tokens as the
// simulator model format.

#include "guicheck/accessibility.hpp"

#include <nlohmann/json.hpp>

namespace guicheck {

nlohmann::json node_to_json(const AccessibilityNode& node);
AccessibilityNode node_from_json(const nlohmann::json& j);  // throws ProtocolError

}  // namespace guicheck
