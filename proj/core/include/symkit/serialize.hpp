#pragma once

#include <nlohmann/json.hpp>

#include "symkit/expr.hpp"

namespace symkit {

/// Canonical tree as nested arrays: `[kind, payload...]`.
nlohmann::json to_json(const Expr& e);

}  // namespace symkit
