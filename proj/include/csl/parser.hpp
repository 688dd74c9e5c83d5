#pragma once

#include "csl/ast.hpp"
#include "csl/diagnostics.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace csl {

struct ParseResult {
    std::optional<ModuleAst> module;
    Diagnostics diagnostics;

    bool ok() const { return module.has_value() && !has_errors(diagnostics); }
};

/// Parses CSL source text. On failure the module is absent and at least one
/// error diagnostic carries a span inside the input.
ParseResult parse(std::string_view source, std::string file = "<input>");

/// Canonical source form; parse(pretty_print(m)) equals m up to spans.
std::string pretty_print(const ModuleAst& module);

std::string pretty_print(const Expr& expr);

} // namespace csl
