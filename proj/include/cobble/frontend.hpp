#pragma once

#include <string>
#include <vector>

#include "cobble/expr.hpp"

namespace cobble {

// Parses program text: oracle/commute declarations, let-bindings, and a
// final bare expression as the main term. `#` starts a line comment.
// Throws Error(SyntaxError) with line/column, DuplicateDeclaration, or
// UnknownIdentifier.
Program parse(const std::string& text);

// Canonical text; parse(print(p)) is structurally identical to p.
std::string print(const Program& p);
std::string print_expr(const ExprPtr& e);

// Shortest round-trip decimal form, always with a fractional part or
// exponent so floats survive reparsing ("1" prints as "1.0").
std::string fmt_double(double v);

// Inline every binding and resolve oracle references to Base leaves.
ExprPtr resolve(const Program& p);

// Commute declarations with both sides resolved to expressions.
std::vector<std::pair<ExprPtr, ExprPtr>> resolved_commutes(const Program& p);

// The oracle declaration visible under `name` (user decls shadow builtins).
const OracleDecl* lookup_oracle(const Program& p, const std::string& name);

}  // namespace cobble
