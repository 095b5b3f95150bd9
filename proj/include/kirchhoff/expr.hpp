// Small arithmetic expression language used by config files to define the
// coefficient m(t,r), the source f(x,t) and spatial weights without
// recompiling. Fixed builtin function set, no user functions, no conditionals.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kirchhoff::expr {

struct SourceSpan {
  int line = 1;
  int column = 1;
  std::size_t begin = 0;
  std::size_t end = 0;
};

class ExprError : public std::runtime_error {
public:
  ExprError(const std::string& message, SourceSpan span);
  const SourceSpan& span() const { return span_; }

private:
  SourceSpan span_;
};

enum class Builtin { sin, cos, exp, log, sqrt, abs, pow, min, max, atan };

int builtin_arity(Builtin fn);
std::string_view builtin_name(Builtin fn);
std::optional<Builtin> builtin_from_name(std::string_view name);

struct AstNode {
  enum class Kind { constant, variable, unary_minus, binary, call };
  Kind kind = Kind::constant;
  double value = 0.0;         // constant
  int var = -1;               // variable slot (index into variable set)
  char op = 0;                // binary operator: + - * / ^
  Builtin fn = Builtin::sin;  // call target
  int child[2] = {-1, -1};    // node indices; unary/1-ary calls use child[0]
  SourceSpan span;
};

// Immutable parsed expression over a declared, ordered variable set.
// Evaluation runs a postfix program compiled at parse time; the AST is kept
// for printing and structural comparison. Reentrant: eval carries no state.
class Expression {
public:
  // Parses `source` over exactly the variables in `variables` (order defines
  // the argument slots for eval). `pi` is always available as a constant.
  static Expression parse(std::string_view source, std::vector<std::string> variables);

  // One argument per declared variable, in declaration order.
  double eval(std::span<const double> args) const;
  double eval(const std::map<std::string, double>& bindings) const;

  const std::vector<std::string>& variables() const { return variables_; }
  const std::vector<AstNode>& nodes() const { return nodes_; }
  int root() const { return root_; }
  const std::string& source() const { return source_; }

  // Precedence-aware rendering; reparsing the result yields a structurally
  // identical tree (spans excluded).
  std::string pretty_print() const;
  bool structurally_equal(const Expression& other) const;

  // True if the given variable slot appears anywhere in the tree.
  bool uses_variable(int slot) const;

private:
  Expression() = default;
  void compile_postfix();

  std::string source_;
  std::vector<std::string> variables_;
  std::vector<AstNode> nodes_;
  std::vector<int> postfix_;
  int root_ = -1;
};

}  // namespace kirchhoff::expr
