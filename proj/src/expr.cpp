#include "kirchhoff/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace kirchhoff::expr {

namespace {

std::string locate(const SourceSpan& span, const std::string& message) {
  return std::to_string(span.line) + ":" + std::to_string(span.column) + ": " + message;
}

struct BuiltinInfo {
  Builtin fn;
  std::string_view name;
  int arity;
};

constexpr std::array<BuiltinInfo, 10> kBuiltins = {{
    {Builtin::sin, "sin", 1},
    {Builtin::cos, "cos", 1},
    {Builtin::exp, "exp", 1},
    {Builtin::log, "log", 1},
    {Builtin::sqrt, "sqrt", 1},
    {Builtin::abs, "abs", 1},
    {Builtin::pow, "pow", 2},
    {Builtin::min, "min", 2},
    {Builtin::max, "max", 2},
    {Builtin::atan, "atan", 1},
}};

struct Token {
  enum class Type { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };
  Type type;
  double value = 0.0;
  std::string text;
  SourceSpan span;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto at = [&](Token::Type t) {
    Token tok;
    tok.type = t;
    tok.span = {line, col, i, i + 1};
    return tok;
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++col;
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      SourceSpan span{line, col, i, i};
      std::size_t start = i;
      while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.')) ++i;
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t mark = i;
        ++i;
        if (i < src.size() && (src[i] == '+' || src[i] == '-')) ++i;
        if (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
        } else {
          i = mark;  // 'e' belongs to the next token
        }
      }
      span.end = i;
      double value = 0.0;
      auto res = std::from_chars(src.data() + start, src.data() + i, value);
      if (res.ec != std::errc{} || res.ptr != src.data() + i) {
        throw ExprError(locate(span, "malformed number '" + std::string(src.substr(start, i - start)) + "'"), span);
      }
      Token tok;
      tok.type = Token::Type::number;
      tok.value = value;
      tok.text = std::string(src.substr(start, i - start));
      tok.span = span;
      out.push_back(tok);
      col += static_cast<int>(i - start);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      SourceSpan span{line, col, i, i};
      std::size_t start = i;
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
        ++i;
      span.end = i;
      Token tok;
      tok.type = Token::Type::ident;
      tok.text = std::string(src.substr(start, i - start));
      tok.span = span;
      out.push_back(tok);
      col += static_cast<int>(i - start);
      continue;
    }
    Token tok;
    switch (c) {
      case '+': tok = at(Token::Type::plus); break;
      case '-': tok = at(Token::Type::minus); break;
      case '*': tok = at(Token::Type::star); break;
      case '/': tok = at(Token::Type::slash); break;
      case '^': tok = at(Token::Type::caret); break;
      case '(': tok = at(Token::Type::lparen); break;
      case ')': tok = at(Token::Type::rparen); break;
      case ',': tok = at(Token::Type::comma); break;
      default: {
        SourceSpan span{line, col, i, i + 1};
        throw ExprError(locate(span, std::string("unexpected character '") + c + "'"), span);
      }
    }
    out.push_back(tok);
    ++i;
    ++col;
  }
  Token end;
  end.type = Token::Type::end;
  end.span = {line, col, i, i};
  out.push_back(end);
  return out;
}

// Grammar (unary minus binds tighter than '^', '^' is right associative):
//   add   := mul (('+'|'-') mul)*
//   mul   := power (('*'|'/') power)*
//   power := unary ('^' power)?
//   unary := '-' unary | atom
//   atom  := NUMBER | 'pi' | VAR | FN '(' add (',' add)* ')' | '(' add ')'
class Parser {
public:
  Parser(const std::vector<Token>& tokens, const std::vector<std::string>& vars,
         std::vector<AstNode>& nodes)
      : tokens_(tokens), vars_(vars), nodes_(nodes) {}

  int parse() {
    int root = parse_add();
    expect(Token::Type::end, "end of input");
    return root;
  }

private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }

  void expect(Token::Type t, const char* what) {
    if (peek().type != t) {
      throw ExprError(locate(peek().span, std::string("expected ") + what), peek().span);
    }
    advance();
  }

  int add_node(AstNode node) {
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size() - 1);
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > 200) {
        throw ExprError(locate(p_.peek().span, "expression too deeply nested"), p_.peek().span);
      }
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  SourceSpan join(int lhs, int rhs, const SourceSpan& op) const {
    SourceSpan span = op;
    span.begin = nodes_[lhs].span.begin;
    span.end = nodes_[rhs].span.end;
    return span;
  }

  int parse_add() {
    DepthGuard guard(*this);
    int lhs = parse_mul();
    while (peek().type == Token::Type::plus || peek().type == Token::Type::minus) {
      Token op = advance();
      int rhs = parse_mul();
      AstNode node;
      node.kind = AstNode::Kind::binary;
      node.op = op.type == Token::Type::plus ? '+' : '-';
      node.child[0] = lhs;
      node.child[1] = rhs;
      node.span = join(lhs, rhs, op.span);
      lhs = add_node(node);
    }
    return lhs;
  }

  int parse_mul() {
    DepthGuard guard(*this);
    int lhs = parse_power();
    while (peek().type == Token::Type::star || peek().type == Token::Type::slash) {
      Token op = advance();
      int rhs = parse_power();
      AstNode node;
      node.kind = AstNode::Kind::binary;
      node.op = op.type == Token::Type::star ? '*' : '/';
      node.child[0] = lhs;
      node.child[1] = rhs;
      node.span = join(lhs, rhs, op.span);
      lhs = add_node(node);
    }
    return lhs;
  }

  int parse_power() {
    DepthGuard guard(*this);
    int base = parse_unary();
    if (peek().type == Token::Type::caret) {
      Token op = advance();
      int exponent = parse_power();  // right associative
      AstNode node;
      node.kind = AstNode::Kind::binary;
      node.op = '^';
      node.child[0] = base;
      node.child[1] = exponent;
      node.span = join(base, exponent, op.span);
      return add_node(node);
    }
    return base;
  }

  int parse_unary() {
    DepthGuard guard(*this);
    if (peek().type == Token::Type::minus) {
      Token op = advance();
      int operand = parse_unary();
      AstNode node;
      node.kind = AstNode::Kind::unary_minus;
      node.child[0] = operand;
      node.span = op.span;
      node.span.end = nodes_[operand].span.end;
      return add_node(node);
    }
    return parse_atom();
  }

  int parse_atom() {
    DepthGuard guard(*this);
    const Token& tok = peek();
    if (tok.type == Token::Type::number) {
      advance();
      AstNode node;
      node.kind = AstNode::Kind::constant;
      node.value = tok.value;
      node.span = tok.span;
      return add_node(node);
    }
    if (tok.type == Token::Type::lparen) {
      advance();
      int inner = parse_add();
      expect(Token::Type::rparen, "')'");
      return inner;
    }
    if (tok.type == Token::Type::ident) {
      advance();
      if (peek().type == Token::Type::lparen) {
        auto fn = builtin_from_name(tok.text);
        if (!fn) {
          throw ExprError(locate(tok.span, "unknown function '" + tok.text + "'"), tok.span);
        }
        advance();  // '('
        std::vector<int> args;
        args.push_back(parse_add());
        while (peek().type == Token::Type::comma) {
          advance();
          args.push_back(parse_add());
        }
        expect(Token::Type::rparen, "')'");
        if (static_cast<int>(args.size()) != builtin_arity(*fn)) {
          throw ExprError(locate(tok.span, "function '" + tok.text + "' expects " +
                                               std::to_string(builtin_arity(*fn)) +
                                               " argument(s), got " + std::to_string(args.size())),
                          tok.span);
        }
        AstNode node;
        node.kind = AstNode::Kind::call;
        node.fn = *fn;
        node.child[0] = args[0];
        if (args.size() > 1) node.child[1] = args[1];
        node.span = tok.span;
        node.span.end = nodes_[args.back()].span.end;
        return add_node(node);
      }
      if (tok.text == "pi") {
        AstNode node;
        node.kind = AstNode::Kind::constant;
        node.value = std::numbers::pi;
        node.span = tok.span;
        return add_node(node);
      }
      auto it = std::find(vars_.begin(), vars_.end(), tok.text);
      if (it == vars_.end()) {
        throw ExprError(locate(tok.span, "unknown identifier '" + tok.text + "'"), tok.span);
      }
      AstNode node;
      node.kind = AstNode::Kind::variable;
      node.var = static_cast<int>(it - vars_.begin());
      node.span = tok.span;
      return add_node(node);
    }
    throw ExprError(locate(tok.span, "expected a value"), tok.span);
  }

  const std::vector<Token>& tokens_;
  const std::vector<std::string>& vars_;
  std::vector<AstNode>& nodes_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

bool integral_exponent(double e) {
  return std::nearbyint(e) == e && std::fabs(e) < 9.007199254740992e15;
}

constexpr int kEvalStackMax = 256;

}  // namespace

ExprError::ExprError(const std::string& message, SourceSpan span)
    : std::runtime_error(message), span_(span) {}

int builtin_arity(Builtin fn) {
  for (const auto& b : kBuiltins)
    if (b.fn == fn) return b.arity;
  return 1;
}

std::string_view builtin_name(Builtin fn) {
  for (const auto& b : kBuiltins)
    if (b.fn == fn) return b.name;
  return "?";
}

std::optional<Builtin> builtin_from_name(std::string_view name) {
  for (const auto& b : kBuiltins)
    if (b.name == name) return b.fn;
  return std::nullopt;
}

Expression Expression::parse(std::string_view source, std::vector<std::string> variables) {
  if (source.empty()) {
    throw ExprError("1:1: empty expression", SourceSpan{});
  }
  Expression e;
  e.source_ = std::string(source);
  e.variables_ = std::move(variables);
  auto tokens = tokenize(source);
  Parser parser(tokens, e.variables_, e.nodes_);
  e.root_ = parser.parse();
  e.compile_postfix();
  return e;
}

void Expression::compile_postfix() {
  postfix_.clear();
  postfix_.reserve(nodes_.size());
  // iterative post-order
  std::vector<std::pair<int, bool>> stack;
  stack.push_back({root_, false});
  while (!stack.empty()) {
    auto [idx, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      postfix_.push_back(idx);
      continue;
    }
    stack.push_back({idx, true});
    const AstNode& n = nodes_[idx];
    if (n.child[1] >= 0) stack.push_back({n.child[1], false});
    if (n.child[0] >= 0) stack.push_back({n.child[0], false});
  }
}

double Expression::eval(std::span<const double> args) const {
  if (args.size() != variables_.size()) {
    throw ExprError("argument count does not match declared variables", SourceSpan{});
  }
  double stack[kEvalStackMax];
  int sp = 0;
  for (int idx : postfix_) {
    const AstNode& n = nodes_[idx];
    double out = 0.0;
    switch (n.kind) {
      case AstNode::Kind::constant:
        out = n.value;
        break;
      case AstNode::Kind::variable:
        out = args[static_cast<std::size_t>(n.var)];
        break;
      case AstNode::Kind::unary_minus:
        out = -stack[--sp];
        break;
      case AstNode::Kind::binary: {
        double b = stack[--sp];
        double a = stack[--sp];
        switch (n.op) {
          case '+': out = a + b; break;
          case '-': out = a - b; break;
          case '*': out = a * b; break;
          case '/': out = a / b; break;
          case '^':
            if (a < 0.0 && !integral_exponent(b)) {
              throw ExprError(locate(n.span, "negative base with non-integer exponent"), n.span);
            }
            out = std::pow(a, b);
            break;
        }
        break;
      }
      case AstNode::Kind::call: {
        if (builtin_arity(n.fn) == 2) {
          double b = stack[--sp];
          double a = stack[--sp];
          switch (n.fn) {
            case Builtin::pow:
              if (a < 0.0 && !integral_exponent(b)) {
                throw ExprError(locate(n.span, "negative base with non-integer exponent"), n.span);
              }
              out = std::pow(a, b);
              break;
            case Builtin::min: out = std::fmin(a, b); break;
            case Builtin::max: out = std::fmax(a, b); break;
            default: break;
          }
        } else {
          double a = stack[--sp];
          switch (n.fn) {
            case Builtin::sin: out = std::sin(a); break;
            case Builtin::cos: out = std::cos(a); break;
            case Builtin::exp: out = std::exp(a); break;
            case Builtin::log:
              if (a <= 0.0) {
                throw ExprError(locate(n.span, "log of non-positive value"), n.span);
              }
              out = std::log(a);
              break;
            case Builtin::sqrt:
              if (a < 0.0) {
                throw ExprError(locate(n.span, "sqrt of negative value"), n.span);
              }
              out = std::sqrt(a);
              break;
            case Builtin::abs: out = std::fabs(a); break;
            case Builtin::atan: out = std::atan(a); break;
            default: break;
          }
        }
        break;
      }
    }
    if (!std::isfinite(out)) {
      throw ExprError(locate(n.span, "non-finite result"), n.span);
    }
    if (sp >= kEvalStackMax) {
      throw ExprError(locate(n.span, "evaluation stack overflow"), n.span);
    }
    stack[sp++] = out;
  }
  return stack[0];
}

double Expression::eval(const std::map<std::string, double>& bindings) const {
  std::vector<double> args(variables_.size());
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    auto it = bindings.find(variables_[i]);
    if (it == bindings.end()) {
      throw ExprError("unbound variable '" + variables_[i] + "'", SourceSpan{});
    }
    args[i] = it->second;
  }
  return eval(args);
}

namespace {

void print_node(const std::vector<AstNode>& nodes, const std::vector<std::string>& vars, int idx,
                std::string& out, bool parenthesize) {
  const AstNode& n = nodes[idx];
  bool atom = n.kind == AstNode::Kind::constant || n.kind == AstNode::Kind::variable ||
              n.kind == AstNode::Kind::call;
  bool wrap = parenthesize && !atom;
  if (wrap) out += '(';
  switch (n.kind) {
    case AstNode::Kind::constant: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", n.value);
      out += buf;
      break;
    }
    case AstNode::Kind::variable:
      out += vars[static_cast<std::size_t>(n.var)];
      break;
    case AstNode::Kind::unary_minus:
      out += '-';
      print_node(nodes, vars, n.child[0], out, true);
      break;
    case AstNode::Kind::binary:
      print_node(nodes, vars, n.child[0], out, true);
      out += n.op;
      print_node(nodes, vars, n.child[1], out, true);
      break;
    case AstNode::Kind::call:
      out += builtin_name(n.fn);
      out += '(';
      print_node(nodes, vars, n.child[0], out, false);
      if (builtin_arity(n.fn) == 2) {
        out += ',';
        print_node(nodes, vars, n.child[1], out, false);
      }
      out += ')';
      break;
  }
  if (wrap) out += ')';
}

bool nodes_equal(const std::vector<AstNode>& a, int ia, const std::vector<AstNode>& b, int ib) {
  const AstNode& na = a[ia];
  const AstNode& nb = b[ib];
  if (na.kind != nb.kind) return false;
  switch (na.kind) {
    case AstNode::Kind::constant:
      if (na.value != nb.value) return false;
      break;
    case AstNode::Kind::variable:
      if (na.var != nb.var) return false;
      break;
    case AstNode::Kind::binary:
      if (na.op != nb.op) return false;
      break;
    case AstNode::Kind::call:
      if (na.fn != nb.fn) return false;
      break;
    case AstNode::Kind::unary_minus:
      break;
  }
  for (int c = 0; c < 2; ++c) {
    if ((na.child[c] >= 0) != (nb.child[c] >= 0)) return false;
    if (na.child[c] >= 0 && !nodes_equal(a, na.child[c], b, nb.child[c])) return false;
  }
  return true;
}

}  // namespace

std::string Expression::pretty_print() const {
  std::string out;
  print_node(nodes_, variables_, root_, out, false);
  return out;
}

bool Expression::structurally_equal(const Expression& other) const {
  if (variables_ != other.variables_) return false;
  return nodes_equal(nodes_, root_, other.nodes_, other.root_);
}

bool Expression::uses_variable(int slot) const {
  for (const AstNode& n : nodes_) {
    if (n.kind == AstNode::Kind::variable && n.var == slot) return true;
  }
  return false;
}

}  // namespace kirchhoff::expr
