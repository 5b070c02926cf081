// Copyright 2026 The dqfi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dqfi/model_dsl.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace dqfi::dsl {

ModelError::ModelError(std::size_t line, std::size_t column, std::vector<std::string> expected,
                       const std::string& message)
    : DomainError(std::to_string(line) + ":" + std::to_string(column) + ": " + message +
                  (expected.empty() ? std::string() : [&] {
                    std::string s = " (expected ";
                    for (std::size_t i = 0; i < expected.size(); ++i) s += (i ? ", " : "") + expected[i];
                    return s + ")";
                  }())),
      line_(line),
      column_(column),
      expected_(std::move(expected)) {}

// ---------------------------------------------------------------------------
// Expressions

ExprPtr number(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Number;
  e->value = v;
  return e;
}

ExprPtr symbol(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Symbol;
  e->name = std::move(name);
  return e;
}

namespace {

ExprPtr node(Expr::Kind k, std::vector<ExprPtr> args, std::string name = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->args = std::move(args);
  e->name = std::move(name);
  return e;
}

bool is_number(const ExprPtr& e, double v) { return e->kind == Expr::Kind::Number && e->value == v; }

ExprPtr neg(ExprPtr a) {
  if (a->kind == Expr::Kind::Number) return number(-a->value);
  return node(Expr::Kind::Neg, {std::move(a)});
}
ExprPtr add(ExprPtr a, ExprPtr b) {
  if (is_number(a, 0.0)) return b;
  if (is_number(b, 0.0)) return a;
  return node(Expr::Kind::Add, {std::move(a), std::move(b)});
}
ExprPtr sub(ExprPtr a, ExprPtr b) {
  if (is_number(b, 0.0)) return a;
  if (is_number(a, 0.0)) return neg(std::move(b));
  return node(Expr::Kind::Sub, {std::move(a), std::move(b)});
}
ExprPtr mul(ExprPtr a, ExprPtr b) {
  if (is_number(a, 0.0) || is_number(b, 0.0)) return number(0.0);
  if (is_number(a, 1.0)) return b;
  if (is_number(b, 1.0)) return a;
  return node(Expr::Kind::Mul, {std::move(a), std::move(b)});
}
ExprPtr div(ExprPtr a, ExprPtr b) {
  if (is_number(a, 0.0)) return number(0.0);
  if (is_number(b, 1.0)) return a;
  return node(Expr::Kind::Div, {std::move(a), std::move(b)});
}
ExprPtr pow(ExprPtr a, ExprPtr b) { return node(Expr::Kind::Pow, {std::move(a), std::move(b)}); }
ExprPtr call(const std::string& f, ExprPtr a) { return node(Expr::Kind::Call, {std::move(a)}, f); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  if (a.kind == Expr::Kind::Number && a.value != b.value) return false;
  if ((a.kind == Expr::Kind::Symbol || a.kind == Expr::Kind::Call) && a.name != b.name) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!(*a.args[i] == *b.args[i])) return false;
  return true;
}

const std::vector<std::string>& functions() {
  static const std::vector<std::string> f{"sin", "cos", "sqrt", "exp"};
  return f;
}

double evaluate(const Expr& e, const std::map<std::string, double>& env) {
  auto arg = [&](std::size_t i) { return evaluate(*e.args[i], env); };
  double v = 0.0;
  switch (e.kind) {
    case Expr::Kind::Number: v = e.value; break;
    case Expr::Kind::Symbol: {
      auto it = env.find(e.name);
      if (it != env.end()) {
        v = it->second;
      } else if (e.name == "pi") {
        v = M_PI;
      } else {
        throw DomainError("unbound symbol '" + e.name + "'");
      }
      break;
    }
    case Expr::Kind::Neg: v = -arg(0); break;
    case Expr::Kind::Add: v = arg(0) + arg(1); break;
    case Expr::Kind::Sub: v = arg(0) - arg(1); break;
    case Expr::Kind::Mul: v = arg(0) * arg(1); break;
    case Expr::Kind::Div: v = arg(0) / arg(1); break;
    case Expr::Kind::Pow: v = std::pow(arg(0), arg(1)); break;
    case Expr::Kind::Call: {
      const double x = arg(0);
      if (e.name == "sin") v = std::sin(x);
      else if (e.name == "cos") v = std::cos(x);
      else if (e.name == "sqrt") v = std::sqrt(x);
      else if (e.name == "exp") v = std::exp(x);
      else if (e.name == "log") v = std::log(x);  // produced by differentiation only
      else throw DomainError("unknown function '" + e.name + "'");
      break;
    }
  }
  if (!std::isfinite(v)) throw DomainError("expression '" + print(e) + "' is not finite");
  return v;
}

bool depends_on(const Expr& e, const std::string& var) {
  if (e.kind == Expr::Kind::Symbol) return e.name == var;
  for (const auto& a : e.args)
    if (depends_on(*a, var)) return true;
  return false;
}

ExprPtr differentiate(const ExprPtr& e, const std::string& var) {
  if (!depends_on(*e, var)) return number(0.0);
  const auto& a = e->args;
  switch (e->kind) {
    case Expr::Kind::Number: return number(0.0);
    case Expr::Kind::Symbol: return number(1.0);
    case Expr::Kind::Neg: return neg(differentiate(a[0], var));
    case Expr::Kind::Add: return add(differentiate(a[0], var), differentiate(a[1], var));
    case Expr::Kind::Sub: return sub(differentiate(a[0], var), differentiate(a[1], var));
    case Expr::Kind::Mul:
      return add(mul(differentiate(a[0], var), a[1]), mul(a[0], differentiate(a[1], var)));
    case Expr::Kind::Div:
      return div(sub(mul(differentiate(a[0], var), a[1]), mul(a[0], differentiate(a[1], var))), pow(a[1], number(2.0)));
    case Expr::Kind::Pow:
      if (!depends_on(*a[1], var))
        return mul(mul(a[1], pow(a[0], sub(a[1], number(1.0)))), differentiate(a[0], var));
      return mul(e, add(mul(differentiate(a[1], var), call("log", a[0])), div(mul(a[1], differentiate(a[0], var)), a[0])));
    case Expr::Kind::Call: {
      const ExprPtr du = differentiate(a[0], var);
      if (e->name == "sin") return mul(call("cos", a[0]), du);
      if (e->name == "cos") return neg(mul(call("sin", a[0]), du));
      if (e->name == "sqrt") return div(du, mul(number(2.0), e));
      if (e->name == "exp") return mul(e, du);
      if (e->name == "log") return div(du, a[0]);
      throw DomainError("cannot differentiate '" + e->name + "'");
    }
  }
  return number(0.0);
}

std::string print(const Expr& e) {
  auto bin = [&](const char* op) { return "(" + print(*e.args[0]) + op + print(*e.args[1]) + ")"; };
  switch (e.kind) {
    case Expr::Kind::Number: return fmt(e.value);
    case Expr::Kind::Symbol: return e.name;
    case Expr::Kind::Neg: return "(-" + print(*e.args[0]) + ")";
    case Expr::Kind::Add: return bin(" + ");
    case Expr::Kind::Sub: return bin(" - ");
    case Expr::Kind::Mul: return bin("*");
    case Expr::Kind::Div: return bin("/");
    case Expr::Kind::Pow: return bin("^");
    case Expr::Kind::Call: return e.name + "(" + print(*e.args[0]) + ")";
  }
  return "";
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

struct Token {
  enum class Kind { Number, Ident, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  double value = 0.0;
  std::size_t line = 0;
  std::size_t col = 0;  // 1-based
};

std::vector<Token> lex_line(const std::string& s, std::size_t line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.line = line;
    t.col = i + 1;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          j = k;
          while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        }
      }
      t.kind = Token::Kind::Number;
      t.text = s.substr(i, j - i);
      std::size_t used = 0;
      try {
        t.value = std::stod(t.text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != t.text.size()) throw ModelError(line, t.col, {"number"}, "malformed number '" + t.text + "'");
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Token::Kind::Ident;
      t.text = s.substr(i, j - i);
      i = j;
    } else if (std::string("=,+-*/^()[]").find(c) != std::string::npos) {
      t.kind = Token::Kind::Punct;
      t.text = std::string(1, c);
      ++i;
    } else {
      throw ModelError(line, t.col, {"number", "identifier", "operator"}, std::string("unexpected character '") + c + "'");
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Token::Kind::End;
  end.line = line;
  end.col = s.size() + 1;
  out.push_back(end);
  return out;
}

bool is_pauli_word(const std::string& w) {
  std::size_t start = (!w.empty() && w[0] == 'i') ? 1 : 0;
  if (w.size() <= start) return false;
  for (std::size_t k = start; k < w.size(); ++k)
    if (std::string("IXYZ").find(w[k]) == std::string::npos) return false;
  return true;
}

const std::vector<std::string> kPrimary{"number", "identifier", "function", "'('"};

// ---------------------------------------------------------------------------
// Line parser

struct PendingSymbols {
  ExprPtr expr;
  std::size_t line;
  std::size_t col;
  bool allow_parameter;
};

class LineParser {
 public:
  LineParser(std::vector<Token> toks, std::vector<PendingSymbols>& pending)
      : t_(std::move(toks)), pending_(pending) {}

  const Token& peek(std::size_t k = 0) const { return t_[std::min(p_ + k, t_.size() - 1)]; }
  const Token& next() { return t_[std::min(p_++, t_.size() - 1)]; }
  bool at_punct(const char* c, std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::Punct && peek(k).text == c;
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }

  [[noreturn]] void fail(const Token& at, std::vector<std::string> expected, const std::string& msg) const {
    throw ModelError(at.line, at.col, std::move(expected), msg);
  }
  std::string describe(const Token& t) const {
    return t.kind == Token::Kind::End ? "end of line" : "'" + t.text + "'";
  }

  void expect_punct(const char* c) {
    if (!at_punct(c)) fail(peek(), {std::string("'") + c + "'"}, "unexpected " + describe(peek()));
    next();
  }
  std::string expect_ident(const std::string& label) {
    if (peek().kind != Token::Kind::Ident) fail(peek(), {label}, "unexpected " + describe(peek()));
    return next().text;
  }
  void expect_keyword(const std::string& kw) {
    if (peek().kind != Token::Kind::Ident || peek().text != kw) fail(peek(), {"'" + kw + "'"}, "unexpected " + describe(peek()));
    next();
  }
  void expect_end(std::vector<std::string> expected = {"end of line"}) {
    if (!at_end()) fail(peek(), std::move(expected), "unexpected " + describe(peek()));
  }

  bool at_operator_literal(std::size_t k = 0) const {
    return (peek(k).kind == Token::Kind::Ident && is_pauli_word(peek(k).text)) || at_punct("[", k);
  }

  // Records the expression for symbol resolution once all declarations are known.
  ExprPtr tracked_expr(bool allow_parameter) {
    const Token start = peek();
    ExprPtr e = expr();
    pending_.push_back({e, start.line, start.col, allow_parameter});
    return e;
  }

  ExprPtr expr() {
    ExprPtr e = mul_expr(false);
    while (at_punct("+") || at_punct("-")) {
      const bool plus = next().text == "+";
      ExprPtr r = mul_expr(false);
      e = node(plus ? Expr::Kind::Add : Expr::Kind::Sub, {e, r});
    }
    return e;
  }

  // With stop_before_operator, a '*' followed by an operator literal ends the
  // product so that the caller can read "coeff * OP".
  ExprPtr mul_expr(bool stop_before_operator) {
    ExprPtr e = unary();
    while (at_punct("*") || at_punct("/")) {
      if (stop_before_operator && at_punct("*") && at_operator_literal(1)) break;
      const bool times = next().text == "*";
      ExprPtr r = unary();
      e = node(times ? Expr::Kind::Mul : Expr::Kind::Div, {e, r});
    }
    return e;
  }

  ExprPtr unary() {
    if (at_punct("-")) {
      next();
      return node(Expr::Kind::Neg, {unary()});
    }
    if (at_punct("+")) {
      next();
      return unary();
    }
    ExprPtr base = primary();
    if (at_punct("^")) {
      next();
      return node(Expr::Kind::Pow, {base, unary()});
    }
    return base;
  }

  ExprPtr primary() {
    const Token& t = peek();
    if (t.kind == Token::Kind::Number) {
      next();
      return number(t.value);
    }
    if (at_punct("(")) {
      next();
      ExprPtr e = expr();
      expect_punct(")");
      return e;
    }
    if (t.kind == Token::Kind::Ident) {
      if (at_punct("(", 1)) {
        const auto& fs = functions();
        if (std::find(fs.begin(), fs.end(), t.text) == fs.end()) fail(t, fs, "unknown function '" + t.text + "'");
        next();
        next();
        ExprPtr a = expr();
        expect_punct(")");
        return call(t.text, a);
      }
      if (is_pauli_word(t.text)) fail(t, kPrimary, "operator literal '" + t.text + "' inside an expression");
      next();
      return symbol(t.text);
    }
    fail(t, kPrimary, "unexpected " + describe(t));
  }

  OperatorLiteral literal() {
    const Token& t = peek();
    OperatorLiteral op;
    op.line = t.line;
    op.column = t.col;
    if (t.kind == Token::Kind::Ident && is_pauli_word(t.text)) {
      next();
      op.kind = OperatorLiteral::Kind::Pauli;
      op.imaginary = t.text[0] == 'i';
      op.pauli = t.text.substr(op.imaginary ? 1 : 0);
      return op;
    }
    if (!at_punct("[")) fail(t, {"Pauli string", "'['"}, "unexpected " + describe(t));
    next();
    op.kind = OperatorLiteral::Kind::Matrix;
    do {
      expect_punct("[");
      std::vector<cplx> row;
      row.push_back(complex_entry());
      while (at_punct(",")) {
        next();
        row.push_back(complex_entry());
      }
      expect_punct("]");
      op.rows.push_back(std::move(row));
    } while (at_punct(",") && (next(), true));
    expect_punct("]");
    return op;
  }

  // [+-] part ([+-] part)* where part is a number, a number followed by i, or i.
  cplx complex_entry() {
    cplx sum = 0.0;
    bool first = true;
    while (true) {
      double sign = 1.0;
      if (at_punct("+") || at_punct("-")) {
        sign = next().text == "-" ? -1.0 : 1.0;
      } else if (!first) {
        break;
      }
      const Token& t = peek();
      if (t.kind == Token::Kind::Number) {
        next();
        if (peek().kind == Token::Kind::Ident && peek().text == "i") {
          next();
          sum += cplx(0.0, sign * t.value);
        } else {
          sum += sign * t.value;
        }
      } else if (t.kind == Token::Kind::Ident && t.text == "i") {
        next();
        sum += cplx(0.0, sign);
      } else {
        fail(t, {"number", "'i'"}, "unexpected " + describe(t) + " in a matrix entry");
      }
      first = false;
    }
    return sum;
  }

  OperatorTerm term(int sign) {
    OperatorTerm ot;
    ot.sign = sign;
    if (!at_operator_literal()) {
      const Token start = peek();
      ot.coeff = mul_expr(true);
      pending_.push_back({ot.coeff, start.line, start.col, true});
      if (!at_punct("*")) fail(peek(), {"'*'"}, "expected '*' before the operator, found " + describe(peek()));
      next();
    }
    ot.op = literal();
    return ot;
  }

  std::vector<OperatorTerm> opsum() {
    std::vector<OperatorTerm> out;
    int sign = 1;
    if (at_punct("+") || at_punct("-")) sign = next().text == "-" ? -1 : 1;
    out.push_back(term(sign));
    while (at_punct("+") || at_punct("-")) {
      sign = next().text == "-" ? -1 : 1;
      out.push_back(term(sign));
    }
    return out;
  }

 private:
  std::vector<Token> t_;
  std::size_t p_ = 0;
  std::vector<PendingSymbols>& pending_;
};

std::size_t literal_dim(const OperatorLiteral& op) {
  if (op.kind == OperatorLiteral::Kind::Pauli) return std::size_t{1} << op.pauli.size();
  const std::size_t n = op.rows.size();
  for (const auto& r : op.rows)
    if (r.size() != n) throw ModelError(op.line, op.column, {"square matrix"}, "matrix literal is not square");
  return n;
}

void check_identifier(const Token& at, const std::string& name, const std::set<std::string>& taken) {
  const auto& fs = functions();
  if (is_pauli_word(name) || name == "i" || name == "pi" || std::find(fs.begin(), fs.end(), name) != fs.end())
    throw ModelError(at.line, at.col, {"identifier"}, "'" + name + "' is reserved");
  if (taken.count(name)) throw ModelError(at.line, at.col, {"new identifier"}, "'" + name + "' is already declared");
}

}  // namespace

// ---------------------------------------------------------------------------
// Model parser

ModelSpec parse_model(const std::string& text) {
  ModelSpec s;
  enum class Section { None, System, Hamiltonian, Dissipator, Sweep };
  Section section = Section::None;
  std::vector<PendingSymbols> pending;
  std::set<std::string> declared;
  std::set<std::string> seen_keys;
  bool have_parameter = false;
  std::size_t dim_line = 0;
  const std::vector<std::string> kSections{"[system]", "[hamiltonian]", "[dissipator]", "[sweep]"};

  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::vector<Token> toks = lex_line(raw, lineno);
    if (toks.front().kind == Token::Kind::End) continue;

    if (toks.front().kind == Token::Kind::Punct && toks.front().text == "[" && toks.size() >= 4 &&
        toks[1].kind == Token::Kind::Ident && toks[2].text == "]" && toks[3].kind == Token::Kind::End) {
      const std::string& name = toks[1].text;
      if (name == "system") section = Section::System;
      else if (name == "hamiltonian") section = Section::Hamiltonian;
      else if (name == "dissipator") section = Section::Dissipator;
      else if (name == "sweep") section = Section::Sweep;
      else throw ModelError(lineno, toks[1].col, kSections, "unknown section '" + name + "'");
      continue;
    }

    LineParser p(std::move(toks), pending);
    auto once = [&](const std::string& key) {
      if (!seen_keys.insert(key).second) p.fail(p.peek(), {"a different key"}, "'" + key + "' is set twice");
    };
    switch (section) {
      case Section::None: p.fail(p.peek(), kSections, "content before the first section header");
      case Section::System: {
        const Token key = p.peek();
        const std::string k = p.expect_ident("system key");
        if (k == "name") {
          once("name");
          p.expect_punct("=");
          s.name = p.expect_ident("model name");
        } else if (k == "dim") {
          once("dim");
          p.expect_punct("=");
          const Token& t = p.peek();
          if (t.kind != Token::Kind::Number || t.value < 1.0 || t.value != std::floor(t.value))
            p.fail(t, {"positive integer"}, "invalid dimension " + p.describe(t));
          p.next();
          s.dim = static_cast<std::size_t>(t.value);
          dim_line = lineno;
        } else if (k == "parameter") {
          once("parameter");
          const Token at = p.peek();
          s.parameter = p.expect_ident("parameter name");
          check_identifier(at, s.parameter, declared);
          declared.insert(s.parameter);
          p.expect_punct("=");
          const Token vt = p.peek();
          ExprPtr v = p.expr();
          std::map<std::string, double> env;
          for (const auto& [n, e] : s.constants) env[n] = evaluate(*e, env);
          try {
            s.default_value = evaluate(*v, env);
          } catch (const DomainError& e) {
            throw ModelError(vt.line, vt.col, {"constant expression"}, e.what());
          }
          have_parameter = true;
        } else if (k == "const") {
          const Token at = p.peek();
          const std::string name = p.expect_ident("constant name");
          check_identifier(at, name, declared);
          p.expect_punct("=");
          const Token vt = p.peek();
          ExprPtr v = p.expr();
          for (const auto& [n, e] : s.constants) (void)e, (void)n;
          std::function<void(const Expr&)> check = [&](const Expr& e) {
            if (e.kind == Expr::Kind::Symbol && e.name != "pi" &&
                std::none_of(s.constants.begin(), s.constants.end(), [&](const auto& c) { return c.first == e.name; }))
              throw ModelError(vt.line, vt.col, {"number", "earlier constant"},
                               "constant '" + name + "' refers to '" + e.name + "'");
            for (const auto& a : e.args) check(*a);
          };
          check(*v);
          declared.insert(name);
          s.constants.emplace_back(name, v);
        } else {
          p.fail(key, {"name", "dim", "parameter", "const"}, "unknown system key '" + k + "'");
        }
        p.expect_end();
        break;
      }
      case Section::Hamiltonian: {
        p.expect_keyword("H");
        if (p.at_punct("+")) p.next();
        p.expect_punct("=");
        for (auto& t : p.opsum()) s.hamiltonian.push_back(std::move(t));
        p.expect_end({"'+'", "'-'", "end of line"});
        break;
      }
      case Section::Dissipator: {
        Dissipator d;
        d.line = lineno;
        p.expect_keyword("rate");
        p.expect_punct("=");
        d.rate = p.tracked_expr(true);
        p.expect_punct(",");
        p.expect_keyword("op");
        p.expect_punct("=");
        d.op = p.opsum();
        p.expect_end({"'+'", "'-'", "end of line"});
        s.dissipators.push_back(std::move(d));
        break;
      }
      case Section::Sweep: {
        const Token key = p.peek();
        const std::string k = p.expect_ident("sweep key");
        if (k != "t0" && k != "t1" && k != "nt" && k != "params")
          p.fail(key, {"t0", "t1", "nt", "params"}, "unknown sweep key '" + k + "'");
        once("sweep." + k);
        p.expect_punct("=");
        if (k == "t0") {
          s.sweep.t0 = p.tracked_expr(false);
        } else if (k == "t1") {
          s.sweep.t1 = p.tracked_expr(false);
        } else if (k == "nt") {
          const Token& t = p.peek();
          if (t.kind != Token::Kind::Number || t.value < 2.0 || t.value != std::floor(t.value))
            p.fail(t, {"integer >= 2"}, "invalid point count " + p.describe(t));
          p.next();
          s.sweep.nt = static_cast<std::size_t>(t.value);
        } else {
          s.sweep.params.push_back(p.tracked_expr(false));
          while (p.at_punct(",")) {
            p.next();
            s.sweep.params.push_back(p.tracked_expr(false));
          }
        }
        p.expect_end();
        break;
      }
    }
  }

  if (!have_parameter) throw ModelError(lineno + 1, 1, {"parameter"}, "the [system] section must declare a parameter");

  // Symbol resolution now that every declaration is known.
  std::function<void(const Expr&, const PendingSymbols&)> resolve = [&](const Expr& e, const PendingSymbols& ps) {
    if (e.kind == Expr::Kind::Symbol && e.name != "pi") {
      const bool is_param = e.name == s.parameter;
      const bool is_const =
          std::any_of(s.constants.begin(), s.constants.end(), [&](const auto& c) { return c.first == e.name; });
      if (!is_const && !(is_param && ps.allow_parameter)) {
        std::vector<std::string> names;
        if (ps.allow_parameter) names.push_back(s.parameter);
        for (const auto& c : s.constants) names.push_back(c.first);
        if (names.empty()) names.push_back("number");
        throw ModelError(ps.line, ps.col, names, "unknown symbol '" + e.name + "'");
      }
    }
    for (const auto& a : e.args) resolve(*a, ps);
  };
  for (const auto& ps : pending) resolve(*ps.expr, ps);

  // Dimension agreement across every operator literal.
  std::optional<std::size_t> dim = s.dim;
  auto visit = [&](const OperatorTerm& t) {
    const std::size_t d = literal_dim(t.op);
    if (!dim) dim = d;
    if (d != *dim)
      throw ModelError(t.op.line, t.op.column, {"operator of dimension " + std::to_string(*dim)},
                       "dimension mismatch: operator has dimension " + std::to_string(d));
  };
  for (const auto& t : s.hamiltonian) visit(t);
  for (const auto& d : s.dissipators)
    for (const auto& t : d.op) visit(t);
  if (!dim) throw ModelError(dim_line ? dim_line : 1, 1, {"dim"}, "no operator literal fixes the dimension");
  s.resolved_dim = *dim;
  return s;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string print_complex(cplx z) {
  if (z.imag() == 0.0) return fmt(z.real());
  if (z.real() == 0.0) return fmt(z.imag()) + "i";
  return fmt(z.real()) + (z.imag() < 0.0 ? " - " : " + ") + fmt(std::abs(z.imag())) + "i";
}

std::string print_literal(const OperatorLiteral& op) {
  if (op.kind == OperatorLiteral::Kind::Pauli) return (op.imaginary ? "i" : "") + op.pauli;
  std::string s = "[";
  for (std::size_t r = 0; r < op.rows.size(); ++r) {
    s += r ? ", [" : "[";
    for (std::size_t c = 0; c < op.rows[r].size(); ++c) s += (c ? ", " : "") + print_complex(op.rows[r][c]);
    s += "]";
  }
  return s + "]";
}

std::string print_opsum(const std::vector<OperatorTerm>& terms) {
  std::string s;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const OperatorTerm& t = terms[k];
    if (k == 0) s += t.sign < 0 ? "-" : "";
    else s += t.sign < 0 ? " - " : " + ";
    if (t.coeff) s += print(*t.coeff) + "*";
    s += print_literal(t.op);
  }
  return s;
}

}  // namespace

std::string print_model(const ModelSpec& s) {
  std::ostringstream o;
  o << "[system]\n";
  if (!s.name.empty()) o << "name = " << s.name << "\n";
  if (s.dim) o << "dim = " << *s.dim << "\n";
  for (const auto& [n, e] : s.constants) o << "const " << n << " = " << print(*e) << "\n";
  o << "parameter " << s.parameter << " = " << fmt(s.default_value) << "\n";
  if (!s.hamiltonian.empty()) o << "\n[hamiltonian]\nH = " << print_opsum(s.hamiltonian) << "\n";
  if (!s.dissipators.empty()) {
    o << "\n[dissipator]\n";
    for (const auto& d : s.dissipators) o << "rate = " << print(*d.rate) << ", op = " << print_opsum(d.op) << "\n";
  }
  const SweepSpec& w = s.sweep;
  if (w.t0 || w.t1 || w.nt || !w.params.empty()) {
    o << "\n[sweep]\n";
    if (w.t0) o << "t0 = " << print(*w.t0) << "\n";
    if (w.t1) o << "t1 = " << print(*w.t1) << "\n";
    if (w.nt) o << "nt = " << *w.nt << "\n";
    if (!w.params.empty()) {
      o << "params = ";
      for (std::size_t k = 0; k < w.params.size(); ++k) o << (k ? ", " : "") << print(*w.params[k]);
      o << "\n";
    }
  }
  return o.str();
}

namespace {

bool same(const ExprPtr& a, const ExprPtr& b) { return (!a && !b) || (a && b && *a == *b); }

bool same_literal(const OperatorLiteral& a, const OperatorLiteral& b) {
  return a.kind == b.kind && a.imaginary == b.imaginary && a.pauli == b.pauli && a.rows == b.rows;
}

bool same_terms(const std::vector<OperatorTerm>& a, const std::vector<OperatorTerm>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k].sign != b[k].sign || !same(a[k].coeff, b[k].coeff) || !same_literal(a[k].op, b[k].op)) return false;
  return true;
}

}  // namespace

// Source positions are ignored.
bool operator==(const ModelSpec& a, const ModelSpec& b) {
  if (a.name != b.name || a.dim != b.dim || a.resolved_dim != b.resolved_dim || a.parameter != b.parameter ||
      a.default_value != b.default_value || a.constants.size() != b.constants.size() ||
      a.dissipators.size() != b.dissipators.size() || !same_terms(a.hamiltonian, b.hamiltonian))
    return false;
  for (std::size_t k = 0; k < a.constants.size(); ++k)
    if (a.constants[k].first != b.constants[k].first || !same(a.constants[k].second, b.constants[k].second)) return false;
  for (std::size_t k = 0; k < a.dissipators.size(); ++k)
    if (!same(a.dissipators[k].rate, b.dissipators[k].rate) || !same_terms(a.dissipators[k].op, b.dissipators[k].op))
      return false;
  const SweepSpec& x = a.sweep;
  const SweepSpec& y = b.sweep;
  if (!same(x.t0, y.t0) || !same(x.t1, y.t1) || x.nt != y.nt || x.params.size() != y.params.size()) return false;
  for (std::size_t k = 0; k < x.params.size(); ++k)
    if (!same(x.params[k], y.params[k])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Compilation

CMatrix operator_matrix(const OperatorLiteral& op) {
  if (op.kind == OperatorLiteral::Kind::Matrix) {
    const std::size_t n = literal_dim(op);
    CMatrix m(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) m(r, c) = op.rows[r][c];
    return m;
  }
  const cplx I(0.0, 1.0);
  CMatrix m{{1.0}};
  for (char c : op.pauli) {
    CMatrix f;
    switch (c) {
      case 'X': f = CMatrix{{0.0, 1.0}, {1.0, 0.0}}; break;
      case 'Y': f = CMatrix{{0.0, -I}, {I, 0.0}}; break;
      case 'Z': f = CMatrix{{1.0, 0.0}, {0.0, -1.0}}; break;
      default: f = CMatrix::identity(2); break;
    }
    m = kron(m, f);
  }
  return op.imaginary ? I * m : m;
}

std::map<std::string, double> constant_values(const ModelSpec& s, const std::map<std::string, double>& overrides) {
  for (const auto& [name, v] : overrides) {
    (void)v;
    if (std::none_of(s.constants.begin(), s.constants.end(), [&](const auto& c) { return c.first == name; })) {
      std::vector<std::string> names;
      for (const auto& c : s.constants) names.push_back(c.first);
      throw ModelError(0, 0, names, "unknown constant '" + name + "'");
    }
  }
  std::map<std::string, double> env;
  for (const auto& [name, e] : s.constants) {
    auto it = overrides.find(name);
    env[name] = it != overrides.end() ? it->second : evaluate(*e, env);
  }
  return env;
}

namespace {

struct CompiledTerm {
  double sign;
  ExprPtr coeff;
  ExprPtr dcoeff;
  CMatrix op;
};

CMatrix sum_terms(const std::vector<CompiledTerm>& terms, std::size_t M, const std::map<std::string, double>& env,
                  bool derivative) {
  CMatrix h(M, M);
  for (const auto& t : terms) {
    const ExprPtr& e = derivative ? t.dcoeff : t.coeff;
    const double c = e ? evaluate(*e, env) : (derivative ? 0.0 : 1.0);
    if (c != 0.0) h += (t.sign * c) * t.op;
  }
  return h;
}

}  // namespace

OpenSystemModel compile(const ModelSpec& s, const std::map<std::string, double>& overrides) {
  const std::size_t M = s.resolved_dim;
  const std::map<std::string, double> base = constant_values(s, overrides);
  const std::string param = s.parameter;
  auto env_at = [base, param](double theta) {
    std::map<std::string, double> env = base;
    env[param] = theta;
    return env;
  };

  std::vector<CompiledTerm> hterms;
  for (const auto& t : s.hamiltonian)
    hterms.push_back({static_cast<double>(t.sign), t.coeff, t.coeff ? differentiate(t.coeff, param) : nullptr,
                      operator_matrix(t.op)});
  if (!s.hamiltonian.empty()) {
    const CMatrix h0 = sum_terms(hterms, M, env_at(s.default_value), false);
    if ((h0 - h0.adjoint()).max_abs() > 1e-12 * std::max(1.0, h0.max_abs())) {
      const OperatorLiteral& first = s.hamiltonian.front().op;
      throw ModelError(first.line, first.column, {"Hermitian Hamiltonian"},
                       "the Hamiltonian is not Hermitian at the default parameter");
    }
  }

  std::vector<JumpChannel> jumps;
  std::vector<ExprPtr> drates;
  for (const auto& d : s.dissipators) {
    std::vector<CompiledTerm> terms;
    for (const auto& t : d.op) {
      if (t.coeff && depends_on(*t.coeff, param))
        throw ModelError(t.op.line, t.op.column, {"parameter-free coefficient"},
                         "jump operators may not depend on '" + param + "'; put it in the rate");
      terms.push_back({static_cast<double>(t.sign), t.coeff, nullptr, operator_matrix(t.op)});
    }
    const CMatrix op = sum_terms(terms, M, base, false);
    const double r0 = evaluate(*d.rate, env_at(s.default_value));
    if (r0 < 0.0)
      throw ModelError(d.line, 1, {"non-negative rate"}, "rate evaluates to " + fmt(r0) + " at the default parameter");
    const ExprPtr rate = d.rate;
    jumps.push_back({op, [rate, env_at](double theta) { return evaluate(*rate, env_at(theta)); }});
    drates.push_back(differentiate(d.rate, param));
  }

  auto hamiltonian = [hterms, M, env_at](double theta) { return sum_terms(hterms, M, env_at(theta), false); };
  auto derivatives = [hterms, drates, M, env_at](double theta) {
    const auto env = env_at(theta);
    ModelDerivatives d{sum_terms(hterms, M, env, true), {}};
    for (const auto& e : drates) d.d_rates.push_back(evaluate(*e, env));
    return d;
  };
  return OpenSystemModel(M, hamiltonian, std::move(jumps), derivatives, s.name);
}

ModelSpec load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ModelError(0, 0, {"readable model file"}, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_model(buf.str());
}

std::string model_hash(const ModelSpec& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : print_model(s)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dqfi::dsl
