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

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dqfi/errors.hpp"
#include "dqfi/liouville.hpp"

namespace dqfi::dsl {

/// Parse or compile diagnostic. Line and column are 1-based.
class ModelError : public DomainError {
 public:
  ModelError(std::size_t line, std::size_t column, std::vector<std::string> expected, const std::string& message);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::vector<std::string> expected_;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Number, Symbol, Neg, Add, Sub, Mul, Div, Pow, Call };
  Kind kind = Kind::Number;
  double value = 0.0;  // Number
  std::string name;    // Symbol or function name
  std::vector<ExprPtr> args;
};

bool operator==(const Expr& a, const Expr& b);

ExprPtr number(double v);
ExprPtr symbol(std::string name);

/// Function whitelist.
const std::vector<std::string>& functions();

/// Throws DomainError on an unbound symbol or a non-finite result.
double evaluate(const Expr& e, const std::map<std::string, double>& env);
/// d e / d var, lightly simplified.
ExprPtr differentiate(const ExprPtr& e, const std::string& var);
bool depends_on(const Expr& e, const std::string& var);
std::string print(const Expr& e);

struct OperatorLiteral {
  enum class Kind { Pauli, Matrix };
  Kind kind = Kind::Pauli;
  bool imaginary = false;  // leading i on a Pauli string
  std::string pauli;       // letters I, X, Y, Z; leftmost is the most significant factor
  std::vector<std::vector<cplx>> rows;
  std::size_t line = 0;
  std::size_t column = 0;
};

/// sign * coeff * op; a missing coefficient means 1.
struct OperatorTerm {
  int sign = 1;
  ExprPtr coeff;
  OperatorLiteral op;
};

struct Dissipator {
  ExprPtr rate;
  std::vector<OperatorTerm> op;
  std::size_t line = 0;
};

struct SweepSpec {
  ExprPtr t0;
  ExprPtr t1;
  std::optional<std::size_t> nt;
  std::vector<ExprPtr> params;
};

struct ModelSpec {
  std::string name;
  std::optional<std::size_t> dim;  // as declared
  std::size_t resolved_dim = 0;    // from the operator literals
  std::string parameter;
  double default_value = 0.0;
  std::vector<std::pair<std::string, ExprPtr>> constants;
  std::vector<OperatorTerm> hamiltonian;
  std::vector<Dissipator> dissipators;
  SweepSpec sweep;
};

bool operator==(const ModelSpec& a, const ModelSpec& b);

/// Throws ModelError with the position and the expected tokens.
ModelSpec parse_model(const std::string& text);
/// Canonical text; parse_model(print_model(s)) == s.
std::string print_model(const ModelSpec& s);

/// Matrix of an operator literal.
CMatrix operator_matrix(const OperatorLiteral& op);

/// Constant values, optionally overridden by name. Throws ModelError for an
/// override of an unknown constant.
std::map<std::string, double> constant_values(const ModelSpec& s, const std::map<std::string, double>& overrides = {});

/// Throws ModelError for a non-Hermitian H or a negative rate at the default
/// parameter, and for jump operators that depend on the parameter.
OpenSystemModel compile(const ModelSpec& s, const std::map<std::string, double>& overrides = {});

/// Reads and parses a file; ModelError at line 0 when unreadable.
ModelSpec load_model(const std::string& path);

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string model_hash(const ModelSpec& s);

}  // namespace dqfi::dsl
