#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>

#include "doctest.h"
#include "dqfi/liouville.hpp"
#include "dqfi/model_dsl.hpp"
#include "test_util.hpp"

using namespace dqfi;
using namespace dqfi::dsl;
using dqfi::testing::max_diff;

namespace {

const cplx I(0.0, 1.0);

const char* kSpinFlip = R"(# spin flip
[system]
const gamma_x = 0.5
parameter theta = 1

[hamiltonian]
H = 0.5*theta * Z

[dissipator]
rate=gamma_x, op=X
)";

ExprPtr binary(Expr::Kind k, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->args = {std::move(a), std::move(b)};
  return e;
}

ModelError parse_error(const std::string& text) {
  try {
    parse_model(text);
  } catch (const ModelError& e) {
    return e;
  }
  FAIL("expected a ModelError for:\n" << text);
  return ModelError(0, 0, {}, "");
}

ModelError compile_error(const std::string& text) {
  const ModelSpec s = parse_model(text);
  try {
    compile(s);
  } catch (const ModelError& e) {
    return e;
  }
  FAIL("expected a compile error for:\n" << text);
  return ModelError(0, 0, {}, "");
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::string with_header(const std::string& body) { return "[system]\nparameter theta = 0.7\n" + body; }

double fd(const ExprPtr& e, double theta) {
  const double h = 1e-5;
  auto at = [&](double x) { return evaluate(*e, {{"theta", x}}); };
  return (at(theta + h) - at(theta - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("spin-flip source parses to one Hamiltonian term and one dissipator") {
  const ModelSpec s = parse_model(kSpinFlip);
  CHECK(s.parameter == "theta");
  CHECK(s.default_value == 1.0);
  CHECK(s.resolved_dim == 2);
  REQUIRE(s.hamiltonian.size() == 1);
  const OperatorTerm& h = s.hamiltonian[0];
  CHECK(h.sign == 1);
  CHECK(h.op.kind == OperatorLiteral::Kind::Pauli);
  CHECK(h.op.pauli == "Z");
  REQUIRE(h.coeff);
  CHECK(*h.coeff == *binary(Expr::Kind::Mul, number(0.5), symbol("theta")));
  REQUIRE(s.dissipators.size() == 1);
  CHECK(*s.dissipators[0].rate == *symbol("gamma_x"));
  REQUIRE(s.dissipators[0].op.size() == 1);
  CHECK(s.dissipators[0].op[0].op.pauli == "X");
}

TEST_CASE("a doubled '*' is reported at the second '*'") {
  const ModelError e = parse_error(with_header("[hamiltonian]\nH = 0.5* * Z\n"));
  CHECK(e.line() == 4);
  CHECK(e.column() == 10);
  CHECK(contains(e.expected(), "number"));
  CHECK(contains(e.expected(), "'('"));
}

TEST_CASE("two-qubit Pauli sum has dimension 4 and round-trips through the printer") {
  const ModelSpec s = parse_model(with_header("[hamiltonian]\nH = ZI + 0.3*XX\n"));
  CHECK(s.resolved_dim == 4);
  REQUIRE(s.hamiltonian.size() == 2);
  CHECK(!s.hamiltonian[0].coeff);
  CHECK(s.hamiltonian[1].op.pauli == "XX");
  const ModelSpec again = parse_model(print_model(s));
  CHECK(again == s);
  CHECK(print_model(again) == print_model(s));
  CHECK(model_hash(again) == model_hash(s));

  // Leftmost letter is the most significant factor.
  const OpenSystemModel m = compile(s);
  const CMatrix z{{1.0, 0.0}, {0.0, -1.0}};
  const CMatrix x{{0.0, 1.0}, {1.0, 0.0}};
  CHECK(max_diff(m.hamiltonian(0.7), kron(z, CMatrix::identity(2)) + 0.3 * kron(x, x)) < 1e-15);
}

TEST_CASE("print-parse idempotence over a varied source") {
  const std::string src = R"([system]
name = mixed
dim = 2
const a = 2^-1
const b = sqrt(a) + exp(-a)/3
parameter theta = -0.25
[hamiltonian]
H = -a*theta^2 * iY + cos(theta)*sin(b*theta) * X
H += [[1, 1-2i], [1+2i, -1]] - (theta - 1)/2 * Z
[dissipator]
rate = b*theta^2 + 1, op = [[0, 1], [0, 0]]
rate = a, op = 0.5 * X - -0.5 * iY
[sweep]
t0 = 0
t1 = 2*pi
nt = 11
params = -1, a, 1e-3
)";
  const ModelSpec s = parse_model(src);
  CHECK(s.hamiltonian.size() == 4);
  CHECK(s.hamiltonian[0].sign == -1);
  CHECK(s.hamiltonian[0].op.imaginary);
  CHECK(s.hamiltonian[2].op.rows[0][1] == cplx(1.0, -2.0));
  CHECK(s.dissipators[1].op[1].op.pauli == "Y");
  const ModelSpec again = parse_model(print_model(s));
  CHECK(again == s);
  CHECK(print_model(again) == print_model(s));
}

TEST_CASE("compiled spin-flip model reproduces the spin-flip Liouvillian") {
  const OpenSystemModel m = compile(parse_model(kSpinFlip));
  const double g = 0.5;
  const double w = 1.0;
  const CMatrix expected{{-g, 0.0, 0.0, g},
                         {0.0, -g - I * w, g, 0.0},
                         {0.0, g, -g + I * w, 0.0},
                         {g, 0.0, 0.0, -g}};
  CHECK(max_diff(build_liouvillian(m, 1.0).matrix, expected) < 1e-15);
  CHECK(max_diff(build_liouvillian(m, 1.0).matrix, build_liouvillian(models::spin_flip(g), 1.0).matrix) < 1e-15);

  // Constant overrides feed the rate.
  const OpenSystemModel m2 = compile(parse_model(kSpinFlip), {{"gamma_x", 2.0}});
  CHECK(max_diff(build_liouvillian(m2, 0.3).matrix, build_liouvillian(models::spin_flip(2.0), 0.3).matrix) < 1e-15);
  CHECK_THROWS_AS(compile(parse_model(kSpinFlip), {{"nope", 1.0}}), ModelError);
}

TEST_CASE("shipped model files load and compile") {
  for (const char* f : {"spin_flip.model", "field_angle.model"}) {
    const ModelSpec s = load_model(std::string(DQFI_MODELS_DIR) + "/" + f);
    CHECK(s.resolved_dim == 2);
    CHECK_NOTHROW(compile(s));
  }
  const OpenSystemModel fa = compile(load_model(std::string(DQFI_MODELS_DIR) + "/field_angle.model"));
  CHECK(max_diff(build_liouvillian(fa, 0.4).matrix, build_liouvillian(models::field_angle(1.0), 0.4).matrix) < 1e-15);
  const ModelError e = [] {
    try {
      load_model("/nonexistent/x.model");
    } catch (const ModelError& e) {
      return e;
    }
    return ModelError(99, 99, {}, "");
  }();
  CHECK(e.line() == 0);
}

TEST_CASE("negative rate and non-Hermitian Hamiltonian are compile errors") {
  const ModelError r = compile_error(with_header("[dissipator]\nrate = -1, op = X\n"));
  CHECK(r.line() == 4);
  CHECK(!r.expected().empty());
  const ModelError h = compile_error(with_header("[hamiltonian]\nH = theta * iZ\n"));
  CHECK(h.line() == 4);
  CHECK(!h.expected().empty());
  // A theta-dependent jump operator is rejected.
  CHECK_THROWS_AS(compile(parse_model(with_header("[dissipator]\nrate = 1, op = theta * X\n"))), ModelError);
}

TEST_CASE("analytic and finite-difference d_liouvillian agree on the field-angle model") {
  const OpenSystemModel m =
      compile(parse_model(with_header("[hamiltonian]\nH = cos(theta)*X + sin(theta)*Z\n[dissipator]\nrate = 0.2, op = Z\n")));
  for (double th : {-1.3, 0.0, 0.7, 2.1}) {
    const CMatrix a = d_liouvillian(m, th, DerivativeMode::Analytic);
    const CMatrix f = d_liouvillian(m, th, DerivativeMode::CentralFd);
    CHECK(max_diff(a, f) < 1e-8);
  }
}

TEST_CASE("rate derivatives come from the symbolic rule") {
  const OpenSystemModel m = compile(parse_model(with_header("[dissipator]\nrate = exp(theta)/(1 + theta^2), op = Z\n")));
  for (double th : {0.1, 0.9, 1.7}) {
    const CMatrix a = d_liouvillian(m, th, DerivativeMode::Analytic);
    const CMatrix f = d_liouvillian(m, th, DerivativeMode::CentralFd);
    CHECK(max_diff(a, f) < 1e-8);
  }
}

TEST_CASE("symbolic derivative matches central differences at random parameters") {
  const std::vector<std::string> sources{
      "theta",
      "3*theta^2 - theta/7",
      "sin(theta)*cos(2*theta)",
      "sqrt(1 + theta^2)",
      "exp(-theta/2)*sin(theta)",
      "(1 + theta)/(2 + cos(theta))",
      "2^theta",
      "(theta^2 + 1)^(theta/3)",
      "-cos(sqrt(theta^2 + 0.5))",
      "exp(sin(theta))^2",
  };
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const auto& src : sources) {
    const ModelSpec s = parse_model(with_header("[dissipator]\nrate = 1, op = X\n[sweep]\nparams = 1\n") +
                                    "[hamiltonian]\nH = (" + src + ") * Z\n");
    const ExprPtr e = s.hamiltonian[0].coeff;
    const ExprPtr d = differentiate(e, "theta");
    for (int k = 0; k < 10; ++k) {
      const double th = u(rng);
      const double scale = std::max(1.0, std::abs(fd(e, th)));
      CHECK_MESSAGE(std::abs(evaluate(*d, {{"theta", th}}) - fd(e, th)) < 1e-8 * scale, src << " at " << th);
    }
  }
}

TEST_CASE("every diagnostic carries a position and an expected token") {
  const std::vector<std::string> bad{
      "parameter theta = 1\n",                                          // no section
      "[system]\nparameter theta = \n",                                 // missing value
      "[system]\nparameter theta = 1\n[hamiltonian]\nH = \n",           // empty sum
      "[system]\nparameter theta = 1\n[hamiltonian]\nH = 2 Z\n",        // missing '*'
      "[system]\nparameter theta = 1\n[hamiltonian]\nH = (theta * Z\n", // unbalanced
      "[system]\nparameter theta = 1\n[hamiltonian]\nH = Z Z\n",        // trailing token
      "[system]\nparameter theta = 1\n[hamiltonian]\nH = [[1, 0], [0]]\n",
      "[system]\nparameter theta = 1\n[hamiltonian]\nH = [[1, q], [0, 1]]\n",
      "[system]\nparameter theta = 1\n[hamiltonian]\nH = 1 $ Z\n",
      "[system]\nparameter theta = 1\n[hamiltonian]\nH = tan(theta) * Z\n",
      "[system]\nparameter theta = 1\n[hamiltonian]\nH = alpha * Z\n",
      "[system]\nparameter theta = 1\n[hamiltonian]\nH = Z + XX\n",
      "[system]\ndim = 4\nparameter theta = 1\n[hamiltonian]\nH = Z\n",
      "[system]\nparameter theta = 1\n[bogus]\n",
      "[system]\nparameter theta = 1\nparameter phi = 2\n",
      "[system]\nparameter X = 1\n",
      "[system]\nconst a = theta\nparameter theta = 1\n",
      "[system]\nparameter theta = 1\n[sweep]\nt0 = theta\n",
      "[system]\nparameter theta = 1\n[sweep]\nnt = 1.5\n",
      "[system]\nparameter theta = 1\n[dissipator]\nrate = 1 op = X\n",
      "[system]\nname = spin\n",
      "[system]\nparameter theta = 1\n",
  };
  for (const auto& src : bad) {
    const ModelError e = parse_error(src);
    CHECK_MESSAGE(e.line() >= 1, src);
    CHECK_MESSAGE(e.column() >= 1, src);
    CHECK_MESSAGE(!e.expected().empty(), src);
  }
}

TEST_CASE("unknown function lists the whitelist") {
  const ModelError e = parse_error(with_header("[hamiltonian]\nH = tan(theta) * Z\n"));
  CHECK(e.line() == 4);
  CHECK(e.column() == 5);
  CHECK(e.expected() == functions());
}

TEST_CASE("dimension mismatch points at the offending literal") {
  const ModelError e = parse_error(with_header("[hamiltonian]\nH = ZI\n[dissipator]\nrate = 1, op = [[0, 1], [0, 0]]\n"));
  CHECK(e.line() == 6);
  CHECK(e.column() == 16);
  CHECK(contains(e.expected(), "operator of dimension 4"));
  const ModelError d = parse_error("[system]\ndim = 3\nparameter theta = 1\n[hamiltonian]\nH = X\n");
  CHECK(d.line() == 5);
}

TEST_CASE("expression evaluation rejects non-finite values") {
  CHECK_THROWS_AS(evaluate(*binary(Expr::Kind::Div, number(1.0), number(0.0)), {}), DomainError);
  CHECK_THROWS_AS(evaluate(*symbol("nope"), {}), DomainError);
  CHECK(evaluate(*symbol("pi"), {}) == doctest::Approx(M_PI));
}
