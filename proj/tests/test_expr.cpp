#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hisd/expr.hpp"
#include "hisd/gallery.hpp"
#include "oracles.hpp"

using namespace hisd;
using expr::Expr;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("single-operator parse") {
  Expr e = expr::parse_expression("x1**2", 1);
  const auto& root = e.root();
  REQUIRE(root->kind == expr::Node::Kind::Binary);
  CHECK(root->bop == expr::BinaryOp::Pow);
  CHECK(root->a->kind == expr::Node::Kind::Variable);
  CHECK(root->a->index == 1);
  CHECK(root->b->kind == expr::Node::Kind::Constant);
  CHECK(root->b->value == 2.0);
}

TEST_CASE("butterfly energy parses and vanishes at the origin") {
  Expr e = expr::parse_expression(gallery::butterfly_expression(), 2);
  CHECK(e.eval(vec2(0.0, 0.0)) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("variable index out of range") {
  CHECK_THROWS_AS(expr::parse_expression("x1 + x3", 2), expr::ParseError);
}

TEST_CASE("syntax errors carry a position") {
  try {
    expr::parse_expression("x1 + (x2", 2);
    FAIL("expected ParseError");
  } catch (const expr::ParseError& err) {
    CHECK(err.position() > 0);
  }
  CHECK_THROWS_AS(expr::parse_expression("foo(x1)", 2), expr::ParseError);
}

TEST_CASE("pow binds tighter than unary minus, right-associative") {
  Expr e = expr::parse_expression("-x1**2", 1);
  Eigen::VectorXd x(1);
  x << 3.0;
  CHECK(e.eval(x) == doctest::Approx(-9.0));
  Expr f = expr::parse_expression("2**3**2", 1);
  CHECK(f.eval(x) == doctest::Approx(512.0));
  Expr g = expr::parse_expression("2**-1", 1);
  CHECK(g.eval(x) == doctest::Approx(0.5));
}

TEST_CASE("derivative of even quartic is stationary at 1") {
  Expr e = expr::parse_expression("x1**4 - 2*x1**2", 1);
  Expr d = differentiate(e, 1);
  Eigen::VectorXd x(1);
  x << 1.0;
  CHECK(d.eval(x) == doctest::Approx(0.0).epsilon(1e-14));
  // 4*x1**3 - 4*x1 at a generic point
  x << 0.7;
  CHECK(d.eval(x) == doctest::Approx(4.0 * 0.343 - 2.8));
}

TEST_CASE("product rule degenerate case") {
  Expr e = expr::parse_expression("x1**2*x2", 2);
  Expr d = differentiate(e, 2);
  for (double a : {-1.3, 0.0, 2.5})
    CHECK(d.eval(vec2(a, 7.0)) == doctest::Approx(a * a));
}

TEST_CASE("butterfly gradient matches finite differences") {
  Expr e = expr::parse_expression(gallery::butterfly_expression(), 2);
  auto energy = compile_scalar(e);
  auto gradient = compile_gradient(e);
  Eigen::VectorXd x = vec2(0.1, 0.1);
  Eigen::VectorXd fd = oracles::central_diff_gradient(
      [&](const Eigen::VectorXd& p) { return energy(p); }, x, 1e-6);
  Eigen::VectorXd sym = gradient(x);
  CHECK((sym - fd).norm() / std::max(1.0, sym.norm()) < 1e-8);
}

TEST_CASE("compiled scalar agrees with direct interpretation") {
  Expr e = expr::parse_expression("x1**2+x2**2", 2);
  CHECK(compile_scalar(e)(vec2(3.0, 4.0)) == doctest::Approx(25.0));

  Expr mb = expr::parse_expression(gallery::mueller_brown_expression(), 2);
  auto compiled = compile_scalar(mb);
  CHECK(compiled(vec2(0.0, 0.0)) ==
        doctest::Approx(mb.eval(vec2(0.0, 0.0))).epsilon(1e-12));

  Expr ex = expr::parse_expression("exp(x1)", 1);
  Eigen::VectorXd zero(1);
  zero << 0.0;
  CHECK(compile_scalar(ex)(zero) == doctest::Approx(1.0));
}

TEST_CASE("first Mueller-Brown Gaussian contributes its amplitude at its center") {
  Expr mb = expr::parse_expression(gallery::mueller_brown_expression(), 2);
  // At (1, 0) the first exponent vanishes, so the first term is exactly -200.
  double total = mb.eval(vec2(1.0, 0.0));
  double first = -200.0;
  double rest = total - first;
  CHECK(std::abs(rest) < 20.0);
}

TEST_CASE("compiled gradients") {
  Expr e = expr::parse_expression("x1**2+x2**2", 2);
  Eigen::VectorXd g = compile_gradient(e)(vec2(1.0, 2.0));
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(4.0));

  Expr cubic = expr::parse_expression(gallery::cubic_expression(3), 3);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  CHECK(compile_gradient(cubic)(ones).norm() == doctest::Approx(0.0).epsilon(1e-14));

  Expr butterfly = expr::parse_expression(gallery::butterfly_expression(), 2);
  Eigen::VectorXd g0 = compile_gradient(butterfly)(vec2(0.0, 0.0));
  CHECK(g0.norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("general pow rule handles non-integer exponents") {
  Expr e = expr::parse_expression("x1**x2", 2);
  Expr d1 = differentiate(e, 1);
  Expr d2 = differentiate(e, 2);
  Eigen::VectorXd x = vec2(2.0, 3.5);
  CHECK(d1.eval(x) == doctest::Approx(3.5 * std::pow(2.0, 2.5)));
  CHECK(d2.eval(x) == doctest::Approx(std::pow(2.0, 3.5) * std::log(2.0)));
  // Domain violation surfaces as a poisoned value at evaluation time.
  Expr lg = expr::parse_expression("log(x1)", 1);
  Eigen::VectorXd neg(1);
  neg << -1.0;
  CHECK(std::isnan(lg.eval(neg)));
}

TEST_CASE("random polynomials: symbolic gradient vs finite differences") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    int dim = 1 + static_cast<int>(rng.uniform01() * 3);
    std::string text = oracles::random_polynomial(rng, dim, 5, 6);
    Expr e = expr::parse_expression(text, dim);
    auto energy = compile_scalar(e);
    auto gradient = compile_gradient(e);
    for (int p = 0; p < 5; ++p) {
      Eigen::VectorXd x = rng.uniform_vector(dim, -1.5, 1.5);
      Eigen::VectorXd fd = oracles::central_diff_gradient(
          [&](const Eigen::VectorXd& q) { return energy(q); }, x, 1e-6);
      Eigen::VectorXd sym = gradient(x);
      CHECK((sym - fd).norm() / std::max(1.0, sym.norm()) < 1e-6);
    }
  }
}

TEST_CASE("mixed partials commute") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    std::string text = oracles::random_polynomial(rng, 3, 4, 5);
    Expr e = expr::parse_expression(text, 3);
    for (int i = 1; i <= 3; ++i) {
      for (int j = i + 1; j <= 3; ++j) {
        Expr dij = differentiate(differentiate(e, i), j);
        Expr dji = differentiate(differentiate(e, j), i);
        for (int p = 0; p < 5; ++p) {
          Eigen::VectorXd x = rng.uniform_vector(3, -1.0, 1.0);
          CHECK(dij.eval(x) == doctest::Approx(dji.eval(x)).epsilon(1e-10));
        }
      }
    }
  }
}

TEST_CASE("parse, unparse, parse round-trips to an equivalent tree") {
  Rng rng(13);
  std::vector<std::string> sources = {
      gallery::butterfly_expression(),
      gallery::mueller_brown_expression(),
      gallery::cubic_expression(3),
      "-x1**2 + sin(x2)*cos(x1) - sqrt(abs(x2) + 1)/(x1**2 + 1) + tan(x1/4)",
  };
  for (int t = 0; t < 6; ++t) sources.push_back(oracles::random_polynomial(rng, 3, 5, 7));
  for (const std::string& source : sources) {
    int dim = 3;
    Expr e = expr::parse_expression(source, dim);
    Expr back = expr::parse_expression(e.unparse(), dim);
    for (int p = 0; p < 100; ++p) {
      Eigen::VectorXd x = rng.uniform_vector(dim, -2.0, 2.0);
      double a = e.eval(x);
      double b = back.eval(x);
      if (std::isnan(a)) {
        CHECK(std::isnan(b));
      } else {
        CHECK(b == doctest::Approx(a).epsilon(1e-12));
      }
    }
  }
}
