#include <cmath>

#include "doctest.h"
#include "gcnsa/gradcheck.hpp"
#include "gcnsa/tape.hpp"

using namespace gcnsa;

namespace {

Matrix<double> rnd(int r, int c, Rng& rng, double lo = -1, double hi = 1) {
  Matrix<double> m(r, c);
  fill_uniform(m, rng, lo, hi);
  return m;
}

}  // namespace

TEST_CASE("matrix shape invariant") {
  CHECK_THROWS_AS(Matrix<double>(2, 3, {1.0, 2.0}), shape_error);
  Matrix<double> m(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m(1, 2) == 6);
}

TEST_CASE("matmul examples") {
  Tape<double> tape;
  Matrix<double> id = Matrix<double>::identity(3);
  Matrix<double> m(3, 2, {1, 2, 3, 4, 5, 6});
  Var<double> prod = matmul(tape.leaf(id, false), tape.leaf(m, false));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) CHECK(prod.value()(i, j) == m(i, j));

  Matrix<double> a(2, 2, {1, 2, 3, 4});
  Matrix<double> b(2, 1, {5, 6});
  Var<double> ab = matmul(tape.leaf(a, false), tape.leaf(b, false));
  CHECK(ab.value()(0, 0) == doctest::Approx(17));
  CHECK(ab.value()(1, 0) == doctest::Approx(39));

  CHECK_THROWS_AS(matmul(tape.leaf(a, false), tape.leaf(m, false)), shape_error);
  try {
    matmul(tape.leaf(a, false), tape.leaf(m, false));
  } catch (const shape_error& e) {
    CHECK(std::string(e.what()).find("2x2") != std::string::npos);
    CHECK(std::string(e.what()).find("3x2") != std::string::npos);
  }
}

TEST_CASE("gradient of sum(A*B) w.r.t. A is B 1^T broadcast") {
  Rng rng(11);
  Matrix<double> a = rnd(3, 4, rng), b = rnd(4, 2, rng);
  Tape<double> tape;
  Var<double> av = tape.leaf(a, true);
  Var<double> bv = tape.leaf(b, false);
  tape.backward(sum_all(matmul(av, bv)));
  const Matrix<double>& da = tape.grad(av.id);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 4; ++k) {
      double row_sum = 0;
      for (int j = 0; j < 2; ++j) row_sum += b(k, j);
      CHECK(da(i, k) == doctest::Approx(row_sum).epsilon(1e-12));
    }

  // and against central finite differences
  std::vector<Matrix<double>> in{a, b};
  auto res = detail::check_op("matmul-sum", in, [](Tape<double>& t, auto& v) {
    return sum_all(matmul(v[0], v[1]));
  }, 1e-6);
  CHECK(res.pass);
}

TEST_CASE("rowwise_softmax examples and invariants") {
  Tape<double> tape;
  Matrix<double> x(3, 3, {0, 0, 0, 1000, 0, -1000, std::log(1.0), std::log(2.0), std::log(3.0)});
  Var<double> y = rowwise_softmax(tape.leaf(x, false));
  for (int j = 0; j < 3; ++j) CHECK(y.value()(0, j) == doctest::Approx(1.0 / 3));
  CHECK(y.value()(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(y.value()(1, 1) <= 1e-12);
  CHECK(y.value()(2, 0) == doctest::Approx(1.0 / 6));
  CHECK(y.value()(2, 1) == doctest::Approx(2.0 / 6));
  CHECK(y.value()(2, 2) == doctest::Approx(3.0 / 6));

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix<double> r = rnd(6, 5, rng, -700, 700);
    Tape<double> t2;
    Var<double> s = rowwise_softmax(t2.leaf(r, false));
    for (int i = 0; i < 6; ++i) {
      double sum = 0;
      for (int j = 0; j < 5; ++j) sum += s.value()(i, j);
      CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("relu examples") {
  Tape<double> tape;
  Matrix<double> x(1, 3, {-1, 0, 2});
  Var<double> y = relu(tape.leaf(x, false));
  CHECK(y.value()(0, 0) == 0);
  CHECK(y.value()(0, 1) == 0);
  CHECK(y.value()(0, 2) == 2);

  Matrix<double> neg = Matrix<double>::full(4, 4, -3.5);
  Var<double> z = relu(tape.leaf(neg, false));
  for (size_t i = 0; i < z.value().size(); ++i) CHECK(z.value().data()[i] == 0);
}

TEST_CASE("dropout identity modes and config error") {
  Rng rng(3);
  Matrix<double> x = rnd(4, 5, rng);
  Tape<double> tape;
  Var<double> xv = tape.leaf(x, false);
  Var<double> same_rate0 = dropout(xv, 0.0, rng, true);
  CHECK(same_rate0.id == xv.id);
  Var<double> same_eval = dropout(xv, 0.9, rng, false);
  CHECK(same_eval.id == xv.id);
  CHECK_THROWS_AS(dropout(xv, 1.0, rng, true), config_error);
}

TEST_CASE("dropout Monte-Carlo statistics at rate 0.55") {
  const double rate = 0.55;
  Rng rng(42);
  Matrix<double> x = Matrix<double>::full(200, 50, 2.0);  // 1e4 per pass, 10 passes
  long zeros = 0;
  double sum = 0;
  long total = 0;
  for (int pass = 0; pass < 10; ++pass) {
    Tape<double> tape;
    Var<double> y = dropout(tape.leaf(x, false), rate, rng, true);
    for (size_t i = 0; i < y.value().size(); ++i) {
      const double v = y.value().data()[i];
      if (v == 0.0) ++zeros;
      sum += v;
      ++total;
    }
  }
  const double zero_frac = double(zeros) / double(total);
  CHECK(zero_frac == doctest::Approx(rate).epsilon(0.01 / rate));
  const double mean = sum / double(total);
  CHECK(mean == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("rowwise_cosine examples") {
  Tape<double> tape;
  Matrix<double> x(4, 2, {1, 1, 1, 1, 1, 0, 0, 1});
  Var<double> s = rowwise_cosine(tape.leaf(x, false));
  CHECK(s.value()(0, 1) == doctest::Approx(1.0));       // identical rows
  CHECK(s.value()(2, 3) == doctest::Approx(0.0));       // orthogonal
  CHECK(s.value()(0, 2) == doctest::Approx(1.0 / std::sqrt(2.0)));

  // zero-norm row scores 0 against everything, including itself
  Matrix<double> z(2, 3, {0, 0, 0, 1, 2, 3});
  Var<double> sz = rowwise_cosine(tape.leaf(z, false));
  CHECK(sz.value()(0, 0) == 0.0);
  CHECK(sz.value()(0, 1) == 0.0);
  CHECK(sz.value()(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("rowwise_cosine symmetry and range are exact") {
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    Matrix<double> x = rnd(7, 3, rng, -2, 2);
    Tape<double> tape;
    Var<double> s = rowwise_cosine(tape.leaf(x, false));
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) {
        CHECK(s.value()(i, j) == s.value()(j, i));  // bitwise
        CHECK(s.value()(i, j) <= 1.0);
        CHECK(s.value()(i, j) >= -1.0);
      }
  }
}

TEST_CASE("concat, hadamard, layer_norm closed forms") {
  Tape<double> tape;
  Rng rng(23);
  Matrix<double> a = rnd(4, 2, rng), b = rnd(4, 3, rng);
  Var<double> cat = concat_cols<double>({tape.leaf(a, false), tape.leaf(b, false)});
  CHECK(cat.value().cols() == 5);
  CHECK(cat.value()(2, 1) == a(2, 1));
  CHECK(cat.value()(2, 4) == b(2, 2));

  Matrix<double> ones = Matrix<double>::ones(1, 2);
  Var<double> had = hadamard(tape.leaf(a, false), tape.leaf(ones, false));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) CHECK(had.value()(i, j) == a(i, j));

  Matrix<double> row(1, 3, {1, 2, 3});
  Matrix<double> gamma = Matrix<double>::ones(1, 3);
  Matrix<double> beta = Matrix<double>::zeros(1, 3);
  Var<double> ln =
      layer_norm(tape.leaf(row, false), tape.leaf(gamma, false), tape.leaf(beta, false));
  // population variance + the 1e-5 floor inside the square root
  CHECK(ln.value()(0, 0) == doctest::Approx(-std::sqrt(1.5)).epsilon(1e-4));
  CHECK(ln.value()(0, 1) == doctest::Approx(0.0).scale(1.0));
  CHECK(ln.value()(0, 2) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-4));
}

TEST_CASE("diamond reuse accumulates both contributions") {
  // f(x) = sum(relu(x) (.) x), df/dx = [x > 0] * 2x
  Rng rng(31);
  Matrix<double> x = rnd(4, 5, rng, -2, 2);
  Tape<double> tape;
  Var<double> xv = tape.leaf(x, true);
  tape.backward(sum_all(hadamard(relu(xv), xv)));
  const Matrix<double>& g = tape.grad(xv.id);
  for (size_t i = 0; i < x.size(); ++i) {
    const double expected = x.data()[i] > 0 ? 2.0 * x.data()[i] : 0.0;
    CHECK(g.data()[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("finite-difference property, 100 trials per differentiable op") {
  Rng rng(777);
  int trials_per_op = 100;
  for (int trial = 0; trial < trials_per_op; ++trial) {
    {  // matmul on 5x7 inputs
      std::vector<Matrix<double>> in{rnd(5, 7, rng), rnd(7, 3, rng)};
      Matrix<double> w = rnd(5, 3, rng);
      auto res = detail::check_op("matmul", in, [&](Tape<double>& t, auto& v) {
        return detail::weighted_sum(matmul(v[0], v[1]), w, t);
      });
      REQUIRE(res.pass);
    }
    {  // softmax
      std::vector<Matrix<double>> in{rnd(5, 7, rng, -3, 3)};
      Matrix<double> w = rnd(5, 7, rng);
      auto res = detail::check_op("rowwise_softmax", in, [&](Tape<double>& t, auto& v) {
        return detail::weighted_sum(rowwise_softmax(v[0]), w, t);
      });
      REQUIRE(res.pass);
    }
    {  // relu away from the kink
      Matrix<double> x = rnd(5, 7, rng);
      for (size_t i = 0; i < x.size(); ++i) x.data()[i] += x.data()[i] >= 0 ? 0.05 : -0.05;
      std::vector<Matrix<double>> in{x};
      Matrix<double> w = rnd(5, 7, rng);
      auto res = detail::check_op("relu", in, [&](Tape<double>& t, auto& v) {
        return detail::weighted_sum(relu(v[0]), w, t);
      });
      REQUIRE(res.pass);
    }
    {  // cosine
      std::vector<Matrix<double>> in{rnd(5, 7, rng)};
      Matrix<double> w = rnd(5, 5, rng);
      auto res = detail::check_op("rowwise_cosine", in, [&](Tape<double>& t, auto& v) {
        return detail::weighted_sum(rowwise_cosine(v[0]), w, t);
      });
      REQUIRE(res.pass);
    }
    {  // layer_norm
      std::vector<Matrix<double>> in{rnd(5, 7, rng), rnd(1, 7, rng, 0.5, 1.5), rnd(1, 7, rng)};
      Matrix<double> w = rnd(5, 7, rng);
      auto res = detail::check_op("layer_norm", in, [&](Tape<double>& t, auto& v) {
        return detail::weighted_sum(layer_norm(v[0], v[1], v[2]), w, t);
      });
      REQUIRE(res.pass);
    }
  }
}

TEST_CASE("full gradcheck suite passes") {
  auto results = run_gradcheck_suite();
  REQUIRE(!results.empty());
  for (const auto& r : results) {
    INFO(r.name, " max_rel_err=", r.max_rel_err);
    CHECK(r.pass);
  }
}

TEST_CASE("injected broken backward rule is caught") {
  auto results = run_gradcheck_suite("fault-injection", true);
  REQUIRE(results.size() == 1);
  CHECK(!results[0].pass);
}

TEST_CASE("rng determinism: identical seed, identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  // identical dropout masks and weight init across two generators
  Rng r1(7), r2(7);
  Matrix<double> m1(8, 8), m2(8, 8);
  fill_uniform(m1, r1, -1, 1);
  fill_uniform(m2, r2, -1, 1);
  for (size_t i = 0; i < m1.size(); ++i) CHECK(m1.data()[i] == m2.data()[i]);

  Matrix<double> x = Matrix<double>::ones(16, 16);
  Tape<double> t1, t2;
  Var<double> d1 = dropout(t1.leaf(x, false), 0.5, r1, true);
  Var<double> d2 = dropout(t2.leaf(x, false), 0.5, r2, true);
  for (size_t i = 0; i < d1.value().size(); ++i)
    CHECK(d1.value().data()[i] == d2.value().data()[i]);
}

TEST_CASE("non-finite results are an error state when checking is on") {
  Tape<double> tape;
  tape.check_finite = true;
  Matrix<double> x = Matrix<double>::full(2, 2, 1e308);
  Var<double> xv = tape.leaf(x, false);
  CHECK_THROWS_AS(add(xv, xv), numeric_error);
}
