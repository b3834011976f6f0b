#include <cmath>

#include <doctest.h>

#include "cliquepart/autodiff.hpp"
#include "cliquepart/errors.hpp"
#include "cliquepart/rng.hpp"

using namespace cliquepart;
using ad::Mat;
using ad::Tape;
using ad::Var;

namespace {

Mat random_mat(Rng& rng, int rows, int cols) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

// Central finite differences of a scalar-valued rebuildable graph.
template <typename BuildFn>
void check_gradients(Mat& param, BuildFn&& build, double h = 1e-5, double tol = 1e-6) {
  Mat grad = Mat::Zero(param.rows(), param.cols());
  {
    Tape tape;
    Var loss = build(tape, tape.param(&param, &grad, "p"));
    tape.backward(loss);
  }
  for (Eigen::Index r = 0; r < param.rows(); ++r) {
    for (Eigen::Index c = 0; c < param.cols(); ++c) {
      const double saved = param(r, c);
      param(r, c) = saved + h;
      Tape tp;
      Mat dummy;
      const double up = tp.scalar(build(tp, tp.param(&param, nullptr, "p")));
      param(r, c) = saved - h;
      Tape tm;
      const double down = tm.scalar(build(tm, tm.param(&param, nullptr, "p")));
      param(r, c) = saved;
      const double fd = (up - down) / (2.0 * h);
      const double a = grad(r, c);
      CHECK(std::abs(a - fd) <= tol * std::max({std::abs(a), std::abs(fd), 1.0}));
    }
  }
}

}  // namespace

TEST_CASE("matmul chain gradients match finite differences") {
  Rng rng(1);
  Mat p = random_mat(rng, 3, 4);
  const Mat other = random_mat(rng, 4, 2);
  check_gradients(p, [&](Tape& t, Var v) {
    return t.sum(t.matmul(v, t.constant(other)));
  });
  check_gradients(p, [&](Tape& t, Var v) {
    return t.sum(t.matmul_nt(t.constant(other.transpose()), v));
  });
}

TEST_CASE("activation gradients match finite differences") {
  Rng rng(2);
  Mat p = random_mat(rng, 5, 3);
  check_gradients(p, [&](Tape& t, Var v) { return t.sum(t.leaky_relu(v, 0.2)); });
  check_gradients(p, [&](Tape& t, Var v) { return t.sum(t.elu(v)); });
  check_gradients(p, [&](Tape& t, Var v) { return t.sum(t.relu(v)); });
  check_gradients(p, [&](Tape& t, Var v) { return t.sum(t.exp(v)); });
}

TEST_CASE("structural op gradients match finite differences") {
  Rng rng(3);
  const std::vector<int> idx = {2, 0, 1, 0};
  const std::vector<int> seg = {0, 1, 0, 1};
  const std::vector<std::pair<int, int>> pairs = {{0, 3}, {1, 2}};

  Mat p = random_mat(rng, 3, 4);
  check_gradients(p, [&](Tape& t, Var v) {
    return t.sum(t.gather_rows(v, &idx));
  });

  Mat q = random_mat(rng, 4, 3);
  const Mat weights = random_mat(rng, 2, 3);
  check_gradients(q, [&](Tape& t, Var v) {
    return t.sum(t.hadamard(t.segment_sum_rows(v, &seg, 2), t.constant(weights)));
  });
  check_gradients(q, [&](Tape& t, Var v) {
    return t.sum(t.mean_row_pairs(v, &pairs));
  });
  const Mat fixed_col = random_mat(rng, 4, 1);
  check_gradients(q, [&](Tape& t, Var v) {
    return t.sum(t.scale_rows(v, t.constant(fixed_col)));
  });

  Mat col = random_mat(rng, 4, 1);
  check_gradients(col, [&](Tape& t, Var v) {
    return t.sum(t.scale_rows(t.constant(Mat::Ones(4, 3)), v));
  });

  Mat wide = random_mat(rng, 2, 3);
  const Mat a2 = random_mat(rng, 2, 2);
  check_gradients(wide, [&](Tape& t, Var v) {
    return t.sum(t.hcat3(t.constant(a2), v, t.constant(a2)));
  });

  Mat bias = random_mat(rng, 3, 1);
  const Mat base = random_mat(rng, 4, 3);
  check_gradients(bias, [&](Tape& t, Var v) {
    return t.sum(t.add_row_broadcast(t.constant(base), v));
  });
}

TEST_CASE("softmax-family gradients match finite differences") {
  Rng rng(4);
  const std::vector<int> seg = {0, 0, 1, 1, 1, 2};

  Mat logits = random_mat(rng, 6, 1);
  const Mat downstream = random_mat(rng, 6, 1);
  check_gradients(logits, [&](Tape& t, Var v) {
    const Var alpha = t.segment_softmax(v, &seg, 3);
    return t.sum(t.hadamard(alpha, t.constant(downstream)));
  });

  Mat scores = random_mat(rng, 5, 1);
  check_gradients(scores, [&](Tape& t, Var v) {
    const Var lp = t.log_softmax(v);
    const Var p = t.exp(lp);
    // Negative entropy: a softmax consumer with nontrivial curvature.
    return t.sum(t.hadamard(p, lp));
  });
  check_gradients(scores, [&](Tape& t, Var v) {
    return t.pick(t.log_softmax(v), 2);
  });
}

TEST_CASE("segment softmax normalizes within each segment") {
  Tape tape;
  Mat logits(5, 1);
  logits << 0.3, -1.0, 2.0, 0.0, 0.5;
  const std::vector<int> seg = {0, 0, 1, 1, 1};
  const Var alpha = tape.segment_softmax(tape.constant(logits), &seg, 2);
  const Mat& a = tape.val(alpha);
  CHECK(a(0, 0) + a(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a(2, 0) + a(3, 0) + a(4, 0) == doctest::Approx(1.0).epsilon(1e-12));

  // A segment with a single member gets weight exactly 1 (self-loop case).
  Mat one(1, 1);
  one << 3.7;
  const std::vector<int> lone = {0};
  Tape t2;
  CHECK(t2.val(t2.segment_softmax(t2.constant(one), &lone, 1))(0, 0) == 1.0);
}

TEST_CASE("clamp and min2 implement the PPO clip rule") {
  // rho = 2, eps = 0.2, A > 0: the surrogate must use the clipped 1.2 * A.
  Tape tape;
  Mat rho_val(1, 1);
  rho_val << 2.0;
  const double A = 1.5;
  const Var rho = tape.constant(rho_val);
  const Var surr1 = tape.scale(rho, A);
  const Var surr2 = tape.scale(tape.clamp(rho, 0.8, 1.2), A);
  const Var surr = tape.min2(surr1, surr2);
  CHECK(tape.scalar(surr) == doctest::Approx(1.2 * A).epsilon(1e-12));

  // Gradient flows only through the chosen, clipped branch; the clamp is
  // saturated, so the upstream gradient dies.
  Mat p(1, 1);
  p << 2.0;
  Mat grad = Mat::Zero(1, 1);
  Tape t2;
  const Var v = t2.param(&p, &grad, "rho");
  const Var s = t2.min2(t2.scale(v, A), t2.scale(t2.clamp(v, 0.8, 1.2), A));
  t2.backward(s);
  CHECK(grad(0, 0) == 0.0);
}

TEST_CASE("zero upstream seed gives zero gradients") {
  Rng rng(5);
  Mat p = random_mat(rng, 3, 3);
  Mat grad = Mat::Zero(3, 3);
  Tape tape;
  const Var v = tape.param(&p, &grad, "p");
  const Var loss = tape.sum(tape.elu(tape.matmul(v, v)));
  tape.backward(loss, 0.0);
  CHECK(grad.isZero(0.0));
}

TEST_CASE("backward rejects non-scalar and non-finite losses") {
  Tape tape;
  const Var m = tape.constant(Mat::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(m), NumericError);

  Tape t2;
  Mat inf_val(1, 1);
  inf_val << std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(t2.backward(t2.constant(inf_val)), NumericError);
}

TEST_CASE("non-finite parameter gradients are reported by name") {
  Mat p(1, 1);
  p << 2.0;
  Mat grad = Mat::Zero(1, 1);
  Tape tape;
  const Var v = tape.param(&p, &grad, "exploding.weight");
  const Var loss = tape.hadamard(v, v);  // finite loss; the huge seed overflows d/dp
  CHECK_THROWS_WITH_AS(tape.backward(loss, 1e308), doctest::Contains("exploding.weight"),
                       NumericError);
}
