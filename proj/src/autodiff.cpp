#include "cliquepart/autodiff.hpp"

#include <cmath>
#include <limits>

#include "cliquepart/errors.hpp"

namespace cliquepart::ad {

Var Tape::push(Mat value, std::function<void(Tape&, const Mat&)> backprop) {
  Node node;
  node.value = std::move(value);
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Mat& Tape::grad_ref(int i) {
  Node& node = nodes_[i];
  if (node.grad.size() == 0) {
    const Mat& v = node.external ? *node.external : node.value;
    node.grad = Mat::Zero(v.rows(), v.cols());
  }
  return node.grad;
}

Var Tape::constant(Mat value) { return push(std::move(value), nullptr); }

Var Tape::param(const Mat* value, Mat* grad_sink, std::string name) {
  Node node;
  node.external = value;
  node.sink = grad_sink;
  node.name = std::move(name);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::matmul(Var a, Var b) {
  Mat value = val(a) * val(b);
  return push(std::move(value), [a, b](Tape& t, const Mat& g) {
    t.grad_ref(a.i).noalias() += g * t.val(b).transpose();
    t.grad_ref(b.i).noalias() += t.val(a).transpose() * g;
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  Mat value = val(a) * val(b).transpose();
  return push(std::move(value), [a, b](Tape& t, const Mat& g) {
    t.grad_ref(a.i).noalias() += g * t.val(b);
    t.grad_ref(b.i).noalias() += g.transpose() * t.val(a);
  });
}

Var Tape::add(Var a, Var b) {
  return push(val(a) + val(b), [a, b](Tape& t, const Mat& g) {
    t.grad_ref(a.i) += g;
    t.grad_ref(b.i) += g;
  });
}

Var Tape::sub(Var a, Var b) {
  return push(val(a) - val(b), [a, b](Tape& t, const Mat& g) {
    t.grad_ref(a.i) += g;
    t.grad_ref(b.i) -= g;
  });
}

Var Tape::hadamard(Var a, Var b) {
  return push(val(a).cwiseProduct(val(b)), [a, b](Tape& t, const Mat& g) {
    t.grad_ref(a.i) += g.cwiseProduct(t.val(b));
    t.grad_ref(b.i) += g.cwiseProduct(t.val(a));
  });
}

Var Tape::add_row_broadcast(Var m, Var col) {
  Mat value = val(m);
  value.rowwise() += val(col).col(0).transpose();
  return push(std::move(value), [m, col](Tape& t, const Mat& g) {
    t.grad_ref(m.i) += g;
    t.grad_ref(col.i) += g.colwise().sum().transpose();
  });
}

Var Tape::scale(Var a, double c) {
  return push(val(a) * c, [a, c](Tape& t, const Mat& g) { t.grad_ref(a.i) += g * c; });
}

Var Tape::shift(Var a, double c) {
  Mat value = (val(a).array() + c).matrix();
  return push(std::move(value), [a](Tape& t, const Mat& g) { t.grad_ref(a.i) += g; });
}

Var Tape::gather_rows(Var m, const std::vector<int>* idx) {
  const Mat& src = val(m);
  Mat value(static_cast<Eigen::Index>(idx->size()), src.cols());
  for (std::size_t k = 0; k < idx->size(); ++k) value.row(k) = src.row((*idx)[k]);
  return push(std::move(value), [m, idx](Tape& t, const Mat& g) {
    Mat& gm = t.grad_ref(m.i);
    for (std::size_t k = 0; k < idx->size(); ++k) gm.row((*idx)[k]) += g.row(k);
  });
}

Var Tape::hcat3(Var a, Var b, Var c) {
  const Mat& A = val(a);
  const Mat& B = val(b);
  const Mat& C = val(c);
  Mat value(A.rows(), A.cols() + B.cols() + C.cols());
  value << A, B, C;
  const Eigen::Index ca = A.cols(), cb = B.cols(), cc = C.cols();
  return push(std::move(value), [a, b, c, ca, cb, cc](Tape& t, const Mat& g) {
    t.grad_ref(a.i) += g.leftCols(ca);
    t.grad_ref(b.i) += g.middleCols(ca, cb);
    t.grad_ref(c.i) += g.rightCols(cc);
  });
}

Var Tape::leaky_relu(Var a, double slope) {
  const Mat& x = val(a);
  Mat value = x.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
  return push(std::move(value), [a, slope](Tape& t, const Mat& g) {
    const Mat& x = t.val(a);
    t.grad_ref(a.i) +=
        g.cwiseProduct(x.unaryExpr([slope](double v) { return v >= 0.0 ? 1.0 : slope; }));
  });
}

Var Tape::relu(Var a) {
  const Mat& x = val(a);
  Mat value = x.cwiseMax(0.0);
  return push(std::move(value), [a](Tape& t, const Mat& g) {
    const Mat& x = t.val(a);
    t.grad_ref(a.i) +=
        g.cwiseProduct(x.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : 0.0; }));
  });
}

Var Tape::elu(Var a) {
  const Mat& x = val(a);
  Mat value = x.unaryExpr([](double v) { return v >= 0.0 ? v : std::expm1(v); });
  // For v < 0 the derivative is exp(v) = value + 1.
  Var out = push(std::move(value), [a](Tape& t, const Mat& g) {
    const Mat& x = t.val(a);
    t.grad_ref(a.i) += g.cwiseProduct(
        x.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : std::exp(v); }));
  });
  return out;
}

Var Tape::exp(Var a) {
  Mat value = val(a).array().exp().matrix();
  Var out = push(std::move(value), nullptr);
  nodes_[out.i].backprop = [a, out](Tape& t, const Mat& g) {
    t.grad_ref(a.i) += g.cwiseProduct(t.val(out));
  };
  return out;
}

Var Tape::segment_softmax(Var logits, const std::vector<int>* seg, int nseg) {
  const Mat& s = val(logits);
  std::vector<double> seg_max(nseg, -std::numeric_limits<double>::infinity());
  for (Eigen::Index k = 0; k < s.rows(); ++k)
    seg_max[(*seg)[k]] = std::max(seg_max[(*seg)[k]], s(k, 0));
  std::vector<double> seg_sum(nseg, 0.0);
  Mat value(s.rows(), 1);
  for (Eigen::Index k = 0; k < s.rows(); ++k) {
    value(k, 0) = std::exp(s(k, 0) - seg_max[(*seg)[k]]);
    seg_sum[(*seg)[k]] += value(k, 0);
  }
  for (Eigen::Index k = 0; k < s.rows(); ++k) value(k, 0) /= seg_sum[(*seg)[k]];

  Var out = push(std::move(value), nullptr);
  nodes_[out.i].backprop = [logits, seg, nseg, out](Tape& t, const Mat& g) {
    const Mat& p = t.val(out);
    std::vector<double> seg_dot(nseg, 0.0);
    for (Eigen::Index k = 0; k < p.rows(); ++k)
      seg_dot[(*seg)[k]] += g(k, 0) * p(k, 0);
    Mat& gl = t.grad_ref(logits.i);
    for (Eigen::Index k = 0; k < p.rows(); ++k)
      gl(k, 0) += p(k, 0) * (g(k, 0) - seg_dot[(*seg)[k]]);
  };
  return out;
}

Var Tape::scale_rows(Var m, Var col) {
  const Mat& M = val(m);
  const Mat& c = val(col);
  Mat value = (M.array().colwise() * c.col(0).array()).matrix();
  return push(std::move(value), [m, col](Tape& t, const Mat& g) {
    const Mat& M = t.val(m);
    const Mat& c = t.val(col);
    t.grad_ref(m.i) += (g.array().colwise() * c.col(0).array()).matrix();
    t.grad_ref(col.i) += (g.cwiseProduct(M)).rowwise().sum();
  });
}

Var Tape::segment_sum_rows(Var m, const std::vector<int>* seg, int nseg) {
  const Mat& M = val(m);
  Mat value = Mat::Zero(nseg, M.cols());
  for (Eigen::Index k = 0; k < M.rows(); ++k) value.row((*seg)[k]) += M.row(k);
  return push(std::move(value), [m, seg](Tape& t, const Mat& g) {
    Mat& gm = t.grad_ref(m.i);
    for (Eigen::Index k = 0; k < gm.rows(); ++k) gm.row(k) += g.row((*seg)[k]);
  });
}

Var Tape::mean_row_pairs(Var m, const std::vector<std::pair<int, int>>* pairs) {
  const Mat& M = val(m);
  Mat value(static_cast<Eigen::Index>(pairs->size()), M.cols());
  for (std::size_t k = 0; k < pairs->size(); ++k)
    value.row(k) = 0.5 * (M.row((*pairs)[k].first) + M.row((*pairs)[k].second));
  return push(std::move(value), [m, pairs](Tape& t, const Mat& g) {
    Mat& gm = t.grad_ref(m.i);
    for (std::size_t k = 0; k < pairs->size(); ++k) {
      gm.row((*pairs)[k].first) += 0.5 * g.row(k);
      gm.row((*pairs)[k].second) += 0.5 * g.row(k);
    }
  });
}

Var Tape::log_softmax(Var v) {
  const Mat& x = val(v);
  const double mx = x.maxCoeff();
  const double lse = mx + std::log((x.array() - mx).exp().sum());
  Mat value = (x.array() - lse).matrix();
  Var out = push(std::move(value), nullptr);
  nodes_[out.i].backprop = [v, out](Tape& t, const Mat& g) {
    const double gsum = g.sum();
    t.grad_ref(v.i) += g - (t.val(out).array().exp() * gsum).matrix();
  };
  return out;
}

Var Tape::pick(Var v, int row) {
  Mat value(1, 1);
  value(0, 0) = val(v)(row, 0);
  return push(std::move(value), [v, row](Tape& t, const Mat& g) {
    t.grad_ref(v.i)(row, 0) += g(0, 0);
  });
}

Var Tape::sum(Var a) {
  Mat value(1, 1);
  value(0, 0) = val(a).sum();
  return push(std::move(value), [a](Tape& t, const Mat& g) {
    t.grad_ref(a.i).array() += g(0, 0);
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  const Mat& x = val(a);
  Mat value = x.unaryExpr([lo, hi](double v) { return std::min(std::max(v, lo), hi); });
  return push(std::move(value), [a, lo, hi](Tape& t, const Mat& g) {
    const Mat& x = t.val(a);
    t.grad_ref(a.i) += g.cwiseProduct(x.unaryExpr(
        [lo, hi](double v) { return (v > lo && v < hi) ? 1.0 : 0.0; }));
  });
}

Var Tape::min2(Var a, Var b) {
  const bool take_a = scalar(a) <= scalar(b);
  Mat value(1, 1);
  value(0, 0) = take_a ? scalar(a) : scalar(b);
  return push(std::move(value), [a, b, take_a](Tape& t, const Mat& g) {
    t.grad_ref(take_a ? a.i : b.i)(0, 0) += g(0, 0);
  });
}

void Tape::backward(Var loss, double seed) {
  if (val(loss).rows() != 1 || val(loss).cols() != 1)
    throw NumericError("backward expects a scalar loss node");
  if (!std::isfinite(scalar(loss)))
    throw NumericError("non-finite loss value in backward");

  grad_ref(loss.i)(0, 0) += seed;
  for (int i = loss.i; i >= 0; --i) {
    Node& node = nodes_[i];
    if (node.grad.size() == 0) continue;  // never reached by the loss
    if (node.backprop) node.backprop(*this, node.grad);
    if (node.sink) {
      if (!node.grad.allFinite())
        throw NumericError("non-finite gradient for parameter " + node.name);
      *node.sink += node.grad;
    }
  }
}

void Tape::clear() { nodes_.clear(); }

}  // namespace cliquepart::ad
