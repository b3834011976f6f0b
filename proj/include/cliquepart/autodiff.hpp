#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cliquepart::ad {

using Mat = Eigen::MatrixXd;

// Handle into a Tape.
struct Var {
  int i = -1;
  bool valid() const { return i >= 0; }
};

// Reverse-mode tape over dense matrices. Values are computed eagerly as ops
// are recorded; backward() runs one reverse sweep. Parameter leaves reference
// external storage and accumulate their gradients into external sinks, so a
// tape can be rebuilt per sample while the optimizer owns the buffers.
class Tape {
 public:
  // Leaf without gradient (observations, constants).
  Var constant(Mat value);
  // Leaf referencing parameter storage; grad_sink receives += d(loss)/d(param)
  // after backward(). Both pointers must outlive the tape.
  Var param(const Mat* value, Mat* grad_sink, std::string name);

  const Mat& val(Var v) const { return nodes_[v.i].external ? *nodes_[v.i].external : nodes_[v.i].value; }
  double scalar(Var v) const { return val(v)(0, 0); }

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // A * B^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var add_row_broadcast(Var m, Var col);  // col: c x 1, transposed and added to every row of m (k x c)
  Var scale(Var a, double c);
  Var shift(Var a, double c);
  Var gather_rows(Var m, const std::vector<int>* idx);
  Var hcat3(Var a, Var b, Var c);
  Var leaky_relu(Var a, double slope);
  Var relu(Var a);
  Var elu(Var a);
  Var exp(Var a);
  // Softmax over groups of rows of a column vector; seg[k] in [0, nseg).
  Var segment_softmax(Var logits, const std::vector<int>* seg, int nseg);
  Var scale_rows(Var m, Var col);  // row k of m times col(k)
  Var segment_sum_rows(Var m, const std::vector<int>* seg, int nseg);
  // Output row k = (m[pairs[k].first] + m[pairs[k].second]) / 2.
  Var mean_row_pairs(Var m, const std::vector<std::pair<int, int>>* pairs);
  Var log_softmax(Var v);  // v: k x 1
  Var pick(Var v, int row);
  Var sum(Var a);
  Var clamp(Var a, double lo, double hi);
  Var min2(Var a, Var b);  // scalar min; gradient follows the smaller input

  // Reverse sweep from a 1x1 loss node, seeding d(loss)/d(loss) = seed.
  // Accumulates into every param leaf's grad sink. Throws NumericError naming
  // the parameter if a non-finite gradient shows up.
  void backward(Var loss, double seed = 1.0);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* external = nullptr;  // set on param leaves
    Mat* sink = nullptr;
    Mat grad;
    std::string name;
    std::function<void(Tape&, const Mat&)> backprop;  // grad of this node -> inputs
  };

  Var push(Mat value, std::function<void(Tape&, const Mat&)> backprop);
  Mat& grad_ref(int i);

  std::vector<Node> nodes_;
};

}  // namespace cliquepart::ad
