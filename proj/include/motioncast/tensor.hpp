#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace motioncast {

class Graph;
class GradientMap;

/// Dense row-major tensor of doubles. Copies share storage; data is mutated
/// in place only by the optimizer and by explicit test setup.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);
  static Tensor randn(std::vector<int> shape, std::mt19937_64& rng,
                      double stddev = 1.0);

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int size() const;
  int rows() const;  // first dim of a 2-D tensor
  int cols() const;  // last dim

  bool defined() const { return static_cast<bool>(data_); }
  std::vector<double>& data() { return *data_; }
  const std::vector<double>& data() const { return *data_; }
  double& at(int i) { return (*data_)[i]; }
  double at(int i) const { return (*data_)[i]; }
  double& at(int r, int c) { return (*data_)[r * cols() + c]; }
  double at(int r, int c) const { return (*data_)[r * cols() + c]; }
  double item() const;  // value of a scalar tensor

  bool requires_grad() const { return meta_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    meta_->requires_grad = b;
    return *this;
  }

  /// Deep copy of values; detached from any graph.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return data_ == other.data_; }
  std::shared_ptr<const std::vector<double>> storage() const { return data_; }

 private:
  struct Meta {
    bool requires_grad = false;
    int node = -1;        // handle into the active graph
    std::uint64_t epoch = 0;  // which graph generation the handle refers to
  };

  std::vector<int> shape_;
  std::shared_ptr<std::vector<double>> data_;
  std::shared_ptr<Meta> meta_ = std::make_shared<Meta>();

  friend class Graph;
  friend class GradientMap;
};

/// Gradients keyed by graph node, produced by Graph::backward. Lookup by
/// tensor returns exact zeros for tensors the loss never touched.
class GradientMap {
 public:
  Tensor grad_of(const Tensor& t) const;
  bool touched(const Tensor& t) const;
  std::size_t entry_count() const { return grads_.size(); }

 private:
  std::uint64_t epoch_ = 0;
  std::unordered_map<int, Tensor> grads_;
  friend class Graph;
};

/// Define-by-run reverse-mode tape. Insertion order is the topological
/// order; backward walks it strictly in reverse. One graph per thread of
/// execution; activate with Graph::Scope.
class Graph {
 public:
  Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  class Scope {
   public:
    explicit Scope(Graph& g);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Graph* prev_;
  };

  static Graph* active();

  /// Runs reverse accumulation from a scalar loss, returns gradients of all
  /// requires_grad leaves, then clears the tape.
  GradientMap backward(const Tensor& loss);

  std::size_t node_count() const { return nodes_.size(); }
  std::uint64_t epoch() const { return epoch_; }

  // --- recording interface used by the op library ---
  bool should_record(const Tensor& t) const;
  int ensure_node(const Tensor& t);  // registers a leaf if needed
  int add_node(const Tensor& out, std::string op, std::vector<int> inputs,
               std::function<void(Graph&, const std::vector<double>&)> bwd);
  void accumulate(int node, const std::vector<double>& g);
  void accumulate(int node, const double* g, std::size_t n);

 private:
  struct NodeRec {
    std::string op;
    std::vector<int> inputs;
    int grad_size = 0;
    bool is_leaf = false;
    bool leaf_requires_grad = false;
    std::vector<int> leaf_shape;
    std::function<void(Graph&, const std::vector<double>&)> backward_fn;
    std::vector<double> grad;
  };

  std::uint64_t epoch_;
  std::vector<NodeRec> nodes_;
  void clear();
};

// --- op library ---------------------------------------------------------
// Every op computes values eagerly and records a backward rule when a graph
// is active and an input participates in differentiation.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
/// x [n×d] + v [1×d] broadcast over rows.
Tensor add_rowvec(const Tensor& x, const Tensor& v);
/// Row-wise softmax. additive_mask entries are 0 (keep) or -inf (drop);
/// dropped positions output exactly 0. A fully masked row is an error.
Tensor softmax_masked(const Tensor& x, const Tensor& additive_mask);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps);
Tensor gelu(const Tensor& x);
Tensor gather_rows(const Tensor& x, const std::vector<int>& idx);
Tensor repeat_row(const Tensor& v, int n);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, int start, int len);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Max relative error between the reverse-mode gradient of f at x and
/// central finite differences with step h. Denominator guard is 1e-8.
/// Returns NaN if either gradient contains a NaN.
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double h);

std::string shape_str(const std::vector<int>& shape);

}  // namespace motioncast
