#include "motioncast/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace motioncast {

namespace {

thread_local Graph* g_active_graph = nullptr;
std::atomic<std::uint64_t> g_graph_epoch{0};

int shape_product(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

// --- Tensor --------------------------------------------------------------

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(shape_product(shape_), 0.0)) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(std::move(values))) {
  if (shape_product(shape_) != static_cast<int>(data_->size())) {
    throw std::invalid_argument("tensor shape " + shape_str(shape_) +
                                " does not match data length " +
                                std::to_string(data_->size()));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  for (auto& x : t.data()) x = v;
  return t;
}

Tensor Tensor::randn(std::vector<int> shape, std::mt19937_64& rng,
                     double stddev) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& x : t.data()) x = dist(rng);
  return t;
}

int Tensor::size() const { return shape_product(shape_); }

int Tensor::rows() const {
  if (shape_.empty()) throw std::invalid_argument("rows() on empty tensor");
  return shape_.size() == 1 ? 1 : shape_[0];
}

int Tensor::cols() const {
  if (shape_.empty()) throw std::invalid_argument("cols() on empty tensor");
  return shape_.back();
}

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item() requires a scalar tensor, got " +
                                shape_str(shape_));
  }
  return (*data_)[0];
}

Tensor Tensor::clone() const {
  Tensor t(shape_, *data_);
  return t;
}

// --- GradientMap ----------------------------------------------------------

Tensor GradientMap::grad_of(const Tensor& t) const {
  if (touched(t)) return grads_.at(t.meta_->node);
  return Tensor::zeros(t.shape());
}

bool GradientMap::touched(const Tensor& t) const {
  return t.meta_->epoch == epoch_ && grads_.count(t.meta_->node) > 0;
}

// --- Graph -----------------------------------------------------------------

Graph::Graph() : epoch_(++g_graph_epoch) {}

Graph::Scope::Scope(Graph& g) : prev_(g_active_graph) { g_active_graph = &g; }
Graph::Scope::~Scope() { g_active_graph = prev_; }

Graph* Graph::active() { return g_active_graph; }

bool Graph::should_record(const Tensor& t) const {
  return t.requires_grad() ||
         (t.meta_->epoch == epoch_ && t.meta_->node >= 0);
}

int Graph::ensure_node(const Tensor& t) {
  if (t.meta_->epoch == epoch_ && t.meta_->node >= 0) return t.meta_->node;
  NodeRec rec;
  rec.op = "leaf";
  rec.grad_size = t.size();
  rec.is_leaf = true;
  rec.leaf_requires_grad = t.requires_grad();
  rec.leaf_shape = t.shape();
  nodes_.push_back(std::move(rec));
  t.meta_->node = static_cast<int>(nodes_.size()) - 1;
  t.meta_->epoch = epoch_;
  return t.meta_->node;
}

int Graph::add_node(const Tensor& out, std::string op, std::vector<int> inputs,
                    std::function<void(Graph&, const std::vector<double>&)> bwd) {
  NodeRec rec;
  rec.op = std::move(op);
  rec.inputs = std::move(inputs);
  rec.grad_size = out.size();
  rec.backward_fn = std::move(bwd);
  nodes_.push_back(std::move(rec));
  out.meta_->node = static_cast<int>(nodes_.size()) - 1;
  out.meta_->epoch = epoch_;
  return out.meta_->node;
}

void Graph::accumulate(int node, const std::vector<double>& g) {
  accumulate(node, g.data(), g.size());
}

void Graph::accumulate(int node, const double* g, std::size_t n) {
  NodeRec& rec = nodes_[node];
  if (rec.grad.empty()) rec.grad.assign(rec.grad_size, 0.0);
  for (std::size_t i = 0; i < n; ++i) rec.grad[i] += g[i];
}

GradientMap Graph::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got " +
                                shape_str(loss.shape()));
  }
  if (loss.meta_->epoch != epoch_ || loss.meta_->node < 0) {
    throw std::invalid_argument("backward: loss is not on the active graph");
  }

  nodes_[loss.meta_->node].grad.assign(1, 1.0);
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    NodeRec& rec = nodes_[i];
    if (rec.grad.empty() || !rec.backward_fn) continue;
    rec.backward_fn(*this, rec.grad);
  }

  GradientMap out;
  out.epoch_ = epoch_;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    NodeRec& rec = nodes_[i];
    if (rec.is_leaf && rec.leaf_requires_grad && !rec.grad.empty()) {
      out.grads_.emplace(static_cast<int>(i),
                         Tensor(rec.leaf_shape, std::move(rec.grad)));
    }
  }
  clear();
  return out;
}

void Graph::clear() {
  nodes_.clear();
  epoch_ = ++g_graph_epoch;
}

// --- op helpers ------------------------------------------------------------

namespace {

struct Recorder {
  Graph* g = nullptr;
  bool recording = false;
  std::vector<int> inputs;

  explicit Recorder(std::initializer_list<const Tensor*> ins) {
    g = Graph::active();
    if (!g) return;
    for (const Tensor* t : ins) {
      if (g->should_record(*t)) {
        recording = true;
        break;
      }
    }
    if (!recording) return;
    for (const Tensor* t : ins) inputs.push_back(g->ensure_node(*t));
  }
};

void check_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    throw std::invalid_argument(std::string(op) + " requires a 2-D tensor, got " +
                                shape_str(t.shape()));
  }
}

}  // namespace

// --- ops ---------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  const int m = a.shape()[0], k = a.shape()[1];
  const int k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) {
    throw std::invalid_argument("matmul dimension mismatch: " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }

  Tensor out({m, n});
  {
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (int i = 0; i < m; ++i) {
      double* orow = po + static_cast<std::size_t>(i) * n;
      const double* arow = pa + static_cast<std::size_t>(i) * k;
      for (int p = 0; p < k; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        const double* brow = pb + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  }

  Recorder rec({&a, &b});
  if (rec.recording) {
    auto pa = a.storage();
    auto pb = b.storage();
    auto ins = rec.inputs;
    rec.g->add_node(out, "matmul", ins,
                    [ins, pa = std::move(pa), pb = std::move(pb), m, k, n](
                        Graph& g, const std::vector<double>& up) {
                      // dA[i,p] = dot(G row i, B row p)
                      std::vector<double> da(static_cast<std::size_t>(m) * k, 0.0);
                      for (int i = 0; i < m; ++i) {
                        const double* grow = up.data() + static_cast<std::size_t>(i) * n;
                        for (int p = 0; p < k; ++p) {
                          const double* brow = pb->data() + static_cast<std::size_t>(p) * n;
                          double acc = 0.0;
                          for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                          da[static_cast<std::size_t>(i) * k + p] = acc;
                        }
                      }
                      // dB = A^T * G
                      std::vector<double> db(static_cast<std::size_t>(k) * n, 0.0);
                      for (int i = 0; i < m; ++i) {
                        const double* arow = pa->data() + static_cast<std::size_t>(i) * k;
                        const double* grow = up.data() + static_cast<std::size_t>(i) * n;
                        for (int p = 0; p < k; ++p) {
                          const double av = arow[p];
                          if (av == 0.0) continue;
                          double* drow = db.data() + static_cast<std::size_t>(p) * n;
                          for (int j = 0; j < n; ++j) drow[j] += av * grow[j];
                        }
                      }
                      g.accumulate(ins[0], da);
                      g.accumulate(ins[1], db);
                    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  check_2d(a, "transpose");
  const int m = a.shape()[0], n = a.shape()[1];
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);

  Recorder rec({&a});
  if (rec.recording) {
    auto ins = rec.inputs;
    rec.g->add_node(out, "transpose", ins,
                    [ins, m, n](Graph& g, const std::vector<double>& up) {
                      std::vector<double> da(static_cast<std::size_t>(m) * n);
                      for (int i = 0; i < m; ++i)
                        for (int j = 0; j < n; ++j)
                          da[static_cast<std::size_t>(i) * n + j] =
                              up[static_cast<std::size_t>(j) * m + i];
                      g.accumulate(ins[0], da);
                    });
  }
  return out;
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + " shape mismatch: " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape());
  const int n = a.size();
  for (int i = 0; i < n; ++i) out.at(i) = a.at(i) + b.at(i);

  Recorder rec({&a, &b});
  if (rec.recording) {
    auto ins = rec.inputs;
    rec.g->add_node(out, "add", ins,
                    [ins](Graph& g, const std::vector<double>& up) {
                      g.accumulate(ins[0], up);
                      g.accumulate(ins[1], up);
                    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a.shape());
  const int n = a.size();
  for (int i = 0; i < n; ++i) out.at(i) = a.at(i) - b.at(i);

  Recorder rec({&a, &b});
  if (rec.recording) {
    auto ins = rec.inputs;
    rec.g->add_node(out, "sub", ins,
                    [ins](Graph& g, const std::vector<double>& up) {
                      g.accumulate(ins[0], up);
                      std::vector<double> neg(up.size());
                      for (std::size_t i = 0; i < up.size(); ++i) neg[i] = -up[i];
                      g.accumulate(ins[1], neg);
                    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a.shape());
  const int n = a.size();
  for (int i = 0; i < n; ++i) out.at(i) = a.at(i) * b.at(i);

  Recorder rec({&a, &b});
  if (rec.recording) {
    auto pa = a.storage();
    auto pb = b.storage();
    auto ins = rec.inputs;
    rec.g->add_node(out, "mul", ins,
                    [ins, pa = std::move(pa), pb = std::move(pb)](
                        Graph& g, const std::vector<double>& up) {
                      std::vector<double> da(up.size()), db(up.size());
                      for (std::size_t i = 0; i < up.size(); ++i) {
                        da[i] = up[i] * (*pb)[i];
                        db[i] = up[i] * (*pa)[i];
                      }
                      g.accumulate(ins[0], da);
                      g.accumulate(ins[1], db);
                    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out(a.shape());
  const int n = a.size();
  for (int i = 0; i < n; ++i) out.at(i) = a.at(i) * c;

  Recorder rec({&a});
  if (rec.recording) {
    auto ins = rec.inputs;
    rec.g->add_node(out, "scale", ins,
                    [ins, c](Graph& g, const std::vector<double>& up) {
                      std::vector<double> da(up.size());
                      for (std::size_t i = 0; i < up.size(); ++i) da[i] = up[i] * c;
                      g.accumulate(ins[0], da);
                    });
  }
  return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  check_2d(x, "add_rowvec");
  if (v.size() != x.cols()) {
    throw std::invalid_argument("add_rowvec width mismatch: " +
                                shape_str(x.shape()) + " vs " +
                                shape_str(v.shape()));
  }
  const int m = x.rows(), d = x.cols();
  Tensor out({m, d});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) out.at(i, j) = x.at(i, j) + v.at(j);

  Recorder rec({&x, &v});
  if (rec.recording) {
    auto ins = rec.inputs;
    rec.g->add_node(out, "add_rowvec", ins,
                    [ins, m, d](Graph& g, const std::vector<double>& up) {
                      g.accumulate(ins[0], up);
                      std::vector<double> dv(d, 0.0);
                      for (int i = 0; i < m; ++i)
                        for (int j = 0; j < d; ++j)
                          dv[j] += up[static_cast<std::size_t>(i) * d + j];
                      g.accumulate(ins[1], dv);
                    });
  }
  return out;
}

Tensor softmax_masked(const Tensor& x, const Tensor& additive_mask) {
  check_same_shape(x, additive_mask, "softmax_masked");
  if (x.ndim() < 1) throw std::invalid_argument("softmax_masked on empty tensor");
  const int d = x.cols();
  const int rows = x.size() / d;

  Tensor out(x.shape());
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + static_cast<std::size_t>(r) * d;
    const double* mr = additive_mask.data().data() + static_cast<std::size_t>(r) * d;
    double* orow = out.data().data() + static_cast<std::size_t>(r) * d;

    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) {
      if (mr[j] == 0.0 && xr[j] > mx) mx = xr[j];
    }
    if (!std::isfinite(mx)) {
      throw std::invalid_argument("softmax_masked: fully masked row " +
                                  std::to_string(r));
    }
    double denom = 0.0;
    for (int j = 0; j < d; ++j) {
      if (mr[j] == 0.0) {
        orow[j] = std::exp(xr[j] - mx);
        denom += orow[j];
      } else {
        orow[j] = 0.0;
      }
    }
    for (int j = 0; j < d; ++j) {
      if (mr[j] == 0.0) orow[j] /= denom;
    }
  }

  Recorder rec({&x});
  if (rec.recording) {
    auto po = out.storage();
    auto ins = rec.inputs;
    rec.g->add_node(out, "softmax_masked", ins,
                    [ins, po = std::move(po), rows, d](
                        Graph& g, const std::vector<double>& up) {
                      std::vector<double> dx(po->size(), 0.0);
                      for (int r = 0; r < rows; ++r) {
                        const double* s = po->data() + static_cast<std::size_t>(r) * d;
                        const double* gr = up.data() + static_cast<std::size_t>(r) * d;
                        double dot = 0.0;
                        for (int j = 0; j < d; ++j) dot += gr[j] * s[j];
                        double* dr = dx.data() + static_cast<std::size_t>(r) * d;
                        for (int j = 0; j < d; ++j) dr[j] = s[j] * (gr[j] - dot);
                      }
                      g.accumulate(ins[0], dx);
                    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  const int d = x.cols();
  if (d < 2) {
    throw std::invalid_argument("layer_norm needs feature width >= 2, got " +
                                shape_str(x.shape()));
  }
  if (gamma.size() != d || beta.size() != d) {
    throw std::invalid_argument("layer_norm affine width mismatch: " +
                                shape_str(x.shape()) + " vs gamma " +
                                shape_str(gamma.shape()) + ", beta " +
                                shape_str(beta.shape()));
  }
  const int rows = x.size() / d;

  Tensor out(x.shape());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(rows);
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + static_cast<std::size_t>(r) * d;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += xr[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      var += c * c;
    }
    var /= d;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    double* hr = xhat.data() + static_cast<std::size_t>(r) * d;
    double* orow = out.data().data() + static_cast<std::size_t>(r) * d;
    for (int j = 0; j < d; ++j) {
      hr[j] = (xr[j] - mean) * is;
      orow[j] = gamma.at(j) * hr[j] + beta.at(j);
    }
  }

  Recorder rec({&x, &gamma, &beta});
  if (rec.recording) {
    auto pg = gamma.storage();
    auto ins = rec.inputs;
    rec.g->add_node(
        out, "layer_norm", ins,
        [ins, xhat = std::move(xhat), inv_std = std::move(inv_std),
         pg = std::move(pg), rows, d](Graph& g, const std::vector<double>& up) {
          std::vector<double> dx(static_cast<std::size_t>(rows) * d);
          std::vector<double> dgamma(d, 0.0), dbeta(d, 0.0);
          for (int r = 0; r < rows; ++r) {
            const double* hr = xhat.data() + static_cast<std::size_t>(r) * d;
            const double* gr = up.data() + static_cast<std::size_t>(r) * d;
            double m1 = 0.0, m2 = 0.0;
            for (int j = 0; j < d; ++j) {
              const double gg = gr[j] * (*pg)[j];
              m1 += gg;
              m2 += gg * hr[j];
              dgamma[j] += gr[j] * hr[j];
              dbeta[j] += gr[j];
            }
            m1 /= d;
            m2 /= d;
            double* dr = dx.data() + static_cast<std::size_t>(r) * d;
            for (int j = 0; j < d; ++j) {
              dr[j] = (gr[j] * (*pg)[j] - m1 - hr[j] * m2) * inv_std[r];
            }
          }
          g.accumulate(ins[0], dx);
          g.accumulate(ins[1], dgamma);
          g.accumulate(ins[2], dbeta);
        });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  Tensor out(x.shape());
  const int n = x.size();
  for (int i = 0; i < n; ++i) {
    const double v = x.at(i);
    out.at(i) = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }

  Recorder rec({&x});
  if (rec.recording) {
    auto px = x.storage();
    auto ins = rec.inputs;
    rec.g->add_node(out, "gelu", ins,
                    [ins, px = std::move(px)](Graph& g,
                                              const std::vector<double>& up) {
                      std::vector<double> dx(up.size());
                      for (std::size_t i = 0; i < up.size(); ++i) {
                        const double v = (*px)[i];
                        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
                        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
                        dx[i] = up[i] * (cdf + v * pdf);
                      }
                      g.accumulate(ins[0], dx);
                    });
  }
  return out;
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& idx) {
  check_2d(x, "gather_rows");
  const int d = x.cols();
  const int m = static_cast<int>(idx.size());
  Tensor out({m, d});
  for (int i = 0; i < m; ++i) {
    const int r = idx[i];
    if (r < 0 || r >= x.rows()) {
      throw std::invalid_argument("gather_rows index " + std::to_string(r) +
                                  " out of range for " + shape_str(x.shape()));
    }
    std::memcpy(out.data().data() + static_cast<std::size_t>(i) * d,
                x.data().data() + static_cast<std::size_t>(r) * d,
                sizeof(double) * d);
  }

  Recorder rec({&x});
  if (rec.recording) {
    auto ins = rec.inputs;
    const int src_rows = x.rows();
    rec.g->add_node(out, "gather_rows", ins,
                    [ins, idx, d, src_rows](Graph& g,
                                            const std::vector<double>& up) {
                      std::vector<double> dx(
                          static_cast<std::size_t>(src_rows) * d, 0.0);
                      for (std::size_t i = 0; i < idx.size(); ++i) {
                        double* dst = dx.data() +
                                      static_cast<std::size_t>(idx[i]) * d;
                        const double* src =
                            up.data() + static_cast<std::size_t>(i) * d;
                        for (int j = 0; j < d; ++j) dst[j] += src[j];
                      }
                      g.accumulate(ins[0], dx);
                    });
  }
  return out;
}

Tensor repeat_row(const Tensor& v, int n) {
  if (n < 0) throw std::invalid_argument("repeat_row: negative count");
  const int d = v.size();
  Tensor out({n, d});
  for (int i = 0; i < n; ++i)
    std::memcpy(out.data().data() + static_cast<std::size_t>(i) * d,
                v.data().data(), sizeof(double) * d);

  Recorder rec({&v});
  if (rec.recording) {
    auto ins = rec.inputs;
    rec.g->add_node(out, "repeat_row", ins,
                    [ins, n, d](Graph& g, const std::vector<double>& up) {
                      std::vector<double> dv(d, 0.0);
                      for (int i = 0; i < n; ++i)
                        for (int j = 0; j < d; ++j)
                          dv[j] += up[static_cast<std::size_t>(i) * d + j];
                      g.accumulate(ins[0], dv);
                    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  const int d = parts[0].cols();
  int total = 0;
  for (const Tensor& p : parts) {
    check_2d(p, "concat_rows");
    if (p.cols() != d) {
      throw std::invalid_argument("concat_rows width mismatch: " +
                                  shape_str(parts[0].shape()) + " vs " +
                                  shape_str(p.shape()));
    }
    total += p.rows();
  }
  Tensor out({total, d});
  int row = 0;
  for (const Tensor& p : parts) {
    std::memcpy(out.data().data() + static_cast<std::size_t>(row) * d,
                p.data().data(), sizeof(double) * p.size());
    row += p.rows();
  }

  Graph* g = Graph::active();
  bool recording = false;
  if (g) {
    for (const Tensor& p : parts) {
      if (g->should_record(p)) {
        recording = true;
        break;
      }
    }
  }
  if (recording) {
    std::vector<int> ins;
    std::vector<int> part_rows;
    ins.reserve(parts.size());
    for (const Tensor& p : parts) {
      ins.push_back(g->ensure_node(p));
      part_rows.push_back(p.rows());
    }
    g->add_node(out, "concat_rows", ins,
                [ins, part_rows, d](Graph& gg, const std::vector<double>& up) {
                  std::size_t off = 0;
                  for (std::size_t i = 0; i < ins.size(); ++i) {
                    const std::size_t len =
                        static_cast<std::size_t>(part_rows[i]) * d;
                    gg.accumulate(ins[i], up.data() + off, len);
                    off += len;
                  }
                });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const int m = parts[0].rows();
  int total = 0;
  for (const Tensor& p : parts) {
    check_2d(p, "concat_cols");
    if (p.rows() != m) {
      throw std::invalid_argument("concat_cols height mismatch: " +
                                  shape_str(parts[0].shape()) + " vs " +
                                  shape_str(p.shape()));
    }
    total += p.cols();
  }
  Tensor out({m, total});
  int col = 0;
  for (const Tensor& p : parts) {
    const int d = p.cols();
    for (int i = 0; i < m; ++i)
      std::memcpy(out.data().data() + static_cast<std::size_t>(i) * total + col,
                  p.data().data() + static_cast<std::size_t>(i) * d,
                  sizeof(double) * d);
    col += d;
  }

  Graph* g = Graph::active();
  bool recording = false;
  if (g) {
    for (const Tensor& p : parts) {
      if (g->should_record(p)) {
        recording = true;
        break;
      }
    }
  }
  if (recording) {
    std::vector<int> ins;
    std::vector<int> widths;
    for (const Tensor& p : parts) {
      ins.push_back(g->ensure_node(p));
      widths.push_back(p.cols());
    }
    g->add_node(out, "concat_cols", ins,
                [ins, widths, m, total](Graph& gg,
                                        const std::vector<double>& up) {
                  int col = 0;
                  for (std::size_t i = 0; i < ins.size(); ++i) {
                    const int d = widths[i];
                    std::vector<double> dp(static_cast<std::size_t>(m) * d);
                    for (int r = 0; r < m; ++r)
                      std::memcpy(
                          dp.data() + static_cast<std::size_t>(r) * d,
                          up.data() + static_cast<std::size_t>(r) * total + col,
                          sizeof(double) * d);
                    gg.accumulate(ins[i], dp);
                    col += d;
                  }
                });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, int start, int len) {
  check_2d(x, "slice_cols");
  const int m = x.rows(), d = x.cols();
  if (start < 0 || len < 0 || start + len > d) {
    throw std::invalid_argument("slice_cols [" + std::to_string(start) + "," +
                                std::to_string(start + len) +
                                ") out of range for " + shape_str(x.shape()));
  }
  Tensor out({m, len});
  for (int i = 0; i < m; ++i)
    std::memcpy(out.data().data() + static_cast<std::size_t>(i) * len,
                x.data().data() + static_cast<std::size_t>(i) * d + start,
                sizeof(double) * len);

  Recorder rec({&x});
  if (rec.recording) {
    auto ins = rec.inputs;
    rec.g->add_node(out, "slice_cols", ins,
                    [ins, m, d, start, len](Graph& g,
                                            const std::vector<double>& up) {
                      std::vector<double> dx(static_cast<std::size_t>(m) * d,
                                             0.0);
                      for (int i = 0; i < m; ++i)
                        std::memcpy(
                            dx.data() + static_cast<std::size_t>(i) * d + start,
                            up.data() + static_cast<std::size_t>(i) * len,
                            sizeof(double) * len);
                      g.accumulate(ins[0], dx);
                    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += x.at(i);
  Tensor out = Tensor::scalar(s);

  Recorder rec({&x});
  if (rec.recording) {
    auto ins = rec.inputs;
    const int n = x.size();
    rec.g->add_node(out, "sum", ins,
                    [ins, n](Graph& g, const std::vector<double>& up) {
                      std::vector<double> dx(n, up[0]);
                      g.accumulate(ins[0], dx);
                    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw std::invalid_argument("mean of empty tensor");
  return scale(sum(x), 1.0 / x.size());
}

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) {
    throw std::invalid_argument("grad_check: h outside [1e-7, 1e-3]");
  }

  Tensor probe = x.clone();
  probe.set_requires_grad(true);
  Graph g;
  Tensor analytic;
  {
    Graph::Scope scope(g);
    Tensor loss = f(probe);
    GradientMap grads = g.backward(loss);
    analytic = grads.grad_of(probe);
  }

  double max_rel = 0.0;
  for (int i = 0; i < probe.size(); ++i) {
    const double orig = probe.at(i);
    probe.at(i) = orig + h;
    const double fp = f(probe).item();
    probe.at(i) = orig - h;
    const double fm = f(probe).item();
    probe.at(i) = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = analytic.at(i);
    if (std::isnan(a) || std::isnan(numeric)) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    const double denom =
        std::max({std::abs(a), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
  }
  return max_rel;
}

}  // namespace motioncast
