#include "drivegen/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "drivegen/check.hpp"

namespace drivegen::nn {

namespace detail {

struct TensorImpl {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorImpl>> parents;
    std::function<void()> backward_fn;

    TensorImpl(int r, int c) : rows(r), cols(c), values(static_cast<size_t>(r) * c, 0.0) {}
    TensorImpl(int r, int c, std::vector<double> v) : rows(r), cols(c), values(std::move(v)) {}

    size_t size() const { return values.size(); }
    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

}  // namespace detail

using detail::TensorImpl;
using ImplPtr = std::shared_ptr<TensorImpl>;

namespace detail {

Tensor wrap(ImplPtr impl) { return Tensor(std::move(impl)); }
const ImplPtr& impl_of(const Tensor& t) { return t.impl_; }

}  // namespace detail

namespace {

TensorImpl* raw(const Tensor& t) { return detail::impl_of(t).get(); }

/// Wires up autodiff bookkeeping: the node keeps its parents alive and
/// carries a backward function only when some parent needs gradients.
Tensor finish_op(ImplPtr node, std::vector<Tensor> parents, std::function<void()> fn) {
    bool rg = false;
    for (const Tensor& p : parents) rg = rg || p.requires_grad();
    if (rg) {
        node->requires_grad = true;
        node->parents.reserve(parents.size());
        for (const Tensor& p : parents) node->parents.push_back(detail::impl_of(p));
        node->backward_fn = std::move(fn);
    }
    return detail::wrap(std::move(node));
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    check_arg(a.rows() == b.rows() && a.cols() == b.cols(),
              std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                  std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                  std::to_string(b.cols()) + ")");
}

}  // namespace

// ---- Tensor handle ----

Tensor::Tensor(int rows, int cols, std::vector<double> values, bool requires_grad) {
    check_arg(rows >= 0 && cols >= 0, "Tensor: negative dimension");
    check_arg(values.size() == static_cast<size_t>(rows) * static_cast<size_t>(cols),
              "Tensor: value count does not match shape " + std::to_string(rows) + "x" +
                  std::to_string(cols));
    impl_ = std::make_shared<TensorImpl>(rows, cols, std::move(values));
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl>(rows, cols);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::full(int rows, int cols, double value, bool requires_grad) {
    Tensor t = zeros(rows, cols, requires_grad);
    std::fill(t.impl_->values.begin(), t.impl_->values.end(), value);
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(1, 1, {value}, requires_grad);
}

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
    const int n = static_cast<int>(values.size());
    return Tensor(1, n, std::move(values), requires_grad);
}

int Tensor::rows() const { return impl_ ? impl_->rows : 0; }
int Tensor::cols() const { return impl_ ? impl_->cols : 0; }
int Tensor::size() const { return impl_ ? static_cast<int>(impl_->size()) : 0; }
std::vector<int> Tensor::shape() const { return {rows(), cols()}; }

const std::vector<double>& Tensor::values() const {
    check_arg(impl_ != nullptr, "Tensor: undefined");
    return impl_->values;
}

std::vector<double>& Tensor::mutable_values() {
    check_arg(impl_ != nullptr, "Tensor: undefined");
    return impl_->values;
}

double Tensor::at(int i, int j) const {
    check_arg(impl_ && i >= 0 && i < rows() && j >= 0 && j < cols(), "Tensor::at: out of range");
    return impl_->values[static_cast<size_t>(i) * cols() + j];
}

double Tensor::item() const {
    check_arg(size() == 1, "Tensor::item: not a scalar");
    return impl_->values[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

const std::vector<double>& Tensor::grad() const {
    check_arg(impl_ != nullptr, "Tensor: undefined");
    impl_->ensure_grad();
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (impl_) impl_->grad.assign(impl_->values.size(), 0.0);
}

bool Tensor::all_finite() const {
    if (!impl_) return true;
    for (double v : impl_->values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void require_finite(const Tensor& t, const std::string& what) {
    check_state(t.all_finite(), "non-finite values in " + what);
}

// ---- backward driver ----

void backward(const Tensor& loss) {
    check_arg(loss.size() == 1, "backward: loss must be scalar");
    check_state(std::isfinite(loss.item()), "backward: loss is non-finite");
    TensorImpl* root = raw(loss);
    if (!root->requires_grad) return;

    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> seen;
    std::vector<std::pair<TensorImpl*, size_t>> stack;
    stack.push_back({root, 0});
    seen.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorImpl* p = node->parents[next].get();
            ++next;
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior grads are scratch for this pass; only leaves (no backward_fn,
    // i.e. parameters and inputs) accumulate across calls.
    for (TensorImpl* n : order) {
        if (n->backward_fn) {
            n->grad.assign(n->values.size(), 0.0);
        } else {
            n->ensure_grad();
        }
    }
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn();
    }
}

// ---- elementwise ----

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, const char* /*name*/, Fwd fwd, Bwd bwd) {
    auto node = std::make_shared<TensorImpl>(a.rows(), a.cols());
    const auto& av = a.values();
    for (size_t i = 0; i < av.size(); ++i) node->values[i] = fwd(av[i]);
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    return finish_op(std::move(node), {a}, [self, pa, bwd]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self->values.size(); ++i) {
            pa->grad[i] += self->grad[i] * bwd(pa->values[i], self->values[i]);
        }
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    auto node = std::make_shared<TensorImpl>(a.rows(), a.cols());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (size_t i = 0; i < av.size(); ++i) node->values[i] = av[i] + bv[i];
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    TensorImpl* pb = raw(b);
    return finish_op(std::move(node), {a, b}, [self, pa, pb]() {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i) pa->grad[i] += self->grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i) pb->grad[i] += self->grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    auto node = std::make_shared<TensorImpl>(a.rows(), a.cols());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (size_t i = 0; i < av.size(); ++i) node->values[i] = av[i] - bv[i];
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    TensorImpl* pb = raw(b);
    return finish_op(std::move(node), {a, b}, [self, pa, pb]() {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i) pa->grad[i] += self->grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i) pb->grad[i] -= self->grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    auto node = std::make_shared<TensorImpl>(a.rows(), a.cols());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (size_t i = 0; i < av.size(); ++i) node->values[i] = av[i] * bv[i];
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    TensorImpl* pb = raw(b);
    return finish_op(std::move(node), {a, b}, [self, pa, pb]() {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i)
                pa->grad[i] += self->grad[i] * pb->values[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i)
                pb->grad[i] += self->grad[i] * pa->values[i];
        }
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "div");
    auto node = std::make_shared<TensorImpl>(a.rows(), a.cols());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (size_t i = 0; i < av.size(); ++i) node->values[i] = av[i] / bv[i];
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    TensorImpl* pb = raw(b);
    return finish_op(std::move(node), {a, b}, [self, pa, pb]() {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i)
                pa->grad[i] += self->grad[i] / pb->values[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i)
                pb->grad[i] -= self->grad[i] * self->values[i] / pb->values[i];
        }
    });
}

Tensor neg(const Tensor& a) {
    return unary_op(a, "neg", [](double x) { return -x; },
                    [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& a, double s) {
    return unary_op(a, "scale", [s](double x) { return x * s; },
                    [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary_op(a, "add_scalar", [s](double x) { return x + s; },
                    [](double, double) { return 1.0; });
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
    check_arg(b.rows() == 1 && b.cols() == x.cols(), "add_rowvec: bias must be 1x" +
              std::to_string(x.cols()) + ", got " + std::to_string(b.rows()) + "x" +
              std::to_string(b.cols()));
    const int n = x.rows(), c = x.cols();
    auto node = std::make_shared<TensorImpl>(n, c);
    const auto& xv = x.values();
    const auto& bv = b.values();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            node->values[static_cast<size_t>(i) * c + j] = xv[static_cast<size_t>(i) * c + j] + bv[j];
    TensorImpl* self = node.get();
    TensorImpl* px = raw(x);
    TensorImpl* pb = raw(b);
    return finish_op(std::move(node), {x, b}, [self, px, pb, n, c]() {
        if (px->requires_grad) {
            px->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i) px->grad[i] += self->grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < c; ++j)
                    pb->grad[j] += self->grad[static_cast<size_t>(i) * c + j];
        }
    });
}

Tensor mul_colvec(const Tensor& x, const Tensor& w) {
    check_arg(w.cols() == 1 && w.rows() == x.rows(), "mul_colvec: weight must be " +
              std::to_string(x.rows()) + "x1");
    const int n = x.rows(), c = x.cols();
    auto node = std::make_shared<TensorImpl>(n, c);
    const auto& xv = x.values();
    const auto& wv = w.values();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            node->values[static_cast<size_t>(i) * c + j] = xv[static_cast<size_t>(i) * c + j] * wv[i];
    TensorImpl* self = node.get();
    TensorImpl* px = raw(x);
    TensorImpl* pw = raw(w);
    return finish_op(std::move(node), {x, w}, [self, px, pw, n, c]() {
        if (px->requires_grad) {
            px->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < c; ++j)
                    px->grad[static_cast<size_t>(i) * c + j] +=
                        self->grad[static_cast<size_t>(i) * c + j] * pw->values[i];
        }
        if (pw->requires_grad) {
            pw->ensure_grad();
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < c; ++j)
                    acc += self->grad[static_cast<size_t>(i) * c + j] *
                           px->values[static_cast<size_t>(i) * c + j];
                pw->grad[i] += acc;
            }
        }
    });
}

// ---- nonlinearities ----

Tensor tanh(const Tensor& a) {
    return unary_op(a, "tanh", [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                    [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
    return unary_op(a, "exp", [](double x) { return std::exp(x); },
                    [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary_op(a, "log", [](double x) { return std::log(x); },
                    [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
    return unary_op(a, "sqrt", [](double x) { return std::sqrt(x); },
                    [](double, double y) { return 0.5 / y; });
}

Tensor abs(const Tensor& a) {
    return unary_op(a, "abs", [](double x) { return std::abs(x); },
                    [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor relu(const Tensor& a) {
    return unary_op(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor square(const Tensor& a) {
    return unary_op(a, "square", [](double x) { return x * x; },
                    [](double x, double) { return 2.0 * x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    check_arg(lo <= hi, "clamp: lo > hi");
    return unary_op(a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
                    [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor maximum(const Tensor& a, double floor) {
    return unary_op(a, "maximum", [floor](double x) { return std::max(x, floor); },
                    [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

Tensor pow_const(const Tensor& a, double p) {
    if (p == 0.0) {
        return unary_op(a, "pow_const", [](double) { return 1.0; },
                        [](double, double) { return 0.0; });
    }
    return unary_op(a, "pow_const", [p](double x) { return std::pow(x, p); },
                    [p](double x, double) {
                        if (x == 0.0) return p > 1.0 ? 0.0 : (p == 1.0 ? 1.0 : 0.0);
                        return p * std::pow(x, p - 1.0);
                    });
}

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_arg(a.cols() == b.rows(), "matmul: inner dimensions differ (" +
              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + ")");
    const int n = a.rows(), k = a.cols(), m = b.cols();
    auto node = std::make_shared<TensorImpl>(n, m);
    {
        const double* av = a.values().data();
        const double* bv = b.values().data();
        double* cv = node->values.data();
        for (int i = 0; i < n; ++i) {
            double* crow = cv + static_cast<size_t>(i) * m;
            for (int kk = 0; kk < k; ++kk) {
                const double av_ik = av[static_cast<size_t>(i) * k + kk];
                const double* brow = bv + static_cast<size_t>(kk) * m;
                for (int j = 0; j < m; ++j) crow[j] += av_ik * brow[j];
            }
        }
    }
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    TensorImpl* pb = raw(b);
    return finish_op(std::move(node), {a, b}, [self, pa, pb, n, k, m]() {
        const double* g = self->grad.data();
        if (pa->requires_grad) {
            pa->ensure_grad();
            // dA = g * B^T
            for (int i = 0; i < n; ++i) {
                for (int kk = 0; kk < k; ++kk) {
                    const double* grow = g + static_cast<size_t>(i) * m;
                    const double* brow = pb->values.data() + static_cast<size_t>(kk) * m;
                    double acc = 0.0;
                    for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
                    pa->grad[static_cast<size_t>(i) * k + kk] += acc;
                }
            }
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            // dB = A^T * g
            for (int i = 0; i < n; ++i) {
                const double* grow = g + static_cast<size_t>(i) * m;
                for (int kk = 0; kk < k; ++kk) {
                    const double av_ik = pa->values[static_cast<size_t>(i) * k + kk];
                    double* drow = pb->grad.data() + static_cast<size_t>(kk) * m;
                    for (int j = 0; j < m; ++j) drow[j] += av_ik * grow[j];
                }
            }
        }
    });
}

Tensor matmul_transb(const Tensor& a, const Tensor& b) {
    check_arg(a.cols() == b.cols(), "matmul_transb: inner dimensions differ");
    const int n = a.rows(), k = a.cols(), m = b.rows();
    auto node = std::make_shared<TensorImpl>(n, m);
    {
        const double* av = a.values().data();
        const double* bv = b.values().data();
        for (int i = 0; i < n; ++i) {
            const double* arow = av + static_cast<size_t>(i) * k;
            for (int j = 0; j < m; ++j) {
                const double* brow = bv + static_cast<size_t>(j) * k;
                double acc = 0.0;
                for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
                node->values[static_cast<size_t>(i) * m + j] = acc;
            }
        }
    }
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    TensorImpl* pb = raw(b);
    return finish_op(std::move(node), {a, b}, [self, pa, pb, n, k, m]() {
        const double* g = self->grad.data();
        if (pa->requires_grad) {
            pa->ensure_grad();
            // dA = g * B
            for (int i = 0; i < n; ++i) {
                double* drow = pa->grad.data() + static_cast<size_t>(i) * k;
                for (int j = 0; j < m; ++j) {
                    const double gij = g[static_cast<size_t>(i) * m + j];
                    const double* brow = pb->values.data() + static_cast<size_t>(j) * k;
                    for (int kk = 0; kk < k; ++kk) drow[kk] += gij * brow[kk];
                }
            }
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            // dB = g^T * A
            for (int i = 0; i < n; ++i) {
                const double* arow = pa->values.data() + static_cast<size_t>(i) * k;
                for (int j = 0; j < m; ++j) {
                    const double gij = g[static_cast<size_t>(i) * m + j];
                    double* drow = pb->grad.data() + static_cast<size_t>(j) * k;
                    for (int kk = 0; kk < k; ++kk) drow[kk] += gij * arow[kk];
                }
            }
        }
    });
}

Tensor transpose(const Tensor& a) {
    const int n = a.rows(), m = a.cols();
    auto node = std::make_shared<TensorImpl>(m, n);
    const auto& av = a.values();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            node->values[static_cast<size_t>(j) * n + i] = av[static_cast<size_t>(i) * m + j];
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    return finish_op(std::move(node), {a}, [self, pa, n, m]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                pa->grad[static_cast<size_t>(i) * m + j] += self->grad[static_cast<size_t>(j) * n + i];
    });
}

// ---- reductions / shape ----

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    auto node = std::make_shared<TensorImpl>(1, 1, std::vector<double>{acc});
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    return finish_op(std::move(node), {a}, [self, pa]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        const double g = self->grad[0];
        for (double& d : pa->grad) d += g;
    });
}

Tensor mean(const Tensor& a) {
    check_arg(a.size() > 0, "mean: empty tensor");
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    const double inv = 1.0 / static_cast<double>(a.size());
    auto node = std::make_shared<TensorImpl>(1, 1, std::vector<double>{acc * inv});
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    return finish_op(std::move(node), {a}, [self, pa, inv]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        const double g = self->grad[0] * inv;
        for (double& d : pa->grad) d += g;
    });
}

namespace {

Tensor reduce_extreme(const Tensor& a, bool take_max) {
    check_arg(a.size() > 0, "reduce: empty tensor");
    const auto& av = a.values();
    size_t best = 0;
    for (size_t i = 1; i < av.size(); ++i) {
        if (take_max ? av[i] > av[best] : av[i] < av[best]) best = i;
    }
    auto node = std::make_shared<TensorImpl>(1, 1, std::vector<double>{av[best]});
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    return finish_op(std::move(node), {a}, [self, pa, best]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        pa->grad[best] += self->grad[0];
    });
}

}  // namespace

Tensor reduce_max(const Tensor& a) { return reduce_extreme(a, true); }
Tensor reduce_min(const Tensor& a) { return reduce_extreme(a, false); }

Tensor concat_rows(std::span<const Tensor> parts) {
    check_arg(!parts.empty(), "concat_rows: no inputs");
    const int c = parts[0].cols();
    int n = 0;
    for (const Tensor& p : parts) {
        check_arg(p.cols() == c, "concat_rows: column mismatch");
        n += p.rows();
    }
    auto node = std::make_shared<TensorImpl>(n, c);
    size_t off = 0;
    for (const Tensor& p : parts) {
        const auto& pv = p.values();
        std::copy(pv.begin(), pv.end(), node->values.begin() + off);
        off += pv.size();
    }
    TensorImpl* self = node.get();
    std::vector<Tensor> parents(parts.begin(), parts.end());
    std::vector<TensorImpl*> praw;
    praw.reserve(parents.size());
    for (const Tensor& p : parents) praw.push_back(raw(p));
    return finish_op(std::move(node), std::move(parents), [self, praw]() {
        size_t off = 0;
        for (TensorImpl* p : praw) {
            if (p->requires_grad) {
                p->ensure_grad();
                for (size_t i = 0; i < p->values.size(); ++i) p->grad[i] += self->grad[off + i];
            }
            off += p->values.size();
        }
    });
}

Tensor concat_cols(std::span<const Tensor> parts) {
    check_arg(!parts.empty(), "concat_cols: no inputs");
    const int n = parts[0].rows();
    int c = 0;
    for (const Tensor& p : parts) {
        check_arg(p.rows() == n, "concat_cols: row mismatch");
        c += p.cols();
    }
    auto node = std::make_shared<TensorImpl>(n, c);
    int coff = 0;
    for (const Tensor& p : parts) {
        const auto& pv = p.values();
        const int pc = p.cols();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < pc; ++j)
                node->values[static_cast<size_t>(i) * c + coff + j] = pv[static_cast<size_t>(i) * pc + j];
        coff += pc;
    }
    TensorImpl* self = node.get();
    std::vector<Tensor> parents(parts.begin(), parts.end());
    std::vector<TensorImpl*> praw;
    praw.reserve(parents.size());
    for (const Tensor& p : parents) praw.push_back(raw(p));
    return finish_op(std::move(node), std::move(parents), [self, praw, n, c]() {
        int coff = 0;
        for (TensorImpl* p : praw) {
            const int pc = p->cols;
            if (p->requires_grad) {
                p->ensure_grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < pc; ++j)
                        p->grad[static_cast<size_t>(i) * pc + j] +=
                            self->grad[static_cast<size_t>(i) * c + coff + j];
            }
            coff += pc;
        }
    });
}

Tensor slice(const Tensor& a, int r0, int r1, int c0, int c1) {
    check_arg(0 <= r0 && r0 < r1 && r1 <= a.rows() && 0 <= c0 && c0 < c1 && c1 <= a.cols(),
              "slice: range out of bounds");
    const int n = r1 - r0, m = c1 - c0, ac = a.cols();
    auto node = std::make_shared<TensorImpl>(n, m);
    const auto& av = a.values();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            node->values[static_cast<size_t>(i) * m + j] =
                av[static_cast<size_t>(i + r0) * ac + (j + c0)];
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    return finish_op(std::move(node), {a}, [self, pa, r0, c0, n, m, ac]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                pa->grad[static_cast<size_t>(i + r0) * ac + (j + c0)] +=
                    self->grad[static_cast<size_t>(i) * m + j];
    });
}

Tensor rows_at(const Tensor& a, std::span<const int> indices) {
    const int m = a.cols();
    for (int idx : indices) check_arg(idx >= 0 && idx < a.rows(), "rows_at: index out of range");
    auto node = std::make_shared<TensorImpl>(static_cast<int>(indices.size()), m);
    const auto& av = a.values();
    for (size_t i = 0; i < indices.size(); ++i)
        std::copy(av.begin() + static_cast<size_t>(indices[i]) * m,
                  av.begin() + static_cast<size_t>(indices[i] + 1) * m,
                  node->values.begin() + i * m);
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    std::vector<int> idx(indices.begin(), indices.end());
    return finish_op(std::move(node), {a}, [self, pa, idx, m]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < m; ++j)
                pa->grad[static_cast<size_t>(idx[i]) * m + j] += self->grad[i * m + j];
    });
}

Tensor gather_per_row(const Tensor& a, std::span<const int> indices) {
    check_arg(static_cast<int>(indices.size()) == a.rows(), "gather_per_row: need one index per row");
    const int m = a.cols();
    for (int idx : indices) check_arg(idx >= 0 && idx < m, "gather_per_row: index out of range");
    auto node = std::make_shared<TensorImpl>(a.rows(), 1);
    const auto& av = a.values();
    for (int i = 0; i < a.rows(); ++i)
        node->values[i] = av[static_cast<size_t>(i) * m + indices[i]];
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    std::vector<int> idx(indices.begin(), indices.end());
    return finish_op(std::move(node), {a}, [self, pa, idx, m]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < idx.size(); ++i)
            pa->grad[i * m + idx[i]] += self->grad[i];
    });
}

Tensor cumsum_rows(const Tensor& a) {
    const int n = a.rows(), m = a.cols();
    auto node = std::make_shared<TensorImpl>(n, m);
    const auto& av = a.values();
    for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += av[static_cast<size_t>(i) * m + j];
            node->values[static_cast<size_t>(i) * m + j] = acc;
        }
    }
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    return finish_op(std::move(node), {a}, [self, pa, n, m]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int i = n - 1; i >= 0; --i) {
                acc += self->grad[static_cast<size_t>(i) * m + j];
                pa->grad[static_cast<size_t>(i) * m + j] += acc;
            }
        }
    });
}

// ---- softmax family ----

Tensor softmax_rows(const Tensor& a, const Tensor* additive_mask) {
    const int n = a.rows(), m = a.cols();
    if (additive_mask) {
        check_same_shape(a, *additive_mask, "softmax_rows mask");
        check_arg(!additive_mask->requires_grad(), "softmax_rows: mask must be constant");
    }
    auto node = std::make_shared<TensorImpl>(n, m);
    const auto& av = a.values();
    const double* mk = additive_mask ? additive_mask->values().data() : nullptr;
    for (int i = 0; i < n; ++i) {
        const size_t base = static_cast<size_t>(i) * m;
        double rowmax = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j) {
            const double v = av[base + j] + (mk ? mk[base + j] : 0.0);
            check_state(!std::isnan(v), "softmax_rows: NaN in logits");
            rowmax = std::max(rowmax, v);
        }
        check_state(std::isfinite(rowmax), "softmax_rows: row fully masked or non-finite");
        double denom = 0.0;
        for (int j = 0; j < m; ++j) {
            const double v = av[base + j] + (mk ? mk[base + j] : 0.0);
            const double e = std::exp(v - rowmax);
            node->values[base + j] = e;
            denom += e;
        }
        for (int j = 0; j < m; ++j) node->values[base + j] /= denom;
    }
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    return finish_op(std::move(node), {a}, [self, pa, n, m]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (int i = 0; i < n; ++i) {
            const size_t base = static_cast<size_t>(i) * m;
            double dot = 0.0;
            for (int j = 0; j < m; ++j) dot += self->grad[base + j] * self->values[base + j];
            for (int j = 0; j < m; ++j)
                pa->grad[base + j] += self->values[base + j] * (self->grad[base + j] - dot);
        }
    });
}

Tensor log_softmax_rows(const Tensor& a) {
    const int n = a.rows(), m = a.cols();
    auto node = std::make_shared<TensorImpl>(n, m);
    const auto& av = a.values();
    for (int i = 0; i < n; ++i) {
        const size_t base = static_cast<size_t>(i) * m;
        double rowmax = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j) {
            check_state(!std::isnan(av[base + j]), "log_softmax_rows: NaN in logits");
            rowmax = std::max(rowmax, av[base + j]);
        }
        double denom = 0.0;
        for (int j = 0; j < m; ++j) denom += std::exp(av[base + j] - rowmax);
        const double lse = rowmax + std::log(denom);
        for (int j = 0; j < m; ++j) node->values[base + j] = av[base + j] - lse;
    }
    TensorImpl* self = node.get();
    TensorImpl* pa = raw(a);
    return finish_op(std::move(node), {a}, [self, pa, n, m]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (int i = 0; i < n; ++i) {
            const size_t base = static_cast<size_t>(i) * m;
            double gsum = 0.0;
            for (int j = 0; j < m; ++j) gsum += self->grad[base + j];
            for (int j = 0; j < m; ++j)
                pa->grad[base + j] += self->grad[base + j] - std::exp(self->values[base + j]) * gsum;
        }
    });
}

// ---- layer norm ----

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const int n = x.rows(), c = x.cols();
    check_arg(gamma.rows() == 1 && gamma.cols() == c, "layer_norm_rows: gamma must be 1x" +
              std::to_string(c));
    check_arg(beta.rows() == 1 && beta.cols() == c, "layer_norm_rows: beta must be 1x" +
              std::to_string(c));
    auto node = std::make_shared<TensorImpl>(n, c);
    const auto& xv = x.values();
    const auto& gv = gamma.values();
    const auto& bv = beta.values();
    std::vector<double> xhat(static_cast<size_t>(n) * c);
    std::vector<double> istd(n);
    for (int i = 0; i < n; ++i) {
        const size_t base = static_cast<size_t>(i) * c;
        double mu = 0.0;
        for (int j = 0; j < c; ++j) mu += xv[base + j];
        mu /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) {
            const double d = xv[base + j] - mu;
            var += d * d;
        }
        var /= c;
        istd[i] = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < c; ++j) {
            xhat[base + j] = (xv[base + j] - mu) * istd[i];
            node->values[base + j] = gv[j] * xhat[base + j] + bv[j];
        }
    }
    TensorImpl* self = node.get();
    TensorImpl* px = raw(x);
    TensorImpl* pg = raw(gamma);
    TensorImpl* pb = raw(beta);
    return finish_op(std::move(node), {x, gamma, beta},
                     [self, px, pg, pb, n, c, xhat = std::move(xhat), istd = std::move(istd)]() {
        if (pg->requires_grad) {
            pg->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < c; ++j)
                    pg->grad[j] += self->grad[static_cast<size_t>(i) * c + j] *
                                   xhat[static_cast<size_t>(i) * c + j];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < c; ++j) pb->grad[j] += self->grad[static_cast<size_t>(i) * c + j];
        }
        if (px->requires_grad) {
            px->ensure_grad();
            for (int i = 0; i < n; ++i) {
                const size_t base = static_cast<size_t>(i) * c;
                double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                for (int j = 0; j < c; ++j) {
                    const double dxh = self->grad[base + j] * pg->values[j];
                    mean_dxhat += dxh;
                    mean_dxhat_xhat += dxh * xhat[base + j];
                }
                mean_dxhat /= c;
                mean_dxhat_xhat /= c;
                for (int j = 0; j < c; ++j) {
                    const double dxh = self->grad[base + j] * pg->values[j];
                    px->grad[base + j] +=
                        istd[i] * (dxh - mean_dxhat - xhat[base + j] * mean_dxhat_xhat);
                }
            }
        }
    });
}

// ---- bilinear sampling ----

Tensor bilinear_sample(const Tensor& grid, int height, int width, const Tensor& points) {
    check_arg(grid.rows() == height * width, "bilinear_sample: grid rows != H*W");
    check_arg(points.cols() == 2, "bilinear_sample: points must be Px2");
    const int p = points.rows(), c = grid.cols();
    auto node = std::make_shared<TensorImpl>(p, c);
    const auto& gv = grid.values();
    const auto& pv = points.values();

    struct Sample {
        int x0, y0;
        double fx, fy;
        bool x_interior, y_interior;  // clamp gradient when the point is outside
    };
    std::vector<Sample> samples(p);
    for (int i = 0; i < p; ++i) {
        const double rx = pv[static_cast<size_t>(i) * 2 + 0];
        const double ry = pv[static_cast<size_t>(i) * 2 + 1];
        const double cx = std::clamp(rx, 0.0, static_cast<double>(width - 1));
        const double cy = std::clamp(ry, 0.0, static_cast<double>(height - 1));
        Sample s;
        s.x0 = width > 1 ? std::min(static_cast<int>(std::floor(cx)), width - 2) : 0;
        s.y0 = height > 1 ? std::min(static_cast<int>(std::floor(cy)), height - 2) : 0;
        s.fx = width > 1 ? cx - s.x0 : 0.0;
        s.fy = height > 1 ? cy - s.y0 : 0.0;
        s.x_interior = rx > 0.0 && rx < static_cast<double>(width - 1);
        s.y_interior = ry > 0.0 && ry < static_cast<double>(height - 1);
        samples[i] = s;
        const int x1 = width > 1 ? s.x0 + 1 : 0;
        const int y1 = height > 1 ? s.y0 + 1 : 0;
        const size_t r00 = (static_cast<size_t>(s.y0) * width + s.x0) * c;
        const size_t r01 = (static_cast<size_t>(s.y0) * width + x1) * c;
        const size_t r10 = (static_cast<size_t>(y1) * width + s.x0) * c;
        const size_t r11 = (static_cast<size_t>(y1) * width + x1) * c;
        const double w00 = (1.0 - s.fy) * (1.0 - s.fx);
        const double w01 = (1.0 - s.fy) * s.fx;
        const double w10 = s.fy * (1.0 - s.fx);
        const double w11 = s.fy * s.fx;
        for (int j = 0; j < c; ++j) {
            node->values[static_cast<size_t>(i) * c + j] =
                w00 * gv[r00 + j] + w01 * gv[r01 + j] + w10 * gv[r10 + j] + w11 * gv[r11 + j];
        }
    }

    TensorImpl* self = node.get();
    TensorImpl* pg = raw(grid);
    TensorImpl* pp = raw(points);
    return finish_op(std::move(node), {grid, points},
                     [self, pg, pp, p, c, height, width, samples = std::move(samples)]() {
        for (int i = 0; i < p; ++i) {
            const Sample& s = samples[i];
            const int x1 = width > 1 ? s.x0 + 1 : 0;
            const int y1 = height > 1 ? s.y0 + 1 : 0;
            const size_t r00 = (static_cast<size_t>(s.y0) * width + s.x0) * c;
            const size_t r01 = (static_cast<size_t>(s.y0) * width + x1) * c;
            const size_t r10 = (static_cast<size_t>(y1) * width + s.x0) * c;
            const size_t r11 = (static_cast<size_t>(y1) * width + x1) * c;
            const double w00 = (1.0 - s.fy) * (1.0 - s.fx);
            const double w01 = (1.0 - s.fy) * s.fx;
            const double w10 = s.fy * (1.0 - s.fx);
            const double w11 = s.fy * s.fx;
            if (pg->requires_grad) {
                pg->ensure_grad();
                for (int j = 0; j < c; ++j) {
                    const double g = self->grad[static_cast<size_t>(i) * c + j];
                    pg->grad[r00 + j] += w00 * g;
                    pg->grad[r01 + j] += w01 * g;
                    pg->grad[r10 + j] += w10 * g;
                    pg->grad[r11 + j] += w11 * g;
                }
            }
            if (pp->requires_grad) {
                pp->ensure_grad();
                double dx = 0.0, dy = 0.0;
                for (int j = 0; j < c; ++j) {
                    const double g = self->grad[static_cast<size_t>(i) * c + j];
                    dx += g * ((1.0 - s.fy) * (pg->values[r01 + j] - pg->values[r00 + j]) +
                               s.fy * (pg->values[r11 + j] - pg->values[r10 + j]));
                    dy += g * ((1.0 - s.fx) * (pg->values[r10 + j] - pg->values[r00 + j]) +
                               s.fx * (pg->values[r11 + j] - pg->values[r01 + j]));
                }
                if (s.x_interior) pp->grad[static_cast<size_t>(i) * 2 + 0] += dx;
                if (s.y_interior) pp->grad[static_cast<size_t>(i) * 2 + 1] += dy;
            }
        }
    });
}

}  // namespace drivegen::nn
