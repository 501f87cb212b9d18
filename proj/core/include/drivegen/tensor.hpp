#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace drivegen::nn {

class Tensor;

namespace detail {
struct TensorImpl;
Tensor wrap(std::shared_ptr<TensorImpl> impl);
const std::shared_ptr<TensorImpl>& impl_of(const Tensor& t);
}  // namespace detail

/// 2-D row-major tensor of doubles with reverse-mode autodiff.
///
/// Tensor is a value-semantic handle onto a shared node. Operations on
/// tensors build a dynamic tape; backward(loss) walks it in reverse and
/// accumulates gradients into every node with requires_grad set. Scalars
/// are 1x1 tensors, row vectors 1xN. All arithmetic is double precision
/// and strictly sequential, so results are bit-reproducible.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor full(int rows, int cols, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor row(std::vector<double> values, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    int rows() const;
    int cols() const;
    int size() const;  ///< rows * cols
    std::vector<int> shape() const;

    const std::vector<double>& values() const;
    /// Mutable access to raw values (parameter updates between steps).
    std::vector<double>& mutable_values();
    double at(int i, int j) const;
    double item() const;  ///< value of a 1x1 tensor

    bool requires_grad() const;
    /// Gradient accumulated by the most recent backward(); zeros if untouched.
    const std::vector<double>& grad() const;
    void zero_grad();

    bool all_finite() const;

    /// Stable identity of the underlying node (used by ops to detect aliasing).
    const void* node_id() const { return impl_.get(); }

private:
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

    std::shared_ptr<detail::TensorImpl> impl_;
    friend Tensor detail::wrap(std::shared_ptr<detail::TensorImpl>);
    friend const std::shared_ptr<detail::TensorImpl>& detail::impl_of(const Tensor&);
};

/// Runs reverse-mode accumulation from a scalar loss.
void backward(const Tensor& loss);

// ---- elementwise / arithmetic ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// X (NxC) + row vector b (1xC), broadcast over rows.
Tensor add_rowvec(const Tensor& x, const Tensor& b);
/// X (NxC) * column vector w (Nx1), broadcast over columns.
Tensor mul_colvec(const Tensor& x, const Tensor& w);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// ---- nonlinearities ----
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor square(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor maximum(const Tensor& a, double floor);
/// x^p for x >= 0; pow_const(x, 0) == 1 everywhere.
Tensor pow_const(const Tensor& a, double p);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);
/// a (NxK) times b^T where b is MxK -> NxM.
Tensor matmul_transb(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// ---- reductions / shape ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor reduce_max(const Tensor& a);  ///< subgradient to the first maximum
Tensor reduce_min(const Tensor& a);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice(const Tensor& a, int r0, int r1, int c0, int c1);
inline Tensor slice_rows(const Tensor& a, int r0, int r1) {
    return slice(a, r0, r1, 0, a.cols());
}
Tensor rows_at(const Tensor& a, std::span<const int> indices);
/// One element per row: out[i] = a[i, indices[i]], Nx1.
Tensor gather_per_row(const Tensor& a, std::span<const int> indices);
/// Prefix sums down the rows: out[i] = sum_{k<=i} a[k].
Tensor cumsum_rows(const Tensor& a);

// ---- softmax family ----
/// Row-wise softmax. additive_mask, when given, is added to the logits
/// first; -inf entries are excluded exactly (their weight is 0 and the
/// remaining weights match a computation with those keys absent bitwise).
/// Throws StateError on non-finite logits or fully-masked rows.
Tensor softmax_rows(const Tensor& a, const Tensor* additive_mask = nullptr);
Tensor log_softmax_rows(const Tensor& a);

// ---- structured ops ----
/// Row-wise layer normalization with learnable gain/bias (1xC each).
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps = 1e-5);

/// Bilinear interpolation into a feature grid laid out as (H*W)xC with
/// row-major cells (cell (i,j) at row i*W+j). points is Px2 continuous
/// cell coordinates (x = column axis, y = row axis); coordinates clamp to
/// the border. Differentiable in both the grid and the points.
Tensor bilinear_sample(const Tensor& grid, int height, int width, const Tensor& points);

/// Throws StateError naming `what` when any value is non-finite.
void require_finite(const Tensor& t, const std::string& what);

}  // namespace drivegen::nn
