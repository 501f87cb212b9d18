#include "drivegen/tensor.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "drivegen/check.hpp"
#include "drivegen/rng.hpp"

using namespace drivegen;
using drivegen::nn::Tensor;

namespace {

/// Central-difference check of d(build(x))/dx against reverse mode.
/// Returns the worst relative error over all coordinates.
double grad_rel_err(const std::function<Tensor(const Tensor&)>& build, int rows, int cols,
                    std::vector<double> x, double eps = 1e-5) {
    Tensor xt(rows, cols, x, true);
    Tensor loss = build(xt);
    REQUIRE(loss.size() == 1);
    nn::backward(loss);
    const std::vector<double> grad = xt.grad();

    double worst = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        std::vector<double> xp = x, xm = x;
        xp[i] += eps;
        xm[i] -= eps;
        const double fp = build(Tensor(rows, cols, xp)).item();
        const double fm = build(Tensor(rows, cols, xm)).item();
        const double num = (fp - fm) / (2 * eps);
        const double rel =
            std::abs(grad[i] - num) / std::max({1.0, std::abs(grad[i]), std::abs(num)});
        worst = std::max(worst, rel);
    }
    return worst;
}

std::vector<double> random_values(int n, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    RngStream rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("tensor construction and accessors") {
    Tensor t(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(t.size() == 6);
    CHECK(t.at(1, 2) == 6);
    CHECK_FALSE(t.requires_grad());

    CHECK(Tensor::scalar(4.0).item() == 4.0);
    CHECK(Tensor::zeros(3, 3).at(2, 2) == 0.0);
    CHECK(Tensor::full(2, 2, 7.0).at(0, 1) == 7.0);
    CHECK(Tensor::row({1, 2, 3}).cols() == 3);

    CHECK_THROWS_AS(Tensor(2, 2, {1, 2, 3}), InputError);
    CHECK_THROWS_AS(Tensor(2, 2, {1, 2, 3, 4}).item(), InputError);
    CHECK_THROWS_AS(t.at(2, 0), InputError);
}

TEST_CASE("forward values of basic ops") {
    Tensor a(2, 2, {1, 2, 3, 4});
    Tensor b(2, 2, {5, 6, 7, 8});

    CHECK((a + b).at(1, 1) == 12);
    CHECK((b - a).at(0, 0) == 4);
    CHECK((a * b).at(0, 1) == 12);
    CHECK(nn::div(b, a).at(1, 0) == doctest::Approx(7.0 / 3.0));
    CHECK(nn::neg(a).at(0, 0) == -1);
    CHECK(nn::scale(a, 3.0).at(1, 1) == 12);
    CHECK(nn::add_scalar(a, 0.5).at(0, 0) == 1.5);
    CHECK(nn::square(a).at(1, 1) == 16);
    CHECK(nn::sqrt(Tensor::scalar(9.0)).item() == 3.0);
    CHECK(nn::abs(Tensor::scalar(-2.5)).item() == 2.5);
    CHECK(nn::relu(Tensor::row({-1, 2})).at(0, 0) == 0.0);
    CHECK(nn::clamp(Tensor::row({-5, 0.5, 5}), -1, 1).at(0, 2) == 1.0);
    CHECK(nn::maximum(Tensor::row({-3, 3}), 0.0).at(0, 0) == 0.0);
    CHECK(nn::pow_const(Tensor::scalar(2.0), 3.0).item() == 8.0);
    CHECK(nn::pow_const(Tensor::scalar(0.0), 0.0).item() == 1.0);

    CHECK(nn::add_rowvec(a, Tensor::row({10, 20})).at(1, 1) == 24);
    CHECK(nn::mul_colvec(a, Tensor(2, 1, {2, 3})).at(1, 0) == 9);

    CHECK(nn::sum(a).item() == 10);
    CHECK(nn::mean(a).item() == 2.5);
    CHECK(nn::reduce_max(a).item() == 4);
    CHECK(nn::reduce_min(a).item() == 1);
    CHECK(nn::transpose(a).at(0, 1) == 3);
}

TEST_CASE("matmul matches hand product") {
    Tensor a(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor b(3, 2, {7, 8, 9, 10, 11, 12});
    Tensor c = nn::matmul(a, b);
    CHECK(c.rows() == 2);
    CHECK(c.cols() == 2);
    CHECK(c.at(0, 0) == 58);
    CHECK(c.at(0, 1) == 64);
    CHECK(c.at(1, 0) == 139);
    CHECK(c.at(1, 1) == 154);

    Tensor bt = nn::transpose(b);
    Tensor c2 = nn::matmul_transb(a, bt);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(c2.at(i, j) == c.at(i, j));

    CHECK_THROWS_AS(nn::matmul(a, a), InputError);
}

TEST_CASE("shape ops round-trip") {
    Tensor a(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor b(1, 3, {7, 8, 9});
    std::vector<Tensor> parts = {a, b};
    Tensor cat = nn::concat_rows(parts);
    CHECK(cat.rows() == 3);
    CHECK(cat.at(2, 1) == 8);
    CHECK(nn::slice_rows(cat, 2, 3).at(0, 2) == 9);
    CHECK(nn::slice(cat, 0, 2, 1, 3).at(1, 1) == 6);

    Tensor l(2, 1, {1, 2});
    Tensor r(2, 2, {3, 4, 5, 6});
    std::vector<Tensor> cols = {l, r};
    Tensor cc = nn::concat_cols(cols);
    CHECK(cc.cols() == 3);
    CHECK(cc.at(1, 0) == 2);
    CHECK(cc.at(0, 2) == 4);

    const std::vector<int> idx = {1, 0, 1};
    Tensor picked = nn::rows_at(a, idx);
    CHECK(picked.rows() == 3);
    CHECK(picked.at(0, 0) == 4);
    CHECK(picked.at(1, 0) == 1);

    const std::vector<int> per_row = {2, 0};
    Tensor g = nn::gather_per_row(a, per_row);
    CHECK(g.cols() == 1);
    CHECK(g.at(0, 0) == 3);
    CHECK(g.at(1, 0) == 4);

    Tensor cs = nn::cumsum_rows(Tensor(3, 2, {1, 10, 2, 20, 3, 30}));
    CHECK(cs.at(0, 0) == 1);
    CHECK(cs.at(1, 0) == 3);
    CHECK(cs.at(2, 1) == 60);
}

TEST_CASE("softmax rows sum to one and handle shifts") {
    Tensor a(2, 3, {1, 2, 3, 1000, 1001, 1002});
    Tensor s = nn::softmax_rows(a);
    for (int i = 0; i < 2; ++i) {
        double total = 0;
        for (int j = 0; j < 3; ++j) total += s.at(i, j);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    // shift invariance: both rows have identical relative logits
    for (int j = 0; j < 3; ++j) CHECK(s.at(0, j) == doctest::Approx(s.at(1, j)).epsilon(1e-12));

    Tensor ls = nn::log_softmax_rows(a);
    for (int j = 0; j < 3; ++j)
        CHECK(std::exp(ls.at(0, j)) == doctest::Approx(s.at(0, j)).epsilon(1e-12));
}

TEST_CASE("masked softmax equals physically removed keys bitwise") {
    RngStream rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5;
        std::vector<double> logits = random_values(n, 1000 + trial, -4.0, 4.0);
        Tensor full(1, n, logits);
        std::vector<double> mask_v(n, 0.0);
        const int drop = static_cast<int>(rng.uniform_int(0, n - 1));
        mask_v[drop] = -std::numeric_limits<double>::infinity();
        Tensor mask(1, n, mask_v);
        Tensor masked = nn::softmax_rows(full, &mask);

        std::vector<double> kept;
        for (int j = 0; j < n; ++j)
            if (j != drop) kept.push_back(logits[j]);
        Tensor removed = nn::softmax_rows(Tensor(1, n - 1, kept));

        CHECK(masked.at(0, drop) == 0.0);
        int k = 0;
        for (int j = 0; j < n; ++j) {
            if (j == drop) continue;
            // bitwise: exp(-inf) contributes exactly zero to the denominator
            CHECK(masked.at(0, j) == removed.at(0, k));
            ++k;
        }
    }
}

TEST_CASE("softmax rejects fully masked rows and NaN logits") {
    Tensor a(1, 2, {1.0, 2.0});
    Tensor mask(1, 2, {-std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity()});
    CHECK_THROWS_AS(nn::softmax_rows(a, &mask), StateError);
    Tensor bad(1, 2, {std::numeric_limits<double>::quiet_NaN(), 0.0});
    CHECK_THROWS_AS(nn::softmax_rows(bad), StateError);
}

TEST_CASE("layer_norm_rows normalizes each row") {
    Tensor x(2, 4, {1, 2, 3, 4, -5, 0, 5, 10});
    Tensor gamma = Tensor::full(1, 4, 1.0);
    Tensor beta = Tensor::zeros(1, 4);
    Tensor y = nn::layer_norm_rows(x, gamma, beta);
    for (int i = 0; i < 2; ++i) {
        double m = 0, v = 0;
        for (int j = 0; j < 4; ++j) m += y.at(i, j);
        m /= 4;
        for (int j = 0; j < 4; ++j) v += (y.at(i, j) - m) * (y.at(i, j) - m);
        v /= 4;
        CHECK(m == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(v == doctest::Approx(1.0).epsilon(1e-4));  // eps shrinks variance slightly
    }
}

TEST_CASE("bilinear_sample interpolates exactly on a ramp") {
    // grid value = 10*y + x in a 3x4 grid, one channel
    std::vector<double> g;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) g.push_back(10.0 * y + x);
    Tensor grid(12, 1, g);
    Tensor pts(3, 2, {1.0, 1.0, 2.5, 0.5, 0.25, 1.75});
    Tensor out = nn::bilinear_sample(grid, 3, 4, pts);
    CHECK(out.at(0, 0) == doctest::Approx(11.0));
    CHECK(out.at(1, 0) == doctest::Approx(7.5));
    CHECK(out.at(2, 0) == doctest::Approx(17.75));

    // border clamp
    Tensor outside(2, 2, {-3.0, 1.0, 9.0, 5.0});
    Tensor clipped = nn::bilinear_sample(grid, 3, 4, outside);
    CHECK(clipped.at(0, 0) == doctest::Approx(10.0));
    CHECK(clipped.at(1, 0) == doctest::Approx(23.0));
}

TEST_CASE("gradients of elementwise ops match finite differences") {
    auto vals = random_values(6, 1);
    auto vals_pos = random_values(6, 2, 0.5, 2.0);
    // keep random inputs away from the kinks of abs/relu/clamp/maximum
    auto vals_off = random_values(6, 3, 0.1, 0.9);

    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::tanh(x)); }, 2, 3, vals) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::sigmoid(x)); }, 2, 3, vals) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::exp(x)); }, 2, 3, vals) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::log(x)); }, 2, 3, vals_pos) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::sqrt(x)); }, 2, 3, vals_pos) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::square(x)); }, 2, 3, vals) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::abs(x)); }, 2, 3, vals_off) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::relu(x)); }, 2, 3, vals_off) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::clamp(x, 0.2, 0.8)); }, 2, 3,
                       random_values(6, 4, 0.3, 0.7)) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::maximum(x, 0.5)); }, 2, 3,
                       random_values(6, 5, 0.6, 1.5)) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::pow_const(x, 2.5)); }, 2, 3,
                       vals_pos) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::neg(x)); }, 2, 3, vals) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::scale(x, -2.5)); }, 2, 3, vals) <
          1e-6);
}

TEST_CASE("gradients of binary ops match finite differences") {
    auto vals = random_values(6, 10);
    Tensor other(2, 3, random_values(6, 11, 0.5, 2.0), true);

    CHECK(grad_rel_err([&](const Tensor& x) { return nn::sum(x + other); }, 2, 3, vals) < 1e-6);
    CHECK(grad_rel_err([&](const Tensor& x) { return nn::sum(x - other); }, 2, 3, vals) < 1e-6);
    CHECK(grad_rel_err([&](const Tensor& x) { return nn::sum(x * other); }, 2, 3, vals) < 1e-6);
    CHECK(grad_rel_err([&](const Tensor& x) { return nn::sum(nn::div(x, other)); }, 2, 3, vals) <
          1e-6);
    CHECK(grad_rel_err([&](const Tensor& x) { return nn::sum(nn::div(other, x)); }, 2, 3,
                       random_values(6, 12, 0.5, 2.0)) < 1e-6);

    // second operand of mul also gets gradients
    Tensor a(2, 3, vals, true);
    Tensor loss = nn::sum(a * a);
    nn::backward(loss);
    for (int i = 0; i < 6; ++i) CHECK(a.grad()[i] == doctest::Approx(2 * vals[i]).epsilon(1e-12));
}

TEST_CASE("gradients of broadcast, matmul and shape ops") {
    CHECK(grad_rel_err(
              [](const Tensor& x) {
                  return nn::sum(nn::add_rowvec(x, Tensor::row({0.5, -0.5, 0.25})));
              },
              4, 3, random_values(12, 20)) < 1e-6);
    CHECK(grad_rel_err(
              [](const Tensor& b) {
                  Tensor x(4, 3, random_values(12, 21));
                  return nn::sum(nn::square(nn::add_rowvec(x, b)));
              },
              1, 3, random_values(3, 22)) < 1e-6);
    CHECK(grad_rel_err(
              [](const Tensor& w) {
                  Tensor x(3, 4, random_values(12, 23));
                  return nn::sum(nn::square(nn::mul_colvec(x, w)));
              },
              3, 1, random_values(3, 24)) < 1e-6);

    Tensor b(3, 2, random_values(6, 25));
    CHECK(grad_rel_err([&](const Tensor& x) { return nn::sum(nn::square(nn::matmul(x, b))); }, 2,
                       3, random_values(6, 26)) < 1e-6);
    CHECK(grad_rel_err([&](const Tensor& x) { return nn::sum(nn::square(nn::matmul(b, x))); }, 2,
                       4, random_values(8, 27)) < 1e-6);
    Tensor c(4, 3, random_values(12, 28));
    CHECK(grad_rel_err(
              [&](const Tensor& x) { return nn::sum(nn::square(nn::matmul_transb(x, c))); }, 2, 3,
              random_values(6, 29)) < 1e-6);
    CHECK(grad_rel_err(
              [&](const Tensor& x) { return nn::sum(nn::square(nn::matmul_transb(c, x))); }, 2, 3,
              random_values(6, 30)) < 1e-6);

    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::square(nn::transpose(x))); }, 2, 3,
                       random_values(6, 31)) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::mean(nn::square(x)); }, 3, 3,
                       random_values(9, 32)) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::reduce_max(x); }, 2, 3,
                       random_values(6, 33)) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::reduce_min(x); }, 2, 3,
                       random_values(6, 34)) < 1e-6);
    CHECK(grad_rel_err(
              [](const Tensor& x) {
                  Tensor other(2, 3, random_values(6, 35));
                  std::vector<Tensor> parts = {x, other};
                  return nn::sum(nn::square(nn::concat_rows(parts)));
              },
              2, 3, random_values(6, 36)) < 1e-6);
    CHECK(grad_rel_err(
              [](const Tensor& x) {
                  Tensor other(3, 2, random_values(6, 37));
                  std::vector<Tensor> parts = {x, other};
                  return nn::sum(nn::square(nn::concat_cols(parts)));
              },
              3, 2, random_values(6, 38)) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::square(nn::slice(x, 1, 3, 0, 2))); },
                       4, 3, random_values(12, 39)) < 1e-6);
    CHECK(grad_rel_err(
              [](const Tensor& x) {
                  const std::vector<int> idx = {2, 0, 2, 1};  // repeats accumulate
                  return nn::sum(nn::square(nn::rows_at(x, idx)));
              },
              3, 2, random_values(6, 40)) < 1e-6);
    CHECK(grad_rel_err(
              [](const Tensor& x) {
                  const std::vector<int> idx = {1, 0, 2};
                  return nn::sum(nn::square(nn::gather_per_row(x, idx)));
              },
              3, 3, random_values(9, 41)) < 1e-6);
    CHECK(grad_rel_err([](const Tensor& x) { return nn::sum(nn::square(nn::cumsum_rows(x))); }, 4,
                       2, random_values(8, 42)) < 1e-6);
}

TEST_CASE("gradients of softmax, layer norm and bilinear sampling") {
    CHECK(grad_rel_err(
              [](const Tensor& x) {
                  Tensor w(1, 4, random_values(4, 50));
                  return nn::sum(nn::softmax_rows(x) * nn::concat_rows(std::vector<Tensor>{w, w}));
              },
              2, 4, random_values(8, 51)) < 1e-6);
    CHECK(grad_rel_err(
              [](const Tensor& x) {
                  const std::vector<int> idx = {1, 2};
                  return nn::neg(nn::sum(nn::gather_per_row(nn::log_softmax_rows(x), idx)));
              },
              2, 4, random_values(8, 52)) < 1e-6);

    auto ln_build = [](const Tensor& x) {
        Tensor gamma(1, 4, {1.1, 0.9, 1.0, 1.2});
        Tensor beta(1, 4, {0.1, -0.1, 0.0, 0.2});
        Tensor w(1, 4, {0.3, -0.7, 0.5, 0.9});
        Tensor rows = nn::layer_norm_rows(x, gamma, beta);
        return nn::sum(nn::mul_colvec(nn::matmul_transb(rows, w), Tensor(3, 1, {1.0, -2.0, 0.5})));
    };
    CHECK(grad_rel_err(ln_build, 3, 4, random_values(12, 53)) < 1e-6);
    //  gamma and beta gradients
    CHECK(grad_rel_err(
              [](const Tensor& gamma) {
                  Tensor x(3, 4, random_values(12, 54));
                  Tensor beta(1, 4, {0.1, -0.1, 0.0, 0.2});
                  return nn::sum(nn::square(nn::layer_norm_rows(x, gamma, beta)));
              },
              1, 4, random_values(4, 55, 0.5, 1.5)) < 1e-6);
    CHECK(grad_rel_err(
              [](const Tensor& beta) {
                  Tensor x(3, 4, random_values(12, 56));
                  Tensor gamma(1, 4, {1.1, 0.9, 1.0, 1.2});
                  return nn::sum(nn::square(nn::layer_norm_rows(x, gamma, beta)));
              },
              1, 4, random_values(4, 57)) < 1e-6);

    // bilinear: gradient in the grid ...
    Tensor pts(3, 2, {1.3, 0.7, 2.2, 1.6, 0.4, 0.9});
    CHECK(grad_rel_err(
              [&](const Tensor& grid) {
                  return nn::sum(nn::square(nn::bilinear_sample(grid, 3, 4, pts)));
              },
              12, 2, random_values(24, 58)) < 1e-6);
    // ... and in the sample points (kept off lattice lines and borders)
    CHECK(grad_rel_err(
              [](const Tensor& p) {
                  Tensor grid(12, 2, random_values(24, 59));
                  return nn::sum(nn::square(nn::bilinear_sample(grid, 3, 4, p)));
              },
              3, 2, {1.3, 0.7, 2.2, 1.6, 0.4, 0.9}) < 1e-6);
}

TEST_CASE("backward handles reuse, diamonds and accumulation") {
    // y = x*x + x  =>  dy/dx = 2x + 1
    Tensor x = Tensor::scalar(3.0, true);
    Tensor y = x * x + x;
    nn::backward(y);
    CHECK(x.grad()[0] == doctest::Approx(7.0));

    // gradients accumulate across backward calls until zeroed
    nn::backward(y);
    CHECK(x.grad()[0] == doctest::Approx(14.0));
    x.zero_grad();
    nn::backward(y);
    CHECK(x.grad()[0] == doctest::Approx(7.0));

    // diamond: z = (a+b) * (a-b)  =>  dz/da = 2a, dz/db = -2b
    Tensor a = Tensor::scalar(2.0, true);
    Tensor b = Tensor::scalar(5.0, true);
    Tensor z = (a + b) * (a - b);
    nn::backward(z);
    CHECK(a.grad()[0] == doctest::Approx(4.0));
    CHECK(b.grad()[0] == doctest::Approx(-10.0));
}

TEST_CASE("constants receive no gradient and detached graphs are cheap") {
    Tensor c = Tensor::scalar(2.0);  // no grad requested
    Tensor x = Tensor::scalar(3.0, true);
    Tensor y = x * c;
    nn::backward(y);
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    CHECK(c.grad()[0] == 0.0);

    Tensor dead = c * c;  // all-constant subgraph
    CHECK_FALSE(dead.requires_grad());
}

TEST_CASE("backward rejects non-scalar and non-finite losses") {
    Tensor x(1, 2, {1.0, 2.0}, true);
    CHECK_THROWS_AS(nn::backward(x), InputError);
    Tensor inf = Tensor::scalar(std::numeric_limits<double>::infinity(), true);
    CHECK_THROWS_AS(nn::backward(inf), StateError);
    CHECK_THROWS_AS(nn::require_finite(inf, "probe"), StateError);
}

TEST_CASE("deep graphs do not overflow the stack") {
    Tensor x = Tensor::scalar(1.0, true);
    Tensor y = x;
    for (int i = 0; i < 20000; ++i) y = nn::add_scalar(y, 1.0 / 20000);
    nn::backward(y);
    CHECK(x.grad()[0] == doctest::Approx(1.0));
    CHECK(y.item() == doctest::Approx(2.0));
}

TEST_CASE("identical computations are bitwise identical") {
    auto run = []() {
        Tensor a(3, 3, random_values(9, 77), true);
        Tensor b(3, 3, random_values(9, 78));
        Tensor loss = nn::sum(nn::tanh(nn::matmul(a, b)));
        nn::backward(loss);
        std::vector<double> out = a.grad();
        out.push_back(loss.item());
        return out;
    };
    const auto r1 = run();
    const auto r2 = run();
    REQUIRE(r1.size() == r2.size());
    for (size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == r2[i]);
}
