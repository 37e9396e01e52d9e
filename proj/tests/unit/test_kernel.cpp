#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "kviff/kernel.hpp"
#include "kviff/random.hpp"

using namespace kviff;
using namespace kviff::kernel;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

Matrix random_cloud(int d, int n, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(d, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < d; ++i) m(i, j) = g(rng);
    return m;
}

// Straightforward double loop with the textbook gradient formula.
Vector naive_direction(double h, const Matrix& s, const std::vector<double>& q, const Matrix& t,
                       const Vector& e) {
    Vector out = Vector::Zero(e.size());
    const double n = static_cast<double>(s.cols());
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        double ks = std::exp(-(s.col(j) - e).squaredNorm() / h);
        out += (2.0 / h) * (s.col(j) - e) * ks * q[static_cast<std::size_t>(j)] / n;
    }
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
        double kt = std::exp(-(t.col(j) - e).squaredNorm() / h);
        out -= (2.0 / h) * (t.col(j) - e) * kt / n;
    }
    return out;
}

}  // namespace

TEST_CASE("kernel values") {
    auto k = KernelSpec::rbf(10.0);
    CHECK(kernel_eval(k, vec({0.0}), vec({1.0})) == doctest::Approx(0.9048374180359595).epsilon(1e-15));
    auto k1 = KernelSpec::rbf(1.0);
    CHECK(kernel_eval(k1, vec({0.0, 0.0}), vec({2.0, 0.0})) == doctest::Approx(0.01831563888873418).epsilon(1e-15));
    CHECK(kernel_eval(k1, vec({1.5, -2.0}), vec({1.5, -2.0})) == 1.0);
}

TEST_CASE("kernel gradient in the second argument") {
    auto k = KernelSpec::rbf(1.0);
    Vector g = kernel_grad2(k, vec({0.0}), vec({1.0}));
    REQUIRE(g.size() == 1);
    CHECK(g(0) == doctest::Approx(-0.7357588823428847).epsilon(1e-15));
}

TEST_CASE("bad kernel inputs") {
    CHECK_THROWS_AS(KernelSpec::rbf(0.0), UsageError);
    CHECK_THROWS_AS(KernelSpec::rbf(-1.0), UsageError);
    CHECK_THROWS_AS(KernelSpec::rbf(std::nan("")), UsageError);
    auto k = KernelSpec::rbf(1.0);
    CHECK_THROWS_AS(kernel_eval(k, vec({0.0}), vec({0.0, 1.0})), UsageError);

    Matrix s = Matrix::Zero(2, 3), t = Matrix::Zero(2, 3);
    std::vector<double> q{1.0, 1.0};
    CHECK_THROWS_AS(kvif_direction(k, s, q, t, Vector::Zero(2)), UsageError);
    std::vector<double> qneg{1.0, -1.0, 3.0};
    CHECK_THROWS_AS(kvif_direction(k, s, qneg, t, Vector::Zero(2)), UsageError);
    std::vector<double> q3{1.0, 1.0, 1.0};
    CHECK_THROWS_AS(kvif_direction(k, s, q3, t, Vector::Zero(3)), UsageError);
}

TEST_CASE("kvif direction with two particles") {
    // one prediction particle at 1 with Q = 1, flow particle and eval point at 0
    auto k = KernelSpec::rbf(1.0);
    Matrix s(1, 1), t(1, 1);
    s << 1.0;
    t << 0.0;
    std::vector<double> q{1.0};
    Vector dir = kvif_direction(k, s, q, t, vec({0.0}));
    // (2/h)(1 - 0) e^{-1} - 0
    CHECK(dir(0) == doctest::Approx(0.7357588823428847).epsilon(1e-15));

    Matrix s2(1, 1);
    s2 << -1.0;
    Vector dir2 = kvif_direction(k, s2, q, t, vec({0.0}));
    CHECK(dir2(0) == doctest::Approx(-0.7357588823428847).epsilon(1e-15));
}

TEST_CASE("svgd direction example") {
    // single particle at the eval point with score 1: k = 1 and grad1 k = 0
    auto k = KernelSpec::rbf(1.0);
    Matrix x(1, 1), score(1, 1);
    x << 0.5;
    score << 1.0;
    Vector dir = svgd_direction(k, x, score, vec({0.5}));
    CHECK(dir(0) == 1.0);
}

TEST_CASE("property: symmetry and antisymmetry") {
    Rng rng(2024);
    std::uniform_real_distribution<double> hd(0.1, 20.0);
    for (int trial = 0; trial < 200; ++trial) {
        int d = 1 + trial % 10;
        Matrix pts = random_cloud(d, 2, rng);
        auto k = KernelSpec::rbf(hd(rng));
        Vector x = pts.col(0), y = pts.col(1);
        CHECK(kernel_eval(k, x, y) == kernel_eval(k, y, x));
        Vector gxy = kernel_grad2(k, x, y), gyx = kernel_grad2(k, y, x);
        for (int i = 0; i < d; ++i) CHECK(gxy(i) == -gyx(i));
        CHECK(kernel_eval(k, x, y) > 0.0);
        CHECK(kernel_eval(k, x, y) <= 1.0);
    }
}

TEST_CASE("property: gradient matches central finite differences") {
    Rng rng(99);
    const double step = 1e-5;
    for (double h : {1.0, 2.0, 10.0}) {
        auto k = KernelSpec::rbf(h);
        for (int d = 1; d <= 10; ++d) {
            Matrix pts = random_cloud(d, 2, rng) * 0.5;
            Vector x = pts.col(0), y = pts.col(1);
            Vector g = kernel_grad2(k, x, y);
            for (int i = 0; i < d; ++i) {
                Vector yp = y, ym = y;
                yp(i) += step;
                ym(i) -= step;
                double fd = (kernel_eval(k, x, yp) - kernel_eval(k, x, ym)) / (2.0 * step);
                double scale = std::max(std::abs(g(i)), 1e-3);
                CHECK(std::abs(fd - g(i)) / scale <= 1e-6);
            }
        }
    }
}

TEST_CASE("property: direction is permutation invariant over particles") {
    Rng rng(5);
    auto k = KernelSpec::rbf(2.0);
    const int d = 3, n = 12;
    Matrix s = random_cloud(d, n, rng), t = random_cloud(d, n, rng);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    std::vector<double> q(n);
    for (auto& v : q) v = u(rng);
    Vector e = random_cloud(d, 1, rng).col(0);
    Vector base = kvif_direction(k, s, q, t, e);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int rep = 0; rep < 10; ++rep) {
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix sp(d, n), tp(d, n);
        std::vector<double> qp(n);
        for (int j = 0; j < n; ++j) {
            sp.col(j) = s.col(perm[j]);
            qp[j] = q[perm[j]];
        }
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int j = 0; j < n; ++j) tp.col(j) = t.col(perm[j]);
        Vector other = kvif_direction(k, sp, qp, tp, e);
        CHECK((other - base).norm() <= 1e-12 * (1.0 + base.norm()));
    }
}

TEST_CASE("property: direction vanishes exactly when the clouds coincide and Q is one") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        int d = 1 + trial % 5;
        Matrix cloud = random_cloud(d, 30, rng);
        std::vector<double> ones(30, 1.0);
        auto k = KernelSpec::rbf(0.5 + trial);
        Matrix dirs = kvif_directions(k, cloud, ones, cloud, cloud);
        CHECK(dirs.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("direction agrees with a naive double loop") {
    Rng rng(3);
    auto k = KernelSpec::rbf(3.0);
    Matrix s = random_cloud(4, 25, rng), t = random_cloud(4, 25, rng);
    std::vector<double> q(25);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (auto& v : q) v = u(rng);
    for (int j = 0; j < 5; ++j) {
        Vector e = t.col(j);
        Vector ref = naive_direction(3.0, s, q, t, e);
        Vector got = kvif_direction(k, s, q, t, e);
        CHECK((got - ref).norm() <= 1e-13);
    }
}

TEST_CASE("batched directions equal pointwise calls bitwise") {
    Rng rng(8);
    auto k = KernelSpec::rbf(1.5);
    Matrix s = random_cloud(5, 40, rng), t = random_cloud(5, 40, rng);
    std::vector<double> q(40);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (auto& v : q) v = u(rng);
    Matrix batch = kvif_directions(k, s, q, t, t);
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
        Vector p = kvif_direction(k, s, q, t, t.col(j));
        for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(batch(i, j) == p(i));
    }
}

TEST_CASE("kernel matrix and median heuristic") {
    Rng rng(1);
    auto k = KernelSpec::rbf(2.0);
    Matrix x = random_cloud(2, 6, rng), y = random_cloud(2, 4, rng);
    Matrix km = kernel_matrix(k, x, y);
    REQUIRE(km.rows() == 6);
    REQUIRE(km.cols() == 4);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 4; ++j) CHECK(km(i, j) == doctest::Approx(kernel_eval(k, x.col(i), y.col(j))).epsilon(1e-15));

    // three points on a line: squared distances 1, 1, 4 -> median 1
    Matrix line(1, 3);
    line << 0.0, 1.0, 2.0;
    CHECK(median_heuristic_bandwidth(line) == doctest::Approx(1.0 / std::log(4.0)));
}
