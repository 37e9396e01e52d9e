#include "kviff/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace kviff::kernel {

KernelSpec KernelSpec::rbf(double bandwidth) {
    KernelSpec spec{Family::rbf, bandwidth};
    spec.validate();
    return spec;
}

void KernelSpec::validate() const {
    require(std::isfinite(bandwidth) && bandwidth > 0.0, "kernel bandwidth must be positive");
}

namespace {

// Canonical |x - y|^2: elementwise differences summed in index order.  Since
// fl(a - b) = -fl(b - a), the value is bitwise symmetric in its arguments.
inline double sqdist(const double* x, const double* y, Eigen::Index d) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
        const double diff = x[c] - y[c];
        s += diff * diff;
    }
    return s;
}

void check_cloud(const Matrix& cloud, Eigen::Index dim, const char* name) {
    if (cloud.rows() != dim)
        throw UsageError(std::string(name) + ": particle dimension does not match evaluation point");
}

// Shared by the pointwise and batched directions so both produce identical
// values.  Clouds are passed transposed (N x d) so every stage is a
// contiguous pass over particles; squared distances accumulate coordinates
// in index order, matching sqdist() bit for bit.
struct KvifScratch {
    Eigen::ArrayXd ks;
    Eigen::ArrayXd kt;
};

void accumulate_kvif(double bandwidth, const Matrix& pred_t, const Eigen::ArrayXd& q, const Matrix& flow_t,
                     const double* e, double* out, KvifScratch& scratch) {
    const Eigen::Index d = pred_t.cols();
    const double inv_h = 1.0 / bandwidth;
    auto& ks = scratch.ks;
    auto& kt = scratch.kt;
    ks.setZero(pred_t.rows());
    kt.setZero(pred_t.rows());
    for (Eigen::Index c = 0; c < d; ++c) {
        ks += (pred_t.col(c).array() - e[c]).square();
        kt += (flow_t.col(c).array() - e[c]).square();
    }
    ks = (-ks * inv_h).exp() * q;
    kt = (-kt * inv_h).exp();
    const double scale = 2.0 * inv_h / static_cast<double>(pred_t.rows());
    for (Eigen::Index c = 0; c < d; ++c)
        out[c] = scale * ((pred_t.col(c).array() - e[c]) * ks - (flow_t.col(c).array() - e[c]) * kt).sum();
}

void check_kvif_inputs(const Matrix& pred, std::span<const double> q, const Matrix& flow,
                       Eigen::Index dim) {
    require(pred.cols() >= 1, "kvif_direction: need at least one particle");
    require(static_cast<std::size_t>(pred.cols()) == q.size() && pred.cols() == flow.cols(),
            "kvif_direction: prediction particles, likelihood ratios and flow particles must have equal length");
    check_cloud(pred, dim, "kvif_direction prediction particles");
    check_cloud(flow, dim, "kvif_direction flow particles");
    for (double v : q) require(v >= 0.0, "kvif_direction: negative likelihood ratio");
}

}  // namespace

double squared_distance(VectorRef x, VectorRef y) {
    require(x.size() == y.size(), "squared_distance: dimension mismatch");
    return sqdist(x.data(), y.data(), x.size());
}

double kernel_eval(const KernelSpec& spec, VectorRef x, VectorRef y) {
    require(x.size() == y.size(), "kernel_eval: dimension mismatch");
    return std::exp(-sqdist(x.data(), y.data(), x.size()) / spec.bandwidth);
}

Vector kernel_grad2(const KernelSpec& spec, VectorRef x, VectorRef y) {
    require(x.size() == y.size(), "kernel_grad2: dimension mismatch");
    const double k = std::exp(-sqdist(x.data(), y.data(), x.size()) / spec.bandwidth);
    return (2.0 / spec.bandwidth) * k * (x - y);
}

Vector kvif_direction(const KernelSpec& spec, const Matrix& prediction_particles,
                      std::span<const double> normalized_likelihood,
                      const Matrix& flow_particles, const Vector& eval_point) {
    check_kvif_inputs(prediction_particles, normalized_likelihood, flow_particles, eval_point.size());
    const Matrix pred_t = prediction_particles.transpose();
    const Matrix flow_t = flow_particles.transpose();
    const Eigen::ArrayXd q = Eigen::Map<const Eigen::ArrayXd>(normalized_likelihood.data(), pred_t.rows());
    Vector out(eval_point.size());
    KvifScratch scratch;
    accumulate_kvif(spec.bandwidth, pred_t, q, flow_t, eval_point.data(), out.data(), scratch);
    return out;
}

Matrix kvif_directions(const KernelSpec& spec, const Matrix& prediction_particles,
                       std::span<const double> normalized_likelihood,
                       const Matrix& flow_particles, const Matrix& eval_points) {
    check_kvif_inputs(prediction_particles, normalized_likelihood, flow_particles, eval_points.rows());
    const Matrix pred_t = prediction_particles.transpose();
    const Matrix flow_t = flow_particles.transpose();
    const Eigen::ArrayXd q = Eigen::Map<const Eigen::ArrayXd>(normalized_likelihood.data(), pred_t.rows());
    Matrix out(eval_points.rows(), eval_points.cols());
    KvifScratch scratch;
    for (Eigen::Index i = 0; i < eval_points.cols(); ++i)
        accumulate_kvif(spec.bandwidth, pred_t, q, flow_t, eval_points.col(i).data(), out.col(i).data(), scratch);
    return out;
}

Vector svgd_direction(const KernelSpec& spec, const Matrix& particles, const Matrix& score_values,
                      const Vector& eval_point) {
    require(particles.cols() >= 1, "svgd_direction: need at least one particle");
    require(particles.cols() == score_values.cols() && particles.rows() == score_values.rows(),
            "svgd_direction: particles and scores must have equal shape");
    check_cloud(particles, eval_point.size(), "svgd_direction particles");
    const Eigen::Index d = particles.rows();
    const double inv_h = 1.0 / spec.bandwidth;
    Vector out = Vector::Zero(d);
    for (Eigen::Index j = 0; j < particles.cols(); ++j) {
        const double* x = particles.col(j).data();
        const double k = std::exp(-sqdist(x, eval_point.data(), d) * inv_h);
        // grad1 k(x, e) = -(2/h)(x - e) k
        for (Eigen::Index c = 0; c < d; ++c)
            out[c] += k * score_values(c, j) - 2.0 * inv_h * (x[c] - eval_point[c]) * k;
    }
    return out / static_cast<double>(particles.cols());
}

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& xs, const Matrix& ys) {
    require(xs.rows() == ys.rows(), "kernel_matrix: dimension mismatch");
    Matrix out(xs.cols(), ys.cols());
    const double inv_h = 1.0 / spec.bandwidth;
    for (Eigen::Index j = 0; j < ys.cols(); ++j)
        for (Eigen::Index i = 0; i < xs.cols(); ++i)
            out(i, j) = std::exp(-sqdist(xs.col(i).data(), ys.col(j).data(), xs.rows()) * inv_h);
    return out;
}

double median_heuristic_bandwidth(const Matrix& particles) {
    const Eigen::Index n = particles.cols();
    if (n < 2) return 1.0;
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            d2.push_back(sqdist(particles.col(i).data(), particles.col(j).data(), particles.rows()));
    auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
    std::nth_element(d2.begin(), mid, d2.end());
    const double med = *mid;
    return med > 0.0 ? med / std::log(static_cast<double>(n) + 1.0) : 1.0;
}

}  // namespace kviff::kernel
