#include "kviff/oracle.hpp"

#include <cmath>

namespace kviff::oracle {

Grid1D Grid1D::from_function(double lo, double hi, int n, const std::function<double(double)>& density) {
    Grid1D g{lo, hi, Vector(n)};
    g.validate();
    for (int i = 0; i < n; ++i) g.values[i] = density(g.node(i));
    return g;
}

void Grid1D::validate() const {
    require(lo < hi, "grid: lo must be below hi");
    require(values.size() >= 2, "grid: need at least two nodes");
}

Vector Grid1D::nodes() const {
    Vector x(values.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = node(i);
    return x;
}

Vector Grid1D::weights() const {
    Vector w = Vector::Constant(values.size(), spacing());
    w[0] *= 0.5;
    w[w.size() - 1] *= 0.5;
    return w;
}

double Grid1D::integral() const { return weights().dot(values); }

double Grid1D::mean() const { return weights().cwiseProduct(nodes()).dot(values) / integral(); }

double Grid1D::variance() const {
    const double m = mean();
    const Vector dx = nodes().array() - m;
    return weights().cwiseProduct(dx.cwiseAbs2()).dot(values) / integral();
}

Grid1D Grid1D::normalized() const {
    Grid1D g = *this;
    g.values /= integral();
    return g;
}

bool Grid1D::same_grid(const Grid1D& other) const {
    return lo == other.lo && hi == other.hi && size() == other.size();
}

Grid1D grid_bayes_update(const Grid1D& prior, const std::function<double(double)>& log_lik) {
    prior.validate();
    Grid1D post = prior;
    for (Eigen::Index i = 0; i < post.size(); ++i) post.values[i] *= std::exp(log_lik(post.node(i)));
    const double mass = post.integral();
    if (!(mass >= 1e-300)) throw NumericalError("grid_bayes_update: posterior mass underflow (degenerate likelihood)");
    post.values /= mass;
    return post;
}

Grid1D grid_predict(const Grid1D& prior, const std::function<double(double, double)>& transition_density) {
    prior.validate();
    const Vector w = prior.weights();
    Grid1D out = prior;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        const double to = prior.node(i);
        for (Eigen::Index j = 0; j < prior.size(); ++j)
            acc += w[j] * transition_density(to, prior.node(j)) * prior.values[j];
        out.values[i] = acc;
    }
    return out;
}

namespace {

Matrix node_row(const Grid1D& g) { return g.nodes().transpose(); }

}  // namespace

double weighted_l2_loss(const kernel::KernelSpec& kernel, const Grid1D& p, const Grid1D& q) {
    require(p.same_grid(q), "weighted_l2_loss: p and q live on different grids");
    const Vector v = p.weights().cwiseProduct(p.values - q.values);
    const Matrix x = node_row(p);
    return v.dot(kernel::kernel_matrix(kernel, x, x) * v);
}

FokkerPlanckIntegrator::FokkerPlanckIntegrator(const kernel::KernelSpec& kernel, const Grid1D& target)
    : kernel_(kernel), target_(target), weights_(target.weights()) {
    kernel_.validate();
    target_.validate();
    const Matrix x = node_row(target_);
    gram_ = kernel::kernel_matrix(kernel_, x, x);
    const Vector nodes = target_.nodes();
    const auto n = nodes.size();
    grad_.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            grad_(i, j) = 2.0 / kernel_.bandwidth * (nodes[j] - nodes[i]) * gram_(i, j);
}

Vector FokkerPlanckIntegrator::velocity(const Grid1D& q) const {
    require(q.same_grid(target_), "fokker_planck: q lives on a different grid");
    return grad_ * weights_.cwiseProduct(target_.values - q.values);
}

double FokkerPlanckIntegrator::loss(const Grid1D& q) const {
    require(q.same_grid(target_), "fokker_planck: q lives on a different grid");
    const Vector v = weights_.cwiseProduct(target_.values - q.values);
    return v.dot(gram_ * v);
}

FlowStepReport FokkerPlanckIntegrator::step(const Grid1D& q, double dt_flow) const {
    require(dt_flow > 0.0, "fokker_planck_step: dt_flow must be positive");
    const Vector phi = velocity(q);
    const Vector flux = q.values.cwiseProduct(phi);
    const auto n = flux.size();
    const double dx = q.spacing();

    // Divergence consistent with trapezoid weights so total mass is conserved.
    Vector div(n);
    div[0] = (flux[0] + flux[1]) / dx;
    for (Eigen::Index i = 1; i + 1 < n; ++i) div[i] = (flux[i + 1] - flux[i - 1]) / (2.0 * dx);
    div[n - 1] = -(flux[n - 2] + flux[n - 1]) / dx;

    FlowStepReport rep;
    rep.q = q;
    rep.q.values = q.values - dt_flow * div;
    rep.mass_before_clip = rep.q.integral();
    rep.max_abs_velocity = phi.cwiseAbs().maxCoeff();

    const Vector w = q.weights();
    for (Eigen::Index i = 0; i < n; ++i)
        if (rep.q.values[i] < 0.0) {
            rep.clipped_mass -= w[i] * rep.q.values[i];
            rep.q.values[i] = 0.0;
        }

    auto total_variation = [](const Vector& v) {
        double tv = 0.0;
        for (Eigen::Index i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
        return tv;
    };
    if (total_variation(rep.q.values) > 10.0 * total_variation(q.values) + 1e-300)
        throw NumericalError("fokker_planck_step: total variation grew more than 10x; reduce dt_flow");

    rep.q.values /= rep.q.integral();
    return rep;
}

FlowStepReport fokker_planck_step(const kernel::KernelSpec& kernel, const Grid1D& p, const Grid1D& q,
                                  double dt_flow) {
    require(p.same_grid(q), "fokker_planck_step: p and q live on different grids");
    return FokkerPlanckIntegrator(kernel, p).step(q, dt_flow);
}

namespace {

double mean_self_kernel(const kernel::KernelSpec& kernel, const Matrix& xs) {
    const Eigen::Index n = xs.cols();
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) off += kernel::kernel_eval(kernel, xs.col(i), xs.col(j));
    const double nn = static_cast<double>(n);
    return (static_cast<double>(n) + 2.0 * off) / (nn * nn);
}

}  // namespace

double mmd2_estimate(const kernel::KernelSpec& kernel, const Matrix& xs, const Matrix& ys) {
    require(xs.cols() >= 1 && ys.cols() >= 1, "mmd2_estimate: empty sample set");
    require(xs.rows() == ys.rows(), "mmd2_estimate: dimension mismatch");
    double cross = 0.0;
    for (Eigen::Index i = 0; i < xs.cols(); ++i)
        for (Eigen::Index j = 0; j < ys.cols(); ++j) cross += kernel::kernel_eval(kernel, xs.col(i), ys.col(j));
    cross /= static_cast<double>(xs.cols()) * static_cast<double>(ys.cols());
    return mean_self_kernel(kernel, xs) + mean_self_kernel(kernel, ys) - 2.0 * cross;
}

}  // namespace kviff::oracle
