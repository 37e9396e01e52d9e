#include "kviff/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kviff::filters {

void KvifConfig::validate() const {
    kernel.validate();
    require(num_steps >= 0, "kviff: num_steps must be non-negative");
    require(num_steps == 0 || (std::isfinite(step_size) && step_size > 0.0),
            "kviff: epsilon must be positive when num_steps > 0");
}

Initializer parse_initializer(const std::string& name) {
    if (name == "raw") return Initializer::raw;
    if (name == "pf") return Initializer::pf;
    if (name == "enkf") return Initializer::enkf;
    throw UsageError("unknown kviff initializer '" + name + "' (expected raw, pf or enkf)");
}

std::string to_string(Initializer init) {
    switch (init) {
        case Initializer::raw: return "raw";
        case Initializer::pf: return "pf";
        case Initializer::enkf: return "enkf";
    }
    return "?";
}

Ensemble predict(const StateSpaceModel& model, const Ensemble& ensemble, Rng& rng) {
    require(ensemble.dim() == model.dim_x, "predict: ensemble dimension does not match model");
    Ensemble out{Matrix(ensemble.dim(), ensemble.size()), ensemble.step + 1};
    for (Eigen::Index i = 0; i < ensemble.size(); ++i)
        out.particles.col(i) = model.transition(ensemble.step, ensemble.particles.col(i)) +
                               models::sample_noise(model.process_noise, rng);
    return out;
}

namespace {

// exp(l_i - max) with NaN treated as -inf; returns false if nothing survives.
bool shifted_exponentials(std::span<const double> log_lik, std::vector<double>& e) {
    e.assign(log_lik.size(), 0.0);
    double m = -std::numeric_limits<double>::infinity();
    for (double l : log_lik)
        if (!std::isnan(l)) m = std::max(m, l);
    if (m == -std::numeric_limits<double>::infinity()) return false;
    for (std::size_t i = 0; i < log_lik.size(); ++i) {
        const double l = log_lik[i];
        if (std::isnan(l)) continue;
        if (std::isinf(m))  // some +inf entries: they share the mass
            e[i] = (l == m) ? 1.0 : 0.0;
        else
            e[i] = std::exp(l - m);
    }
    return true;
}

}  // namespace

std::vector<double> weights_from_log_likelihoods(std::span<const double> log_lik) {
    require(!log_lik.empty(), "normalized_weights: empty ensemble");
    const double n = static_cast<double>(log_lik.size());
    std::vector<double> e;
    if (!shifted_exponentials(log_lik, e)) return std::vector<double>(log_lik.size(), 1.0 / n);
    double total = 0.0;
    for (double v : e) total += v;
    for (double& v : e) v /= total;
    return e;
}

std::vector<double> likelihood_ratios_from_log_likelihoods(std::span<const double> log_lik) {
    require(!log_lik.empty(), "likelihood ratios: empty ensemble");
    std::vector<double> e;
    if (!shifted_exponentials(log_lik, e)) return std::vector<double>(log_lik.size(), 1.0);
    double total = 0.0;
    for (double v : e) total += v;
    const double scale = static_cast<double>(log_lik.size()) / total;
    for (double& v : e) v *= scale;
    return e;
}

std::vector<double> ensemble_log_likelihoods(const StateSpaceModel& model, const Ensemble& ensemble,
                                             const Vector& y_effective) {
    std::vector<double> ll(static_cast<std::size_t>(ensemble.size()));
    for (Eigen::Index i = 0; i < ensemble.size(); ++i)
        ll[static_cast<std::size_t>(i)] =
            models::log_likelihood(model, ensemble.step, y_effective, ensemble.particles.col(i));
    return ll;
}

std::vector<double> normalized_weights(const StateSpaceModel& model, const Ensemble& ensemble,
                                       const Vector& y_effective) {
    return weights_from_log_likelihoods(ensemble_log_likelihoods(model, ensemble, y_effective));
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights, double offset) {
    const std::size_t n = weights.size();
    require(n >= 1, "systematic_resample: empty weights");
    double total = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
        require(weights[i] >= 0.0, "systematic_resample: negative weight");
        if (weights[i] > 0.0) last_positive = i;
        total += weights[i];
    }
    require(std::abs(total - 1.0) <= 1e-9, "systematic_resample: weights must sum to 1");
    const double inv_n = 1.0 / static_cast<double>(n);
    require(offset >= 0.0 && offset < inv_n, "systematic_resample: offset must lie in [0, 1/N)");

    std::vector<std::size_t> idx(n);
    std::size_t j = 0;
    double cum = weights[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = offset + static_cast<double>(i) * inv_n;
        while (j < last_positive && pos >= cum) cum += weights[++j];
        idx[i] = j;
    }
    return idx;
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights, Rng& rng) {
    require(!weights.empty(), "systematic_resample: empty weights");
    std::uniform_real_distribution<double> unif(0.0, 1.0 / static_cast<double>(weights.size()));
    const double u = unif(rng);
    return systematic_resample(weights, std::min(u, std::nextafter(1.0 / static_cast<double>(weights.size()), 0.0)));
}

Vector estimate(const Ensemble& ensemble) {
    require(ensemble.size() >= 1, "estimate: empty ensemble");
    // Shifted by the first particle so an ensemble of identical states
    // returns that state exactly.
    const Vector ref = ensemble.particles.col(0);
    Vector acc = Vector::Zero(ensemble.dim());
    for (Eigen::Index i = 1; i < ensemble.size(); ++i) acc += ensemble.particles.col(i) - ref;
    return ref + acc / static_cast<double>(ensemble.size());
}

Ensemble pf_update(const StateSpaceModel& model, const Ensemble& ensemble, const Vector& y_effective,
                   Rng& rng) {
    const auto w = normalized_weights(model, ensemble, y_effective);
    const auto idx = systematic_resample(w, rng);
    Ensemble out{Matrix(ensemble.dim(), ensemble.size()), ensemble.step};
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.particles.col(static_cast<Eigen::Index>(i)) = ensemble.particles.col(static_cast<Eigen::Index>(idx[i]));
    return out;
}

Eigen::LLT<Matrix> robust_cholesky(const Matrix& s, const char* what) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() == Eigen::Success) return llt;
    const Matrix eye = Matrix::Identity(s.rows(), s.cols());
    for (double jitter = 1e-12; jitter <= 1e-6 * (1 + 1e-9); jitter *= 10.0) {
        llt.compute(s + jitter * eye);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw NumericalError(std::string(what) + ": innovation covariance is not positive definite after jitter 1e-6");
}

Ensemble enkf_update(const StateSpaceModel& model, const Ensemble& ensemble, const Vector& y_effective,
                     Rng& rng) {
    const Eigen::Index n = ensemble.size();
    require(n >= 2, "enkf_update: need at least two particles");
    require(y_effective.size() == model.dim_y, "enkf_update: observation dimension mismatch");
    const int m = model.dim_y;

    Matrix z(m, n);
    for (Eigen::Index i = 0; i < n; ++i) z.col(i) = model.measurement(ensemble.step, ensemble.particles.col(i));
    const Vector x_mean = estimate(ensemble);
    const Vector z_mean = estimate(Ensemble{z, ensemble.step});
    const Matrix xd = ensemble.particles.colwise() - x_mean;
    const Matrix zd = z.colwise() - z_mean;
    const double denom = static_cast<double>(n - 1);
    const Matrix c_xz = xd * zd.transpose() / denom;
    const Matrix c_zz = zd * zd.transpose() / denom;
    const auto& noise = model.measurement_noise;
    const Matrix s = c_zz + noise.covariance();
    const auto llt = robust_cholesky(0.5 * (s + s.transpose()), "enkf_update");
    const Matrix gain = llt.solve(c_xz.transpose()).transpose();

    Ensemble out{ensemble.particles, ensemble.step};
    std::normal_distribution<double> normal(0.0, 1.0);
    const Vector y_centered = y_effective - noise.mean();
    Vector e(m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int r = 0; r < m; ++r) e[r] = normal(rng);
        const Vector innovation = y_centered + noise.factor() * e - z.col(i);
        out.particles.col(i) += gain * innovation;
    }
    return out;
}

GaussianBelief kf_predict(const GaussianBelief& belief, const Matrix& A, const Matrix& Q) {
    require(A.cols() == belief.mean.size() && A.rows() == Q.rows() && Q.rows() == Q.cols(),
            "kf_predict: dimension mismatch");
    GaussianBelief out;
    out.mean = A * belief.mean;
    out.covariance = A * belief.covariance * A.transpose() + Q;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    return out;
}

GaussianBelief kf_update(const GaussianBelief& belief, const Matrix& H, const Matrix& R, const Vector& y) {
    require(H.cols() == belief.mean.size() && H.rows() == R.rows() && R.rows() == R.cols() &&
                y.size() == H.rows(),
            "kf_update: dimension mismatch");
    const Matrix s = H * belief.covariance * H.transpose() + R;
    const auto llt = robust_cholesky(0.5 * (s + s.transpose()), "kf_update");
    const Matrix gain = llt.solve(H * belief.covariance).transpose();  // P H^T S^-1
    GaussianBelief out;
    out.mean = belief.mean + gain * (y - H * belief.mean);
    const Matrix eye = Matrix::Identity(belief.mean.size(), belief.mean.size());
    out.covariance = (eye - gain * H) * belief.covariance;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    return out;
}

}  // namespace kviff::filters
