#include <cmath>
#include <limits>
#include <numbers>

#include "kviff/models.hpp"

namespace kviff::models {

namespace {

constexpr double kPsdTolerance = 1e-10;

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

NoiseSpec NoiseSpec::gaussian(Vector mean, Matrix covariance) {
    const auto m = mean.size();
    require(m >= 1, "gaussian noise: empty mean");
    if (covariance.rows() != m || covariance.cols() != m)
        throw InvalidCovariance("gaussian noise: covariance shape does not match mean");
    const double scale = std::max(1.0, max_abs(covariance));
    if (!covariance.allFinite() || max_abs(covariance - covariance.transpose()) > kPsdTolerance * scale)
        throw InvalidCovariance("gaussian noise: covariance is not symmetric");

    NoiseSpec n;
    n.kind_ = NoiseKind::gaussian;
    n.dim_ = static_cast<int>(m);
    n.mean_ = std::move(mean);
    n.covariance_ = 0.5 * (covariance + covariance.transpose());

    Eigen::LLT<Matrix> llt(n.covariance_);
    if (llt.info() == Eigen::Success && (llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
        n.factor_ = llt.matrixL();
        n.chol_ = n.factor_;
        n.full_rank_ = true;
        n.log_norm_ = -0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi) -
                      n.chol_.diagonal().array().log().sum();
        return n;
    }

    // Semi-definite: factor through the eigendecomposition.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(n.covariance_);
    if (eig.info() != Eigen::Success)
        throw InvalidCovariance("gaussian noise: eigendecomposition failed");
    const Vector lambda = eig.eigenvalues();
    if (lambda.minCoeff() < -kPsdTolerance * scale)
        throw InvalidCovariance("gaussian noise: covariance is not positive semi-definite");
    const double cutoff = kPsdTolerance * scale;
    n.eigvecs_ = eig.eigenvectors();
    n.eigvals_ = lambda.unaryExpr([cutoff](double v) { return v > cutoff ? v : 0.0; });
    n.factor_ = n.eigvecs_ * n.eigvals_.cwiseSqrt().asDiagonal();
    if (n.eigvals_.isZero(0.0)) n.factor_.setZero();
    n.full_rank_ = false;
    double log_norm = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        if (n.eigvals_[i] > 0.0) log_norm -= 0.5 * std::log(2.0 * std::numbers::pi * n.eigvals_[i]);
    n.log_norm_ = log_norm;
    return n;
}

NoiseSpec NoiseSpec::gaussian_iso(int dim, double variance, double mean) {
    require(dim >= 1, "gaussian noise: dimension must be positive");
    return gaussian(Vector::Constant(dim, mean), variance * Matrix::Identity(dim, dim));
}

NoiseSpec NoiseSpec::cauchy(Vector location, double scale) {
    require(location.size() >= 1, "cauchy noise: empty location");
    require(std::isfinite(scale) && scale > 0.0, "cauchy noise: scale must be positive");
    NoiseSpec n;
    n.kind_ = NoiseKind::cauchy;
    n.dim_ = static_cast<int>(location.size());
    n.location_ = std::move(location);
    n.scale_ = scale;
    return n;
}

NoiseSpec NoiseSpec::lognormal(int dim, double log_mean, double log_std) {
    require(dim >= 1, "lognormal noise: dimension must be positive");
    require(std::isfinite(log_std) && log_std > 0.0, "lognormal noise: log_std must be positive");
    NoiseSpec n;
    n.kind_ = NoiseKind::lognormal;
    n.dim_ = dim;
    n.log_mean_ = log_mean;
    n.log_std_ = log_std;
    return n;
}

double NoiseSpec::log_density(const Vector& value) const {
    if (kind_ != NoiseKind::gaussian)
        throw UsageError("log_density: only gaussian noise laws have an assumed likelihood");
    require(value.size() == dim_, "log_density: dimension mismatch");
    const Vector r = value - mean_;
    if (full_rank_) {
        const Vector z = chol_.triangularView<Eigen::Lower>().solve(r);
        return log_norm_ - 0.5 * z.squaredNorm();
    }
    const Vector proj = eigvecs_.transpose() * r;
    double quad = 0.0;
    for (Eigen::Index i = 0; i < proj.size(); ++i) {
        if (eigvals_[i] > 0.0)
            quad += proj[i] * proj[i] / eigvals_[i];
        else if (std::abs(proj[i]) > kPsdTolerance * std::max(1.0, r.cwiseAbs().maxCoeff()))
            return -std::numeric_limits<double>::infinity();
    }
    return log_norm_ - 0.5 * quad;
}

Vector sample_noise(const NoiseSpec& noise, Rng& rng) {
    const int d = noise.dim();
    Vector out(d);
    switch (noise.kind()) {
        case NoiseKind::gaussian: {
            std::normal_distribution<double> normal(0.0, 1.0);
            Vector z(d);
            for (int i = 0; i < d; ++i) z[i] = normal(rng);
            out = noise.mean() + noise.factor() * z;
            break;
        }
        case NoiseKind::cauchy: {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            for (int i = 0; i < d; ++i)
                out[i] = noise.location()[i] + noise.scale() * std::tan(std::numbers::pi * (unif(rng) - 0.5));
            break;
        }
        case NoiseKind::lognormal: {
            std::normal_distribution<double> normal(0.0, 1.0);
            for (int i = 0; i < d; ++i) out[i] = std::exp(noise.log_mean() + noise.log_std() * normal(rng));
            break;
        }
    }
    return out;
}

}  // namespace kviff::models
