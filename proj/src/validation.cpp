#include "kviff/validation.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kviff/filters.hpp"
#include "kviff/random.hpp"

namespace kviff::validation {

namespace {

double normal_pdf(double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

oracle::Grid1D gaussian_grid(const DescentSetup& s, double mean) {
    return oracle::Grid1D::from_function(s.lo, s.hi, s.nodes, [mean](double x) { return normal_pdf(x, mean, 1.0); })
        .normalized();
}

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(3);
    o << std::scientific << v;
    return o.str();
}

}  // namespace

DescentReport fokker_planck_descent(const DescentSetup& setup) {
    const auto start = std::chrono::steady_clock::now();
    const auto kernel = kernel::KernelSpec::rbf(setup.bandwidth);
    const auto p = gaussian_grid(setup, setup.target_mean);
    auto q = gaussian_grid(setup, setup.initial_mean);
    const oracle::FokkerPlanckIntegrator flow(kernel, p);

    DescentReport rep;
    rep.initial_loss = flow.loss(q);
    rep.losses.push_back(rep.initial_loss);
    rep.max_delta = -INFINITY;
    for (int n = 0; n < setup.steps; ++n) {
        auto step = flow.step(q, setup.dt_flow);
        q = std::move(step.q);
        rep.max_clipped_mass = std::max(rep.max_clipped_mass, step.clipped_mass);
        const double loss = flow.loss(q);
        rep.max_delta = std::max(rep.max_delta, loss - rep.losses.back());
        rep.losses.push_back(loss);
    }
    rep.steps = setup.steps;
    rep.final_loss = rep.losses.back();
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

FixedPointReport grid_fixed_point(const DescentSetup& setup) {
    const auto kernel = kernel::KernelSpec::rbf(setup.bandwidth);
    const auto p = gaussian_grid(setup, setup.target_mean);
    const oracle::FokkerPlanckIntegrator flow(kernel, p);
    FixedPointReport rep;
    rep.max_abs_velocity = flow.velocity(p).cwiseAbs().maxCoeff();
    const auto step = flow.step(p, setup.dt_flow);
    rep.max_abs_change = (step.q.values - p.values).cwiseAbs().maxCoeff();
    return rep;
}

KfGridReport kf_vs_grid(const ScalarLinearModel& m, double lo, double hi, int nodes) {
    KfGridReport rep;
    Rng rng = make_rng(m.seed, {0x6b66ULL});
    std::normal_distribution<double> normal(0.0, 1.0);
    double x = m.prior_mean + std::sqrt(m.prior_var) * normal(rng);
    for (int k = 0; k < m.steps; ++k) {
        x = m.a * x + std::sqrt(m.process_var) * normal(rng);
        rep.observations.push_back(x + std::sqrt(m.measurement_var) * normal(rng));
    }

    filters::GaussianBelief belief{Vector::Constant(1, m.prior_mean), Matrix::Constant(1, 1, m.prior_var)};
    const Matrix A = Matrix::Constant(1, 1, m.a);
    const Matrix Q = Matrix::Constant(1, 1, m.process_var);
    const Matrix H = Matrix::Identity(1, 1);
    const Matrix R = Matrix::Constant(1, 1, m.measurement_var);

    auto grid = oracle::Grid1D::from_function(lo, hi, nodes, [&](double s) {
                    return normal_pdf(s, m.prior_mean, m.prior_var);
                }).normalized();
    for (int k = 0; k < m.steps; ++k) {
        const double y = rep.observations[static_cast<std::size_t>(k)];
        belief = filters::kf_update(filters::kf_predict(belief, A, Q), H, R, Vector::Constant(1, y));
        rep.kf_means.push_back(belief.mean[0]);
        rep.kf_vars.push_back(belief.covariance(0, 0));

        grid = oracle::grid_predict(grid, [&](double to, double from) {
            return normal_pdf(to, m.a * from, m.process_var);
        });
        grid = oracle::grid_bayes_update(grid, [&](double s) {
            return -0.5 * (y - s) * (y - s) / m.measurement_var;
        });
        rep.grid_means.push_back(grid.mean());
        rep.grid_vars.push_back(grid.variance());
        rep.max_mean_diff = std::max(rep.max_mean_diff, std::abs(rep.grid_means.back() - rep.kf_means.back()));
        rep.max_var_diff = std::max(rep.max_var_diff, std::abs(rep.grid_vars.back() - rep.kf_vars.back()));
    }
    return rep;
}

GradientCheckReport gradient_fd_sweep(const GradientFn& gradient, double step, std::uint64_t seed) {
    Rng rng = make_rng(seed, {0x6664ULL});
    std::normal_distribution<double> normal(0.0, 1.0);
    GradientCheckReport rep;
    for (double h : {1.0, 2.0, 10.0}) {
        const auto kernel = kernel::KernelSpec::rbf(h);
        for (int d = 1; d <= 10; ++d) {
            for (int trial = 0; trial < 5; ++trial) {
                // Pairs at a distance where the kernel is neither ~1 nor ~0.
                const double scale = std::sqrt(h / static_cast<double>(d));
                Vector x(d), y(d);
                for (int c = 0; c < d; ++c) {
                    x[c] = scale * normal(rng);
                    y[c] = scale * normal(rng);
                }
                const Vector g = gradient(kernel, x, y);
                Vector fd(d);
                for (int c = 0; c < d; ++c) {
                    Vector yp = y, ym = y;
                    yp[c] += step;
                    ym[c] -= step;
                    fd[c] = (kernel::kernel_eval(kernel, x, yp) - kernel::kernel_eval(kernel, x, ym)) / (2.0 * step);
                }
                const double rel = (g - fd).norm() / std::max(fd.norm(), 1e-300);
                rep.max_relative_error = std::max(rep.max_relative_error, rel);
                ++rep.cases;
            }
        }
    }
    return rep;
}

std::vector<CheckResult> run_validation(const ValidationOptions& options) {
    std::vector<CheckResult> out;
    {
        const auto r = fokker_planck_descent();
        const bool ok = r.max_delta <= 1e-10 && r.max_clipped_mass < 1e-6;
        out.push_back({"fokker-planck-descent", ok,
                       "steps=" + std::to_string(r.steps) + " max_dL=" + fmt(r.max_delta) + " L0=" +
                           fmt(r.initial_loss) + " L_end=" + fmt(r.final_loss) +
                           " max_clipped=" + fmt(r.max_clipped_mass)});
    }
    {
        const auto r = grid_fixed_point();
        const bool ok = r.max_abs_velocity <= 1e-12 && r.max_abs_change <= 1e-12;
        out.push_back({"fixed-point", ok,
                       "max|phi|=" + fmt(r.max_abs_velocity) + " max|dq|=" + fmt(r.max_abs_change)});
    }
    {
        const auto r = kf_vs_grid();
        const bool ok = r.max_mean_diff <= 1e-3;
        out.push_back({"kf-vs-grid", ok,
                       "max|mean diff|=" + fmt(r.max_mean_diff) + " max|var diff|=" + fmt(r.max_var_diff)});
    }
    {
        const auto r = gradient_fd_sweep(options.gradient);
        const bool ok = r.max_relative_error <= 1e-6;
        out.push_back({"kernel-gradient-fd", ok,
                       "cases=" + std::to_string(r.cases) + " max_rel_err=" + fmt(r.max_relative_error)});
    }
    return out;
}

}  // namespace kviff::validation
