#include <cmath>

#include "kviff/models.hpp"

namespace kviff::models {

namespace {

constexpr double kDt = 0.1;
constexpr double kInitVariance = 0.1;

NoiseSpec init_law(const Vector& x0) {
    const auto d = static_cast<int>(x0.size());
    return NoiseSpec::gaussian(x0, kInitVariance * Matrix::Identity(d, d));
}

}  // namespace

Matrix linear10d_drift() {
    constexpr int d = 10;
    Matrix a = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        a(i, i) = -0.5;
        if (i + 1 < d) a(i, i + 1) = 0.1;
    }
    return a;
}

ScenarioSpec build_linear10d(LinearVariant variant) {
    constexpr int d = 10;
    const Matrix F = Matrix::Identity(d, d) + kDt * linear10d_drift();
    const Matrix H = Matrix::Identity(d, d);

    ScenarioSpec s;
    s.model.dim_x = d;
    s.model.dim_y = d;
    s.model.transition = [F](int, const Vector& x) -> Vector { return F * x; };
    s.model.measurement = [](int, const Vector& x) -> Vector { return x; };
    s.model.process_noise = NoiseSpec::gaussian_iso(d, kDt);
    s.model.measurement_noise = NoiseSpec::gaussian_iso(d, 0.1);
    s.model.linear = LinearStructure{F, H};
    s.data_transition = s.model.transition;
    s.data_process_noise = s.model.process_noise;
    s.data_measurement_noise = s.model.measurement_noise;
    s.dt = kDt;
    s.horizon = 100;
    s.x0_truth = Vector::Zero(d);
    s.init_ensemble = init_law(s.x0_truth);

    switch (variant) {
        case LinearVariant::nominal:
            s.name = "linear10d";
            s.description = "none (data laws = filter laws)";
            break;
        case LinearVariant::biased:
            s.name = "linear10d-bias";
            s.description = "data process noise mean 0.2 per dimension";
            s.data_process_noise = NoiseSpec::gaussian_iso(d, kDt, 0.2);
            break;
        case LinearVariant::correlated: {
            s.name = "linear10d-corr";
            s.description = "data process covariance dt(I + (E + E^T)/2), E superdiagonal 0.3";
            Matrix e = Matrix::Zero(d, d);
            for (int i = 0; i + 1 < d; ++i) e(i, i + 1) = 0.3;
            const Matrix cov = kDt * (Matrix::Identity(d, d) + 0.5 * (e + e.transpose()));
            s.data_process_noise = NoiseSpec::gaussian(Vector::Zero(d), cov);
            break;
        }
    }
    return s;
}

ScenarioSpec build_cubic_sensor(int dim, CubicVariant variant) {
    require(dim >= 1, "build_cubic_sensor: dimension must be >= 1");
    ScenarioSpec s;
    s.model.dim_x = dim;
    s.model.dim_y = dim;
    s.model.transition = [](int, const Vector& x) -> Vector {
        return x + kDt * x.array().cos().matrix();
    };
    s.model.measurement = [](int, const Vector& x) -> Vector { return kDt * x.array().cube().matrix(); };
    s.model.cumulative_observation = true;
    s.model.process_noise = NoiseSpec::gaussian_iso(dim, kDt);
    s.model.measurement_noise = NoiseSpec::gaussian_iso(dim, kDt);
    s.data_transition = s.model.transition;
    s.data_process_noise = s.model.process_noise;
    s.data_measurement_noise = s.model.measurement_noise;
    s.dt = kDt;
    s.horizon = dim == 2 ? 200 : 100;
    s.x0_truth = Vector::Zero(dim);
    s.init_ensemble = init_law(s.x0_truth);

    const std::string prefix = "cubic" + std::to_string(dim) + "d";
    switch (variant) {
        case CubicVariant::nominal:
            s.name = prefix;
            s.description = "none (data laws = filter laws)";
            break;
        case CubicVariant::cauchy:
            s.name = prefix + "-cauchy";
            s.description = "data measurement noise Cauchy(0, sqrt(dt)) per dimension";
            s.data_measurement_noise = NoiseSpec::cauchy(Vector::Zero(dim), std::sqrt(kDt));
            break;
        case CubicVariant::lognormal_bias:
            s.name = prefix + "-lognormal-bias";
            s.description = "data measurement noise lognormal(0, sqrt(dt)); data process mean 0.3";
            s.data_measurement_noise = NoiseSpec::lognormal(dim, 0.0, std::sqrt(kDt));
            s.data_process_noise = NoiseSpec::gaussian_iso(dim, kDt, 0.3);
            break;
    }
    return s;
}

namespace multitarget {

Matrix sensor_locations() {
    Matrix xi(2, 25);
    int j = 0;
    for (int row = 0; row < 5; ++row)
        for (int col = 0; col < 5; ++col, ++j) {
            xi(0, j) = -4.0 + 2.0 * col;
            xi(1, j) = -4.0 + 2.0 * row;
        }
    return xi;
}

Vector velocity_field(const Vector& p) {
    Vector v(2);
    v[0] = -std::sin(p[0]) * std::cos(p[1]);
    v[1] = std::cos(p[0]) * std::sin(p[1]);
    return v;
}

double hamiltonian(const Vector& p) { return std::sin(p[0]) * std::sin(p[1]); }

Vector acoustic_amplitudes(const Vector& state, const Matrix& sensors) {
    require(state.size() % 2 == 0, "acoustic_amplitudes: state must stack planar positions");
    const Eigen::Index objects = state.size() / 2;
    Vector y = Vector::Zero(sensors.cols());
    for (Eigen::Index j = 0; j < sensors.cols(); ++j)
        for (Eigen::Index p = 0; p < objects; ++p) {
            const double dx = state[2 * p] - sensors(0, j);
            const double dy = state[2 * p + 1] - sensors(1, j);
            y[j] += amplitude / (std::sqrt(dx * dx + dy * dy) + d0);
        }
    return y;
}

}  // namespace multitarget

ScenarioSpec build_multi_target(MultiTargetVariant variant) {
    using namespace multitarget;
    constexpr int d = 2 * num_objects;
    const Matrix sensors = sensor_locations();
    const auto m = static_cast<int>(sensors.cols());

    auto drift = [](const Vector& x, bool toward_origin) {
        Vector out = x;
        for (int p = 0; p < num_objects; ++p) {
            const Vector pos = x.segment<2>(2 * p);
            Vector step = kDt * velocity_field(pos);
            if (toward_origin) step -= pos * kDt / 5.0;
            out.segment<2>(2 * p) += step;
        }
        return out;
    };

    ScenarioSpec s;
    s.model.dim_x = d;
    s.model.dim_y = m;
    s.model.transition = [drift](int, const Vector& x) -> Vector { return drift(x, false); };
    s.model.measurement = [sensors](int, const Vector& x) -> Vector { return acoustic_amplitudes(x, sensors); };
    s.model.process_noise = NoiseSpec::gaussian_iso(d, 0.1 * kDt);
    s.model.measurement_noise = NoiseSpec::gaussian_iso(m, 0.01 * kDt);
    s.data_transition = s.model.transition;
    s.data_process_noise = s.model.process_noise;
    s.data_measurement_noise = s.model.measurement_noise;
    s.dt = kDt;
    s.horizon = 100;
    s.x0_truth = Vector(d);
    for (int p = 0; p < num_objects; ++p) {
        s.x0_truth[2 * p] = p + 1.0;
        s.x0_truth[2 * p + 1] = 0.0;
    }
    s.init_ensemble = init_law(s.x0_truth);

    switch (variant) {
        case MultiTargetVariant::nominal:
            s.name = "multitarget";
            s.description = "none (data laws = filter laws)";
            break;
        case MultiTargetVariant::velocity_bias:
            s.name = "multitarget-bias";
            s.description = "data dynamics add -x dt/5 per object; filter model omits it";
            s.data_transition = [drift](int, const Vector& x) -> Vector { return drift(x, true); };
            break;
    }
    return s;
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {
        "linear10d", "linear10d-bias",  "linear10d-corr",          "cubic2d",
        "cubic10d-cauchy", "cubic10d-lognormal-bias", "multitarget", "multitarget-bias"};
    return names;
}

ScenarioSpec build_scenario(const std::string& name) {
    if (name == "linear10d") return build_linear10d(LinearVariant::nominal);
    if (name == "linear10d-bias") return build_linear10d(LinearVariant::biased);
    if (name == "linear10d-corr") return build_linear10d(LinearVariant::correlated);
    if (name == "cubic2d") return build_cubic_sensor(2, CubicVariant::nominal);
    if (name == "cubic10d-cauchy") return build_cubic_sensor(10, CubicVariant::cauchy);
    if (name == "cubic10d-lognormal-bias") return build_cubic_sensor(10, CubicVariant::lognormal_bias);
    if (name == "multitarget") return build_multi_target(MultiTargetVariant::nominal);
    if (name == "multitarget-bias") return build_multi_target(MultiTargetVariant::velocity_bias);
    throw UsageError("unknown scenario '" + name + "'");
}

}  // namespace kviff::models
