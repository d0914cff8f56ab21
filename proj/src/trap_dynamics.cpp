#include "nvtrap/trap_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include <fftw3.h>
#include <fmt/format.h>

namespace nvtrap::trap {

using constants::pi;

void TrapConfig::validate() const {
    if (!(v_pp_volts >= 0.0 && v_pp_volts <= 10e3))
        throw InvalidArgument(fmt::format("v_pp = {} V outside [0, 10 kV]", v_pp_volts));
    if (!(omega_drive_rad_s > 0.0)) throw InvalidArgument("drive frequency must be positive");
    if (!(r0_m > 0.0)) throw InvalidArgument("trap radius must be positive");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw InvalidArgument("kappa must lie in (0, 1]");
    if (!std::isfinite(v_dc_volts) || !dc_field_v_m.allFinite())
        throw InvalidArgument("static trap fields must be finite");
}

MathieuParameters mathieu_q(const TrapConfig& t, const ParticleState& p) {
    t.validate();
    const double scale = t.kappa * std::abs(p.charge_c) /
                         (p.mass_kg * t.omega_drive_rad_s * t.omega_drive_rad_s * t.r0_m * t.r0_m);
    MathieuParameters m;
    m.q_axial = 2.0 * scale * (0.5 * t.v_pp_volts);
    m.a_axial = 4.0 * scale * t.v_dc_volts;
    return m;
}

Flagged<double> damping_rate(const ParticleState& p, const thermal::GasEnvironment& g) {
    g.validate();
    const double gamma = g.drag_coefficient * g.pressure_pa() /
                         (p.density_kg_m3 * p.radius_m() * g.mean_speed_m_s());
    const auto kn = thermal::knudsen(g, p);
    return {gamma, !kn.flagged && kn.value < 1.0};
}

double pressure_for_damping_rate(const ParticleState& p, const thermal::GasEnvironment& g,
                                 double gamma_s) {
    return gamma_s * p.density_kg_m3 * p.radius_m() * g.mean_speed_m_s() /
           (g.drag_coefficient * constants::pascal_per_mbar);
}

namespace {

// Kick-drift-kick step for the linear, decoupled equations of motion with
// exact damping in two half steps. Everything it needs is precomputed so the
// one-period map used for shooting is the map of the trajectories.
struct Stepper {
    double omega = 0.0;
    double v_dc = 0.0;
    double v_amp = 0.0;
    double gain = 0.0;  // |Q| kappa / (m r0^2)
    Vec3 axis_weight{-0.5, -0.5, 1.0};
    Vec3 const_acc = Vec3::Zero();
    double dt = 0.0;
    double half_decay = 1.0;

    Stepper(const TrapConfig& t, const ParticleState& p, double gamma, const Vec3& force_n,
            double dt_s)
        : omega(t.omega_drive_rad_s), v_dc(t.v_dc_volts), v_amp(0.5 * t.v_pp_volts),
          gain(std::abs(p.charge_c) * t.kappa / (p.mass_kg * t.r0_m * t.r0_m)),
          const_acc(force_n / p.mass_kg + std::abs(p.charge_c) / p.mass_kg * t.dc_field_v_m),
          dt(dt_s), half_decay(std::exp(-0.5 * gamma * dt_s)) {}

    Vec3 acceleration(const Vec3& x, double time) const {
        const double k = gain * (v_dc + v_amp * std::cos(omega * time));
        return -k * axis_weight.cwiseProduct(x) + const_acc;
    }

    void step(Vec3& x, Vec3& v, double time) const {
        v *= half_decay;
        v += 0.5 * dt * acceleration(x, time);
        x += dt * v;
        v += 0.5 * dt * acceleration(x, time + dt);
        v *= half_decay;
    }
};

Vec3 total_static_force(const ParticleState& p, const ExternalForces& extras) {
    Vec3 f = extras.static_force_n;
    if (extras.gravity)
        f += p.mass_kg * constants::standard_gravity * extras.gravity_direction.normalized();
    return f;
}

}  // namespace

Trajectory integrate_trajectory(const TrapConfig& t, const ParticleState& p,
                                const thermal::GasEnvironment& g, const ExternalForces& extras,
                                double duration_s, double dt_s, int record_stride) {
    t.validate();
    if (!(dt_s > 0.0) || dt_s > 2.0 * pi / (50.0 * t.omega_drive_rad_s) * (1.0 + 1e-12))
        throw InvalidArgument(fmt::format(
            "time step {} s exceeds the resolution limit 2 pi / (50 omega) = {} s", dt_s,
            2.0 * pi / (50.0 * t.omega_drive_rad_s)));
    if (!(duration_s >= 0.0)) throw InvalidArgument("duration must be non-negative");
    if (record_stride < 1) throw InvalidArgument("record stride must be >= 1");

    const double gamma = damping_rate(p, g).value;
    const Stepper stepper(t, p, gamma, total_static_force(p, extras), dt_s);
    const long long steps = std::llround(duration_s / dt_s);
    const double escape_radius = 100.0 * t.r0_m;

    Trajectory traj;
    traj.sample_interval_s = dt_s * record_stride;
    traj.omega_drive_rad_s = t.omega_drive_rad_s;
    traj.mathieu = mathieu_q(t, p);
    const auto reserve = static_cast<std::size_t>(steps / record_stride + 2);
    traj.times_s.reserve(reserve);
    traj.positions_m.reserve(reserve);
    traj.velocities_m_s.reserve(reserve);
    traj.drive_phase_rad.reserve(reserve);

    auto record = [&](double time, const Vec3& x, const Vec3& v) {
        traj.times_s.push_back(time);
        traj.positions_m.push_back(x);
        traj.velocities_m_s.push_back(v);
        traj.drive_phase_rad.push_back(std::fmod(t.omega_drive_rad_s * time, 2.0 * pi));
    };

    Vec3 x = p.position_m;
    Vec3 v = p.velocity_m_s;
    record(0.0, x, v);
    for (long long n = 0; n < steps; ++n) {
        const double time = static_cast<double>(n) * dt_s;
        Vec3 x_prev = x, v_prev = v;
        stepper.step(x, v, time);
        const double t_next = static_cast<double>(n + 1) * dt_s;
        if (!x.allFinite() || !v.allFinite()) {
            traj.status = TrajectoryStatus::escaped;
            if ((n + 1) % record_stride != 0) record(time, x_prev, v_prev);
            break;
        }
        if (x.norm() > escape_radius) {
            traj.status = TrajectoryStatus::escaped;
            record(t_next, x, v);
            break;
        }
        if ((n + 1) % record_stride == 0) record(t_next, x, v);
    }
    return traj;
}

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Power spectrum |X_k|^2 of the Hann-windowed, mean-removed signal padded to
// `nfft` points; bins k = 0 .. nfft/2.
std::vector<double> periodogram(const std::vector<double>& signal, std::size_t nfft) {
    const std::size_t n = signal.size();
    double mean = 0.0;
    for (double s : signal) mean += s;
    mean /= static_cast<double>(n);

    double* in = fftw_alloc_real(nfft);
    fftw_complex* out = fftw_alloc_complex(nfft / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < nfft; ++i) {
        if (i < n) {
            const double w = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) /
                                                  static_cast<double>(n - 1));
            in[i] = w * (signal[i] - mean);
        } else {
            in[i] = 0.0;
        }
    }
    fftw_execute(plan);
    std::vector<double> power(nfft / 2 + 1);
    for (std::size_t k = 0; k < power.size(); ++k)
        power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return power;
}

}  // namespace

double secular_frequency(const Trajectory& traj, int axis) {
    if (axis < 0 || axis > 2) throw InvalidArgument("axis must be 0, 1 or 2");
    const std::size_t n = traj.size();
    if (n < 16) throw NumericalError("no secular line: record too short");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = traj.positions_m[i](axis);

    std::size_t nfft = 1;
    while (nfft < 4 * n) nfft <<= 1;
    const auto power = periodogram(x, nfft);
    const double df = 1.0 / (static_cast<double>(nfft) * traj.sample_interval_s);
    const double f_drive = traj.omega_drive_rad_s / (2.0 * pi);

    // Skip the DC main lobe of the window; stay strictly below omega/2.
    const auto k_lo = static_cast<std::size_t>(std::ceil(2.0 * static_cast<double>(nfft) / n)) + 1;
    const auto k_hi = std::min(power.size() - 2,
                               static_cast<std::size_t>(std::floor(0.5 * f_drive / df)));
    if (k_hi <= k_lo) throw NumericalError("no secular line: band below omega/2 is empty");

    std::size_t k_peak = k_lo;
    for (std::size_t k = k_lo; k <= k_hi; ++k)
        if (power[k] > power[k_peak]) k_peak = k;
    std::vector<double> band(power.begin() + static_cast<std::ptrdiff_t>(k_lo),
                             power.begin() + static_cast<std::ptrdiff_t>(k_hi) + 1);
    std::nth_element(band.begin(), band.begin() + static_cast<std::ptrdiff_t>(band.size() / 2),
                     band.end());
    const double floor = band[band.size() / 2];
    if (!(power[k_peak] > 0.0) || !(power[k_peak] > 10.0 * floor))
        throw NumericalError("no secular line above the noise floor");

    double delta = 0.0;
    const double a = power[k_peak - 1], b = power[k_peak], c = power[k_peak + 1];
    if (a > 0.0 && c > 0.0) {
        const double la = std::log(a), lb = std::log(b), lc = std::log(c);
        const double den = la - 2.0 * lb + lc;
        if (den < 0.0) delta = 0.5 * (la - lc) / den;
    }
    const double f_sec = (static_cast<double>(k_peak) + delta) * df;
    const double span = traj.times_s.back() - traj.times_s.front();
    if (span * f_sec < 50.0)
        throw NumericalError(fmt::format(
            "record spans {:.1f} secular periods, need >= 50 for a secular line", span * f_sec));
    return f_sec;
}

double analytic_secular_frequency(const TrapConfig& t, const ParticleState& p) {
    const auto m = mathieu_q(t, p);
    return m.q_axial * t.omega_drive_rad_s / (2.0 * std::sqrt(2.0)) / (2.0 * pi);
}

Eigen::Matrix2d monodromy(double a, double q, double gamma_norm, int steps) {
    // y' = A(tau) y, y = (x, x'), over one period tau in [0, pi].
    auto rhs = [&](double tau, const Eigen::Matrix2d& y) {
        Eigen::Matrix2d a_mat;
        a_mat << 0.0, 1.0, -(a - 2.0 * q * std::cos(2.0 * tau)), -gamma_norm;
        return Eigen::Matrix2d(a_mat * y);
    };
    const double h = pi / steps;
    Eigen::Matrix2d y = Eigen::Matrix2d::Identity();
    for (int i = 0; i < steps; ++i) {
        const double tau = h * i;
        const Eigen::Matrix2d k1 = rhs(tau, y);
        const Eigen::Matrix2d k2 = rhs(tau + 0.5 * h, y + 0.5 * h * k1);
        const Eigen::Matrix2d k3 = rhs(tau + 0.5 * h, y + 0.5 * h * k2);
        const Eigen::Matrix2d k4 = rhs(tau + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

std::array<std::complex<double>, 2> floquet_multipliers(const Eigen::Matrix2d& m) {
    const double tr = m.trace();
    const double det = m.determinant();
    const std::complex<double> root = std::sqrt(std::complex<double>(0.25 * tr * tr - det, 0.0));
    return {0.5 * tr + root, 0.5 * tr - root};
}

namespace {

double max_multiplier(double a, double q, double gamma_norm) {
    const auto mu = floquet_multipliers(monodromy(a, q, gamma_norm));
    return std::max(std::abs(mu[0]), std::abs(mu[1]));
}

bool stable_from_multiplier(double max_mu, double gamma_norm) {
    return gamma_norm > 0.0 ? max_mu < 1.0 : max_mu <= 1.0 + 1e-9;
}

}  // namespace

bool mathieu_stable(double a, double q, double gamma_norm) {
    return stable_from_multiplier(max_multiplier(a, q, gamma_norm), gamma_norm);
}

double characteristic_exponent(double a, double q, double gamma_norm) {
    const auto mu = floquet_multipliers(monodromy(a, q, gamma_norm));
    return std::abs(std::arg(mu[0])) / pi;
}

StabilityReport stability_classify(const TrapConfig& t, const ParticleState& p,
                                   const thermal::GasEnvironment& g) {
    const auto m = mathieu_q(t, p);
    const double gn = normalized_damping(damping_rate(p, g).value, t.omega_drive_rad_s);
    const double mu_axial = max_multiplier(m.a_axial, m.q_axial, gn);
    const double mu_radial = max_multiplier(m.a_radial(), m.q_radial(), gn);
    StabilityReport r;
    const bool radial = stable_from_multiplier(mu_radial, gn);
    const bool axial = stable_from_multiplier(mu_axial, gn);
    r.axis_stable = {radial, radial, axial};
    r.stable = radial && axial;
    r.max_multiplier = std::max(mu_axial, mu_radial);
    if (r.stable) {
        const double beta = characteristic_exponent(m.a_axial, m.q_axial, gn);
        r.drive_to_secular_ratio = beta > 0.0 ? 2.0 / beta : 0.0;
    }
    return r;
}

double floquet_secular_frequency(const TrapConfig& t, const ParticleState& p,
                                 const thermal::GasEnvironment& g) {
    if (!stability_classify(t, p, g).stable)
        throw InstabilityError("secular frequency undefined: configuration is unstable");
    const auto m = mathieu_q(t, p);
    const double gn = normalized_damping(damping_rate(p, g).value, t.omega_drive_rad_s);
    const double beta = characteristic_exponent(m.a_axial, m.q_axial, gn);
    return beta * t.omega_drive_rad_s / 2.0 / (2.0 * pi);
}

double stability_boundary(double a, double gamma_norm, double tolerance) {
    constexpr double q_step = 0.02;
    constexpr double q_limit = 20.0;
    // At q -> 0 the first region spans 0 <= a < 1; above that the scan would
    // land in the second region.
    if (!(a < 1.0))
        throw NumericalError(fmt::format(
            "bracket failure: a = {} is not in the first stability region (gamma_n = {})", a,
            gamma_norm));
    double q_stable = -1.0;
    double q = q_step;
    for (; q <= q_limit; q += q_step) {
        const bool s = mathieu_stable(a, q, gamma_norm);
        if (s) q_stable = q;
        if (!s && q_stable > 0.0) break;
    }
    if (q_stable < 0.0)
        throw NumericalError(fmt::format(
            "bracket failure: a = {} is not in the first stability region (gamma_n = {})", a,
            gamma_norm));
    if (q > q_limit)
        throw NumericalError(fmt::format("bracket failure: no instability below q = {}", q_limit));
    double lo = q_stable, hi = q;
    while (hi - lo > tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mathieu_stable(a, mid, gamma_norm))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double charge_to_mass_from_instability(double omega_c_rad_s, const TrapConfig& t,
                                       const ParticleState& geometry,
                                       const thermal::GasEnvironment& g) {
    t.validate();
    if (t.v_dc_volts != 0.0)
        throw InvalidArgument("charge-to-mass inversion assumes a pure AC drive (v_dc = 0)");
    if (!(omega_c_rad_s > 0.0)) throw InvalidArgument("onset frequency must be positive");
    const double gn = normalized_damping(damping_rate(geometry, g).value, omega_c_rad_s);
    const double q_max = stability_boundary(0.0, gn);
    return q_max * omega_c_rad_s * omega_c_rad_s * t.r0_m * t.r0_m /
           (2.0 * t.kappa * 0.5 * t.v_pp_volts);
}

EquilibriumResult equilibrium_displacement(const TrapConfig& t, const ParticleState& p,
                                           const thermal::GasEnvironment& g,
                                           const Vec3& static_force_n,
                                           const EquilibriumOptions& options) {
    if (options.steps_per_period < 50)
        throw InvalidArgument("equilibrium run needs >= 50 steps per drive period");
    const auto report = stability_classify(t, p, g);
    if (!report.stable)
        throw InstabilityError("equilibrium displacement undefined: configuration is unstable");

    ExternalForces extras;
    extras.gravity = options.gravity;
    extras.static_force_n = static_force_n;
    const Vec3 force = total_static_force(p, extras);
    const double gamma = damping_rate(p, g).value;
    const int n = options.steps_per_period;
    const double period = t.drive_period_s();
    const double dt = period / n;
    const Stepper stepper(t, p, gamma, force, dt);

    auto propagate = [&](Vec3 x, Vec3 v) {
        for (int k = 0; k < n; ++k) stepper.step(x, v, k * dt);
        return std::pair<Vec3, Vec3>{x, v};
    };
    // Affine one-period map, axis by axis: s -> M s + b.
    const auto [bx, bv] = propagate(Vec3::Zero(), Vec3::Zero());
    auto [xx, xv] = propagate(Vec3::Ones(), Vec3::Zero());
    auto [vx, vv] = propagate(Vec3::Zero(), Vec3::Ones());
    xx -= bx;
    xv -= bv;
    vx -= bx;
    vv -= bv;
    Vec3 x0, v0;
    for (int i = 0; i < 3; ++i) {
        Eigen::Matrix2d m;
        m << xx(i), vx(i), xv(i), vv(i);
        const Eigen::Vector2d s = (Eigen::Matrix2d::Identity() - m).partialPivLu().solve(
            Eigen::Vector2d(bx(i), bv(i)));
        x0(i) = s(0);
        v0(i) = s(1);
    }

    const auto mp = mathieu_q(t, p);
    double f_sec = 0.0;
    {
        const double gn = normalized_damping(gamma, t.omega_drive_rad_s);
        f_sec = characteristic_exponent(mp.a_axial, mp.q_axial, gn) * t.omega_drive_rad_s / (4.0 * pi);
        if (!(f_sec > 0.0)) f_sec = analytic_secular_frequency(t, p);
    }
    const double secular_period = 1.0 / f_sec;
    const auto periods_for = [&](double secular_periods) {
        return std::max(1LL, static_cast<long long>(std::ceil(secular_periods * secular_period / period)));
    };
    const long long discard = periods_for(options.transient_secular_periods);
    const long long average = periods_for(options.average_secular_periods);

    Vec3 x = x0, v = v0;
    for (long long k = 0; k < discard * n; ++k) stepper.step(x, v, static_cast<double>(k % n) * dt);

    EquilibriumResult out;
    Trajectory& traj = out.trajectory;
    traj.sample_interval_s = dt;
    traj.omega_drive_rad_s = t.omega_drive_rad_s;
    traj.mathieu = mp;
    const auto samples = static_cast<std::size_t>(average * n);
    traj.times_s.reserve(samples);
    traj.positions_m.reserve(samples);
    traj.velocities_m_s.reserve(samples);
    traj.drive_phase_rad.reserve(samples);
    Vec3 sum = Vec3::Zero();
    const double t_start = static_cast<double>(discard) * period;
    for (std::size_t k = 0; k < samples; ++k) {
        const double local = static_cast<double>(k % static_cast<std::size_t>(n)) * dt;
        traj.times_s.push_back(t_start + static_cast<double>(k) * dt);
        traj.positions_m.push_back(x);
        traj.velocities_m_s.push_back(v);
        traj.drive_phase_rad.push_back(t.omega_drive_rad_s * local);
        sum += x;
        stepper.step(x, v, local);
    }
    out.mean_position_m = sum / static_cast<double>(samples);
    out.displacement_m = out.mean_position_m.norm();

    const Vec3 a = mp.a(), q = mp.q();
    for (int i = 0; i < 3; ++i) {
        const double beta2 = a(i) + 0.5 * q(i) * q(i);
        const double omega_i = std::sqrt(std::max(beta2, 0.0)) * t.omega_drive_rad_s / 2.0;
        const double f_i = force(i) + std::abs(p.charge_c) * t.dc_field_v_m(i);
        out.pseudo_potential_m(i) = omega_i > 0.0 ? f_i / (p.mass_kg * omega_i * omega_i) : 0.0;
    }
    out.pseudo_potential_displacement_m = out.pseudo_potential_m.norm();
    return out;
}

MicromotionResult micromotion_amplitude(const Trajectory& traj, double transient_s) {
    if (traj.status == TrajectoryStatus::escaped)
        throw InstabilityError("micromotion undefined for an escaped trajectory");
    if (traj.size() < 2) throw NumericalError("trajectory too short for a lock-in");
    const double period = 2.0 * pi / traj.omega_drive_rad_s;
    const double t_first = traj.times_s.front() + transient_s;
    const double t_last = traj.times_s.back();
    const double dt = traj.sample_interval_s;
    const auto periods = static_cast<long long>(std::floor((t_last - t_first + 0.5 * dt) / period));
    if (periods < 1) throw NumericalError("record shorter than one drive period after the transient");
    const double t_end = t_first + static_cast<double>(periods) * period - 0.5 * dt;

    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < traj.size(); ++k)
        if (traj.times_s[k] >= t_first - 0.5 * dt && traj.times_s[k] < t_end) idx.push_back(k);
    const double count = static_cast<double>(idx.size());

    Vec3 mean = Vec3::Zero();
    for (auto k : idx) mean += traj.positions_m[k];
    mean /= count;

    MicromotionResult out;
    for (int i = 0; i < 3; ++i) {
        std::complex<double> acc(0.0, 0.0);
        for (auto k : idx) {
            const double phase = traj.omega_drive_rad_s * traj.times_s[k];
            acc += (traj.positions_m[k](i) - mean(i)) * std::complex<double>(std::cos(phase), -std::sin(phase));
        }
        out.per_axis_m(i) = 2.0 * std::abs(acc) / count;
    }
    out.amplitude_m = out.per_axis_m.norm();
    const Vec3 q = traj.mathieu.q();
    out.analytic_m = (0.5 * q.cwiseAbs().cwiseProduct(mean)).norm();
    return out;
}

std::vector<TrapConfig> iso_q_ramp(const TrapConfig& start, double v_pp_end, int steps) {
    start.validate();
    if (!(v_pp_end > 0.0 && v_pp_end <= 10e3) || v_pp_end == start.v_pp_volts)
        throw InvalidArgument("iso-q ramp needs 0 < v_pp_end <= 10 kV, different from v_pp_start");
    if (steps < 1) throw InvalidArgument("iso-q ramp needs >= 1 step");
    std::vector<TrapConfig> schedule;
    schedule.reserve(static_cast<std::size_t>(steps));
    const double ratio = v_pp_end / start.v_pp_volts;
    for (int i = 1; i <= steps; ++i) {
        TrapConfig c = start;
        c.v_pp_volts = i == steps ? v_pp_end
                                  : start.v_pp_volts * std::pow(ratio, static_cast<double>(i) / steps);
        c.omega_drive_rad_s = start.omega_drive_rad_s * std::sqrt(c.v_pp_volts / start.v_pp_volts);
        schedule.push_back(c);
    }
    return schedule;
}

std::vector<StabilityMapPoint> stability_map(const std::vector<double>& qs,
                                             const std::vector<double>& as,
                                             const std::vector<double>& gammas, int threads) {
    std::vector<StabilityMapPoint> points;
    points.reserve(qs.size() * as.size() * gammas.size());
    for (double q : qs)
        for (double a : as)
            for (double gn : gammas) points.push_back({q, a, gn, false});

    unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, points.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&points, w, workers] {
            for (std::size_t i = w; i < points.size(); i += workers)
                points[i].stable = mathieu_stable(points[i].a, points[i].q, points[i].gamma_norm);
        });
    }
    for (auto& th : pool) th.join();
    return points;
}

}  // namespace nvtrap::trap
