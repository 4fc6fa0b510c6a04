#include "blowlab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "blowlab/common.hpp"
#include "blowlab/report.hpp"
#include "blowlab/stopping.hpp"

namespace blowlab {

SpatialMesh::SpatialMesh(double length, int cells) : domain_length(length), n_cells(cells) {
    if (!(length > 0.0)) throw ConfigError("SpatialMesh: domain length must be positive");
    if (cells < 8) throw ConfigError("SpatialMesh: needs at least 8 cells");
}

Eigen::ArrayXd SpatialMesh::interior_nodes() const {
    Eigen::ArrayXd x(n_interior());
    for (int m = 0; m < n_interior(); ++m) x[m] = (m + 1) * dx();
    return x;
}

double project_on_eigenfunction(const Eigen::ArrayXd& interior_field, const SpatialMesh& mesh,
                                const EigenPair& eig) {
    if (interior_field.size() != mesh.n_interior())
        throw NumericalError("project_on_eigenfunction: field does not match the mesh");
    double acc = 0.0;
    for (int m = 0; m < mesh.n_interior(); ++m)
        acc += interior_field[m] * eig.psi((m + 1) * mesh.dx());
    return acc * mesh.dx();  // trapezoid; boundary terms vanish
}

namespace {

// Piecewise-linear read of one noise path between grid samples.
struct NoiseInterp {
    const SamplePath& path;

    std::pair<double, double> at(double t) const {
        const double dt = path.grid.dt();
        const int n = path.grid.n_steps;
        double u = t / dt;
        int j = static_cast<int>(u);
        if (j >= n) return {path.w[n], path.bh[n]};
        if (j < 0) j = 0;
        const double frac = u - j;
        return {path.w[j] + frac * (path.w[j + 1] - path.w[j]),
                path.bh[j] + frac * (path.bh[j + 1] - path.bh[j])};
    }
};

Eigen::ArrayXd initial_field(const InitialData& initial, const SpatialMesh& mesh,
                             const EigenPair& eig, int component) {
    const int m_int = mesh.n_interior();
    Eigen::ArrayXd f(m_int);
    if (const auto* em = std::get_if<EigenMultipleData>(&initial)) {
        const double c = component == 1 ? em->c1 : em->c2;
        for (int m = 0; m < m_int; ++m) f[m] = c * eig.psi((m + 1) * mesh.dx());
        return f;
    }
    const auto& tab = std::get<TabulatedData>(initial);
    const Eigen::ArrayXd& values = component == 1 ? tab.f1 : tab.f2;
    const int n_tab = static_cast<int>(values.size()) - 1;
    for (int m = 0; m < m_int; ++m) {
        const double x = (m + 1) * mesh.dx();
        const double u = x / mesh.domain_length * n_tab;
        const int j = std::min(static_cast<int>(u), n_tab - 1);
        const double frac = u - j;
        f[m] = values[j] + frac * (values[j + 1] - values[j]);
    }
    return f;
}

// Crank-Nicolson step for (d/dt - c - Lap) v = 0 with Dirichlet zero ends.
// Solves (I - h/2 A) v_new = (I + h/2 A) v, A = Lap_h + c I, via Thomas.
class LinearStepper {
public:
    LinearStepper(int m, double dx, double c) : m_(m), inv_dx2_(1.0 / (dx * dx)), c_(c) {
        cp_.resize(m);
        rhs_.resize(m);
    }

    void step(Eigen::ArrayXd& v, double h) {
        const double r = 0.5 * h * inv_dx2_;
        const double diag = 1.0 + 2.0 * r - 0.5 * h * c_;
        const double off = -r;
        const double ediag = 1.0 - 2.0 * r + 0.5 * h * c_;

        for (int i = 0; i < m_; ++i) {
            const double left = i > 0 ? v[i - 1] : 0.0;
            const double right = i + 1 < m_ ? v[i + 1] : 0.0;
            rhs_[i] = ediag * v[i] + r * (left + right);
        }
        // Thomas sweep (constant tridiagonal coefficients)
        cp_[0] = off / diag;
        rhs_[0] /= diag;
        for (int i = 1; i < m_; ++i) {
            const double denom = diag - off * cp_[i - 1];
            cp_[i] = off / denom;
            rhs_[i] = (rhs_[i] - off * rhs_[i - 1]) / denom;
        }
        v[m_ - 1] = rhs_[m_ - 1];
        for (int i = m_ - 2; i >= 0; --i) v[i] = rhs_[i] - cp_[i] * v[i + 1];
    }

private:
    int m_;
    double inv_dx2_, c_;
    Eigen::ArrayXd cp_, rhs_;
};

struct ReactionRates {
    double kappa1, kappa2;
};

}  // namespace

PdeTrajectory solve_random_pde(const SystemParams& params, const DerivedConstants& consts,
                               const SamplePath& path, const SpatialMesh& mesh,
                               const SolverControls& controls) {
    if (std::abs(mesh.domain_length - params.domain_length) > 1e-12 * params.domain_length)
        throw ConfigError("solve_random_pde: mesh does not match the domain length");

    const int m_int = mesh.n_interior();
    const double lambda = consts.eig.lambda;
    const double c1 = params.gamma1 - params.k(0, 0) * params.k(0, 0) / 2.0;
    const double c2 = params.gamma2 - params.k(1, 0) * params.k(1, 0) / 2.0;
    const Eigen::Matrix2d rex = reaction_exponents(params);
    const NoiseInterp noise{path};

    Eigen::ArrayXd v1 = initial_field(params.initial, mesh, consts.eig, 1);
    Eigen::ArrayXd v2 = initial_field(params.initial, mesh, consts.eig, 2);

    PdeTrajectory traj;
    traj.theta = controls.theta_factor * (std::max(v1.maxCoeff(), v2.maxCoeff()) + 1.0);

    LinearStepper lin1(m_int, mesh.dx(), c1);
    LinearStepper lin2(m_int, mesh.dx(), c2);

    auto kappas = [&](double t) -> ReactionRates {
        const auto [w, b] = noise.at(t);
        return {std::exp(rex(0, 0) * w + rex(0, 1) * b), std::exp(rex(1, 0) * w + rex(1, 1) * b)};
    };

    // Explicit midpoint for dv1 = kap1 v2^{1+b1}, dv2 = kap2 v1^{1+b2}, noise frozen.
    auto reaction_half = [&](Eigen::ArrayXd& a, Eigen::ArrayXd& b, double t_mid, double h) {
        if (!controls.nonlinearity_enabled) return;
        const ReactionRates r = kappas(t_mid);
        const Eigen::ArrayXd a_mid =
            a + 0.5 * h * r.kappa1 * b.max(0.0).pow(1.0 + params.beta1);
        const Eigen::ArrayXd b_mid =
            b + 0.5 * h * r.kappa2 * a.max(0.0).pow(1.0 + params.beta2);
        a += h * r.kappa1 * b_mid.max(0.0).pow(1.0 + params.beta1);
        b += h * r.kappa2 * a_mid.max(0.0).pow(1.0 + params.beta2);
    };

    auto strang_step = [&](Eigen::ArrayXd& a, Eigen::ArrayXd& b, double t, double h) {
        reaction_half(a, b, t + 0.25 * h, 0.5 * h);
        lin1.step(a, h);
        lin2.step(b, h);
        reaction_half(a, b, t + 0.75 * h, 0.5 * h);
    };

    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.sup_v1.push_back(v1.maxCoeff());
        traj.sup_v2.push_back(v2.maxCoeff());
        traj.proj_v1.push_back(project_on_eigenfunction(v1, mesh, consts.eig));
        traj.proj_v2.push_back(project_on_eigenfunction(v2, mesh, consts.eig));
    };
    auto snapshot = [&](double t, int cell_index) {
        if (controls.snapshot_stride > 0 && cell_index % controls.snapshot_stride == 0)
            traj.snapshots.push_back({t, {v1, v2}});
    };

    record(0.0);
    snapshot(0.0, 0);

    const double lin_rate = std::max(std::abs(c1 - lambda), std::abs(c2 - lambda)) + lambda;
    const double h_floor = path.grid.t_max * 1e-13;
    const double dt_noise = path.grid.dt();

    // Log-interpolated threshold hit inside [t0, t0+h], given sup before/after.
    auto refine_hit = [&](double t0, double h, double sup_before, double sup_after) {
        const double la = std::log(std::max(sup_before, 1e-300));
        const double lb = std::log(sup_after);
        const double lt = std::log(traj.theta);
        const double frac = lb > la ? std::clamp((lt - la) / (lb - la), 0.0, 1.0) : 1.0;
        return t0 + frac * h;
    };

    double t = 0.0;
    for (int cell = 0; cell < path.grid.n_steps; ++cell) {
        const double cell_end = path.grid.time(cell + 1);
        while (t < cell_end) {
            // growth controller: bound the relative reaction growth per substep
            double g = lin_rate;
            if (controls.nonlinearity_enabled) {
                const ReactionRates r = kappas(t);
                const double s1 = v1.maxCoeff(), s2 = v2.maxCoeff();
                g += r.kappa1 * std::pow(std::max(s2, 0.0), 1.0 + params.beta1) /
                     (std::max(s1, 0.0) + 1e-30);
                g += r.kappa2 * std::pow(std::max(s1, 0.0), 1.0 + params.beta2) /
                     (std::max(s2, 0.0) + 1e-30);
            }
            double h = std::min({dt_noise, cell_end - t, controls.safety / g});
            if (h < h_floor) {
                traj.status = SolverStatus::StepCollapse;
                return traj;
            }
            if (++traj.substeps > controls.max_substeps) {
                traj.status = SolverStatus::StepCollapse;
                return traj;
            }

            const Eigen::ArrayXd v1_saved = v1;
            const Eigen::ArrayXd v2_saved = v2;
            const double sup_before = std::max(v1.maxCoeff(), v2.maxCoeff());

            strang_step(v1, v2, t, h);

            const double floor = -controls.positivity_tol * std::max(1.0, v1.maxCoeff());
            if (v1.minCoeff() < floor || v2.minCoeff() < floor) {
                traj.status = SolverStatus::NonPositivity;
                return traj;
            }
            v1 = v1.max(0.0);
            v2 = v2.max(0.0);

            double sup_after = std::max(v1.maxCoeff(), v2.maxCoeff());
            if (!std::isfinite(sup_after) || sup_after >= traj.theta) {
                // redo the crossing interval at half step to bracket the hit
                v1 = v1_saved;
                v2 = v2_saved;
                double t_ref = t, h_ref = 0.5 * h, sup_ref = sup_before;
                for (int half = 0; half < 2; ++half) {
                    const Eigen::ArrayXd a_prev = v1, b_prev = v2;
                    strang_step(v1, v2, t_ref, h_ref);
                    v1 = v1.max(0.0);
                    v2 = v2.max(0.0);
                    const double sup_half = std::max(v1.maxCoeff(), v2.maxCoeff());
                    if (!std::isfinite(sup_half) || sup_half >= traj.theta) {
                        traj.t_blow = refine_hit(t_ref, h_ref, sup_ref,
                                                 std::isfinite(sup_half) ? sup_half
                                                                         : traj.theta * 1e6);
                        break;
                    }
                    t_ref += h_ref;
                    sup_ref = sup_half;
                    if (half == 1) traj.t_blow = t_ref;  // hit vanished at half step: take end
                }
                traj.status = SolverStatus::BlowUp;
                record(traj.t_blow);
                return traj;
            }
            t += h;
        }
        t = cell_end;
        record(t);
        snapshot(t, cell + 1);
    }
    traj.status = SolverStatus::CompletedHorizon;
    return traj;
}

OdeTrajectory integrate_subsolution_ode(const SamplePath& path, const SystemParams& params,
                                        const DerivedConstants& consts,
                                        std::pair<double, double> h0,
                                        const SolverControls& controls) {
    if (!consts.rho.has_value())
        throw ConfigError("integrate_subsolution_ode: coupling condition does not hold");

    const double rho1 = (*consts.rho)[0];
    const double rho2 = (*consts.rho)[1];
    const double lambda = consts.eig.lambda;
    const double c1 = -lambda + params.gamma1 - params.k(0, 0) * params.k(0, 0) / 2.0;
    const double c2 = -lambda + params.gamma2 - params.k(1, 0) * params.k(1, 0) / 2.0;
    const NoiseInterp noise{path};

    auto kappa = [&](double t) {
        const auto [w, b] = noise.at(t);
        return std::exp(rho1 * w + rho2 * b);
    };
    auto rhs = [&](double t, double y1, double y2, double& d1, double& d2) {
        const double kap = kappa(t);
        d1 = c1 * y1 + kap * std::pow(std::max(y2, 0.0), 1.0 + params.beta1);
        d2 = c2 * y2 + kap * std::pow(std::max(y1, 0.0), 1.0 + params.beta2);
    };

    OdeTrajectory traj;
    traj.theta = controls.theta_factor * (std::max(h0.first, h0.second) + 1.0);

    double y1 = h0.first, y2 = h0.second;
    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.h1.push_back(y1);
        traj.h2.push_back(y2);
    };
    record(0.0);

    auto rk4 = [&](double t, double h, double& o1, double& o2) {
        double k11, k12, k21, k22, k31, k32, k41, k42;
        rhs(t, y1, y2, k11, k12);
        rhs(t + 0.5 * h, y1 + 0.5 * h * k11, y2 + 0.5 * h * k12, k21, k22);
        rhs(t + 0.5 * h, y1 + 0.5 * h * k21, y2 + 0.5 * h * k22, k31, k32);
        rhs(t + h, y1 + h * k31, y2 + h * k32, k41, k42);
        o1 = y1 + h / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41);
        o2 = y2 + h / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42);
    };

    const double lin_rate = std::abs(c1) + std::abs(c2);
    const double h_floor = path.grid.t_max * 1e-13;
    const double dt_noise = path.grid.dt();
    long substeps = 0;

    double t = 0.0;
    for (int cell = 0; cell < path.grid.n_steps; ++cell) {
        const double cell_end = path.grid.time(cell + 1);
        while (t < cell_end) {
            const double kap = kappa(t);
            double g = lin_rate + 1e-30;
            g += kap * std::pow(std::max(y2, 0.0), 1.0 + params.beta1) / (std::max(y1, 0.0) + 1e-30);
            g += kap * std::pow(std::max(y1, 0.0), 1.0 + params.beta2) / (std::max(y2, 0.0) + 1e-30);
            double h = std::min({dt_noise, cell_end - t, controls.safety / g});
            if (h < h_floor || ++substeps > controls.max_substeps) {
                traj.status = SolverStatus::StepCollapse;
                return traj;
            }

            double n1, n2;
            rk4(t, h, n1, n2);
            const double sup_before = std::max(y1, y2);
            const double sup_after = std::max(n1, n2);
            if (!std::isfinite(sup_after) || sup_after >= traj.theta) {
                // half-step bracketing, then log interpolation
                double t_ref = t, h_ref = 0.5 * h, sup_ref = sup_before;
                for (int half = 0; half < 2; ++half) {
                    rk4(t_ref, h_ref, n1, n2);
                    const double sup_half = std::max(n1, n2);
                    if (!std::isfinite(sup_half) || sup_half >= traj.theta) {
                        const double la = std::log(std::max(sup_ref, 1e-300));
                        const double lb = std::isfinite(sup_half)
                                              ? std::log(sup_half)
                                              : std::log(traj.theta) + 14.0;
                        const double frac =
                            lb > la ? std::clamp((std::log(traj.theta) - la) / (lb - la), 0.0, 1.0)
                                    : 1.0;
                        traj.t_blow = t_ref + frac * h_ref;
                        break;
                    }
                    y1 = n1;
                    y2 = n2;
                    t_ref += h_ref;
                    sup_ref = sup_half;
                    if (half == 1) traj.t_blow = t_ref;
                }
                traj.status = SolverStatus::BlowUp;
                record(traj.t_blow);
                return traj;
            }
            y1 = n1;
            y2 = n2;
            t += h;
        }
        t = cell_end;
        record(t);
    }
    traj.status = SolverStatus::CompletedHorizon;
    return traj;
}

EnvelopeReport check_global_envelope(const PdeTrajectory& trajectory, const SystemParams& params,
                                     const DerivedConstants& consts, const SamplePath& path,
                                     const SpatialMesh& mesh) {
    const auto* em = std::get_if<EigenMultipleData>(&params.initial);
    if (em == nullptr)
        throw ConfigError("check_global_envelope: requires eigen-multiple initial data");
    if (!consts.gamma_matches_eigen)
        throw ConfigError("check_global_envelope: requires gamma_i = lambda + k_i1^2 / 2");

    const Eigen::Matrix2d rex = reaction_exponents(params);
    const double betas[2] = {params.beta1, params.beta2};
    const double cs[2] = {em->c1, em->c2};

    // condition_i(t) = beta_i (C_i sup psi)^{beta_i} * int_0^t e^{row_i noise} dr
    Eigen::ArrayXd cond[2];
    for (int i = 0; i < 2; ++i) {
        ExpFunctionalSpec spec;
        spec.rho_w = rex(i, 0);
        spec.rho_bh = rex(i, 1);
        const auto cum = cumulative_exp_functional(path, spec);
        cond[i] = betas[i] * std::pow(cs[i] * consts.eig.psi_sup, betas[i]) * cum.values;
    }

    EnvelopeReport rep;
    rep.condition_value[0] = cond[0][cond[0].size() - 1];
    rep.condition_value[1] = cond[1][cond[1].size() - 1];
    const double worst = std::max(rep.condition_value[0], rep.condition_value[1]);
    rep.condition_holds = worst < 1.0;
    rep.margin = worst > 0.0 ? 1.0 / worst : std::numeric_limits<double>::infinity();
    if (!rep.condition_holds) return rep;

    // With the condition in hand, the solver fields must sit below the envelope
    //   C_i psi(x) / (1 - cond_i(t))^{1/beta_i}
    // at every retained snapshot. Small slack absorbs discretization error.
    const double slack = 1e-3;
    const double dt = path.grid.dt();
    for (const auto& [t_snap, fields] : trajectory.snapshots) {
        const int cell = static_cast<int>(std::llround(t_snap / dt));
        for (int i = 0; i < 2; ++i) {
            const double denom = std::pow(1.0 - cond[i][std::min<int>(cell, cond[i].size() - 1)],
                                          1.0 / betas[i]);
            const Eigen::ArrayXd& field = i == 0 ? fields.first : fields.second;
            for (int m = 0; m < mesh.n_interior(); ++m) {
                const double env = cs[i] * consts.eig.psi((m + 1) * mesh.dx()) / denom;
                ++rep.n_checked;
                if (field[m] > env * (1.0 + slack) + 1e-12) {
                    ++rep.n_violations;
                    rep.worst_excess = std::max(rep.worst_excess, field[m] / env - 1.0);
                }
            }
        }
    }
    return rep;
}

void write_trajectory_csv(std::ostream& os, const PdeTrajectory& pde, const OdeTrajectory& ode) {
    os << "t,sup_v1,sup_v2,h1,h2\n";
    const std::size_t n = std::min(pde.times.size(), ode.times.size());
    for (std::size_t j = 0; j < n; ++j)
        os << format_double(pde.times[j]) << ',' << format_double(pde.sup_v1[j]) << ','
           << format_double(pde.sup_v2[j]) << ',' << format_double(ode.h1[j]) << ','
           << format_double(ode.h2[j]) << '\n';
}

std::string blowup_summary_json(const PdeTrajectory& traj, const SpatialMesh& mesh,
                                const SolverControls& controls) {
    nlohmann::json j;
    switch (traj.status) {
        case SolverStatus::CompletedHorizon: j["status"] = "none_before_horizon"; break;
        case SolverStatus::BlowUp: j["status"] = "detected"; break;
        case SolverStatus::NonPositivity: j["status"] = "fault_non_positivity"; break;
        case SolverStatus::StepCollapse: j["status"] = "fault_step_collapse"; break;
    }
    if (traj.blew_up()) j["t_blow"] = traj.t_blow;
    j["theta"] = traj.theta;
    j["substeps"] = traj.substeps;
    j["mesh"] = {{"domain_length", mesh.domain_length}, {"n_cells", mesh.n_cells}};
    j["controls"] = {{"theta_factor", controls.theta_factor},
                     {"safety", controls.safety},
                     {"positivity_tol", controls.positivity_tol},
                     {"nonlinearity_enabled", controls.nonlinearity_enabled}};
    return j.dump(2);
}

SharpBoundThreshold sharp_bound_threshold(const SystemParams& params,
                                          const DerivedConstants& consts, double heat_kernel_c) {
    if (!(heat_kernel_c > 0.0))
        throw ConfigError("sharp_bound_threshold: heat-kernel constant must be positive");
    const auto* em = std::get_if<EigenMultipleData>(&params.initial);
    if (em == nullptr)
        throw ConfigError("sharp_bound_threshold: requires eigen-multiple initial data");

    SharpBoundThreshold out{};
    const double base = em->c2 * (1.0 + heat_kernel_c) * consts.eig.psi_sup * consts.eig.psi_sup;
    const double betas[2] = {params.beta1, params.beta2};
    for (int i = 0; i < 2; ++i) {
        out.condition_value[i] = betas[i] * std::pow(base, betas[i]);
        out.budget[i] = 1.0 / out.condition_value[i];
    }
    return out;
}

}  // namespace blowlab
