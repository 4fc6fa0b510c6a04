#ifndef BLOWLAB_PDE_HPP
#define BLOWLAB_PDE_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

#include "blowlab/params.hpp"

namespace blowlab {

/// Uniform mesh on (0, L) with Dirichlet values pinned to 0 at both ends;
/// fields live on the n_cells - 1 interior nodes x_m = m dx.
struct SpatialMesh {
    double domain_length = 3.141592653589793238462643383279502884;
    int n_cells = 64;

    SpatialMesh() = default;
    SpatialMesh(double length, int cells);

    double dx() const { return domain_length / n_cells; }
    int n_interior() const { return n_cells - 1; }
    Eigen::ArrayXd interior_nodes() const;
};

struct SolverControls {
    double theta_factor = 1e8;   // blow-up threshold = theta_factor * (sup f + 1)
    double safety = 0.1;         // max relative reaction growth per substep
    double positivity_tol = 1e-12;
    long max_substeps = 20'000'000;
    bool nonlinearity_enabled = true;  // test hook: pure linear evolution when false
    int snapshot_stride = 0;           // keep full fields every k-th noise cell (0 = off)
};

enum class SolverStatus { CompletedHorizon, BlowUp, NonPositivity, StepCollapse };

struct PdeTrajectory {
    // Recorded at noise-grid times until the run stops.
    std::vector<double> times;
    std::vector<double> sup_v1, sup_v2;
    std::vector<double> proj_v1, proj_v2;  // v_i(t, psi)
    std::vector<std::pair<double, std::pair<Eigen::ArrayXd, Eigen::ArrayXd>>> snapshots;

    SolverStatus status = SolverStatus::CompletedHorizon;
    double t_blow = std::numeric_limits<double>::infinity();
    double theta = 0.0;   // threshold actually used
    long substeps = 0;

    bool blew_up() const { return status == SolverStatus::BlowUp; }
};

/**
 * Method-of-lines integrator for the transformed random system
 *   dv_i/dt = (Lap + gamma_i - k_i1^2/2) v_i + kappa_i(t) v_j^{1+beta_i}
 * on (0, L): Strang splitting with Crank-Nicolson for the linear part
 * (tridiagonal solves) and explicit midpoint substeps for the reaction,
 * under a positivity + growth controller. Noise factors use linear
 * interpolation of (W, B^H) between grid samples. Integration halts at the
 * blow-up threshold with the hit time refined at half step.
 */
PdeTrajectory solve_random_pde(const SystemParams& params, const DerivedConstants& consts,
                               const SamplePath& path, const SpatialMesh& mesh,
                               const SolverControls& controls);

/// Trapezoid quadrature of field * psi over the mesh.
double project_on_eigenfunction(const Eigen::ArrayXd& interior_field, const SpatialMesh& mesh,
                                const EigenPair& eig);

struct OdeTrajectory {
    std::vector<double> times, h1, h2;
    SolverStatus status = SolverStatus::CompletedHorizon;
    double t_blow = std::numeric_limits<double>::infinity();
    double theta = 0.0;

    bool blew_up() const { return status == SolverStatus::BlowUp; }
};

/// RK4 integration of the projected subsolution pair
///   h_1' = (-lambda + gamma_1 - k_11^2/2) h_1 + e^{rho1 W + rho2 B^H} h_2^{1+beta1}
///   h_2' = (-lambda + gamma_2 - k_21^2/2) h_2 + e^{rho1 W + rho2 B^H} h_1^{1+beta2}
/// with the same blow-up controller as the PDE solver. Requires the coupling
/// condition.
OdeTrajectory integrate_subsolution_ode(const SamplePath& path, const SystemParams& params,
                                        const DerivedConstants& consts,
                                        std::pair<double, double> h0,
                                        const SolverControls& controls);

struct EnvelopeReport {
    double condition_value[2] = {0.0, 0.0};  // at the horizon, per component
    bool condition_holds = false;            // both below 1 at the horizon
    double margin = 0.0;                     // 1 / max condition value
    int n_checked = 0;
    int n_violations = 0;
    double worst_excess = 0.0;               // max relative excess over the envelope
};

/// Evaluates the truncated global-existence condition along the path
/// (eigen-multiple data; gamma_i = lambda + k_i1^2/2) and, when it holds,
/// compares the recorded snapshots against the solution envelope
///   v_i(t,x) <= C_i psi(x) / (1 - condition_i(t))^{1/beta_i}.
EnvelopeReport check_global_envelope(const PdeTrajectory& trajectory, const SystemParams& params,
                                     const DerivedConstants& consts, const SamplePath& path,
                                     const SpatialMesh& mesh);

/// Trajectory CSV: t, sup_v1, sup_v2, h1, h2 where (h1, h2) is the projected
/// subsolution pair integrated on the same path (rows up to the shorter run).
void write_trajectory_csv(std::ostream& os, const PdeTrajectory& pde, const OdeTrajectory& ode);

/// Blow-up summary as a JSON-compatible record: t_blow, theta, mesh, controls.
std::string blowup_summary_json(const PdeTrajectory& traj, const SpatialMesh& mesh,
                                const SolverControls& controls);

struct SharpBoundThreshold {
    double condition_value[2];  // beta_i (C2 (1+c) sup(psi)^2)^{beta_i}
    double budget[2];           // exponential-functional budgets 1/value
};

/// Heat-kernel based global-existence threshold; c is the (domain-dependent)
/// kernel constant supplied by the caller.
SharpBoundThreshold sharp_bound_threshold(const SystemParams& params,
                                          const DerivedConstants& consts, double heat_kernel_c);

}  // namespace blowlab

#endif
