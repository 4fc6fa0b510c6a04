#ifndef BLOWLAB_PARAMS_HPP
#define BLOWLAB_PARAMS_HPP

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "blowlab/noise.hpp"

namespace blowlab {

/// f_i = C_i psi with 0 < C_1 <= C_2.
struct EigenMultipleData {
    double c1 = 1.0;
    double c2 = 1.0;
};

/// Nonnegative mesh values on a uniform grid over [0, L], zero at both ends.
struct TabulatedData {
    Eigen::ArrayXd f1;
    Eigen::ArrayXd f2;
};

using InitialData = std::variant<EigenMultipleData, TabulatedData>;

/**
 * Full description of the two-component system: exponents beta_1 >= beta_2 > 0,
 * drifts gamma_i, nonnegative noise matrix k (row i = component, column 0 = W,
 * column 1 = B^H), Hurst index H in (1/2,1), noise coupling, interval length,
 * and initial data.
 */
struct SystemParams {
    double beta1 = 1.0;
    double beta2 = 1.0;
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    Eigen::Matrix2d k = Eigen::Matrix2d::Zero();
    double hurst = 0.7;
    NoiseCoupling coupling = NoiseCoupling::Independent;
    double domain_length = 3.141592653589793238462643383279502884;
    InitialData initial = EigenMultipleData{};

    void validate() const;  // throws ConfigError
    bool equal_betas() const { return beta1 == beta2; }
};

/// First Dirichlet eigenpair of -Laplace on (0, L): lambda = (pi/L)^2 and
/// psi(x) = (pi / 2L) sin(pi x / L), normalized to unit integral.
struct EigenPair {
    double lambda = 1.0;
    double psi_sup = 0.5;
    double domain_length = 3.141592653589793238462643383279502884;

    double psi(double x) const;
};

EigenPair eigenpair(double domain_length);

struct CouplingMismatch {
    int row;  // 1 or 2 (which equality of the coupling condition failed)
    double lhs, rhs;
};

/// Result of checking the coupling condition
///   (1+beta_1) k_21 - k_11 = (1+beta_2) k_11 - k_21 =: rho_1
///   (1+beta_1) k_22 - k_12 = (1+beta_2) k_12 - k_22 =: rho_2.
/// When inconsistent, only the general-case bounds apply.
struct CouplingExponents {
    std::optional<Eigen::Vector2d> rho;
    std::vector<CouplingMismatch> mismatches;
    bool consistent() const { return rho.has_value(); }
};

CouplingExponents derive_coupled_exponents(const SystemParams& params, double rel_tol = 1e-9);

/// D_1 = ((b1-b2)/(1+b1)) * ((1+b1)/(1+b2))^{(1+b2)/(b1-b2)}, for b1 > b2.
double compute_D1(double beta1, double beta2);

/// Largest admissible eps_0 = min{1, (h2_0 / D1^{1/(1+b2)})^{b1-b2}}.
double compute_epsilon0(double h2_0, double d1, double beta1, double beta2);

/// 2^{-(1+b2)} eps0 E0^{1+b2} >= eps0^{(1+b1)/(b1-b2)} D1.
bool check_mass_condition(double eps0, double e0, double d1, double beta1, double beta2);

/// E(0) = int (f1 + f2) psi  (analytic for eigen multiples, quadrature otherwise).
double compute_E0(const InitialData& initial, const EigenPair& eig);

/// h_i(0) = int f_i psi, the initial eigenfunction projection of component i (1 or 2).
double initial_projection(const InitialData& initial, const EigenPair& eig, int component);

/// Everything the stopping times and probability bounds need, computed once.
struct DerivedConstants {
    EigenPair eig;
    std::optional<Eigen::Vector2d> rho;  // coupling exponents when (a4)-consistent
    double gamma_min = 0.0;
    double k_sq = 0.0;                   // max(k11^2, k21^2) / 2
    double a = 0.0;                      // beta1 * (lambda - gamma_min + k_sq)
    double a1 = 0.0;                     // beta2 * (lambda - gamma_min + k_sq)
    std::optional<double> d1;            // beta1 > beta2 only
    std::optional<double> eps0;
    double e0 = 0.0;
    double h1_0 = 0.0, h2_0 = 0.0;
    bool mass_condition = false;
    std::optional<double> theta_lower;   // eigen-multiple initial data only
    std::optional<double> theta_u1;      // beta1 == beta2
    std::optional<double> theta_u2;      // beta1 > beta2 with mass condition
    bool gamma_matches_eigen = false;    // gamma_i == lambda + k_i1^2 / 2

    double drift_upper_1() const;        // beta (−lambda + gamma_min − k_sq), equal betas
    double drift_upper_2() const;        // beta2 variant
};

DerivedConstants derive_constants(const SystemParams& params);

/// Row i: coefficients (on W, on B^H) of the reaction noise factor of
/// component i+1, exp{((1+beta_i) k_j1 - k_i1) W + ((1+beta_i) k_j2 - k_i2) B^H}
/// with j the other component. Under the coupling condition both rows
/// collapse to (rho_1, rho_2).
Eigen::Matrix2d reaction_exponents(const SystemParams& params);

/// theta_lower = min_i 1 / (beta_i C_i^{beta_i} sup(psi)^{beta_i}); both
/// crossing conditions integrate the same functional, so the infimum is a
/// single crossing of the smaller threshold.
double threshold_lower(const EigenMultipleData& data, const SystemParams& params,
                       const EigenPair& eig);

/// theta_u1 = 2^beta E(0)^{-beta} / beta.
double threshold_upper_1(double beta, double e0);

/// N = [ beta2 E(0)^{beta2} ( eps0 / 2^{1+beta2} − eps0^{(1+b1)/(b1−b2)} D1 / E(0)^{1+b2} ) ]^{-1};
/// requires a strictly positive bracket (mass condition).
std::optional<double> threshold_upper_2(double beta1, double beta2, double e0, double eps0,
                                        double d1);

}  // namespace blowlab

#endif
