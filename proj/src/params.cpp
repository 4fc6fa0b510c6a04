#include "blowlab/params.hpp"

#include <cmath>

#include "blowlab/common.hpp"

namespace blowlab {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

void SystemParams::validate() const {
    if (!(beta2 > 0.0) || !(beta1 >= beta2))
        throw ConfigError("params: requires beta1 >= beta2 > 0");
    if ((k.array() < 0.0).any())
        throw ConfigError("params: noise coefficients k_ij must be nonnegative");
    if (!(hurst > 0.5 && hurst < 1.0))
        throw ConfigError("params: hurst must lie in (1/2, 1)");
    if (!(domain_length > 0.0))
        throw ConfigError("params: domain_length must be positive");
    if (!std::isfinite(gamma1) || !std::isfinite(gamma2))
        throw ConfigError("params: drift constants must be finite");

    if (const auto* em = std::get_if<EigenMultipleData>(&initial)) {
        if (!(em->c1 > 0.0) || !(em->c2 >= em->c1))
            throw ConfigError("params: eigen-multiple data requires 0 < c1 <= c2");
    } else {
        const auto& tab = std::get<TabulatedData>(initial);
        if (tab.f1.size() < 3 || tab.f1.size() != tab.f2.size())
            throw ConfigError("params: tabulated data needs matching meshes of >= 3 points");
        for (const auto* f : {&tab.f1, &tab.f2}) {
            if ((f->array() < 0.0).any())
                throw ConfigError("params: tabulated initial data must be nonnegative");
            if ((*f)[0] != 0.0 || (*f)[f->size() - 1] != 0.0)
                throw ConfigError("params: tabulated initial data must vanish at the boundary");
        }
    }
}

double EigenPair::psi(double x) const {
    if (x <= 0.0 || x >= domain_length) return 0.0;
    return (kPi / (2.0 * domain_length)) * std::sin(kPi * x / domain_length);
}

EigenPair eigenpair(double domain_length) {
    if (!(domain_length > 0.0)) throw ConfigError("eigenpair: domain length must be positive");
    EigenPair eig;
    eig.domain_length = domain_length;
    eig.lambda = (kPi / domain_length) * (kPi / domain_length);
    eig.psi_sup = kPi / (2.0 * domain_length);
    return eig;
}

CouplingExponents derive_coupled_exponents(const SystemParams& params, double rel_tol) {
    CouplingExponents out;
    const double b1 = params.beta1, b2 = params.beta2;
    const auto& k = params.k;
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());

    const double lhs1 = (1.0 + b1) * k(1, 0) - k(0, 0);
    const double rhs1 = (1.0 + b2) * k(0, 0) - k(1, 0);
    const double lhs2 = (1.0 + b1) * k(1, 1) - k(0, 1);
    const double rhs2 = (1.0 + b2) * k(0, 1) - k(1, 1);

    if (std::abs(lhs1 - rhs1) > rel_tol * scale) out.mismatches.push_back({1, lhs1, rhs1});
    if (std::abs(lhs2 - rhs2) > rel_tol * scale) out.mismatches.push_back({2, lhs2, rhs2});
    if (out.mismatches.empty()) out.rho = Eigen::Vector2d(lhs1, lhs2);
    return out;
}

double compute_D1(double beta1, double beta2) {
    if (!(beta1 > beta2) || !(beta2 > 0.0))
        throw NumericalError("compute_D1: requires beta1 > beta2 > 0");
    const double ratio = (1.0 + beta1) / (1.0 + beta2);
    return (beta1 - beta2) / (1.0 + beta1) * std::pow(ratio, (1.0 + beta2) / (beta1 - beta2));
}

double compute_epsilon0(double h2_0, double d1, double beta1, double beta2) {
    if (!(h2_0 > 0.0)) throw NumericalError("compute_epsilon0: requires h2(0) > 0");
    const double cap = std::pow(h2_0 / std::pow(d1, 1.0 / (1.0 + beta2)), beta1 - beta2);
    return std::min(1.0, cap);
}

bool check_mass_condition(double eps0, double e0, double d1, double beta1, double beta2) {
    const double lhs = std::pow(2.0, -(1.0 + beta2)) * eps0 * std::pow(e0, 1.0 + beta2);
    const double rhs = std::pow(eps0, (1.0 + beta1) / (beta1 - beta2)) * d1;
    return lhs >= rhs;
}

namespace {

double tabulated_projection(const Eigen::ArrayXd& f, const EigenPair& eig) {
    // Composite trapezoid of f * psi on the tabulated mesh (f vanishes at the ends).
    const int n = static_cast<int>(f.size()) - 1;
    const double dx = eig.domain_length / n;
    double acc = 0.0, comp = 0.0;
    for (int m = 1; m < n; ++m) {
        const double term = f[m] * eig.psi(m * dx) * dx;
        const double y = term - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    return acc;
}

}  // namespace

double initial_projection(const InitialData& initial, const EigenPair& eig, int component) {
    if (component != 1 && component != 2)
        throw NumericalError("initial_projection: component must be 1 or 2");
    if (const auto* em = std::get_if<EigenMultipleData>(&initial)) {
        // int C psi^2 = C * (pi/2L)^2 * L/2 = C pi^2 / (8 L)
        const double c = component == 1 ? em->c1 : em->c2;
        return c * kPi * kPi / (8.0 * eig.domain_length);
    }
    const auto& tab = std::get<TabulatedData>(initial);
    return tabulated_projection(component == 1 ? tab.f1 : tab.f2, eig);
}

double compute_E0(const InitialData& initial, const EigenPair& eig) {
    return initial_projection(initial, eig, 1) + initial_projection(initial, eig, 2);
}

Eigen::Matrix2d reaction_exponents(const SystemParams& p) {
    Eigen::Matrix2d out;
    out(0, 0) = (1.0 + p.beta1) * p.k(1, 0) - p.k(0, 0);
    out(0, 1) = (1.0 + p.beta1) * p.k(1, 1) - p.k(0, 1);
    out(1, 0) = (1.0 + p.beta2) * p.k(0, 0) - p.k(1, 0);
    out(1, 1) = (1.0 + p.beta2) * p.k(0, 1) - p.k(1, 1);
    return out;
}

double threshold_lower(const EigenMultipleData& data, const SystemParams& params,
                       const EigenPair& eig) {
    const double t1 =
        1.0 / (params.beta1 * std::pow(data.c1 * eig.psi_sup, params.beta1));
    const double t2 =
        1.0 / (params.beta2 * std::pow(data.c2 * eig.psi_sup, params.beta2));
    return std::min(t1, t2);
}

double threshold_upper_1(double beta, double e0) {
    if (!(e0 > 0.0)) throw NumericalError("threshold_upper_1: requires E(0) > 0");
    return std::pow(2.0, beta) / (beta * std::pow(e0, beta));
}

std::optional<double> threshold_upper_2(double beta1, double beta2, double e0, double eps0,
                                        double d1) {
    if (!(e0 > 0.0)) return std::nullopt;
    const double bracket = eps0 / std::pow(2.0, 1.0 + beta2) -
                           std::pow(eps0, (1.0 + beta1) / (beta1 - beta2)) * d1 /
                               std::pow(e0, 1.0 + beta2);
    if (!(bracket > 0.0)) return std::nullopt;
    return 1.0 / (beta2 * std::pow(e0, beta2) * bracket);
}

double DerivedConstants::drift_upper_1() const {
    return -a;  // a = beta (lambda - gamma + k^2), integrand drift is its negative
}

double DerivedConstants::drift_upper_2() const {
    return -a1;
}

DerivedConstants derive_constants(const SystemParams& params) {
    params.validate();
    DerivedConstants c;
    c.eig = eigenpair(params.domain_length);
    c.gamma_min = std::min(params.gamma1, params.gamma2);
    c.k_sq = std::max(params.k(0, 0) * params.k(0, 0), params.k(1, 0) * params.k(1, 0)) / 2.0;
    c.a = params.beta1 * (c.eig.lambda - c.gamma_min + c.k_sq);
    c.a1 = params.beta2 * (c.eig.lambda - c.gamma_min + c.k_sq);

    const auto coupling = derive_coupled_exponents(params);
    if (coupling.consistent()) c.rho = coupling.rho;

    c.h1_0 = initial_projection(params.initial, c.eig, 1);
    c.h2_0 = initial_projection(params.initial, c.eig, 2);
    c.e0 = c.h1_0 + c.h2_0;

    const double gtol = 1e-9 * std::max(1.0, c.eig.lambda);
    c.gamma_matches_eigen =
        std::abs(params.gamma1 - (c.eig.lambda + params.k(0, 0) * params.k(0, 0) / 2.0)) <= gtol &&
        std::abs(params.gamma2 - (c.eig.lambda + params.k(1, 0) * params.k(1, 0) / 2.0)) <= gtol;

    if (const auto* em = std::get_if<EigenMultipleData>(&params.initial))
        c.theta_lower = threshold_lower(*em, params, c.eig);

    if (params.equal_betas()) {
        if (c.e0 > 0.0) c.theta_u1 = threshold_upper_1(params.beta1, c.e0);
    } else {
        c.d1 = compute_D1(params.beta1, params.beta2);
        if (c.h2_0 > 0.0) {
            c.eps0 = compute_epsilon0(c.h2_0, *c.d1, params.beta1, params.beta2);
            c.mass_condition =
                check_mass_condition(*c.eps0, c.e0, *c.d1, params.beta1, params.beta2);
            if (c.mass_condition)
                c.theta_u2 = threshold_upper_2(params.beta1, params.beta2, c.e0, *c.eps0, *c.d1);
        }
    }
    return c;
}

}  // namespace blowlab
