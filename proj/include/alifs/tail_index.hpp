#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace alifs {

inline double domain_sup(const ModelSpec& spec) { return slopes_domain_sup(spec.slope_laws()); }

struct KappaSolution {
    std::optional<double> kappa;
    double lo = 0.0, hi = 0.0;
    double residual = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    double domain_sup = kInf;
    bool rho_dips_below_one = false;
    bool drift_negative_at_zero = false;
    bool cap_reached = false;
    bool never_exceeds_one = false;
    std::vector<std::pair<double, double>> history;  // (theta, value) in evaluation order
};

namespace detail {

// Root of f(theta) = 1 on (0, sup), f convex with f(theta) < 1 somewhere to the right of 0.
inline KappaSolution solve_unit_root(const std::function<double(double)>& f, double sup, double tol) {
    if (!(tol > 0)) throw DomainError("tol must be > 0");
    KappaSolution s;
    s.domain_sup = sup;
    auto eval = [&](double t) {
        const double y = f(t);
        s.history.emplace_back(t, y);
        return y;
    };

    bool flat = true;
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
        if (!(t < sup)) break;
        if (std::abs(eval(t) - 1.0) >= 1e-12) {
            flat = false;
            break;
        }
    }
    if (flat && sup > 0.25) throw DegenerateSpectrum("spectral function identically 1 on the probe grid");

    const double f0 = eval(0.0);
    const double h0 = std::min(1e-6, 0.5 * sup);
    s.drift_negative_at_zero = eval(h0) < f0;

    const double cap = std::min(sup, 256.0);
    const double cap_eval = sup <= 256.0 ? sup * (1.0 - 1e-9) : 256.0;
    double lo = 0.0, flo = f0 - 1.0;
    double t = std::min(1e-3, cap_eval);
    double g = eval(t) - 1.0;
    while (true) {
        if (g < 0) s.rho_dips_below_one = true;
        if (g > 0) break;
        lo = t;
        flo = g;
        if (t >= cap_eval) {
            s.cap_reached = true;
            s.never_exceeds_one = true;
            s.lo = s.hi = t;
            return s;
        }
        t = std::min(2.0 * t, cap_eval);
        if (t >= cap) t = cap_eval;
        g = eval(t) - 1.0;
    }
    if (!(flo < 0)) {
        // rho exceeds 1 immediately: no root in the interior.
        s.lo = lo;
        s.hi = t;
        return s;
    }

    double a = lo, fa = flo, b = t, fb = g;
    int last = 0;
    double x = b, fx = fb;
    for (int it = 0; it < 200; ++it) {
        s.iterations = it + 1;
        x = (it % 4 == 3) ? 0.5 * (a + b) : (a * fb - b * fa) / (fb - fa);
        if (!(x > a && x < b)) x = 0.5 * (a + b);
        fx = eval(x) - 1.0;
        if (fx < 0) {
            a = x;
            fa = fx;
            if (last == -1) fb *= 0.5;
            last = -1;
        } else if (fx > 0) {
            b = x;
            fb = fx;
            if (last == 1) fa *= 0.5;
            last = 1;
        } else {
            a = b = x;
        }
        const double width = b - a;
        if (std::abs(fx) < tol && (width < tol * std::max(1.0, x) ||
                                   width <= 8 * std::numeric_limits<double>::epsilon() * std::max(1.0, x)))
            break;
    }
    s.kappa = x;
    s.residual = fx;
    s.lo = a;
    s.hi = b;
    return s;
}

}  // namespace detail

inline KappaSolution solve_kappa(const ModelSpec& spec, double tol = 1e-12, const MomentMethod& method = {}) {
    const SlopePair slopes = spec.slope_laws();
    return detail::solve_unit_root([&](double t) { return spectral_radius(cramer_matrix(slopes, t, method)); },
                                   slopes_domain_sup(slopes), tol);
}

// side = -1 solves p--(theta) = 1, side = +1 solves p++(theta) = 1.
inline KappaSolution solve_diag_kappa(const SlopePair& slopes, int side, double tol = 1e-12,
                                      const MomentMethod& method = {}) {
    const SlopeLaw& law = side < 0 ? slopes.first : slopes.second;
    return detail::solve_unit_root([&](double t) { return law.moment(t, 1, method).value; }, law.theta_max(), tol);
}

inline KappaSolution solve_diag_kappa(const ModelSpec& spec, int side, double tol = 1e-12,
                                      const MomentMethod& method = {}) {
    return solve_diag_kappa(spec.slope_laws(), side, tol, method);
}

enum class DriftMethod { EigenFormula, MomentFormula, FiniteDifference };

inline const char* drift_method_name(DriftMethod m) {
    static const char* names[] = {"eigen_formula", "moment_formula", "finite_difference"};
    return names[int(m)];
}

struct DriftValue {
    double theta = 0.0;
    double drift = 0.0;  // rho'(theta) / rho(theta)
    DriftMethod method = DriftMethod::EigenFormula;
    double rho = 0.0, rho_prime = 0.0;
    std::optional<double> finite_difference;
    // sum_d pihat_d sum_e (v_e / v_d) E|^dA|^theta log|^dA| 1{e}, equal to u^T P' v
    std::optional<double> moment_form;
    // pihat_- E|-A|^theta log|-A| + pihat_+ E|+A|^theta log|+A|, exact only when v = (1, 1)
    std::optional<double> moment_form_plain;
    bool moment_forms_agree = false;
};

inline DriftValue stationary_drift(const SlopePair& slopes, double theta, const MomentMethod& method = {}) {
    const double sup = slopes_domain_sup(slopes);
    if (theta >= sup) throw InfiniteDrift("log-moment diverges at theta = " + std::to_string(theta));
    const CramerMatrix m = cramer_matrix(slopes, theta, method);
    const CramerMatrix dm = cramer_derivative(slopes, theta, method);
    for (const auto& row : dm.p)
        for (double x : row)
            if (!std::isfinite(x)) throw InfiniteDrift("log-moment diverges");
    const SpectralData s = eigen_pair(m);
    if (!(s.rho > 0)) throw DriftUnavailable("spectral radius vanishes");
    DriftValue out;
    out.theta = theta;
    out.rho = s.rho;
    const bool smooth = s.structure == EigenStructure::Irreducible || s.structure == EigenStructure::UpperDominantPlus ||
                        s.structure == EigenStructure::UpperDominantMinus ||
                        s.structure == EigenStructure::LowerDominantMinus ||
                        s.structure == EigenStructure::LowerDominantPlus;
    if (smooth) {
        double r = 0.0;
        for (int d = 0; d < 2; ++d)
            for (int e = 0; e < 2; ++e) r += s.u[d] * dm.p[d][e] * s.v[e];
        out.rho_prime = r;
    } else {
        // rho = max(p--, p++) locally; take the dominant diagonal, the larger slope on a tie.
        const double a = m.mm(), d = m.pp();
        if (std::abs(a - d) < 1e-10 * std::max(1.0, s.rho))
            out.rho_prime = std::max(dm.mm(), dm.pp());
        else
            out.rho_prime = a > d ? dm.mm() : dm.pp();
    }
    out.drift = out.rho_prime / s.rho;

    if (s.v[0] > 0 && s.v[1] > 0) {
        double g = 0.0;
        for (int d = 0; d < 2; ++d)
            for (int e = 0; e < 2; ++e) g += s.pihat[d] * (s.v[e] / s.v[d]) * dm.p[d][e];
        out.moment_form = g / s.rho;
        out.moment_form_plain = (s.pihat[0] * (dm.mm() + dm.mp()) + s.pihat[1] * (dm.pm() + dm.pp())) / s.rho;
        out.moment_forms_agree = std::abs(*out.moment_form - *out.moment_form_plain) <=
                                 1e-9 * std::max(1.0, std::abs(*out.moment_form));
    }

    const double h = std::max(1e-6, 1e-6 * theta);
    if (theta + h < sup) {
        auto lr = [&](double t) { return std::log(spectral_radius(cramer_matrix(slopes, t, method))); };
        if (theta - h >= 0)
            out.finite_difference = (lr(theta + h) - lr(theta - h)) / (2 * h);
        else
            out.finite_difference = (lr(theta + h) - lr(theta)) / h;
    }
    return out;
}

inline DriftValue stationary_drift(const ModelSpec& spec, double theta, const MomentMethod& method = {}) {
    return stationary_drift(spec.slope_laws(), theta, method);
}

// Derivative of the diagonal entry p_dd at theta.
inline double diag_derivative(const SlopePair& slopes, int side, double theta, const MomentMethod& method = {}) {
    const SlopeLaw& law = side < 0 ? slopes.first : slopes.second;
    const MomentValue v = law.moment(theta, 1, method, true);
    if (!std::isfinite(v.value)) throw InfiniteDrift("log-moment diverges");
    return v.value;
}

}  // namespace alifs
