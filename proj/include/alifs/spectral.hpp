#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "slope.hpp"

namespace alifs {

// Index 0 is the minus state, 1 the plus state.
inline int state_index(int sign) { return sign > 0 ? 1 : 0; }
inline int state_sign(int idx) { return idx == 1 ? 1 : -1; }

struct CramerMatrix {
    double theta = 0.0;
    std::array<std::array<double, 2>, 2> p{};
    std::array<std::array<double, 2>, 2> se{};  // per-entry error (MC standard error or quadrature estimate)
    std::array<std::array<bool, 2>, 2> structural_zero{};
    MethodUsed method = MethodUsed::Analytic;
    std::uint64_t mc_samples = 0;
    double abs_error = 0.0;

    double mm() const { return p[0][0]; }
    double mp() const { return p[0][1]; }
    double pm() const { return p[1][0]; }
    double pp() const { return p[1][1]; }

    static CramerMatrix from_entries(double mm, double mp, double pm, double pp, double theta = 0.0) {
        CramerMatrix m;
        m.theta = theta;
        m.p = {{{mm, mp}, {pm, pp}}};
        return m;
    }
};

using SlopePair = std::pair<SlopeLaw, SlopeLaw>;

inline double slopes_domain_sup(const SlopePair& s) { return std::min(s.first.theta_max(), s.second.theta_max()); }

// p_{de}(theta) = E|^dA|^theta 1{sign(^dA) d = e}; with logw the theta-derivative.
inline CramerMatrix cramer_matrix(const SlopePair& slopes, double theta, const MomentMethod& method = {},
                                  bool logw = false) {
    if (!(theta >= 0)) throw DomainError("theta must be >= 0");
    const double sup = slopes_domain_sup(slopes);
    if (theta >= sup) throw MomentDivergence("theta = " + std::to_string(theta) + " outside the moment domain");
    CramerMatrix m;
    m.theta = theta;
    m.method = MethodUsed::Analytic;
    for (int d = 0; d < 2; ++d) {
        const SlopeLaw& law = d == 0 ? slopes.first : slopes.second;
        for (int e = 0; e < 2; ++e) {
            const int side = state_sign(d) * state_sign(e);
            m.structural_zero[d][e] = !law.sign_possible(side);
            if (m.structural_zero[d][e]) {
                m.p[d][e] = 0.0;
                continue;
            }
            const MomentValue v = law.moment(theta, side, method, logw);
            if (!std::isfinite(v.value))
                throw MomentDivergence("entry (" + std::to_string(d) + "," + std::to_string(e) + ") diverges");
            m.p[d][e] = v.value;
            m.se[d][e] = v.abs_error;
            m.abs_error = std::max(m.abs_error, v.abs_error);
            if (int(v.method) > int(m.method)) m.method = v.method;
        }
    }
    if (m.method == MethodUsed::MonteCarlo) m.mc_samples = method.mc_samples;
    return m;
}

inline CramerMatrix cramer_matrix(const ModelSpec& spec, double theta, const MomentMethod& method = {}) {
    return cramer_matrix(spec.slope_laws(), theta, method);
}

// Entrywise derivative P'(theta).
inline CramerMatrix cramer_derivative(const SlopePair& slopes, double theta, const MomentMethod& method = {}) {
    return cramer_matrix(slopes, theta, method, true);
}

inline double spectral_radius(const CramerMatrix& m) {
    const double a = m.mm(), d = m.pp();
    return 0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + m.mp() * m.pm());
}

enum class EigenStructure { Irreducible, UpperDominantPlus, UpperDominantMinus, LowerDominantMinus, LowerDominantPlus,
                            TriangularBoundary, Diagonal, DiagonalTie, Zero };

inline const char* eigen_structure_name(EigenStructure s) {
    static const char* names[] = {"irreducible", "upper_2A", "upper_2B", "lower_2A", "lower_2B",
                                  "boundary_2C", "diagonal", "diagonal_tie", "zero"};
    return names[int(s)];
}

struct SpectralData {
    double theta = 0.0, rho = 0.0;
    std::array<double, 2> u{}, v{}, pihat{};
    EigenStructure structure = EigenStructure::Zero;
    bool unique = false;           // eigen-pair uniquely determined
    bool normalizable = false;     // u^T v = 1 attainable
    bool phat_definable = false;   // v_- > 0 and v_+ > 0
};

namespace detail {

// Mirror of the minus and plus states.
inline CramerMatrix mirror(const CramerMatrix& m) {
    CramerMatrix r = m;
    r.p = {{{m.pp(), m.pm()}, {m.mp(), m.mm()}}};
    return r;
}
inline SpectralData mirror(SpectralData s) {
    std::swap(s.u[0], s.u[1]);
    std::swap(s.v[0], s.v[1]);
    std::swap(s.pihat[0], s.pihat[1]);
    return s;
}

inline SpectralData upper_triangular(const CramerMatrix& m, double rho) {
    SpectralData s;
    const double a = m.mm(), b = m.mp(), d = m.pp();
    if (std::abs(a - d) < 1e-10 * std::max(1.0, rho)) {
        s.structure = EigenStructure::TriangularBoundary;
        s.u = {0.0, 1.0};
        s.v = {1.0, 0.0};
        return s;
    }
    s.unique = s.normalizable = true;
    if (d > a) {
        s.structure = EigenStructure::UpperDominantPlus;
        s.u = {0.0, 1.0};
        s.v = {b / (d - a), 1.0};
        s.phat_definable = s.v[0] > 0;
    } else {
        s.structure = EigenStructure::UpperDominantMinus;
        const double z = a - d + b;
        s.u = {(a - d) / z, b / z};
        s.v = {z / (a - d), 0.0};
    }
    return s;
}

}  // namespace detail

inline SpectralData eigen_pair(const CramerMatrix& m) {
    const double rho = spectral_radius(m);
    SpectralData s;
    s.theta = m.theta;
    s.rho = rho;
    if (!(rho > 0)) {
        s.structure = EigenStructure::Zero;
    } else {
        const double a = m.mm(), b = m.mp(), c = m.pm(), d = m.pp();
        if (b > 0 && c > 0) {
            const double disc = rho - 0.5 * (a + d);
            double ra, rd;  // rho - a, rho - d, with (rho-a)(rho-d) = bc
            if (a >= d) {
                rd = 0.5 * (a - d) + disc;
                ra = b * c / rd;
            } else {
                ra = 0.5 * (d - a) + disc;
                rd = b * c / ra;
            }
            (void)rd;
            s.structure = EigenStructure::Irreducible;
            s.u = {c / (c + ra), ra / (c + ra)};
            const double scale = 1.0 / (s.u[0] * b + s.u[1] * ra);
            s.v = {b * scale, ra * scale};
            s.unique = s.normalizable = s.phat_definable = true;
        } else if (b > 0) {
            const double keep = s.rho;
            s = detail::upper_triangular(m, rho);
            s.rho = keep;
        } else if (c > 0) {
            s = detail::mirror(detail::upper_triangular(detail::mirror(m), rho));
            if (s.structure == EigenStructure::UpperDominantPlus) s.structure = EigenStructure::LowerDominantMinus;
            else if (s.structure == EigenStructure::UpperDominantMinus) s.structure = EigenStructure::LowerDominantPlus;
            s.rho = rho;
        } else if (std::abs(a - d) < 1e-10 * std::max(1.0, rho)) {
            s.structure = EigenStructure::DiagonalTie;
            s.u = {0.5, 0.5};
            s.v = {1.0, 1.0};
            s.normalizable = s.phat_definable = true;
        } else {
            s.structure = EigenStructure::Diagonal;
            s.u = s.v = a > d ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
            s.unique = s.normalizable = true;
        }
        s.theta = m.theta;
        s.rho = rho;
    }
    s.pihat = {s.u[0] * s.v[0], s.u[1] * s.v[1]};
    return s;
}

// Throws EigenDegenerate when the normalization u^T v = 1 is impossible.
inline SpectralData eigen_pair_strict(const CramerMatrix& m) {
    SpectralData s = eigen_pair(m);
    if (!s.normalizable)
        throw EigenDegenerate(std::string("normalization impossible (") + eigen_structure_name(s.structure) + ")");
    return s;
}

// max(|u^T P - rho u^T|, |P v - rho v|) relative to rho.
inline double eigen_residual(const CramerMatrix& m, const SpectralData& s) {
    double r = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double left = s.u[0] * m.p[0][i] + s.u[1] * m.p[1][i] - s.rho * s.u[i];
        const double right = m.p[i][0] * s.v[0] + m.p[i][1] * s.v[1] - s.rho * s.v[i];
        r = std::max({r, std::abs(left), std::abs(right)});
    }
    return s.rho > 0 ? r / s.rho : r;
}

using StochasticMatrix = std::array<std::array<double, 2>, 2>;

inline StochasticMatrix phat(const CramerMatrix& m, const SpectralData& s) {
    if (!(s.v[0] > 0 && s.v[1] > 0))
        throw NotDefinable("a component of v vanishes, the tilted matrix cannot be formed");
    StochasticMatrix q{};
    for (int d = 0; d < 2; ++d)
        for (int e = 0; e < 2; ++e) q[d][e] = m.p[d][e] * s.v[e] / (s.rho * s.v[d]);
    return q;
}

inline std::array<double, 2> stationary_pi(const CramerMatrix& p0) {
    for (int d = 0; d < 2; ++d)
        if (std::abs(p0.p[d][0] + p0.p[d][1] - 1.0) > 1e-12)
            throw NotStochastic("row " + std::to_string(d) + " sums to " + std::to_string(p0.p[d][0] + p0.p[d][1]));
    if (!(p0.mp() > 0 && p0.pm() > 0)) throw NotIrreducible("an off-diagonal entry vanishes");
    const double z = p0.mp() + p0.pm();
    return {p0.pm() / z, p0.mp() / z};
}

enum class CaseTag { Irreducible, UnilateralMinus, UnilateralPlus, Separated };

inline const char* case_name(CaseTag c) {
    switch (c) {
        case CaseTag::Irreducible: return "irreducible";
        case CaseTag::UnilateralMinus: return "unilateral_minus";
        case CaseTag::UnilateralPlus: return "unilateral_plus";
        default: return "separated";
    }
}

inline CaseTag classify_case(const CramerMatrix& p0) {
    auto positive = [&](int d, int e) {
        if (p0.structural_zero[d][e]) return false;
        const double x = p0.p[d][e];
        if (p0.method == MethodUsed::MonteCarlo && x <= 4.0 * p0.se[d][e])
            throw AmbiguousClassification("Monte Carlo entry indistinguishable from 0; use analytic or quadrature moments");
        return x > 0.0;
    };
    const bool mp = positive(0, 1), pm = positive(1, 0);
    if (mp && pm) return CaseTag::Irreducible;
    if (mp) return CaseTag::UnilateralMinus;
    if (pm) return CaseTag::UnilateralPlus;
    return CaseTag::Separated;
}

inline CaseTag classify_case(const ModelSpec& spec) { return classify_case(cramer_matrix(spec, 0.0)); }

enum class DegeneracyAlt { None, A, B, Unidentified };

inline const char* degeneracy_name(DegeneracyAlt a) {
    static const char* names[] = {"none", "a", "b", "unidentified"};
    return names[int(a)];
}

struct DegeneracyReport {
    bool flagged = false;
    double max_residual = 0.0;       // max |rho - 1| over the grid
    double identity_residual = 0.0;  // max |(1-p--)(1-p++) - p-+ p+-|
    DegeneracyAlt alternative = DegeneracyAlt::None;
    double a = 0.0;                  // parameter of alternative (b)
    double gamma = 0.0;              // constant product p-+ p+- under (b)
    std::vector<double> grid, rho;
};

namespace detail {

// Positive atoms all equal to 1 and negative atoms of one magnitude; returns that magnitude (0 when none).
inline std::optional<double> two_atom_structure(const SlopeLaw& s) {
    if (!s.is_discrete()) return std::nullopt;
    double neg = 0.0;
    for (const auto& a : s.atoms()) {
        if (a.prob <= 0) continue;
        if (a.value > 0) {
            if (std::abs(a.value - 1.0) > 1e-12) return std::nullopt;
        } else if (a.value < 0) {
            if (neg != 0.0 && std::abs(-a.value - neg) > 1e-12 * neg) return std::nullopt;
            neg = -a.value;
        } else {
            return std::nullopt;
        }
    }
    return neg;
}

}  // namespace detail

inline DegeneracyReport degeneracy_scan(const ModelSpec& spec, const std::vector<double>& theta_grid,
                                        const MomentMethod& method = {}) {
    DegeneracyReport r;
    const SlopePair slopes = spec.slope_laws();
    r.grid = theta_grid;
    r.flagged = !theta_grid.empty();
    double prod_lo = kInf, prod_hi = 0.0;
    CramerMatrix last;
    for (double t : theta_grid) {
        const CramerMatrix m = cramer_matrix(slopes, t, method);
        const double rho = spectral_radius(m);
        r.rho.push_back(rho);
        r.max_residual = std::max(r.max_residual, std::abs(rho - 1.0));
        r.identity_residual =
            std::max(r.identity_residual, std::abs((1 - m.mm()) * (1 - m.pp()) - m.mp() * m.pm()));
        prod_lo = std::min(prod_lo, m.mp() * m.pm());
        prod_hi = std::max(prod_hi, m.mp() * m.pm());
        last = m;
    }
    if (r.max_residual >= 1e-10) r.flagged = false;
    if (!r.flagged) return r;

    const bool off_zero = last.structural_zero[0][1] || last.structural_zero[1][0];
    if (off_zero && (slopes.first.is_point_mass_at(1.0) || slopes.second.is_point_mass_at(1.0))) {
        r.alternative = DegeneracyAlt::A;
        return r;
    }
    const auto m1 = detail::two_atom_structure(slopes.first), m2 = detail::two_atom_structure(slopes.second);
    if (!off_zero && m1 && m2 && *m1 > 0 && *m2 > 0 && std::abs(*m1 * *m2 - 1.0) < 1e-12 &&
        prod_hi - prod_lo <= 1e-10 * prod_hi) {
        r.alternative = DegeneracyAlt::B;
        r.a = *m2;
        r.gamma = 0.5 * (prod_lo + prod_hi);
        return r;
    }
    r.alternative = DegeneracyAlt::Unidentified;
    return r;
}

// Log-convexity of a sampled function (second differences of log on an arbitrary grid).
inline bool is_log_convex(const std::vector<double>& x, const std::vector<double>& y, double tol = 1e-10) {
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        const double l0 = std::log(y[i - 1]), l1 = std::log(y[i]), l2 = std::log(y[i + 1]);
        const double s1 = (l1 - l0) / (x[i] - x[i - 1]), s2 = (l2 - l1) / (x[i + 1] - x[i]);
        if (s2 < s1 - tol * std::max(1.0, std::abs(s1))) return false;
    }
    return true;
}

}  // namespace alifs
