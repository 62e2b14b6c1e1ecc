#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dist.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "slope.hpp"

namespace alifs {

enum class ShapeTag { Slash, Backslash, Vee, Wedge, DegenerateZero };

inline const char* shape_name(ShapeTag s) {
    switch (s) {
        case ShapeTag::Slash: return "slash";
        case ShapeTag::Backslash: return "backslash";
        case ShapeTag::Vee: return "vee";
        case ShapeTag::Wedge: return "wedge";
        default: return "degenerate_zero";
    }
}

enum class Family { Affine, Lindley, Arch1, Ar1Arch1, BevertonHolt, UnitIntervalConjugate, CustomTwoSlope };
enum class Domain { Real, Positive };

struct AffineModel {
    ScalarDist A, B;
};
struct LindleyModel {
    ScalarDist A, B;
};
struct Arch1Model {
    double beta = 1.0, lambda = 1.0;
    ScalarDist Z = ScalarDist::gaussian(0, 1);
};
struct Ar1Arch1Model {
    double alpha = 0.0, beta = 1.0, lambda = 1.0;
    ScalarDist Z = ScalarDist::gaussian(0, 1);
};
struct BevertonHoltModel {
    ScalarDist A, B;
};

// Random self-maps of [0,1] used by the unit-interval conjugation.
struct LogisticMap {
    ScalarDist A;  // phi(u) = A u (1 - u)
};
struct ConstantMap {
    double c = 0.5;
};
using UnitMapSpec = std::variant<LogisticMap, ConstantMap>;

struct UnitIntervalConjugateModel {
    UnitMapSpec inner;
};

enum class Coupling { Independent, Comonotone, SharedDriver };
enum class Perturbation { Constant, RandomSign, Sine, Scaled };

struct PerturbationRule {
    Perturbation kind = Perturbation::Constant;
    double factor = 1.0;  // used by Scaled
};

// a_minus = a_minus[0] + a_minus[1] z, a_plus likewise, draw of B = b[0] + b[1] |z|.
struct SharedDriverSpec {
    ScalarDist driver = ScalarDist::gaussian(0, 1);
    std::array<double, 2> a_minus{0.0, 1.0}, a_plus{0.0, 1.0}, b{1.0, 0.0};
};

struct CustomTwoSlopeModel {
    ScalarDist a_minus = ScalarDist::point_mass(1.0), a_plus = ScalarDist::point_mass(1.0);
    Coupling coupling = Coupling::Independent;
    ScalarDist B = ScalarDist::point_mass(1.0);
    PerturbationRule psi;
    SharedDriverSpec shared;
};

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Affine: return "affine";
        case Family::Lindley: return "lindley";
        case Family::Arch1: return "arch1";
        case Family::Ar1Arch1: return "ar1_arch1";
        case Family::BevertonHolt: return "beverton_holt";
        case Family::UnitIntervalConjugate: return "unit_interval_conjugate";
        default: return "custom_two_slope";
    }
}

namespace detail {

// (u, 1-u) with r(u) = x, computed without cancellation.
inline std::pair<double, double> r_inverse(double x) {
    if (x <= 0) {
        const double u = 2.0 / (std::hypot(x, 2.0) - x + 2.0);
        return {u, 1.0 - u};
    }
    const double s = 2.0 / (std::hypot(x, 2.0) + x + 2.0);
    return {1.0 - s, s};
}

inline double r_map(double w, double one_minus_w) { return -1.0 / w + 1.0 / one_minus_w; }

// sup_x |psi(x) - lambda(x)| for the logistic conjugate with parameter a,
// using the exact forms 1/(1-w) - 2/(a(1-u)) for x < 0 and 1/(1-w) - 2/(a u) for x > 0.
inline double logistic_conjugate_gap(double a) {
    auto gap = [a](double t) {
        const double u = 1.0 / (1.0 + std::exp(-t)), s = 1.0 / (1.0 + std::exp(t));
        const double w = a * u * s;
        const double base = 1.0 / (1.0 - w);
        return std::abs(t < 0 ? base - 2.0 / (a * s) : base - 2.0 / (a * u));
    };
    const int n = 801;
    const double lo = -40.0, hi = 40.0, h = (hi - lo) / (n - 1);
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = gap(lo + h * i);
    double best = std::max(std::abs(1.0 - 2.0 / a), std::max(vals.front(), vals.back()));
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::partial_sort(idx.begin(), idx.begin() + 4, idx.end(), [&](int x, int y) { return vals[x] > vals[y]; });
    for (int k = 0; k < 4; ++k) {
        double l = lo + h * std::max(0, idx[k] - 1), r = lo + h * std::min(n - 1, idx[k] + 1);
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = r - g * (r - l), d = l + g * (r - l);
        double fc = gap(c), fd = gap(d);
        for (int it = 0; it < 100 && r - l > 1e-13; ++it) {
            if (fc > fd) {
                r = d;
                d = c;
                fd = fc;
                c = r - g * (r - l);
                fc = gap(c);
            } else {
                l = c;
                c = d;
                fc = fd;
                d = l + g * (r - l);
                fd = gap(d);
            }
        }
        best = std::max({best, fc, fd, vals[idx[k]]});
    }
    return best;
}

}  // namespace detail

// One realized draw of (Psi, Lambda, A-, A+, B).
struct FunctionSample {
    double a_minus = 0.0, a_plus = 0.0, b = 1.0;
    Family family = Family::Affine;
    int sub = 0;
    std::array<double, 4> p{};

    static FunctionSample affine(double a, double bdraw) {
        FunctionSample f;
        f.family = Family::Affine;
        f.a_minus = f.a_plus = a;
        f.b = std::max(1.0, std::abs(bdraw));
        f.p = {a, bdraw, 0, 0};
        return f;
    }
    static FunctionSample lindley(double a, double bdraw) {
        FunctionSample f;
        f.family = Family::Lindley;
        f.a_minus = std::min(a, 0.0);
        f.a_plus = std::max(a, 0.0);
        f.b = std::max(1.0, std::abs(bdraw));
        f.p = {a, bdraw, 0, 0};
        return f;
    }
    static FunctionSample arch1(double beta, double lambda, double z) { return ar1_arch1(0.0, beta, lambda, z, Family::Arch1); }
    static FunctionSample ar1_arch1(double alpha, double beta, double lambda, double z,
                                    Family fam = Family::Ar1Arch1) {
        FunctionSample f;
        f.family = fam;
        const double sl = std::sqrt(lambda);
        f.a_minus = alpha - sl * z;
        f.a_plus = alpha + sl * z;
        f.b = std::max(1.0, std::sqrt(beta) * std::abs(z));
        f.p = {z, std::sqrt(beta), sl, alpha};
        return f;
    }
    static FunctionSample beverton_holt(double a, double bscale) {
        FunctionSample f;
        f.family = Family::BevertonHolt;
        f.a_minus = f.a_plus = 0.0;
        f.b = std::max(1.0, a * bscale);
        f.p = {a, bscale, 0, 0};
        return f;
    }
    static FunctionSample logistic_conjugate(double a) {
        FunctionSample f;
        f.family = Family::UnitIntervalConjugate;
        f.sub = 0;
        f.a_minus = 1.0 / a;
        f.a_plus = -1.0 / a;
        f.b = std::max(1.0, detail::logistic_conjugate_gap(a) * (1.0 + 1e-9) + 1e-12);
        f.p = {a, 0, 0, 0};
        return f;
    }
    static FunctionSample constant_conjugate(double c) {
        FunctionSample f;
        f.family = Family::UnitIntervalConjugate;
        f.sub = 1;
        f.a_minus = f.a_plus = 0.0;
        f.b = std::max(1.0, std::abs(detail::r_map(c, 1.0 - c)));
        f.p = {c, 0, 0, 0};
        return f;
    }
    static FunctionSample two_slope(double am, double ap, double bdraw, PerturbationRule rule, double sign = 1.0) {
        FunctionSample f;
        f.family = Family::CustomTwoSlope;
        f.a_minus = am;
        f.a_plus = ap;
        f.b = std::max(1.0, std::abs(bdraw));
        f.sub = int(rule.kind);
        f.p = {bdraw, sign, rule.factor, 0};
        return f;
    }

    double lambda(double x) const { return x > 0 ? a_plus * x : (x < 0 ? a_minus * x : 0.0); }

    double psi(double x) const {
        switch (family) {
            case Family::Affine: return p[0] * x + p[1];
            case Family::Lindley: return std::max(p[0] * x + p[1], 0.0);
            case Family::Arch1:
            case Family::Ar1Arch1: return p[3] * x + p[0] * std::hypot(p[1], p[2] * x);
            case Family::BevertonHolt:
                if (!(x > 0)) throw DomainError("beverton_holt is defined on x > 0 only");
                return p[0] * p[1] * x / (p[1] + x);
            case Family::UnitIntervalConjugate: {
                const auto [u, s] = detail::r_inverse(x);
                double w, ws;
                if (sub == 0) {
                    w = p[0] * u * s;
                    ws = 1.0 - w;
                } else {
                    w = p[0];
                    ws = 1.0 - p[0];
                }
                if (!(w > 0 && ws > 0)) throw DomainError("inner map leaves (0,1)");
                return detail::r_map(w, ws);
            }
            default: {
                const double l = lambda(x);
                switch (Perturbation(sub)) {
                    case Perturbation::Constant: return l + p[0];
                    case Perturbation::RandomSign: return l + p[1] * p[0];
                    case Perturbation::Sine: return l + p[0] * std::sin(x);
                    default: return l + p[2] * b;
                }
            }
        }
    }
};

inline double eval_psi(const FunctionSample& f, double x) {
    if (!std::isfinite(x)) throw DomainError("x must be finite");
    return f.psi(x);
}
inline double eval_lambda(const FunctionSample& f, double x) { return f.lambda(x); }

inline ShapeTag shape_of(double am, double ap) {
    if (am > 0 && ap > 0) return ShapeTag::Slash;
    if (am < 0 && ap < 0) return ShapeTag::Backslash;
    if (am < 0 && ap > 0) return ShapeTag::Vee;
    if (ap < 0 && am > 0) return ShapeTag::Wedge;
    return ShapeTag::DegenerateZero;
}
inline ShapeTag shape_of(const FunctionSample& f) { return shape_of(f.a_minus, f.a_plus); }

class ModelSpec {
public:
    using Variant = std::variant<AffineModel, LindleyModel, Arch1Model, Ar1Arch1Model, BevertonHoltModel,
                                 UnitIntervalConjugateModel, CustomTwoSlopeModel>;

    ModelSpec(Variant v) : v_(std::move(v)) { validate(); }

    const Variant& variant() const { return v_; }
    Family family() const { return Family(v_.index()); }
    Domain domain() const { return family() == Family::BevertonHolt ? Domain::Positive : Domain::Real; }

    // Laws of (A-, A+).
    std::pair<SlopeLaw, SlopeLaw> slope_laws() const {
        switch (family()) {
            case Family::Affine: {
                const auto& m = std::get<AffineModel>(v_);
                return {SlopeLaw::of(m.A), SlopeLaw::of(m.A)};
            }
            case Family::Lindley: {
                const auto& m = std::get<LindleyModel>(v_);
                return {SlopeLaw::of(m.A).clip(true, false), SlopeLaw::of(m.A).clip(false, true)};
            }
            case Family::Arch1: {
                const auto& m = std::get<Arch1Model>(v_);
                const double s = std::sqrt(m.lambda);
                return {SlopeLaw::affine(m.Z, 0.0, -s), SlopeLaw::affine(m.Z, 0.0, s)};
            }
            case Family::Ar1Arch1: {
                const auto& m = std::get<Ar1Arch1Model>(v_);
                const double s = std::sqrt(m.lambda);
                return {SlopeLaw::affine(m.Z, m.alpha, -s), SlopeLaw::affine(m.Z, m.alpha, s)};
            }
            case Family::BevertonHolt: return {SlopeLaw::constant(0.0), SlopeLaw::constant(0.0)};
            case Family::UnitIntervalConjugate: {
                const auto& m = std::get<UnitIntervalConjugateModel>(v_);
                if (auto* l = std::get_if<LogisticMap>(&m.inner))
                    return {SlopeLaw::reciprocal(l->A, 1.0), SlopeLaw::reciprocal(l->A, -1.0)};
                return {SlopeLaw::constant(0.0), SlopeLaw::constant(0.0)};
            }
            default: {
                const auto& m = std::get<CustomTwoSlopeModel>(v_);
                if (m.coupling == Coupling::SharedDriver)
                    return {SlopeLaw::affine(m.shared.driver, m.shared.a_minus[0], m.shared.a_minus[1]),
                            SlopeLaw::affine(m.shared.driver, m.shared.a_plus[0], m.shared.a_plus[1])};
                return {SlopeLaw::of(m.a_minus), SlopeLaw::of(m.a_plus)};
            }
        }
    }

    // sup{theta : E B^theta < infinity}; NaN when not determined.
    double b_theta_max() const {
        switch (family()) {
            case Family::Affine: return std::get<AffineModel>(v_).B.theta_max();
            case Family::Lindley: return std::get<LindleyModel>(v_).B.theta_max();
            case Family::Arch1: return std::get<Arch1Model>(v_).Z.theta_max();
            case Family::Ar1Arch1: return std::get<Ar1Arch1Model>(v_).Z.theta_max();
            case Family::BevertonHolt: {
                const auto& m = std::get<BevertonHoltModel>(v_);
                return std::min(m.A.theta_max(), m.B.theta_max());
            }
            case Family::UnitIntervalConjugate: {
                const auto& m = std::get<UnitIntervalConjugateModel>(v_);
                if (auto* l = std::get_if<LogisticMap>(&m.inner))
                    return l->A.cdf(0.0) == 0.0 ? kInf : std::numeric_limits<double>::quiet_NaN();
                return kInf;
            }
            default: {
                const auto& m = std::get<CustomTwoSlopeModel>(v_);
                if (m.coupling == Coupling::SharedDriver) return m.shared.b[1] == 0.0 ? kInf : m.shared.driver.theta_max();
                return m.B.theta_max();
            }
        }
    }

    FunctionSample sample(RandomStream& rng) const {
        switch (family()) {
            case Family::Affine: {
                const auto& m = std::get<AffineModel>(v_);
                const double a = m.A.sample(rng);
                return FunctionSample::affine(a, m.B.sample(rng));
            }
            case Family::Lindley: {
                const auto& m = std::get<LindleyModel>(v_);
                const double a = m.A.sample(rng);
                return FunctionSample::lindley(a, m.B.sample(rng));
            }
            case Family::Arch1: {
                const auto& m = std::get<Arch1Model>(v_);
                return FunctionSample::arch1(m.beta, m.lambda, m.Z.sample(rng));
            }
            case Family::Ar1Arch1: {
                const auto& m = std::get<Ar1Arch1Model>(v_);
                return FunctionSample::ar1_arch1(m.alpha, m.beta, m.lambda, m.Z.sample(rng));
            }
            case Family::BevertonHolt: {
                const auto& m = std::get<BevertonHoltModel>(v_);
                const double a = m.A.sample(rng);
                return FunctionSample::beverton_holt(a, m.B.sample(rng));
            }
            case Family::UnitIntervalConjugate: {
                const auto& m = std::get<UnitIntervalConjugateModel>(v_);
                if (auto* l = std::get_if<LogisticMap>(&m.inner)) return FunctionSample::logistic_conjugate(l->A.sample(rng));
                return FunctionSample::constant_conjugate(std::get<ConstantMap>(m.inner).c);
            }
            default: {
                const auto& m = std::get<CustomTwoSlopeModel>(v_);
                double am, ap, bd;
                switch (m.coupling) {
                    case Coupling::Independent:
                        am = m.a_minus.sample(rng);
                        ap = m.a_plus.sample(rng);
                        bd = m.B.sample(rng);
                        break;
                    case Coupling::Comonotone: {
                        const double u = rng.uniform_open();
                        am = m.a_minus.quantile(u);
                        ap = m.a_plus.quantile(u);
                        bd = m.B.quantile(u);
                        break;
                    }
                    default: {
                        const double z = m.shared.driver.sample(rng);
                        am = m.shared.a_minus[0] + m.shared.a_minus[1] * z;
                        ap = m.shared.a_plus[0] + m.shared.a_plus[1] * z;
                        bd = m.shared.b[0] + m.shared.b[1] * std::abs(z);
                        break;
                    }
                }
                const double sg = m.psi.kind == Perturbation::RandomSign ? rng.sign() : 1.0;
                return FunctionSample::two_slope(am, ap, bd, m.psi, sg);
            }
        }
    }

    // Coupling start points for stationary sampling.
    std::pair<double, double> coupling_starts() const {
        if (domain() == Domain::Positive) return {1e-6, 1e6};
        return {-1e6, 1e6};
    }

private:
    void validate() const {
        switch (family()) {
            case Family::Arch1: {
                const auto& m = std::get<Arch1Model>(v_);
                if (!(m.beta > 0) || !(m.lambda > 0)) throw InvalidModel("arch1 requires beta > 0 and lambda > 0");
                break;
            }
            case Family::Ar1Arch1: {
                const auto& m = std::get<Ar1Arch1Model>(v_);
                if (!(m.beta > 0) || !(m.lambda > 0) || !std::isfinite(m.alpha))
                    throw InvalidModel("ar1_arch1 requires finite alpha, beta > 0 and lambda > 0");
                break;
            }
            case Family::BevertonHolt: {
                const auto& m = std::get<BevertonHoltModel>(v_);
                if (!(m.A.cdf(0.0) == 0.0) || !(m.B.cdf(0.0) == 0.0))
                    throw InvalidModel("beverton_holt requires A > 0 and B > 0 almost surely");
                break;
            }
            case Family::UnitIntervalConjugate: check_unit_map(std::get<UnitIntervalConjugateModel>(v_).inner); break;
            case Family::CustomTwoSlope: {
                const auto& m = std::get<CustomTwoSlopeModel>(v_);
                if (!std::isfinite(m.psi.factor)) throw InvalidModel("perturbation factor must be finite");
                break;
            }
            default: break;
        }
    }

public:
    // Rejects inner maps that leave (0,1) on a probe grid.
    static void check_unit_map(const UnitMapSpec& inner) {
        if (auto* c = std::get_if<ConstantMap>(&inner)) {
            if (!(c->c > 0 && c->c < 1)) throw InvalidModel("constant inner map must take a value in (0,1)");
            return;
        }
        const auto& A = std::get<LogisticMap>(inner).A;
        std::vector<double> probes;
        if (A.is_discrete()) {
            for (const auto& a : A.atoms()) probes.push_back(a.value);
        } else {
            for (double q : {1e-9, 1e-3, 0.5, 1 - 1e-3, 1 - 1e-9}) probes.push_back(A.quantile(q));
            if (std::isfinite(A.support_lo())) probes.push_back(A.support_lo());
            if (std::isfinite(A.support_hi())) probes.push_back(A.support_hi());
            else probes.push_back(kInf);
        }
        for (double a : probes) {
            for (int i = 1; i < 1000; ++i) {
                const double u = i / 1000.0;
                const double w = a * u * (1 - u);
                if (!(w > 0 && w < 1))
                    throw InvalidModel("inner map leaves (0,1) on the probe grid (A = " + std::to_string(a) + ")");
            }
        }
    }

private:
    Variant v_;
};

inline FunctionSample sample_function(const ModelSpec& spec, RandomStream& rng) { return spec.sample(rng); }

inline ModelSpec conjugate_from_unit_interval(const UnitMapSpec& inner) {
    return ModelSpec(UnitIntervalConjugateModel{inner});
}

// 2001 log-spaced magnitudes in [lo, hi], both signs (positive only on a
// positive domain), plus 0 on the real domain.
inline std::vector<double> default_al_grid(Domain d, std::size_t n = 2001, double lo = 1e-3, double hi = 1e6) {
    std::vector<double> g;
    const double l0 = std::log(lo), l1 = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::exp(l0 + (l1 - l0) * double(i) / double(n - 1));
        g.push_back(x);
        if (d == Domain::Real) g.push_back(-x);
    }
    if (d == Domain::Real) g.push_back(0.0);
    return g;
}

struct BoundWitness {
    std::size_t sample_index = 0;
    double x = 0, psi = 0, lambda = 0, b = 0;
};

struct BoundReport {
    bool pass = true;
    double max_excess = -kInf;  // max of |psi - lambda| - b
    std::size_t n_samples = 0, n_points = 0;
    std::optional<BoundWitness> witness;
};

inline BoundReport verify_al_bound(const ModelSpec& spec, std::size_t n_samples, const std::vector<double>& grid,
                                   RandomStream& rng) {
    BoundReport rep;
    rep.n_samples = n_samples;
    rep.n_points = grid.size();
    double worst = -kInf;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const FunctionSample f = spec.sample(rng);
        for (double x : grid) {
            const double y = f.psi(x), l = f.lambda(x);
            const double gap = std::abs(y - l) - f.b;
            rep.max_excess = std::max(rep.max_excess, gap);
            const double slack = 1e-12 * std::max({1.0, f.b, std::abs(y), std::abs(l)});
            if (gap > slack && gap - slack > worst) {
                worst = gap - slack;
                rep.pass = false;
                rep.witness = BoundWitness{i, x, y, l, f.b};
            }
        }
    }
    return rep;
}

}  // namespace alifs
