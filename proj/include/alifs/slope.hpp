#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dist.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace alifs {

enum class MethodUsed { Analytic = 0, Quadrature = 1, MonteCarlo = 2 };

inline const char* method_name(MethodUsed m) {
    switch (m) {
        case MethodUsed::Analytic: return "analytic";
        case MethodUsed::Quadrature: return "quadrature";
        default: return "monte_carlo";
    }
}

struct MomentMethod {
    enum class Kind { Auto, Quadrature, MonteCarlo } kind = Kind::Auto;
    std::uint64_t mc_samples = 100000;
    std::uint64_t mc_seed = 1;

    static MomentMethod automatic() { return {}; }
    static MomentMethod quadrature() { return {Kind::Quadrature, 0, 0}; }
    static MomentMethod monte_carlo(std::uint64_t n, std::uint64_t seed) { return {Kind::MonteCarlo, n, seed}; }
};

struct MomentValue {
    double value = 0.0;
    double abs_error = 0.0;
    MethodUsed method = MethodUsed::Analytic;
};

inline double dist_moment(const ScalarDist& d, double theta, int side, bool logw) {
    return logw ? d.log_moment(theta, side) : d.moment(theta, side);
}

// Law of an asymptotic slope, written as a transform of a base law:
// y = c0 + c1 z (affine) or y = c1 / z (reciprocal), optionally with one sign
// clipped to 0.
struct SlopeLaw {
    enum class Map { Affine, Reciprocal };

    ScalarDist base;
    Map map = Map::Affine;
    double c0 = 0.0, c1 = 1.0;
    bool keep_neg = true, keep_pos = true;

    static SlopeLaw of(ScalarDist d) { return SlopeLaw{std::move(d)}; }
    static SlopeLaw constant(double v) { return SlopeLaw{ScalarDist::point_mass(v)}; }
    static SlopeLaw affine(ScalarDist d, double c0, double c1) {
        SlopeLaw s{std::move(d)};
        s.c0 = c0;
        s.c1 = c1;
        return s;
    }
    static SlopeLaw reciprocal(ScalarDist d, double c1) {
        SlopeLaw s{std::move(d)};
        s.map = Map::Reciprocal;
        s.c1 = c1;
        return s;
    }
    SlopeLaw clip(bool neg, bool pos) const {
        SlopeLaw s = *this;
        s.keep_neg = neg;
        s.keep_pos = pos;
        return s;
    }

    double apply(double z) const {
        double y = map == Map::Affine ? c0 + c1 * z : (z == 0.0 ? 0.0 : c1 / z);
        if ((y < 0 && !keep_neg) || (y > 0 && !keep_pos)) y = 0.0;
        return y;
    }

    double sample(RandomStream& rng) const { return apply(base.sample(rng)); }

    bool is_discrete() const { return base.is_discrete() || (map == Map::Affine && c1 == 0.0); }

    std::vector<Atom> atoms() const {
        std::vector<Atom> raw;
        if (map == Map::Affine && c1 == 0.0) {
            raw.push_back({apply(0.0), 1.0});
        } else {
            for (const auto& a : base.atoms()) raw.push_back({apply(a.value), a.prob});
        }
        std::vector<Atom> out;
        for (const auto& a : raw) {
            auto it = std::find_if(out.begin(), out.end(), [&](const Atom& b) { return b.value == a.value; });
            if (it == out.end())
                out.push_back(a);
            else
                it->prob += a.prob;
        }
        return out;
    }

    bool is_point_mass_at(double v) const {
        if (!is_discrete()) return false;
        const auto a = atoms();
        return a.size() == 1 && a[0].value == v;
    }

    bool kept(int side) const { return side > 0 ? keep_pos : keep_neg; }

    // Exact P(sign Y = side).
    double sign_prob(int side) const {
        if (!kept(side)) return 0.0;
        if (is_discrete()) {
            double s = 0.0;
            for (const auto& a : atoms())
                if (sign_of(a.value) == side) s += a.prob;
            return s;
        }
        if (map == Map::Affine) {
            const double t = -c0 / c1;
            return (side * c1 > 0) ? base.ccdf(t) : base.cdf_strict(t);
        }
        return (side * c1 > 0) ? base.ccdf(0.0) : base.cdf_strict(0.0);
    }

    // Structural support analysis, independent of floating-point underflow.
    bool sign_possible(int side) const {
        if (!kept(side)) return false;
        if (is_discrete()) {
            for (const auto& a : atoms())
                if (sign_of(a.value) == side && a.prob > 0) return true;
            return false;
        }
        const double lo = base.support_lo(), hi = base.support_hi();
        if (map == Map::Affine) {
            const double e1 = c0 + c1 * lo, e2 = c0 + c1 * hi;
            const double ilo = std::min(e1, e2), ihi = std::max(e1, e2);
            return side > 0 ? ihi > 0 : ilo < 0;
        }
        const int want = side * sign_of(c1);
        return want > 0 ? hi > 0 : lo < 0;
    }

    // Whether Y restricted to the given sign has a continuous component.
    bool continuous_on(int side) const { return !is_discrete() && sign_possible(side); }

    double theta_max() const {
        if (map == Map::Affine) return c1 == 0.0 ? kInf : base.theta_max();
        if (base.is_discrete()) return kInf;
        const double lo = base.support_lo(), hi = base.support_hi();
        if (std::holds_alternative<Gaussian>(base.variant())) return 1.0;
        if (lo <= 0.0 && hi >= 0.0) return 1.0;
        return kInf;
    }

    bool has_closed_form() const {
        if (is_discrete()) return true;
        const auto& v = base.variant();
        if (map == Map::Affine) {
            if (std::holds_alternative<Uniform>(v)) return true;
            if (auto* g = std::get_if<Gaussian>(&v)) return c0 + c1 * g->mean == 0.0;
            return c0 == 0.0 && base.has_closed_form_moments();
        }
        return std::holds_alternative<LogNormal>(v) || std::holds_alternative<Pareto>(v);
    }

    // E|Y|^theta (log|Y|)^{logw} 1{sign Y = side}.
    MomentValue moment(double theta, int side, const MomentMethod& method = {}, bool logw = false) const {
        if (!kept(side)) return {0.0, 0.0, MethodUsed::Analytic};
        if (theta >= theta_max()) return {kInf, 0.0, MethodUsed::Analytic};
        if (is_discrete()) {
            double s = 0.0;
            for (const auto& a : atoms()) {
                if (sign_of(a.value) != side) continue;
                const double m = std::abs(a.value);
                s += a.prob * std::pow(m, theta) * (logw ? std::log(m) : 1.0);
            }
            return {s, 0.0, MethodUsed::Analytic};
        }
        if (method.kind == MomentMethod::Kind::MonteCarlo) return monte_carlo(theta, side, method, logw);
        if (theta == 0.0 && !logw) return {sign_prob(side), 0.0, MethodUsed::Analytic};
        if (method.kind == MomentMethod::Kind::Auto && has_closed_form())
            return {closed_form(theta, side, logw), 0.0, MethodUsed::Analytic};
        return quadrature(theta, side, logw);
    }

private:
    double closed_form(double theta, int side, bool logw) const {
        const auto& v = base.variant();
        if (map == Map::Affine) {
            if (auto* u = std::get_if<Uniform>(&v)) {
                const double e1 = c0 + c1 * u->lo, e2 = c0 + c1 * u->hi;
                return dist_moment(ScalarDist::uniform(std::min(e1, e2), std::max(e1, e2)), theta, side, logw);
            }
            if (auto* g = std::get_if<Gaussian>(&v))
                return dist_moment(ScalarDist::gaussian(0.0, std::abs(c1) * g->sd), theta, side, logw);
            const int s = side * sign_of(c1);
            const double k = std::abs(c1), kp = std::pow(k, theta);
            const double m = base.moment(theta, s);
            if (!logw) return kp * m;
            return kp * (std::log(k) * m + base.log_moment(theta, s));
        }
        if (side != sign_of(c1)) return 0.0;
        const double k = std::abs(c1);
        if (auto* l = std::get_if<LogNormal>(&v))
            return dist_moment(ScalarDist::lognormal(std::log(k) - l->mu, l->sigma), theta, 1, logw);
        const auto& p = std::get<Pareto>(v);
        const double e = p.alpha * std::pow(p.scale, -theta) / (p.alpha + theta);
        const double kp = std::pow(k, theta);
        if (!logw) return kp * e;
        return kp * (std::log(k) * e + e * (-std::log(p.scale) - 1.0 / (p.alpha + theta)));
    }

    MomentValue quadrature(double theta, int side, bool logw) const {
        const double lo = base.quad_lo(), hi = base.quad_hi();
        std::vector<double> breaks;
        if (map == Map::Affine)
            breaks.push_back(-c0 / c1);
        else
            breaks.push_back(0.0);
        auto f = [&](double z) {
            const double y = apply(z);
            if (sign_of(y) != side) return 0.0;
            const double m = std::abs(y);
            return std::pow(m, theta) * (logw ? std::log(m) : 1.0) * base.pdf(z);
        };
        const Integral r = integrate_pieces(f, lo, hi, breaks);
        return {r.value, r.abs_error, MethodUsed::Quadrature};
    }

    MomentValue monte_carlo(double theta, int side, const MomentMethod& method, bool logw) const {
        RandomStream rng(method.mc_seed, Purpose::MomentMC, std::uint64_t(side > 0));
        const std::uint64_t n = std::max<std::uint64_t>(method.mc_samples, 2);
        double sum = 0.0, sum2 = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            const double y = sample(rng);
            double w = 0.0;
            if (sign_of(y) == side) {
                const double m = std::abs(y);
                w = std::pow(m, theta) * (logw ? std::log(m) : 1.0);
            }
            sum += w;
            sum2 += w * w;
        }
        const double mean = sum / double(n);
        const double var = std::max(0.0, sum2 / double(n) - mean * mean) * double(n) / double(n - 1);
        return {mean, std::sqrt(var / double(n)), MethodUsed::MonteCarlo};
    }
};

}  // namespace alifs
