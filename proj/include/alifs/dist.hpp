#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/pareto.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace alifs {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kQuadTail = 1e-12;

inline int sign_of(double x) { return (x > 0) - (x < 0); }

struct PointMass {
    double value = 0.0;
};
struct TwoPoint {
    double v1 = 0.0, p1 = 0.5, v2 = 0.0;
};
struct Uniform {
    double lo = 0.0, hi = 1.0;
};
struct Gaussian {
    double mean = 0.0, sd = 1.0;
};
struct LogNormal {
    double mu = 0.0, sigma = 1.0;
};
struct Pareto {
    double scale = 1.0, alpha = 1.0;
};

struct Atom {
    double value;
    double prob;
};

// Law of a real random variable. Side arguments are -1 or +1 and select
// X < 0 or X > 0; the value 0 belongs to neither side.
class ScalarDist {
public:
    using Variant = std::variant<PointMass, TwoPoint, Uniform, Gaussian, LogNormal, Pareto>;

    ScalarDist() : v_(PointMass{0.0}) {}
    ScalarDist(Variant v) : v_(std::move(v)) { validate(); }

    static ScalarDist point_mass(double x) { return ScalarDist(PointMass{x}); }
    static ScalarDist two_point(double v1, double p1, double v2) { return ScalarDist(TwoPoint{v1, p1, v2}); }
    static ScalarDist uniform(double lo, double hi) { return ScalarDist(Uniform{lo, hi}); }
    static ScalarDist gaussian(double m, double s) { return ScalarDist(Gaussian{m, s}); }
    static ScalarDist lognormal(double mu, double s) { return ScalarDist(LogNormal{mu, s}); }
    static ScalarDist pareto(double scale, double alpha) { return ScalarDist(Pareto{scale, alpha}); }

    const Variant& variant() const { return v_; }

    std::string name() const {
        static const char* names[] = {"point_mass", "two_point", "uniform", "gaussian", "lognormal", "pareto"};
        return names[v_.index()];
    }

    bool is_discrete() const { return v_.index() <= 1; }

    std::vector<Atom> atoms() const {
        std::vector<Atom> out;
        if (auto* p = std::get_if<PointMass>(&v_)) {
            out.push_back({p->value, 1.0});
        } else if (auto* t = std::get_if<TwoPoint>(&v_)) {
            if (t->v1 == t->v2) {
                out.push_back({t->v1, 1.0});
            } else {
                if (t->p1 > 0) out.push_back({t->v1, t->p1});
                if (t->p1 < 1) out.push_back({t->v2, 1.0 - t->p1});
            }
        }
        return out;
    }

    double sample(RandomStream& rng) const {
        switch (v_.index()) {
            case 0: return std::get<PointMass>(v_).value;
            case 1: {
                const auto& t = std::get<TwoPoint>(v_);
                return rng.uniform() < t.p1 ? t.v1 : t.v2;
            }
            case 2: {
                const auto& u = std::get<Uniform>(v_);
                return u.lo + (u.hi - u.lo) * rng.uniform();
            }
            case 3: {
                const auto& g = std::get<Gaussian>(v_);
                return g.mean + g.sd * rng.normal();
            }
            case 4: {
                const auto& l = std::get<LogNormal>(v_);
                return std::exp(l.mu + l.sigma * rng.normal());
            }
            default: {
                const auto& p = std::get<Pareto>(v_);
                return p.scale * std::pow(1.0 - rng.uniform(), -1.0 / p.alpha);
            }
        }
    }

    double quantile(double q) const {
        switch (v_.index()) {
            case 0: return std::get<PointMass>(v_).value;
            case 1: {
                const auto& t = std::get<TwoPoint>(v_);
                const bool first_low = t.v1 <= t.v2;
                const double p_low = first_low ? t.p1 : 1.0 - t.p1;
                return q <= p_low ? std::min(t.v1, t.v2) : std::max(t.v1, t.v2);
            }
            case 2: {
                const auto& u = std::get<Uniform>(v_);
                return u.lo + (u.hi - u.lo) * q;
            }
            case 3: {
                const auto& g = std::get<Gaussian>(v_);
                return boost::math::quantile(boost::math::normal_distribution<>(g.mean, g.sd), q);
            }
            case 4: {
                const auto& l = std::get<LogNormal>(v_);
                return boost::math::quantile(boost::math::lognormal_distribution<>(l.mu, l.sigma), q);
            }
            default: {
                const auto& p = std::get<Pareto>(v_);
                return boost::math::quantile(boost::math::pareto_distribution<>(p.scale, p.alpha), q);
            }
        }
    }

    // P(X <= x) and P(X > x).
    double cdf(double x) const { return 1.0 - ccdf(x); }
    double ccdf(double x) const {
        if (is_discrete()) {
            double s = 0.0;
            for (const auto& a : atoms())
                if (a.value > x) s += a.prob;
            return s;
        }
        switch (v_.index()) {
            case 2: {
                const auto& u = std::get<Uniform>(v_);
                if (x <= u.lo) return 1.0;
                if (x >= u.hi) return 0.0;
                return (u.hi - x) / (u.hi - u.lo);
            }
            case 3: {
                const auto& g = std::get<Gaussian>(v_);
                return boost::math::cdf(boost::math::complement(boost::math::normal_distribution<>(g.mean, g.sd), x));
            }
            case 4: {
                const auto& l = std::get<LogNormal>(v_);
                if (x <= 0) return 1.0;
                return boost::math::cdf(
                    boost::math::complement(boost::math::lognormal_distribution<>(l.mu, l.sigma), x));
            }
            default: {
                const auto& p = std::get<Pareto>(v_);
                if (x <= p.scale) return 1.0;
                return std::pow(p.scale / x, p.alpha);
            }
        }
    }

    // P(X < x); differs from cdf only at atoms.
    double cdf_strict(double x) const {
        if (!is_discrete()) return cdf(x);
        double s = 0.0;
        for (const auto& a : atoms())
            if (a.value < x) s += a.prob;
        return s;
    }

    double pdf(double x) const {
        switch (v_.index()) {
            case 2: {
                const auto& u = std::get<Uniform>(v_);
                return (x >= u.lo && x <= u.hi) ? 1.0 / (u.hi - u.lo) : 0.0;
            }
            case 3: {
                const auto& g = std::get<Gaussian>(v_);
                const double z = (x - g.mean) / g.sd;
                return std::exp(-0.5 * z * z) / (g.sd * std::sqrt(2.0 * M_PI));
            }
            case 4: {
                const auto& l = std::get<LogNormal>(v_);
                if (x <= 0) return 0.0;
                const double z = (std::log(x) - l.mu) / l.sigma;
                return std::exp(-0.5 * z * z) / (x * l.sigma * std::sqrt(2.0 * M_PI));
            }
            case 5: {
                const auto& p = std::get<Pareto>(v_);
                if (x < p.scale) return 0.0;
                return p.alpha * std::pow(p.scale, p.alpha) / std::pow(x, p.alpha + 1.0);
            }
            default: throw std::logic_error("pdf of a discrete law");
        }
    }

    double support_lo() const {
        switch (v_.index()) {
            case 0:
            case 1: {
                double m = kInf;
                for (const auto& a : atoms()) m = std::min(m, a.value);
                return m;
            }
            case 2: return std::get<Uniform>(v_).lo;
            case 3: return -kInf;
            case 4: return 0.0;
            default: return std::get<Pareto>(v_).scale;
        }
    }

    double support_hi() const {
        switch (v_.index()) {
            case 0:
            case 1: {
                double m = -kInf;
                for (const auto& a : atoms()) m = std::max(m, a.value);
                return m;
            }
            case 2: return std::get<Uniform>(v_).hi;
            default: return kInf;
        }
    }

    // Truncation range used by quadrature.
    double quad_lo() const { return is_discrete() ? support_lo() : std::max(support_lo(), quantile(kQuadTail)); }
    // Pareto tails are integrated in full: truncation at a far quantile would
    // drop a mass of order quantile^(theta - alpha).
    double quad_hi() const {
        if (is_discrete() || std::holds_alternative<Pareto>(v_)) return support_hi();
        return std::min(support_hi(), quantile(1.0 - kQuadTail));
    }

    // sup{theta : E|X|^theta < infinity}.
    double theta_max() const {
        if (auto* p = std::get_if<Pareto>(&v_)) return p->alpha;
        return kInf;
    }

    // Exact P(sign X = side).
    double sign_prob(int side) const { return side > 0 ? ccdf(0.0) : cdf_strict(0.0); }

    // Whether a closed form for E|X|^theta 1{sign X = side} is available.
    bool has_closed_form_moments() const {
        if (auto* g = std::get_if<Gaussian>(&v_)) return g->mean == 0.0;
        return true;
    }

    // E|X|^theta 1{sign X = side}; +inf beyond theta_max.
    double moment(double theta, int side) const { return moment_impl(theta, side, false); }

    // E|X|^theta log|X| 1{sign X = side}.
    double log_moment(double theta, int side) const { return moment_impl(theta, side, true); }

private:
    void validate() const {
        auto bad = [](const std::string& m) { throw InvalidModel(m); };
        auto finite = [&](double x, const char* what) {
            if (!std::isfinite(x)) bad(std::string(what) + " must be finite");
        };
        std::visit(
            [&](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, PointMass>) {
                    finite(d.value, "point_mass.value");
                } else if constexpr (std::is_same_v<T, TwoPoint>) {
                    finite(d.v1, "two_point.v1");
                    finite(d.v2, "two_point.v2");
                    if (!(d.p1 >= 0.0 && d.p1 <= 1.0)) bad("two_point.p1 must lie in [0,1]");
                } else if constexpr (std::is_same_v<T, Uniform>) {
                    finite(d.lo, "uniform.lo");
                    finite(d.hi, "uniform.hi");
                    if (!(d.lo < d.hi)) bad("uniform requires lo < hi");
                } else if constexpr (std::is_same_v<T, Gaussian>) {
                    finite(d.mean, "gaussian.mean");
                    if (!(d.sd > 0 && std::isfinite(d.sd))) bad("gaussian.sd must be > 0");
                } else if constexpr (std::is_same_v<T, LogNormal>) {
                    finite(d.mu, "lognormal.mu");
                    if (!(d.sigma > 0 && std::isfinite(d.sigma))) bad("lognormal.sigma must be > 0");
                } else {
                    if (!(d.scale > 0 && std::isfinite(d.scale))) bad("pareto.scale must be > 0");
                    if (!(d.alpha > 0 && std::isfinite(d.alpha))) bad("pareto.alpha must be > 0");
                }
            },
            v_);
    }

    // Primitive of x^theta (or x^theta log x) on [0, x], x >= 0.
    static double power_primitive(double x, double theta, bool logw) {
        if (x <= 0) return 0.0;
        const double t1 = theta + 1.0;
        const double p = std::pow(x, t1);
        return logw ? p * (std::log(x) / t1 - 1.0 / (t1 * t1)) : p / t1;
    }

    double moment_impl(double theta, int side, bool logw) const {
        if (theta >= theta_max()) return kInf;
        if (theta == 0.0 && !logw) return sign_prob(side);
        if (is_discrete()) {
            double s = 0.0;
            for (const auto& a : atoms()) {
                if (sign_of(a.value) != side) continue;
                const double m = std::abs(a.value);
                s += a.prob * std::pow(m, theta) * (logw ? std::log(m) : 1.0);
            }
            return s;
        }
        switch (v_.index()) {
            case 2: {
                const auto& u = std::get<Uniform>(v_);
                const double a = side > 0 ? std::max(u.lo, 0.0) : std::max(-u.hi, 0.0);
                const double b = side > 0 ? std::max(u.hi, 0.0) : std::max(-u.lo, 0.0);
                return (power_primitive(b, theta, logw) - power_primitive(a, theta, logw)) / (u.hi - u.lo);
            }
            case 3: {
                const auto& g = std::get<Gaussian>(v_);
                if (g.mean != 0.0) throw std::logic_error("no closed form for a non-centred gaussian");
                const double h = 0.5 * (theta + 1.0);
                const double m = std::pow(g.sd, theta) * std::pow(2.0, 0.5 * theta) * std::exp(std::lgamma(h)) /
                                 (2.0 * std::sqrt(M_PI));
                if (!logw) return m;
                return m * (std::log(g.sd) + 0.5 * std::log(2.0) + 0.5 * boost::math::digamma(h));
            }
            case 4: {
                if (side < 0) return 0.0;
                const auto& l = std::get<LogNormal>(v_);
                const double m = std::exp(theta * l.mu + 0.5 * theta * theta * l.sigma * l.sigma);
                return logw ? m * (l.mu + theta * l.sigma * l.sigma) : m;
            }
            default: {
                if (side < 0) return 0.0;
                const auto& p = std::get<Pareto>(v_);
                const double m = p.alpha * std::pow(p.scale, theta) / (p.alpha - theta);
                return logw ? m * (std::log(p.scale) + 1.0 / (p.alpha - theta)) : m;
            }
        }
    }

    Variant v_;
};

}  // namespace alifs
