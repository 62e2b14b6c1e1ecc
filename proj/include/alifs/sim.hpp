#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace alifs {

inline constexpr double kOverflow = 1e300;

// Running first and second moments of a scalar sample.
struct Accum {
    double sum = 0.0, sum2 = 0.0;
    std::uint64_t n = 0;

    void add(double x) {
        sum += x;
        sum2 += x * x;
        ++n;
    }
    void merge(const Accum& o) {
        sum += o.sum;
        sum2 += o.sum2;
        n += o.n;
    }
    double mean() const { return n ? sum / double(n) : 0.0; }
    double se() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var = std::max(0.0, (sum2 - double(n) * m * m) / double(n - 1));
        return std::sqrt(var / double(n));
    }
};

struct MeanEstimate {
    double mean = 0.0, se = 0.0;
    std::uint64_t n = 0;
};

inline MeanEstimate estimate(const Accum& a) { return {a.mean(), a.se(), a.n}; }

// Runs body(shard, rng, accum) over shards with streams (seed, purpose, shard)
// and reduces the per-shard accumulators in shard order.
template <std::size_t K, class F>
std::array<Accum, K> sharded_accumulate(std::uint64_t seed, Purpose purpose, std::size_t shards, unsigned threads,
                                        F&& body) {
    std::vector<std::array<Accum, K>> parts(shards);
    parallel_for(shards, threads, [&](std::size_t s) {
        RandomStream rng(seed, purpose, s);
        body(s, rng, parts[s]);
    });
    std::array<Accum, K> out{};
    for (const auto& p : parts)
        for (std::size_t k = 0; k < K; ++k) out[k].merge(p[k]);
    return out;
}

inline std::vector<double> iterate_forward(const ModelSpec& spec, double x0, std::size_t n, RandomStream& rng) {
    std::vector<double> out;
    out.reserve(n);
    double x = x0;
    for (std::size_t i = 0; i < n; ++i) {
        x = spec.sample(rng).psi(x);
        out.push_back(x);
    }
    return out;
}

struct StationaryOptions {
    std::size_t shards = 64;
    std::size_t stride = 1;
    bool certify = true;
    std::optional<std::uint64_t> burn_in;  // fixed burn-in instead of coupling
    std::uint64_t max_coupling_steps = 10000000;
    std::uint64_t fallback_burn_in = 10000;
    double gap_tol = 1e-9;
    std::optional<std::pair<double, double>> starts;  // coupling starts, model default when empty
    std::uint64_t max_consecutive_overflows = 1000;
    unsigned threads = 1;
};

struct ChainDiagnostics {
    bool certified = true;
    std::uint64_t max_meeting_time = 0;  // largest per-shard burn-in
    double max_final_gap = 0.0;
    std::uint64_t overflow_resets = 0;
    std::uint64_t zero_samples = 0;
    double max_abs = 0.0;
    bool absorbed_at_zero = false;  // every sample is 0
    std::vector<std::string> warnings;
};

struct ChainRun {
    double x0_lo = 0.0, x0_hi = 0.0;
    std::uint64_t burn_in = 0, n = 0, seed = 0;
    std::size_t shards = 0, stride = 1;
    std::vector<double> samples;
    ChainDiagnostics diag;
};

namespace detail {

struct ShardResult {
    std::vector<double> samples;
    std::uint64_t meeting = 0, overflow = 0, zeros = 0;
    bool coupled = true;
    double gap = 0.0, max_abs = 0.0;
};

inline bool blown(double x) { return !std::isfinite(x) || std::abs(x) > kOverflow; }

inline ShardResult run_shard(const ModelSpec& spec, std::size_t count, std::uint64_t seed, std::size_t shard,
                             const StationaryOptions& opt) {
    ShardResult r;
    RandomStream rng(seed, Purpose::Chain, shard);
    const auto [lo, hi] = opt.starts ? *opt.starts : spec.coupling_starts();
    const double rest = spec.domain() == Domain::Positive ? 1.0 : 0.0;
    double x = rest;
    std::uint64_t burn = 0;
    if (opt.burn_in) {
        burn = *opt.burn_in;
        for (std::uint64_t i = 0; i < burn; ++i) {
            x = spec.sample(rng).psi(x);
            if (blown(x)) x = rest;
        }
    } else {
        // The rest point is coupled too: maps that are even in x merge lo and hi at once.
        double a = lo, b = hi, c = rest;
        r.coupled = false;
        for (std::uint64_t i = 0; i < opt.max_coupling_steps; ++i) {
            const FunctionSample f = spec.sample(rng);
            a = f.psi(a);
            b = f.psi(b);
            c = f.psi(c);
            ++burn;
            if (blown(a) || blown(b) || blown(c)) break;
            if (std::max({a, b, c}) - std::min({a, b, c}) < opt.gap_tol) {
                r.coupled = true;
                break;
            }
        }
        r.gap = std::max({a, b, c}) - std::min({a, b, c});
        x = c;
        if (!r.coupled) {
            x = rest;
            for (std::uint64_t i = 0; i < opt.fallback_burn_in; ++i) {
                x = spec.sample(rng).psi(x);
                if (blown(x)) x = rest;
            }
            burn = opt.fallback_burn_in;
        }
    }
    r.meeting = burn;
    const double restart = x;
    r.samples.reserve(count);
    std::uint64_t streak = 0;
    while (r.samples.size() < count) {
        for (std::size_t j = 0; j < opt.stride && !blown(x); ++j) x = spec.sample(rng).psi(x);
        if (blown(x)) {
            ++r.overflow;
            if (++streak > opt.max_consecutive_overflows)
                throw DomainError("chain overflows immediately after every reset");
            x = restart;
            continue;
        }
        streak = 0;
        if (x == 0.0) ++r.zeros;
        r.max_abs = std::max(r.max_abs, std::abs(x));
        r.samples.push_back(x);
    }
    return r;
}

}  // namespace detail

inline ChainRun sample_stationary(const ModelSpec& spec, std::size_t n_samples, std::uint64_t seed,
                                  const StationaryOptions& opt = {}) {
    ChainRun run;
    run.seed = seed;
    run.n = n_samples;
    run.shards = std::max<std::size_t>(1, opt.shards);
    run.stride = std::max<std::size_t>(1, opt.stride);
    std::tie(run.x0_lo, run.x0_hi) = opt.starts ? *opt.starts : spec.coupling_starts();
    StationaryOptions o = opt;
    o.stride = run.stride;
    if (!opt.certify && !opt.burn_in) o.burn_in = opt.fallback_burn_in;

    std::vector<detail::ShardResult> parts(run.shards);
    parallel_for(run.shards, opt.threads, [&](std::size_t s) {
        const auto [b, e] = shard_range(n_samples, run.shards, s);
        parts[s] = detail::run_shard(spec, e - b, seed, s, o);
    });
    run.samples.reserve(n_samples);
    std::size_t uncoupled = 0;
    for (const auto& p : parts) {
        run.samples.insert(run.samples.end(), p.samples.begin(), p.samples.end());
        run.burn_in = std::max(run.burn_in, p.meeting);
        run.diag.max_final_gap = std::max(run.diag.max_final_gap, p.gap);
        run.diag.overflow_resets += p.overflow;
        run.diag.zero_samples += p.zeros;
        run.diag.max_abs = std::max(run.diag.max_abs, p.max_abs);
        if (!p.coupled) ++uncoupled;
    }
    run.diag.max_meeting_time = run.burn_in;
    run.diag.absorbed_at_zero = run.diag.zero_samples == run.samples.size() && !run.samples.empty();
    run.diag.certified = !o.burn_in && uncoupled == 0;
    if (uncoupled)
        run.diag.warnings.push_back("NoContractionCertificate: " + std::to_string(uncoupled) + " of " +
                                    std::to_string(run.shards) + " shards did not couple; fixed burn-in used");
    if (run.diag.overflow_resets)
        run.diag.warnings.push_back("overflow: " + std::to_string(run.diag.overflow_resets) + " resets");
    return run;
}

struct HillResult {
    double alpha = 0.0, ci_lo = 0.0, ci_hi = 0.0;
    std::size_t k = 0, n_tail = 0;
};

inline std::size_t default_hill_k(std::size_t n) {
    const std::size_t k = std::size_t(std::floor(std::cbrt(double(n)) * std::cbrt(double(n)) * (1 + 1e-12)));
    const std::size_t hi = n / 10;
    return std::max<std::size_t>(std::min(k, hi), std::min<std::size_t>(100, hi));
}

// Magnitudes of the chosen tail: x for x > 0 (tail = +1) or -x for x < 0 (tail = -1).
inline std::vector<double> tail_magnitudes(const std::vector<double>& samples, int tail) {
    std::vector<double> m;
    for (double x : samples) {
        const double y = tail > 0 ? x : -x;
        if (y > 0 && std::isfinite(y)) m.push_back(y);
    }
    return m;
}

inline HillResult hill_estimate(const std::vector<double>& samples, int tail, std::size_t k) {
    std::vector<double> m = tail_magnitudes(samples, tail);
    if (k == 0 || m.size() < k + 1)
        throw InsufficientTail("need " + std::to_string(k + 1) + " positive magnitudes, have " +
                               std::to_string(m.size()));
    std::nth_element(m.begin(), m.begin() + k, m.end(), std::greater<double>());
    const double thr = m[k];
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::log(m[i] / thr);
    if (!(s > 0)) throw InsufficientTail("top order statistics are tied");
    HillResult h;
    h.k = k;
    h.n_tail = m.size();
    h.alpha = double(k) / s;
    const double w = 1.96 / std::sqrt(double(k));
    h.ci_lo = h.alpha * (1 - w);
    h.ci_hi = h.alpha * (1 + w);
    return h;
}

struct TailCurve {
    double kappa = 0.0;
    std::size_t n = 0;
    std::vector<double> thresholds, right, left, right_lo, right_hi, left_lo, left_hi;
    std::vector<std::size_t> right_count, left_count;
};

namespace detail {

// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson(std::size_t k, std::size_t n) {
    if (n == 0) return {0.0, 1.0};
    const double z = 1.96, p = double(k) / double(n), nn = double(n);
    const double den = 1 + z * z / nn;
    const double c = (p + z * z / (2 * nn)) / den;
    const double h = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / den;
    return {std::max(0.0, c - h), std::min(1.0, c + h)};
}

}  // namespace detail

// Log-spaced thresholds from the median magnitude up to the level with about
// min_exceed samples beyond it.
inline std::vector<double> default_thresholds(const std::vector<double>& samples, std::size_t count = 40,
                                              std::size_t min_exceed = 20) {
    std::vector<double> m;
    m.reserve(samples.size());
    for (double x : samples)
        if (std::isfinite(x) && x != 0.0) m.push_back(std::abs(x));
    if (m.size() < 2 * min_exceed + 2) return {};
    std::sort(m.begin(), m.end());
    const double lo = m[m.size() / 2], hi = m[m.size() - min_exceed];
    if (!(hi > lo)) return {lo};
    std::vector<double> t;
    for (std::size_t i = 0; i < count; ++i)
        t.push_back(lo * std::pow(hi / lo, double(i) / double(count - 1)));
    return t;
}

inline TailCurve empirical_tail_curve(const std::vector<double>& samples, double kappa,
                                      const std::vector<double>& thresholds) {
    TailCurve c;
    c.kappa = kappa;
    c.n = samples.size();
    c.thresholds = thresholds;
    std::vector<double> pos, neg;
    for (double x : samples) {
        if (x > 0) pos.push_back(x);
        else if (x < 0) neg.push_back(-x);
    }
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    auto above = [](const std::vector<double>& v, double t) {
        return std::size_t(v.end() - std::upper_bound(v.begin(), v.end(), t));
    };
    for (double t : thresholds) {
        const double w = std::pow(t, kappa);
        const std::size_t kr = above(pos, t), kl = above(neg, t);
        const double n = double(std::max<std::size_t>(c.n, 1));
        c.right_count.push_back(kr);
        c.left_count.push_back(kl);
        c.right.push_back(w * double(kr) / n);
        c.left.push_back(w * double(kl) / n);
        const auto [rl, rh] = detail::wilson(kr, c.n);
        const auto [ll, lh] = detail::wilson(kl, c.n);
        c.right_lo.push_back(w * rl);
        c.right_hi.push_back(w * rh);
        c.left_lo.push_back(w * ll);
        c.left_hi.push_back(w * lh);
    }
    return c;
}

// Flatness of t^kappa P(+-X > t) over the top `decades` decades of the curve.
// ratio uses the point values; ratio_ci = max lower bound / min upper bound, floored at 1.
struct TailFlatness {
    bool covered = false;  // the window lies inside the threshold range
    double t_lo = 0.0, t_hi = 0.0, ratio = kInf, ratio_ci = kInf;
    std::size_t points = 0;
};

inline TailFlatness tail_flatness(const TailCurve& c, int side, double decades = 2.0) {
    TailFlatness f;
    const auto& v = side > 0 ? c.right : c.left;
    const auto& lo = side > 0 ? c.right_lo : c.left_lo;
    const auto& hi = side > 0 ? c.right_hi : c.left_hi;
    const auto& cnt = side > 0 ? c.right_count : c.left_count;
    std::optional<std::size_t> top;
    for (std::size_t i = 0; i < c.thresholds.size(); ++i)
        if (cnt[i] > 0 && (!top || c.thresholds[i] > c.thresholds[*top])) top = i;
    if (!top) return f;
    f.t_hi = c.thresholds[*top];
    f.t_lo = f.t_hi * std::pow(10.0, -decades);
    double vmin = kInf, vmax = 0.0, hmin = kInf, lmax = 0.0, tmin = kInf;
    for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
        const double t = c.thresholds[i];
        tmin = std::min(tmin, t);
        if (t < f.t_lo * (1 - 1e-12) || t > f.t_hi || cnt[i] == 0) continue;
        vmin = std::min(vmin, v[i]);
        vmax = std::max(vmax, v[i]);
        hmin = std::min(hmin, hi[i]);
        lmax = std::max(lmax, lo[i]);
        ++f.points;
    }
    f.covered = tmin <= f.t_lo * (1 + 1e-12) && f.points >= 2;
    if (f.points >= 2) {
        f.ratio = vmax / vmin;
        f.ratio_ci = std::max(1.0, lmax / hmin);
    }
    return f;
}

struct FractionalMoment {
    double theta = 0.0, mean = 0.0, se = 0.0;
    std::vector<std::size_t> sizes;
    std::vector<double> subsample_means;  // means over the first n samples for growing n
};

inline FractionalMoment fractional_moment(const std::vector<double>& samples, double theta) {
    FractionalMoment f;
    f.theta = theta;
    if (samples.empty()) return f;
    Accum a;
    std::size_t next = std::min<std::size_t>(samples.size(), 100);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        a.add(theta == 0.0 ? 1.0 : std::pow(std::abs(samples[i]), theta));
        if (i + 1 == next) {
            f.sizes.push_back(next);
            f.subsample_means.push_back(a.mean());
            next = std::min(samples.size(), next * 10);
        }
    }
    f.mean = a.mean();
    f.se = a.se();
    return f;
}

// True when the subsample means keep growing by more than `factor` per decade.
inline bool moment_diverges(const FractionalMoment& f, double factor = 1.5) {
    const auto& m = f.subsample_means;
    if (m.size() < 3) return false;
    int growth = 0;
    for (std::size_t i = 1; i < m.size(); ++i) growth += m[i] > factor * m[i - 1];
    return growth >= int(m.size()) - 2 && m.back() > factor * factor * m[m.size() - 3];
}

// Lipschitz constant of a composition of two-slope maps: max(|h(1)|, |h(-1)|).
struct TwoSlopeComposition {
    double at_plus = 1.0, at_minus = -1.0;  // h(1), h(-1)

    // h <- lambda_f o h
    void push_outer(const FunctionSample& f) {
        at_plus = f.lambda(at_plus);
        at_minus = f.lambda(at_minus);
    }
    double lip() const { return std::max(std::abs(at_plus), std::abs(at_minus)); }
};

struct ComparisonDraw {
    std::size_t n = 0;
    double yhat = 0.0;
    std::array<double, 3> probes{-10.0, 0.0, 10.0};
    std::array<double, 3> gaps{};
    bool ok = true;
};

// Backward iterates Psi_1 o ... o Psi_n(x) and Lambda_1 o ... o Lambda_n(x)
// against Yhat_n = sum_k Lip(Lambda_1 o ... o Lambda_{k-1}) B_k.
inline ComparisonDraw backward_error_bound(const ModelSpec& spec, std::size_t n, RandomStream& rng,
                                           std::array<double, 3> probes = {-10.0, 0.0, 10.0}) {
    ComparisonDraw d;
    d.n = n;
    d.probes = probes;
    std::vector<FunctionSample> fs;
    fs.reserve(n);
    for (std::size_t k = 0; k < n; ++k) fs.push_back(spec.sample(rng));
    // g_k(+-1) for g_k = Lambda_1 o ... o Lambda_{k-1}, g_1 = id
    double gp = 1.0, gm = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        d.yhat += std::max(std::abs(gp), std::abs(gm)) * fs[k].b;
        const double ap = fs[k].a_plus, am = fs[k].a_minus;
        const double np = ap > 0 ? ap * gp : (ap < 0 ? -ap * gm : 0.0);
        const double nm = am > 0 ? am * gm : (am < 0 ? -am * gp : 0.0);
        gp = np;
        gm = nm;
    }
    for (std::size_t j = 0; j < probes.size(); ++j) {
        double y = probes[j], l = probes[j];
        if (spec.domain() == Domain::Positive && !(y > 0)) {
            d.gaps[j] = 0.0;
            continue;
        }
        for (std::size_t k = n; k-- > 0;) {
            y = fs[k].psi(y);
            l = fs[k].lambda(l);
        }
        d.gaps[j] = std::abs(y - l);
        const double slack = 1e-12 * std::max({1.0, d.yhat, std::abs(y), std::abs(l)});
        if (!(d.gaps[j] <= d.yhat + slack)) d.ok = false;
    }
    return d;
}

struct GelfandEstimate {
    double theta = 0.0;
    std::size_t n = 0;
    std::uint64_t paths = 0;
    double mean = 0.0, se = 0.0;  // of Lip(Lambda_n ... Lambda_1)^theta
    double root = 0.0, root_lo = 0.0, root_hi = 0.0;  // mean^(1/n) with a delta-method interval
};

inline GelfandEstimate gelfand_estimate(const ModelSpec& spec, double theta, std::size_t n, std::uint64_t paths,
                                        std::uint64_t seed, unsigned threads = 1, std::size_t shards = 64) {
    auto acc = sharded_accumulate<1>(seed, Purpose::Gelfand, shards, threads, [&](std::size_t s, RandomStream& rng,
                                                                                  std::array<Accum, 1>& a) {
        const auto [b, e] = shard_range(paths, shards, s);
        for (std::size_t p = b; p < e; ++p) {
            // log-modulus and sign of h(1), h(-1) for h = Lambda_n o ... o Lambda_1
            double lp = 0.0, lm = 0.0;
            int sp = 1, sm = -1;
            for (std::size_t k = 0; k < n; ++k) {
                const FunctionSample f = spec.sample(rng);
                auto step = [&](double& lg, int& sg) {
                    if (sg == 0) return;
                    const double a = sg > 0 ? f.a_plus : f.a_minus;
                    if (a == 0.0) {
                        sg = 0;
                        return;
                    }
                    lg += std::log(std::abs(a));
                    sg *= a > 0 ? 1 : -1;
                };
                step(lp, sp);
                step(lm, sm);
            }
            const double vp = sp ? std::exp(theta * lp) : 0.0, vm = sm ? std::exp(theta * lm) : 0.0;
            a[0].add(std::max(vp, vm));
        }
    });
    GelfandEstimate g;
    g.theta = theta;
    g.n = n;
    g.paths = paths;
    g.mean = acc[0].mean();
    g.se = acc[0].se();
    const double inv = 1.0 / double(n);
    g.root = std::pow(g.mean, inv);
    g.root_lo = std::pow(std::max(0.0, g.mean - 1.96 * g.se), inv);
    g.root_hi = std::pow(g.mean + 1.96 * g.se, inv);
    return g;
}

struct IdentityCheck {
    std::size_t n = 0;
    double theta = 0.0;
    std::array<std::array<double, 2>, 2> exact{}, mc{}, se{};
    bool pass = true;
};

// Entry (d,e) of P(theta)^n against E|Lambda_n ... Lambda_1(d)|^theta 1{sign = e}.
inline IdentityCheck moment_identity_check(const ModelSpec& spec, double theta, std::size_t n, std::uint64_t paths,
                                           std::uint64_t seed, unsigned threads = 1, std::size_t shards = 64) {
    IdentityCheck c;
    c.n = n;
    c.theta = theta;
    const CramerMatrix m = cramer_matrix(spec, theta);
    std::array<std::array<double, 2>, 2> pw{{{1.0, 0.0}, {0.0, 1.0}}};
    for (std::size_t k = 0; k < n; ++k) {
        std::array<std::array<double, 2>, 2> nx{};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) nx[i][j] = pw[i][0] * m.p[0][j] + pw[i][1] * m.p[1][j];
        pw = nx;
    }
    c.exact = pw;
    auto acc = sharded_accumulate<4>(seed + n, Purpose::Identity, shards, threads,
                                     [&](std::size_t s, RandomStream& rng, std::array<Accum, 4>& a) {
                                         const auto [b, e] = shard_range(paths, shards, s);
                                         for (std::size_t p = b; p < e; ++p) {
                                             TwoSlopeComposition h;
                                             for (std::size_t k = 0; k < n; ++k) h.push_outer(spec.sample(rng));
                                             for (int d = 0; d < 2; ++d) {
                                                 const double y = d == 0 ? h.at_minus : h.at_plus;
                                                 const double w = std::pow(std::abs(y), theta);
                                                 a[2 * d + 0].add(y < 0 ? w : 0.0);
                                                 a[2 * d + 1].add(y > 0 ? w : 0.0);
                                             }
                                         }
                                     });
    for (int d = 0; d < 2; ++d)
        for (int e = 0; e < 2; ++e) {
            c.mc[d][e] = acc[2 * d + e].mean();
            c.se[d][e] = acc[2 * d + e].se();
            if (std::abs(c.mc[d][e] - c.exact[d][e]) > 4 * c.se[d][e] + 1e-12 * std::max(1.0, c.exact[d][e]))
                c.pass = false;
        }
    return c;
}

struct ExistenceCheck {
    bool holds = false;
    std::optional<double> theta;  // a witness with rho(theta) < 1 and E B^theta finite
    double rho = 0.0;
};

// Existence of a stationary law: some theta with rho(theta) < 1 and E B^theta < infinity.
inline ExistenceCheck existence_check(const ModelSpec& spec) {
    ExistenceCheck c;
    const SlopePair slopes = spec.slope_laws();
    const double sup = std::min(slopes_domain_sup(slopes), spec.b_theta_max());
    for (double t = 1.0 / 1024; t < std::min(sup, 256.0); t *= 2) {
        const double r = spectral_radius(cramer_matrix(slopes, t));
        if (r < 1.0) {
            c.holds = true;
            c.theta = t;
            c.rho = r;
            return c;
        }
    }
    return c;
}

}  // namespace alifs
