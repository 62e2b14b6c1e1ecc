#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sim.hpp"
#include "spectral.hpp"
#include "tail_index.hpp"

namespace alifs {

// ---------------------------------------------------------------- random walk

struct MrwState {
    int xi = 0;                                          // -1, 0, +1; 0 is the absorbing grave
    double s = -std::numeric_limits<double>::infinity();  // log-modulus
    std::size_t step = 0;

    bool operator==(const MrwState&) const = default;
};

inline MrwState mrw_start(double x0) {
    MrwState st;
    st.xi = sign_of(x0);
    st.s = x0 == 0.0 ? -kInf : std::log(std::abs(x0));
    return st;
}

inline MrwState mrw_advance(MrwState st, const FunctionSample& f) {
    ++st.step;
    if (st.xi == 0) return st;
    const double a = st.xi > 0 ? f.a_plus : f.a_minus;
    if (a == 0.0) {
        st.xi = 0;
        st.s = -kInf;
        return st;
    }
    st.s += std::log(std::abs(a));
    st.xi *= sign_of(a);
    return st;
}

// States (xi_k, S_k), k = 0..n, of Lambda_k ... Lambda_1(x0) along the given draws.
inline std::vector<MrwState> mrw_path(const std::vector<FunctionSample>& draws, double x0) {
    std::vector<MrwState> out{mrw_start(x0)};
    for (const auto& f : draws) out.push_back(mrw_advance(out.back(), f));
    return out;
}

inline std::vector<MrwState> mrw_path(const ModelSpec& spec, double x0, std::size_t n, RandomStream& rng) {
    std::vector<FunctionSample> draws;
    draws.reserve(n);
    for (std::size_t k = 0; k < n; ++k) draws.push_back(spec.sample(rng));
    return mrw_path(draws, x0);
}

// ---------------------------------------------------------------- martingale

struct MartingaleReport {
    double theta = 0.0, rho = 0.0;
    std::array<double, 2> v{};
    std::size_t n = 0;
    std::uint64_t paths = 0;
    // [state][k] for k = 0..n
    std::array<std::vector<double>, 2> mean, se;
    double max_z = 0.0;  // largest |mean - v| / se over all statistics
    bool pass = true;
};

// E_d[exp(theta S_k) v_{xi_k}] / rho^k against v_d for k = 0..n.
inline MartingaleReport martingale_statistic(const ModelSpec& spec, double theta, std::size_t n, std::uint64_t paths,
                                             std::uint64_t seed, unsigned threads = 1, std::size_t shards = 64,
                                             const MomentMethod& method = {}) {
    const SpectralData sd = eigen_pair(cramer_matrix(spec, theta, method));
    if (!sd.phat_definable || !sd.normalizable)
        throw NotCase1("martingale needs a strictly positive right eigenvector, got " +
                       std::string(eigen_structure_name(sd.structure)));
    MartingaleReport r;
    r.theta = theta;
    r.rho = sd.rho;
    r.v = sd.v;
    r.n = n;
    r.paths = paths;
    const std::size_t m = n + 1;
    std::vector<std::vector<Accum>> parts(shards, std::vector<Accum>(2 * m));
    parallel_for(shards, threads, [&](std::size_t s) {
        RandomStream rng(seed, Purpose::Martingale, s);
        const auto [b, e] = shard_range(paths, shards, s);
        auto& acc = parts[s];
        for (std::size_t p = b; p < e; ++p)
            for (int d = 0; d < 2; ++d) {
                MrwState st = mrw_start(state_sign(d));
                double rho_k = 1.0;
                acc[d * m].add(sd.v[d]);
                for (std::size_t k = 1; k <= n; ++k) {
                    st = mrw_advance(st, spec.sample(rng));
                    rho_k *= sd.rho;
                    acc[d * m + k].add(st.xi == 0 ? 0.0 : std::exp(theta * st.s) * sd.v[state_index(st.xi)] / rho_k);
                }
            }
    });
    std::vector<Accum> tot(2 * m);
    for (const auto& p : parts)
        for (std::size_t i = 0; i < tot.size(); ++i) tot[i].merge(p[i]);
    for (int d = 0; d < 2; ++d)
        for (std::size_t k = 0; k < m; ++k) {
            const Accum& a = tot[d * m + k];
            r.mean[d].push_back(a.mean());
            r.se[d].push_back(a.se());
            const double diff = std::abs(a.mean() - sd.v[d]);
            const double slack = 1e-12 * std::max(1.0, sd.v[d]);
            if (diff > 4 * a.se() + slack) r.pass = false;
            if (a.se() > 0) r.max_z = std::max(r.max_z, diff / a.se());
        }
    return r;
}

// ---------------------------------------------------------------- tilted kernel

enum class TiltMode { ExactAtoms, Rejection, Discretized };

inline const char* tilt_mode_name(TiltMode m) {
    static const char* names[] = {"exact_atoms", "rejection", "discretized"};
    return names[int(m)];
}

struct TiltedAtom {
    double a = 0.0;     // slope value
    double prob = 0.0;  // tilted probability
};

// Q_theta: from state d, draw a ~ ^dA reweighted by |a|^theta v_{d sign a} / (v_d rho).
class TiltedKernel {
public:
    static constexpr std::size_t kGrid = 4096;

    TiltedKernel(const ModelSpec& spec, double theta, const MomentMethod& method = {})
        : slopes_(spec.slope_laws()), theta_(theta) {
        sd_ = eigen_pair(cramer_matrix(slopes_, theta, method));
        if (!sd_.phat_definable) throw NotDefinable("tilting needs v_- > 0 and v_+ > 0");
        for (int d = 0; d < 2; ++d) build(d);
    }

    const SpectralData& spectral() const { return sd_; }
    TiltMode mode(int state) const { return side_[state_index(state)].mode; }
    const std::vector<TiltedAtom>& atoms(int state) const { return side_[state_index(state)].atoms; }

    // Draws the tilted slope from the given state.
    double draw(int state, RandomStream& rng) const {
        const Side& sd = side_[state_index(state)];
        if (sd.mode == TiltMode::Rejection) {
            const SlopeLaw& law = state < 0 ? slopes_.first : slopes_.second;
            for (;;) {
                const double a = law.sample(rng);
                if (rng.uniform() * sd.envelope < weight(state, a)) return a;
            }
        }
        const double u = rng.uniform();
        auto it = std::upper_bound(sd.cum.begin(), sd.cum.end(), u);
        if (it == sd.cum.end()) --it;
        return sd.atoms[std::size_t(it - sd.cum.begin())].a;
    }

    MrwState step(MrwState st, RandomStream& rng) const {
        if (st.xi == 0) throw DomainError("the tilted chain has no grave state");
        const double a = draw(st.xi, rng);
        ++st.step;
        st.s += std::log(std::abs(a));
        st.xi *= sign_of(a);
        return st;
    }

private:
    struct Side {
        TiltMode mode = TiltMode::ExactAtoms;
        std::vector<TiltedAtom> atoms;
        std::vector<double> cum;
        double envelope = 0.0;
    };

    double weight(int state, double a) const {
        if (a == 0.0) return 0.0;
        const int d = state_index(state), e = state_index(state * sign_of(a));
        return std::pow(std::abs(a), theta_) * sd_.v[e] / (sd_.v[d] * sd_.rho);
    }

    // sup |a| over the support, infinite when unbounded
    static double max_abs(const SlopeLaw& law) {
        const double lo = law.base.support_lo(), hi = law.base.support_hi();
        if (!std::isfinite(lo) || !std::isfinite(hi)) return kInf;
        if (law.map == SlopeLaw::Map::Affine) return std::max(std::abs(law.c0 + law.c1 * lo), std::abs(law.c0 + law.c1 * hi));
        if (lo <= 0.0 && hi >= 0.0) return kInf;
        return std::max(std::abs(law.c1 / lo), std::abs(law.c1 / hi));
    }

    void set_atoms(Side& s, int state, const std::vector<Atom>& raw) {
        double tot = 0.0;
        for (const auto& a : raw) {
            const double w = a.prob * weight(state, a.value);
            if (w > 0) {
                s.atoms.push_back({a.value, w});
                tot += w;
            }
        }
        double c = 0.0;
        for (auto& a : s.atoms) {
            a.prob /= tot;
            c += a.prob;
            s.cum.push_back(c);
        }
    }

    void build(int d) {
        const int state = state_sign(d);
        const SlopeLaw& law = d == 0 ? slopes_.first : slopes_.second;
        Side& s = side_[d];
        if (law.is_discrete()) {
            s.mode = TiltMode::ExactAtoms;
            set_atoms(s, state, law.atoms());
            return;
        }
        const double m = max_abs(law);
        if (std::isfinite(m)) {
            s.mode = TiltMode::Rejection;
            s.envelope = std::pow(m, theta_) * std::max(sd_.v[0], sd_.v[1]) / (sd_.v[d] * sd_.rho);
            return;
        }
        // no finite envelope: tilt a quantile discretization of the base law
        s.mode = TiltMode::Discretized;
        std::vector<Atom> raw;
        raw.reserve(kGrid);
        for (std::size_t i = 0; i < kGrid; ++i)
            raw.push_back({law.apply(law.base.quantile((double(i) + 0.5) / double(kGrid))), 1.0 / double(kGrid)});
        set_atoms(s, state, raw);
    }

    SlopePair slopes_;
    double theta_;
    SpectralData sd_;
    std::array<Side, 2> side_;
};

inline MrwState tilted_step(const ModelSpec& spec, double theta, const MrwState& state, RandomStream& rng) {
    return TiltedKernel(spec, theta).step(state, rng);
}

// ---------------------------------------------------------------- lattice

enum class LatticeKind { Arithmetic, Nonarithmetic, NonarithmeticByContinuity, Inconclusive };

inline const char* lattice_name(LatticeKind k) {
    static const char* names[] = {"Arithmetic", "Nonarithmetic", "NonarithmeticByContinuity", "Inconclusive"};
    return names[int(k)];
}

struct LatticeReport {
    LatticeKind kind = LatticeKind::Nonarithmetic;
    double span = 0.0;                // d for Arithmetic, 0 when every generator vanishes
    std::vector<double> generators;   // quantities that must lie in dZ
    double min_residual = 0.0;        // smallest |q r - p| over the failing ratio
    std::string detail;
};

inline constexpr std::int64_t kMaxDenominator = 1000000;
inline constexpr double kRationalTol = 1e-9;
inline constexpr double kInconclusiveTol = 1e-8;

struct RationalFit {
    bool found = false;
    std::int64_t p = 0, q = 1;
    double best_residual = kInf;  // smallest |q r - p| seen over convergents with q <= bound
};

// Continued-fraction convergents of r with denominators up to kMaxDenominator.
inline RationalFit rational_fit(double r) {
    RationalFit fit;
    double x = r;
    std::int64_t p0 = 1, q0 = 0, p1 = std::int64_t(std::floor(x)), q1 = 1;
    for (int it = 0; it < 64; ++it) {
        const double res = std::abs(double(q1) * r - double(p1));
        fit.best_residual = std::min(fit.best_residual, res);
        if (res < kRationalTol) {
            fit.found = true;
            fit.p = p1;
            fit.q = q1;
            return fit;
        }
        const double frac = x - std::floor(x);
        if (frac <= 0.0) break;
        x = 1.0 / frac;
        if (!(x < 1e18)) break;
        const auto a = std::int64_t(std::floor(x));
        const std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > kMaxDenominator || q2 < 0) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    return fit;
}

// Whether every generator is an integer multiple of one span d > 0.
inline LatticeReport lattice_of(std::vector<double> gens) {
    LatticeReport rep;
    rep.generators = gens;
    double scale = 0.0;
    for (double g : gens) scale = std::max(scale, std::abs(g));
    std::vector<double> nz;
    for (double g : gens)
        if (std::abs(g) > 1e-12 * std::max(1.0, scale)) nz.push_back(g);
    if (nz.empty()) {
        rep.kind = LatticeKind::Arithmetic;
        rep.detail = "all increments coincide";
        return rep;
    }
    const double g0 = *std::max_element(nz.begin(), nz.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    std::vector<RationalFit> fits;
    std::uint64_t lcm = 1;
    for (double g : nz) {
        const RationalFit f = rational_fit(g / g0);
        if (!f.found) {
            rep.min_residual = f.best_residual;
            rep.kind = f.best_residual < kInconclusiveTol ? LatticeKind::Inconclusive : LatticeKind::Nonarithmetic;
            rep.detail = "ratio " + std::to_string(g / g0) + " has no rational fit with denominator <= 1e6";
            return rep;
        }
        lcm = std::lcm(lcm, std::uint64_t(f.q));
        if (lcm > std::uint64_t(1) << 40) {
            rep.kind = LatticeKind::Inconclusive;
            rep.detail = "common denominator exceeds 2^40";
            return rep;
        }
        fits.push_back(f);
    }
    std::uint64_t g = 0;
    for (const auto& f : fits) g = std::gcd(g, std::uint64_t(std::llabs(f.p)) * (lcm / std::uint64_t(f.q)));
    rep.kind = LatticeKind::Arithmetic;
    rep.span = std::abs(g0) / double(lcm) * double(g);
    return rep;
}

namespace detail {

// log|a| over atoms of the given sign
inline std::vector<double> log_atoms(const SlopeLaw& law, int sign) {
    std::vector<double> out;
    for (const auto& a : law.atoms())
        if (a.prob > 0 && sign_of(a.value) == sign) out.push_back(std::log(std::abs(a.value)));
    return out;
}

}  // namespace detail

// Nonarithmetic condition for the Markov random walk: increments confined to
// c_{xi_1} - c_{xi_0} + dZ for some d > 0 and shifts c_-, c_+.
inline LatticeReport lattice_check(const ModelSpec& spec) {
    const SlopePair sl = spec.slope_laws();
    if (!sl.first.is_discrete() || !sl.second.is_discrete()) {
        LatticeReport r;
        r.kind = LatticeKind::NonarithmeticByContinuity;
        r.detail = "a slope law has a continuous component";
        return r;
    }
    std::vector<double> gens;
    // diagonal transitions: d -> d needs a > 0
    for (double x : detail::log_atoms(sl.first, 1)) gens.push_back(x);
    for (double x : detail::log_atoms(sl.second, 1)) gens.push_back(x);
    // cross transitions: - -> + and + -> - need a < 0
    const auto mp = detail::log_atoms(sl.first, -1), pm = detail::log_atoms(sl.second, -1);
    for (const auto* v : {&mp, &pm})
        for (std::size_t i = 1; i < v->size(); ++i) gens.push_back((*v)[i] - (*v)[0]);
    if (!mp.empty() && !pm.empty()) gens.push_back(mp[0] + pm[0]);
    return lattice_of(gens);
}

// Law of log|^dA| given ^dA > 0.
inline LatticeReport sublaw_lattice_check(const SlopeLaw& law) {
    if (law.continuous_on(1)) {
        LatticeReport r;
        r.kind = LatticeKind::NonarithmeticByContinuity;
        r.detail = "continuous component on (0, inf)";
        return r;
    }
    const auto logs = detail::log_atoms(law, 1);
    if (logs.empty()) {
        LatticeReport r;
        r.kind = LatticeKind::Arithmetic;
        r.detail = "no mass on (0, inf)";
        return r;
    }
    if (logs.size() == 1) {
        LatticeReport r;
        r.kind = LatticeKind::Arithmetic;
        r.span = std::abs(logs[0]);
        r.generators = logs;
        r.detail = "single atom";
        return r;
    }
    return lattice_of(logs);
}

inline bool is_nonarithmetic(LatticeKind k) {
    return k == LatticeKind::Nonarithmetic || k == LatticeKind::NonarithmeticByContinuity;
}

// ---------------------------------------------------------------- tail constants

enum class HypStatus { Pass, Fail, Unknown };

inline const char* hyp_name(HypStatus s) {
    static const char* names[] = {"PASS", "FAIL", "UNKNOWN"};
    return names[int(s)];
}

struct Hypothesis {
    std::string condition;
    HypStatus status = HypStatus::Unknown;
    std::string detail;
};

struct Estimate {
    double value = 0.0, se = 0.0, lo = 0.0, hi = 0.0;

    static Estimate of(const Accum& a, double factor) {
        Estimate e;
        e.value = a.mean() * factor;
        e.se = a.se() * std::abs(factor);
        e.lo = e.value - 1.96 * e.se;
        e.hi = e.value + 1.96 * e.se;
        return e;
    }
    bool excludes_zero() const { return lo > 0 || hi < 0; }
};

struct NamedEstimate {
    std::string name;
    Estimate est;
};

struct TailConstants {
    CaseTag tag = CaseTag::Irreducible;
    std::string variant;  // case1, case2a, case2b, case2c, case3
    std::optional<Estimate> c_plus, c_minus;
    std::vector<NamedEstimate> components;
    std::vector<Hypothesis> hypotheses;
    std::vector<std::pair<std::string, double>> inputs;  // kappa, denominators, eigen data
    bool covered = true;  // every hypothesis passes
    std::size_t n_samples = 0;
    std::string ci_method = "normal approximation, 95%";
};

struct ConstantsOptions {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::size_t shards = 64;
    bool force = false;  // estimate even when a hypothesis fails
    MomentMethod method;
};

namespace detail {

inline Hypothesis check(std::string cond, bool ok, std::string detail = {}) {
    return {std::move(cond), ok ? HypStatus::Pass : HypStatus::Fail, std::move(detail)};
}

inline Hypothesis lattice_hypothesis(std::string cond, const LatticeReport& r) {
    Hypothesis h{std::move(cond), HypStatus::Unknown, lattice_name(r.kind)};
    if (is_nonarithmetic(r.kind)) h.status = HypStatus::Pass;
    else if (r.kind == LatticeKind::Arithmetic) h.status = HypStatus::Fail;
    if (r.kind == LatticeKind::Arithmetic && r.span > 0) h.detail += " d=" + std::to_string(r.span);
    return h;
}

inline Hypothesis moment_hypothesis(const SlopeLaw& law, const char* name, double kappa) {
    const double sup = law.theta_max();
    return check(std::string("E|") + name + "|^k log|" + name + "| < inf", kappa < sup,
                 "k=" + std::to_string(kappa) + " sup=" + std::to_string(sup));
}

inline Hypothesis b_hypothesis(const ModelSpec& spec, double kappa) {
    return check("E B^k < inf", kappa < spec.b_theta_max(), "k=" + std::to_string(kappa));
}

inline void finish(TailConstants& tc, const ConstantsOptions& opt) {
    for (const auto& h : tc.hypotheses)
        if (h.status != HypStatus::Pass) tc.covered = false;
    if (opt.force) return;
    std::string failed;
    for (const auto& h : tc.hypotheses)
        if (h.status == HypStatus::Fail) failed += (failed.empty() ? "" : "; ") + h.condition;
    if (!failed.empty()) throw HypothesisViolated(tc.variant + ": " + failed);
}

// Per-sample statistics with one fresh (Psi, Lambda) draw per stationary sample.
// fn(psi_r, lambda_r, r, out) fills K values.
template <std::size_t K, class F>
std::array<Accum, K> paired_means(const ModelSpec& spec, const std::vector<double>& samples,
                                  const ConstantsOptions& opt, F&& fn) {
    return sharded_accumulate<K>(opt.seed, Purpose::Constants, opt.shards, opt.threads,
                                 [&](std::size_t s, RandomStream& rng, std::array<Accum, K>& acc) {
                                     const auto [b, e] = shard_range(samples.size(), opt.shards, s);
                                     std::array<double, K> out{};
                                     for (std::size_t i = b; i < e; ++i) {
                                         const double r = samples[i];
                                         const FunctionSample f = spec.sample(rng);
                                         fn(f.psi(r), f.lambda(r), r, out);
                                         for (std::size_t k = 0; k < K; ++k) acc[k].add(out[k]);
                                     }
                                 });
}

// |x|^k 1{side x > 0}
inline double side_power(double x, double k, int side) { return side * x > 0 ? std::pow(std::abs(x), k) : 0.0; }

}  // namespace detail

inline TailConstants tail_constants_case1(const ModelSpec& spec, double kappa, const std::vector<double>& samples,
                                          const ConstantsOptions& opt = {}) {
    if (classify_case(spec) != CaseTag::Irreducible) throw NotCase1("model is not irreducible");
    const SlopePair sl = spec.slope_laws();
    const CramerMatrix m = cramer_matrix(sl, kappa, opt.method);
    const SpectralData sd = eigen_pair(m);
    TailConstants tc;
    tc.tag = CaseTag::Irreducible;
    tc.variant = "case1";
    tc.n_samples = samples.size();
    tc.hypotheses.push_back(detail::check("rho(k) = 1", std::abs(sd.rho - 1.0) < 1e-8, "rho=" + std::to_string(sd.rho)));
    tc.hypotheses.push_back(detail::moment_hypothesis(sl.first, "A-", kappa));
    tc.hypotheses.push_back(detail::moment_hypothesis(sl.second, "A+", kappa));
    tc.hypotheses.push_back(detail::b_hypothesis(spec, kappa));
    tc.hypotheses.push_back(detail::lattice_hypothesis("log|A| nonarithmetic under pihat(k)", lattice_check(spec)));
    detail::finish(tc, opt);

    DriftValue dv;
    try {
        dv = stationary_drift(sl, kappa, opt.method);
    } catch (const Error& e) {
        throw DriftUnavailable(e.what());
    }
    const double den = dv.moment_form ? *dv.moment_form : dv.drift;
    if (!(den > 0) || !std::isfinite(den)) throw DriftUnavailable("drift at kappa is not positive");
    tc.inputs = {{"kappa", kappa},           {"rho", sd.rho},         {"u_minus", sd.u[0]}, {"u_plus", sd.u[1]},
                 {"v_minus", sd.v[0]},       {"v_plus", sd.v[1]},     {"pihat_minus", sd.pihat[0]},
                 {"pihat_plus", sd.pihat[1]}, {"denominator", den}};
    if (dv.moment_form_plain) tc.inputs.push_back({"denominator_plain", *dv.moment_form_plain});

    // sum_e v_e (|Psi|^k 1{e Psi > 0} - |Lambda|^k 1{e Lambda > 0})
    const auto acc = detail::paired_means<1>(spec, samples, opt, [&](double psi, double lam, double, auto& out) {
        double w = 0.0;
        for (int e = 0; e < 2; ++e)
            w += sd.v[e] * (detail::side_power(psi, kappa, state_sign(e)) - detail::side_power(lam, kappa, state_sign(e)));
        out[0] = w;
    });
    tc.components.push_back({"numerator", Estimate::of(acc[0], 1.0)});
    tc.c_minus = Estimate::of(acc[0], sd.u[0] / (kappa * den));
    tc.c_plus = Estimate::of(acc[0], sd.u[1] / (kappa * den));
    return tc;
}

enum class Case2Variant { A, B, C };

inline const char* case2_variant_name(Case2Variant v) {
    static const char* names[] = {"case2a", "case2b", "case2c"};
    return names[int(v)];
}

struct Case2Roots {
    std::optional<double> kappa_minus, kappa_plus;
};

inline Case2Roots case2_roots(const ModelSpec& spec, double tol = 1e-12, const MomentMethod& method = {}) {
    return {solve_diag_kappa(spec, -1, tol, method).kappa, solve_diag_kappa(spec, 1, tol, method).kappa};
}

// Unilateral case with p_{+-} = 0 < p_{-+}; the mirrored structure is handled by
// reflecting x -> -x, which swaps the roles of the two signs.
inline TailConstants tail_constants_case2(const ModelSpec& spec, Case2Variant variant, const Case2Roots& roots_in,
                                          const std::vector<double>& samples, const ConstantsOptions& opt = {}) {
    const CaseTag tag = classify_case(spec);
    if (tag != CaseTag::UnilateralMinus && tag != CaseTag::UnilateralPlus)
        throw NotUnilateral(std::string("model is ") + case_name(tag));
    const int o = tag == CaseTag::UnilateralMinus ? 1 : -1;  // orientation
    SlopePair sl = spec.slope_laws();
    const Case2Roots roots = o > 0 ? roots_in : Case2Roots{roots_in.kappa_plus, roots_in.kappa_minus};
    if (o < 0) std::swap(sl.first, sl.second);
    const SlopeLaw &am = sl.first, &ap = sl.second;
    const std::string mn = o > 0 ? "A-" : "A+", pn = o > 0 ? "A+" : "A-";
    const std::string km = o > 0 ? "k-" : "k+", kp = o > 0 ? "k+" : "k-";

    if (roots.kappa_minus && roots.kappa_plus && std::abs(*roots.kappa_minus - *roots.kappa_plus) < 1e-9)
        throw Unsupported("equal diagonal roots k- = k+");

    TailConstants tc;
    tc.tag = tag;
    tc.variant = case2_variant_name(variant);
    tc.n_samples = samples.size();
    auto& H = tc.hypotheses;
    const auto p_dd = [&](const SlopeLaw& law, double t) { return law.moment(t, 1, opt.method).value; };
    const auto p_cross = [&](double t) { return t < am.theta_max() ? am.moment(t, -1, opt.method).value : kInf; };

    double kappa = 0.0;
    if (variant == Case2Variant::A || variant == Case2Variant::C) {
        H.push_back(detail::check(km + " exists", roots.kappa_minus.has_value()));
        if (!roots.kappa_minus) {
            detail::finish(tc, opt);
            throw HypothesisViolated(tc.variant + ": " + km + " does not exist");
        }
        kappa = roots.kappa_minus.value_or(0.0);
        if (variant == Case2Variant::C) {
            const double ppk = kappa < ap.theta_max() ? p_dd(ap, kappa) : kInf;
            H.push_back(detail::check("p" + pn + pn + "(" + km + ") < 1", ppk < 1, "value=" + std::to_string(ppk)));
            bool found = false;
            double at = 0.0;
            const double sup = std::min(am.theta_max(), ap.theta_max());
            for (int i = 1; i <= 64 && !found; ++i) {
                const double t = kappa + (std::min(sup, kappa + 8.0) - kappa) * i / 65.0;
                if (p_dd(ap, t) < 1 && std::isfinite(p_cross(t))) {
                    found = true;
                    at = t;
                }
            }
            H.push_back(detail::check("p++(t) < 1 and p-+(t) < inf for some t > " + km, found,
                                      found ? "t=" + std::to_string(at) : "none on the scan"));
        }
        H.push_back(detail::moment_hypothesis(am, mn.c_str(), kappa));
        H.push_back(detail::b_hypothesis(spec, kappa));
        H.push_back(detail::lattice_hypothesis("log|" + mn + "| given " + mn + " > 0 nonarithmetic", sublaw_lattice_check(am)));
    } else {
        H.push_back(detail::check(kp + " exists", roots.kappa_plus.has_value()));
        if (!roots.kappa_plus) {
            detail::finish(tc, opt);
            throw HypothesisViolated(tc.variant + ": " + kp + " does not exist");
        }
        kappa = roots.kappa_plus.value_or(0.0);
        const double pmk = kappa < am.theta_max() ? p_dd(am, kappa) : kInf;
        H.push_back(detail::check("p" + mn + mn + "(" + kp + ") < 1", pmk < 1, "value=" + std::to_string(pmk)));
        H.push_back(detail::check("p-+(" + kp + ") < inf", std::isfinite(p_cross(kappa))));
        H.push_back(detail::moment_hypothesis(ap, pn.c_str(), kappa));
        H.push_back(detail::b_hypothesis(spec, kappa));
        H.push_back(detail::lattice_hypothesis("log|" + pn + "| given " + pn + " > 0 nonarithmetic", sublaw_lattice_check(ap)));
    }
    detail::finish(tc, opt);

    const int side_minus = -o;  // the sign playing the minus role in the original coordinates
    tc.inputs.push_back({"kappa", kappa});
    // E[|Psi|^k 1{Psi<0} - |Lambda|^k 1{Lambda<0}] and the same on > 0, in oriented coordinates
    const auto acc = detail::paired_means<2>(spec, samples, opt, [&](double psi, double lam, double, auto& out) {
        out[0] = detail::side_power(psi, kappa, side_minus) - detail::side_power(lam, kappa, side_minus);
        out[1] = detail::side_power(psi, kappa, -side_minus) - detail::side_power(lam, kappa, -side_minus);
    });
    auto assign = [&](int oriented_side, const Estimate& e) {
        (oriented_side * o < 0 ? tc.c_minus : tc.c_plus) = e;
    };
    if (variant == Case2Variant::A) {
        const double dmm = diag_derivative(sl, -1, kappa, opt.method);
        tc.inputs.push_back({"p_mm_prime", dmm});
        const Estimate c = Estimate::of(acc[0], 1.0 / (kappa * dmm));
        tc.components.push_back({"c_minus", c});
        assign(-1, c);
    } else if (variant == Case2Variant::B) {
        const double dpp = diag_derivative(sl, 1, kappa, opt.method);
        const double pmp = p_cross(kappa), pmm = p_dd(am, kappa);
        const double f1 = pmp / ((1 - pmm) * dpp * kappa), f2 = 1.0 / (dpp * kappa);
        tc.inputs.insert(tc.inputs.end(), {{"p_pp_prime", dpp}, {"p_mp", pmp}, {"p_mm", pmm}});
        const auto tot = detail::paired_means<1>(spec, samples, opt, [&](double psi, double lam, double, auto& out) {
            out[0] = f1 * (detail::side_power(psi, kappa, side_minus) - detail::side_power(lam, kappa, side_minus)) +
                     f2 * (detail::side_power(psi, kappa, -side_minus) - detail::side_power(lam, kappa, -side_minus));
        });
        tc.components.push_back({"c_plus_1", Estimate::of(acc[0], f1)});
        tc.components.push_back({"c_plus_2", Estimate::of(acc[1], f2)});
        assign(1, Estimate::of(tot[0], 1.0));
    } else {
        const double dmm = diag_derivative(sl, -1, kappa, opt.method);
        const double pmp = p_cross(kappa), ppp = p_dd(ap, kappa);
        tc.inputs.insert(tc.inputs.end(), {{"p_mm_prime", dmm}, {"p_mp", pmp}, {"p_pp", ppp}});
        const Estimate cm = Estimate::of(acc[0], 1.0 / (kappa * dmm));
        const Estimate cmp = Estimate::of(acc[0], pmp / (dmm * (1 - ppp) * kappa));
        tc.components.push_back({"c_minus", cm});
        tc.components.push_back({"c_minus_plus", cmp});
        assign(-1, cm);
        assign(1, cmp);
    }
    return tc;
}

// Separated case, one side: E[|Psi(R)|^k 1{d Psi(R) > 0} - |^dA R|^k 1{d R > 0}] / (k p'_dd(k)).
inline TailConstants tail_constants_case3(const ModelSpec& spec, int side, std::optional<double> kappa_side,
                                          const std::vector<double>& samples, const ConstantsOptions& opt = {}) {
    const CaseTag tag = classify_case(spec);
    if (tag != CaseTag::Separated) throw NotSeparated(std::string("model is ") + case_name(tag));
    const SlopePair sl = spec.slope_laws();
    const SlopeLaw& law = side < 0 ? sl.first : sl.second;
    const char* an = side < 0 ? "A-" : "A+";
    TailConstants tc;
    tc.tag = tag;
    tc.variant = side < 0 ? "case3_minus" : "case3_plus";
    tc.n_samples = samples.size();
    tc.hypotheses.push_back(detail::check(std::string(side < 0 ? "k-" : "k+") + " exists", kappa_side.has_value()));
    if (!kappa_side) {
        detail::finish(tc, opt);
        throw HypothesisViolated(tc.variant + ": root does not exist");
    }
    const double kappa = *kappa_side;
    tc.hypotheses.push_back(detail::moment_hypothesis(law, an, kappa));
    tc.hypotheses.push_back(detail::b_hypothesis(spec, kappa));
    tc.hypotheses.push_back(
        detail::lattice_hypothesis(std::string("log|") + an + "| nonarithmetic", sublaw_lattice_check(law)));
    detail::finish(tc, opt);

    const double dd = diag_derivative(sl, side, kappa, opt.method);
    tc.inputs = {{"kappa", kappa}, {"p_dd_prime", dd}};
    const auto acc = detail::paired_means<1>(spec, samples, opt, [&](double psi, double lam, double r, auto& out) {
        out[0] = detail::side_power(psi, kappa, side) - (side * r > 0 ? std::pow(std::abs(lam), kappa) : 0.0);
    });
    const Estimate c = Estimate::of(acc[0], 1.0 / (kappa * dd));
    tc.components.push_back({side < 0 ? "c_minus" : "c_plus", c});
    (side < 0 ? tc.c_minus : tc.c_plus) = c;
    return tc;
}

}  // namespace alifs
