// Acceptance suite: one PASS/FAIL line per criterion.
#include <alifs/pipeline.hpp>
#include <alifs/renewal.hpp>
#include <alifs/sim.hpp>
#include <alifs/spectral.hpp>
#include <alifs/tail_index.hpp>

#include <boost/math/special_functions/digamma.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>

using namespace alifs;

namespace {

struct Outcome {
    bool pass = false;
    std::string measured, tolerance;
};

struct Criterion {
    int id;
    const char* name;
    double time_limit;  // seconds
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double bisect(const std::function<double(double)>& g, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

ModelSpec arch() { return ModelSpec(Arch1Model{1.0, 1.0, ScalarDist::gaussian(0, 1)}); }

ModelSpec ar1_arch(double alpha, ScalarDist z) { return ModelSpec(Ar1Arch1Model{alpha, 1.0, 1.0, z}); }

ModelSpec goldie() { return ModelSpec(AffineModel{ScalarDist::two_point(2.0, 0.5, 0.25), ScalarDist::point_mass(1.0)}); }

ModelSpec affine_two_tenths() {
    return ModelSpec(AffineModel{ScalarDist::two_point(2.0, 0.5, 0.1), ScalarDist::point_mass(1.0)});
}

// A constant +1 leaves the negative half-line empty; the random sign feeds both tails.
ModelSpec case2_model(Perturbation kind = Perturbation::RandomSign) {
    CustomTwoSlopeModel m;
    m.a_minus = ScalarDist::two_point(-0.5, 0.5, 1.2);
    m.a_plus = ScalarDist::two_point(2.0, 0.5, 0.1);
    m.B = ScalarDist::point_mass(1.0);
    m.psi.kind = kind;
    return ModelSpec(m);
}

StationaryOptions chain_opts(std::size_t stride = 1) {
    StationaryOptions o;
    o.threads = default_threads();
    o.stride = stride;
    return o;
}

bool within(double x, double lo, double hi) { return lo <= x && x <= hi; }

// -------------------------------------------------------------------- criteria

Outcome goldie_kappa() {
    const double expect = std::log2(0.5 * (1.0 + std::sqrt(5.0)));
    const auto s = solve_kappa(goldie(), 1e-13);
    const double err = s.kappa ? std::abs(*s.kappa - expect) : kInf;
    return {err < 1e-9, fmt("kappa=%.15f |err|=%.2e", s.kappa.value_or(NAN), err), "|err| < 1e-9"};
}

Outcome arch_kappa_drift() {
    const auto q = MomentMethod::quadrature();
    const auto s = solve_kappa(arch(), 1e-12, q);
    const double kerr = s.kappa ? std::abs(*s.kappa - 2.0) : kInf;
    const double expect = 0.5 * (std::log(2.0) + boost::math::digamma(1.5));
    const auto d = stationary_drift(arch(), 2.0, q);
    // independent oracle: central difference of log rho from quadrature entries
    const double h = 1e-5;
    const double fd = (std::log(spectral_radius(cramer_matrix(arch(), 2.0 + h, q))) -
                       std::log(spectral_radius(cramer_matrix(arch(), 2.0 - h, q)))) /
                      (2 * h);
    const double derr = std::abs(d.drift - expect), ferr = std::abs(fd - expect);
    return {kerr < 1e-6 && derr < 1e-6 && ferr < 1e-6,
            fmt("kappa=%.10f drift=%.10f fd=%.10f oracle=%.10f", s.kappa.value_or(NAN), d.drift, fd, expect),
            "kappa, drift, finite difference within 1e-6"};
}

Outcome gelfand() {
    bool ok = true;
    std::ostringstream m;
    const std::pair<const char*, ModelSpec> models[] = {{"arch", arch()},
                                                        {"ar1_arch(0.5)", ar1_arch(0.5, ScalarDist::gaussian(0, 1))}};
    for (const auto& [name, spec] : models)
        for (double th : {0.5, 1.0}) {
            const double rho = spectral_radius(cramer_matrix(spec, th));
            const auto g = gelfand_estimate(spec, th, 30, 100000, 31, default_threads());
            const double rel = std::abs(g.root / rho - 1);
            ok = ok && rel <= 0.05;
            m << fmt("%s@%.1f rel=%.4f; ", name, th, rel);
        }
    return {ok, m.str(), "relative error <= 0.05"};
}

Outcome martingale() {
    const auto r = martingale_statistic(arch(), 1.0, 5, 100000, 41, default_threads());
    return {r.pass, fmt("max_z=%.3f over n=0..5, both states", r.max_z), "every statistic within 4 SE of v"};
}

Outcome arch_tails() {
    const auto spec = arch();
    // stride 10 thins the volatility clusters; the Hill CI assumes independent order statistics
    const auto run = sample_stationary(spec, 1000000, 20240611, chain_opts(10));
    const auto hr = hill_estimate(run.samples, 1, 10000);
    const auto hl = hill_estimate(run.samples, -1, 10000);
    const auto curve = empirical_tail_curve(run.samples, 2.0, default_thresholds(run.samples));
    const auto fr = tail_flatness(curve, 1), fl = tail_flatness(curve, -1);

    ConstantsOptions co;
    co.seed = 5;
    co.threads = default_threads();
    const auto tc = tail_constants_case1(spec, 2.0, run.samples, co);
    const Estimate cp = *tc.c_plus, cm = *tc.c_minus;
    const bool overlap = cp.lo <= cm.hi && cm.lo <= cp.hi;
    double um = 0, up = 0;
    for (const auto& [k, v] : tc.inputs) {
        if (k == "u_minus") um = v;
        if (k == "u_plus") up = v;
    }
    const double rel = up * cm.value - um * cp.value;
    const double rel_se = std::hypot(up * cm.se, um * cp.se);
    const bool relation = std::abs(rel) <= 1.96 * rel_se + 1e-12;

    const bool ok = run.diag.certified && within(2.0, hr.ci_lo, hr.ci_hi) && within(2.0, hl.ci_lo, hl.ci_hi) &&
                    fr.covered && fl.covered && fr.ratio_ci <= 2 && fl.ratio_ci <= 2 && overlap && relation;
    return {ok,
            fmt("certified=%d hill+=%.3f[%.3f,%.3f] hill-=%.3f[%.3f,%.3f] flat+=%.2f(pt %.2f) flat-=%.2f(pt %.2f) "
                "over [%.3g,%.3g] C+=%.4f[%.4f,%.4f] C-=%.4f[%.4f,%.4f] relation=%.2e",
                int(run.diag.certified), hr.alpha, hr.ci_lo, hr.ci_hi, hl.alpha, hl.ci_lo, hl.ci_hi, fr.ratio_ci,
                fr.ratio, fl.ratio_ci, fl.ratio, fr.t_lo, fr.t_hi, cp.value, cp.lo, cp.hi, cm.value, cm.lo, cm.hi, rel),
            "2 in Hill CI (k=1e4); flatness <= 2 over two decades; C+/C- CIs overlap; relation within 1.96 SE"};
}

Outcome case2_tails() {
    const auto spec = case2_model();
    const double km_oracle = bisect([](double t) { return 0.5 * std::pow(1.2, t) - 1; }, 0.0, 20.0);
    const double kp_oracle = bisect([](double t) { return 0.5 * (std::pow(2.0, t) + std::pow(0.1, t)) - 1; }, 0.1, 20.0);
    const auto km = solve_diag_kappa(spec, -1, 1e-13).kappa.value_or(NAN);
    const auto kp = solve_diag_kappa(spec, 1, 1e-13).kappa.value_or(NAN);
    const double closed = std::log(2.0) / std::log(1.2);
    const bool roots = std::abs(km - km_oracle) < 1e-9 && std::abs(km - closed) < 1e-9 && std::abs(kp - kp_oracle) < 1e-9;

    const auto run = sample_stationary(spec, 1000000, 7, chain_opts());
    // k = 1000: at the default k = 1e4 the left threshold sits near |x| = 4, inside the body where B = +-1 dominates
    const std::size_t k = 1000;
    const auto hr = hill_estimate(run.samples, 1, k);
    const auto hl = hill_estimate(run.samples, -1, k);
    const double er = hr.alpha / kp - 1, el = hl.alpha / km - 1;
    const auto hl_default = hill_estimate(run.samples, -1, default_hill_k(run.samples.size()));
    const bool ok = roots && std::abs(er) <= 0.15 && std::abs(el) <= 0.15;
    return {ok,
            fmt("kappa-=%.12f (|err|=%.1e) kappa+=%.12f (|err|=%.1e) hill+=%.3f (%+.1f%%) hill-=%.3f (%+.1f%%) k=%zu; "
                "hill- at k=%zu: %.3f",
                km, std::abs(km - km_oracle), kp, std::abs(kp - kp_oracle), hr.alpha, 100 * er, hl.alpha, 100 * el, k,
                hl_default.k, hl_default.alpha),
            "roots within 1e-9; Hill within 15% on each tail"};
}

Outcome case3_affine() {
    const auto spec = affine_two_tenths();
    const auto lat = lattice_check(spec);
    const double kp = *solve_diag_kappa(spec, 1, 1e-13).kappa;
    const auto run = sample_stationary(spec, 1000000, 11, chain_opts());
    ConstantsOptions co;
    co.seed = 5;
    co.threads = default_threads();
    const auto tc = tail_constants_case3(spec, 1, kp, run.samples, co);
    const auto h = hill_estimate(run.samples, 1, default_hill_k(run.samples.size()));
    const double err = h.alpha / kp - 1;
    const bool ok = lat.kind == LatticeKind::Nonarithmetic && tc.c_plus && tc.c_plus->excludes_zero() &&
                    tc.c_plus->lo > 0 && std::abs(err) <= 0.10;
    return {ok,
            fmt("lattice=%s C+=%.4f[%.4f,%.4f] kappa+=%.6f hill=%.4f (%+.1f%%, k=%zu)", lattice_name(lat.kind),
                tc.c_plus->value, tc.c_plus->lo, tc.c_plus->hi, kp, h.alpha, 100 * err, h.k),
            "Nonarithmetic; C+ CI above 0; Hill within 10%"};
}

Outcome classification() {
    const CaseTag got[] = {classify_case(ar1_arch(1.0, ScalarDist::gaussian(0, 1))),
                           classify_case(ar1_arch(0.5, ScalarDist::uniform(-0.4, 2.0))),
                           classify_case(ar1_arch(1.0, ScalarDist::uniform(-0.5, 0.5)))};
    const CaseTag want[] = {CaseTag::Irreducible, CaseTag::UnilateralMinus, CaseTag::Separated};
    bool ok = true;
    for (int i = 0; i < 3; ++i) ok = ok && got[i] == want[i];
    return {ok, fmt("%s / %s / %s", case_name(got[0]), case_name(got[1]), case_name(got[2])), "exact"};
}

Outcome degeneracy() {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.1 * i);
    CustomTwoSlopeModel b;
    b.a_minus = ScalarDist::two_point(1.0, 0.5, -2.0);
    b.a_plus = ScalarDist::two_point(1.0, 0.5, -0.5);
    const auto r = degeneracy_scan(ModelSpec(b), grid);
    const bool ok = r.flagged && r.max_residual < 1e-12 && r.alternative == DegeneracyAlt::B &&
                    std::abs(r.a - 0.5) < 1e-12 && std::abs(r.gamma - 0.25) < 1e-12;
    return {ok, fmt("alternative=%s residual=%.2e a=%.6f gamma=%.6f", degeneracy_name(r.alternative), r.max_residual, r.a,
                    r.gamma),
            "flagged as (b), residual < 1e-12"};
}

Outcome comparison() {
    CustomTwoSlopeModel sine;
    sine.a_minus = ScalarDist::gaussian(0.3, 1.0);
    sine.a_plus = ScalarDist::uniform(-1.5, 0.8);
    sine.B = ScalarDist::gaussian(0, 1);
    sine.psi.kind = Perturbation::Sine;
    const std::pair<const char*, ModelSpec> models[] = {{"arch", arch()},
                                                        {"ar1_arch", ar1_arch(0.5, ScalarDist::gaussian(0, 1))},
                                                        {"case2", case2_model()},
                                                        {"sine", ModelSpec(sine)}};
    bool ok = true;
    std::ostringstream m;
    for (const auto& [name, spec] : models) {
        std::uint64_t viol = 0;
        RandomStream rng(13, Purpose::Comparison, 0);
        for (std::size_t i = 0; i < 10000; ++i)
            if (!backward_error_bound(spec, 1 + i % 50, rng).ok) ++viol;
        ok = ok && viol == 0;
        m << name << "=" << viol << " ";
    }
    return {ok, "violations: " + m.str(), "zero violations over 1e4 draws, n <= 50"};
}

Outcome determinism() {
    RunConfig cfg{arch(), {}, {}};
    cfg.run.seed = 99;
    cfg.run.samples = 20000;
    cfg.run.shards = 16;
    cfg.verify.gelfand_paths = 4000;
    cfg.verify.martingale_paths = 4000;
    cfg.verify.identity_paths = 4000;
    cfg.verify.comparison_draws = 500;
    cfg.run.out = (std::filesystem::temp_directory_path() / "alifs_acceptance_determinism").string();
    auto read = [&] {
        std::ifstream in(cfg.run.out + "/report.json", std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    std::vector<std::string> reports;
    for (unsigned t : {1u, 1u, 4u, 16u}) {
        cfg.run.threads = t;
        cmd_verify(cfg);
        reports.push_back(read());
    }
    bool same = !reports[0].empty();
    for (const auto& r : reports) same = same && r == reports[0];
    std::filesystem::remove_all(cfg.run.out);
    return {same, fmt("report.json %zu bytes; threads 1,1,4,16 identical=%d", reports[0].size(), int(same)),
            "byte-identical"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "goldie_kappa", 0.010, goldie_kappa},
        {2, "arch_kappa_and_drift", 1.0, arch_kappa_drift},
        {3, "gelfand_limit", 30.0, gelfand},
        {4, "martingale", 30.0, martingale},
        {5, "irreducible_tails_arch", 120.0, arch_tails},
        {6, "unilateral_distinct_tails", 180.0, case2_tails},
        {7, "separated_affine", 120.0, case3_affine},
        {8, "classification_table", 0.001, classification},
        {9, "degeneracy_alternative_b", 0.010, degeneracy},
        {10, "comparison_bound", 10.0, comparison},
        {11, "verify_determinism", kInf, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what(), ""};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.time_limit;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("%s  %2d %-26s time=%.3fs (limit %s)%s | %s | tol: %s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    secs, std::isfinite(c.time_limit) ? fmt("%gs", c.time_limit).c_str() : "none",
                    in_time ? "" : " OVER TIME", o.measured.c_str(), o.tolerance.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
