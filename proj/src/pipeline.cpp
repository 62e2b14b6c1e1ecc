#include <alifs/pipeline.hpp>

#include <alifs/renewal.hpp>
#include <alifs/sim.hpp>
#include <alifs/spectral.hpp>
#include <alifs/tail_index.hpp>

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace alifs {

namespace {

namespace fs = std::filesystem;
using config_detail::number_json;

constexpr std::size_t kShapeDraws = 10000;

Json err_json(const std::exception& e) {
    if (const auto* a = dynamic_cast<const Error*>(&e)) return {{"error", a->kind()}, {"message", a->what()}};
    return {{"error", "Exception"}, {"message", e.what()}};
}

template <class F>
Json guarded(F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return err_json(e);
    }
}

Json opt_json(const std::optional<double>& x) { return x ? number_json(*x) : Json(nullptr); }

Json pair_json(const std::array<double, 2>& a) { return Json::array({number_json(a[0]), number_json(a[1])}); }

Json matrix_json(const CramerMatrix& m) {
    return Json::array({Json::array({number_json(m.mm()), number_json(m.mp())}),
                        Json::array({number_json(m.pm()), number_json(m.pp())})});
}

Json kappa_json(const KappaSolution& s) {
    return {{"kappa", opt_json(s.kappa)},
            {"residual", number_json(s.residual)},
            {"iterations", s.iterations},
            {"bracket", Json::array({number_json(s.lo), number_json(s.hi)})},
            {"domain_sup", number_json(s.domain_sup)},
            {"dips_below_one", s.rho_dips_below_one},
            {"negative_drift_at_zero", s.drift_negative_at_zero},
            {"cap_reached", s.cap_reached},
            {"never_exceeds_one", s.never_exceeds_one}};
}

Json spectral_json(const SpectralData& s) {
    return {{"theta", s.theta},      {"rho", number_json(s.rho)},      {"u", pair_json(s.u)},
            {"v", pair_json(s.v)},   {"pihat", pair_json(s.pihat)},    {"structure", eigen_structure_name(s.structure)},
            {"unique", s.unique},    {"normalizable", s.normalizable}, {"phat_definable", s.phat_definable}};
}

Json drift_json(const DriftValue& d) {
    return {{"theta", d.theta},
            {"drift", number_json(d.drift)},
            {"method", drift_method_name(d.method)},
            {"rho_prime", number_json(d.rho_prime)},
            {"finite_difference", opt_json(d.finite_difference)},
            {"moment_form", opt_json(d.moment_form)},
            {"moment_form_plain", opt_json(d.moment_form_plain)},
            {"moment_forms_agree", d.moment_forms_agree}};
}

Json estimate_json(const Estimate& e) {
    return {{"value", number_json(e.value)},
            {"se", number_json(e.se)},
            {"ci", Json::array({number_json(e.lo), number_json(e.hi)})}};
}

Json lattice_json(const LatticeReport& r) {
    Json j{{"kind", lattice_name(r.kind)}, {"span", number_json(r.span)}};
    if (r.kind == LatticeKind::Nonarithmetic || r.kind == LatticeKind::Inconclusive)
        j["min_residual"] = number_json(r.min_residual);
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

Json tail_constants_json(const TailConstants& tc) {
    Json hyps = Json::array();
    for (const auto& h : tc.hypotheses)
        hyps.push_back({{"condition", h.condition}, {"status", hyp_name(h.status)}, {"detail", h.detail}});
    Json comps = Json::object();
    for (const auto& c : tc.components) comps[c.name] = estimate_json(c.est);
    Json inputs = Json::object();
    for (const auto& [k, v] : tc.inputs) inputs[k] = number_json(v);
    return {{"variant", tc.variant},
            {"case", case_name(tc.tag)},
            {"c_plus", tc.c_plus ? estimate_json(*tc.c_plus) : Json(nullptr)},
            {"c_minus", tc.c_minus ? estimate_json(*tc.c_minus) : Json(nullptr)},
            {"components", comps},
            {"inputs", inputs},
            {"hypotheses", hyps},
            {"covered_by_theory", tc.covered},
            {"n_samples", tc.n_samples},
            {"ci_method", tc.ci_method}};
}

std::uint64_t require_seed(const RunConfig& cfg, const char* cmd) {
    if (!cfg.run.seed) throw ConfigError(std::string("run.seed is required for ") + cmd);
    return *cfg.run.seed;
}

// Roots and case data shared by the analysis, prediction and verification steps.
struct Analysis {
    CaseTag tag = CaseTag::Irreducible;
    double sup = kInf;
    std::optional<double> kappa, kappa_minus, kappa_plus;
    std::vector<double> grid, rho;
    Json json;
};

Analysis analyze(const RunConfig& cfg) {
    const ModelSpec& spec = cfg.model;
    Analysis an;
    Json& a = an.json;
    a["family"] = family_name(spec.family());
    a["domain"] = spec.domain() == Domain::Real ? "real" : "positive";

    const SlopePair slopes = spec.slope_laws();
    an.sup = slopes_domain_sup(slopes);
    a["moment_domain_sup"] = number_json(an.sup);
    a["b_moment_sup"] = number_json(spec.b_theta_max());

    const CramerMatrix p0 = cramer_matrix(slopes, 0.0);
    an.tag = classify_case(p0);
    Json shapes = Json::object();
    {
        std::map<int, std::size_t> counts;
        RandomStream rng(cfg.run.seed.value_or(0), Purpose::Shapes, 0);
        for (std::size_t i = 0; i < kShapeDraws; ++i) ++counts[int(shape_of(spec.sample(rng)))];
        for (int s = 0; s <= int(ShapeTag::DegenerateZero); ++s)
            shapes[shape_name(ShapeTag(s))] = double(counts[s]) / double(kShapeDraws);
    }
    a["classification"] = {{"case", case_name(an.tag)}, {"p0", matrix_json(p0)}, {"shape_frequencies", shapes},
                           {"shape_draws", kShapeDraws}};

    Json grid = Json::array();
    for (double t : cfg.run.theta_grid.points()) {
        if (t >= an.sup) {
            grid.push_back({{"theta", t}, {"rho", "inf"}});
            continue;
        }
        const double r = spectral_radius(cramer_matrix(slopes, t));
        an.grid.push_back(t);
        an.rho.push_back(r);
        grid.push_back({{"theta", t}, {"rho", number_json(r)}});
    }
    a["rho_grid"] = grid;
    a["rho_log_convex"] = is_log_convex(an.grid, an.rho);

    a["kappa"] = guarded([&] {
        const auto s = solve_kappa(spec, cfg.run.tol);
        an.kappa = s.kappa;
        return kappa_json(s);
    });
    a["kappa_minus"] = guarded([&] {
        const auto s = solve_diag_kappa(slopes, -1, cfg.run.tol);
        an.kappa_minus = s.kappa;
        return kappa_json(s);
    });
    a["kappa_plus"] = guarded([&] {
        const auto s = solve_diag_kappa(slopes, 1, cfg.run.tol);
        an.kappa_plus = s.kappa;
        return kappa_json(s);
    });
    if (an.kappa) {
        a["eigen_at_kappa"] = guarded([&] { return spectral_json(eigen_pair(cramer_matrix(slopes, *an.kappa))); });
        a["drift_at_kappa"] = guarded([&] { return drift_json(stationary_drift(slopes, *an.kappa)); });
    }
    a["degeneracy"] = guarded([&] {
        const auto d = degeneracy_scan(spec, an.grid);
        return Json{{"flagged", d.flagged},
                    {"max_residual", number_json(d.max_residual)},
                    {"identity_residual", number_json(d.identity_residual)},
                    {"alternative", degeneracy_name(d.alternative)},
                    {"a", number_json(d.a)},
                    {"gamma", number_json(d.gamma)}};
    });
    a["existence"] = guarded([&] {
        const auto e = existence_check(spec);
        return Json{{"holds", e.holds}, {"theta", opt_json(e.theta)}, {"rho", number_json(e.rho)}};
    });
    a["lattice"] = guarded([&] { return lattice_json(lattice_check(spec)); });
    return an;
}

StationaryOptions stationary_options(const RunConfig& cfg) {
    StationaryOptions o;
    o.shards = cfg.run.shards;
    o.stride = cfg.run.stride;
    o.burn_in = cfg.run.burn_in;
    o.threads = cfg.run.threads;
    return o;
}

Json chain_json(const ChainRun& run) {
    Json w = Json::array();
    for (const auto& s : run.diag.warnings) w.push_back(s);
    return {{"n", run.n},
            {"seed", run.seed},
            {"shards", run.shards},
            {"stride", run.stride},
            {"coupling_starts", Json::array({number_json(run.x0_lo), number_json(run.x0_hi)})},
            {"burn_in", run.burn_in},
            {"certified", run.diag.certified},
            {"max_final_gap", number_json(run.diag.max_final_gap)},
            {"overflow_resets", run.diag.overflow_resets},
            {"zero_samples", run.diag.zero_samples},
            {"absorbed_at_zero", run.diag.absorbed_at_zero},
            {"max_abs", number_json(run.diag.max_abs)},
            {"warnings", w}};
}

// Predicted tail orders and constants with their hypothesis ledgers.
struct Prediction {
    std::string variant;
    std::optional<double> order_right, order_left;
    std::optional<TailConstants> constants;
    Json error;
    bool covered = false;
};

Prediction make_prediction(std::string variant, std::optional<double> right, std::optional<double> left) {
    Prediction p;
    p.variant = std::move(variant);
    p.order_right = right;
    p.order_left = left;
    return p;
}

// With constants = false only the variants and orders are filled in.
std::vector<Prediction> predict(const RunConfig& cfg, const Analysis& an, const std::vector<double>& samples,
                                bool constants = true) {
    const ModelSpec& spec = cfg.model;
    ConstantsOptions co;
    co.seed = cfg.run.seed.value_or(0);
    co.threads = cfg.run.threads;
    co.shards = cfg.run.shards;
    co.force = true;

    std::vector<Prediction> out;
    auto run = [&](Prediction p, const std::function<TailConstants()>& f) {
        if (!constants) {
            out.push_back(std::move(p));
            return;
        }
        try {
            p.constants = f();
            p.covered = p.constants->covered;
        } catch (const std::exception& e) {
            p.error = err_json(e);
        }
        out.push_back(std::move(p));
    };
    const Case2Roots roots{an.kappa_minus, an.kappa_plus};
    switch (an.tag) {
        case CaseTag::Irreducible:
            if (an.kappa) {
                run(make_prediction("case1", an.kappa, an.kappa), [&] { return tail_constants_case1(spec, *an.kappa, samples, co); });
            }
            break;
        case CaseTag::UnilateralMinus:
        case CaseTag::UnilateralPlus: {
            // orientation: o = +1 when the minus state feeds the plus state
            const int o = an.tag == CaseTag::UnilateralMinus ? 1 : -1;
            const auto km = o > 0 ? an.kappa_minus : an.kappa_plus;
            const auto kp = o > 0 ? an.kappa_plus : an.kappa_minus;
            auto sided = [&](const char* v, int oriented_side, double order) {
                return oriented_side * o > 0 ? make_prediction(v, order, {}) : make_prediction(v, {}, order);
            };
            if (km) {
                run(sided("case2a", -1, *km), [&] { return tail_constants_case2(spec, Case2Variant::A, roots, samples, co); });
            }
            if (kp && (!km || *kp < *km)) {
                run(sided("case2b", 1, *kp), [&] { return tail_constants_case2(spec, Case2Variant::B, roots, samples, co); });
            } else if (km) {
                run(sided("case2c", 1, *km), [&] { return tail_constants_case2(spec, Case2Variant::C, roots, samples, co); });
            }
            break;
        }
        case CaseTag::Separated:
            if (an.kappa_minus) {
                run(make_prediction("case3_minus", {}, an.kappa_minus), [&] { return tail_constants_case3(spec, -1, an.kappa_minus, samples, co); });
            }
            if (an.kappa_plus) {
                run(make_prediction("case3_plus", an.kappa_plus, {}), [&] { return tail_constants_case3(spec, 1, an.kappa_plus, samples, co); });
            }
            break;
    }
    return out;
}

Json predictions_json(const std::vector<Prediction>& ps) {
    Json arr = Json::array();
    for (const auto& p : ps) {
        Json j{{"variant", p.variant},
               {"order_right", opt_json(p.order_right)},
               {"order_left", opt_json(p.order_left)},
               {"covered_by_theory", p.covered}};
        if (p.constants) j["constants"] = tail_constants_json(*p.constants);
        if (!p.error.is_null()) j["constants_error"] = p.error;
        arr.push_back(j);
    }
    return arr;
}

struct SideOrders {
    std::optional<double> right, left;
    bool right_covered = false, left_covered = false;
    std::optional<Estimate> right_c, left_c;
};

SideOrders side_orders(const std::vector<Prediction>& ps) {
    SideOrders s;
    for (const auto& p : ps) {
        if (p.order_right && !s.right) {
            s.right = p.order_right;
            s.right_covered = p.covered;
            if (p.constants) s.right_c = p.constants->c_plus;
        }
        if (p.order_left && !s.left) {
            s.left = p.order_left;
            s.left_covered = p.covered;
            if (p.constants) s.left_c = p.constants->c_minus;
        }
    }
    return s;
}

struct Empirical {
    std::optional<HillResult> hill_right, hill_left;
    TailCurve right, left;
    Json json;
};

Json flatness_json(const TailCurve& c, int side) {
    const auto f = tail_flatness(c, side);
    if (f.points < 2) return nullptr;
    return {{"window", Json::array({number_json(f.t_lo), number_json(f.t_hi)})},
            {"window_covered", f.covered},
            {"points", f.points},
            {"ratio", number_json(f.ratio)},
            {"ratio_ci", number_json(f.ratio_ci)}};
}

Empirical empirical(const RunConfig& cfg, const std::vector<double>& samples, const SideOrders& orders) {
    Empirical em;
    Json& j = em.json;
    const std::size_t k = cfg.run.hill_k ? *cfg.run.hill_k : default_hill_k(samples.size());
    j["hill_k"] = k;
    for (int side : {1, -1}) {
        const char* name = side > 0 ? "hill_right" : "hill_left";
        j[name] = guarded([&] {
            const auto h = hill_estimate(samples, side, k);
            (side > 0 ? em.hill_right : em.hill_left) = h;
            return Json{{"alpha", number_json(h.alpha)},
                        {"ci", Json::array({number_json(h.ci_lo), number_json(h.ci_hi)})},
                        {"k", h.k},
                        {"n_tail", h.n_tail}};
        });
    }
    const auto thresholds = default_thresholds(samples);
    em.right = empirical_tail_curve(samples, orders.right.value_or(0.0), thresholds);
    em.left = empirical_tail_curve(samples, orders.left.value_or(0.0), thresholds);
    j["tail_curve"] = {{"kappa_right", number_json(em.right.kappa)},
                       {"kappa_left", number_json(em.left.kappa)},
                       {"n_thresholds", thresholds.size()},
                       {"flatness_right", flatness_json(em.right, 1)},
                       {"flatness_left", flatness_json(em.left, -1)}};
    Json moments = Json::array();
    const std::optional<double> kmin =
        orders.right && orders.left ? std::min(*orders.right, *orders.left) : (orders.right ? orders.right : orders.left);
    if (kmin && !samples.empty()) {
        for (double theta : {0.5 * *kmin, 1.25 * *kmin}) {
            const auto f = fractional_moment(samples, theta);
            Json sub = Json::array();
            for (std::size_t i = 0; i < f.sizes.size(); ++i)
                sub.push_back({{"n", f.sizes[i]}, {"mean", number_json(f.subsample_means[i])}});
            moments.push_back({{"theta", theta},
                               {"mean", number_json(f.mean)},
                               {"se", number_json(f.se)},
                               {"subsample_means", sub},
                               {"diverges", moment_diverges(f)}});
        }
    }
    j["fractional_moments"] = moments;
    return em;
}

// ---------------------------------------------------------------- checks

CheckResult make_check(std::string name, bool required, std::string tol) {
    CheckResult c;
    c.name = std::move(name);
    c.required = required;
    c.tolerance = std::move(tol);
    return c;
}

void guard_check(CheckResult& c, const std::function<void(CheckResult&)>& body) {
    try {
        body(c);
    } catch (const std::exception& e) {
        c.status = CheckStatus::Error;
        c.detail = e.what();
    }
}

std::vector<CheckResult> run_checks(const RunConfig& cfg, const Analysis& an, const ChainRun& chain,
                                    const std::vector<Prediction>& preds, const Empirical& em) {
    const ModelSpec& spec = cfg.model;
    const SlopePair slopes = spec.slope_laws();
    const std::uint64_t seed = cfg.run.seed.value_or(0);
    const auto& vo = cfg.verify;
    std::vector<CheckResult> out;
    auto pass_if = [](CheckResult& c, bool ok) { c.status = ok ? CheckStatus::Pass : CheckStatus::Fail; };

    // analytic, required
    {
        auto c = make_check("kappa_solver", true, "|f(kappa) - 1| <= 1e-9");
        guard_check(c, [&](CheckResult& c) {
            Json m = Json::object();
            bool any = false, ok = true;
            if (an.kappa) {
                const double r = spectral_radius(cramer_matrix(slopes, *an.kappa));
                m["rho(kappa)"] = number_json(r);
                ok = ok && std::abs(r - 1) <= 1e-9;
                any = true;
            }
            if (an.tag != CaseTag::Irreducible) {
                for (int side : {-1, 1}) {
                    const auto& k = side < 0 ? an.kappa_minus : an.kappa_plus;
                    if (!k) continue;
                    const double p = (side < 0 ? slopes.first : slopes.second).moment(*k, 1).value;
                    m[side < 0 ? "p_mm(kappa_minus)" : "p_pp(kappa_plus)"] = number_json(p);
                    ok = ok && std::abs(p - 1) <= 1e-9;
                    any = true;
                }
            }
            c.measured = m;
            if (!any) {
                c.status = CheckStatus::Skipped;
                c.detail = "no root of the Cramer transform";
            } else {
                pass_if(c, ok);
            }
        });
        out.push_back(c);
    }
    {
        auto c = make_check("eigen_residual", true, "max |P v - rho v| + |u P - rho u| <= 1e-10 max(1, rho)");
        guard_check(c, [&](CheckResult& c) {
            double worst = 0.0;
            bool ok = true;
            for (std::size_t i = 0; i < an.grid.size(); ++i) {
                const auto m = cramer_matrix(slopes, an.grid[i]);
                const auto s = eigen_pair(m);
                const double r = eigen_residual(m, s);
                worst = std::max(worst, r);
                ok = ok && r <= 1e-10 * std::max(1.0, s.rho);
            }
            c.measured = {{"max_residual", number_json(worst)}, {"grid_points", an.grid.size()}};
            pass_if(c, ok);
        });
        out.push_back(c);
    }
    {
        auto c = make_check("rho_log_convex", true, "second differences of log rho >= -1e-10");
        guard_check(c, [&](CheckResult& c) { pass_if(c, is_log_convex(an.grid, an.rho)); });
        out.push_back(c);
    }
    {
        auto c = make_check("drift_consistency", true, "|eigen drift - finite difference| <= 1e-6 max(1, |drift|)");
        guard_check(c, [&](CheckResult& c) {
            if (!an.kappa || an.tag != CaseTag::Irreducible) {
                c.status = CheckStatus::Skipped;
                c.detail = "needs an irreducible model with a root";
                return;
            }
            const auto d = stationary_drift(slopes, *an.kappa);
            c.measured = {{"drift", number_json(d.drift)}, {"finite_difference", opt_json(d.finite_difference)}};
            pass_if(c, d.finite_difference &&
                           std::abs(d.drift - *d.finite_difference) <= 1e-6 * std::max(1.0, std::abs(d.drift)));
        });
        out.push_back(c);
    }
    {
        auto c = make_check("al_bound", true, "|Psi(x) - Lambda(x)| <= B with relative slack 1e-12");
        guard_check(c, [&](CheckResult& c) {
            RandomStream rng(seed, Purpose::BoundCheck, 0);
            const auto r = verify_al_bound(spec, vo.bound_samples, default_al_grid(spec.domain()), rng);
            c.measured = {{"max_excess", number_json(r.max_excess)}, {"samples", r.n_samples}, {"points", r.n_points}};
            if (r.witness)
                c.measured["witness"] = {{"x", r.witness->x}, {"psi", r.witness->psi},
                                         {"lambda", r.witness->lambda}, {"b", r.witness->b}};
            pass_if(c, r.pass);
        });
        out.push_back(c);
    }
    {
        auto c = make_check("comparison_bound", true, "zero violations of the backward comparison bound");
        guard_check(c, [&](CheckResult& c) {
            const std::size_t shards = cfg.run.shards;
            std::vector<std::uint64_t> viol(shards, 0);
            std::vector<double> worst(shards, 0.0);
            parallel_for(shards, cfg.run.threads, [&](std::size_t s) {
                RandomStream rng(seed, Purpose::Comparison, s);
                const auto [b, e] = shard_range(vo.comparison_draws, shards, s);
                for (std::size_t i = b; i < e; ++i) {
                    const auto d = backward_error_bound(spec, 1 + i % vo.comparison_n, rng);
                    if (!d.ok) ++viol[s];
                    for (double g : d.gaps)
                        if (d.yhat > 0) worst[s] = std::max(worst[s], g / d.yhat);
                }
            });
            std::uint64_t v = 0;
            double w = 0.0;
            for (std::size_t s = 0; s < shards; ++s) {
                v += viol[s];
                w = std::max(w, worst[s]);
            }
            c.measured = {{"draws", vo.comparison_draws}, {"max_n", vo.comparison_n}, {"violations", v},
                          {"max_gap_over_bound", number_json(w)}};
            pass_if(c, v == 0);
        });
        out.push_back(c);
    }

    // Monte Carlo, advisory
    const double theta_mc = an.sup > 1.0 ? 1.0 : 0.5 * an.sup;
    {
        auto c = make_check("gelfand", false, "|E[Lip^theta]^(1/n) / rho(theta) - 1| <= 0.05");
        guard_check(c, [&](CheckResult& c) {
            Json m = Json::array();
            bool ok = true;
            for (double th : {0.5, 1.0}) {
                if (th >= an.sup) continue;
                const double rho = spectral_radius(cramer_matrix(slopes, th));
                const auto g = gelfand_estimate(spec, th, vo.gelfand_n, vo.gelfand_paths, seed, cfg.run.threads,
                                                cfg.run.shards);
                const double rel = std::abs(g.root / rho - 1);
                ok = ok && rel <= 0.05;
                m.push_back({{"theta", th}, {"rho", number_json(rho)}, {"estimate", number_json(g.root)},
                             {"relative_error", number_json(rel)}});
            }
            c.measured = m;
            pass_if(c, ok);
        });
        out.push_back(c);
    }
    {
        auto c = make_check("martingale", false, "every statistic within 4 standard errors of v_d(theta)");
        guard_check(c, [&](CheckResult& c) {
            const auto sd = eigen_pair(cramer_matrix(slopes, theta_mc));
            if (!sd.phat_definable) {
                c.status = CheckStatus::Skipped;
                c.detail = "right eigenvector has a zero component";
                return;
            }
            const auto r = martingale_statistic(spec, theta_mc, vo.martingale_n, vo.martingale_paths, seed,
                                                cfg.run.threads, cfg.run.shards);
            c.measured = {{"theta", theta_mc}, {"max_z", number_json(r.max_z)}, {"v", pair_json(r.v)}};
            pass_if(c, r.pass);
        });
        out.push_back(c);
    }
    {
        auto c = make_check("moment_identity", false, "P(theta)^n entries within 4 standard errors, n in {1, 2, 5}");
        guard_check(c, [&](CheckResult& c) {
            bool ok = true;
            Json m = Json::array();
            for (std::size_t n : {1, 2, 5}) {
                const auto r = moment_identity_check(spec, theta_mc, n, vo.identity_paths, seed, cfg.run.threads,
                                                     cfg.run.shards);
                ok = ok && r.pass;
                m.push_back({{"n", n}, {"pass", r.pass}});
            }
            c.measured = {{"theta", theta_mc}, {"powers", m}};
            pass_if(c, ok);
        });
        out.push_back(c);
    }
    {
        auto c = make_check("coupling_certificate", false, "two chains from the coupling starts meet within 1e-9");
        c.measured = {{"burn_in", chain.burn_in}, {"max_final_gap", number_json(chain.diag.max_final_gap)}};
        pass_if(c, chain.diag.certified);
        if (cfg.run.burn_in) {
            c.status = CheckStatus::Skipped;
            c.detail = "fixed burn-in requested";
        }
        out.push_back(c);
    }
    const SideOrders so = side_orders(preds);
    for (int side : {1, -1}) {
        const auto& order = side > 0 ? so.right : so.left;
        const auto& hill = side > 0 ? em.hill_right : em.hill_left;
        const auto& constant = side > 0 ? so.right_c : so.left_c;
        auto c = make_check(side > 0 ? "hill_right" : "hill_left", false, "predicted order inside the Hill CI");
        if (!order) {
            c.status = CheckStatus::Skipped;
            c.detail = "no predicted order";
        } else if (!hill && constant && !constant->excludes_zero()) {
            c.status = CheckStatus::Skipped;
            c.detail = "empty tail; the constant estimate does not exclude 0";
        } else if (!hill) {
            c.status = CheckStatus::Error;
            c.detail = "Hill estimate unavailable";
        } else {
            c.measured = {{"predicted", number_json(*order)}, {"alpha", number_json(hill->alpha)},
                          {"ci", Json::array({number_json(hill->ci_lo), number_json(hill->ci_hi)})}};
            pass_if(c, hill->ci_lo <= *order && *order <= hill->ci_hi);
            if (c.status == CheckStatus::Fail && !(side > 0 ? so.right_covered : so.left_covered))
                c.status = CheckStatus::NotCovered;
        }
        out.push_back(c);
    }
    for (const auto& p : preds) {
        auto c = make_check("tail_constants_" + p.variant, false, "estimated constants are nonnegative within CI");
        if (!p.constants) {
            c.status = CheckStatus::Error;
            c.detail = p.error.is_null() ? "unavailable" : p.error.value("message", "");
        } else {
            const auto& tc = *p.constants;
            bool ok = true;
            Json m = Json::object();
            for (const auto* e : {&tc.c_plus, &tc.c_minus}) {
                if (!*e) continue;
                ok = ok && (*e)->hi >= 0;
                m[e == &tc.c_plus ? "c_plus" : "c_minus"] = estimate_json(**e);
            }
            if (tc.variant == "case1" && tc.c_plus && tc.c_minus) {
                // u_+ C_- = u_- C_+
                double um = 0, up = 0;
                for (const auto& [k, v] : tc.inputs) {
                    if (k == "u_minus") um = v;
                    if (k == "u_plus") up = v;
                }
                const double diff = up * tc.c_minus->value - um * tc.c_plus->value;
                const double se = std::hypot(up * tc.c_minus->se, um * tc.c_plus->se);
                m["relation_difference"] = number_json(diff);
                ok = ok && std::abs(diff) <= 1.96 * se + 1e-12 * std::max(1.0, std::abs(up * tc.c_minus->value));
            }
            c.measured = m;
            pass_if(c, ok);
            if (!tc.covered) {
                c.status = CheckStatus::NotCovered;
                c.detail = "PredictionNotCovered: a hypothesis does not pass";
            }
        }
        out.push_back(c);
    }
    return out;
}

Json checks_json(const std::vector<CheckResult>& cs) {
    Json arr = Json::array();
    for (const auto& c : cs) arr.push_back(check_to_json(c));
    return arr;
}

int verdict_exit(const std::vector<CheckResult>& cs, bool strict) {
    for (const auto& c : cs) {
        const bool bad = c.status == CheckStatus::Fail || c.status == CheckStatus::Error;
        if (bad && (c.required || strict)) return 1;
    }
    return 0;
}

Json header(const RunConfig& cfg, const char* command) {
    return {{"schema", "alifs-report/1"}, {"command", command}, {"config", config_to_json(cfg)}};
}

fs::path out_dir(const RunConfig& cfg) {
    const fs::path p(cfg.run.out);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) throw IoError("cannot create output directory " + p.string());
    return p;
}

void write_tailcurve_csv(const std::string& path, const TailCurve& right, const TailCurve& left) {
    std::ostringstream o;
    o << "threshold,left,right,ci_lo,ci_hi,left_ci_lo,left_ci_hi\n";
    char buf[256];
    for (std::size_t i = 0; i < right.thresholds.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", right.thresholds[i], left.left[i],
                      right.right[i], right.right_lo[i], right.right_hi[i], left.left_lo[i], left.left_hi[i]);
        o << buf;
    }
    write_text_file(path, o.str());
}

void write_samples_csv(const std::string& path, const std::vector<double>& samples) {
    std::string s = "x\n";
    char buf[32];
    for (double x : samples) {
        std::snprintf(buf, sizeof buf, "%.17g\n", x);
        s += buf;
    }
    write_text_file(path, s);
}

void write_rho_csv(const std::string& path, const Analysis& an) {
    std::ostringstream o;
    o << "theta,rho\n";
    char buf[64];
    for (std::size_t i = 0; i < an.grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", an.grid[i], an.rho[i]);
        o << buf;
    }
    write_text_file(path, o.str());
}

struct FullRun {
    Analysis an;
    ChainRun chain;
    std::vector<Prediction> preds;
    Empirical em;
    std::vector<CheckResult> checks;
};

FullRun full_run(const RunConfig& cfg, const char* command) {
    require_seed(cfg, command);
    FullRun f;
    f.an = analyze(cfg);
    f.chain = sample_stationary(cfg.model, cfg.run.samples, *cfg.run.seed, stationary_options(cfg));
    f.preds = predict(cfg, f.an, f.chain.samples);
    f.em = empirical(cfg, f.chain.samples, side_orders(f.preds));
    f.checks = run_checks(cfg, f.an, f.chain, f.preds, f.em);
    return f;
}

Json full_report(const RunConfig& cfg, const FullRun& f, const char* command) {
    Json r = header(cfg, command);
    r["analysis"] = f.an.json;
    r["predictions"] = predictions_json(f.preds);
    Json emp = f.em.json;
    emp["chain"] = chain_json(f.chain);
    r["empirical"] = emp;
    r["checks"] = checks_json(f.checks);
    std::size_t fails = 0, req_fails = 0;
    for (const auto& c : f.checks)
        if (c.status == CheckStatus::Fail || c.status == CheckStatus::Error) {
            ++fails;
            req_fails += c.required;
        }
    r["summary"] = {{"checks", f.checks.size()}, {"failed", fails}, {"required_failed", req_fails}};
    return r;
}

}  // namespace

const char* check_status_name(CheckStatus s) {
    static const char* names[] = {"PASS", "FAIL", "NOT_COVERED", "SKIPPED", "ERROR"};
    return names[int(s)];
}

Json check_to_json(const CheckResult& c) {
    Json j{{"name", c.name},
           {"required", c.required},
           {"status", check_status_name(c.status)},
           {"tolerance", c.tolerance},
           {"measured", c.measured}};
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

std::string dump_report(const Json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(text.data(), std::streamsize(text.size()));
    if (!out) throw IoError("write failed for " + path);
}

void write_samples_bin(const std::string& path, const std::vector<double>& samples) {
    std::string bytes(samples.size() * 8, '\0');
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto u = std::bit_cast<std::uint64_t>(samples[i]);
        for (int b = 0; b < 8; ++b) bytes[8 * i + b] = char((u >> (8 * b)) & 0xff);
    }
    write_text_file(path, bytes);
}

std::vector<double> read_samples_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 8) throw IoError(path + ": size is not a multiple of 8");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= std::uint64_t(static_cast<unsigned char>(bytes[8 * i + b])) << (8 * b);
        out[i] = std::bit_cast<double>(u);
    }
    return out;
}

Json analysis_section(const RunConfig& cfg) { return analyze(cfg).json; }

CommandResult cmd_analyze(const RunConfig& cfg, bool write) {
    CommandResult res;
    const Analysis an = analyze(cfg);
    res.report = header(cfg, "analyze");
    res.report["analysis"] = an.json;
    if (write) {
        const auto dir = out_dir(cfg);
        write_text_file((dir / "report.json").string(), dump_report(res.report));
        write_rho_csv((dir / "rho_grid.csv").string(), an);
    }
    return res;
}

CommandResult cmd_simulate(const RunConfig& cfg, bool write) {
    const std::uint64_t seed = require_seed(cfg, "simulate");
    fs::path dir;
    if (write) dir = out_dir(cfg);
    CommandResult res;
    const ChainRun chain = sample_stationary(cfg.model, cfg.run.samples, seed, stationary_options(cfg));
    Json sim = chain_json(chain);
    const auto ex = existence_check(cfg.model);
    sim["existence"] = {{"holds", ex.holds}, {"theta", opt_json(ex.theta)}};
    if (!ex.holds) sim["warnings"].push_back("no theta with rho(theta) < 1 and E B^theta finite was found");

    std::optional<double> kr, kl;
    try {
        const Analysis an = analyze(cfg);
        const SideOrders so = side_orders(predict(cfg, an, {}, false));
        kr = so.right;
        kl = so.left;
    } catch (const std::exception&) {
    }
    const SideOrders orders{kr, kl};
    const auto thresholds = default_thresholds(chain.samples);
    const TailCurve right = empirical_tail_curve(chain.samples, kr.value_or(0.0), thresholds);
    const TailCurve left = empirical_tail_curve(chain.samples, kl.value_or(0.0), thresholds);
    res.report = header(cfg, "simulate");
    res.report["simulation"] = sim;
    res.report["empirical"] = empirical(cfg, chain.samples, orders).json;
    if (write) {
        write_samples_bin((dir / "samples.bin").string(), chain.samples);
        write_samples_csv((dir / "samples.csv").string(), chain.samples);
        write_tailcurve_csv((dir / "tailcurve.csv").string(), right, left);
        write_text_file((dir / "report.json").string(), dump_report(res.report));
    }
    return res;
}

CommandResult cmd_verify(const RunConfig& cfg, bool write) {
    fs::path dir;
    if (write) dir = out_dir(cfg);
    const FullRun f = full_run(cfg, "verify");
    CommandResult res;
    res.report = full_report(cfg, f, "verify");
    res.checks = f.checks;
    res.exit_code = verdict_exit(f.checks, cfg.verify.strict);
    if (write) write_text_file((dir / "report.json").string(), dump_report(res.report));
    return res;
}

CommandResult cmd_report(const RunConfig& cfg, bool write) {
    fs::path dir;
    if (write) dir = out_dir(cfg);
    const FullRun f = full_run(cfg, "report");
    CommandResult res;
    res.report = full_report(cfg, f, "report");
    res.checks = f.checks;
    if (write) {
        write_text_file((dir / "report.json").string(), dump_report(res.report));
        write_samples_bin((dir / "samples.bin").string(), f.chain.samples);
        write_samples_csv((dir / "samples.csv").string(), f.chain.samples);
        write_tailcurve_csv((dir / "tailcurve.csv").string(), f.em.right, f.em.left);
        write_rho_csv((dir / "rho_grid.csv").string(), f.an);
    }
    return res;
}

}  // namespace alifs
