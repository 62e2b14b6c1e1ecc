#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <alifs/tail_index.hpp>

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <functional>

using namespace alifs;

namespace {

const double kPhi = 0.5 * (1.0 + std::sqrt(5.0));

ModelSpec goldie() { return ModelSpec(AffineModel{ScalarDist::two_point(2.0, 0.5, 0.25), ScalarDist::point_mass(1.0)}); }
ModelSpec arch() { return ModelSpec(Arch1Model{1.0, 1.0, ScalarDist::gaussian(0, 1)}); }

// plain bisection on a scalar increasing function
double bisect(const std::function<double(double)>& g, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

CustomTwoSlopeModel two_slope(ScalarDist am, ScalarDist ap) {
    CustomTwoSlopeModel m;
    m.a_minus = am;
    m.a_plus = ap;
    return m;
}

}  // namespace

TEST_CASE("domain_sup") {
    CHECK(domain_sup(arch()) == kInf);
    CHECK(domain_sup(ModelSpec(AffineModel{ScalarDist::pareto(1, 3), ScalarDist::point_mass(1)})) == 3.0);
    CHECK(domain_sup(goldie()) == kInf);
}

TEST_CASE("goldie kappa") {
    const auto s = solve_kappa(goldie(), 1e-13);
    REQUIRE(s.kappa.has_value());
    // x = 2^theta solves x^3 - 2x^2 + 1 = (x - 1)(x^2 - x - 1) = 0
    CHECK(std::abs(*s.kappa - std::log2(kPhi)) < 1e-9);
    CHECK(s.rho_dips_below_one);
    CHECK(s.drift_negative_at_zero);
    const auto again = solve_kappa(goldie(), 1e-13);
    REQUIRE(again.history.size() == s.history.size());
    for (std::size_t i = 0; i < s.history.size(); ++i) CHECK(again.history[i] == s.history[i]);
}

TEST_CASE("arch kappa by quadrature") {
    const auto s = solve_kappa(arch(), 1e-12, MomentMethod::quadrature());
    REQUIRE(s.kappa.has_value());
    CHECK(std::abs(*s.kappa - 2.0) < 1e-6);
}

TEST_CASE("contracting point mass has no kappa") {
    const auto s = solve_kappa(ModelSpec(AffineModel{ScalarDist::point_mass(0.5), ScalarDist::point_mass(1)}), 1e-12);
    CHECK_FALSE(s.kappa.has_value());
    CHECK(s.rho_dips_below_one);
    CHECK(s.never_exceeds_one);
    CHECK(s.cap_reached);
}

TEST_CASE("degenerate spectrum") {
    CHECK_THROWS_AS(solve_kappa(ModelSpec(AffineModel{ScalarDist::point_mass(1.0), ScalarDist::point_mass(1)}), 1e-12),
                    DegenerateSpectrum);
}

TEST_CASE("pareto slope caps at the moment boundary") {
    // E A^theta = 3/(3 - theta) for Pareto(1, 3): never crosses 1 from below
    const auto s = solve_kappa(ModelSpec(AffineModel{ScalarDist::pareto(1, 3), ScalarDist::point_mass(1)}), 1e-12);
    CHECK_FALSE(s.kappa.has_value());
    CHECK_FALSE(s.rho_dips_below_one);
}

TEST_CASE("diagonal kappas") {
    const auto m1 = ModelSpec(two_slope(ScalarDist::two_point(-0.5, 0.5, 3.0), ScalarDist::two_point(2.0, 0.5, 0.1)));
    auto s = solve_diag_kappa(m1, -1, 1e-13);
    REQUIRE(s.kappa.has_value());
    CHECK(*s.kappa == doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-12));

    s = solve_diag_kappa(m1, 1, 1e-13);
    REQUIRE(s.kappa.has_value());
    const double oracle = bisect([](double t) { return std::pow(2.0, t) + std::pow(0.1, t) - 2.0; }, 0.5, 1.0);
    CHECK(std::abs(*s.kappa - oracle) < 1e-9);
    CHECK(*s.kappa > 0.9);
    CHECK(*s.kappa < 1.0);

    const auto m2 = ModelSpec(two_slope(ScalarDist::two_point(-1.4, 0.5, 0.2), ScalarDist::point_mass(1.0)));
    s = solve_diag_kappa(m2, -1, 1e-12);
    CHECK_FALSE(s.kappa.has_value());
}

TEST_CASE("drift") {
    for (double a : {0.5, 2.0, 3.0}) {
        const auto d = stationary_drift(ModelSpec(AffineModel{ScalarDist::point_mass(a), ScalarDist::point_mass(1)}), 0.7);
        CHECK(d.drift == doctest::Approx(std::log(a)).epsilon(1e-12));
    }

    const double expect = 0.5 * (std::log(2.0) + boost::math::digamma(1.5));
    CHECK(expect == doctest::Approx(0.3648185772692609).epsilon(1e-12));
    const auto d = stationary_drift(arch(), 2.0, MomentMethod::quadrature());
    CHECK(std::abs(d.drift - expect) < 1e-6);
    REQUIRE(d.finite_difference.has_value());
    CHECK(std::abs(*d.finite_difference - expect) < 1e-6);
    REQUIRE(d.moment_form.has_value());
    CHECK(std::abs(*d.moment_form - expect) < 1e-6);

    const double kappa = std::log2(kPhi);
    const auto g = stationary_drift(goldie(), kappa);
    const double goldie_expect = 0.5 * std::log(2.0) * (kPhi - 2.0 / (kPhi * kPhi));
    CHECK(g.drift == doctest::Approx(goldie_expect).epsilon(1e-10));
    CHECK(std::abs(*g.finite_difference - g.drift) < 1e-6);
    CHECK(g.drift > 0);
}

TEST_CASE("eigen formula drift matches finite difference") {
    const std::vector<ModelSpec> specs = {
        ModelSpec(Ar1Arch1Model{0.5, 1.0, 1.0, ScalarDist::gaussian(0, 1)}),
        ModelSpec(two_slope(ScalarDist::two_point(-0.7, 0.3, 1.4), ScalarDist::two_point(-1.3, 0.6, 0.4))),
        ModelSpec(two_slope(ScalarDist::uniform(-1, 2), ScalarDist::lognormal(-0.2, 0.5))),
    };
    for (const auto& sp : specs) {
        for (double th : {0.3, 1.0, 2.5}) {
            const auto d = stationary_drift(sp, th);
            REQUIRE(d.finite_difference.has_value());
            CHECK(std::abs(d.drift - *d.finite_difference) < 1e-6);
            if (d.moment_form) CHECK(*d.moment_form == doctest::Approx(d.drift).epsilon(1e-10));
        }
    }
}

TEST_CASE("plain moment form needs v = (1, 1)") {
    // asymmetric irreducible model: the generalized form is exact, the plain one is not
    const auto sp = ModelSpec(two_slope(ScalarDist::two_point(-0.7, 0.3, 1.4), ScalarDist::two_point(-1.3, 0.6, 0.4)));
    const auto d = stationary_drift(sp, 1.0);
    REQUIRE(d.moment_form_plain.has_value());
    CHECK_FALSE(d.moment_forms_agree);
    const auto sym = stationary_drift(arch(), 1.0);
    CHECK(sym.moment_forms_agree);
}

TEST_CASE("rho is log-convex on a grid") {
    std::vector<double> x, y;
    const auto slopes = ModelSpec(Ar1Arch1Model{0.5, 1.0, 1.0, ScalarDist::gaussian(0, 1)}).slope_laws();
    for (int i = 0; i <= 40; ++i) {
        x.push_back(0.1 * i);
        y.push_back(spectral_radius(cramer_matrix(slopes, x.back())));
    }
    CHECK(is_log_convex(x, y));
}

TEST_CASE("infinite drift at the moment boundary") {
    const auto sp = ModelSpec(AffineModel{ScalarDist::pareto(0.2, 3), ScalarDist::point_mass(1)});
    CHECK_THROWS_AS(stationary_drift(sp, 3.0), InfiniteDrift);
}
