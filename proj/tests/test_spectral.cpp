#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <alifs/spectral.hpp>

#include <cmath>

using namespace alifs;

namespace {

ModelSpec two_atom_affine(double a1, double a2) {
    return ModelSpec(AffineModel{ScalarDist::two_point(a1, 0.5, a2), ScalarDist::point_mass(1.0)});
}

ModelSpec ar1_arch(double alpha, ScalarDist z) { return ModelSpec(Ar1Arch1Model{alpha, 1.0, 1.0, z}); }

}  // namespace

TEST_CASE("cramer matrix examples") {
    auto m = cramer_matrix(two_atom_affine(2.0, 0.25), 1.0);
    CHECK(m.mm() == doctest::Approx(1.125));
    CHECK(m.pp() == doctest::Approx(1.125));
    CHECK(m.mp() == 0.0);
    CHECK(m.pm() == 0.0);

    m = cramer_matrix(ModelSpec(Arch1Model{1.0, 1.0, ScalarDist::gaussian(0, 1)}), 2.0, MomentMethod::quadrature());
    CHECK(m.method == MethodUsed::Quadrature);
    for (int d = 0; d < 2; ++d)
        for (int e = 0; e < 2; ++e) CHECK(m.p[d][e] == doctest::Approx(0.5).epsilon(1e-9));

    m = cramer_matrix(ModelSpec(AffineModel{ScalarDist::point_mass(0.5), ScalarDist::point_mass(0)}), 1.0);
    CHECK(m.mm() == 0.5);
    CHECK(m.pp() == 0.5);
    CHECK(m.mp() == 0.0);

    CHECK_THROWS_AS(cramer_matrix(ModelSpec(AffineModel{ScalarDist::pareto(1, 3), ScalarDist::point_mass(1)}), 3.5),
                    MomentDivergence);
}

TEST_CASE("row sums at zero") {
    auto m = cramer_matrix(ar1_arch(0.5, ScalarDist::gaussian(0, 1)), 0.0);
    CHECK(m.mm() + m.mp() == doctest::Approx(1.0));
    CHECK(m.pm() + m.pp() == doctest::Approx(1.0));
    // Lindley slopes put mass on 0: substochastic rows
    m = cramer_matrix(ModelSpec(LindleyModel{ScalarDist::gaussian(0.2, 1), ScalarDist::point_mass(1)}), 0.0);
    CHECK(m.mm() + m.mp() < 1.0);
    CHECK(m.pm() + m.pp() < 1.0);
}

TEST_CASE("spectral radius examples") {
    CHECK(spectral_radius(CramerMatrix::from_entries(0.5, 0, 0, 0.8)) == doctest::Approx(0.8));
    CHECK(spectral_radius(CramerMatrix::from_entries(0.5, 0.5, 0.5, 0.5)) == doctest::Approx(1.0));
    // roots of x^2 - 0.3 x - 0.1 = 0 are 0.5 and -0.2
    CHECK(spectral_radius(CramerMatrix::from_entries(0.2, 0.3, 0.4, 0.1)) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("eigen pair examples") {
    auto m = CramerMatrix::from_entries(0.5, 0.5, 0.5, 0.5);
    auto s = eigen_pair(m);
    CHECK(s.u[0] == doctest::Approx(0.5));
    CHECK(s.v[0] == doctest::Approx(1.0));
    CHECK(s.v[1] == doctest::Approx(1.0));
    CHECK(s.pihat[0] == doctest::Approx(0.5));

    m = CramerMatrix::from_entries(0.2, 0.4, 0.0, 0.6);
    s = eigen_pair(m);
    CHECK(s.structure == EigenStructure::UpperDominantPlus);
    CHECK(s.u[0] == 0.0);
    CHECK(s.u[1] == 1.0);
    CHECK(s.v[0] == doctest::Approx(1.0));
    CHECK(s.v[1] == doctest::Approx(1.0));
    CHECK(eigen_residual(m, s) < 1e-12);

    m = CramerMatrix::from_entries(0.2, 0.3, 0.4, 0.1);
    s = eigen_pair(m);
    CHECK(s.u[0] == doctest::Approx(4.0 / 7));
    CHECK(s.u[1] == doctest::Approx(3.0 / 7));
    CHECK(s.v[0] == doctest::Approx(1.0));
    CHECK(s.v[1] == doctest::Approx(1.0));
    CHECK(eigen_residual(m, s) < 1e-12);
}

TEST_CASE("eigen pair normalization and residuals over random matrices") {
    RandomStream rng(2, Purpose::Generic, 0);
    for (int i = 0; i < 1000; ++i) {
        auto m = CramerMatrix::from_entries(rng.uniform() * 3, rng.uniform() * 3, rng.uniform() * 3, rng.uniform() * 3);
        auto s = eigen_pair(m);
        CHECK(eigen_residual(m, s) < 1e-12);
        CHECK(s.u[0] + s.u[1] == doctest::Approx(1.0));
        CHECK(s.u[0] * s.v[0] + s.u[1] * s.v[1] == doctest::Approx(1.0));
        CHECK(s.pihat[0] + s.pihat[1] == doctest::Approx(1.0));
    }
}

TEST_CASE("reducible structures") {
    // upper triangular, minus dominant: v_+ = 0 and the tilted matrix is not definable
    auto m = CramerMatrix::from_entries(0.7, 0.3, 0.0, 0.2);
    auto s = eigen_pair(m);
    CHECK(s.structure == EigenStructure::UpperDominantMinus);
    CHECK(s.v[1] == 0.0);
    CHECK(s.u[0] * s.v[0] == doctest::Approx(1.0));
    CHECK(eigen_residual(m, s) < 1e-12);
    CHECK_THROWS_AS(phat(m, s), NotDefinable);

    // boundary p-- = p++
    m = CramerMatrix::from_entries(0.4, 0.3, 0.0, 0.4);
    s = eigen_pair(m);
    CHECK(s.structure == EigenStructure::TriangularBoundary);
    CHECK_FALSE(s.normalizable);
    CHECK_THROWS_AS(eigen_pair_strict(m), EigenDegenerate);

    // lower triangular mirror of 2A
    m = CramerMatrix::from_entries(0.6, 0.0, 0.4, 0.2);
    s = eigen_pair(m);
    CHECK(s.structure == EigenStructure::LowerDominantMinus);
    CHECK(s.u[0] == 1.0);
    CHECK(s.v[1] == doctest::Approx(1.0));
    CHECK(eigen_residual(m, s) < 1e-12);

    m = CramerMatrix::from_entries(0.3, 0.0, 0.0, 0.9);
    s = eigen_pair(m);
    CHECK(s.structure == EigenStructure::Diagonal);
    CHECK(s.u[1] == 1.0);
    CHECK(s.v[1] == 1.0);
}

TEST_CASE("phat") {
    auto m = CramerMatrix::from_entries(0.5, 0.5, 0.5, 0.5);
    auto q = phat(m, eigen_pair(m));
    CHECK(q[0][0] == doctest::Approx(0.5));
    CHECK(q[1][1] == doctest::Approx(0.5));

    m = CramerMatrix::from_entries(0.2, 0.4, 0.0, 0.6);
    q = phat(m, eigen_pair(m));
    CHECK(q[0][0] == doctest::Approx(1.0 / 3));
    CHECK(q[0][1] == doctest::Approx(2.0 / 3));
    CHECK(q[1][0] == 0.0);
    CHECK(q[1][1] == doctest::Approx(1.0));
}

TEST_CASE("stationary pi") {
    auto p = stationary_pi(CramerMatrix::from_entries(0.5, 0.5, 0.5, 0.5));
    CHECK(p[0] == doctest::Approx(0.5));
    p = stationary_pi(CramerMatrix::from_entries(0.8, 0.2, 0.6, 0.4));
    CHECK(p[0] == doctest::Approx(0.75));
    CHECK(p[1] == doctest::Approx(0.25));
    CHECK_THROWS_AS(stationary_pi(CramerMatrix::from_entries(1.0, 0.0, 0.5, 0.5)), NotIrreducible);
    CHECK_THROWS_AS(stationary_pi(CramerMatrix::from_entries(0.4, 0.4, 0.5, 0.5)), NotStochastic);
}

TEST_CASE("classification table") {
    CHECK(classify_case(ar1_arch(1.0, ScalarDist::gaussian(0, 1))) == CaseTag::Irreducible);
    CHECK(classify_case(ar1_arch(1.0, ScalarDist::uniform(-0.5, 0.5))) == CaseTag::Separated);
    CHECK(classify_case(ar1_arch(0.5, ScalarDist::uniform(-0.4, 2.0))) == CaseTag::UnilateralMinus);
    CHECK(classify_case(ar1_arch(0.5, ScalarDist::uniform(-2.0, 0.4))) == CaseTag::UnilateralPlus);
}

TEST_CASE("classification ignores B and the perturbation") {
    CustomTwoSlopeModel m;
    m.a_minus = ScalarDist::two_point(-0.5, 0.5, 3.0);
    m.a_plus = ScalarDist::two_point(2.0, 0.5, 0.1);
    for (auto kind : {Perturbation::Constant, Perturbation::RandomSign, Perturbation::Sine}) {
        for (double b : {1.0, 10.0}) {
            m.B = ScalarDist::point_mass(b);
            m.psi.kind = kind;
            CHECK(classify_case(ModelSpec(m)) == CaseTag::UnilateralMinus);
        }
    }
}

TEST_CASE("monte carlo classification never certifies a zero") {
    // far Gaussian tail: P(-A < 0) about 1e-9, tiny but structurally positive
    auto spec = ar1_arch(6.0, ScalarDist::gaussian(0, 1));
    auto m = cramer_matrix(spec, 0.0, MomentMethod::monte_carlo(10000, 1));
    CHECK_THROWS_AS(classify_case(m), AmbiguousClassification);
    CHECK(classify_case(cramer_matrix(spec, 0.0)) == CaseTag::Irreducible);
}

TEST_CASE("degeneracy scan") {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.1 * i);

    CustomTwoSlopeModel b;
    b.a_minus = ScalarDist::two_point(1.0, 0.5, -2.0);
    b.a_plus = ScalarDist::two_point(1.0, 0.5, -0.5);
    auto r = degeneracy_scan(ModelSpec(b), grid);
    CHECK(r.flagged);
    CHECK(r.max_residual < 1e-12);
    CHECK(r.alternative == DegeneracyAlt::B);
    CHECK(r.a == doctest::Approx(0.5));
    CHECK(r.gamma == doctest::Approx(0.25));

    r = degeneracy_scan(ModelSpec(AffineModel{ScalarDist::point_mass(1.0), ScalarDist::point_mass(1.0)}), grid);
    CHECK(r.flagged);
    CHECK(r.alternative == DegeneracyAlt::A);

    r = degeneracy_scan(ModelSpec(Arch1Model{1.0, 1.0, ScalarDist::gaussian(0, 1)}), grid);
    CHECK_FALSE(r.flagged);
    CHECK(is_log_convex(r.grid, r.rho));
}
