#include <doctest.h>

#include "gridsync/errors.hpp"
#include "helpers.hpp"

using namespace gridsync;
using testutil::data_path;

TEST_CASE("single lossless line x = 0.5") {
    const auto y = build_admittance({Branch::from_impedance(1, 2, 0.0, 0.5)}, 2);
    CHECK(y.G.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(y.B(0, 0) == doctest::Approx(-2.0));
    CHECK(y.B(1, 1) == doctest::Approx(-2.0));
    CHECK(y.B(0, 1) == doctest::Approx(2.0));
    CHECK(y.B(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("empty branch list, one bus") {
    const auto y = build_admittance({}, 1);
    CHECK(y.G(0, 0) == 0.0);
    CHECK(y.B(0, 0) == 0.0);
}

TEST_CASE("9-bus admittance matches an independent hand assembly of sampled rows") {
    const CaseFile cf = parse_case(data_path("case9.m"));
    std::vector<Branch> branches;
    for (const auto& row : cf.branches)
        branches.push_back(Branch::from_impedance(row.from, row.to, row.r, row.x, row.b));
    const auto y = build_admittance(branches, 9);
    // bus 4 touches branches 1-4 (x 0.0576), 4-5 (0.017 + j0.092, b 0.158)
    // and 9-4 (0.01 + j0.085, b 0.176); assembled by hand:
    CHECK(y.G(3, 3) == doctest::Approx(3.3073789620253065).epsilon(1e-12));
    CHECK(y.B(3, 3) == doctest::Approx(-39.30888872611897).epsilon(1e-12));
    CHECK(y.G(3, 4) == doctest::Approx(-1.9421912487147268).epsilon(1e-12));
    CHECK(y.B(3, 4) == doctest::Approx(10.510682051867933).epsilon(1e-12));
    CHECK(y.G(0, 3) == doctest::Approx(0.0));
    CHECK(y.B(0, 3) == doctest::Approx(17.36111111111111).epsilon(1e-12));
}

TEST_CASE("admittance symmetry for reciprocal branch data") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.01, 0.4);
    std::vector<Branch> branches;
    for (int k = 0; k < 12; ++k) {
        const int i = 1 + static_cast<int>(rng() % 6);
        int j = 1 + static_cast<int>(rng() % 6);
        if (j == i) j = i == 6 ? 1 : i + 1;
        branches.push_back(Branch::from_impedance(i, j, u(rng) * 0.1, u(rng), u(rng) * 0.05));
    }
    const auto y = build_admittance(branches, 6);
    CHECK((y.G - y.G.transpose()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK((y.B - y.B.transpose()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("parallel branches accumulate") {
    const auto one = build_admittance({Branch::from_impedance(1, 2, 0.0, 0.5)}, 2);
    const auto two = build_admittance(
        {Branch::from_impedance(1, 2, 0.0, 0.5), Branch::from_impedance(1, 2, 0.0, 0.5)}, 2);
    CHECK(two.B(0, 1) == doctest::Approx(2.0 * one.B(0, 1)));
}

TEST_CASE("invalid bus id is a structural error") {
    CHECK_THROWS_AS(build_admittance({Branch::from_impedance(1, 3, 0.0, 0.5)}, 2),
                    StructuralError);
    CHECK_THROWS_AS(build_admittance({Branch::from_impedance(1, 1, 0.0, 0.5)}, 2),
                    StructuralError);
}
