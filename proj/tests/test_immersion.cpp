#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "netid/filtering.hpp"
#include "netid/immersion.hpp"
#include "netid/network_io.hpp"
#include "netid/variance.hpp"
#include "test_support.hpp"

using namespace netid;
using netid_test::case_study_network;
using cplx = std::complex<double>;

namespace {

// Independent per-frequency oracle: Schur elimination of the Z block of
// I - G(omega); the retained row of the reduced matrix gives the lumped
// transfers after normalizing the diagonal.
std::map<int, cplx> schur_lumped_oracle(const NetworkModel& model, const PredictorSet& ps,
                                        double omega) {
    const int L = model.node_count();
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(L, L) - model.transfer_matrix(omega);
    std::vector<int> retained{ps.target_output};
    for (int p : ps.predictors) retained.push_back(p);
    std::vector<int> eliminated;
    for (int v = 1; v <= L; ++v)
        if (v != ps.target_output && !ps.predictors.count(v)) eliminated.push_back(v);

    const long nr = static_cast<long>(retained.size());
    const long nz = static_cast<long>(eliminated.size());
    Eigen::MatrixXcd Mrr(nr, nr), Mrz(nr, nz), Mzr(nz, nr), Mzz(nz, nz);
    for (long a = 0; a < nr; ++a)
        for (long b = 0; b < nr; ++b) Mrr(a, b) = M(retained[static_cast<size_t>(a)] - 1,
                                                    retained[static_cast<size_t>(b)] - 1);
    for (long a = 0; a < nr; ++a)
        for (long b = 0; b < nz; ++b) Mrz(a, b) = M(retained[static_cast<size_t>(a)] - 1,
                                                    eliminated[static_cast<size_t>(b)] - 1);
    for (long a = 0; a < nz; ++a)
        for (long b = 0; b < nr; ++b) Mzr(a, b) = M(eliminated[static_cast<size_t>(a)] - 1,
                                                    retained[static_cast<size_t>(b)] - 1);
    for (long a = 0; a < nz; ++a)
        for (long b = 0; b < nz; ++b) Mzz(a, b) = M(eliminated[static_cast<size_t>(a)] - 1,
                                                    eliminated[static_cast<size_t>(b)] - 1);
    Eigen::MatrixXcd reduced = Mrr;
    if (nz > 0) reduced -= Mrz * Mzz.partialPivLu().solve(Mzr);

    std::map<int, cplx> out;
    for (long b = 1; b < nr; ++b)
        out[retained[static_cast<size_t>(b)]] = -reduced(0, b) / reduced(0, 0);
    return out;
}

}  // namespace

TEST_CASE("predictor set invariants") {
    CHECK_THROWS_AS((PredictorSet{2, 1, {3}}.check_invariants()), std::invalid_argument);
    CHECK_THROWS_AS((PredictorSet{2, 1, {1, 2}}.check_invariants()), std::invalid_argument);
    CHECK_NOTHROW((PredictorSet{2, 1, {1, 3}}.check_invariants()));
}

TEST_CASE("consistency conditions on the case study") {
    auto model = case_study_network();

    SUBCASE("reduced set {1,3} satisfies the conditions (node 4 removable)") {
        auto verdict = check_consistency_conditions(model, {2, 1, {1, 3}});
        CHECK(verdict.satisfied);
        CHECK(verdict.unchecked.find("confounding") != std::string::npos);
    }

    SUBCASE("dropping node 3 leaves the parallel path 1->3->2 as witness") {
        auto verdict = check_consistency_conditions(model, {2, 1, {1}});
        REQUIRE_FALSE(verdict.satisfied);
        bool found = false;
        for (const auto& v : verdict.violations)
            if (v.kind == ConsistencyViolation::Kind::parallel_path &&
                v.witness == std::vector<int>{1, 3, 2})
                found = true;
        CHECK(found);
    }

    SUBCASE("loop condition: removing node 1 from the set leaves the loop 2->1->2") {
        auto verdict = check_consistency_conditions(model, {2, 3, {3}});
        REQUIRE_FALSE(verdict.satisfied);
        bool found = false;
        for (const auto& v : verdict.violations)
            if (v.kind == ConsistencyViolation::Kind::loop) found = true;
        CHECK(found);
    }

    SUBCASE("full in-neighbor set always satisfies") {
        auto nj = model.in_neighbors(2);
        auto verdict = check_consistency_conditions(model, {2, 1, {nj.begin(), nj.end()}});
        CHECK(verdict.satisfied);
    }

    SUBCASE("missing target edge") {
        CHECK_THROWS_WITH_AS(check_consistency_conditions(model, {3, 2, {2}}),
                             doctest::Contains("no such module"), std::invalid_argument);
    }
}

TEST_CASE("full in-neighbor set satisfies the conditions on random networks") {
    std::mt19937 rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        auto model = netid_test::make_random_network(rng, 5);
        for (const auto& [key, tf] : model.modules()) {
            (void)tf;
            auto nj = model.in_neighbors(key.first);
            PredictorSet ps{key.first, key.second, {nj.begin(), nj.end()}};
            CHECK(check_consistency_conditions(model, ps).satisfied);
            break;
        }
    }
}

TEST_CASE("immerse: case-study lumped transfer is G23 + G24*G43, exactly") {
    for (bool two_param : {false, true}) {
        auto model = case_study_network(two_param);
        auto grid = FrequencyGrid::uniform(64);
        auto im = immerse(model, {2, 1, {1, 3}}, grid);
        REQUIRE(im.exact_available);

        auto expected = model.module(2, 3) + model.module(2, 4) * model.module(4, 3);
        CHECK(im.lumped_exact.at(3).almost_equal(expected, 1e-9));
        // The targeted module is preserved exactly.
        CHECK(im.lumped_exact.at(1).almost_equal(model.module(2, 1), 1e-9));

        for (size_t i = 0; i < grid.size(); ++i) {
            CHECK(std::abs(im.lumped_values.at(3)[i] - expected.at(grid[i])) < 1e-9);
            CHECK(std::abs(im.lumped_values.at(1)[i] - model.module(2, 1).at(grid[i])) < 1e-10);
        }
    }
}

TEST_CASE("immerse: identity immersion when nothing is eliminated") {
    auto model = case_study_network();
    auto grid = FrequencyGrid::uniform(32);
    auto im = immerse(model, {2, 1, {1, 3, 4}}, grid);
    REQUIRE(im.exact_available);
    for (int k : {1, 3, 4})
        CHECK(im.lumped_exact.at(k).almost_equal(model.module(2, k), 1e-12));
    auto phi_v = model.noise(2).spectrum(grid.points());
    for (size_t i = 0; i < grid.size(); ++i)
        CHECK(im.immersed_noise_spectrum[i] == doctest::Approx(phi_v[i]).epsilon(1e-12));
}

TEST_CASE("immerse: inconsistent set rejected unless overridden") {
    auto model = case_study_network();
    auto grid = FrequencyGrid::uniform(16);
    CHECK_THROWS_AS(immerse(model, {2, 1, {1}}, grid), std::runtime_error);
    ImmerseOptions opts;
    opts.allow_inconsistent = true;
    CHECK_NOTHROW(immerse(model, {2, 1, {1}}, grid, opts));
}

TEST_CASE("immerse: random networks match the Schur-complement oracle") {
    std::mt19937 rng(41);
    auto grid = FrequencyGrid::uniform(32);
    int tested = 0;
    for (int rep = 0; rep < 12 && tested < 5; ++rep) {
        auto model = netid_test::make_random_network(rng, 5);
        // Pick a target edge and a predictor set that passes the conditions.
        bool done = false;
        for (const auto& [key, tf] : model.modules()) {
            (void)tf;
            const int j = key.first;
            const int k = key.second;
            auto sets = enumerate_valid_predictor_sets(model, j, k, 12);
            for (const auto& ps : sets) {
                const size_t nz = static_cast<size_t>(model.node_count()) - 1 - ps.predictors.size();
                if (nz == 0 || nz > 3) continue;
                auto im = immerse(model, ps, grid);
                for (size_t i = 0; i < grid.size(); ++i) {
                    auto oracle = schur_lumped_oracle(model, ps, grid[i]);
                    for (const auto& [node, vals] : im.lumped_values)
                        CHECK(std::abs(vals[i] - oracle.at(node)) < 1e-9);
                }
                if (im.exact_available)
                    for (const auto& [node, tf_exact] : im.lumped_exact)
                        for (size_t i = 0; i < grid.size(); i += 7)
                            CHECK(std::abs(tf_exact.at(grid[i]) - im.lumped_values.at(node)[i]) <
                                  1e-8);
                ++tested;
                done = true;
                break;
            }
            if (done) break;
        }
    }
    CHECK(tested >= 3);
}

TEST_CASE("immersed noise spectrum") {
    auto grid = FrequencyGrid::uniform(64);

    SUBCASE("nothing leaks when the eliminated node does not feed the target") {
        auto model = case_study_network();
        model.remove_module(2, 4);
        auto phi = immersed_noise_spectrum(model, {2, 1, {1, 3}}, grid);
        auto phi_v = model.noise(2).spectrum(grid.points());
        for (size_t i = 0; i < grid.size(); ++i)
            CHECK(phi[i] == doctest::Approx(phi_v[i]).epsilon(1e-12));
    }

    SUBCASE("static gain chain adds |c|^2 Phi_v4") {
        auto model = case_study_network();
        const double c = 0.37;
        model.set_module(2, 4, RationalTransfer(Polynomial{c}, Polynomial{1.0}, 1));
        auto phi = immersed_noise_spectrum(model, {2, 1, {1, 3}}, grid);
        auto phi_v2 = model.noise(2).spectrum(grid.points());
        auto phi_v4 = model.noise(4).spectrum(grid.points());
        for (size_t i = 0; i < grid.size(); ++i)
            CHECK(phi[i] == doctest::Approx(phi_v2[i] + c * c * phi_v4[i]).epsilon(1e-10));
    }

    SUBCASE("silent eliminated node leaves the target noise untouched") {
        auto model = case_study_network();
        model.set_noise(4, {RationalTransfer::constant(1.0), 0.0});
        auto phi = immersed_noise_spectrum(model, {2, 1, {1, 3}}, grid);
        auto phi_v2 = model.noise(2).spectrum(grid.points());
        for (size_t i = 0; i < grid.size(); ++i)
            CHECK(phi[i] == doctest::Approx(phi_v2[i]).epsilon(1e-12));
    }
}

TEST_CASE("noise monotonicity: enlarging the predictor set never adds noise") {
    auto grid = FrequencyGrid::uniform(64);
    auto model = case_study_network();
    auto small_set = immersed_noise_spectrum(model, {2, 1, {1, 3}}, grid);
    auto large_set = immersed_noise_spectrum(model, {2, 1, {1, 3, 4}}, grid);
    for (size_t i = 0; i < grid.size(); ++i) CHECK(large_set[i] <= small_set[i] + 1e-12);

    // Pointwise lower bound by the target's own noise.
    auto phi_v = model.noise(2).spectrum(grid.points());
    for (size_t i = 0; i < grid.size(); ++i) CHECK(small_set[i] >= phi_v[i] - 1e-12);
}

TEST_CASE("targeted-module preservation over all valid predictor sets") {
    auto model = case_study_network();
    auto grid = FrequencyGrid::uniform(32);
    auto g21 = model.module(2, 1);
    for (const auto& ps : enumerate_valid_predictor_sets(model, 2, 1, 16)) {
        auto im = immerse(model, ps, grid);
        for (size_t i = 0; i < grid.size(); ++i)
            CHECK(std::abs(im.lumped_values.at(1)[i] - g21.at(grid[i])) < 1e-10);
    }
}

TEST_CASE("enumerate_valid_predictor_sets") {
    SUBCASE("case study contains the reduced and the full set") {
        auto model = case_study_network();
        auto sets = enumerate_valid_predictor_sets(model, 2, 1, 16);
        bool have_reduced = false, have_full = false;
        for (const auto& ps : sets) {
            if (ps.predictors == std::set<int>{1, 3}) have_reduced = true;
            if (ps.predictors == std::set<int>{1, 3, 4}) have_full = true;
            CHECK(check_consistency_conditions(model, ps).satisfied);
        }
        CHECK(have_reduced);
        CHECK(have_full);
        // Ordered by size.
        for (size_t i = 1; i < sets.size(); ++i)
            CHECK(sets[i - 1].predictors.size() <= sets[i].predictors.size());
    }

    SUBCASE("two-node network: only {k}") {
        NetworkModel model(2);
        model.set_module(2, 1, RationalTransfer(Polynomial{0.5}, Polynomial{1.0}, 1));
        model.set_noise(1, {RationalTransfer::constant(1.0), 0.1});
        model.set_noise(2, {RationalTransfer::constant(1.0), 0.1});
        auto sets = enumerate_valid_predictor_sets(model, 2, 1, 8);
        REQUIRE(sets.size() == 1);
        CHECK(sets[0].predictors == std::set<int>{1});
    }

    SUBCASE("minimal sets agree with exhaustive subset search") {
        auto model = case_study_network();
        auto sets = enumerate_valid_predictor_sets(model, 2, 1, 64);
        // Exhaustive: all subsets of {2,3,4}\{2} joined with {1}.
        std::vector<std::set<int>> valid;
        for (int mask = 0; mask < 4; ++mask) {
            std::set<int> preds{1};
            if (mask & 1) preds.insert(3);
            if (mask & 2) preds.insert(4);
            if (check_consistency_conditions(model, {2, 1, preds}).satisfied)
                valid.push_back(preds);
        }
        CHECK(valid.size() == sets.size());
        size_t min_size = SIZE_MAX;
        for (const auto& v : valid) min_size = std::min(min_size, v.size());
        CHECK(sets.front().predictors.size() == min_size);
    }
}

TEST_CASE("grid spectral factor") {
    auto grid = FrequencyGrid::uniform(256);

    SUBCASE("flat spectrum") {
        std::vector<double> spec(grid.size(), 0.1);
        auto f = grid_spectral_factor(spec, grid);
        CHECK(f.variance == doctest::Approx(0.1).epsilon(1e-10));
        for (const auto& v : f.factor) CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-9);
    }

    SUBCASE("already minimum-phase monic MA(1)") {
        std::vector<double> spec(grid.size());
        for (size_t i = 0; i < grid.size(); ++i)
            spec[i] = std::norm(1.0 - 0.5 * std::polar(1.0, -grid[i]));
        auto f = grid_spectral_factor(spec, grid);
        CHECK(f.variance == doctest::Approx(1.0).epsilon(0.01));
        for (size_t i : netid_test::midband(grid)) {
            const cplx expected = 1.0 - 0.5 * std::polar(1.0, -grid[i]);
            CHECK(std::abs(f.factor[i] - expected) < 0.01 * std::abs(expected));
        }
    }

    SUBCASE("recovers a known noise shape within 1% in mid-band") {
        NoiseShape ns{RationalTransfer(Polynomial{1.0, 0.4}, Polynomial{1.0, -0.55}), 0.3};
        auto spec = ns.spectrum(grid.points());
        auto f = grid_spectral_factor(spec, grid);
        CHECK(f.variance == doctest::Approx(0.3).epsilon(0.02));
        for (size_t i : netid_test::midband(grid)) {
            const double reproduced = f.variance * std::norm(f.factor[i]);
            CHECK(reproduced == doctest::Approx(spec[i]).epsilon(0.01));
            CHECK(std::abs(f.factor[i] - ns.shaper.at(grid[i])) <
                  0.01 * std::abs(ns.shaper.at(grid[i])) + 1e-4);
        }
    }

    SUBCASE("rejects nonpositive input") {
        std::vector<double> spec(grid.size(), 1.0);
        spec[3] = 0.0;
        CHECK_THROWS_AS(grid_spectral_factor(spec, grid), std::invalid_argument);
    }
}

TEST_CASE("simulation-level identity: residual periodogram matches Phi_breve_v (smoke)") {
    auto model = case_study_network();
    auto grid = FrequencyGrid::uniform(64);
    auto im = immerse(model, {2, 1, {1, 3}}, grid);
    REQUIRE(im.exact_available);
    const auto& g21 = im.lumped_exact.at(1);
    const auto& g23 = im.lumped_exact.at(3);

    const int runs = 30;
    std::vector<cplx> avg(grid.size(), cplx(0.0, 0.0));
    for (int i = 0; i < runs; ++i) {
        auto rec = simulate(model, 10000, 1.0, 500 + static_cast<std::uint64_t>(i));
        auto p1 = filter(g21, rec.w[0]);
        auto p3 = filter(g23, rec.w[2]);
        std::vector<double> resid(rec.w[1]);
        for (size_t t = 0; t < resid.size(); ++t) resid[t] -= p1[t] + p3[t];
        auto est = welch_cross_spectrum(resid, resid, grid);
        for (size_t g = 0; g < grid.size(); ++g) avg[g] += est[g];
    }
    for (size_t i : netid_test::midband(grid)) {
        const double got = avg[i].real() / runs;
        CHECK(got == doctest::Approx(im.immersed_noise_spectrum[i]).epsilon(0.2));
    }
}

TEST_CASE("immersion report CSV shape") {
    auto model = case_study_network();
    auto grid = FrequencyGrid::uniform(8);
    auto im = immerse(model, {2, 1, {1, 3}}, grid);
    auto csv = immersion_report_csv(im);
    CHECK(csv.rfind("omega,phi_breve_v,phi_v,abs_G_lumped_1,abs_G_lumped_3", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}

TEST_CASE("immerse: ill-posed eliminated subnetwork is reported") {
    // Unity-gain loop entirely inside the eliminated set: I - G_ZZ singular
    // at omega = 0.
    NetworkModel model(4);
    model.set_module(1, 4, RationalTransfer(Polynomial{0.5}, Polynomial{1.0}, 1));
    model.set_module(2, 3, RationalTransfer(Polynomial{1.0}, Polynomial{1.0}, 1));
    model.set_module(3, 2, RationalTransfer(Polynomial{1.0}, Polynomial{1.0}, 1));
    model.set_noise(1, {RationalTransfer::constant(1.0), 0.1});
    auto grid = FrequencyGrid::uniform(8);
    CHECK_THROWS_WITH_AS(immerse(model, {1, 4, {4}}, grid),
                         doctest::Contains("ill-posed"), std::runtime_error);
}

TEST_CASE("grid spectral factor requires the uniform-from-zero grid") {
    auto grid = FrequencyGrid({0.1, 0.5, 1.0, 2.0});
    std::vector<double> spec(4, 1.0);
    CHECK_THROWS_AS(grid_spectral_factor(spec, grid), std::invalid_argument);
}
