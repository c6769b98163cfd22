// Acceptance suite: runs every release criterion at its pinned tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the failure count.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "netid/experiment.hpp"
#include "netid/filtering.hpp"
#include "netid/identify.hpp"
#include "netid/immersion.hpp"
#include "netid/network_io.hpp"
#include "netid/variance.hpp"

using namespace netid;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Check {
    bool ok = true;
    std::string detail;
    void require(bool cond, const std::string& msg) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += msg;
        }
    }
    void note(const std::string& msg) {
        if (!detail.empty()) detail += "; ";
        detail += msg;
    }
};

std::vector<std::size_t> midband(const FrequencyGrid& grid) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] >= 0.1 * kPi && grid[i] <= 0.75 * kPi) out.push_back(i);
    return out;
}

std::string fmt(double v) { return format_double(v); }

NetworkModel scaled_case_study(CaseStudyVariant variant, double gain) {
    auto cfg = parse_experiment_config(case_study_config_text(variant));
    auto model = cfg.network();
    model.set_module(2, 4, model.module(2, 4).scaled(gain));
    return model;
}

struct AnalyticPoint {
    SpectralBlock full_block;
    SpectralBlock imm_block;
    std::vector<double> phi_v;
    std::vector<double> phi_breve;
    int n_full = 0;
    int n_imm = 0;
    CovarianceCurve cov_full;
    CovarianceCurve cov_imm;
    std::vector<double> condition;
};

AnalyticPoint analytic_point(CaseStudyVariant variant, double gain, const FrequencyGrid& grid,
                             long data_length) {
    auto model = scaled_case_study(variant, gain);
    AnalyticPoint pt;
    pt.full_block = build_spectral_block(model, 2, 1, {3, 4}, grid);
    auto im = immerse(model, {2, 1, {1, 3}}, grid);
    pt.imm_block = build_spectral_block_immersed(model, im);
    pt.phi_v = model.noise(2).spectrum(grid.points());
    pt.phi_breve = im.immersed_noise_spectrum;
    pt.n_full = 0;
    for (int k : {1, 3, 4}) {
        const auto& tf = model.module(2, k);
        pt.n_full += tf.num().degree() + 1 + tf.den().degree();
    }
    pt.n_imm = 0;
    for (const auto& [node, tf] : im.lumped_exact)
        pt.n_imm += tf.num().degree() + 1 + tf.den().degree();
    pt.cov_full = asymptotic_cov_full(pt.full_block, pt.n_full, data_length, pt.phi_v);
    pt.cov_imm = asymptotic_cov_immersed(pt.imm_block, pt.n_imm, data_length, pt.phi_breve);
    pt.condition = theorem1_condition(pt.full_block, pt.n_full, pt.imm_block, pt.n_imm, pt.phi_v,
                                      pt.phi_breve);
    return pt;
}

// Random Hermitian-PSD spectral block over a fixed source mix.
SpectralBlock random_psd_block(std::mt19937& rng, std::size_t channels, std::size_t grid_size) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> pw(0.2, 2.0);
    const std::size_t sources = channels + 2;
    SpectralBlock block;
    block.grid = FrequencyGrid::uniform(grid_size);
    block.ordering.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) block.ordering[c] = "ch" + std::to_string(c);
    block.phi_w1.resize(grid_size);
    block.gamma.resize(grid_size);
    block.upsilon.resize(grid_size);
    std::vector<double> powers(sources);
    for (auto& p : powers) p = pw(rng);
    for (std::size_t i = 0; i < grid_size; ++i) {
        Eigen::MatrixXcd T(static_cast<long>(channels), static_cast<long>(sources));
        for (long a = 0; a < T.rows(); ++a)
            for (long b = 0; b < T.cols(); ++b) T(a, b) = cplx(n01(rng), n01(rng));
        Eigen::VectorXd p = Eigen::Map<Eigen::VectorXd>(powers.data(), static_cast<long>(sources));
        Eigen::MatrixXcd cov = T * p.asDiagonal() * T.adjoint();
        block.phi_w1[i] = cov(0, 0).real();
        block.gamma[i] = cov.row(0).segment(1, static_cast<long>(channels) - 1);
        block.upsilon[i] =
            cov.block(1, 1, static_cast<long>(channels) - 1, static_cast<long>(channels) - 1);
    }
    return block;
}

// ---------------------------------------------------------------------------

Check criterion1_block_inverse() {
    Check c;
    std::mt19937 rng(101);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        auto block = random_psd_block(rng, 4, 512);
        std::vector<double> phi_v(block.grid.size(), 0.4);
        auto curve = asymptotic_cov_full(block, 5, 1000, phi_v);
        for (std::size_t i = 0; i < block.grid.size(); ++i) {
            const cplx direct = (5.0 / 1000.0) * 0.4 * block.full_matrix(i).inverse()(0, 0);
            worst = std::max(worst, std::abs(curve.values[i] - direct.real()));
        }
    }
    c.require(worst < 1e-10, "max abs deviation " + fmt(worst));
    c.note("max abs deviation " + fmt(worst) + " over 100 blocks x 512 frequencies");
    return c;
}

Check criterion2_theorem1_equivalence() {
    Check c;
    auto grid = FrequencyGrid::uniform(512);
    int considered = 0, matched = 0, excluded = 0;
    for (auto variant : {CaseStudyVariant::one_param_g43, CaseStudyVariant::two_param_g43}) {
        for (double gain : {0.005, 0.05, 0.5, 1.0}) {
            auto pt = analytic_point(variant, gain, grid, 10000);
            auto s_full = schur_complement(pt.full_block);
            auto s_imm = schur_complement(pt.imm_block);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                // Well-conditioned: both Schur complements clearly positive and
                // the condition value above numeric noise.
                const double scale = std::max(1.0, pt.phi_breve[i] / pt.phi_v[i]);
                if (s_full[i] <= 1e-8 || s_imm[i] <= 1e-8 ||
                    std::abs(pt.condition[i]) <= 1e-9 * scale) {
                    ++excluded;
                    continue;
                }
                ++considered;
                const double diff = pt.cov_imm.values[i] - pt.cov_full.values[i];
                if (pt.condition[i] * diff > 0.0) ++matched;
            }
        }
    }
    c.require(considered > 0 && matched == considered,
              "sign mismatch at " + std::to_string(considered - matched) + " of " +
                  std::to_string(considered) + " points");
    c.note(std::to_string(matched) + "/" + std::to_string(considered) +
           " well-conditioned points matched, " + std::to_string(excluded) + " excluded");
    return c;
}

Check criterion3_one_param_ordering(const ResultBundle& one_param) {
    Check c;
    const auto& grid = one_param.grid;
    auto mid = midband(grid);

    const SweepPointResult* low = nullptr;
    const SweepPointResult* high = nullptr;
    for (const auto& p : one_param.points) {
        if (p.gain == 0.005) low = &p;
        if (p.gain == 1.0) high = &p;
    }
    c.require(low && high, "sweep points 0.005 and 1 missing");
    if (!low || !high) return c;

    std::size_t below_and_negative = 0, above = 0;
    for (std::size_t i : mid) {
        if (low->sample_immersed.values[i] < low->sample_full.values[i] &&
            low->condition[i] < 0.0)
            ++below_and_negative;
        if (high->sample_immersed.values[i] > high->sample_full.values[i]) ++above;
    }
    const double frac_low = static_cast<double>(below_and_negative) / static_cast<double>(mid.size());
    const double frac_high = static_cast<double>(above) / static_cast<double>(mid.size());
    c.require(frac_low >= 0.6, "gain 0.005: immersed below with negative condition on only " +
                                   fmt(100.0 * frac_low) + "% of mid-band");
    c.require(frac_high >= 0.6,
              "gain 1: immersed above on only " + fmt(100.0 * frac_high) + "% of mid-band");
    c.note("gain 0.005: immersed below (condition<0) on " + fmt(100.0 * frac_low) +
           "% of mid-band; gain 1: above on " + fmt(100.0 * frac_high) + "%");
    return c;
}

Check criterion4_two_param_ordering(const ResultBundle& two_param) {
    Check c;
    auto mid = midband(two_param.grid);
    for (const auto& p : two_param.points) {
        std::size_t above = 0;
        for (std::size_t i : mid)
            if (p.sample_immersed.values[i] > p.sample_full.values[i]) ++above;
        const double frac = static_cast<double>(above) / static_cast<double>(mid.size());
        c.require(frac >= 0.6, "gain " + fmt(p.gain) + ": immersed above on only " +
                                   fmt(100.0 * frac) + "% of mid-band");
        c.note("gain " + fmt(p.gain) + ": " + fmt(100.0 * frac) + "% above");
    }
    return c;
}

Check criterion5_gain_monotonicity(const ResultBundle& one_param, const ResultBundle& two_param) {
    Check c;
    // The immersed sample covariance carries the gain dependence; the
    // full-MISO asymptotic curve is provably gain-free for this topology
    // (its values are reported for reference, not asserted).
    for (const auto* bundle : {&one_param, &two_param}) {
        const std::size_t mid = bundle->grid.size() / 2;
        std::vector<std::pair<double, double>> by_gain;  // (gain, immersed cov)
        std::string fulls = "full-MISO at median freq:";
        for (const auto& p : bundle->points) {
            by_gain.emplace_back(p.gain, p.sample_immersed.values[mid]);
            fulls += " " + fmt(p.sample_full.values[mid]);
        }
        std::sort(by_gain.begin(), by_gain.end());  // ascending gain
        for (std::size_t i = 1; i < by_gain.size(); ++i) {
            c.require(by_gain[i - 1].second <= by_gain[i].second,
                      "immersed covariance rose from gain " + fmt(by_gain[i].first) + " (" +
                          fmt(by_gain[i].second) + ") down to gain " + fmt(by_gain[i - 1].first) +
                          " (" + fmt(by_gain[i - 1].second) + ")");
        }
        std::string vals;
        for (const auto& [g, v] : by_gain) vals += " g=" + fmt(g) + ":" + fmt(v);
        c.note(std::string(bundle == &one_param ? "one-param" : "two-param") +
               " immersed at median freq:" + vals);
        c.note(fulls);
    }
    return c;
}

Check criterion6_immersion_correctness() {
    Check c;
    // Exact lumped transfer on the case study, every sweep gain and variant.
    for (auto variant : {CaseStudyVariant::one_param_g43, CaseStudyVariant::two_param_g43}) {
        for (double gain : {0.005, 0.05, 0.5, 1.0}) {
            auto model = scaled_case_study(variant, gain);
            auto grid = FrequencyGrid::uniform(64);
            auto im = immerse(model, {2, 1, {1, 3}}, grid);
            c.require(im.exact_available, "exact lumped transfers unavailable");
            auto expected = model.module(2, 3) + model.module(2, 4) * model.module(4, 3);
            c.require(im.lumped_exact.at(3).almost_equal(expected, 1e-9),
                      "lumped G23 mismatch at gain " + fmt(gain));
            c.require(im.lumped_exact.at(1).almost_equal(model.module(2, 1), 1e-9),
                      "target module altered at gain " + fmt(gain));
        }
    }

    // Per-frequency Schur-complement oracle on 20 random 5-node networks.
    std::mt19937 rng(606);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_real_distribution<double> lam(0.05, 0.3);
    std::uniform_real_distribution<double> pole(-0.6, 0.6);
    auto grid = FrequencyGrid::uniform(64);
    int tested = 0;
    double worst = 0.0;
    for (int attempt = 0; attempt < 400 && tested < 20; ++attempt) {
        NetworkModel model(5);
        for (int j = 1; j <= 5; ++j)
            for (int k = 1; k <= 5; ++k) {
                if (j == k || uni(rng) > 0.45) continue;
                const double g = (uni(rng) < 0.5 ? -1.0 : 1.0) * (0.05 + 0.12 * uni(rng));
                if (uni(rng) < 0.5)
                    model.set_module(j, k, RationalTransfer(Polynomial{g}, Polynomial{1.0}, 1));
                else {
                    const double p = pole(rng);
                    model.set_module(j, k,
                                     RationalTransfer(Polynomial{g * (1.0 - std::abs(p))},
                                                      Polynomial{1.0, -p}, 1));
                }
            }
        for (int j = 1; j <= 5; ++j)
            model.set_noise(j, {RationalTransfer::constant(1.0), lam(rng)});
        if (!model.validate().ok() || model.modules().empty()) continue;

        bool used = false;
        for (const auto& [key, tf] : model.modules()) {
            (void)tf;
            auto sets = enumerate_valid_predictor_sets(model, key.first, key.second, 8);
            for (const auto& ps : sets) {
                const std::size_t nz = 4 - ps.predictors.size();
                if (nz < 1) continue;
                auto im = immerse(model, ps, grid);
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    // Oracle: Schur elimination of the Z block of I - G.
                    const int L = 5;
                    Eigen::MatrixXcd M =
                        Eigen::MatrixXcd::Identity(L, L) - model.transfer_matrix(grid[i]);
                    std::vector<int> retained{ps.target_output};
                    for (int p : ps.predictors) retained.push_back(p);
                    std::vector<int> eliminated;
                    for (int v = 1; v <= L; ++v)
                        if (v != ps.target_output && !ps.predictors.count(v))
                            eliminated.push_back(v);
                    const long nr = static_cast<long>(retained.size());
                    const long nzl = static_cast<long>(eliminated.size());
                    Eigen::MatrixXcd Mrr(nr, nr), Mrz(nr, nzl), Mzr(nzl, nr), Mzz(nzl, nzl);
                    for (long a = 0; a < nr; ++a)
                        for (long b = 0; b < nr; ++b)
                            Mrr(a, b) = M(retained[static_cast<size_t>(a)] - 1,
                                          retained[static_cast<size_t>(b)] - 1);
                    for (long a = 0; a < nr; ++a)
                        for (long b = 0; b < nzl; ++b)
                            Mrz(a, b) = M(retained[static_cast<size_t>(a)] - 1,
                                          eliminated[static_cast<size_t>(b)] - 1);
                    for (long a = 0; a < nzl; ++a)
                        for (long b = 0; b < nr; ++b)
                            Mzr(a, b) = M(eliminated[static_cast<size_t>(a)] - 1,
                                          retained[static_cast<size_t>(b)] - 1);
                    for (long a = 0; a < nzl; ++a)
                        for (long b = 0; b < nzl; ++b)
                            Mzz(a, b) = M(eliminated[static_cast<size_t>(a)] - 1,
                                          eliminated[static_cast<size_t>(b)] - 1);
                    Eigen::MatrixXcd red = Mrr - Mrz * Mzz.partialPivLu().solve(Mzr);
                    for (long b = 1; b < nr; ++b) {
                        const cplx oracle = -red(0, b) / red(0, 0);
                        const double dev = std::abs(
                            im.lumped_values.at(retained[static_cast<size_t>(b)])[i] - oracle);
                        worst = std::max(worst, dev);
                    }
                }
                ++tested;
                used = true;
                break;
            }
            if (used) break;
        }
    }
    c.require(tested == 20, "only " + std::to_string(tested) + " random networks exercised");
    c.require(worst < 1e-9, "worst oracle deviation " + fmt(worst));
    c.note("20 random 5-node networks, worst deviation " + fmt(worst));
    return c;
}

Check criterion7_immersed_noise_spectrum() {
    Check c;
    auto model = scaled_case_study(CaseStudyVariant::one_param_g43, 1.0);
    auto grid = FrequencyGrid::uniform(128);
    auto im = immerse(model, {2, 1, {1, 3}}, grid);
    const auto& g21 = im.lumped_exact.at(1);
    const auto& g23 = im.lumped_exact.at(3);

    // Analytic target: Phi_v2 + |G24|^2 Phi_v4.
    auto phi_v2 = model.noise(2).spectrum(grid.points());
    auto phi_v4 = model.noise(4).spectrum(grid.points());
    std::vector<double> target(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        target[i] = phi_v2[i] + std::norm(model.module(2, 4).at(grid[i])) * phi_v4[i];
    for (std::size_t i = 0; i < grid.size(); ++i)
        c.require(std::abs(im.immersed_noise_spectrum[i] - target[i]) < 1e-12,
                  "analytic immersed spectrum mismatch");

    const int runs = 100;
    std::vector<double> avg(grid.size(), 0.0);
    for (int r = 0; r < runs; ++r) {
        auto rec = simulate(model, 10000, 1.0, 81000 + static_cast<std::uint64_t>(r));
        auto p1 = filter(g21, rec.w[0]);
        auto p3 = filter(g23, rec.w[2]);
        std::vector<double> resid(rec.w[1]);
        for (std::size_t t = 0; t < resid.size(); ++t) resid[t] -= p1[t] + p3[t];
        auto est = welch_cross_spectrum(resid, resid, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) avg[i] += est[i].real();
    }
    for (auto& v : avg) v /= runs;

    double worst_rel = 0.0;
    for (std::size_t i : midband(grid))
        worst_rel = std::max(worst_rel, std::abs(avg[i] - target[i]) / target[i]);
    c.require(worst_rel <= 0.10, "worst mid-band relative error " + fmt(worst_rel));
    c.note("100-run averaged periodogram, worst mid-band relative error " + fmt(worst_rel));
    return c;
}

Check criterion8_estimator_calibration(const ResultBundle& one_param,
                                       const ResultBundle& two_param) {
    Check c;

    // Monte-Carlo spread of theta-hat against the covariance diagonal,
    // checked at the sweep extremes of both variants.
    auto check_point = [&](const SweepPointResult& p, const SetupDiagnostics& diag,
                           const std::string& label) {
        const std::size_t runs = diag.run_thetas.size();
        if (runs < 10) {
            c.require(false, label + ": too few runs");
            return;
        }
        const long n = diag.run_thetas[0].size();
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
        for (const auto& th : diag.run_thetas) mean += th;
        mean /= static_cast<double>(runs);
        Eigen::VectorXd var = Eigen::VectorXd::Zero(n);
        for (const auto& th : diag.run_thetas) var += (th - mean).cwiseAbs2();
        var /= static_cast<double>(runs);
        Eigen::VectorXd pdiag = Eigen::VectorXd::Zero(n);
        for (const auto& d : diag.run_cov_diagonals) pdiag += d;
        pdiag /= static_cast<double>(runs);
        for (long i = 0; i < n; ++i) {
            const double ratio = pdiag(i) / var(i);
            c.require(ratio > 0.5 && ratio < 2.0,
                      label + " gain " + fmt(p.gain) + " theta[" + std::to_string(i) +
                          "]: P/MC ratio " + fmt(ratio));
        }
    };
    for (const auto* bundle : {&one_param, &two_param}) {
        for (const auto& p : bundle->points) {
            if (p.gain != 0.005 && p.gain != 1.0) continue;
            const std::string tag = bundle == &one_param ? "one-param" : "two-param";
            check_point(p, p.diag_full, tag + " full");
            check_point(p, p.diag_immersed, tag + " immersed");
        }
    }

    // Static-gain closed form sigma_e^2 / (N sigma_u^2) at N = 1e4.
    const int n = 10000;
    std::mt19937 rng(808);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sigma_u = 0.8, sigma_e = 0.25;
    IdentifyData data;
    data.inputs.push_back({});
    for (int t = 0; t < n; ++t) {
        const double u = sigma_u * noise(rng);
        data.inputs[0].push_back(u);
        data.y.push_back(0.9 * u + sigma_e * noise(rng));
    }
    BJStructure s;
    s.inputs = {{1, 0, 0}};
    auto fit = fit_pem(s, data, FitOptions{});
    const double expected = sigma_e * sigma_e / (static_cast<double>(n) * sigma_u * sigma_u);
    const double rel = std::abs(fit.covariance(0, 0) - expected) / expected;
    c.require(rel <= 0.05, "static-gain closed form off by " + fmt(100.0 * rel) + "%");
    c.note("static-gain closed form within " + fmt(100.0 * rel) + "%");
    return c;
}

Check criterion9_consistency_trend() {
    Check c;
    auto model = scaled_case_study(CaseStudyVariant::one_param_g43, 0.5);
    auto im = immerse(model, {2, 1, {1, 3}}, FrequencyGrid::uniform(64));
    const auto& g21 = model.module(2, 1);
    auto grid = FrequencyGrid::uniform(64);

    BJStructure full_s;
    full_s.inputs = {{1, 1, 1}, {3, 0, 1}, {1, 0, 1}};
    BJStructure imm_s;
    imm_s.inputs = {{1, 1, 1},
                    {im.lumped_exact.at(3).num().degree() + 1,
                     im.lumped_exact.at(3).den().degree(), im.lumped_exact.at(3).delay()}};

    const int runs = 20;
    struct Setup {
        std::string name;
        BJStructure s;
        bool immersed;
    };
    for (const auto& setup : {Setup{"full", full_s, false}, Setup{"immersed", imm_s, true}}) {
        std::vector<double> med_errors;
        for (int big : {1000, 10000, 100000}) {
            std::vector<double> errors;
            for (int r = 0; r < runs; ++r) {
                auto rec = simulate(model, big, 1.0, 90000 + static_cast<std::uint64_t>(r));
                IdentifyData data;
                data.y = rec.w[1];
                data.inputs.push_back(rec.w[0]);
                data.inputs.push_back(rec.w[2]);
                if (!setup.immersed) data.inputs.push_back(rec.w[3]);
                FitOptions fo;
                fo.seed = static_cast<std::uint64_t>(r);
                fo.restarts = 3;
                fo.response_grid = grid;
                auto fit = fit_pem(setup.s, data, fo);
                double acc = 0.0;
                for (std::size_t i = 0; i < grid.size(); ++i)
                    acc += std::abs(fit.module_response[0][i] - g21.at(grid[i]));
                errors.push_back(acc / static_cast<double>(grid.size()));
            }
            std::sort(errors.begin(), errors.end());
            med_errors.push_back(0.5 * (errors[9] + errors[10]));
        }
        c.require(med_errors[0] > med_errors[1] && med_errors[1] > med_errors[2],
                  setup.name + " median error not shrinking: " + fmt(med_errors[0]) + " -> " +
                      fmt(med_errors[1]) + " -> " + fmt(med_errors[2]));
        c.note(setup.name + " median |G21 error| over N in {1e3,1e4,1e5}: " + fmt(med_errors[0]) +
               ", " + fmt(med_errors[1]) + ", " + fmt(med_errors[2]));
    }
    return c;
}

Check criterion10_property_suites(const ResultBundle& one_param) {
    Check c;

    // Gradient vs central finite differences for every acceptance structure.
    {
        auto model = scaled_case_study(CaseStudyVariant::two_param_g43, 0.5);
        auto rec = simulate(model, 1500, 1.0, 777);
        IdentifyData full_data{rec.w[1], {rec.w[0], rec.w[2], rec.w[3]}};
        IdentifyData imm_data{rec.w[1], {rec.w[0], rec.w[2]}};
        IdentifyData siso_data{rec.w[1], {rec.w[0]}};

        struct Case {
            BJStructure s;
            const IdentifyData* data;
        };
        BJStructure full_s;
        full_s.inputs = {{1, 1, 1}, {3, 0, 1}, {1, 0, 1}};
        BJStructure imm1_s;
        imm1_s.inputs = {{1, 1, 1}, {3, 0, 1}};
        BJStructure imm2_s;
        imm2_s.inputs = {{1, 1, 1}, {4, 1, 1}};
        BJStructure noise_s;
        noise_s.inputs = {{1, 1, 1}};
        noise_s.nc = 1;
        noise_s.nd = 1;
        std::vector<Case> cases{{full_s, &full_data},
                                {imm1_s, &imm_data},
                                {imm2_s, &imm_data},
                                {noise_s, &siso_data}};
        std::mt19937 rng(1001);
        std::uniform_real_distribution<double> u(-0.3, 0.3);
        for (const auto& cs : cases) {
            Eigen::VectorXd theta(cs.s.param_count());
            for (long i = 0; i < theta.size(); ++i) theta(i) = u(rng);
            auto psi = gradient(cs.s, theta, *cs.data);
            const double h = 1e-6;
            for (int p = 0; p < cs.s.param_count(); ++p) {
                Eigen::VectorXd up = theta, dn = theta;
                up(p) += h;
                dn(p) -= h;
                auto rp = predict(cs.s, up, *cs.data).residual;
                auto rm = predict(cs.s, dn, *cs.data).residual;
                double worst = 0.0, scale = 0.0;
                for (std::size_t t = 50; t < rp.size(); ++t) {
                    const double fd = (rp[t] - rm[t]) / (2.0 * h);
                    worst = std::max(worst, std::abs(fd - psi(static_cast<long>(t), p)));
                    scale = std::max(scale, std::abs(fd));
                }
                c.require(worst <= 1e-4 * std::max(scale, 1e-6),
                          "gradient mismatch in parameter " + std::to_string(p));
            }
        }
    }

    // Spectral PSD: assembled blocks stay Hermitian PSD across the grid.
    {
        auto grid = FrequencyGrid::uniform(512);
        for (double gain : {0.005, 1.0}) {
            auto pt = analytic_point(CaseStudyVariant::one_param_g43, gain, grid, 10000);
            double min_eig = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pt.full_block.full_matrix(i));
                min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
            }
            c.require(min_eig >= -1e-9, "spectral block min eigenvalue " + fmt(min_eig));
        }
    }

    // Schur-complement monotonicity under predictor removal: projecting onto
    // fewer channels can only grow the residual.
    {
        std::mt19937 rng(2002);
        for (int rep = 0; rep < 5; ++rep) {
            auto block = random_psd_block(rng, 5, 64);
            SpectralBlock reduced = block;
            reduced.ordering.pop_back();
            for (std::size_t i = 0; i < block.grid.size(); ++i) {
                reduced.gamma[i] = block.gamma[i].head(3).eval();
                reduced.upsilon[i] = block.upsilon[i].topLeftCorner(3, 3).eval();
            }
            auto s_full = schur_complement(block);
            auto s_red = schur_complement(reduced);
            for (std::size_t i = 0; i < block.grid.size(); ++i)
                c.require(s_red[i] >= s_full[i] - 1e-10,
                          "Schur complement shrank after removing a predictor");
        }
    }

    // Covariance curves scale as 1/N and linearly in n.
    {
        auto grid = FrequencyGrid::uniform(64);
        auto pt = analytic_point(CaseStudyVariant::one_param_g43, 0.5, grid, 10000);
        auto double_n = asymptotic_cov_full(pt.full_block, 2 * pt.n_full, 10000, pt.phi_v);
        auto double_len = asymptotic_cov_full(pt.full_block, pt.n_full, 20000, pt.phi_v);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            c.require(std::abs(double_n.values[i] - 2.0 * pt.cov_full.values[i]) <=
                          1e-12 * pt.cov_full.values[i],
                      "n-linearity violated");
            c.require(std::abs(double_len.values[i] - 0.5 * pt.cov_full.values[i]) <=
                          1e-12 * pt.cov_full.values[i],
                      "1/N scaling violated");
        }
    }

    // Determinism and manifest reproducibility on a small campaign.
    {
        auto cfg =
            parse_experiment_config(case_study_config_text(CaseStudyVariant::one_param_g43));
        cfg.runs = 3;
        cfg.sample_count = 2000;
        cfg.grid_size = 64;
        cfg.restarts = 1;
        cfg.sweep->gains = {0.5};
        auto a = run_montecarlo(cfg);
        auto b = run_montecarlo(config_from_manifest(a.manifest()));
        c.require(a.points[0].sample_full.values == b.points[0].sample_full.values,
                  "manifest rerun changed the full sample curve");
        c.require(a.points[0].sample_immersed.values == b.points[0].sample_immersed.values,
                  "manifest rerun changed the immersed sample curve");
        c.require(a.manifest() == b.manifest(), "manifest not reproducible");
        c.require(curve_to_csv(a.points[0].sample_full) == curve_to_csv(b.points[0].sample_full),
                  "CSV bytes differ between reruns");
        // The campaign feeding criteria 3-5 recorded one data hash per run,
        // shared by both setups.
        c.require(one_param.points[0].record_hashes.size() ==
                      static_cast<std::size_t>(one_param.config.runs),
                  "record hashes missing");
    }
    return c;
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    int failures = 0;
    const auto suite_start = clock::now();

    auto run = [&](int id, const std::string& name, const std::function<Check()>& fn) {
        const auto t0 = clock::now();
        Check c;
        try {
            c = fn();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        std::printf("[%s] criterion %d: %s (%.1fs%s%s)\n", c.ok ? "PASS" : "FAIL", id,
                    name.c_str(), secs, c.detail.empty() ? "" : "; ", c.detail.c_str());
        std::fflush(stdout);
        failures += c.ok ? 0 : 1;
    };

    // Shared Monte-Carlo campaigns for criteria 3-5 and 8: the benchmark
    // settings (100 runs, N = 1e4, lambda = 0.1, 4 gains, both variants).
    std::printf("running case-study campaigns (2 variants x 4 gains x 100 runs)...\n");
    std::fflush(stdout);
    ResultBundle one_param, two_param;
    try {
        one_param = reproduce_case_study(CaseStudyVariant::one_param_g43);
        two_param = reproduce_case_study(CaseStudyVariant::two_param_g43);
    } catch (const std::exception& e) {
        std::printf("[FAIL] campaign setup: %s\n", e.what());
        return 99;
    }

    run(1, "block-inverse identity", criterion1_block_inverse);
    run(2, "theorem-1 sign equivalence", criterion2_theorem1_equivalence);
    run(3, "case-study ordering, one-parameter G43",
        [&] { return criterion3_one_param_ordering(one_param); });
    run(4, "case-study ordering, two-parameter G43",
        [&] { return criterion4_two_param_ordering(two_param); });
    run(5, "gain monotonicity of the sample covariance",
        [&] { return criterion5_gain_monotonicity(one_param, two_param); });
    run(6, "immersion correctness", criterion6_immersion_correctness);
    run(7, "immersed noise spectrum", criterion7_immersed_noise_spectrum);
    run(8, "estimator calibration",
        [&] { return criterion8_estimator_calibration(one_param, two_param); });
    run(9, "consistency trend over N", criterion9_consistency_trend);
    run(10, "property suites", [&] { return criterion10_property_suites(one_param); });

    const double total = std::chrono::duration<double>(clock::now() - suite_start).count();
    std::printf("%d/10 criteria passed in %.1fs\n", 10 - failures, total);
    return failures;
}
