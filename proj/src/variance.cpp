#include "netid/variance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace netid {

Eigen::MatrixXcd SpectralBlock::full_matrix(std::size_t i) const {
    const long m = static_cast<long>(channels()) - 1;
    Eigen::MatrixXcd M(m + 1, m + 1);
    M(0, 0) = phi_w1[i];
    M.block(0, 1, 1, m) = gamma[i];
    M.block(1, 0, m, 1) = gamma[i].adjoint();
    M.block(1, 1, m, m) = upsilon[i];
    return M;
}

std::vector<double> schur_complement(const SpectralBlock& block) {
    std::vector<double> out(block.grid.size());
    for (std::size_t i = 0; i < block.grid.size(); ++i) {
        const auto& U = block.upsilon[i];
        Eigen::VectorXcd sol = U.partialPivLu().solve(block.gamma[i].adjoint());
        const double explained = (block.gamma[i] * sol)(0).real();
        const double s = block.phi_w1[i] - explained;
        if (!(s > 0.0))
            throw std::runtime_error("no excitation margin at omega=" +
                                     format_double(block.grid[i]));
        out[i] = s;
    }
    return out;
}

namespace {

// Channel transfers over a common independent-source basis; every block entry
// is sum over sources of t_a conj(t_b) power, which keeps the assembled
// matrix Hermitian PSD by construction.
SpectralBlock block_from_source_gains(const FrequencyGrid& grid,
                                      const std::vector<std::string>& names,
                                      const std::vector<double>& powers,
                                      const std::vector<Eigen::MatrixXcd>& gains) {
    SpectralBlock block;
    block.grid = grid;
    block.ordering = names;
    const long m = static_cast<long>(names.size()) - 1;
    block.phi_w1.resize(grid.size());
    block.gamma.resize(grid.size());
    block.upsilon.resize(grid.size());
    Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(powers.data(),
                                                          static_cast<long>(powers.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Eigen::MatrixXcd& T = gains[i];  // channels x sources
        Eigen::MatrixXcd cov = T * p.asDiagonal() * T.adjoint();
        block.phi_w1[i] = cov(0, 0).real();
        block.gamma[i] = cov.row(0).segment(1, m);
        block.upsilon[i] = cov.block(1, 1, m, m);
        // Hermitian cleanup of rounding dust.
        block.upsilon[i] = 0.5 * (block.upsilon[i] + block.upsilon[i].adjoint().eval());
    }
    return block;
}

}  // namespace

SpectralBlock build_spectral_block(const NetworkModel& model, int target_output,
                                   int first_predictor, const std::vector<int>& other_predictors,
                                   const FrequencyGrid& grid) {
    auto dec = source_decomposition(model, grid);
    const long ns = static_cast<long>(dec.sources.size());

    std::vector<std::string> names{SignalTag::w(first_predictor).str(),
                                   SignalTag::e(target_output).str()};
    for (int k : other_predictors) names.push_back(SignalTag::w(k).str());

    std::vector<Eigen::MatrixXcd> gains(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Eigen::MatrixXcd T(static_cast<long>(names.size()), ns);
        T.row(0) = dec.tag_gain(model, SignalTag::w(first_predictor), i);
        T.row(1) = dec.tag_gain(model, SignalTag::e(target_output), i);
        for (std::size_t k = 0; k < other_predictors.size(); ++k)
            T.row(static_cast<long>(k) + 2) =
                dec.tag_gain(model, SignalTag::w(other_predictors[k]), i);
        gains[i] = std::move(T);
    }
    return block_from_source_gains(grid, names, dec.powers, gains);
}

SpectralBlock build_spectral_block_immersed(const NetworkModel& model, const ImmersedNetwork& im) {
    const auto& grid = im.grid;
    const int j = im.predictor_set.target_output;
    const int k = im.predictor_set.target_input;
    auto dec = source_decomposition(model, grid);
    const long ns = static_cast<long>(dec.sources.size());

    // Immersion innovation: breve-e = breve-v / breve-H with breve-H the
    // monic minimum-phase factor of Phi_breve_v.
    SpectralFactor factor = grid_spectral_factor(im.immersed_noise_spectrum, grid);

    std::vector<int> others;
    for (int p : im.predictor_set.predictors)
        if (p != k) others.push_back(p);

    std::vector<std::string> names{SignalTag::w(k).str(), "breve_e" + std::to_string(j)};
    for (int p : others) names.push_back(SignalTag::w(p).str());

    // Per-source transfer into breve-v over the decomposition's source list.
    std::vector<long> contrib_col(im.noise_contributions.size(), -1);
    for (std::size_t c = 0; c < im.noise_contributions.size(); ++c)
        for (long srci = 0; srci < ns; ++srci)
            if (dec.sources[static_cast<std::size_t>(srci)] == im.noise_contributions[c].source)
                contrib_col[c] = srci;

    std::vector<Eigen::MatrixXcd> gains(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(static_cast<long>(names.size()), ns);
        T.row(0) = dec.tag_gain(model, SignalTag::w(k), i);
        Eigen::RowVectorXcd breve = Eigen::RowVectorXcd::Zero(ns);
        for (std::size_t c = 0; c < im.noise_contributions.size(); ++c) {
            if (contrib_col[c] < 0)
                throw std::runtime_error(
                    "immersed block: noise contribution source missing from decomposition");
            breve(contrib_col[c]) = im.noise_contributions[c].transfer[i];
        }
        // Normalize by the monic factor only: the innovation channel keeps
        // variance lambda_breve, matching the (1,1) entry convention.
        T.row(1) = breve / factor.factor[i];
        for (std::size_t p = 0; p < others.size(); ++p)
            T.row(static_cast<long>(p) + 2) = dec.tag_gain(model, SignalTag::w(others[p]), i);
        gains[i] = std::move(T);
    }
    return block_from_source_gains(grid, names, dec.powers, gains);
}

std::vector<std::complex<double>> welch_cross_spectrum(const std::vector<double>& x,
                                                       const std::vector<double>& y,
                                                       const FrequencyGrid& grid,
                                                       const WelchOptions& options) {
    if (x.size() != y.size()) throw std::invalid_argument("welch: signals must share one length");
    const std::size_t n = x.size();
    std::size_t seg = options.segment_length ? options.segment_length : n / 8;
    if (seg < 8) seg = std::min<std::size_t>(n, 8);
    if (n < 2 * seg) throw std::invalid_argument("welch: signal too short for two segments");
    const std::size_t hop =
        std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(seg) *
                                                          (1.0 - options.overlap)));

    std::vector<double> window(seg, 1.0);
    if (options.hann_window)
        for (std::size_t m = 0; m < seg; ++m)
            window[m] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(m) /
                                             static_cast<double>(seg));
    double wpow = 0.0;
    for (double w : window) wpow += w * w;

    // Phase table, reused across segments.
    std::vector<std::complex<double>> phasor(grid.size() * seg);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t m = 0; m < seg; ++m)
            phasor[i * seg + m] = std::polar(1.0, -grid[i] * static_cast<double>(m));

    std::vector<std::complex<double>> acc(grid.size(), {0.0, 0.0});
    std::size_t count = 0;
    std::vector<std::complex<double>> X(grid.size()), Y(grid.size());
    for (std::size_t start = 0; start + seg <= n; start += hop) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::complex<double> sx(0.0, 0.0), sy(0.0, 0.0);
            const std::complex<double>* ph = &phasor[i * seg];
            for (std::size_t m = 0; m < seg; ++m) {
                sx += window[m] * x[start + m] * ph[m];
                sy += window[m] * y[start + m] * ph[m];
            }
            X[i] = sx;
            Y[i] = sy;
        }
        for (std::size_t i = 0; i < grid.size(); ++i) acc[i] += X[i] * std::conj(Y[i]);
        ++count;
    }
    const double scale = 1.0 / (static_cast<double>(count) * wpow);
    for (auto& v : acc) v *= scale;
    return acc;
}

SpectralBlock build_spectral_block_data(const std::vector<std::vector<double>>& channels,
                                        const std::vector<std::string>& names,
                                        const FrequencyGrid& grid, const WelchOptions& options) {
    if (channels.size() != names.size() || channels.size() < 2)
        throw std::invalid_argument("data block: need named channels, w_first then noise");
    SpectralBlock block;
    block.grid = grid;
    block.ordering = names;
    const std::size_t m = channels.size() - 1;
    block.phi_w1.assign(grid.size(), 0.0);
    block.gamma.assign(grid.size(), Eigen::RowVectorXcd::Zero(static_cast<long>(m)));
    block.upsilon.assign(grid.size(),
                         Eigen::MatrixXcd::Zero(static_cast<long>(m), static_cast<long>(m)));

    for (std::size_t a = 0; a < channels.size(); ++a) {
        for (std::size_t b = a; b < channels.size(); ++b) {
            auto phi = welch_cross_spectrum(channels[a], channels[b], grid, options);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (a == 0 && b == 0)
                    block.phi_w1[i] = phi[i].real();
                else if (a == 0)
                    block.gamma[i](static_cast<long>(b) - 1) = phi[i];
                else {
                    block.upsilon[i](static_cast<long>(a) - 1, static_cast<long>(b) - 1) = phi[i];
                    if (a != b)
                        block.upsilon[i](static_cast<long>(b) - 1, static_cast<long>(a) - 1) =
                            std::conj(phi[i]);
                    else
                        block.upsilon[i](static_cast<long>(a) - 1, static_cast<long>(a) - 1) =
                            phi[i].real();
                }
            }
        }
    }
    return block;
}

SpectralBlock average_blocks(const std::vector<SpectralBlock>& blocks) {
    if (blocks.empty()) throw std::invalid_argument("average_blocks: empty");
    SpectralBlock out = blocks[0];
    for (std::size_t r = 1; r < blocks.size(); ++r) {
        if (!(blocks[r].grid == out.grid) || blocks[r].ordering != out.ordering)
            throw std::invalid_argument("average_blocks: mismatched blocks");
        for (std::size_t i = 0; i < out.grid.size(); ++i) {
            out.phi_w1[i] += blocks[r].phi_w1[i];
            out.gamma[i] += blocks[r].gamma[i];
            out.upsilon[i] += blocks[r].upsilon[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(blocks.size());
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
        out.phi_w1[i] *= inv;
        out.gamma[i] *= inv;
        out.upsilon[i] *= inv;
    }
    return out;
}

namespace {

CovarianceCurve asymptotic_curve(const SpectralBlock& block, int n_params, long data_length,
                                 const std::vector<double>& noise_spectrum, std::string label) {
    if (noise_spectrum.size() != block.grid.size())
        throw std::invalid_argument("asymptotic covariance: noise spectrum size mismatch");
    auto S = schur_complement(block);
    CovarianceCurve curve;
    curve.grid = block.grid;
    curve.label = std::move(label);
    curve.n_params = n_params;
    curve.data_length = data_length;
    curve.values.resize(block.grid.size());
    const double ratio = static_cast<double>(n_params) / static_cast<double>(data_length);
    for (std::size_t i = 0; i < S.size(); ++i)
        curve.values[i] = ratio * noise_spectrum[i] / S[i];
    return curve;
}

}  // namespace

CovarianceCurve asymptotic_cov_full(const SpectralBlock& block, int n_params, long data_length,
                                    const std::vector<double>& phi_v) {
    return asymptotic_curve(block, n_params, data_length, phi_v, "full-MISO");
}

CovarianceCurve asymptotic_cov_immersed(const SpectralBlock& block, int n_params, long data_length,
                                        const std::vector<double>& phi_breve_v) {
    return asymptotic_curve(block, n_params, data_length, phi_breve_v, "immersed");
}

std::vector<double> theorem1_condition(const SpectralBlock& full, int n_full,
                                       const SpectralBlock& immersed, int n_immersed,
                                       const std::vector<double>& phi_v,
                                       const std::vector<double>& phi_breve_v) {
    if (!(full.grid == immersed.grid))
        throw std::invalid_argument("theorem1_condition: grids must match");
    auto S_full = schur_complement(full);
    auto S_imm = schur_complement(immersed);
    std::vector<double> out(full.grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double lhs = phi_breve_v[i] / phi_v[i];
        const double rhs = (static_cast<double>(n_full) * S_imm[i]) /
                           (static_cast<double>(n_immersed) * S_full[i]);
        out[i] = lhs - rhs;
    }
    return out;
}

CovarianceCurve sample_covariance(const std::vector<std::vector<std::complex<double>>>& responses,
                                  const FrequencyGrid& grid) {
    if (responses.size() < 2)
        throw std::invalid_argument("sample_covariance: need at least two runs");
    const std::size_t runs = responses.size();
    for (const auto& r : responses)
        if (r.size() != grid.size())
            throw std::invalid_argument("sample_covariance: response/grid size mismatch");

    CovarianceCurve curve;
    curve.grid = grid;
    curve.label = "sample";
    curve.data_length = static_cast<long>(runs);
    curve.values.assign(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::complex<double> mean(0.0, 0.0);
        for (const auto& r : responses) mean += r[i];
        mean /= static_cast<double>(runs);
        double acc = 0.0;
        for (const auto& r : responses) acc += std::norm(r[i] - mean);
        curve.values[i] = acc / static_cast<double>(runs);
    }
    return curve;
}

namespace {

Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& P, const char* who) {
    if (P.rows() != P.cols() || P.rows() == 0)
        throw std::invalid_argument(std::string(who) + ": empty or non-square block");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(P);
    if (!lu.isInvertible()) throw std::runtime_error(std::string(who) + ": singular block");
    return lu.inverse();
}

}  // namespace

DOptimalityResult d_optimality_compare(const Eigen::MatrixXd& P_a, const Eigen::MatrixXd& P_b) {
    if (P_a.rows() != P_b.rows() || P_a.cols() != P_b.cols())
        throw std::invalid_argument("d_optimality_compare: dimension mismatch");
    Eigen::MatrixXd Ia = checked_inverse(P_a, "d_optimality_compare");
    Eigen::MatrixXd Ib = checked_inverse(P_b, "d_optimality_compare");
    DOptimalityResult res{};
    auto logdet = [](const Eigen::MatrixXd& M) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(0.5 * (M + M.transpose()));
        return ldlt.vectorD().array().abs().log().sum();
    };
    res.log_det_inv_a = logdet(Ia);
    res.log_det_inv_b = logdet(Ib);
    const double scale = std::max({1.0, std::abs(res.log_det_inv_a), std::abs(res.log_det_inv_b)});
    if (std::abs(res.log_det_inv_a - res.log_det_inv_b) <= 1e-12 * scale)
        res.order = DOptimalityOrder::equal;
    else
        res.order = res.log_det_inv_a > res.log_det_inv_b ? DOptimalityOrder::a_better
                                                          : DOptimalityOrder::b_better;
    return res;
}

EOptimalityOrder e_optimality_compare(const Eigen::MatrixXd& P_a, const Eigen::MatrixXd& P_b) {
    if (P_a.rows() != P_b.rows() || P_a.cols() != P_b.cols())
        throw std::invalid_argument("e_optimality_compare: dimension mismatch");
    Eigen::MatrixXd diff = checked_inverse(P_a, "e_optimality_compare") -
                           checked_inverse(P_b, "e_optimality_compare");
    diff = 0.5 * (diff + diff.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    const double tol = 1e-10;
    if (std::abs(lo) <= tol && std::abs(hi) <= tol) return EOptimalityOrder::equal;
    if (lo >= -tol) return EOptimalityOrder::a_dominates;
    if (hi <= tol) return EOptimalityOrder::b_dominates;
    return EOptimalityOrder::incomparable;
}

std::string condition_to_csv(const FrequencyGrid& grid, const std::vector<double>& condition) {
    std::string out = "omega,condition_value,sign\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const int sign = condition[i] > 0.0 ? 1 : (condition[i] < 0.0 ? -1 : 0);
        out += format_double(grid[i]) + "," + format_double(condition[i]) + "," +
               std::to_string(sign) + "\n";
    }
    return out;
}

std::string curve_to_csv(const CovarianceCurve& curve) {
    std::string out = "omega,value,label,n_params,N\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i)
        out += format_double(curve.grid[i]) + "," + format_double(curve.values[i]) + "," +
               curve.label + "," + std::to_string(curve.n_params) + "," +
               std::to_string(curve.data_length) + "\n";
    return out;
}

}  // namespace netid
