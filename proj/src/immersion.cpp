#include "netid/immersion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace netid {

void PredictorSet::check_invariants() const {
    if (predictors.count(target_input) == 0)
        throw std::invalid_argument("predictor set must contain the target input node");
    if (predictors.count(target_output) > 0)
        throw std::invalid_argument("predictor set must not contain the target output node");
}

std::string ConsistencyViolation::str() const {
    std::string out = kind == Kind::parallel_path ? "parallel path " : "loop ";
    for (size_t i = 0; i < witness.size(); ++i) {
        if (i) out += "->";
        out += std::to_string(witness[i]);
    }
    return out;
}

namespace {

// All simple paths from `from` to `to` avoiding `blocked` nodes in between.
// Stops after `limit` witnesses.
void find_paths(const NetworkModel& model, int from, int to, const std::set<int>& blocked,
                std::size_t limit, std::vector<std::vector<int>>& out) {
    std::vector<int> path{from};
    std::set<int> visited{from};
    std::function<void(int)> dfs = [&](int v) {
        if (out.size() >= limit) return;
        for (const auto& [key, tf] : model.modules()) {
            (void)tf;
            if (key.second != v) continue;
            const int next = key.first;
            if (next == to) {
                auto witness = path;
                witness.push_back(to);
                out.push_back(std::move(witness));
                if (out.size() >= limit) return;
                continue;
            }
            if (blocked.count(next) || visited.count(next)) continue;
            visited.insert(next);
            path.push_back(next);
            dfs(next);
            path.pop_back();
            visited.erase(next);
        }
    };
    dfs(from);
}

}  // namespace

ConsistencyVerdict check_consistency_conditions(const NetworkModel& model,
                                                const PredictorSet& ps) {
    ps.check_invariants();
    const int j = ps.target_output;
    const int k = ps.target_input;
    if (!model.has_module(j, k))
        throw std::invalid_argument("no such module G(" + std::to_string(j) + "," +
                                    std::to_string(k) + ")");

    ConsistencyVerdict verdict;

    // Parallel paths k -> j whose intermediate nodes avoid D_j \ {k}.
    std::set<int> blocked(ps.predictors);
    blocked.erase(k);
    blocked.insert(j);  // j may appear only as the endpoint
    std::vector<std::vector<int>> paths;
    find_paths(model, k, j, blocked, 8, paths);
    for (auto& p : paths) {
        if (p.size() == 2) continue;  // the direct edge itself
        verdict.violations.push_back({ConsistencyViolation::Kind::parallel_path, std::move(p)});
    }

    // Loops j -> j whose intermediate nodes avoid all of D_j.
    std::vector<std::vector<int>> loops;
    find_paths(model, j, j, ps.predictors, 8, loops);
    for (auto& p : loops)
        verdict.violations.push_back({ConsistencyViolation::Kind::loop, std::move(p)});

    verdict.satisfied = verdict.violations.empty();
    return verdict;
}

namespace {

// Rational matrix workspace for exact elimination. Delay is folded into the
// numerator so entries form a plain fraction field.
struct Rat {
    Polynomial num;
    Polynomial den = Polynomial::one();

    static Rat from(const RationalTransfer& tf) {
        return {tf.num().shifted(tf.delay()), tf.den()};
    }
    static Rat zero() { return {Polynomial(), Polynomial::one()}; }
    static Rat one() { return {Polynomial::one(), Polynomial::one()}; }
    RationalTransfer to_transfer() const { return RationalTransfer(num, den, 0); }

    Rat operator+(const Rat& o) const { return {num * o.den + o.num * den, den * o.den}; }
    Rat operator-(const Rat& o) const { return {num * o.den - o.num * den, den * o.den}; }
    Rat operator*(const Rat& o) const { return {num * o.num, den * o.den}; }
    Rat operator/(const Rat& o) const {
        if (o.num.is_zero()) throw std::runtime_error("rational elimination: division by zero");
        return {num * o.den, den * o.num};
    }
    // Keep intermediate degrees in check by cancelling through the canonical
    // constructor once in a while.
    Rat reduced() const {
        if (num.is_zero()) return zero();
        RationalTransfer tf(num, den, 0);
        return from(tf);
    }
};

}  // namespace

ImmersedNetwork immerse(const NetworkModel& model, const PredictorSet& ps,
                        const FrequencyGrid& grid, const ImmerseOptions& options) {
    auto verdict = check_consistency_conditions(model, ps);
    if (!verdict.satisfied && !options.allow_inconsistent) {
        std::string msg = "predictor set fails consistency conditions:";
        for (const auto& v : verdict.violations) msg += " [" + v.str() + "]";
        throw std::runtime_error(msg);
    }

    const int j = ps.target_output;
    std::vector<int> retained(ps.predictors.begin(), ps.predictors.end());
    std::vector<int> eliminated;
    for (int v = 1; v <= model.node_count(); ++v)
        if (v != j && !ps.predictors.count(v)) eliminated.push_back(v);

    ImmersedNetwork im;
    im.predictor_set = ps;
    im.grid = grid;
    im.target_noise_spectrum = model.noise(j).spectrum(grid.points());

    const size_t nz = eliminated.size();
    const size_t nd = retained.size();

    // ---- Per-frequency numeric elimination (general path). ----
    const size_t n_pts = grid.size();
    for (int k : retained) im.lumped_values[k].assign(n_pts, {});
    im.self_term_inverse.assign(n_pts, {});
    im.immersed_noise_spectrum.assign(n_pts, 0.0);

    // Sources that land in breve-v: the target's own noise plus everything
    // carried by eliminated nodes.
    im.noise_contributions.push_back(
        {SignalTag::e(j), model.noise(j).variance, std::vector<std::complex<double>>(n_pts)});
    std::vector<size_t> elim_noise_slot(nz, SIZE_MAX), elim_exc_slot(nz, SIZE_MAX);
    for (size_t z = 0; z < nz; ++z) {
        const int node = eliminated[z];
        if (model.noise(node).variance > 0.0) {
            elim_noise_slot[z] = im.noise_contributions.size();
            im.noise_contributions.push_back({SignalTag::e(node), model.noise(node).variance,
                                              std::vector<std::complex<double>>(n_pts)});
        }
        const auto& ex = model.excitation(node);
        if (options.eliminated_excitation_as_noise && ex.kind == Excitation::Kind::white &&
            ex.power > 0.0) {
            elim_exc_slot[z] = im.noise_contributions.size();
            im.noise_contributions.push_back(
                {SignalTag::r(node), ex.power, std::vector<std::complex<double>>(n_pts)});
        }
    }

    auto entry = [&](int to, int from, double omega) -> std::complex<double> {
        return model.has_module(to, from) ? model.module(to, from).at(omega)
                                          : std::complex<double>(0.0, 0.0);
    };

    for (size_t i = 0; i < n_pts; ++i) {
        const double omega = grid[i];
        Eigen::MatrixXcd Mzz = Eigen::MatrixXcd::Identity(static_cast<long>(nz), static_cast<long>(nz));
        for (size_t a = 0; a < nz; ++a)
            for (size_t b = 0; b < nz; ++b)
                Mzz(static_cast<long>(a), static_cast<long>(b)) -= entry(eliminated[a], eliminated[b], omega);
        Eigen::RowVectorXcd Gjz(static_cast<long>(nz));
        Eigen::VectorXcd Gzj(static_cast<long>(nz));
        Eigen::MatrixXcd Gzd(static_cast<long>(nz), static_cast<long>(nd));
        for (size_t a = 0; a < nz; ++a) {
            Gjz(static_cast<long>(a)) = entry(j, eliminated[a], omega);
            Gzj(static_cast<long>(a)) = entry(eliminated[a], j, omega);
            for (size_t b = 0; b < nd; ++b)
                Gzd(static_cast<long>(a), static_cast<long>(b)) = entry(eliminated[a], retained[b], omega);
        }

        Eigen::RowVectorXcd carry(static_cast<long>(nz));  // G_jZ (I - G_ZZ)^-1
        if (nz > 0) {
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Mzz);
            Eigen::MatrixXcd inv = lu.solve(Eigen::MatrixXcd::Identity(static_cast<long>(nz), static_cast<long>(nz)));
            const double resid =
                (Mzz * inv - Eigen::MatrixXcd::Identity(static_cast<long>(nz), static_cast<long>(nz)))
                    .cwiseAbs()
                    .maxCoeff();
            if (!std::isfinite(resid) || resid > 1e-8)
                throw std::runtime_error("eliminated subnetwork ill-posed at omega=" +
                                         format_double(omega));
            carry = Gjz * inv;
        }

        const std::complex<double> s = nz > 0 ? (carry * Gzj)(0) : std::complex<double>(0.0, 0.0);
        const std::complex<double> one_minus_s = std::complex<double>(1.0, 0.0) - s;
        if (std::abs(one_minus_s) < 1e-12)
            throw std::runtime_error("eliminated subnetwork ill-posed at omega=" +
                                     format_double(omega) + " (self term)");
        const std::complex<double> inv_s = std::complex<double>(1.0, 0.0) / one_minus_s;
        im.self_term_inverse[i] = inv_s;

        for (size_t b = 0; b < nd; ++b) {
            std::complex<double> lumped = entry(j, retained[b], omega);
            if (nz > 0) lumped += (carry * Gzd.col(static_cast<long>(b)))(0);
            im.lumped_values[retained[b]][i] = lumped * inv_s;
        }

        // Noise transfers into breve-v.
        double phi = 0.0;
        {
            auto& own = im.noise_contributions[0];
            const std::complex<double> h =
                own.power > 0.0 ? model.noise(j).shaper.at(omega) : std::complex<double>(0.0, 0.0);
            own.transfer[i] = h * inv_s;
            phi += own.power * std::norm(own.transfer[i]);
        }
        for (size_t z = 0; z < nz; ++z) {
            if (elim_noise_slot[z] != SIZE_MAX) {
                auto& c = im.noise_contributions[elim_noise_slot[z]];
                c.transfer[i] = carry(static_cast<long>(z)) *
                                model.noise(eliminated[z]).shaper.at(omega) * inv_s;
                phi += c.power * std::norm(c.transfer[i]);
            }
            if (elim_exc_slot[z] != SIZE_MAX) {
                auto& c = im.noise_contributions[elim_exc_slot[z]];
                c.transfer[i] = carry(static_cast<long>(z)) * inv_s;
                phi += c.power * std::norm(c.transfer[i]);
            }
        }
        im.immersed_noise_spectrum[i] = phi;
    }

    // ---- Exact rational elimination for small Z. ----
    if (nz <= 3) {
        std::vector<std::vector<Rat>> M(nz, std::vector<Rat>(nz, Rat::zero()));
        for (size_t a = 0; a < nz; ++a)
            for (size_t b = 0; b < nz; ++b) {
                Rat g = model.has_module(eliminated[a], eliminated[b])
                            ? Rat::from(model.module(eliminated[a], eliminated[b]))
                            : Rat::zero();
                M[a][b] = (a == b) ? Rat::one() - g : Rat::zero() - g;
            }
        // inv(M) = adj(M) / det(M), sizes 0..3.
        Rat det = Rat::one();
        std::vector<std::vector<Rat>> adj(nz, std::vector<Rat>(nz, Rat::zero()));
        if (nz == 1) {
            det = M[0][0];
            adj[0][0] = Rat::one();
        } else if (nz == 2) {
            det = (M[0][0] * M[1][1] - M[0][1] * M[1][0]).reduced();
            adj = {{M[1][1], Rat::zero() - M[0][1]}, {Rat::zero() - M[1][0], M[0][0]}};
        } else if (nz == 3) {
            auto minor2 = [&](size_t r0, size_t r1, size_t c0, size_t c1) {
                return (M[r0][c0] * M[r1][c1] - M[r0][c1] * M[r1][c0]).reduced();
            };
            det = (M[0][0] * minor2(1, 2, 1, 2) - M[0][1] * minor2(1, 2, 0, 2) +
                   M[0][2] * minor2(1, 2, 0, 1))
                      .reduced();
            for (size_t a = 0; a < 3; ++a)
                for (size_t b = 0; b < 3; ++b) {
                    size_t r[2], c[2], ri = 0, ci = 0;
                    for (size_t x = 0; x < 3; ++x) {
                        if (x != b) r[ri++] = x;
                        if (x != a) c[ci++] = x;
                    }
                    Rat m = minor2(r[0], r[1], c[0], c[1]);
                    adj[a][b] = ((a + b) % 2 == 0) ? m : Rat::zero() - m;
                }
        }

        auto mod_rat = [&](int to, int from) {
            return model.has_module(to, from) ? Rat::from(model.module(to, from)) : Rat::zero();
        };

        // carry_b = [G_jZ adj]_b / det ; computl without dividing until the end.
        std::vector<Rat> carry_num(nz, Rat::zero());
        for (size_t b = 0; b < nz; ++b) {
            Rat acc = Rat::zero();
            for (size_t a = 0; a < nz; ++a)
                acc = acc + mod_rat(j, eliminated[a]) * adj[a][b];
            carry_num[b] = acc.reduced();
        }
        Rat s_num = Rat::zero();
        for (size_t b = 0; b < nz; ++b)
            s_num = s_num + carry_num[b] * mod_rat(eliminated[b], j);
        // s = s_num / det, so (1 - s) * det = det - s_num.
        Rat denom = (det - s_num).reduced();

        try {
            im.exact_available = true;
            for (size_t b = 0; b < nd; ++b) {
                Rat acc = mod_rat(j, retained[b]) * det;
                for (size_t a = 0; a < nz; ++a)
                    acc = acc + carry_num[a] * mod_rat(eliminated[a], retained[b]);
                // acc = (G_jk + carry G_ZD_k) * det, so lumped = acc / (det - s_num).
                Rat lumped = (acc / denom).reduced();
                im.lumped_exact[retained[b]] = lumped.to_transfer();
            }
        } catch (const std::exception&) {
            // Non-causal or degenerate intermediate: exact path unavailable,
            // numeric values above still stand.
            im.exact_available = false;
            im.lumped_exact.clear();
        }
    }
    return im;
}

std::vector<double> immersed_noise_spectrum(const NetworkModel& model, const PredictorSet& ps,
                                            const FrequencyGrid& grid,
                                            const ImmerseOptions& options) {
    auto spec = immerse(model, ps, grid, options).immersed_noise_spectrum;
    for (double v : spec)
        if (!(v > 0.0) && model.noise(ps.target_output).variance > 0.0)
            throw std::runtime_error("immersed noise spectrum not strictly positive");
    return spec;
}

std::vector<PredictorSet> enumerate_valid_predictor_sets(const NetworkModel& model, int j, int k,
                                                         std::size_t max_sets) {
    if (!model.has_module(j, k))
        throw std::invalid_argument("no such module G(" + std::to_string(j) + "," +
                                    std::to_string(k) + ")");
    std::vector<int> candidates;
    for (int v = 1; v <= model.node_count(); ++v)
        if (v != j && v != k) candidates.push_back(v);

    std::vector<PredictorSet> out;
    auto try_set = [&](std::set<int> preds) {
        PredictorSet ps{j, k, std::move(preds)};
        if (check_consistency_conditions(model, ps).satisfied) out.push_back(std::move(ps));
    };

    const size_t m = candidates.size();
    for (size_t size = 0; size <= m && out.size() < max_sets; ++size) {
        // Lexicographic combinations of `size` extra predictors.
        std::vector<size_t> idx(size);
        for (size_t i = 0; i < size; ++i) idx[i] = i;
        while (true) {
            std::set<int> preds{k};
            for (size_t i : idx) preds.insert(candidates[i]);
            try_set(std::move(preds));
            if (out.size() >= max_sets) break;
            // next combination
            size_t i = size;
            while (i > 0) {
                --i;
                if (idx[i] != i + m - size) {
                    ++idx[i];
                    for (size_t l = i + 1; l < size; ++l) idx[l] = idx[l - 1] + 1;
                    break;
                }
                if (i == 0) {
                    i = SIZE_MAX;
                    break;
                }
            }
            if (size == 0 || i == SIZE_MAX) break;
        }
    }

    // The full in-neighbor set always satisfies the conditions; make sure it
    // is present even when max_sets truncated the search.
    auto nj = model.in_neighbors(j);
    std::set<int> full(nj.begin(), nj.end());
    bool have_full = false;
    for (const auto& ps : out)
        if (ps.predictors == full) have_full = true;
    if (!have_full) {
        PredictorSet ps{j, k, full};
        if (check_consistency_conditions(model, ps).satisfied) out.push_back(std::move(ps));
    }
    return out;
}

SpectralFactor grid_spectral_factor(const std::vector<double>& spectrum,
                                    const FrequencyGrid& grid) {
    if (spectrum.size() != grid.size())
        throw std::invalid_argument("grid_spectral_factor: size mismatch");
    for (double v : spectrum)
        if (!(v > 0.0))
            throw std::invalid_argument("grid_spectral_factor: spectrum must be strictly positive");
    if (!grid.is_uniform_from_zero())
        throw std::invalid_argument("grid_spectral_factor: requires the uniform-from-zero grid");

    const size_t n = grid.size();
    const size_t full = 2 * n;
    // Even extension over the whole circle; the unavailable Nyquist sample is
    // approximated by the last grid value.
    std::vector<double> logphi(full);
    for (size_t i = 0; i < n; ++i) logphi[i] = std::log(spectrum[i]);
    logphi[n] = std::log(spectrum[n - 1]);
    for (size_t i = 1; i < n; ++i) logphi[full - i] = logphi[i];

    // Real cepstrum c_k = (1/full) sum_m logphi[m] cos(2 pi k m / full).
    std::vector<double> ceps(n + 1, 0.0);
    const double w0 = 2.0 * std::numbers::pi / static_cast<double>(full);
    for (size_t k = 0; k <= n; ++k) {
        double acc = 0.0;
        for (size_t m = 0; m < full; ++m)
            acc += logphi[m] * std::cos(w0 * static_cast<double>(k) * static_cast<double>(m));
        ceps[k] = acc / static_cast<double>(full);
    }

    SpectralFactor out;
    out.variance = std::exp(ceps[0]);
    out.factor.resize(n);
    for (size_t i = 0; i < n; ++i) {
        // log F(w) = sum_{k>=1} c_k e^{-iwk} (monic: the c_0/2 level moved
        // into the variance).
        std::complex<double> acc(0.0, 0.0);
        for (size_t k = 1; k <= n; ++k) {
            const double f = (k == n) ? 0.5 : 1.0;  // half-weight at the fold point
            acc += f * ceps[k] * std::polar(1.0, -grid[i] * static_cast<double>(k));
        }
        out.factor[i] = std::exp(acc);
    }
    return out;
}

std::string immersion_report_csv(const ImmersedNetwork& im) {
    std::string header = "omega,phi_breve_v,phi_v";
    for (const auto& [k, vals] : im.lumped_values) {
        (void)vals;
        header += ",abs_G_lumped_" + std::to_string(k);
    }
    std::string out = header + "\n";
    for (size_t i = 0; i < im.grid.size(); ++i) {
        out += format_double(im.grid[i]) + "," + format_double(im.immersed_noise_spectrum[i]) +
               "," + format_double(im.target_noise_spectrum[i]);
        for (const auto& [k, vals] : im.lumped_values) {
            (void)k;
            out += "," + format_double(std::abs(vals[i]));
        }
        out += "\n";
    }
    return out;
}

}  // namespace netid
