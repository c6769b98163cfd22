#include "netid/identify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "netid/random.hpp"

namespace netid {

namespace {

// den[0] is implied 1; y(t) = sum b[i] u(t-delay-i) - sum_{i>=1} a[i] y(t-i).
std::vector<double> filt(const std::vector<double>& b, int delay, const std::vector<double>& a,
                         const std::vector<double>& u) {
    const int n = static_cast<int>(u.size());
    std::vector<double> y(static_cast<size_t>(n), 0.0);
    for (int t = 0; t < n; ++t) {
        double acc = 0.0;
        for (size_t i = 0; i < b.size(); ++i) {
            const int tu = t - delay - static_cast<int>(i);
            if (tu >= 0) acc += b[i] * u[static_cast<size_t>(tu)];
        }
        for (size_t i = 1; i < a.size(); ++i) {
            const int ty = t - static_cast<int>(i);
            if (ty >= 0) acc -= a[i] * y[static_cast<size_t>(ty)];
        }
        y[static_cast<size_t>(t)] = acc;
    }
    return y;
}

std::vector<double> delayed(const std::vector<double>& x, int lag) {
    std::vector<double> out(x.size(), 0.0);
    for (size_t t = static_cast<size_t>(lag); t < x.size(); ++t) out[t] = x[t - static_cast<size_t>(lag)];
    return out;
}

// Reflect roots on or outside the unit circle to radius 0.99, preserving the
// phase. `poly` is [1, p_1, ..., p_m].
bool project_stable(std::vector<double>& poly) {
    if (poly.size() <= 1) return false;
    Polynomial p((std::vector<double>(poly)));
    auto roots = p.roots_in_q();
    bool changed = false;
    for (auto& r : roots) {
        const double mag = std::abs(r);
        if (mag >= 1.0) {
            r *= 0.99 / mag;
            changed = true;
        }
    }
    if (!changed) return false;
    Polynomial rebuilt = Polynomial::from_roots_in_q(roots, 1.0);
    for (size_t i = 1; i < poly.size(); ++i) poly[i] = rebuilt.at(static_cast<int>(i));
    return true;
}

}  // namespace

int BJStructure::param_count() const {
    int n = nc + nd;
    for (const auto& in : inputs) n += in.nb + in.nf;
    return n;
}

void BJStructure::check() const {
    if (inputs.empty()) throw std::invalid_argument("BJStructure: at least one input required");
    for (const auto& in : inputs)
        if (in.nb < 1 || in.nf < 0 || in.delay < 0)
            throw std::invalid_argument("BJStructure: invalid input orders");
    if (nc < 0 || nd < 0) throw std::invalid_argument("BJStructure: invalid noise orders");
}

int BJStructure::input_offset(int k) const {
    int off = 0;
    for (int i = 0; i < k; ++i) off += inputs[static_cast<size_t>(i)].nb + inputs[static_cast<size_t>(i)].nf;
    return off;
}

int BJStructure::noise_offset() const { return input_offset(static_cast<int>(inputs.size())); }

BJModel BJModel::decode(const BJStructure& s, const Eigen::VectorXd& theta) {
    s.check();
    if (theta.size() != s.param_count())
        throw std::invalid_argument("BJModel: parameter vector has wrong length");
    BJModel m;
    m.structure = s;
    int pos = 0;
    for (const auto& in : s.inputs) {
        std::vector<double> b(static_cast<size_t>(in.nb));
        for (int i = 0; i < in.nb; ++i) b[static_cast<size_t>(i)] = theta(pos++);
        std::vector<double> f(static_cast<size_t>(in.nf) + 1, 0.0);
        f[0] = 1.0;
        for (int i = 1; i <= in.nf; ++i) f[static_cast<size_t>(i)] = theta(pos++);
        m.b.push_back(std::move(b));
        m.f.push_back(std::move(f));
    }
    m.c.assign(static_cast<size_t>(s.nc) + 1, 0.0);
    m.c[0] = 1.0;
    for (int i = 1; i <= s.nc; ++i) m.c[static_cast<size_t>(i)] = theta(pos++);
    m.d.assign(static_cast<size_t>(s.nd) + 1, 0.0);
    m.d[0] = 1.0;
    for (int i = 1; i <= s.nd; ++i) m.d[static_cast<size_t>(i)] = theta(pos++);
    return m;
}

Eigen::VectorXd BJModel::encode() const {
    Eigen::VectorXd theta(structure.param_count());
    int pos = 0;
    for (size_t k = 0; k < b.size(); ++k) {
        for (double v : b[k]) theta(pos++) = v;
        for (size_t i = 1; i < f[k].size(); ++i) theta(pos++) = f[k][i];
    }
    for (size_t i = 1; i < c.size(); ++i) theta(pos++) = c[i];
    for (size_t i = 1; i < d.size(); ++i) theta(pos++) = d[i];
    return theta;
}

RationalTransfer BJModel::input_transfer(int k) const {
    return RationalTransfer(Polynomial(b[static_cast<size_t>(k)]),
                            Polynomial(f[static_cast<size_t>(k)]),
                            structure.inputs[static_cast<size_t>(k)].delay, /*cancel_tol=*/0.0);
}

RationalTransfer BJModel::noise_transfer() const {
    return RationalTransfer(Polynomial(c), Polynomial(d), 0, /*cancel_tol=*/0.0);
}

bool BJModel::predictor_stable() const {
    auto stable = [](const std::vector<double>& p) {
        for (const auto& r : Polynomial(std::vector<double>(p)).roots_in_q())
            if (std::abs(r) >= 1.0) return false;
        return true;
    };
    for (const auto& fk : f)
        if (!stable(fk)) return false;
    return stable(c) && stable(d);
}

void IdentifyData::check(const BJStructure& s) const {
    if (inputs.size() != s.inputs.size())
        throw std::invalid_argument("data/input count mismatch with structure");
    for (const auto& u : inputs)
        if (u.size() != y.size()) throw std::invalid_argument("signals must share one length");
}

Prediction predict(const BJStructure& s, const Eigen::VectorXd& theta, const IdentifyData& data) {
    data.check(s);
    BJModel m = BJModel::decode(s, theta);
    if (!m.predictor_stable()) throw std::runtime_error("predictor unstable");

    std::vector<double> v = data.y;
    for (size_t k = 0; k < m.b.size(); ++k) {
        auto wk = filt(m.b[k], s.inputs[k].delay, m.f[k], data.inputs[k]);
        for (size_t t = 0; t < v.size(); ++t) v[t] -= wk[t];
    }
    Prediction out;
    out.residual = filt(m.d, 0, m.c, v);
    out.yhat = data.y;
    for (size_t t = 0; t < out.yhat.size(); ++t) out.yhat[t] -= out.residual[t];
    return out;
}

Eigen::MatrixXd gradient(const BJStructure& s, const Eigen::VectorXd& theta,
                         const IdentifyData& data) {
    data.check(s);
    BJModel m = BJModel::decode(s, theta);
    if (!m.predictor_stable()) throw std::runtime_error("predictor unstable");

    const long N = static_cast<long>(data.y.size());
    const int n = s.param_count();
    Eigen::MatrixXd psi(N, n);

    std::vector<double> v = data.y;
    std::vector<std::vector<double>> w(m.b.size());
    for (size_t k = 0; k < m.b.size(); ++k) {
        w[k] = filt(m.b[k], s.inputs[k].delay, m.f[k], data.inputs[k]);
        for (size_t t = 0; t < v.size(); ++t) v[t] -= w[k][t];
    }
    std::vector<double> eps = filt(m.d, 0, m.c, v);

    const std::vector<double> unit{1.0};
    int pos = 0;
    for (size_t k = 0; k < m.b.size(); ++k) {
        // s_k = (D/C)(1/F_k) u_k,  r_k = (D/C)(1/F_k) w_k
        auto sk = filt(m.d, 0, m.c, filt(unit, 0, m.f[k], data.inputs[k]));
        for (int i = 0; i < s.inputs[k].nb; ++i) {
            auto col = delayed(sk, s.inputs[k].delay + i);
            for (long t = 0; t < N; ++t) psi(t, pos) = -col[static_cast<size_t>(t)];
            ++pos;
        }
        if (s.inputs[k].nf > 0) {
            auto rk = filt(m.d, 0, m.c, filt(unit, 0, m.f[k], w[k]));
            for (int i = 1; i <= s.inputs[k].nf; ++i) {
                auto col = delayed(rk, i);
                for (long t = 0; t < N; ++t) psi(t, pos) = col[static_cast<size_t>(t)];
                ++pos;
            }
        }
    }
    if (s.nc > 0) {
        auto ec = filt(unit, 0, m.c, eps);
        for (int i = 1; i <= s.nc; ++i) {
            auto col = delayed(ec, i);
            for (long t = 0; t < N; ++t) psi(t, pos) = -col[static_cast<size_t>(t)];
            ++pos;
        }
    }
    if (s.nd > 0) {
        auto vc = filt(unit, 0, m.c, v);
        for (int i = 1; i <= s.nd; ++i) {
            auto col = delayed(vc, i);
            for (long t = 0; t < N; ++t) psi(t, pos) = col[static_cast<size_t>(t)];
            ++pos;
        }
    }
    return psi;
}

namespace {

double cost_of(const std::vector<double>& eps) {
    double acc = 0.0;
    for (double e : eps) acc += e * e;
    return acc / static_cast<double>(eps.size());
}

Eigen::VectorXd project_theta(const BJStructure& s, Eigen::VectorXd theta) {
    BJModel m = BJModel::decode(s, theta);
    bool changed = false;
    for (auto& fk : m.f) changed |= project_stable(fk);
    changed |= project_stable(m.c);
    changed |= project_stable(m.d);
    return changed ? m.encode() : theta;
}

// Stage-wise initial estimate: high-order ARX, then per-input model reduction
// to the target orders (Shanks' recursion fit on the ARX impulse response).
Eigen::VectorXd arx_initial_theta(const BJStructure& s, const IdentifyData& data) {
    const int N = static_cast<int>(data.y.size());
    int max_order = 1;
    for (const auto& in : s.inputs) max_order = std::max({max_order, in.nb + in.delay, in.nf});
    const int na = std::min(30, std::max(10, 4 * max_order));
    const int nbx = na;

    std::vector<int> delays;
    for (const auto& in : s.inputs) delays.push_back(in.delay);

    int t0 = na;
    for (size_t k = 0; k < s.inputs.size(); ++k) t0 = std::max(t0, delays[k] + nbx);
    const int rows = N - t0;
    const int cols = na + nbx * static_cast<int>(s.inputs.size());
    if (rows < 2 * cols) {
        // Not enough data for the high-order stage; start from small gains.
        return Eigen::VectorXd::Constant(s.param_count(), 0.01);
    }

    Eigen::MatrixXd X(rows, cols);
    Eigen::VectorXd Y(rows);
    for (int t = t0; t < N; ++t) {
        const int r = t - t0;
        Y(r) = data.y[static_cast<size_t>(t)];
        int c = 0;
        for (int i = 1; i <= na; ++i) X(r, c++) = -data.y[static_cast<size_t>(t - i)];
        for (size_t k = 0; k < s.inputs.size(); ++k)
            for (int i = 0; i < nbx; ++i) {
                const int tu = t - delays[k] - i;
                X(r, c++) = tu >= 0 ? data.inputs[k][static_cast<size_t>(tu)] : 0.0;
            }
    }
    Eigen::VectorXd sol = (X.transpose() * X +
                           1e-8 * static_cast<double>(rows) * Eigen::MatrixXd::Identity(cols, cols))
                              .ldlt()
                              .solve(X.transpose() * Y);

    std::vector<double> a(static_cast<size_t>(na) + 1, 0.0);
    a[0] = 1.0;
    for (int i = 1; i <= na; ++i) a[static_cast<size_t>(i)] = sol(i - 1);
    if (project_stable(a)) {
        // keep the projected AR part
    }

    BJModel m;
    m.structure = s;
    const int T = std::max(128, 12 * na);
    std::vector<double> impulse(static_cast<size_t>(T), 0.0);
    impulse[0] = 1.0;
    for (size_t k = 0; k < s.inputs.size(); ++k) {
        std::vector<double> bx(static_cast<size_t>(nbx));
        for (int i = 0; i < nbx; ++i) bx[static_cast<size_t>(i)] = sol(na + static_cast<int>(k) * nbx + i);
        // Impulse response of q^-delay * Bx / A without the pure delay.
        auto h = filt(bx, 0, a, impulse);

        const int nb = s.inputs[k].nb;
        const int nf = s.inputs[k].nf;
        std::vector<double> f(static_cast<size_t>(nf) + 1, 0.0);
        f[0] = 1.0;
        if (nf > 0) {
            // h(t) = -sum f_i h(t-i) for t beyond the numerator taps.
            const int start = nb;
            const int nrows = T - start;
            Eigen::MatrixXd Hf(nrows, nf);
            Eigen::VectorXd hv(nrows);
            for (int t = start; t < T; ++t) {
                hv(t - start) = h[static_cast<size_t>(t)];
                for (int i = 1; i <= nf; ++i)
                    Hf(t - start, i - 1) =
                        (t - i) >= 0 ? -h[static_cast<size_t>(t - i)] : 0.0;
            }
            Eigen::VectorXd fs = (Hf.transpose() * Hf +
                                  1e-10 * Eigen::MatrixXd::Identity(nf, nf))
                                     .ldlt()
                                     .solve(Hf.transpose() * hv);
            for (int i = 1; i <= nf; ++i) f[static_cast<size_t>(i)] = fs(i - 1);
            project_stable(f);
        }
        // B = F * h truncated to the numerator taps.
        std::vector<double> b(static_cast<size_t>(nb), 0.0);
        for (int i = 0; i < nb; ++i) {
            double acc = 0.0;
            for (size_t l = 0; l < f.size(); ++l)
                if (i >= static_cast<int>(l)) acc += f[l] * h[static_cast<size_t>(i - static_cast<int>(l))];
            b[static_cast<size_t>(i)] = acc;
        }
        m.b.push_back(std::move(b));
        m.f.push_back(std::move(f));
    }
    m.c.assign(static_cast<size_t>(s.nc) + 1, 0.0);
    m.c[0] = 1.0;
    m.d.assign(static_cast<size_t>(s.nd) + 1, 0.0);
    m.d[0] = 1.0;
    return m.encode();
}

struct StartOutcome {
    Eigen::VectorXd theta;
    double cost = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;
};

StartOutcome run_start(const BJStructure& s, const IdentifyData& data, Eigen::VectorXd theta,
                       const FitOptions& options) {
    StartOutcome out;
    theta = project_theta(s, std::move(theta));
    const long N = static_cast<long>(data.y.size());

    auto eval_cost = [&](const Eigen::VectorXd& th, bool& ok) {
        ok = true;
        try {
            auto pred = predict(s, th, data);
            const double c = cost_of(pred.residual);
            if (!std::isfinite(c)) ok = false;
            return c;
        } catch (const std::exception&) {
            ok = false;
            return std::numeric_limits<double>::infinity();
        }
    };

    bool ok = true;
    double cost = eval_cost(theta, ok);
    if (!ok) return out;
    out.trace.push_back(cost);

    double mu = 1e-3;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        Eigen::MatrixXd psi = gradient(s, theta, data);
        auto pred = predict(s, theta, data);
        Eigen::VectorXd eps = Eigen::Map<const Eigen::VectorXd>(pred.residual.data(), N);
        Eigen::VectorXd g = psi.transpose() * eps;  // (N/2) * grad of cost
        const double grad_inf = (2.0 / static_cast<double>(N)) * g.cwiseAbs().maxCoeff();
        if (grad_inf < options.gradient_tolerance) {
            out.converged = true;
            break;
        }
        Eigen::MatrixXd JtJ = psi.transpose() * psi;
        Eigen::VectorXd diag = JtJ.diagonal().cwiseMax(1e-12);

        bool accepted = false;
        for (int inner = 0; inner < 40; ++inner) {
            Eigen::MatrixXd M = JtJ;
            M.diagonal() += mu * diag;
            Eigen::VectorXd delta = M.ldlt().solve(-g);
            Eigen::VectorXd trial = project_theta(s, theta + delta);
            bool tok = true;
            const double tcost = eval_cost(trial, tok);
            if (tok && tcost < cost) {
                const double rel = (cost - tcost) / std::max(cost, 1e-300);
                theta = trial;
                cost = tcost;
                out.trace.push_back(cost);
                mu = std::max(mu / 10.0, 1e-12);
                accepted = true;
                if (rel < options.cost_tolerance) out.converged = true;
                break;
            }
            mu *= 10.0;
            if (mu > 1e14) break;
        }
        if (!accepted || out.converged) {
            if (!accepted && mu > 1e14) break;  // stalled
            if (out.converged) break;
        }
    }
    out.theta = theta;
    out.cost = cost;
    out.iterations = iter;
    return out;
}

}  // namespace

FitResult fit_pem(const BJStructure& s, const IdentifyData& data, const FitOptions& options) {
    s.check();
    data.check(s);
    const long N = static_cast<long>(data.y.size());
    const int n = s.param_count();
    if (N < 20 * n)
        throw std::invalid_argument("fit_pem: need at least 20 samples per parameter (N=" +
                                    std::to_string(N) + ", n=" + std::to_string(n) + ")");

    Eigen::VectorXd base = options.initial_theta ? *options.initial_theta
                                                 : arx_initial_theta(s, data);

    std::vector<StartOutcome> outcomes;
    for (int start = 0; start < std::max(1, options.restarts); ++start) {
        Eigen::VectorXd theta0 = base;
        if (start > 0) {
            GaussianStream gs(options.seed, 1000 + static_cast<std::uint64_t>(start), 2);
            for (long i = 0; i < theta0.size(); ++i) {
                const double scale = std::max(std::abs(base(i)), 0.1);
                theta0(i) += 0.2 * scale * gs.next();
            }
        }
        outcomes.push_back(run_start(s, data, std::move(theta0), options));
    }

    const StartOutcome* best = nullptr;
    for (const auto& o : outcomes)
        if (std::isfinite(o.cost) && (!best || o.cost < best->cost)) best = &o;
    if (!best) {
        std::string msg = "optimization failed; per-start costs:";
        for (const auto& o : outcomes) msg += " " + format_double(o.cost);
        throw std::runtime_error(msg);
    }

    FitResult fit;
    fit.structure = s;
    fit.theta = best->theta;
    fit.iterations = best->iterations;
    fit.converged = best->converged;
    fit.cost_trace = best->trace;
    fit.data_length = N;
    fit.sigma2 = best->cost;
    fit.grid = options.response_grid;

    BJModel m = fit.model();
    for (size_t k = 0; k < s.inputs.size(); ++k)
        fit.module_response.push_back(m.input_transfer(static_cast<int>(k)).freq_response(fit.grid.points()));
    try {
        fit.covariance = param_covariance(fit, data);
    } catch (const std::exception&) {
        // Singular information matrix; covariance left empty, a direct
        // param_covariance call reports the null-space direction.
        fit.covariance = Eigen::MatrixXd();
    }
    return fit;
}

Eigen::MatrixXd param_covariance(const FitResult& fit, const IdentifyData& data) {
    const long N = static_cast<long>(data.y.size());
    Eigen::MatrixXd psi = gradient(fit.structure, fit.theta, data);
    Eigen::MatrixXd info = (psi.transpose() * psi) / static_cast<double>(N);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmax > 0.0) || lmin <= 1e-12 * lmax) {
        std::string dir = "[";
        Eigen::VectorXd v = es.eigenvectors().col(0);
        for (long i = 0; i < v.size(); ++i) {
            if (i) dir += ",";
            dir += format_double(v(i));
        }
        dir += "]";
        throw std::runtime_error("unidentifiable parameterization; null-space direction " + dir);
    }
    Eigen::MatrixXd P = fit.sigma2 * info.inverse() / static_cast<double>(N);
    return 0.5 * (P + P.transpose());
}

CovarianceCurve module_response_covariance(const FitResult& fit, int module_index,
                                           const FrequencyGrid& grid) {
    const auto& s = fit.structure;
    if (module_index < 0 || module_index >= static_cast<int>(s.inputs.size()))
        throw std::invalid_argument("module_response_covariance: bad module index");
    const auto& in = s.inputs[static_cast<size_t>(module_index)];
    const int off = s.input_offset(module_index);
    const int m = in.nb + in.nf;
    Eigen::MatrixXd P = fit.covariance.block(off, off, m, m);

    BJModel mod = fit.model();
    const auto& b = mod.b[static_cast<size_t>(module_index)];
    const auto& f = mod.f[static_cast<size_t>(module_index)];

    CovarianceCurve curve;
    curve.grid = grid;
    curve.label = "delta-method";
    curve.n_params = s.param_count();
    curve.data_length = fit.data_length;
    curve.values.resize(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        const double omega = grid[i];
        const std::complex<double> x = std::polar(1.0, -omega);
        std::complex<double> B(0.0, 0.0), F(0.0, 0.0);
        for (size_t l = 0; l < b.size(); ++l) B += b[l] * std::pow(x, static_cast<double>(l));
        for (size_t l = 0; l < f.size(); ++l) F += f[l] * std::pow(x, static_cast<double>(l));
        const std::complex<double> shift = std::pow(x, static_cast<double>(in.delay));
        const std::complex<double> G = shift * B / F;

        Eigen::RowVectorXcd J(m);
        for (int l = 0; l < in.nb; ++l) J(l) = shift * std::pow(x, static_cast<double>(l)) / F;
        for (int l = 1; l <= in.nf; ++l) J(in.nb + l - 1) = -G * std::pow(x, static_cast<double>(l)) / F;
        const std::complex<double> val = (J * P * J.adjoint())(0);
        curve.values[i] = std::max(0.0, val.real());
    }
    return curve;
}

std::string fit_report(const FitResult& fit) {
    std::string out;
    out += "parameters: " + std::to_string(fit.theta.size()) + "\n";
    out += "theta:";
    for (long i = 0; i < fit.theta.size(); ++i) out += " " + format_double(fit.theta(i));
    out += "\nsigma2: " + format_double(fit.sigma2) + "\n";
    out += "converged: " + std::string(fit.converged ? "yes" : "no") +
           " iterations: " + std::to_string(fit.iterations) + "\n";
    out += "covariance (lower triangle, per-estimate, 1/N scaling included):\n";
    for (long i = 0; i < fit.covariance.rows(); ++i) {
        for (long j = 0; j <= i; ++j) out += (j ? " " : "") + format_double(fit.covariance(i, j));
        out += "\n";
    }
    out += "cost trace:";
    for (double c : fit.cost_trace) out += " " + format_double(c);
    out += "\n";
    return out;
}

std::string fit_responses_csv(const FitResult& fit) {
    std::string out = "omega";
    for (size_t k = 0; k < fit.module_response.size(); ++k)
        out += ",re_G" + std::to_string(k + 1) + ",im_G" + std::to_string(k + 1);
    out += "\n";
    for (size_t i = 0; i < fit.grid.size(); ++i) {
        out += format_double(fit.grid[i]);
        for (const auto& resp : fit.module_response)
            out += "," + format_double(resp[i].real()) + "," + format_double(resp[i].imag());
        out += "\n";
    }
    return out;
}

}  // namespace netid
