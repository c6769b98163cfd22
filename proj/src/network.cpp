#include "netid/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "netid/filtering.hpp"
#include "netid/random.hpp"

namespace netid {

std::string SignalTag::str() const {
    switch (kind) {
        case Kind::node: return "w" + std::to_string(node);
        case Kind::noise: return "e" + std::to_string(node);
        case Kind::excitation: return "r" + std::to_string(node);
    }
    return "?";
}

std::string ValidationReport::str() const {
    std::string out;
    for (const auto& p : problems) out += p + "\n";
    return out;
}

NetworkModel::NetworkModel(int node_count) : node_count_(node_count) {
    if (node_count < 1) throw std::invalid_argument("NetworkModel: node count must be positive");
    noise_.resize(static_cast<size_t>(node_count));
    excitation_.resize(static_cast<size_t>(node_count));
}

int NetworkModel::index(int node) const {
    if (node < 1 || node > node_count_)
        throw std::invalid_argument("NetworkModel: node id " + std::to_string(node) +
                                    " out of range");
    return node - 1;
}

void NetworkModel::set_module(int to, int from, RationalTransfer tf) {
    index(to);
    index(from);
    if (to == from) throw std::invalid_argument("NetworkModel: self-module not allowed");
    if (tf.is_zero())
        modules_.erase({to, from});
    else
        modules_.insert_or_assign({to, from}, std::move(tf));
}

void NetworkModel::remove_module(int to, int from) { modules_.erase({to, from}); }

bool NetworkModel::has_module(int to, int from) const {
    return modules_.count({to, from}) > 0;
}

const RationalTransfer& NetworkModel::module(int to, int from) const {
    auto it = modules_.find({to, from});
    if (it == modules_.end())
        throw std::invalid_argument("no such module G(" + std::to_string(to) + "," +
                                    std::to_string(from) + ")");
    return it->second;
}

void NetworkModel::set_noise(int node, NoiseShape ns) { noise_[static_cast<size_t>(index(node))] = std::move(ns); }
void NetworkModel::set_excitation(int node, Excitation e) {
    excitation_[static_cast<size_t>(index(node))] = std::move(e);
}

std::vector<int> NetworkModel::in_neighbors(int j) const {
    index(j);
    std::vector<int> out;
    for (const auto& [key, tf] : modules_)
        if (key.first == j) out.push_back(key.second);
    std::sort(out.begin(), out.end());
    return out;
}

Eigen::MatrixXcd NetworkModel::transfer_matrix(double omega) const {
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(node_count_, node_count_);
    for (const auto& [key, tf] : modules_)
        G(key.first - 1, key.second - 1) = tf.at(omega);
    return G;
}

std::optional<std::vector<int>> NetworkModel::delay_free_topological_order() const {
    // Kahn's algorithm on the subgraph of edges with direct feedthrough.
    std::vector<std::vector<int>> adj(static_cast<size_t>(node_count_) + 1);
    std::vector<int> indeg(static_cast<size_t>(node_count_) + 1, 0);
    for (const auto& [key, tf] : modules_) {
        if (tf.delay() == 0 && !tf.is_zero()) {
            adj[static_cast<size_t>(key.second)].push_back(key.first);
            ++indeg[static_cast<size_t>(key.first)];
        }
    }
    std::deque<int> ready;
    for (int v = 1; v <= node_count_; ++v)
        if (indeg[static_cast<size_t>(v)] == 0) ready.push_back(v);
    std::vector<int> order;
    while (!ready.empty()) {
        int v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (int u : adj[static_cast<size_t>(v)])
            if (--indeg[static_cast<size_t>(u)] == 0) ready.push_back(u);
    }
    if (static_cast<int>(order.size()) != node_count_) return std::nullopt;
    return order;
}

namespace {

// Closed-loop state matrix of the interconnection: one realization per module
// and noise shaper, feedthrough resolved exactly.
Eigen::MatrixXd closed_loop_state_matrix(const NetworkModel& model) {
    struct Block {
        int from;  // input node
        int to;    // output node
        std::vector<double> b;
        std::vector<double> a;
        int order;
    };
    std::vector<Block> blocks;
    for (const auto& [key, tf] : model.modules()) {
        Block blk;
        blk.to = key.first;
        blk.from = key.second;
        const auto& num = tf.num().coeffs();
        blk.b.assign(static_cast<size_t>(tf.delay()), 0.0);
        blk.b.insert(blk.b.end(), num.begin(), num.end());
        blk.a = tf.den().coeffs();
        blk.order = static_cast<int>(std::max(blk.b.size(), blk.a.size())) - 1;
        blk.b.resize(static_cast<size_t>(blk.order) + 1, 0.0);
        blk.a.resize(static_cast<size_t>(blk.order) + 1, 0.0);
        if (blk.order > 0) blocks.push_back(std::move(blk));
    }

    const int L = model.node_count();
    int nx = 0;
    for (const auto& blk : blocks) nx += blk.order;

    // w = C x + D w  =>  w = (I - D)^-1 C x;  x+ = A x + B w.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nx, nx);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nx, L);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(L, nx);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(L, L);
    for (const auto& [key, tf] : model.modules())
        if (tf.delay() == 0) D(key.first - 1, key.second - 1) += tf.num().at(0);

    int off = 0;
    for (const auto& blk : blocks) {
        const int m = blk.order;
        // Transposed direct form: x_i+ = -a_{i+1} y + b_{i+1} u + x_{i+1},
        // y = b_0 u + x_0, with y entering node `to` and u = w_from.
        for (int i = 0; i < m; ++i) {
            // y = b0 * w_from + x_off  (x_off is the first state of the block)
            // state update uses y and u.
            A(off + i, off) += -blk.a[static_cast<size_t>(i) + 1];  // -a_{i+1} * x_0 part of y
            if (i + 1 < m) A(off + i, off + i + 1) += 1.0;
            B(off + i, blk.from - 1) +=
                blk.b[static_cast<size_t>(i) + 1] - blk.a[static_cast<size_t>(i) + 1] * blk.b[0];
        }
        C(blk.to - 1, off) += 1.0;
        off += m;
    }

    Eigen::MatrixXd Dm = Eigen::MatrixXd::Identity(L, L) - D;
    Eigen::MatrixXd W = Dm.partialPivLu().solve(C);  // w = W x
    if (nx == 0) return Eigen::MatrixXd::Zero(0, 0);
    return A + B * W;
}

}  // namespace

ValidationReport NetworkModel::validate(const FrequencyGrid& grid) const {
    ValidationReport report;
    for (const auto& [key, tf] : modules_) {
        (void)tf;
        if (key.first == key.second)
            report.problems.push_back("diagonal module at node " + std::to_string(key.first));
    }
    for (int j = 1; j <= node_count_; ++j) {
        const auto& ns = noise_[static_cast<size_t>(j - 1)];
        for (const auto& p : ns.validate())
            report.problems.push_back("node " + std::to_string(j) + ": " + p);
        const auto& ex = excitation_[static_cast<size_t>(j - 1)];
        if (ex.kind == Excitation::Kind::white && !(ex.power >= 0.0))
            report.problems.push_back("node " + std::to_string(j) + ": negative excitation power");
    }
    if (!delay_free_topological_order())
        report.problems.push_back("algebraic loop: a cycle with zero total delay exists");

    // Well-posedness: det(I - G) bounded away from zero on the grid.
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Eigen::MatrixXcd M =
            Eigen::MatrixXcd::Identity(node_count_, node_count_) - transfer_matrix(grid[i]);
        const double d = std::abs(M.determinant());
        if (d < 1e-8) {
            report.problems.push_back("ill-posed: |det(I-G)| = " + format_double(d) +
                                      " at omega=" + format_double(grid[i]));
            break;
        }
    }

    if (report.ok()) {
        Eigen::MatrixXd Acl = closed_loop_state_matrix(*this);
        if (Acl.rows() > 0) {
            Eigen::EigenSolver<Eigen::MatrixXd> es(Acl, /*computeEigenvectors=*/false);
            double worst = 0.0;
            for (long i = 0; i < es.eigenvalues().size(); ++i)
                worst = std::max(worst, std::abs(es.eigenvalues()(i)));
            if (worst >= 1.0 - kStabilityMargin)
                report.problems.push_back("closed loop unstable: spectral radius " +
                                          format_double(worst));
        }
    }
    return report;
}

SignalRecord simulate(const NetworkModel& model, int sample_count, double sample_time,
                      std::uint64_t seed, const SimulateOptions& options) {
    if (sample_count < 1) throw std::invalid_argument("simulate: sample count must be positive");
    if (!(sample_time > 0.0)) throw std::invalid_argument("simulate: sample time must be positive");
    auto report = model.validate();
    if (!report.ok()) throw std::runtime_error("simulate: invalid model:\n" + report.str());

    auto topo = model.delay_free_topological_order();
    if (!topo) throw std::runtime_error("algebraic loop: cannot order delay-free subgraph");

    const int L = model.node_count();
    const int burn = options.burn_in;
    const int total = burn + sample_count;

    // Per-node disturbances v_j = H_j e_j and excitations, precomputed.
    std::vector<std::vector<double>> e(static_cast<size_t>(L));
    std::vector<std::vector<double>> v(static_cast<size_t>(L));
    std::vector<std::vector<double>> r(static_cast<size_t>(L), std::vector<double>(static_cast<size_t>(total), 0.0));
    for (int j = 1; j <= L; ++j) {
        const auto& ns = model.noise(j);
        GaussianStream gs(seed, static_cast<std::uint64_t>(j), 0);
        e[static_cast<size_t>(j - 1)] =
            gs.draw(static_cast<size_t>(total), ns.variance > 0.0 ? std::sqrt(ns.variance) : 0.0);
        if (ns.variance > 0.0)
            v[static_cast<size_t>(j - 1)] = filter(ns.shaper, e[static_cast<size_t>(j - 1)]);
        else
            v[static_cast<size_t>(j - 1)].assign(static_cast<size_t>(total), 0.0);

        const auto& ex = model.excitation(j);
        if (ex.kind == Excitation::Kind::white) {
            GaussianStream gr(seed, static_cast<std::uint64_t>(j), 1);
            r[static_cast<size_t>(j - 1)] =
                gr.draw(static_cast<size_t>(total), ex.power > 0.0 ? std::sqrt(ex.power) : 0.0);
        } else if (ex.kind == Excitation::Kind::external) {
            if (static_cast<int>(ex.samples.size()) < sample_count)
                throw std::invalid_argument("simulate: external excitation at node " +
                                            std::to_string(j) + " shorter than N");
            // External sequences cover the recorded window; burn-in stays zero.
            for (int t = 0; t < sample_count; ++t)
                r[static_cast<size_t>(j - 1)][static_cast<size_t>(burn + t)] =
                    ex.samples[static_cast<size_t>(t)];
        }
    }

    // Edge filters, advanced jointly with the node recursion.
    struct Edge {
        int to, from;
        OnlineFilter filt;
    };
    std::vector<Edge> edges;
    for (const auto& [key, tf] : model.modules())
        edges.push_back({key.first, key.second, OnlineFilter(tf)});
    std::vector<std::vector<size_t>> edges_into(static_cast<size_t>(L) + 1);
    for (size_t i = 0; i < edges.size(); ++i)
        edges_into[static_cast<size_t>(edges[i].to)].push_back(i);

    std::vector<std::vector<double>> w(static_cast<size_t>(L),
                                       std::vector<double>(static_cast<size_t>(total), 0.0));
    std::vector<double> wt(static_cast<size_t>(L), 0.0);
    for (int t = 0; t < total; ++t) {
        for (int j : *topo) {
            double acc = r[static_cast<size_t>(j - 1)][static_cast<size_t>(t)] +
                         v[static_cast<size_t>(j - 1)][static_cast<size_t>(t)];
            for (size_t ei : edges_into[static_cast<size_t>(j)]) {
                const Edge& edge = edges[ei];
                // Delay-free contributions read w_from computed earlier this
                // step; delayed ones ignore the current input sample.
                acc += edge.filt.output(wt[static_cast<size_t>(edge.from - 1)]);
            }
            wt[static_cast<size_t>(j - 1)] = acc;
            w[static_cast<size_t>(j - 1)][static_cast<size_t>(t)] = acc;
        }
        for (auto& edge : edges) {
            const double u = wt[static_cast<size_t>(edge.from - 1)];
            edge.filt.advance(u, edge.filt.output(u));
        }
    }

    SignalRecord rec;
    rec.sample_count = sample_count;
    rec.sample_time = sample_time;
    rec.seed = seed;
    rec.w.resize(static_cast<size_t>(L));
    rec.r.resize(static_cast<size_t>(L));
    rec.e.resize(static_cast<size_t>(L));
    for (int j = 0; j < L; ++j) {
        auto slice = [&](const std::vector<double>& full) {
            return std::vector<double>(full.begin() + burn, full.begin() + burn + sample_count);
        };
        rec.w[static_cast<size_t>(j)] = slice(w[static_cast<size_t>(j)]);
        rec.r[static_cast<size_t>(j)] = slice(r[static_cast<size_t>(j)]);
        rec.e[static_cast<size_t>(j)] = slice(e[static_cast<size_t>(j)]);
    }
    return rec;
}

ClosedLoopResponse closed_loop_response(const NetworkModel& model, const FrequencyGrid& grid) {
    auto report = model.validate(grid);
    if (!report.ok())
        throw std::runtime_error("closed_loop_response: invalid model:\n" + report.str());

    const int L = model.node_count();
    ClosedLoopResponse out;
    out.grid = grid;
    out.noise_to_w.reserve(grid.size());
    out.exc_to_w.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double omega = grid[i];
        Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(L, L) - model.transfer_matrix(omega);
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
        Eigen::MatrixXcd inv = lu.solve(Eigen::MatrixXcd::Identity(L, L));
        const double residual = (M * inv - Eigen::MatrixXcd::Identity(L, L)).cwiseAbs().maxCoeff();
        if (residual > 1e-10)
            throw std::runtime_error("closed_loop_response: I-G near-singular at omega=" +
                                     format_double(omega));
        Eigen::MatrixXcd noise = inv;
        for (int k = 1; k <= L; ++k) {
            const auto& ns = model.noise(k);
            const std::complex<double> h =
                ns.variance > 0.0 ? ns.shaper.at(omega) : std::complex<double>(1.0, 0.0);
            noise.col(k - 1) *= h;
        }
        out.noise_to_w.push_back(std::move(noise));
        out.exc_to_w.push_back(std::move(inv));
    }
    return out;
}

SourceDecomposition source_decomposition(const NetworkModel& model, const FrequencyGrid& grid) {
    auto cl = closed_loop_response(model, grid);
    const int L = model.node_count();

    SourceDecomposition dec;
    dec.grid = grid;
    std::vector<int> noise_cols, exc_cols;
    for (int k = 1; k <= L; ++k) {
        if (model.noise(k).variance > 0.0) {
            dec.sources.push_back(SignalTag::e(k));
            dec.powers.push_back(model.noise(k).variance);
            noise_cols.push_back(k - 1);
        }
    }
    for (int k = 1; k <= L; ++k) {
        const auto& ex = model.excitation(k);
        if (ex.kind == Excitation::Kind::external)
            throw std::invalid_argument(
                "analytic spectra unavailable: external excitation at node " + std::to_string(k));
        if (ex.kind == Excitation::Kind::white && ex.power > 0.0) {
            dec.sources.push_back(SignalTag::r(k));
            dec.powers.push_back(ex.power);
            exc_cols.push_back(k - 1);
        }
    }

    dec.node_gain.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Eigen::MatrixXcd gain(L, static_cast<long>(dec.sources.size()));
        long c = 0;
        for (int col : noise_cols) gain.col(c++) = cl.noise_to_w[i].col(col);
        for (int col : exc_cols) gain.col(c++) = cl.exc_to_w[i].col(col);
        dec.node_gain.push_back(std::move(gain));
    }
    return dec;
}

Eigen::RowVectorXcd SourceDecomposition::tag_gain(const NetworkModel& model, SignalTag tag,
                                                  std::size_t i) const {
    (void)model;
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(static_cast<long>(sources.size()));
    switch (tag.kind) {
        case SignalTag::Kind::node:
            row = node_gain[i].row(tag.node - 1);
            break;
        case SignalTag::Kind::noise:
        case SignalTag::Kind::excitation:
            for (size_t s = 0; s < sources.size(); ++s)
                if (sources[s] == tag) row(static_cast<long>(s)) = 1.0;
            break;
    }
    return row;
}

std::vector<std::complex<double>> analytic_cross_spectrum(const NetworkModel& model,
                                                          const FrequencyGrid& grid, SignalTag a,
                                                          SignalTag b) {
    auto check = [&](SignalTag t) {
        if (t.node < 1 || t.node > model.node_count())
            throw std::invalid_argument("unknown signal tag " + t.str());
    };
    check(a);
    check(b);
    auto dec = source_decomposition(model, grid);
    std::vector<std::complex<double>> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Eigen::RowVectorXcd ta = dec.tag_gain(model, a, i);
        Eigen::RowVectorXcd tb = dec.tag_gain(model, b, i);
        std::complex<double> acc(0.0, 0.0);
        for (long s = 0; s < ta.size(); ++s)
            acc += ta(s) * std::conj(tb(s)) * dec.powers[static_cast<size_t>(s)];
        out[i] = acc;
    }
    return out;
}

}  // namespace netid
