#include "netid/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "netid/network_io.hpp"

namespace netid {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t record_hash(const SignalRecord& rec) {
    std::string bytes;
    bytes.reserve(rec.w.size() * static_cast<size_t>(rec.sample_count) * sizeof(double));
    auto push = [&](const std::vector<double>& v) {
        const char* p = reinterpret_cast<const char*>(v.data());
        bytes.append(p, v.size() * sizeof(double));
    };
    for (const auto& v : rec.w) push(v);
    for (const auto& v : rec.r) push(v);
    return fnv1a(bytes);
}

NetworkModel ExperimentConfig::network() const { return parse_network_string(network_text); }

std::string ExperimentConfig::canonical() const {
    std::string out = dump_network(network());
    out += "[experiment]\n";
    out += "N=" + std::to_string(sample_count) + "\n";
    out += "Ts=" + format_double(sample_time) + "\n";
    out += "runs=" + std::to_string(runs) + "\n";
    out += "seed=" + std::to_string(seed) + "\n";
    out += "grid=" + std::to_string(grid_size) + "\n";
    out += "burnin=" + std::to_string(burn_in) + "\n";
    out += "restarts=" + std::to_string(restarts) + "\n";
    out += "target j=" + std::to_string(target_output) + " k=" + std::to_string(target_input) + "\n";
    auto list = [](const std::vector<int>& v) {
        std::string s = "[";
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s + "]";
    };
    out += "predictors full=" + list(full_predictors) + " immersed=" + list(immersed_predictors) + "\n";
    if (sweep) {
        std::vector<double> g = sweep->gains;
        std::string gs = "[";
        for (size_t i = 0; i < g.size(); ++i) gs += (i ? "," : "") + format_double(g[i]);
        gs += "]";
        out += "sweep edge=" + std::to_string(sweep->from) + "," + std::to_string(sweep->to) +
               " gains=" + gs + "\n";
    }
    for (const auto& [key, in] : order_overrides)
        out += "orders setup=" + key.first + " input=" + std::to_string(key.second) +
               " nb=" + std::to_string(in.nb) + " nf=" + std::to_string(in.nf) +
               " delay=" + std::to_string(in.delay) + "\n";
    for (const auto& [setup, nn] : noise_order_overrides)
        out += "noise_orders setup=" + setup + " nc=" + std::to_string(nn.first) +
               " nd=" + std::to_string(nn.second) + "\n";
    return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

void ExperimentConfig::validate() const {
    if (runs < 1) throw std::invalid_argument("experiment: runs must be >= 1");
    if (sample_count < 2) throw std::invalid_argument("experiment: N too small");
    if (grid_size < 8) throw std::invalid_argument("experiment: grid too small");
    NetworkModel model = network();
    if (!model.has_module(target_output, target_input))
        throw std::invalid_argument("experiment: target module does not exist");
    if (sweep) {
        if (sweep->gains.empty()) throw std::invalid_argument("experiment: sweep gain list empty");
        if (!model.has_module(sweep->to, sweep->from))
            throw std::invalid_argument("experiment: sweep edge does not exist");
    }
    for (int p : full_predictors)
        if (!model.has_module(target_output, p))
            throw std::invalid_argument("experiment: full predictor " + std::to_string(p) +
                                        " is not an in-neighbor");
    auto report = model.validate();
    if (!report.ok()) throw std::invalid_argument("experiment: network invalid:\n" + report.str());
}

namespace {

std::string kv(const std::string& line, const std::string& key) {
    auto pos = line.find(key + "=");
    if (pos == std::string::npos)
        throw std::invalid_argument("experiment config line missing '" + key + "=': " + line);
    pos += key.size() + 1;
    if (pos < line.size() && line[pos] == '[') {
        auto end = line.find(']', pos);
        if (end == std::string::npos) throw std::invalid_argument("unterminated list: " + line);
        return line.substr(pos, end - pos + 1);
    }
    auto end = line.find_first_of(" \t", pos);
    return line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

std::vector<int> parse_int_list(const std::string& s) {
    const std::string body = s.find('[') == std::string::npos ? "[" + s + "]" : s;
    std::vector<int> out;
    for (double v : parse_coeff_list(body)) out.push_back(static_cast<int>(std::lround(v)));
    return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
    auto marker = text.find("[experiment]");
    if (marker == std::string::npos)
        throw std::invalid_argument("experiment config needs an [experiment] stanza");

    ExperimentConfig cfg;
    {
        // Round-trip the network part through the model so the canonical dump
        // is stable.
        NetworkModel model = parse_network_string(text.substr(0, marker));
        cfg.network_text = dump_network(model);
    }

    std::istringstream rest(text.substr(marker + std::strlen("[experiment]")));
    std::string line;
    while (std::getline(rest, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        if (head.rfind("N=", 0) == 0) cfg.sample_count = std::stoi(head.substr(2));
        else if (head.rfind("Ts=", 0) == 0) cfg.sample_time = parse_double(head.substr(3));
        else if (head.rfind("runs=", 0) == 0) cfg.runs = std::stoi(head.substr(5));
        else if (head.rfind("seed=", 0) == 0) cfg.seed = std::stoull(head.substr(5));
        else if (head.rfind("grid=", 0) == 0) cfg.grid_size = std::stoi(head.substr(5));
        else if (head.rfind("burnin=", 0) == 0) cfg.burn_in = std::stoi(head.substr(7));
        else if (head.rfind("restarts=", 0) == 0) cfg.restarts = std::stoi(head.substr(9));
        else if (head.rfind("workers=", 0) == 0) cfg.workers = std::stoi(head.substr(8));
        else if (head == "target") {
            cfg.target_output = std::stoi(kv(line, "j"));
            cfg.target_input = std::stoi(kv(line, "k"));
        } else if (head == "predictors") {
            cfg.full_predictors = parse_int_list(kv(line, "full"));
            if (line.find("immersed=") != std::string::npos)
                cfg.immersed_predictors = parse_int_list(kv(line, "immersed"));
        } else if (head == "sweep") {
            ExperimentConfig::Sweep sw;
            auto edge = parse_int_list(kv(line, "edge"));
            if (edge.size() != 2) throw std::invalid_argument("sweep edge needs from,to");
            sw.from = edge[0];
            sw.to = edge[1];
            sw.gains = parse_coeff_list(kv(line, "gains"));
            cfg.sweep = sw;
        } else if (head == "orders") {
            BJStructure::Input in;
            in.nb = std::stoi(kv(line, "nb"));
            in.nf = std::stoi(kv(line, "nf"));
            in.delay = std::stoi(kv(line, "delay"));
            cfg.order_overrides[{kv(line, "setup"), std::stoi(kv(line, "input"))}] = in;
        } else if (head == "noise_orders") {
            cfg.noise_order_overrides[kv(line, "setup")] = {std::stoi(kv(line, "nc")),
                                                            std::stoi(kv(line, "nd"))};
        } else {
            throw std::invalid_argument("unknown experiment key: " + head);
        }
    }

    NetworkModel model = cfg.network();
    if (cfg.target_output == 0)
        throw std::invalid_argument("experiment config needs 'target j=<j> k=<k>'");
    if (cfg.full_predictors.empty()) cfg.full_predictors = model.in_neighbors(cfg.target_output);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_file(path));
}

ExperimentConfig config_from_manifest(const std::string& manifest_text) {
    const std::string marker = "--- config ---\n";
    auto pos = manifest_text.find(marker);
    if (pos == std::string::npos)
        throw std::invalid_argument("manifest has no embedded config section");
    return parse_experiment_config(manifest_text.substr(pos + marker.size()));
}

namespace {

// Input ordering for the MISO fit: target input first, then the remaining
// predictors ascending.
std::vector<int> ordered_inputs(int target_input, const std::vector<int>& predictors) {
    std::vector<int> out{target_input};
    std::vector<int> rest;
    for (int p : predictors)
        if (p != target_input) rest.push_back(p);
    std::sort(rest.begin(), rest.end());
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

BJStructure::Input orders_of(const RationalTransfer& tf) {
    BJStructure::Input in;
    in.nb = tf.num().degree() + 1;
    in.nf = tf.den().degree();
    in.delay = tf.delay();
    return in;
}

BJStructure derive_structure(const ExperimentConfig& cfg, const NetworkModel& model,
                             const std::string& setup, const std::vector<int>& inputs,
                             const std::map<int, RationalTransfer>* lumped) {
    BJStructure s;
    for (int node : inputs) {
        BJStructure::Input in;
        auto it = cfg.order_overrides.find({setup, node});
        if (it != cfg.order_overrides.end()) {
            in = it->second;
        } else if (lumped) {
            in = orders_of(lumped->at(node));
        } else {
            in = orders_of(model.module(cfg.target_output, node));
        }
        s.inputs.push_back(in);
    }
    auto nn = cfg.noise_order_overrides.find(setup);
    if (nn != cfg.noise_order_overrides.end()) {
        s.nc = nn->second.first;
        s.nd = nn->second.second;
    }
    return s;
}

double whiteness_pass(const std::vector<double>& eps) {
    const size_t n = eps.size();
    double mean = 0.0;
    for (double e : eps) mean += e;
    mean /= static_cast<double>(n);
    double r0 = 0.0;
    for (double e : eps) r0 += (e - mean) * (e - mean);
    if (r0 <= 0.0) return 1.0;
    const double bound = 3.0 / std::sqrt(static_cast<double>(n));
    int pass = 0;
    for (int tau = 1; tau <= 20; ++tau) {
        double r = 0.0;
        for (size_t t = static_cast<size_t>(tau); t < n; ++t)
            r += (eps[t] - mean) * (eps[t - static_cast<size_t>(tau)] - mean);
        if (std::abs(r / r0) < bound) ++pass;
    }
    return static_cast<double>(pass) / 20.0;
}

struct RunOutcome {
    bool ok = false;
    std::vector<std::complex<double>> target_response;
    Eigen::MatrixXd target_block;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd theta;
    CovarianceCurve delta;
    double sigma2 = 0.0;
    int iterations = 0;
    bool converged = false;
    double whiteness = 0.0;
};

void parallel_for(int count, int workers, const std::function<void(int)>& body) {
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

ResultBundle run_montecarlo(const ExperimentConfig& config) {
    config.validate();
    const NetworkModel base_model = config.network();
    const FrequencyGrid grid = FrequencyGrid::uniform(static_cast<size_t>(config.grid_size));
    const int j = config.target_output;
    const int k = config.target_input;
    const bool have_immersed = !config.immersed_predictors.empty();

    std::vector<double> gains{1.0};
    if (config.sweep) gains = config.sweep->gains;

    ResultBundle bundle;
    bundle.config = config;
    bundle.grid = grid;

    for (double gain : gains) {
        NetworkModel model = base_model;
        if (config.sweep)
            model.set_module(config.sweep->to, config.sweep->from,
                             base_model.module(config.sweep->to, config.sweep->from).scaled(gain));
        auto report = model.validate();
        if (!report.ok())
            throw std::runtime_error("sweep point gain=" + format_double(gain) +
                                     " invalid:\n" + report.str());

        SweepPointResult point;
        point.gain = gain;

        // Immersion of this sweep point (exact lumped transfers give the
        // immersed fit its oracle orders).
        PredictorSet ps{j, k, std::set<int>(config.immersed_predictors.begin(),
                                            config.immersed_predictors.end())};
        std::optional<ImmersedNetwork> im;
        if (have_immersed) im = immerse(model, ps, grid);

        const auto full_inputs = ordered_inputs(k, config.full_predictors);
        BJStructure full_struct = derive_structure(config, model, "full", full_inputs, nullptr);
        std::vector<int> imm_inputs;
        BJStructure imm_struct;
        if (have_immersed) {
            imm_inputs = ordered_inputs(k, config.immersed_predictors);
            if (!im->exact_available)
                throw std::runtime_error(
                    "immersed fit orders unavailable: exact lumped transfers missing "
                    "(supply 'orders setup=immersed ...' overrides)");
            imm_struct = derive_structure(config, model, "immersed", imm_inputs, &im->lumped_exact);
        }

        // Analytic (oracle) covariance machinery.
        {
            std::vector<int> others(full_inputs.begin() + 1, full_inputs.end());
            SpectralBlock full_block = build_spectral_block(model, j, k, others, grid);
            std::vector<double> phi_v = model.noise(j).spectrum(grid.points());
            point.asymptotic_full = asymptotic_cov_full(full_block, full_struct.param_count(),
                                                        config.sample_count, phi_v);
            if (have_immersed) {
                SpectralBlock imm_block = build_spectral_block_immersed(model, *im);
                point.asymptotic_immersed =
                    asymptotic_cov_immersed(imm_block, imm_struct.param_count(),
                                            config.sample_count, im->immersed_noise_spectrum);
                point.condition =
                    theorem1_condition(full_block, full_struct.param_count(), imm_block,
                                       imm_struct.param_count(), phi_v,
                                       im->immersed_noise_spectrum);
            }
        }

        // Monte-Carlo campaign: same record feeds both setups in every run.
        const int runs = config.runs;
        std::vector<RunOutcome> full_out(static_cast<size_t>(runs));
        std::vector<RunOutcome> imm_out(static_cast<size_t>(runs));
        point.run_seeds.resize(static_cast<size_t>(runs));
        point.record_hashes.resize(static_cast<size_t>(runs));

        auto run_one = [&](int i) {
            const std::uint64_t run_seed = config.seed + static_cast<std::uint64_t>(i);
            point.run_seeds[static_cast<size_t>(i)] = run_seed;
            SimulateOptions sim_opts;
            sim_opts.burn_in = config.burn_in;
            SignalRecord rec =
                simulate(model, config.sample_count, config.sample_time, run_seed, sim_opts);
            point.record_hashes[static_cast<size_t>(i)] = record_hash(rec);

            auto fit_setup = [&](const BJStructure& s, const std::vector<int>& inputs,
                                 RunOutcome& out) {
                try {
                    IdentifyData data;
                    data.y = rec.w[static_cast<size_t>(j - 1)];
                    for (int node : inputs) data.inputs.push_back(rec.w[static_cast<size_t>(node - 1)]);
                    FitOptions fo;
                    fo.restarts = config.restarts;
                    fo.seed = run_seed;
                    fo.response_grid = grid;
                    FitResult fit = fit_pem(s, data, fo);
                    if (!std::isfinite(fit.sigma2) || fit.covariance.size() == 0) return;
                    out.target_response = fit.module_response[0];
                    const int m = s.inputs[0].nb + s.inputs[0].nf;
                    out.target_block = fit.covariance.block(0, 0, m, m);
                    out.covariance = fit.covariance;
                    out.theta = fit.theta;
                    out.delta = module_response_covariance(fit, 0, grid);
                    out.sigma2 = fit.sigma2;
                    out.iterations = fit.iterations;
                    out.converged = fit.converged;
                    out.whiteness = whiteness_pass(predict(s, fit.theta, data).residual);
                    out.ok = true;
                } catch (const std::exception&) {
                    out.ok = false;
                }
            };
            fit_setup(full_struct, full_inputs, full_out[static_cast<size_t>(i)]);
            if (have_immersed) fit_setup(imm_struct, imm_inputs, imm_out[static_cast<size_t>(i)]);
        };
        parallel_for(runs, config.workers, run_one);

        auto summarize = [&](const std::vector<RunOutcome>& outs, const BJStructure& s,
                             const std::string& name, SetupDiagnostics& diag,
                             CovarianceCurve& sample, CovarianceCurve& delta) {
            diag.name = name;
            diag.n_params = s.param_count();
            std::vector<std::vector<std::complex<double>>> responses;
            Eigen::MatrixXd block_sum;
            Eigen::MatrixXd cov_sum;
            std::vector<double> delta_sum(grid.size(), 0.0);
            for (int i = 0; i < runs; ++i) {
                const auto& o = outs[static_cast<size_t>(i)];
                if (!o.ok) {
                    diag.excluded_runs++;
                    if (std::find(point.excluded_runs.begin(), point.excluded_runs.end(), i) ==
                        point.excluded_runs.end())
                        point.excluded_runs.push_back(i);
                    continue;
                }
                diag.included_runs++;
                diag.converged_runs += o.converged ? 1 : 0;
                diag.mean_iterations += o.iterations;
                diag.mean_sigma2 += o.sigma2;
                diag.whiteness_pass_fraction += o.whiteness;
                diag.run_thetas.push_back(o.theta);
                diag.run_cov_diagonals.push_back(o.covariance.diagonal());
                responses.push_back(o.target_response);
                if (block_sum.size() == 0) {
                    block_sum = o.target_block;
                    cov_sum = o.covariance;
                } else {
                    block_sum += o.target_block;
                    cov_sum += o.covariance;
                }
                for (size_t g = 0; g < grid.size(); ++g) delta_sum[g] += o.delta.values[g];
            }
            if (diag.included_runs == 0)
                throw std::runtime_error("sweep point gain=" + format_double(point.gain) +
                                         ": all " + name + " fits failed");
            const double inv = 1.0 / diag.included_runs;
            diag.mean_iterations *= inv;
            diag.mean_sigma2 *= inv;
            diag.whiteness_pass_fraction *= inv;
            diag.mean_target_block = block_sum * inv;
            Eigen::MatrixXd mean_cov = cov_sum * inv;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(
                0.5 * (mean_cov + mean_cov.transpose()));
            diag.logdet_inv_full_P = -ldlt.vectorD().array().abs().log().sum();

            if (responses.size() >= 2) {
                sample = sample_covariance(responses, grid);
                sample.label = "sample-" + name;
                sample.n_params = s.param_count();
            }
            delta.grid = grid;
            delta.label = "delta-" + name;
            delta.n_params = s.param_count();
            delta.data_length = config.sample_count;
            delta.values = delta_sum;
            for (auto& v : delta.values) v *= inv;
        };

        summarize(full_out, full_struct, "full", point.diag_full, point.sample_full,
                  point.delta_full);
        if (have_immersed)
            summarize(imm_out, imm_struct, "immersed", point.diag_immersed, point.sample_immersed,
                      point.delta_immersed);
        point.sample_available = point.diag_full.included_runs >= 2;

        const int worst_excluded = std::max(point.diag_full.excluded_runs,
                                            have_immersed ? point.diag_immersed.excluded_runs : 0);
        if (5 * worst_excluded > runs)
            throw std::runtime_error("sweep point gain=" + format_double(point.gain) +
                                     ": more than 20% of fits failed (" +
                                     std::to_string(worst_excluded) + "/" + std::to_string(runs) +
                                     ")");

        if (have_immersed) {
            point.d_verdict =
                d_optimality_compare(point.diag_full.mean_target_block,
                                     point.diag_immersed.mean_target_block);
            point.e_verdict =
                e_optimality_compare(point.diag_full.mean_target_block,
                                     point.diag_immersed.mean_target_block);
        }
        bundle.points.push_back(std::move(point));
    }
    return bundle;
}

std::string ResultBundle::manifest() const {
    std::string out = "netid monte-carlo manifest\n";
    out += "config_hash=" + std::to_string(config.hash()) + "\n";
    for (const auto& p : points) {
        out += "point gain=" + format_double(p.gain);
        out += " included_full=" + std::to_string(p.diag_full.included_runs);
        out += " included_immersed=" + std::to_string(p.diag_immersed.included_runs);
        out += " excluded=[";
        for (size_t i = 0; i < p.excluded_runs.size(); ++i)
            out += (i ? "," : "") + std::to_string(p.excluded_runs[i]);
        out += "]\n";
        out += "  seeds " + std::to_string(p.run_seeds.empty() ? 0 : p.run_seeds.front()) + ".." +
               std::to_string(p.run_seeds.empty() ? 0 : p.run_seeds.back()) + "\n";
        out += "  record_hashes=[";
        for (size_t i = 0; i < p.record_hashes.size(); ++i)
            out += (i ? "," : "") + std::to_string(p.record_hashes[i]);
        out += "]\n";
    }
    out += "sample covariance note: complex deviations enter as squared modulus\n";
    out += "--- config ---\n";
    out += config.canonical();
    return out;
}

std::string case_study_config_text(CaseStudyVariant variant) {
    // One parameter: a delayed gain whose lumped contribution merges into an
    // existing G23 tap. Two parameters: a two-tap numerator placed past the
    // G23 taps, so the lumped transfer genuinely grows.
    std::string g43 = variant == CaseStudyVariant::one_param_g43
                          ? "edge 3 4 num=[0.8] den=[1] delay=1\n"
                          : "edge 3 4 num=[0.8,-0.4] den=[1] delay=3\n";
    return std::string() +
           "node 1\nnode 2\nnode 3\nnode 4\n" +
           "noise 1 num=[1] den=[1] lambda=0.1\n" +
           "noise 2 num=[1] den=[1] lambda=0.1\n" +
           "noise 3 num=[1] den=[1] lambda=0.1\n" +
           "noise 4 num=[1] den=[1] lambda=0.1\n" +
           "edge 1 2 num=[0.4] den=[1,-0.5] delay=1\n" +   // target module, node 1 -> node 2
           "edge 2 1 num=[0.3] den=[1,-0.4] delay=1\n" +
           "edge 3 2 num=[0.4,0.25,0.15] den=[1] delay=1\n" +
           "edge 4 2 num=[1] den=[1] delay=1\n" +          // swept gain
           "edge 1 3 num=[0.35] den=[1,-0.3] delay=1\n" +
           g43 +
           "excite 1 white power=0.1\n" +
           "excite 3 white power=0.1\n" +
           "[experiment]\n" +
           "N=10000\nTs=1\nruns=100\nseed=20240\ngrid=512\nburnin=1000\nrestarts=5\n" +
           "target j=2 k=1\n" +
           "predictors full=[1,3,4] immersed=[1,3]\n" +
           "sweep edge=4,2 gains=[0.005,0.05,0.5,1]\n";
}

ResultBundle reproduce_case_study(CaseStudyVariant variant, const CaseStudyOverrides& o) {
    ExperimentConfig cfg = parse_experiment_config(case_study_config_text(variant));
    if (o.runs) cfg.runs = *o.runs;
    if (o.sample_count) cfg.sample_count = *o.sample_count;
    if (o.seed) cfg.seed = *o.seed;
    if (o.grid_size) cfg.grid_size = *o.grid_size;
    if (o.workers) cfg.workers = *o.workers;
    return run_montecarlo(cfg);
}

namespace {

std::string two_curve_csv(const CovarianceCurve& a, const CovarianceCurve& b,
                          const std::string& col_a, const std::string& col_b) {
    std::string out = "omega," + col_a + "," + col_b + "\n";
    for (size_t i = 0; i < a.grid.size(); ++i)
        out += format_double(a.grid[i]) + "," + format_double(a.values[i]) + "," +
               format_double(b.values[i]) + "\n";
    return out;
}

}  // namespace

void export_plotdata(const ResultBundle& bundle, const std::string& which,
                     const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const bool all = which == "all";
    auto want = [&](const char* name) { return all || which == name; };
    const bool have_immersed = !bundle.config.immersed_predictors.empty();

    std::string summary =
        "gain,median_omega,sample_full,sample_immersed,asym_full,asym_immersed,"
        "n_full,n_immersed,d_verdict,e_verdict,logdet_inv_P_full,logdet_inv_P_immersed\n";

    for (const auto& p : bundle.points) {
        const std::string g = format_double(p.gain);
        if (want("sample")) {
            if (!p.sample_available)
                throw std::runtime_error("sample covariance unavailable at gain=" + g +
                                         " (fewer than 2 usable runs)");
            if (have_immersed)
                write_file(out_dir + "/sample_cov_gain" + g + ".csv",
                           two_curve_csv(p.sample_full, p.sample_immersed, "cov_full",
                                         "cov_immersed"));
            else
                write_file(out_dir + "/sample_cov_gain" + g + ".csv", curve_to_csv(p.sample_full));
        }
        if (want("asymptotic")) {
            if (have_immersed)
                write_file(out_dir + "/asymptotic_cov_gain" + g + ".csv",
                           two_curve_csv(p.asymptotic_full, p.asymptotic_immersed, "cov_full",
                                         "cov_immersed"));
            else
                write_file(out_dir + "/asymptotic_cov_gain" + g + ".csv",
                           curve_to_csv(p.asymptotic_full));
        }
        if (want("delta")) {
            if (have_immersed)
                write_file(out_dir + "/delta_cov_gain" + g + ".csv",
                           two_curve_csv(p.delta_full, p.delta_immersed, "cov_full",
                                         "cov_immersed"));
            else
                write_file(out_dir + "/delta_cov_gain" + g + ".csv", curve_to_csv(p.delta_full));
        }
        if (want("condition") && have_immersed) {
            if (p.condition.empty()) throw std::runtime_error("condition curve missing");
            write_file(out_dir + "/condition_gain" + g + ".csv",
                       condition_to_csv(bundle.grid, p.condition));
        }

        const size_t mid = bundle.grid.size() / 2;
        auto val = [&](const CovarianceCurve& c) {
            return c.values.empty() ? 0.0 : c.values[mid];
        };
        std::string dv = "n/a", ev = "n/a";
        if (have_immersed) {
            dv = p.d_verdict.order == DOptimalityOrder::equal
                     ? "equal"
                     : (p.d_verdict.order == DOptimalityOrder::a_better ? "full_better"
                                                                        : "immersed_better");
            switch (p.e_verdict) {
                case EOptimalityOrder::a_dominates: ev = "full_dominates"; break;
                case EOptimalityOrder::b_dominates: ev = "immersed_dominates"; break;
                case EOptimalityOrder::incomparable: ev = "incomparable"; break;
                case EOptimalityOrder::equal: ev = "equal"; break;
            }
        }
        summary += g + "," + format_double(bundle.grid[mid]) + "," + format_double(val(p.sample_full)) +
                   "," + format_double(val(p.sample_immersed)) + "," +
                   format_double(val(p.asymptotic_full)) + "," +
                   format_double(val(p.asymptotic_immersed)) + "," +
                   std::to_string(p.diag_full.n_params) + "," +
                   std::to_string(p.diag_immersed.n_params) + "," + dv + "," + ev + "," +
                   format_double(p.diag_full.logdet_inv_full_P) + "," +
                   format_double(p.diag_immersed.logdet_inv_full_P) + "\n";
    }

    write_file(out_dir + "/summary.csv", summary);
    write_file(out_dir + "/manifest.txt", bundle.manifest());

    std::string stub =
        "# Plot stub for the exported CSV files.\n"
        "# sample_cov_gain<g>.csv / asymptotic_cov_gain<g>.csv / delta_cov_gain<g>.csv:\n"
        "#   columns omega, cov_full, cov_immersed\n"
        "# condition_gain<g>.csv: columns omega, condition_value, sign\n"
        "import glob\n"
        "import matplotlib.pyplot as plt\n"
        "import pandas as pd\n"
        "for path in sorted(glob.glob('sample_cov_gain*.csv')):\n"
        "    d = pd.read_csv(path)\n"
        "    plt.figure()\n"
        "    plt.semilogy(d.omega, d.cov_full, ':', label='full-MISO')\n"
        "    plt.semilogy(d.omega, d.cov_immersed, '-', label='immersed')\n"
        "    plt.xlabel('omega [rad]')\n"
        "    plt.ylabel('sample covariance')\n"
        "    plt.title(path)\n"
        "    plt.legend()\n"
        "plt.show()\n";
    write_file(out_dir + "/plot_stub.py", stub);
}

}  // namespace netid
