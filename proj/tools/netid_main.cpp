#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "netid/experiment.hpp"
#include "netid/identify.hpp"
#include "netid/immersion.hpp"
#include "netid/network_io.hpp"
#include "netid/variance.hpp"

namespace {

using namespace netid;

std::vector<int> parse_nodes(const std::string& s) {
    std::vector<int> out;
    for (double v : parse_coeff_list("[" + s + "]")) out.push_back(static_cast<int>(v));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local-module identification and variance analysis in LTI dynamic networks"};
    app.require_subcommand(1);

    // --- simulate ---
    auto* sim = app.add_subcommand("simulate", "Simulate a network and write a signal CSV");
    std::string sim_network, sim_out = "record.csv";
    int sim_n = 10000;
    double sim_ts = 1.0;
    std::uint64_t sim_seed = 1;
    int sim_burnin = 1000;
    sim->add_option("--network", sim_network, "network description file")->required();
    sim->add_option("--N", sim_n, "samples");
    sim->add_option("--Ts", sim_ts, "sample time [s]");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--burn-in", sim_burnin, "discarded start-up samples");
    sim->add_option("--out", sim_out, "output CSV path");

    // --- immerse ---
    auto* imm = app.add_subcommand("immerse", "Eliminate non-predictor nodes and report spectra");
    std::string imm_network, imm_out = "immersion.csv", imm_predictors;
    int imm_j = 0, imm_k = 0, imm_grid = 512;
    imm->add_option("--network", imm_network)->required();
    imm->add_option("--target-output", imm_j, "output node j")->required();
    imm->add_option("--target-input", imm_k, "input node k")->required();
    imm->add_option("--predictors", imm_predictors, "comma-separated predictor nodes")->required();
    imm->add_option("--grid", imm_grid, "frequency grid size");
    imm->add_option("--out", imm_out, "output CSV path");

    // --- identify ---
    auto* idf = app.add_subcommand("identify", "Fit a MISO Box-Jenkins node model to a record");
    std::string idf_data, idf_out, idf_inputs, idf_orders;
    int idf_output = 0, idf_grid = 512;
    std::uint64_t idf_seed = 0;
    idf->add_option("--data", idf_data, "signal CSV from `simulate`")->required();
    idf->add_option("--output-node", idf_output, "node index of the output signal")->required();
    idf->add_option("--inputs", idf_inputs, "comma-separated input node indices")->required();
    idf->add_option("--orders", idf_orders,
                    "per input nb:nf:delay, semicolon separated; optional trailing ;nc:nd");
    idf->add_option("--grid", idf_grid);
    idf->add_option("--seed", idf_seed);
    idf->add_option("--out", idf_out, "write the fit report here (stdout otherwise)");

    // --- variance ---
    auto* var = app.add_subcommand("variance", "Analytic covariance curves and the comparison condition");
    std::string var_network, var_out = "variance_out", var_full, var_immersed;
    int var_j = 0, var_k = 0, var_grid = 512, var_n = 10000;
    var->add_option("--network", var_network)->required();
    var->add_option("--target-output", var_j)->required();
    var->add_option("--target-input", var_k)->required();
    var->add_option("--full", var_full, "full predictor set (comma separated)");
    var->add_option("--immersed", var_immersed, "immersed predictor set (comma separated)");
    var->add_option("--grid", var_grid);
    var->add_option("--N", var_n, "data length entering the n/N factor");
    var->add_option("--out", var_out, "output directory");

    // --- montecarlo ---
    auto* mc = app.add_subcommand("montecarlo", "Run a seeded Monte-Carlo campaign from a config");
    std::string mc_config, mc_out = "mc_out", mc_manifest;
    std::uint64_t mc_seed = 0;
    int mc_runs = 0, mc_grid = 0, mc_workers = 0;
    mc->add_option("--config", mc_config, "experiment config file");
    mc->add_option("--from-manifest", mc_manifest, "re-run the config embedded in a manifest");
    mc->add_option("--seed", mc_seed, "override seed");
    mc->add_option("--runs", mc_runs, "override run count");
    mc->add_option("--grid", mc_grid, "override grid size");
    mc->add_option("--workers", mc_workers, "worker threads (0: hardware)");
    mc->add_option("--out", mc_out, "output directory");

    // --- case-study ---
    auto* cs = app.add_subcommand("case-study", "Reproduce the built-in four-node benchmark");
    std::string cs_variant = "one", cs_out = "case_study_out", cs_dump;
    std::uint64_t cs_seed = 0;
    int cs_runs = 0, cs_grid = 0, cs_n = 0, cs_workers = 0;
    cs->add_option("--variant", cs_variant, "one | two (parameters of G43)");
    cs->add_option("--runs", cs_runs, "override run count");
    cs->add_option("--N", cs_n, "override data length");
    cs->add_option("--seed", cs_seed, "override seed");
    cs->add_option("--grid", cs_grid, "override grid size");
    cs->add_option("--workers", cs_workers);
    cs->add_option("--out", cs_out, "output directory");
    cs->add_option("--dump-config", cs_dump, "write the built-in config to this path and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            auto model = load_network(sim_network);
            SimulateOptions opts;
            opts.burn_in = sim_burnin;
            auto rec = simulate(model, sim_n, sim_ts, sim_seed, opts);
            write_file(sim_out, record_to_csv(rec));
            std::cout << "wrote " << sim_out << " (" << sim_n << " samples, seed " << sim_seed
                      << ")\n";
        } else if (*imm) {
            auto model = load_network(imm_network);
            PredictorSet ps{imm_j, imm_k, {}};
            for (int p : parse_nodes(imm_predictors)) ps.predictors.insert(p);
            auto grid = FrequencyGrid::uniform(static_cast<size_t>(imm_grid));
            auto verdict = check_consistency_conditions(model, ps);
            if (!verdict.satisfied) {
                std::cerr << "consistency conditions violated:\n";
                for (const auto& v : verdict.violations) std::cerr << "  " << v.str() << "\n";
                return 2;
            }
            std::cout << "consistency conditions satisfied (" << verdict.unchecked << ")\n";
            auto im = immerse(model, ps, grid);
            write_file(imm_out, immersion_report_csv(im));
            if (im.exact_available)
                for (const auto& [node, tf] : im.lumped_exact)
                    std::cout << "G_lumped(" << imm_j << "," << node << "): " << tf.serialize()
                              << "\n";
            std::cout << "wrote " << imm_out << "\n";
        } else if (*idf) {
            std::ifstream f(idf_data);
            if (!f) throw std::runtime_error("cannot open " + idf_data);
            SignalRecord rec = record_from_csv(f);
            auto inputs = parse_nodes(idf_inputs);
            IdentifyData data;
            data.y = rec.w.at(static_cast<size_t>(idf_output - 1));
            for (int node : inputs) data.inputs.push_back(rec.w.at(static_cast<size_t>(node - 1)));

            BJStructure s;
            if (idf_orders.empty())
                throw std::runtime_error("--orders is required (no true system available)");
            std::stringstream ss(idf_orders);
            std::string item;
            std::vector<std::vector<int>> parsed;
            while (std::getline(ss, item, ';')) {
                std::vector<int> nums;
                std::stringstream is(item);
                std::string n;
                while (std::getline(is, n, ':')) nums.push_back(std::stoi(n));
                parsed.push_back(nums);
            }
            for (size_t i = 0; i < inputs.size(); ++i) {
                if (i >= parsed.size() || parsed[i].size() != 3)
                    throw std::runtime_error("--orders needs nb:nf:delay per input");
                s.inputs.push_back({parsed[i][0], parsed[i][1], parsed[i][2]});
            }
            if (parsed.size() > inputs.size()) {
                if (parsed.back().size() != 2) throw std::runtime_error("trailing noise orders must be nc:nd");
                s.nc = parsed.back()[0];
                s.nd = parsed.back()[1];
            }
            FitOptions fo;
            fo.seed = idf_seed;
            fo.response_grid = FrequencyGrid::uniform(static_cast<size_t>(idf_grid));
            FitResult fit = fit_pem(s, data, fo);
            std::string report = fit_report(fit);
            if (idf_out.empty()) {
                std::cout << report;
            } else {
                write_file(idf_out, report);
                write_file(idf_out + ".responses.csv", fit_responses_csv(fit));
                std::cout << "wrote " << idf_out << "\n";
            }
        } else if (*var) {
            auto model = load_network(var_network);
            auto grid = FrequencyGrid::uniform(static_cast<size_t>(var_grid));
            std::filesystem::create_directories(var_out);
            auto full = var_full.empty() ? model.in_neighbors(var_j) : parse_nodes(var_full);
            std::vector<int> others;
            for (int p : full)
                if (p != var_k) others.push_back(p);
            auto full_block = build_spectral_block(model, var_j, var_k, others, grid);
            auto phi_v = model.noise(var_j).spectrum(grid.points());
            // n for the oracle curves: parameters of the true transfers.
            int n_full = 0;
            for (int p : full) {
                const auto& tf = model.module(var_j, p);
                n_full += tf.num().degree() + 1 + tf.den().degree();
            }
            auto curve_full = asymptotic_cov_full(full_block, n_full, var_n, phi_v);
            write_file(var_out + "/asymptotic_full.csv", curve_to_csv(curve_full));
            if (!var_immersed.empty()) {
                PredictorSet ps{var_j, var_k, {}};
                for (int p : parse_nodes(var_immersed)) ps.predictors.insert(p);
                auto im = immerse(model, ps, grid);
                if (!im.exact_available)
                    throw std::runtime_error("immersed parameter count unavailable (no exact lumping)");
                int n_imm = 0;
                for (const auto& [node, tf] : im.lumped_exact)
                    n_imm += tf.num().degree() + 1 + tf.den().degree();
                auto imm_block = build_spectral_block_immersed(model, im);
                auto curve_imm = asymptotic_cov_immersed(imm_block, n_imm, var_n,
                                                         im.immersed_noise_spectrum);
                auto condition = theorem1_condition(full_block, n_full, imm_block, n_imm, phi_v,
                                                    im.immersed_noise_spectrum);
                write_file(var_out + "/asymptotic_immersed.csv", curve_to_csv(curve_imm));
                write_file(var_out + "/condition.csv", condition_to_csv(grid, condition));
            }
            std::cout << "wrote analytic curves to " << var_out << "\n";
        } else if (*mc) {
            ExperimentConfig cfg;
            if (!mc_manifest.empty())
                cfg = config_from_manifest(read_file(mc_manifest));
            else if (!mc_config.empty())
                cfg = load_experiment_config(mc_config);
            else
                throw std::runtime_error("montecarlo needs --config or --from-manifest");
            if (mc_seed) cfg.seed = mc_seed;
            if (mc_runs) cfg.runs = mc_runs;
            if (mc_grid) cfg.grid_size = mc_grid;
            if (mc_workers) cfg.workers = mc_workers;
            auto bundle = run_montecarlo(cfg);
            export_plotdata(bundle, "all", mc_out);
            std::cout << "wrote campaign results to " << mc_out << "\n";
        } else if (*cs) {
            CaseStudyVariant variant;
            if (cs_variant == "one" || cs_variant == "one_param_g43")
                variant = CaseStudyVariant::one_param_g43;
            else if (cs_variant == "two" || cs_variant == "two_param_g43")
                variant = CaseStudyVariant::two_param_g43;
            else
                throw std::runtime_error("--variant must be 'one' or 'two'");
            if (!cs_dump.empty()) {
                write_file(cs_dump, case_study_config_text(variant));
                std::cout << "wrote " << cs_dump << "\n";
                return 0;
            }
            CaseStudyOverrides o;
            if (cs_runs) o.runs = cs_runs;
            if (cs_n) o.sample_count = cs_n;
            if (cs_seed) o.seed = cs_seed;
            if (cs_grid) o.grid_size = cs_grid;
            if (cs_workers) o.workers = cs_workers;
            auto bundle = reproduce_case_study(variant, o);
            export_plotdata(bundle, "all", cs_out);
            std::cout << "wrote case-study results to " << cs_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
