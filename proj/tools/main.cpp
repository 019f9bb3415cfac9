#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "elbosum/cli.hpp"
#include "elbosum/serialize.hpp"

namespace {

// Precedence: defaults < config file < explicit flags.
int load_config_file(const std::string& path, elbosum::cli::RunConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "io error: cannot open config file: " << path << '\n';
        return elbosum::cli::kExitIoError;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        cfg = elbosum::cli::config_from_json(elbosum::serialize::json::parse(buffer.str()));
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return elbosum::cli::kExitBadConfig;
    }
    return -1;  // loaded fine
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exponential-family ELBO toolkit: generate data, fit by EM, verify the\n"
                 "stationary-point entropy identity, and certify the parameterization\n"
                 "criterion. Artifacts are reproducible JSON keyed by config and seed."};
    app.require_subcommand(1);

    std::string config_path;
    std::string model;
    std::string data;
    std::string out;
    std::string csv;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t draws = 50;
    std::size_t z_samples = 64;
    std::size_t threads = 1;
    std::size_t max_iters = 2000;
    double tol_elbo = 1e-10;
    double tol_grad = 1e-8;
    double tol_eq = 1e-6;
    double tol_criterion = 1e-8;
    std::vector<std::string> inputs;

    const auto add_shared = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file; explicit flags override it");
        sub->add_option("--model", model, "model JSON file, or inline JSON starting with '{'");
        sub->add_option("--data", data, "dataset JSON-lines file");
        sub->add_option("--seed", seed, "RNG seed (fit/verify: seeds the data-driven init)");
        sub->add_option("--out", out, "artifact output path (verify/criterion default: stdout)");
        sub->add_option("--csv", csv, "also write the fit trajectory as CSV here");
        sub->add_option("--tol-elbo", tol_elbo, "EM exit threshold on |delta ELBO|");
        sub->add_option("--tol-grad", tol_grad, "EM exit threshold on the gradient inf-norm");
        sub->add_option("--tol-eq", tol_eq, "verification tolerance on rel_gap");
        sub->add_option("--tol-criterion", tol_criterion, "criterion residual tolerance");
        sub->add_option("--draws", draws, "criterion: parameter points to sample");
        sub->add_option("--z-samples", z_samples, "criterion: latent draws per point");
        sub->add_option("--threads", threads, "worker threads (1 guarantees bit-stable output)");
        sub->add_option("--max-iters", max_iters, "EM iteration cap");
    };

    CLI::App* gen = app.add_subcommand("gen", "sample a dataset from a model");
    gen->add_option("--n", n, "number of rows to sample");
    add_shared(gen);
    CLI::App* fit = app.add_subcommand("fit", "fit a model to data by EM");
    add_shared(fit);
    CLI::App* verify =
        app.add_subcommand("verify", "fit (or load a fit) and check ELBO = entropy sum");
    add_shared(verify);
    CLI::App* criterion =
        app.add_subcommand("criterion", "certify the parameterization criterion numerically");
    add_shared(criterion);
    CLI::App* report = app.add_subcommand("report", "merge artifacts into a summary table");
    report->add_option("inputs", inputs, "artifact JSON files to merge");
    add_shared(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return elbosum::cli::kExitBadConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    elbosum::cli::RunConfig cfg;
    if (sub->count("--config") > 0) {
        const int rc = load_config_file(config_path, cfg);
        if (rc >= 0) return rc;
    }
    cfg.command = sub->get_name();
    if (sub->count("--model") > 0) cfg.model = model;
    if (sub->count("--data") > 0) cfg.data_path = data;
    if (sub->count("--seed") > 0) cfg.seed = seed;
    if (sub->count("--out") > 0) cfg.output_path = out;
    if (sub->count("--csv") > 0) cfg.csv_path = csv;
    if (sub->count("--tol-elbo") > 0) cfg.tol.tol_elbo = tol_elbo;
    if (sub->count("--tol-grad") > 0) cfg.tol.tol_grad = tol_grad;
    if (sub->count("--tol-eq") > 0) cfg.tol.tol_eq = tol_eq;
    if (sub->count("--tol-criterion") > 0) cfg.tol.tol_criterion = tol_criterion;
    if (sub->count("--draws") > 0) cfg.draws = draws;
    if (sub->count("--z-samples") > 0) cfg.z_samples = z_samples;
    if (sub->count("--threads") > 0) cfg.threads = threads;
    if (sub->count("--max-iters") > 0) cfg.max_iters = max_iters;
    if (sub->get_name() == "gen" && sub->count("--n") > 0) cfg.n = n;
    if (sub->get_name() == "report" && sub->count("inputs") > 0) cfg.inputs = inputs;

    return elbosum::cli::run(cfg);
}
