#include "elbosum/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "elbosum/criterion.hpp"
#include "elbosum/decompose.hpp"
#include "elbosum/inference.hpp"
#include "elbosum/models.hpp"

namespace elbosum::cli {

namespace {

using serialize::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return std::move(buffer).str();
}

// Temp-file-then-rename keeps failed runs from leaving partial artifacts.
void write_atomic(const std::string& path, std::string_view content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw IoError("write failed: " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot move artifact into place: " + path);
    }
}

bool looks_inline(const std::string& s) {
    const std::size_t i = s.find_first_not_of(" \t\r\n");
    return i != std::string::npos && s[i] == '{';
}

json parse_model_doc(const RunConfig& cfg) {
    if (cfg.model.empty()) throw ConfigError(cfg.command + " requires --model");
    const std::string text = looks_inline(cfg.model) ? cfg.model : read_file(cfg.model);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed model JSON: ") + e.what());
    }
}

models::ModelSpec model_from_doc(const json& doc) {
    try {
        return serialize::model_from_json(doc);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model document is missing fields: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("invalid model parameters: ") + e.what());
    }
}

models::Dataset load_dataset(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw ConfigError(cfg.command + " requires --data");
    const std::string text = read_file(cfg.data_path);
    try {
        return serialize::dataset_from_jsonl(text);
    } catch (const std::exception& e) {
        throw IoError("malformed dataset " + cfg.data_path + ": " + e.what());
    }
}

void emit(const RunConfig& cfg, const json& artifact) {
    const std::string text = serialize::dump_json(artifact);
    if (cfg.output_path.empty())
        std::cout << text;
    else
        write_atomic(cfg.output_path, text);
}

inference::FitReport fit_pipeline(const RunConfig& cfg, const models::ModelSpec& prototype,
                                  const models::Dataset& data) {
    const models::ModelSpec start =
        cfg.seed ? inference::init_from_data(prototype, data, *cfg.seed) : prototype;
    inference::FitOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.tol_elbo = cfg.tol.tol_elbo;
    opts.tol_grad = cfg.tol.tol_grad;
    opts.threads = cfg.threads;
    return inference::fit_em(start, data, opts);
}

int run_gen(const RunConfig& cfg) {
    if (cfg.n == 0) throw ConfigError("gen requires --n >= 1");
    if (cfg.output_path.empty()) throw ConfigError("gen requires --out");
    const models::ModelSpec model = model_from_doc(parse_model_doc(cfg));
    const std::uint64_t seed = cfg.seed.value_or(0);
    const models::Dataset data = models::sample(model, cfg.n, seed);
    json extra = json::object();
    extra["config"] = config_to_json(cfg);
    write_atomic(cfg.output_path,
                 serialize::dataset_to_jsonl(data, serialize::family_tag(model), seed, extra));
    return kExitPass;
}

int run_fit(const RunConfig& cfg) {
    if (cfg.output_path.empty()) throw ConfigError("fit requires --out");
    const models::ModelSpec model = model_from_doc(parse_model_doc(cfg));
    const models::Dataset data = load_dataset(cfg);
    const inference::FitReport report = fit_pipeline(cfg, model, data);

    json artifact = json::object();
    artifact["config"] = config_to_json(cfg);
    artifact["fit"] = serialize::fit_report_to_json(report);
    emit(cfg, artifact);
    if (!cfg.csv_path.empty()) write_atomic(cfg.csv_path, serialize::trajectory_to_csv(report));
    return kExitPass;
}

int run_verify(const RunConfig& cfg) {
    const json model_doc = parse_model_doc(cfg);
    const models::Dataset data = load_dataset(cfg);

    // --model may point at a finished fit artifact, in which case the fit is
    // loaded instead of recomputed.
    inference::FitReport report;
    if (model_doc.contains("fit")) {
        try {
            report = serialize::fit_report_from_json(model_doc.at("fit"));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("malformed fit artifact: ") + e.what());
        }
    } else {
        report = fit_pipeline(cfg, model_from_doc(model_doc), data);
    }

    const decompose::VerificationVerdict verdict =
        decompose::verify_stationary(report, data, cfg.tol.tol_eq);

    json artifact = json::object();
    artifact["config"] = config_to_json(cfg);
    artifact["fit"] = serialize::fit_report_to_json(report);
    artifact["verdict"] = serialize::verdict_to_json(verdict);
    emit(cfg, artifact);
    if (!cfg.csv_path.empty())
        write_atomic(cfg.csv_path, serialize::verification_to_csv(report, verdict));
    return verdict.pass ? kExitPass : kExitFailure;
}

int run_criterion(const RunConfig& cfg) {
    if (cfg.draws == 0) throw ConfigError("criterion requires --draws >= 1");
    const models::ModelSpec model = model_from_doc(parse_model_doc(cfg));
    const auto certificates = criterion::certify_model(
        model, cfg.draws, cfg.z_samples, cfg.seed.value_or(0), cfg.tol.tol_criterion);

    bool all_pass = true;
    json certs = json::array();
    for (const auto& cert : certificates) {
        all_pass = all_pass && cert.pass;
        certs.push_back(serialize::certificate_to_json(cert));
    }
    json artifact = json::object();
    artifact["config"] = config_to_json(cfg);
    artifact["all_pass"] = all_pass;
    artifact["certificates"] = std::move(certs);
    emit(cfg, artifact);
    return all_pass ? kExitPass : kExitFailure;
}

struct ReportRow {
    std::string source;
    std::string kind;
    bool pass = false;
    // Headline metrics; quiet NaN marks "not applicable" and prints blank.
    double elbo = std::numeric_limits<double>::quiet_NaN();
    double entropy_sum = std::numeric_limits<double>::quiet_NaN();
    double rel_gap = std::numeric_limits<double>::quiet_NaN();
    double max_residual = std::numeric_limits<double>::quiet_NaN();
};

ReportRow classify_artifact(const std::string& path, const json& doc) {
    ReportRow row;
    row.source = path;
    if (doc.contains("verdict")) {
        const json& v = doc.at("verdict");
        row.kind = "verify";
        row.pass = v.at("pass").get<bool>();
        row.elbo = v.at("elbo").get<double>();
        row.entropy_sum = v.at("entropy_sum").get<double>();
        row.rel_gap = v.at("rel_gap").get<double>();
        return row;
    }
    if (doc.contains("certificates")) {
        row.kind = "criterion";
        row.pass = doc.at("all_pass").get<bool>();
        double worst = 0.0;
        for (const json& cert : doc.at("certificates")) {
            worst = std::max(worst, cert.at("part_b").at("residual_rel").get<double>());
            const json& pa = cert.at("part_a");
            if (pa.at("applicable").get<bool>())
                worst = std::max(worst, pa.at("residual_rel").get<double>());
        }
        row.max_residual = worst;
        return row;
    }
    if (doc.contains("fit")) {
        const json& f = doc.at("fit");
        row.kind = "fit";
        row.pass = f.at("converged").get<bool>();
        const auto& traj = f.at("elbo_trajectory");
        if (!traj.empty()) row.elbo = traj.back().get<double>();
        return row;
    }
    throw IoError("unrecognized artifact (no verdict/certificates/fit): " + path);
}

std::string metric_cell(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int run_report(const RunConfig& cfg) {
    if (cfg.inputs.empty()) throw ConfigError("report requires at least one input artifact");
    std::vector<ReportRow> rows;
    for (const std::string& path : cfg.inputs) {
        const std::string text = read_file(path);
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::exception& e) {
            throw IoError("malformed artifact " + path + ": " + e.what());
        }
        try {
            rows.push_back(classify_artifact(path, doc));
        } catch (const json::exception& e) {
            throw IoError("artifact " + path + " is missing fields: " + e.what());
        }
    }

    std::string table;
    char line[512];
    std::snprintf(line, sizeof line, "%-10s %-5s %-24s %-24s %-24s %-24s %s\n", "kind", "pass",
                  "elbo", "entropy_sum", "rel_gap", "max_residual", "source");
    table += line;
    bool all_pass = true;
    std::string csv = "source,kind,pass,elbo,entropy_sum,rel_gap,max_residual\n";
    for (const ReportRow& row : rows) {
        all_pass = all_pass && row.pass;
        std::snprintf(line, sizeof line, "%-10s %-5s %-24s %-24s %-24s %-24s %s\n",
                      row.kind.c_str(), row.pass ? "yes" : "NO", metric_cell(row.elbo).c_str(),
                      metric_cell(row.entropy_sum).c_str(), metric_cell(row.rel_gap).c_str(),
                      metric_cell(row.max_residual).c_str(), row.source.c_str());
        table += line;
        csv += row.source + ',' + row.kind + ',' + (row.pass ? "true" : "false") + ',' +
               metric_cell(row.elbo) + ',' + metric_cell(row.entropy_sum) + ',' +
               metric_cell(row.rel_gap) + ',' + metric_cell(row.max_residual) + '\n';
    }
    std::cout << table;
    if (!cfg.output_path.empty()) write_atomic(cfg.output_path, csv);
    return all_pass ? kExitPass : kExitFailure;
}

void check_config(const RunConfig& cfg) {
    if (cfg.tol.tol_elbo <= 0.0 || cfg.tol.tol_grad <= 0.0 || cfg.tol.tol_eq <= 0.0 ||
        cfg.tol.tol_criterion <= 0.0)
        throw ConfigError("tolerances must be positive");
    if (cfg.threads == 0) throw ConfigError("--threads must be >= 1");
    if (cfg.max_iters == 0) throw ConfigError("--max-iters must be >= 1");
}

}  // namespace

RunConfig config_from_json(const json& doc) {
    RunConfig cfg;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "command") {
                cfg.command = value.get<std::string>();
            } else if (key == "model") {
                cfg.model = value.get<std::string>();
            } else if (key == "data") {
                cfg.data_path = value.get<std::string>();
            } else if (key == "seed") {
                if (!value.is_null()) cfg.seed = value.get<std::uint64_t>();
            } else if (key == "n") {
                cfg.n = value.get<std::size_t>();
            } else if (key == "draws") {
                cfg.draws = value.get<std::size_t>();
            } else if (key == "z_samples") {
                cfg.z_samples = value.get<std::size_t>();
            } else if (key == "threads") {
                cfg.threads = value.get<std::size_t>();
            } else if (key == "max_iters") {
                cfg.max_iters = value.get<std::size_t>();
            } else if (key == "out") {
                cfg.output_path = value.get<std::string>();
            } else if (key == "csv") {
                cfg.csv_path = value.get<std::string>();
            } else if (key == "inputs") {
                cfg.inputs = value.get<std::vector<std::string>>();
            } else if (key == "tolerances") {
                for (const auto& [tkey, tval] : value.items()) {
                    if (tkey == "tol_elbo") {
                        cfg.tol.tol_elbo = tval.get<double>();
                    } else if (tkey == "tol_grad") {
                        cfg.tol.tol_grad = tval.get<double>();
                    } else if (tkey == "tol_eq") {
                        cfg.tol.tol_eq = tval.get<double>();
                    } else if (tkey == "tol_criterion") {
                        cfg.tol.tol_criterion = tval.get<double>();
                    } else {
                        throw std::invalid_argument("unknown tolerance field: " + tkey);
                    }
                }
            } else {
                throw std::invalid_argument("unknown config field: " + key);
            }
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config field has the wrong type: ") + e.what());
    }
    return cfg;
}

json config_to_json(const RunConfig& cfg) {
    json doc = json::object();
    doc["command"] = cfg.command;
    doc["model"] = cfg.model;
    doc["data"] = cfg.data_path;
    doc["seed"] = cfg.seed ? json(*cfg.seed) : json();
    doc["n"] = cfg.n;
    doc["draws"] = cfg.draws;
    doc["z_samples"] = cfg.z_samples;
    doc["threads"] = cfg.threads;
    doc["max_iters"] = cfg.max_iters;
    doc["tolerances"] = {{"tol_elbo", cfg.tol.tol_elbo},
                         {"tol_grad", cfg.tol.tol_grad},
                         {"tol_eq", cfg.tol.tol_eq},
                         {"tol_criterion", cfg.tol.tol_criterion}};
    doc["out"] = cfg.output_path;
    doc["csv"] = cfg.csv_path;
    doc["inputs"] = cfg.inputs;
    return doc;
}

int run(const RunConfig& cfg) {
    try {
        check_config(cfg);
        if (cfg.command == "gen") return run_gen(cfg);
        if (cfg.command == "fit") return run_fit(cfg);
        if (cfg.command == "verify") return run_verify(cfg);
        if (cfg.command == "criterion") return run_criterion(cfg);
        if (cfg.command == "report") return run_report(cfg);
        throw ConfigError("unknown command: " + (cfg.command.empty() ? "<none>" : cfg.command));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitBadConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIoError;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace elbosum::cli
