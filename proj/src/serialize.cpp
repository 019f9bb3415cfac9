#include "elbosum/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace elbosum::serialize {

namespace {

using models::ComponentFamily;
using models::EfMixtureModel;
using models::LinearGaussianModel;
using models::ModelSpec;
using models::NoiseKind;
using models::SbnModel;

void append_double(std::string& out, double v) {
    if (!std::isfinite(v)) throw std::domain_error("dump_json: non-finite number in artifact");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
    // Keep a decimal point so readers see a float (and so "-0" keeps its
    // sign instead of collapsing to integer zero).
    if (out.find_first_of(".eE", out.size() - std::strlen(buf)) == std::string::npos)
        out += ".0";
}

void append_escaped(std::string& out, std::string_view s) {
    out += '"';
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned char>(c));
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void write_value(std::string& out, const json& v, int indent, int depth) {
    const auto newline = [&](int level) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * level), ' ');
    };
    switch (v.type()) {
        case json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            bool first = true;
            for (const auto& [key, item] : v.items()) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                append_escaped(out, key);
                out += indent < 0 ? ":" : ": ";
                write_value(out, item, indent, depth + 1);
            }
            newline(depth);
            out += '}';
            return;
        }
        case json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            out += '[';
            bool first = true;
            for (const auto& item : v) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                write_value(out, item, indent, depth + 1);
            }
            newline(depth);
            out += ']';
            return;
        }
        case json::value_t::string: append_escaped(out, v.get_ref<const std::string&>()); return;
        case json::value_t::boolean: out += v.get<bool>() ? "true" : "false"; return;
        case json::value_t::number_integer:
            out += std::to_string(v.get<std::int64_t>());
            return;
        case json::value_t::number_unsigned:
            out += std::to_string(v.get<std::uint64_t>());
            return;
        case json::value_t::number_float: append_double(out, v.get<double>()); return;
        case json::value_t::null: out += "null"; return;
        default: throw std::domain_error("dump_json: unsupported JSON value type");
    }
}

std::string component_family_tag(ComponentFamily family) {
    switch (family) {
        case ComponentFamily::GaussianDiagonal: return "gaussian-diagonal";
        case ComponentFamily::Gamma: return "gamma";
        case ComponentFamily::PoissonProduct: return "poisson-product";
    }
    throw std::logic_error("component_family_tag: unhandled family");
}

ComponentFamily component_family_from_tag(const std::string& tag) {
    if (tag == "gaussian-diagonal") return ComponentFamily::GaussianDiagonal;
    if (tag == "gamma") return ComponentFamily::Gamma;
    if (tag == "poisson-product") return ComponentFamily::PoissonProduct;
    throw std::invalid_argument("unknown component family tag: " + tag);
}

}  // namespace

std::string dump_json(const json& value, int indent) {
    std::string out;
    write_value(out, value, indent, 0);
    if (indent >= 0) out += '\n';
    return out;
}

std::string family_tag(const ModelSpec& model) {
    if (std::holds_alternative<SbnModel>(model)) return "sbn";
    if (std::holds_alternative<LinearGaussianModel>(model)) return "linear-gaussian";
    return "mixture";
}

json matrix_to_json(const numerics::Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i)
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    return rows;
}

numerics::Matrix matrix_from_json(const json& doc) {
    if (!doc.is_array()) throw std::invalid_argument("matrix JSON must be an array of rows");
    const std::size_t n_rows = doc.size();
    if (n_rows == 0) return numerics::Matrix();
    const std::size_t n_cols = doc.at(0).size();
    numerics::Matrix m(n_rows, n_cols);
    for (std::size_t i = 0; i < n_rows; ++i) {
        const auto row = doc.at(i).get<std::vector<double>>();
        if (row.size() != n_cols)
            throw std::invalid_argument("matrix JSON rows must have equal length");
        for (std::size_t j = 0; j < n_cols; ++j) m(i, j) = row[j];
    }
    return m;
}

json model_to_json(const ModelSpec& model) {
    json doc = json::object();
    doc["family"] = family_tag(model);
    if (const auto* sbn = std::get_if<SbnModel>(&model)) {
        doc["H"] = sbn->H;
        doc["D"] = sbn->D;
        doc["pi"] = sbn->pi;
        doc["W"] = matrix_to_json(sbn->W);
        doc["mu"] = sbn->mu;
        return doc;
    }
    if (const auto* lg = std::get_if<LinearGaussianModel>(&model)) {
        doc["H"] = lg->H;
        doc["D"] = lg->D;
        doc["prior_mean"] = lg->prior_mean;
        doc["prior_var"] = lg->prior_var;
        doc["trainable_prior"] = lg->trainable_prior;
        doc["W"] = matrix_to_json(lg->W);
        doc["mu"] = lg->mu;
        doc["noise_kind"] = lg->noise_kind == NoiseKind::Scalar ? "scalar" : "diagonal";
        doc["noise_var"] = lg->noise_var;
        return doc;
    }
    const auto& mix = std::get<EfMixtureModel>(model);
    doc["C"] = mix.C;
    doc["D"] = mix.D;
    doc["pi"] = mix.pi;
    doc["component_family"] = component_family_tag(mix.component_family);
    doc["components"] = mix.components;
    return doc;
}

ModelSpec model_from_json(const json& doc) {
    const auto family = doc.at("family").get<std::string>();
    ModelSpec model;
    if (family == "sbn") {
        SbnModel m;
        m.H = doc.at("H").get<std::size_t>();
        m.D = doc.at("D").get<std::size_t>();
        m.pi = doc.at("pi").get<std::vector<double>>();
        m.W = matrix_from_json(doc.at("W"));
        m.mu = doc.at("mu").get<std::vector<double>>();
        model = std::move(m);
    } else if (family == "linear-gaussian") {
        LinearGaussianModel m;
        m.H = doc.at("H").get<std::size_t>();
        m.D = doc.at("D").get<std::size_t>();
        m.prior_mean = doc.at("prior_mean").get<std::vector<double>>();
        m.prior_var = doc.at("prior_var").get<std::vector<double>>();
        m.trainable_prior = doc.at("trainable_prior").get<bool>();
        m.W = matrix_from_json(doc.at("W"));
        m.mu = doc.at("mu").get<std::vector<double>>();
        const auto kind = doc.at("noise_kind").get<std::string>();
        if (kind == "scalar") {
            m.noise_kind = NoiseKind::Scalar;
        } else if (kind == "diagonal") {
            m.noise_kind = NoiseKind::Diagonal;
        } else {
            throw std::invalid_argument("unknown noise kind tag: " + kind);
        }
        m.noise_var = doc.at("noise_var").get<std::vector<double>>();
        model = std::move(m);
    } else if (family == "mixture") {
        EfMixtureModel m;
        m.C = doc.at("C").get<std::size_t>();
        m.D = doc.at("D").get<std::size_t>();
        m.pi = doc.at("pi").get<std::vector<double>>();
        m.component_family = component_family_from_tag(doc.at("component_family").get<std::string>());
        m.components = doc.at("components").get<std::vector<std::vector<double>>>();
        model = std::move(m);
    } else {
        throw std::invalid_argument("unknown model family tag: " + family);
    }
    models::validate(model);
    return model;
}

std::string dataset_to_jsonl(const models::Dataset& data, std::string_view family,
                             std::uint64_t seed, const json& extra_header) {
    json header = json::object();
    header["family"] = std::string(family);
    header["D"] = data.D;
    header["N"] = data.N;
    header["seed"] = seed;
    for (const auto& [key, value] : extra_header.items()) header[key] = value;

    std::string out = dump_json(header, -1);
    out += '\n';
    for (const auto& row : data.rows) {
        json rec = json::object();
        rec["x"] = row;
        out += dump_json(rec, -1);
        out += '\n';
    }
    return out;
}

models::Dataset dataset_from_jsonl(std::string_view text) {
    models::Dataset data;
    bool have_header = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
            if (!have_header) {
                data.D = doc.at("D").get<std::size_t>();
                data.N = doc.at("N").get<std::size_t>();
                (void)doc.at("family");
                (void)doc.at("seed");
                have_header = true;
                continue;
            }
        } catch (const json::exception& e) {
            throw std::invalid_argument(std::string("malformed dataset line: ") + e.what());
        }
        std::vector<double> row;
        try {
            row = doc.at("x").get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw std::invalid_argument(std::string("malformed dataset row: ") + e.what());
        }
        if (row.size() != data.D)
            throw std::invalid_argument("dataset row length disagrees with header D");
        data.rows.push_back(std::move(row));
    }
    if (!have_header) throw std::invalid_argument("dataset is missing its header line");
    if (data.rows.size() != data.N)
        throw std::invalid_argument("dataset row count disagrees with header N");
    return data;
}

json fit_report_to_json(const inference::FitReport& report) {
    json doc = json::object();
    doc["converged"] = report.converged;
    doc["iterations"] = report.iterations;
    doc["stationarity"] = {{"elbo_delta", report.stationarity.elbo_delta},
                           {"grad_inf_norm", report.stationarity.grad_inf_norm}};
    doc["elbo_trajectory"] = report.elbo_trajectory;
    doc["final_params"] = model_to_json(report.final_params);
    return doc;
}

inference::FitReport fit_report_from_json(const json& doc) {
    inference::FitReport report;
    report.converged = doc.at("converged").get<bool>();
    report.iterations = doc.at("iterations").get<std::size_t>();
    report.stationarity.elbo_delta = doc.at("stationarity").at("elbo_delta").get<double>();
    report.stationarity.grad_inf_norm = doc.at("stationarity").at("grad_inf_norm").get<double>();
    report.elbo_trajectory = doc.at("elbo_trajectory").get<std::vector<double>>();
    report.final_params = model_from_json(doc.at("final_params"));
    return report;
}

json decomposition_to_json(const decompose::EntropyDecomposition& decomposition) {
    json doc = json::object();
    doc["mean_q_entropy"] = decomposition.mean_q_entropy;
    doc["prior_entropy"] = decomposition.prior_entropy;
    doc["expected_obs_entropy"] = decomposition.expected_obs_entropy;
    doc["total"] = decomposition.total;
    doc["kind"] =
        decomposition.kind == efcore::EntropyKind::Entropy ? "entropy" : "pseudo-entropy";
    return doc;
}

json verdict_to_json(const decompose::VerificationVerdict& verdict) {
    json doc = json::object();
    doc["elbo"] = verdict.elbo;
    doc["entropy_sum"] = verdict.entropy_sum;
    doc["abs_gap"] = verdict.abs_gap;
    doc["rel_gap"] = verdict.rel_gap;
    doc["stationarity_evidence"] = {
        {"elbo_delta", verdict.stationarity_evidence.elbo_delta},
        {"grad_inf_norm", verdict.stationarity_evidence.grad_inf_norm}};
    doc["converged"] = verdict.converged;
    doc["pass"] = verdict.pass;
    return doc;
}

json certificate_to_json(const criterion::CriterionCertificate& cert) {
    json doc = json::object();

    json part_a = json::object();
    part_a["applicable"] = cert.part_a.applicable;
    if (cert.part_a.applicable) {
        part_a["jacobian"] = matrix_to_json(cert.part_a.jacobian);
        part_a["alpha_recovered"] = cert.part_a.alpha_recovered;
        part_a["alpha_closed_form"] =
            cert.part_a.alpha_closed_form.empty() ? json() : json(cert.part_a.alpha_closed_form);
        part_a["closed_form_gap"] = cert.part_a.closed_form_gap;
        part_a["jacobian_vs_analytic"] = cert.part_a.jacobian_vs_analytic;
        part_a["rank_deficient"] = cert.part_a.rank_deficient;
        part_a["residual_rel"] = cert.part_a.residual_rel;
        part_a["pass"] = cert.part_a.pass;
    }
    doc["part_a"] = std::move(part_a);

    json records = json::array();
    for (const auto& rec : cert.part_b.per_z_records) {
        json r = json::object();
        r["z"] = rec.z;
        r["jacobian"] = matrix_to_json(rec.jacobian);
        r["residual_rel"] = rec.residual_rel;
        records.push_back(std::move(r));
    }
    json part_b = json::object();
    part_b["per_z_records"] = std::move(records);
    part_b["beta_recovered"] = cert.part_b.beta_recovered;
    part_b["beta_closed_form"] =
        cert.part_b.beta_closed_form.empty() ? json() : json(cert.part_b.beta_closed_form);
    part_b["closed_form_gap"] = cert.part_b.closed_form_gap;
    part_b["jacobian_vs_analytic"] = cert.part_b.jacobian_vs_analytic;
    part_b["rank_deficient"] = cert.part_b.rank_deficient;
    part_b["residual_rel"] = cert.part_b.residual_rel;
    part_b["pass"] = cert.part_b.pass;
    doc["part_b"] = std::move(part_b);

    doc["prior_parameter_point"] = cert.prior_parameter_point;
    doc["obs_parameter_point"] = cert.obs_parameter_point;
    doc["tolerance"] = cert.tolerance;
    doc["non_constant_base_measure"] = cert.non_constant_base_measure;
    doc["pass"] = cert.pass;
    return doc;
}

std::string trajectory_to_csv(const inference::FitReport& report) {
    std::string out = "iteration,elbo\n";
    for (std::size_t i = 0; i < report.elbo_trajectory.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        append_double(out, report.elbo_trajectory[i]);
        out += '\n';
    }
    return out;
}

std::string verification_to_csv(const inference::FitReport& report,
                                const decompose::VerificationVerdict& verdict) {
    std::string out = "iteration,elbo,entropy_sum\n";
    for (std::size_t i = 0; i < report.elbo_trajectory.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        append_double(out, report.elbo_trajectory[i]);
        out += ',';
        append_double(out, verdict.entropy_sum);
        out += '\n';
    }
    return out;
}

}  // namespace elbosum::serialize
