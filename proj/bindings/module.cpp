// Python bindings: a thin JSON facade over the toolkit's main operations.
// Every function exchanges the same JSON/JSONL documents the command-line
// tool reads and writes, so artifacts are interchangeable between the two.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "elbosum/criterion.hpp"
#include "elbosum/decompose.hpp"
#include "elbosum/inference.hpp"
#include "elbosum/models.hpp"
#include "elbosum/serialize.hpp"

namespace py = pybind11;
using namespace elbosum;

namespace {

serialize::json parse_doc(const std::string& text) {
    try {
        return serialize::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed JSON document: ") + e.what());
    }
}

models::ModelSpec parse_model(const std::string& text) {
    return serialize::model_from_json(parse_doc(text));
}

inference::FitOptions make_options(std::size_t max_iters, double tol_elbo, double tol_grad,
                                   std::size_t threads) {
    inference::FitOptions opt;
    opt.max_iters = max_iters;
    opt.tol_elbo = tol_elbo;
    opt.tol_grad = tol_grad;
    opt.threads = threads;
    return opt;
}

// Start from a data-driven initialization when a seed is given, otherwise at
// the supplied model's own parameters (same semantics as the CLI).
inference::FitReport run_fit(const models::ModelSpec& model, const models::Dataset& data,
                             std::optional<std::uint64_t> seed,
                             const inference::FitOptions& opt) {
    const models::ModelSpec start = seed ? inference::init_from_data(model, data, *seed) : model;
    return inference::fit_em(start, data, opt);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() =
        "Exponential-family variational learning core: EM fitting, "
        "ELBO/entropy-sum verification at stationary points, and the "
        "parameterization-criterion prover. All functions exchange the same "
        "JSON/JSONL documents as the command-line tool.";

    m.def(
        "sample",
        [](const std::string& model_json, std::size_t n, std::uint64_t seed) {
            const models::ModelSpec model = parse_model(model_json);
            return serialize::dataset_to_jsonl(models::sample(model, n, seed),
                                               serialize::family_tag(model), seed);
        },
        py::arg("model_json"), py::arg("n"), py::arg("seed"),
        "Draw n i.i.d. rows from the generative model; returns the dataset as JSONL.");

    m.def(
        "fit",
        [](const std::string& model_json, const std::string& data_jsonl,
           std::optional<std::uint64_t> seed, std::size_t max_iters, double tol_elbo,
           double tol_grad, std::size_t threads) {
            const models::ModelSpec model = parse_model(model_json);
            const models::Dataset data = serialize::dataset_from_jsonl(data_jsonl);
            const inference::FitReport report =
                run_fit(model, data, seed, make_options(max_iters, tol_elbo, tol_grad, threads));
            return serialize::dump_json(serialize::fit_report_to_json(report));
        },
        py::arg("model_json"), py::arg("data_jsonl"), py::arg("seed") = std::nullopt,
        py::arg("max_iters") = 2000, py::arg("tol_elbo") = 1e-10, py::arg("tol_grad") = 1e-8,
        py::arg("threads") = 1,
        "Run EM to a stationary point of the ELBO; returns the fit report as JSON.");

    m.def(
        "verify",
        [](const std::string& model_json, const std::string& data_jsonl,
           std::optional<std::uint64_t> seed, double tol_eq, std::size_t max_iters,
           double tol_elbo, double tol_grad, std::size_t threads) {
            const models::ModelSpec model = parse_model(model_json);
            const models::Dataset data = serialize::dataset_from_jsonl(data_jsonl);
            const inference::FitReport report =
                run_fit(model, data, seed, make_options(max_iters, tol_elbo, tol_grad, threads));
            serialize::json doc = serialize::json::object();
            doc["fit"] = serialize::fit_report_to_json(report);
            doc["verdict"] =
                serialize::verdict_to_json(decompose::verify_stationary(report, data, tol_eq));
            return serialize::dump_json(doc);
        },
        py::arg("model_json"), py::arg("data_jsonl"), py::arg("seed") = std::nullopt,
        py::arg("tol_eq") = 1e-6, py::arg("max_iters") = 2000, py::arg("tol_elbo") = 1e-10,
        py::arg("tol_grad") = 1e-8, py::arg("threads") = 1,
        "Fit, then certify elbo == entropy_sum at the stationary point; returns "
        "{\"fit\", \"verdict\"} as JSON.");

    m.def(
        "verify_fit",
        [](const std::string& fit_json, const std::string& data_jsonl, double tol_eq) {
            const inference::FitReport report = serialize::fit_report_from_json(parse_doc(fit_json));
            const models::Dataset data = serialize::dataset_from_jsonl(data_jsonl);
            return serialize::dump_json(
                serialize::verdict_to_json(decompose::verify_stationary(report, data, tol_eq)));
        },
        py::arg("fit_json"), py::arg("data_jsonl"), py::arg("tol_eq") = 1e-6,
        "Verdict for an existing fit report, without refitting.");

    m.def(
        "decomposition",
        [](const std::string& model_json, const std::string& data_jsonl) {
            const models::ModelSpec model = parse_model(model_json);
            const models::Dataset data = serialize::dataset_from_jsonl(data_jsonl);
            const inference::VariationalState q = inference::e_step(model, data);
            serialize::json doc = serialize::json::object();
            doc["elbo"] = decompose::elbo(model, data, q);
            doc["pseudo_elbo"] = decompose::pseudo_elbo(model, data, q);
            doc["entropy_sum"] = serialize::decomposition_to_json(decompose::entropy_sum(model, q));
            return serialize::dump_json(doc);
        },
        py::arg("model_json"), py::arg("data_jsonl"),
        "ELBO and the three-term entropy sum at exact posteriors for the given parameters.");

    m.def(
        "certify",
        [](const std::string& model_json, std::size_t draws, std::size_t z_samples,
           std::uint64_t seed, double tol) {
            const auto certs =
                criterion::certify_model(parse_model(model_json), draws, z_samples, seed, tol);
            serialize::json arr = serialize::json::array();
            bool all_pass = true;
            for (const auto& cert : certs) {
                all_pass = all_pass && cert.pass;
                arr.push_back(serialize::certificate_to_json(cert));
            }
            serialize::json doc = serialize::json::object();
            doc["all_pass"] = all_pass;
            doc["certificates"] = std::move(arr);
            return serialize::dump_json(doc);
        },
        py::arg("model_json"), py::arg("draws") = 50, py::arg("z_samples") = 64,
        py::arg("seed") = 0, py::arg("tol") = 1e-8,
        "Prove the parameterization criterion at sampled parameter points; returns "
        "{\"all_pass\", \"certificates\"} as JSON.");

    m.def(
        "fit_ppca",
        [](const std::string& data_jsonl, std::size_t h_dims) {
            const models::Dataset data = serialize::dataset_from_jsonl(data_jsonl);
            bool clamped = false;
            const models::ModelSpec model = inference::fit_ppca_closed_form(data, h_dims, &clamped);
            const auto& lg = std::get<models::LinearGaussianModel>(model);
            serialize::json doc = serialize::json::object();
            doc["model"] = serialize::model_to_json(model);
            doc["clamped"] = clamped;
            doc["stationary_elbo"] = decompose::ppca_stationary_elbo(lg.W, lg.noise_var[0]);
            return serialize::dump_json(doc);
        },
        py::arg("data_jsonl"), py::arg("h_dims"),
        "Closed-form probabilistic-PCA fit; returns {\"model\", \"clamped\", "
        "\"stationary_elbo\"} as JSON.");
}
