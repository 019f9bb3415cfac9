#pragma once

// JSON and CSV artifact formats. Parsing goes through nlohmann::json;
// emission goes through dump_json, which prints every floating-point number
// with 17 significant digits so artifacts round-trip doubles exactly and are
// byte-identical across runs with the same inputs.

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"  // vendored nlohmann::json

#include "elbosum/criterion.hpp"
#include "elbosum/decompose.hpp"
#include "elbosum/inference.hpp"
#include "elbosum/models.hpp"
#include "elbosum/numerics.hpp"

namespace elbosum::serialize {

using json = nlohmann::ordered_json;

// Deterministic serialization: insertion-ordered keys, doubles via "%.17g",
// two-space indentation when indent >= 0. Throws std::domain_error on
// non-finite numbers (artifacts must never contain them).
std::string dump_json(const json& value, int indent = 2);

// Family tags used in model documents and dataset headers.
std::string family_tag(const models::ModelSpec& model);

json model_to_json(const models::ModelSpec& model);
models::ModelSpec model_from_json(const json& doc);

json matrix_to_json(const numerics::Matrix& m);
numerics::Matrix matrix_from_json(const json& doc);

// JSON-lines dataset: a header object {"family", "D", "N", "seed"}, then one
// {"x": [...]} record per row. extra_header fields (e.g. the generating
// config) are merged into the header object.
std::string dataset_to_jsonl(const models::Dataset& data, std::string_view family,
                             std::uint64_t seed, const json& extra_header = json::object());
models::Dataset dataset_from_jsonl(std::string_view text);

json fit_report_to_json(const inference::FitReport& report);
inference::FitReport fit_report_from_json(const json& doc);

json decomposition_to_json(const decompose::EntropyDecomposition& decomposition);
json verdict_to_json(const decompose::VerificationVerdict& verdict);
json certificate_to_json(const criterion::CriterionCertificate& cert);

// CSV of the fit trajectory: header "iteration,elbo", one row per iteration.
std::string trajectory_to_csv(const inference::FitReport& report);

// CSV of (iteration, elbo, entropy_sum) rows: the elbo column follows the
// trajectory while entropy_sum holds the stationary-point value on every row,
// giving the reference line the trajectory converges to when plotted.
std::string verification_to_csv(const inference::FitReport& report,
                                const decompose::VerificationVerdict& verdict);

}  // namespace elbosum::serialize
