#pragma once

// Command-line pipeline: dataset generation, EM fitting, stationary-point
// verification, criterion certification, and report merging, all writing
// reproducible JSON artifacts. Every artifact embeds the config and seed
// that produced it; identical configs produce byte-identical files.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "elbosum/serialize.hpp"

namespace elbosum::cli {

struct Tolerances {
    double tol_elbo = 1e-10;      // EM exit: |Delta F|
    double tol_grad = 1e-8;       // EM exit: gradient inf-norm
    double tol_eq = 1e-6;         // verification: rel_gap bound
    double tol_criterion = 1e-8;  // criterion: relative residual bound
};

struct RunConfig {
    std::string command;  // gen | fit | verify | criterion | report
    std::string model;    // model JSON file path, or inline JSON (leading '{')
    std::string data_path;
    std::optional<std::uint64_t> seed;  // gen/criterion: RNG seed; fit/verify:
                                        // data-driven init seed (absent: start
                                        // at the supplied model's parameters)
    std::size_t n = 0;           // gen: rows to sample
    std::size_t draws = 50;      // criterion: parameter points to sample
    std::size_t z_samples = 64;  // criterion: latent draws per point
    std::size_t threads = 1;
    std::size_t max_iters = 2000;
    Tolerances tol;
    std::string output_path;
    std::string csv_path;             // fit/verify: optional trajectory CSV
    std::vector<std::string> inputs;  // report: artifact files to merge
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitFailure = 1;    // a requested verdict did not pass
inline constexpr int kExitBadConfig = 2;  // malformed config or model
inline constexpr int kExitIoError = 3;    // missing/unreadable/unwritable files

// Merge config-file values onto the defaults (flags are applied on top by
// the executable, giving flags > config file > defaults precedence). Throws
// std::invalid_argument on unknown fields or wrong types.
RunConfig config_from_json(const serialize::json& doc);

// The full config echo embedded into every artifact.
serialize::json config_to_json(const RunConfig& config);

// Executes one command; writes artifacts atomically (temp file + rename, so
// failures leave no partial artifact); diagnostics go to stderr, report
// tables to stdout. Returns one of the exit codes above.
int run(const RunConfig& config);

}  // namespace elbosum::cli
