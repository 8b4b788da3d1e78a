#ifndef COVNET_CLI_HPP
#define COVNET_CLI_HPP

#include "covnet/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace covnet {

inline constexpr const char* kVersion = "1.0.0";

enum class Command { learn, score, simulate, posterior, moralize };

/// Exit statuses of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitParse = 2,
    kExitConstraint = 3,
    kExitIo = 4,
    kExitInternal = 5,
};

struct RunConfig {
    Command command = Command::learn;
    std::string data_path;
    std::string covariate_path;
    std::string graph_path;  // edge list scored, summarised or moralised
    std::string truth_path;  // learn: evaluate against this edge list
    MetricKind metric = MetricKind::bge;
    double tau = 1.0;
    double delta = 2.0;
    double upsilon = 1.0;
    bool center = true;
    std::optional<double> edge_penalty;
    int max_parents = 4;
    int restarts = 10;
    std::uint64_t seed = 0;
    int max_iterations = 100000;
    bool directed = false;

    // simulate
    int example = 0;  // 1 or 2; 0 selects the generic generator
    int replicates = 10;
    int nodes = 0;    // generic generator / moralize without data

    // outputs; empty means "not written" (JSON falls back to stdout)
    std::string out_dir;
    std::string edges_out;
    std::string dot_out;
    std::string json_out;
    std::string csv_out;
    std::string sd_out;

    /// Checks cross-field requirements (covariates vs metric, required paths).
    void validate() const;
};

/// Executes one command. Diagnostics go to `err`, primary output that has no
/// file destination goes to `out`. Returns an ExitCode.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv (program name first) and runs.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace covnet

#endif  // COVNET_CLI_HPP
