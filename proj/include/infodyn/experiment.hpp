#ifndef INFODYN_EXPERIMENT_HPP
#define INFODYN_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infodyn/errors.hpp"

namespace infodyn::cli {

struct Violation {
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Thrown by run_config_file when the config fails validation; carries the
/// full report so callers can print every offending field.
class ConfigError : public Error {
public:
    explicit ConfigError(ValidationReport report);
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    std::optional<std::filesystem::path> out_dir_override;
    unsigned threads = 0; // 0 = auto; must not affect results
};

struct RunResult {
    std::filesystem::path csv_path;
    std::filesystem::path summary_path;
    std::string kind;
    std::uint64_t seed = 0;
};

/// The experiment kinds the runner understands, in listing order.
const std::vector<std::string>& experiment_kinds();

/// Fixed, documented CSV header for a kind; throws InvalidArgument for an
/// unknown kind.
std::string csv_header(const std::string& kind);

ValidationReport validate_config_text(const std::string& text);
ValidationReport validate_config_file(const std::filesystem::path& path);

/// Validates, runs, and writes <out>/<kind>.csv plus <out>/summary.json.
/// No output files are touched when validation fails.
RunResult run_config_file(const std::filesystem::path& path,
                          const RunOptions& options = {});

/// FNV-1a 64-bit hash, used to fingerprint config bytes in summaries.
std::uint64_t fnv1a64(std::string_view bytes);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

} // namespace infodyn::cli

#endif
