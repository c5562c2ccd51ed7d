#pragma once

#include "kcurv/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kcurv {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNonConvergence = 2, kExitHardFailure = 3 };

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
    std::filesystem::path out_dir;
    std::ostream* log = nullptr;    ///< progress lines; null for quiet runs
};

/// Replaces the configured seed everywhere it is used.
void override_seed(RunConfig& cfg, std::uint64_t seed);

/// Dispatches on cfg.mode, writes every artifact plus manifest.json into
/// out_dir, and returns the exit code.
int run(const RunConfig& cfg, const RunOptions& opts);

struct StudyRow {
    int a = 0, b = 0;                 ///< grid dimensions
    double h = 0.0;                   ///< characteristic spacing
    std::optional<double> error;
    std::optional<double> order;      ///< empty when not defined (first row, round-off floor)
};

struct StudyTable {
    std::string reference;            ///< what "error" is measured against
    std::vector<StudyRow> rows;
    bool complete = true;
    std::string message;
    bool has_order_column() const noexcept { return rows.size() > 1; }
};

/// Runs the study problem on each grid in order. A failed sub-run stops the
/// study and returns the partial table with complete = false.
StudyTable convergence_study(const RunConfig& cfg, std::ostream* log = nullptr);

void write_study_csv(std::ostream& os, const StudyTable& t);

/// JSON text with every floating-point number printed to 17 significant digits.
std::string dump_json17(const nlohmann::json& j, int indent = 2);

}  // namespace kcurv
