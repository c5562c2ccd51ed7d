#pragma once

// JSON run configuration. Parsing is strict: unknown keys are errors, and
// every error message names the line of the offending key.

#include "kcurv/graph_solver.hpp"
#include "kcurv/inequality_lab.hpp"
#include "kcurv/measure_solver.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kcurv {

enum class Mode { SolveMeasure, SolveGraph, VerifyInequalities, ConvergenceStudy };

std::string to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

struct MeasureBlock {
    MeasureProblem problem;
    /// extra constant starts for the uniqueness probe (radii)
    std::vector<double> uniqueness_radii;
};

struct GraphCampaignBlock {
    std::vector<double> q{-1.0, -0.5, 0.0, 0.5, 1.0};
    std::vector<int> sizes{16, 32, 64};
};

struct GraphBlock {
    GraphProblem problem;
    ExactGraph data;              ///< boundary values and start
    bool manufactured = false;    ///< H = manufactured_H(data, k, q)
    double start_perturbation = 0.0;
    std::optional<GraphCampaignBlock> campaign;
};

struct IvochkinaScan {
    int k = 2;
    std::vector<double> q{-1.0, -0.5, 0.0, 0.5, 1.0};
    double p_max = 3.0;
    int resolution = 61;
};

struct InequalityBlock {
    /// one SampleConfig per (n, k) pair, sharing alphas, counts and seed
    std::vector<SampleConfig> runs;
    std::optional<IvochkinaScan> ivochkina;
};

enum class StudyProblem { EllipsoidCurvature, ConstantField, Measure, GraphManufactured };

struct StudyBlock {
    StudyProblem problem = StudyProblem::EllipsoidCurvature;
    /// (n_theta, n_phi) on the sphere, (nx, ny) on the rectangle
    std::vector<std::array<int, 2>> grids;
    std::array<double, 3> axes{1.0, 1.15, 0.9};
    double radius = 1.0;
    std::optional<MeasureBlock> measure;
    std::optional<GraphBlock> graph;
};

struct SolverSettings {
    NewtonOptions newton;
    HomotopySchedule homotopy;
};

struct RunConfig {
    Mode mode = Mode::SolveMeasure;
    std::uint64_t seed = 1;
    SolverSettings solver;
    std::optional<MeasureBlock> measure;
    std::optional<GraphBlock> graph;
    std::optional<InequalityBlock> inequalities;
    std::optional<StudyBlock> study;
    std::vector<std::string> warnings;
    nlohmann::json echo;          ///< the parsed document with defaults filled in
    std::string source_sha256;    ///< hash of the configuration text
};

/// Throws ConfigError. If `expected` is given, a "mode" key in the file must
/// agree with it; otherwise the file must name the mode.
RunConfig parse_config_text(std::string_view text, std::optional<Mode> expected = std::nullopt);
RunConfig parse_config(const std::filesystem::path& path, std::optional<Mode> expected = std::nullopt);

std::string sha256_hex(std::string_view bytes);

}  // namespace kcurv
