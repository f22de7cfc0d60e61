#pragma once

// Problem-file ingestion (strict JSON schema) and CSV serialization of
// sampled and lifted curves.

#include <filesystem>
#include <optional>
#include <string>

#include "varigauge/gauge.hpp"
#include "varigauge/geometry.hpp"
#include "varigauge/pontryagin.hpp"

namespace varigauge {

/// Parsed problem file: the spec plus CLI-level configuration.
struct ProblemFile {
    ProblemSpec spec;
    std::optional<Eigen::VectorXd> boundary_q0;
    std::optional<Eigen::VectorXd> boundary_q1;
    ShootingConfig solver;
    int grid_N = 400;
    double rank_tol = 1e-10;
    double svd_tol = 1e-8;
};

class ProblemFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ProblemFile load_problem_file(const std::filesystem::path& path);
ProblemFile parse_problem_json(const std::string& text,
                               const std::string& origin = "<string>");

/// Curve CSV with header t,q1..qn[,z1..zr][,p1..pn], 17 significant
/// digits per value.
void write_curve_csv(const std::filesystem::path& path,
                     const SampledCurve& curve);
void write_lifted_csv(const std::filesystem::path& path,
                      const LiftedCurve& lifted);

struct CurveFile {
    SampledCurve curve;
    std::optional<Eigen::MatrixXd> p;  // present when the file is lifted
};

CurveFile read_curve_csv(const std::filesystem::path& path);

std::string format_double(double v);

/// FNV-1a content hash, used in run manifests.
std::string file_hash(const std::filesystem::path& path);

}  // namespace varigauge
