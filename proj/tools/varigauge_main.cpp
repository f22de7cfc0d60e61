// varigauge: solve and inspect non-holonomic constrained variational
// problems from JSON problem files.
//
// Exit codes: 0 success / positive verdict, 1 negative verdict or
// non-convergence, 2 input or validation failure.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "varigauge/abnormality.hpp"
#include "varigauge/gauge.hpp"
#include "varigauge/pontryagin.hpp"
#include "varigauge/problem_io.hpp"

namespace vg = varigauge;

namespace {

struct ManifestWriter {
    std::string command;
    std::string config;
    std::vector<std::string> inputs;   // "path hash" pairs
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start =
        std::chrono::steady_clock::now();

    void add_input(const std::string& path) {
        inputs.push_back(path + " " + vg::file_hash(path));
    }

    void write(const std::string& path) {
        std::ofstream out(path);
        out << "command: " << command << "\n";
        out << "config: " << config << "\n";
        for (const auto& i : inputs) out << "input: " << i << "\n";
        for (const auto& o : outputs) out << "output: " << o << "\n";
        double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        out << "wall_time_s: " << vg::format_double(secs) << "\n";
    }
};

vg::SampledCurve load_curve(const std::string& path, const vg::ProblemSpec& spec,
                            std::optional<Eigen::MatrixXd>* p = nullptr) {
    vg::CurveFile cf = vg::read_curve_csv(path);
    if (cf.curve.q.cols() != spec.n)
        throw vg::ProblemFileError(path + ": curve has " +
                                   std::to_string(cf.curve.q.cols()) +
                                   " states, problem expects " +
                                   std::to_string(spec.n));
    if (cf.curve.has_z() && cf.curve.z.cols() != spec.r)
        throw vg::ProblemFileError(path + ": curve has " +
                                   std::to_string(cf.curve.z.cols()) +
                                   " controls, problem expects " +
                                   std::to_string(spec.r));
    if (p) *p = cf.p;
    return cf.curve;
}

std::string solver_config_string(const vg::ShootingConfig& cfg) {
    std::ostringstream ss;
    ss << "N=" << cfg.N << " newton_tol=" << cfg.newton_tol
       << " max_newton=" << cfg.max_newton << " shoot_tol=" << cfg.shoot_tol
       << " max_shoot=" << cfg.max_shoot << " seed=" << cfg.seed;
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-holonomic constrained variational problems"};
    app.require_subcommand(1);

    std::string problem_path, problem_path_b, curve_path, out_prefix = "out";
    double tol = 1e-6;
    double gauge_tol = 1e-8;
    int trials = 50;
    std::optional<std::uint64_t> seed;
    bool use_ppc = false;
    std::optional<double> svd_tol_flag;

    auto* c_check = app.add_subcommand("check", "admissibility of a curve");
    c_check->add_option("problem", problem_path)->required();
    c_check->add_option("curve", curve_path)->required();
    c_check->add_option("--tol", tol, "admissibility tolerance");

    auto* c_solve = app.add_subcommand("solve", "shoot the extremal BVP");
    c_solve->add_option("problem", problem_path)->required();
    c_solve->add_option("--out", out_prefix, "output file prefix");
    c_solve->add_option("--seed", seed, "override shooting seed");

    auto* c_lift = app.add_subcommand("lift", "reconstruct costates");
    c_lift->add_option("problem", problem_path)->required();
    c_lift->add_option("curve", curve_path)->required();
    c_lift->add_option("--out", out_prefix, "output file prefix");

    auto* c_index = app.add_subcommand("index", "abnormality index");
    c_index->add_option("problem", problem_path)->required();
    c_index->add_option("curve", curve_path)->required();
    c_index->add_option("--out", out_prefix, "output file prefix");
    c_index->add_option("--svd-tol", svd_tol_flag, "rank cut for the index");

    auto* c_gauge = app.add_subcommand("gauge", "gauge equivalence of two problems");
    c_gauge->add_option("problemA", problem_path)->required();
    c_gauge->add_option("problemB", problem_path_b)->required();
    c_gauge->add_option("--tol", gauge_tol, "residual tolerance");
    c_gauge->add_option("--trials", trials, "number of trial points");
    c_gauge->add_option("--seed", seed, "override trial-point seed");

    auto* c_action = app.add_subcommand("action", "action functional of a curve");
    c_action->add_option("problem", problem_path)->required();
    c_action->add_option("curve", curve_path)->required();
    c_action->add_flag("--ppc", use_ppc,
                       "integrate the Pontryagin-Poincare-Cartan form "
                       "(curve must carry costates)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_check->parsed()) {
            vg::ProblemFile pf = vg::load_problem_file(problem_path);
            vg::SampledCurve curve = load_curve(curve_path, pf.spec);
            auto report = vg::check_admissible(pf.spec, curve, tol);
            std::cout << "admissible: " << (report.admissible ? "true" : "false")
                      << "\nmax_residual: "
                      << vg::format_double(report.max_residual) << "\n";
            return report.admissible ? 0 : 1;
        }

        if (c_solve->parsed()) {
            vg::ProblemFile pf = vg::load_problem_file(problem_path);
            if (!pf.boundary_q0 || !pf.boundary_q1)
                throw vg::ProblemFileError(problem_path +
                                           ": key 'boundary' is required by solve");
            if (seed) pf.solver.seed = *seed;

            ManifestWriter manifest;
            manifest.command = "solve";
            manifest.config = solver_config_string(pf.solver);
            manifest.add_input(problem_path);

            vg::ExtremalSolution sol =
                vg::shoot(pf.spec, *pf.boundary_q0, *pf.boundary_q1, pf.solver);

            std::string curve_file = out_prefix + ".curve.csv";
            std::string summary_file = out_prefix + ".summary.txt";
            std::string manifest_file = out_prefix + ".manifest.txt";
            std::ofstream summary(summary_file);
            summary << "converged: " << (sol.converged ? "true" : "false")
                    << "\n";
            if (sol.converged) {
                vg::write_lifted_csv(curve_file, sol.lifted);
                manifest.outputs.push_back(curve_file);
                summary << "p0_found:";
                for (int i = 0; i < sol.p0_found.size(); ++i)
                    summary << " " << vg::format_double(sol.p0_found[i]);
                summary << "\naction: "
                        << vg::format_double(
                               vg::action(pf.spec, sol.lifted.base))
                        << "\nres_admissibility: "
                        << vg::format_double(sol.res_admissibility)
                        << "\nres_costate: "
                        << vg::format_double(sol.res_costate)
                        << "\nres_stationarity: "
                        << vg::format_double(sol.res_stationarity) << "\n";
            } else {
                summary << "best_residual_per_guess:";
                for (double r : sol.guess_best_residuals)
                    summary << " " << vg::format_double(r);
                summary << "\n";
            }
            summary.close();
            manifest.outputs.push_back(summary_file);
            manifest.outputs.push_back(manifest_file);
            manifest.write(manifest_file);
            std::cout << "converged: " << (sol.converged ? "true" : "false")
                      << "\n";
            return sol.converged ? 0 : 1;
        }

        if (c_lift->parsed()) {
            vg::ProblemFile pf = vg::load_problem_file(problem_path);
            vg::SampledCurve curve = load_curve(curve_path, pf.spec);
            vg::ShootingConfig cfg = pf.solver;
            cfg.N = curve.N;
            vg::Reconstruction rec = vg::reconstruct_costates(pf.spec, curve, cfg);
            std::string lifted_file = out_prefix + ".lifted.csv";
            vg::write_lifted_csv(lifted_file, rec.lifted);
            std::cout << "beta:";
            for (int i = 0; i < rec.beta.size(); ++i)
                std::cout << " " << vg::format_double(rec.beta[i]);
            std::cout << "\nlsq_residual: "
                      << vg::format_double(rec.lsq_residual) << "\n"
                      << "extremal: "
                      << (rec.lsq_residual <= 10.0 * cfg.shoot_tol ? "true"
                                                                   : "false")
                      << "\n";
            return 0;
        }

        if (c_index->parsed()) {
            vg::ProblemFile pf = vg::load_problem_file(problem_path);
            vg::SampledCurve curve = load_curve(curve_path, pf.spec);
            double cut = svd_tol_flag.value_or(pf.svd_tol);
            vg::AbnormalityReport report =
                vg::abnormality_index(pf.spec, curve, cut);
            std::cout << "index: " << report.index << "\n";
            for (int j = 0; j < report.index; ++j) {
                vg::LiftedCurve basis{curve,
                                      report.basis_paths[static_cast<std::size_t>(j)]};
                std::string path =
                    out_prefix + ".basis" + std::to_string(j + 1) + ".csv";
                vg::write_lifted_csv(path, basis);
                std::cout << "basis" << j + 1 << ": " << path << "\n";
            }
            return 0;
        }

        if (c_gauge->parsed()) {
            vg::ProblemFile pa = vg::load_problem_file(problem_path);
            vg::ProblemFile pb = vg::load_problem_file(problem_path_b);
            vg::GaugeVerdict verdict = vg::gauge_equivalent(
                pa.spec, pb.spec, trials, gauge_tol,
                seed.value_or(vg::kGaugeTrialSeed));
            std::cout << "gauge_equivalent: "
                      << (verdict.equivalent ? "true" : "false")
                      << " max_residual: "
                      << vg::format_double(verdict.max_residual) << "\n";
            return verdict.equivalent ? 0 : 1;
        }

        if (c_action->parsed()) {
            vg::ProblemFile pf = vg::load_problem_file(problem_path);
            std::optional<Eigen::MatrixXd> p;
            vg::SampledCurve curve = load_curve(curve_path, pf.spec, &p);
            double value;
            if (use_ppc) {
                if (!p)
                    throw vg::ProblemFileError(
                        curve_path + ": --ppc needs costate columns p1..pn");
                value = vg::ppc_action(pf.spec, vg::LiftedCurve{curve, *p});
            } else {
                value = vg::action(pf.spec, curve);
            }
            std::cout << "action: " << vg::format_double(value) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
