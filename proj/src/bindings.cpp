// Python bindings for the varigauge core. The module mirrors the C++
// API closely: plain structs become attribute holders, Eigen matrices
// map to numpy arrays, and errors surface as Python exceptions.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "varigauge/abnormality.hpp"
#include "varigauge/expr.hpp"
#include "varigauge/gauge.hpp"
#include "varigauge/geometry.hpp"
#include "varigauge/pontryagin.hpp"
#include "varigauge/problem_io.hpp"
#include "varigauge/variation.hpp"

namespace py = pybind11;
using namespace varigauge;

namespace {

ProblemSpec make_spec(int n, int r, const std::vector<std::string>& psi,
                      const std::string& lagrangian, double t0, double t1,
                      const std::optional<std::vector<std::string>>& implicit,
                      const std::optional<std::string>& gauge) {
    ProblemSpec spec;
    spec.n = n;
    spec.r = r;
    spec.t0 = t0;
    spec.t1 = t1;
    auto syms = ProblemSpec::symbol_set(n, r);
    for (const auto& src : psi)
        spec.psi.push_back(Expression::parse(src, syms));
    spec.lagrangian = Expression::parse(lagrangian, syms);
    if (implicit) {
        std::vector<std::string> impl_syms{"t"};
        for (int i = 1; i <= n; ++i) impl_syms.push_back("q" + std::to_string(i));
        for (int i = 1; i <= n; ++i) impl_syms.push_back("qd" + std::to_string(i));
        std::vector<Expression> parsed;
        for (const auto& src : *implicit)
            parsed.push_back(Expression::parse(src, impl_syms));
        spec.implicit_constraints = std::move(parsed);
    }
    if (gauge) spec.gauge = GaugeFunction::parse(*gauge, n).f;
    spec.validate();
    return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "core operations for non-holonomic variational problems";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<EvalError>(m, "EvalError", PyExc_ArithmeticError);
    py::register_exception<ProblemFileError>(m, "ProblemFileError",
                                             PyExc_ValueError);

    py::class_<Expression>(m, "Expression")
        .def_static(
            "parse",
            [](const std::string& source, std::vector<std::string> symbols) {
                return Expression::parse(source, std::move(symbols));
            },
            py::arg("source"), py::arg("symbols"))
        .def("eval",
             [](const Expression& e, const EvalPoint& x) { return e.eval(x); },
             py::arg("point"))
        .def("eval_grad",
             [](const Expression& e, const EvalPoint& x,
                const std::vector<std::string>& wrt) {
                 return e.eval_grad(x, wrt);
             },
             py::arg("point"), py::arg("wrt"))
        .def("derivative", &Expression::derivative, py::arg("symbol"))
        .def("symbols",
             [](const Expression& e) { return e.symbols(); })
        .def("same_tree", &Expression::same_tree, py::arg("other"))
        .def("__str__", &Expression::str)
        .def("__repr__", [](const Expression& e) {
            return "Expression('" + e.str() + "')";
        });

    py::class_<ProblemSpec>(m, "ProblemSpec")
        .def(py::init(&make_spec), py::arg("n"), py::arg("r"), py::arg("psi"),
             py::arg("lagrangian"), py::arg("t0") = 0.0, py::arg("t1") = 1.0,
             py::arg("implicit_constraints") = std::nullopt,
             py::arg("gauge") = std::nullopt)
        .def_readonly("n", &ProblemSpec::n)
        .def_readonly("r", &ProblemSpec::r)
        .def_readonly("t0", &ProblemSpec::t0)
        .def_readonly("t1", &ProblemSpec::t1)
        .def("symbols", &ProblemSpec::symbols)
        .def("psi_sources", [](const ProblemSpec& s) {
            std::vector<std::string> out;
            for (const auto& e : s.psi) out.push_back(e.str());
            return out;
        })
        .def("lagrangian_source",
             [](const ProblemSpec& s) { return s.lagrangian.str(); });

    py::class_<SampledCurve>(m, "SampledCurve")
        .def(py::init([](double t0, double t1, const Eigen::MatrixXd& q,
                         const Eigen::MatrixXd& z) {
                 SampledCurve c;
                 c.t0 = t0;
                 c.t1 = t1;
                 c.N = static_cast<int>(q.rows()) - 1;
                 c.q = q;
                 c.z = z;
                 return c;
             }),
             py::arg("t0"), py::arg("t1"), py::arg("q"),
             py::arg("z") = Eigen::MatrixXd())
        .def_readonly("t0", &SampledCurve::t0)
        .def_readonly("t1", &SampledCurve::t1)
        .def_readonly("N", &SampledCurve::N)
        .def_readonly("q", &SampledCurve::q)
        .def_readonly("z", &SampledCurve::z)
        .def("has_z", &SampledCurve::has_z)
        .def("h", &SampledCurve::h)
        .def("time", &SampledCurve::time, py::arg("k"));

    py::class_<LiftedCurve>(m, "LiftedCurve")
        .def(py::init([](const SampledCurve& base, const Eigen::MatrixXd& p) {
                 return LiftedCurve{base, p};
             }),
             py::arg("base"), py::arg("p"))
        .def_readonly("base", &LiftedCurve::base)
        .def_readonly("p", &LiftedCurve::p);

    py::class_<AdmissibilityReport>(m, "AdmissibilityReport")
        .def_readonly("max_residual", &AdmissibilityReport::max_residual)
        .def_readonly("residual_profile", &AdmissibilityReport::residual_profile)
        .def_readonly("admissible", &AdmissibilityReport::admissible);

    m.def("check_rank",
          [](const ProblemSpec& spec, double t, const Eigen::VectorXd& q,
             const Eigen::VectorXd& z) { return check_rank(spec, t, q, z); },
          py::arg("spec"), py::arg("t"), py::arg("q"), py::arg("z"));
    m.def("check_admissible", &check_admissible, py::arg("spec"),
          py::arg("curve"), py::arg("tol"));
    m.def("integrate_admissible", &integrate_admissible, py::arg("spec"),
          py::arg("q0"), py::arg("controls"), py::arg("N"));

    py::class_<GaugeVerdict>(m, "GaugeVerdict")
        .def_readonly("equivalent", &GaugeVerdict::equivalent)
        .def_readonly("max_residual", &GaugeVerdict::max_residual);

    py::class_<PPCEvaluation>(m, "PPCEvaluation")
        .def_readonly("hamiltonian", &PPCEvaluation::hamiltonian)
        .def_readonly("p0", &PPCEvaluation::p0)
        .def_readonly("theta_dt_coefficient",
                      &PPCEvaluation::theta_dt_coefficient);

    m.def("gauge_transform",
          [](const ProblemSpec& spec, const std::string& f) {
              return gauge_transform(spec, GaugeFunction::parse(f, spec.n));
          },
          py::arg("spec"), py::arg("f"));
    m.def("gauge_equivalent", &gauge_equivalent, py::arg("spec_a"),
          py::arg("spec_b"), py::arg("trial_points") = 200,
          py::arg("tol") = 1e-6, py::arg("seed") = kGaugeTrialSeed);
    m.def("pontryagin_hamiltonian", &pontryagin_hamiltonian, py::arg("spec"),
          py::arg("t"), py::arg("q"), py::arg("p"), py::arg("z"),
          py::arg("qdot") = std::nullopt);
    m.def("action", &action, py::arg("spec"), py::arg("curve"));
    m.def("ppc_action", &ppc_action, py::arg("spec"), py::arg("lifted"));

    py::class_<InfinitesimalDeformation>(m, "InfinitesimalDeformation")
        .def_readonly("X", &InfinitesimalDeformation::X)
        .def_readonly("Gamma", &InfinitesimalDeformation::Gamma);

    py::class_<FundamentalMatrix>(m, "FundamentalMatrix")
        .def_readonly("A", &FundamentalMatrix::A)
        .def_readonly("A0", &FundamentalMatrix::A0);

    py::class_<DeformationReport>(m, "DeformationReport")
        .def_readonly("max_residual", &DeformationReport::max_residual)
        .def_readonly("residual_profile", &DeformationReport::residual_profile)
        .def_readonly("admissible", &DeformationReport::admissible);

    m.def("variational_flow", &variational_flow, py::arg("spec"),
          py::arg("base"), py::arg("Gamma"), py::arg("X0"));
    m.def("fundamental_matrix",
          [](const ProblemSpec& spec, const SampledCurve& base,
             const std::optional<Eigen::MatrixXd>& A0) {
              return A0 ? fundamental_matrix(spec, base, *A0)
                        : fundamental_matrix(spec, base);
          },
          py::arg("spec"), py::arg("base"), py::arg("A0") = std::nullopt);
    m.def("endpoint_functional", &endpoint_functional, py::arg("spec"),
          py::arg("base"), py::arg("A"), py::arg("Gamma"));
    m.def("check_infinitesimal_admissibility",
          &check_infinitesimal_admissibility, py::arg("spec"), py::arg("base"),
          py::arg("deformation"), py::arg("tol"));

    py::class_<ShootingConfig>(m, "ShootingConfig")
        .def(py::init<>())
        .def_readwrite("N", &ShootingConfig::N)
        .def_readwrite("newton_tol", &ShootingConfig::newton_tol)
        .def_readwrite("max_newton", &ShootingConfig::max_newton)
        .def_readwrite("shoot_tol", &ShootingConfig::shoot_tol)
        .def_readwrite("max_shoot", &ShootingConfig::max_shoot)
        .def_readwrite("initial_p0_guesses", &ShootingConfig::initial_p0_guesses)
        .def_readwrite("seed", &ShootingConfig::seed);

    py::class_<ExtremalSolution>(m, "ExtremalSolution")
        .def_readonly("lifted", &ExtremalSolution::lifted)
        .def_readonly("res_admissibility", &ExtremalSolution::res_admissibility)
        .def_readonly("res_costate", &ExtremalSolution::res_costate)
        .def_readonly("res_stationarity", &ExtremalSolution::res_stationarity)
        .def_readonly("converged", &ExtremalSolution::converged)
        .def_readonly("p0_found", &ExtremalSolution::p0_found)
        .def_readonly("guess_best_residuals",
                      &ExtremalSolution::guess_best_residuals);

    py::class_<Reconstruction>(m, "Reconstruction")
        .def_readonly("lifted", &Reconstruction::lifted)
        .def_readonly("beta", &Reconstruction::beta)
        .def_readonly("lsq_residual", &Reconstruction::lsq_residual);

    m.def("solve_controls", &solve_controls, py::arg("spec"), py::arg("t"),
          py::arg("q"), py::arg("p"), py::arg("z_guess"),
          py::arg("newton_tol") = 1e-10, py::arg("max_newton") = 50);
    m.def("shoot", &shoot, py::arg("spec"), py::arg("q0"),
          py::arg("q1_target"), py::arg("config") = ShootingConfig{},
          py::call_guard<py::gil_scoped_release>());
    m.def("reconstruct_costates", &reconstruct_costates, py::arg("spec"),
          py::arg("base"), py::arg("config") = ShootingConfig{},
          py::arg("A0") = std::nullopt);

    py::class_<AbnormalityReport>(m, "AbnormalityReport")
        .def_readonly("index", &AbnormalityReport::index)
        .def_readonly("basis_paths", &AbnormalityReport::basis_paths)
        .def_readonly("basis_beta", &AbnormalityReport::basis_beta)
        .def_readonly("singular_values", &AbnormalityReport::singular_values);

    py::class_<UniquenessReport>(m, "UniquenessReport")
        .def_readonly("index", &UniquenessReport::index)
        .def_readonly("disagreement", &UniquenessReport::disagreement)
        .def_readonly("projected_residual", &UniquenessReport::projected_residual)
        .def_readonly("consistent", &UniquenessReport::consistent);

    m.def("abnormality_index", &abnormality_index, py::arg("spec"),
          py::arg("base"), py::arg("svd_tol") = 1e-8);
    m.def("verify_normal_uniqueness", &verify_normal_uniqueness,
          py::arg("spec"), py::arg("base"),
          py::arg("config") = ShootingConfig{},
          py::arg("seed") = std::uint64_t{0x616e6f6du});

    py::class_<ProblemFile>(m, "ProblemFile")
        .def_readonly("spec", &ProblemFile::spec)
        .def_readonly("boundary_q0", &ProblemFile::boundary_q0)
        .def_readonly("boundary_q1", &ProblemFile::boundary_q1)
        .def_readonly("solver", &ProblemFile::solver)
        .def_readonly("grid_N", &ProblemFile::grid_N)
        .def_readonly("rank_tol", &ProblemFile::rank_tol)
        .def_readonly("svd_tol", &ProblemFile::svd_tol);

    m.def("load_problem_file", &load_problem_file, py::arg("path"));
    m.def("parse_problem_json", &parse_problem_json, py::arg("text"),
          py::arg("origin") = "<string>");
    m.def("write_curve_csv", &write_curve_csv, py::arg("path"),
          py::arg("curve"));
    m.def("write_lifted_csv", &write_lifted_csv, py::arg("path"),
          py::arg("lifted"));
    m.def("read_curve_csv",
          [](const std::filesystem::path& path) {
              CurveFile f = read_curve_csv(path);
              return py::make_tuple(f.curve, f.p);
          },
          py::arg("path"));
}
