#include "varigauge/problem_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace varigauge {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
    throw ProblemFileError(origin + ": " + msg);
}

Eigen::VectorXd as_vector(const json& j, int expected,
                          const std::string& origin, const std::string& key) {
    if (!j.is_array() || static_cast<int>(j.size()) != expected)
        fail(origin, "key '" + key + "' must be an array of length " +
                         std::to_string(expected));
    Eigen::VectorXd v(expected);
    for (int i = 0; i < expected; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_number())
            fail(origin, "key '" + key + "' must contain numbers");
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

}  // namespace

ProblemFile parse_problem_json(const std::string& text,
                               const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ProblemFileError(origin + ": " + e.what());
    }
    if (!doc.is_object()) fail(origin, "top level must be an object");

    static const std::set<std::string> known = {
        "n",        "r",      "interval", "psi",      "lagrangian",
        "implicit", "gauge_f", "boundary", "solver",   "grid_N",
        "rank_tol", "svd_tol"};
    for (const auto& [key, _] : doc.items())
        if (!known.count(key)) fail(origin, "unknown key '" + key + "'");

    for (const char* key : {"n", "r", "interval", "psi", "lagrangian"})
        if (!doc.contains(key))
            fail(origin, std::string("missing required key '") + key + "'");

    ProblemFile pf;
    if (!doc["n"].is_number_integer()) fail(origin, "key 'n' must be an integer");
    if (!doc["r"].is_number_integer()) fail(origin, "key 'r' must be an integer");
    pf.spec.n = doc["n"].get<int>();
    pf.spec.r = doc["r"].get<int>();
    if (pf.spec.n < 1) fail(origin, "key 'n' must be >= 1");
    if (pf.spec.r < 1 || pf.spec.r > pf.spec.n)
        fail(origin, "key 'r' must satisfy 1 <= r <= n");

    Eigen::VectorXd interval = as_vector(doc["interval"], 2, origin, "interval");
    pf.spec.t0 = interval[0];
    pf.spec.t1 = interval[1];
    if (!(pf.spec.t0 < pf.spec.t1))
        fail(origin, "key 'interval' must be increasing");

    auto syms = pf.spec.symbols();
    auto parse_expr = [&](const json& j, const std::string& key,
                          const std::vector<std::string>& symbols) {
        if (!j.is_string())
            fail(origin, "key '" + key + "' must hold expression strings");
        try {
            return Expression::parse(j.get<std::string>(), symbols);
        } catch (const ParseError& e) {
            fail(origin, "key '" + key + "', expression '" +
                             j.get<std::string>() + "': " + e.what() +
                             " (position " + std::to_string(e.position()) +
                             ")");
        }
    };

    if (!doc["psi"].is_array() ||
        static_cast<int>(doc["psi"].size()) != pf.spec.n)
        fail(origin, "key 'psi' must list exactly n expressions");
    for (const auto& e : doc["psi"])
        pf.spec.psi.push_back(parse_expr(e, "psi", syms));
    pf.spec.lagrangian = parse_expr(doc["lagrangian"], "lagrangian", syms);

    if (doc.contains("implicit")) {
        std::vector<std::string> gsyms;
        gsyms.emplace_back("t");
        for (int i = 1; i <= pf.spec.n; ++i)
            gsyms.push_back("q" + std::to_string(i));
        for (int i = 1; i <= pf.spec.n; ++i)
            gsyms.push_back("qd" + std::to_string(i));
        if (!doc["implicit"].is_array() ||
            static_cast<int>(doc["implicit"].size()) != pf.spec.n - pf.spec.r)
            fail(origin, "key 'implicit' must list n - r expressions");
        std::vector<Expression> gs;
        for (const auto& e : doc["implicit"])
            gs.push_back(parse_expr(e, "implicit", gsyms));
        pf.spec.implicit_constraints = std::move(gs);
    }

    if (doc.contains("gauge_f")) {
        std::vector<std::string> fsyms;
        fsyms.emplace_back("t");
        for (int i = 1; i <= pf.spec.n; ++i)
            fsyms.push_back("q" + std::to_string(i));
        pf.spec.gauge = parse_expr(doc["gauge_f"], "gauge_f", fsyms);
    }

    if (doc.contains("boundary")) {
        const json& b = doc["boundary"];
        if (!b.is_object() || !b.contains("q0") || !b.contains("q1"))
            fail(origin, "key 'boundary' must hold q0 and q1 arrays");
        pf.boundary_q0 = as_vector(b["q0"], pf.spec.n, origin, "boundary.q0");
        pf.boundary_q1 = as_vector(b["q1"], pf.spec.n, origin, "boundary.q1");
    }

    if (doc.contains("grid_N")) {
        if (!doc["grid_N"].is_number_integer())
            fail(origin, "key 'grid_N' must be an integer");
        pf.grid_N = doc["grid_N"].get<int>();
        if (pf.grid_N < 4) fail(origin, "key 'grid_N' must be >= 4");
    }
    pf.solver.N = pf.grid_N;

    if (doc.contains("solver")) {
        const json& s = doc["solver"];
        if (!s.is_object()) fail(origin, "key 'solver' must be an object");
        static const std::set<std::string> solver_keys = {
            "N", "newton_tol", "max_newton", "shoot_tol", "max_shoot", "seed"};
        for (const auto& [key, _] : s.items())
            if (!solver_keys.count(key))
                fail(origin, "unknown solver key '" + key + "'");
        if (s.contains("N")) pf.solver.N = s["N"].get<int>();
        if (s.contains("newton_tol"))
            pf.solver.newton_tol = s["newton_tol"].get<double>();
        if (s.contains("max_newton"))
            pf.solver.max_newton = s["max_newton"].get<int>();
        if (s.contains("shoot_tol"))
            pf.solver.shoot_tol = s["shoot_tol"].get<double>();
        if (s.contains("max_shoot"))
            pf.solver.max_shoot = s["max_shoot"].get<int>();
        if (s.contains("seed"))
            pf.solver.seed = s["seed"].get<std::uint64_t>();
    }

    if (doc.contains("rank_tol")) pf.rank_tol = doc["rank_tol"].get<double>();
    if (doc.contains("svd_tol")) pf.svd_tol = doc["svd_tol"].get<double>();

    try {
        pf.spec.validate();
        pf.solver.validate();
    } catch (const std::exception& e) {
        fail(origin, e.what());
    }
    return pf;
}

ProblemFile load_problem_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ProblemFileError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem_json(ss.str(), path.string());
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void write_csv(const std::filesystem::path& path, const SampledCurve& curve,
               const Eigen::MatrixXd* p) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "t";
    for (int i = 1; i <= curve.q.cols(); ++i) out << ",q" << i;
    for (int a = 1; a <= curve.z.cols(); ++a) out << ",z" << a;
    if (p)
        for (int i = 1; i <= p->cols(); ++i) out << ",p" << i;
    out << "\n";
    for (int k = 0; k <= curve.N; ++k) {
        out << format_double(curve.time(k));
        for (int i = 0; i < curve.q.cols(); ++i)
            out << "," << format_double(curve.q(k, i));
        for (int a = 0; a < curve.z.cols(); ++a)
            out << "," << format_double(curve.z(k, a));
        if (p)
            for (int i = 0; i < p->cols(); ++i)
                out << "," << format_double((*p)(k, i));
        out << "\n";
    }
}

}  // namespace

void write_curve_csv(const std::filesystem::path& path,
                     const SampledCurve& curve) {
    write_csv(path, curve, nullptr);
}

void write_lifted_csv(const std::filesystem::path& path,
                      const LiftedCurve& lifted) {
    write_csv(path, lifted.base, &lifted.p);
}

CurveFile read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string header;
    if (!std::getline(in, header))
        throw std::runtime_error(path.string() + ": empty file");

    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    if (cols.empty() || cols[0] != "t")
        throw std::runtime_error(path.string() + ": header must start with t");
    int n = 0, r = 0, np = 0;
    std::size_t pos = 1;
    while (pos < cols.size() && cols[pos] == "q" + std::to_string(n + 1)) {
        ++n;
        ++pos;
    }
    while (pos < cols.size() && cols[pos] == "z" + std::to_string(r + 1)) {
        ++r;
        ++pos;
    }
    while (pos < cols.size() && cols[pos] == "p" + std::to_string(np + 1)) {
        ++np;
        ++pos;
    }
    if (pos != cols.size() || n == 0 || (np != 0 && np != n))
        throw std::runtime_error(path.string() +
                                 ": header must be t,q1..qn[,z1..zr][,p1..pn]");

    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error(path.string() + ":" +
                                         std::to_string(lineno) +
                                         ": malformed number '" + cell + "'");
            }
        }
        if (row.size() != cols.size())
            throw std::runtime_error(path.string() + ":" +
                                     std::to_string(lineno) +
                                     ": wrong number of fields");
        rows.push_back(std::move(row));
    }
    if (rows.size() < 3)
        throw std::runtime_error(path.string() + ": need at least 3 rows");

    CurveFile out;
    const int N = static_cast<int>(rows.size()) - 1;
    out.curve.N = N;
    out.curve.t0 = rows.front()[0];
    out.curve.t1 = rows.back()[0];
    if (!(out.curve.t0 < out.curve.t1))
        throw std::runtime_error(path.string() + ": grid must be increasing");
    const double h = (out.curve.t1 - out.curve.t0) / N;
    out.curve.q.resize(N + 1, n);
    out.curve.z.resize(N + 1, r);
    if (np) out.p = Eigen::MatrixXd(N + 1, np);
    for (int k = 0; k <= N; ++k) {
        const auto& row = rows[static_cast<std::size_t>(k)];
        double expected = out.curve.t0 + k * h;
        if (std::abs(row[0] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
            throw std::runtime_error(path.string() +
                                     ": grid is not uniform at row " +
                                     std::to_string(k + 2));
        for (int i = 0; i < n; ++i)
            out.curve.q(k, i) = row[static_cast<std::size_t>(1 + i)];
        for (int a = 0; a < r; ++a)
            out.curve.z(k, a) = row[static_cast<std::size_t>(1 + n + a)];
        for (int i = 0; i < np; ++i)
            (*out.p)(k, i) = row[static_cast<std::size_t>(1 + n + r + i)];
    }
    return out;
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    std::uint64_t hash = 1469598103934665603ull;
    char c;
    while (in.get(c)) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace varigauge
