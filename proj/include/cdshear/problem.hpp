#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cdshear/convexity.hpp"
#include "cdshear/dual.hpp"
#include "cdshear/field.hpp"
#include "cdshear/materials.hpp"
#include "cdshear/oracle.hpp"

namespace cdshear {

using json = nlohmann::json;

/// Per-edge boundary condition as written in the problem file.
struct EdgeInput {
    EdgeKind kind = EdgeKind::Traction;
    // traction data: empty poly and samples = induced from the stress family
    std::vector<double> poly;     // coefficients in the running edge coordinate
    std::vector<double> samples;  // explicit nodal samples
};

struct MaterialInput {
    std::string kind;  // affine | quadratic | polynomial | mooney_rivlin
    double A = 1.0, B = 0.0;
    double h0 = 1.0, xi0 = 0.0, c0 = 0.0;
    std::vector<double> coeffs;
    double c1 = 1.0, c2 = 0.0;
};

struct ProblemSpec {
    int nx = 0, ny = 0;
    double lx = 1.0, ly = 1.0;
    std::array<EdgeInput, 4> boundary;  // left, right, bottom, top order
    MaterialInput material;
    double prestretch = 1.0;
    std::optional<QuadraticMeasure> measure_override;
    std::optional<StressFamily> stress;
    BranchSelect branches = BranchSelect::Global;
    bool oracle_enabled = false;
    int oracle_n_starts = 20;
    std::uint64_t oracle_seed = 1;
    bool analysis_gqc = false;
    bool analysis_knowles = false;
    std::string out_dir = "out";
    std::vector<std::string> formats = {"json", "csv"};

    QuadraticMeasure measure() const {
        if (measure_override) return *measure_override;
        return QuadraticMeasure::anti_plane(prestretch);
    }

    CanonicalMaterial build_material() const {
        // I1-based problems live on the positive cone; a shifted measure
        // override widens the domain to the whole line
        const double domain_lo = measure_override ? -kInf : 0.0;
        if (material.kind == "affine") return CanonicalMaterial::affine(material.A, material.B, domain_lo);
        if (material.kind == "quadratic")
            return CanonicalMaterial::quadratic(material.h0, material.xi0, material.c0, domain_lo);
        if (material.kind == "polynomial") return CanonicalMaterial::polynomial(material.coeffs, domain_lo);
        if (material.kind == "mooney_rivlin")
            return mooney_rivlin_reduce(material.c1, material.c2, prestretch);
        throw ValidationError("unknown material kind: " + material.kind);
    }

    TwoInvariantEnergy two_invariant_energy() const {
        if (material.kind == "mooney_rivlin") {
            const double c1 = material.c1, c2 = material.c2;
            return [c1, c2](double I1, double I2) {
                return c1 * (I1 - 3.0) + c2 * (I2 - 3.0);
            };
        }
        const CanonicalMaterial m = build_material();
        return [m](double I1, double) { return m.V(I1); };
    }
};

namespace detail {

inline void require_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    for (const char* k : required)
        if (!j.contains(k)) throw ValidationError(where + ": missing key '" + k + "'");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : required) known = known || it.key() == k;
        for (const char* k : optional) known = known || it.key() == k;
        if (!known) throw ValidationError(where + ": unknown key '" + it.key() + "'");
    }
}

inline double require_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ValidationError(where + ": expected a number");
    return j.get<double>();
}

inline int require_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
    return j.get<int>();
}

inline std::vector<double> require_number_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(require_number(v, where));
    return out;
}

inline EdgeInput parse_edge(const json& j, const std::string& where) {
    EdgeInput e;
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "fixed") {
            e.kind = EdgeKind::Fixed;
            return e;
        }
        if (s == "traction") return e;  // data induced from the stress family
        throw ValidationError(where + ": expected \"fixed\", \"traction\", or a traction object");
    }
    require_keys(j, where, {"traction"});
    e.kind = EdgeKind::Traction;
    const json& t = j.at("traction");
    if (t.is_number()) {
        e.poly = {t.get<double>()};
    } else if (t.is_array()) {
        e.poly = require_number_array(t, where + ".traction");
    } else if (t.is_object()) {
        require_keys(t, where + ".traction", {"samples"});
        e.samples = require_number_array(t.at("samples"), where + ".traction.samples");
    } else {
        throw ValidationError(where + ".traction: expected a number, array, or {\"samples\": [...]}");
    }
    return e;
}

inline double eval_poly(const std::vector<double>& c, double s) {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * s + c[k];
    return v;
}

}  // namespace detail

inline ProblemSpec parse_problem(const json& root) {
    using detail::require_int;
    using detail::require_keys;
    using detail::require_number;
    using detail::require_number_array;

    require_keys(root, "spec", {"domain", "boundary", "material", "prestretch"},
                 {"measure", "stress", "run", "output"});
    ProblemSpec p;

    const json& dom = root.at("domain");
    require_keys(dom, "domain", {"nx", "ny", "lx", "ly"});
    p.nx = require_int(dom.at("nx"), "domain.nx");
    p.ny = require_int(dom.at("ny"), "domain.ny");
    p.lx = require_number(dom.at("lx"), "domain.lx");
    p.ly = require_number(dom.at("ly"), "domain.ly");
    if (p.nx < 3 || p.ny < 3) throw ValidationError("domain: nx, ny must be >= 3");
    if (!(p.lx > 0.0) || !(p.ly > 0.0)) throw ValidationError("domain: lx, ly must be > 0");

    const json& bnd = root.at("boundary");
    require_keys(bnd, "boundary", {"left", "right", "bottom", "top"});
    p.boundary[static_cast<std::size_t>(EdgeSide::Left)] = detail::parse_edge(bnd.at("left"), "boundary.left");
    p.boundary[static_cast<std::size_t>(EdgeSide::Right)] =
        detail::parse_edge(bnd.at("right"), "boundary.right");
    p.boundary[static_cast<std::size_t>(EdgeSide::Bottom)] =
        detail::parse_edge(bnd.at("bottom"), "boundary.bottom");
    p.boundary[static_cast<std::size_t>(EdgeSide::Top)] = detail::parse_edge(bnd.at("top"), "boundary.top");

    const json& mat = root.at("material");
    if (!mat.is_object() || !mat.contains("kind"))
        throw ValidationError("material: expected an object with a 'kind'");
    p.material.kind = mat.at("kind").get<std::string>();
    if (p.material.kind == "affine") {
        require_keys(mat, "material", {"kind", "A"}, {"B"});
        p.material.A = require_number(mat.at("A"), "material.A");
        if (mat.contains("B")) p.material.B = require_number(mat.at("B"), "material.B");
    } else if (p.material.kind == "quadratic") {
        require_keys(mat, "material", {"kind", "h0"}, {"xi0", "c0"});
        p.material.h0 = require_number(mat.at("h0"), "material.h0");
        if (mat.contains("xi0")) p.material.xi0 = require_number(mat.at("xi0"), "material.xi0");
        if (mat.contains("c0")) p.material.c0 = require_number(mat.at("c0"), "material.c0");
    } else if (p.material.kind == "polynomial") {
        require_keys(mat, "material", {"kind", "coeffs"});
        p.material.coeffs = require_number_array(mat.at("coeffs"), "material.coeffs");
    } else if (p.material.kind == "mooney_rivlin") {
        require_keys(mat, "material", {"kind", "c1", "c2"});
        p.material.c1 = require_number(mat.at("c1"), "material.c1");
        p.material.c2 = require_number(mat.at("c2"), "material.c2");
    } else {
        throw ValidationError("material.kind: unknown kind '" + p.material.kind + "'");
    }

    p.prestretch = require_number(root.at("prestretch"), "prestretch");
    if (!(p.prestretch > 0.0)) throw ValidationError("prestretch must be > 0");

    if (root.contains("measure")) {
        const json& ms = root.at("measure");
        require_keys(ms, "measure", {"alpha", "beta"});
        QuadraticMeasure m{require_number(ms.at("alpha"), "measure.alpha"),
                           require_number(ms.at("beta"), "measure.beta")};
        if (!(m.alpha > 0.0)) throw ValidationError("measure.alpha must be > 0");
        p.measure_override = m;
    }

    if (root.contains("stress")) {
        const json& st = root.at("stress");
        if (!st.is_object() || !st.contains("family"))
            throw ValidationError("stress: expected an object with a 'family'");
        const std::string fam = st.at("family").get<std::string>();
        if (fam == "constant") {
            require_keys(st, "stress", {"family", "components"});
            const auto c = require_number_array(st.at("components"), "stress.components");
            if (c.size() != 2) throw ValidationError("stress.components: expected [c1, c2]");
            p.stress = ConstantStress{c[0], c[1]};
        } else if (fam == "harmonic") {
            require_keys(st, "stress", {"family"}, {"re", "im"});
            HarmonicPolyStress h;
            if (st.contains("re")) h.re = require_number_array(st.at("re"), "stress.re");
            if (st.contains("im")) h.im = require_number_array(st.at("im"), "stress.im");
            if (h.re.empty() && h.im.empty())
                throw ValidationError("stress: harmonic family needs 're' or 'im' coefficients");
            p.stress = h;
        } else {
            throw ValidationError("stress.family: unknown family '" + fam + "'");
        }
    }

    if (root.contains("run")) {
        const json& run = root.at("run");
        require_keys(run, "run", {}, {"branches", "oracle", "analysis"});
        if (run.contains("branches")) {
            const std::string b = run.at("branches").get<std::string>();
            if (b == "global")
                p.branches = BranchSelect::Global;
            else if (b == "all")
                p.branches = BranchSelect::AllBranches;
            else
                throw ValidationError("run.branches: expected \"global\" or \"all\"");
        }
        if (run.contains("oracle")) {
            const json& o = run.at("oracle");
            require_keys(o, "run.oracle", {"enabled"}, {"n_starts", "seed"});
            p.oracle_enabled = o.at("enabled").get<bool>();
            if (o.contains("n_starts")) p.oracle_n_starts = require_int(o.at("n_starts"), "run.oracle.n_starts");
            if (o.contains("seed"))
                p.oracle_seed = static_cast<std::uint64_t>(require_int(o.at("seed"), "run.oracle.seed"));
            if (p.oracle_n_starts < 1) throw ValidationError("run.oracle.n_starts must be >= 1");
        }
        if (run.contains("analysis")) {
            const json& a = run.at("analysis");
            require_keys(a, "run.analysis", {}, {"g_quasiconvex", "knowles"});
            if (a.contains("g_quasiconvex")) p.analysis_gqc = a.at("g_quasiconvex").get<bool>();
            if (a.contains("knowles")) p.analysis_knowles = a.at("knowles").get<bool>();
        }
    }

    if (root.contains("output")) {
        const json& out = root.at("output");
        require_keys(out, "output", {}, {"dir", "formats"});
        if (out.contains("dir")) p.out_dir = out.at("dir").get<std::string>();
        if (out.contains("formats")) {
            p.formats.clear();
            for (const auto& f : out.at("formats")) {
                const std::string s = f.get<std::string>();
                if (s != "json" && s != "csv")
                    throw ValidationError("output.formats: unknown format '" + s + "'");
                p.formats.push_back(s);
            }
        }
    }
    return p;
}

inline ProblemSpec load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open problem file: " + path);
    json root;
    try {
        in >> root;
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("problem file is not valid JSON: ") + e.what());
    }
    return parse_problem(root);
}

inline GridDomain build_domain(const ProblemSpec& p, int grid_scale = 1) {
    if (grid_scale < 1) throw ValidationError("grid scale must be >= 1");
    const int nx = p.nx * grid_scale, ny = p.ny * grid_scale;
    std::array<EdgeSpec, 4> edges;
    for (std::size_t side = 0; side < 4; ++side) {
        const EdgeInput& in = p.boundary[side];
        EdgeSpec& e = edges[side];
        e.kind = in.kind;
        if (in.kind == EdgeKind::Fixed) continue;
        const bool vertical = side == static_cast<std::size_t>(EdgeSide::Left) ||
                              side == static_cast<std::size_t>(EdgeSide::Right);
        const int count = vertical ? ny : nx;
        if (!in.samples.empty()) {
            if (static_cast<int>(in.samples.size()) != count)
                throw ValidationError("boundary samples do not match the grid (after scaling)");
            e.t = in.samples;
        } else if (!in.poly.empty()) {
            e.t.resize(static_cast<std::size_t>(count));
            const double len = vertical ? p.ly : p.lx;
            for (int k = 0; k < count; ++k)
                e.t[static_cast<std::size_t>(k)] =
                    detail::eval_poly(in.poly, len * k / (count - 1));
        }
        // else: left empty, to be induced from the stress family
    }
    return GridDomain(nx, ny, p.lx, p.ly, edges);
}

struct RunResult {
    json report;
    GridDomain dom;
    StressField stress;
    std::vector<SolutionField> fields;
};

namespace detail {

inline json branch_report(const GridDomain& dom, const SolutionField& f) {
    json b;
    b["id"] = f.branch_id;
    b["complete"] = f.complete;
    b["approximate"] = f.approximate;
    b["undefined_nodes"] = f.undefined_nodes;
    if (f.complete) {
        b["curl_residual"] = f.curl_residual;
        b["Pi_primal"] = f.Pi_primal;
        b["Pi_dual"] = f.Pi_dual;
        b["gap_value"] = f.gap_value;
        double zmin = kInf, zmax = -kInf;
        for (double z : f.zeta) {
            zmin = std::min(zmin, z);
            zmax = std::max(zmax, z);
        }
        b["zeta_min"] = zmin;
        b["zeta_max"] = zmax;
    }
    std::map<std::string, int> counts;
    for (int n = 0; n < dom.node_count(); ++n)
        if (f.defined[static_cast<std::size_t>(n)])
            counts[to_string(f.labels[static_cast<std::size_t>(n)])]++;
    b["label_counts"] = counts;
    return b;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline void write_field_csv(const std::string& path, const GridDomain& dom,
                            const StressField& s, const SolutionField& f) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "x1,x2,tau1,tau2,tau_sq,zeta,u,label\n";
    for (int j = 0; j < dom.ny(); ++j)
        for (int i = 0; i < dom.nx(); ++i) {
            const std::size_t n = static_cast<std::size_t>(dom.node(i, j));
            out << format_double(dom.x1(i)) << ',' << format_double(dom.x2(j)) << ','
                << format_double(s.tau[n][0]) << ',' << format_double(s.tau[n][1]) << ','
                << format_double(s.tau_sq(static_cast<int>(n))) << ','
                << format_double(f.zeta[n]) << ',' << format_double(f.complete ? f.u[n] : kNaN)
                << ',' << (f.defined[n] ? to_string(f.labels[n]) : "Missing") << '\n';
        }
}

}  // namespace detail

/// Run the full pipeline for a parsed problem. Writes nothing; see
/// write_outputs for the report/CSV emission.
inline RunResult run_problem(const ProblemSpec& p, int grid_scale = 1,
                             std::optional<std::uint64_t> seed_override = std::nullopt) {
    const auto t0 = std::chrono::steady_clock::now();
    GridDomain dom = build_domain(p, grid_scale);
    const CanonicalMaterial mat = p.build_material();
    const QuadraticMeasure meas = p.measure();

    StressField stress = p.stress ? build_stress_analytic(dom, *p.stress)
                                  : build_stress_numeric(dom);

    const auto t1 = std::chrono::steady_clock::now();
    std::vector<SolutionField> fields = solve_field(dom, mat, meas, stress, p.branches);
    const auto t2 = std::chrono::steady_clock::now();

    json rep;
    rep["schema"] = "cdshear-report-v1";
    {
        json prob;
        prob["nx"] = dom.nx();
        prob["ny"] = dom.ny();
        prob["lx"] = dom.lx();
        prob["ly"] = dom.ly();
        prob["material"] = p.material.kind;
        prob["prestretch"] = p.prestretch;
        prob["measure"] = {{"alpha", meas.alpha}, {"beta", meas.beta}};
        prob["branches"] = p.branches == BranchSelect::Global ? "global" : "all";
        rep["problem"] = prob;
    }
    {
        double max_tau = 0.0;
        for (int n = 0; n < dom.node_count(); ++n)
            max_tau = std::max(max_tau, std::sqrt(stress.tau_sq(n)));
        rep["stress"] = {{"div_residual", stress.div_residual},
                         {"bc_residual", stress.bc_residual},
                         {"max_tau", max_tau}};
    }
    rep["branches"] = json::array();
    for (const auto& f : fields) rep["branches"].push_back(detail::branch_report(dom, f));

    double oracle_ms = 0.0;
    if (p.oracle_enabled) {
        OracleOptions opt;
        opt.n_starts = p.oracle_n_starts;
        opt.seed = seed_override ? *seed_override : p.oracle_seed;
        const auto to0 = std::chrono::steady_clock::now();
        const OracleResult res = multistart_minimize(dom, mat, meas, stress, opt);
        oracle_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - to0)
                        .count();
        json o;
        o["n_starts"] = res.n_starts;
        o["seed"] = opt.seed;
        o["converged_fraction"] = res.converged_fraction;
        o["Pi_best"] = res.Pi_best;
        const double pi_dual_global = fields.empty() ? kNaN : fields.front().Pi_dual;
        o["clusters"] = json::array();
        for (const auto& c : res.local_minima) {
            json cj;
            cj["Pi"] = c.Pi;
            cj["count"] = c.count;
            cj["grad_norm"] = c.grad_norm;
            cj["gap_to_dual"] = c.Pi - pi_dual_global;
            o["clusters"].push_back(cj);
        }
        rep["oracle"] = o;
    }

    if (p.analysis_gqc || p.analysis_knowles) {
        json an;
        const CanonicalMaterial m2 = mat;
        const QuadraticMeasure ms2 = meas;
        if (p.analysis_gqc) {
            double max_tau = 0.0;
            for (int n = 0; n < dom.node_count(); ++n)
                max_tau = std::max(max_tau, std::sqrt(stress.tau_sq(n)));
            auto integrand = [m2, ms2](double t) {
                return ScalarField2([m2, ms2, t](std::array<double, 2> g) {
                    return m2.V(ms2.lam(g[0] * g[0] + g[1] * g[1])) - g[0] * t;
                });
            };
            auto verdict = [&](double t) {
                const GqcResult r = check_g_quasiconvex(integrand(t), {}, 100000, 2027);
                json v;
                v["violation_found"] = r.violation_found;
                v["samples_checked"] = r.samples_checked;
                if (r.violation_found) {
                    v["violation"] = {{"a", r.violation.a},
                                      {"b", r.violation.b},
                                      {"theta", r.violation.theta},
                                      {"margin", r.violation.margin}};
                }
                return v;
            };
            an["g_quasiconvex_zero_load"] = verdict(0.0);
            an["g_quasiconvex_at_max_tau"] = verdict(max_tau);
        }
        if (p.analysis_knowles) {
            const TwoInvariantEnergy W = p.two_invariant_energy();
            const auto ell = check_knowles_ellipticity(W, p.prestretch, 3.0, 256);
            json e;
            e["holds"] = ell.holds;
            if (!ell.holds) e["first_failure_R"] = ell.first_failure_R;
            an["knowles_ellipticity"] = e;
            const auto con = check_knowles_constitutive(W, p.prestretch, 64);
            an["knowles_constitutive"] = {{"residual_max", con.residual_max},
                                          {"b_used", con.b_used}};
        }
        rep["analysis"] = an;
    }

    const auto t3 = std::chrono::steady_clock::now();
    rep["timings"] = {
        {"stress_ms", std::chrono::duration<double, std::milli>(t1 - t0).count()},
        {"solve_ms", std::chrono::duration<double, std::milli>(t2 - t1).count()},
        {"oracle_ms", oracle_ms},
        {"total_ms", std::chrono::duration<double, std::milli>(t3 - t0).count()}};
    rep["timestamp"] = static_cast<std::int64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());

    return RunResult{std::move(rep), std::move(dom), std::move(stress), std::move(fields)};
}

inline void write_outputs(const RunResult& run, const ProblemSpec& p, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    for (const std::string& fmt : p.formats) {
        if (fmt == "json") {
            const std::string path = out_dir + "/report.json";
            std::ofstream out(path);
            if (!out) throw IoError("cannot write " + path);
            out << run.report.dump(2) << '\n';
        } else if (fmt == "csv") {
            for (const auto& f : run.fields) {
                const std::string name = p.branches == BranchSelect::Global
                                             ? std::string("global")
                                             : "b" + std::to_string(f.branch_id);
                detail::write_field_csv(out_dir + "/fields_" + name + ".csv", run.dom, run.stress,
                                        f);
            }
        }
    }
}

/// Exit-code policy shared by the CLI: validation 2, solver 3, io 4.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return 4;
    if (dynamic_cast<const ValidationError*>(&e)) return 2;
    if (dynamic_cast<const Error*>(&e)) return 3;
    return 3;
}

}  // namespace cdshear
