#include "bjl/scenario.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <random>
#include <sstream>

#include "bjl/lazutkin.hpp"
#include "bjl/manifolds.hpp"
#include "bjl/normal_form.hpp"
#include "bjl/perturb.hpp"
#include "json.hpp"

namespace bjl {

using nlohmann::json;

double tolerance_scale() {
    const char* v = std::getenv("BJL_TOL_SCALE");
    if (!v) return 1.0;
    double s = std::atof(v);
    return s > 0 ? s : 1.0;
}

void emit_plot_data(const std::vector<std::pair<double, double>>& series,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write plot file: " + path);
    out.precision(17);
    for (const auto& [x, y] : series) out << x << " " << y << "\n";
}

namespace {

std::string fnv_hash(const std::string& text) {
    unsigned long long h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

struct Context {
    std::shared_ptr<Domain> domain;
    std::map<std::string, PeriodicOrbit> orbits;
    std::filesystem::path out_dir;
    double tol_scale = 1.0;
    unsigned seed = 0;
};

struct StepEval {
    bool pass = true;
    std::string contract;
    json measured;
};

using OpFn = std::function<StepEval(Context&, const json&)>;

double tol_of(const Context& ctx, const json& params, const char* key, double fallback) {
    return params.value(key, fallback) * ctx.tol_scale;
}

PeriodicOrbit& orbit_ref(Context& ctx, const json& params, const char* key = "orbit") {
    std::string name = params.value(key, "default");
    auto it = ctx.orbits.find(name);
    if (it == ctx.orbits.end())
        throw std::runtime_error("unknown orbit name in pipeline: " + name);
    return it->second;
}

const std::map<std::string, OpFn>& op_registry() {
    static const std::map<std::string, OpFn> registry = {
        {"check_admissibility",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "positivity, closure (first harmonic), unit length";
             auto rep = check_admissibility(*ctx.domain, tol_of(ctx, params, "rho_tol", 1e-9),
                                            tol_of(ctx, params, "harmonic_tol", 1e-9),
                                            tol_of(ctx, params, "length_tol", 1e-9));
             ev.pass = rep.pass;
             ev.measured = {{"min_rho", rep.min_rho},
                            {"first_harmonic_residual", rep.first_harmonic_residual},
                            {"length_error", rep.length_error}};
             return ev;
         }},
        {"eval_boundary",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "boundary point evaluation";
             auto bp = ctx.domain->eval_boundary(params.value("s", 0.0), params.value("order", 2));
             ev.measured = {{"s", bp.s},
                            {"theta", bp.theta},
                            {"x", bp.position[0]},
                            {"y", bp.position[1]},
                            {"curvature_jet", bp.curvature_jet}};
             return ev;
         }},
        {"next_hit",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "billiard step";
             PhasePoint q = next_hit(*ctx.domain,
                                     {params.value("s", 0.0), params.value("phi", M_PI / 2)});
             ev.measured = {{"s", q.s}, {"phi", q.phi}};
             if (params.contains("expect_s")) {
                 double tol = tol_of(ctx, params, "tol", 1e-10);
                 double es = params["expect_s"].get<double>();
                 double ephi = params.value("expect_phi", q.phi);
                 ev.pass = s_distance(q.s, es) < tol && std::abs(q.phi - ephi) < tol;
                 ev.measured["expected_s"] = es;
                 ev.measured["tolerance"] = tol;
             }
             return ev;
         }},
        {"area_twist_sample",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "det df = sin(phi0)/sin(phi1) and twist ds1/dphi0 > 0";
             int n = params.value("points", 500);
             double tol = tol_of(ctx, params, "tol", 1e-11);
             std::mt19937_64 rng(ctx.seed + 17);
             std::uniform_real_distribution<double> us(0.0, 1.0), uphi(0.12, M_PI - 0.12);
             double worst = 0, min_twist = 1e300;
             for (int i = 0; i < n; ++i) {
                 PhasePoint p{us(rng), uphi(rng)};
                 PhasePoint q = next_hit(*ctx.domain, p);
                 Mat2 df = one_step_differential(*ctx.domain, p);
                 worst = std::max(worst, std::abs(df.det() - std::sin(p.phi) / std::sin(q.phi)));
                 min_twist = std::min(min_twist, df.b);
             }
             ev.pass = worst < tol && min_twist > 0;
             ev.measured = {{"max_det_error", worst}, {"min_twist", min_twist}, {"tolerance", tol}};
             return ev;
         }},
        {"find_orbit",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "reflection-law critical point";
             int p = params.value("p", 1), q = params.value("q", 2);
             PeriodicOrbit orbit;
             if (params.contains("seed_config")) {
                 std::vector<double> seed = params["seed_config"].get<std::vector<double>>();
                 orbit = orbit_from_seed(*ctx.domain, p, q, seed);
             } else {
                 orbit = find_birkhoff_orbit(*ctx.domain, p, q, params.value("seed_s0", 0.0));
             }
             double tol = tol_of(ctx, params, "residual_tol", 1e-10);
             ev.pass = orbit.residual < tol;
             json pts = json::array();
             for (const auto& pt : orbit.points) pts.push_back({{"s", pt.s}, {"phi", pt.phi}});
             ev.measured = {{"residual", orbit.residual}, {"tolerance", tol}, {"points", pts}};
             ctx.orbits[params.value("store_as", "default")] = std::move(orbit);
             return ev;
         }},
        {"classify_orbit",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "trace classification with the parabolic tolerance band";
             PeriodicOrbit& o = orbit_ref(ctx, params);
             EigenData e = classify(o, *ctx.domain);
             std::string cls = e.cls == OrbitClass::hyperbolic  ? "hyperbolic"
                               : e.cls == OrbitClass::elliptic ? "elliptic"
                                                               : "parabolic";
             ev.measured = {{"classification", cls}, {"trace", e.trace}, {"det", e.det}};
             if (e.cls == OrbitClass::hyperbolic) {
                 ev.measured["lambda"] = e.lambda;
                 ev.measured["omega1"] = e.omega1;
                 ev.measured["omega2"] = e.omega2;
                 ev.measured["min_vertical_angle"] = e.min_vertical_angle;
             }
             if (params.contains("expect"))
                 ev.pass = params["expect"].get<std::string>() == cls;
             return ev;
         }},
        {"orbit_jet",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "monodromy determinant = 1 at a periodic point";
             PeriodicOrbit& o = orbit_ref(ctx, params);
             int order = params.value("order", 2);
             JetMap2 m = monodromy(*ctx.domain, o, order);
             o.monodromy_jet = m;
             double tol = tol_of(ctx, params, "det_tol", 1e-9);
             double det_err = std::abs(m.linear().det() - 1.0);
             ev.pass = det_err < tol;
             ev.measured = {{"order", order},
                            {"trace", m.linear().trace()},
                            {"det_error", det_err},
                            {"tolerance", tol}};
             return ev;
         }},
        {"absolute_periodicity",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "identity-jet order and length-derivative identities";
             PeriodicOrbit& o = orbit_ref(ctx, params);
             auto rep = check_absolute_periodicity_order(*ctx.domain, o, params.value("n", 2));
             double tol = tol_of(ctx, params, "identity_tol", 1e-9);
             ev.pass = rep.dL_ds0_identity_error < tol && rep.dL_dphi0_identity_error < tol;
             ev.measured = {{"order", rep.order},
                            {"dL_ds0_identity_error", rep.dL_ds0_identity_error},
                            {"dL_dphi0_identity_error", rep.dL_dphi0_identity_error},
                            {"tolerance", tol}};
             return ev;
         }},
        {"perturb_predict",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "first-order differential response prediction";
             PeriodicOrbit& o = orbit_ref(ctx, params);
             SegmentPartials seg = SegmentPartials::from_orbit(*ctx.domain, o, o.q);
             Mat2 D = predict_delta_differential(seg, params.value("k", 1),
                                                 params.value("eps", 1e-4));
             ev.measured = {{"delta", {D.a, D.b, D.c, D.d}}};
             return ev;
         }},
        {"perturb_solve",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "bump increments from the response matrix";
             PeriodicOrbit& o = orbit_ref(ctx, params);
             int m = params.value("map_order", 1);
             SegmentPartials seg = SegmentPartials::from_orbit(*ctx.domain, o, o.q);
             std::vector<int> pts;
             if (params.contains("points")) pts = params["points"].get<std::vector<int>>();
             MMatrix M = assemble_M(seg, m, o.q, pts);
             std::vector<double> target = params.value("target", std::vector<double>(m + 2, 0.0));
             std::vector<double> eps = solve_epsilons_for_target(M, target);
             ev.measured = {{"epsilons", eps},
                            {"det_M", M.direct_det},
                            {"min_condition10_partial", M.min_condition10_partial}};
             return ev;
         }},
        {"perturb_rotate",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "rotated order-1 block within the quadratic residue";
             PeriodicOrbit& o = orbit_ref(ctx, params);
             double delta = params.value("delta", 1e-3);
             RotationPlan plan =
                 rotate_differential(*ctx.domain, o, delta, params.value("n", 0));
             double tol = tol_of(ctx, params, "linear_tol", 1e-5);
             ev.pass = plan.linear_error < tol;
             ev.measured = {{"linear_error", plan.linear_error},
                            {"tolerance", tol},
                            {"stages", plan.stages.size()}};
             if (params.contains("domain_artifact")) {
                 save_profile(plan.final_profile,
                              (ctx.out_dir / params["domain_artifact"].get<std::string>()).string());
             }
             return ev;
         }},
        {"reduction_certificate",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "direct determinant vs replayed reduction, relative 1e-7";
             PhasePoint start{params.value("s", 0.1), params.value("phi", 1.2)};
             int map_order = params.value("map_order", 1);
             SegmentPartials seg = SegmentPartials::from_point(*ctx.domain, start, map_order + 3);
             ReductionCertificate cert = det_via_reduction(seg, map_order);
             ev.pass = cert.pass;
             ev.measured = json::parse(certificate_to_json_text(cert));
             if (params.contains("artifact")) {
                 std::ofstream out(ctx.out_dir / params["artifact"].get<std::string>());
                 out << certificate_to_json_text(cert) << "\n";
             }
             return ev;
         }},
        {"manifold_grow",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "invariant-manifold globalization within the chord tolerance";
             PeriodicOrbit& o = orbit_ref(ctx, params);
             classify(o, *ctx.domain);
             SaddleMap m = billiard_saddle_map(*ctx.domain, o);
             bool unstable = params.value("branch", "unstable") == std::string("unstable");
             ManifoldArc arc = local_manifold(m, unstable, params.value("sign", 1),
                                              params.value("order", 5));
             double factor = params.value("t_max_factor", 30.0);
             GlobalArc g = globalize(m, arc, arc.seed_radius * 0.1, arc.seed_radius * factor,
                                     params.value("max_points", 8000),
                                     tol_of(ctx, params, "chord_tol", 1e-6));
             ev.measured = {{"points", g.points.size()},
                            {"chord_error", g.chord_error},
                            {"arclength", g.arclength},
                            {"seed_defect", arc.seed_defect}};
             if (params.contains("artifact")) {
                 std::ofstream out(ctx.out_dir / params["artifact"].get<std::string>());
                 out.precision(17);
                 out << "t,s,phi\n";
                 for (std::size_t i = 0; i < g.params.size(); ++i)
                     out << g.params[i] << "," << g.points[i].s << "," << g.points[i].phi << "\n";
             }
             return ev;
         }},
        {"lazutkin_check",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "near-boundary residual exponents";
             LazutkinReport rep = lazutkin_check(*ctx.domain, params.value("y_min", 1e-3),
                                                 params.value("y_max", 1e-1));
             ev.measured = {{"x_residual_exponent", rep.x_residual_exponent},
                            {"y_residual_exponent", rep.y_residual_exponent},
                            {"exponent_gap", rep.exponent_gap},
                            {"max_r1", rep.max_r1},
                            {"max_r2", rep.max_r2}};
             if (params.contains("expect_gap")) {
                 double tol = tol_of(ctx, params, "gap_tol", 0.2);
                 ev.pass = std::abs(rep.exponent_gap - params["expect_gap"].get<double>()) < tol;
                 ev.measured["tolerance"] = tol;
             }
             if (params.contains("max_residual")) {
                 double tol = tol_of(ctx, params, "max_residual", 1e-12);
                 ev.pass = ev.pass && rep.max_r1 < tol && rep.max_r2 < tol;
             }
             if (params.contains("artifact")) {
                 std::vector<std::pair<double, double>> series;
                 for (const auto& s : rep.samples) series.emplace_back(s[0], s[1]);
                 emit_plot_data(series,
                                (ctx.out_dir / params["artifact"].get<std::string>()).string());
             }
             return ev;
         }},
        {"injectivity",
         [](Context& ctx, const json& params) {
             StepEval ev;
             ev.contract = "at least three injective points per orbit";
             std::vector<std::vector<PhasePoint>> sets;
             for (const auto& name : params.value("orbits", std::vector<std::string>{"default"}))
                 sets.push_back(orbit_ref(ctx, json{{"orbit", name}}).points);
             InjectivityReport rep = injectivity_check(sets, params.value("delta", 1e-3));
             json verdicts = json::array();
             for (const auto& v : rep.points)
                 verdicts.push_back({{"orbit", v.orbit},
                                     {"index", v.index},
                                     {"injective", v.injective},
                                     {"nearest_foreign", v.nearest_foreign}});
             ev.measured = {{"points", verdicts}, {"orbit_pass", rep.orbit_pass}};
             return ev;
         }},
        {"fail",
         [](Context&, const json& params) {
             StepEval ev;
             ev.contract = params.value("contract", "deliberate failure");
             ev.pass = false;
             ev.measured = {{"note", "requested failure"}};
             return ev;
         }},
    };
    return registry;
}

}  // namespace

ScenarioReport run_scenario_text(const std::string& scenario_json, const std::string& out_dir,
                                 bool deterministic, bool parallel) {
    json spec = json::parse(scenario_json);
    Context ctx;
    ctx.tol_scale = tolerance_scale();
    ctx.seed = spec.value("seed", 0u);
    ctx.out_dir = out_dir.empty() ? std::filesystem::current_path()
                                  : std::filesystem::path(out_dir);
    if (!out_dir.empty()) std::filesystem::create_directories(ctx.out_dir);

    RadiusProfile profile;
    if (spec.contains("domain"))
        profile = profile_from_json_text(spec["domain"].dump());
    else if (spec.contains("domain_path"))
        profile = load_profile(spec["domain_path"].get<std::string>());
    else
        profile = circle_profile();
    ctx.domain = std::make_shared<Domain>(profile);

    ScenarioReport report;
    report.domain_hash = fnv_hash(profile_to_json_text(profile));

    json steps = spec.value("pipeline", json::array());
    std::vector<StepOutcome> outcomes(steps.size());

    auto run_step = [&](std::size_t i) {
        const json& step = steps[i];
        StepOutcome out;
        out.op = step.value("op", "");
        out.name = step.value("name", out.op + "#" + std::to_string(i));
        auto start = std::chrono::steady_clock::now();
        try {
            auto it = op_registry().find(out.op);
            if (it == op_registry().end())
                throw std::runtime_error("unknown operation: " + out.op);
            StepEval ev = it->second(ctx, step.value("params", json::object()));
            out.status = ev.pass ? "pass" : "fail";
            out.contract = ev.contract;
            out.measured_json = ev.measured.dump();
        } catch (const std::exception& e) {
            out.status = "error";
            out.measured_json = json{{"message", e.what()}}.dump();
        }
        out.duration_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
        outcomes[i] = std::move(out);
    };

    if (parallel) {
        // wave scheduling over declared dependency edges; steps sharing orbit
        // state must declare deps to stay ordered
        std::vector<bool> done(steps.size(), false);
        while (true) {
            std::vector<std::size_t> ready;
            for (std::size_t i = 0; i < steps.size(); ++i) {
                if (done[i]) continue;
                bool ok = true;
                for (int dep : steps[i].value("deps", std::vector<int>{}))
                    if (dep >= 0 && dep < static_cast<int>(steps.size()) && !done[dep]) ok = false;
                if (ok) ready.push_back(i);
            }
            if (ready.empty()) break;
            std::vector<std::future<void>> futs;
            for (std::size_t i : ready)
                futs.push_back(std::async(std::launch::async, run_step, i));
            for (auto& f : futs) f.get();
            for (std::size_t i : ready) done[i] = true;
        }
    } else {
        for (std::size_t i = 0; i < steps.size(); ++i) run_step(i);
    }

    bool all = true;
    json jsteps = json::array();
    for (auto& out : outcomes) {
        all = all && out.status == "pass";
        json js = {{"name", out.name},
                   {"op", out.op},
                   {"status", out.status},
                   {"contract", out.contract},
                   {"measured", json::parse(out.measured_json.empty() ? "{}" : out.measured_json)}};
        if (!deterministic) js["duration_ms"] = out.duration_ms;
        jsteps.push_back(js);
        report.steps.push_back(std::move(out));
    }
    report.pass = all;
    json jrep = {{"pass", all},
                 {"domain_hash", report.domain_hash},
                 {"tool", "bjl"},
                 {"version", "1.0.0"},
                 {"steps", jsteps}};
    report.report_json = jrep.dump(2);
    if (!out_dir.empty()) {
        std::ofstream out(ctx.out_dir / "report.json");
        out << report.report_json << "\n";
    }
    return report;
}

ScenarioReport run_scenario(const std::string& path, const std::string& out_dir,
                            bool deterministic, bool parallel) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return run_scenario_text(ss.str(), out_dir, deterministic, parallel);
}

}  // namespace bjl
