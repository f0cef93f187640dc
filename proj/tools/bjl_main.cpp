// Command-line driver for the billiard laboratory: domain checks, orbit
// finding and classification, perturbation calculus, invariant manifolds,
// tangency scans and the acceptance suite.
//
// Exit codes: 0 pass, 1 numeric failure, 2 usage or input error.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bjl/acceptance.hpp"
#include "bjl/lazutkin.hpp"
#include "bjl/manifolds.hpp"
#include "bjl/normal_form.hpp"
#include "bjl/perturb.hpp"
#include "bjl/scenario.hpp"
#include "json.hpp"

using namespace bjl;
using nlohmann::json;

namespace {

Domain load_domain(const std::string& path) { return Domain(load_profile(path)); }

PeriodicOrbit load_orbit(const Domain& d, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open orbit file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    PeriodicOrbit o = orbit_from_json_text(ss.str());
    return refine_newton(d, o, true, 1e-12);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << text << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bjl: numerical laboratory for smooth strictly convex planar billiards"};
    app.require_subcommand(1);

    std::string domain_path, orbit_path, out_path, scenario_path;
    std::string orbits_csv, branch = "unstable", target_csv;
    int p = 1, q = 2, order = 2, k = 1, n = 0, map_order = 1, samples = 128, iterates = 5;
    double seed_s0 = 0.0, eps = 1e-4, delta_rot = 1e-3, delta_inj = 1e-3;
    double win_lo = 0.0, win_hi = 0.0, tmax_factor = 30.0, chord_tol = 1e-6;
    bool deterministic = false, parallel = false;

    // ------------------------------------------------------------- domain
    auto* cmd_domain = app.add_subcommand("domain", "domain admissibility and geometry");
    auto* dom_check = cmd_domain->add_subcommand("check", "admissibility report");
    dom_check->add_option("domain", domain_path, "domain JSON file")->required();
    auto* dom_show = cmd_domain->add_subcommand("show", "boundary CSV dump");
    dom_show->add_option("domain", domain_path)->required();
    dom_show->add_option("--samples", samples, "boundary samples");
    dom_show->add_option("--out", out_path, "output file (default stdout)");

    // -------------------------------------------------------------- orbit
    auto* cmd_orbit = app.add_subcommand("orbit", "periodic orbits");
    auto* orb_find = cmd_orbit->add_subcommand("find", "find a Birkhoff orbit");
    orb_find->add_option("--domain", domain_path)->required();
    orb_find->add_option("--p", p);
    orb_find->add_option("--q", q)->required();
    orb_find->add_option("--seed", seed_s0, "seed s0 for the configuration");
    orb_find->add_option("--out", out_path, "orbit JSON output");
    std::string csv_path;
    orb_find->add_option("--csv", csv_path, "impact dump (s, phi, x, y, kappa)");
    auto* orb_classify = cmd_orbit->add_subcommand("classify", "classification and eigen-data");
    orb_classify->add_option("--domain", domain_path)->required();
    orb_classify->add_option("--orbit", orbit_path)->required();
    auto* orb_jet = cmd_orbit->add_subcommand("jet", "monodromy jet coefficients");
    orb_jet->add_option("--domain", domain_path)->required();
    orb_jet->add_option("--orbit", orbit_path)->required();
    orb_jet->add_option("--order", order);

    // ------------------------------------------------------------ perturb
    auto* cmd_perturb = app.add_subcommand("perturb", "curvature perturbation calculus");
    auto* pert_predict = cmd_perturb->add_subcommand("predict", "first-order response of df^q");
    pert_predict->add_option("--domain", domain_path)->required();
    pert_predict->add_option("--orbit", orbit_path)->required();
    pert_predict->add_option("--k", k, "perturbed impact index");
    pert_predict->add_option("--eps", eps);
    auto* pert_solve = cmd_perturb->add_subcommand("solve", "bump increments for a jet target");
    pert_solve->add_option("--domain", domain_path)->required();
    pert_solve->add_option("--orbit", orbit_path)->required();
    pert_solve->add_option("--map-order", map_order);
    pert_solve->add_option("--target", target_csv, "comma-separated target changes")->required();
    auto* pert_apply = cmd_perturb->add_subcommand("apply", "apply bump increments to the domain");
    pert_apply->add_option("--domain", domain_path)->required();
    pert_apply->add_option("--orbit", orbit_path)->required();
    pert_apply->add_option("--map-order", map_order);
    pert_apply->add_option("--eps-list", target_csv, "comma-separated increments")->required();
    pert_apply->add_option("--out", out_path, "patched domain JSON")->required();
    auto* pert_rotate = cmd_perturb->add_subcommand("rotate", "staged rotation of df^q");
    pert_rotate->add_option("--domain", domain_path)->required();
    pert_rotate->add_option("--orbit", orbit_path)->required();
    pert_rotate->add_option("--delta", delta_rot);
    pert_rotate->add_option("--n", n, "protected jet order");
    pert_rotate->add_option("--out", out_path, "rotated domain JSON");

    // ----------------------------------------------------------- manifold
    auto* cmd_manifold = app.add_subcommand("manifold", "invariant manifolds");
    auto* man_grow = cmd_manifold->add_subcommand("grow", "globalize a manifold arc");
    man_grow->add_option("--domain", domain_path)->required();
    man_grow->add_option("--orbit", orbit_path)->required();
    man_grow->add_option("--branch", branch, "unstable|stable");
    man_grow->add_option("--order", order);
    man_grow->add_option("--tmax-factor", tmax_factor);
    man_grow->add_option("--chord-tol", chord_tol);
    man_grow->add_option("--out", out_path, "CSV polyline output");

    // ----------------------------------------------------------- tangency
    auto* cmd_tangency = app.add_subcommand("tangency", "splitting function scans");
    auto* tan_scan = cmd_tangency->add_subcommand("scan", "sample the splitting function");
    tan_scan->add_option("--domain", domain_path)->required();
    tan_scan->add_option("--orbit", orbit_path)->required();
    tan_scan->add_option("--window-lo", win_lo)->required();
    tan_scan->add_option("--window-hi", win_hi)->required();
    tan_scan->add_option("--samples", samples);
    tan_scan->add_option("--out", out_path, "(t, Phi) plot data output");

    // --------------------------------------------------------- injectivity
    auto* cmd_inject = app.add_subcommand("injectivity", "vertical-line separation verdicts");
    cmd_inject->add_option("--domain", domain_path)->required();
    cmd_inject->add_option("--orbits", orbits_csv, "comma-separated orbit JSON files")->required();
    cmd_inject->add_option("--delta", delta_inj);

    // ------------------------------------------------------------- verify
    auto* cmd_verify = app.add_subcommand("verify", "verification suites");
    auto* verify_all = cmd_verify->add_subcommand("all", "run every acceptance criterion");

    // ----------------------------------------------------------- scenario
    auto* cmd_scenario = app.add_subcommand("scenario", "pipeline driver");
    auto* scen_run = cmd_scenario->add_subcommand("run", "execute a scenario file");
    scen_run->add_option("scenario", scenario_path)->required();
    scen_run->add_option("--out", out_path, "artifact directory");
    scen_run->add_flag("--deterministic", deterministic, "omit timing fields from the report");
    scen_run->add_flag("--parallel", parallel, "run independent steps concurrently");

    // also expose lambda-decay measurement under tangency
    auto* tan_lift = cmd_tangency->add_subcommand("lift", "displacement decay of the manifold");
    tan_lift->add_option("--domain", domain_path)->required();
    tan_lift->add_option("--orbit", orbit_path)->required();
    tan_lift->add_option("--tau", eps, "curvature bump size");
    tan_lift->add_option("--iterates", iterates);
    tan_lift->add_option("--out", out_path, "(k, log displacement) plot data output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (dom_check->parsed()) {
            Domain d = load_domain(domain_path);
            auto rep = check_admissibility(d);
            json j = {{"pass", rep.pass},
                      {"min_rho", rep.min_rho},
                      {"first_harmonic_residual", rep.first_harmonic_residual},
                      {"length_error", rep.length_error}};
            std::cout << j.dump(2) << "\n";
            return rep.pass ? 0 : 1;
        }
        if (dom_show->parsed()) {
            Domain d = load_domain(domain_path);
            std::ostringstream os;
            os.precision(17);
            os << "s,theta,x,y,kappa\n";
            for (int i = 0; i < samples; ++i) {
                auto bp = d.eval_boundary(static_cast<double>(i) / samples, 0);
                os << bp.s << "," << bp.theta << "," << bp.position[0] << "," << bp.position[1]
                   << "," << bp.curvature_jet[0] << "\n";
            }
            write_text(out_path, os.str());
            return 0;
        }
        if (orb_find->parsed()) {
            Domain d = load_domain(domain_path);
            PeriodicOrbit o = find_birkhoff_orbit(d, p, q, seed_s0);
            classify(o, d);
            if (!csv_path.empty()) write_text(csv_path, orbit_csv(d, o.points));
            write_text(out_path, orbit_to_json_text(o));
            return o.residual < 1e-10 ? 0 : 1;
        }
        if (orb_classify->parsed()) {
            Domain d = load_domain(domain_path);
            PeriodicOrbit o = load_orbit(d, orbit_path);
            classify(o, d);
            std::cout << orbit_to_json_text(o) << "\n";
            return 0;
        }
        if (orb_jet->parsed()) {
            Domain d = load_domain(domain_path);
            PeriodicOrbit o = load_orbit(d, orbit_path);
            JetMap2 m = monodromy(d, o, order);
            json coeffs = json::array();
            for (int dg = 0; dg <= order; ++dg)
                for (int b2 = 0; b2 <= dg; ++b2)
                    coeffs.push_back({{"a", dg - b2},
                                      {"b", b2},
                                      {"s", m.s_out.coeff(dg - b2, b2)},
                                      {"phi", m.phi_out.coeff(dg - b2, b2)}});
            json j = {{"order", order},
                      {"trace", m.linear().trace()},
                      {"det", m.linear().det()},
                      {"coefficients", coeffs}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (pert_predict->parsed()) {
            Domain d = load_domain(domain_path);
            PeriodicOrbit o = load_orbit(d, orbit_path);
            SegmentPartials seg = SegmentPartials::from_orbit(d, o, o.q);
            Mat2 D = predict_delta_differential(seg, k, eps);
            json j = {{"k", k}, {"eps", eps}, {"delta", {D.a, D.b, D.c, D.d}}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (pert_solve->parsed() || pert_apply->parsed()) {
            Domain d = load_domain(domain_path);
            PeriodicOrbit o = load_orbit(d, orbit_path);
            std::vector<double> values;
            std::stringstream ss(target_csv);
            std::string tok;
            while (std::getline(ss, tok, ',')) values.push_back(std::stod(tok));
            if (pert_solve->parsed()) {
                SegmentPartials seg = SegmentPartials::from_orbit(d, o, o.q);
                MMatrix M = assemble_M(seg, map_order, o.q);
                std::vector<double> sol = solve_epsilons_for_target(M, values);
                json j = {{"map_order", map_order},
                          {"det_M", M.direct_det},
                          {"epsilons", sol}};
                std::cout << j.dump(2) << "\n";
                return 0;
            }
            std::vector<int> pts;
            for (std::size_t i = 0; i < values.size(); ++i) pts.push_back(static_cast<int>(i) + 1);
            auto patches = build_bump_patches(d, o, pts, values, map_order);
            RadiusProfile out_prof = merge_patches(d.profile(), patches);
            save_profile(out_prof, out_path);
            std::cout << "wrote " << out_path << "\n";
            return 0;
        }
        if (pert_rotate->parsed()) {
            Domain d = load_domain(domain_path);
            PeriodicOrbit o = load_orbit(d, orbit_path);
            RotationPlan plan = rotate_differential(d, o, delta_rot, n);
            if (!out_path.empty()) save_profile(plan.final_profile, out_path);
            json j = {{"delta", delta_rot},
                      {"n", n},
                      {"stages", plan.stages.size()},
                      {"linear_error", plan.linear_error}};
            std::cout << j.dump(2) << "\n";
            return plan.linear_error < 1e-4 ? 0 : 1;
        }
        if (man_grow->parsed()) {
            Domain d = load_domain(domain_path);
            PeriodicOrbit o = load_orbit(d, orbit_path);
            classify(o, d);
            SaddleMap m = billiard_saddle_map(d, o);
            ManifoldArc arc = local_manifold(m, branch == "unstable", 1, order);
            GlobalArc g = globalize(m, arc, arc.seed_radius * 0.1, arc.seed_radius * tmax_factor,
                                    8000, chord_tol);
            std::ostringstream os;
            os.precision(17);
            os << "t,s,phi\n";
            for (std::size_t i = 0; i < g.params.size(); ++i)
                os << g.params[i] << "," << g.points[i].s << "," << g.points[i].phi << "\n";
            write_text(out_path, os.str());
            return 0;
        }
        if (tan_scan->parsed()) {
            Domain d = load_domain(domain_path);
            PeriodicOrbit o = load_orbit(d, orbit_path);
            classify(o, d);
            SaddleMap m0 = billiard_saddle_map(d, o);
            PeriodicOrbit o1 = o;
            std::rotate(o1.points.begin(), o1.points.begin() + 1, o1.points.end());
            o1.monodromy_jet.reset();
            o1.eigen.reset();
            classify(o1, d);
            SaddleMap m1 = billiard_saddle_map(d, o1);
            ManifoldArc wu = local_manifold(m0, true, +1, 6);
            ManifoldArc ws = local_manifold(m1, false, +1, 6);
            SplittingSamples s = splitting_function(m0, wu, ws, win_lo, win_hi, samples,
                                                    -ws.seed_radius * 4, ws.seed_radius * 4);
            std::vector<std::pair<double, double>> series;
            for (std::size_t i = 0; i < s.t.size(); ++i) series.emplace_back(s.t[i], s.phi[i]);
            if (!out_path.empty()) emit_plot_data(series, out_path);
            TangencyScan scan = detect_tangency(s.t, s.phi);
            json j = {{"crossings", json::array()},
                      {"tangency_found", scan.tangency.has_value()}};
            for (const auto& cr : scan.crossings)
                j["crossings"].push_back({{"t", cr.t}, {"slope", cr.slope}});
            if (scan.tangency)
                j["tangency"] = {{"t", scan.tangency->t},
                                 {"phi", scan.tangency->phi_value},
                                 {"dphi", scan.tangency->dphi_value},
                                 {"order", scan.tangency->order_estimate}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (tan_lift->parsed()) {
            Domain d = load_domain(domain_path);
            PeriodicOrbit o = load_orbit(d, orbit_path);
            classify(o, d);
            TangencyLiftReport rep = verify_tangency_lift(d, o, 0.0, iterates, eps, 0.12);
            std::vector<std::pair<double, double>> series;
            for (std::size_t i = 0; i < rep.displacements.size(); ++i)
                series.emplace_back(static_cast<double>(i), std::log(rep.displacements[i]));
            if (!out_path.empty()) emit_plot_data(series, out_path);
            json j = {{"lambda", rep.lambda},
                      {"fitted_slope", rep.fitted_slope},
                      {"slope_rel_error", rep.slope_rel_error},
                      {"k0_displacement", rep.k0_displacement}};
            std::cout << j.dump(2) << "\n";
            return rep.slope_rel_error < 0.1 ? 0 : 1;
        }
        if (cmd_inject->parsed() && !cmd_inject->get_subcommands().size()) {
            Domain d = load_domain(domain_path);
            std::vector<std::vector<PhasePoint>> sets;
            std::stringstream ss(orbits_csv);
            std::string tok;
            while (std::getline(ss, tok, ',')) sets.push_back(load_orbit(d, tok).points);
            InjectivityReport rep = injectivity_check(sets, delta_inj);
            json j = {{"delta", delta_inj}, {"points", json::array()}, {"orbit_pass", rep.orbit_pass}};
            for (const auto& v : rep.points)
                j["points"].push_back({{"orbit", v.orbit},
                                       {"index", v.index},
                                       {"injective", v.injective},
                                       {"nearest_foreign", v.nearest_foreign}});
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (verify_all->parsed()) {
            auto results = run_acceptance();
            bool ok = report_acceptance(std::cout, results);
            return ok ? 0 : 1;
        }
        if (scen_run->parsed()) {
            ScenarioReport rep = run_scenario(scenario_path, out_path, deterministic, parallel);
            std::cout << rep.report_json << "\n";
            return rep.pass ? 0 : 1;
        }
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "no subcommand executed\n";
    return 2;
}
