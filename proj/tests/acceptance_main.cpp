// Acceptance gate: one pass/fail line per criterion, each with its pinned
// tolerance and a runtime budget.  Exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "obscat/identities.hpp"
#include "obscat/inverse.hpp"

using namespace obscat;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double max_abs(const std::vector<Complex>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

// ---- 1. Sphere oracle agreement ------------------------------------------
Outcome crit_oracle() {
    const Direction alpha(Vec3::UnitZ());
    const auto grid = make_direction_grid(32, 64);
    double worst = 0.0;
    std::string worst_case;
    for (double a : {0.5, 1.0, 2.0})
        for (double k : {1.0, 2.0, 5.0})
            for (const auto& bc :
                 {BoundaryCondition::dirichlet(), BoundaryCondition::neumann(),
                  BoundaryCondition::impedance({0.5, 0.3})}) {
                const auto sol = solve(shape_sphere(a), bc, PlaneWave{alpha}, WaveContext(k));
                const auto mie = mie_coefficients(a, k, bc);
                double scale = 0.0, err = 0.0;
                for (const auto& d : grid.directions) {
                    const Complex ref = mie_far_field(mie, std::clamp(d.z(), -1.0, 1.0));
                    scale = std::max(scale, std::abs(ref));
                    err = std::max(err, std::abs(far_field_at(sol, Direction(d)) - ref));
                }
                if (err / scale > worst) {
                    worst = err / scale;
                    worst_case = "a=" + std::to_string(a) + " k=" + std::to_string(k);
                }
            }
    Outcome o;
    o.pass = worst <= 1e-6;
    o.detail = "max rel far-field error " + std::to_string(worst) + " (tol 1e-6, worst at " +
               worst_case + ")";
    return o;
}

// ---- 2. Reciprocity -------------------------------------------------------
Outcome crit_reciprocity() {
    const auto shape = shape_perturb(shape_sphere(1.0), 3, 1, 0.15);
    std::vector<std::pair<Direction, Direction>> pairs;
    const std::vector<Vec3> as = {{0.1, 0.2, 0.97}, {-0.5, 0.5, 0.7}, {0.9, 0.1, -0.4},
                                  {0.0, -1.0, 0.2}, {0.3, 0.3, -0.9}};
    const std::vector<Vec3> bs = {{-0.2, 0.9, 0.3}, {0.7, -0.7, 0.1}, {0.1, 0.1, 1.0},
                                  {-0.8, -0.2, 0.5}, {0.5, 0.5, 0.5}};
    for (std::size_t i = 0; i < as.size(); ++i)
        pairs.emplace_back(Direction(as[i].normalized()), Direction(bs[i].normalized()));
    // The reciprocity defect is measured directly on the far fields; a
    // moderate kernel grid with a relaxed boundary gate keeps the runtime
    // budget while the defect itself stays far below the tolerance.
    SolveOptions opts;
    opts.src_n_theta = 20;
    opts.tol = 2e-3;
    const double ed = check_reciprocity(shape, BoundaryCondition::dirichlet(), 2.0, pairs, opts);
    const double ei =
        check_reciprocity(shape, BoundaryCondition::impedance({0.5, 0.3}), 2.0, pairs, opts);
    Outcome o;
    o.pass = ed <= 1e-6 && ei <= 1e-6;
    o.detail = "max rel error dirichlet " + std::to_string(ed) + ", impedance " +
               std::to_string(ei) + " (tol 1e-6)";
    return o;
}

// ---- 3. Receding-source asymptotics --------------------------------------
Outcome crit_ray_limit() {
    const Direction a0(Vec3(0.2, 0.1, 0.974679434480896).normalized());
    const std::vector<double> taus = {20.0, 40.0, 80.0, 160.0};
    Vec3 eta(1.0, 0.5, 0.0);
    eta -= eta.dot(a0.v) * a0.v;
    const Vec3 x(1.6, 0.4, -0.3);
    const auto rep0 = check_lemma1(shape_sphere(1.0), BoundaryCondition::dirichlet(), 2.0, x,
                                   RaySpec(a0, Vec3::Zero(), taus));
    const auto rep1 = check_lemma1(shape_sphere(1.0), BoundaryCondition::dirichlet(), 2.0, x,
                                   RaySpec(a0, eta, taus));
    Outcome o;
    o.pass = std::abs(rep0.fitted_slope + 1.0) <= 0.15 && std::abs(rep1.fitted_slope + 1.0) <= 0.15;
    o.detail = "slopes " + std::to_string(rep0.fitted_slope) + " (eta=0), " +
               std::to_string(rep1.fitted_slope) + " (eta!=0); target -1 +- 0.15";
    return o;
}

// ---- 4. Two-obstacle perturbation identity -------------------------------
Outcome crit_perturbation_identity() {
    const auto bc = BoundaryCondition::dirichlet();
    const Direction alpha(Vec3(0.3, -0.2, 0.932737905308882).normalized());
    const Direction beta(Vec3(0.4, 0.7, 0.591607978309962).normalized());

    const auto disjoint = check_lemma2(
        make_obstacle_pair(shape_sphere(1.0, Vec3(0.0, 0.0, 2.0)),
                           shape_sphere(1.0, Vec3(0.0, 0.0, -2.0)), bc, bc),
        1.0, alpha, beta);
    const auto nested = check_lemma2(
        make_obstacle_pair(shape_sphere(1.0), shape_sphere(2.0), bc, bc), 1.0, alpha, beta);

    SolveOptions tight;
    tight.resolution_scale = 1.3;
    const auto same = check_lemma2(make_obstacle_pair(shape_sphere(1.0), shape_sphere(1.0),
                                                      bc, bc),
                                   1.0, alpha, beta, 32, tight);
    const auto sol = solve(shape_sphere(1.0), bc, PlaneWave{alpha}, WaveContext(1.0), tight);
    const auto grid = make_direction_grid(16, 32);
    double amax = 0.0;
    for (const auto& d : grid.directions)
        amax = std::max(amax, std::abs(far_field_at(sol, Direction(d))));
    const double zero_scale = 1e-8 * 4.0 * kPi * amax;

    Outcome o;
    o.pass = disjoint.rel_error <= 1e-4 && nested.rel_error <= 1e-4 &&
             std::abs(same.lhs) <= zero_scale && std::abs(same.rhs) <= zero_scale;
    std::ostringstream d;
    d << "rel error disjoint " << disjoint.rel_error << ", nested " << nested.rel_error
      << " (tol 1e-4); coincident |lhs| " << std::abs(same.lhs) << ", |rhs| "
      << std::abs(same.rhs) << " (tol " << zero_scale << ")";
    o.detail = d.str();
    return o;
}

// ---- 5. Far-field expansion rate -----------------------------------------
Outcome crit_expansion() {
    const Direction alpha(Vec3(0.3, -0.2, 0.932737905308882).normalized());
    const Direction beta(Vec3(0.2, 0.9, 0.387298334620742).normalized());
    const std::vector<double> radii = {25.0, 50.0, 100.0, 200.0};
    const auto r0 = check_farfield_expansion(shape_sphere(1.0), BoundaryCondition::dirichlet(),
                                             2.0, alpha, beta, radii);
    const auto r1 = check_farfield_expansion(shape_perturb(shape_sphere(1.0), 2, 1, 0.12),
                                             BoundaryCondition::impedance({0.5, 0.3}), 2.0,
                                             alpha, beta, radii);
    Outcome o;
    o.pass = std::abs(r0.fitted_slope + 2.0) <= 0.15 && std::abs(r1.fitted_slope + 2.0) <= 0.15;
    o.detail = "slopes " + std::to_string(r0.fitted_slope) + " (sphere), " +
               std::to_string(r1.fitted_slope) + " (perturbed); target -2 +- 0.15";
    return o;
}

// ---- 6. Double-layer reproduction ----------------------------------------
Outcome crit_double_layer() {
    const double k = 1.5;
    const auto rc = check_lemma5(shape_sphere(1.0), k,
                                 [](double, double) { return Complex(1.0, 0.0); });
    const auto ry = check_lemma5(shape_sphere(1.0), k, [](double th, double ph) {
        return Complex(real_sph_harm(1, 0, th, ph), 0.0);
    });
    auto ok = [](const Lemma5Result& r) {
        return r.rel_errors.size() == 3 && r.rel_errors[0] <= 1e-2 && r.rel_errors[1] <= 5e-2 &&
               r.cap_monotone;
    };
    Outcome o;
    o.pass = ok(rc) && ok(ry);
    std::ostringstream d;
    d << "rel errors const {" << rc.rel_errors[0] << ", " << rc.rel_errors[1] << "}, y10 {"
      << ry.rel_errors[0] << ", " << ry.rel_errors[1]
      << "} (tol 1e-2 at 0.5 diam, 5e-2 at 0.1 diam); cap monotone " << rc.cap_monotone << "/"
      << ry.cap_monotone;
    o.detail = d.str();
    return o;
}

// ---- 7. Closed-loop reconstruction at fixed (alpha0, k0) ------------------
FarFieldPattern recon_data(const StarShape& truth, const Direction& alpha0, double k0,
                           int data_src, int grid_n) {
    SolveOptions opts;
    opts.src_n_theta = data_src;
    const auto sol = solve(truth, BoundaryCondition::dirichlet(), PlaneWave{alpha0},
                           WaveContext(k0), opts);
    return far_field(sol, make_direction_grid(grid_n, 2 * grid_n));
}

Outcome crit_closed_loop() {
    const Direction alpha0(Vec3(0.2, 0.1, 0.974679434480896).normalized());
    const double k0 = 2.0;

    // sphere: optimizer at src 14, data at 28 (2x resolution separation)
    InverseProblem ps;
    ps.data = recon_data(shape_sphere(1.0), alpha0, k0, 28, 12);
    ps.init = shape_sphere(0.8);
    ps.lmax_recon = 0;
    ps.forward_opts.src_n_theta = 14;
    ps.forward_opts.tol = 1e-4;
    const auto rs = reconstruct_shape(ps);
    const double radius = rs.final_shape.coeffs[0] / std::sqrt(4.0 * kPi);

    // low-order perturbation: optimizer at src 16, data at 32
    const auto truth = shape_perturb(shape_sphere(1.0), 2, 0, 0.1);
    InverseProblem pp;
    pp.data = recon_data(truth, alpha0, k0, 32, 16);
    pp.init = shape_sphere(0.95);
    pp.lmax_recon = 2;
    pp.forward_opts.src_n_theta = 16;
    pp.forward_opts.tol = 1e-4;
    pp.max_iters = 30;
    const auto rp = reconstruct_shape(pp);
    const double c20 = rp.final_shape.coeffs[sh_index(2, 0)];

    Outcome o;
    o.pass = std::abs(radius - 1.0) <= 1e-3 && std::abs(c20 - 0.1) <= 1e-2;
    std::ostringstream d;
    d << "sphere radius " << radius << " (target 1 +- 1e-3), c(2,0) " << c20
      << " (target 0.1 +- 1e-2)";
    o.detail = d.str();
    return o;
}

// ---- 8. Boundary-condition identification --------------------------------
Outcome crit_bc_identification() {
    const Direction alpha0(Vec3(0.2, 0.1, 0.974679434480896).normalized());
    const double k0 = 2.0;
    const auto shape = shape_sphere(1.0);

    auto make_prob = [&](const BoundaryCondition& bc_true) {
        SolveOptions data_opts;
        data_opts.src_n_theta = 28;
        const auto sol = solve(shape, bc_true, PlaneWave{alpha0}, WaveContext(k0), data_opts);
        InverseProblem p;
        p.data = far_field(sol, make_direction_grid(12, 24));
        p.init = shape;
        p.forward_opts.src_n_theta = 16;
        p.forward_opts.tol = 1e-4;
        return p;
    };

    const auto cd = classify_boundary_condition(shape, make_prob(BoundaryCondition::dirichlet()));
    const auto cn = classify_boundary_condition(shape, make_prob(BoundaryCondition::neumann()));
    const Complex h_true(0.5, 0.3);
    const auto ci =
        classify_boundary_condition(shape, make_prob(BoundaryCondition::impedance(h_true)));

    const bool tags = cd.bc.tag == BoundaryCondition::Tag::Dirichlet &&
                      cn.bc.tag == BoundaryCondition::Tag::Neumann &&
                      ci.bc.tag == BoundaryCondition::Tag::Impedance;
    const double h_err = std::abs(ci.fitted_h - h_true);
    const double ratio_err = std::abs(ci.surface_ratio_mean - ci.fitted_h);

    Outcome o;
    o.pass = tags && h_err <= 1e-2 && ratio_err <= 1e-2;
    std::ostringstream d;
    d << "tags " << (tags ? "exact" : "WRONG") << ", |h_fit - h| " << h_err
      << " (tol 1e-2), |ratio_mean - h_fit| " << ratio_err << " (tol 1e-2)";
    o.detail = d.str();
    return o;
}

// ---- 9. Fixed-incidence gap scan -----------------------------------------
Outcome crit_gap_scan() {
    const Direction alpha0(Vec3(0.2, 0.1, 0.974679434480896).normalized());
    const double k0 = 2.0;
    const auto truth = shape_sphere(1.0);
    const auto grid = make_direction_grid(16, 32);
    const double tol_ff = 1e-6; // solver far-field tolerance

    std::vector<std::pair<std::string, StarShape>> family = {
        {"truth", shape_sphere(1.0)},
        {"translate_3", shape_sphere(1.0, Vec3(0.0, 0.0, 3.0))},
        {"dilate_1.05", shape_sphere(1.05)},
        {"dilate_1.10", shape_sphere(1.10)},
        {"dilate_1.20", shape_sphere(1.20)},
    };
    const auto rows =
        uniqueness_gap_scan(truth, BoundaryCondition::dirichlet(), k0, alpha0, family, grid);

    bool pass = rows.size() == family.size();
    std::ostringstream d;
    double prev_dilate = 0.0;
    for (const auto& r : rows) {
        if (!r.ok) pass = false;
        if (r.d_shape == 0.0) {
            if (r.d_ff > 2.0 * tol_ff) pass = false;
        } else {
            if (r.d_ff <= 10.0 * tol_ff) pass = false;
        }
        if (r.shape_id.rfind("dilate", 0) == 0) {
            if (r.d_ff <= prev_dilate) pass = false; // strictly increasing in t
            prev_dilate = r.d_ff;
        }
        d << r.shape_id << " d_ff=" << r.d_ff << "; ";
    }
    Outcome o;
    o.pass = pass;
    o.detail = d.str() + "(zero-gap tol 2e-6, separation tol 1e-5)";
    return o;
}

// ---- 10. Energy-flux identity --------------------------------------------
Outcome crit_energy_flux() {
    const Direction alpha(Vec3(0.3, -0.2, 0.932737905308882).normalized());
    const auto grid = make_direction_grid(24, 48);
    const std::vector<StarShape> shapes = {shape_sphere(1.0),
                                           shape_perturb(shape_sphere(1.0), 2, 0, 0.15),
                                           shape_perturb(shape_sphere(1.0), 3, 1, 0.1)};
    // The flux identity is checked to 1e-5; a slightly denser grid keeps the
    // certified boundary residual comfortably inside the default gate.
    SolveOptions opts;
    opts.resolution_scale = 1.15;
    double worst = 0.0;
    for (const auto& s : shapes)
        for (const auto& bc : {BoundaryCondition::dirichlet(), BoundaryCondition::neumann(),
                               BoundaryCondition::impedance({2.0, 0.0})}) {
            const auto sol = solve(s, bc, PlaneWave{alpha}, WaveContext(1.5), opts);
            worst = std::max(worst, flux_identity(sol, grid).rel_error);
        }
    const auto absorbing = flux_identity(
        solve(shapes[1], BoundaryCondition::impedance({0.5, 1.0}), PlaneWave{alpha},
              WaveContext(1.5), opts),
        grid);
    const bool strict = absorbing.forward_imag > absorbing.flux * (1.0 + 1e-6);

    Outcome o;
    o.pass = worst <= 1e-5 && strict;
    std::ostringstream d;
    d << "max rel error " << worst << " over 9 lossless cases (tol 1e-5); absorbing excess "
      << (absorbing.forward_imag - absorbing.flux) << " > 0: " << (strict ? "yes" : "NO");
    o.detail = d.str();
    return o;
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "sphere oracle agreement", 60.0, crit_oracle},
        {2, "far-field reciprocity", 60.0, crit_reciprocity},
        {3, "receding-source asymptotics", 120.0, crit_ray_limit},
        {4, "two-obstacle perturbation identity", 120.0, crit_perturbation_identity},
        {5, "far-field expansion rate", 60.0, crit_expansion},
        {6, "double-layer reproduction", 300.0, crit_double_layer},
        {7, "closed-loop reconstruction", 600.0, crit_closed_loop},
        {8, "boundary-condition identification", 300.0, crit_bc_identification},
        {9, "fixed-incidence gap scan", 600.0, crit_gap_scan},
        {10, "energy-flux identity", 120.0, crit_energy_flux},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            out.pass = false;
            out.detail += " [OVER BUDGET " + std::to_string(c.budget_s) + " s]";
        }
        std::printf("%s criterion %2d: %s — %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", c.id,
                    c.name, out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures) {
        std::printf("ACCEPTANCE: %d of %zu criteria FAILED\n", failures, criteria.size());
        return 1;
    }
    std::printf("ACCEPTANCE: all %zu criteria passed\n", criteria.size());
    return 0;
}
