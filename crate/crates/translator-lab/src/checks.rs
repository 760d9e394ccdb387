//! Named verification pipelines with pinned tolerances.
//!
//! Each check fixes its fixtures, grids and thresholds and returns a
//! self-contained report; `run_all` is the suite behind the `all`
//! subcommand and the acceptance tests. The fault-injection hook zeroes
//! the vertical first-derivative component of every jet feeding the two
//! identity pipelines, proving they can fail.

use crate::bernstein::{
    check_max_principle, decay_chain_check, gradient_estimate_check, CutoffSpec,
};
use crate::error::Result;
use crate::field::{GridSpec, ScalarField2D};
use crate::fixtures::{AnalyticField, ExactSolution, SineExpField};
use crate::flow::{evolve_to, translation_error, BoundaryRule, FlowState};
use crate::flux::{
    boundary_flux, flux_two_sides, integrand_expansion_check, polar_integrand_closed_form,
    polar_integrand_cross, region_boundary, total_mean_curvature, RegionSpec,
};
use crate::geometry::{coeff_matrix, Jet2};
use crate::report::{observed_orders, CheckReport, ReportBuilder};
use crate::solver::{assemble_residual, newton_solve, DirichletProblem, SolveOptions};
use crate::stencil::{JetField, JetProvider};
use rand::{Rng, SeedableRng};

/// Closed-form value of the flux identity on GrimProfile(A=1, B=pi/2)
/// over [0,1] x [ln 2, ln 4]: sqrt(15)/4 - sqrt(3)/2.
pub const GRIM_RECT_FLUX: f64 = 0.10222043276741557;

const GRIM: ExactSolution =
    ExactSolution::GrimProfile { amplitude: 1.0, offset: std::f64::consts::FRAC_PI_2 };

#[derive(Debug, Clone, Copy, Default)]
pub struct CheckOptions {
    /// Fault injection: drop the D_z u component from every jet feeding
    /// the flux-identity and Bernstein-identity pipelines.
    pub drop_vertical_derivative: bool,
}

/// Jet source wrapper implementing the injected fault.
struct DropDz<'a>(&'a dyn JetProvider);

impl JetProvider for DropDz<'_> {
    fn jet_at_point(&self, s: f64, z: f64) -> Result<Jet2> {
        let mut jet = self.0.jet_at_point(s, z)?;
        jet.du[1] = 0.0;
        Ok(jet)
    }

    fn resolution(&self) -> Option<(f64, f64)> {
        self.0.resolution()
    }
}

fn grim_flux_grids() -> Vec<GridSpec> {
    [33usize, 65, 129]
        .iter()
        .map(|&n| GridSpec::square(0.0, 1.0, 2.0f64.ln(), 4.0f64.ln(), n).unwrap())
        .collect()
}

/// Criterion 1: both sides of the flux identity on the grim rectangle
/// match the closed form within 1e-3 on grids 33^2..129^2, the gap at
/// 129^2 stays below 5e-4, and the gap refines at second order.
pub fn flux_identity(opts: &CheckOptions) -> Result<CheckReport> {
    let region = RegionSpec::rectangle(0.0, 1.0, 2.0f64.ln(), 4.0f64.ln())?;
    let mut b = ReportBuilder::new("flux-identity");
    b.input("fixture", GRIM.describe());
    b.input("region", region.describe());
    b.input("grids", "33,65,129");
    b.input("drop_dz", opts.drop_vertical_derivative);

    let mut gaps = Vec::new();
    for grid in grim_flux_grids() {
        let field = GRIM.sample(grid)?;
        let jets = JetField::compute(&field)?;
        let (lhs, rhs) = if opts.drop_vertical_derivative {
            flux_two_sides(&DropDz(&jets), &region)?
        } else {
            flux_two_sides(&jets, &region)?
        };
        let n = grid.ns;
        b.criterion(
            &format!("lhs_err_{n}"),
            (lhs - GRIM_RECT_FLUX).abs(),
            1e-3,
            (lhs - GRIM_RECT_FLUX).abs() <= 1e-3,
        );
        b.criterion(
            &format!("rhs_err_{n}"),
            (rhs - GRIM_RECT_FLUX).abs(),
            1e-3,
            (rhs - GRIM_RECT_FLUX).abs() <= 1e-3,
        );
        gaps.push((lhs - rhs).abs());
    }
    b.criterion("gap_129", gaps[2], 5e-4, gaps[2] <= 5e-4);
    let r1 = gaps[0] / gaps[1];
    let r2 = gaps[1] / gaps[2];
    b.criterion("gap_ratio_33_65", r1, 3.0, (3.0..=5.0).contains(&r1));
    b.criterion("gap_ratio_65_129", r2, 3.0, (3.0..=5.0).contains(&r2));
    for o in observed_orders(&gaps) {
        b.order(o);
    }
    Ok(b.finish())
}

/// Criterion 2: on plane fixtures the residual, the total mean curvature,
/// the boundary flux and L u all vanish to 1e-13.
pub fn plane_exactness() -> Result<CheckReport> {
    let mut b = ReportBuilder::new("plane-exactness");
    b.input("fixtures", "plane:a=0,c=0 plane:a=2,c=1");
    b.input("grid", "33x33 on [0,1]^2");
    let grid = GridSpec::square(0.0, 1.0, 0.0, 1.0, 33)?;
    let region = RegionSpec::rectangle(0.0, 1.0, 0.0, 1.0)?;
    for (label, plane) in
        [("a0", ExactSolution::plane(0.0, 0.0)), ("a2", ExactSolution::plane(2.0, 1.0))]
    {
        let u = plane.sample(grid)?;
        let problem = DirichletProblem::for_fixture(&plane, grid)?;
        let residual = assemble_residual(&u, &problem)?.sup_norm();
        let jets = JetField::compute(&u)?;
        let lhs = total_mean_curvature(&jets, &region)?;
        let rhs = boundary_flux(&region_boundary(&jets, &region)?)?;
        let lu = crate::bernstein::apply_l(&u, &u)?.sup_norm();
        b.criterion(&format!("residual_{label}"), residual, 1e-13, residual <= 1e-13);
        b.criterion(&format!("total_curvature_{label}"), lhs.abs(), 1e-13, lhs.abs() <= 1e-13);
        b.criterion(&format!("boundary_flux_{label}"), rhs.abs(), 1e-13, rhs.abs() <= 1e-13);
        b.criterion(&format!("Lu_{label}"), lu, 1e-13, lu <= 1e-13);
    }
    Ok(b.finish())
}

/// Criterion 3: Newton reaches 1e-10 in at most 8 iterations on the grim
/// Dirichlet problem, and the solution error refines at second order; the
/// manufactured field is recovered at the same order.
pub fn solver_convergence() -> Result<CheckReport> {
    let mut b = ReportBuilder::new("solver-convergence");
    b.input("domain", "[0,1] x [ln 2, ln 8]");
    b.input("grids", "65,129");
    let opts = SolveOptions::default();

    let run = |label: &str,
                   boundary_of: &dyn Fn(GridSpec) -> Result<DirichletProblem>,
                   exact_of: &dyn Fn(GridSpec) -> Result<ScalarField2D>,
                   b: &mut ReportBuilder|
     -> Result<f64> {
        let mut errs = Vec::new();
        for n in [65usize, 129] {
            let grid = GridSpec::square(0.0, 1.0, 2.0f64.ln(), 8.0f64.ln(), n)?;
            let problem = boundary_of(grid)?;
            let (u, report) = newton_solve(&problem, &opts, None)?;
            b.criterion(
                &format!("{label}_iterations_{n}"),
                report.iterations as f64,
                8.0,
                report.iterations <= 8,
            );
            b.criterion(
                &format!("{label}_residual_{n}"),
                report.final_residual,
                1e-10,
                report.converged && report.final_residual <= 1e-10,
            );
            errs.push(u.sup_diff(&exact_of(grid)?)?);
        }
        Ok(errs[0] / errs[1])
    };

    let ratio_grim = run(
        "grim",
        &|g| DirichletProblem::for_fixture(&GRIM, g),
        &|g| GRIM.sample(g),
        &mut b,
    )?;
    b.criterion("grim_error_ratio", ratio_grim, 3.5, (3.5..=4.5).contains(&ratio_grim));

    let star = SineExpField { amp: 0.1 };
    let ratio_mms = run(
        "manufactured",
        &|g| DirichletProblem::manufactured(&star, g),
        &|g| star.sample(g),
        &mut b,
    )?;
    b.criterion("manufactured_error_ratio", ratio_mms, 3.5, (3.5..=4.5).contains(&ratio_mms));
    Ok(b.finish())
}

/// Criterion 4: the cross-product boundary integrand equals the
/// closed-form intermediate expression at 1e4 random jets; the deviation
/// from the leading term is bounded by 2 R |Du|^2 (constant confirmed by
/// brute-force ratio maximization over |Du| <= 1/2 first).
pub fn integrand_identity() -> Result<CheckReport> {
    let seed = 0x7ab5_1de0u64;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut b = ReportBuilder::new("integrand-identity");
    b.input("seed", seed);
    b.input("random_jets", 10_000);
    b.input("ratio_samples", 200_000);

    let mut max_diff = 0.0f64;
    for _ in 0..10_000 {
        let du = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = rng.gen_range(0.1..10.0);
        let diff =
            (polar_integrand_cross(du, theta, r) - polar_integrand_closed_form(du, theta, r)).abs();
        max_diff = max_diff.max(diff);
    }
    b.criterion("max_identity_diff", max_diff, 1e-12, max_diff <= 1e-12);

    // brute-force confirmation of the constant 2 (sharp ratio ~ 1/2)
    let mut worst_ratio = 0.0f64;
    for _ in 0..200_000 {
        let (p, q): (f64, f64) = loop {
            let p = rng.gen_range(-0.5..0.5);
            let q = rng.gen_range(-0.5..0.5);
            let g2: f64 = p * p + q * q;
            if g2 <= 0.25 && g2 > 1e-12 {
                break (p, q);
            }
        };
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let dev = polar_integrand_cross([p, q], theta, 1.0) - theta.sin();
        worst_ratio = worst_ratio.max(dev.abs() / (p * p + q * q));
    }
    b.criterion("max_deviation_ratio", worst_ratio, 2.0, worst_ratio <= 2.0);

    // and on an actual polar curve over a shallow field
    let g = GridSpec::square(-2.0, 2.0, -2.0, 2.0, 65)?;
    let star = SineExpField { amp: 0.05 };
    let jets = JetField::compute(&star.sample(g)?)?;
    let circle = integrand_expansion_check(&jets, (0.0, 0.0), 1.5, None)?;
    b.require(circle.passed);
    b.measure("circle_rsin_integral", circle.measured("rsin_integral").unwrap_or(f64::NAN));
    Ok(b.finish())
}

fn l_usq_identity_sup_with(u: &ScalarField2D, drop_dz: bool) -> Result<f64> {
    let g = *u.grid();
    let w = ScalarField2D::from_values(g, u.values().iter().map(|v| 0.5 * v * v).collect())?;
    let ju = JetField::compute(u)?;
    let jw = JetField::compute(&w)?;
    let mut sup = 0.0f64;
    for j in 0..g.nz {
        for i in 0..g.ns {
            let mut jet_u = ju.at_node(i, j);
            let mut jet_w = jw.at_node(i, j);
            if drop_dz {
                jet_u.du[1] = 0.0;
                jet_w.du[1] = 0.0;
            }
            let lw = coeff_matrix(&jet_u).contract(&jet_w.d2u) + jet_w.du[1];
            let g2 = jet_u.grad_sq();
            sup = sup.max((lw - g2 / (1.0 + g2)).abs());
        }
    }
    Ok(sup)
}

/// Criterion 5: sup |L(u^2/2) - |Du|^2/(1+|Du|^2)| is exactly zero on
/// planes and refines at second order on the grim fixture.
pub fn bernstein_identity(opts: &CheckOptions) -> Result<CheckReport> {
    let mut b = ReportBuilder::new("bernstein-identity");
    b.input("fixture", GRIM.describe());
    b.input("window", "[0,1] x [1,3]");
    b.input("grids", "33,65,129");
    b.input("drop_dz", opts.drop_vertical_derivative);

    let plane_grid = GridSpec::square(0.0, 1.0, 0.0, 1.0, 33)?;
    let plane = ExactSolution::plane(2.0, 1.0).sample(plane_grid)?;
    let plane_sup = l_usq_identity_sup_with(&plane, opts.drop_vertical_derivative)?;
    b.criterion("plane_sup", plane_sup, 1e-13, plane_sup <= 1e-13);

    let mut sups = Vec::new();
    for n in [33usize, 65, 129] {
        let grid = GridSpec::square(0.0, 1.0, 1.0, 3.0, n)?;
        let u = GRIM.sample(grid)?;
        sups.push(l_usq_identity_sup_with(&u, opts.drop_vertical_derivative)?);
    }
    let r1 = sups[0] / sups[1];
    let r2 = sups[1] / sups[2];
    b.measure("grim_sup_129", sups[2]);
    b.criterion("grim_ratio_33_65", r1, 3.0, (3.0..=5.0).contains(&r1));
    b.criterion("grim_ratio_65_129", r2, 3.0, (3.0..=5.0).contains(&r2));
    for o in observed_orders(&sups) {
        b.order(o);
    }
    Ok(b.finish())
}

/// Sweep configurations shared by criteria 6 and 7: amplitudes, radii and
/// five tail centers per pair, all satisfying |Du|^2 <= 1/4 on the ball.
pub fn estimate_sweep_configs() -> Vec<(f64, f64, (f64, f64))> {
    let mut configs = Vec::new();
    for a in [0.5f64, 1.0] {
        for r in [1.0f64, 2.0, 4.0, 8.0] {
            for k in 0..5 {
                let z_c = a.ln() + r + 1.0 + 0.5 * k as f64;
                configs.push((a, r, (0.0, z_c)));
            }
        }
    }
    configs
}

/// Criterion 6: the interior gradient estimate passes on the whole sweep;
/// the spot values at A=1, p=(0,4), R=1 match the frozen closed forms.
pub fn gradient_estimate_sweep() -> Result<CheckReport> {
    let mut b = ReportBuilder::new("gradient-estimate-sweep");
    b.input("amplitudes", "0.5,1");
    b.input("radii", "1,2,4,8");
    b.input("centers_per_config", 5);
    let mut all_pass = true;
    let mut rows = 0usize;
    for (a, r, p) in estimate_sweep_configs() {
        let sol = ExactSolution::grim(a, if a == 1.0 { std::f64::consts::FRAC_PI_2 } else { 0.0 })?;
        let report = gradient_estimate_check(&sol, sol.asymptotic_offset(), p, r)?;
        all_pass &= report.passed;
        rows += 1;
    }
    b.criterion("configs", rows as f64, 40.0, rows == 40);
    b.require(all_pass);

    let spot = gradient_estimate_check(&GRIM, std::f64::consts::FRAC_PI_2, (0.0, 4.0), 1.0)?;
    let lhs = spot.measured("lhs_grad_sq").unwrap();
    let rhs = spot.measured("rhs_bound").unwrap();
    b.criterion(
        "spot_lhs_err",
        (lhs - 3.3557520084124496e-4).abs(),
        1e-12,
        (lhs - 3.3557520084124496e-4).abs() <= 1e-12,
    );
    b.criterion(
        "spot_rhs_err",
        (rhs - 0.9923211837299258).abs(),
        1e-12,
        (rhs - 0.9923211837299258).abs() <= 1e-12,
    );
    b.require(spot.passed);
    Ok(b.finish())
}

/// Criterion 7: the discrete maximum principle holds on every sweep
/// configuration: interior max of G below the ring max and L G above
/// zero, both within 10 h^2 sup|D^2 u|.
pub fn max_principle_sweep() -> Result<CheckReport> {
    let mut b = ReportBuilder::new("max-principle-sweep");
    b.input("amplitudes", "0.5,1");
    b.input("radii", "1,2,4,8");
    b.input("centers_per_config", 5);
    b.input("grid_nodes", 129);
    let mut all_pass = true;
    let mut rows = 0usize;
    for (a, r, p) in estimate_sweep_configs() {
        let sol = ExactSolution::grim(a, if a == 1.0 { std::f64::consts::FRAC_PI_2 } else { 0.0 })?;
        let pad = 0.5;
        let grid = GridSpec::square(
            p.0 - r - pad,
            p.0 + r + pad,
            p.1 - r - pad,
            p.1 + r + pad,
            129,
        )?;
        let u = sol.sample(grid)?;
        let cutoff = CutoffSpec::new(p, r)?;
        let report = check_max_principle(&u, &cutoff, sol.asymptotic_offset())?;
        all_pass &= report.passed;
        rows += 1;
    }
    b.criterion("configs", rows as f64, 40.0, rows == 40);
    b.require(all_pass);
    Ok(b.finish())
}

/// Criterion 8: the decay chain on the grim tail: R sup |Du|^2 strictly
/// decreasing and within 1% of the closed form, 800/R inequality at each
/// R.
pub fn decay_chain() -> Result<CheckReport> {
    let inner = decay_chain_check(&GRIM, &[5.0, 10.0, 20.0])?;
    let mut b = ReportBuilder::new("decay-chain");
    b.input("fixture", GRIM.describe());
    b.input("r_list", "5,10,20");
    b.require(inner.passed);
    for (r, frozen) in [
        (5.0, 2.2700995504843884e-4),
        (10.0, 2.0611536266869121e-8),
        (20.0, 8.496708510583178e-17),
    ] {
        let v = inner.measured(&format!("r_weighted_R={r}")).unwrap();
        let rel = (v / frozen - 1.0).abs();
        b.criterion(&format!("r_weighted_rel_err_R={r}"), rel, 0.01, rel <= 0.01);
    }
    Ok(b.finish())
}

/// Criterion 9: the grim graph under MCF coincides with the vertically
/// translated initial graph; simultaneous refinement (dt ~ h^2) cuts the
/// error by about 4.
pub fn translation_property() -> Result<CheckReport> {
    let mut b = ReportBuilder::new("translation-property");
    b.input("fixture", GRIM.describe());
    b.input("domain", "[0,1] x [ln 2, ln 8]");
    b.input("t_final", 0.1);
    b.input("dt", "h_min^2/8");
    let mut errs = Vec::new();
    for n in [65usize, 129] {
        let grid = GridSpec::square(0.0, 1.0, 2.0f64.ln(), 8.0f64.ln(), n)?;
        let u0 = GRIM.sample(grid)?;
        let h = grid.h_min();
        let state = FlowState::new(u0, 0.0, h * h / 8.0)?;
        let state = evolve_to(state, &BoundaryRule::TranslatedExact(&GRIM), 0.1)?;
        errs.push(translation_error(&state, &GRIM)?);
    }
    b.criterion("error_65", errs[0], 1e-3, errs[0] <= 1e-3);
    let ratio = errs[0] / errs[1];
    b.criterion("refinement_ratio", ratio, 3.0, (3.0..=5.0).contains(&ratio));
    Ok(b.finish())
}

/// Criterion 10: with the D_z u jet component zeroed, the flux and
/// Bernstein identity checks must fail; this check passes when they do.
pub fn mutation_sensitivity() -> Result<CheckReport> {
    let mutated = CheckOptions { drop_vertical_derivative: true };
    let flux = flux_identity(&mutated)?;
    let bern = bernstein_identity(&mutated)?;
    let mut b = ReportBuilder::new("mutation-sensitivity");
    b.input("hook", "drop_vertical_derivative");
    b.criterion("flux_check_failed", if flux.passed { 0.0 } else { 1.0 }, 1.0, !flux.passed);
    b.criterion("bernstein_check_failed", if bern.passed { 0.0 } else { 1.0 }, 1.0, !bern.passed);
    Ok(b.finish())
}

/// Refinement study of the discrete jets and residual on a fixture:
/// orders must sit near 2.
pub fn jet_convergence(sol: &ExactSolution, grids: &[GridSpec]) -> Result<CheckReport> {
    let mut b = ReportBuilder::new("jet-convergence");
    b.input("fixture", sol.describe());
    b.input("levels", grids.len());
    let mut sups = Vec::new();
    for grid in grids {
        let field = sol.sample(*grid)?;
        let mut sup = 0.0f64;
        for j in 0..grid.nz {
            for i in 0..grid.ns {
                let jet = crate::stencil::jet_at(&field, i, j)?;
                sup = sup.max(crate::geometry::translator_residual(&jet, 0.0).abs());
            }
        }
        b.measure(&format!("residual_sup_n={}", grid.ns), sup);
        sups.push(sup);
    }
    let orders = observed_orders(&sups);
    for &o in &orders {
        b.order(o);
        b.require((1.5..=2.5).contains(&o));
    }
    Ok(b.finish())
}

/// The ten acceptance checks in order.
pub fn run_all(opts: &CheckOptions) -> Result<Vec<CheckReport>> {
    Ok(vec![
        flux_identity(opts)?,
        plane_exactness()?,
        solver_convergence()?,
        integrand_identity()?,
        bernstein_identity(opts)?,
        gradient_estimate_sweep()?,
        max_principle_sweep()?,
        decay_chain()?,
        translation_property()?,
        mutation_sensitivity()?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    // the full pipelines run in the acceptance suite; here we cover the
    // pieces that only make sense at unit scale
    #[test]
    fn sweep_configs_cover_the_advertised_grid() {
        let configs = estimate_sweep_configs();
        assert_eq!(configs.len(), 40);
        // every ball stays inside the fixture domain with margin
        for (a, r, p) in configs {
            assert!(p.1 - r > a.ln() + 0.5);
        }
    }

    #[test]
    fn drop_dz_wrapper_zeroes_only_the_vertical_slope() {
        let g = GridSpec::square(0.0, 1.0, 1.0, 2.0, 17).unwrap();
        let jets = JetField::compute(&GRIM.sample(g).unwrap()).unwrap();
        let wrapped = DropDz(&jets);
        let a = jets.jet_at_point(0.5, 1.5).unwrap();
        let m = wrapped.jet_at_point(0.5, 1.5).unwrap();
        assert_eq!(m.du[1], 0.0);
        assert_eq!(m.du[0], a.du[0]);
        assert_eq!(m.d2u, a.d2u);
        assert!(a.du[1] != 0.0);
    }

    #[test]
    fn jet_convergence_study_passes_on_grim() {
        let grids: Vec<GridSpec> = [17usize, 33, 65]
            .iter()
            .map(|&n| GridSpec::square(0.0, 1.0, 1.0, 2.0, n).unwrap())
            .collect();
        let report = jet_convergence(&GRIM, &grids).unwrap();
        assert!(report.passed, "{}", report.to_json());
    }
}
