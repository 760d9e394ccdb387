//! The operator L = a^{ij}(Du) D_i D_j + D_z, the auxiliary quantity
//! G = phi^2 |Du|^2/2 + Lambda u^2/2 with a concrete cutoff, and numerical
//! checks of every inequality feeding the interior gradient estimate
//! |Du(p)|^2 <= (400/R) max_{boundary circle} u^2 plus the decay chain it
//! powers.
//!
//! The cutoff profile is fixed to phi = (1 - t^2)^2 with t = |x-p|/R; it
//! meets the required derivative constraints R |D phi| <= 2 and
//! R^2 |D^2 phi| <= 8 with margin (the sharp gradient constant is
//! 8/(3 sqrt 3) ~ 1.54). Lambda is kept as the exact ratio 400/R: code
//! multiplies by 400 and divides by R so Lambda * R = 400 holds exactly.

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField2D};
use crate::fixtures::{AnalyticField, ExactSolution};
use crate::geometry::coeff_matrix;
use crate::report::{CheckReport, ReportBuilder};
use crate::stencil::{jet_at, JetField};

/// Cutoff phi((x-p)/R) = (1 - t^2)^2 supported on the ball B_R(p), R >= 1.
#[derive(Debug, Clone, Copy)]
pub struct CutoffSpec {
    pub center: (f64, f64),
    pub radius: f64,
}

impl CutoffSpec {
    pub fn new(center: (f64, f64), radius: f64) -> Result<Self> {
        if !(radius >= 1.0) {
            return Err(Error::Input(format!("cutoff radius must be >= 1, got {radius}")));
        }
        Ok(CutoffSpec { center, radius })
    }

    #[inline]
    pub fn dist(&self, s: f64, z: f64) -> f64 {
        ((s - self.center.0).powi(2) + (z - self.center.1).powi(2)).sqrt()
    }

    /// phi extended by zero outside the ball.
    #[inline]
    pub fn phi(&self, s: f64, z: f64) -> f64 {
        let t2 = (self.dist(s, z) / self.radius).powi(2);
        if t2 >= 1.0 {
            0.0
        } else {
            (1.0 - t2) * (1.0 - t2)
        }
    }

    /// Worst sampled values of (R |D phi|, R^2 * radial second-derivative
    /// terms) over `n` radii; the constraints demand (<= 2, <= 8).
    pub fn derivative_bounds(&self, n: usize) -> (f64, f64) {
        let mut max_grad = 0.0f64;
        let mut max_hess = 0.0f64;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let psi_p = -4.0 * t * (1.0 - t * t); // d/dt (1-t^2)^2
            let psi_pp = -4.0 + 12.0 * t * t;
            let tangential = if t > 0.0 { psi_p / t } else { -4.0 };
            max_grad = max_grad.max(psi_p.abs());
            max_hess = max_hess.max(psi_pp.abs()).max(tangential.abs());
        }
        (max_grad, max_hess)
    }

    /// Requires the closed ball to sit inside the grid rectangle.
    pub fn require_inside(&self, grid: &GridSpec) -> Result<()> {
        let (p, r) = (self.center, self.radius);
        if p.0 - r < grid.s0 || p.0 + r > grid.s1 || p.1 - r < grid.z0 || p.1 + r > grid.z1 {
            return Err(Error::Domain(format!(
                "ball of radius {r} at ({}, {}) exits the grid rectangle",
                p.0, p.1
            )));
        }
        Ok(())
    }
}

/// Carries Lambda = 400 / R without ever rounding the product back.
#[derive(Debug, Clone, Copy)]
pub struct BernsteinConfig {
    pub radius: f64,
}

impl BernsteinConfig {
    pub fn for_radius(radius: f64) -> Result<Self> {
        if !(radius >= 1.0) {
            return Err(Error::Input(format!("radius must be >= 1, got {radius}")));
        }
        Ok(BernsteinConfig { radius })
    }

    pub fn lambda(&self) -> f64 {
        400.0 / self.radius
    }

    /// Exactly 400 by construction.
    pub fn lambda_times_radius(&self) -> f64 {
        400.0
    }

    /// Lambda * v^2 / 2 evaluated without materializing Lambda.
    #[inline]
    fn lambda_half_sq(&self, v: f64) -> f64 {
        400.0 * v * v / (2.0 * self.radius)
    }
}

/// L w = a^{ij}(Du) D_i D_j w + D_z w: coefficients from jets of `u`,
/// derivatives from jets of `w`.
pub fn apply_l(u: &ScalarField2D, w: &ScalarField2D) -> Result<ScalarField2D> {
    if u.grid() != w.grid() {
        return Err(Error::Input("apply_l requires matching grids".into()));
    }
    let g = *u.grid();
    let mut out = ScalarField2D::constant(g, 0.0)?;
    for j in 0..g.nz {
        for i in 0..g.ns {
            let ju = jet_at(u, i, j)?;
            let jw = jet_at(w, i, j)?;
            out.set(i, j, coeff_matrix(&ju).contract(&jw.d2u) + jw.du[1]);
        }
    }
    Ok(out)
}

/// Sup-norm of L(u^2/2) - |Du|^2 / (1 + |Du|^2), the identity the
/// gradient estimate rests on; zero for exact translators.
pub fn l_usq_identity_sup(u: &ScalarField2D) -> Result<f64> {
    let g = *u.grid();
    let w = ScalarField2D::from_values(g, u.values().iter().map(|v| 0.5 * v * v).collect())?;
    let lw = apply_l(u, &w)?;
    let mut sup = 0.0f64;
    for j in 0..g.nz {
        for i in 0..g.ns {
            let jet = jet_at(u, i, j)?;
            let g2 = jet.grad_sq();
            sup = sup.max((lw.at(i, j) - g2 / (1.0 + g2)).abs());
        }
    }
    Ok(sup)
}

pub fn check_l_usq_identity(u: &ScalarField2D, tol: f64) -> Result<CheckReport> {
    let sup = l_usq_identity_sup(u)?;
    let mut b = ReportBuilder::new("l-usq-identity");
    b.input("grid", format!("{}x{}", u.grid().ns, u.grid().nz));
    b.criterion("sup_identity_error", sup, tol, sup <= tol);
    Ok(b.finish())
}

/// Nodewise slack of L(|Du|^2/2) >= (1 - 5|Du|^2/(1+|Du|^2)) |D^2 u|^2,
/// evaluated two layers away from the boundary (the left side differences
/// a derived field). Returns (min slack, slack field grid offset 2).
pub fn hessian_inequality_min_slack(u: &ScalarField2D) -> Result<f64> {
    let g = *u.grid();
    if g.ns < 7 || g.nz < 7 {
        return Err(Error::DegenerateGrid(
            "hessian inequality needs at least 7 nodes per axis".into(),
        ));
    }
    let jets = JetField::compute(u)?;
    let half_grad =
        ScalarField2D::from_fn(g, |_, _| 0.0).and_then(|mut f| {
            for j in 0..g.nz {
                for i in 0..g.ns {
                    f.set(i, j, 0.5 * jets.at_node(i, j).grad_sq());
                }
            }
            Ok(f)
        })?;
    let lg = apply_l(u, &half_grad)?;
    let mut min_slack = f64::INFINITY;
    for j in 2..g.nz - 2 {
        for i in 2..g.ns - 2 {
            let jet = jets.at_node(i, j);
            let g2 = jet.grad_sq();
            let hess_sq = jet.d2u.ss * jet.d2u.ss
                + 2.0 * jet.d2u.sz * jet.d2u.sz
                + jet.d2u.zz * jet.d2u.zz;
            let rhs = (1.0 - 5.0 * g2 / (1.0 + g2)) * hess_sq;
            min_slack = min_slack.min(lg.at(i, j) - rhs);
        }
    }
    Ok(min_slack)
}

pub fn check_hessian_inequality(u: &ScalarField2D, tol: f64) -> Result<CheckReport> {
    let min_slack = hessian_inequality_min_slack(u)?;
    let mut b = ReportBuilder::new("hessian-inequality");
    b.input("grid", format!("{}x{}", u.grid().ns, u.grid().nz));
    b.criterion("min_slack", min_slack, -tol, min_slack >= -tol);
    Ok(b.finish())
}

/// G = phi^2 |Du|^2/2 + Lambda u^2/2 nodewise; phi is extended by zero, so
/// nodes outside the ball carry the Lambda term alone.
pub fn build_g(
    u: &ScalarField2D,
    cutoff: &CutoffSpec,
    cfg: &BernsteinConfig,
) -> Result<ScalarField2D> {
    let g = *u.grid();
    cutoff.require_inside(&g)?;
    let jets = JetField::compute(u)?;
    let mut out = ScalarField2D::constant(g, 0.0)?;
    for j in 0..g.nz {
        for i in 0..g.ns {
            let phi = cutoff.phi(g.s_at(i), g.z_at(j));
            let half_grad = 0.5 * jets.at_node(i, j).grad_sq();
            out.set(i, j, phi * phi * half_grad + cfg.lambda_half_sq(u.at(i, j)));
        }
    }
    Ok(out)
}

/// Ball node partition: (interior nodes, boundary-ring nodes). The ring is
/// the set of ball nodes with a 4-neighbour outside the ball.
fn ball_nodes(grid: &GridSpec, cutoff: &CutoffSpec) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let inside = |i: i64, j: i64| -> bool {
        if i < 0 || j < 0 || i >= grid.ns as i64 || j >= grid.nz as i64 {
            return false;
        }
        cutoff.dist(grid.s_at(i as usize), grid.z_at(j as usize)) <= cutoff.radius
    };
    let mut interior = Vec::new();
    let mut ring = Vec::new();
    for j in 0..grid.nz {
        for i in 0..grid.ns {
            if !inside(i as i64, j as i64) {
                continue;
            }
            let (i64_, j64) = (i as i64, j as i64);
            let on_ring = !inside(i64_ - 1, j64)
                || !inside(i64_ + 1, j64)
                || !inside(i64_, j64 - 1)
                || !inside(i64_, j64 + 1);
            if on_ring {
                ring.push((i, j));
            } else {
                interior.push((i, j));
            }
        }
    }
    (interior, ring)
}

/// Discrete maximum-principle check: with |Du|^2 <= 1/4 on the ball, the
/// subsolution G attains its ball maximum on the boundary ring up to the
/// stencil tolerance, and L G stays nonnegative up to the same tolerance.
/// `offset` is subtracted from u before forming G (ends carry their
/// asymptotic plane value).
pub fn check_max_principle(
    u: &ScalarField2D,
    cutoff: &CutoffSpec,
    offset: f64,
) -> Result<CheckReport> {
    let g = *u.grid();
    cutoff.require_inside(&g)?;
    let cfg = BernsteinConfig::for_radius(cutoff.radius)?;
    let jets = JetField::compute(u)?;
    let (interior, ring) = ball_nodes(&g, cutoff);
    if interior.is_empty() || ring.is_empty() {
        return Err(Error::DegenerateGrid("ball resolves too few nodes".into()));
    }

    // hypothesis |Du|^2 <= 1/4 on the ball; its failure is reported apart
    // from a check failure so sweeps can skip invalid configurations
    let mut sup_hess = 0.0f64;
    for &(i, j) in interior.iter().chain(&ring) {
        let jet = jets.at_node(i, j);
        if jet.grad_sq() > 0.25 + 1e-12 {
            return Err(Error::Hypothesis(format!(
                "|Du|^2 = {} > 1/4 at ball node ({i},{j})",
                jet.grad_sq()
            )));
        }
        let hess_sq = jet.d2u.ss * jet.d2u.ss
            + 2.0 * jet.d2u.sz * jet.d2u.sz
            + jet.d2u.zz * jet.d2u.zz;
        sup_hess = sup_hess.max(hess_sq.sqrt());
    }

    let shifted =
        ScalarField2D::from_values(g, u.values().iter().map(|v| v - offset).collect())?;
    let g_field = build_g(&shifted, cutoff, &cfg)?;
    let lg = apply_l(u, &g_field)?;

    let max_over = |nodes: &[(usize, usize)], f: &ScalarField2D| {
        nodes.iter().fold(f64::NEG_INFINITY, |m, &(i, j)| m.max(f.at(i, j)))
    };
    let interior_max = max_over(&interior, &g_field);
    let ring_max = max_over(&ring, &g_field);
    let min_lg = interior
        .iter()
        .chain(&ring)
        .fold(f64::INFINITY, |m, &(i, j)| m.min(lg.at(i, j)));

    let h = g.h_s().max(g.h_z());
    let tol = 10.0 * h * h * sup_hess;

    let mut b = ReportBuilder::new("max-principle");
    b.input("center", format!("({}, {})", cutoff.center.0, cutoff.center.1));
    b.input("radius", cutoff.radius);
    b.input("offset", offset);
    b.input("grid", format!("{}x{}", g.ns, g.nz));
    b.measure("interior_max_G", interior_max);
    b.measure("ring_max_G", ring_max);
    b.measure("sup_hess", sup_hess);
    b.criterion("interior_minus_ring_max", interior_max - ring_max, tol, interior_max <= ring_max + tol);
    b.criterion("min_LG", min_lg, -tol, min_lg >= -tol);
    Ok(b.finish())
}

/// Closed-form interior gradient estimate check on a fixture:
/// |Du(p)|^2 <= (400/R) max over the circle of (u - offset)^2, under the
/// hypotheses R >= 1 and |Du|^2 <= 1/4 on the closed ball.
pub fn gradient_estimate_check(
    sol: &impl AnalyticField,
    offset: f64,
    p: (f64, f64),
    radius: f64,
) -> Result<CheckReport> {
    if !(radius >= 1.0) {
        return Err(Error::Hypothesis(format!("estimate requires R >= 1, got {radius}")));
    }
    // hypothesis sweep over the closed disk (polar sampling)
    let (n_r, n_t) = (64usize, 256usize);
    for kr in 0..=n_r {
        let r = radius * kr as f64 / n_r as f64;
        for kt in 0..n_t {
            let theta = kt as f64 * std::f64::consts::TAU / n_t as f64;
            let jet = sol.jet(p.0 + r * theta.cos(), p.1 + r * theta.sin())?;
            if jet.grad_sq() > 0.25 + 1e-12 {
                return Err(Error::Hypothesis(format!(
                    "|Du|^2 = {} > 1/4 inside the ball",
                    jet.grad_sq()
                )));
            }
            if r == 0.0 {
                break;
            }
        }
    }
    let lhs = sol.jet(p.0, p.1)?.grad_sq();
    let mut max_usq = 0.0f64;
    let n = 4096;
    for k in 0..n {
        let theta = k as f64 * std::f64::consts::TAU / n as f64;
        let v = sol.eval(p.0 + radius * theta.cos(), p.1 + radius * theta.sin())? - offset;
        max_usq = max_usq.max(v * v);
    }
    let rhs = 400.0 * max_usq / radius;

    let mut b = ReportBuilder::new("gradient-estimate");
    b.input("center", format!("({}, {})", p.0, p.1));
    b.input("radius", radius);
    b.input("offset", offset);
    b.measure("lhs_grad_sq", lhs);
    b.measure("rhs_bound", rhs);
    b.require(lhs <= rhs);
    Ok(b.finish())
}

/// One rung of the decay chain at tail height R.
#[derive(Debug, Clone, Copy)]
pub struct DecayRung {
    pub r: f64,
    /// sup of |Du|^2 over the tail {z >= R}.
    pub sup_grad_sq: f64,
    /// R * sup |Du|^2; must decrease to zero along the list.
    pub r_weighted: f64,
    /// (800/R) sup of (u-offset)^2 over {z >= R/2}.
    pub chain_rhs: f64,
    /// The circle integral of R |Du|^2 over a radius-R circle inscribed in
    /// the tail (center (0, 2R)).
    pub circle_integral: f64,
}

/// Verifies the theorem-proof decay chain along a fixture tail: the 800/R
/// inequality at each R, and both R sup|Du|^2 and the circle integral
/// strictly decreasing toward zero.
pub fn decay_chain_check(sol: &ExactSolution, r_list: &[f64]) -> Result<CheckReport> {
    if r_list.len() < 2 || r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("decay chain needs a strictly increasing R list".into()));
    }
    let offset = sol.asymptotic_offset();
    let mut rungs = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let (_, sup_grad_sq) = sol.decay_profile(r)?;
        let (sup_u_sq_half, _) = sol.decay_profile(r / 2.0)?;
        let chain_rhs = 800.0 * sup_u_sq_half / r;
        // full circle inscribed in the tail {z >= R}
        let n = 1024;
        let mut vals = Vec::with_capacity(n);
        for k in 0..n {
            let theta = k as f64 * std::f64::consts::TAU / n as f64;
            let jet = sol.jet(r * theta.cos(), 2.0 * r + r * theta.sin())?;
            vals.push(r * jet.grad_sq());
        }
        let circle_integral = crate::quad::trapezoid_closed(&vals, std::f64::consts::TAU);
        rungs.push(DecayRung {
            r,
            sup_grad_sq,
            r_weighted: r * sup_grad_sq,
            chain_rhs,
            circle_integral,
        });
    }

    let mut b = ReportBuilder::new("decay-chain");
    b.input("fixture", sol.describe());
    b.input("offset", offset);
    b.input("r_list", format!("{r_list:?}"));
    let mut pass = true;
    for rung in &rungs {
        b.measure(&format!("r_weighted_R={}", rung.r), rung.r_weighted);
        b.measure(&format!("circle_integral_R={}", rung.r), rung.circle_integral);
        b.measure(&format!("chain_lhs_R={}", rung.r), rung.sup_grad_sq);
        b.measure(&format!("chain_rhs_R={}", rung.r), rung.chain_rhs);
        pass &= rung.sup_grad_sq <= rung.chain_rhs;
    }
    // strictly decreasing toward zero (constant zero on planes)
    let all_zero = rungs.iter().all(|r| r.r_weighted == 0.0 && r.circle_integral == 0.0);
    if !all_zero {
        pass &= rungs.windows(2).all(|w| w[1].r_weighted < w[0].r_weighted);
        pass &= rungs.windows(2).all(|w| w[1].circle_integral < w[0].circle_integral);
    }
    b.require(pass);
    Ok(b.finish())
}

/// CSV sweep table rows: (A, R, center, lhs, rhs, pass).
pub fn sweep_csv_header() -> &'static str {
    "A,R,center_s,center_z,lhs,rhs,pass\n"
}
