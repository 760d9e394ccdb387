//! Quadrature engine for the flux identity: total squared mean curvature
//! over a compact piece of a translator equals the outward flux of the
//! tangential part of the vertical direction through its boundary.
//!
//! Area integrals use composite Simpson (tensor rule on rectangles, polar
//! rule on annuli and disks). Closed curves use the trapezoid rule, which
//! is spectrally accurate on smooth periodic integrands; rectangle
//! boundaries traverse their four edges counterclockwise with one-sided
//! corner conormals. Off-node jets come from bilinear interpolation of
//! precomputed nodal jet fields, never from re-differencing.

use std::f64::consts::TAU;

use crate::chart::Vec3;
use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::fixtures::AnalyticField;
use crate::geometry::{area_element, mean_curvature, translator_residual, unit_normal, Jet2};
use crate::quad::{simpson_weights, trapezoid_closed, trapezoid_open};
use crate::report::{observed_orders, CheckReport, ReportBuilder};
use crate::solver::assemble_residual;
use crate::stencil::{jet_at, JetField, JetProvider};

/// Default sample count for closed curves and analytic quadrature.
const DEFAULT_CURVE_SAMPLES: usize = 256;

/// Region of a graph patch over which both sides of the identity are
/// evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionSpec {
    Rectangle { s0: f64, s1: f64, z0: f64, z1: f64 },
    Annulus { center: (f64, f64), r_in: f64, r_out: f64 },
    Disk { center: (f64, f64), radius: f64 },
}

impl RegionSpec {
    pub fn rectangle(s0: f64, s1: f64, z0: f64, z1: f64) -> Result<Self> {
        if !(s1 > s0 && z1 > z0) {
            return Err(Error::Input(format!(
                "rectangle [{s0},{s1}]x[{z0},{z1}] must have positive measure"
            )));
        }
        Ok(RegionSpec::Rectangle { s0, s1, z0, z1 })
    }

    pub fn annulus(center: (f64, f64), r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_out > r_in && r_in > 0.0) {
            return Err(Error::Input(format!(
                "annulus radii must satisfy r_out > r_in > 0, got {r_in}, {r_out}"
            )));
        }
        Ok(RegionSpec::Annulus { center, r_in, r_out })
    }

    pub fn disk(center: (f64, f64), radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Input(format!("disk radius must be positive, got {radius}")));
        }
        Ok(RegionSpec::Disk { center, radius })
    }

    pub fn describe(&self) -> String {
        match self {
            RegionSpec::Rectangle { s0, s1, z0, z1 } => format!("rect[{s0},{s1}]x[{z0},{z1}]"),
            RegionSpec::Annulus { center, r_in, r_out } => {
                format!("annulus(({},{}), {r_in}..{r_out})", center.0, center.1)
            }
            RegionSpec::Disk { center, radius } => {
                format!("disk(({},{}), {radius})", center.0, center.1)
            }
        }
    }
}

/// Even interval count resolving length `len` at resolution `h`; counts
/// snap to the nearest integer so grid-aligned regions place quadrature
/// nodes exactly on grid nodes.
fn even_intervals(len: f64, h: Option<f64>, analytic_default: usize) -> usize {
    let mut n = match h {
        Some(h) => {
            let m = len / h;
            let snapped = if (m - m.round()).abs() < 1e-6 { m.round() } else { m.ceil() };
            snapped.max(2.0) as usize
        }
        None => analytic_default,
    };
    if n % 2 != 0 {
        n += 1;
    }
    n
}

/// Curve sample count: resolve the field scale at radius r (8 samples per
/// grid cell along the circumference), never fewer than 256.
fn circle_samples(radius: f64, h: Option<(f64, f64)>) -> usize {
    let mut n = match h {
        Some((hs, hz)) => {
            (8.0 * radius / hs.min(hz)).ceil().max(DEFAULT_CURVE_SAMPLES as f64) as usize
        }
        None => DEFAULT_CURVE_SAMPLES,
    };
    if n % 2 != 0 {
        n += 1;
    }
    n
}

/// Left side of the identity: Simpson quadrature of |H|^2 times the graph
/// area element over the region, in chart coordinates.
pub fn total_mean_curvature(jets: &dyn JetProvider, region: &RegionSpec) -> Result<f64> {
    let h = jets.resolution();
    let density = |s: f64, z: f64| -> Result<f64> {
        let jet = jets.jet_at_point(s, z)?;
        let hsc = mean_curvature(&jet);
        Ok(hsc * hsc * area_element(&jet))
    };
    match *region {
        RegionSpec::Rectangle { s0, s1, z0, z1 } => {
            let ns = even_intervals(s1 - s0, h.map(|r| r.0), DEFAULT_CURVE_SAMPLES);
            let nz = even_intervals(z1 - z0, h.map(|r| r.1), DEFAULT_CURVE_SAMPLES);
            let ws = simpson_weights(ns, (s1 - s0) / ns as f64)?;
            let wz = simpson_weights(nz, (z1 - z0) / nz as f64)?;
            let mut total = 0.0;
            for (j, wzj) in wz.iter().enumerate() {
                let z = z0 + j as f64 * (z1 - z0) / nz as f64;
                for (i, wsi) in ws.iter().enumerate() {
                    let s = s0 + i as f64 * (s1 - s0) / ns as f64;
                    total += wsi * wzj * density(s, z)?;
                }
            }
            Ok(total)
        }
        RegionSpec::Annulus { center, r_in, r_out } => {
            polar_area_integral(&density, center, r_in, r_out, h)
        }
        RegionSpec::Disk { center, radius } => {
            polar_area_integral(&density, center, 0.0, radius, h)
        }
    }
}

fn polar_area_integral(
    density: &dyn Fn(f64, f64) -> Result<f64>,
    center: (f64, f64),
    r_in: f64,
    r_out: f64,
    h: Option<(f64, f64)>,
) -> Result<f64> {
    let nr = even_intervals(r_out - r_in, h.map(|r| r.0.min(r.1)), DEFAULT_CURVE_SAMPLES).max(16);
    let nt = circle_samples(r_out, h);
    let wr = simpson_weights(nr, (r_out - r_in) / nr as f64)?;
    let wt = simpson_weights(nt, TAU / nt as f64)?;
    let mut total = 0.0;
    for (k, wtk) in wt.iter().enumerate() {
        let theta = k as f64 * TAU / nt as f64;
        let (sin, cos) = theta.sin_cos();
        for (m, wrm) in wr.iter().enumerate() {
            let r = r_in + m as f64 * (r_out - r_in) / nr as f64;
            let val = if r == 0.0 {
                0.0
            } else {
                density(center.0 + r * cos, center.1 + r * sin)? * r
            };
            total += wtk * wrm * val;
        }
    }
    Ok(total)
}

/// Unit outward conormal from the curve tangent and the surface normal:
/// normalize the tangent and cross it with the normal.
pub fn conormal(tangent: Vec3, nu: Vec3) -> Result<Vec3> {
    if tangent.norm() == 0.0 {
        return Err(Error::Input("conormal of a zero tangent".into()));
    }
    if (nu.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "conormal requires a unit normal, |nu| = {}",
            nu.norm()
        )));
    }
    Ok(tangent.normalized()?.cross(nu))
}

#[derive(Debug, Clone)]
pub struct CurveSample {
    /// Curve parameter (angle for circles, arc length for edges).
    pub t: f64,
    /// Surface point in chart-frame coordinates (u, s, z).
    pub position: Vec3,
    /// Velocity of the parameterization (not normalized).
    pub tangent: Vec3,
    /// Unit surface normal at the point.
    pub normal: Vec3,
    /// Unit outward conormal.
    pub conormal: Vec3,
}

/// Sampled boundary curve on a graph patch. Closed curves sample one full
/// period uniformly without repeating the endpoint; open edges include
/// both endpoints.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub samples: Vec<CurveSample>,
    pub closed: bool,
    /// Parameter period (closed) or total parameter length (open).
    pub span: f64,
}

fn curve_sample(jets: &dyn JetProvider, s: f64, z: f64, sp: f64, zp: f64, t: f64) -> Result<CurveSample> {
    let jet = jets.jet_at_point(s, z)?;
    // chain rule keeps the velocity exactly tangent to the graph
    let tangent = Vec3::new(jet.du[0] * sp + jet.du[1] * zp, sp, zp);
    let normal = unit_normal(&jet);
    let conormal = conormal(tangent, normal)?;
    Ok(CurveSample { t, position: Vec3::new(jet.u, s, z), tangent, normal, conormal })
}

impl BoundaryCurve {
    /// Polar curve of radius `radius` around `center`, sampled at `n`
    /// uniform angles (at least 64), counterclockwise.
    pub fn circle(
        jets: &dyn JetProvider,
        center: (f64, f64),
        radius: f64,
        n: usize,
    ) -> Result<BoundaryCurve> {
        if n < 64 {
            return Err(Error::Input(format!("polar curves need at least 64 samples, got {n}")));
        }
        if !(radius > 0.0) {
            return Err(Error::Input("circle radius must be positive".into()));
        }
        let mut samples = Vec::with_capacity(n);
        for k in 0..n {
            let theta = k as f64 * TAU / n as f64;
            let (sin, cos) = theta.sin_cos();
            samples.push(curve_sample(
                jets,
                center.0 + radius * cos,
                center.1 + radius * sin,
                -radius * sin,
                radius * cos,
                theta,
            )?);
        }
        let curve = BoundaryCurve { samples, closed: true, span: TAU };
        curve.validate()?;
        Ok(curve)
    }

    /// Circle with the sample count chosen from the jet resolution.
    pub fn circle_auto(
        jets: &dyn JetProvider,
        center: (f64, f64),
        radius: f64,
    ) -> Result<BoundaryCurve> {
        BoundaryCurve::circle(jets, center, radius, circle_samples(radius, jets.resolution()))
    }

    /// The four edges of a rectangle traversed counterclockwise (bottom,
    /// right, top, left); corner conormals are one-sided per edge.
    pub fn rectangle_edges(
        jets: &dyn JetProvider,
        s0: f64,
        s1: f64,
        z0: f64,
        z1: f64,
    ) -> Result<Vec<BoundaryCurve>> {
        if !(s1 > s0 && z1 > z0) {
            return Err(Error::Input("rectangle must have positive extent".into()));
        }
        let h = jets.resolution();
        let edge = |fixed: f64,
                    a: f64,
                    b: f64,
                    horizontal: bool,
                    direction: f64|
         -> Result<BoundaryCurve> {
            let h_axis = h.map(|r| if horizontal { r.0 } else { r.1 });
            let n = even_intervals((b - a).abs(), h_axis, DEFAULT_CURVE_SAMPLES);
            let step = (b - a) / n as f64; // signed
            let mut samples = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let c = a + k as f64 * step;
                let (s, z, sp, zp) = if horizontal {
                    (c, fixed, direction, 0.0)
                } else {
                    (fixed, c, 0.0, direction)
                };
                samples.push(curve_sample(jets, s, z, sp, zp, k as f64 * step.abs())?);
            }
            let curve =
                BoundaryCurve { samples, closed: false, span: (b - a).abs() };
            curve.validate()?;
            Ok(curve)
        };
        Ok(vec![
            edge(z0, s0, s1, true, 1.0)?,   // bottom, +s
            edge(s1, z0, z1, false, 1.0)?,  // right,  +z
            edge(z1, s1, s0, true, -1.0)?,  // top,    -s
            edge(s0, z1, z0, false, -1.0)?, // left,   -z
        ])
    }

    /// Orientation reversal: tangents and conormals flip sign.
    pub fn reversed(&self) -> BoundaryCurve {
        let mut samples: Vec<CurveSample> = self
            .samples
            .iter()
            .map(|s| CurveSample {
                t: s.t,
                position: s.position,
                tangent: s.tangent.scale(-1.0),
                normal: s.normal,
                conormal: s.conormal.scale(-1.0),
            })
            .collect();
        samples.reverse();
        BoundaryCurve { samples, closed: self.closed, span: self.span }
    }

    /// Frame invariants at every sample: unit normal and conormal within
    /// 1e-12, orthogonality within 1e-10.
    pub fn validate(&self) -> Result<()> {
        for s in &self.samples {
            if (s.normal.norm() - 1.0).abs() > 1e-12 || (s.conormal.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Input("curve sample frame is not unit length".into()));
            }
            if s.conormal.dot(s.normal).abs() > 1e-10 {
                return Err(Error::Input("conormal not orthogonal to the surface normal".into()));
            }
        }
        Ok(())
    }

    /// Integrand of the boundary flux: the vertical component of
    /// tangent x normal (the |gamma'| factors cancel against the unit
    /// conormal, so no normalization appears).
    fn flux_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tangent.cross(s.normal).z).collect()
    }

    fn flux_integral(&self) -> f64 {
        let vals = self.flux_values();
        if self.closed {
            trapezoid_closed(&vals, self.span)
        } else {
            trapezoid_open(&vals, self.span / (vals.len() - 1) as f64)
        }
    }
}

/// Right side of the identity: flux of the tangential vertical direction
/// through the given boundary. A single open edge is rejected; rectangles
/// pass their four edges, annuli an outer circle plus a reversed inner one.
pub fn boundary_flux(curves: &[BoundaryCurve]) -> Result<f64> {
    if curves.is_empty() {
        return Err(Error::Input("boundary flux needs at least one curve".into()));
    }
    if curves.len() == 1 && !curves[0].closed {
        return Err(Error::Input(
            "a single open edge does not bound a region; pass companion edges".into(),
        ));
    }
    Ok(curves.iter().map(|c| c.flux_integral()).sum())
}

/// Boundary curves bounding a region, outward-oriented.
pub fn region_boundary(jets: &dyn JetProvider, region: &RegionSpec) -> Result<Vec<BoundaryCurve>> {
    match *region {
        RegionSpec::Rectangle { s0, s1, z0, z1 } => {
            BoundaryCurve::rectangle_edges(jets, s0, s1, z0, z1)
        }
        RegionSpec::Annulus { center, r_in, r_out } => Ok(vec![
            BoundaryCurve::circle_auto(jets, center, r_out)?,
            BoundaryCurve::circle_auto(jets, center, r_in)?.reversed(),
        ]),
        RegionSpec::Disk { center, radius } => {
            Ok(vec![BoundaryCurve::circle_auto(jets, center, radius)?])
        }
    }
}

/// Both sides of the flux identity over one region.
pub fn flux_two_sides(jets: &dyn JetProvider, region: &RegionSpec) -> Result<(f64, f64)> {
    let lhs = total_mean_curvature(jets, region)?;
    let rhs = boundary_flux(&region_boundary(jets, region)?)?;
    Ok((lhs, rhs))
}

/// One refinement level of the gap study.
#[derive(Debug, Clone, Copy)]
pub struct FluxGapLevel {
    pub h: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// Sup-norm of the discrete translator residual of the sampled field,
    /// reported alongside the gap.
    pub residual_sup: f64,
}

/// Evaluates both sides on fixture samples over a grid refinement
/// sequence, using grid jets.
pub fn flux_gap_levels(
    sol: &impl AnalyticField,
    region: &RegionSpec,
    grids: &[GridSpec],
) -> Result<Vec<FluxGapLevel>> {
    let mut levels = Vec::with_capacity(grids.len());
    for grid in grids {
        let field = sol.sample(*grid)?;
        let jets = JetField::compute(&field)?;
        let (lhs, rhs) = flux_two_sides(&jets, region)?;
        let mut residual_sup = 0.0f64;
        for j in 0..grid.nz {
            for i in 0..grid.ns {
                residual_sup =
                    residual_sup.max(translator_residual(&jet_at(&field, i, j)?, 0.0).abs());
            }
        }
        levels.push(FluxGapLevel {
            h: grid.h_min(),
            lhs,
            rhs,
            gap: (lhs - rhs).abs(),
            residual_sup,
        });
    }
    Ok(levels)
}

/// Gap study as a check report: the gap must shrink at second order (or
/// sit at rounding level, as planes do).
pub fn flux_gap(
    sol: &impl AnalyticField,
    region: &RegionSpec,
    grids: &[GridSpec],
) -> Result<CheckReport> {
    if grids.len() < 3 {
        return Err(Error::Input("flux gap study needs at least 3 refinement levels".into()));
    }
    let levels = flux_gap_levels(sol, region, grids)?;
    let gaps: Vec<f64> = levels.iter().map(|l| l.gap).collect();
    let orders = observed_orders(&gaps);

    let mut b = ReportBuilder::new("flux-gap");
    b.input("region", region.describe());
    b.input("grids", format!("{:?}", grids.iter().map(|g| g.ns).collect::<Vec<_>>()));
    for l in &levels {
        b.measure(&format!("gap_h={:.6e}", l.h), l.gap);
    }
    let last = levels.last().unwrap();
    b.measure("lhs", last.lhs);
    b.measure("rhs", last.rhs);
    b.measure("residual_sup", last.residual_sup);
    let rounding = last.gap <= 1e-12;
    if rounding {
        b.criterion("final_gap", last.gap, 1e-12, true);
    } else {
        let mean_order = orders.iter().sum::<f64>() / orders.len() as f64;
        b.criterion("mean_gap_order", mean_order, 1.5, mean_order >= 1.5);
        b.require(gaps.windows(2).all(|w| w[1] <= w[0]));
    }
    for o in orders {
        b.order(o);
    }
    Ok(b.finish())
}

/// Vertical component of gamma' x nu on a polar curve, straight from the
/// cross product.
pub fn polar_integrand_cross(du: [f64; 2], theta: f64, r: f64) -> f64 {
    let (sin, cos) = theta.sin_cos();
    let (sp, zp) = (-r * sin, r * cos);
    let tangent = Vec3::new(du[0] * sp + du[1] * zp, sp, zp);
    let jet = Jet2::new(0.0, du, crate::geometry::SymMat2::ZERO);
    tangent.cross(unit_normal(&jet)).z
}

/// The same quantity via the closed-form intermediate expression
/// (r sin(theta) |D_s u|^2 - r cos(theta) D_z u D_s u + r sin(theta)) / W.
pub fn polar_integrand_closed_form(du: [f64; 2], theta: f64, r: f64) -> f64 {
    let w = (1.0 + du[0] * du[0] + du[1] * du[1]).sqrt();
    let (sin, cos) = theta.sin_cos();
    (r * sin * du[0] * du[0] - r * cos * du[1] * du[0] + r * sin) / w
}

/// Verifies, on one polar curve: (i) the cross-product evaluation equals
/// the closed-form intermediate expression to 1e-12, (ii) the deviation
/// from the leading r sin(theta) term is bounded by 2 r |Du|^2 at every
/// sample, and (iii) the isolated leading term integrates to zero.
pub fn integrand_expansion_check(
    jets: &dyn JetProvider,
    center: (f64, f64),
    radius: f64,
    n: Option<usize>,
) -> Result<CheckReport> {
    let n = n.unwrap_or_else(|| circle_samples(radius, jets.resolution()));
    let curve = BoundaryCurve::circle(jets, center, radius, n)?;
    let mut max_identity_diff = 0.0f64;
    let mut max_excess = f64::NEG_INFINITY; // |dev| - 2 r |Du|^2, must stay <= 0
    let mut leading: Vec<f64> = Vec::with_capacity(n);
    for sample in &curve.samples {
        let theta = sample.t;
        // recover Du at the sample from the stored frame
        let w = 1.0 / sample.normal.n;
        let du = [-sample.normal.s * w, -sample.normal.z * w];
        let cross = sample.tangent.cross(sample.normal).z;
        let closed = polar_integrand_closed_form(du, theta, radius);
        max_identity_diff = max_identity_diff.max((cross - closed).abs());
        let dev = cross - radius * theta.sin();
        let bound = 2.0 * radius * (du[0] * du[0] + du[1] * du[1]);
        max_excess = max_excess.max(dev.abs() - bound);
        leading.push(radius * theta.sin());
    }
    let rsin_integral = trapezoid_closed(&leading, TAU).abs();

    let mut b = ReportBuilder::new("integrand-expansion");
    b.input("center", format!("({}, {})", center.0, center.1));
    b.input("radius", radius);
    b.input("samples", n);
    b.criterion("max_identity_diff", max_identity_diff, 1e-12, max_identity_diff <= 1e-12);
    b.criterion("max_deviation_excess", max_excess, 0.0, max_excess <= 0.0);
    b.criterion("rsin_integral", rsin_integral, 1e-14, rsin_integral <= 1e-14);
    Ok(b.finish())
}

/// CSV rows (h, lhs, rhs, gap) for gap studies.
pub fn levels_to_csv(levels: &[FluxGapLevel]) -> String {
    use crate::field::fmt_f64;
    let mut out = String::from("h,lhs,rhs,gap\n");
    for l in levels {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(l.h),
            fmt_f64(l.lhs),
            fmt_f64(l.rhs),
            fmt_f64(l.gap)
        ));
    }
    out
}

/// Grid-jet / patch version of the two-sided evaluation; reports the
/// discrete residual sup-norm of the field alongside.
pub fn flux_gap_on_field(
    field: &crate::field::ScalarField2D,
    region: &RegionSpec,
) -> Result<(f64, f64, f64)> {
    let jets = JetField::compute(field)?;
    let (lhs, rhs) = flux_two_sides(&jets, region)?;
    let zero_forcing = crate::field::ScalarField2D::constant(*field.grid(), 0.0)?;
    let problem = crate::solver::DirichletProblem::new(field.clone(), zero_forcing)?;
    let residual = assemble_residual(field, &problem)?;
    Ok((lhs, rhs, residual.sup_norm()))
}
