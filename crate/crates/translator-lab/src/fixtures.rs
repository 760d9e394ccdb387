//! Closed-form translator graphs used as oracles and fixtures.
//!
//! The catalog holds two families, both with globally valid closed forms
//! on their domains:
//!   * vertical planes u = a s + c (minimal translators), and
//!   * grim-reaper profiles u = B - arcsin(A e^{-z}), the s-independent
//!     solutions of the graph equation on the half-plane z > ln A.
//! Both have identically vanishing translator residual, which the tests
//! verify symbolically-derived jets against at random points.

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField2D};
use crate::geometry::{Jet2, SymMat2};
use crate::stencil::JetProvider;

/// Keeps grim profiles away from their vertical tangent A e^{-z} = 1,
/// where the graph description degenerates.
pub const GRIM_DOMAIN_MARGIN: f64 = 1e-6;

/// A closed-form field with analytic jets, evaluable off any grid.
pub trait AnalyticField {
    fn eval(&self, s: f64, z: f64) -> Result<f64>;
    fn jet(&self, s: f64, z: f64) -> Result<Jet2>;

    /// Nodewise-exact samples on a grid that must lie inside the domain.
    fn sample(&self, grid: GridSpec) -> Result<ScalarField2D>
    where
        Self: Sized,
    {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.nz {
            for i in 0..grid.ns {
                values.push(self.eval(grid.s_at(i), grid.z_at(j))?);
            }
        }
        ScalarField2D::from_values(grid, values)
    }
}

/// Catalog entry: exact translator graph over a vertical plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactSolution {
    /// u(s, z) = slope * s + offset on all of the chart plane.
    Plane { slope: f64, offset: f64 },
    /// u(s, z) = offset - arcsin(amplitude * e^{-z}) on
    /// { z > ln(amplitude) + margin }; amplitude > 0.
    GrimProfile { amplitude: f64, offset: f64 },
}

impl ExactSolution {
    pub fn plane(slope: f64, offset: f64) -> Self {
        ExactSolution::Plane { slope, offset }
    }

    pub fn grim(amplitude: f64, offset: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::Input(format!("grim amplitude must be positive, got {amplitude}")));
        }
        Ok(ExactSolution::GrimProfile { amplitude, offset })
    }

    /// Lowest admissible z for grim profiles; -inf for planes.
    pub fn domain_floor(&self) -> f64 {
        match self {
            ExactSolution::Plane { .. } => f64::NEG_INFINITY,
            ExactSolution::GrimProfile { amplitude, .. } => {
                amplitude.ln() + GRIM_DOMAIN_MARGIN
            }
        }
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        if z < self.domain_floor() {
            return Err(Error::Domain(format!(
                "z = {z} below the grim profile domain floor {}",
                self.domain_floor()
            )));
        }
        Ok(())
    }

    /// The value the graph levels off to: the plane offset c, or the grim
    /// asymptotic plane value B. Estimates measuring "u" on an end
    /// subtract this.
    pub fn asymptotic_offset(&self) -> f64 {
        match self {
            ExactSolution::Plane { offset, .. } => *offset,
            ExactSolution::GrimProfile { offset, .. } => *offset,
        }
    }

    /// Tail data over { z >= r }: sup of (u - offset)^2 and sup of |Du|^2,
    /// both attained on the tail edge z = r and monotone in r.
    pub fn decay_profile(&self, r: f64) -> Result<(f64, f64)> {
        match self {
            ExactSolution::Plane { slope, .. } => {
                if *slope != 0.0 {
                    return Err(Error::Domain(
                        "decay profile requires a horizontal plane or a grim tail".into(),
                    ));
                }
                Ok((0.0, 0.0))
            }
            ExactSolution::GrimProfile { amplitude, .. } => {
                if r <= amplitude.ln() {
                    return Err(Error::Domain(format!(
                        "tail floor {r} must exceed ln(amplitude) = {}",
                        amplitude.ln()
                    )));
                }
                let w = amplitude * (-r).exp();
                let sup_u_sq = w.asin().powi(2);
                let sup_grad_sq = w * w / (1.0 - w * w);
                Ok((sup_u_sq, sup_grad_sq))
            }
        }
    }

    /// Human-readable closed form, used by the catalog listing.
    pub fn describe(&self) -> String {
        match self {
            ExactSolution::Plane { slope, offset } => {
                format!("u(s,z) = {slope}*s + {offset}  on all of the chart plane")
            }
            ExactSolution::GrimProfile { amplitude, offset } => format!(
                "u(s,z) = {offset} - arcsin({amplitude}*exp(-z))  on z > {:.6}",
                self.domain_floor()
            ),
        }
    }
}

impl AnalyticField for ExactSolution {
    fn eval(&self, s: f64, z: f64) -> Result<f64> {
        match self {
            ExactSolution::Plane { slope, offset } => Ok(slope * s + offset),
            ExactSolution::GrimProfile { amplitude, offset } => {
                self.check_domain(z)?;
                let w = amplitude * (-z).exp();
                if w > 1.0 - 1e-9 {
                    return Err(Error::Domain(format!(
                        "grim argument A e^{{-z}} = {w} too close to the vertical tangent"
                    )));
                }
                Ok(offset - w.asin())
            }
        }
    }

    fn jet(&self, s: f64, z: f64) -> Result<Jet2> {
        match self {
            ExactSolution::Plane { slope, .. } => Ok(Jet2::new(
                self.eval(s, z)?,
                [*slope, 0.0],
                SymMat2::ZERO,
            )),
            ExactSolution::GrimProfile { amplitude, .. } => {
                let u = self.eval(s, z)?;
                let w = amplitude * (-z).exp();
                let one_minus = 1.0 - w * w;
                let dz = w / one_minus.sqrt();
                let dzz = -w / (one_minus * one_minus.sqrt());
                Ok(Jet2::new(u, [0.0, dz], SymMat2 { ss: 0.0, sz: 0.0, zz: dzz }))
            }
        }
    }
}

impl JetProvider for ExactSolution {
    fn jet_at_point(&self, s: f64, z: f64) -> Result<Jet2> {
        self.jet(s, z)
    }

    fn resolution(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Manufactured field u = amp * sin(s) * e^{-z}; not a translator, used to
/// verify solver convergence via its analytically induced forcing.
#[derive(Debug, Clone, Copy)]
pub struct SineExpField {
    pub amp: f64,
}

impl AnalyticField for SineExpField {
    fn eval(&self, s: f64, z: f64) -> Result<f64> {
        Ok(self.amp * s.sin() * (-z).exp())
    }

    fn jet(&self, s: f64, z: f64) -> Result<Jet2> {
        let e = (-z).exp();
        let v = self.amp * s.sin() * e;
        Ok(Jet2::new(
            v,
            [self.amp * s.cos() * e, -v],
            SymMat2 { ss: -v, sz: -self.amp * s.cos() * e, zz: v },
        ))
    }
}

impl JetProvider for SineExpField {
    fn jet_at_point(&self, s: f64, z: f64) -> Result<Jet2> {
        self.jet(s, z)
    }

    fn resolution(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Built-in catalog entries with stable identifiers.
pub fn catalog() -> Vec<(&'static str, ExactSolution)> {
    vec![
        ("plane:a=0,c=0", ExactSolution::plane(0.0, 0.0)),
        ("plane:a=2,c=1", ExactSolution::plane(2.0, 1.0)),
        (
            "grim:A=1,B=pi/2",
            ExactSolution::GrimProfile { amplitude: 1.0, offset: std::f64::consts::FRAC_PI_2 },
        ),
        ("grim:A=0.5,B=0", ExactSolution::GrimProfile { amplitude: 0.5, offset: 0.0 }),
    ]
}

/// Parses scalar literals appearing in fixture specs and CLI flags:
/// plain floats, `pi`, `pi/2`, `2pi`, `ln2`, `-ln4`, `e`.
pub fn parse_scalar(text: &str) -> Result<f64> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::Config("empty numeric literal".into()));
    }
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (sign, t) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t),
    };
    let base = |s: &str| -> Result<f64> {
        if s == "pi" {
            Ok(std::f64::consts::PI)
        } else if s == "e" {
            Ok(std::f64::consts::E)
        } else if let Some(arg) = s.strip_prefix("ln") {
            let x: f64 = arg
                .parse()
                .map_err(|_| Error::Config(format!("bad ln literal {s:?}")))?;
            if x <= 0.0 {
                return Err(Error::Config(format!("ln of non-positive value in {s:?}")));
            }
            Ok(x.ln())
        } else {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse numeric literal {s:?}")))
        }
    };
    let v = if let Some((num, den)) = t.split_once('/') {
        base(num)? / base(den)?
    } else if let Some((a, b)) = t.split_once('*') {
        base(a)? * base(b)?
    } else {
        base(t)?
    };
    if !v.is_finite() {
        return Err(Error::Config(format!("literal {text:?} is not finite")));
    }
    Ok(sign * v)
}

/// Parses fixture specs of the form `plane:a=2,c=1` or `grim:A=1,B=pi/2`.
pub fn parse_fixture(spec: &str) -> Result<ExactSolution> {
    let (kind, params) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("fixture spec {spec:?} needs kind:params")))?;
    let mut map = std::collections::BTreeMap::new();
    for part in params.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad fixture parameter {part:?}")))?;
        map.insert(k.trim().to_ascii_lowercase(), parse_scalar(v)?);
    }
    let take = |map: &std::collections::BTreeMap<String, f64>, k: &str, default: f64| {
        map.get(k).copied().unwrap_or(default)
    };
    match kind.trim().to_ascii_lowercase().as_str() {
        "plane" => Ok(ExactSolution::plane(take(&map, "a", 0.0), take(&map, "c", 0.0))),
        "grim" => ExactSolution::grim(take(&map, "a", 1.0), take(&map, "b", 0.0)),
        other => Err(Error::Config(format!("unknown fixture kind {other:?}"))),
    }
}
