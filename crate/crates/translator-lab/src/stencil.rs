//! Second-order finite differences: nodal jets and their interpolation.
//!
//! Interior nodes use central stencils. Boundary nodes use one-sided
//! stencils that keep every derivative O(h^2)-accurate: 3 points for
//! first derivatives, 4 points for second derivatives (falling back to
//! the symmetric 3-point formula when an axis has only 3 nodes). The
//! cross derivative is the tensor product of the two first-derivative
//! stencils, so it is O(h^2) everywhere including corners.

use crate::error::{Error, Result};
use crate::field::{cell_weights, GridSpec, ScalarField2D};
use crate::geometry::{Jet2, SymMat2};

/// One-dimensional first derivative along an axis of length `n`.
#[inline]
fn d1(get: impl Fn(usize) -> f64, n: usize, k: usize, h: f64) -> f64 {
    if k == 0 {
        (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h)
    } else if k == n - 1 {
        (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h)
    } else {
        (get(k + 1) - get(k - 1)) / (2.0 * h)
    }
}

/// One-dimensional second derivative along an axis of length `n`.
#[inline]
fn d2(get: impl Fn(usize) -> f64, n: usize, k: usize, h: f64) -> f64 {
    let h2 = h * h;
    if k > 0 && k < n - 1 {
        (get(k + 1) - 2.0 * get(k) + get(k - 1)) / h2
    } else if n == 3 {
        // only 3 nodes: the quadratic fit is the best available
        (get(0) - 2.0 * get(1) + get(2)) / h2
    } else if k == 0 {
        (2.0 * get(0) - 5.0 * get(1) + 4.0 * get(2) - get(3)) / h2
    } else {
        (2.0 * get(n - 1) - 5.0 * get(n - 2) + 4.0 * get(n - 3) - get(n - 4)) / h2
    }
}

/// Weights of the first-derivative stencil at index `k`: (offsets, coeffs).
#[inline]
fn d1_weights(n: usize, k: usize, h: f64) -> ([usize; 3], [f64; 3]) {
    if k == 0 {
        ([0, 1, 2], [-1.5 / h, 2.0 / h, -0.5 / h])
    } else if k == n - 1 {
        ([n - 1, n - 2, n - 3], [1.5 / h, -2.0 / h, 0.5 / h])
    } else {
        ([k - 1, k, k + 1], [-0.5 / h, 0.0, 0.5 / h])
    }
}

/// Full second-order jet of `u` at node (i, j).
pub fn jet_at(u: &ScalarField2D, i: usize, j: usize) -> Result<Jet2> {
    let g = *u.grid();
    if g.ns < 3 || g.nz < 3 {
        return Err(Error::DegenerateGrid(format!(
            "jets need at least 3 nodes per axis, grid is {}x{}",
            g.ns, g.nz
        )));
    }
    if i >= g.ns || j >= g.nz {
        return Err(Error::Input(format!("node ({i},{j}) outside grid {}x{}", g.ns, g.nz)));
    }
    let hs = g.h_s();
    let hz = g.h_z();

    let us = d1(|k| u.at(k, j), g.ns, i, hs);
    let uz = d1(|k| u.at(i, k), g.nz, j, hz);
    let uss = d2(|k| u.at(k, j), g.ns, i, hs);
    let uzz = d2(|k| u.at(i, k), g.nz, j, hz);

    // cross derivative: s-stencil applied to the z-derivative field
    let (idx, w) = d1_weights(g.ns, i, hs);
    let mut usz = 0.0;
    for m in 0..3 {
        if w[m] != 0.0 {
            usz += w[m] * d1(|k| u.at(idx[m], k), g.nz, j, hz);
        }
    }

    Ok(Jet2::new(u.at(i, j), [us, uz], SymMat2 { ss: uss, sz: usz, zz: uzz }))
}

/// Nodal jets of a whole field, precomputed once so off-node evaluation
/// can bilinearly interpolate jet components instead of re-differencing.
#[derive(Debug, Clone)]
pub struct JetField {
    grid: GridSpec,
    u: Vec<f64>,
    dus: Vec<f64>,
    duz: Vec<f64>,
    dss: Vec<f64>,
    dsz: Vec<f64>,
    dzz: Vec<f64>,
}

impl JetField {
    pub fn compute(field: &ScalarField2D) -> Result<JetField> {
        let g = *field.grid();
        let n = g.len();
        let mut jf = JetField {
            grid: g,
            u: Vec::with_capacity(n),
            dus: Vec::with_capacity(n),
            duz: Vec::with_capacity(n),
            dss: Vec::with_capacity(n),
            dsz: Vec::with_capacity(n),
            dzz: Vec::with_capacity(n),
        };
        for j in 0..g.nz {
            for i in 0..g.ns {
                let jet = jet_at(field, i, j)?;
                jf.u.push(jet.u);
                jf.dus.push(jet.du[0]);
                jf.duz.push(jet.du[1]);
                jf.dss.push(jet.d2u.ss);
                jf.dsz.push(jet.d2u.sz);
                jf.dzz.push(jet.d2u.zz);
            }
        }
        Ok(jf)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn at_node(&self, i: usize, j: usize) -> Jet2 {
        let k = j * self.grid.ns + i;
        Jet2::new(
            self.u[k],
            [self.dus[k], self.duz[k]],
            SymMat2 { ss: self.dss[k], sz: self.dsz[k], zz: self.dzz[k] },
        )
    }

    /// Bilinear interpolation of every jet component at (s, z).
    pub fn interp(&self, s: f64, z: f64) -> Result<Jet2> {
        let g = &self.grid;
        if !g.contains(s, z) {
            return Err(Error::Domain(format!("point ({s}, {z}) outside jet field domain")));
        }
        let (i, j, ws, wz) = cell_weights(g, s, z);
        let lerp = |v: &[f64]| {
            let k00 = j * g.ns + i;
            let k10 = k00 + 1;
            let k01 = k00 + g.ns;
            let k11 = k01 + 1;
            (1.0 - wz) * ((1.0 - ws) * v[k00] + ws * v[k10])
                + wz * ((1.0 - ws) * v[k01] + ws * v[k11])
        };
        Ok(Jet2::new(
            lerp(&self.u),
            [lerp(&self.dus), lerp(&self.duz)],
            SymMat2 { ss: lerp(&self.dss), sz: lerp(&self.dsz), zz: lerp(&self.dzz) },
        ))
    }

    pub fn max_grad_sq(&self) -> f64 {
        self.dus
            .iter()
            .zip(&self.duz)
            .fold(0.0f64, |m, (p, q)| m.max(p * p + q * q))
    }
}

/// Anything that can produce a jet at an arbitrary chart point: nodal jet
/// fields (bilinear) and closed-form solutions (analytic).
pub trait JetProvider {
    fn jet_at_point(&self, s: f64, z: f64) -> Result<Jet2>;
    /// Resolved length scales (h_s, h_z), used to align quadrature nodes
    /// with grid nodes. Closed-form providers return None.
    fn resolution(&self) -> Option<(f64, f64)>;
}

impl JetProvider for JetField {
    fn jet_at_point(&self, s: f64, z: f64) -> Result<Jet2> {
        self.interp(s, z)
    }

    fn resolution(&self) -> Option<(f64, f64)> {
        Some((self.grid.h_s(), self.grid.h_z()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    #[test]
    fn constant_field_has_zero_jets() {
        let g = GridSpec::square(0.0, 1.0, 0.0, 1.0, 5).unwrap();
        let f = ScalarField2D::constant(g, 5.0).unwrap();
        for j in 0..5 {
            for i in 0..5 {
                let jet = jet_at(&f, i, j).unwrap();
                assert_eq!(jet.u, 5.0);
                assert_eq!(jet.du, [0.0, 0.0]);
                assert_eq!(jet.d2u, SymMat2::ZERO);
            }
        }
    }

    #[test]
    fn affine_fields_are_exact_everywhere() {
        let g = GridSpec::new(0.0, 2.0, -1.0, 1.0, 9, 7).unwrap();
        let f = ScalarField2D::from_fn(g, |s, z| s + 2.0 * z).unwrap();
        for j in 0..7 {
            for i in 0..9 {
                let jet = jet_at(&f, i, j).unwrap();
                assert!((jet.du[0] - 1.0).abs() < 1e-13);
                assert!((jet.du[1] - 2.0).abs() < 1e-13);
                assert!(jet.d2u.frobenius() < 1e-12);
            }
        }
    }

    #[test]
    fn quadratics_have_exact_hessians_everywhere() {
        let g = GridSpec::new(0.0, 2.0, -1.0, 1.0, 9, 7).unwrap();
        let f = ScalarField2D::from_fn(g, |s, z| s * s - 3.0 * s * z + 2.0 * z * z).unwrap();
        for j in 0..7 {
            for i in 0..9 {
                let jet = jet_at(&f, i, j).unwrap();
                let (s, z) = (g.s_at(i), g.z_at(j));
                assert!((jet.du[0] - (2.0 * s - 3.0 * z)).abs() < 1e-12);
                assert!((jet.du[1] - (-3.0 * s + 4.0 * z)).abs() < 1e-12);
                assert!((jet.d2u.ss - 2.0).abs() < 1e-11);
                assert!((jet.d2u.sz + 3.0).abs() < 1e-11);
                assert!((jet.d2u.zz - 4.0).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn grim_profile_vertical_slope_at_ln2() {
        // u(z) = pi/2 - arcsin(e^{-z}); D_z u(ln 2) = 1/sqrt(3)
        let want = 1.0 / 3.0f64.sqrt();
        let mut errs = Vec::new();
        for n in [17usize, 33, 65] {
            let g = GridSpec::square(0.0, 1.0, 2.0f64.ln() - 0.2, 2.0f64.ln() + 0.2, n).unwrap();
            let f =
                ScalarField2D::from_fn(g, |_, z| std::f64::consts::FRAC_PI_2 - (-z).exp().asin())
                    .unwrap();
            let jet = jet_at(&f, n / 2, n / 2).unwrap();
            errs.push((jet.du[1] - want).abs());
        }
        assert!(errs[2] < 3e-5);
        // order-2 refinement on the sup of jet errors
        let r1 = errs[0] / errs[1];
        let r2 = errs[1] / errs[2];
        assert!((3.5..=4.5).contains(&r1), "ratio {r1}");
        assert!((3.5..=4.5).contains(&r2), "ratio {r2}");
    }

    #[test]
    fn jet_error_sup_norm_converges_at_order_two() {
        // includes boundary nodes: one-sided stencils must hold the order
        let exact_dz = |z: f64| (-z).exp() / (1.0 - (-2.0 * z).exp()).sqrt();
        let mut sups = Vec::new();
        for n in [17usize, 33, 65] {
            let g = GridSpec::square(0.0, 1.0, 1.0, 2.0, n).unwrap();
            let f = ScalarField2D::from_fn(g, |s, z| {
                0.3 * (2.0 * s).sin() - (-z).exp().asin()
            })
            .unwrap();
            let mut sup = 0.0f64;
            for j in 0..n {
                for i in 0..n {
                    let jet = jet_at(&f, i, j).unwrap();
                    let s = g.s_at(i);
                    let z = g.z_at(j);
                    sup = sup.max((jet.du[0] - 0.6 * (2.0 * s).cos()).abs());
                    sup = sup.max((jet.du[1] - exact_dz(z)).abs());
                    sup = sup.max((jet.d2u.ss + 1.2 * (2.0 * s).sin()).abs());
                }
            }
            sups.push(sup);
        }
        let r1 = sups[0] / sups[1];
        let r2 = sups[1] / sups[2];
        assert!((3.5..=4.5).contains(&r1), "sup ratios {sups:?}");
        assert!((3.5..=4.5).contains(&r2), "sup ratios {sups:?}");
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        let g = GridSpec::new(0.0, 1.0, 0.0, 1.0, 2, 5).unwrap();
        let f = ScalarField2D::constant(g, 0.0).unwrap();
        assert!(matches!(jet_at(&f, 0, 0), Err(Error::DegenerateGrid(_))));
    }

    #[test]
    fn interpolated_jets_track_analytic_values() {
        let g = GridSpec::square(0.0, 1.0, 1.0, 2.0, 65).unwrap();
        let f = ScalarField2D::from_fn(g, |s, z| (s + 0.5 * z).sin()).unwrap();
        let jf = JetField::compute(&f).unwrap();
        for &(s, z) in &[(0.137, 1.411), (0.731, 1.911), (0.5, 1.0), (0.993, 1.993)] {
            let jet = jf.interp(s, z).unwrap();
            let c = (s + 0.5 * z).cos();
            let v = (s + 0.5 * z).sin();
            assert!((jet.u - v).abs() < 5e-4);
            assert!((jet.du[0] - c).abs() < 5e-4);
            assert!((jet.du[1] - 0.5 * c).abs() < 5e-4);
            assert!((jet.d2u.ss + v).abs() < 5e-3);
            assert!((jet.d2u.sz + 0.5 * v).abs() < 5e-3);
        }
        assert!(jf.interp(1.5, 1.5).is_err());
    }
}
