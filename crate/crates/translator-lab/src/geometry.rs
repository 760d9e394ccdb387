//! Pointwise differential geometry of graphs over vertical planes.
//!
//! Everything here is a pure function of a second-order jet. The chart
//! frame is (e_n, e_s, e_z): graphs displace along e_n and the vertical
//! direction e_z is distinguished by the translator equation.

use crate::chart::Vec3;
use crate::error::{Error, Result};

/// Symmetric 2x2 matrix over the (s, z) tangent indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat2 {
    pub ss: f64,
    pub sz: f64,
    pub zz: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 { ss: 0.0, sz: 0.0, zz: 0.0 };
    pub const IDENTITY: SymMat2 = SymMat2 { ss: 1.0, sz: 0.0, zz: 1.0 };

    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.ss + self.zz;
        let det = self.ss * self.zz - self.sz * self.sz;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 - disc, tr / 2.0 + disc)
    }

    pub fn frobenius(&self) -> f64 {
        (self.ss * self.ss + 2.0 * self.sz * self.sz + self.zz * self.zz).sqrt()
    }

    /// Contraction a : b = a^{ij} b_{ij}.
    pub fn contract(&self, o: &SymMat2) -> f64 {
        self.ss * o.ss + 2.0 * self.sz * o.sz + self.zz * o.zz
    }
}

/// Second-order jet of a graph function at a point: value, gradient and
/// Hessian in chart coordinates. The Hessian is symmetric by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub u: f64,
    /// (D_s u, D_z u)
    pub du: [f64; 2],
    pub d2u: SymMat2,
}

impl Jet2 {
    pub fn new(u: f64, du: [f64; 2], d2u: SymMat2) -> Self {
        Jet2 { u, du, d2u }
    }

    pub fn grad_sq(&self) -> f64 {
        self.du[0] * self.du[0] + self.du[1] * self.du[1]
    }
}

/// Upward unit normal nu = (e_n - Du) / sqrt(1 + |Du|^2) in the chart frame.
pub fn unit_normal(j: &Jet2) -> Vec3 {
    let w = area_element(j);
    Vec3::new(1.0 / w, -j.du[0] / w, -j.du[1] / w)
}

/// Coefficient matrix a^{ij} = delta^{ij} - D^i u D^j u / (1 + |Du|^2).
/// Eigenvalues are exactly {1, 1/(1+|Du|^2)}.
pub fn coeff_matrix(j: &Jet2) -> SymMat2 {
    let w2 = 1.0 + j.grad_sq();
    SymMat2 {
        ss: 1.0 - j.du[0] * j.du[0] / w2,
        sz: -j.du[0] * j.du[1] / w2,
        zz: 1.0 - j.du[1] * j.du[1] / w2,
    }
}

/// Scalar mean curvature <H, nu> = a^{ij} D_i D_j u / sqrt(1 + |Du|^2).
pub fn mean_curvature(j: &Jet2) -> f64 {
    coeff_matrix(j).contract(&j.d2u) / area_element(j)
}

/// Graph equation residual a^{ij} D_i D_j u + D_z u - forcing; zero for
/// exact translators (forcing 0) and for manufactured problems.
pub fn translator_residual(j: &Jet2, forcing: f64) -> f64 {
    coeff_matrix(j).contract(&j.d2u) + j.du[1] - forcing
}

/// Tangential projection v - <v, nu> nu. Requires |nu| = 1 within 1e-12.
pub fn tangential_part(v: Vec3, nu: Vec3) -> Result<Vec3> {
    if (nu.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "tangential_part requires a unit normal, |nu| = {}",
            nu.norm()
        )));
    }
    Ok(v.sub(nu.scale(v.dot(nu))))
}

/// Graph area element sqrt(1 + |Du|^2) >= 1.
pub fn area_element(j: &Jet2) -> f64 {
    (1.0 + j.grad_sq()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jet(du: [f64; 2]) -> Jet2 {
        Jet2::new(0.0, du, SymMat2::ZERO)
    }

    #[test]
    fn normal_of_flat_graph_is_e_n() {
        let nu = unit_normal(&jet([0.0, 0.0]));
        assert_eq!((nu.n, nu.s, nu.z), (1.0, 0.0, 0.0));
    }

    #[test]
    fn normal_matches_direct_substitution() {
        // Du = (0, 1/sqrt(3)) -> (sqrt(3)/2, 0, -1/2)
        let nu = unit_normal(&jet([0.0, 1.0 / 3.0f64.sqrt()]));
        assert!((nu.n - 3.0f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(nu.s.abs() < 1e-15);
        assert!((nu.z + 0.5).abs() < 1e-15);

        // Du = (3, 4) -> (1, -3, -4)/sqrt(26)
        let nu = unit_normal(&jet([3.0, 4.0]));
        let r = 26.0f64.sqrt();
        assert!((nu.n - 1.0 / r).abs() < 1e-15);
        assert!((nu.s + 3.0 / r).abs() < 1e-15);
        assert!((nu.z + 4.0 / r).abs() < 1e-15);
    }

    #[test]
    fn coeff_matrix_examples() {
        assert_eq!(coeff_matrix(&jet([0.0, 0.0])), SymMat2::IDENTITY);
        let a = coeff_matrix(&jet([0.0, 1.0 / 3.0f64.sqrt()]));
        assert!((a.ss - 1.0).abs() < 1e-15);
        assert!(a.sz.abs() < 1e-15);
        assert!((a.zz - 0.75).abs() < 1e-15);
    }

    #[test]
    fn unit_gradient_gives_eigenvalue_half() {
        for theta in [0.0f64, 0.4, 1.1, 2.9, 4.4] {
            let a = coeff_matrix(&jet([theta.cos(), theta.sin()]));
            let (lo, hi) = a.eigenvalues();
            assert!((lo - 0.5).abs() < 1e-14);
            assert!((hi - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn residual_examples() {
        // affine graphs solve the equation
        for &(a, c) in &[(0.0, 0.0), (2.0, 1.0), (-3.5, 0.25)] {
            let j = Jet2::new(a * 0.7 + c, [a, 0.0], SymMat2::ZERO);
            assert_eq!(translator_residual(&j, 0.0), 0.0);
        }
        // u = z has residual 1
        let j = Jet2::new(0.3, [0.0, 1.0], SymMat2::ZERO);
        assert_eq!(translator_residual(&j, 1.0), 0.0);
        assert_eq!(translator_residual(&j, 0.0), 1.0);
    }

    #[test]
    fn mean_curvature_examples() {
        assert_eq!(mean_curvature(&jet([0.0, 0.0])), 0.0);
        // paraboloid u = (s^2+z^2)/2 at the origin: H = Laplacian = 2
        let j = Jet2::new(0.0, [0.0, 0.0], SymMat2::IDENTITY);
        assert_eq!(mean_curvature(&j), 2.0);
        // grim profile at z = ln 2 (A = 1): |H| = 1/2
        let fp = 1.0 / 3.0f64.sqrt();
        let fpp = -0.5 * (0.75f64).powf(-1.5);
        let j = Jet2::new(0.0, [0.0, fp], SymMat2 { ss: 0.0, sz: 0.0, zz: fpp });
        assert!((mean_curvature(&j).abs() - 0.5).abs() < 1e-14);
        // and H = -D_z u / W for translator jets
        assert!((mean_curvature(&j) + fp / area_element(&j)).abs() < 1e-14);
    }

    #[test]
    fn tangential_part_examples() {
        let nu = Vec3::new(3.0f64.sqrt() / 2.0, 0.0, -0.5);
        let t = tangential_part(Vec3::E_Z, nu).unwrap();
        assert!((t.n - 3.0f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((t.z - 0.75).abs() < 1e-15);
        // v = nu -> 0
        let z = tangential_part(nu, nu).unwrap();
        assert!(z.norm() < 1e-15);
        // v orthogonal to nu unchanged
        let v = Vec3::new(0.0, 2.0, 0.0);
        let t = tangential_part(v, nu).unwrap();
        assert!(t.sub(v).norm() < 1e-15);
        // non-unit normal rejected
        assert!(matches!(
            tangential_part(Vec3::E_Z, Vec3::new(0.0, 0.0, 1.5)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn area_element_examples() {
        assert_eq!(area_element(&jet([0.0, 0.0])), 1.0);
        assert!((area_element(&jet([3.0, 4.0])) - 26.0f64.sqrt()).abs() < 1e-15);
        assert!((area_element(&jet([0.0, 1.0 / 3.0f64.sqrt()])) - 2.0 / 3.0f64.sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn normal_has_unit_length(p in -50.0f64..50.0, q in -50.0f64..50.0) {
            let nu = unit_normal(&jet([p, q]));
            prop_assert!((nu.norm() - 1.0).abs() < 1e-14);
            prop_assert!(nu.n > 0.0);
        }

        #[test]
        fn coeff_matrix_spd_with_small_frobenius(p in -50.0f64..50.0, q in -50.0f64..50.0) {
            let a = coeff_matrix(&jet([p, q]));
            let (lo, hi) = a.eigenvalues();
            prop_assert!(lo > 0.0);
            prop_assert!(hi <= 1.0 + 1e-12);
            prop_assert!(a.frobenius() <= 2.0f64.sqrt() + 1e-12);
            let w2 = 1.0 + p * p + q * q;
            prop_assert!((lo - 1.0 / w2).abs() < 1e-16_f64.max(1e-12 / w2));
        }

        #[test]
        fn residual_links_curvature_and_vertical_term(
            p in -5.0f64..5.0, q in -5.0f64..5.0,
            ss in -5.0f64..5.0, sz in -5.0f64..5.0, zz in -5.0f64..5.0,
        ) {
            let j = Jet2::new(0.0, [p, q], SymMat2 { ss, sz, zz });
            let lhs = mean_curvature(&j) * area_element(&j) + j.du[1];
            prop_assert!((translator_residual(&j, 0.0) - lhs).abs() < 1e-12);
        }

        #[test]
        fn tangential_part_is_orthogonal(
            vn in -5.0f64..5.0, vs in -5.0f64..5.0, vz in -5.0f64..5.0,
            p in -5.0f64..5.0, q in -5.0f64..5.0,
        ) {
            let nu = unit_normal(&jet([p, q]));
            let t = tangential_part(Vec3::new(vn, vs, vz), nu).unwrap();
            prop_assert!(t.dot(nu).abs() < 1e-12);
        }
    }
}
