//! Vertical-plane charts and ambient vectors.
//!
//! A chart identifies a vertical plane isometrically with the (s, z)
//! parameter plane: `s` runs horizontally inside the plane, `z` is the
//! global vertical. Graphs over the plane displace along the unit normal
//! `e_n`, so the frame (e_n, e_s, e_z) plays the role of the ambient
//! coordinate axes with the vertical direction distinguished.

use crate::error::{Error, Result};

/// Ambient 3-vector in the chart frame: components along (e_n, e_s, e_z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub n: f64,
    pub s: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(n: f64, s: f64, z: f64) -> Self {
        Vec3 { n, s, z }
    }

    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    /// Graph direction (the plane's unit normal).
    pub const E_N: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    /// Horizontal in-plane direction.
    pub const E_S: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    /// Global vertical.
    pub const E_Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub fn dot(self, o: Vec3) -> f64 {
        self.n * o.n + self.s * o.s + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.s * o.z - self.z * o.s,
            self.z * o.n - self.n * o.z,
            self.n * o.s - self.s * o.n,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, c: f64) -> Vec3 {
        Vec3::new(c * self.n, c * self.s, c * self.z)
    }

    pub fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.n + o.n, self.s + o.s, self.z + o.z)
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.n - o.n, self.s - o.s, self.z - o.z)
    }

    pub fn normalized(self) -> Result<Vec3> {
        let m = self.norm();
        if m == 0.0 || !m.is_finite() {
            return Err(Error::Input("cannot normalize zero/non-finite vector".into()));
        }
        Ok(self.scale(1.0 / m))
    }
}

/// Isometric identification of a vertical plane with the (s, z) chart.
///
/// Invariants: {e_n, e_s, e_z} is a right-handed orthonormal frame and
/// e_z is the global vertical exactly.
#[derive(Debug, Clone, Copy)]
pub struct VerticalPlaneChart {
    /// World coordinates (x, y, z) of the chart origin.
    pub origin: [f64; 3],
    /// World coordinates of e_s (unit, horizontal).
    pub e_s: [f64; 3],
    /// World coordinates of e_n (unit, horizontal, normal to the plane).
    pub e_n: [f64; 3],
}

impl VerticalPlaneChart {
    /// The plane {x = 0} with e_n = x-axis, e_s = y-axis, e_z = z-axis.
    pub fn standard() -> Self {
        VerticalPlaneChart {
            origin: [0.0, 0.0, 0.0],
            e_s: [0.0, 1.0, 0.0],
            e_n: [1.0, 0.0, 0.0],
        }
    }

    /// Chart for the vertical plane through `origin` whose in-plane
    /// horizontal direction makes angle `theta` with the world y-axis.
    /// Constructing from a rotation about the vertical keeps e_z exact.
    pub fn rotated(origin: [f64; 3], theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        VerticalPlaneChart {
            origin,
            e_s: [-sin, cos, 0.0],
            e_n: [cos, sin, 0.0],
        }
    }

    /// World vertical, identical for every chart.
    pub fn e_z(&self) -> [f64; 3] {
        [0.0, 0.0, 1.0]
    }

    /// Validates the frame invariants: unit lengths and orthogonality to
    /// 1e-12, right-handedness, horizontal e_s and e_n.
    pub fn validate(&self) -> Result<()> {
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let tol = 1e-12;
        if (dot(self.e_s, self.e_s) - 1.0).abs() > tol
            || (dot(self.e_n, self.e_n) - 1.0).abs() > tol
        {
            return Err(Error::Input("chart frame vectors must be unit length".into()));
        }
        if dot(self.e_s, self.e_n).abs() > tol {
            return Err(Error::Input("chart frame vectors must be orthogonal".into()));
        }
        if self.e_s[2] != 0.0 || self.e_n[2] != 0.0 {
            return Err(Error::Input("e_s and e_n must be horizontal (e_z is exactly vertical)".into()));
        }
        // right-handed: e_n x e_s = e_z
        let cross_z = self.e_n[0] * self.e_s[1] - self.e_n[1] * self.e_s[0];
        if (cross_z - 1.0).abs() > tol {
            return Err(Error::Input("frame must be right-handed: e_n x e_s = e_z".into()));
        }
        Ok(())
    }

    /// World position of the graph point over chart coordinates (s, z)
    /// with graph height u.
    pub fn embed(&self, u: f64, s: f64, z: f64) -> [f64; 3] {
        [
            self.origin[0] + u * self.e_n[0] + s * self.e_s[0],
            self.origin[1] + u * self.e_n[1] + s * self.e_s[1],
            self.origin[2] + z,
        ]
    }
}
