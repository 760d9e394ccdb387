//! Structured rectangular grids and scalar fields on them.
//!
//! Fields are stored row-major with z as the outer index and s as the
//! inner one, matching the CSV on-disk layout. All floats are serialized
//! with 17 significant digits so files round-trip bitwise.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::chart::VerticalPlaneChart;
use crate::error::{Error, Result};

/// Uniform rectangular grid on [s0,s1] x [z0,z1] with `ns` x `nz` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub s0: f64,
    pub s1: f64,
    pub z0: f64,
    pub z1: f64,
    pub ns: usize,
    pub nz: usize,
}

impl GridSpec {
    pub fn new(s0: f64, s1: f64, z0: f64, z1: f64, ns: usize, nz: usize) -> Result<Self> {
        if !(s1 > s0 && z1 > z0) {
            return Err(Error::Input(format!(
                "grid rectangle must have positive extent, got [{s0},{s1}]x[{z0},{z1}]"
            )));
        }
        if ns < 2 || nz < 2 {
            return Err(Error::DegenerateGrid(format!(
                "need at least 2 nodes per axis, got {ns}x{nz}"
            )));
        }
        Ok(GridSpec { s0, s1, z0, z1, ns, nz })
    }

    /// Square node count on both axes.
    pub fn square(s0: f64, s1: f64, z0: f64, z1: f64, n: usize) -> Result<Self> {
        GridSpec::new(s0, s1, z0, z1, n, n)
    }

    /// Reconstructs node counts from spacings; the extents must be integer
    /// multiples of the spacings within 1e-9.
    pub fn from_spacing(s0: f64, s1: f64, z0: f64, z1: f64, h_s: f64, h_z: f64) -> Result<Self> {
        if h_s <= 0.0 || h_z <= 0.0 {
            return Err(Error::Input("spacings must be positive".into()));
        }
        let cells = |a: f64, b: f64, h: f64| -> Result<usize> {
            let m = (b - a) / h;
            let k = m.round();
            if (m - k).abs() > 1e-9 {
                return Err(Error::Input(format!(
                    "extent {b}-{a} is not an integer multiple of spacing {h} (off by {:.3e})",
                    (m - k).abs()
                )));
            }
            Ok(k as usize)
        };
        let ks = cells(s0, s1, h_s)?;
        let kz = cells(z0, z1, h_z)?;
        GridSpec::new(s0, s1, z0, z1, ks + 1, kz + 1)
    }

    pub fn h_s(&self) -> f64 {
        (self.s1 - self.s0) / (self.ns - 1) as f64
    }

    pub fn h_z(&self) -> f64 {
        (self.z1 - self.z0) / (self.nz - 1) as f64
    }

    pub fn h_min(&self) -> f64 {
        self.h_s().min(self.h_z())
    }

    pub fn s_at(&self, i: usize) -> f64 {
        self.s0 + i as f64 * self.h_s()
    }

    pub fn z_at(&self, j: usize) -> f64 {
        self.z0 + j as f64 * self.h_z()
    }

    pub fn len(&self) -> usize {
        self.ns * self.nz
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.ns - 1 || j == self.nz - 1
    }

    /// Refined grid with both spacings halved (node counts 2n-1).
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            ns: 2 * self.ns - 1,
            nz: 2 * self.nz - 1,
            ..*self
        }
    }

    pub fn contains(&self, s: f64, z: f64) -> bool {
        let eps_s = 1e-12 * (1.0 + self.s1.abs().max(self.s0.abs()));
        let eps_z = 1e-12 * (1.0 + self.z1.abs().max(self.z0.abs()));
        s >= self.s0 - eps_s && s <= self.s1 + eps_s && z >= self.z0 - eps_z && z <= self.z1 + eps_z
    }
}

/// Grid function u(s, z); immutable once built except through `set`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: GridSpec,
    values: Vec<f64>, // index j * ns + i
}

impl ScalarField2D {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input(format!(
                "value count {} does not match grid {}x{}",
                values.len(),
                grid.ns,
                grid.nz
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite node value {v}")));
        }
        Ok(ScalarField2D { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.nz {
            for i in 0..grid.ns {
                values.push(f(grid.s_at(i), grid.z_at(j)));
            }
        }
        ScalarField2D::from_values(grid, values)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        ScalarField2D::from_values(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.ns + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.grid.ns + i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Sup-norm of the difference; grids must match.
    pub fn sup_diff(&self, other: &ScalarField2D) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Input("sup_diff requires identical grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Bilinear interpolation of the nodal values at an off-node point.
    pub fn interp(&self, s: f64, z: f64) -> Result<f64> {
        let g = &self.grid;
        if !g.contains(s, z) {
            return Err(Error::Domain(format!("point ({s}, {z}) outside field domain")));
        }
        let (i, j, ws, wz) = cell_weights(g, s, z);
        Ok((1.0 - wz) * ((1.0 - ws) * self.at(i, j) + ws * self.at(i + 1, j))
            + wz * ((1.0 - ws) * self.at(i, j + 1) + ws * self.at(i + 1, j + 1)))
    }

    /// Writes `<path>` as CSV (header `s,z,u`, z outer / s inner) and the
    /// grid sidecar next to it with extension `.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let g = &self.grid;
        let mut csv = String::with_capacity(32 * g.len());
        csv.push_str("s,z,u\n");
        for j in 0..g.nz {
            for i in 0..g.ns {
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    fmt_f64(g.s_at(i)),
                    fmt_f64(g.z_at(j)),
                    fmt_f64(self.at(i, j))
                );
            }
        }
        std::fs::write(path, csv)?;
        let sidecar = format!(
            "{{ \"h_s\":{}, \"h_z\":{}, \"s0\":{}, \"s1\":{}, \"z0\":{}, \"z1\":{} }}\n",
            fmt_f64(g.h_s()),
            fmt_f64(g.h_z()),
            fmt_f64(g.s0),
            fmt_f64(g.s1),
            fmt_f64(g.z0),
            fmt_f64(g.z1)
        );
        std::fs::write(sidecar_path(path), sidecar)?;
        Ok(())
    }

    /// Loads a field written by `save`.
    pub fn load(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Sidecar {
            h_s: f64,
            h_z: f64,
            s0: f64,
            s1: f64,
            z0: f64,
            z1: f64,
        }
        let raw = std::fs::read_to_string(sidecar_path(path))?;
        let sc: Sidecar = serde_json::from_str(&raw)
            .map_err(|e| Error::Input(format!("bad grid sidecar: {e}")))?;
        let grid = GridSpec::from_spacing(sc.s0, sc.s1, sc.z0, sc.z1, sc.h_s, sc.h_z)?;

        let csv = std::fs::read_to_string(path)?;
        let mut lines = csv.lines();
        match lines.next() {
            Some("s,z,u") => {}
            other => {
                return Err(Error::Input(format!("expected header 's,z,u', got {other:?}")));
            }
        }
        let mut values = Vec::with_capacity(grid.len());
        for (ln, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let u = line
                .rsplit(',')
                .next()
                .and_then(|t| t.parse::<f64>().ok())
                .ok_or_else(|| Error::Input(format!("bad CSV row {}: {line:?}", ln + 2)))?;
            values.push(u);
        }
        ScalarField2D::from_values(grid, values)
    }
}

/// A graph patch: the surface { origin + u(s,z) e_n + s e_s + z e_z }.
#[derive(Debug, Clone)]
pub struct GraphPatch {
    pub chart: VerticalPlaneChart,
    pub u: ScalarField2D,
}

impl GraphPatch {
    pub fn new(chart: VerticalPlaneChart, u: ScalarField2D) -> Result<Self> {
        chart.validate()?;
        Ok(GraphPatch { chart, u })
    }

    /// World position of the surface point over node (i, j).
    pub fn embed(&self, i: usize, j: usize) -> [f64; 3] {
        let g = self.u.grid();
        self.chart.embed(self.u.at(i, j), g.s_at(i), g.z_at(j))
    }
}

/// Cell index and normalized weights for bilinear interpolation.
pub(crate) fn cell_weights(g: &GridSpec, s: f64, z: f64) -> (usize, usize, f64, f64) {
    let fi = ((s - g.s0) / g.h_s()).clamp(0.0, (g.ns - 1) as f64);
    let fj = ((z - g.z0) / g.h_z()).clamp(0.0, (g.nz - 1) as f64);
    let i = (fi as usize).min(g.ns - 2);
    let j = (fj as usize).min(g.nz - 2);
    (i, j, fi - i as f64, fj - j as f64)
}

/// 17-significant-digit float formatting used for every file we write.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("json")
}
