//! Uniform rectangular grids and scalar field slices.
//!
//! A [`ScalarField2D`] holds samples of one scalar quantity (intensity,
//! phase, residual) on a [`Grid2D`] at a fixed propagation height `z`.
//! Stacks of slices with uniform z spacing are grouped in a [`FieldStack`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::FieldError;

/// Relative tolerance for "uniform Δz" checks in a stack.
const UNIFORM_DZ_REL_TOL: f64 = 1e-12;

/// Uniform rectangular grid of `nx × ny` nodes on `[x_min,x_max] × [y_min,y_max]`.
///
/// Node `(i, j)` sits at `(x_min + i·hx, y_min + j·hy)` with
/// `hx = (x_max − x_min)/(nx − 1)` and `hy` analogous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Grid2D {
    pub fn new(
        nx: usize,
        ny: usize,
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    ) -> Result<Self, FieldError> {
        if nx < 3 || ny < 3 {
            return Err(FieldError::InvalidGrid(format!(
                "need at least 3 nodes per direction, got {nx}x{ny}"
            )));
        }
        if !(x_max > x_min) || !(y_max > y_min) {
            return Err(FieldError::InvalidGrid(format!(
                "degenerate extent [{x_min},{x_max}]x[{y_min},{y_max}]"
            )));
        }
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(FieldError::InvalidGrid("non-finite bounds".into()));
        }
        Ok(Self {
            nx,
            ny,
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// `n × n` grid on the unit square `[0,1]²`.
    pub fn unit_square(n: usize) -> Result<Self, FieldError> {
        Self::new(n, n, 0.0, 1.0, 0.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.hy()
    }

    /// Flat index of node `(i, j)`; row-major with x fastest.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Boundary nodes in canonical (row-major scan) order.
    pub fn boundary_nodes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * (self.nx + self.ny) - 4);
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.is_boundary(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Interior nodes in row-major scan order.
    pub fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny - 1).flat_map(move |j| (1..self.nx - 1).map(move |i| (i, j)))
    }
}

/// Samples of a scalar quantity on a [`Grid2D`] at a fixed slice height `z`.
///
/// Values are stored row-major with x fastest: `values[j·nx + i]`.
/// Fields are immutable after construction; all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: Grid2D,
    z: f64,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(grid: Grid2D, z: f64, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if !z.is_finite() {
            return Err(FieldError::InvalidField("non-finite z".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::InvalidField(format!(
                "non-finite value at flat index {pos}"
            )));
        }
        Ok(Self { grid, z, values })
    }

    /// Sample `f(x, y)` on every node.
    pub fn from_fn(grid: Grid2D, z: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self, FieldError> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self::new(grid, z, values)
    }

    pub fn constant(grid: Grid2D, z: f64, c: f64) -> Result<Self, FieldError> {
        Self::new(grid, z, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.node(i, j)]
    }

    /// New field on the same grid with `f` applied pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, FieldError> {
        Self::new(
            self.grid,
            self.z,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// True when every sample is strictly positive (intensity invariant).
    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn same_grid(&self, other: &ScalarField2D) -> bool {
        self.grid == other.grid
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Write the field in `.fld` text format.
    ///
    /// Header lines `# key=value` carry nx, ny, x_min, x_max, y_min, y_max, z;
    /// then ny lines of nx space-separated values (row j = fixed y, x increasing).
    /// Values use shortest round-trip formatting, so read-back is exact.
    pub fn write_fld(&self, path: impl AsRef<Path>) -> Result<(), FieldError> {
        let mut out = String::new();
        let g = &self.grid;
        writeln!(out, "# nx={}", g.nx).unwrap();
        writeln!(out, "# ny={}", g.ny).unwrap();
        writeln!(out, "# x_min={:e}", g.x_min).unwrap();
        writeln!(out, "# x_max={:e}", g.x_max).unwrap();
        writeln!(out, "# y_min={:e}", g.y_min).unwrap();
        writeln!(out, "# y_max={:e}", g.y_max).unwrap();
        writeln!(out, "# z={:e}", self.z).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{:e}", self.at(i, j)).unwrap();
            }
            out.push('\n');
        }
        fs::write(path.as_ref(), out).map_err(|e| FieldError::Io {
            path: path.as_ref().display().to_string(),
            source: e,
        })
    }

    /// Read a field written by [`ScalarField2D::write_fld`].
    pub fn read_fld(path: impl AsRef<Path>) -> Result<Self, FieldError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| FieldError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let malformed = |msg: String| FieldError::Malformed {
            path: path.display().to_string(),
            reason: msg,
        };

        let mut header: Vec<(String, String)> = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest
                    .split_once('=')
                    .ok_or_else(|| malformed(format!("line {}: header without '='", lineno + 1)))?;
                header.push((key.trim().to_string(), value.trim().to_string()));
            } else {
                let row: Result<Vec<f64>, _> =
                    line.split_whitespace().map(str::parse::<f64>).collect();
                rows.push(row.map_err(|e| malformed(format!("line {}: {e}", lineno + 1)))?);
            }
        }

        let lookup = |key: &str| -> Result<&str, FieldError> {
            header
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| malformed(format!("missing header key '{key}'")))
        };
        let parse_f = |key: &str| -> Result<f64, FieldError> {
            lookup(key)?
                .parse::<f64>()
                .map_err(|e| malformed(format!("header '{key}': {e}")))
        };
        let parse_n = |key: &str| -> Result<usize, FieldError> {
            lookup(key)?
                .parse::<usize>()
                .map_err(|e| malformed(format!("header '{key}': {e}")))
        };

        let nx = parse_n("nx")?;
        let ny = parse_n("ny")?;
        let grid = Grid2D::new(
            nx,
            ny,
            parse_f("x_min")?,
            parse_f("x_max")?,
            parse_f("y_min")?,
            parse_f("y_max")?,
        )?;
        let z = parse_f("z")?;

        if rows.len() != ny {
            return Err(malformed(format!(
                "expected {ny} data rows, got {}",
                rows.len()
            )));
        }
        let mut values = Vec::with_capacity(nx * ny);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != nx {
                return Err(malformed(format!(
                    "row {j}: expected {nx} values, got {}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(grid, z, values)
    }
}

/// Ordered slices of one quantity on a shared grid with uniform z spacing.
#[derive(Debug, Clone)]
pub struct FieldStack {
    slices: Vec<ScalarField2D>,
}

impl FieldStack {
    pub fn new(slices: Vec<ScalarField2D>) -> Result<Self, FieldError> {
        if slices.len() < 2 {
            return Err(FieldError::TooFewSlices {
                got: slices.len(),
                need: 2,
            });
        }
        let grid = *slices[0].grid();
        for s in &slices[1..] {
            if *s.grid() != grid {
                return Err(FieldError::GridMismatch);
            }
        }
        let dz0 = slices[1].z() - slices[0].z();
        if !(dz0 > 0.0) {
            return Err(FieldError::NonUniformZ(
                "z values must be strictly increasing".into(),
            ));
        }
        for w in slices.windows(2) {
            let dz = w[1].z() - w[0].z();
            if !(dz > 0.0) {
                return Err(FieldError::NonUniformZ(
                    "z values must be strictly increasing".into(),
                ));
            }
            if (dz - dz0).abs() > UNIFORM_DZ_REL_TOL * dz0.abs() {
                return Err(FieldError::NonUniformZ(format!(
                    "spacing {dz} differs from {dz0}"
                )));
            }
        }
        Ok(Self { slices })
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn grid(&self) -> &Grid2D {
        self.slices[0].grid()
    }

    pub fn dz(&self) -> f64 {
        self.slices[1].z() - self.slices[0].z()
    }

    pub fn z_first(&self) -> f64 {
        self.slices[0].z()
    }

    pub fn z_last(&self) -> f64 {
        self.slices[self.slices.len() - 1].z()
    }

    pub fn slice(&self, index: usize) -> Result<&ScalarField2D, FieldError> {
        self.slices.get(index).ok_or(FieldError::IndexOutOfRange {
            index,
            len: self.slices.len(),
        })
    }

    pub fn slices(&self) -> &[ScalarField2D] {
        &self.slices
    }

    pub fn zs(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.z()).collect()
    }

    /// Write one `.fld` per slice as `<prefix>NNNN.fld` under `dir`.
    pub fn write_dir(
        &self,
        dir: impl AsRef<Path>,
        prefix: &str,
    ) -> Result<Vec<String>, FieldError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| FieldError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let mut names = Vec::with_capacity(self.slices.len());
        for (n, slice) in self.slices.iter().enumerate() {
            let name = format!("{prefix}{n:04}.fld");
            slice.write_fld(dir.join(&name))?;
            names.push(name);
        }
        Ok(names)
    }

    /// Read back a directory written by [`FieldStack::write_dir`].
    pub fn read_dir(dir: impl AsRef<Path>, prefix: &str) -> Result<Self, FieldError> {
        let dir = dir.as_ref();
        let mut names: Vec<String> = fs::read_dir(dir)
            .map_err(|e| FieldError::Io {
                path: dir.display().to_string(),
                source: e,
            })?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n.starts_with(prefix) && n.ends_with(".fld"))
            .collect();
        names.sort();
        let slices: Result<Vec<_>, _> = names
            .iter()
            .map(|n| ScalarField2D::read_fld(dir.join(n)))
            .collect();
        Self::new(slices?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_rejects_too_few_nodes() {
        assert!(Grid2D::new(2, 5, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(Grid2D::new(5, 2, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(Grid2D::new(3, 3, 0.0, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn grid_rejects_degenerate_extent() {
        assert!(Grid2D::new(5, 5, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Grid2D::new(5, 5, 0.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn node_coordinates_and_indexing() {
        let g = Grid2D::new(5, 4, 0.0, 1.0, -1.0, 2.0).unwrap();
        assert_eq!(g.hx(), 0.25);
        assert_eq!(g.hy(), 1.0);
        assert_eq!(g.x(2), 0.5);
        assert_eq!(g.y(1), 0.0);
        assert_eq!(g.node(0, 0), 0);
        assert_eq!(g.node(1, 0), 1);
        assert_eq!(g.node(0, 1), 5);
        assert_eq!(g.node(4, 3), 19);
    }

    #[test]
    fn boundary_scan_counts() {
        let g = Grid2D::new(5, 4, 0.0, 1.0, 0.0, 1.0).unwrap();
        let b = g.boundary_nodes();
        assert_eq!(b.len(), 2 * (5 + 4) - 4);
        assert_eq!(b[0], (0, 0));
        let interior: Vec<_> = g.interior_nodes().collect();
        assert_eq!(interior.len(), (5 - 2) * (4 - 2));
        assert_eq!(b.len() + interior.len(), g.len());
    }

    #[test]
    fn field_rejects_bad_input() {
        let g = Grid2D::unit_square(3).unwrap();
        assert!(ScalarField2D::new(g, 0.0, vec![0.0; 8]).is_err());
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(ScalarField2D::new(g, 0.0, v).is_err());
    }

    #[test]
    fn stack_checks_spacing_and_grid() {
        let g = Grid2D::unit_square(3).unwrap();
        let mk = |z| ScalarField2D::constant(g, z, 1.0).unwrap();
        assert!(FieldStack::new(vec![mk(0.0), mk(0.5), mk(1.0)]).is_ok());
        assert!(FieldStack::new(vec![mk(0.0), mk(0.5), mk(0.9)]).is_err());
        assert!(FieldStack::new(vec![mk(0.0), mk(0.0)]).is_err());
        let g2 = Grid2D::unit_square(4).unwrap();
        let other = ScalarField2D::constant(g2, 0.5, 1.0).unwrap();
        assert!(FieldStack::new(vec![mk(0.0), other]).is_err());
    }

    #[test]
    fn fld_round_trip_is_exact() {
        let dir = std::env::temp_dir().join("phaselab_fld_roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.fld");
        let g = Grid2D::new(7, 5, -0.25, 1.5, 0.0, 0.125).unwrap();
        let f = ScalarField2D::from_fn(g, 0.375, |x, y| (3.7 * x - 1.9 * y).sin() * 1e-7 + x * y)
            .unwrap();
        f.write_fld(&path).unwrap();
        let back = ScalarField2D::read_fld(&path).unwrap();
        assert_eq!(back.z(), f.z());
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.values(), f.values());
    }

    proptest! {
        #[test]
        fn fld_round_trip_random(values in proptest::collection::vec(-1e6f64..1e6, 9)) {
            let dir = std::env::temp_dir().join("phaselab_fld_prop");
            std::fs::create_dir_all(&dir).unwrap();
            let path = dir.join(format!("p{}.fld", std::process::id()));
            let g = Grid2D::unit_square(3).unwrap();
            let f = ScalarField2D::new(g, 0.25, values).unwrap();
            f.write_fld(&path).unwrap();
            let back = ScalarField2D::read_fld(&path).unwrap();
            prop_assert_eq!(back.values(), f.values());
        }
    }
}
