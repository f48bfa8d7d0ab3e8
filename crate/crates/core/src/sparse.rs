//! Minimal sparse kernel: CSR matrices, conjugate gradients, Jacobi scaling.
//!
//! Sized for the elliptic/parabolic systems assembled here (≲10⁵ unknowns),
//! where an iterative solve finishes in seconds and needs no factorization
//! dependency.

use crate::error::SolverError;

/// Compressed sparse row matrix; column indices sorted and unique per row.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SolverError> {
        if n == 0 {
            return Err(SolverError::InvalidStructure(
                "dimension must be >= 1".into(),
            ));
        }
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(SolverError::InvalidStructure(format!(
                    "entry ({r}, {c}) outside {n}x{n}"
                )));
            }
            if !v.is_finite() {
                return Err(SolverError::NonFiniteEntry);
            }
            per_row[r].push((c, v));
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for row in &mut per_row {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Result<Self, SolverError> {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// y = A x.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SolverError> {
        if x.len() != self.n {
            return Err(SolverError::DimensionMismatch {
                n: self.n,
                len: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *out = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (r, out) in d.iter_mut().enumerate() {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                if self.col_indices[k] == r {
                    *out = self.values[k];
                }
            }
        }
        d
    }

    /// Max-norm of A − Aᵀ; zero for the symmetric assemblies used here.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let c = self.col_indices[k];
                let v = self.values[k];
                let vt = self.get(c, r);
                worst = worst.max((v - vt).abs());
            }
        }
        worst
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_offsets[r];
        let hi = self.row_offsets[r + 1];
        match self.col_indices[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Debug probe: xᵀAx > 0 for a few deterministic pseudo-random vectors.
    #[cfg(debug_assertions)]
    fn probe_spd(&self) {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..3 {
            let x: Vec<f64> = (0..self.n).map(|_| next()).collect();
            let ax = self.spmv(&x).expect("dimension fixed");
            let quad: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
            debug_assert!(quad > 0.0, "matrix failed SPD probe: x'Ax = {quad}");
        }
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CgReport {
    pub iterations: usize,
    pub final_residual_rel: f64,
    pub converged: bool,
    /// Set when the iteration found a direction of non-positive curvature,
    /// meaning the matrix is not positive definite.
    pub breakdown: bool,
}

/// Jacobi (diagonal) preconditioner; requires strictly positive diagonal.
#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(a: &SparseMatrix) -> Result<Self, SolverError> {
        let d = a.diagonal();
        let mut inv_diag = Vec::with_capacity(d.len());
        for (row, &v) in d.iter().enumerate() {
            if !(v > 0.0) {
                return Err(SolverError::ZeroDiagonal { row });
            }
            inv_diag.push(1.0 / v);
        }
        Ok(Self { inv_diag })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, &r), &d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

/// Conjugate gradients for SPD systems.
///
/// Stops when the true relative residual ‖Ax−b‖/‖b‖ drops below `tol_rel`;
/// a zero right-hand side returns the zero vector immediately. When the
/// iteration budget runs out the best iterate is returned with
/// `converged = false` in the report.
pub fn conjugate_gradient(
    a: &SparseMatrix,
    b: &[f64],
    tol_rel: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgReport), SolverError> {
    preconditioned_conjugate_gradient(a, None, b, tol_rel, max_iter)
}

/// Conjugate gradients with an optional Jacobi preconditioner.
pub fn preconditioned_conjugate_gradient(
    a: &SparseMatrix,
    precond: Option<&JacobiPreconditioner>,
    b: &[f64],
    tol_rel: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgReport), SolverError> {
    let n = a.n();
    if b.len() != n {
        return Err(SolverError::DimensionMismatch { n, len: b.len() });
    }
    #[cfg(debug_assertions)]
    a.probe_spd();

    let norm_b = norm(b);
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; n],
            CgReport {
                iterations: 0,
                final_residual_rel: 0.0,
                converged: true,
                breakdown: false,
            },
        ));
    }

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    match precond {
        Some(m) => m.apply(&r, &mut z),
        None => z.copy_from_slice(&r),
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    // In debug builds track the CG objective ½xᵀAx − bᵀx, which decreases
    // monotonically together with the A-norm of the error.
    #[cfg(debug_assertions)]
    let mut objective_prev = f64::INFINITY;

    let mut residual_rel = 1.0;
    for iteration in 1..=max_iter {
        a.spmv_into(&p, &mut ap);
        let p_ap = dot(&p, &ap);
        if !p_ap.is_finite() {
            return Err(SolverError::NanDetected { iteration });
        }
        if p_ap <= 0.0 {
            // Curvature lost: either the matrix is not SPD or roundoff has
            // degenerated the search direction. Report the current iterate.
            return Ok((
                x,
                CgReport {
                    iterations: iteration - 1,
                    final_residual_rel: residual_rel,
                    converged: false,
                    breakdown: true,
                },
            ));
        }
        let alpha = rz / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual_rel = norm(&r) / norm_b;
        if !residual_rel.is_finite() {
            return Err(SolverError::NanDetected { iteration });
        }

        #[cfg(debug_assertions)]
        {
            let ax = a.spmv(&x).expect("dimension fixed");
            let objective = 0.5 * dot(&x, &ax) - dot(b, &x);
            debug_assert!(
                objective <= objective_prev + 1e-9 * (1.0 + objective_prev.abs()),
                "CG objective increased: {objective_prev} -> {objective}"
            );
            objective_prev = objective;
        }

        if residual_rel <= tol_rel {
            // Confirm against the true residual before declaring victory.
            a.spmv_into(&x, &mut ap);
            let mut true_res = 0.0;
            for i in 0..n {
                let d = ap[i] - b[i];
                true_res += d * d;
            }
            let true_rel = true_res.sqrt() / norm_b;
            if true_rel <= tol_rel {
                return Ok((
                    x,
                    CgReport {
                        iterations: iteration,
                        final_residual_rel: true_rel,
                        converged: true,
                        breakdown: false,
                    },
                ));
            }
            // Recurrence residual drifted from the true one; keep iterating
            // on the recomputed residual.
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            residual_rel = true_rel;
        }

        match precond {
            Some(m) => m.apply(&r, &mut z),
            None => z.copy_from_slice(&r),
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    Ok((
        x,
        CgReport {
            iterations: max_iter,
            final_residual_rel: residual_rel,
            converged: false,
            breakdown: false,
        },
    ))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
