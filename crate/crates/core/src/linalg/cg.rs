use super::{LinalgError, SparseSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Stop once the preconditioned residual norm drops below `rtol` times
    /// its initial value.
    pub rtol: f64,
    /// Alternative absolute stopping level for the same norm.
    pub atol: f64,
    /// Iteration limit; `None` means ten times the dimension.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 0.0, max_iter: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Final preconditioned residual norm `sqrt(rᵀ D⁻¹ r)`.
    pub residual: f64,
    pub initial_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Callback receiving every iterate.
pub type Observer<'a> = &'a mut dyn FnMut(&[f64]);

/// Jacobi-preconditioned conjugate gradients, started from the contents of
/// `x`. Calls `observe(x)` after every update when given.
pub fn cg_solve_observed(
    system: &SparseSystem,
    x: &mut [f64],
    options: CgOptions,
    mut observe: Option<Observer<'_>>,
) -> Result<CgStats, LinalgError> {
    let a = &system.matrix;
    let n = a.n();
    if x.len() != n || system.rhs.len() != n {
        return Err(LinalgError::DimensionMismatch);
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { f64::NAN })
        .collect();
    if inv_diag.iter().any(|d| d.is_nan()) {
        return Err(LinalgError::NonPositiveDiagonal);
    }
    let max_iter = options.max_iter.unwrap_or(10 * n.max(1));

    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(&system.rhs) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut rz = dot(&r, &z);
    let initial = rz.max(0.0).sqrt();
    let target = (options.rtol * initial).max(options.atol);
    let mut stats = CgStats { iterations: 0, residual: initial, initial_residual: initial };
    if initial <= target || initial == 0.0 {
        return Ok(stats);
    }
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    while stats.iterations < max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(LinalgError::NotConverged { iterations: stats.iterations, residual: stats.residual });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * inv_diag[i];
        }
        stats.iterations += 1;
        if let Some(f) = observe.as_deref_mut() {
            f(x);
        }
        let rz_new = dot(&r, &z);
        stats.residual = rz_new.max(0.0).sqrt();
        if stats.residual <= target {
            return Ok(stats);
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinalgError::NotConverged { iterations: stats.iterations, residual: stats.residual })
}

pub fn cg_solve(system: &SparseSystem, x: &mut [f64], options: CgOptions) -> Result<CgStats, LinalgError> {
    cg_solve_observed(system, x, options, None)
}
