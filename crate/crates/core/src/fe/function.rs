use std::io::{self, Write};
use std::sync::Arc;

use crate::mesh::{MeshError, Point};

use super::basis::{p2_barycentric_derivatives, p2_values, reference_table};
use super::{FeError, FeSpace};

/// Coefficient vector on a P2 space. Coefficients are nodal values.
#[derive(Debug, Clone)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self, FeError> {
        if coeffs.len() != space.n_dofs() {
            return Err(FeError::LengthMismatch { expected: space.n_dofs(), got: coeffs.len() });
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: Arc<FeSpace>) -> Self {
        let n = space.n_dofs();
        Self { space, coeffs: vec![0.0; n] }
    }

    /// Nodal interpolant of `f`, boundary nodes included.
    pub fn interpolate(space: Arc<FeSpace>, f: impl Fn(Point) -> f64) -> Self {
        let coeffs = space.node_coords().iter().map(|&p| f(p)).collect();
        Self { space, coeffs }
    }

    /// Nodal interpolant of `f` with boundary coefficients set to zero.
    pub fn interpolate_dirichlet(space: Arc<FeSpace>, f: impl Fn(Point) -> f64) -> Self {
        let mut u = Self::interpolate(space, f);
        u.zero_boundary();
        u
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn zero_boundary(&mut self) {
        for &d in self.space.boundary_dofs() {
            self.coeffs[d] = 0.0;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    pub fn cell_coeffs(&self, cell: usize) -> [f64; 6] {
        self.space.cell_dofs()[cell].map(|d| self.coeffs[d])
    }

    /// Value and gradient at barycentric point `l` of `cell`.
    pub fn eval_in_cell(&self, cell: usize, l: [f64; 3]) -> (f64, Point) {
        let u = self.cell_coeffs(cell);
        let phi = p2_values(l);
        let grads = self.space.cell(cell).shape_gradients(&p2_barycentric_derivatives(l));
        let mut v = 0.0;
        let mut g = Point::new(0.0, 0.0);
        for a in 0..6 {
            v += u[a] * phi[a];
            g.x += u[a] * grads[a].x;
            g.y += u[a] * grads[a].y;
        }
        (v, g)
    }

    pub fn evaluate(&self, p: Point) -> Result<f64, MeshError> {
        let (cell, l) = self.space.locate(p)?;
        let u = self.cell_coeffs(cell);
        Ok(p2_values(l).iter().zip(&u).map(|(a, b)| a * b).sum())
    }

    pub fn evaluate_with_gradient(&self, p: Point) -> Result<(f64, Point), MeshError> {
        let (cell, l) = self.space.locate(p)?;
        Ok(self.eval_in_cell(cell, l))
    }

    /// ∫ u² by quadrature (exact for P2).
    pub fn l2_norm_squared(&self) -> f64 {
        let table = reference_table();
        let mut total = 0.0;
        for (c, cell) in self.space.cells().iter().enumerate() {
            let u = self.cell_coeffs(c);
            let mut local = 0.0;
            for (phi, w) in table.values.iter().zip(&table.rule.weights) {
                let v: f64 = phi.iter().zip(&u).map(|(a, b)| a * b).sum();
                local += w * v * v;
            }
            total += local * cell.area;
        }
        total
    }

    /// Nodal interpolation onto `target`, with boundary coefficients forced
    /// to zero. Both spaces must be built on forests with the same roots.
    pub fn transfer(&self, target: &Arc<FeSpace>) -> Result<FeFunction, FeError> {
        if Arc::ptr_eq(target, &self.space) {
            return Ok(self.clone());
        }
        if target.forest().signature() != self.space.forest().signature() {
            return Err(FeError::Mesh(MeshError::IncompatibleForests));
        }
        let mut coeffs = Vec::with_capacity(target.n_dofs());
        for (d, &p) in target.node_coords().iter().enumerate() {
            coeffs.push(if target.is_boundary(d) { 0.0 } else { self.evaluate(p)? });
        }
        Ok(FeFunction { space: Arc::clone(target), coeffs })
    }

    /// Writes `x,y,value` rows sampled on an `nx` by `ny` grid spanning the
    /// bounding box of the mesh.
    pub fn write_probe_csv<W: Write>(&self, mut out: W, nx: usize, ny: usize) -> io::Result<()> {
        let nodes = self.space.node_coords();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in nodes {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        writeln!(out, "x,y,value")?;
        let step = |a: f64, b: f64, n: usize, i: usize| if n > 1 { a + (b - a) * i as f64 / (n - 1) as f64 } else { 0.5 * (a + b) };
        for j in 0..ny {
            for i in 0..nx {
                let p = Point::new(step(x0, x1, nx, i), step(y0, y1, ny, j));
                let v = self.evaluate(p).unwrap_or(0.0);
                writeln!(out, "{:.14e},{:.14e},{:.14e}", p.x, p.y, v)?;
            }
        }
        Ok(())
    }
}
