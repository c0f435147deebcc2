use std::f64::consts::PI;
use std::sync::Arc;

use crate::fe::{FeFunction, FeSpace};
use crate::mesh::Point;

use super::GpeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialForm {
    /// `½(γ₁²(x−x₀)² + γ₂²(y−y₀)²)`.
    Harmonic,
    /// Harmonic part plus `κ[sin²(q(x−x₀)) + sin²(q(y−y₀))]`.
    HarmonicPlusLattice,
    /// Same formula as `Harmonic`, named for the coupled two-component traps.
    OffCentered,
}

/// External trapping potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub form: PotentialForm,
    pub gamma: [f64; 2],
    pub kappa: f64,
    pub lattice_wavenumber: f64,
    pub center: Point,
}

impl PotentialSpec {
    pub fn harmonic(g1: f64, g2: f64) -> Self {
        Self {
            form: PotentialForm::Harmonic,
            gamma: [g1, g2],
            kappa: 0.0,
            lattice_wavenumber: PI / 4.0,
            center: Point::new(0.0, 0.0),
        }
    }

    /// `½(x²+y²) + κ[sin²(πx/4) + sin²(πy/4)]`.
    pub fn lattice(kappa: f64) -> Self {
        Self { form: PotentialForm::HarmonicPlusLattice, kappa, ..Self::harmonic(1.0, 1.0) }
    }

    pub fn off_centered(omega: [f64; 2], center: Point) -> Self {
        Self { form: PotentialForm::OffCentered, gamma: omega, center, ..Self::harmonic(1.0, 1.0) }
    }

    pub fn validate(&self) -> Result<(), GpeError> {
        if !(self.gamma[0] > 0.0 && self.gamma[1] > 0.0) {
            return Err(GpeError::InvalidParameter("gamma must be positive".into()));
        }
        if !(self.kappa >= 0.0) {
            return Err(GpeError::InvalidParameter("kappa must be non-negative".into()));
        }
        Ok(())
    }

    pub fn eval(&self, p: Point) -> f64 {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let harmonic = 0.5 * ((self.gamma[0] * dx).powi(2) + (self.gamma[1] * dy).powi(2));
        match self.form {
            PotentialForm::Harmonic | PotentialForm::OffCentered => harmonic,
            PotentialForm::HarmonicPlusLattice => {
                let q = self.lattice_wavenumber;
                harmonic + self.kappa * ((q * dx).sin().powi(2) + (q * dy).sin().powi(2))
            }
        }
    }
}

/// Thomas–Fermi chemical potential in `d = gamma.len()` dimensions.
pub fn tf_chemical_potential(beta: f64, gamma: &[f64]) -> Result<f64, GpeError> {
    if !(beta > 0.0) {
        return Err(GpeError::ThomasFermiInapplicable(beta));
    }
    let g: f64 = gamma.iter().product();
    match gamma.len() {
        1 => Ok(0.5 * (3.0 * beta * g).powf(2.0 / 3.0)),
        2 => Ok(0.5 * (4.0 * beta * g).sqrt()),
        3 => Ok(0.5 * (15.0 * beta * g / (4.0 * PI)).powf(2.0 / 3.0)),
        d => Err(GpeError::InvalidParameter(format!("Thomas-Fermi formula needs 1 to 3 dimensions, got {d}"))),
    }
}

/// Mass-matrix norm squared of a function, `∫ u²`.
pub fn mass(u: &FeFunction) -> f64 {
    u.l2_norm_squared()
}

/// Rescales `u` so that `∫ u² = target`.
pub fn normalize(u: &mut FeFunction, target: f64) -> Result<(), GpeError> {
    let m = mass(u);
    if !(m > 0.0) || !m.is_finite() {
        return Err(GpeError::ZeroState);
    }
    u.scale((target / m).sqrt());
    Ok(())
}

/// `sqrt(max(μ_TF − V, 0)/β)` at the nodes, zero on the boundary, normalized
/// to unit mass.
pub fn tf_initial_guess(space: Arc<FeSpace>, potential: &PotentialSpec, beta: f64) -> Result<FeFunction, GpeError> {
    let mu = tf_chemical_potential(beta, &potential.gamma)?;
    let mut u = FeFunction::interpolate_dirichlet(space, |p| ((mu - potential.eval(p)).max(0.0) / beta).sqrt());
    normalize(&mut u, 1.0)?;
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    X,
    Y,
}

/// `√2 x π^{-1/2} e^{−(x²+y²)/2}` (or the `y` version), normalized.
pub fn excited_initial_guess(space: Arc<FeSpace>, direction: Direction) -> Result<FeFunction, GpeError> {
    let c = 2f64.sqrt() / PI.sqrt();
    let mut u = FeFunction::interpolate_dirichlet(space, |p| {
        let s = match direction {
            Direction::X => p.x,
            Direction::Y => p.y,
        };
        c * s * (-(p.x * p.x + p.y * p.y) / 2.0).exp()
    });
    normalize(&mut u, 1.0)?;
    Ok(u)
}

/// Ground state of the harmonic trap `½(ω₁²(x−x₀)² + ω₂²(y−y₀)²)` without
/// interaction, normalized to `∫ u² = n_particles`.
pub fn gaussian_guess(space: Arc<FeSpace>, omega: [f64; 2], center: Point, n_particles: f64) -> Result<FeFunction, GpeError> {
    let mut u = FeFunction::interpolate_dirichlet(space, |p| {
        let dx = p.x - center.x;
        let dy = p.y - center.y;
        (-(omega[0] * dx * dx + omega[1] * dy * dy) / 2.0).exp()
    });
    normalize(&mut u, n_particles)?;
    Ok(u)
}
