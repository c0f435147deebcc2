use super::FeError;

/// Symmetric quadrature on a triangle. Weights sum to one; multiply by the
/// cell area to integrate.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Triangle rule exact for polynomials up to `degree`. Only the 16-point
    /// degree-8 rule is provided.
    pub fn triangle(degree: usize) -> Result<Self, FeError> {
        if degree != 8 {
            return Err(FeError::UnsupportedQuadrature(degree));
        }
        Ok(Self::degree8())
    }

    /// Dunavant's 16-point rule of degree 8.
    pub fn degree8() -> Self {
        let mut points = Vec::with_capacity(16);
        let mut weights = Vec::with_capacity(16);
        points.push([1.0 / 3.0; 3]);
        weights.push(0.144_315_607_677_787);
        let orbits3 = [
            (0.095_091_634_267_285, 0.081_414_823_414_554, 0.459_292_588_292_723),
            (0.103_217_370_534_718, 0.658_861_384_496_480, 0.170_569_307_751_760),
            (0.032_458_497_623_198, 0.898_905_543_365_938, 0.050_547_228_317_031),
        ];
        for (w, a, b) in orbits3 {
            for p in [[a, b, b], [b, a, b], [b, b, a]] {
                points.push(p);
                weights.push(w);
            }
        }
        let (w, a, b, c) = (
            0.027_230_314_174_435,
            0.008_394_777_409_958,
            0.263_112_829_634_638,
            0.728_492_392_955_404,
        );
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            points.push(p);
            weights.push(w);
        }
        Self { degree: 8, points, weights }
    }
}

/// Five-point Gauss–Legendre rule on `[0, 1]` (exact to degree 9).
pub fn gauss_legendre_5() -> ([f64; 5], [f64; 5]) {
    let x = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    let w = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    (x.map(|t| 0.5 * (t + 1.0)), w.map(|v| 0.5 * v))
}
