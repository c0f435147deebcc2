use std::sync::OnceLock;

use super::quadrature::QuadratureRule;

/// Local P2 nodes: vertices 0..3, then midpoints of edges (0,1), (1,2), (2,0).
pub const LOCAL_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Values of the six quadratic Lagrange shape functions.
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Partial derivatives of each shape function with respect to the three
/// barycentric coordinates.
pub fn p2_barycentric_derivatives(l: [f64; 3]) -> [[f64; 3]; 6] {
    [
        [4.0 * l[0] - 1.0, 0.0, 0.0],
        [0.0, 4.0 * l[1] - 1.0, 0.0],
        [0.0, 0.0, 4.0 * l[2] - 1.0],
        [4.0 * l[1], 4.0 * l[0], 0.0],
        [0.0, 4.0 * l[2], 4.0 * l[1]],
        [4.0 * l[2], 0.0, 4.0 * l[0]],
    ]
}

/// Shape values and gradients on the reference triangle `(0,0), (1,0), (0,1)`,
/// where `l = (1 - xi - eta, xi, eta)`.
pub fn p2_basis(l: [f64; 3]) -> ([f64; 6], [[f64; 2]; 6]) {
    let d = p2_barycentric_derivatives(l);
    let grads = d.map(|g| [g[1] - g[0], g[2] - g[0]]);
    (p2_values(l), grads)
}

/// Shape data tabulated at the points of the degree-8 rule.
#[derive(Debug)]
pub struct ReferenceTable {
    pub rule: QuadratureRule,
    pub values: Vec<[f64; 6]>,
    pub derivatives: Vec<[[f64; 3]; 6]>,
}

pub fn reference_table() -> &'static ReferenceTable {
    static TABLE: OnceLock<ReferenceTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rule = QuadratureRule::degree8();
        let values = rule.points.iter().map(|&l| p2_values(l)).collect();
        let derivatives = rule.points.iter().map(|&l| p2_barycentric_derivatives(l)).collect();
        ReferenceTable { rule, values, derivatives }
    })
}
