//! Product quadrature on the unit sphere: Gauss–Legendre in `cos θ` times a
//! uniform grid in `φ`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_THETA_NODES: usize = 64;
pub const DEFAULT_PHI_NODES: usize = 128;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = ((i as f64 + 0.75) / (n as f64 + 0.5) * PI).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_pair(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        out[n / 2].0 = 0.0;
    }
    out
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// One quadrature node on the sphere. `weight` already includes `sin θ dθ dφ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereNode {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    theta_nodes: Vec<(f64, f64)>,
    phi_count: usize,
}

impl Default for SphereQuadrature {
    fn default() -> Self {
        Self::gauss_product(DEFAULT_THETA_NODES, DEFAULT_PHI_NODES).expect("default quadrature is valid")
    }
}

impl SphereQuadrature {
    /// Weights sum to `4π`.
    pub fn gauss_product(theta_count: usize, phi_count: usize) -> Result<Self> {
        if theta_count == 0 || phi_count == 0 {
            return Err(Error::Domain(format!(
                "quadrature needs at least one node per axis, got {theta_count}x{phi_count}"
            )));
        }
        let theta_nodes = gauss_legendre(theta_count)
            .into_iter()
            .rev()
            .map(|(x, w)| (x.acos(), w))
            .collect();
        Ok(Self {
            theta_nodes,
            phi_count,
        })
    }

    /// Same scheme with twice the nodes on each axis.
    pub fn refined(&self) -> Self {
        Self::gauss_product(2 * self.theta_nodes.len(), 2 * self.phi_count).expect("refinement of a valid rule")
    }

    pub fn theta_nodes(&self) -> &[(f64, f64)] {
        &self.theta_nodes
    }

    pub fn theta_count(&self) -> usize {
        self.theta_nodes.len()
    }

    pub fn phi_count(&self) -> usize {
        self.phi_count
    }

    pub fn len(&self) -> usize {
        self.theta_nodes.len() * self.phi_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes in a fixed order: theta-major, phi-minor.
    pub fn nodes(&self) -> impl Iterator<Item = SphereNode> + '_ {
        let dphi = 2.0 * PI / self.phi_count as f64;
        self.theta_nodes.iter().flat_map(move |&(theta, w)| {
            (0..self.phi_count).map(move |j| SphereNode {
                theta,
                phi: j as f64 * dphi,
                weight: w * dphi,
            })
        })
    }
}
