use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::netmodel::Network;

/// Cramer-Rao bound for Gaussian ranging with exactly known anchors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crlb {
    /// `trace(J⁻¹)` over the unknown coordinates.
    pub trace: f64,
    pub nodes: usize,
    pub unknown_nodes: usize,
}

impl Crlb {
    /// Bound on RMSE averaged over every node (anchors contribute zero error).
    pub fn per_node(&self) -> f64 {
        (self.trace / self.nodes as f64).sqrt()
    }

    /// Bound on RMSE averaged over non-anchor nodes only.
    pub fn per_unknown(&self) -> f64 {
        (self.trace / self.unknown_nodes.max(1) as f64).sqrt()
    }

    /// Fisher information for the network's true geometry.
    ///
    /// Each measured pair adds `uuᵀ/σ²` (`u` the unit vector between the two
    /// nodes) to both diagonal blocks and `−uuᵀ/σ²` off the diagonal;
    /// anchor coordinates are not unknowns.
    pub fn compute(net: &Network, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Config(format!("CRLB needs sigma > 0, got {sigma}")));
        }
        let dim = net.dim();
        let mut slot = vec![usize::MAX; net.len()];
        let mut unknown = 0;
        for i in 0..net.len() {
            if !net.is_anchor(i) {
                slot[i] = unknown;
                unknown += 1;
            }
        }
        let size = unknown * dim;
        let mut fim = DMatrix::<f64>::zeros(size, size);
        let w = 1.0 / (sigma * sigma);
        for (i, j, _) in net.edges() {
            let d = net.position(i) - net.position(j);
            let norm = d.norm();
            if norm == 0.0 {
                continue;
            }
            let u = d / norm;
            for a in 0..dim {
                for b in 0..dim {
                    let v = w * u[a] * u[b];
                    if slot[i] != usize::MAX {
                        fim[(slot[i] * dim + a, slot[i] * dim + b)] += v;
                    }
                    if slot[j] != usize::MAX {
                        fim[(slot[j] * dim + a, slot[j] * dim + b)] += v;
                    }
                    if slot[i] != usize::MAX && slot[j] != usize::MAX {
                        fim[(slot[i] * dim + a, slot[j] * dim + b)] -= v;
                        fim[(slot[j] * dim + a, slot[i] * dim + b)] -= v;
                    }
                }
            }
        }
        if size == 0 {
            return Ok(Self { trace: 0.0, nodes: net.len(), unknown_nodes: 0 });
        }
        let top = fim.diagonal().max();
        if let Some(ch) = fim.clone().cholesky() {
            let l = ch.l();
            if l.diagonal().iter().all(|&p| p * p > top * 1e-12) {
                let inv = l
                    .solve_lower_triangular(&DMatrix::identity(size, size))
                    .ok_or_else(|| Error::NonFinite("CRLB factor".into()))?;
                return Ok(Self {
                    trace: inv.norm_squared(),
                    nodes: net.len(),
                    unknown_nodes: unknown,
                });
            }
        }
        let eig = SymmetricEigen::new(fim);
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let floor = top * 1e-12;
        let deficiency = eig.eigenvalues.iter().filter(|&&l| l <= floor).count();
        if deficiency > 0 {
            return Err(Error::NotLocalizable { deficiency });
        }
        let trace = eig.eigenvalues.iter().map(|l| 1.0 / l).sum();
        Ok(Self { trace, nodes: net.len(), unknown_nodes: unknown })
    }
}

/// CRLB on the all-node RMSE.
pub fn crlb_rmse(net: &Network, sigma: f64) -> Result<f64> {
    Crlb::compute(net, sigma).map(|c| c.per_node())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::Point;

    fn three_nodes() -> Network {
        let pts = vec![Point::new(0.5, 0.5, 0.0), Point::new(1.5, 0.5, 0.0), Point::new(0.5, 1.5, 0.0)];
        Network::new(2, pts, vec![1, 2], &[(0, 1, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn orthogonal_anchors_closed_form() {
        let c = Crlb::compute(&three_nodes(), 0.1).unwrap();
        assert!((c.trace - 2.0 * 0.01).abs() < 1e-15);
        assert!((c.per_unknown() - 0.1 * 2f64.sqrt()).abs() < 1e-15);
        assert!((c.per_node() - (0.02f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bound_scales_with_sigma() {
        let net = three_nodes();
        let a = crlb_rmse(&net, 0.05).unwrap();
        let b = crlb_rmse(&net, 0.1).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn collinear_geometry_is_not_localizable() {
        let pts = vec![Point::new(0.5, 0.5, 0.0), Point::new(1.5, 0.5, 0.0), Point::new(2.5, 0.5, 0.0)];
        let net = Network::new(2, pts, vec![1, 2], &[(0, 1, 1.0), (0, 2, 2.0)]).unwrap();
        assert!(matches!(Crlb::compute(&net, 0.1), Err(Error::NotLocalizable { deficiency: 1 })));
    }
}
