use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{rank_one_recover, FrameFamily, GramMatrix};
use crate::linalg::leading_eigenpair;

/// Where a block's phase came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    /// 0-based position inside the block.
    pub position: usize,
    pub phase: f64,
}

/// Per-block state of the recovery: the gram matrix and, once anchored, the vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEstimate {
    pub block_index: i64,
    pub gram: GramMatrix,
    pub vector: Option<Vec<Complex64>>,
    /// Second eigenvalue magnitude over the leading eigenvalue.
    pub rank1_residual: f64,
    pub anchor: Option<Anchor>,
    /// The vector came from the leading eigenvector instead of the row read-off.
    pub eigen_fallback: bool,
}

impl BlockEstimate {
    /// Largest diagonal entry of the gram matrix and its position.
    pub fn peak(&self) -> (usize, f64) {
        (0..self.gram.dim())
            .map(|i| (i, self.gram.diagonal(i)))
            .fold(
                (0, f64::NEG_INFINITY),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            )
    }

    /// `sqrt(max(Q_ii, 0))`
    pub fn magnitude(&self, i: usize) -> f64 {
        self.gram.diagonal(i).max(0.0).sqrt()
    }
}

fn rank1_residual(gram: &GramMatrix) -> f64 {
    let eig = gram.eigenvalues();
    let second = eig.iter().skip(1).map(|v| v.abs()).fold(0.0, f64::max);
    if second == 0.0 {
        return 0.0;
    }
    second / eig[0].max(f64::MIN_POSITIVE)
}

/// Gram matrix of block `n` from its `M` intensities.
pub fn recover_block_gram(block_index: i64, c_n: &[f64], frame: &FrameFamily) -> Result<BlockEstimate> {
    let gram = rank_one_recover(c_n, frame)?;
    let rank1_residual = rank1_residual(&gram);
    Ok(BlockEstimate {
        block_index,
        gram,
        vector: None,
        rank1_residual,
        anchor: None,
        eigen_fallback: false,
    })
}

/// Factors the gram matrix with entry `i` fixed to phase `phi`:
/// `v_k = sqrt(Q_kk) exp(i (phi - arg Q_ik))` for `k != i`, `v_i = sqrt(Q_ii) e^{i phi}`.
pub fn anchor_block_vector(est: &BlockEstimate, i: usize, phi: f64, zero_tol: f64) -> Result<BlockEstimate> {
    let k = est.gram.dim();
    if i >= k {
        return Err(Error::OutOfRange {
            index: i as i64,
            min: 0,
            max: k as i64 - 1,
        });
    }
    let anchor_sq = est.gram.diagonal(i);
    if !(anchor_sq > zero_tol * zero_tol) {
        return Err(Error::AnchorTooSmall {
            index: i,
            value: anchor_sq,
        });
    }
    let vector = (0..k)
        .map(|col| {
            if col == i {
                Complex64::from_polar(anchor_sq.sqrt(), phi)
            } else {
                Complex64::from_polar(est.magnitude(col), phi - est.gram.get(i, col).arg())
            }
        })
        .collect();
    Ok(BlockEstimate {
        vector: Some(vector),
        anchor: Some(Anchor {
            position: i,
            phase: phi,
        }),
        eigen_fallback: false,
        ..est.clone()
    })
}

/// Like [`anchor_block_vector`], but switches to the scaled leading eigenvector
/// (rotated so entry `i` has phase `phi`) when the block is visibly not rank one.
pub fn anchor_block_vector_robust(
    est: &BlockEstimate,
    i: usize,
    phi: f64,
    zero_tol: f64,
    fallback_threshold: f64,
) -> Result<BlockEstimate> {
    let direct = anchor_block_vector(est, i, phi, zero_tol)?;
    if est.rank1_residual <= fallback_threshold {
        return Ok(direct);
    }
    let (value, u) = leading_eigenpair(est.gram.dim(), est.gram.entries());
    let scale = value.max(0.0).sqrt();
    let rotation = Complex64::from_polar(1.0, phi - u[i].arg());
    Ok(BlockEstimate {
        vector: Some(u.iter().map(|x| x * rotation * scale).collect()),
        eigen_fallback: true,
        ..direct
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::outer_product;
    use crate::grid::InterpolationGrid;
    use crate::measurement::{add_noise, MeasurementSet, NoiseModel};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn from_gram(q: GramMatrix) -> BlockEstimate {
        BlockEstimate {
            block_index: 0,
            rank1_residual: rank1_residual(&q),
            gram: q,
            vector: None,
            anchor: None,
            eigen_fallback: false,
        }
    }

    #[test]
    fn exact_block_has_tiny_residual() {
        let f = FrameFamily::canonical_k2();
        let s = 1.0 / 2f64.sqrt();
        let v = [c(s, 0.0), c(0.0, s)];
        let est = recover_block_gram(3, &f.intensities(&v).unwrap(), &f).unwrap();
        assert_eq!(est.block_index, 3);
        assert!(est.rank1_residual <= 1e-10, "{}", est.rank1_residual);
        assert!(est.gram.hermitian_defect() < 1e-12);
    }

    #[test]
    fn noisy_block_residual_tracks_noise() {
        let f = FrameFamily::canonical_k2();
        let s = 1.0 / 2f64.sqrt();
        let v = [c(s, 0.0), c(0.0, s)];
        let grid = InterpolationGrid::shannon(1.0, 2, 1, 0, 0, 0.0).unwrap();
        let ms = MeasurementSet::new(grid, f.clone(), f.intensities(&v).unwrap(), NoiseModel::None, None).unwrap();
        let mut residuals = Vec::new();
        for seed in 0..20 {
            let noisy = add_noise(&ms, 1e-3, seed).unwrap();
            residuals.push(
                recover_block_gram(0, noisy.block(0).unwrap(), &f)
                    .unwrap()
                    .rank1_residual,
            );
        }
        let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
        assert!(residuals.iter().all(|&r| r > 0.0));
        assert!(mean > 1e-4 && mean < 1e-2, "mean residual {mean}");
    }

    #[test]
    fn zero_block_residual_is_zero() {
        let f = FrameFamily::canonical_k2();
        let est = recover_block_gram(0, &[0.0; 4], &f).unwrap();
        assert_eq!(est.gram, GramMatrix::zeros(2));
        assert_eq!(est.rank1_residual, 0.0);
    }

    #[test]
    fn anchoring_examples() {
        let est = from_gram(outer_product(&[c(1.0, 0.0), c(0.0, 0.0)]));
        let a = anchor_block_vector(&est, 0, 0.0, 1e-8).unwrap();
        assert_eq!(a.vector.unwrap(), vec![c(1.0, 0.0), c(0.0, 0.0)]);

        let s = 1.0 / 2f64.sqrt();
        let est = from_gram(outer_product(&[c(s, 0.0), c(s, 0.0)]));
        let a = anchor_block_vector(&est, 0, PI / 3.0, 1e-8).unwrap();
        let rot = Complex64::from_polar(1.0, PI / 3.0);
        for (got, want) in a.vector.unwrap().iter().zip([rot * s, rot * s]) {
            assert!((got - want).norm() < 1e-12);
        }
        assert_eq!(
            a.anchor,
            Some(Anchor {
                position: 0,
                phase: PI / 3.0
            })
        );

        let est = from_gram(outer_product(&[c(0.0, 0.0), c(1.0, 0.0)]));
        assert!(matches!(
            anchor_block_vector(&est, 0, 0.0, 1e-8),
            Err(Error::AnchorTooSmall { index: 0, .. })
        ));
        assert!(anchor_block_vector(&est, 2, 0.0, 1e-8).is_err());
    }

    #[test]
    fn anchored_vector_reproduces_gram() {
        let v = [c(0.3, -1.2), c(-0.7, 0.4), c(2.0, 0.1)];
        let est = from_gram(outer_product(&v));
        for i in 0..3 {
            let a = anchor_block_vector(&est, i, 0.77, 1e-8).unwrap();
            let vec = a.vector.unwrap();
            assert!(outer_product(&vec).max_abs_diff(&est.gram) < 1e-12);
            assert!((vec[i].arg() - 0.77).abs() < 1e-12);
            // equal to the truth up to one phase
            let ratio = vec[0] / v[0];
            for (x, y) in vec.iter().zip(&v) {
                assert!((x - y * ratio).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_fallback_only_above_threshold() {
        let v = [c(1.0, 0.5), c(-0.2, 0.9)];
        let mut q = outer_product(&v);
        let exact = from_gram(q.clone());
        let a = anchor_block_vector_robust(&exact, 0, 0.0, 1e-8, 1e-8).unwrap();
        assert!(!a.eigen_fallback);

        let mut entries = q.entries().to_vec();
        entries[3] += 1e-3;
        q = GramMatrix::from_entries(2, entries).unwrap();
        let noisy = from_gram(q);
        assert!(noisy.rank1_residual > 1e-8);
        let a = anchor_block_vector_robust(&noisy, 1, 0.4, 1e-8, 1e-8).unwrap();
        assert!(a.eigen_fallback);
        let vec = a.vector.unwrap();
        assert!((vec[1].arg() - 0.4).abs() < 1e-12);
        assert!(outer_product(&vec).max_abs_diff(&outer_product(&v)) < 2e-3);
    }
}
