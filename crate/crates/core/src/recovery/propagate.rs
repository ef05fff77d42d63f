use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::block::{anchor_block_vector_robust, BlockEstimate};
use crate::error::{Error, Result};
use crate::grid::InterpolationGrid;
use crate::signal::TimeLimitedSignal;

/// Transform values on the distinct grid points, indexed like
/// [`InterpolationGrid::distinct_points`]. Unresolved points hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredValues {
    pub points: Vec<Complex64>,
    pub values: Vec<Option<Complex64>>,
}

impl RecoveredValues {
    pub fn empty(grid: &InterpolationGrid) -> Self {
        let points = grid.distinct_points();
        let values = vec![None; points.len()];
        Self { points, values }
    }

    /// Exact transform values of `x` on the grid.
    pub fn from_signal(x: &TimeLimitedSignal, grid: &InterpolationGrid) -> Self {
        let points = grid.distinct_points();
        let values = points.iter().map(|&z| Some(x.fourier_transform(z))).collect();
        Self { points, values }
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn resolved(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.points
            .iter()
            .zip(&self.values)
            .filter_map(|(p, v)| v.map(|v| (*p, v)))
    }

    pub fn resolved_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn map_values<F: Fn(Complex64, Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            points: self.points.clone(),
            values: self
                .points
                .iter()
                .zip(&self.values)
                .map(|(p, v)| v.map(|v| f(*p, v)))
                .collect(),
        }
    }

    /// CSV with columns `lambda_re,lambda_im,value_re,value_im`; unresolved points are omitted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda_re,lambda_im,value_re,value_im\n");
        for (p, v) in self.resolved() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", p.re, p.im, v.re, v.im));
        }
        out
    }
}

/// One step of the phase chain: block `to` took its phase from block `from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLink {
    pub from: i64,
    pub to: i64,
    /// Anchor position inside block `to`.
    pub position: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub values: RecoveredValues,
    pub blocks: Vec<BlockEstimate>,
    pub start_block: i64,
    pub links: Vec<PhaseLink>,
    /// Largest difference between the two estimates of any shared point.
    pub max_overlap_disagreement: f64,
    /// Upper block of the first overlap whose values were all below tolerance.
    pub broken_at: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    pub zero_tol: f64,
    pub start_block: Option<i64>,
    pub fallback_threshold: f64,
}

impl PropagationOptions {
    pub fn new(zero_tol: f64) -> Self {
        Self {
            zero_tol,
            start_block: None,
            fallback_threshold: f64::INFINITY,
        }
    }
}

fn pick_start(blocks: &[BlockEstimate], opts: &PropagationOptions) -> Result<usize> {
    let alive = |b: &BlockEstimate| b.peak().1 > opts.zero_tol * opts.zero_tol;
    if let Some(n) = opts.start_block {
        let idx = blocks
            .iter()
            .position(|b| b.block_index == n)
            .ok_or(Error::OutOfRange {
                index: n,
                min: blocks[0].block_index,
                max: blocks[blocks.len() - 1].block_index,
            })?;
        return if alive(&blocks[idx]) {
            Ok(idx)
        } else {
            Err(Error::ZeroBlock { block: n })
        };
    }
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by(|&a, &b| {
        blocks[b]
            .gram
            .trace()
            .total_cmp(&blocks[a].gram.trace())
            .then(a.cmp(&b))
    });
    order
        .iter()
        .copied()
        .find(|&i| alive(&blocks[i]))
        .ok_or(Error::ZeroBlock {
            block: blocks[order[0]].block_index,
        })
}

/// Resolves the block phases outward from a start block, recording (rather than
/// failing on) a broken link so that partial values stay available.
pub fn propagate_phases_partial(
    blocks: &[BlockEstimate],
    grid: &InterpolationGrid,
    opts: &PropagationOptions,
) -> Result<Propagation> {
    let (n_min, n_max) = grid.block_range();
    if blocks.len() != grid.block_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.block_count(),
            actual: blocks.len(),
        });
    }
    for (offset, b) in blocks.iter().enumerate() {
        if b.block_index != n_min + offset as i64 || b.gram.dim() != grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "block estimates must cover {n_min}..={n_max} in order with dimension {}",
                grid.dim()
            )));
        }
    }

    let k = grid.dim();
    let a = grid.overlap();
    let tol = opts.zero_tol;
    let mut values = RecoveredValues::empty(grid);
    let mut resolved: Vec<BlockEstimate> = blocks.to_vec();
    let mut links = Vec::new();
    let mut disagreement: f64 = 0.0;
    let mut broken_at = None;

    let start = pick_start(blocks, opts)?;
    let (peak, _) = blocks[start].peak();
    resolved[start] = anchor_block_vector_robust(&blocks[start], peak, 0.0, tol, opts.fallback_threshold)?;
    let mut store = |n: i64, est: &BlockEstimate, values: &mut RecoveredValues| {
        for (pos, v) in est.vector.as_ref().expect("anchored").iter().enumerate() {
            let g = grid.global_index(n, pos);
            match values.values[g] {
                Some(old) => disagreement = disagreement.max((old - v).norm()),
                None => values.values[g] = Some(*v),
            }
        }
    };
    store(blocks[start].block_index, &resolved[start], &mut values);

    // `shared(n)`: positions in block n whose values are already known from the
    // neighbour, paired with their global index.
    let mut link = |idx: usize, from: usize, positions: Vec<usize>, values: &RecoveredValues| {
        let n = blocks[idx].block_index;
        let candidate = positions
            .into_iter()
            .filter_map(|pos| {
                let known = values.values[grid.global_index(n, pos)]?;
                let ok = known.norm() > tol && blocks[idx].gram.diagonal(pos) > tol * tol;
                ok.then_some((pos, known))
            })
            .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()).then(y.0.cmp(&x.0)));
        let (pos, known) = candidate?;
        let est = anchor_block_vector_robust(&blocks[idx], pos, known.arg(), tol, opts.fallback_threshold).ok()?;
        links.push(PhaseLink {
            from: blocks[from].block_index,
            to: n,
            position: pos,
            magnitude: known.norm(),
        });
        Some(est)
    };

    for idx in start + 1..blocks.len() {
        match link(idx, idx - 1, (0..a).collect(), &values) {
            Some(est) => {
                store(blocks[idx].block_index, &est, &mut values);
                resolved[idx] = est;
            }
            None => {
                broken_at = Some(blocks[idx].block_index);
                break;
            }
        }
    }
    for idx in (0..start).rev() {
        match link(idx, idx + 1, (k - a..k).collect(), &values) {
            Some(est) => {
                store(blocks[idx].block_index, &est, &mut values);
                resolved[idx] = est;
            }
            None => {
                broken_at.get_or_insert(blocks[idx + 1].block_index);
                break;
            }
        }
    }

    Ok(Propagation {
        values,
        blocks: resolved,
        start_block: blocks[start].block_index,
        links,
        max_overlap_disagreement: disagreement,
        broken_at,
    })
}

/// Resolves all block phases; fails with [`Error::PhaseLinkBreak`] if any overlap
/// carries no value above `zero_tol`.
pub fn propagate_phases(
    blocks: &[BlockEstimate],
    grid: &InterpolationGrid,
    opts: &PropagationOptions,
) -> Result<Propagation> {
    let p = propagate_phases_partial(blocks, grid, opts)?;
    match p.broken_at {
        Some(block) => Err(Error::PhaseLinkBreak { block }),
        None => Ok(p),
    }
}
