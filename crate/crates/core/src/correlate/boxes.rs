//! Measures of intersections `∩_i T_i^{-n_i} A_i` for box unions `A_i`.

use rayon::prelude::*;
use serde::Serialize;

use super::CorrelateError;
use crate::torus::{ratio_to_turns, turns_to_f64, AffineSystem, Turns};

/// Half-open arc `[lo, lo + len)` of the circle, possibly wrapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    lo: Turns,
    len: Turns,
    full: bool,
}

impl Arc {
    pub fn full() -> Arc {
        Arc { lo: 0, len: 0, full: true }
    }

    pub fn empty() -> Arc {
        Arc { lo: 0, len: 0, full: false }
    }

    /// `[lo, hi)` with rational ends, `lo ≤ hi`. Lengths of 1 or more give
    /// the whole circle.
    pub fn from_ratios(lo: (i64, u64), hi: (i64, u64)) -> Result<Arc, CorrelateError> {
        let bad = |why: &str| CorrelateError::Region(format!("arc [{}/{}, {}/{}): {why}", lo.0, lo.1, hi.0, hi.1));
        if lo.1 == 0 || hi.1 == 0 || lo.1 >= 1 << 63 || hi.1 >= 1 << 63 {
            return Err(bad("bad denominator"));
        }
        let (lp, lq) = (lo.0 as i128, lo.1 as i128);
        let (hp, hq) = (hi.0 as i128, hi.1 as i128);
        // len = hi − lo = (hp·lq − lp·hq)/(hq·lq)
        let num = hp * lq - lp * hq;
        let den = hq * lq;
        if num < 0 {
            return Err(bad("upper end below lower end"));
        }
        if num >= den {
            return Ok(Arc::full());
        }
        let lo_t = frac_turns(lp, lq);
        let g = num_integer::gcd(num, den);
        let (num, den) = (num / g, den / g);
        if den >= 1 << 64 {
            return Err(bad("denominator too large"));
        }
        Ok(Arc {
            lo: lo_t,
            len: ratio_to_turns(num as u128, den as u128).0,
            full: false,
        })
    }

    pub fn from_turns(lo: Turns, len: Turns) -> Arc {
        Arc { lo, len, full: false }
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn length(&self) -> f64 {
        if self.full {
            1.0
        } else {
            turns_to_f64(self.len)
        }
    }

    pub fn contains(&self, t: Turns) -> bool {
        self.full || t.wrapping_sub(self.lo) < self.len
    }

    /// The arc moved by `−t`.
    pub fn shifted_back(&self, t: Turns) -> Arc {
        Arc {
            lo: self.lo.wrapping_sub(t),
            ..*self
        }
    }

    /// Closed integer ranges of turn values covered.
    fn ranges(&self) -> Vec<(Turns, Turns)> {
        if self.full {
            return vec![(0, Turns::MAX)];
        }
        if self.len == 0 {
            return Vec::new();
        }
        let end = self.lo.wrapping_add(self.len - 1);
        if end >= self.lo {
            vec![(self.lo, end)]
        } else {
            vec![(self.lo, Turns::MAX), (0, end)]
        }
    }
}

fn frac_turns(p: i128, q: i128) -> Turns {
    let r = p.rem_euclid(q);
    ratio_to_turns(r as u128, q as u128).0
}

/// Product of arcs, one per coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell(pub Vec<Arc>);

impl Cell {
    pub fn volume(&self) -> f64 {
        self.0.iter().map(Arc::length).product()
    }

    pub fn contains(&self, x: &[Turns]) -> bool {
        self.0.iter().zip(x).all(|(a, t)| a.contains(*t))
    }
}

/// A finite union of pairwise disjoint boxes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub cells: Vec<Cell>,
    dim: usize,
}

impl Region {
    pub fn new(dim: usize, cells: Vec<Cell>) -> Result<Region, CorrelateError> {
        if let Some(c) = cells.iter().find(|c| c.0.len() != dim) {
            return Err(CorrelateError::Region(format!("box of dimension {} in a {dim}-torus", c.0.len())));
        }
        Ok(Region { cells, dim })
    }

    pub fn single(arcs: Vec<Arc>) -> Region {
        let dim = arcs.len();
        Region {
            cells: vec![Cell(arcs)],
            dim,
        }
    }

    pub fn full(dim: usize) -> Region {
        Region::single(vec![Arc::full(); dim])
    }

    pub fn empty(dim: usize) -> Region {
        Region { cells: Vec::new(), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn volume(&self) -> f64 {
        self.cells.iter().map(Cell::volume).sum()
    }

    pub fn contains(&self, x: &[Turns]) -> bool {
        self.cells.iter().any(|c| c.contains(x))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxMeasure {
    pub value: f64,
    pub error_bound: f64,
    pub resolution: u64,
    pub grid_count: u64,
}

/// One term `T^{-n} A` of an intersection.
#[derive(Clone, Debug)]
pub struct Preimage {
    pub system: AffineSystem,
    pub iterate: i64,
    pub region: Region,
}

struct Prepared {
    matrix: Vec<Vec<u128>>,
    shift: Vec<Turns>,
    identity: bool,
    region: Region,
}

impl Prepared {
    fn contains(&self, x: &[Turns], y: &mut [Turns]) -> bool {
        if self.identity {
            return self.region.contains(x);
        }
        for (i, row) in self.matrix.iter().enumerate() {
            let mut t = self.shift[i];
            for (a, xk) in row.iter().zip(x) {
                t = t.wrapping_add(a.wrapping_mul(*xk));
            }
            y[i] = t;
        }
        self.region.contains(y)
    }
}

/// Midpoint-rule estimate of `μ(∩_i T_i^{-n_i} A_i)` on an `M^d` grid, with
/// orbit coordinates computed exactly in fixed point.
///
/// The error bound counts, for every facet `{y_k = c}` of every box, the
/// band of cells it can cut: `‖row_k(A^n)‖₁ / M` times the facet's area.
pub fn box_measure(sets: &[Preimage], resolution: u64, tolerance: Option<f64>) -> Result<BoxMeasure, CorrelateError> {
    let d = sets.first().map(|s| s.region.dim()).ok_or_else(|| CorrelateError::Region("no sets".into()))?;
    if resolution == 0 {
        return Err(CorrelateError::Region("resolution must be positive".into()));
    }
    let mut prepared = Vec::with_capacity(sets.len());
    let mut error = 0.0;
    for s in sets {
        if s.region.dim() != d || s.system.dim() != d {
            return Err(CorrelateError::Region("sets live on different tori".into()));
        }
        let p = s.system.power(s.iterate).map_err(|e| CorrelateError::Generator {
            n: s.iterate.unsigned_abs(),
            reason: e.to_string(),
        })?;
        let identity = p == AffineSystem::identity(d);
        for cell in &s.region.cells {
            for (k, arc) in cell.0.iter().enumerate() {
                if arc.is_full() || arc.len == 0 {
                    continue;
                }
                let row: f64 = p.matrix()[k].iter().map(|x| x.unsigned_abs() as f64).sum();
                let area: f64 = cell.0.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, a)| a.length()).product();
                error += 2.0 * row * area / resolution as f64;
            }
        }
        prepared.push(Prepared {
            matrix: p.matrix().iter().map(|r| r.iter().map(|&a| a as i128 as u128).collect()).collect(),
            shift: p.translation().iter().map(|b| b.turns()).collect(),
            identity,
            region: s.region.clone(),
        });
    }
    if let Some(tol) = tolerance {
        if error > tol {
            let required = (resolution as f64 * error / tol).ceil() as u64;
            return Err(CorrelateError::ResolutionTooSmall {
                resolution,
                bound: error,
                tolerance: tol,
                required,
            });
        }
    }
    let midpoints: Vec<Turns> = (0..resolution)
        .map(|j| ratio_to_turns(2 * j as u128 + 1, 2 * resolution as u128).0)
        .collect();
    // enumerate only inside the smallest set that is not moved
    let anchor = prepared
        .iter()
        .enumerate()
        .filter(|(_, p)| p.identity)
        .min_by(|a, b| a.1.region.volume().total_cmp(&b.1.region.volume()))
        .map(|(i, _)| i);
    let count: u64 = match anchor {
        Some(a) => prepared[a]
            .region
            .cells
            .iter()
            .map(|cell| {
                let axes: Vec<Vec<Turns>> = cell
                    .0
                    .iter()
                    .map(|arc| midpoints.iter().copied().filter(|t| arc.contains(*t)).collect())
                    .collect();
                count_product(&axes, &prepared, Some(a))
            })
            .sum(),
        None => {
            let axes = vec![midpoints.clone(); d];
            count_product(&axes, &prepared, None)
        }
    };
    let cells = (resolution as f64).powi(d as i32);
    Ok(BoxMeasure {
        value: count as f64 / cells,
        error_bound: error,
        resolution,
        grid_count: count,
    })
}

fn count_product(axes: &[Vec<Turns>], sets: &[Prepared], skip: Option<usize>) -> u64 {
    let d = axes.len();
    if axes.iter().any(Vec::is_empty) {
        return 0;
    }
    axes[0]
        .par_iter()
        .map(|&x0| {
            let mut x = vec![0 as Turns; d];
            let mut y = vec![0 as Turns; d];
            x[0] = x0;
            let mut idx = vec![0usize; d];
            let mut count = 0u64;
            loop {
                for k in 1..d {
                    x[k] = axes[k][idx[k]];
                }
                if sets
                    .iter()
                    .enumerate()
                    .all(|(i, s)| Some(i) == skip || s.contains(&x, &mut y))
                {
                    count += 1;
                }
                // odometer over coordinates 1..d
                let mut k = d;
                loop {
                    if k == 1 || d == 1 {
                        return count;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < axes[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .sum()
}

/// Exact `μ(∩_i T_i^{-n_i} A_i)` when every `T_i` is a rotation and every
/// `A_i` a single box: a product over coordinates of arc intersections.
pub fn interval_measure_exact(sets: &[Preimage]) -> Result<f64, CorrelateError> {
    let d = sets.first().map(|s| s.region.dim()).ok_or_else(|| CorrelateError::Region("no sets".into()))?;
    let mut per_coord: Vec<Vec<Arc>> = vec![Vec::new(); d];
    for s in sets {
        if !s.system.is_rotation() {
            return Err(CorrelateError::NotRotation);
        }
        let cell = match s.region.cells.as_slice() {
            [] => return Ok(0.0),
            [c] => c,
            _ => return Err(CorrelateError::Region("exact path needs a single box per set".into())),
        };
        let p = s.system.power(s.iterate).map_err(|e| CorrelateError::Generator {
            n: s.iterate.unsigned_abs(),
            reason: e.to_string(),
        })?;
        for (k, arc) in cell.0.iter().enumerate() {
            per_coord[k].push(arc.shifted_back(p.translation()[k].turns()));
        }
    }
    Ok(per_coord.iter().map(|arcs| arcs_intersection(arcs)).product())
}

/// Length of the intersection of arcs.
pub fn arcs_intersection(arcs: &[Arc]) -> f64 {
    let mut current: Vec<(Turns, Turns)> = vec![(0, Turns::MAX)];
    for a in arcs {
        let mut next = Vec::new();
        for &(s, e) in &current {
            for (u, v) in a.ranges() {
                let lo = s.max(u);
                let hi = e.min(v);
                if lo <= hi {
                    next.push((lo, hi));
                }
            }
        }
        current = next;
    }
    current
        .iter()
        .map(|&(s, e)| turns_to_f64(e - s) + turns_to_f64(1))
        .sum()
}

/// Length of `[0, 1/2) ∩ ([0, 1/2) − t)`, the overlap used by rotation oracles.
pub fn half_overlap(t: f64) -> f64 {
    let t = t.rem_euclid(1.0);
    if t <= 0.5 {
        0.5 - t
    } else {
        t - 0.5
    }
}
