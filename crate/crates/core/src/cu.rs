//! Rank data of positive elements and the rank comparison of homomorphisms.

use serde::{Deserialize, Serialize};

use crate::complex::{ComplexSpec, Element, Section, Side};
use crate::error::{Error, Result};
use crate::findim::{eig_sorted, CMat};
use crate::homspec::HomToMatrix;
use crate::standard::StandardMapToComplex;

pub const DEFAULT_EPS: f64 = 1e-6;
/// Eigenvalues within this distance above the threshold count as zero, so a
/// sample sitting exactly on a jump takes the lower (open-support) value.
const RANK_SLACK: f64 = 1e-9;
const POS_TOL: f64 = 1e-9;

/// Lower semicontinuous step function on `[0,1]`: `segments[j] = (t_j, v)` gives
/// the value on `(t_j, t_{j+1})`, `points` the values at every `t_j` and at 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankFn {
    pub segments: Vec<(f64, usize)>,
    pub points: Vec<(f64, usize)>,
}

impl RankFn {
    /// From ranks at `N+1` equally spaced samples; an open cell takes the larger
    /// of its two end ranks.
    pub fn from_samples(r: &[usize]) -> RankFn {
        let n = r.len() - 1;
        let t = |k: usize| k as f64 / n as f64;
        let seg: Vec<usize> = (0..n).map(|k| r[k].max(r[k + 1])).collect();
        let mut segments = vec![(0.0, seg[0])];
        let mut points = vec![(0.0, r[0])];
        for k in 1..n {
            if seg[k] != seg[k - 1] || r[k] != seg[k] {
                segments.push((t(k), seg[k]));
                points.push((t(k), r[k]));
            }
        }
        points.push((1.0, r[n]));
        RankFn { segments, points }
    }

    pub fn eval(&self, t: f64) -> usize {
        if let Some(p) = self.points.iter().find(|p| (p.0 - t).abs() < 1e-12) {
            return p.1;
        }
        let j = self.segments.iter().rposition(|s| s.0 < t).unwrap_or(0);
        self.segments[j].1
    }

    /// First break violating lower semicontinuity.
    pub fn lsc_violation(&self) -> Option<f64> {
        for (j, &(t, v)) in self.segments.iter().enumerate() {
            let left = if j > 0 { Some(self.segments[j - 1].1) } else { None };
            let at = self.eval(t);
            if at > v || left.is_some_and(|l| at > l) {
                return Some(t);
            }
        }
        let last = self.segments.last().map(|s| s.1).unwrap_or(0);
        (self.eval(1.0) > last).then_some(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuElement {
    pub ranks: Vec<RankFn>,
    pub e_ranks: Vec<usize>,
    pub eps: f64,
}

impl CuElement {
    pub fn validate(&self, spec: &ComplexSpec) -> Result<()> {
        for (i, f) in self.ranks.iter().enumerate() {
            if let Some(t) = f.lsc_violation() {
                return Err(Error::NotLsc { block: i, t });
            }
            for side in Side::BOTH {
                let want: usize = spec.mult(side)[i].iter().zip(&self.e_ranks).map(|(m, r)| m * r).sum();
                if f.eval(side.t()) != want {
                    return Err(Error::RankBoundary { block: i, side: side.into() });
                }
            }
        }
        Ok(())
    }
}

fn rank_above(m: &CMat, eps: f64) -> Result<usize> {
    Ok(eig_sorted(m)?.iter().filter(|&&x| x > eps + RANK_SLACK).count())
}

pub fn cu_rank(spec: &ComplexSpec, el: &Element, eps: f64) -> Result<CuElement> {
    let min_eig = el.min_eigenvalue()?;
    if min_eig < -POS_TOL {
        return Err(Error::NotPositive { min_eig });
    }
    let mut ranks = Vec::new();
    for i in 0..spec.k() {
        let r = el
            .f_samples()
            .iter()
            .map(|s| rank_above(s.block(i), eps))
            .collect::<Result<Vec<_>>>()?;
        ranks.push(RankFn::from_samples(&r));
    }
    let e_ranks = el.e_part().blocks().iter().map(|b| rank_above(b, eps)).collect::<Result<_>>()?;
    let cu = CuElement { ranks, e_ranks, eps };
    cu.validate(spec)?;
    Ok(cu)
}

/// Ranks of `φ(x)` and `ψ(x)` agree at every grid point and on every E′-block.
pub fn cu_compare_homs<S: Section + ?Sized>(
    phi: &StandardMapToComplex,
    psi: &StandardMapToComplex,
    probe: &S,
    eps: f64,
    grid: usize,
) -> Result<bool> {
    let spec = &phi.source;
    for (a, b) in phi.e_maps.iter().zip(&psi.e_maps) {
        if rank_above(&a.eval(spec, probe), eps)? != rank_above(&b.eval(spec, probe), eps)? {
            return Ok(false);
        }
    }
    for (a, b) in phi.components.iter().zip(&psi.components) {
        for k in 0..=grid {
            let t = k as f64 / grid as f64;
            if rank_above(&a.eval(spec, t, probe), eps)? != rank_above(&b.eval(spec, t, probe), eps)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Rank comparison for a pair of homomorphisms into a matrix algebra.
pub fn cu_compare_hom_pair<S: Section + ?Sized>(
    spec: &ComplexSpec,
    phi: &HomToMatrix,
    psi: &HomToMatrix,
    probe: &S,
    eps: f64,
) -> Result<bool> {
    Ok(rank_above(&phi.eval(spec, probe), eps)? == rank_above(&psi.eval(spec, probe), eps)?)
}
