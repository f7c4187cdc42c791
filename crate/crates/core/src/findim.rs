//! Finite-dimensional C*-algebra arithmetic: block matrices, permutations,
//! eigenvalues and unitary paths.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Default hermitian tolerance.
pub const TAU_HERM: f64 = 1e-9;
/// Default unitarity tolerance.
pub const TAU_UNIT: f64 = 1e-9;
/// Distance to -1 below which a principal logarithm is refused.
pub const LOG_BRANCH_GAP: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn real_diag(d: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(
        d.len(),
        d.iter().map(|&x| c(x, 0.0)),
    ))
}

/// Block diagonal sum of square matrices.
pub fn block_diag(parts: &[&CMat]) -> CMat {
    let n: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = zeros(n);
    let mut off = 0;
    for p in parts {
        let k = p.nrows();
        out.view_mut((off, off), (k, k)).copy_from(p);
        off += k;
    }
    out
}

/// Largest singular value.
pub fn norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// `‖m*m − I‖`.
pub fn unitarity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    norm(&(m.adjoint() * m - eye(n)))
}

/// Largest modulus of an off-diagonal entry.
pub fn off_diag_max(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

pub fn hermitian_residual(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

/// Ascending eigenvalues of a hermitian matrix, with multiplicity.
pub fn eig_sorted(m: &CMat) -> Result<Vec<f64>> {
    eig_sorted_tol(m, TAU_HERM)
}

pub fn eig_sorted_tol(m: &CMat, tol: f64) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::SizeMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let residual = hermitian_residual(m);
    if residual > tol {
        return Err(Error::NotHermitian { residual });
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockShape {
    sizes: Vec<usize>,
}

impl TryFrom<Vec<usize>> for BlockShape {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        BlockShape::new(v)
    }
}

impl From<BlockShape> for Vec<usize> {
    fn from(s: BlockShape) -> Self {
        s.sizes
    }
}

impl BlockShape {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidShape("no blocks".into()));
        }
        if let Some(b) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidShape(format!("block {} has size 0", b + 1)));
        }
        Ok(BlockShape { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn size(&self, b: usize) -> usize {
        self.sizes[b]
    }

    /// Vector-space dimension `Σ nᵢ²`.
    pub fn dim(&self) -> usize {
        self.sizes.iter().map(|n| n * n).sum()
    }

    /// Sum of block sizes.
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    shape: BlockShape,
    blocks: Vec<CMat>,
}

impl BlockMatrix {
    pub fn new(shape: BlockShape, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != shape.len() {
            return Err(Error::SizeMismatch(format!(
                "{} blocks given for a shape with {}",
                blocks.len(),
                shape.len()
            )));
        }
        for (b, m) in blocks.iter().enumerate() {
            let n = shape.size(b);
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::SizeMismatch(format!(
                    "block {} is {}x{}, expected {n}x{n}",
                    b + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(BlockMatrix { shape, blocks })
    }

    pub fn zeros(shape: &BlockShape) -> Self {
        let blocks = shape.sizes.iter().map(|&n| zeros(n)).collect();
        BlockMatrix { shape: shape.clone(), blocks }
    }

    pub fn identity(shape: &BlockShape) -> Self {
        let blocks = shape.sizes.iter().map(|&n| eye(n)).collect();
        BlockMatrix { shape: shape.clone(), blocks }
    }

    /// Matrix unit `e^b_{pq}` (0-based indices).
    pub fn unit(shape: &BlockShape, b: usize, p: usize, q: usize) -> Self {
        let mut out = Self::zeros(shape);
        out.blocks[b][(p, q)] = c(1.0, 0.0);
        out
    }

    /// Identity in block `b`, zero elsewhere.
    pub fn block_identity(shape: &BlockShape, b: usize) -> Self {
        let mut out = Self::zeros(shape);
        out.blocks[b] = eye(shape.size(b));
        out
    }

    pub fn shape(&self) -> &BlockShape {
        &self.shape
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &CMat {
        &self.blocks[b]
    }

    pub fn block_mut(&mut self, b: usize) -> &mut CMat {
        &mut self.blocks[b]
    }

    pub fn into_blocks(self) -> Vec<CMat> {
        self.blocks
    }

    pub fn adjoint(&self) -> Self {
        self.map(|m| m.adjoint())
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        BlockMatrix {
            shape: self.shape.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Self {
        assert_eq!(self.shape, other.shape, "block shapes differ");
        BlockMatrix {
            shape: self.shape.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|m| m * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|m| m * c(s, 0.0))
    }

    /// Entrywise diagonal truncation.
    pub fn diagonal_part(&self) -> Self {
        self.map(|m| CMat::from_diagonal(&m.diagonal()))
    }

    pub fn off_diag_max(&self) -> f64 {
        self.blocks.iter().map(off_diag_max).fold(0.0, f64::max)
    }

    pub fn hermitian_residual(&self) -> f64 {
        self.blocks.iter().map(hermitian_residual).fold(0.0, f64::max)
    }

    pub fn max_entry_diff(&self, other: &Self) -> f64 {
        self.sub(other)
            .blocks
            .iter()
            .map(|m| m.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// Maximum over blocks of the largest singular value.
pub fn op_norm(m: &BlockMatrix) -> f64 {
    m.blocks.iter().map(norm).fold(0.0, f64::max)
}

/// A permutation of `{0..n}`. As a matrix, `P[images[k], k] = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::BadPermutation(format!(
                    "{images:?} is not a bijection of 0..{n}"
                )));
            }
            seen[i] = true;
        }
        Ok(Perm(images))
    }

    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::BadPermutation(format!(
                "{images:?} is not a 1-based image list"
            )));
        }
        Self::from_images(images.iter().map(|&i| i - 1).collect())
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&i| i + 1).collect()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, k: usize) -> usize {
        self.0[k]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(k, &i)| k == i)
    }

    /// Matrix product `self · other`, i.e. `k ↦ self[other[k]]`.
    pub fn compose(&self, other: &Perm) -> Perm {
        assert_eq!(self.len(), other.len());
        Perm(other.0.iter().map(|&k| self.0[k]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.len()];
        for (k, &i) in self.0.iter().enumerate() {
            inv[i] = k;
        }
        Perm(inv)
    }

    pub fn matrix(&self) -> CMat {
        let n = self.len();
        let mut m = zeros(n);
        for (k, &i) in self.0.iter().enumerate() {
            m[(i, k)] = c(1.0, 0.0);
        }
        m
    }

    /// `P m P*`, computed by index shuffling.
    pub fn conj(&self, m: &CMat) -> CMat {
        let n = self.len();
        let mut out = zeros(n);
        for b in 0..n {
            for a in 0..n {
                out[(self.0[a], self.0[b])] = m[(a, b)];
            }
        }
        out
    }

    /// Recognizes a permutation matrix up to `tol` entrywise.
    pub fn from_matrix(m: &CMat, tol: f64) -> Option<Perm> {
        let n = m.nrows();
        if m.ncols() != n {
            return None;
        }
        let mut images = vec![usize::MAX; n];
        for k in 0..n {
            for i in 0..n {
                let z = m[(i, k)];
                if (z - c(1.0, 0.0)).norm() <= tol {
                    if images[k] != usize::MAX {
                        return None;
                    }
                    images[k] = i;
                } else if z.norm() > tol {
                    return None;
                }
            }
        }
        Perm::from_images(images).ok()
    }

    /// Direct sum of permutations acting on consecutive coordinate ranges.
    pub fn direct_sum(parts: &[Perm]) -> Perm {
        let mut images = Vec::new();
        let mut off = 0;
        for p in parts {
            images.extend(p.0.iter().map(|&i| i + off));
            off += p.len();
        }
        Perm(images)
    }
}

/// One permutation per block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPermutation {
    shape: BlockShape,
    perms: Vec<Perm>,
}

impl BlockPermutation {
    pub fn identity(shape: &BlockShape) -> Self {
        BlockPermutation {
            shape: shape.clone(),
            perms: shape.sizes().iter().map(|&n| Perm::identity(n)).collect(),
        }
    }

    pub fn new(shape: &BlockShape, perms: Vec<Perm>) -> Result<Self> {
        if perms.len() != shape.len() {
            return Err(Error::BadPermutation(format!(
                "{} permutations for {} blocks",
                perms.len(),
                shape.len()
            )));
        }
        for (b, p) in perms.iter().enumerate() {
            if p.len() != shape.size(b) {
                return Err(Error::BadPermutation(format!(
                    "permutation {} has length {}, block size is {}",
                    b + 1,
                    p.len(),
                    shape.size(b)
                )));
            }
        }
        Ok(BlockPermutation {
            shape: shape.clone(),
            perms,
        })
    }

    pub fn shape(&self) -> &BlockShape {
        &self.shape
    }

    pub fn perm(&self, b: usize) -> &Perm {
        &self.perms[b]
    }

    pub fn perms(&self) -> &[Perm] {
        &self.perms
    }

    pub fn matrix(&self) -> BlockMatrix {
        BlockMatrix {
            shape: self.shape.clone(),
            blocks: self.perms.iter().map(Perm::matrix).collect(),
        }
    }
}

/// `u · diag(a₁ ⊕…⊕ a₁ (r₁ copies), …, a_l ⊕…⊕ a_l (r_l copies)) · u*`.
pub fn block_embed(a: &BlockMatrix, mult: &[usize], perm: &Perm, target: usize) -> Result<CMat> {
    let shape = a.shape();
    if mult.len() != shape.len() {
        return Err(Error::SizeMismatch(format!(
            "{} multiplicities for {} blocks",
            mult.len(),
            shape.len()
        )));
    }
    let n: usize = shape
        .sizes()
        .iter()
        .zip(mult)
        .map(|(e, r)| e * r)
        .sum();
    if n != target || perm.len() != target {
        return Err(Error::SizeMismatch(format!(
            "multiplicities give {n}, permutation has {}, target is {target}",
            perm.len()
        )));
    }
    let mut parts = Vec::new();
    for (b, &r) in mult.iter().enumerate() {
        for _ in 0..r {
            parts.push(a.block(b));
        }
    }
    Ok(perm.conj(&block_diag(&parts)))
}

/// Principal logarithm data of a unitary `w = q diag(e^{iθ}) q*`.
#[derive(Clone, Debug)]
struct PhaseData {
    q: CMat,
    phases: Vec<f64>,
}

fn unitary_phases(w: &CMat) -> Result<PhaseData> {
    let n = w.nrows();
    if n == 0 {
        return Ok(PhaseData {
            q: zeros(0),
            phases: Vec::new(),
        });
    }
    let schur =
        nalgebra::linalg::Schur::try_new(w.clone(), 1e-15, 10_000).ok_or(Error::SchurFailure)?;
    let (q, t) = schur.unpack();
    let lambdas: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    let phases: Vec<f64> = lambdas.iter().map(|z| z.arg()).collect();
    let d = CMat::from_diagonal(&DVector::from_iterator(
        n,
        phases.iter().map(|&p| Complex64::from_polar(1.0, p)),
    ));
    let residual = norm(&(&q * d * q.adjoint() - w));
    if residual > 1e-6 {
        return Err(Error::NotUnitary { residual });
    }
    Ok(PhaseData { q, phases })
}

fn branch_distance(p: &PhaseData) -> f64 {
    p.phases
        .iter()
        .map(|&th| (Complex64::from_polar(1.0, th) + c(1.0, 0.0)).norm())
        .fold(f64::INFINITY, f64::min)
}

fn phase_exp(p: &PhaseData, s: f64) -> CMat {
    let n = p.phases.len();
    let d = CMat::from_diagonal(&DVector::from_iterator(
        n,
        p.phases.iter().map(|&th| Complex64::from_polar(1.0, s * th)),
    ));
    &p.q * d * p.q.adjoint()
}

/// `u0 · exp(t L)` with `L` the principal logarithm of `u0* u1`.
pub fn unitary_geodesic(u0: &CMat, u1: &CMat, t: f64) -> Result<CMat> {
    let w = u0.adjoint() * u1;
    let p = unitary_phases(&w)?;
    let dist = branch_distance(&p);
    if dist < LOG_BRANCH_GAP {
        return Err(Error::LogBranchFailure { dist });
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    if t == 1.0 {
        return Ok(u1.clone());
    }
    Ok(u0 * phase_exp(&p, t))
}

#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    t1: f64,
    start: CMat,
    end: CMat,
    // None for a constant segment
    log: Option<PhaseData>,
}

impl Segment {
    fn eval(&self, t: f64) -> CMat {
        if t <= self.t0 {
            return self.start.clone();
        }
        if t >= self.t1 {
            return self.end.clone();
        }
        match &self.log {
            None => self.start.clone(),
            Some(p) => {
                let s = (t - self.t0) / (self.t1 - self.t0);
                &self.start * phase_exp(p, s)
            }
        }
    }
}

/// Continuous unitary path on a closed interval: geodesic segments between knots.
#[derive(Clone, Debug)]
pub struct UnitaryPath {
    segs: Vec<Segment>,
    right: Option<CMat>,
}

impl UnitaryPath {
    pub fn constant(lo: f64, hi: f64, u: CMat) -> Self {
        UnitaryPath {
            segs: vec![Segment {
                t0: lo,
                t1: hi,
                start: u.clone(),
                end: u,
                log: None,
            }],
            right: None,
        }
    }

    pub fn geodesic(lo: f64, hi: f64, u0: CMat, u1: CMat) -> Result<Self> {
        Self::through(vec![(lo, u0), (hi, u1)])
    }

    /// Piecewise geodesic through the given knots; segments that would cross
    /// the logarithm branch are split at a phase-halving midpoint.
    pub fn through(knots: Vec<(f64, CMat)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidShape("unitary path without knots".into()));
        }
        if knots.len() == 1 {
            let (t, u) = knots.into_iter().next().unwrap();
            return Ok(Self::constant(t, t, u));
        }
        let mut segs = Vec::new();
        for pair in knots.windows(2) {
            let (t0, u0) = &pair[0];
            let (t1, u1) = &pair[1];
            if t1 < t0 {
                return Err(Error::InvalidShape("unitary path knots out of order".into()));
            }
            push_segments(&mut segs, *t0, *t1, u0, u1)?;
        }
        Ok(UnitaryPath { segs, right: None })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.segs[0].t0, self.segs[self.segs.len() - 1].t1)
    }

    pub fn dim(&self) -> usize {
        self.segs[0].start.nrows()
    }

    /// Segment boundaries, including both domain ends.
    pub fn knot_times(&self) -> Vec<f64> {
        let mut out = vec![self.segs[0].t0];
        out.extend(self.segs.iter().map(|s| s.t1));
        out
    }

    pub fn eval(&self, t: f64) -> CMat {
        let k = self
            .segs
            .iter()
            .position(|s| t <= s.t1)
            .unwrap_or(self.segs.len() - 1);
        let u = self.segs[k].eval(t);
        match &self.right {
            None => u,
            Some(r) => u * r,
        }
    }

    /// Same path on a subinterval of the domain.
    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let mut segs = Vec::new();
        for s in &self.segs {
            let a = s.t0.max(lo);
            let b = s.t1.min(hi);
            if b < a || (b == a && !segs.is_empty()) {
                continue;
            }
            let start = if a == s.t0 { s.start.clone() } else { s.eval(a) };
            let end = if b == s.t1 { s.end.clone() } else { s.eval(b) };
            let log = s.log.as_ref().map(|p| {
                // reparametrize the phases to the shorter interval
                let frac = if s.t1 > s.t0 {
                    (b - a) / (s.t1 - s.t0)
                } else {
                    0.0
                };
                PhaseData {
                    q: p.q.clone(),
                    phases: p.phases.iter().map(|th| th * frac).collect(),
                }
            });
            segs.push(Segment {
                t0: a,
                t1: b,
                start,
                end,
                log,
            });
        }
        if segs.is_empty() {
            let u = self.segs[0].eval(lo);
            segs.push(Segment {
                t0: lo,
                t1: hi,
                start: u.clone(),
                end: u,
                log: None,
            });
        }
        UnitaryPath {
            segs,
            right: self.right.clone(),
        }
    }

    /// Same path with its domain mapped affinely onto `[lo, hi]`.
    pub fn reparametrized(&self, lo: f64, hi: f64) -> Self {
        let (a, b) = self.domain();
        let scale = if b > a { (hi - lo) / (b - a) } else { 0.0 };
        let map = |t: f64| lo + (t - a) * scale;
        let segs = self
            .segs
            .iter()
            .map(|s| Segment {
                t0: map(s.t0),
                t1: map(s.t1),
                ..s.clone()
            })
            .collect();
        UnitaryPath {
            segs,
            right: self.right.clone(),
        }
    }

    /// `t ↦ U(t) · m`.
    pub fn right_mul(&self, m: &CMat) -> Self {
        let right = match &self.right {
            None => m.clone(),
            Some(r) => r * m,
        };
        UnitaryPath {
            segs: self.segs.clone(),
            right: Some(right),
        }
    }

    /// `t ↦ m · U(t)`.
    pub fn left_mul(&self, m: &CMat) -> Self {
        let segs = self
            .segs
            .iter()
            .map(|s| Segment {
                t0: s.t0,
                t1: s.t1,
                start: m * &s.start,
                end: m * &s.end,
                log: s.log.clone(),
            })
            .collect();
        UnitaryPath {
            segs,
            right: self.right.clone(),
        }
    }

    pub fn max_unitarity_defect(&self, ts: &[f64]) -> f64 {
        ts.iter()
            .map(|&t| unitarity_defect(&self.eval(t)))
            .fold(0.0, f64::max)
    }
}

fn push_segments(segs: &mut Vec<Segment>, t0: f64, t1: f64, u0: &CMat, u1: &CMat) -> Result<()> {
    let w = u0.adjoint() * u1;
    let p = unitary_phases(&w)?;
    if branch_distance(&p) >= LOG_BRANCH_GAP {
        let trivial = p.phases.iter().all(|&th| th.abs() < 1e-15);
        segs.push(Segment {
            t0,
            t1,
            start: u0.clone(),
            end: u1.clone(),
            log: if trivial { None } else { Some(p) },
        });
        return Ok(());
    }
    // Halving every phase in (−π, π] moves all of them into (−π/2, π/2].
    let mid = u0 * phase_exp(&p, 0.5);
    let tm = 0.5 * (t0 + t1);
    for (a, b, x, y) in [(t0, tm, u0, &mid), (tm, t1, &mid, u1)] {
        let q = unitary_phases(&(x.adjoint() * y))?;
        let dist = branch_distance(&q);
        if dist < LOG_BRANCH_GAP {
            return Err(Error::LogBranchFailure { dist });
        }
        segs.push(Segment {
            t0: a,
            t1: b,
            start: x.clone(),
            end: y.clone(),
            log: Some(q),
        });
    }
    Ok(())
}

/// Random hermitian matrix with operator norm at most `bound`.
pub fn random_hermitian<R: Rng>(n: usize, bound: f64, rng: &mut R) -> CMat {
    let mut m = zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    let h = (&m + m.adjoint()).scale(0.5);
    let nm = norm(&h);
    if nm > 0.0 {
        let s = bound * rng.random_range(0.2..1.0) / nm;
        h * c(s, 0.0)
    } else {
        h
    }
}

/// Random complex matrix with operator norm at most `bound`.
pub fn random_matrix<R: Rng>(n: usize, bound: f64, rng: &mut R) -> CMat {
    let mut m = zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    let nm = norm(&m);
    if nm > 0.0 {
        m * c(bound * rng.random_range(0.2..1.0) / nm, 0.0)
    } else {
        m
    }
}

/// Random unitary, the Q factor of a random matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let mut m = zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    m.qr().q()
}
