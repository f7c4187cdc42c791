//! One-dimensional NCCW complexes `A(E, F, β₀, β₁)`, their elements and K-theory data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::findim::{
    block_embed, c, eye, op_norm, random_hermitian, random_matrix, BlockMatrix, BlockPermutation,
    BlockShape, CMat, Perm,
};

pub const DEFAULT_GRID: usize = 240;
pub const TAU_BC: f64 = 1e-9;
pub const DEFAULT_KAPPA: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Side {
    Zero,
    One,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Zero => 0,
            Side::One => 1,
        }
    }

    pub fn t(self) -> f64 {
        match self {
            Side::Zero => 0.0,
            Side::One => 1.0,
        }
    }

    pub const BOTH: [Side; 2] = [Side::Zero, Side::One];
}

impl TryFrom<u8> for Side {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Side::Zero),
            1 => Ok(Side::One),
            _ => Err(format!("side must be 0 or 1, got {v}")),
        }
    }
}

impl From<Side> for u8 {
    fn from(s: Side) -> u8 {
        s.index() as u8
    }
}

/// Raw integer presentation as read from JSON. Permutations are 1-based image lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawComplex {
    pub e: Vec<usize>,
    pub f: Vec<usize>,
    pub mult0: Vec<Vec<usize>>,
    pub mult1: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm0: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm1: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpec {
    e: BlockShape,
    f: BlockShape,
    mult: [Vec<Vec<usize>>; 2],
    perm: [BlockPermutation; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KData {
    pub alpha: Vec<Vec<i64>>,
    pub beta: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Neighborhood {
    pub delta: usize,
    pub eps: f64,
    /// F-blocks whose interval `(0, eps)` belongs to the set.
    pub near_zero: Vec<usize>,
    /// F-blocks whose interval `(1 − eps, 1)` belongs to the set.
    pub near_one: Vec<usize>,
}

pub fn build_complex(raw: &RawComplex) -> Result<ComplexSpec> {
    let e = BlockShape::new(raw.e.clone())?;
    let f = BlockShape::new(raw.f.clone())?;
    let perm_of = |p: &Option<Vec<Vec<usize>>>| -> Result<BlockPermutation> {
        match p {
            None => Ok(BlockPermutation::identity(&f)),
            Some(lists) => {
                let perms = lists
                    .iter()
                    .map(|l| Perm::from_one_based(l))
                    .collect::<Result<Vec<_>>>()?;
                BlockPermutation::new(&f, perms)
            }
        }
    };
    let perm0 = perm_of(&raw.perm0)?;
    let perm1 = perm_of(&raw.perm1)?;
    ComplexSpec::new(e, f, raw.mult0.clone(), raw.mult1.clone(), perm0, perm1)
}

impl ComplexSpec {
    pub fn new(
        e: BlockShape,
        f: BlockShape,
        mult0: Vec<Vec<usize>>,
        mult1: Vec<Vec<usize>>,
        perm0: BlockPermutation,
        perm1: BlockPermutation,
    ) -> Result<Self> {
        let (k, l) = (f.len(), e.len());
        for (side, m) in [(0u8, &mult0), (1u8, &mult1)] {
            if m.len() != k || m.iter().any(|row| row.len() != l) {
                return Err(Error::SizeMismatch(format!(
                    "mult{side} must be {k}x{l} (F-blocks by E-blocks)"
                )));
            }
            for (i, row) in m.iter().enumerate() {
                let got: usize = row.iter().zip(e.sizes()).map(|(r, n)| r * n).sum();
                if got != f.size(i) {
                    return Err(Error::NotUnital {
                        block: i,
                        side,
                        expected: f.size(i),
                        got,
                    });
                }
            }
        }
        for j in 0..l {
            if (0..k).all(|i| mult0[i][j] == 0 && mult1[i][j] == 0) {
                return Err(Error::NotInjectiveBeta { block: j });
            }
        }
        for p in [&perm0, &perm1] {
            if p.shape() != &f {
                return Err(Error::BadPermutation(
                    "boundary permutations must match the F-shape".into(),
                ));
            }
        }
        Ok(ComplexSpec {
            e,
            f,
            mult: [mult0, mult1],
            perm: [perm0, perm1],
        })
    }

    pub fn to_raw(&self) -> RawComplex {
        let lists = |p: &BlockPermutation| {
            Some(p.perms().iter().map(Perm::to_one_based).collect::<Vec<_>>())
        };
        RawComplex {
            e: self.e.sizes().to_vec(),
            f: self.f.sizes().to_vec(),
            mult0: self.mult[0].clone(),
            mult1: self.mult[1].clone(),
            perm0: lists(&self.perm[0]),
            perm1: lists(&self.perm[1]),
        }
    }

    /// Same multiplicities with replaced boundary permutations.
    pub fn with_perms(&self, perm0: BlockPermutation, perm1: BlockPermutation) -> Result<Self> {
        Self::new(
            self.e.clone(),
            self.f.clone(),
            self.mult[0].clone(),
            self.mult[1].clone(),
            perm0,
            perm1,
        )
    }

    pub fn e_shape(&self) -> &BlockShape {
        &self.e
    }

    pub fn f_shape(&self) -> &BlockShape {
        &self.f
    }

    /// Number of F-blocks.
    pub fn k(&self) -> usize {
        self.f.len()
    }

    /// Number of E-blocks.
    pub fn l(&self) -> usize {
        self.e.len()
    }

    pub fn mult(&self, side: Side) -> &[Vec<usize>] {
        &self.mult[side.index()]
    }

    pub fn perm(&self, side: Side) -> &BlockPermutation {
        &self.perm[side.index()]
    }

    pub fn beta_block(&self, side: Side, i: usize, a: &BlockMatrix) -> CMat {
        block_embed(
            a,
            &self.mult[side.index()][i],
            self.perm[side.index()].perm(i),
            self.f.size(i),
        )
        .expect("validated complex")
    }

    pub fn beta(&self, side: Side, a: &BlockMatrix) -> BlockMatrix {
        let blocks = (0..self.k()).map(|i| self.beta_block(side, i, a)).collect();
        BlockMatrix::new(self.f.clone(), blocks).expect("validated complex")
    }

    /// E-block indices in the order their copies appear inside `β_side(·)` block `i`
    /// before the permutation is applied.
    pub fn fibre_atoms(&self, i: usize, side: Side) -> Vec<usize> {
        let mut out = Vec::new();
        for (j, &r) in self.mult[side.index()][i].iter().enumerate() {
            out.extend(std::iter::repeat_n(j, r));
        }
        out
    }

    /// Endpoint fibre as delta multiplicities per E-block.
    pub fn endpoint_fibre(&self, i: usize, side: Side) -> Vec<usize> {
        self.mult[side.index()][i].clone()
    }

    pub fn k_matrices(&self) -> KData {
        let conv = |m: &Vec<Vec<usize>>| {
            m.iter()
                .map(|row| row.iter().map(|&x| x as i64).collect())
                .collect()
        };
        KData {
            alpha: conv(&self.mult[0]),
            beta: conv(&self.mult[1]),
        }
    }

    pub fn k1_is_trivial(&self) -> bool {
        let kd = self.k_matrices();
        let d: Vec<Vec<i64>> = kd
            .alpha
            .iter()
            .zip(&kd.beta)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        is_surjective(&d)
    }

    pub fn basis_topology_neighborhood(&self, j: usize, eps: f64) -> Neighborhood {
        let near = |side: Side| {
            (0..self.k())
                .filter(|&i| self.mult[side.index()][i][j] != 0)
                .collect()
        };
        Neighborhood {
            delta: j,
            eps,
            near_zero: near(Side::Zero),
            near_one: near(Side::One),
        }
    }
}

/// Nonzero invariant factors of an integer matrix, via Smith normal form.
pub fn smith_invariants(m: &[Vec<i64>]) -> Vec<i64> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<i128>> = m
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut out = Vec::new();
    for t in 0..rows.min(cols) {
        let Some((pi, pj)) = min_nonzero(&a, t) else {
            break;
        };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let p = a[t][t];
            for i in t + 1..rows {
                let q = a[i][t] / p;
                if q != 0 {
                    for j in t..cols {
                        a[i][j] -= q * a[t][j];
                    }
                }
            }
            for j in t + 1..cols {
                let q = a[t][j] / p;
                if q != 0 {
                    for row in a.iter_mut().skip(t) {
                        row[j] -= q * row[t];
                    }
                }
            }
            let clean = (t + 1..rows).all(|i| a[i][t] == 0) && (t + 1..cols).all(|j| a[t][j] == 0);
            if clean {
                let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % p != 0));
                match bad {
                    None => break,
                    Some(i) => {
                        for j in t..cols {
                            a[t][j] += a[i][j];
                        }
                        continue;
                    }
                }
            }
            // move the smallest entry of row/column t to the pivot
            let mut best = (a[t][t].abs(), t, t);
            for i in t + 1..rows {
                if a[i][t] != 0 && a[i][t].abs() < best.0 {
                    best = (a[i][t].abs(), i, t);
                }
            }
            for j in t + 1..cols {
                if a[t][j] != 0 && a[t][j].abs() < best.0 {
                    best = (a[t][j].abs(), t, j);
                }
            }
            a.swap(t, best.1);
            for row in a.iter_mut() {
                row.swap(t, best.2);
            }
        }
        out.push(a[t][t].unsigned_abs() as i64);
    }
    out
}

fn min_nonzero(a: &[Vec<i128>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(i128, usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, &x) in row.iter().enumerate().skip(t) {
            if x != 0 && best.is_none_or(|b| x.abs() < b.0) {
                best = Some((x.abs(), i, j));
            }
        }
    }
    best.map(|b| (b.1, b.2))
}

/// Whether `d : ℤ^cols → ℤ^rows` is onto.
pub fn is_surjective(d: &[Vec<i64>]) -> bool {
    let inv = smith_invariants(d);
    inv.len() == d.len() && inv.iter().all(|&x| x == 1)
}

/// Values of an element at points of the spectrum.
pub trait Section {
    fn at_point(&self, block: usize, t: f64) -> CMat;
    fn at_delta(&self, j: usize) -> CMat;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    f: Vec<BlockMatrix>,
    e: BlockMatrix,
}

/// Boundary and continuity tolerances for element construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ElementChecks {
    pub tol_bc: f64,
    pub kappa: f64,
}

impl Default for ElementChecks {
    fn default() -> Self {
        ElementChecks {
            tol_bc: TAU_BC,
            kappa: DEFAULT_KAPPA,
        }
    }
}

pub fn make_element(
    spec: &ComplexSpec,
    f_samples: Vec<BlockMatrix>,
    e_part: BlockMatrix,
) -> Result<Element> {
    make_element_with(spec, f_samples, e_part, ElementChecks::default())
}

pub fn make_element_with(
    spec: &ComplexSpec,
    f_samples: Vec<BlockMatrix>,
    e_part: BlockMatrix,
    checks: ElementChecks,
) -> Result<Element> {
    if f_samples.len() < 2 {
        return Err(Error::SizeMismatch("an element needs at least 2 samples".into()));
    }
    if e_part.shape() != spec.e_shape() || f_samples.iter().any(|s| s.shape() != spec.f_shape()) {
        return Err(Error::SpecMismatch("sample shapes do not match the complex".into()));
    }
    let n = f_samples.len() - 1;
    for (side, sample) in [(Side::Zero, &f_samples[0]), (Side::One, &f_samples[n])] {
        let residual = op_norm(&sample.sub(&spec.beta(side, &e_part)));
        if residual > checks.tol_bc {
            return Err(Error::BoundaryMismatch {
                side: side.index() as u8,
                residual,
            });
        }
    }
    for (step, w) in f_samples.windows(2).enumerate() {
        let jump = op_norm(&w[1].sub(&w[0]));
        if jump > checks.kappa / n as f64 + 1e-12 {
            return Err(Error::DiscontinuitySuspected { step, jump });
        }
    }
    Ok(Element {
        f: f_samples,
        e: e_part,
    })
}

impl Element {
    /// Builds without checks; the caller guarantees the boundary conditions.
    pub fn from_parts(f: Vec<BlockMatrix>, e: BlockMatrix) -> Self {
        Element { f, e }
    }

    pub fn unit(spec: &ComplexSpec, grid: usize) -> Self {
        Element {
            f: vec![BlockMatrix::identity(spec.f_shape()); grid + 1],
            e: BlockMatrix::identity(spec.e_shape()),
        }
    }

    pub fn zero(spec: &ComplexSpec, grid: usize) -> Self {
        Element {
            f: vec![BlockMatrix::zeros(spec.f_shape()); grid + 1],
            e: BlockMatrix::zeros(spec.e_shape()),
        }
    }

    pub fn grid(&self) -> usize {
        self.f.len() - 1
    }

    pub fn f_samples(&self) -> &[BlockMatrix] {
        &self.f
    }

    pub fn e_part(&self) -> &BlockMatrix {
        &self.e
    }

    pub fn sample(&self, k: usize) -> &BlockMatrix {
        &self.f[k]
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.grid();
        let x = t.clamp(0.0, 1.0) * n as f64;
        let r = x.round();
        if (x - r).abs() < 1e-9 {
            return (r as usize, 0.0);
        }
        let k = (x.floor() as usize).min(n - 1);
        (k, x - k as f64)
    }

    /// Block `b` at `t`, linearly interpolated between samples.
    pub fn at(&self, b: usize, t: f64) -> CMat {
        let (k, frac) = self.locate(t);
        if frac == 0.0 {
            return self.f[k].block(b).clone();
        }
        self.f[k].block(b) * c(1.0 - frac, 0.0) + self.f[k + 1].block(b) * c(frac, 0.0)
    }

    pub fn value_at(&self, t: f64) -> BlockMatrix {
        let (k, frac) = self.locate(t);
        if frac == 0.0 {
            return self.f[k].clone();
        }
        self.f[k]
            .scale_re(1.0 - frac)
            .add(&self.f[k + 1].scale_re(frac))
    }

    fn zip(&self, o: &Element, g: impl Fn(&BlockMatrix, &BlockMatrix) -> BlockMatrix) -> Element {
        assert_eq!(self.grid(), o.grid(), "element grids differ");
        Element {
            f: self.f.iter().zip(&o.f).map(|(a, b)| g(a, b)).collect(),
            e: g(&self.e, &o.e),
        }
    }

    pub fn mul(&self, o: &Element) -> Element {
        self.zip(o, BlockMatrix::mul)
    }

    pub fn add(&self, o: &Element) -> Element {
        self.zip(o, BlockMatrix::add)
    }

    pub fn sub(&self, o: &Element) -> Element {
        self.zip(o, BlockMatrix::sub)
    }

    pub fn map(&self, g: impl Fn(&BlockMatrix) -> BlockMatrix) -> Element {
        Element {
            f: self.f.iter().map(&g).collect(),
            e: g(&self.e),
        }
    }

    pub fn scale(&self, s: f64) -> Element {
        self.map(|m| m.scale_re(s))
    }

    pub fn adjoint(&self) -> Element {
        self.map(BlockMatrix::adjoint)
    }

    pub fn sup_norm(&self) -> f64 {
        self.f
            .iter()
            .map(op_norm)
            .fold(op_norm(&self.e), f64::max)
    }

    /// Smallest eigenvalue over all samples and the E-part.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for m in self.f.iter().chain(std::iter::once(&self.e)) {
            for b in m.blocks() {
                let ev = crate::findim::eig_sorted(b)?;
                if let Some(&x) = ev.first() {
                    lo = lo.min(x);
                }
            }
        }
        Ok(lo)
    }
}

impl Section for Element {
    fn at_point(&self, block: usize, t: f64) -> CMat {
        self.at(block, t)
    }

    fn at_delta(&self, j: usize) -> CMat {
        self.e.block(j).clone()
    }
}

/// Seeded hermitian element of norm at most one.
pub fn random_element(spec: &ComplexSpec, grid: usize, seed: u64) -> Element {
    random_with(spec, grid, seed, true)
}

/// Seeded element with general (non-hermitian) values, norm at most one.
pub fn random_general_element(spec: &ComplexSpec, grid: usize, seed: u64) -> Element {
    random_with(spec, grid, seed, false)
}

fn random_with(spec: &ComplexSpec, grid: usize, seed: u64, hermitian: bool) -> Element {
    assert!(grid >= 4, "grid too small for random elements");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |n: usize, rng: &mut ChaCha8Rng| {
        if hermitian {
            random_hermitian(n, 1.0, rng)
        } else {
            random_matrix(n, 1.0, rng)
        }
    };
    let e_blocks = spec.e_shape().sizes().iter().map(|&n| draw(n, &mut rng)).collect();
    let e = BlockMatrix::new(spec.e_shape().clone(), e_blocks).expect("shape");
    let mut knots: Vec<(usize, BlockMatrix)> = vec![(0, spec.beta(Side::Zero, &e))];
    let count = rng.random_range(1..=3usize);
    for q in 1..=count {
        let k = grid * q / (count + 1);
        let blocks = spec.f_shape().sizes().iter().map(|&n| draw(n, &mut rng)).collect();
        knots.push((k, BlockMatrix::new(spec.f_shape().clone(), blocks).expect("shape")));
    }
    knots.push((grid, spec.beta(Side::One, &e)));
    let mut f = Vec::with_capacity(grid + 1);
    for w in knots.windows(2) {
        let (k0, a) = (&w[0].0, &w[0].1);
        let (k1, b) = (&w[1].0, &w[1].1);
        for k in *k0..*k1 {
            let s = (k - k0) as f64 / (k1 - k0) as f64;
            f.push(a.scale_re(1.0 - s).add(&b.scale_re(s)));
        }
    }
    f.push(knots.last().unwrap().1.clone());
    Element { f, e }
}

/// Constant-in-t section used for evaluating homomorphisms on unitaries.
pub struct ConstSection<'a> {
    pub f: &'a BlockMatrix,
    pub e: &'a BlockMatrix,
}

impl Section for ConstSection<'_> {
    fn at_point(&self, block: usize, _t: f64) -> CMat {
        self.f.block(block).clone()
    }
    fn at_delta(&self, j: usize) -> CMat {
        self.e.block(j).clone()
    }
}

/// Identity matrix of block `b` in `shape`.
pub fn block_eye(shape: &BlockShape, b: usize) -> CMat {
    eye(shape.size(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::findim::zeros;

    pub(crate) fn z23() -> ComplexSpec {
        build_complex(&RawComplex {
            e: vec![2, 3],
            f: vec![6],
            mult0: vec![vec![3, 0]],
            mult1: vec![vec![0, 2]],
            perm0: None,
            perm1: None,
        })
        .unwrap()
    }

    fn ramp(spec: &ComplexSpec, n: usize) -> (Vec<BlockMatrix>, BlockMatrix) {
        let e = BlockMatrix::new(spec.e_shape().clone(), vec![eye(2), zeros(3)]).unwrap();
        let f = (0..=n)
            .map(|k| {
                BlockMatrix::identity(spec.f_shape()).scale_re(1.0 - k as f64 / n as f64)
            })
            .collect();
        (f, e)
    }

    #[test]
    fn build_examples() {
        z23();
        build_complex(&RawComplex {
            e: vec![1, 1, 1],
            f: vec![2],
            mult0: vec![vec![1, 0, 1]],
            mult1: vec![vec![0, 1, 1]],
            perm0: None,
            perm1: None,
        })
        .unwrap();
        let bad = build_complex(&RawComplex {
            e: vec![1],
            f: vec![1],
            mult0: vec![vec![0]],
            mult1: vec![vec![1]],
            perm0: None,
            perm1: None,
        });
        assert!(matches!(bad, Err(Error::NotUnital { side: 0, .. })));
        let not_inj = build_complex(&RawComplex {
            e: vec![1, 1],
            f: vec![1],
            mult0: vec![vec![1, 0]],
            mult1: vec![vec![1, 0]],
            perm0: None,
            perm1: None,
        });
        assert_eq!(not_inj, Err(Error::NotInjectiveBeta { block: 1 }));
    }

    #[test]
    fn ramp_element_is_valid_and_has_norm_one() {
        let spec = z23();
        let (f, e) = ramp(&spec, 240);
        let el = make_element(&spec, f, e).unwrap();
        assert!((el.sup_norm() - 1.0).abs() < 1e-15);
        assert_eq!(Element::zero(&spec, 10).sup_norm(), 0.0);
        assert_eq!(Element::unit(&spec, 10).sup_norm(), 1.0);
    }

    #[test]
    fn constant_identity_fails_at_one() {
        let spec = z23();
        let e = BlockMatrix::new(spec.e_shape().clone(), vec![eye(2), zeros(3)]).unwrap();
        let f = vec![BlockMatrix::identity(spec.f_shape()); 241];
        assert!(matches!(
            make_element(&spec, f, e),
            Err(Error::BoundaryMismatch { side: 1, .. })
        ));
    }

    #[test]
    fn jump_is_flagged() {
        let spec = z23();
        let (mut f, e) = ramp(&spec, 240);
        f[100] = BlockMatrix::identity(spec.f_shape());
        assert!(matches!(
            make_element(&spec, f, e),
            Err(Error::DiscontinuitySuspected { step: 99, .. })
        ));
    }

    #[test]
    fn k_theory() {
        let spec = z23();
        let kd = spec.k_matrices();
        assert_eq!(kd.alpha, vec![vec![3, 0]]);
        assert_eq!(kd.beta, vec![vec![0, 2]]);
        assert!(spec.k1_is_trivial());
        assert!(!is_surjective(&[vec![0]]));
        assert!(is_surjective(&[vec![1, -1]]));
        assert_eq!(smith_invariants(&[vec![2, 4], vec![6, 8]]), vec![2, 4]);
        assert_eq!(smith_invariants(&[vec![0, 0]]), Vec::<i64>::new());
    }

    #[test]
    fn fibres_and_neighborhoods() {
        let spec = z23();
        assert_eq!(spec.endpoint_fibre(0, Side::Zero), vec![3, 0]);
        assert_eq!(spec.endpoint_fibre(0, Side::One), vec![0, 2]);
        assert_eq!(spec.fibre_atoms(0, Side::One), vec![1, 1]);
        let n = spec.basis_topology_neighborhood(0, 0.1);
        assert_eq!((n.near_zero, n.near_one), (vec![0], vec![]));
        let n = spec.basis_topology_neighborhood(1, 0.1);
        assert_eq!((n.near_zero, n.near_one), (vec![], vec![0]));
    }

    #[test]
    fn random_elements_are_deterministic_and_valid() {
        let spec = z23();
        let a = random_element(&spec, 240, 5);
        assert_eq!(a, random_element(&spec, 240, 5));
        let again = make_element(&spec, a.f_samples().to_vec(), a.e_part().clone()).unwrap();
        assert_eq!(again, a);
        assert!(a.sup_norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn interpolation_between_samples() {
        let spec = z23();
        let (f, e) = ramp(&spec, 4);
        let el = make_element_with(&spec, f, e, ElementChecks { tol_bc: 1e-9, kappa: 50.0 }).unwrap();
        let v = el.at(0, 0.375);
        assert!((v[(0, 0)].re - 0.625).abs() < 1e-14);
    }
}
