//! The canonical diagonal, its conditional expectation, normalizers, and the
//! block rebasing that makes connecting maps carry diagonals into diagonals.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complex::{make_element, random_element, random_general_element, ComplexSpec, Element, Section, Side};
use crate::error::{Error, Result};
use crate::findim::{
    block_diag, c, eye, norm, BlockMatrix, BlockPermutation, BlockShape, CMat, Perm, UnitaryPath,
};
use crate::homspec::HomToMatrix;
use crate::standard::{ComplexDPair, Interval, StandardMapToComplex, StandardMapToMatrix, ThetaPiece};
use crate::testfn::{build_h_tilde, HMode, Variant};

/// Tolerance for recognizing permutation matrices among computed unitaries.
const PERM_TOL: f64 = 1e-8;

pub fn is_diagonal_member(el: &Element, tol: f64) -> bool {
    el.f_samples()
        .iter()
        .chain(std::iter::once(el.e_part()))
        .all(|m| m.off_diag_max() <= tol)
}

/// Fibrewise diagonal truncation.
pub fn expectation(spec: &ComplexSpec, el: &Element) -> Result<Element> {
    let out = el.map(BlockMatrix::diagonal_part);
    let e = out.e_part();
    let n = out.grid();
    let mut residual: f64 = 0.0;
    for (side, k) in [(Side::Zero, 0), (Side::One, n)] {
        residual = residual.max(out.sample(k).max_entry_diff(&spec.beta(side, e)));
    }
    if residual > 1e-9 {
        return Err(Error::BoundaryBroken { residual });
    }
    Ok(out)
}

/// `el · b · el*` and `el* · b · el` are diagonal for every probe `b`.
pub fn is_normalizer(el: &Element, probes: &[Element], tol: f64) -> bool {
    let adj = el.adjoint();
    probes.iter().all(|b| {
        is_diagonal_member(&el.mul(b).mul(&adj), tol) && is_diagonal_member(&adj.mul(b).mul(el), tol)
    })
}

/// Largest second-largest modulus over rows and columns; zero exactly for
/// generalized permutation patterns, which are the fibrewise normalizers.
pub fn monomial_defect(m: &CMat) -> f64 {
    let second = |v: Vec<f64>| {
        let mut v = v;
        v.sort_by(|a, b| b.total_cmp(a));
        v.get(1).copied().unwrap_or(0.0)
    };
    let mut worst: f64 = 0.0;
    for r in 0..m.nrows() {
        worst = worst.max(second((0..m.ncols()).map(|c| m[(r, c)].norm()).collect()));
    }
    for c in 0..m.ncols() {
        worst = worst.max(second((0..m.nrows()).map(|r| m[(r, c)].norm()).collect()));
    }
    worst
}

fn element_monomial_defect(el: &Element) -> f64 {
    el.f_samples()
        .iter()
        .chain(std::iter::once(el.e_part()))
        .flat_map(|m| m.blocks().iter().map(monomial_defect))
        .fold(0.0, f64::max)
}

fn element_off_diag(el: &Element) -> f64 {
    el.f_samples()
        .iter()
        .chain(std::iter::once(el.e_part()))
        .map(BlockMatrix::off_diag_max)
        .fold(0.0, f64::max)
}

fn sup_diff(a: &Element, b: &Element) -> f64 {
    a.sub(b).sup_norm()
}

/// Diagonal `H̃(1/4)` variants plus the unit.
pub fn diagonal_probes(spec: &ComplexSpec, grid: usize) -> Result<Vec<Element>> {
    let mut out = vec![Element::unit(spec, grid)];
    for t in build_h_tilde(spec, grid, 4, HMode::Contiguous)? {
        if t.is_diagonal() {
            out.push(t.element(spec, grid, Variant::Raw)?);
        }
    }
    Ok(out)
}

fn cyclic(n: usize, shift: usize) -> Perm {
    Perm::from_images((0..n).map(|k| (k + shift) % n).collect()).expect("cyclic shift")
}

/// Generalized-permutation probes: ramps `β₀(a) → 0 → β₁(a)` for permutation
/// E-parts `a`, and permutations of the F-blocks under an interior tent.
pub fn normalizer_probes(spec: &ComplexSpec, grid: usize, cap: usize) -> Result<Vec<Element>> {
    let mut out = Vec::new();
    let e_shape = spec.e_shape();
    let mut e_choices: Vec<BlockMatrix> = Vec::new();
    for j in 0..spec.l() {
        if e_shape.size(j) > 1 {
            let blocks = (0..spec.l())
                .map(|r| if r == j { cyclic(e_shape.size(r), 1).matrix() } else { eye(e_shape.size(r)) })
                .collect();
            e_choices.push(BlockMatrix::new(e_shape.clone(), blocks)?);
        }
    }
    let all = e_shape.sizes().iter().map(|&n| cyclic(n, 1).matrix()).collect();
    e_choices.push(BlockMatrix::new(e_shape.clone(), all)?);
    for a in e_choices {
        let b0 = spec.beta(Side::Zero, &a);
        let b1 = spec.beta(Side::One, &a);
        let f = (0..=grid)
            .map(|k| {
                let t = k as f64 / grid as f64;
                b0.scale_re((1.0 - 2.0 * t).max(0.0)).add(&b1.scale_re((2.0 * t - 1.0).max(0.0)))
            })
            .collect();
        out.push(make_element(spec, f, a)?);
    }
    let f_shape = spec.f_shape();
    'outer: for i in 0..spec.k() {
        let n = f_shape.size(i);
        for p in 0..n {
            for q in p + 1..n {
                if out.len() >= cap {
                    break 'outer;
                }
                let mut img: Vec<usize> = (0..n).collect();
                img.swap(p, q);
                let tr = Perm::from_images(img)?.matrix();
                let f = (0..=grid)
                    .map(|k| {
                        let t = k as f64 / grid as f64;
                        let tent = (1.0 - (4.0 * t - 2.0).abs()).max(0.0);
                        let mut m = BlockMatrix::zeros(f_shape);
                        *m.block_mut(i) = &tr * c(tent, 0.0);
                        m
                    })
                    .collect();
                out.push(make_element(spec, f, BlockMatrix::zeros(e_shape))?);
            }
        }
    }
    out.truncate(cap.max(1));
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub hypothesis: String,
    pub pass: bool,
    pub worst_residual: f64,
    /// Index of the worst probe, when the check failed.
    pub witness: Option<usize>,
    #[serde(skip)]
    pub witness_element: Option<Element>,
}

fn hypothesis(name: &str, residuals: Vec<(f64, Element)>, tol: f64) -> HypothesisReport {
    let mut worst = 0.0;
    let mut at = None;
    for (k, (r, _)) in residuals.iter().enumerate() {
        if *r > worst || at.is_none() {
            worst = *r;
            at = Some(k);
        }
    }
    let pass = worst <= tol;
    HypothesisReport {
        hypothesis: name.into(),
        pass,
        worst_residual: worst,
        witness: if pass { None } else { at },
        witness_element: if pass { None } else { at.map(|k| residuals[k].1.clone()) },
    }
}

/// A connecting map together with its D-pair.
#[derive(Clone, Debug)]
pub struct StagePair {
    pub map: StandardMapToComplex,
    pub dpair: ComplexDPair,
}

#[derive(Clone, Debug, Serialize)]
pub struct PreservationReport {
    pub hypotheses: Vec<HypothesisReport>,
}

impl PreservationReport {
    pub fn all_pass(&self) -> bool {
        self.hypotheses.iter().all(|h| h.pass)
    }
}

/// The three inductive-limit hypotheses, checked on probe families.
pub fn check_diagonal_preservation(map: &StandardMapToComplex, grid: usize, tol: f64, seed: u64) -> Result<PreservationReport> {
    let src = &map.source;
    let diag = diagonal_probes(src, grid)?;
    let norms = normalizer_probes(src, grid, 24)?;
    let images = |xs: &[Element]| xs.iter().map(|x| map.apply(x, grid)).collect::<Vec<_>>();
    let h1 = hypothesis(
        "diagonal",
        images(&diag).into_iter().zip(&diag).map(|(y, x)| (element_off_diag(&y), x.clone())).collect(),
        tol,
    );
    let h2 = hypothesis(
        "normalizer",
        images(&norms).into_iter().zip(&norms).map(|(y, x)| (element_monomial_defect(&y), x.clone())).collect(),
        tol,
    );
    let mut probes: Vec<Element> = (0..6).map(|s| random_general_element(src, grid, seed + s)).collect();
    probes.extend(diag.iter().take(8).cloned());
    probes.extend(norms.iter().take(8).cloned());
    let mut res = Vec::new();
    for x in probes {
        let lhs = expectation(&map.target, &map.apply(&x, grid))?;
        let rhs = map.apply(&expectation(src, &x)?, grid);
        res.push((sup_diff(&lhs, &rhs), x));
    }
    let h3 = hypothesis("expectation", res, tol);
    Ok(PreservationReport { hypotheses: vec![h1, h2, h3] })
}

/// Unitary-valued function on `[0,1]` with values in `F_n`, built recursively:
/// `V₁ = 1` and `V_{n+1} = C_{n+1} · θₙ(Vₙ, I) · Z_{n+1}*`.
#[derive(Clone, Debug)]
pub enum VPath {
    Identity(BlockShape),
    Stage(Arc<VStage>),
}

#[derive(Clone, Debug)]
pub struct VStage {
    pub source: ComplexSpec,
    pub prev: VPath,
    pub theta: Vec<Vec<ThetaPiece>>,
    pub c: Vec<Vec<Perm>>,
    pub z: Vec<UnitaryPath>,
}

fn piece_index(pieces: &[ThetaPiece], t: f64) -> usize {
    pieces.iter().rposition(|p| p.lo <= t).unwrap_or(0)
}

/// `θ(V, I)` on a single piece at `t`, using the piece's own form even at its right end.
fn theta_v_on(source: &ComplexSpec, prev: &VPath, p: &ThetaPiece, t: f64) -> CMat {
    let s = VSection { v: prev, e: source.e_shape() };
    p.q.conj(&p.form_at(t).eval(source, &s))
}

impl VPath {
    pub fn eval(&self, block: usize, t: f64) -> CMat {
        match self {
            VPath::Identity(shape) => eye(shape.size(block)),
            VPath::Stage(st) => {
                let pieces = &st.theta[block];
                let m = piece_index(pieces, t);
                let ct = st.c[block][m].matrix() * theta_v_on(&st.source, &st.prev, &pieces[m], t);
                ct * st.z[block].eval(t).adjoint()
            }
        }
    }

    pub fn shape_len(&self) -> usize {
        match self {
            VPath::Identity(s) => s.len(),
            VPath::Stage(st) => st.z.len(),
        }
    }
}

/// `(V, I)` as a section: `V(t)` on F-blocks, identities on E-blocks.
pub struct VSection<'a> {
    pub v: &'a VPath,
    pub e: &'a BlockShape,
}

impl Section for VSection<'_> {
    fn at_point(&self, block: usize, t: f64) -> CMat {
        self.v.eval(block, t)
    }
    fn at_delta(&self, j: usize) -> CMat {
        eye(self.e.size(j))
    }
}

/// `(V f V*, a)`: the image of `(f, a) ∈ Aₙ` in `Āₙ`.
pub struct Conjugated<'a, S: Section + ?Sized> {
    pub x: &'a S,
    pub v: &'a VPath,
}

impl<S: Section + ?Sized> Section for Conjugated<'_, S> {
    fn at_point(&self, block: usize, t: f64) -> CMat {
        let v = self.v.eval(block, t);
        &v * self.x.at_point(block, t) * v.adjoint()
    }
    fn at_delta(&self, j: usize) -> CMat {
        self.x.at_delta(j)
    }
}

/// `A(E, F, V(0)β₀V(0)*, V(1)β₁V(1)*)`.
pub fn rebased_complex(spec: &ComplexSpec, v: &VPath) -> Result<ComplexSpec> {
    let mut perms = Vec::new();
    for side in Side::BOTH {
        let mut ps = Vec::new();
        for i in 0..spec.k() {
            let vt = v.eval(i, side.t());
            let pv = Perm::from_matrix(&vt, PERM_TOL).ok_or_else(|| {
                Error::InvalidMap(format!("V is not a permutation at t = {} on block {}", side.t(), i + 1))
            })?;
            ps.push(pv.compose(spec.perm(side).perm(i)));
        }
        perms.push(BlockPermutation::new(spec.f_shape(), ps)?);
    }
    let p1 = perms.pop().unwrap();
    let p0 = perms.pop().unwrap();
    spec.with_perms(p0, p1)
}

/// Interior spectrum points of a map at `t = 0`, `t = 1` and on its E′-part,
/// ignoring multiplicity and index.
pub fn anchor_points(map: &StandardMapToComplex) -> Vec<f64> {
    let spec = &map.source;
    let mut pts = Vec::new();
    for comp in &map.components {
        for t in [0.0, 1.0] {
            for v in comp.form_at(t).spectrum(spec).interior_points {
                pts.extend(v);
            }
        }
    }
    for h in &map.e_maps {
        for v in h.spectrum(spec).interior_points {
            pts.extend(v);
        }
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

#[derive(Clone, Debug)]
pub struct RebasedStage {
    pub v_source: VPath,
    pub v_target: VPath,
    pub c: Vec<Vec<Perm>>,
    pub z: Vec<UnitaryPath>,
    pub anchors: Vec<f64>,
    pub rebased_source: ComplexSpec,
    pub rebased_target: ComplexSpec,
    pub rebased_map: StandardMapToComplex,
    pub report: RebaseReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct RebaseReport {
    /// `max ‖V_{n+1}(s) − 1‖` over the anchors.
    pub anchor_residual: f64,
    /// Largest jump of `V_{n+1}` across the breakpoints of the stage.
    pub max_v_jump: f64,
    /// `V_{n+1} = C θ(Vₙ, I) Z*` checked on the grid against an independent product.
    pub recursion_residual: f64,
    pub coherence_residual: f64,
    pub square_residual: f64,
}

/// One step of the rebasing recursion. `prev` supplies `Vₙ` (default `1`);
/// `anchors` are the next stage's `Ω(0) ∪ Ω(1) ∪ Σ`, where `V_{n+1}` must be `1`.
pub fn rebase_blocks(
    stage: &StagePair,
    prev: Option<&RebasedStage>,
    anchors: &[f64],
    grid: usize,
    seed: u64,
) -> Result<RebasedStage> {
    let map = &stage.map;
    let src = &map.source;
    let tgt = &map.target;
    let v_n = match prev {
        Some(p) => p.v_target.clone(),
        None => VPath::Identity(src.f_shape().clone()),
    };
    if v_n.shape_len() != src.k() {
        return Err(Error::SpecMismatch("previous stage does not match the source".into()));
    }
    let step = 1.0 / grid as f64;
    for &s in anchors {
        if s < step || s > 1.0 - step {
            return Err(Error::InterpolationConflict(format!(
                "anchor {s} lies within one grid step of an endpoint prescription"
            )));
        }
    }
    let mut cs = Vec::new();
    let mut zs = Vec::new();
    let mut thetas = Vec::new();
    for (i, dp) in stage.dpair.components.iter().enumerate() {
        let pieces = &dp.theta;
        let mut c_list = vec![Perm::identity(tgt.f_shape().size(i))];
        for m in 0..pieces.len() - 1 {
            let z = pieces[m].hi;
            let l = theta_v_on(src, &v_n, &pieces[m], z);
            let r = theta_v_on(src, &v_n, &pieces[m + 1], z);
            let fix = Perm::from_matrix(&(l * r.adjoint()), PERM_TOL).ok_or_else(|| {
                Error::InvalidMap(format!("breakpoint {} of component {} needs a non-permutation correction", m + 1, i + 1))
            })?;
            let next = c_list[m].compose(&fix);
            c_list.push(next);
        }
        let ct = |t: f64| {
            let m = piece_index(pieces, t);
            c_list[m].matrix() * theta_v_on(src, &v_n, &pieces[m], t)
        };
        let mut knots = vec![(0.0, dp.r_at(0.0))];
        knots.extend(anchors.iter().map(|&s| (s, ct(s))));
        knots.push((1.0, dp.r_at(1.0)));
        zs.push(UnitaryPath::through(knots)?);
        cs.push(c_list);
        thetas.push(pieces.clone());
    }
    let v_next = VPath::Stage(Arc::new(VStage {
        source: src.clone(),
        prev: v_n.clone(),
        theta: thetas,
        c: cs.clone(),
        z: zs.clone(),
    }));
    let rebased_source = rebased_complex(src, &v_n)?;
    let rebased_target = rebased_complex(tgt, &v_next)?;

    // ψ̂: θ̄ = C θ C* on F′, γ̄ = γ(V* · V, ·) on E′
    let mut comps = Vec::new();
    for (i, dp) in stage.dpair.components.iter().enumerate() {
        let intervals = dp
            .theta
            .iter()
            .enumerate()
            .map(|(m, p)| Interval {
                lo: p.lo,
                hi: p.hi,
                paths: p.paths.clone(),
                pad: p.pad,
                u: UnitaryPath::constant(p.lo, p.hi, cs[i][m].compose(&p.q).matrix()),
            })
            .collect();
        comps.push(StandardMapToMatrix::new(&rebased_source, intervals)?);
    }
    let mut e_maps = Vec::new();
    for h in &map.e_maps {
        let form = h.form();
        let parts: Vec<CMat> = form
            .labels
            .iter()
            .map(|l| l.eval(&VSection { v: &v_n, e: src.e_shape() }).adjoint())
            .chain(std::iter::once(eye(form.pad)))
            .collect();
        let refs: Vec<&CMat> = parts.iter().collect();
        e_maps.push(HomToMatrix { u: &h.u * block_diag(&refs), ..h.clone() });
    }
    let rebased_map = StandardMapToComplex::new(rebased_source.clone(), rebased_target.clone(), comps, e_maps)?;

    // checks
    let mut anchor_residual: f64 = 0.0;
    for &s in anchors {
        for i in 0..tgt.k() {
            anchor_residual = anchor_residual.max(norm(&(v_next.eval(i, s) - eye(tgt.f_shape().size(i)))));
        }
    }
    let mut max_v_jump: f64 = 0.0;
    let mut recursion_residual: f64 = 0.0;
    if let VPath::Stage(st) = &v_next {
        for i in 0..tgt.k() {
            let pieces = &st.theta[i];
            for m in 0..pieces.len() - 1 {
                let z = pieces[m].hi;
                let left = cs[i][m].matrix() * theta_v_on(src, &v_n, &pieces[m], z) * st.z[i].eval(z).adjoint();
                max_v_jump = max_v_jump.max(norm(&(left - v_next.eval(i, z))));
            }
            for k in 0..=grid {
                let t = k as f64 / grid as f64;
                let m = piece_index(pieces, t);
                let p = &pieces[m];
                // independent product: evaluate the form block by block
                let mut blocks = Vec::new();
                for l in &p.form_at(t).labels {
                    blocks.push(l.eval(&VSection { v: &v_n, e: src.e_shape() }));
                }
                blocks.push(eye(p.pad));
                let refs: Vec<&CMat> = blocks.iter().collect();
                let q = p.q.matrix();
                let direct = cs[i][m].matrix() * &q * block_diag(&refs) * q.adjoint() * st.z[i].eval(t).adjoint();
                recursion_residual = recursion_residual.max(norm(&(direct - v_next.eval(i, t))));
                let vt = v_next.eval(i, t);
                recursion_residual = recursion_residual.max(norm(&(&vt * vt.adjoint() - eye(vt.nrows()))));
            }
        }
    }
    let probes: Vec<Element> = (0..4).map(|s| random_element(&rebased_source, grid, seed + 100 + s)).collect();
    let coherence_residual = rebased_map.coherence_residual(&probes);
    let square_residual = commuting_square_residual(stage, &v_n, &v_next, &zs, &rebased_map, grid, 20, seed)?;
    Ok(RebasedStage {
        v_source: v_n,
        v_target: v_next,
        c: cs,
        z: zs,
        anchors: anchors.to_vec(),
        rebased_source,
        rebased_target,
        rebased_map,
        report: RebaseReport {
            anchor_residual,
            max_v_jump,
            recursion_residual,
            coherence_residual,
            square_residual,
        },
    })
}

/// `(Ad V_{n+1} ⊕ id) ∘ ψ̄ₙ` against `ψ̂ₙ ∘ (Ad Vₙ ⊕ id)` on random elements of `Aₙ`.
#[allow(clippy::too_many_arguments)]
fn commuting_square_residual(
    stage: &StagePair,
    v_n: &VPath,
    v_next: &VPath,
    z: &[UnitaryPath],
    hat: &StandardMapToComplex,
    grid: usize,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    let map = &stage.map;
    let src = &map.source;
    let mut worst: f64 = 0.0;
    for s in 0..trials {
        let x = random_general_element(src, grid, seed + s);
        let y = Conjugated { x: &x, v: v_n };
        for (i, dp) in stage.dpair.components.iter().enumerate() {
            for k in 0..=grid {
                let t = k as f64 / grid as f64;
                let zt = z[i].eval(t);
                let vt = v_next.eval(i, t);
                let top = &vt * &zt * dp.theta_at(src, t, &x) * zt.adjoint() * vt.adjoint();
                let bottom = hat.components[i].eval(&hat.source, t, &y);
                worst = worst.max(norm(&(top - bottom)));
            }
        }
        for (g, gb) in map.e_maps.iter().zip(&hat.e_maps) {
            worst = worst.max(norm(&(g.eval(src, &x) - gb.eval(&hat.source, &y))));
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct CartanReport {
    /// Commutant of the diagonal probes at interior fibres is diagonal.
    pub commutant: HypothesisReport,
    pub faithfulness: HypothesisReport,
    /// `(block, t, rank, f_i²)` for the normalizer span at interior fibres.
    pub span_ranks: Vec<(usize, f64, usize, usize)>,
    pub pass: bool,
}

/// Rank of the span, via the Gram matrix `Σ v v*`; products of monomial
/// matrices are sparse, so only nonzero entries are accumulated.
fn numeric_rank(mats: impl IntoIterator<Item = CMat>, dim: usize) -> usize {
    let mut g = DMatrix::<num_complex::Complex64>::zeros(dim, dim);
    let mut any = false;
    for m in mats {
        let nz: Vec<(usize, num_complex::Complex64)> =
            m.iter().enumerate().filter(|(_, z)| z.norm() > 0.0).map(|(k, z)| (k, *z)).collect();
        for &(a, x) in &nz {
            for &(b, y) in &nz {
                g[(a, b)] += x * y.conj();
            }
        }
        any |= !nz.is_empty();
    }
    if !any {
        return 0;
    }
    let ev = nalgebra::SymmetricEigen::new(g).eigenvalues;
    let top = ev.iter().cloned().fold(0.0, f64::max);
    ev.iter().filter(|&&x| x > top * 1e-10).count()
}

/// Fibrewise checks that the canonical diagonal is a Cartan subalgebra at grid scale.
pub fn verify_cartan_sample(spec: &ComplexSpec, grid: usize, trials: usize, seed: u64) -> Result<CartanReport> {
    let diag = diagonal_probes(spec, grid)?;
    let norms = normalizer_probes(spec, grid, 256)?;
    let fibres = [0.25, 0.5, 0.75];

    // commutant: nullspace of X ↦ (X d − d X)_d over the probe values at each fibre
    let mut com = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..spec.k() {
        let n = spec.f_shape().size(i);
        for &t in &fibres {
            let ds: Vec<CMat> = diag.iter().map(|x| x.at(i, t)).filter(|d| norm(d) > 1e-12).collect();
            // random combinations: their commutant contains that of the probes, so a
            // diagonal answer for the combinations is a diagonal answer for the probes
            let combos: Vec<CMat> = (0..3)
                .map(|_| {
                    ds.iter()
                        .fold(CMat::zeros(n, n), |acc, d| acc + d * c(rng.random_range(0.5..1.5), 0.0))
                })
                .collect();
            let mut k = DMatrix::<num_complex::Complex64>::zeros(n * n, n * n);
            // K = Σ A*A with A(X) = X d − d X and A*(Y) = Y d* − d* Y, column by column
            for col in 0..n * n {
                let mut x = CMat::zeros(n, n);
                x[(col % n, col / n)] = c(1.0, 0.0);
                let mut kx = CMat::zeros(n, n);
                for d in &combos {
                    let ax = &x * d - d * &x;
                    let da = d.adjoint();
                    kx += &ax * &da - &da * &ax;
                }
                k.set_column(col, &nalgebra::DVector::from_column_slice(kx.as_slice()));
            }
            let se = nalgebra::SymmetricEigen::new(k);
            let mut basis = Vec::new();
            for (idx, &ev) in se.eigenvalues.iter().enumerate() {
                if ev.abs() < 1e-9 {
                    basis.push(se.eigenvectors.column(idx).into_owned());
                }
            }
            let mut worst: f64 = 0.0;
            for _ in 0..trials.max(1) {
                let mut v = nalgebra::DVector::<num_complex::Complex64>::zeros(n * n);
                for b in &basis {
                    let w = crate::findim::random_matrix(1, 1.0, &mut rng)[(0, 0)];
                    v += b * w;
                }
                let x = CMat::from_column_slice(n, n, v.as_slice());
                worst = worst.max(crate::findim::off_diag_max(&x));
            }
            let witness = Element::unit(spec, grid);
            com.push((worst.max(if basis.len() > n { 1.0 } else { 0.0 }), witness));
        }
    }
    let commutant = hypothesis("commutant", com, 1e-8);

    // faithfulness: P(x*x) = 0 ⟹ x = 0, and the bound ‖x‖² ≤ f_max ‖P(x*x)‖
    let fmax = spec.f_shape().sizes().iter().chain(spec.e_shape().sizes()).copied().max().unwrap_or(1) as f64;
    let mut faith = Vec::new();
    let mut candidates: Vec<Element> = (0..trials).map(|s| random_general_element(spec, grid, seed + s as u64)).collect();
    candidates.push(Element::zero(spec, grid));
    for x in candidates {
        let p = expectation(spec, &x.adjoint().mul(&x))?;
        let pn = p.sup_norm();
        let xn = x.sup_norm();
        let implication = if pn < 1e-12 && xn >= 1e-6 { 1.0 } else { 0.0 };
        let bound = (xn * xn - fmax * pn - 1e-12).max(0.0);
        faith.push((implication + bound, x));
    }
    let faithfulness = hypothesis("faithfulness", faith, 0.0);

    // span of {d, n, n d, d n, n n′} at interior fibres reaches every matrix unit
    let mut span_ranks = Vec::new();
    for i in 0..spec.k() {
        let n = spec.f_shape().size(i);
        let t = 0.5;
        let ds: Vec<CMat> = diag.iter().map(|x| x.at(i, t)).filter(|d| norm(d) > 1e-12).collect();
        let ns: Vec<CMat> = norms.iter().map(|x| x.at(i, t)).filter(|d| norm(d) > 1e-12).collect();
        let mixed = ns.iter().flat_map(|a| ds.iter().flat_map(move |d| [a * d, d * a]));
        let pairs = ns.iter().flat_map(|a| ns.iter().map(move |b| a * b));
        let all = ds.iter().cloned().chain(ns.iter().cloned()).chain(mixed).chain(pairs);
        let rank = numeric_rank(all, n * n);
        span_ranks.push((i, t, rank, n * n));
    }
    let pass = commutant.pass && faithfulness.pass && span_ranks.iter().all(|r| r.2 == r.3);
    Ok(CartanReport { commutant, faithfulness, span_ranks, pass })
}

/// Positive check used by tests: `P` maps positive elements to positive elements.
pub fn expectation_min_eigenvalue(spec: &ComplexSpec, x: &Element) -> Result<f64> {
    expectation(spec, x)?.min_eigenvalue()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{example_complex, stage2_map, z23_z25_map, z_pq};
    use crate::standard::{extract_complex_d_pair, rebase_via_theta};
    use crate::testfn::TestKind;

    fn rebased_stage(map: &StandardMapToComplex) -> StagePair {
        let dp = extract_complex_d_pair(map).unwrap();
        let rb = rebase_via_theta(map, &dp).unwrap();
        StagePair { map: rb.psi, dpair: rb.dpair }
    }

    #[test]
    fn diagonal_membership_of_probes() {
        let spec = z_pq(2, 3);
        assert!(is_diagonal_member(&Element::unit(&spec, 60), 0.0));
        let tilde = build_h_tilde(&spec, 60, 4, HMode::Contiguous).unwrap();
        let t2 = tilde.iter().find(|t| matches!(t.kind, TestKind::Type2(_)) && t.is_diagonal()).unwrap();
        assert!(is_diagonal_member(&t2.element(&spec, 60, Variant::Raw).unwrap(), 1e-15));
        let off = tilde.iter().find(|t| matches!(t.kind, TestKind::Type2(_)) && !t.is_diagonal()).unwrap();
        let x = off.element(&spec, 60, Variant::Raw).unwrap();
        assert!(!is_diagonal_member(&x, 1e-12));
        assert_eq!(expectation(&spec, &x).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn expectation_is_idempotent_contractive_positive() {
        for spec in [z_pq(2, 3), example_complex()] {
            for s in 0..10 {
                let x = random_general_element(&spec, 60, s);
                let p = expectation(&spec, &x).unwrap();
                assert_eq!(expectation(&spec, &p).unwrap(), p);
                assert!(p.sup_norm() <= x.sup_norm() + 1e-9);
                let pos = x.adjoint().mul(&x);
                assert!(expectation(&spec, &pos).unwrap().min_eigenvalue().unwrap() >= -1e-12);
            }
            let u = Element::unit(&spec, 60);
            assert_eq!(expectation(&spec, &u).unwrap(), u);
        }
    }

    #[test]
    fn normalizer_examples() {
        let spec = z_pq(2, 3);
        let probes = diagonal_probes(&spec, 60).unwrap();
        let d = probes[3].clone();
        assert!(is_normalizer(&d, &probes, 1e-12));
        for n in normalizer_probes(&spec, 60, 8).unwrap() {
            assert!(is_normalizer(&n, &probes, 1e-12));
        }
        // a dense 2x2 rotation in one fibre is not a normalizer
        let mut g = eye(6);
        let r = 0.5f64.sqrt();
        g[(0, 0)] = c(r, 0.0);
        g[(0, 1)] = c(-r, 0.0);
        g[(1, 0)] = c(r, 0.0);
        g[(1, 1)] = c(r, 0.0);
        let f = (0..=60)
            .map(|k| {
                let t = k as f64 / 60.0;
                let tent = (1.0 - (4.0 * t - 2.0).abs()).max(0.0);
                BlockMatrix::new(spec.f_shape().clone(), vec![&g * c(tent, 0.0)]).unwrap()
            })
            .collect();
        let x = make_element(&spec, f, BlockMatrix::zeros(spec.e_shape())).unwrap();
        assert!(!is_normalizer(&x, &probes, 1e-6));
        assert!(monomial_defect(&g) > 0.7);
    }

    #[test]
    fn generic_conjugation_breaks_diagonality() {
        let map = z23_z25_map(Some(3));
        let rep = check_diagonal_preservation(&map, 60, 1e-6, 1).unwrap();
        assert!(!rep.hypotheses[0].pass);
        assert!(rep.hypotheses[0].witness_element.is_some());
    }

    #[test]
    fn two_stage_chain_preserves_diagonals() {
        let s1 = rebased_stage(&z23_z25_map(Some(3)));
        let s2 = rebased_stage(&stage2_map(11));
        let anchors = anchor_points(&s2.map);
        assert_eq!(anchors, vec![0.5]);
        let r1 = rebase_blocks(&s1, None, &anchors, 60, 5).unwrap();
        let r2 = rebase_blocks(&s2, Some(&r1), &[], 60, 6).unwrap();
        for r in [&r1, &r2] {
            assert!(r.report.anchor_residual < 1e-9, "{:?}", r.report);
            assert!(r.report.max_v_jump < 1e-9, "{:?}", r.report);
            assert!(r.report.recursion_residual < 1e-9, "{:?}", r.report);
            assert!(r.report.coherence_residual < 1e-9, "{:?}", r.report);
            assert!(r.report.square_residual < 1e-6, "{:?}", r.report);
            let rep = check_diagonal_preservation(&r.rebased_map, 60, 1e-6, 2).unwrap();
            assert!(rep.all_pass(), "{rep:?}");
        }
        assert_eq!(r1.rebased_target, r2.rebased_source);
    }

    #[test]
    fn anchor_at_endpoint_conflicts() {
        let s1 = rebased_stage(&z23_z25_map(None));
        assert!(matches!(
            rebase_blocks(&s1, None, &[0.001], 60, 1),
            Err(Error::InterpolationConflict(_))
        ));
    }

    #[test]
    fn cartan_sample_on_z23() {
        let rep = verify_cartan_sample(&z_pq(2, 3), 60, 5, 1).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.span_ranks[0].2, 36);
    }
}
