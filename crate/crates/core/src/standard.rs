//! n-standard maps, D-pairs, the 3-standard connector, approximation and rebasing.

use serde::Serialize;

use crate::complex::{ComplexSpec, Element, Section, Side};
use crate::error::{Error, Result};
use crate::findim::{eye, norm, BlockMatrix, CMat, Perm, UnitaryPath};
use crate::form::{align, concat, describe_atoms, DiagonalForm, Label, Resolved, ALIGN_TOL};
use crate::homspec::{block_candidates, BlockPairing, HomToMatrix};

/// Continuous piecewise-linear real function given by sorted breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pwl {
    pub breaks: Vec<(f64, f64)>,
}

impl Pwl {
    pub fn new(breaks: Vec<(f64, f64)>) -> Result<Self> {
        if breaks.is_empty() || breaks.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::InvalidMap("breakpoints must be nonempty and sorted".into()));
        }
        if breaks.iter().any(|&(_, v)| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidMap("eigenvalue path leaves [0, 1]".into()));
        }
        Ok(Pwl { breaks })
    }

    pub fn constant(lo: f64, hi: f64, v: f64) -> Self {
        Pwl {
            breaks: vec![(lo, v), (hi, v)],
        }
    }

    pub fn linear(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        Pwl {
            breaks: vec![(lo, a), (hi, b)],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let first = self.breaks[0];
        let last = self.breaks[self.breaks.len() - 1];
        if t <= first.0 {
            return first.1;
        }
        if t >= last.0 {
            return last.1;
        }
        for w in self.breaks.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            if t == t1 {
                return v1;
            }
            if t < t1 {
                if t1 == t0 {
                    return v1;
                }
                let s = (t - t0) / (t1 - t0);
                return v0 + s * (v1 - v0);
            }
        }
        last.1
    }

    pub fn min(&self) -> f64 {
        self.breaks.iter().map(|b| b.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.breaks.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max)
    }

    fn affine(&self, a: f64, b: f64) -> Pwl {
        Pwl {
            breaks: self.breaks.iter().map(|&(t, v)| (a + b * t, v)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum EigenPath {
    Delta(usize),
    Path { block: usize, f: Pwl },
}

impl EigenPath {
    pub fn label_at(&self, t: f64) -> Label {
        match self {
            EigenPath::Delta(j) => Label::Delta(*j),
            EigenPath::Path { block, f } => Label::Point {
                block: *block,
                t: f.eval(t),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub paths: Vec<EigenPath>,
    pub pad: usize,
    pub u: UnitaryPath,
}

impl Interval {
    pub fn form_at(&self, t: f64) -> DiagonalForm {
        DiagonalForm {
            labels: self.paths.iter().map(|p| p.label_at(t)).collect(),
            pad: self.pad,
        }
    }

    pub fn size(&self, spec: &ComplexSpec) -> usize {
        self.form_at(self.lo).size(spec)
    }

    pub fn eval<S: Section + ?Sized>(&self, spec: &ComplexSpec, t: f64, x: &S) -> CMat {
        let u = self.u.eval(t);
        &u * self.form_at(t).eval(spec, x) * u.adjoint()
    }

    fn knots(&self) -> Vec<f64> {
        let mut v = vec![self.lo, self.hi];
        for p in &self.paths {
            if let EigenPath::Path { f, .. } = p {
                v.extend(f.breaks.iter().map(|b| b.0));
            }
        }
        v.extend(self.u.knot_times());
        v
    }
}

/// `φ_t = u⁽ᵐ⁾(t) · diag(h∘ξ₁⁽ᵐ⁾(t), …, 0) · u⁽ᵐ⁾(t)*` on consecutive intervals.
#[derive(Clone, Debug)]
pub struct StandardMapToMatrix {
    intervals: Vec<Interval>,
}

impl StandardMapToMatrix {
    pub fn new(spec: &ComplexSpec, intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidMap("no intervals".into()));
        }
        for w in intervals.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(Error::InvalidMap("intervals are not contiguous".into()));
            }
        }
        let n = intervals[0].size(spec);
        for (m, iv) in intervals.iter().enumerate() {
            if iv.hi < iv.lo {
                return Err(Error::InvalidMap(format!("interval {} is reversed", m + 1)));
            }
            if iv.size(spec) != n || iv.u.dim() != n {
                return Err(Error::InvalidMap(format!(
                    "interval {} has dimension {} (unitary {}), expected {n}",
                    m + 1,
                    iv.size(spec),
                    iv.u.dim()
                )));
            }
            for p in &iv.paths {
                match p {
                    EigenPath::Delta(j) if *j >= spec.l() => {
                        return Err(Error::InvalidMap(format!("E-block {} out of range", j + 1)))
                    }
                    EigenPath::Path { block, .. } if *block >= spec.k() => {
                        return Err(Error::InvalidMap(format!("F-block {} out of range", block + 1)))
                    }
                    _ => {}
                }
            }
        }
        Ok(StandardMapToMatrix { intervals })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn n(&self) -> usize {
        self.intervals[0].u.dim()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.intervals[0].lo, self.intervals[self.intervals.len() - 1].hi)
    }

    pub fn partition(&self) -> Vec<f64> {
        let mut v = vec![self.intervals[0].lo];
        v.extend(self.intervals.iter().map(|i| i.hi));
        v
    }

    /// Interval containing `t`, with `[z_{m−1}, z_m)` conventions and the last one closed.
    pub fn interval_index(&self, t: f64) -> usize {
        self.intervals
            .iter()
            .rposition(|iv| iv.lo <= t)
            .unwrap_or(0)
    }

    pub fn form_at(&self, t: f64) -> DiagonalForm {
        self.intervals[self.interval_index(t)].form_at(t)
    }

    pub fn eval<S: Section + ?Sized>(&self, spec: &ComplexSpec, t: f64, x: &S) -> CMat {
        self.intervals[self.interval_index(t)].eval(spec, t, x)
    }

    /// Normal form of `φ_t`.
    pub fn hom_at(&self, spec: &ComplexSpec, t: f64) -> HomToMatrix {
        let iv = &self.intervals[self.interval_index(t)];
        HomToMatrix::from_form(spec, &iv.form_at(t), &iv.u.eval(t)).expect("valid interval")
    }

    /// Grid points of the domain together with every breakpoint.
    pub fn sample_times(&self, grid: usize) -> Vec<f64> {
        let (lo, hi) = self.domain();
        let mut v: Vec<f64> = (0..=grid)
            .map(|k| k as f64 / grid as f64)
            .filter(|&t| t >= lo && t <= hi)
            .collect();
        for iv in &self.intervals {
            v.extend(iv.knots());
        }
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup();
        v
    }

    /// Affine reparametrization of the domain onto `[lo, hi]`.
    pub fn reparametrized(&self, lo: f64, hi: f64) -> StandardMapToMatrix {
        let (a, b) = self.domain();
        let scale = if b > a { (hi - lo) / (b - a) } else { 0.0 };
        let map = |t: f64| lo + (t - a) * scale;
        let intervals = self
            .intervals
            .iter()
            .map(|iv| Interval {
                lo: map(iv.lo),
                hi: map(iv.hi),
                paths: iv
                    .paths
                    .iter()
                    .map(|p| match p {
                        EigenPath::Delta(j) => EigenPath::Delta(*j),
                        EigenPath::Path { block, f } => EigenPath::Path {
                            block: *block,
                            f: f.affine(lo - a * scale, scale),
                        },
                    })
                    .collect(),
                pad: iv.pad,
                u: iv.u.reparametrized(map(iv.lo), map(iv.hi)),
            })
            .collect();
        StandardMapToMatrix { intervals }
    }

    /// Concatenation of maps on consecutive domains.
    pub fn concat(spec: &ComplexSpec, parts: Vec<StandardMapToMatrix>) -> Result<Self> {
        Self::new(spec, parts.into_iter().flat_map(|p| p.intervals).collect())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StandardReport {
    pub n: usize,
    pub intervals: usize,
    /// Breakpoint permutations `Q_m` (0-based images), `Q₁ = id`.
    pub q: Vec<Vec<usize>>,
    pub max_unitarity_defect: f64,
    pub max_breakpoint_residual: f64,
}

pub fn breakpoint_permutations(spec: &ComplexSpec, sm: &StandardMapToMatrix) -> Result<Vec<Perm>> {
    let ivs = sm.intervals();
    let mut q = vec![Perm::identity(sm.n())];
    for m in 0..ivs.len() - 1 {
        let z = ivs[m].hi;
        let left = ivs[m].form_at(z).resolve(spec);
        let right = ivs[m + 1].form_at(z).resolve(spec);
        let x = align(spec, &left, &right, ALIGN_TOL).ok_or_else(|| Error::NoMatchingPermutation {
            breakpoint: m + 1,
            left: describe_atoms(&left.atoms),
            right: describe_atoms(&right.atoms),
        })?;
        let next = q[m].compose(&x.inverse());
        q.push(next);
    }
    Ok(q)
}

pub fn validate_standard(
    spec: &ComplexSpec,
    sm: &StandardMapToMatrix,
    probes: &[Element],
) -> Result<StandardReport> {
    let q = breakpoint_permutations(spec, sm)?;
    let mut defect: f64 = 0.0;
    for iv in sm.intervals() {
        let mut ts = iv.knots();
        ts.extend((0..=8).map(|k| iv.lo + (iv.hi - iv.lo) * k as f64 / 8.0));
        defect = defect.max(iv.u.max_unitarity_defect(&ts));
    }
    if defect > 1e-8 {
        return Err(Error::InvalidMap(format!("unitary path defect {defect:.3e}")));
    }
    let ivs = sm.intervals();
    let mut residual: f64 = 0.0;
    for m in 0..ivs.len() - 1 {
        let z = ivs[m].hi;
        for x in probes {
            let a = ivs[m].eval(spec, z, x);
            let b = ivs[m + 1].eval(spec, z, x);
            residual = residual.max(norm(&(a - b)));
        }
    }
    Ok(StandardReport {
        n: sm.n(),
        intervals: ivs.len(),
        q: q.iter().map(|p| p.images().to_vec()).collect(),
        max_unitarity_defect: defect,
        max_breakpoint_residual: residual,
    })
}

/// `θ_t = Q_m · diag(…) · Q_m*` on one interval.
#[derive(Clone, Debug)]
pub struct ThetaPiece {
    pub lo: f64,
    pub hi: f64,
    pub paths: Vec<EigenPath>,
    pub pad: usize,
    pub q: Perm,
}

impl ThetaPiece {
    pub fn form_at(&self, t: f64) -> DiagonalForm {
        DiagonalForm {
            labels: self.paths.iter().map(|p| p.label_at(t)).collect(),
            pad: self.pad,
        }
    }

    pub fn resolved_at(&self, spec: &ComplexSpec, t: f64) -> Resolved {
        self.form_at(t).resolve(spec).conjugated(&self.q)
    }
}

/// `φ_t = R(t) θ_t R(t)*` with `R` continuous on each piece.
#[derive(Clone, Debug)]
pub struct DPair {
    pub theta: Vec<ThetaPiece>,
    pub r: Vec<UnitaryPath>,
}

impl DPair {
    fn index(&self, t: f64) -> usize {
        self.theta.iter().rposition(|p| p.lo <= t).unwrap_or(0)
    }

    pub fn theta_at<S: Section + ?Sized>(&self, spec: &ComplexSpec, t: f64, x: &S) -> CMat {
        let p = &self.theta[self.index(t)];
        p.q.conj(&p.form_at(t).eval(spec, x))
    }

    pub fn r_at(&self, t: f64) -> CMat {
        self.r[self.index(t)].eval(t)
    }

    pub fn eval<S: Section + ?Sized>(&self, spec: &ComplexSpec, t: f64, x: &S) -> CMat {
        let r = self.r_at(t);
        &r * self.theta_at(spec, t, x) * r.adjoint()
    }

    /// Breakpoints where `R` is discontinuous beyond `tol`.
    pub fn jump_points(&self, tol: f64) -> Vec<f64> {
        (0..self.r.len().saturating_sub(1))
            .filter_map(|m| {
                let z = self.theta[m].hi;
                (norm(&(self.r[m].eval(z) - self.r[m + 1].eval(z))) > tol).then_some(z)
            })
            .collect()
    }
}

pub fn extract_d_pair(spec: &ComplexSpec, sm: &StandardMapToMatrix) -> Result<DPair> {
    let q = breakpoint_permutations(spec, sm)?;
    let theta = sm
        .intervals()
        .iter()
        .zip(&q)
        .map(|(iv, q)| ThetaPiece {
            lo: iv.lo,
            hi: iv.hi,
            paths: iv.paths.clone(),
            pad: iv.pad,
            q: q.clone(),
        })
        .collect();
    let r = sm
        .intervals()
        .iter()
        .zip(&q)
        .map(|(iv, q)| iv.u.right_mul(&q.inverse().matrix()))
        .collect();
    Ok(DPair { theta, r })
}

/// Largest `‖φ_t(x) − R(t)θ_t(x)R(t)*‖` over the given times and elements.
pub fn roundtrip_residual(
    spec: &ComplexSpec,
    sm: &StandardMapToMatrix,
    dp: &DPair,
    probes: &[Element],
    ts: &[f64],
) -> f64 {
    let mut worst: f64 = 0.0;
    for &t in ts {
        for x in probes {
            worst = worst.max(norm(&(sm.eval(spec, t, x) - dp.eval(spec, t, x))));
        }
    }
    worst
}

/// A unital homomorphism `A → B` given by standard maps per F′-block and homs per E′-block.
#[derive(Clone, Debug)]
pub struct StandardMapToComplex {
    pub source: ComplexSpec,
    pub target: ComplexSpec,
    pub components: Vec<StandardMapToMatrix>,
    pub e_maps: Vec<HomToMatrix>,
}

#[derive(Clone, Debug)]
pub struct ComplexDPair {
    pub components: Vec<DPair>,
}

impl StandardMapToComplex {
    pub fn new(
        source: ComplexSpec,
        target: ComplexSpec,
        components: Vec<StandardMapToMatrix>,
        e_maps: Vec<HomToMatrix>,
    ) -> Result<Self> {
        if components.len() != target.k() || e_maps.len() != target.l() {
            return Err(Error::SpecMismatch(format!(
                "{} components and {} E-maps for a target with {} F-blocks and {} E-blocks",
                components.len(),
                e_maps.len(),
                target.k(),
                target.l()
            )));
        }
        for (i, c) in components.iter().enumerate() {
            if c.n() != target.f_shape().size(i) || c.domain() != (0.0, 1.0) {
                return Err(Error::InvalidMap(format!(
                    "component {} must map into size {} over [0, 1]",
                    i + 1,
                    target.f_shape().size(i)
                )));
            }
        }
        for (r, h) in e_maps.iter().enumerate() {
            h.validate(&source)?;
            if h.n != target.e_shape().size(r) {
                return Err(Error::InvalidMap(format!("E-map {} has the wrong size", r + 1)));
            }
        }
        Ok(StandardMapToComplex {
            source,
            target,
            components,
            e_maps,
        })
    }

    pub fn e_part<S: Section + ?Sized>(&self, x: &S) -> BlockMatrix {
        let blocks = self.e_maps.iter().map(|h| h.eval(&self.source, x)).collect();
        BlockMatrix::new(self.target.e_shape().clone(), blocks).expect("validated")
    }

    pub fn f_value<S: Section + ?Sized>(&self, t: f64, x: &S) -> BlockMatrix {
        let blocks = self
            .components
            .iter()
            .map(|c| c.eval(&self.source, t, x))
            .collect();
        BlockMatrix::new(self.target.f_shape().clone(), blocks).expect("validated")
    }

    /// The image as a target element sampled on a grid.
    pub fn apply<S: Section + ?Sized>(&self, x: &S, grid: usize) -> Element {
        let f = (0..=grid)
            .map(|k| self.f_value(k as f64 / grid as f64, x))
            .collect();
        Element::from_parts(f, self.e_part(x))
    }

    /// Largest violation of the target's boundary conditions on the probes.
    pub fn coherence_residual(&self, probes: &[Element]) -> f64 {
        let mut worst: f64 = 0.0;
        for x in probes {
            let e = self.e_part(x);
            for side in Side::BOTH {
                let want = self.target.beta(side, &e);
                let got = self.f_value(side.t(), x);
                worst = worst.max(crate::findim::op_norm(&got.sub(&want)));
            }
        }
        worst
    }

    pub fn family(&self, grid: usize) -> HomFamily {
        HomFamily {
            grid,
            components: self
                .components
                .iter()
                .map(|c| {
                    (0..=grid)
                        .map(|k| c.hom_at(&self.source, k as f64 / grid as f64))
                        .collect()
                })
                .collect(),
            e_maps: self.e_maps.clone(),
        }
    }
}

pub fn extract_complex_d_pair(map: &StandardMapToComplex) -> Result<ComplexDPair> {
    Ok(ComplexDPair {
        components: map
            .components
            .iter()
            .map(|c| extract_d_pair(&map.source, c))
            .collect::<Result<_>>()?,
    })
}

/// Parameters of the connector, recorded with every run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConnectorParams {
    pub eta1: f64,
    pub eta: f64,
    pub delta: f64,
}

impl ConnectorParams {
    pub fn new(eta1: f64, eps: f64) -> Self {
        ConnectorParams {
            eta1,
            eta: eta1 / 3.0,
            delta: eps / 4.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Connection {
    pub map: StandardMapToMatrix,
    pub params: ConnectorParams,
    pub pairing: Vec<BlockPairing>,
    /// Permutation `P` with `u⁽²⁾(2/3) = U₁P`.
    pub p: Perm,
}

/// `w → min(w+ρ,1) → max(w−ρ,0) → target` on `[lo, hi]`, timed by leg length.
fn excursion(lo: f64, hi: f64, w: f64, target: f64, rho: f64) -> Pwl {
    let up = (w + rho).min(1.0);
    let down = (w - rho).max(0.0);
    let pts = [w, up, down, target];
    let legs = [up - w, up - down, (target - down).abs()];
    let total: f64 = legs.iter().sum();
    if total == 0.0 {
        return Pwl::constant(lo, hi, w);
    }
    let mut breaks = vec![(lo, w)];
    let mut acc = 0.0;
    for (k, len) in legs.iter().enumerate() {
        acc += len;
        let t = if k == 2 { hi } else { lo + (hi - lo) * acc / total };
        if *len > 0.0 {
            breaks.push((t, pts[k + 1]));
        }
    }
    if breaks.last().unwrap().0 != hi {
        let v = breaks.last().unwrap().1;
        breaks.push((hi, v));
    }
    Pwl { breaks }
}

fn reversed(p: &Pwl, lo: f64, hi: f64) -> Pwl {
    Pwl {
        breaks: p
            .breaks
            .iter()
            .rev()
            .map(|&(t, v)| (lo + hi - t, v))
            .collect(),
    }
}

fn take(pool: &mut Vec<(f64, f64)>, pick: impl Fn(&(f64, f64)) -> bool) -> Option<(f64, f64)> {
    let k = pool.iter().position(pick)?;
    Some(pool.remove(k))
}

/// 3-standard map on `[0, 1]` from `φ₀` to `φ₁`.
pub fn connect_3standard(
    spec: &ComplexSpec,
    phi0: &HomToMatrix,
    phi1: &HomToMatrix,
    params: ConnectorParams,
) -> Result<Connection> {
    connect_on(spec, phi0, phi1, params, 0.0, 1.0)
}

/// 3-standard map on `[lo, hi]` from `φ₀` to `φ₁`.
pub fn connect_on(
    spec: &ComplexSpec,
    phi0: &HomToMatrix,
    phi1: &HomToMatrix,
    params: ConnectorParams,
    lo: f64,
    hi: f64,
) -> Result<Connection> {
    if phi0.n != phi1.n || !phi0.is_unital() || !phi1.is_unital() {
        return Err(Error::PairingFailed { block: 0 });
    }
    let eta1 = params.eta1;
    let sa = phi0.spectrum(spec);
    let sb = phi1.spectrum(spec);
    let per_block: Vec<_> = (0..spec.k())
        .map(|b| block_candidates(&sa.interior_points[b], &sb.interior_points[b], eta1))
        .collect();
    if let Some(b) = per_block.iter().position(|c| c.is_empty()) {
        return Err(Error::PairingFailed { block: b });
    }
    // choose one candidate per block so that resolved deltas balance
    let absorbed = |pts: &[f64], kept: &[f64], block: usize, deltas: &mut [usize]| {
        let mut kept = kept.to_vec();
        for &t in pts {
            if let Some(k) = kept.iter().position(|&x| x == t) {
                kept.remove(k);
            } else {
                let side = if t < 0.5 { Side::Zero } else { Side::One };
                for (d, f) in deltas.iter_mut().zip(spec.endpoint_fibre(block, side)) {
                    *d += f;
                }
            }
        }
    };
    let mut choice = vec![0usize; spec.k()];
    let found = loop {
        let mut d0 = sa.delta_mults.clone();
        let mut d1 = sb.delta_mults.clone();
        for (b, &c) in choice.iter().enumerate() {
            let cand = &per_block[b][c];
            absorbed(&sa.interior_points[b], &cand.x, b, &mut d0);
            absorbed(&sb.interior_points[b], &cand.x_prime, b, &mut d1);
        }
        if d0 == d1 {
            break true;
        }
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                break;
            }
            choice[pos] += 1;
            if choice[pos] < per_block[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
        if pos == choice.len() {
            break false;
        }
    };
    if !found {
        return Err(Error::PairingFailed { block: 0 });
    }
    let rho = 4.0 * eta1;
    let (t1, t2) = (lo + (hi - lo) / 3.0, lo + 2.0 * (hi - lo) / 3.0);
    let mut pools: Vec<Vec<(f64, f64)>> = choice
        .iter()
        .enumerate()
        .map(|(b, &c)| per_block[b][c].lambda.clone())
        .collect();
    let mut pools_back = pools.clone();

    let endpoint_target = |t: f64| if t < 0.5 { 0.0 } else { 1.0 };
    let mut seg1 = Vec::new();
    let mut seg2 = Vec::new();
    for l in phi0.form().labels {
        match l {
            Label::Delta(j) => {
                seg1.push(EigenPath::Delta(j));
                seg2.push(EigenPath::Delta(j));
            }
            Label::Point { block, t } => {
                if l.endpoint().is_some() {
                    seg1.push(EigenPath::Path { block, f: Pwl::constant(lo, t1, t) });
                    seg2.push(EigenPath::Path { block, f: Pwl::constant(t1, t2, t) });
                    continue;
                }
                let target = match take(&mut pools[block], |p| p.0 == t) {
                    Some((_, y)) => y,
                    None => endpoint_target(t),
                };
                seg1.push(EigenPath::Path { block, f: excursion(lo, t1, t, target, rho) });
                seg2.push(EigenPath::Path { block, f: Pwl::constant(t1, t2, target) });
            }
        }
    }
    let mut seg3 = Vec::new();
    for l in phi1.form().labels {
        match l {
            Label::Delta(j) => seg3.push(EigenPath::Delta(j)),
            Label::Point { block, t } => {
                if l.endpoint().is_some() {
                    seg3.push(EigenPath::Path { block, f: Pwl::constant(t2, hi, t) });
                    continue;
                }
                let start = match take(&mut pools_back[block], |p| p.1 == t) {
                    Some(_) => t,
                    None => endpoint_target(t),
                };
                let fwd = excursion(t2, hi, t, start, rho);
                seg3.push(EigenPath::Path { block, f: reversed(&fwd, t2, hi) });
            }
        }
    }
    let d2 = DiagonalForm { labels: seg2.iter().map(|p| p.label_at(t2)).collect(), pad: 0 };
    let d3 = DiagonalForm { labels: seg3.iter().map(|p| p.label_at(t2)).collect(), pad: 0 };
    let (r2, r3) = (d2.resolve(spec), d3.resolve(spec));
    let p = align(spec, &r2, &r3, ALIGN_TOL).ok_or_else(|| {
        Error::PermutationSearchFailed(format!(
            "{} vs {}",
            describe_atoms(&r2.atoms),
            describe_atoms(&r3.atoms)
        ))
    })?;
    let u_end = &phi1.u * p.matrix();
    let intervals = vec![
        Interval { lo, hi: t1, paths: seg1, pad: 0, u: UnitaryPath::constant(lo, t1, phi0.u.clone()) },
        Interval { lo: t1, hi: t2, paths: seg2, pad: 0, u: UnitaryPath::geodesic(t1, t2, phi0.u.clone(), u_end)? },
        Interval { lo: t2, hi, paths: seg3, pad: 0, u: UnitaryPath::constant(t2, hi, phi1.u.clone()) },
    ];
    let pairing = choice
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let cand = &per_block[b][c];
            BlockPairing { block: b, x: cand.x.clone(), x_prime: cand.x_prime.clone(), lambda: cand.lambda.clone() }
        })
        .collect();
    Ok(Connection {
        map: StandardMapToMatrix::new(spec, intervals)?,
        params,
        pairing,
        p,
    })
}

/// Union of eigenpath images per F-block, as closed intervals.
pub fn path_images(sm: &StandardMapToMatrix, k: usize) -> Vec<Vec<(f64, f64)>> {
    let mut out = vec![Vec::new(); k];
    for iv in sm.intervals() {
        for p in &iv.paths {
            if let EigenPath::Path { block, f } = p {
                out[*block].push((f.min(), f.max()));
            }
        }
    }
    out
}

fn covered(images: &[(f64, f64)], x: f64) -> bool {
    images.iter().any(|&(a, b)| x >= a - 1e-12 && x <= b + 1e-12)
}

/// Whether every grid point within `rho` of an interior spectral point of `φ₀` or `φ₁`
/// lies in the spectrum of some `φ_t`.
pub fn ball_coverage(
    spec: &ComplexSpec,
    sm: &StandardMapToMatrix,
    phi0: &HomToMatrix,
    phi1: &HomToMatrix,
    rho: f64,
    grid: usize,
) -> bool {
    let images = path_images(sm, spec.k());
    for h in [phi0, phi1] {
        let sp = h.spectrum(spec);
        for (b, pts) in sp.interior_points.iter().enumerate() {
            for &mu in pts {
                for g in 0..=grid {
                    let x = g as f64 / grid as f64;
                    if (x - mu).abs() <= rho + 1e-12 && !covered(&images[b], x) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Sampled homomorphism `A → B`: one hom per grid point of each F′-block, plus E′-homs.
#[derive(Clone, Debug)]
pub struct HomFamily {
    pub grid: usize,
    pub components: Vec<Vec<HomToMatrix>>,
    pub e_maps: Vec<HomToMatrix>,
}

#[derive(Clone, Debug, Default)]
pub struct ApproxOptions {
    pub eta1: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxReport {
    pub pieces: Vec<usize>,
    pub params: ConnectorParams,
    pub lipschitz: f64,
    pub max_deviation: f64,
    pub max_piece_gap: f64,
    pub family_full_coverage: bool,
    /// Whether `Sp(ψ) = Sp(A)` at grid resolution, when checked.
    pub injective: Option<bool>,
}

/// Largest per-step variation of the probes, scaled to unit time.
pub fn lipschitz_bound(probes: &[Element]) -> f64 {
    probes
        .iter()
        .map(|x| {
            let n = x.grid() as f64;
            x.f_samples()
                .windows(2)
                .map(|w| crate::findim::op_norm(&w[1].sub(&w[0])) * n)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n % d == 0).collect()
}

pub fn approximate_by_standard(
    source: &ComplexSpec,
    target: &ComplexSpec,
    family: &HomFamily,
    probes: &[Element],
    eps: f64,
    opts: &ApproxOptions,
) -> Result<(StandardMapToComplex, ApproxReport)> {
    let nb = family.grid;
    if family.components.len() != target.k() || family.components.iter().any(|c| c.len() != nb + 1) {
        return Err(Error::SpecMismatch("family does not match the target grid".into()));
    }
    let lip = lipschitz_bound(probes);
    let eta1 = opts
        .eta1
        .unwrap_or_else(|| if lip > 0.0 { (eps / (10.0 * lip)).min(0.125) } else { 0.125 });
    let params = ConnectorParams::new(eta1, eps);
    let mut components = Vec::new();
    let mut pieces = Vec::new();
    let mut max_dev: f64 = 0.0;
    let mut max_gap: f64 = 0.0;
    for (ci, fam) in family.components.iter().enumerate() {
        let vals: Vec<Vec<CMat>> = fam
            .iter()
            .map(|h| probes.iter().map(|x| h.eval(source, x)).collect())
            .collect();
        let dist = |a: usize, b: usize| {
            vals[a]
                .iter()
                .zip(&vals[b])
                .map(|(x, y)| norm(&(x - y)))
                .fold(0.0, f64::max)
        };
        let mut accepted = None;
        let mut worst_step = 0;
        'm: for m in divisors(nb) {
            let step = nb / m;
            let mut parts = Vec::new();
            let mut dev: f64 = 0.0;
            let mut gap: f64 = 0.0;
            for j in 0..m {
                let (a, b) = (j * step, (j + 1) * step);
                let g = (a..=b).map(|w| dist(w, a)).fold(0.0, f64::max);
                if g >= eps / 2.0 {
                    worst_step = a;
                    continue 'm;
                }
                gap = gap.max(g);
                let lo = a as f64 / nb as f64;
                let hi = b as f64 / nb as f64;
                let Ok(conn) = connect_on(source, &fam[a], &fam[b], params, lo, hi) else {
                    worst_step = a;
                    continue 'm;
                };
                for t in conn.map.sample_times(nb * 4) {
                    let d = probes
                        .iter()
                        .zip(&vals[a])
                        .map(|(x, v)| norm(&(conn.map.eval(source, t, x) - v)))
                        .fold(0.0, f64::max);
                    dev = dev.max(d);
                }
                if dev >= eps / 2.0 {
                    worst_step = a;
                    continue 'm;
                }
                parts.push(conn.map);
            }
            let sm = StandardMapToMatrix::concat(source, parts)?;
            let total = (0..=nb)
                .map(|w| {
                    let t = w as f64 / nb as f64;
                    probes
                        .iter()
                        .zip(&vals[w])
                        .map(|(x, v)| norm(&(sm.eval(source, t, x) - v)))
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if total < eps {
                max_dev = max_dev.max(dev.max(total));
                max_gap = max_gap.max(gap);
                accepted = Some((m, sm));
                break;
            }
        }
        let Some((m, sm)) = accepted else {
            return Err(Error::ContinuityTooCoarse { component: ci, step: worst_step });
        };
        pieces.push(m);
        components.push(sm);
    }
    let psi = StandardMapToComplex::new(source.clone(), target.clone(), components, family.e_maps.clone())?;
    let full = family_coverage(source, family);
    let injective = full.then(|| map_coverage(&psi, nb));
    Ok((
        psi,
        ApproxReport {
            pieces,
            params,
            lipschitz: lip,
            max_deviation: max_dev,
            max_piece_gap: max_gap,
            family_full_coverage: full,
            injective,
        },
    ))
}

fn source_grid_points(grid: usize) -> impl Iterator<Item = f64> {
    (1..grid).map(move |g| g as f64 / grid as f64)
}

/// Whether the family's spectra reach every E-block and come within one grid
/// step of every interior grid point.
pub fn family_coverage(source: &ComplexSpec, family: &HomFamily) -> bool {
    let grid = family.grid;
    let mut deltas = vec![false; source.l()];
    let mut pts: Vec<Vec<f64>> = vec![Vec::new(); source.k()];
    for h in family.components.iter().flatten().chain(&family.e_maps) {
        let sp = h.spectrum(source);
        for (j, &m) in sp.delta_mults.iter().enumerate() {
            deltas[j] |= m > 0;
        }
        for (b, v) in sp.interior_points.iter().enumerate() {
            pts[b].extend(v);
        }
    }
    let step = 1.0 / grid as f64;
    deltas.iter().all(|&d| d)
        && pts.iter().all(|v| {
            source_grid_points(grid).all(|x| v.iter().any(|&p| (p - x).abs() <= step + 1e-12))
        })
}

/// `Sp(ψ) = Sp(A)` at grid resolution: every interior grid point lies on an
/// eigenpath and every E-block occurs in some resolved spectrum.
pub fn map_coverage(psi: &StandardMapToComplex, grid: usize) -> bool {
    let spec = &psi.source;
    let mut deltas = vec![false; spec.l()];
    let mut images = vec![Vec::new(); spec.k()];
    let mark = |f: &DiagonalForm, deltas: &mut [bool]| {
        for (j, m) in f.spectrum(spec).delta_mults.iter().enumerate() {
            deltas[j] |= *m > 0;
        }
    };
    for h in &psi.e_maps {
        mark(&h.form(), &mut deltas);
    }
    for c in &psi.components {
        for iv in c.intervals() {
            mark(&iv.form_at(iv.lo), &mut deltas);
            mark(&iv.form_at(iv.hi), &mut deltas);
            for p in &iv.paths {
                if let EigenPath::Path { block, f } = p {
                    for side in Side::BOTH {
                        if (side == Side::Zero && f.min() == 0.0) || (side == Side::One && f.max() == 1.0) {
                            for (j, m) in spec.endpoint_fibre(*block, side).iter().enumerate() {
                                deltas[j] |= *m > 0;
                            }
                        }
                    }
                }
            }
        }
        for (b, v) in path_images(c, spec.k()).into_iter().enumerate() {
            images[b].extend(v);
        }
    }
    deltas.iter().all(|&d| d)
        && images
            .iter()
            .all(|im| source_grid_points(grid).all(|x| covered(im, x)))
}

#[derive(Clone, Debug)]
pub struct Rebased {
    pub psi: StandardMapToComplex,
    pub w: Vec<UnitaryPath>,
    pub s0: Vec<Perm>,
    pub s1: Vec<Perm>,
    /// D-pair of `ψ`: the same `θ` with `R = W`.
    pub dpair: ComplexDPair,
}

/// Resolution of `α_side(⊕ D_r)` on F′-block `i`, where `D_r` are the E′-forms.
fn boundary_resolution(map: &StandardMapToComplex, i: usize, side: Side) -> Resolved {
    let target = &map.target;
    let mut parts = Vec::new();
    for (r, &mu) in target.mult(side)[i].iter().enumerate() {
        let res = map.e_maps[r].form().resolve(&map.source);
        for _ in 0..mu {
            parts.push(res.clone());
        }
    }
    concat(&parts).conjugated(target.perm(side).perm(i))
}

/// `ψ_t = W(t) θ_t W(t)*` with `W` a continuous path between the aligning permutations.
pub fn rebase_via_theta(map: &StandardMapToComplex, dp: &ComplexDPair) -> Result<Rebased> {
    let spec = &map.source;
    let mut comps = Vec::new();
    let mut ws = Vec::new();
    let (mut s0s, mut s1s) = (Vec::new(), Vec::new());
    let mut pairs = Vec::new();
    for (i, d) in dp.components.iter().enumerate() {
        let first = &d.theta[0];
        let last = &d.theta[d.theta.len() - 1];
        let th0 = first.resolved_at(spec, first.lo);
        let th1 = last.resolved_at(spec, last.hi);
        let s0 = align(spec, &th0, &boundary_resolution(map, i, Side::Zero), ALIGN_TOL)
            .ok_or(Error::NoAligningPermutation { component: i, side: 0 })?;
        let s1 = align(spec, &th1, &boundary_resolution(map, i, Side::One), ALIGN_TOL)
            .ok_or(Error::NoAligningPermutation { component: i, side: 1 })?;
        let w = UnitaryPath::geodesic(0.0, 1.0, s0.matrix(), s1.matrix())?;
        let intervals = d
            .theta
            .iter()
            .map(|p| Interval {
                lo: p.lo,
                hi: p.hi,
                paths: p.paths.clone(),
                pad: p.pad,
                u: w.restrict(p.lo, p.hi).right_mul(&p.q.matrix()),
            })
            .collect();
        comps.push(StandardMapToMatrix::new(spec, intervals)?);
        pairs.push(DPair {
            theta: d.theta.clone(),
            r: d.theta.iter().map(|p| w.restrict(p.lo, p.hi)).collect(),
        });
        ws.push(w);
        s0s.push(s0);
        s1s.push(s1);
    }
    let e_maps = map
        .e_maps
        .iter()
        .map(|h| HomToMatrix { u: eye(h.n), ..h.clone() })
        .collect();
    let psi = StandardMapToComplex::new(spec.clone(), map.target.clone(), comps, e_maps)?;
    Ok(Rebased {
        psi,
        w: ws,
        s0: s0s,
        s1: s1s,
        dpair: ComplexDPair { components: pairs },
    })
}

/// Resolved spectra of `φ` and `ψ` agree at every grid point and every E′-block.
pub fn check_pointwise_equiv(phi: &StandardMapToComplex, psi: &StandardMapToComplex, grid: usize) -> bool {
    let spec = &phi.source;
    if phi.components.len() != psi.components.len() || phi.e_maps.len() != psi.e_maps.len() {
        return false;
    }
    let tol = 1e-12;
    phi.e_maps
        .iter()
        .zip(&psi.e_maps)
        .all(|(a, b)| a.spectrum(spec).approx_eq(&b.spectrum(spec), tol))
        && phi.components.iter().zip(&psi.components).all(|(a, b)| {
            (0..=grid).all(|k| {
                let t = k as f64 / grid as f64;
                a.form_at(t).spectrum(spec).approx_eq(&b.form_at(t).spectrum(spec), tol)
            })
        })
}
