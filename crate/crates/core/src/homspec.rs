//! Homomorphisms `A → M_n` in spectral normal form.

use serde::Serialize;

use crate::complex::{ComplexSpec, Element, Section, Side};
use crate::error::{Error, Result};
use crate::findim::{eig_sorted, eye, unitarity_defect, CMat, Perm, TAU_UNIT};
use crate::form::{DiagonalForm, Label, POINT_SNAP};
use crate::testfn::{build_h, HMode};

pub use crate::form::SpectrumMultiset;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SpecPoint {
    Delta(usize),
    Interior { block: usize, t: f64 },
    Endpoint { block: usize, side: Side },
}

impl SpecPoint {
    pub fn block(&self) -> Option<usize> {
        match *self {
            SpecPoint::Delta(_) => None,
            SpecPoint::Interior { block, .. } | SpecPoint::Endpoint { block, .. } => Some(block),
        }
    }

    pub fn t(&self) -> Option<f64> {
        match *self {
            SpecPoint::Delta(_) => None,
            SpecPoint::Interior { t, .. } => Some(t),
            SpecPoint::Endpoint { side, .. } => Some(side.t()),
        }
    }

    /// Interior point, snapped to the endpoint when within `POINT_SNAP`.
    pub fn at(block: usize, t: f64) -> SpecPoint {
        if t <= POINT_SNAP {
            SpecPoint::Endpoint { block, side: Side::Zero }
        } else if t >= 1.0 - POINT_SNAP {
            SpecPoint::Endpoint { block, side: Side::One }
        } else {
            SpecPoint::Interior { block, t }
        }
    }
}

/// `u · diag(a(δ₁) ⊕…⊕ a(δ₁) (s₁ copies), …, f(w₁), …, f(w_r), 0_pad) · u*`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomToMatrix {
    pub n: usize,
    pub s: Vec<usize>,
    pub points: Vec<SpecPoint>,
    pub pad: usize,
    pub u: CMat,
}

impl HomToMatrix {
    pub fn new(
        spec: &ComplexSpec,
        s: Vec<usize>,
        points: Vec<SpecPoint>,
        pad: usize,
        u: CMat,
    ) -> Result<Self> {
        let h = HomToMatrix {
            n: u.nrows(),
            s,
            points,
            pad,
            u,
        };
        h.validate(spec)?;
        Ok(h)
    }

    /// Same data with identity conjugator.
    pub fn diagonal(spec: &ComplexSpec, s: Vec<usize>, points: Vec<SpecPoint>, pad: usize) -> Result<Self> {
        let n: usize = s.iter().zip(spec.e_shape().sizes()).map(|(a, b)| a * b).sum::<usize>()
            + points
                .iter()
                .filter_map(|p| p.block())
                .map(|b| spec.f_shape().size(b))
                .sum::<usize>()
            + pad;
        Self::new(spec, s, points, pad, eye(n))
    }

    pub fn validate(&self, spec: &ComplexSpec) -> Result<()> {
        if self.s.len() != spec.l() {
            return Err(Error::SpecMismatch(format!(
                "{} delta multiplicities for {} E-blocks",
                self.s.len(),
                spec.l()
            )));
        }
        for p in &self.points {
            match *p {
                SpecPoint::Delta(_) => {
                    return Err(Error::SpecMismatch(
                        "delta points are given through the multiplicities".into(),
                    ))
                }
                SpecPoint::Interior { block, t } => {
                    if block >= spec.k() || !(t > 0.0 && t < 1.0) {
                        return Err(Error::SpecMismatch(format!(
                            "interior point ({t}, {}) out of range",
                            block + 1
                        )));
                    }
                }
                SpecPoint::Endpoint { block, .. } => {
                    if block >= spec.k() {
                        return Err(Error::SpecMismatch(format!("F-block {} out of range", block + 1)));
                    }
                }
            }
        }
        let size = self.form().size(spec);
        if size != self.n || self.u.nrows() != self.n || self.u.ncols() != self.n {
            return Err(Error::SizeMismatch(format!(
                "spectral data has size {size}, conjugator is {}x{}, n = {}",
                self.u.nrows(),
                self.u.ncols(),
                self.n
            )));
        }
        let residual = unitarity_defect(&self.u);
        if residual > TAU_UNIT * 10.0 {
            return Err(Error::NotUnitary { residual });
        }
        Ok(())
    }

    pub fn is_unital(&self) -> bool {
        self.pad == 0
    }

    pub fn form(&self) -> DiagonalForm {
        let mut labels = Vec::new();
        for (j, &r) in self.s.iter().enumerate() {
            labels.extend(std::iter::repeat_n(Label::Delta(j), r));
        }
        for p in &self.points {
            if let (Some(block), Some(t)) = (p.block(), p.t()) {
                labels.push(Label::Point { block, t });
            }
        }
        DiagonalForm {
            labels,
            pad: self.pad,
        }
    }

    pub fn eval<S: Section + ?Sized>(&self, spec: &ComplexSpec, x: &S) -> CMat {
        let d = self.form().eval(spec, x);
        &self.u * d * self.u.adjoint()
    }

    pub fn spectrum(&self, spec: &ComplexSpec) -> SpectrumMultiset {
        self.form().spectrum(spec)
    }

    /// Normal form of `u · form · u*` for a form with labels in any order.
    pub fn from_form(spec: &ComplexSpec, form: &DiagonalForm, u: &CMat) -> Result<Self> {
        let mut offs = Vec::new();
        let mut off = 0;
        for l in &form.labels {
            offs.push(off);
            off += l.size(spec);
        }
        let mut order: Vec<usize> = (0..form.labels.len()).collect();
        // deltas by block index first, points keep their order
        order.sort_by_key(|&k| match form.labels[k] {
            Label::Delta(j) => (0, j),
            Label::Point { .. } => (1, 0),
        });
        let mut s = vec![0; spec.l()];
        let mut points = Vec::new();
        let mut images = Vec::new();
        for &k in &order {
            let l = form.labels[k];
            match l {
                Label::Delta(j) => s[j] += 1,
                Label::Point { block, t } => points.push(SpecPoint::at(block, t)),
            }
            images.extend(offs[k]..offs[k] + l.size(spec));
        }
        images.extend(off..off + form.pad);
        let r = Perm::from_images(images)?;
        Self::new(spec, s, points, form.pad, u * r.matrix())
    }

    pub fn conjugated(&self, w: &CMat) -> HomToMatrix {
        HomToMatrix {
            u: w * &self.u,
            ..self.clone()
        }
    }
}

pub fn eval_hom(spec: &ComplexSpec, h: &HomToMatrix, el: &Element) -> Result<CMat> {
    if el.e_part().shape() != spec.e_shape() || el.sample(0).shape() != spec.f_shape() {
        return Err(Error::SpecMismatch("element belongs to another complex".into()));
    }
    if h.s.len() != spec.l() {
        return Err(Error::SpecMismatch("homomorphism belongs to another complex".into()));
    }
    Ok(h.eval(spec, el))
}

/// Sorted bijective pairing with all displacements `< eta`, if one exists.
pub fn pair_point_multisets(xs: &[f64], ys: &[f64], eta: f64) -> Option<Vec<(f64, f64)>> {
    if xs.len() != ys.len() {
        return None;
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let pairs: Vec<(f64, f64)> = a.into_iter().zip(b).collect();
    pairs.iter().all(|(x, y)| (x - y).abs() < eta).then_some(pairs)
}

/// Per-block outcome of the spectral pairing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockPairing {
    pub block: usize,
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    /// Pairs `(w, Λ(w))`.
    pub lambda: Vec<(f64, f64)>,
}

/// Candidate `(X, X′)` on one block: mandatory points plus chosen boundary-zone points.
#[derive(Clone, Debug)]
pub(crate) struct Candidate {
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub lambda: Vec<(f64, f64)>,
}

const SUBSET_LIMIT: usize = 22;

/// All admissible `(X, X′)` on one block, largest first.
pub(crate) fn block_candidates(xs: &[f64], ys: &[f64], eta: f64) -> Vec<Candidate> {
    let split = |v: &[f64]| {
        let mut mand = Vec::new();
        let mut zone = Vec::new();
        for &t in v {
            if t >= eta && t <= 1.0 - eta {
                mand.push(t);
            } else if t > 0.0 && t < 1.0 {
                zone.push(t);
            }
        }
        (mand, zone)
    };
    let (m0, z0) = split(xs);
    let (m1, z1) = split(ys);
    if z0.len() + z1.len() > SUBSET_LIMIT {
        return Vec::new();
    }
    let mut out = Vec::new();
    for mask0 in 0u32..(1 << z0.len()) {
        for mask1 in 0u32..(1 << z1.len()) {
            let pick = |mand: &[f64], zone: &[f64], mask: u32| {
                let mut v = mand.to_vec();
                v.extend(zone.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &t)| t));
                v.sort_by(|a, b| a.total_cmp(b));
                v
            };
            let x = pick(&m0, &z0, mask0);
            let x_prime = pick(&m1, &z1, mask1);
            if let Some(lambda) = pair_point_multisets(&x, &x_prime, 2.0 * eta) {
                out.push(Candidate { x, x_prime, lambda });
            }
        }
    }
    out.sort_by_key(|c| std::cmp::Reverse(c.x.len()));
    out
}

/// Largest eigenvalue displacement of `φ(h)` against `ψ(h)` over `H(1/m)`.
pub fn pairing_gaps(
    spec: &ComplexSpec,
    phi: &HomToMatrix,
    psi: &HomToMatrix,
    m: usize,
    grid: usize,
) -> Result<Vec<f64>> {
    let family = build_h(spec, grid, m, HMode::Contiguous)?;
    family
        .iter()
        .map(|h| {
            let a = eig_sorted(&phi.eval(spec, &h.element))?;
            let b = eig_sorted(&psi.eval(spec, &h.element))?;
            if a.len() != b.len() {
                return Ok(f64::INFINITY);
            }
            Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        })
        .collect()
}

pub fn lemma_pairing(
    spec: &ComplexSpec,
    phi: &HomToMatrix,
    psi: &HomToMatrix,
    m: usize,
    eps: f64,
    grid: usize,
) -> Result<Vec<BlockPairing>> {
    if phi.n != psi.n {
        return Err(Error::HypothesisFailed {
            index: 0,
            gap: f64::INFINITY,
        });
    }
    for (index, gap) in pairing_gaps(spec, phi, psi, m, grid)?.into_iter().enumerate() {
        if gap >= eps {
            return Err(Error::HypothesisFailed { index, gap });
        }
    }
    let eta = 1.0 / m as f64;
    let sa = phi.spectrum(spec);
    let sb = psi.spectrum(spec);
    let mut out = Vec::new();
    for block in 0..spec.k() {
        let cands = block_candidates(&sa.interior_points[block], &sb.interior_points[block], eta);
        let best = cands.into_iter().next().ok_or(Error::ExtractionFailed { block })?;
        out.push(BlockPairing {
            block,
            x: best.x,
            x_prime: best.x_prime,
            lambda: best.lambda,
        });
    }
    Ok(out)
}

/// Re-checks the pairing conditions on a computed pairing.
pub fn verify_pairing(spec: &ComplexSpec, phi: &HomToMatrix, psi: &HomToMatrix, m: usize, p: &[BlockPairing]) -> bool {
    let eta = 1.0 / m as f64;
    let sa = phi.spectrum(spec);
    let sb = psi.spectrum(spec);
    let contains = |big: &[f64], pts: &[f64]| {
        pts.iter()
            .filter(|&&t| t >= eta && t <= 1.0 - eta)
            .all(|t| big.iter().any(|b| b == t))
    };
    p.iter().all(|bp| {
        contains(&bp.x, &sa.interior_points[bp.block])
            && contains(&bp.x_prime, &sb.interior_points[bp.block])
            && bp.lambda.iter().all(|(a, b)| (a - b).abs() < 2.0 * eta)
            && bp.lambda.len() == bp.x.len()
            && bp.x.len() == bp.x_prime.len()
    })
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AdmissibleSpectrum {
    pub s: Vec<usize>,
    pub c: Vec<usize>,
    pub pad: usize,
}

pub const ENUM_BOUND: usize = 64;

/// All `(s, c, pad)` with `Σ eⱼsⱼ + Σ fᵢcᵢ + pad = n` (`pad = 0` when unital).
pub fn enumerate_admissible_spectra(spec: &ComplexSpec, n: usize, unital: bool) -> Result<Vec<AdmissibleSpectrum>> {
    if n > ENUM_BOUND {
        return Err(Error::SizeMismatch(format!("n = {n} exceeds the bound {ENUM_BOUND}")));
    }
    let sizes: Vec<usize> = spec
        .e_shape()
        .sizes()
        .iter()
        .chain(spec.f_shape().sizes())
        .copied()
        .collect();
    let mut out = Vec::new();
    let mut cur = vec![0; sizes.len()];
    fn rec(
        idx: usize,
        left: usize,
        sizes: &[usize],
        cur: &mut Vec<usize>,
        l: usize,
        unital: bool,
        out: &mut Vec<AdmissibleSpectrum>,
    ) {
        if idx == sizes.len() {
            if left == 0 || !unital {
                out.push(AdmissibleSpectrum {
                    s: cur[..l].to_vec(),
                    c: cur[l..].to_vec(),
                    pad: left,
                });
            }
            return;
        }
        for r in 0..=left / sizes[idx] {
            cur[idx] = r;
            rec(idx + 1, left - r * sizes[idx], sizes, cur, l, unital, out);
        }
        cur[idx] = 0;
    }
    rec(0, n, &sizes, &mut cur, spec.l(), unital, &mut out);
    out.sort();
    Ok(out)
}

pub fn is_maximally_homogeneous(spec: &ComplexSpec, h: &HomToMatrix) -> bool {
    let sp = h.spectrum(spec);
    sp.delta_mults.iter().all(|&m| m <= 1)
        && sp
            .interior_points
            .iter()
            .all(|v| v.windows(2).all(|w| (w[1] - w[0]).abs() > POINT_SNAP))
}

/// Whether whole endpoint fibres can be extracted from the resolved delta
/// multiset so that every remaining delta multiplicity is at most one.
pub fn is_limit_of_max_homogeneous(spec: &ComplexSpec, h: &HomToMatrix) -> bool {
    let d = h.spectrum(spec).delta_mults;
    let fibres: Vec<Vec<usize>> = (0..spec.k())
        .flat_map(|i| Side::BOTH.map(|side| spec.endpoint_fibre(i, side)))
        .collect();
    extract(&d, &fibres, 0)
}

fn extract(d: &[usize], fibres: &[Vec<usize>], idx: usize) -> bool {
    if d.iter().all(|&x| x <= 1) {
        return true;
    }
    if idx == fibres.len() {
        return false;
    }
    let mut cur = d.to_vec();
    loop {
        if extract(&cur, fibres, idx + 1) {
            return true;
        }
        if cur.iter().zip(&fibres[idx]).any(|(&x, &f)| x < f) {
            return false;
        }
        for (x, f) in cur.iter_mut().zip(&fibres[idx]) {
            *x -= f;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_complex, make_element, random_element, RawComplex};
    use crate::findim::{norm, random_unitary, real_diag, zeros, BlockMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z23() -> ComplexSpec {
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

    fn example() -> ComplexSpec {
        build_complex(&RawComplex {
            e: vec![1, 1, 1],
            f: vec![2],
            mult0: vec![vec![1, 0, 1]],
            mult1: vec![vec![0, 1, 1]],
            perm0: None,
            perm1: None,
        })
        .unwrap()
    }

    #[test]
    fn eval_on_ramp() {
        let spec = z23();
        let e = BlockMatrix::new(spec.e_shape().clone(), vec![eye(2), zeros(3)]).unwrap();
        let f = (0..=240)
            .map(|k| BlockMatrix::identity(spec.f_shape()).scale_re(1.0 - k as f64 / 240.0))
            .collect();
        let el = make_element(&spec, f, e).unwrap();
        let h = HomToMatrix::diagonal(&spec, vec![2, 0], vec![SpecPoint::Interior { block: 0, t: 0.5 }], 0).unwrap();
        let v = eval_hom(&spec, &h, &el).unwrap();
        let want = real_diag(&[1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]);
        assert!(norm(&(v - want)) < 1e-14);
        let unit = Element::unit(&spec, 240);
        let one = HomToMatrix::diagonal(&spec, vec![0, 0], vec![SpecPoint::Interior { block: 0, t: 0.5 }], 0).unwrap();
        assert!(norm(&(one.eval(&spec, &unit) - eye(6))) < 1e-15);
        let ep = HomToMatrix::diagonal(&spec, vec![0, 0], vec![SpecPoint::Endpoint { block: 0, side: Side::Zero }], 0).unwrap();
        let x = random_element(&spec, 240, 3);
        assert!(norm(&(ep.eval(&spec, &x) - spec.beta_block(Side::Zero, 0, x.e_part()))) < 1e-15);
    }

    #[test]
    fn spectra() {
        let spec = z23();
        let h = HomToMatrix::diagonal(&spec, vec![0, 0], vec![SpecPoint::Endpoint { block: 0, side: Side::Zero }], 0).unwrap();
        let sp = h.spectrum(&spec);
        assert_eq!(sp.delta_mults, vec![3, 0]);
        assert!(sp.interior_points[0].is_empty());
        let empty = HomToMatrix::diagonal(&spec, vec![0, 0], vec![], 4).unwrap();
        assert!(empty.spectrum(&spec).is_empty());
    }

    #[test]
    fn pairing_of_multisets() {
        let p = pair_point_multisets(&[0.1, 0.5], &[0.48, 0.12], 0.05).unwrap();
        assert_eq!(p, vec![(0.1, 0.12), (0.5, 0.48)]);
        assert!(pair_point_multisets(&[0.1], &[], 0.05).is_none());
        assert!(pair_point_multisets(&[0.1], &[0.3], 0.05).is_none());
    }

    #[test]
    fn lemma_pairing_examples() {
        let spec = z23();
        let m = 8;
        let d = 1.0 / (2.0 * m as f64);
        let mk = |a: f64, b: f64| {
            HomToMatrix::diagonal(
                &spec,
                vec![0, 0],
                vec![SpecPoint::Interior { block: 0, t: a }, SpecPoint::Interior { block: 0, t: b }],
                0,
            )
            .unwrap()
        };
        let phi = mk(0.3, 0.5);
        let same = lemma_pairing(&spec, &phi, &phi, m, 1.0, 240).unwrap();
        assert_eq!(same[0].x, vec![0.3, 0.5]);
        assert_eq!(same[0].lambda, vec![(0.3, 0.3), (0.5, 0.5)]);
        let psi = mk(0.3 + d, 0.5 - d);
        let p = lemma_pairing(&spec, &phi, &psi, m, 1.0, 240).unwrap();
        assert!(p[0].lambda.iter().all(|(a, b)| (a - b).abs() < 2.0 / m as f64));
        assert!(verify_pairing(&spec, &phi, &psi, m, &p));
    }

    #[test]
    fn boundary_points_may_stay_unmatched() {
        let c = block_candidates(&[0.05], &[], 0.125);
        assert_eq!(c.len(), 1);
        assert!(c[0].x.is_empty() && c[0].x_prime.is_empty());
    }

    #[test]
    fn admissible_spectra_of_the_dimension_drop_example() {
        let spec = z23();
        let got = enumerate_admissible_spectra(&spec, 10, true).unwrap();
        let want = vec![
            AdmissibleSpectrum { s: vec![2, 0], c: vec![1], pad: 0 },
            AdmissibleSpectrum { s: vec![2, 2], c: vec![0], pad: 0 },
            AdmissibleSpectrum { s: vec![5, 0], c: vec![0], pad: 0 },
        ];
        assert_eq!(got, want);
        assert_eq!(enumerate_admissible_spectra(&spec, 0, true).unwrap().len(), 1);
        let ex = enumerate_admissible_spectra(&example(), 3, true).unwrap();
        assert!(ex.iter().all(|a| a.s.iter().sum::<usize>() + 2 * a.c[0] == 3));
        assert_eq!(ex.len(), 10 + 3);
    }

    #[test]
    fn homogeneity() {
        let spec = example();
        let phi0 = HomToMatrix::diagonal(&spec, vec![1, 0, 0], vec![SpecPoint::Endpoint { block: 0, side: Side::One }], 0).unwrap();
        let phi1 = HomToMatrix::diagonal(&spec, vec![1, 0, 0], vec![SpecPoint::Endpoint { block: 0, side: Side::Zero }], 0).unwrap();
        assert!(is_maximally_homogeneous(&spec, &phi0));
        assert!(!is_maximally_homogeneous(&spec, &phi1));
        assert!(is_limit_of_max_homogeneous(&spec, &phi1));
        let t = HomToMatrix::diagonal(&spec, vec![1, 0, 0], vec![SpecPoint::Interior { block: 0, t: 0.7 }], 0).unwrap();
        assert!(is_maximally_homogeneous(&spec, &t));
        let dup = HomToMatrix::diagonal(
            &spec,
            vec![0, 0, 0],
            vec![SpecPoint::Interior { block: 0, t: 0.5 }, SpecPoint::Interior { block: 0, t: 0.5 }],
            0,
        )
        .unwrap();
        assert!(!is_maximally_homogeneous(&spec, &dup));
        let z = z23();
        for a in enumerate_admissible_spectra(&z, 10, true).unwrap() {
            let points = vec![SpecPoint::Interior { block: 0, t: 0.5 }; a.c[0]];
            let h = HomToMatrix::diagonal(&z, a.s.clone(), points, 0).unwrap();
            assert!(!is_maximally_homogeneous(&z, &h));
            assert!(!is_limit_of_max_homogeneous(&z, &h));
        }
    }

    #[test]
    fn from_form_reorders_labels() {
        let spec = z23();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary(10, &mut rng);
        let form = DiagonalForm {
            labels: vec![
                Label::Point { block: 0, t: 0.25 },
                Label::Delta(0),
                Label::Delta(0),
            ],
            pad: 0,
        };
        let h = HomToMatrix::from_form(&spec, &form, &u).unwrap();
        assert_eq!(h.s, vec![2, 0]);
        let x = random_element(&spec, 240, 9);
        let direct = &u * form.eval(&spec, &x) * u.adjoint();
        assert!(norm(&(h.eval(&spec, &x) - direct)) < 1e-12);
    }
}
