//! Labeled diagonal forms `diag(h(x₁), …, h(x_r), 0)` and permutations aligning them.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;

use crate::complex::{ComplexSpec, Section, Side};
use crate::findim::{zeros, CMat, Perm};

/// Points closer than this to an endpoint are treated as the endpoint.
pub const POINT_SNAP: f64 = 1e-12;
/// Tolerance for matching interior points during alignment.
pub const ALIGN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Label {
    Delta(usize),
    Point { block: usize, t: f64 },
}

impl Label {
    pub fn size(&self, spec: &ComplexSpec) -> usize {
        match *self {
            Label::Delta(j) => spec.e_shape().size(j),
            Label::Point { block, .. } => spec.f_shape().size(block),
        }
    }

    /// The endpoint a point label sits on, if any.
    pub fn endpoint(&self) -> Option<(usize, Side)> {
        match *self {
            Label::Point { block, t } if t <= POINT_SNAP => Some((block, Side::Zero)),
            Label::Point { block, t } if t >= 1.0 - POINT_SNAP => Some((block, Side::One)),
            _ => None,
        }
    }

    pub fn eval<S: Section + ?Sized>(&self, s: &S) -> CMat {
        match *self {
            Label::Delta(j) => s.at_delta(j),
            Label::Point { block, t } => match self.endpoint() {
                Some((_, side)) => s.at_point(block, side.t()),
                None => s.at_point(block, t),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalForm {
    pub labels: Vec<Label>,
    pub pad: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Atom {
    Delta(usize),
    Interior { block: usize, t: f64 },
    Pad,
}

impl Atom {
    fn size(&self, spec: &ComplexSpec) -> usize {
        match *self {
            Atom::Delta(j) => spec.e_shape().size(j),
            Atom::Interior { block, .. } => spec.f_shape().size(block),
            Atom::Pad => 1,
        }
    }

    fn cmp_key(&self, other: &Atom) -> Ordering {
        fn rank(a: &Atom) -> u8 {
            match a {
                Atom::Delta(_) => 0,
                Atom::Interior { .. } => 1,
                Atom::Pad => 2,
            }
        }
        match (self, other) {
            (Atom::Delta(a), Atom::Delta(b)) => a.cmp(b),
            (Atom::Interior { block: a, t: s }, Atom::Interior { block: b, t: u }) => {
                a.cmp(b).then(s.total_cmp(u))
            }
            _ => rank(self).cmp(&rank(other)),
        }
    }

    fn matches(&self, other: &Atom, tol: f64) -> bool {
        match (self, other) {
            (Atom::Delta(a), Atom::Delta(b)) => a == b,
            (Atom::Interior { block: a, t: s }, Atom::Interior { block: b, t: u }) => {
                a == b && (s - u).abs() <= tol
            }
            (Atom::Pad, Atom::Pad) => true,
            _ => false,
        }
    }
}

/// A form rewritten over irreducible atoms: `form = P · diag(atoms) · P*`.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub atoms: Vec<Atom>,
    pub perm: Perm,
}

/// Spectrum with endpoint fibres resolved into deltas.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumMultiset {
    pub delta_mults: Vec<usize>,
    pub interior_points: Vec<Vec<f64>>,
}

impl SpectrumMultiset {
    pub fn approx_eq(&self, other: &SpectrumMultiset, tol: f64) -> bool {
        self.delta_mults == other.delta_mults
            && self.interior_points.len() == other.interior_points.len()
            && self
                .interior_points
                .iter()
                .zip(&other.interior_points)
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol))
    }

    pub fn is_empty(&self) -> bool {
        self.delta_mults.iter().all(|&m| m == 0) && self.interior_points.iter().all(Vec::is_empty)
    }
}

impl DiagonalForm {
    pub fn size(&self, spec: &ComplexSpec) -> usize {
        self.labels.iter().map(|l| l.size(spec)).sum::<usize>() + self.pad
    }

    pub fn eval<S: Section + ?Sized>(&self, spec: &ComplexSpec, s: &S) -> CMat {
        let n = self.size(spec);
        let mut out = zeros(n);
        let mut off = 0;
        for l in &self.labels {
            let m = l.eval(s);
            let k = m.nrows();
            out.view_mut((off, off), (k, k)).copy_from(&m);
            off += k;
        }
        out
    }

    pub fn resolve(&self, spec: &ComplexSpec) -> Resolved {
        let mut atoms = Vec::new();
        let mut images = Vec::new();
        let mut off = 0;
        for l in &self.labels {
            let size = l.size(spec);
            match (*l, l.endpoint()) {
                (Label::Delta(j), _) => {
                    atoms.push(Atom::Delta(j));
                    images.extend(off..off + size);
                }
                (Label::Point { block, .. }, Some((_, side))) => {
                    let p = spec.perm(side).perm(block);
                    for j in spec.fibre_atoms(block, side) {
                        atoms.push(Atom::Delta(j));
                    }
                    images.extend((0..size).map(|k| off + p.apply(k)));
                }
                (Label::Point { block, t }, None) => {
                    atoms.push(Atom::Interior { block, t });
                    images.extend(off..off + size);
                }
            }
            off += size;
        }
        for k in 0..self.pad {
            atoms.push(Atom::Pad);
            images.push(off + k);
        }
        Resolved {
            atoms,
            perm: Perm::from_images(images).expect("resolution is a bijection"),
        }
    }

    pub fn spectrum(&self, spec: &ComplexSpec) -> SpectrumMultiset {
        spectrum_of_atoms(spec, &self.resolve(spec).atoms)
    }
}

pub fn spectrum_of_atoms(spec: &ComplexSpec, atoms: &[Atom]) -> SpectrumMultiset {
    let mut delta_mults = vec![0; spec.l()];
    let mut interior_points = vec![Vec::new(); spec.k()];
    for a in atoms {
        match *a {
            Atom::Delta(j) => delta_mults[j] += 1,
            Atom::Interior { block, t } => interior_points[block].push(t),
            Atom::Pad => {}
        }
    }
    for v in &mut interior_points {
        v.sort_by(|a, b| a.total_cmp(b));
    }
    SpectrumMultiset {
        delta_mults,
        interior_points,
    }
}

fn canonical_order(atoms: &[Atom]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..atoms.len()).collect();
    idx.sort_by(|&a, &b| atoms[a].cmp_key(&atoms[b]));
    idx
}

pub fn describe_atoms(atoms: &[Atom]) -> String {
    let mut s = String::new();
    for (n, &k) in canonical_order(atoms).iter().enumerate() {
        if n > 0 {
            s.push_str(", ");
        }
        match atoms[k] {
            Atom::Delta(j) => write!(s, "δ{}", j + 1).unwrap(),
            Atom::Interior { block, t } => write!(s, "({t}, {})", block + 1).unwrap(),
            Atom::Pad => s.push('0'),
        }
    }
    format!("{{{s}}}")
}

/// A permutation `X` with `X · form_a · X* = form_b`, found by sorting the resolved
/// atoms canonically (delta index, then component, then point, ties by position).
pub fn align(spec: &ComplexSpec, a: &Resolved, b: &Resolved, tol: f64) -> Option<Perm> {
    if a.atoms.len() != b.atoms.len() || a.perm.len() != b.perm.len() {
        return None;
    }
    let oa = canonical_order(&a.atoms);
    let ob = canonical_order(&b.atoms);
    if !oa
        .iter()
        .zip(&ob)
        .all(|(&x, &y)| a.atoms[x].matches(&b.atoms[y], tol))
    {
        return None;
    }
    let offsets = |atoms: &[Atom]| {
        let mut v = Vec::with_capacity(atoms.len());
        let mut off = 0;
        for at in atoms {
            v.push(off);
            off += at.size(spec);
        }
        v
    };
    let off_a = offsets(&a.atoms);
    let off_b = offsets(&b.atoms);
    let mut s = vec![0; a.perm.len()];
    for (&x, &y) in oa.iter().zip(&ob) {
        for k in 0..a.atoms[x].size(spec) {
            s[off_a[x] + k] = off_b[y] + k;
        }
    }
    let s = Perm::from_images(s).expect("atom matching is a bijection");
    Some(b.perm.compose(&s).compose(&a.perm.inverse()))
}

/// Aligns two forms over possibly different complexes' labels, given already resolved data.
pub fn align_forms(spec: &ComplexSpec, a: &DiagonalForm, b: &DiagonalForm, tol: f64) -> Option<Perm> {
    align(spec, &a.resolve(spec), &b.resolve(spec), tol)
}

/// Resolution of a direct sum of resolved pieces placed consecutively.
pub fn concat(parts: &[Resolved]) -> Resolved {
    let mut atoms = Vec::new();
    let mut perms = Vec::new();
    for p in parts {
        atoms.extend_from_slice(&p.atoms);
        perms.push(p.perm.clone());
    }
    Resolved {
        atoms,
        perm: Perm::direct_sum(&perms),
    }
}

impl Resolved {
    /// `outer · form`, i.e. the resolution of `outer · diag · outer*`.
    pub fn conjugated(&self, outer: &Perm) -> Resolved {
        Resolved {
            atoms: self.atoms.clone(),
            perm: outer.compose(&self.perm),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_complex, random_element, RawComplex};
    use crate::findim::norm;

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
    fn resolution_reproduces_the_form() {
        let spec = build_complex(&RawComplex {
            e: vec![1, 2],
            f: vec![5],
            mult0: vec![vec![1, 2]],
            mult1: vec![vec![3, 1]],
            perm0: Some(vec![vec![3, 1, 5, 2, 4]]),
            perm1: Some(vec![vec![2, 1, 3, 5, 4]]),
        })
        .unwrap();
        let el = random_element(&spec, 240, 1);
        let form = DiagonalForm {
            labels: vec![
                Label::Delta(1),
                Label::Point { block: 0, t: 0.0 },
                Label::Point { block: 0, t: 0.3 },
                Label::Point { block: 0, t: 1.0 },
            ],
            pad: 2,
        };
        let r = form.resolve(&spec);
        let atom_form = DiagonalForm {
            labels: r
                .atoms
                .iter()
                .filter_map(|a| match *a {
                    Atom::Delta(j) => Some(Label::Delta(j)),
                    Atom::Interior { block, t } => Some(Label::Point { block, t }),
                    Atom::Pad => None,
                })
                .collect(),
            pad: 2,
        };
        let lhs = form.eval(&spec, &el);
        let rhs = r.perm.conj(&atom_form.eval(&spec, &el));
        assert!(norm(&(lhs - rhs)) < 1e-14);
    }

    #[test]
    fn alignment_at_the_example_breakpoint() {
        let spec = example();
        let left = DiagonalForm {
            labels: vec![Label::Delta(0), Label::Point { block: 0, t: 1.0 }],
            pad: 0,
        };
        let right = DiagonalForm {
            labels: vec![Label::Point { block: 0, t: 0.0 }, Label::Delta(1)],
            pad: 0,
        };
        let x = align_forms(&spec, &left, &right, ALIGN_TOL).unwrap();
        assert_eq!(x.images(), &[0, 2, 1]);
        for seed in 0..5 {
            let el = random_element(&spec, 240, seed);
            let d = x.conj(&left.eval(&spec, &el)) - right.eval(&spec, &el);
            assert!(norm(&d) < 1e-14);
        }
    }

    #[test]
    fn misaligned_forms_are_rejected() {
        let spec = example();
        let a = DiagonalForm {
            labels: vec![Label::Delta(0), Label::Point { block: 0, t: 0.5 }],
            pad: 0,
        };
        let b = DiagonalForm {
            labels: vec![Label::Delta(0), Label::Point { block: 0, t: 0.5 + 1.0 / 240.0 }],
            pad: 0,
        };
        assert!(align_forms(&spec, &a, &b, ALIGN_TOL).is_none());
        assert!(align_forms(&spec, &a, &a, ALIGN_TOL).unwrap().is_identity());
    }
}
