//! Test-function families `H(η)` and `H̃(η)` for `η = 1/m`.

use serde::{Deserialize, Serialize};

use crate::complex::{ComplexSpec, Element, Side};
use crate::error::{Error, Result};
use crate::findim::{c, BlockMatrix, CMat};

pub const DEFAULT_CAP: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HMode {
    #[default]
    Contiguous,
    Full,
}

/// Type 1: `a = I` in E-block `j`, ramps on `[0, aᵢη]` and `[bᵢη, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Type1Spec {
    pub j: usize,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub m: usize,
}

/// Type 2: tent of width `η` around a union of closed grid intervals `[w_r, w_s]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Type2Spec {
    pub block: usize,
    /// Intervals `(r, s)` meaning `[r/m, s/m]`.
    pub x: Vec<(usize, usize)>,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum TestKind {
    Type1(Type1Spec),
    Type2(Type2Spec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub kind: TestKind,
    pub element: Element,
}

fn check_grid(grid: usize, m: usize) -> Result<usize> {
    if m == 0 || grid % m != 0 {
        return Err(Error::BadPartition(format!("grid {grid} is not divisible by m = {m}")));
    }
    Ok(grid / m)
}

fn check_type1(spec: &ComplexSpec, t1: &Type1Spec) -> Result<()> {
    if t1.j >= spec.l() {
        return Err(Error::BadPartition(format!("E-block {} out of range", t1.j + 1)));
    }
    if t1.a.len() != spec.k() || t1.b.len() != spec.k() {
        return Err(Error::BadPartition("one (a, b) pair per F-block is required".into()));
    }
    for (i, (&a, &b)) in t1.a.iter().zip(&t1.b).enumerate() {
        if a + 2 > b || b > t1.m {
            return Err(Error::BadPartition(format!(
                "component {}: need 0 <= a < a + 2 <= b <= m, got a = {a}, b = {b}, m = {}",
                i + 1,
                t1.m
            )));
        }
    }
    Ok(())
}

fn check_type2(spec: &ComplexSpec, t2: &Type2Spec) -> Result<()> {
    if t2.block >= spec.k() {
        return Err(Error::BadSupport(format!("F-block {} out of range", t2.block + 1)));
    }
    if t2.x.is_empty() {
        return Err(Error::BadSupport("empty support".into()));
    }
    for &(r, s) in &t2.x {
        if r >= s || r < 1 || s + 1 > t2.m {
            return Err(Error::BadSupport(format!(
                "[{r}/{m}, {s}/{m}] is not a nondegenerate interval inside [1/{m}, {}/{m}]",
                t2.m - 1,
                m = t2.m
            )));
        }
    }
    Ok(())
}

/// Type-1 profile values at grid index `k`: weights of `β₀(a)` and `β₁(a)`.
fn type1_weights(k: usize, a: usize, b: usize, q: usize) -> (f64, f64) {
    let w0 = if k <= (a + 1) * q {
        let d = k.saturating_sub(a * q);
        (q - d) as f64 / q as f64
    } else {
        0.0
    };
    let w1 = if k >= (b - 1) * q {
        let d = (b * q).saturating_sub(k);
        (q - d) as f64 / q as f64
    } else {
        0.0
    };
    (w0, w1)
}

fn type2_weight(k: usize, x: &[(usize, usize)], q: usize) -> f64 {
    let d = x
        .iter()
        .map(|&(r, s)| {
            if k < r * q {
                r * q - k
            } else {
                k.saturating_sub(s * q)
            }
        })
        .min()
        .unwrap_or(usize::MAX);
    if d >= q {
        0.0
    } else {
        (q - d) as f64 / q as f64
    }
}

pub fn type1_element(spec: &ComplexSpec, grid: usize, t1: &Type1Spec) -> Result<Element> {
    let n = spec.e_shape().size(t1.j);
    type1_with(spec, grid, t1, &CMat::identity(n, n))
}

/// Type-1 construction with `I_{e_j}` replaced by `x`.
pub fn type1_with(spec: &ComplexSpec, grid: usize, t1: &Type1Spec, x: &CMat) -> Result<Element> {
    let q = check_grid(grid, t1.m)?;
    check_type1(spec, t1)?;
    let mut e = BlockMatrix::zeros(spec.e_shape());
    *e.block_mut(t1.j) = x.clone();
    let b0 = spec.beta(Side::Zero, &e);
    let b1 = spec.beta(Side::One, &e);
    let f = (0..=grid)
        .map(|k| {
            let blocks = (0..spec.k())
                .map(|i| {
                    let (w0, w1) = type1_weights(k, t1.a[i], t1.b[i], q);
                    b0.block(i) * c(w0, 0.0) + b1.block(i) * c(w1, 0.0)
                })
                .collect();
            BlockMatrix::new(spec.f_shape().clone(), blocks).expect("shape")
        })
        .collect();
    Ok(Element::from_parts(f, e))
}

pub fn type2_element(spec: &ComplexSpec, grid: usize, t2: &Type2Spec) -> Result<Element> {
    let n = spec.f_shape().size(t2.block);
    type2_with(spec, grid, t2, &CMat::identity(n, n))
}

/// Type-2 construction with `I_{f_i}` replaced by `x`.
pub fn type2_with(spec: &ComplexSpec, grid: usize, t2: &Type2Spec, x: &CMat) -> Result<Element> {
    let q = check_grid(grid, t2.m)?;
    check_type2(spec, t2)?;
    let f = (0..=grid)
        .map(|k| {
            let mut s = BlockMatrix::zeros(spec.f_shape());
            let w = type2_weight(k, &t2.x, q);
            if w > 0.0 {
                *s.block_mut(t2.block) = x * c(w, 0.0);
            }
            s
        })
        .collect();
    Ok(Element::from_parts(f, BlockMatrix::zeros(spec.e_shape())))
}

fn ab_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for a in 0..=m {
        for b in a + 2..=m {
            v.push((a, b));
        }
    }
    v
}

fn type2_supports(m: usize, mode: HMode) -> Vec<Vec<(usize, usize)>> {
    if m < 3 {
        return Vec::new();
    }
    match mode {
        HMode::Contiguous => {
            let mut v = Vec::new();
            for r in 1..m - 1 {
                for s in r + 1..m {
                    v.push(vec![(r, s)]);
                }
            }
            v
        }
        HMode::Full => {
            let units = m - 2; // [r, r+1] for r in 1..=m-2
            let mut v = Vec::new();
            for mask in 1u64..(1u64 << units) {
                let mut x: Vec<(usize, usize)> = Vec::new();
                for bit in 0..units {
                    if mask >> bit & 1 == 1 {
                        let r = bit + 1;
                        match x.last_mut() {
                            Some(last) if last.1 == r => last.1 = r + 1,
                            _ => x.push((r, r + 1)),
                        }
                    }
                }
                v.push(x);
            }
            v
        }
    }
}

/// Index data of `H(1/m)` without building elements.
pub fn h_kinds(spec: &ComplexSpec, m: usize, mode: HMode, cap: usize) -> Result<Vec<TestKind>> {
    if m < 2 {
        return Err(Error::BadPartition(format!("m = {m} is too small")));
    }
    let pairs = ab_pairs(m);
    let k = spec.k() as u32;
    let type1_count = (pairs.len() as u128).saturating_pow(k) * spec.l() as u128;
    let type2_count = if mode == HMode::Full && m >= 3 {
        if m - 2 >= 64 {
            u128::MAX
        } else {
            ((1u128 << (m - 2)) - 1) * spec.k() as u128
        }
    } else {
        (type2_supports(m, mode).len() * spec.k()) as u128
    };
    let total = type1_count.saturating_add(type2_count);
    if total > cap as u128 {
        return Err(Error::ExplosionGuard {
            count: total.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    let mut out = Vec::new();
    for j in 0..spec.l() {
        let mut idx = vec![0usize; spec.k()];
        loop {
            out.push(TestKind::Type1(Type1Spec {
                j,
                a: idx.iter().map(|&p| pairs[p].0).collect(),
                b: idx.iter().map(|&p| pairs[p].1).collect(),
                m,
            }));
            // odometer over per-component pairs
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < pairs.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    for block in 0..spec.k() {
        for x in type2_supports(m, mode) {
            out.push(TestKind::Type2(Type2Spec { block, x, m }));
        }
    }
    Ok(out)
}

pub fn kind_element(spec: &ComplexSpec, grid: usize, kind: &TestKind) -> Result<Element> {
    match kind {
        TestKind::Type1(t) => type1_element(spec, grid, t),
        TestKind::Type2(t) => type2_element(spec, grid, t),
    }
}

pub fn build_h(spec: &ComplexSpec, grid: usize, m: usize, mode: HMode) -> Result<Vec<TestFunction>> {
    build_h_capped(spec, grid, m, mode, DEFAULT_CAP)
}

pub fn build_h_capped(
    spec: &ComplexSpec,
    grid: usize,
    m: usize,
    mode: HMode,
    cap: usize,
) -> Result<Vec<TestFunction>> {
    check_grid(grid, m)?;
    h_kinds(spec, m, mode, cap)?
        .into_iter()
        .map(|kind| {
            let element = kind_element(spec, grid, &kind)?;
            Ok(TestFunction { kind, element })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Raw,
    Herm,
    Anti,
}

/// One member of `H̃(η)`: an `H(η)` index with a matrix unit `(p, q)` of the relevant block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TildeSpec {
    pub kind: TestKind,
    pub p: usize,
    pub q: usize,
}

impl TildeSpec {
    pub fn is_diagonal(&self) -> bool {
        self.p == self.q
    }

    pub fn element(&self, spec: &ComplexSpec, grid: usize, variant: Variant) -> Result<Element> {
        let n = match &self.kind {
            TestKind::Type1(t) => spec.e_shape().size(t.j),
            TestKind::Type2(t) => spec.f_shape().size(t.block),
        };
        let mut unit = CMat::zeros(n, n);
        unit[(self.p, self.q)] = c(1.0, 0.0);
        let x = match variant {
            Variant::Raw => unit,
            Variant::Herm => (&unit + unit.adjoint()) * c(0.5, 0.0),
            Variant::Anti => (&unit - unit.adjoint()) * c(0.0, -0.5),
        };
        match &self.kind {
            TestKind::Type1(t) => type1_with(spec, grid, t, &x),
            TestKind::Type2(t) => type2_with(spec, grid, t, &x),
        }
    }
}

pub fn build_h_tilde(spec: &ComplexSpec, grid: usize, m: usize, mode: HMode) -> Result<Vec<TildeSpec>> {
    check_grid(grid, m)?;
    let mut out = Vec::new();
    for kind in h_kinds(spec, m, mode, DEFAULT_CAP)? {
        let n = match &kind {
            TestKind::Type1(t) => spec.e_shape().size(t.j),
            TestKind::Type2(t) => spec.f_shape().size(t.block),
        };
        for p in 0..n {
            for q in 0..n {
                out.push(TildeSpec {
                    kind: kind.clone(),
                    p,
                    q,
                });
            }
        }
    }
    if out.len() > DEFAULT_CAP {
        return Err(Error::ExplosionGuard {
            count: out.len(),
            cap: DEFAULT_CAP,
        });
    }
    Ok(out)
}

/// Supports of the type-2 members, as sets of points `r/m` scaled to a common denominator.
pub fn type2_support_sets(m: usize, mode: HMode, denom: usize) -> Vec<Vec<(usize, usize)>> {
    type2_supports(m, mode)
        .into_iter()
        .map(|x| x.into_iter().map(|(r, s)| (r * denom / m, s * denom / m)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_complex, make_element, RawComplex};
    use crate::findim::eye;

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

    fn scalar(el: &Element, k: usize) -> f64 {
        el.sample(k).block(0)[(0, 0)].re
    }

    #[test]
    fn type1_profiles() {
        let spec = z23();
        let t = Type1Spec { j: 0, a: vec![1], b: vec![3], m: 4 };
        let el = type1_element(&spec, 240, &t).unwrap();
        assert_eq!(el.sample(60).block(0), &eye(6));
        assert_eq!(el.sample(0).block(0), &eye(6));
        assert_eq!(scalar(&el, 90), 0.5);
        assert_eq!(el.sample(120).block(0), &CMat::zeros(6, 6));
        assert_eq!(el.sample(240).block(0), &CMat::zeros(6, 6));
        let t2 = Type1Spec { j: 1, ..t };
        let el = type1_element(&spec, 240, &t2).unwrap();
        assert_eq!(scalar(&el, 150), 0.5);
        assert_eq!(el.sample(240).block(0), &eye(6));
        assert!(matches!(
            type1_element(&spec, 240, &Type1Spec { j: 0, a: vec![0], b: vec![1], m: 4 }),
            Err(Error::BadPartition(_))
        ));
    }

    #[test]
    fn type2_profiles() {
        let spec = z23();
        let t = Type2Spec { block: 0, x: vec![(1, 2)], m: 4 };
        let el = type2_element(&spec, 240, &t).unwrap();
        assert_eq!(scalar(&el, 150), 0.5);
        assert_eq!(scalar(&el, 180), 0.0);
        assert_eq!(el.sample(90).block(0), &eye(6));
        assert!(matches!(
            type2_element(&spec, 240, &Type2Spec { block: 0, x: vec![(0, 1)], m: 4 }),
            Err(Error::BadSupport(_))
        ));
    }

    #[test]
    fn family_counts() {
        let spec = z23();
        let h = build_h(&spec, 240, 4, HMode::Contiguous).unwrap();
        let t1 = h.iter().filter(|t| matches!(t.kind, TestKind::Type1(_))).count();
        assert_eq!((t1, h.len() - t1), (12, 3));
        assert_eq!(build_h(&spec, 240, 2, HMode::Contiguous).unwrap().len(), 2);
        let full = h_kinds(&spec, 6, HMode::Full, DEFAULT_CAP).unwrap();
        let t2 = full.iter().filter(|k| matches!(k, TestKind::Type2(_))).count();
        assert_eq!(t2, 15);
        assert!(matches!(
            h_kinds(&spec, 40, HMode::Full, DEFAULT_CAP),
            Err(Error::ExplosionGuard { .. })
        ));
        for t in &h {
            make_element(&spec, t.element.f_samples().to_vec(), t.element.e_part().clone()).unwrap();
        }
    }

    #[test]
    fn tilde_counts() {
        let spec = z23();
        let ht = build_h_tilde(&spec, 240, 4, HMode::Contiguous).unwrap();
        let j1 = ht
            .iter()
            .filter(|s| matches!(&s.kind, TestKind::Type1(t) if t.j == 0 && t.a == vec![1] && t.b == vec![3]))
            .count();
        assert_eq!(j1, 4);
        assert_eq!(ht.len(), 6 * 4 + 6 * 9 + 3 * 36);
    }
}
