//! JSON interchange formats. Matrices are row-major arrays of `[re, im]` pairs;
//! block and E-block indices are 1-based.

use serde::{Deserialize, Serialize};

use crate::cartan::HypothesisReport;
use crate::complex::{build_complex, make_element_with, ComplexSpec, Element, ElementChecks, RawComplex, Side};
use crate::cu::{CuElement, RankFn};
use crate::error::{Error, Result};
use crate::findim::{c, BlockMatrix, CMat, UnitaryPath};
use crate::homspec::{HomToMatrix, SpecPoint};
use crate::standard::{EigenPath, HomFamily, Interval, Pwl, StandardMapToComplex, StandardMapToMatrix};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Schema(format!("matrix must be square, got {n} rows of unequal length")));
    }
    Ok(CMat::from_fn(n, n, |r, k| c(rows[r][k][0], rows[r][k][1])))
}

fn blocks_to_json(b: &BlockMatrix) -> Vec<MatrixJson> {
    b.blocks().iter().map(matrix_to_json).collect()
}

fn blocks_from_json(shape: &crate::findim::BlockShape, bs: &[MatrixJson]) -> Result<BlockMatrix> {
    let blocks = bs.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
    BlockMatrix::new(shape.clone(), blocks)
}

pub fn complex_to_json(spec: &ComplexSpec) -> RawComplex {
    spec.to_raw()
}

pub fn complex_from_json(raw: &RawComplex) -> Result<ComplexSpec> {
    build_complex(raw)
}

/// `samples[k][i]` is F-block `i` at `t = k/N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementJson {
    pub samples: Vec<Vec<MatrixJson>>,
    pub e_part: Vec<MatrixJson>,
}

pub fn element_to_json(el: &Element) -> ElementJson {
    ElementJson {
        samples: el.f_samples().iter().map(blocks_to_json).collect(),
        e_part: blocks_to_json(el.e_part()),
    }
}

pub fn element_from_json(spec: &ComplexSpec, j: &ElementJson, checks: ElementChecks) -> Result<Element> {
    let f = j
        .samples
        .iter()
        .map(|s| blocks_from_json(spec.f_shape(), s))
        .collect::<Result<Vec<_>>>()?;
    let e = blocks_from_json(spec.e_shape(), &j.e_part)?;
    make_element_with(spec, f, e, checks)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PointJson {
    Interior { i: usize, t: f64 },
    Endpoint { i: usize, side: Side },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomJson {
    pub n: usize,
    pub s: Vec<usize>,
    pub points: Vec<PointJson>,
    pub pad: usize,
    /// Identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<MatrixJson>,
}

fn one_based(i: usize, what: &str) -> Result<usize> {
    i.checked_sub(1)
        .ok_or_else(|| Error::Schema(format!("{what} indices are 1-based, got 0")))
}

pub fn hom_to_json(h: &HomToMatrix) -> HomJson {
    let points = h
        .points
        .iter()
        .filter_map(|p| match *p {
            SpecPoint::Interior { block, t } => Some(PointJson::Interior { i: block + 1, t }),
            SpecPoint::Endpoint { block, side } => Some(PointJson::Endpoint { i: block + 1, side }),
            SpecPoint::Delta(_) => None,
        })
        .collect();
    HomJson {
        n: h.n,
        s: h.s.clone(),
        points,
        pad: h.pad,
        u: Some(matrix_to_json(&h.u)),
    }
}

pub fn hom_from_json(spec: &ComplexSpec, j: &HomJson) -> Result<HomToMatrix> {
    let points = j
        .points
        .iter()
        .map(|p| {
            Ok(match *p {
                PointJson::Interior { i, t } => {
                    if !(0.0..=1.0).contains(&t) {
                        return Err(Error::Schema(format!("point t = {t} outside [0, 1]")));
                    }
                    SpecPoint::at(one_based(i, "F-block")?, t)
                }
                PointJson::Endpoint { i, side } => SpecPoint::Endpoint { block: one_based(i, "F-block")?, side },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let h = match &j.u {
        Some(u) => HomToMatrix::new(spec, j.s.clone(), points, j.pad, matrix_from_json(u)?)?,
        None => HomToMatrix::diagonal(spec, j.s.clone(), points, j.pad)?,
    };
    if h.n != j.n {
        return Err(Error::SizeMismatch(format!("declared n = {} but the spectrum has size {}", j.n, h.n)));
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EigenPathJson {
    Delta { j: usize },
    Path { i: usize, breaks: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitarySample {
    pub t: f64,
    pub u: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalJson {
    pub paths: Vec<EigenPathJson>,
    pub pad: usize,
    /// Knots of a piecewise geodesic unitary path.
    pub u: Vec<UnitarySample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentJson {
    pub partition: Vec<f64>,
    pub intervals: Vec<IntervalJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardMapJson {
    pub source: RawComplex,
    pub target: RawComplex,
    pub components: Vec<ComponentJson>,
    pub e_maps: Vec<HomJson>,
}

pub fn component_to_json(sm: &StandardMapToMatrix) -> ComponentJson {
    let intervals = sm
        .intervals()
        .iter()
        .map(|iv| {
            let paths = iv
                .paths
                .iter()
                .map(|p| match p {
                    EigenPath::Delta(j) => EigenPathJson::Delta { j: j + 1 },
                    EigenPath::Path { block, f } => EigenPathJson::Path { i: block + 1, breaks: f.breaks.clone() },
                })
                .collect();
            let mut ts = iv.u.knot_times();
            ts.dedup();
            let u = ts
                .into_iter()
                .map(|t| UnitarySample { t, u: matrix_to_json(&iv.u.eval(t)) })
                .collect();
            IntervalJson { paths, pad: iv.pad, u }
        })
        .collect();
    ComponentJson { partition: sm.partition(), intervals }
}

pub fn component_from_json(spec: &ComplexSpec, j: &ComponentJson) -> Result<StandardMapToMatrix> {
    if j.partition.len() != j.intervals.len() + 1 {
        return Err(Error::BadPartition(format!(
            "{} partition points for {} intervals",
            j.partition.len(),
            j.intervals.len()
        )));
    }
    let mut intervals = Vec::new();
    for (k, iv) in j.intervals.iter().enumerate() {
        let (lo, hi) = (j.partition[k], j.partition[k + 1]);
        let paths = iv
            .paths
            .iter()
            .map(|p| {
                Ok(match p {
                    EigenPathJson::Delta { j } => EigenPath::Delta(one_based(*j, "E-block")?),
                    EigenPathJson::Path { i, breaks } => EigenPath::Path {
                        block: one_based(*i, "F-block")?,
                        f: Pwl::new(breaks.clone())?,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let knots = iv
            .u
            .iter()
            .map(|s| Ok((s.t, matrix_from_json(&s.u)?)))
            .collect::<Result<Vec<_>>>()?;
        let u = match knots.len() {
            1 => UnitaryPath::constant(lo, hi, knots[0].1.clone()),
            _ => UnitaryPath::through(knots)?,
        };
        if u.domain() != (lo, hi) {
            return Err(Error::BadPartition(format!("unitary samples of interval {} do not span [{lo}, {hi}]", k + 1)));
        }
        intervals.push(Interval { lo, hi, paths, pad: iv.pad, u });
    }
    StandardMapToMatrix::new(spec, intervals)
}

pub fn standard_map_to_json(map: &StandardMapToComplex) -> StandardMapJson {
    StandardMapJson {
        source: map.source.to_raw(),
        target: map.target.to_raw(),
        components: map.components.iter().map(component_to_json).collect(),
        e_maps: map.e_maps.iter().map(hom_to_json).collect(),
    }
}

pub fn standard_map_from_json(j: &StandardMapJson) -> Result<StandardMapToComplex> {
    let source = build_complex(&j.source)?;
    let target = build_complex(&j.target)?;
    let components = j
        .components
        .iter()
        .map(|c| component_from_json(&source, c))
        .collect::<Result<Vec<_>>>()?;
    let e_maps = j.e_maps.iter().map(|h| hom_from_json(&source, h)).collect::<Result<Vec<_>>>()?;
    StandardMapToComplex::new(source, target, components, e_maps)
}

/// A sampled homomorphism: `components[i][k]` is F′-block `i` at `t = k/grid`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomFamilyJson {
    pub source: RawComplex,
    pub target: RawComplex,
    pub grid: usize,
    pub components: Vec<Vec<HomJson>>,
    pub e_maps: Vec<HomJson>,
}

pub fn family_to_json(source: &ComplexSpec, target: &ComplexSpec, f: &HomFamily) -> HomFamilyJson {
    HomFamilyJson {
        source: source.to_raw(),
        target: target.to_raw(),
        grid: f.grid,
        components: f.components.iter().map(|c| c.iter().map(hom_to_json).collect()).collect(),
        e_maps: f.e_maps.iter().map(hom_to_json).collect(),
    }
}

pub fn family_from_json(j: &HomFamilyJson) -> Result<(ComplexSpec, ComplexSpec, HomFamily)> {
    let source = build_complex(&j.source)?;
    let target = build_complex(&j.target)?;
    let components = j
        .components
        .iter()
        .map(|c| c.iter().map(|h| hom_from_json(&source, h)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let e_maps = j.e_maps.iter().map(|h| hom_from_json(&source, h)).collect::<Result<Vec<_>>>()?;
    Ok((source, target, HomFamily { grid: j.grid, components, e_maps }))
}

/// `ranks[i]` lists `(t_j, value on (t_j, t_{j+1}))`; `points[i]` the values at the breaks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuElementJson {
    pub ranks: Vec<Vec<(f64, usize)>>,
    pub points: Vec<Vec<(f64, usize)>>,
    pub e_ranks: Vec<usize>,
    pub eps: f64,
}

pub fn cu_to_json(cu: &CuElement) -> CuElementJson {
    CuElementJson {
        ranks: cu.ranks.iter().map(|r| r.segments.clone()).collect(),
        points: cu.ranks.iter().map(|r| r.points.clone()).collect(),
        e_ranks: cu.e_ranks.clone(),
        eps: cu.eps,
    }
}

pub fn cu_from_json(j: &CuElementJson) -> Result<CuElement> {
    if j.ranks.len() != j.points.len() {
        return Err(Error::Schema("ranks and points differ in length".into()));
    }
    Ok(CuElement {
        ranks: j
            .ranks
            .iter()
            .zip(&j.points)
            .map(|(s, p)| RankFn { segments: s.clone(), points: p.clone() })
            .collect(),
        e_ranks: j.e_ranks.clone(),
        eps: j.eps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisJson {
    pub hypothesis: String,
    pub pass: bool,
    pub worst_residual: f64,
    pub witness: Option<ElementJson>,
}

pub fn hypothesis_to_json(h: &HypothesisReport) -> HypothesisJson {
    HypothesisJson {
        hypothesis: h.hypothesis.clone(),
        pass: h.pass,
        worst_residual: h.worst_residual,
        witness: h.witness_element.as_ref().map(element_to_json),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{corpus, named, NAMES};
    use crate::complex::random_element;
    use crate::testfn::{type2_element, Type2Spec};

    #[test]
    fn complexes_round_trip() {
        for name in NAMES {
            let spec = named(name).unwrap();
            let text = serde_json::to_string(&complex_to_json(&spec)).unwrap();
            let raw: RawComplex = serde_json::from_str(&text).unwrap();
            assert_eq!(complex_from_json(&raw).unwrap(), spec, "{name}");
        }
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = r#"{"e":[1],"f":[1],"mult0":[[1]],"mult1":[[1]],"colour":1}"#;
        assert!(serde_json::from_str::<RawComplex>(text).is_err());
        let text = r#"{"n":1,"s":[1],"points":[],"pad":0,"extra":2}"#;
        assert!(serde_json::from_str::<HomJson>(text).is_err());
    }

    #[test]
    fn hom_points_parse_both_shapes() {
        let spec = named("z23").unwrap();
        let text = r#"{"n":12,"s":[0,0],"points":[{"i":1,"t":0.25},{"i":1,"side":1}],"pad":0}"#;
        let j: HomJson = serde_json::from_str(text).unwrap();
        let h = hom_from_json(&spec, &j).unwrap();
        assert_eq!(h.points[0], SpecPoint::Interior { block: 0, t: 0.25 });
        assert_eq!(h.points[1], SpecPoint::Endpoint { block: 0, side: Side::One });
        let back = hom_from_json(&spec, &hom_to_json(&h)).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn element_round_trip() {
        let spec = named("example").unwrap();
        let x = random_element(&spec, 24, 3);
        let text = serde_json::to_string(&element_to_json(&x)).unwrap();
        let j: ElementJson = serde_json::from_str(&text).unwrap();
        let y = element_from_json(&spec, &j, ElementChecks::default()).unwrap();
        assert_eq!(x.f_samples().len(), y.f_samples().len());
        assert!(x.sub(&y).sup_norm() < 1e-15);
    }

    #[test]
    fn standard_maps_round_trip() {
        for (name, map) in corpus() {
            let text = serde_json::to_string(&standard_map_to_json(&map)).unwrap();
            let j: StandardMapJson = serde_json::from_str(&text).unwrap();
            let back = standard_map_from_json(&j).unwrap();
            let x = type2_element(&map.source, 240, &Type2Spec { block: 0, x: vec![(1, 2)], m: 4 }).unwrap();
            for k in 0..=40 {
                let t = k as f64 / 40.0;
                let d = map.f_value(t, &x).sub(&back.f_value(t, &x));
                assert!(crate::findim::op_norm(&d) < 1e-10, "{name} at {t}");
            }
        }
    }

    #[test]
    fn family_round_trip() {
        let map = crate::catalog::example_map();
        let fam = map.family(12);
        let j = family_to_json(&map.source, &map.target, &fam);
        let text = serde_json::to_string(&j).unwrap();
        let (s, t, back) = family_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(s, map.source);
        assert_eq!(t, map.target);
        assert_eq!(back.components[0].len(), 13);
    }

    #[test]
    fn cu_round_trip() {
        let spec = named("z23").unwrap();
        let x = type2_element(&spec, 240, &Type2Spec { block: 0, x: vec![(1, 2)], m: 4 }).unwrap();
        let cu = crate::cu::cu_rank(&spec, &x, 0.5).unwrap();
        let text = serde_json::to_string(&cu_to_json(&cu)).unwrap();
        assert_eq!(cu_from_json(&serde_json::from_str(&text).unwrap()).unwrap(), cu);
    }
}
