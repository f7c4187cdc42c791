//! Bundled complexes and maps used by the tests, the CLI and the report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::complex::{build_complex, ComplexSpec, RawComplex};
use crate::findim::{c, eye, random_unitary, zeros, CMat, Perm, UnitaryPath};
use crate::homspec::{HomToMatrix, SpecPoint};
use crate::standard::{EigenPath, Interval, Pwl, StandardMapToComplex, StandardMapToMatrix};

fn raw(e: Vec<usize>, f: Vec<usize>, mult0: Vec<Vec<usize>>, mult1: Vec<Vec<usize>>) -> RawComplex {
    RawComplex {
        e,
        f,
        mult0,
        mult1,
        perm0: None,
        perm1: None,
    }
}

/// Dimension drop algebra `Z_{p,q}`: `E = M_p ⊕ M_q`, `F = M_{pq}`.
pub fn z_pq(p: usize, q: usize) -> ComplexSpec {
    build_complex(&raw(vec![p, q], vec![p * q], vec![vec![q, 0]], vec![vec![0, p]])).expect("valid")
}

/// `E = ℂ³`, `F = M₂`, `β₀(a) = diag(a₁, a₃)`, `β₁(a) = diag(a₂, a₃)`.
pub fn example_complex() -> ComplexSpec {
    build_complex(&raw(vec![1, 1, 1], vec![2], vec![vec![1, 0, 1]], vec![vec![0, 1, 1]])).expect("valid")
}

/// `C(S¹)` as `A(ℂ, ℂ, id, id)`.
pub fn circle() -> ComplexSpec {
    build_complex(&raw(vec![1], vec![1], vec![vec![1]], vec![vec![1]])).expect("valid")
}

pub fn named(name: &str) -> Option<ComplexSpec> {
    match name {
        "z23" => Some(z_pq(2, 3)),
        "z25" => Some(z_pq(2, 5)),
        "example" => Some(example_complex()),
        "circle" => Some(circle()),
        "example-target" => Some(example_target()),
        "stage2-target" => Some(stage2_target()),
        _ => None,
    }
}

pub const NAMES: [&str; 6] = ["z23", "z25", "example", "circle", "example-target", "stage2-target"];

/// Target making the 2-standard map on the example complex a map between complexes:
/// E′-blocks record `a₁`, `f(½)`, `f(½)`, `a₂`.
pub fn example_target() -> ComplexSpec {
    let mut r = raw(vec![1, 2, 2, 1], vec![3], vec![vec![1, 1, 0, 0]], vec![vec![0, 0, 1, 1]]);
    r.perm1 = Some(vec![vec![1, 3, 2]]);
    build_complex(&r).expect("valid")
}

/// Swap of the last two coordinates in `M₃`.
pub fn swap23() -> Perm {
    Perm::from_images(vec![0, 2, 1]).expect("valid")
}

fn path(block: usize, f: Pwl) -> EigenPath {
    EigenPath::Path { block, f }
}

/// The 2-standard map `t ↦ diag(a₁, f(t+½))` on `[0,½]` and `P·diag(f(t−½), a₂)·P` on `[½,1]`.
pub fn example_map() -> StandardMapToComplex {
    let src = example_complex();
    let tgt = example_target();
    let p = swap23().matrix();
    let intervals = vec![
        Interval {
            lo: 0.0,
            hi: 0.5,
            paths: vec![EigenPath::Delta(0), path(0, Pwl::linear(0.0, 0.5, 0.5, 1.0))],
            pad: 0,
            u: UnitaryPath::constant(0.0, 0.5, eye(3)),
        },
        Interval {
            lo: 0.5,
            hi: 1.0,
            paths: vec![path(0, Pwl::linear(0.5, 1.0, 0.0, 0.5)), EigenPath::Delta(1)],
            pad: 0,
            u: UnitaryPath::constant(0.5, 1.0, p),
        },
    ];
    let comp = StandardMapToMatrix::new(&src, intervals).expect("valid");
    let half = SpecPoint::Interior { block: 0, t: 0.5 };
    let e_maps = vec![
        HomToMatrix::diagonal(&src, vec![1, 0, 0], vec![], 0).expect("valid"),
        HomToMatrix::diagonal(&src, vec![0, 0, 0], vec![half], 0).expect("valid"),
        HomToMatrix::diagonal(&src, vec![0, 0, 0], vec![half], 0).expect("valid"),
        HomToMatrix::diagonal(&src, vec![0, 1, 0], vec![], 0).expect("valid"),
    ];
    StandardMapToComplex::new(src, tgt, vec![comp], e_maps).expect("valid")
}

/// The block permutation displayed with the `Z₂,₃ → Z₂,₅` example: block rows
/// `(2, 3, 2, 3)` carry `I₂, I₃, I₂, I₃` in block columns `1, 3, 2, 4`.
pub fn z23_z25_permutation() -> Perm {
    let mut m: CMat = zeros(10);
    let rows = [(0, 2), (2, 3), (5, 2), (7, 3)];
    let cols = [(0, 2), (4, 3), (2, 2), (7, 3)];
    for ((r0, len), (c0, _)) in rows.iter().zip(cols) {
        for k in 0..*len {
            m[(r0 + k, c0 + k)] = c(1.0, 0.0);
        }
    }
    Perm::from_matrix(&m, 1e-12).expect("permutation matrix")
}

/// `φ_t(f, (a, b)) = u_t · diag(a ⊗ I₂, f(t)) · u_t*`, `u` from the identity to the displayed
/// permutation. With a seed, the path passes through a random unitary at `t = ½`.
pub fn z23_z25_map(seed: Option<u64>) -> StandardMapToComplex {
    let src = z_pq(2, 3);
    let tgt = z_pq(2, 5);
    let p = z23_z25_permutation().matrix();
    let u = match seed {
        None => UnitaryPath::geodesic(0.0, 1.0, eye(10), p),
        Some(s) => {
            let g = random_unitary(10, &mut ChaCha8Rng::seed_from_u64(s));
            UnitaryPath::through(vec![(0.0, eye(10)), (0.5, g), (1.0, p)])
        }
    }
    .expect("unitary path");
    let comp = StandardMapToMatrix::new(
        &src,
        vec![Interval {
            lo: 0.0,
            hi: 1.0,
            paths: vec![EigenPath::Delta(0), EigenPath::Delta(0), path(0, Pwl::linear(0.0, 1.0, 0.0, 1.0))],
            pad: 0,
            u,
        }],
    )
    .expect("valid");
    let e_maps = vec![
        HomToMatrix::diagonal(&src, vec![1, 0], vec![], 0).expect("valid"),
        HomToMatrix::diagonal(&src, vec![1, 1], vec![], 0).expect("valid"),
    ];
    StandardMapToComplex::new(src, tgt, vec![comp], e_maps).expect("valid")
}

/// Target of the second stage: `E = M₂ ⊕ M₅ ⊕ M₁₀`, `F = M₂₀`.
pub fn stage2_target() -> ComplexSpec {
    build_complex(&raw(vec![2, 5, 10], vec![20], vec![vec![5, 0, 1]], vec![vec![0, 2, 1]])).expect("valid")
}

/// `Z₂,₅ → stage-2 target`: `diag(f(t), f(ξ(t)))` with `ξ` sweeping `½ → 0.9 → 0.1 → ½`,
/// conjugated by a unitary loop through a random unitary at `t = ½`.
pub fn stage2_map(seed: u64) -> StandardMapToComplex {
    let src = z_pq(2, 5);
    let tgt = stage2_target();
    let g = random_unitary(20, &mut ChaCha8Rng::seed_from_u64(seed));
    let u = UnitaryPath::through(vec![(0.0, eye(20)), (0.5, g), (1.0, eye(20))]).expect("unitary path");
    let xi = Pwl::new(vec![(0.0, 0.5), (0.25, 0.9), (0.75, 0.1), (1.0, 0.5)]).expect("valid");
    let comp = StandardMapToMatrix::new(
        &src,
        vec![Interval {
            lo: 0.0,
            hi: 1.0,
            paths: vec![path(0, Pwl::linear(0.0, 1.0, 0.0, 1.0)), path(0, xi)],
            pad: 0,
            u,
        }],
    )
    .expect("valid");
    let e_maps = vec![
        HomToMatrix::diagonal(&src, vec![1, 0], vec![], 0).expect("valid"),
        HomToMatrix::diagonal(&src, vec![0, 1], vec![], 0).expect("valid"),
        HomToMatrix::diagonal(&src, vec![0, 0], vec![SpecPoint::Interior { block: 0, t: 0.5 }], 0).expect("valid"),
    ];
    StandardMapToComplex::new(src, tgt, vec![comp], e_maps).expect("valid")
}

/// Every bundled standard map.
pub fn corpus() -> Vec<(&'static str, StandardMapToComplex)> {
    vec![
        ("example", example_map()),
        ("z23-z25", z23_z25_map(None)),
        ("z23-z25-loop", z23_z25_map(Some(7))),
        ("stage2", stage2_map(11)),
    ]
}
