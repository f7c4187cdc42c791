use nccw_core::cartan::expectation;
use nccw_core::catalog::{corpus, example_complex, named, z_pq, NAMES};
use nccw_core::complex::{make_element, random_element, random_general_element, ComplexSpec, Element, Side};
use nccw_core::cu::{cu_compare_homs, cu_rank, DEFAULT_EPS};
use nccw_core::findim::{eig_sorted, norm, random_hermitian, random_unitary, real_diag, BlockMatrix, CMat, UnitaryPath};
use nccw_core::homspec::{enumerate_admissible_spectra, is_maximally_homogeneous, HomToMatrix, SpecPoint};
use nccw_core::standard::{check_pointwise_equiv, extract_complex_d_pair, rebase_via_theta};
use nccw_core::testfn::{build_h, h_kinds, kind_element, type2_support_sets, HMode, TestKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bundled(k: usize) -> ComplexSpec {
    named(NAMES[k % NAMES.len()]).unwrap()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_e(spec: &ComplexSpec, rng: &mut ChaCha8Rng) -> BlockMatrix {
    let blocks = spec.e_shape().sizes().iter().map(|&n| random_hermitian(n, 1.0, rng)).collect();
    BlockMatrix::new(spec.e_shape().clone(), blocks).unwrap()
}

/// A unital hom on Z₂,₃ of size `n` with random interior points on the 60-grid and a
/// random conjugator. Off the grid, products of elements are not the interpolated products.
fn random_hom(n: usize, rng: &mut ChaCha8Rng) -> HomToMatrix {
    let spec = z_pq(2, 3);
    let sp = enumerate_admissible_spectra(&spec, n, true).unwrap();
    let a = &sp[rng.random_range(0..sp.len())];
    let pts = (0..a.c[0]).map(|_| SpecPoint::at(0, rng.random_range(1..60) as f64 / 60.0)).collect();
    let u = random_unitary(n, rng);
    HomToMatrix::diagonal(&spec, a.s.clone(), pts, 0).unwrap().conjugated(&u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_is_unitarily_invariant(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(n, 1.0, &mut rng);
        let u = random_unitary(n, &mut rng);
        let conj = &u * &m * u.adjoint();
        prop_assert!(max_gap(&eig_sorted(&m).unwrap(), &eig_sorted(&conj).unwrap()) < 1e-8);
    }

    #[test]
    fn weyl_variation(seed in any::<u64>(), n in 1usize..9, scale in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_hermitian(n, 1.0, &mut rng);
        let b = random_hermitian(n, scale, &mut rng);
        let gap = max_gap(&eig_sorted(&a).unwrap(), &eig_sorted(&b).unwrap());
        prop_assert!(gap <= norm(&(a - b)) + 1e-9);
    }

    #[test]
    fn embedding_is_unital_and_multiplicative(seed in any::<u64>(), k in 0usize..6, one in any::<bool>()) {
        let spec = bundled(k);
        let side = if one { Side::One } else { Side::Zero };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_e(&spec, &mut rng), random_e(&spec, &mut rng));
        let lhs = spec.beta(side, &a.mul(&b));
        let rhs = spec.beta(side, &a).mul(&spec.beta(side, &b));
        for (x, y) in lhs.blocks().iter().zip(rhs.blocks()) {
            prop_assert!(norm(&(x - y)) < 1e-12);
        }
        let unit = spec.beta(side, &BlockMatrix::identity(spec.e_shape()));
        prop_assert_eq!(unit, BlockMatrix::identity(spec.f_shape()));
    }

    #[test]
    fn geodesic_stays_unitary(seed in any::<u64>(), n in 1usize..8, t in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u0, u1) = (random_unitary(n, &mut rng), random_unitary(n, &mut rng));
        let g = UnitaryPath::geodesic(0.0, 1.0, u0, u1).unwrap().eval(t);
        prop_assert!(norm(&(g.adjoint() * &g - CMat::identity(n, n))) <= 1e-8);
    }

    #[test]
    fn elements_rebuild_and_norm_is_cstar(seed in any::<u64>(), k in 0usize..6) {
        let spec = bundled(k);
        let x = random_general_element(&spec, 60, seed);
        let y = make_element(&spec, x.f_samples().to_vec(), x.e_part().clone()).unwrap();
        prop_assert_eq!(&y, &x);
        let n = x.sup_norm();
        prop_assert!((x.adjoint().mul(&x).sup_norm() - n * n).abs() < 1e-8);
    }

    #[test]
    fn homs_satisfy_the_cstar_identity(seed in any::<u64>(), n in 6usize..13) {
        let spec = z_pq(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hom(n, &mut rng);
        let x = random_general_element(&spec, 60, seed);
        let hx = norm(&h.eval(&spec, &x));
        prop_assert!((hx * hx - norm(&h.eval(&spec, &x.adjoint().mul(&x)))).abs() < 1e-8);
        let w = random_unitary(n, &mut rng);
        prop_assert_eq!(h.conjugated(&w).spectrum(&spec), h.spectrum(&spec));
    }

    #[test]
    fn close_homs_pair_their_eigenvalues(seed in any::<u64>(), n in 6usize..13) {
        let spec = z_pq(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_hom(n, &mut rng);
        let w = UnitaryPath::geodesic(0.0, 1.0, CMat::identity(n, n), random_unitary(n, &mut rng))
            .unwrap()
            .eval(0.01);
        let psi = phi.conjugated(&w);
        let hs = build_h(&spec, 60, 4, HMode::Contiguous).unwrap();
        let eps = hs.iter().map(|h| norm(&(phi.eval(&spec, &h.element) - psi.eval(&spec, &h.element)))).fold(0.0, f64::max);
        for h in &hs {
            let a = eig_sorted(&phi.eval(&spec, &h.element)).unwrap();
            let b = eig_sorted(&psi.eval(&spec, &h.element)).unwrap();
            prop_assert!(max_gap(&a, &b) <= eps + 1e-12);
        }
    }

    #[test]
    fn expectation_is_unital_positive_and_valid(seed in any::<u64>(), k in 0usize..6) {
        let spec = bundled(k);
        let x = random_general_element(&spec, 60, seed);
        let p = expectation(&spec, &x).unwrap();
        prop_assert!(p.sup_norm() <= x.sup_norm() + 1e-9);
        prop_assert!(make_element(&spec, p.f_samples().to_vec(), p.e_part().clone()).is_ok());
        let pos = expectation(&spec, &x.adjoint().mul(&x)).unwrap();
        prop_assert!(pos.min_eigenvalue().unwrap() >= -1e-12);
        let unit = Element::unit(&spec, 60);
        prop_assert_eq!(expectation(&spec, &unit).unwrap(), unit);
    }

    #[test]
    fn orthogonal_projections_add_ranks(which in 0usize..3, eps in 0.1f64..0.9) {
        let spec = example_complex();
        // (f-diagonal, e-part) pairs; the two summands have disjoint supports
        let parts = [([1.0, 0.0], [1.0, 1.0, 0.0]), ([0.0, 1.0], [0.0, 0.0, 1.0])];
        let proj = |d: [f64; 2], a: [f64; 3]| {
            let e = BlockMatrix::new(spec.e_shape().clone(), a.iter().map(|&v| real_diag(&[v])).collect()).unwrap();
            let f = vec![BlockMatrix::new(spec.f_shape().clone(), vec![real_diag(&d)]).unwrap(); 61];
            make_element(&spec, f, e).unwrap()
        };
        let (p, q) = (proj(parts[0].0, parts[0].1), proj(parts[1].0, parts[1].1));
        let (p, q) = if which == 1 { (q, p) } else { (p, q) };
        let (rp, rq, rs) = (cu_rank(&spec, &p, eps).unwrap(), cu_rank(&spec, &q, eps).unwrap(), cu_rank(&spec, &p.add(&q), eps).unwrap());
        for j in 0..spec.l() {
            prop_assert_eq!(rs.e_ranks[j], rp.e_ranks[j] + rq.e_ranks[j]);
        }
        for t in [0.0, 0.3, 0.5, 1.0] {
            prop_assert_eq!(rs.ranks[0].eval(t), rp.ranks[0].eval(t) + rq.ranks[0].eval(t));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pointwise_equivalent_maps_have_equal_ranks(seed in any::<u64>(), k in 0usize..4) {
        let (_, map) = corpus().swap_remove(k);
        let mut other = map.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for c in other.components.iter_mut() {
            let w = random_unitary(c.n(), &mut rng);
            let ivs: Vec<_> = c.intervals().iter().cloned().map(|mut iv| { iv.u = iv.u.left_mul(&w); iv }).collect();
            *c = nccw_core::standard::StandardMapToMatrix::new(&map.source, ivs).unwrap();
        }
        prop_assert!(check_pointwise_equiv(&map, &other, 60));
        let x = random_element(&map.source, 60, seed);
        let probe = x.adjoint().mul(&x);
        prop_assert!(cu_compare_homs(&map, &other, &probe, 0.1, 60).unwrap());
    }
}

#[test]
fn test_functions_lie_between_zero_and_one() {
    for name in NAMES {
        let spec = named(name).unwrap();
        for m in [2, 3, 4, 6] {
            for h in build_h(&spec, 60, m, HMode::Full).unwrap() {
                let x = &h.element;
                let blocks = x.f_samples().iter().flat_map(|s| s.blocks()).chain(x.e_part().blocks());
                for b in blocks {
                    for v in eig_sorted(b).unwrap() {
                        assert!((-1e-9..=1.0 + 1e-9).contains(&v), "{name}, m = {m}: eigenvalue {v}");
                    }
                }
                if let TestKind::Type2(_) = h.kind {
                    assert!(x.e_part().blocks().iter().all(|b| b.iter().all(|z| z.norm() == 0.0)));
                }
            }
        }
    }
}

#[test]
fn type1_profiles_are_exact() {
    let grid = 240;
    for name in NAMES {
        let spec = named(name).unwrap();
        for m in [3, 4, 6] {
            for kind in h_kinds(&spec, m, HMode::Full, 100_000).unwrap() {
                let TestKind::Type1(t1) = &kind else { continue };
                let x = kind_element(&spec, grid, &kind).unwrap();
                let start = spec.beta(Side::Zero, x.e_part());
                for i in 0..spec.k() {
                    let (a, b) = (t1.a[i], t1.b[i]);
                    for k in 0..=grid {
                        let s = x.sample(k).block(i);
                        if k * m <= a * grid {
                            assert_eq!(s, start.block(i), "{name}: ramp start, sample {k}");
                        }
                        if (a + 1) * grid <= k * m && k * m + grid <= b * grid {
                            assert!(s.iter().all(|z| z.norm() == 0.0), "{name}: middle, sample {k}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn type2_supports_refine() {
    for mode in [HMode::Contiguous, HMode::Full] {
        for (m, mm) in [(2, 4), (3, 6), (4, 8), (2, 6)] {
            let fine = type2_support_sets(mm, mode, mm);
            for s in type2_support_sets(m, mode, mm) {
                assert!(fine.contains(&s), "{s:?} from m = {m} missing at m = {mm}");
            }
        }
    }
}

#[test]
fn fibres_weighted_by_block_sizes_fill_the_fibre() {
    for name in NAMES {
        let spec = named(name).unwrap();
        for i in 0..spec.k() {
            for side in Side::BOTH {
                let total: usize = spec.endpoint_fibre(i, side).iter().zip(spec.e_shape().sizes()).map(|(r, e)| r * e).sum();
                assert_eq!(total, spec.f_shape().size(i), "{name}, block {i}");
            }
        }
    }
}

#[test]
fn maximally_homogeneous_homs_exist_exactly_when_admissible_spectra_allow() {
    let spec = z_pq(2, 3);
    for n in 1..=12 {
        let filtered: Vec<_> = enumerate_admissible_spectra(&spec, n, true)
            .unwrap()
            .into_iter()
            .filter(|a| a.s.iter().all(|&s| s <= 1))
            .collect();
        // build one hom per admissible spectrum, with distinct interior points
        let mut exists = false;
        for a in enumerate_admissible_spectra(&spec, n, true).unwrap() {
            let pts = (0..a.c[0]).map(|r| SpecPoint::at(0, (r + 1) as f64 / (a.c[0] + 1) as f64)).collect();
            let h = HomToMatrix::diagonal(&spec, a.s.clone(), pts, 0).unwrap();
            exists |= is_maximally_homogeneous(&spec, &h);
        }
        assert_eq!(!filtered.is_empty(), exists, "n = {n}");
    }
}

#[test]
fn standard_maps_are_continuous_at_breakpoints() {
    for (name, map) in corpus() {
        let spec = &map.source;
        let probes: Vec<Element> = (0..5).map(|s| random_general_element(spec, 60, s)).collect();
        let dp = extract_complex_d_pair(&map).unwrap();
        let rb = rebase_via_theta(&map, &dp).unwrap();
        for m in [&map, &rb.psi] {
            for c in &m.components {
                for w in c.intervals().windows(2) {
                    let z = w[0].hi;
                    for x in &probes {
                        let d = norm(&(w[0].eval(spec, z, x) - w[1].eval(spec, z, x)));
                        assert!(d <= 1e-8, "{name}: jump {d} at {z}");
                    }
                }
            }
        }
        // rebased E'-maps are conjugates of the originals, and W ends on permutation matrices
        for (a, b) in map.e_maps.iter().zip(&rb.psi.e_maps) {
            for x in &probes {
                let h = x.adjoint().add(x);
                let gap = max_gap(&eig_sorted(&a.eval(spec, &h)).unwrap(), &eig_sorted(&b.eval(spec, &h)).unwrap());
                assert!(gap < 1e-9, "{name}: E'-spectra differ by {gap}");
            }
        }
        for w in &rb.w {
            for end in [w.eval(0.0), w.eval(1.0)] {
                assert!(end.iter().all(|z| z.im == 0.0 && (z.re == 0.0 || z.re == 1.0)), "{name}");
            }
        }
    }
}

#[test]
fn cu_ranks_are_eps_stable_on_projections() {
    let spec = example_complex();
    let e = BlockMatrix::new(spec.e_shape().clone(), [1.0, 1.0, 0.0].iter().map(|&v| real_diag(&[v])).collect()).unwrap();
    let f = vec![BlockMatrix::new(spec.f_shape().clone(), vec![real_diag(&[1.0, 0.0])]).unwrap(); 61];
    let p = make_element(&spec, f, e).unwrap();
    let base = cu_rank(&spec, &p, DEFAULT_EPS).unwrap();
    for eps in [0.1, 0.5, 0.9] {
        assert_eq!(cu_rank(&spec, &p, eps).unwrap().ranks, base.ranks);
    }
}
