//! `nccw`: command-line front end for the NCCW toolkit.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use nccw_core::cartan::{
    anchor_points, check_diagonal_preservation, rebase_blocks, verify_cartan_sample, RebasedStage, StagePair,
};
use nccw_core::complex::{smith_invariants, ComplexSpec, Element, ElementChecks, RawComplex};
use nccw_core::cu::cu_rank;
use nccw_core::json::{
    complex_from_json, element_from_json, element_to_json, family_from_json, hom_from_json, hypothesis_to_json,
    standard_map_from_json, standard_map_to_json, cu_to_json, ElementJson, HomFamilyJson, HomJson, StandardMapJson,
};
use nccw_core::standard::{
    approximate_by_standard, check_pointwise_equiv, extract_complex_d_pair, rebase_via_theta, roundtrip_residual,
    ApproxOptions, StandardMapToComplex,
};
use nccw_core::testfn::{build_h, build_h_tilde, HMode, Variant};
use nccw_core::homspec::{lemma_pairing, verify_pairing};
use nccw_core::{catalog, Error};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum HModeArg {
    Contiguous,
    Full,
}

impl From<HModeArg> for HMode {
    fn from(m: HModeArg) -> HMode {
        match m {
            HModeArg::Contiguous => HMode::Contiguous,
            HModeArg::Full => HMode::Full,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nccw", version, about = "Checks on 1-dimensional NCCW complexes and maps between them")]
struct Cli {
    /// Grid size N; at least 12 and divisible by every m used.
    #[arg(long, global = true, default_value_t = 240)]
    grid: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Boundary-condition tolerance for elements read from files.
    #[arg(long = "tol-bc", global = true, default_value_t = 1e-9)]
    tol_bc: f64,
    /// Tolerance for exactness checks on unitaries and residuals.
    #[arg(long = "tol-unit", global = true, default_value_t = 1e-8)]
    tol_unit: f64,
    /// Command precision: rank threshold for `cu-rank`, ε for `pair` and `approximate`.
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long = "h-mode", global = true, value_enum, default_value_t = HModeArg::Contiguous)]
    h_mode: HModeArg,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a complex.
    Validate { complex: PathBuf },
    /// Emit the test family H(1/m) (or H̃ with --tilde) as an element array.
    TestSet {
        complex: PathBuf,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long)]
        tilde: bool,
        /// Element array path.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Pair the spectra of two homomorphisms into a matrix algebra.
    Pair {
        complex: PathBuf,
        phi: PathBuf,
        psi: PathBuf,
        #[arg(long, default_value_t = 4)]
        m: usize,
    },
    /// Approximate a sampled homomorphism by a standard map.
    Approximate {
        family: PathBuf,
        /// Probe family H(1/m) together with the unit.
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long)]
        eta1: Option<f64>,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Extract the D-pair of a standard map.
    Dpair {
        map: PathBuf,
        #[arg(long, default_value_t = 4)]
        m: usize,
    },
    /// Rebase a standard map so its endpoint unitaries are permutations.
    Rebase {
        map: PathBuf,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Rebase a chain of maps and check the inductive-limit hypotheses stage by stage.
    RebaseChain {
        #[arg(required = true)]
        maps: Vec<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Check diagonal, normalizer and expectation preservation of a map.
    DiagonalCheck {
        map: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Decide whether K₁ of a complex vanishes.
    K1 { complex: PathBuf },
    /// Rank data of a positive element.
    CuRank { complex: PathBuf, element: PathBuf },
    /// Aggregate checks over every bundled complex and map.
    Report,
}

enum Failure {
    /// Bad input: exit 2.
    Input(String),
    /// A check failed and its report was written: exit 1.
    Check(String),
}

type Outcome = Result<(bool, Value), Failure>;

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

/// Errors that describe malformed input, as opposed to a failed check.
fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Schema(_)
            | Error::SizeMismatch(_)
            | Error::InvalidShape(_)
            | Error::BadPermutation(_)
            | Error::NotUnital { .. }
            | Error::NotInjectiveBeta { .. }
            | Error::BoundaryMismatch { .. }
            | Error::DiscontinuitySuspected { .. }
            | Error::SpecMismatch(_)
            | Error::BadPartition(_)
            | Error::BadSupport(_)
            | Error::ExplosionGuard { .. }
            | Error::InvalidMap(_)
            | Error::NotHermitian { .. }
            | Error::NotUnitary { .. }
            | Error::NotPositive { .. }
    )
}

fn core_err(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        if is_input_error(&e) {
            Failure::Input(format!("{}: {e}", path.display()))
        } else {
            Failure::Check(e.to_string())
        }
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        Failure::Input(format!("{}: at `{at}`: {}", path.display(), e.into_inner()))
    })
}

fn load_complex(path: &Path) -> Result<ComplexSpec, Failure> {
    let raw: RawComplex = load(path)?;
    complex_from_json(&raw).map_err(core_err(path))
}

fn load_map(path: &Path) -> Result<StandardMapToComplex, Failure> {
    let j: StandardMapJson = load(path)?;
    standard_map_from_json(&j).map_err(core_err(path))
}

fn emit<T: Serialize>(path: &Option<PathBuf>, v: &T) -> Result<(), Failure> {
    if let Some(p) = path {
        let text = serde_json::to_string(v).map_err(input)?;
        std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn check_grid(cli: &Cli, m: &[usize]) -> Result<(), Failure> {
    if cli.grid < 12 {
        return Err(Failure::Input(format!("--grid {} is below the minimum 12", cli.grid)));
    }
    for &m in m {
        if m == 0 || cli.grid % m != 0 {
            return Err(Failure::Input(format!("--grid {} is not divisible by m = {m}", cli.grid)));
        }
    }
    Ok(())
}

/// `{unit} ∪ H(1/m)`.
fn probes(cli: &Cli, spec: &ComplexSpec, m: usize) -> Result<Vec<Element>, Error> {
    let mut out = vec![Element::unit(spec, cli.grid)];
    out.extend(build_h(spec, cli.grid, m, cli.h_mode.into())?.into_iter().map(|h| h.element));
    Ok(out)
}

fn one_based(p: &nccw_core::findim::Perm) -> Vec<usize> {
    p.to_one_based()
}

fn validate(path: &Path) -> Outcome {
    let spec = load_complex(path)?;
    Ok((
        true,
        json!({
            "e": spec.e_shape().sizes(),
            "f": spec.f_shape().sizes(),
            "k1_trivial": spec.k1_is_trivial(),
        }),
    ))
}

fn test_set(cli: &Cli, path: &Path, m: usize, tilde: bool, out: &Option<PathBuf>) -> Outcome {
    check_grid(cli, &[m])?;
    let spec = load_complex(path)?;
    let err = core_err(path);
    let (kinds, elements): (Value, Vec<ElementJson>) = if tilde {
        let fam = build_h_tilde(&spec, cli.grid, m, cli.h_mode.into()).map_err(&err)?;
        let els = fam
            .iter()
            .map(|t| t.element(&spec, cli.grid, Variant::Raw).map(|e| element_to_json(&e)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(&err)?;
        (serde_json::to_value(&fam).map_err(input)?, els)
    } else {
        let fam = build_h(&spec, cli.grid, m, cli.h_mode.into()).map_err(&err)?;
        let kinds: Vec<_> = fam.iter().map(|h| &h.kind).collect();
        (serde_json::to_value(&kinds).map_err(input)?, fam.iter().map(|h| element_to_json(&h.element)).collect())
    };
    emit(out, &elements)?;
    Ok((true, json!({"count": elements.len(), "m": m, "tilde": tilde, "members": kinds})))
}

fn pair(cli: &Cli, cpath: &Path, ppath: &Path, qpath: &Path, m: usize) -> Outcome {
    check_grid(cli, &[m])?;
    let spec = load_complex(cpath)?;
    let phi = hom_from_json(&spec, &load::<HomJson>(ppath)?).map_err(core_err(ppath))?;
    let psi = hom_from_json(&spec, &load::<HomJson>(qpath)?).map_err(core_err(qpath))?;
    let eps = cli.eps.unwrap_or(1.0 / m as f64);
    if phi.n != psi.n {
        return Ok((
            false,
            json!({"failure": {"component": "spectrum size", "detail": format!("phi has size {}, psi has size {}", phi.n, psi.n)}}),
        ));
    }
    match lemma_pairing(&spec, &phi, &psi, m, eps, cli.grid) {
        Ok(p) => {
            let ok = verify_pairing(&spec, &phi, &psi, m, &p);
            Ok((ok, json!({"eps": eps, "m": m, "pairing": p, "verified": ok})))
        }
        Err(e) => {
            let component = match &e {
                Error::HypothesisFailed { index, .. } => format!("test function {index}"),
                Error::ExtractionFailed { block } | Error::PairingFailed { block } => format!("F-block {}", block + 1),
                _ if is_input_error(&e) => return Err(core_err(cpath)(e)),
                _ => "pairing".into(),
            };
            Ok((false, json!({"eps": eps, "m": m, "failure": {"component": component, "detail": e.to_string()}})))
        }
    }
}

fn approximate(cli: &Cli, path: &Path, m: usize, eta1: Option<f64>, out: &Option<PathBuf>) -> Outcome {
    check_grid(cli, &[m])?;
    let j: HomFamilyJson = load(path)?;
    let err = core_err(path);
    let (src, tgt, fam) = family_from_json(&j).map_err(&err)?;
    let eps = cli.eps.unwrap_or(0.1);
    let pr = probes(cli, &src, m).map_err(&err)?;
    match approximate_by_standard(&src, &tgt, &fam, &pr, eps, &ApproxOptions { eta1 }) {
        Ok((psi, rep)) => {
            emit(out, &standard_map_to_json(&psi))?;
            let pass = rep.max_deviation < eps && rep.injective != Some(false);
            Ok((pass, json!({"eps": eps, "probes": pr.len(), "approximation": rep})))
        }
        Err(e) if is_input_error(&e) => Err(err(e)),
        Err(e) => Ok((false, json!({"eps": eps, "failure": e.to_string()}))),
    }
}

fn dpair(cli: &Cli, path: &Path, m: usize) -> Outcome {
    check_grid(cli, &[m])?;
    let map = load_map(path)?;
    let err = core_err(path);
    let dp = extract_complex_d_pair(&map).map_err(&err)?;
    let pr = probes(cli, &map.source, m).map_err(&err)?;
    let ts: Vec<f64> = (0..=cli.grid).map(|k| k as f64 / cli.grid as f64).collect();
    let mut comps = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, (c, d)) in map.components.iter().zip(&dp.components).enumerate() {
        let r = roundtrip_residual(&map.source, c, d, &pr, &ts);
        worst = worst.max(r);
        comps.push(json!({
            "component": i + 1,
            "partition": c.partition(),
            "q": d.theta.iter().map(|p| one_based(&p.q)).collect::<Vec<_>>(),
            "r_jumps": d.jump_points(cli.tol_unit),
            "roundtrip_residual": r,
        }));
    }
    Ok((worst <= cli.tol_unit, json!({"components": comps, "max_roundtrip_residual": worst})))
}

fn rebase(cli: &Cli, path: &Path, out: &Option<PathBuf>) -> Outcome {
    let map = load_map(path)?;
    let err = core_err(path);
    let dp = extract_complex_d_pair(&map).map_err(&err)?;
    let rb = match rebase_via_theta(&map, &dp) {
        Ok(rb) => rb,
        Err(e) if is_input_error(&e) => return Err(err(e)),
        Err(e) => return Ok((false, json!({"failure": e.to_string()}))),
    };
    let mut endpoint: f64 = 0.0;
    for ((w, s0), s1) in rb.w.iter().zip(&rb.s0).zip(&rb.s1) {
        endpoint = endpoint
            .max((w.eval(0.0) - s0.matrix()).norm())
            .max((w.eval(1.0) - s1.matrix()).norm());
    }
    let equiv = check_pointwise_equiv(&map, &rb.psi, cli.grid);
    let pr = probes(cli, &map.source, 4).map_err(&err)?;
    let coherence = rb.psi.coherence_residual(&pr);
    emit(out, &standard_map_to_json(&rb.psi))?;
    let pass = equiv && endpoint <= cli.tol_unit && coherence <= cli.tol_unit;
    Ok((
        pass,
        json!({
            "s0": rb.s0.iter().map(one_based).collect::<Vec<_>>(),
            "s1": rb.s1.iter().map(one_based).collect::<Vec<_>>(),
            "endpoint_residual": endpoint,
            "pointwise_equiv": equiv,
            "coherence_residual": coherence,
        }),
    ))
}

fn rebased_stage(map: &StandardMapToComplex) -> Result<StagePair, Error> {
    let dp = extract_complex_d_pair(map)?;
    let rb = rebase_via_theta(map, &dp)?;
    Ok(StagePair { map: rb.psi, dpair: rb.dpair })
}

fn rebase_chain(cli: &Cli, paths: &[PathBuf], tol: f64) -> Outcome {
    let mut stages = Vec::new();
    for p in paths {
        let map = load_map(p)?;
        stages.push(rebased_stage(&map).map_err(core_err(p))?);
    }
    for (k, w) in stages.windows(2).enumerate() {
        if w[0].map.target != w[1].map.source {
            return Err(Failure::Input(format!(
                "{}: source does not match the target of stage {}",
                paths[k + 1].display(),
                k + 1
            )));
        }
    }
    let mut out = Vec::new();
    let mut prev: Option<RebasedStage> = None;
    let mut pass = true;
    for (k, st) in stages.iter().enumerate() {
        let anchors = stages.get(k + 1).map(|s| anchor_points(&s.map)).unwrap_or_default();
        let r = match rebase_blocks(st, prev.as_ref(), &anchors, cli.grid, cli.seed + k as u64) {
            Ok(r) => r,
            Err(e) if is_input_error(&e) => return Err(core_err(&paths[k])(e)),
            Err(e) => {
                out.push(json!({"stage": k + 1, "failure": e.to_string()}));
                pass = false;
                break;
            }
        };
        let rep = check_diagonal_preservation(&r.rebased_map, cli.grid, tol, cli.seed + 1000 + k as u64)
            .map_err(core_err(&paths[k]))?;
        let rr = &r.report;
        let ok = rep.all_pass()
            && [rr.anchor_residual, rr.max_v_jump, rr.recursion_residual, rr.coherence_residual, rr.square_residual]
                .iter()
                .all(|&x| x < tol);
        pass &= ok;
        out.push(json!({
            "stage": k + 1,
            "anchors": anchors,
            "rebase": rr,
            "hypotheses": rep.hypotheses.iter().map(hypothesis_to_json).collect::<Vec<_>>(),
            "pass": ok,
        }));
        prev = Some(r);
    }
    Ok((pass, json!({"stages": out, "tol": tol})))
}

fn diagonal_check(cli: &Cli, path: &Path, tol: f64) -> Outcome {
    let map = load_map(path)?;
    let rep = check_diagonal_preservation(&map, cli.grid, tol, cli.seed).map_err(core_err(path))?;
    Ok((
        rep.all_pass(),
        json!({"hypotheses": rep.hypotheses.iter().map(hypothesis_to_json).collect::<Vec<_>>(), "tol": tol}),
    ))
}

fn k1(path: &Path) -> Outcome {
    let spec = load_complex(path)?;
    let kd = spec.k_matrices();
    let d: Vec<Vec<i64>> = kd
        .alpha
        .iter()
        .zip(&kd.beta)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    Ok((
        true,
        json!({"k1_trivial": spec.k1_is_trivial(), "alpha": kd.alpha, "beta": kd.beta, "invariant_factors": smith_invariants(&d)}),
    ))
}

fn cu(cli: &Cli, cpath: &Path, epath: &Path) -> Outcome {
    let spec = load_complex(cpath)?;
    let ej: ElementJson = load(epath)?;
    let checks = ElementChecks { tol_bc: cli.tol_bc, ..ElementChecks::default() };
    let el = element_from_json(&spec, &ej, checks).map_err(core_err(epath))?;
    let eps = cli.eps.unwrap_or(nccw_core::cu::DEFAULT_EPS);
    match cu_rank(&spec, &el, eps) {
        Ok(c) => Ok((true, serde_json::to_value(cu_to_json(&c)).map_err(input)?)),
        Err(e) if is_input_error(&e) => Err(core_err(epath)(e)),
        Err(e) => Ok((false, json!({"eps": eps, "failure": e.to_string()}))),
    }
}

fn aggregate(cli: &Cli) -> Outcome {
    check_grid(cli, &[4])?;
    let mut pass = true;
    let mut complexes = serde_json::Map::new();
    for name in catalog::NAMES {
        let spec = catalog::named(name).expect("bundled");
        let cart = verify_cartan_sample(&spec, cli.grid, 5, cli.seed).map_err(|e| Failure::Check(e.to_string()))?;
        pass &= cart.pass;
        complexes.insert(name.into(), json!({"k1_trivial": spec.k1_is_trivial(), "cartan": cart.pass}));
    }
    let mut maps = serde_json::Map::new();
    for (name, map) in catalog::corpus() {
        let fail = |e: Error| Failure::Check(format!("{name}: {e}"));
        let st = rebased_stage(&map).map_err(fail)?;
        let equiv = check_pointwise_equiv(&map, &st.map, cli.grid);
        let rb = rebase_blocks(&st, None, &[], cli.grid, cli.seed).map_err(fail)?;
        let rep = check_diagonal_preservation(&rb.rebased_map, cli.grid, 1e-6, cli.seed).map_err(fail)?;
        pass &= equiv && rep.all_pass();
        maps.insert(
            name.into(),
            json!({
                "rebase_pointwise_equiv": equiv,
                "rebased_hypotheses": rep.hypotheses.iter().map(|h| json!({"hypothesis": h.hypothesis, "pass": h.pass, "worst_residual": h.worst_residual})).collect::<Vec<_>>(),
            }),
        );
    }
    Ok((pass, json!({"complexes": complexes, "maps": maps})))
}

fn run(cli: &Cli) -> Outcome {
    if cli.grid < 12 {
        return Err(Failure::Input(format!("--grid {} is below the minimum 12", cli.grid)));
    }
    match &cli.command {
        Command::Validate { complex } => validate(complex),
        Command::TestSet { complex, m, tilde, emit } => test_set(cli, complex, *m, *tilde, emit),
        Command::Pair { complex, phi, psi, m } => pair(cli, complex, phi, psi, *m),
        Command::Approximate { family, m, eta1, emit } => approximate(cli, family, *m, *eta1, emit),
        Command::Dpair { map, m } => dpair(cli, map, *m),
        Command::Rebase { map, emit } => rebase(cli, map, emit),
        Command::RebaseChain { maps, tol } => rebase_chain(cli, maps, *tol),
        Command::DiagonalCheck { map, tol } => diagonal_check(cli, map, *tol),
        Command::K1 { complex } => k1(complex),
        Command::CuRank { complex, element } => cu(cli, complex, element),
        Command::Report => aggregate(cli),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::TestSet { .. } => "test-set",
        Command::Pair { .. } => "pair",
        Command::Approximate { .. } => "approximate",
        Command::Dpair { .. } => "dpair",
        Command::Rebase { .. } => "rebase",
        Command::RebaseChain { .. } => "rebase-chain",
        Command::DiagonalCheck { .. } => "diagonal-check",
        Command::K1 { .. } => "k1",
        Command::CuRank { .. } => "cu-rank",
        Command::Report => "report",
    }
}

fn config(cli: &Cli) -> Value {
    json!({
        "grid": cli.grid,
        "seed": cli.seed,
        "tol_bc": cli.tol_bc,
        "tol_unit": cli.tol_unit,
        "eps": cli.eps,
        "h_mode": cli.h_mode,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (pass, result, failure) = match run(&cli) {
        Ok((pass, result)) => (pass, result, None),
        Err(Failure::Input(msg)) => {
            eprintln!("nccw: input error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Check(msg)) => (false, Value::Null, Some(msg)),
    };
    let doc = json!({
        "command": command_name(&cli.command),
        "config": config(&cli),
        "version": VERSION,
        "pass": pass,
        "result": result,
        "failure": failure,
    });
    let written = report::canonical(&doc).map_err(|e| e.to_string()).and_then(|v| {
        report::write(&v, cli.out.as_deref()).map_err(|e| e.to_string())
    });
    if let Err(e) = written {
        eprintln!("nccw: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
