use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use altproj::error::{Error, ErrorKind};
use altproj::fracpow::{FracPower, SlopeReport};
use altproj::geometry::{self, fmt17, EstimateOptions, GeometryReport};
use altproj::instance::{parse_instance, Instance};
use altproj::linalg::{self, CMat, CVec};
use altproj::models;
use altproj::operator::{self, build_cyclic, CyclicProduct};
use altproj::spectral;
use altproj::subspace::Subspace;
use altproj::suite::{self, SuiteConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Start;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(PathBuf, std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(..) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input | ErrorKind::Parse => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Capacity => 4,
            },
        }
    }
}

/// What a command produced: the main CSV, side files, and a verdict.
pub struct Report {
    pub csv: String,
    pub summary: Vec<String>,
    pub extra_files: Vec<(PathBuf, String)>,
    pub passed: bool,
}

type Res = Result<Report, CliError>;

fn single_family(path: &Path) -> Result<Vec<Subspace>, CliError> {
    match parse_instance(path)?.build()? {
        Instance::Family(f) => Ok(f),
        Instance::Combination { .. } => {
            Err(Error::Input("this command needs a single family, not a convex combination".into()).into())
        }
    }
}

fn cyclic(path: &Path) -> Result<CyclicProduct, CliError> {
    Ok(build_cyclic(&single_family(path)?)?)
}

/// The operator to study, with the Stolz angle that should contain its numerical range.
fn operator_of(path: &Path) -> Result<(CMat, Option<CyclicProduct>, f64), CliError> {
    match parse_instance(path)?.build()? {
        Instance::Family(f) => {
            let cp = build_cyclic(&f)?;
            let theta = spectral::theta0(cp.friedrichs_number(), cp.n());
            Ok((cp.t().clone(), Some(cp), theta))
        }
        Instance::Combination { families, weights } => {
            let cps: Vec<CyclicProduct> = families.iter().map(|f| build_cyclic(f)).collect::<Result<_, _>>()?;
            let theta = cps
                .iter()
                .map(|p| spectral::theta0(p.friedrichs_number(), p.n()))
                .fold(0.0, f64::max);
            let ts: Vec<&CMat> = cps.iter().map(CyclicProduct::t).collect();
            Ok((models::convex_combination(&ts, &weights)?, None, theta))
        }
    }
}

pub fn geometry(path: &Path, seed: u64, restarts: usize) -> Res {
    let fam = single_family(path)?;
    let report = GeometryReport::compute(&fam, EstimateOptions { restarts, seed })?;
    let record = report.record();
    let header: Vec<&str> = record.iter().map(|(k, _)| *k).collect();
    let row: Vec<&str> = record.iter().map(|(_, v)| v.as_str()).collect();
    let csv = format!("{}\n{}\n", header.join(","), row.join(","));
    let checks = geometry::sandwich_check(&report);
    let summary = checks
        .iter()
        .map(|c| {
            let tag = match (c.satisfied, c.rigorous) {
                (true, _) => "ok",
                (false, true) => "VIOLATED",
                (false, false) => "not met (heuristic)",
            };
            format!("{}: {tag}, slack {:.3e}", c.name, c.slack)
        })
        .collect();
    Ok(Report {
        csv,
        summary,
        extra_files: Vec::new(),
        passed: checks.iter().all(|c| c.satisfied || !c.rigorous),
    })
}

pub fn iterate(path: &Path, n_max: usize, start: Start, seed: Option<u64>) -> Res {
    let cp = cyclic(path)?;
    let x = match start {
        Start::Random => {
            let seed = seed.ok_or_else(|| Error::Input("--seed is required with --start random".into()))?;
            linalg::unit_gaussian_vector(cp.dim(), &mut ChaCha8Rng::seed_from_u64(seed))
        }
        Start::Worst => {
            let s = linalg::svd(&(cp.t() - cp.pm().matrix()));
            s.v.column(0).into_owned()
        }
    };
    let trace = operator::iterate(&cp, &x, n_max)?;
    let worst_c = (0..=n_max).map(|n| trace.errors[n] - trace.bound_c[n]).fold(f64::NEG_INFINITY, f64::max);
    let worst_i = (0..=n_max)
        .map(|n| trace.errors[n] - trace.bound_iota2[n])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Report {
        csv: trace.to_csv(),
        summary: vec![
            format!("c = {}, iota2 = {}", fmt17(cp.friedrichs_number()), fmt17(cp.iota2())),
            format!("max(e_n - c bound) = {worst_c:.3e}, max(e_n - iota2 bound) = {worst_i:.3e}"),
        ],
        extra_files: Vec::new(),
        passed: worst_c <= 1e-9 && worst_i <= 1e-9,
    })
}

pub fn numrange(path: &Path, angles: usize, slack: f64) -> Res {
    let (t, cp, theta) = operator_of(path)?;
    let report = match &cp {
        Some(cp) => spectral::containment_check(&t, cp.friedrichs_number(), cp.n(), angles, slack)?,
        None => spectral::stolz_containment_check(&t, theta, angles, slack)?,
    };
    let region = if cp.is_some() { "Omega_N and S_theta0" } else { "S_theta (widest component)" };
    Ok(Report {
        csv: report.to_csv(),
        summary: vec![
            format!("theta = {}", fmt17(theta)),
            format!(
                "containment in {region}: {} ({} of {angles} boundary points outside, min margin {:.3e})",
                if report.passed() { "PASS" } else { "FAIL" },
                report.violations().len(),
                report.min_margin()
            ),
        ],
        extra_files: Vec::new(),
        passed: report.passed(),
    })
}

pub fn ritt(path: &Path, n_max: usize, angles: usize) -> Res {
    let (t, _, _) = operator_of(path)?;
    let prof = spectral::ritt_power_diagnostic(&t, n_max)?;
    let res = spectral::resolvent_diagnostic(&t, &spectral::default_radii(), angles)?;
    let mut csv = String::from("series,x,value\n");
    for (i, v) in prof.profile.iter().enumerate() {
        writeln!(csv, "power,{},{}", i + 1, fmt17(*v)).expect("string write");
    }
    for (r, v) in &res.per_radius {
        writeln!(csv, "resolvent,{},{}", fmt17(*r), fmt17(*v)).expect("string write");
    }
    let rise = prof.max_increase_after_peak();
    Ok(Report {
        csv,
        summary: vec![
            format!("sup n|T^n(I-T)| = {} at n = {}", fmt17(prof.sup), prof.argmax),
            format!("largest increase after the peak = {rise:.3e}"),
            format!("sampled resolvent constant = {}", fmt17(res.constant)),
        ],
        extra_files: Vec::new(),
        passed: prof.sup.is_finite() && res.constant.is_finite(),
    })
}

pub fn fracpow(path: &Path, alphas: &[f64], seed: u64, n_max: usize, tol: f64) -> Res {
    if !(tol > 0.0) {
        return Err(Error::Input("--tol must be positive".into()).into());
    }
    let spec = parse_instance(path)?;
    let cp = cyclic(path)?;
    let y: CVec = match spec.block_model() {
        Some(model) => model?.envelope_vector(suite::BLOCK_ENVELOPE_POWER, seed),
        None => linalg::unit_gaussian_vector(cp.dim(), &mut ChaCha8Rng::seed_from_u64(seed)),
    };
    let y_perp = &y - cp.pm().apply(&y);
    let engine = FracPower::new(cp.t())?;
    let window = ((n_max / 10).max(1), n_max);
    let mut csv = format!("{}\n", SlopeReport::csv_header());
    let mut summary = Vec::new();
    let mut passed = true;
    for &alpha in alphas {
        if !(alpha > 0.0) {
            return Err(Error::Input(format!("alpha must be positive, got {alpha}")).into());
        }
        let x = engine.apply(alpha, &y_perp, tol)?;
        let errors = operator::iterate_errors(&cp, &x, n_max);
        let rep = SlopeReport::new(&errors, alpha, window)?;
        csv.push_str(&rep.csv_row());
        csv.push('\n');
        passed &= rep.passes();
        summary.push(format!(
            "alpha = {alpha}: slope {:.4} (needs <= {:.2}), n^alpha e_n non-increasing over last decade: {}",
            rep.slope,
            -alpha + 0.1,
            rep.last_decade_non_increasing
        ));
    }
    Ok(Report {
        csv,
        summary,
        extra_files: Vec::new(),
        passed,
    })
}

pub fn slowvec(path: &Path, n_max: usize, eps: f64, x_out: Option<PathBuf>) -> Res {
    let model = parse_instance(path)?
        .block_model()
        .ok_or_else(|| Error::Input("slowvec needs a block_aligned instance".into()))??;
    let r = models::inverse_log_profile(n_max);
    let sv = models::slow_vector(&model, &r, eps)?;
    let errors = operator::iterate_errors(&model.cyclic()?, &sv.x, n_max);
    let mut csv = String::from("n,error,r_n\n");
    for (n, (e, rn)) in errors.iter().zip(&r).enumerate() {
        writeln!(csv, "{n},{},{}", fmt17(*e), fmt17(*rn)).expect("string write");
    }
    let dominated = errors.iter().zip(&r).all(|(e, rn)| e >= rn);
    let norm_ok = sv.x.norm() <= (1.0 + eps) * r[0];
    let mut summary = vec![format!(
        "|x| = {} (budget {}), e_n >= r_n for all n <= {n_max}: {dominated}",
        fmt17(sv.x.norm()),
        fmt17((1.0 + eps) * r[0])
    )];
    for (k, a, from, to) in &sv.assignments {
        summary.push(format!("block {k}: coefficient {}, serves n = {from}..={to}", fmt17(*a)));
    }
    let mut extra_files = Vec::new();
    if let Some(p) = x_out {
        let mut text = String::from("index,re,im\n");
        for (i, z) in sv.x.iter().enumerate() {
            writeln!(text, "{i},{},{}", fmt17(z.re), fmt17(z.im)).expect("string write");
        }
        extra_files.push((p, text));
    }
    Ok(Report {
        csv,
        summary,
        extra_files,
        passed: dominated && norm_ok,
    })
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn suite(seed: u64, only: &[usize]) -> Res {
    let cfg = SuiteConfig { seed };
    let ids: Vec<usize> = if only.is_empty() {
        suite::CRITERIA.iter().map(|c| c.0).collect()
    } else {
        only.to_vec()
    };
    if let Some(bad) = ids.iter().find(|id| !suite::CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(Error::Input(format!("no criterion {bad}; valid ids are 1..={}", suite::CRITERIA.len())).into());
    }
    let mut csv = String::from("id,name,passed,detail\n");
    let mut summary = Vec::new();
    let mut passed = true;
    for id in ids {
        let o = suite::run_criterion(id, &cfg);
        writeln!(csv, "{},{},{},{}", o.test_id(), o.name, o.passed, csv_quote(&o.detail)).expect("string write");
        passed &= o.passed;
        summary.push(o.to_string());
    }
    Ok(Report {
        csv,
        summary,
        extra_files: Vec::new(),
        passed,
    })
}
