//! Batch command-line front end: sampling, density evaluation, eigenvalue
//! laws, constant audits and Monte Carlo comparisons, with stable CSV/JSON
//! formats.
//!
//! Exit codes: 0 ok, 2 usage/validation error, 3 numerical failure
//! (divergent configuration refused). All runs are fully determined by
//! their arguments; identical invocations produce byte-identical output.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use crate::density::{self, Convention, EigDensityFamily, EigFamily};
use crate::error::{Error, Result};
use crate::linalg::{spectral_nonsingular, DistDims, OrderedEigs, SpectralPsd, DEFAULT_REL_TOL};
use crate::sampler::{self, BetaSample, BetaVariant, CovFactor, RngStream, TParams};
use crate::verify;

#[derive(Parser)]
#[command(
    name = "dsbeta",
    version,
    about = "Doubly singular matrix-variate beta, singular t and inverted t distributions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw samples and emit matrices or ordered eigen/singular values
    Sample(SampleArgs),
    /// Evaluate a matrix log-density at given points
    Logpdf(LogpdfArgs),
    /// Evaluate a joint eigenvalue/singular-value log-density
    Eigpdf(EigpdfArgs),
    /// Audit a printed normalizing constant by quadrature
    Audit(AuditArgs),
    /// Compare construction samples against the quadrature CDF (KS)
    McCompare(McArgs),
    /// Two-sample KS check of scale invariance
    Invariance(InvArgs),
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum FamilyArg {
    T,
    X,
    Beta1,
    Beta2,
    InvT,
    PseudoWishart,
    MatrixNormal,
    SvTEigs,
    Beta1Eigs,
    Beta2Eigs,
}

impl FamilyArg {
    fn eig_family(self) -> Option<EigFamily> {
        match self {
            FamilyArg::SvTEigs => Some(EigFamily::SvT),
            FamilyArg::Beta1Eigs => Some(EigFamily::Beta1),
            FamilyArg::Beta2Eigs => Some(EigFamily::Beta2),
            _ => None,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum VariantArg {
    SpectralM,
    FullR,
}

#[derive(ValueEnum, Clone, Copy)]
enum ConvArg {
    Paper,
    Corrected,
}

impl From<ConvArg> for Convention {
    fn from(c: ConvArg) -> Self {
        match c {
            ConvArg::Paper => Convention::Paper,
            ConvArg::Corrected => Convention::Corrected,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum EmitArg {
    Matrix,
    Eigs,
}

#[derive(Args)]
struct DimArgs {
    /// row dimension m
    #[arg(long)]
    m: usize,
    /// degrees of freedom n
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// column dimension r
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// rank of the row scale Ξ (defaults to r)
    #[arg(long = "r-xi")]
    r_xi: Option<usize>,
}

impl DimArgs {
    fn dist_dims(&self) -> Result<DistDims> {
        DistDims::with_ranks(self.m, self.n, self.r, self.r_xi.unwrap_or(self.r), self.m)
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[command(flatten)]
    dims: DimArgs,
    /// number of draws
    #[arg(long, visible_alias = "samples", default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "matrix")]
    emit: EmitArg,
    /// output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LogpdfArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[command(flatten)]
    dims: DimArgs,
    #[arg(long, value_enum, default_value = "paper")]
    convention: ConvArg,
    /// evaluation point: comma-separated entries, row-major
    #[arg(long)]
    point: Option<String>,
    /// CSV file of points as written by `sample --emit matrix`
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EigpdfArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[command(flatten)]
    dims: DimArgs,
    #[arg(long, value_enum, default_value = "paper")]
    convention: ConvArg,
    /// ordered values, comma-separated, strictly descending
    #[arg(long)]
    point: Option<String>,
    /// r = 1 only: evaluate on a grid a:b:steps
    #[arg(long)]
    grid: Option<String>,
    /// CSV file of ordered values as written by `sample --emit eigs`
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[command(flatten)]
    dims: DimArgs,
    #[arg(long, value_enum, default_value = "paper")]
    convention: ConvArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[command(flatten)]
    dims: DimArgs,
    #[arg(long, value_enum, default_value = "paper")]
    convention: ConvArg,
    #[arg(long, visible_alias = "count", default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InvArgs {
    #[command(flatten)]
    dims: DimArgs,
    /// diagonal of the Θ scale, comma-separated, strictly descending
    /// (identity when omitted)
    #[arg(long = "theta-diag")]
    theta_diag: Option<String>,
    #[arg(long, visible_alias = "count", default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// 17 significant digits: lossless round-trip for f64.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("not a number: {tok:?}")))
        })
        .collect()
}

fn parse_matrix(values: &[f64], rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    if values.len() != rows * cols {
        return Err(Error::Parse(format!(
            "expected {rows}x{cols} = {} entries, got {}",
            rows * cols,
            values.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, values))
}

fn eigs_header(k: usize) -> String {
    (1..=k).map(|i| format!("v{i}")).collect::<Vec<_>>().join(",")
}

fn csv_row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt).collect::<Vec<_>>().join(",")
}

fn matrix_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Points parsed from `--point` or a CSV file written by `sample`.
fn load_points(
    point: &Option<String>,
    input: &Option<PathBuf>,
    rows: usize,
    cols: usize,
) -> Result<Vec<DMatrix<f64>>> {
    match (point, input) {
        (Some(p), None) => Ok(vec![parse_matrix(&parse_floats(p)?, rows, cols)?]),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            let mut lines = text.lines();
            let header = lines
                .next()
                .ok_or_else(|| Error::Parse("empty input file".into()))?;
            if !header.starts_with('v') {
                // matrix file: "rows,cols" header
                let hdr: Vec<usize> = header
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| Error::Parse("bad header".into())))
                    .collect::<Result<_>>()?;
                if hdr != [rows, cols] {
                    return Err(Error::Parse(format!(
                        "file holds {:?} matrices but {rows}x{cols} expected",
                        hdr
                    )));
                }
            } else if header != eigs_header(cols) || rows != 1 {
                return Err(Error::Parse("eigenvalue file does not match the requested dims".into()));
            }
            lines
                .filter(|l| !l.trim().is_empty())
                .map(|l| parse_matrix(&parse_floats(l)?, rows, cols))
                .collect()
        }
        _ => Err(Error::Parse("exactly one of --point / --input is required".into())),
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content)?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn report_json<T: serde::Serialize>(report: &T) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Parse(format!("serialization failed: {e}")))
}

fn run_sample(a: &SampleArgs) -> Result<String> {
    let mut rng = RngStream::new(a.seed, 0).rng();
    if a.count == 0 {
        return Err(Error::InvalidDims("--count must be positive".into()));
    }
    let variant = match a.variant {
        Some(VariantArg::SpectralM) => BetaVariant::SpectralM,
        _ => BetaVariant::FullR,
    };
    let mut matrices: Vec<DMatrix<f64>> = Vec::with_capacity(a.count);
    let mut eig_rows: Vec<Vec<f64>> = Vec::with_capacity(a.count);
    for _ in 0..a.count {
        let (matrix, eigs): (DMatrix<f64>, Vec<f64>) = match a.family {
            FamilyArg::T => {
                let params = TParams::identity(a.dims.dist_dims()?)?;
                let t = sampler::sample_t(&params, &mut rng)?;
                let sv = t.singular_values().iter().cloned().collect();
                (t, sv)
            }
            FamilyArg::X => {
                let d = a.dims.dist_dims()?;
                let c = CovFactor::new(DMatrix::identity(d.r, d.r_xi))?;
                let params = TParams::new(d, DMatrix::zeros(d.m, d.r), None, Some(c))?;
                let x = sampler::sample_x(&params, &mut rng)?;
                let sv = x.singular_values().iter().cloned().collect();
                (x, sv)
            }
            FamilyArg::Beta1 | FamilyArg::Beta2 => {
                let d = a.dims.dist_dims()?;
                let s = if a.family == FamilyArg::Beta1 {
                    sampler::sample_beta1(&d, variant, &mut rng)?
                } else {
                    sampler::sample_beta2(&d, variant, &mut rng)?
                };
                let eigs = s.eigenvalues()?;
                let dense = match s {
                    BetaSample::Spectral(sp) => sp.reconstruct(),
                    BetaSample::Full(f) => f,
                };
                (dense, eigs)
            }
            FamilyArg::InvT => {
                let d = a.dims.dist_dims()?;
                let r = sampler::sample_inverted_t(&d, &mut rng)?;
                let sv = r.singular_values().iter().cloned().collect();
                (r, sv)
            }
            FamilyArg::PseudoWishart => {
                let w = sampler::sample_pseudo_wishart(a.dims.m, a.dims.n, &mut rng)?;
                (w.reconstruct(), w.eigs().values().to_vec())
            }
            FamilyArg::MatrixNormal => {
                let y = sampler::sample_matrix_normal(a.dims.m, a.dims.r, None, &mut rng);
                let sv = y.singular_values().iter().cloned().collect();
                (y, sv)
            }
            _ => {
                return Err(Error::Unsupported(
                    "eigenvalue-law families are evaluated with eigpdf/audit, not sampled".into(),
                ))
            }
        };
        eig_rows.push(eigs);
        matrices.push(matrix);
    }
    let mut out = String::new();
    match a.emit {
        EmitArg::Eigs => {
            let k = eig_rows[0].len();
            out.push_str(&eigs_header(k));
            out.push('\n');
            for row in eig_rows {
                out.push_str(&csv_row(row));
                out.push('\n');
            }
        }
        EmitArg::Matrix => {
            let (rows, cols) = matrices[0].shape();
            out.push_str(&format!("{rows},{cols}\n"));
            for m in matrices {
                out.push_str(&csv_row(matrix_row_major(&m)));
                out.push('\n');
            }
        }
    }
    Ok(out)
}

fn run_logpdf(a: &LogpdfArgs) -> Result<String> {
    let d = a.dims.dist_dims()?;
    let conv: Convention = a.convention.into();
    let spectral = a.variant == Some(VariantArg::SpectralM);
    let (rows, cols) = match a.family {
        FamilyArg::T => (d.m, d.r),
        FamilyArg::X => (d.m, d.r_xi),
        FamilyArg::InvT => (d.m, d.r),
        FamilyArg::Beta1 | FamilyArg::Beta2 => {
            if spectral {
                (d.m, d.m)
            } else {
                (d.r, d.r)
            }
        }
        _ => {
            return Err(Error::Unsupported(
                "logpdf evaluates t, x, beta1, beta2 and inv-t only".into(),
            ))
        }
    };
    let points = load_points(&a.point, &a.input, rows, cols)?;
    let mut out = String::new();
    for p in &points {
        let v = match a.family {
            FamilyArg::T => {
                let params = TParams::identity(d)?;
                density::logpdf_t_general(&params, p)?
            }
            FamilyArg::X => {
                let c = CovFactor::new(DMatrix::identity(d.r, d.r_xi))?;
                let params = TParams::new(d, DMatrix::zeros(d.m, d.r), None, Some(c))?;
                density::logpdf_x(&params, p)?
            }
            FamilyArg::InvT => density::logpdf_inverted_t(&d, p, conv)?,
            FamilyArg::Beta1 => {
                if spectral {
                    let s = spectral_nonsingular(p, DEFAULT_REL_TOL)?;
                    density::logpdf_beta1_spectral(&d, &s, conv)?
                } else {
                    density::logpdf_beta1_full(&d, p, conv)?
                }
            }
            FamilyArg::Beta2 => {
                if spectral {
                    let s = spectral_nonsingular(p, DEFAULT_REL_TOL)?;
                    density::logpdf_beta2_spectral(&d, &s, conv)?
                } else {
                    density::logpdf_beta2_full(&d, p, conv)?
                }
            }
            _ => unreachable!(),
        };
        out.push_str(&fmt(v));
        out.push('\n');
    }
    Ok(out)
}

fn eig_family_of(a: FamilyArg) -> Result<EigFamily> {
    a.eig_family().ok_or_else(|| {
        Error::Unsupported("this subcommand takes sv-t-eigs, beta1-eigs or beta2-eigs".into())
    })
}

fn run_eigpdf(a: &EigpdfArgs) -> Result<String> {
    let family = eig_family_of(a.family)?;
    let fam = EigDensityFamily::new(family, a.dims.m, a.dims.n, a.dims.r)?;
    let conv: Convention = a.convention.into();
    let mut out = String::new();
    if let Some(grid) = &a.grid {
        if fam.r != 1 {
            return Err(Error::Unsupported("--grid is defined for r = 1".into()));
        }
        let parts: Vec<&str> = grid.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse("--grid expects a:b:steps".into()));
        }
        let a0: f64 = parts[0].parse().map_err(|_| Error::Parse("bad grid start".into()))?;
        let b0: f64 = parts[1].parse().map_err(|_| Error::Parse("bad grid end".into()))?;
        let steps: usize = parts[2].parse().map_err(|_| Error::Parse("bad grid steps".into()))?;
        if steps < 2 || b0 <= a0 {
            return Err(Error::Parse("--grid needs b > a and steps >= 2".into()));
        }
        out.push_str("x,logpdf\n");
        for i in 0..steps {
            let x = a0 + (b0 - a0) * i as f64 / (steps as f64 - 1.0);
            let eigs = OrderedEigs::new(vec![x], fam.range_kind())?;
            let v = density::log_eig_density(&fam, &eigs, conv)?;
            out.push_str(&format!("{},{}\n", fmt(x), fmt(v)));
        }
        return Ok(out);
    }
    let points = load_points(&a.point, &a.input, 1, fam.r)?;
    for p in &points {
        let values: Vec<f64> = p.iter().cloned().collect();
        let eigs = OrderedEigs::new(values, fam.range_kind())?;
        out.push_str(&fmt(density::log_eig_density(&fam, &eigs, conv)?));
        out.push('\n');
    }
    Ok(out)
}

fn run_audit(a: &AuditArgs) -> Result<String> {
    let conv: Convention = a.convention.into();
    let report = match a.family {
        FamilyArg::InvT => verify::audit_inverted_t(&a.dims.dist_dims()?, conv)?,
        _ => {
            let family = eig_family_of(a.family)?;
            let fam = EigDensityFamily::new(family, a.dims.m, a.dims.n, a.dims.r)?;
            verify::quad_normalize(&fam, conv, verify::QuadScheme::for_family(family))?
        }
    };
    report_json(&report)
}

fn run_mc(a: &McArgs) -> Result<String> {
    let family = eig_family_of(a.family)?;
    let fam = EigDensityFamily::new(family, a.dims.m, a.dims.n, a.dims.r)?;
    let report = verify::mc_compare(&fam, a.convention.into(), a.samples, a.seed)?;
    report_json(&report)
}

fn run_invariance(a: &InvArgs) -> Result<String> {
    let d = a.dims.dist_dims()?;
    let theta = match &a.theta_diag {
        None => None,
        Some(s) => {
            let diag = parse_floats(s)?;
            if diag.len() != d.m {
                return Err(Error::InvalidDims(format!(
                    "--theta-diag needs {} values, got {}",
                    d.m,
                    diag.len()
                )));
            }
            let eigs = OrderedEigs::new(diag, crate::linalg::RangeKind::Positive)?;
            Some(SpectralPsd::from_parts(DMatrix::identity(d.m, d.m), eigs)?)
        }
    };
    let report = verify::invariance_check(&d, theta.as_ref(), a.samples, a.seed)?;
    report_json(&report)
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Divergent(_) | Error::NonFinite { .. } => 3,
        _ => 2,
    }
}

/// Parses argv, dispatches, writes outputs. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    let result = match &cli.cmd {
        Cmd::Sample(a) => run_sample(a).and_then(|s| write_output(&a.out, &s)),
        Cmd::Logpdf(a) => run_logpdf(a).and_then(|s| write_output(&a.out, &s)),
        Cmd::Eigpdf(a) => run_eigpdf(a).and_then(|s| write_output(&a.out, &s)),
        Cmd::Audit(a) => run_audit(a).and_then(|s| write_output(&a.out, &s)),
        Cmd::McCompare(a) => run_mc(a).and_then(|s| write_output(&a.out, &s)),
        Cmd::Invariance(a) => run_invariance(a).and_then(|s| write_output(&a.out, &s)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &v in &[0.1, -1.1447298858494002, 1e-300, 12345.6789] {
            let s = fmt(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn parse_floats_rejects_garbage() {
        assert!(parse_floats("1.0,abc").is_err());
        assert_eq!(parse_floats("1, 2.5").unwrap(), vec![1.0, 2.5]);
    }

    #[test]
    fn sample_output_shapes() {
        let out = run_sample(&SampleArgs {
            family: FamilyArg::Beta2,
            variant: Some(VariantArg::FullR),
            dims: DimArgs { m: 2, n: 2, r: 1, r_xi: None },
            count: 3,
            seed: 7,
            emit: EmitArg::Eigs,
            out: None,
        })
        .unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "v1");
        for l in &lines[1..] {
            assert!(l.parse::<f64>().unwrap() > 0.0);
        }
    }

    #[test]
    fn logpdf_t_cauchy_via_cli_paths() {
        let out = run_logpdf(&LogpdfArgs {
            family: FamilyArg::T,
            variant: None,
            dims: DimArgs { m: 1, n: 1, r: 1, r_xi: None },
            convention: ConvArg::Paper,
            point: Some("0".into()),
            input: None,
            out: None,
        })
        .unwrap();
        let v: f64 = out.trim().parse().unwrap();
        assert!((v - (-(core::f64::consts::PI).ln())).abs() < 1e-9);
    }

    #[test]
    fn sample_then_logpdf_round_trip() {
        let dir = std::env::temp_dir().join("dsbeta-cli-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t-samples.csv");
        let s = run_sample(&SampleArgs {
            family: FamilyArg::T,
            variant: None,
            dims: DimArgs { m: 2, n: 2, r: 1, r_xi: None },
            count: 5,
            seed: 3,
            emit: EmitArg::Matrix,
            out: None,
        })
        .unwrap();
        fs::write(&path, &s).unwrap();
        let out = run_logpdf(&LogpdfArgs {
            family: FamilyArg::T,
            variant: None,
            dims: DimArgs { m: 2, n: 2, r: 1, r_xi: None },
            convention: ConvArg::Paper,
            point: None,
            input: Some(path),
            out: None,
        })
        .unwrap();
        assert_eq!(out.lines().count(), 5);
        for l in out.lines() {
            assert!(l.parse::<f64>().unwrap().is_finite());
        }
    }

    #[test]
    fn run_rejects_bad_flags() {
        assert_eq!(run(["dsbeta", "sample", "--family", "nope", "--m", "1"]), 2);
    }

    #[test]
    fn run_determinism() {
        let dir = std::env::temp_dir().join("dsbeta-cli-test");
        fs::create_dir_all(&dir).unwrap();
        let p1 = dir.join("det1.csv");
        let p2 = dir.join("det2.csv");
        for p in [&p1, &p2] {
            let code = run([
                "dsbeta", "sample", "--family", "beta2", "--variant", "full-r", "--m", "2", "--n",
                "2", "--r", "1", "--count", "50", "--seed", "7", "--emit", "eigs", "--out",
                p.to_str().unwrap(),
            ]);
            assert_eq!(code, 0);
        }
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }
}
