//! The `mvcheb` command line: `fit`, `score`, `bound` and `verify`.
//!
//! Exit codes: 0 on success, 2 for usage or input errors, 3 when a
//! verification run finds an empirical coverage below its bound by more than
//! the Monte Carlo slack.

pub mod io;

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::chebyshev::{
    chebyshev_coverage_bound, chebyshev_tail_bound, gaussian_exact_coverage, make_whitener,
};
use crate::error::Error;
use crate::linalg::Matrix;
use crate::mc::{verify_bound, BoundReport, FamilyKind, MomentsMode, SamplerSpec};
use crate::moments::{fit_moments_with_tol, Divisor, DEFAULT_RANK_TOL};

pub use io::{parse_csv, read_csv, read_model, ModelFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::usage(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mvcheb",
    version,
    about = "Distribution-free concentration ellipsoids from the multivariate Chebyshev inequality"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit mean and covariance from a CSV of observations and emit a model file.
    Fit(FitArgs),
    /// Squared Mahalanobis distance of each CSV row under a fitted model.
    Score(ScoreArgs),
    /// Print the tail and coverage bounds for a dimension and squared radius.
    Bound(BoundArgs),
    /// Monte Carlo check of the coverage bound for a distribution family.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DivisorArg {
    Population,
    Sample,
}

impl From<DivisorArg> for Divisor {
    fn from(d: DivisorArg) -> Self {
        match d {
            DivisorArg::Population => Divisor::Population,
            DivisorArg::Sample => Divisor::Sample,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Observations, one per row.
    pub csv: PathBuf,
    #[arg(long, value_enum, default_value = "population")]
    pub divisor: DivisorArg,
    /// Relative eigenvalue tolerance for the numerical rank.
    #[arg(long = "rank-tol", default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Write the model here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub model: PathBuf,
    pub csv: PathBuf,
    /// Squared radius; adds a strict membership column and a coverage summary.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub eps: f64,
    /// Covariance rank when it is singular.
    #[arg(long, conflicts_with = "cond")]
    pub rank: Option<usize>,
    /// Number of leading coordinates conditioned on.
    #[arg(long)]
    pub cond: Option<usize>,
    /// Also print the exact coverage for a Gaussian vector.
    #[arg(long)]
    pub gaussian: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Gaussian,
    #[value(name = "uniform_box")]
    UniformBox,
    #[value(name = "student_t")]
    StudentT,
    #[value(name = "gaussian_mixture")]
    GaussianMixture,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gaussian => FamilyKind::Gaussian,
            FamilyArg::UniformBox => FamilyKind::UniformBox,
            FamilyArg::StudentT => FamilyKind::StudentT,
            FamilyArg::GaussianMixture => FamilyKind::GaussianMixture,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentsArg {
    True,
    Fitted,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated squared radii.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long, value_enum, default_value = "true")]
    pub moments: MomentsArg,
    /// Degrees of freedom for student_t (must exceed 2).
    #[arg(long, default_value_t = 5.0)]
    pub dof: f64,
    /// Embed the draws linearly into this many dimensions (rank stays `--dim`).
    #[arg(long)]
    pub embed: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

/// Formats `x` with `digits` significant digits, trailing zeros trimmed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i64;
    if !(-5..=15).contains(&exp) {
        return format!("{:.*e}", digits.saturating_sub(1), x);
    }
    let decimals = (digits as i64 - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(&cli.command) {
        Ok((text, code)) => {
            if let Err(e) = out.write_all(text.as_bytes()) {
                let _ = writeln!(err, "mvcheb: {e}");
                return EXIT_USAGE;
            }
            code
        }
        Err(e) => {
            let _ = writeln!(err, "mvcheb: {}", e.message);
            e.code
        }
    }
}

/// Runs one command, returning its stdout text and exit code.
pub fn execute(cmd: &Command) -> Result<(String, i32), CliError> {
    match cmd {
        Command::Fit(a) => cmd_fit(a).map(|s| (s, EXIT_OK)),
        Command::Score(a) => cmd_score(a).map(|s| (s, EXIT_OK)),
        Command::Bound(a) => cmd_bound(a).map(|s| (s, EXIT_OK)),
        Command::Verify(a) => cmd_verify(a),
    }
}

pub fn cmd_fit(a: &FitArgs) -> Result<String, CliError> {
    let data = read_csv(&a.csv)?;
    let model = fit_moments_with_tol(&data, a.divisor.into(), a.rank_tol)?;
    let json = ModelFile::from_model(&model).to_json();
    match &a.out {
        Some(path) => {
            std::fs::write(path, &json)
                .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(json),
    }
}

pub fn cmd_score(a: &ScoreArgs) -> Result<String, CliError> {
    let model = read_model(&a.model)?;
    let data = read_csv(&a.csv)?;
    if data.dim() != model.dim() {
        return Err(CliError::usage(format!(
            "data has {} columns but the model has dimension {}",
            data.dim(),
            model.dim()
        )));
    }
    if let Some(eps) = a.eps {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(CliError::usage(format!("--eps {eps} must be positive")));
        }
    }
    let w = make_whitener(&model, model.rank_tol())?;
    let mut s = String::new();
    s.push_str(if a.eps.is_some() {
        "index,z,inside\n"
    } else {
        "index,z\n"
    });
    let mut inside = 0usize;
    for (i, row) in data.rows().enumerate() {
        let z = w.mahalanobis_sq(row)?;
        match a.eps {
            Some(eps) => {
                let hit = z < eps;
                inside += hit as usize;
                let _ = writeln!(s, "{i},{z:?},{}", hit as u8);
            }
            None => {
                let _ = writeln!(s, "{i},{z:?}");
            }
        }
    }
    if let Some(eps) = a.eps {
        let coverage = inside as f64 / data.count() as f64;
        let bound = chebyshev_coverage_bound(w.rank(), eps)?;
        let _ = writeln!(
            s,
            "# rows={} inside={inside} coverage={coverage:?} rank={} eps={eps:?} bound={bound:?}",
            data.count(),
            w.rank()
        );
    }
    Ok(s)
}

pub fn cmd_bound(a: &BoundArgs) -> Result<String, CliError> {
    if a.dim == 0 {
        return Err(CliError::usage("--dim must be at least 1"));
    }
    if !(a.eps > 0.0 && a.eps.is_finite()) {
        return Err(CliError::usage(format!("--eps {} must be positive", a.eps)));
    }
    let (label, effective) = match (a.rank, a.cond) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage("--rank and --cond are mutually exclusive"))
        }
        (Some(r), None) if r == 0 || r > a.dim => {
            return Err(CliError::usage(format!(
                "--rank {r} must lie in 1..={}",
                a.dim
            )))
        }
        (Some(r), None) => ("covariance rank", r),
        (None, Some(k)) if k == 0 || k >= a.dim => {
            return Err(CliError::usage(format!(
                "--cond {k} must lie in 1..{} (strictly below --dim)",
                a.dim
            )))
        }
        (None, Some(k)) => ("free coordinates", a.dim - k),
        (None, None) => ("dimension", a.dim),
    };
    let tail = chebyshev_tail_bound(effective, a.eps)?;
    let cover = chebyshev_coverage_bound(effective, a.eps)?;
    let mut s = String::new();
    let _ = writeln!(s, "{:<18}{}", "dimension", a.dim);
    if let Some(k) = a.cond {
        let _ = writeln!(s, "{:<18}{}", "conditioned on", k);
    }
    let _ = writeln!(s, "{:<18}{}  ({label})", "effective dim", effective);
    let _ = writeln!(s, "{:<18}{}", "eps", fmt_sig(a.eps, 6));
    let _ = writeln!(s, "{:<18}{}", "tail bound", fmt_sig(tail, 6));
    let _ = writeln!(s, "{:<18}{}", "coverage bound", fmt_sig(cover, 6));
    if a.gaussian {
        let exact = gaussian_exact_coverage(effective, a.eps)?;
        let _ = writeln!(s, "{:<18}{}", "gaussian exact", fmt_sig(exact, 7));
    }
    Ok(s)
}

/// Fixed injective map from `d` to `m > d` dimensions: identity on top, smooth mixing rows below.
pub fn embedding_map(d: usize, m: usize) -> Matrix {
    let mut map = Matrix::zeros(m, d);
    for i in 0..m {
        for j in 0..d {
            map[(i, j)] = if i < d {
                (i == j) as u8 as f64
            } else {
                ((i * d + j + 1) as f64).sin()
            };
        }
    }
    map
}

pub fn build_spec(a: &VerifyArgs) -> Result<SamplerSpec, CliError> {
    let spec = SamplerSpec::standard(a.family.into(), a.dim, a.dof)?;
    match a.embed {
        None => Ok(spec),
        Some(m) if m <= a.dim => Err(CliError::usage(format!(
            "--embed {m} must exceed --dim {}",
            a.dim
        ))),
        Some(m) => Ok(spec.embed(embedding_map(a.dim, m), vec![0.0; m])?),
    }
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<(String, i32), CliError> {
    let spec = build_spec(a)?;
    let moments = match a.moments {
        MomentsArg::True => MomentsMode::True,
        MomentsArg::Fitted => MomentsMode::Fitted,
    };
    let report = verify_bound(&spec, &a.eps, a.samples, a.seed, moments)?;
    let code = if report.is_ok() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    };
    let text = if a.json {
        let mut j = serde_json::to_string_pretty(&report).expect("report serializes");
        j.push('\n');
        j
    } else {
        render_report(&report)
    };
    Ok((text, code))
}

pub fn render_report(r: &BoundReport) -> String {
    let mut s = String::new();
    let first = &r.rows[0];
    let _ = writeln!(
        s,
        "family {}  dim {}  samples {}  seed {}  moments {}",
        r.family,
        first.dim,
        first.samples,
        first.seed,
        match r.moments {
            MomentsMode::True => "true",
            MomentsMode::Fitted => "fitted",
        }
    );
    let _ = writeln!(
        s,
        "{:>12} {:>5} {:>12} {:>12} {:>12} {:>12}  status",
        "eps", "rank", "bound", "empirical", "gaussian", "slack"
    );
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{:>12} {:>5} {:>12} {:>12} {:>12} {:>12}  {}",
            fmt_sig(row.eps, 6),
            row.effective_rank,
            fmt_sig(row.chebyshev_lower, 6),
            fmt_sig(row.empirical_coverage, 6),
            row.gaussian_exact
                .map_or("-".to_string(), |g| fmt_sig(g, 6)),
            fmt_sig(row.slack, 6),
            if row.violated { "VIOLATED" } else { "ok" }
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.75, 6), "0.75");
        assert_eq!(fmt_sig(0.981_684_361_111, 6), "0.981684");
        assert_eq!(fmt_sig(0.981_684_361_111, 7), "0.9816844");
        assert_eq!(fmt_sig(8.0, 6), "8");
        assert_eq!(fmt_sig(123_456.7, 6), "123457");
        assert_eq!(fmt_sig(-0.0125, 6), "-0.0125");
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(1.5e-9, 3), "1.50e-9");
    }

    fn bound(args: &[&str]) -> Result<String, CliError> {
        let cli = Cli::try_parse_from(["mvcheb", "bound"].iter().chain(args)).unwrap();
        match cli.command {
            Command::Bound(a) => cmd_bound(&a),
            _ => unreachable!(),
        }
    }

    #[test]
    fn bound_variants() {
        let s = bound(&["--dim", "2", "--eps", "8", "--gaussian"]).unwrap();
        assert!(s.contains("coverage bound    0.75\n"), "{s}");
        assert!(s.contains("tail bound        0.25\n"));
        assert!(s.contains("gaussian exact    0.9816844\n"));
        assert!(bound(&["--dim", "5", "--rank", "2", "--eps", "8"])
            .unwrap()
            .contains("coverage bound    0.75\n"));
        assert!(bound(&["--dim", "3", "--cond", "1", "--eps", "8"])
            .unwrap()
            .contains("coverage bound    0.75\n"));
        assert!(bound(&["--dim", "3", "--cond", "3", "--eps", "8"]).is_err());
        assert!(bound(&["--dim", "3", "--rank", "4", "--eps", "8"]).is_err());
        assert!(bound(&["--dim", "3", "--eps", "0"]).is_err());
    }

    #[test]
    fn rank_and_cond_conflict_at_parse_time() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            [
                "mvcheb", "bound", "--dim", "3", "--eps", "8", "--rank", "1", "--cond", "1",
            ],
            &mut out,
            &mut err,
        );
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
    }

    #[test]
    fn embedding_map_is_injective() {
        let m = embedding_map(2, 5);
        assert_eq!(m.block(0, 0, 2, 2), Matrix::identity(2));
        assert_eq!(m.rows(), 5);
    }
}
