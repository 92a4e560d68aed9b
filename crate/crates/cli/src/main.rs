//! Command-line surface for the leverage / smile-dynamics toolkit.
//!
//! Subcommands: `estimate` (g_L from prices), `predict` (theoretical gamma
//! curves from a g_L file), `regress` (empirical gamma from implied-vol
//! panels), `simulate` (retarded-vol Monte Carlo plus the forward-vol
//! oracle), and `compare` (plot-ready long CSV of all gamma curves).
//!
//! Conventions shared by every command:
//! - all numeric output carries 9 significant digits and round-trips through
//!   the CLI's own readers;
//! - output files are written to a temporary sibling and renamed, so a
//!   nonzero exit never leaves a partial file;
//! - exit codes: 0 success, 2 validation/usage, 1 internal error;
//! - diagnostics go to stderr as `error: <code>: <message>`;
//! - files always store daily vol units; `--annualize` (x sqrt(252)) only
//!   affects the human-readable summary on stdout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use leverage_smile as ls;
use leverage_smile::{CurveKind, GammaCurve, Kernel, KernelForm, LeverageFunction, SimConfig};

const ANNUALIZE: f64 = 15.874507866387544; // sqrt(252)

#[derive(Parser)]
#[command(
    name = "leverage-smile",
    version,
    about = "Leverage correlation and implied-volatility smile dynamics toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the leverage correlation function g_L from a price CSV.
    Estimate(EstimateArgs),
    /// Compute theoretical gamma curves from a g_L file.
    Predict(PredictArgs),
    /// Regress relative ATM vol changes on returns, per ticker and maturity.
    Regress(RegressArgs),
    /// Simulate a retarded-volatility path and run the forward-vol oracle.
    Simulate(SimulateArgs),
    /// Emit a long-format report with every gamma curve for plotting.
    Compare(CompareArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Price CSV with a header row naming the date and price columns.
    #[arg(long)]
    prices: PathBuf,
    /// Largest lag (trading days) to estimate; must be >= 1.
    #[arg(long)]
    max_lag: u32,
    /// Output CSV path (`lag,g_l,std_err,sigma,n_obs`).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "date")]
    date_column: String,
    #[arg(long, default_value = "close")]
    price_column: String,
    #[arg(long, value_enum, default_value_t = ReturnKindArg::Log)]
    return_kind: ReturnKindArg,
    /// Number of block-bootstrap replicates; omit to skip standard errors.
    #[arg(long)]
    bootstrap: Option<u32>,
    /// Bootstrap block length; defaults to 2 * max_lag.
    #[arg(long)]
    block_len: Option<u32>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Display vols annualized (x sqrt(252)) in the stdout summary.
    #[arg(long)]
    annualize: bool,
}

#[derive(Args)]
struct PredictArgs {
    /// g_L CSV as written by `estimate`.
    #[arg(long)]
    gl: PathBuf,
    /// Comma-separated maturities in trading days.
    #[arg(long, value_delimiter = ',', required = true)]
    maturities: Vec<u32>,
    /// Term-structure CSV (`maturity_days,vol`, daily units).
    #[arg(long, conflicts_with = "flat_vol")]
    term_structure: Option<PathBuf>,
    /// Flat ATM vol level (daily units) used for every maturity.
    #[arg(long)]
    flat_vol: Option<f64>,
    #[arg(long, value_enum, default_value_t = KindArg::Both)]
    kind: KindArg,
    /// Output CSV path (`maturity_days,gamma,std_err,kind`).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RegressArgs {
    /// Implied-vol panel CSV (`date,maturity_days,atm_vol`); repeatable.
    #[arg(long, required = true)]
    panel: Vec<PathBuf>,
    /// Price CSV; one per panel, or a single file shared by all panels.
    #[arg(long, required = true)]
    prices: Vec<PathBuf>,
    /// Output CSV (`ticker,maturity_days,gamma_hat,intercept,std_err,n_obs`).
    #[arg(long)]
    out: PathBuf,
    /// Symmetric quantile clip in (0, 0.5) applied to relative vol changes.
    #[arg(long)]
    clip: Option<f64>,
    /// Optional tranche-average CSV (`maturity_days,gamma,std_err,kind`).
    #[arg(long)]
    tranche_out: Option<PathBuf>,
    #[arg(long, default_value = "date")]
    date_column: String,
    #[arg(long, default_value = "close")]
    price_column: String,
    #[arg(long, value_enum, default_value_t = ReturnKindArg::Log)]
    return_kind: ReturnKindArg,
}

#[derive(Args)]
struct SimulateArgs {
    /// Flat key=value config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    kernel_form: Option<KernelFormArg>,
    /// Kernel amplitude A (negative for the leverage effect).
    #[arg(long, allow_hyphen_values = true)]
    amplitude: Option<f64>,
    /// Exponential timescale, or the power-law exponent.
    #[arg(long)]
    tau: Option<f64>,
    /// Kernel cutoff L in trading days.
    #[arg(long)]
    cutoff: Option<u32>,
    /// Baseline daily volatility sigma_bar.
    #[arg(long)]
    sigma_bar: Option<f64>,
    /// Path length in days (after warm-up).
    #[arg(long)]
    n_days: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    vol_floor_frac: Option<f64>,
    /// Returns CSV output path (`date_index,return`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated oracle maturities (trading days).
    #[arg(long, value_delimiter = ',', requires = "oracle_out")]
    oracle: Vec<u32>,
    /// Oracle CSV output (`maturity_days,slope,std_err,theory_gamma`).
    #[arg(long, requires = "oracle")]
    oracle_out: Option<PathBuf>,
    /// Display vols annualized (x sqrt(252)) in the stdout summary.
    #[arg(long)]
    annualize: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// g_L CSV as written by `estimate`.
    #[arg(long)]
    gl: PathBuf,
    /// Comma-separated maturities in trading days.
    #[arg(long, value_delimiter = ',', required = true)]
    maturities: Vec<u32>,
    #[arg(long, conflicts_with = "flat_vol")]
    term_structure: Option<PathBuf>,
    #[arg(long)]
    flat_vol: Option<f64>,
    /// Implied-vol panels for the empirical curve; repeatable.
    #[arg(long, requires = "prices")]
    panel: Vec<PathBuf>,
    /// Price CSV; one per panel, or a single file shared by all panels.
    #[arg(long)]
    prices: Vec<PathBuf>,
    #[arg(long)]
    clip: Option<f64>,
    /// Output CSV (`maturity_days,kind,gamma,std_err` + `# key: value` header).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "date")]
    date_column: String,
    #[arg(long, default_value = "close")]
    price_column: String,
    #[arg(long, value_enum, default_value_t = ReturnKindArg::Log)]
    return_kind: ReturnKindArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReturnKindArg {
    Log,
    Simple,
}

impl From<ReturnKindArg> for ls::ReturnKind {
    fn from(k: ReturnKindArg) -> Self {
        match k {
            ReturnKindArg::Log => ls::ReturnKind::Log,
            ReturnKindArg::Simple => ls::ReturnKind::Simple,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Moneyness,
    Strike,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelFormArg {
    Exponential,
    PowerLaw,
}

/// Error carrying the process exit code and a stable diagnostic code.
struct CliError {
    exit: u8,
    code: String,
    message: String,
}

impl CliError {
    fn usage(code: &str, message: impl Into<String>) -> Self {
        CliError {
            exit: 2,
            code: code.into(),
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError {
            exit: 1,
            code: "internal".into(),
            message: message.into(),
        }
    }
}

impl From<ls::Error> for CliError {
    fn from(e: ls::Error) -> Self {
        CliError {
            exit: 2,
            code: e.code().into(),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Regress(args) => cmd_regress(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.code, e.message);
            ExitCode::from(e.exit)
        }
    }
}

// ---------------------------------------------------------------------------
// shared helpers

/// 9 significant digits; `f64::from_str` of the output re-prints identically.
fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

/// Write to a temporary sibling then rename, so failures never leave a
/// partial output file.
fn write_atomic(path: &Path, content: &str) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, content)
        .map_err(|e| CliError::internal(format!("writing {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::internal(format!("renaming to {}: {e}", path.display())))?;
    Ok(())
}

fn load_returns(
    path: &Path,
    date_column: &str,
    price_column: &str,
    kind: ReturnKindArg,
) -> CliResult<ls::ReturnSeries> {
    let prices = ls::load_price_series(path, date_column, price_column)?;
    Ok(ls::compute_returns(&prices, kind.into())?)
}

/// Parse a g_L CSV (`lag,g_l,std_err,sigma,n_obs`) back into a
/// [`LeverageFunction`]. The std_err column may be empty on every row.
fn read_gl_csv(path: &Path) -> CliResult<LeverageFunction> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage("io-error", format!("reading {}: {e}", path.display())))?;
    let parse_err = |row: usize, msg: String| {
        CliError::usage("parse-error", format!("{}:{row}: {msg}", path.display()))
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "lag,g_l,std_err,sigma,n_obs" => {}
        Some((_, h)) => {
            return Err(parse_err(1, format!("unexpected header '{h}'")));
        }
        None => return Err(parse_err(1, "empty file".into())),
    }
    let mut lags = Vec::new();
    let mut values = Vec::new();
    let mut std_errors = Vec::new();
    let mut sigma = None;
    let mut n_obs = None;
    for (i, line) in lines {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(
                row,
                format!("expected 5 fields, got {}", fields.len()),
            ));
        }
        let lag: u32 = fields[0]
            .trim()
            .parse()
            .map_err(|e| parse_err(row, format!("lag: {e}")))?;
        let value: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|e| parse_err(row, format!("g_l: {e}")))?;
        let se = match fields[2].trim() {
            "" => None,
            s => Some(
                s.parse::<f64>()
                    .map_err(|e| parse_err(row, format!("std_err: {e}")))?,
            ),
        };
        let sig: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|e| parse_err(row, format!("sigma: {e}")))?;
        let n: usize = fields[4]
            .trim()
            .parse()
            .map_err(|e| parse_err(row, format!("n_obs: {e}")))?;
        if lags.len() != lag as usize {
            return Err(parse_err(
                row,
                format!("expected lag {}, got {lag}", lags.len()),
            ));
        }
        lags.push(lag);
        values.push(value);
        std_errors.push(se);
        sigma.get_or_insert(sig);
        n_obs.get_or_insert(n);
    }
    if lags.is_empty() {
        return Err(parse_err(2, "no data rows".into()));
    }
    let sigma = sigma.unwrap();
    if !(sigma > 0.0) {
        return Err(parse_err(2, format!("sigma must be positive, got {sigma}")));
    }
    let std_errors = if std_errors.iter().all(|s| s.is_some()) {
        Some(std_errors.into_iter().map(|s| s.unwrap()).collect())
    } else {
        None
    };
    Ok(LeverageFunction {
        lags,
        values,
        std_errors,
        sigma,
        n_obs: n_obs.unwrap(),
    })
}

/// Build the term structure for the requested maturities from either a flat
/// level or a `maturity_days,vol` CSV that must cover every maturity.
fn build_term(
    maturities: &[u32],
    term_structure: &Option<PathBuf>,
    flat_vol: Option<f64>,
) -> CliResult<ls::VolTermStructure> {
    let mut sorted: Vec<u32> = maturities.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != maturities.len() {
        return Err(CliError::usage(
            "invalid-parameter",
            "duplicate maturities requested",
        ));
    }
    match (term_structure, flat_vol) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::usage("io-error", format!("reading {}: {e}", path.display()))
            })?;
            let mut map = BTreeMap::new();
            for (i, line) in text.lines().enumerate() {
                if i == 0 {
                    if line.trim() != "maturity_days,vol" {
                        return Err(CliError::usage(
                            "parse-error",
                            format!("{}:1: unexpected header '{line}'", path.display()),
                        ));
                    }
                    continue;
                }
                if line.trim().is_empty() {
                    continue;
                }
                let (m, v) = line.split_once(',').ok_or_else(|| {
                    CliError::usage(
                        "parse-error",
                        format!("{}:{}: expected 2 fields", path.display(), i + 1),
                    )
                })?;
                let m: u32 = m.trim().parse().map_err(|e| {
                    CliError::usage(
                        "parse-error",
                        format!("{}:{}: maturity_days: {e}", path.display(), i + 1),
                    )
                })?;
                let v: f64 = v.trim().parse().map_err(|e| {
                    CliError::usage(
                        "parse-error",
                        format!("{}:{}: vol: {e}", path.display(), i + 1),
                    )
                })?;
                map.insert(m, v);
            }
            let vols: Vec<f64> = sorted
                .iter()
                .map(|m| {
                    map.get(m).copied().ok_or_else(|| {
                        CliError::usage(
                            "maturity-mismatch",
                            format!("maturity {m} missing from {}", path.display()),
                        )
                    })
                })
                .collect::<CliResult<_>>()?;
            Ok(ls::VolTermStructure::new(sorted, vols)?)
        }
        (None, Some(vol)) => Ok(ls::VolTermStructure::flat(sorted, vol)?),
        (None, None) => Err(CliError::usage(
            "invalid-parameter",
            "one of --term-structure or --flat-vol is required",
        )),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }
}

fn push_curve_rows(out: &mut String, curve: &GammaCurve) {
    for (i, &m) in curve.maturities.iter().enumerate() {
        let se = curve
            .std_errors
            .as_ref()
            .map(|s| fmt9(s[i]))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{m},{},{se},{}",
            fmt9(curve.gammas[i]),
            curve.kind.as_str()
        );
    }
}

// ---------------------------------------------------------------------------
// estimate

fn cmd_estimate(args: EstimateArgs) -> CliResult<()> {
    if args.max_lag == 0 {
        return Err(CliError::usage(
            "invalid-parameter",
            "--max-lag must be >= 1",
        ));
    }
    let returns = load_returns(
        &args.prices,
        &args.date_column,
        &args.price_column,
        args.return_kind,
    )?;
    let lev = match args.bootstrap {
        Some(n_boot) => {
            let block_len = args.block_len.unwrap_or(2 * args.max_lag);
            ls::bootstrap_errors(&returns, args.max_lag, n_boot, block_len, args.seed)?
        }
        None => ls::estimate_leverage(&returns, args.max_lag)?,
    };
    let mut out = String::from("lag,g_l,std_err,sigma,n_obs\n");
    for (i, &lag) in lev.lags.iter().enumerate() {
        let se = lev
            .std_errors
            .as_ref()
            .map(|s| fmt9(s[i]))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{lag},{},{se},{},{}",
            fmt9(lev.values[i]),
            fmt9(lev.sigma),
            lev.n_obs
        );
    }
    write_atomic(&args.out, &out)?;
    let (sigma, unit) = if args.annualize {
        (lev.sigma * ANNUALIZE, "annualized")
    } else {
        (lev.sigma, "daily")
    };
    println!(
        "wrote {}: g_L lags 0..={}, sigma = {} ({unit}), n_obs = {}",
        args.out.display(),
        args.max_lag,
        fmt9(sigma),
        lev.n_obs
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// predict

fn cmd_predict(args: PredictArgs) -> CliResult<()> {
    let gl = read_gl_csv(&args.gl)?;
    let term = build_term(&args.maturities, &args.term_structure, args.flat_vol)?;
    let mut curves = Vec::new();
    match args.kind {
        KindArg::Moneyness => curves.push(ls::gamma_moneyness(&gl, &term)?),
        KindArg::Strike => curves.push(ls::gamma_strike(&gl, &term)?),
        KindArg::Both => {
            curves.push(ls::gamma_moneyness(&gl, &term)?);
            curves.push(ls::gamma_strike(&gl, &term)?);
        }
    }
    let mut out = String::from("maturity_days,gamma,std_err,kind\n");
    // group by maturity: one row per curve kind under each maturity
    for i in 0..term.maturities.len() {
        for curve in &curves {
            let se = curve
                .std_errors
                .as_ref()
                .map(|s| fmt9(s[i]))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{se},{}",
                curve.maturities[i],
                fmt9(curve.gammas[i]),
                curve.kind.as_str()
            );
        }
    }
    write_atomic(&args.out, &out)?;
    println!(
        "wrote {}: {} maturities, {} curve(s)",
        args.out.display(),
        term.maturities.len(),
        curves.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// regress

/// Load panels and prices, align them, and run the batch regression.
/// Shared by `regress` and `compare`.
fn aligned_panels(
    panels: &[PathBuf],
    prices: &[PathBuf],
    date_column: &str,
    price_column: &str,
    return_kind: ReturnKindArg,
) -> CliResult<Vec<ls::AlignedPanel>> {
    if prices.len() != 1 && prices.len() != panels.len() {
        return Err(CliError::usage(
            "invalid-parameter",
            format!(
                "{} price file(s) for {} panel(s); give one shared file or one per panel",
                prices.len(),
                panels.len()
            ),
        ));
    }
    let mut aligned = Vec::with_capacity(panels.len());
    for (i, panel_path) in panels.iter().enumerate() {
        let price_path = if prices.len() == 1 {
            &prices[0]
        } else {
            &prices[i]
        };
        let returns = load_returns(price_path, date_column, price_column, return_kind)?;
        let panel = ls::load_vol_panel(panel_path)?;
        aligned.push(ls::align(&panel, &returns)?);
    }
    Ok(aligned)
}

fn tranche_by_maturity(results: &[ls::RegressionResult]) -> CliResult<GammaCurve> {
    let mut groups: BTreeMap<u32, Vec<ls::RegressionResult>> = BTreeMap::new();
    for r in results {
        groups.entry(r.maturity).or_default().push(r.clone());
    }
    let groups: Vec<Vec<ls::RegressionResult>> = groups.into_values().collect();
    Ok(ls::tranche_average(&groups)?)
}

fn cmd_regress(args: RegressArgs) -> CliResult<()> {
    let aligned = aligned_panels(
        &args.panel,
        &args.prices,
        &args.date_column,
        &args.price_column,
        args.return_kind,
    )?;
    let (results, skipped) = ls::implied_gamma_batch_clipped(&aligned, args.clip);
    for (ticker, maturity, err) in &skipped {
        eprintln!("warning: skipping {ticker} maturity {maturity}: {err}");
    }
    if results.is_empty() {
        let (_, _, first) = skipped.into_iter().next().expect("some maturity existed");
        return Err(first.into());
    }
    let mut out = String::from("ticker,maturity_days,gamma_hat,intercept,std_err,n_obs\n");
    for r in &results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.ticker,
            r.maturity,
            fmt9(r.slope),
            fmt9(r.intercept),
            fmt9(r.std_err),
            r.n_obs
        );
    }
    write_atomic(&args.out, &out)?;
    if let Some(tranche_out) = &args.tranche_out {
        let curve = tranche_by_maturity(&results)?;
        let mut out = String::from("maturity_days,gamma,std_err,kind\n");
        push_curve_rows(&mut out, &curve);
        write_atomic(tranche_out, &out)?;
    }
    println!(
        "wrote {}: {} regression(s), {} skipped",
        args.out.display(),
        results.len(),
        skipped_len(&results, &aligned)
    );
    Ok(())
}

/// Number of (ticker, maturity) cells that produced no regression.
fn skipped_len(results: &[ls::RegressionResult], panels: &[ls::AlignedPanel]) -> usize {
    let total: usize = panels.iter().map(|p| p.maturities.len()).sum();
    total - results.len()
}

// ---------------------------------------------------------------------------
// simulate

/// Simulation settings with the documented defaults; a config file and then
/// explicit flags override individual fields.
struct SimSettings {
    form: KernelForm,
    amplitude: f64,
    tau: f64,
    cutoff: u32,
    sigma_bar: f64,
    n_days: usize,
    seed: u64,
    vol_floor_frac: f64,
    /// Panel-synthesis noise; accepted in config files for compatibility.
    #[allow(dead_code)]
    noise: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            form: KernelForm::Exponential,
            amplitude: -0.1,
            tau: 10.0,
            cutoff: 60,
            sigma_bar: 0.01,
            n_days: 262_144,
            seed: 42,
            vol_floor_frac: 0.1,
            noise: 0.005,
        }
    }
}

fn parse_config(path: &Path, settings: &mut SimSettings) -> CliResult<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage("io-error", format!("reading {}: {e}", path.display())))?;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| {
            CliError::usage(
                "invalid-parameter",
                format!("{}:{}: {msg}", path.display(), i + 1),
            )
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected key = value".into()))?;
        let key = key.trim();
        let value = value.trim();
        let num = |what: &str| -> CliResult<f64> {
            value
                .parse::<f64>()
                .map_err(|e| bad(format!("{what}: {e}")))
        };
        match key {
            "kernel.form" => {
                settings.form = match value {
                    "exponential" => KernelForm::Exponential,
                    "power-law" | "power_law" => KernelForm::PowerLaw,
                    other => return Err(bad(format!("unknown kernel form '{other}'"))),
                }
            }
            "kernel.amplitude" => settings.amplitude = num("kernel.amplitude")?,
            "kernel.tau" => settings.tau = num("kernel.tau")?,
            "kernel.cutoff" => {
                settings.cutoff = value
                    .parse()
                    .map_err(|e| bad(format!("kernel.cutoff: {e}")))?
            }
            "sigma_bar" => settings.sigma_bar = num("sigma_bar")?,
            "n_days" => settings.n_days = value.parse().map_err(|e| bad(format!("n_days: {e}")))?,
            "seed" => settings.seed = value.parse().map_err(|e| bad(format!("seed: {e}")))?,
            "vol_floor_frac" => settings.vol_floor_frac = num("vol_floor_frac")?,
            "noise" => settings.noise = num("noise")?,
            other => return Err(bad(format!("unknown config key '{other}'"))),
        }
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    if args.out.is_none() && args.oracle_out.is_none() {
        return Err(CliError::usage(
            "invalid-parameter",
            "at least one of --out or --oracle-out is required",
        ));
    }
    let mut settings = SimSettings::default();
    if let Some(config) = &args.config {
        parse_config(config, &mut settings)?;
    }
    if let Some(form) = args.kernel_form {
        settings.form = match form {
            KernelFormArg::Exponential => KernelForm::Exponential,
            KernelFormArg::PowerLaw => KernelForm::PowerLaw,
        };
    }
    if let Some(v) = args.amplitude {
        settings.amplitude = v;
    }
    if let Some(v) = args.tau {
        settings.tau = v;
    }
    if let Some(v) = args.cutoff {
        settings.cutoff = v;
    }
    if let Some(v) = args.sigma_bar {
        settings.sigma_bar = v;
    }
    if let Some(v) = args.n_days {
        settings.n_days = v;
    }
    if let Some(v) = args.seed {
        settings.seed = v;
    }
    if let Some(v) = args.vol_floor_frac {
        settings.vol_floor_frac = v;
    }

    let kernel = Kernel::new(
        settings.form.clone(),
        settings.amplitude,
        settings.tau,
        settings.cutoff,
    )?;
    let config = SimConfig::new(
        kernel.clone(),
        settings.sigma_bar,
        settings.n_days,
        settings.seed,
        settings.vol_floor_frac,
    )?;
    let (returns, clamped) = ls::simulate_counting(&config)?;

    if let Some(out) = &args.out {
        let mut text = String::from("date_index,return\n");
        for (i, &r) in returns.returns.iter().enumerate() {
            let _ = writeln!(text, "{i},{}", fmt9(r));
        }
        write_atomic(out, &text)?;
    }
    if let Some(oracle_out) = &args.oracle_out {
        let mut maturities = args.oracle.clone();
        maturities.sort_unstable();
        maturities.dedup();
        let gl = ls::kernel_to_gl(&kernel, settings.sigma_bar);
        let term = ls::VolTermStructure::flat(maturities.clone(), settings.sigma_bar)?;
        let theory = ls::gamma_moneyness(&gl, &term)?;
        let mut text = String::from("maturity_days,slope,std_err,theory_gamma\n");
        for &m in &maturities {
            let r = ls::forward_vol_slope(&returns, m, &theory)?;
            let _ = writeln!(
                text,
                "{m},{},{},{}",
                fmt9(r.slope),
                fmt9(r.std_err),
                fmt9(r.theory_gamma)
            );
        }
        write_atomic(oracle_out, &text)?;
    }
    let (sigma_bar, unit) = if args.annualize {
        (settings.sigma_bar * ANNUALIZE, "annualized")
    } else {
        (settings.sigma_bar, "daily")
    };
    println!(
        "simulated {} days (seed {}, sigma_bar = {} {unit}); {clamped} step(s) hit the vol floor",
        settings.n_days,
        settings.seed,
        fmt9(sigma_bar)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// compare

fn cmd_compare(args: CompareArgs) -> CliResult<()> {
    let gl = read_gl_csv(&args.gl)?;
    let term = build_term(&args.maturities, &args.term_structure, args.flat_vol)?;

    let theory_moneyness = ls::gamma_moneyness(&gl, &term)?;
    let theory_strike = ls::gamma_strike(&gl, &term)?;
    let skew = ls::theoretical_skew(&gl, &term)?;
    let sticky_strike = ls::gamma_sticky_strike(&skew, &term)?;
    let sticky_delta = ls::gamma_sticky_delta(&term.maturities);
    let local_vol = ls::gamma_local_vol(&sticky_strike)?;

    let mut tickers: Vec<String> = Vec::new();
    let mut date_range: Option<(String, String)> = None;
    let empirical = if args.panel.is_empty() {
        None
    } else {
        let aligned = aligned_panels(
            &args.panel,
            &args.prices,
            &args.date_column,
            &args.price_column,
            args.return_kind,
        )?;
        for p in &aligned {
            tickers.push(p.ticker.clone());
            if let (Some(first), Some(last)) = (p.dates.first(), p.dates.last()) {
                date_range = Some(match date_range.take() {
                    None => (first.clone(), last.clone()),
                    Some((lo, hi)) => (lo.min(first.clone()), hi.max(last.clone())),
                });
            }
        }
        tickers.sort();
        let (results, skipped) = ls::implied_gamma_batch_clipped(&aligned, args.clip);
        for (ticker, maturity, err) in &skipped {
            eprintln!("warning: skipping {ticker} maturity {maturity}: {err}");
        }
        // restrict the empirical curve to the requested maturities
        let wanted: Vec<ls::RegressionResult> = results
            .into_iter()
            .filter(|r| term.maturities.contains(&r.maturity))
            .collect();
        if wanted.is_empty() {
            None
        } else {
            Some(tranche_by_maturity(&wanted)?)
        }
    };

    let mut out = String::new();
    let _ = writeln!(out, "# tool: leverage-smile {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# seed: {}", args.seed);
    let _ = writeln!(
        out,
        "# tickers: {}",
        if tickers.is_empty() {
            "(none)".to_string()
        } else {
            tickers.join(",")
        }
    );
    let _ = writeln!(
        out,
        "# date_range: {}",
        match &date_range {
            Some((lo, hi)) => format!("{lo}..{hi}"),
            None => "(none)".to_string(),
        }
    );
    let _ = writeln!(
        out,
        "# maturities: {}",
        term.maturities
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    if empirical.is_none() {
        let _ = writeln!(out, "# absent: {}", CurveKind::Empirical.as_str());
    }
    out.push_str("maturity_days,kind,gamma,std_err\n");
    let mut curves = vec![
        &theory_moneyness,
        &theory_strike,
        &sticky_strike,
        &sticky_delta,
        &local_vol,
    ];
    if let Some(e) = &empirical {
        curves.push(e);
    }
    for curve in curves {
        for (i, &m) in curve.maturities.iter().enumerate() {
            let se = curve
                .std_errors
                .as_ref()
                .map(|s| fmt9(s[i]))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{m},{},{},{se}",
                curve.kind.as_str(),
                fmt9(curve.gammas[i])
            );
        }
    }
    write_atomic(&args.out, &out)?;
    println!(
        "wrote {}: {} maturities, {} curve kind(s)",
        args.out.display(),
        term.maturities.len(),
        5 + empirical.is_some() as usize
    );
    Ok(())
}
