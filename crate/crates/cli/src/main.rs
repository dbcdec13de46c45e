// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use nfrange::ambiguity::{ambiguity_surface, AmbiguityMethod};
use nfrange::crb::{alpha_factor, effective_nf_range};
use nfrange::estimator::{monte_carlo, MonteCarloConfig, SearchGrid, TrialRecord};
use nfrange::sweep::{beta_sweep, crb_sweep, nf_term_sweep, CrbSweepRow, GridSpec, NfTermRow};
use nfrange::{Geometry, SPEED_OF_LIGHT};

mod settings;

use settings::{Format, Settings};

/// Near-field range estimation: ambiguity functions, Cramér-Rao bounds
/// and Monte Carlo checks of the ML estimator.
#[derive(Parser)]
#[command(name = "nfrange", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key=value file with any of the flags below; flags take priority
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Carrier frequency, Hz (SI suffixes accepted: 24G)
    #[arg(long, global = true)]
    fc: Option<String>,
    /// Waveform bandwidth, Hz
    #[arg(long, global = true)]
    bandwidth: Option<String>,
    /// `sinc` or a two-column spectrum file
    #[arg(long, global = true)]
    waveform: Option<String>,
    /// True target range, m
    #[arg(long, global = true)]
    range: Option<String>,
    /// Array aperture D, m
    #[arg(long, global = true)]
    aperture: Option<String>,
    #[arg(long, global = true)]
    nt: Option<String>,
    #[arg(long, global = true)]
    nr: Option<String>,
    /// pt | et
    #[arg(long, global = true)]
    target: Option<String>,
    /// simo | mimo
    #[arg(long = "config-tag", global = true)]
    config_tag: Option<String>,
    /// Custom layout file with [tx] and [rx] sections
    #[arg(long, global = true, value_name = "FILE")]
    array: Option<String>,
    /// Per-pair SNR in dB; `inf` for noise-free
    #[arg(long = "snr-db", global = true, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// min:max:points[:log]
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Output file; standard output when absent
    #[arg(long, global = true)]
    out: Option<String>,
    /// csv | json
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Ambiguity versus ρ for a scenario, or the closed forms versus β
    Ambiguity {
        /// Closed-form phase ambiguity of the four configurations versus β
        #[arg(long)]
        beta: bool,
        /// Comma-separated: exact, product, analytic, mismatch
        #[arg(long)]
        methods: Option<String>,
    },
    /// Range bound versus R by exact sums, closed forms and the expansion
    CrbSweep,
    /// Near-field term η - β² versus R/D for the four configurations
    NfTerm {
        /// Also sum over N_t = N_r = ELEMENTS tagged layouts
        #[arg(long)]
        elements: Option<String>,
    },
    /// Effective near-field range of the four configurations
    EffectiveRange,
    /// Monte Carlo RMSE of the ML estimator against the bound
    MonteCarlo {
        #[arg(long)]
        trials: Option<String>,
        /// Sampling rate, Hz (default 8B)
        #[arg(long)]
        fs: Option<String>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let c = cli.common;
    let mut flags: Vec<(&str, Option<String>)> = vec![
        ("fc", c.fc),
        ("bandwidth", c.bandwidth),
        ("waveform", c.waveform),
        ("range", c.range),
        ("aperture", c.aperture),
        ("nt", c.nt),
        ("nr", c.nr),
        ("target", c.target),
        ("config-tag", c.config_tag),
        ("array", c.array),
        ("snr-db", c.snr_db),
        ("grid", c.grid),
        ("seed", c.seed),
        ("out", c.out),
        ("format", c.format),
    ];
    let name = match &cli.command {
        Command::Ambiguity { methods, .. } => {
            flags.push(("methods", methods.clone()));
            "ambiguity"
        }
        Command::CrbSweep => "crb-sweep",
        Command::NfTerm { elements } => {
            flags.push(("elements", elements.clone()));
            "nf-term"
        }
        Command::EffectiveRange => "effective-range",
        Command::MonteCarlo { trials, fs } => {
            flags.push(("trials", trials.clone()));
            flags.push(("fs", fs.clone()));
            "monte-carlo"
        }
    };
    let settings = Settings::resolve(c.config.as_deref(), &flags)?;
    let out = Output::new(name, &settings)?;
    match cli.command {
        Command::Ambiguity { beta: true, .. } => run_beta(&settings, &out),
        Command::Ambiguity { beta: false, .. } => run_ambiguity(&settings, &out),
        Command::CrbSweep => run_crb_sweep(&settings, &out),
        Command::NfTerm { .. } => run_nf_term(&settings, &out),
        Command::EffectiveRange => run_effective_range(&settings, &out),
        Command::MonteCarlo { .. } => run_monte_carlo(&settings, &out),
    }
}

/// Serialized writer with the reproducibility header.
struct Output {
    command: &'static str,
    path: Option<PathBuf>,
    format: Format,
    meta: Value,
}

impl Output {
    fn new(command: &'static str, settings: &Settings) -> Result<Self> {
        let meta = json!({
            "tool": "nfrange",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "parameters": settings.entries(),
        });
        Ok(Self {
            command,
            path: settings.out(),
            format: settings.format()?,
            meta,
        })
    }

    fn csv_header(&self, extra: &[(&str, String)]) -> String {
        let mut s = format!("# nfrange {}\n# command: {}\n", env!("CARGO_PKG_VERSION"), self.command);
        if let Some(params) = self.meta["parameters"].as_object() {
            for (k, v) in params {
                s.push_str(&format!("# {k} = {}\n", v.as_str().unwrap_or_default()));
            }
        }
        for (k, v) in extra {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s
    }

    fn csv(&self, extra: &[(&str, String)], header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
        let mut text = self.csv_header(extra);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row);
            text.push('\n');
        }
        write_to(self.path.as_deref(), &text)
    }

    fn json(&self, mut body: Value) -> Result<()> {
        body["meta"] = self.meta.clone();
        write_to(self.path.as_deref(), &(serde_json::to_string_pretty(&body)? + "\n"))
    }
}

fn write_to(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .context("cannot write to standard output"),
    }
}

fn grid(settings: &Settings, default: impl FnOnce() -> Result<GridSpec>) -> Result<GridSpec> {
    match settings.raw("grid") {
        Some(g) => Ok(g.parse::<GridSpec>().context("--grid")?),
        None => default(),
    }
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn run_beta(settings: &Settings, out: &Output) -> Result<()> {
    let g = grid(settings, || Ok(GridSpec::new(0.0, 8.0, 801, false)?))?;
    if g.min < 0.0 {
        bail!("--grid: β must be >= 0");
    }
    let rows = beta_sweep(&g.values())?;
    let names: Vec<String> = Geometry::ALL.iter().map(|g| column_name(*g)).collect();
    match out.format {
        Format::Csv => out.csv(
            &[],
            &format!("beta,{}", names.join(",")),
            rows.iter().map(|(b, v)| {
                format!(
                    "{},{}",
                    num(*b),
                    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(",")
                )
            }),
        ),
        Format::Json => out.json(json!({
            "columns": names,
            "rows": rows.iter().map(|(b, v)| json!({"beta": b, "chi": v})).collect::<Vec<_>>(),
        })),
    }
}

fn column_name(g: Geometry) -> String {
    g.name().to_ascii_lowercase().replace('-', "_")
}

fn run_ambiguity(settings: &Settings, out: &Output) -> Result<()> {
    let s = settings.scenario()?;
    let methods: Vec<AmbiguityMethod> = match settings.raw("methods") {
        Some(list) => list.split(',').map(|m| m.trim().parse()).collect::<Result<_, _>>()?,
        None if s.geometry().is_ok() => vec![
            AmbiguityMethod::Exact,
            AmbiguityMethod::Product,
            AmbiguityMethod::Analytic,
        ],
        None => vec![AmbiguityMethod::Exact, AmbiguityMethod::Product],
    };
    let lobe = SPEED_OF_LIGHT / (2.0 * s.waveform.bandwidth());
    let g = grid(settings, || {
        Ok(GridSpec::new(
            (s.range - 5.0 * lobe).max(1e-3 * s.range),
            s.range + 5.0 * lobe,
            1001,
            false,
        )?)
    })?;
    let rhos = g.values();
    if !s.assumptions().all_hold() && methods.iter().any(|m| *m != AmbiguityMethod::Exact) {
        log::warn!("far-from-array assumptions do not hold; factorized ambiguity forms are approximate");
    }
    let columns = methods
        .iter()
        .map(|&m| ambiguity_surface(&s, &rhos, m).with_context(|| format!("method {m}")))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = methods.iter().map(|m| format!("chi_{m}")).collect();
    match out.format {
        Format::Csv => out.csv(
            &[],
            &format!("rho,{}", names.join(",")),
            rhos.iter().enumerate().map(|(i, rho)| {
                let vals: Vec<String> = columns.iter().map(|c| num(c[i].chi_total)).collect();
                format!("{},{}", num(*rho), vals.join(","))
            }),
        ),
        Format::Json => out.json(json!({
            "columns": names,
            "rows": rhos.iter().enumerate().map(|(i, rho)| {
                let mut row = json!({"rho": rho});
                for (m, c) in methods.iter().zip(&columns) {
                    row[m.name()] = json!(c[i]);
                }
                row
            }).collect::<Vec<_>>(),
        })),
    }
}

fn run_crb_sweep(settings: &Settings, out: &Output) -> Result<()> {
    let s = settings.scenario()?;
    let d = s.array.aperture();
    let g = grid(settings, || Ok(GridSpec::new(1.2 * d, 100.0 * d, 200, true)?))?;
    if !(g.min > 0.0) {
        bail!("--grid: ranges must be > 0");
    }
    let sweep = crb_sweep(&s, &g.values())?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_else(|| "null".into());
    match out.format {
        Format::Csv => out.csv(
            &[
                ("effective_nf_range", opt(sweep.effective_nf_range)),
                ("knee", opt(sweep.knee)),
            ],
            CrbSweepRow::CSV_HEADER,
            sweep.rows.iter().map(CrbSweepRow::to_csv_row),
        ),
        Format::Json => out.json(serde_json::to_value(&sweep)?),
    }
}

fn run_nf_term(settings: &Settings, out: &Output) -> Result<()> {
    let g = grid(settings, || Ok(GridSpec::new(1.0, 100.0, 200, true)?))?;
    if !(g.min > 0.0) {
        bail!("--grid: R/D must be > 0");
    }
    let elements = settings
        .raw("elements")
        .map(|_| settings.count("elements"))
        .transpose()?;
    let rows = nf_term_sweep(&g.values(), elements)?;
    match out.format {
        Format::Csv => out.csv(
            &[],
            &NfTermRow::csv_header(elements.is_some()),
            rows.iter().map(NfTermRow::to_csv_row),
        ),
        Format::Json => out.json(json!({
            "configs": Geometry::ALL.iter().map(|g| column_name(*g)).collect::<Vec<_>>(),
            "rows": rows,
        })),
    }
}

fn run_effective_range(settings: &Settings, out: &Output) -> Result<()> {
    let w = settings.waveform()?;
    let (fc, d) = (settings.number("fc")?, settings.number("aperture")?);
    let rows = Geometry::ALL
        .iter()
        .map(|&g| {
            let r = effective_nf_range(g, d, fc, w.central_frequency(), w.rms_bandwidth())?;
            Ok((g, alpha_factor(g), r))
        })
        .collect::<Result<Vec<_>>>()?;
    match out.format {
        Format::Csv => out.csv(
            &[],
            "config,alpha,effective_nf_range",
            rows.iter().map(|(g, a, r)| format!("{},{a},{}", column_name(*g), num(*r))),
        ),
        Format::Json => out.json(json!({
            "rows": rows.iter().map(|(g, a, r)| json!({"config": column_name(*g), "alpha": a, "effective_nf_range": r})).collect::<Vec<_>>(),
        })),
    }
}

fn run_monte_carlo(settings: &Settings, out: &Output) -> Result<()> {
    let s = settings.scenario()?;
    let trials = if settings.raw("trials").is_some() {
        settings.count("trials")?
    } else {
        100
    };
    let mut config = MonteCarloConfig::for_scenario(&s, trials, settings.seed()?);
    if let Some(fs) = settings.optional_number("fs")? {
        config.fs = fs;
    }
    if settings.raw("grid").is_some() {
        let g = grid(settings, || unreachable!())?;
        config.grid = SearchGrid {
            min: g.min,
            max: g.max,
            step: Some((g.max - g.min) / (g.points - 1) as f64),
        };
    }
    let result = monte_carlo(&s, &config)?;
    if result.summary.boundary_failures > 0 {
        log::warn!("{} trials hit the search boundary", result.summary.boundary_failures);
    }
    let mut summary = serde_json::to_value(result.summary)?;
    summary["meta"] = out.meta.clone();
    match out.format {
        Format::Csv => {
            out.csv(
                &[],
                TrialRecord::CSV_HEADER,
                result.records.iter().map(TrialRecord::to_csv_row),
            )?;
            let text = serde_json::to_string_pretty(&summary)? + "\n";
            match &out.path {
                Some(p) => {
                    let mut name = p.as_os_str().to_owned();
                    name.push(".summary.json");
                    write_to(Some(Path::new(&name)), &text)
                }
                None => {
                    eprint!("{text}");
                    Ok(())
                }
            }
        }
        Format::Json => out.json(json!({"summary": summary, "trials": result.records})),
    }
}
