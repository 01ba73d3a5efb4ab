//! Command-line front end: `verify`, `density`, `metrics`, `constants`, `sample`.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::constants;
use crate::error::{Error, Result};
use crate::measure::MeasureSpec;
use crate::metrics;
use crate::polynomial::Polynomial;
use crate::pushforward::{self, Density1D, HistogramOptions};
use crate::sampler::{self, Method, SamplerOptions, SeededStream};
use crate::verifier::{self, Budget, CaseConfig, InequalityReport, SuiteConfig};

#[derive(Debug, Parser)]
#[command(name = "polysmooth", version, about = "Smoothness checks for polynomial images of log-concave measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed of the sampler stream family.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo sample budget.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Hit-and-run burn-in steps per chain.
    #[arg(long, global = true)]
    pub burnin: Option<usize>,
    /// Hit-and-run steps between kept draws.
    #[arg(long, global = true)]
    pub thin: Option<usize>,
    /// Force hit-and-run even for families with exact samplers.
    #[arg(long, global = true)]
    pub hit_and_run: bool,
    /// Omit wall-clock fields so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Keep (log h, log Δ) and (log M, log statistic) series in reports.
    #[arg(long, global = true)]
    pub plotdata: bool,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an inequality suite and write a JSON array of reports.
    Verify(VerifyArgs),
    /// Density of the law of a polynomial, as CSV.
    Density(DensityArgs),
    /// Distances and norms between one or two laws.
    Metrics(MetricsArgs),
    /// Evaluate a named constant.
    Constants(ConstantsArgs),
    /// Draw samples from a measure, as CSV.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct LawArgs {
    /// Measure JSON, e.g. '{"family":"gaussian","dim":1}'.
    #[arg(long)]
    pub measure: Option<String>,
    /// Polynomial, e.g. "x1^2 + 0.5*x1*x2".
    #[arg(long)]
    pub poly: Option<String>,
    /// Use Monte Carlo even when the law is known exactly.
    #[arg(long)]
    pub no_oracle: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub suite: String,
    /// JSON file with one case object or an array of them.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(long)]
    pub second_poly: Option<String>,
    /// Degree used for exponents (defaults to the polynomial degree).
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub law: LawArgs,
    /// Grid cells (histogram default: √samples).
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Density CSV written by `density`.
    #[arg(long)]
    pub first: Option<PathBuf>,
    #[arg(long)]
    pub second: Option<PathBuf>,
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(long)]
    pub second_poly: Option<String>,
    /// Exponent for Lᵖ norms.
    #[arg(long, default_value_t = 1.5)]
    pub p: f64,
    /// Smoothness order for Besov fits.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub name: String,
    /// Parameter JSON, e.g. '{"n":1,"tau":1}'.
    #[arg(long, default_value = "{}")]
    pub params: String,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub measure: String,
}

/// Writes floats with 17 significant digits, otherwise pretty JSON.
struct Sig17<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident),*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
            self.0.$name(w)
        })*
    };
}

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    delegate!(begin_array, end_array, end_array_value, begin_object, end_object, begin_object_value, end_object_value);
}

/// JSON text of `v` with 17 significant digits per float.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    v.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_measure(text: Option<&str>) -> Result<MeasureSpec> {
    match text {
        Some(t) => serde_json::from_str(t).map_err(|e| Error::Configuration(format!("bad --measure JSON: {e}"))),
        None => Ok(MeasureSpec::Gaussian { dim: 1, mean: None, cov: None }),
    }
}

fn budget(g: &Global, use_oracle: bool) -> Budget {
    let mut b = Budget {
        seed: g.seed,
        use_oracle,
        sampler: SamplerOptions {
            method: if g.hit_and_run { Method::HitAndRun } else { Method::Auto },
            burnin: g.burnin,
            thin: g.thin,
        },
        ..Budget::default()
    };
    if let Some(n) = g.samples {
        b.samples = n;
    }
    b
}

fn summary(r: &InequalityReport) -> String {
    let constant = r.constant.map(|c| format!(" constant={c:.6}")).unwrap_or_default();
    let status = if r.pass { "PASS" } else { "FAIL" };
    format!("{status} {} [{}]{constant} :: {}", r.id, r.provenance.path, r.criterion)
}

fn verify(g: &Global, a: &VerifyArgs) -> Result<i32> {
    let cli_case = CaseConfig {
        measure: a.law.measure.as_deref().map(|m| parse_measure(Some(m))).transpose()?,
        poly: a.law.poly.clone(),
        second_poly: a.second_poly.clone(),
        d: a.d,
        p: a.p,
        ..CaseConfig::default()
    };
    let cases = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let file: SuiteConfig =
                serde_json::from_str(&text).map_err(|e| Error::Configuration(format!("bad config {}: {e}", path.display())))?;
            file.cases().into_iter().map(|c| cli_case.clone().over(&c)).collect()
        }
        None => vec![cli_case],
    };
    let mut reports = verifier::run_suite(&a.suite, &cases, &budget(g, !a.law.no_oracle))?;
    for r in &mut reports {
        if g.deterministic {
            r.provenance.runtime_seconds = None;
        }
        if !g.plotdata {
            r.plot.clear();
        }
    }
    emit(&g.out, &to_json(&reports)?)?;
    let mut log: Box<dyn Write> = if g.out.is_some() { Box::new(io::stdout()) } else { Box::new(io::stderr()) };
    for r in &reports {
        let _ = writeln!(log, "{}", summary(r));
    }
    Ok(if reports.iter().all(|r| r.pass) { 0 } else { 2 })
}

fn law_density(g: &Global, law: &LawArgs, bins: Option<usize>) -> Result<Density1D> {
    let m = parse_measure(law.measure.as_deref())?.build()?;
    let f: Polynomial = law.poly.as_deref().unwrap_or("x1").parse()?;
    if !law.no_oracle {
        if let Some(o) = pushforward::oracle_for(&f, &m) {
            return pushforward::analytic_density(&o, bins.unwrap_or(2000));
        }
    }
    let b = budget(g, false);
    let values = verifier::sample_values(&f, &m, b.samples, &b)?;
    let s = pushforward::EmpiricalSample1D::new(values)?;
    pushforward::estimate_density(&s, &HistogramOptions { bins, ..HistogramOptions::default() })
}

fn density_summary(d: &Density1D, p: f64, alpha: Option<f64>) -> Result<Value> {
    let mut v = json!({
        "left": d.left,
        "step": d.step,
        "cells": d.len(),
        "mass": d.mass(),
        "lp_norm": metrics::lp_norm(d, p)?,
    });
    if let Some(a) = alpha {
        let h: Vec<f64> = (1..=8).map(|k| k as f64 * d.step).collect();
        v["besov"] = serde_json::to_value(metrics::besov_fit(d, a, &h)?)?;
    }
    Ok(v)
}

fn metrics_cmd(g: &Global, a: &MetricsArgs) -> Result<i32> {
    let read = |p: &Path| -> Result<Density1D> { Density1D::from_csv(&std::fs::read_to_string(p)?) };
    let (first, second) = match (&a.first, &a.second) {
        (Some(x), y) => (read(x)?, y.as_deref().map(read).transpose()?),
        (None, Some(_)) => return Err(Error::Configuration("--second needs --first".into())),
        (None, None) => {
            let d1 = law_density(g, &a.law, None)?;
            let d2 = match &a.second_poly {
                Some(p) => Some(law_density(g, &LawArgs { poly: Some(p.clone()), measure: a.law.measure.clone(), no_oracle: a.law.no_oracle }, None)?),
                None => None,
            };
            (d1, d2)
        }
    };
    let mut out = json!({ "first": density_summary(&first, a.p, a.alpha)? });
    if let Some(s) = &second {
        let fm = metrics::fm_solution(&first, s)?;
        out["second"] = density_summary(s, a.p, a.alpha)?;
        out["tv"] = json!(metrics::tv_distance(&first, s));
        out["fm"] = json!(fm.value);
        out["fm_certificate_gap"] = json!(fm.certificate_gap);
        out["fm_refinement_change"] = json!(fm.refinement_change);
        out["fm_discretization_bound"] = json!(fm.discretization_bound);
        out["w1"] = json!(metrics::w1_distance(&first, s));
        out["lp_difference"] = serde_json::to_value(metrics::lp_difference(&first, s, a.p)?)?;
    }
    emit(&g.out, &to_json(&out)?)?;
    Ok(0)
}

fn constants_cmd(g: &Global, a: &ConstantsArgs) -> Result<i32> {
    let params: Value =
        serde_json::from_str(&a.params).map_err(|e| Error::Configuration(format!("bad --params JSON: {e}")))?;
    let v = constants::evaluate(&a.name, &params)?;
    let text = to_json(&v)?;
    if g.out.is_some() {
        emit(&g.out, &text)?;
        println!("{} = {:.16e}", v.name, v.value);
    } else {
        emit(&None, &text)?;
    }
    Ok(0)
}

fn sample_cmd(g: &Global, a: &SampleArgs) -> Result<i32> {
    let m = parse_measure(Some(&a.measure))?.build()?;
    let b = budget(g, false);
    let count = g.samples.unwrap_or(10_000);
    let s = sampler::sample_with(&m, count, SeededStream::new(g.seed, 0), &b.sampler)?;
    emit(&g.out, &s.to_csv())?;
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::Verify(a) => verify(g, a),
        Command::Density(a) => {
            let d = law_density(g, &a.law, a.bins)?;
            emit(&g.out, &d.to_csv())?;
            Ok(0)
        }
        Command::Metrics(a) => metrics_cmd(g, a),
        Command::Constants(a) => constants_cmd(g, a),
        Command::Sample(a) => sample_cmd(g, a),
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code:
/// 0 on success, 2 when a suite has a failing report, 1 on any error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
