//! Subcommand bodies. Each one maps library results to files and an exit code.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use shs_core::coefficients::{
    check_delta_bracket, check_h4, check_monotonicity_with_beta, compute_rho_b, DeltaReport, H4Report,
    HamiltonianSpec, MonotonicityReport, Perturbation,
};
use shs_core::linalg::Mat;
use shs_core::riccati::{blow_up_time_with, BlowUpResult, Chart, IntegrationOptions, RiccatiSystem};
use shs_core::spectrum::{
    bracket_first_eigenvalue, check_h5, eigenvalues_1d, first_eigenvalue_multidim, growth_order_fit, EigenvalueRecord,
    GrowthFit, H5Report, MultiDimOptions, SpectrumOptions,
};
use shs_core::stochastic::{simulate_eigenfunction, ResidualReport, Simulation, SimulationOptions};

use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, to_json, OutputSet};
use crate::{BlowupArgs, CheckArgs, CheckKind, EigenfunctionArgs, Family, FirstEigArgs, GrowthArgs, Pattern};
use crate::{PipelineArgs, SimulationArgs, SpectrumArgs};

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    /// `pass`, `fail` or `n/a`.
    pub status: &'static str,
    pub required: bool,
    pub margin: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
    pub all_required_pass: bool,
    pub monotonicity: MonotonicityReport,
    pub delta: DeltaReport,
    pub h4: Option<H4Report>,
    pub rho_b: Option<f64>,
    pub h5: Option<H5Report>,
}

fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

pub fn check_report(spec: &HamiltonianSpec, checks: &[CheckKind], rho: f64) -> CheckReport {
    let required = |k| checks.contains(&k);
    let mono = check_monotonicity_with_beta(spec, rho, spec.beta);
    let delta = check_delta_bracket(spec);
    let mut rows = vec![
        CheckRow {
            check: "monotonicity",
            status: status(mono.satisfied && mono.schur_satisfied),
            required: required(CheckKind::Monotonicity),
            margin: Some(mono.margin),
            detail: format!(
                "rho = {}, beta = {}, worst t = {}, Schur bounds {:.6e} / {:.6e}",
                mono.rho, mono.beta, mono.worst_t, mono.schur_upper, mono.schur_lower
            ),
        },
        CheckRow {
            check: "delta",
            status: status(delta.satisfied),
            required: required(CheckKind::Delta),
            margin: Some(delta.margin),
            detail: format!("-{} <= H33, H44 <= -{}, worst t = {}", spec.delta1, spec.delta, delta.worst_t),
        },
    ];
    let one_dim = spec.n() == 1;
    let h4 = if one_dim { check_h4(spec).ok() } else { None };
    let rho_b = if one_dim { compute_rho_b(spec).ok() } else { None };
    let h5 = if one_dim { check_h5(spec).ok() } else { None };
    rows.push(match &h4 {
        Some(r) => CheckRow {
            check: "h4",
            status: status(r.passed),
            required: required(CheckKind::H4),
            margin: None,
            detail: match (&r.violation, r.first_violation_t) {
                (Some(v), Some(t)) => format!("first violation at t = {t}: {v}"),
                _ => format!("rho_b = {}", rho_b.map_or("n/a".into(), |v| v.to_string())),
            },
        },
        None => not_applicable("h4", spec),
    });
    rows.push(match &h5 {
        Some(r) => CheckRow {
            check: "h5",
            status: status(r.holds),
            required: required(CheckKind::H5),
            margin: Some((r.mid - r.lhs).min(r.rhs - r.mid)),
            detail: format!("{:.6e} <= {:.6e} < {:.6e}", r.lhs, r.mid, r.rhs),
        },
        None => not_applicable("h5", spec),
    });
    let all_required_pass = rows.iter().all(|r| !r.required || r.status != "fail");
    CheckReport {
        rows,
        all_required_pass,
        monotonicity: mono,
        delta,
        h4,
        rho_b,
        h5,
    }
}

fn not_applicable(check: &'static str, spec: &HamiltonianSpec) -> CheckRow {
    CheckRow {
        check,
        status: "n/a",
        required: false,
        margin: None,
        detail: if spec.n() == 1 {
            "rho_b is undefined (Hbar22 must stay negative)".into()
        } else {
            format!("needs n = 1, got n = {}", spec.n())
        },
    }
}

fn render_table(report: &CheckReport) -> String {
    let mut s = format!("{:<14}{:<8}{:<26}{}\n", "check", "status", "margin", "detail");
    for r in &report.rows {
        let status = if r.required || r.status == "n/a" {
            r.status.to_string()
        } else {
            format!("({})", r.status)
        };
        let margin = r.margin.map_or(String::from("-"), fmt_f64);
        let _ = writeln!(s, "{:<14}{:<8}{:<26}{}", r.check, status, margin, r.detail);
    }
    s
}

pub fn check(spec: &HamiltonianSpec, args: &CheckArgs, out: &mut OutputSet) -> Result<u8, CliError> {
    let report = check_report(spec, &args.checks, args.rho);
    print!("{}", render_table(&report));
    if let Some(path) = &args.out {
        out.write(path, &to_json(&report))?;
    }
    Ok(if report.all_required_pass { 0 } else { 1 })
}

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::config("--param-grid", format!("expected start:end:points, got '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    Ok(if n == 1 {
        vec![a]
    } else {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    })
}

fn parse_pair(s: &str, flag: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::config(flag, format!("expected lo:hi, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn blowup_table(spec: &HamiltonianSpec, family: Family, pattern: Pattern, grid: &[f64]) -> Result<Vec<BlowUpResult>, CliError> {
    let chart = match family {
        Family::Primal => Chart::Primal,
        Family::Dual => Chart::Dual,
    };
    let n = spec.n();
    let opts = IntegrationOptions::default();
    grid.par_iter()
        .map(|&p| {
            let pert = match pattern {
                Pattern::Shifted => Perturbation::Shifted { rho: p },
                Pattern::Scaled => Perturbation::Scaled { varrho: p },
            };
            let sys = RiccatiSystem::new(spec, pert);
            blow_up_time_with(&sys, chart, spec.horizon(), &Mat::zeros(n, n), &opts)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::in_stage("blowup"))
}

pub fn blowup(spec: &HamiltonianSpec, args: &BlowupArgs, out: &mut OutputSet) -> Result<u8, CliError> {
    let grid = parse_grid(&args.param_grid)?;
    let pattern = args
        .pattern
        .unwrap_or(if spec.n() == 1 { Pattern::Shifted } else { Pattern::Scaled });
    let rows = blowup_table(spec, args.family, pattern, &grid)?;
    let mut csv = String::from("param,blow_up_time,bracket_lo,bracket_hi,norm_at_stop\n");
    for (p, r) in grid.iter().zip(&rows) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(*p),
            fmt_f64(r.value),
            fmt_f64(r.bracket.0),
            fmt_f64(r.bracket.1),
            fmt_f64(r.norm_at_stop)
        );
    }
    out.write(&args.out, &csv)?;
    Ok(0)
}

fn spectrum_records(spec: &HamiltonianSpec, count: usize, tol: f64, max_links: usize) -> Result<Vec<EigenvalueRecord>, CliError> {
    let opts = SpectrumOptions {
        tol,
        max_links,
        ..Default::default()
    };
    eigenvalues_1d(spec, count, &opts).map_err(CliError::in_stage("spectrum"))
}

pub fn spectrum(spec: &HamiltonianSpec, args: &SpectrumArgs, out: &mut OutputSet) -> Result<u8, CliError> {
    let records = spectrum_records(spec, args.count, args.tol, args.max_links)?;
    for r in &records {
        println!("m = {:>3}  rho = {}", r.m, fmt_f64(r.rho));
    }
    out.write(&args.out, &to_json(&records))?;
    Ok(0)
}

fn first_eig_record(spec: &HamiltonianSpec, bracket: Option<(f64, f64)>, opts: &MultiDimOptions) -> Result<EigenvalueRecord, CliError> {
    let stage = CliError::in_stage("first-eig");
    let bracket = match bracket {
        Some(b) => b,
        None => bracket_first_eigenvalue(spec, &opts.integration).map_err(&stage)?,
    };
    first_eigenvalue_multidim(spec, bracket, opts).map_err(stage)
}

pub fn first_eig(spec: &HamiltonianSpec, args: &FirstEigArgs, out: &mut OutputSet) -> Result<u8, CliError> {
    let bracket = args.bracket.as_deref().map(|s| parse_pair(s, "--bracket")).transpose()?;
    let opts = MultiDimOptions {
        tol: args.tol,
        kernel_threshold: args.kernel_threshold,
        split: args.split,
        ..Default::default()
    };
    let record = first_eig_record(spec, bracket, &opts)?;
    println!("rho = {}  kernel dimension = {}", fmt_f64(record.rho), record.kernel_basis.len());
    out.write(&args.out, &to_json(&[record]))?;
    Ok(0)
}

/// A record file holds either one record or a list of them.
pub fn read_records(path: &Path) -> Result<Vec<EigenvalueRecord>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(path.display().to_string(), format!("cannot read: {e}")))?;
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<EigenvalueRecord>),
        One(Box<EigenvalueRecord>),
    }
    let parsed: OneOrMany = serde_json::from_str(&text).map_err(|e| {
        CliError::config(
            format!("{} line {}, column {}", path.display(), e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let records = match parsed {
        OneOrMany::Many(v) => v,
        OneOrMany::One(r) => vec![*r],
    };
    if records.is_empty() {
        return Err(CliError::config(path.display().to_string(), "no records"));
    }
    Ok(records)
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenfunctionSummary {
    pub m: usize,
    pub rho: f64,
    pub paths: usize,
    pub dt: f64,
    pub grid_steps: usize,
    pub seed: u64,
    pub csv_paths: usize,
    pub report: ResidualReport,
}

pub fn simulate(
    spec: &HamiltonianSpec,
    record: &EigenvalueRecord,
    sim: &SimulationArgs,
    start: Option<Vec<f64>>,
    seed: u64,
) -> Result<(Simulation, EigenfunctionSummary), CliError> {
    let dt = sim.dt.unwrap_or(spec.horizon() / 4096.0);
    let opts = SimulationOptions {
        n_paths: sim.paths,
        seed,
        dt,
        keep_paths: sim.csv_paths.min(sim.paths),
        start,
    };
    let result = simulate_eigenfunction(record, spec, &opts).map_err(CliError::in_stage("eigenfunction"))?;
    let summary = EigenfunctionSummary {
        m: record.m,
        rho: record.rho,
        paths: sim.paths,
        dt,
        grid_steps: result.grid_steps,
        seed,
        csv_paths: opts.keep_paths,
        report: result.report.clone(),
    };
    Ok((result, summary))
}

pub fn paths_csv(sim: &Simulation, n: usize) -> String {
    let mut s = String::from("path_id,t,state");
    for name in ["x", "y", "z", "theta"] {
        for i in 1..=n {
            let _ = write!(s, ",{name}{i}");
        }
    }
    s.push_str(",segment,family\n");
    for p in &sim.kept {
        for i in 0..p.times.len() {
            let _ = write!(s, "{},{},{}", p.path_id, fmt_f64(p.times[i]), p.states[i] + 1);
            for v in [&p.x[i], &p.y[i], &p.z[i], &p.theta[i]] {
                for c in v.iter() {
                    s.push(',');
                    s.push_str(&fmt_f64(*c));
                }
            }
            let _ = writeln!(s, ",{},{}", p.segments[i] + 1, p.charts[i].as_str());
        }
    }
    s
}

pub fn eigenfunction(spec: &HamiltonianSpec, args: &EigenfunctionArgs, seed: u64, out: &mut OutputSet) -> Result<u8, CliError> {
    let records = read_records(&args.record)?;
    let record = match args.index {
        None => &records[0],
        Some(m) => records
            .iter()
            .find(|r| r.m == m)
            .ok_or_else(|| CliError::config("--index", format!("no record with index {m}")))?,
    };
    let (sim, summary) = simulate(spec, record, &args.sim, args.start.clone(), seed)?;
    print_report(&summary);
    out.write(&args.out, &paths_csv(&sim, spec.n()))?;
    let summary_path = args.summary.clone().unwrap_or_else(|| args.out.with_extension("json"));
    out.write(&summary_path, &to_json(&summary))?;
    Ok(0)
}

fn print_report(s: &EigenfunctionSummary) {
    let r = &s.report;
    println!(
        "m = {}  paths = {}  x0 = {}  E|y_T| = {} (se {})  E sup|x| = {}  ratio = {}  decouple = {}",
        s.m,
        r.paths,
        fmt_f64(r.x0),
        fmt_f64(r.y_t_mean),
        fmt_f64(r.y_t_se),
        fmt_f64(r.nontriviality),
        fmt_f64(r.terminal_ratio),
        fmt_f64(r.decouple_max)
    );
}

pub fn fit(records: &[EigenvalueRecord]) -> Result<GrowthFit, CliError> {
    growth_order_fit(records).map_err(CliError::in_stage("growth"))
}

pub fn growth(args: &GrowthArgs, out: &mut OutputSet) -> Result<u8, CliError> {
    let records = read_records(&args.input)?;
    let fit = fit(&records)?;
    let text = to_json(&fit);
    print!("{text}");
    if let Some(path) = &args.out {
        out.write(path, &text)?;
    }
    Ok(0)
}

pub fn pipeline(loaded: &LoadedConfig, args: &PipelineArgs, seed: u64, out: &mut OutputSet) -> Result<u8, CliError> {
    let spec = &loaded.spec;
    out.write(Path::new("config.normalized.json"), &to_json(&loaded.normalized))?;
    let mut checks = vec![CheckKind::Monotonicity, CheckKind::Delta];
    if spec.n() == 1 {
        checks.push(CheckKind::H4);
    }
    let report = check_report(spec, &checks, 0.0);
    print!("{}", render_table(&report));
    out.write(Path::new("check.json"), &to_json(&report))?;
    if !report.all_required_pass {
        let failed: Vec<&str> = report
            .rows
            .iter()
            .filter(|r| r.required && r.status == "fail")
            .map(|r| r.check)
            .collect();
        return Err(CliError::Assumption(format!("checks failed: {}", failed.join(", "))));
    }
    if args.count == 0 {
        return Ok(0);
    }
    let records = if spec.n() == 1 {
        spectrum_records(spec, args.count, args.tol, SpectrumOptions::default().max_links)?
    } else {
        if args.count > 1 {
            log::warn!("only the first eigenvalue is available for n > 1");
        }
        let opts = MultiDimOptions {
            tol: args.tol,
            ..Default::default()
        };
        vec![first_eig_record(spec, None, &opts)?]
    };
    out.write(Path::new("spectrum.json"), &to_json(&records))?;
    for r in &records {
        let (sim, summary) = simulate(spec, r, &args.sim, None, seed)?;
        print_report(&summary);
        out.write(&PathBuf::from(format!("eigenfunction_m{}.csv", r.m)), &paths_csv(&sim, spec.n()))?;
        out.write(&PathBuf::from(format!("eigenfunction_m{}.json", r.m)), &to_json(&summary))?;
    }
    if records.len() >= 5 {
        out.write(Path::new("growth.json"), &to_json(&fit(&records)?))?;
    } else {
        log::info!("growth fit skipped: needs at least 5 eigenvalues");
    }
    Ok(0)
}
