use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use critbbm::hitting;
use critbbm::simulate::{self, SnakeConfig, Statistic};
use critbbm::verify::{self, VerifyOptions};
use critbbm::{killed, Method, Offspring, PinchBounds};
use thiserror::Error;

use crate::table::{Cell, Table};
use crate::{Common, ConstantsArgs, Format, HitprobArgs, KilledArgs, SimulateArgs, VerifyArgs};

const PINCH_DELTA: f64 = 0.1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] critbbm::Error),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Compute(_) => ExitCode::from(1),
            CliError::Config(_) | CliError::Io(_) => ExitCode::from(2),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Inline "0.5,0,0.5" or "[0.5, 0, 0.5]", or a path to a JSON array.
pub fn parse_offspring(arg: Option<&str>) -> Result<Offspring> {
    let Some(arg) = arg else {
        return Ok(Offspring::moranian());
    };
    let trimmed = arg.trim();
    let looks_inline = trimmed.starts_with('[') || trimmed.contains(',') || trimmed.parse::<f64>().is_ok();
    let probs: Vec<f64> = if looks_inline && !Path::new(trimmed).exists() {
        if trimmed.starts_with('[') {
            serde_json::from_str(trimmed).map_err(|e| config(format!("offspring {trimmed:?}: {e}")))?
        } else {
            parse_list(trimmed).map_err(|e| config(format!("offspring: {e}")))?
        }
    } else {
        let text = std::fs::read_to_string(trimmed).map_err(|e| config(format!("offspring file {trimmed}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| config(format!("offspring file {trimmed}: {e}")))?
    };
    Offspring::from_config(&probs).map_err(|e| config(format!("offspring: {e}")))
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

/// "a,b,c" or "start:stop:count" (inclusive, evenly spaced).
pub fn parse_grid(s: &str, what: &str) -> Result<Vec<f64>> {
    let vals = if let Some((a, rest)) = s.split_once(':') {
        let (b, n) = rest.split_once(':').ok_or_else(|| config(format!("{what}: expected start:stop:count")))?;
        let a: f64 = a.trim().parse().map_err(|_| config(format!("{what}: bad start {a:?}")))?;
        let b: f64 = b.trim().parse().map_err(|_| config(format!("{what}: bad stop {b:?}")))?;
        let n: usize = n.trim().parse().map_err(|_| config(format!("{what}: bad count {n:?}")))?;
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        parse_list(s).map_err(|e| config(format!("{what}: {e}")))?
    };
    if vals.is_empty() {
        return Err(config(format!("{what}: empty range")));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(config(format!("{what}: non-finite value")));
    }
    Ok(vals)
}

fn emit(table: &Table, common_out: Option<&Path>, format: Format) -> Result<()> {
    let sink: Box<dyn Write> = match common_out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| config(format!("{}: {e}", p.display())))?)),
        None => Box::new(io::stdout().lock()),
    };
    write_table(table, sink, format)
}

fn write_table(table: &Table, mut sink: Box<dyn Write>, format: Format) -> Result<()> {
    match format {
        Format::Csv => table.write_csv(&mut sink).map_err(|e| CliError::Io(io::Error::other(e)))?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &table.to_json()).map_err(|e| CliError::Io(io::Error::other(e)))?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn finish(table: &Table, common: &Common) -> Result<ExitCode> {
    emit(table, common.out.as_deref(), common.format)?;
    Ok(ExitCode::SUCCESS)
}

pub fn constants(args: &ConstantsArgs) -> Result<ExitCode> {
    let dist = parse_offspring(args.common.offspring.as_deref())?;
    let s_grid = parse_grid(&args.s, "--s")?;
    if let Some(s) = s_grid.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
        return Err(config(format!("--s: {s} outside (0, 1)")));
    }
    let period = critbbm::elliptic::solve_period_for_target(1.0f64)?;
    let hit = hitting::general_asymptotic_constants(&dist, &s_grid)?;
    let kc = killed::killed_asymptotic_constants(&dist);
    let mut t = Table::new(&["name", "s", "value", "method"]);
    let ell = Method::Elliptic.as_str();
    let asy = Method::Asymptotic.as_str();
    let mut row = |name: &str, s: Option<f64>, v: f64, m: &str| t.push(vec![name.into(), s.into(), v.into(), m.into()]);
    row("omega_1", None, period.omega_x, ell);
    row("g3_L1", None, period.g3_x, ell);
    row("c_1", None, hit.c1, ell);
    row("C_1", None, hit.c1_big, ell);
    for (s, v) in s_grid.iter().zip(&hit.c2) {
        row("C_2", Some(*s), *v, ell);
    }
    row("C_3", None, hit.c3, ell);
    for (s, v) in s_grid.iter().zip(&hit.c4) {
        row("C_4", Some(*s), *v, ell);
    }
    row("C_5", None, kc.c5, asy);
    row("C_6", None, kc.c6, asy);
    row("C_7", None, kc.c7, asy);
    row("C_8", None, kc.c8, asy);
    finish(&t, &args.common)
}

pub fn hitprob(args: &HitprobArgs) -> Result<ExitCode> {
    let dist = parse_offspring(args.common.offspring.as_deref())?;
    let xs = parse_grid(&args.x, "--x")?;
    if let Some(x) = xs.iter().find(|x| !(**x > 0.0)) {
        return Err(config(format!("--x: {x} is not positive")));
    }
    let ys_given = args.y.as_deref().map(|s| parse_grid(s, "--y")).transpose()?;
    let mut t = Table::new(&["x", "y", "u", "method", "lower_bound", "upper_bound", "error"]);
    for &x in &xs {
        let ys: Vec<f64> = match &ys_given {
            Some(v) => v.clone(),
            None => (0..=10).map(|i| x * i as f64 / 10.0).collect(),
        };
        if let Some(y) = ys.iter().find(|y| !(**y >= 0.0 && **y <= x)) {
            return Err(config(format!("--y: {y} outside [0, {x}]")));
        }
        let pinch = hitting::pinch_bounds(&dist, x, PINCH_DELTA).ok();
        let bound = |y: f64, f: fn(&PinchBounds, f64) -> critbbm::Result<f64>| -> Cell {
            match &pinch {
                Some(p) if y <= p.length => f(p, y).ok().into(),
                _ => Cell::Empty,
            }
        };
        match hitting::hit_profile(&dist, x, &ys) {
            Ok(prof) => {
                for (&y, &u) in ys.iter().zip(&prof.values) {
                    t.push(vec![
                        x.into(),
                        y.into(),
                        u.into(),
                        prof.method.as_str().into(),
                        bound(y, PinchBounds::lower),
                        bound(y, PinchBounds::upper),
                        Cell::Empty,
                    ]);
                }
            }
            Err(e) => {
                for &y in &ys {
                    t.push(vec![x.into(), y.into(), Cell::Empty, "error".into(), Cell::Empty, Cell::Empty, e.to_string().into()]);
                }
            }
        }
    }
    finish(&t, &args.common)
}

pub fn killed(args: &KilledArgs) -> Result<ExitCode> {
    let dist = parse_offspring(args.common.offspring.as_deref())?;
    let ys = parse_grid(&args.y, "--y")?;
    if let Some(y) = ys.iter().find(|y| !(**y >= 0.0)) {
        return Err(config(format!("--y: {y} is negative")));
    }
    if args.k_max == 0 {
        return Err(config("--k-max must be at least 1"));
    }
    let mut t = Table::new(&["y", "k", "tail", "pmf", "method", "error"]);
    for &y in &ys {
        let table = if dist.is_moranian() {
            killed::moranian_killed_tail(y, args.k_max)
        } else {
            killed::tail_from_series(&dist, y, args.k_max)
        };
        match table {
            Ok(tab) => {
                for k in 1..=tab.k_max() {
                    t.push(vec![
                        y.into(),
                        k.into(),
                        tab.tail_at(k).into(),
                        tab.pmf_at(k).into(),
                        tab.method.as_str().into(),
                        Cell::Empty,
                    ]);
                }
            }
            Err(e) => t.push(vec![y.into(), Cell::Empty, Cell::Empty, Cell::Empty, "error".into(), e.to_string().into()]),
        }
    }
    finish(&t, &args.common)
}

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let dist = parse_offspring(args.common.offspring.as_deref())?;
    let xs = parse_grid(&args.x, "--x")?;
    if args.n_runs < 100 {
        return Err(config(format!("--n-runs {} is below 100", args.n_runs)));
    }
    let cfg = SnakeConfig::new(dist, args.y, args.dt, args.seed);
    cfg.validate().map_err(|e| config(e.to_string()))?;
    let runs = simulate::simulate_batch(&cfg, args.n_runs)?;
    let mut stats = vec![(Statistic::MeanKilled, "E[N]".to_owned())];
    stats.extend((1..=args.k_max).map(|k| (Statistic::KilledAtLeast(k), format!("P(N>={k})"))));
    stats.extend(xs.iter().map(|&x| (Statistic::HitLevel(x), format!("P(M>={})", crate::table::sig12(x)))));
    let mut t = Table::new(&["statistic", "y", "value", "std_error", "half_width_3se", "n_runs", "n_truncated", "method"]);
    for (stat, label) in stats {
        let e = simulate::estimate_from(&runs, stat)?;
        t.push(vec![
            label.into(),
            args.y.into(),
            e.mean.into(),
            e.std_error.into(),
            e.half_width.into(),
            e.n_runs.into(),
            e.n_truncated.into(),
            Method::Mc.as_str().into(),
        ]);
    }
    finish(&t, &args.common)
}

pub fn verify(args: &VerifyArgs) -> Result<ExitCode> {
    if args.offspring.is_some() {
        parse_offspring(args.offspring.as_deref())?;
    }
    if args.n_runs < 100 {
        return Err(config(format!("--n-runs {} is below 100", args.n_runs)));
    }
    if !(args.dt > 0.0 && args.dt.is_finite()) {
        return Err(config(format!("--dt {} is not positive", args.dt)));
    }
    let opts = VerifyOptions { seed: args.seed, n_runs: args.n_runs, dt: args.dt };
    let report = verify::run_all(&opts);
    for c in &report.checks {
        eprintln!("{}", c.summary());
    }
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| config(format!("{}: {e}", p.display())))?)),
        None => Box::new(io::stdout().lock()),
    };
    match args.format {
        Format::Json => {
            let mut sink = sink;
            serde_json::to_writer_pretty(&mut sink, &report).map_err(|e| CliError::Io(io::Error::other(e)))?;
            writeln!(sink)?;
            sink.flush()?;
        }
        Format::Csv => {
            let mut t = Table::new(&["id", "check", "quantity", "value", "target", "tolerance", "ok", "check_passed", "seconds"]);
            for c in &report.checks {
                if let Some(err) = &c.error {
                    t.push(vec![
                        u64::from(c.id).into(),
                        c.name.into(),
                        "error".into(),
                        Cell::Empty,
                        Cell::Empty,
                        err.clone().into(),
                        false.into(),
                        false.into(),
                        c.seconds.into(),
                    ]);
                }
                for m in &c.measured {
                    t.push(vec![
                        u64::from(c.id).into(),
                        c.name.into(),
                        m.name.clone().into(),
                        m.value.into(),
                        m.target.into(),
                        m.tolerance.clone().into(),
                        m.ok.into(),
                        c.passed.into(),
                        c.seconds.into(),
                    ]);
                }
            }
            write_table(&t, sink, Format::Csv)?;
        }
    }
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:3", "g").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("1, 2.5", "g").unwrap(), vec![1.0, 2.5]);
        assert!(parse_grid("0:1:0", "g").is_err());
        assert!(parse_grid("a", "g").is_err());
    }

    #[test]
    fn offspring_inline() {
        assert!(parse_offspring(Some("0.25,0.5,0.25")).unwrap().sigma2() == 0.5);
        assert!(parse_offspring(Some("[0.5, 0, 0.5]")).unwrap().is_moranian());
        assert!(matches!(parse_offspring(Some("0.5,0.5")), Err(CliError::Config(_))));
        assert!(matches!(parse_offspring(Some("/nonexistent/law.json")), Err(CliError::Config(_))));
    }
}
