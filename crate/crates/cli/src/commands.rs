//! The four subcommands. Each returns its primary output as bytes so the
//! caller decides where it goes; grid points run on the current rayon pool
//! and results are always collected in grid order.

use std::collections::BTreeSet;
use std::io::Write;

use qbattery::ergotropy::{max_work_fixed_entanglement, work_trajectory, Quantity, WorkRecord};
use qbattery::export::{fmt_f64, write_blp_results, write_blp_traces, write_work_records};
use qbattery::fitting::{default_init, fit_curve};
use qbattery::nonmarkov::{blp_measure_over, BlpResult};
use qbattery::{EntanglementValue, FitResult};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::CliError;

fn non_empty<T>(name: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        Err(CliError::Usage(format!("the {name} list must not be empty")))
    } else {
        Ok(())
    }
}

fn entanglement(e: f64) -> Result<EntanglementValue, CliError> {
    EntanglementValue::new(e).map_err(|err| CliError::Usage(err.to_string()))
}

fn positive(name: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        Some(x) => Err(CliError::Usage(format!("{name} values must be positive, got {x}"))),
        None => Ok(()),
    }
}

pub fn sweep_records(cfg: &RunConfig) -> Result<Vec<WorkRecord>, CliError> {
    let s = &cfg.sweep;
    let couplings = s.couplings.clone().unwrap_or_else(|| vec![cfg.model.k]);
    let delta_ts = s.delta_t.clone().unwrap_or_else(|| vec![cfg.model.delta_t]);
    non_empty("entanglement", &s.entanglement)?;
    non_empty("collisions", &s.collisions)?;
    non_empty("couplings", &couplings)?;
    non_empty("delta_t", &delta_ts)?;
    positive("delta_t", &delta_ts)?;
    if let Some(k) = couplings.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
        return Err(CliError::Usage(format!("couplings must be non-negative, got {k}")));
    }
    let es: Vec<EntanglementValue> = s.entanglement.iter().map(|&e| entanglement(e)).collect::<Result<_, _>>()?;

    let mut grid = Vec::new();
    for &k in &couplings {
        for &dt in &delta_ts {
            for &e in &es {
                for &n in &s.collisions {
                    grid.push((cfg.model.with_k(k).with_delta_t(dt), e, n));
                }
            }
        }
    }
    let opt = cfg.optimizer_settings();
    grid.par_iter()
        .map(|(p, e, n)| max_work_fixed_entanglement(*e, *n, p, s.quantity, &opt, s.phase_sweep).map_err(CliError::from))
        .collect()
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let rows = sweep_records(cfg)?;
    let mut out = Vec::new();
    write_work_records(&mut out, &rows)?;
    Ok(out)
}

pub fn trajectory(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let t = &cfg.trajectory;
    non_empty("delta_t", &t.delta_t)?;
    positive("delta_t", &t.delta_t)?;
    if t.substeps == 0 {
        return Err(CliError::Usage("substeps must be at least 1".into()));
    }
    let e = entanglement(t.entanglement)?;
    let opt = cfg.optimizer_settings();
    let runs: Vec<_> = t
        .delta_t
        .par_iter()
        .map(|&dt| {
            let p = cfg.model.with_delta_t(dt);
            work_trajectory(e, t.collisions, t.substeps, &p, t.quantity, &opt, t.phase_sweep).map_err(CliError::from)
        })
        .collect::<Result<_, _>>()?;

    let mut out = Vec::new();
    writeln!(out, "delta_t,t,collision_index,value")?;
    for (dt, samples) in t.delta_t.iter().zip(&runs) {
        for s in samples {
            writeln!(out, "{},{},{},{}", fmt_f64(*dt), fmt_f64(s.t), s.collision_index, fmt_f64(s.value))?;
        }
    }
    Ok(out)
}

pub fn blp_results(cfg: &RunConfig) -> Result<Vec<BlpResult>, CliError> {
    let b = &cfg.blp;
    non_empty("delta_t", &b.delta_t)?;
    positive("delta_t", &b.delta_t)?;
    if b.grid_points < 2 || b.collisions == 0 {
        return Err(CliError::Usage("blp needs grid_points >= 2 and collisions >= 1".into()));
    }
    if !(b.k.is_finite() && b.k >= 0.0) {
        return Err(CliError::Usage(format!("blp coupling must be non-negative, got {}", b.k)));
    }
    let p = cfg.model.with_k(b.k);
    let opt = cfg.optimizer_settings();
    b.delta_t
        .par_iter()
        .map(|&dt| blp_measure_over(dt, &p, &opt, b.grid_points, b.collisions).map_err(CliError::from))
        .collect()
}

/// Summary CSV and, when asked for, the trace dump.
pub fn blp(cfg: &RunConfig) -> Result<(Vec<u8>, Option<Vec<u8>>), CliError> {
    let rows = blp_results(cfg)?;
    let mut out = Vec::new();
    write_blp_results(&mut out, &rows)?;
    let traces = match cfg.blp.trace_output {
        Some(_) => {
            let mut t = Vec::new();
            write_blp_traces(&mut t, &rows)?;
            Some(t)
        }
        None => None,
    };
    Ok((out, traces))
}

/// `(E, value)` pairs from a CSV with at least `E` and `value` columns,
/// restricted by the configured row filters.
pub fn read_curve(cfg: &RunConfig, text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let f = &cfg.fit;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::Usage(format!("malformed CSV header: {e}")))?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ie), Some(iv)) = (column("E"), column("value")) else {
        return Err(CliError::Usage("fit input needs columns `E` and `value`".into()));
    };
    let (iq, i_n, ik, idt) = (column("quantity"), column("n"), column("k"), column("delta_t"));

    let mut data = Vec::new();
    let mut groups = BTreeSet::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| CliError::Usage(format!("line {line}: {e}")))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let number = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("line {line}: '{}' is not a number", field(i))))
        };
        if let (Some(i), Some(q)) = (iq, f.quantity) {
            let got: Quantity = field(i)
                .parse()
                .map_err(|e: String| CliError::Usage(format!("line {line}: {e}")))?;
            if got != q {
                continue;
            }
        }
        if let (Some(i), Some(n)) = (i_n, f.collisions) {
            if number(i)? != n as f64 {
                continue;
            }
        }
        if let (Some(i), Some(k)) = (ik, f.k) {
            if (number(i)? - k).abs() > 1e-12 {
                continue;
            }
        }
        if let (Some(i), Some(dt)) = (idt, f.delta_t) {
            if (number(i)? - dt).abs() > 1e-12 {
                continue;
            }
        }
        let key: Vec<String> = [iq, i_n, ik, idt].iter().flatten().map(|&i| field(i).to_string()).collect();
        groups.insert(key);
        data.push((number(ie)?, number(iv)?));
    }
    if groups.len() > 1 {
        return Err(CliError::Usage(format!(
            "input holds {} curves; select one with --quantity, --collisions, --couplings or --delta-t",
            groups.len()
        )));
    }
    if data.is_empty() {
        return Err(CliError::Usage("no data rows left to fit".into()));
    }
    Ok(data)
}

pub fn fit_result(cfg: &RunConfig, data: &[(f64, f64)]) -> Result<FitResult, CliError> {
    let f = &cfg.fit;
    let init = match &f.init {
        Some(named) => {
            let names = f.model.parameter_names();
            if named.len() != names.len() || names.iter().any(|n| !named.contains_key(*n)) {
                return Err(CliError::Usage(format!("{} initial parameters must be exactly {}", f.model, names.join(", "))));
            }
            names.iter().map(|n| named[*n]).collect()
        }
        None => default_init(f.model, data).map_err(|e| CliError::Usage(e.to_string()))?,
    };
    fit_curve(f.model, data, &init, &f.settings).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn fit(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let path = cfg.fit.input.as_ref().ok_or_else(|| CliError::Usage("fit needs --input".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let data = read_curve(cfg, &text)?;
    let result = fit_result(cfg, &data)?;
    let mut out = serde_json::to_vec_pretty(&result).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}
