//! Profile files: a delimited text table with header metadata. This file is
//! the contract between the profile solver and the analysis tooling;
//! numbers are serialized at 17 significant digits so the text round-trips
//! binary64 exactly.

use super::{ProblemParams, ProfileSolution};
use crate::numerics::chebyshev::build_grid;
use nalgebra::DVector;
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed profile file: {0}")]
    Malformed(String),
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_profile(
    sol: &ProfileSolution,
    mut out: impl Write,
    manifest: Option<&str>,
) -> Result<(), FormatError> {
    writeln!(out, "# profile")?;
    if let Some(m) = manifest {
        writeln!(out, "# manifest = {m}")?;
    }
    writeln!(out, "# d = {}", fmt_f64(sol.params.d))?;
    writeln!(out, "# sigma = {}", fmt_f64(sol.params.sigma))?;
    writeln!(out, "# a = {}", fmt_f64(sol.a))?;
    writeln!(out, "# Q0 = {}", fmt_f64(sol.q0()))?;
    writeln!(out, "# n = {}", sol.grid.n_points)?;
    writeln!(out, "# L_D = {}", fmt_f64(sol.grid.domain_length))?;
    writeln!(out, "# residual_norm = {}", fmt_f64(sol.residual_norm))?;
    writeln!(out, "# columns: xi P W")?;
    for i in 0..sol.grid.n_points {
        writeln!(
            out,
            "{}\t{}\t{}",
            fmt_f64(sol.grid.nodes[i]),
            fmt_f64(sol.p_real[i]),
            fmt_f64(sol.w_imag[i])
        )?;
    }
    Ok(())
}

fn parse_header_value(line: &str) -> Option<(&str, &str)> {
    let body = line.strip_prefix('#')?.trim();
    let (key, value) = body.split_once('=')?;
    Some((key.trim(), value.trim()))
}

pub fn read_profile(input: impl BufRead) -> Result<ProfileSolution, FormatError> {
    let mut d = None;
    let mut sigma = None;
    let mut a = None;
    let mut n = None;
    let mut l_d = None;
    let mut residual_norm = None;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();

    for line in input.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if let Some((key, value)) = parse_header_value(trimmed) {
                let slot = match key {
                    "d" => Some(&mut d),
                    "sigma" => Some(&mut sigma),
                    "a" => Some(&mut a),
                    "L_D" => Some(&mut l_d),
                    "residual_norm" => Some(&mut residual_norm),
                    "n" => {
                        n = Some(value.parse::<usize>().map_err(|e| {
                            FormatError::Malformed(format!("bad n: {e}"))
                        })?);
                        None
                    }
                    _ => None,
                };
                if let Some(slot) = slot {
                    *slot = Some(value.parse::<f64>().map_err(|e| {
                        FormatError::Malformed(format!("bad {key}: {e}"))
                    })?);
                }
            }
            continue;
        }
        let mut cols = trimmed.split_whitespace();
        let mut next = |name: &str| -> Result<f64, FormatError> {
            cols.next()
                .ok_or_else(|| FormatError::Malformed(format!("missing {name} column")))?
                .parse::<f64>()
                .map_err(|e| FormatError::Malformed(format!("bad {name}: {e}")))
        };
        rows.push((next("xi")?, next("P")?, next("W")?));
    }

    let d = d.ok_or_else(|| FormatError::Malformed("missing header d".into()))?;
    let sigma = sigma.ok_or_else(|| FormatError::Malformed("missing header sigma".into()))?;
    let a = a.ok_or_else(|| FormatError::Malformed("missing header a".into()))?;
    let n = n.ok_or_else(|| FormatError::Malformed("missing header n".into()))?;
    let l_d = l_d.ok_or_else(|| FormatError::Malformed("missing header L_D".into()))?;
    let residual_norm =
        residual_norm.ok_or_else(|| FormatError::Malformed("missing header residual_norm".into()))?;

    if rows.len() != n {
        return Err(FormatError::Malformed(format!(
            "expected {n} rows, found {}",
            rows.len()
        )));
    }
    let params = ProblemParams::new(d, sigma)
        .map_err(|e| FormatError::Malformed(format!("bad parameters: {e}")))?;
    let grid = build_grid(n, l_d).map_err(|e| FormatError::Malformed(format!("bad grid: {e}")))?;
    for (i, row) in rows.iter().enumerate() {
        if (row.0 - grid.nodes[i]).abs() > 1e-9 * grid.domain_length.max(1.0) {
            return Err(FormatError::Malformed(format!(
                "node {i} mismatch: file {} vs grid {}",
                row.0, grid.nodes[i]
            )));
        }
    }

    Ok(ProfileSolution {
        params,
        grid,
        p_real: DVector::from_iterator(n, rows.iter().map(|r| r.1)),
        w_imag: DVector::from_iterator(n, rows.iter().map(|r| r.2)),
        a,
        residual_norm,
        newton_iterations: 0,
    })
}
