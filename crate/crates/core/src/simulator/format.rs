//! Trace files: one record per row, full configuration in the header.

use super::{BoundaryKind, Completion, SimConfig, SimulationTrace, TraceRecord};
use crate::profile::format::{fmt_f64, FormatError};
use crate::profile::ProblemParams;
use std::io::{BufRead, Write};

pub fn write_trace(
    trace: &SimulationTrace,
    mut out: impl Write,
    manifest: Option<&str>,
) -> Result<(), FormatError> {
    let c = &trace.config;
    writeln!(out, "# trace")?;
    if let Some(m) = manifest {
        writeln!(out, "# manifest = {m}")?;
    }
    writeln!(out, "# d = {}", fmt_f64(c.params.d))?;
    writeln!(out, "# sigma = {}", fmt_f64(c.params.sigma))?;
    writeln!(out, "# h = {}", fmt_f64(c.h))?;
    writeln!(out, "# dtau = {}", fmt_f64(c.dtau))?;
    writeln!(out, "# L_D = {}", fmt_f64(c.domain_length))?;
    writeln!(out, "# stop_L = {}", fmt_f64(c.stop_l))?;
    writeln!(out, "# tau_max = {}", fmt_f64(c.tau_max))?;
    writeln!(out, "# bc = {}", c.bc_kind.name())?;
    writeln!(out, "# record_every = {}", c.record_every)?;
    writeln!(out, "# T = {}", fmt_f64(trace.t_total))?;
    writeln!(out, "# a_end = {}", fmt_f64(trace.a_end))?;
    writeln!(out, "# tau_end = {}", fmt_f64(trace.tau_end))?;
    writeln!(out, "# completed = {}", trace.completion.name())?;
    writeln!(out, "# columns: step_index tau delta_t ln_L a sup_v dist_to_Q")?;
    for r in &trace.records {
        let dist = r.dist_to_q.map_or(String::new(), fmt_f64);
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.step_index,
            fmt_f64(r.tau),
            fmt_f64(r.delta_t),
            fmt_f64(r.ln_l),
            fmt_f64(r.a),
            fmt_f64(r.sup_v),
            dist
        )?;
    }
    Ok(())
}

pub fn read_trace(input: impl BufRead) -> Result<SimulationTrace, FormatError> {
    let mut headers: std::collections::HashMap<String, String> = std::collections::HashMap::new();
    let mut records = Vec::new();

    for line in input.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(body) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = body.split_once('=') {
                headers.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() < 6 {
            return Err(FormatError::Malformed(format!(
                "trace row needs at least 6 columns, got {}",
                cols.len()
            )));
        }
        let f = |i: usize, name: &str| -> Result<f64, FormatError> {
            cols[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| FormatError::Malformed(format!("bad {name}: {e}")))
        };
        let dist = match cols.get(6).map(|s| s.trim()) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse::<f64>()
                    .map_err(|e| FormatError::Malformed(format!("bad dist: {e}")))?,
            ),
        };
        records.push(TraceRecord {
            step_index: cols[0]
                .trim()
                .parse::<usize>()
                .map_err(|e| FormatError::Malformed(format!("bad step_index: {e}")))?,
            tau: f(1, "tau")?,
            delta_t: f(2, "delta_t")?,
            ln_l: f(3, "ln_L")?,
            a: f(4, "a")?,
            sup_v: f(5, "sup_v")?,
            dist_to_q: dist,
        });
    }

    let get = |key: &str| -> Result<&String, FormatError> {
        headers
            .get(key)
            .ok_or_else(|| FormatError::Malformed(format!("missing header {key}")))
    };
    let getf = |key: &str| -> Result<f64, FormatError> {
        get(key)?
            .parse::<f64>()
            .map_err(|e| FormatError::Malformed(format!("bad {key}: {e}")))
    };

    let params = ProblemParams::new(getf("d")?, getf("sigma")?)
        .map_err(|e| FormatError::Malformed(format!("bad parameters: {e}")))?;
    let bc_name = get("bc")?;
    let bc = BoundaryKind::parse(bc_name)
        .ok_or_else(|| FormatError::Malformed(format!("unknown bc kind {bc_name}")))?;
    let completion = Completion::parse(get("completed")?)
        .ok_or_else(|| FormatError::Malformed("unknown completion".into()))?;

    Ok(SimulationTrace {
        config: SimConfig {
            params,
            h: getf("h")?,
            dtau: getf("dtau")?,
            domain_length: getf("L_D")?,
            stop_l: getf("stop_L")?,
            tau_max: getf("tau_max")?,
            bc_kind: bc,
            record_every: getf("record_every")? as usize,
        },
        records,
        t_total: getf("T")?,
        a_end: getf("a_end")?,
        tau_end: getf("tau_end")?,
        completion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip() {
        let params = ProblemParams::new(3.0, 1.0).unwrap();
        let trace = SimulationTrace {
            config: SimConfig::defaults(params),
            records: vec![
                TraceRecord {
                    step_index: 100,
                    tau: 0.02,
                    delta_t: 7.5e-4,
                    ln_l: -1.7,
                    a: 0.3,
                    sup_v: 1.0001,
                    dist_to_q: None,
                },
                TraceRecord {
                    step_index: 200,
                    tau: 0.04,
                    delta_t: 6.4e-4,
                    ln_l: -1.8,
                    a: 0.42,
                    sup_v: 0.9999,
                    dist_to_q: Some(3.5e-3),
                },
            ],
            t_total: 0.198,
            a_end: 0.917,
            tau_end: 0.04,
            completion: Completion::ReachedStopL,
        };
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf, None).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back.records.len(), 2);
        assert_eq!(back.records[0].dist_to_q, None);
        assert_eq!(back.records[1].dist_to_q, Some(3.5e-3));
        assert_eq!(back.t_total, trace.t_total);
        assert_eq!(back.a_end, trace.a_end);
        assert_eq!(back.config.record_every, 100);
    }
}
