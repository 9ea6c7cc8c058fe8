//! Result rows, deterministic CSV emission/parsing and log-log rate fits.

use std::path::Path;

use crate::{CliError, CliResult};

pub const CSV_HEADER: &str = "experiment_id,kind,n,h,V,D,theta,replications,risk_mean,risk_stderr,bound_id,bound_value,bound_valid";

/// One flat result record; a sweep cell contributes one row per bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment_id: String,
    pub kind: String,
    pub n: u64,
    pub h: f64,
    pub v: Option<u32>,
    pub d: Option<u32>,
    pub theta: f64,
    pub replications: u64,
    pub risk_mean: Option<f64>,
    pub risk_stderr: Option<f64>,
    pub bound_id: String,
    pub bound_value: Option<f64>,
    pub bound_valid: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Deterministic row order: (n, h, bound_id) with D/V/id tie-breaks.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.n.cmp(&b.n)
                .then(a.h.total_cmp(&b.h))
                .then(a.bound_id.cmp(&b.bound_id))
                .then(a.d.cmp(&b.d))
                .then(a.v.cmp(&b.v))
                .then(a.experiment_id.cmp(&b.experiment_id))
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.experiment_id,
                row.kind,
                row.n,
                row.h,
                opt_u32(row.v),
                opt_u32(row.d),
                row.theta,
                row.replications,
                opt_f64(row.risk_mean),
                opt_f64(row.risk_stderr),
                row.bound_id,
                opt_f64(row.bound_value),
                opt_bool(row.bound_valid),
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_u32(v: Option<u32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Parse CSV produced by [`ResultTable::to_csv`]; fields never contain
/// commas, so plain splitting is exact.
pub fn parse_csv(text: &str) -> CliResult<ResultTable> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(CliError::Runtime(format!("unexpected CSV header: {other:?}")));
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 13 {
            return Err(CliError::Runtime(format!(
                "row {} has {} fields, expected 13",
                idx + 2,
                parts.len()
            )));
        }
        let field_err =
            |name: &str| CliError::Runtime(format!("row {}: bad {name} field", idx + 2));
        rows.push(ResultRow {
            experiment_id: parts[0].to_string(),
            kind: parts[1].to_string(),
            n: parts[2].parse().map_err(|_| field_err("n"))?,
            h: parts[3].parse().map_err(|_| field_err("h"))?,
            v: parse_opt(parts[4]).map_err(|_| field_err("V"))?,
            d: parse_opt(parts[5]).map_err(|_| field_err("D"))?,
            theta: parts[6].parse().map_err(|_| field_err("theta"))?,
            replications: parts[7].parse().map_err(|_| field_err("replications"))?,
            risk_mean: parse_opt(parts[8]).map_err(|_| field_err("risk_mean"))?,
            risk_stderr: parse_opt(parts[9]).map_err(|_| field_err("risk_stderr"))?,
            bound_id: parts[10].to_string(),
            bound_value: parse_opt(parts[11]).map_err(|_| field_err("bound_value"))?,
            bound_valid: parse_opt(parts[12]).map_err(|_| field_err("bound_valid"))?,
        });
    }
    Ok(ResultTable { rows })
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>, T::Err> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

/// Least-squares line through (log n, log risk).
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fit `log risk = slope * log n + intercept`. All risks must be
/// positive; zero-risk cells must be floored (see [`floor_risk`]) before
/// fitting.
pub fn fit_rate(pairs: &[(f64, f64)]) -> CliResult<RateFit> {
    if pairs.len() < 2 {
        return Err(CliError::Runtime("rate fit needs at least 2 points".into()));
    }
    if let Some((n, risk)) = pairs.iter().find(|(n, risk)| *n <= 0.0 || *risk <= 0.0) {
        return Err(CliError::Runtime(format!(
            "rate fit needs positive coordinates, got ({n}, {risk})"
        )));
    }
    let logs: Vec<(f64, f64)> = pairs.iter().map(|&(n, r)| (n.ln(), r.ln())).collect();
    let m = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(CliError::Runtime("rate fit needs at least two distinct n".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| {
            let fit = slope * p.0 + intercept;
            (p.1 - fit) * (p.1 - fit)
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(RateFit { slope, intercept, r_squared, points: pairs.len() })
}

/// The documented floor for zero Monte Carlo risk cells: 1/(10 R n).
pub fn floor_risk(mean: f64, replications: u64, n: u64) -> (f64, bool) {
    if mean > 0.0 {
        (mean, false)
    } else {
        (1.0 / (10.0 * replications as f64 * n as f64), true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            experiment_id: "exp".into(),
            kind: "bounds".into(),
            n: 100,
            h: 0.5,
            v: Some(4),
            d: None,
            theta: 1.0,
            replications: 0,
            risk_mean: None,
            risk_stderr: None,
            bound_id: "Eq34".into(),
            bound_value: Some(0.123456789012345),
            bound_valid: Some(true),
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::default();
        assert_eq!(t.to_csv(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let mut t = ResultTable { rows: vec![row()] };
        let mut second = row();
        second.n = 50;
        second.h = 1.0;
        second.risk_mean = Some(0.1);
        second.risk_stderr = Some(1e-3);
        second.bound_valid = None;
        t.rows.push(second);
        t.sort();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 3);
        let reparsed = parse_csv(&csv).unwrap();
        assert_eq!(reparsed.to_csv(), csv);
        // Sorted by n first.
        assert_eq!(reparsed.rows[0].n, 50);
    }

    #[test]
    fn fit_rate_recovers_exact_power_laws() {
        let pairs: Vec<(f64, f64)> =
            (1..=5).map(|k| ((100 * k) as f64, 3.0 / (100.0 * k as f64))).collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let two = fit_rate(&[(100.0, 0.1), (1000.0, 0.01)]).unwrap();
        assert!((two.slope + 1.0).abs() < 1e-12);

        let half: Vec<(f64, f64)> =
            (1..=5).map(|k| ((64 << k) as f64, 2.0 / ((64 << k) as f64).sqrt())).collect();
        let fit = fit_rate(&half).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
    }

    #[test]
    fn fit_rate_rejects_nonpositive_risk() {
        let err = fit_rate(&[(100.0, 0.0), (200.0, 0.1)]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(fit_rate(&[(100.0, 0.1)]).is_err());
    }

    #[test]
    fn floor_applies_only_to_zero_cells() {
        assert_eq!(floor_risk(0.25, 100, 10), (0.25, false));
        let (floored, flagged) = floor_risk(0.0, 2000, 64);
        assert!(flagged);
        assert!((floored - 1.0 / (10.0 * 2000.0 * 64.0)).abs() < 1e-20);
    }
}
