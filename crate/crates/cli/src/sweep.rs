//! Sweep execution: one function per experiment kind, all feeding the
//! flat result table. Cells run sequentially; Monte Carlo replications
//! inside a cell parallelize with deterministic reduction, so output is
//! independent of thread count.

use marginlab_core::bounds::{
    lower_bound, lower_bound_entropy, maximal_inequality_bound, modulus_phi, modulus_w,
    risk_certificate_with, solve_epsilon_star, upper_bound, upper_bound_bracketing,
    EntropyBoundParams, LowerId, MarginBoundParams, MaximalInequality, ModulusW, PhiVariant,
    UpperId,
};
use marginlab_core::boundary::{monte_carlo_boundary_risk, suggested_bins};
use marginlab_core::classes::ClassifierClass;
use marginlab_core::domain::{FiniteDomain, JointDistribution};
use marginlab_core::erm::monte_carlo_excess_risk_with_slack;
use marginlab_core::lowerlab::{
    birge_bound, divergence_oracle_max_error, family_member, greedy_packing, FamilyKind,
    MarginFamilySpec,
};
use marginlab_core::Error;

use crate::config::{ClassSpec, ExperimentConfig, Family, Kind};
use crate::report::{fit_rate, floor_risk, ResultRow, ResultTable};
use crate::{CliError, CliResult};

/// Run the experiment described by `cfg` and return the sorted table.
pub fn run_sweep(cfg: &ExperimentConfig) -> CliResult<ResultTable> {
    let mut table = match cfg.kind {
        Kind::Bounds => run_bounds(cfg)?,
        Kind::Simulate => run_simulate(cfg, false)?,
        Kind::Rates => run_simulate(cfg, true)?,
        Kind::Lowerlab => run_lowerlab(cfg)?,
        Kind::Regress => run_regress(cfg)?,
        Kind::Verify => run_verify(cfg)?,
    };
    table.sort();
    Ok(table)
}

fn blank_row(cfg: &ExperimentConfig) -> ResultRow {
    ResultRow {
        experiment_id: cfg.id.clone(),
        kind: cfg.kind.as_str().into(),
        n: 0,
        h: 0.0,
        v: None,
        d: None,
        theta: cfg.theta,
        replications: 0,
        risk_mean: None,
        risk_stderr: None,
        bound_id: String::new(),
        bound_value: None,
        bound_valid: None,
    }
}

fn margin_template(cfg: &ExperimentConfig) -> MarginBoundParams {
    let mut t = MarginBoundParams::new(1, 1, 0.0);
    t.theta = cfg.theta;
    t.k = cfg.constants.k;
    t.c = cfg.constants.c;
    t.kappa = cfg.constants.kappa;
    t.c41 = cfg.constants.c41;
    t
}

/// The hardest family member for one sweep cell, following the proof
/// defaults: the assouad margin is raised to sqrt((V-1)/n) when below it
/// and the atom mass defaults to 2/(9 n h^2) clamped.
fn cell_spec(cfg: &ExperimentConfig, n: u64, h: f64) -> CliResult<MarginFamilySpec> {
    match cfg.family {
        Family::Assouad => {
            let v = cfg.v.expect("validated");
            match cfg.p_atom {
                Some(p) => {
                    let h_eff = h.max(((v as f64 - 1.0) / n as f64).sqrt()).min(1.0);
                    Ok(MarginFamilySpec::assouad(v, h_eff, p)?)
                }
                None => Ok(MarginFamilySpec::assouad_default_p(v, h, n)?),
            }
        }
        Family::Sparse => {
            Ok(MarginFamilySpec::sparse(cfg.big_n_values[0], cfg.d_values[0], h)?)
        }
    }
}

fn cell_bits(cfg: &ExperimentConfig, spec: &MarginFamilySpec) -> CliResult<Vec<bool>> {
    if let Some(bits) = &cfg.bits {
        if bits.len() != spec.index_len() {
            return Err(CliError::config(format!(
                "bits length {} does not match the family index length {}",
                bits.len(),
                spec.index_len()
            )));
        }
        return Ok(bits.clone());
    }
    Ok(match spec.kind() {
        // Alternating vertex: exercises both label orientations.
        FamilyKind::Assouad { .. } => (0..spec.index_len()).map(|i| i % 2 == 0).collect(),
        FamilyKind::Sparse { weight, .. } => {
            (0..spec.index_len()).map(|i| i < *weight as usize).collect()
        }
    })
}

fn cell_class(cfg: &ExperimentConfig, spec: &MarginFamilySpec) -> CliResult<ClassifierClass> {
    let default = || match spec.kind() {
        FamilyKind::Assouad { .. } => ClassifierClass::powerset(spec.domain_len()),
        FamilyKind::Sparse { n_points, weight } => {
            ClassifierClass::sparse(*n_points as usize, *weight)
        }
    };
    let class = match &cfg.class {
        None => default()?,
        Some(ClassSpec::Powerset) => ClassifierClass::powerset(spec.domain_len())?,
        Some(ClassSpec::Sparse) => match spec.kind() {
            FamilyKind::Sparse { n_points, weight } => {
                ClassifierClass::sparse(*n_points as usize, *weight)?
            }
            FamilyKind::Assouad { .. } => {
                return Err(CliError::config("sparse class requires the sparse family"))
            }
        },
        Some(ClassSpec::Explicit(path)) => {
            let class = ClassifierClass::load(path)?;
            if class.domain_size() != spec.domain_len() {
                return Err(CliError::config(format!(
                    "explicit class is over {} points, family domain has {}",
                    class.domain_size(),
                    spec.domain_len()
                )));
            }
            class
        }
    };
    Ok(class)
}

/// The model class for an explicit mu/eta distribution.
fn explicit_class(
    cfg: &ExperimentConfig,
    member: &JointDistribution,
) -> CliResult<ClassifierClass> {
    let m = member.len();
    let class = match &cfg.class {
        None | Some(ClassSpec::Powerset) => ClassifierClass::powerset(m)?,
        Some(ClassSpec::Sparse) => {
            let weight = cfg.d_values.first().copied().ok_or_else(|| {
                CliError::config("a sparse class over an explicit distribution needs D")
            })?;
            ClassifierClass::sparse(m, weight)?
        }
        Some(ClassSpec::Explicit(path)) => {
            let class = ClassifierClass::load(path)?;
            if class.domain_size() != m {
                return Err(CliError::config(format!(
                    "explicit class is over {} points, the distribution has {m}",
                    class.domain_size()
                )));
            }
            class
        }
    };
    Ok(class)
}

fn entropy_params(cfg: &ExperimentConfig, n: u64, h: f64, r: f64) -> CliResult<EntropyBoundParams> {
    let mut ep = EntropyBoundParams::new(cfg.constants.k, cfg.constants.k, r, 0.5, n, h)?;
    ep.theta = cfg.theta;
    ep.c = cfg.constants.c;
    Ok(ep)
}

fn run_bounds(cfg: &ExperimentConfig) -> CliResult<ResultTable> {
    let mut table = ResultTable::default();
    let (v, d) = match cfg.family {
        Family::Assouad => {
            let v = cfg.v.expect("validated");
            (v, cfg.d_values.first().copied().unwrap_or(v))
        }
        Family::Sparse => {
            let (n_pts, weight) = (cfg.big_n_values[0], cfg.d_values[0]);
            (weight.min(n_pts - weight).max(1), weight)
        }
    };
    for &n in &cfg.n_values {
        for &h in &cfg.h_values {
            let mut params = margin_template(cfg);
            params.v = v;
            params.n = n;
            params.h = h;
            params.d = Some(d);
            params.l0 = cfg.l0;
            params.p = cfg.p_atom;
            if n >= v as u64 {
                params.eh = Some(marginlab_core::classes::sauer_bound(v, n)?);
            }
            let mut bounds = Vec::new();
            for id in [UpperId::Eq32, UpperId::Eq33, UpperId::Eq34, UpperId::Eq7, UpperId::Eq2] {
                match upper_bound(id, &params) {
                    Ok(b) => bounds.push(b),
                    Err(Error::InvalidParameter(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            for id in [
                LowerId::Eq40Proof,
                LowerId::Eq41,
                LowerId::Eq9,
                LowerId::Eq38,
                LowerId::Eq39,
                LowerId::Eq3,
                LowerId::AssouadExpr,
            ] {
                match lower_bound(id, &params) {
                    Ok(b) => bounds.push(b),
                    Err(Error::InvalidParameter(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            if let Some(r) = cfg.r {
                let ep = entropy_params(cfg, n, h, r)?;
                bounds.push(upper_bound_bracketing(&ep));
                bounds.push(lower_bound_entropy(&ep));
            }
            for b in bounds {
                let mut row = blank_row(cfg);
                row.n = n;
                row.h = h;
                row.v = Some(v);
                row.d = Some(d);
                row.bound_id = b.equation_id.into();
                row.bound_value = Some(b.value);
                row.bound_valid = Some(b.valid);
                table.rows.push(row);
            }
        }
    }
    Ok(table)
}

fn run_simulate(cfg: &ExperimentConfig, with_fits: bool) -> CliResult<ResultTable> {
    let mut table = ResultTable::default();
    let template = margin_template(cfg);
    // An explicit mu/eta pair pins one distribution; its own margin
    // labels the rows and the h sweep collapses to it.
    let explicit_member = match (&cfg.mu, &cfg.eta) {
        (Some(mu), Some(eta)) => Some(JointDistribution::new(
            FiniteDomain::new(mu.clone())?,
            eta.clone(),
        )?),
        _ => None,
    };
    let h_sweep: Vec<f64> = match &explicit_member {
        Some(member) => vec![member.margin_h()],
        None => cfg.h_values.clone(),
    };
    for &h in &h_sweep {
        let mut fit_points: Vec<(f64, f64)> = Vec::new();
        for &n in &cfg.n_values {
            let (member, class) = match &explicit_member {
                Some(member) => (member.clone(), explicit_class(cfg, member)?),
                None => {
                    let spec = cell_spec(cfg, n, h)?;
                    let bits = cell_bits(cfg, &spec)?;
                    let class = cell_class(cfg, &spec)?;
                    (family_member(&spec, &bits)?, class)
                }
            };
            let estimate = monte_carlo_excess_risk_with_slack(
                &member,
                &class,
                n as usize,
                cfg.replications,
                cfg.seed,
                cfg.rho,
            )?;
            let certificate = risk_certificate_with(&member, &class, n, &template)?;
            for b in &certificate.bounds {
                let mut row = blank_row(cfg);
                row.n = n;
                row.h = h;
                row.v = Some(certificate.v);
                row.d = cfg.d_values.first().copied();
                row.replications = cfg.replications;
                row.risk_mean = Some(estimate.mean);
                row.risk_stderr = Some(estimate.stderr);
                row.bound_id = b.equation_id.into();
                row.bound_value = Some(b.value);
                row.bound_valid = Some(b.valid);
                table.rows.push(row);
            }
            let (risk, floored) = floor_risk(estimate.mean, cfg.replications, n);
            if floored {
                let mut row = blank_row(cfg);
                row.n = n;
                row.h = h;
                row.v = Some(certificate.v);
                row.replications = cfg.replications;
                row.risk_mean = Some(estimate.mean);
                row.risk_stderr = Some(estimate.stderr);
                row.bound_id = "risk_floor".into();
                row.bound_value = Some(risk);
                row.bound_valid = Some(true);
                table.rows.push(row);
            }
            fit_points.push((n as f64, risk));
        }
        if with_fits && fit_points.len() >= 2 {
            let fit = fit_rate(&fit_points)?;
            for (name, value) in [
                ("fit_slope", fit.slope),
                ("fit_intercept", fit.intercept),
                ("fit_r_squared", fit.r_squared),
            ] {
                let mut row = blank_row(cfg);
                row.h = h;
                row.v = cfg.v;
                row.replications = cfg.replications;
                row.bound_id = name.into();
                row.bound_value = Some(value);
                table.rows.push(row);
            }
        }
    }
    Ok(table)
}

fn run_lowerlab(cfg: &ExperimentConfig) -> CliResult<ResultTable> {
    let mut table = ResultTable::default();
    for &big_n in &cfg.big_n_values {
        for &d in &cfg.d_values {
            if big_n < 4 * d {
                continue;
            }
            let code = greedy_packing(big_n, d)?;
            let rows = [
                ("packing_log_cardinality", code.log_cardinality, code.meets_bound),
                ("packing_target", code.bound_target(), code.meets_bound),
                ("packing_min_distance", code.min_distance as f64, 2 * code.min_distance > d),
                ("packing_verified", code.codewords.len() as f64, code.verify()),
            ];
            for (name, value, valid) in rows {
                let mut row = blank_row(cfg);
                row.n = big_n as u64;
                row.d = Some(d);
                row.bound_id = name.into();
                row.bound_value = Some(value);
                row.bound_valid = Some(valid);
                table.rows.push(row);
            }
        }
    }
    let worst = divergence_oracle_max_error(cfg.trials, cfg.seed)?;
    let mut row = blank_row(cfg);
    row.replications = cfg.trials;
    row.bound_id = "divergence_max_abs_error".into();
    row.bound_value = Some(worst);
    row.bound_valid = Some(worst <= 1e-12);
    table.rows.push(row);
    Ok(table)
}

fn run_regress(cfg: &ExperimentConfig) -> CliResult<ResultTable> {
    let mut table = ResultTable::default();
    let mut fit_points = Vec::new();
    for (i, &n) in cfg.n_values.iter().enumerate() {
        let d_bins = match cfg.bins.get(i) {
            Some(&b) => b as usize,
            None => {
                suggested_bins(cfg.holder_l, cfg.holder_alpha, cfg.color_a, cfg.color_b, n as usize)
            }
        };
        let (mean, stderr) = monte_carlo_boundary_risk(
            cfg.holder_l,
            cfg.holder_alpha,
            cfg.color_a,
            cfg.color_b,
            n as usize,
            d_bins,
            cfg.replications,
            cfg.seed,
        )?;
        let mut row = blank_row(cfg);
        row.n = n;
        row.d = Some(d_bins as u32);
        row.replications = cfg.replications;
        row.risk_mean = Some(mean);
        row.risk_stderr = Some(stderr);
        row.bound_id = "boundary_l1_risk".into();
        table.rows.push(row);
        let (risk, floored) = floor_risk(mean, cfg.replications, n);
        if floored {
            let mut row = blank_row(cfg);
            row.n = n;
            row.d = Some(d_bins as u32);
            row.replications = cfg.replications;
            row.bound_id = "risk_floor".into();
            row.bound_value = Some(risk);
            row.bound_valid = Some(true);
            table.rows.push(row);
        }
        fit_points.push((n as f64, risk));
    }
    if fit_points.len() >= 2 {
        let fit = fit_rate(&fit_points)?;
        for (name, value) in [
            ("fit_slope", fit.slope),
            ("fit_intercept", fit.intercept),
            ("fit_r_squared", fit.r_squared),
        ] {
            let mut row = blank_row(cfg);
            row.replications = cfg.replications;
            row.bound_id = name.into();
            row.bound_value = Some(value);
            table.rows.push(row);
        }
    }
    Ok(table)
}

/// A quick self-contained verification battery: every row is a check
/// with its pass/fail verdict and the measured discrepancy.
fn run_verify(cfg: &ExperimentConfig) -> CliResult<ResultTable> {
    let mut table = ResultTable::default();
    let push = |name: &str, value: f64, pass: bool, table: &mut ResultTable| {
        let mut row = blank_row(cfg);
        row.bound_id = name.into();
        row.bound_value = Some(value);
        row.bound_valid = Some(pass);
        table.rows.push(row);
    };

    let worst = divergence_oracle_max_error(cfg.trials, cfg.seed)?;
    push("divergence_max_abs_error", worst, worst <= 1e-12, &mut table);

    // Fixed-point solver against two algebraic solutions.
    let phi = PhiVariant::Combinatorial { k: 1.0, eh: 25.0 };
    let w = ModulusW { h: 1.0, theta: 1.0, cap: false };
    let e1 = (solve_epsilon_star(&phi, &w, 100)? - 0.5).abs();
    let phi2 = PhiVariant::Combinatorial { k: 1.0, eh: 9.0 };
    let w2 = ModulusW { h: 0.25, theta: 1.0, cap: false };
    let analytic = (9.0f64 / (400.0 * 0.25)).sqrt();
    let e2 = (solve_epsilon_star(&phi2, &w2, 400)? - analytic).abs();
    push("solver_closed_form_error", e1.max(e2), e1.max(e2) <= 1e-10, &mut table);

    // Bracketing-modulus rate exponents.
    let mut slope_err: f64 = 0.0;
    for (theta, r) in [(1.0, 0.25), (1.0, 0.5), (2.0, 0.25), (2.0, 0.5)] {
        let phi = PhiVariant::BracketingPower { k1: 1.0, r };
        let w = ModulusW { h: 1.0, theta, cap: true };
        let (n1, n2) = (1u64 << 22, 1u64 << 26);
        let eps1 = solve_epsilon_star(&phi, &w, n1)?;
        let eps2 = solve_epsilon_star(&phi, &w, n2)?;
        let slope =
            ((eps2 * eps2).ln() - (eps1 * eps1).ln()) / ((n2 as f64).ln() - (n1 as f64).ln());
        slope_err = slope_err.max((slope + theta / (2.0 * theta - 1.0 + r)).abs());
    }
    push("solver_rate_slope_error", slope_err, slope_err <= 1e-3, &mut table);

    // Upper/lower gap identity on the coarse grid.
    let mut gap_err: f64 = 0.0;
    let mut gap_ok = true;
    for v in [2u32, 5, 10] {
        for n in [100u64, 1000, 10_000, 100_000] {
            for step in 1..=10 {
                let h = step as f64 / 10.0;
                if h < (v as f64 / n as f64).sqrt() {
                    continue;
                }
                let params = MarginBoundParams::new(v, n, h);
                let upper = upper_bound(UpperId::Eq34, &params)?.value;
                let lower = lower_bound(LowerId::Eq40Proof, &params)?.value;
                let rhs = 54.0 * (v as f64 / (v as f64 - 1.0))
                    * (1.0 + (n as f64 * h * h / v as f64).ln());
                gap_ok &= upper / lower <= rhs * (1.0 + 1e-12);
                gap_err = gap_err.max(((upper / lower) - rhs).abs() / rhs);
            }
        }
    }
    push("gap_identity_max_rel_error", gap_err, gap_ok && gap_err <= 1e-9, &mut table);

    // Small packing grid with re-verified certificates.
    let mut packing_ok = true;
    let mut packing_margin = f64::INFINITY;
    for (n, d) in [(8u32, 2u32), (16, 2), (16, 4), (32, 4)] {
        let code = greedy_packing(n, d)?;
        packing_ok &= code.meets_bound && code.verify();
        packing_margin = packing_margin.min(code.log_cardinality - code.bound_target());
    }
    push("packing_margin_min", packing_margin, packing_ok, &mut table);

    // Testing bound caps and floor.
    let birge_ok = birge_bound(0.0, 5)? == 0.71
        && birge_bound(100.0, 5)? == 1.0
        && (birge_bound(1.2, 3)? - (1.2 / 4.0f64.ln()).clamp(0.71, 1.0)).abs() < 1e-15;
    push("birge_bound_shape", 0.0, birge_ok, &mut table);

    // Maximal-inequality spot values.
    let chain_flat = |_: f64| 2.0f64.ln();
    let chain = maximal_inequality_bound(&MaximalInequality::ChainingA5 {
        entropy: &chain_flat,
        delta: 1.0,
        max_terms: 64,
    })?;
    let chain_err = (chain.value - 6.0 * 2.0f64.ln().sqrt()).abs();
    push("chaining_flat_entropy_error", chain_err, chain_err <= 1e-9 && chain.valid, &mut table);

    // Modulus evaluators keep their closed forms.
    let phi_err = (modulus_phi(&PhiVariant::BracketingPower { k1: 1.0, r: 0.5 }, 0.25)? - 12.0)
        .abs()
        .max((modulus_w(&ModulusW { h: 0.25, theta: 1.0, cap: false }, 0.1)? - 0.2).abs());
    push("modulus_closed_form_error", phi_err, phi_err <= 1e-12, &mut table);

    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn bounds_sweep_emits_only_bound_columns() {
        let cfg = parse_config("kind=bounds\nV=5\nn=100,1000\nh=0.5\n").unwrap();
        let table = run_sweep(&cfg).unwrap();
        assert!(!table.rows.is_empty());
        assert!(table.rows.iter().all(|r| r.risk_mean.is_none()));
        assert!(table.rows.iter().any(|r| r.bound_id == "Eq34"));
        assert!(table.rows.iter().any(|r| r.bound_id == "Eq40_proof"));
    }

    #[test]
    fn simulate_sweep_is_reproducible() {
        let text = "kind=simulate\nV=2\nn=1,3\nh=1\nreplications=64\nseed=11\n";
        let cfg = parse_config(text).unwrap();
        let a = run_sweep(&cfg).unwrap().to_csv();
        let b = run_sweep(&cfg).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn explicit_distribution_matches_enumeration_oracle() {
        // Two-point uniform zero-error law over the power set: the exact
        // ERM expectation is (1/2)^n (one unobserved point costs 1/2).
        let text = "kind=simulate\nmu=0.5,0.5\neta=1,1\nn=1,3\nreplications=2000\nseed=2\n";
        let table = run_sweep(&parse_config(text).unwrap()).unwrap();
        for n in [1u64, 3] {
            let row = table
                .rows
                .iter()
                .find(|r| r.n == n && r.risk_mean.is_some())
                .expect("cell row");
            assert_eq!(row.h, 1.0);
            let exact = 0.5f64.powi(n as i32);
            let gap = (row.risk_mean.unwrap() - exact).abs();
            assert!(gap <= 3.0 * row.risk_stderr.unwrap() + 1e-12, "n={n}: off by {gap}");
        }
    }

    #[test]
    fn rho_slack_changes_the_estimator() {
        // Full slack always returns the first member, the all-zeros
        // classifier, whose excess loss against Bayes (1,1) is 1.
        let strict = "kind=simulate\nmu=0.5,0.5\neta=1,1\nn=4\nreplications=32\nseed=2\n";
        let slack = "kind=simulate\nmu=0.5,0.5\neta=1,1\nn=4\nreplications=32\nseed=2\nrho=1\n";
        let strict_risk = run_sweep(&parse_config(strict).unwrap()).unwrap().rows[0]
            .risk_mean
            .unwrap();
        let slack_risk =
            run_sweep(&parse_config(slack).unwrap()).unwrap().rows[0].risk_mean.unwrap();
        assert!(strict_risk < 0.5);
        assert_eq!(slack_risk, 1.0);
    }

    #[test]
    fn verify_battery_passes() {
        let cfg = parse_config("kind=verify\ntrials=200\nseed=3\n").unwrap();
        let table = run_sweep(&cfg).unwrap();
        for row in &table.rows {
            assert_eq!(row.bound_valid, Some(true), "check {} failed", row.bound_id);
        }
    }

    #[test]
    fn lowerlab_report_certifies_packings() {
        let cfg = parse_config("kind=lowerlab\nN=8,16\nD=2,4\ntrials=100\nseed=5\n").unwrap();
        let table = run_sweep(&cfg).unwrap();
        // (8,4) violates N >= 4D and is skipped: expect 3 combos x 4 rows + 1.
        assert_eq!(table.rows.len(), 13);
        for row in &table.rows {
            assert_eq!(row.bound_valid, Some(true), "row {} failed", row.bound_id);
        }
    }
}
