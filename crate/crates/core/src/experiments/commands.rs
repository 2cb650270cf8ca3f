use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Scenario};
use super::output::{verify_dir, Manifest, OutputDir, Provenance};
use super::stats::{log_log_slope, Slope};
use crate::hawkes_sim::embedded::EmbeddedOptions;
use crate::hawkes_sim::{moment_bound_first, moment_bound_second, simulate_network, spike_csv_header, write_spike_csv};
use crate::limit_field::{
    membrane_potential, solve_limit_intensity, write_field_csv, LimitSolution, NodeProfile, SpatialQuadrature,
};
use crate::quantize::{scenario_s1_positions, scenario_s2_positions, QuantizedMeasure};
use crate::rng::{SeedKey, ENVIRONMENT_STREAM};
use crate::transport::{
    chaos_covariance, compare_potentials, dkr_dictionary_lower_estimate, dkr_upper_bound, estimate_coupling,
    mean_se, ChaosReport, Dictionary, DiscreteMeasure, Positions, Sample,
};
use crate::{Error, Result};

/// One command invocation: the loaded config, its hash, the effective seed
/// and the output directory.
#[derive(Clone, Copy, Debug)]
pub struct Run<'a> {
    pub config: &'a ExperimentConfig,
    pub config_sha256: &'a str,
    pub seed: u64,
    pub out: &'a Path,
}

impl Run<'_> {
    fn provenance(&self) -> Provenance {
        Provenance::new(self.config_sha256, self.seed)
    }

    fn open(&self, command: &str) -> Result<OutputDir> {
        OutputDir::create(self.out, command, self.provenance())
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Positions of an `n`-neuron network. S1 prefixes of one i.i.d. sequence
/// (so the sizes are nested); S2 quantized positions.
pub fn scenario_positions(
    config: &ExperimentConfig,
    seed: u64,
    n: usize,
) -> Result<(Vec<Vec<f64>>, Option<QuantizedMeasure>)> {
    let rho = &config.model.rho;
    match config.scenario {
        Scenario::S1 => {
            let mut env = SeedKey::new(seed, 0).stream(ENVIRONMENT_STREAM);
            Ok((scenario_s1_positions(rho, n, &mut env), None))
        }
        Scenario::S2 => {
            let q = scenario_s2_positions(rho, n, config.quantization.s2_options())?;
            Ok((q.points.clone(), Some(q)))
        }
    }
}

fn write_positions(out: &mut OutputDir, name: &str, points: &[Vec<f64>]) -> Result<()> {
    out.csv(name, |w| {
        write!(w, "index")?;
        for k in 0..points.first().map_or(0, Vec::len) {
            write!(w, ",x{k}")?;
        }
        writeln!(w)?;
        for (i, p) in points.iter().enumerate() {
            write!(w, "{i}")?;
            for c in p {
                write!(w, ",{}", num(*c))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub n: usize,
    pub replications: usize,
    /// Average over replications of `(1/N) sum_i Z_i(T)`.
    pub mean_count: f64,
    pub mean_count_se: f64,
    pub bound_first: f64,
    /// Average over replications of `(1/N) sum_i Z_i(T)^2`.
    pub mean_sq_count: f64,
    pub mean_sq_count_se: f64,
    pub bound_second: f64,
    pub within_bounds: bool,
}

pub fn cmd_simulate(run: Run<'_>) -> Result<Vec<MomentRow>> {
    let cfg = run.config;
    let mut out = run.open("simulate")?;
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let (positions, _) = scenario_positions(cfg, run.seed, n)?;
        let trains: Vec<_> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| simulate_network(&cfg.model, &positions, cfg.t_end, SeedKey::new(run.seed, r as u64)))
            .collect::<Result<_>>()?;
        let nf = n as f64;
        let first: Vec<f64> = trains
            .iter()
            .map(|tr| tr.iter().map(|z| z.count() as f64).sum::<f64>() / nf)
            .collect();
        let second: Vec<f64> = trains
            .iter()
            .map(|tr| tr.iter().map(|z| (z.count() as f64).powi(2)).sum::<f64>() / nf)
            .collect();
        let (mean_count, mean_count_se) = mean_se(&first);
        let (mean_sq_count, mean_sq_count_se) = mean_se(&second);
        let bound_first = moment_bound_first(&cfg.model, &positions, cfg.t_end);
        let bound_second = moment_bound_second(&cfg.model, &positions, cfg.t_end);
        write_positions(&mut out, &format!("positions_N{n}.csv"), &positions)?;
        out.csv(&format!("spikes_N{n}.csv"), |w| {
            writeln!(w, "{}", spike_csv_header(cfg.model.dim()))?;
            for (r, tr) in trains.iter().enumerate() {
                write_spike_csv(w, r, tr, &positions)?;
            }
            Ok(())
        })?;
        rows.push(MomentRow {
            n,
            replications: cfg.replications,
            mean_count,
            mean_count_se,
            bound_first,
            mean_sq_count,
            mean_sq_count_se,
            bound_second,
            within_bounds: mean_count <= bound_first && mean_sq_count <= bound_second,
        });
    }
    out.csv("moments.csv", |w| {
        writeln!(
            w,
            "N,replications,mean_count,mean_count_se,bound_first,mean_sq_count,mean_sq_count_se,bound_second,within_bounds"
        )?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.replications,
                num(r.mean_count),
                num(r.mean_count_se),
                num(r.bound_first),
                num(r.mean_sq_count),
                num(r.mean_sq_count_se),
                num(r.bound_second),
                r.within_bounds
            )?;
        }
        Ok(())
    })?;
    out.finish()?;
    Ok(rows)
}

/// Solves the limit intensity on the configured quadrature of `rho`.
pub fn solve_limit(config: &ExperimentConfig) -> Result<LimitSolution> {
    let quad = SpatialQuadrature::for_measure(&config.model.rho, config.quadrature_cells())?;
    solve_limit_intensity(&config.model, &quad, config.t_end, config.solver_options())
}

/// Largest ratio of consecutive Picard residuals, ignoring residuals at the
/// rounding floor.
pub fn observed_contraction(solution: &LimitSolution) -> Option<f64> {
    let floor = 1e-12 * solution.field.sup_norm.max(1.0);
    solution
        .residuals
        .iter()
        .flat_map(|h| h.windows(2))
        .filter(|p| p[0] > floor && p[1] > floor)
        .map(|p| p[1] / p[0])
        .reduce(f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitSummary {
    pub dt: f64,
    pub steps: usize,
    pub horizon: f64,
    pub nodes: usize,
    pub sup_norm: f64,
    pub w_l1_sup: f64,
    pub contraction: f64,
    pub window_contraction: f64,
    pub windows: Vec<(usize, usize)>,
    pub residuals: Vec<Vec<f64>>,
    pub observed_contraction: Option<f64>,
}

pub fn cmd_solve_limit(run: Run<'_>) -> Result<LimitSummary> {
    let cfg = run.config;
    let sol = solve_limit(cfg)?;
    let pot = membrane_potential(&sol.field, &cfg.model, &sol.quad)?;
    let grid = sol.field.grid;
    let summary = LimitSummary {
        dt: grid.dt,
        steps: grid.steps,
        horizon: grid.horizon(),
        nodes: sol.quad.len(),
        sup_norm: sol.field.sup_norm,
        w_l1_sup: sol.w_l1_sup,
        contraction: sol.contraction,
        window_contraction: sol.window_contraction,
        windows: sol.windows.clone(),
        residuals: sol.residuals.clone(),
        observed_contraction: observed_contraction(&sol),
    };
    let mut out = run.open("solve-limit")?;
    out.csv("lambda.csv", |w| write_field_csv(w, grid, &sol.field.nodes, &sol.field.values))?;
    out.csv("potential.csv", |w| write_field_csv(w, grid, &pot.nodes, &pot.values))?;
    out.csv("quadrature.csv", |w| {
        write!(w, "node")?;
        for k in 0..sol.quad.dim() {
            write!(w, ",x{k}")?;
        }
        writeln!(w, ",weight")?;
        for (p, (x, m)) in sol.quad.nodes.iter().zip(&sol.quad.weights).enumerate() {
            write!(w, "{p}")?;
            for c in x {
                write!(w, ",{}", num(*c))?;
            }
            writeln!(w, ",{}", num(*m))?;
        }
        Ok(())
    })?;
    out.json("limit_header.json", &summary)?;
    out.finish()?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantizeRow {
    pub n: usize,
    pub r: f64,
    pub certified_bound: f64,
    pub diameter_bound: f64,
    pub tail_bound: f64,
}

pub fn cmd_quantize(run: Run<'_>) -> Result<Vec<QuantizeRow>> {
    let cfg = run.config;
    let opts = cfg.quantization.s2_options();
    let qs: Vec<QuantizedMeasure> = cfg
        .n_values
        .par_iter()
        .map(|&n| scenario_s2_positions(&cfg.model.rho, n, opts))
        .collect::<Result<_>>()?;
    let mut out = run.open("quantize")?;
    let mut rows = Vec::new();
    for q in &qs {
        out.csv(&format!("positions_N{}.csv", q.n), |w| q.write_positions_csv(w))?;
        out.json(&format!("certificate_N{}.json", q.n), &q.certificate())?;
        rows.push(QuantizeRow {
            n: q.n,
            r: q.r,
            certified_bound: q.certified_bound,
            diameter_bound: q.diameter_bound,
            tail_bound: q.tail_bound,
        });
    }
    out.csv("certificates.csv", |w| {
        writeln!(w, "N,r,g_d,diameter_bound,tail_bound")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.n,
                num(r.r),
                num(r.certified_bound),
                num(r.diameter_bound),
                num(r.tail_bound)
            )?;
        }
        Ok(())
    })?;
    out.finish()?;
    Ok(rows)
}

/// One row of the rate table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub seed_set: String,
    pub a_mean: f64,
    pub a_se: f64,
    pub b_bound: f64,
    pub w_term: f64,
    pub dkr_upper: f64,
    pub dkr_lower: f64,
    pub dkr_lower_se: f64,
    pub f_term: f64,
    pub g_term: f64,
    pub h_term: f64,
    pub w1: f64,
    pub potential_mean: f64,
    pub potential_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyResult {
    pub scenario: Scenario,
    pub horizon: f64,
    pub replications: usize,
    pub dictionary_version: &'static str,
    pub rows: Vec<RateRow>,
    pub slope_a: Option<Slope>,
    pub slope_dkr_upper: Option<Slope>,
    pub slope_potential: Option<Slope>,
    pub provenance: Provenance,
}

/// Coupling, distance bounds and potential discrepancy for every `N`.
pub fn cmd_converge_study(run: Run<'_>) -> Result<StudyResult> {
    let cfg = run.config;
    let params = &cfg.model;
    let sol = solve_limit(cfg)?;
    let t = sol.field.grid.horizon();
    let proxy = DiscreteMeasure::normalized(sol.quad.nodes.clone(), sol.quad.weights.clone())?;
    let dict = Dictionary::standard(t, params.dim());
    let opts = EmbeddedOptions::default();
    let reps = cfg.replications;
    let mut out = run.open("converge-study")?;
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let (positions, _) = scenario_positions(cfg, run.seed, n)?;
        write_positions(&mut out, &format!("positions_N{n}.csv"), &positions)?;
        let profile = NodeProfile::new(params, &sol, &positions);
        let (coupling, pairs) = estimate_coupling(params, &positions, &profile, t, run.seed, reps, opts)?;
        let bound = dkr_upper_bound(params, &positions, sol.field.sup_norm, &coupling, &proxy)?;
        let finite: Vec<_> = pairs.iter().map(|p| p.finite.clone()).collect();
        let limit: Vec<_> = pairs.into_iter().map(|p| p.limit).collect();
        let pos = vec![positions.clone(); reps];
        let lower = dkr_dictionary_lower_estimate(
            &Sample {
                trains: &finite,
                positions: &pos,
            },
            &Sample {
                trains: &limit,
                positions: &pos,
            },
            &dict,
        );
        let pot = compare_potentials(params, &positions, &profile, t, reps, run.seed, opts)?;
        rows.push(RateRow {
            n,
            seed_set: format!("{}:0..{}", run.seed, reps),
            a_mean: coupling.a_mean,
            a_se: coupling.a_se,
            b_bound: bound.b_term,
            w_term: bound.w_term,
            dkr_upper: bound.total,
            dkr_lower: lower.value,
            dkr_lower_se: lower.se,
            f_term: coupling.f_term,
            g_term: coupling.g_term,
            h_term: coupling.h_term,
            w1: bound.w1,
            potential_mean: pot.mean,
            potential_se: pot.se,
        });
    }
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let col = |f: fn(&RateRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let result = StudyResult {
        scenario: cfg.scenario,
        horizon: t,
        replications: reps,
        dictionary_version: dict.version,
        slope_a: log_log_slope(&ns, &col(|r| r.a_mean)),
        slope_dkr_upper: log_log_slope(&ns, &col(|r| r.dkr_upper)),
        slope_potential: log_log_slope(&ns, &col(|r| r.potential_mean)),
        rows,
        provenance: run.provenance(),
    };
    out.csv("rate_table.csv", |w| {
        writeln!(
            w,
            "N,seed_set,A_mean,A_se,B_bound,W_term,dkr_upper,dkr_lower,dkr_lower_se,F_term,G_term,H_term,W1,potential_mean,potential_se"
        )?;
        for r in &result.rows {
            write!(w, "{},{}", r.n, r.seed_set)?;
            for v in [
                r.a_mean,
                r.a_se,
                r.b_bound,
                r.w_term,
                r.dkr_upper,
                r.dkr_lower,
                r.dkr_lower_se,
                r.f_term,
                r.g_term,
                r.h_term,
                r.w1,
                r.potential_mean,
                r.potential_se,
            ] {
                write!(w, ",{}", num(v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    out.json("study.json", &result)?;
    out.finish()?;
    Ok(result)
}

pub fn cmd_chaos_study(run: Run<'_>) -> Result<Vec<ChaosReport>> {
    let cfg = run.config;
    let spec = cfg
        .chaos
        .as_ref()
        .ok_or_else(|| Error::invalid("chaos", "chaos-study needs a `chaos` section"))?;
    let sol = solve_limit(cfg)?;
    let t = sol.field.grid.horizon();
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let report = match cfg.scenario {
            Scenario::S1 => chaos_covariance(
                &cfg.model,
                &cfg.model.rho,
                Positions::Sampled {
                    n,
                    quad: &sol.quad,
                    field: &sol.field,
                },
                spec,
                t,
                cfg.replications,
                run.seed,
            )?,
            Scenario::S2 => {
                let (points, _) = scenario_positions(cfg, run.seed, n)?;
                let profile = NodeProfile::new(&cfg.model, &sol, &points);
                chaos_covariance(
                    &cfg.model,
                    &cfg.model.rho,
                    Positions::Fixed {
                        points: &points,
                        profile: &profile,
                    },
                    spec,
                    t,
                    cfg.replications,
                    run.seed,
                )?
            }
        };
        rows.push(report);
    }
    let mut out = run.open("chaos-study")?;
    out.csv("chaos_table.csv", |w| {
        writeln!(
            w,
            "N,replications,scale,gap,gap_se,covariance,mean_g,mean_g_tilde,limit_g,limit_g_tilde,empty_windows,defined"
        )?;
        for r in &rows {
            write!(w, "{},{}", r.n, r.replications)?;
            for v in [
                r.scale,
                r.gap,
                r.gap_se,
                r.covariance,
                r.mean_g,
                r.mean_g_tilde,
                r.limit_g,
                r.limit_g_tilde,
            ] {
                write!(w, ",{}", num(v))?;
            }
            writeln!(w, ",{},{}", r.empty_windows, r.defined)?;
        }
        Ok(())
    })?;
    out.json("chaos.json", &serde_json::json!({ "rows": rows }))?;
    out.finish()?;
    Ok(rows)
}

/// Checks the manifest of `dir`, and its config hash when one is given.
pub fn cmd_verify(dir: &Path, config_sha256: Option<&str>) -> Result<Manifest> {
    verify_dir(dir, config_sha256)
}
