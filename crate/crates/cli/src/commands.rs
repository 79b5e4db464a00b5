use std::f64::consts::FRAC_PI_2;

use qbound::closed_forms;
use qbound::gaussian::db_from_r;
use qbound::holevo::{BoundResult, SolveMethod};
use qbound::measurement::{
    self, SchemeKind, SchemeSpec, SimulationReport, Verdict, ACCEPTANCE_SIGMAS,
};
use qbound::region::{self, EnvelopeGrid, RegionSample};
use qbound::{build_probe, solve, ChannelParams, ProbeConfig, Weights};
use serde::Serialize;

use crate::config::{Format, Params, Scheme};
use crate::output::{self, RegionRow};
use crate::Failure;

#[derive(Debug, Serialize)]
struct WeightsRecord {
    w_x: f64,
    w_y: f64,
}

impl From<&Weights> for WeightsRecord {
    fn from(w: &Weights) -> Self {
        WeightsRecord {
            w_x: w.w_x(),
            w_y: w.w_y(),
        }
    }
}

/// Squeezing resources in both conventions; `sql_reachable` is the exact `product < 1/4` test.
#[derive(Debug, Serialize)]
struct Resources {
    r: Vec<f64>,
    db: Vec<f64>,
    total_db: f64,
    resource_product: f64,
    sql_reachable: bool,
}

impl Resources {
    fn new(r: &[f64]) -> Self {
        let db: Vec<f64> = r.iter().map(|&x| db_from_r(x)).collect();
        let resource_product = r.iter().map(|&x| (-2.0 * x).exp()).product();
        Resources {
            r: r.to_vec(),
            total_db: db.iter().sum(),
            db,
            resource_product,
            sql_reachable: r.len() == 2 && resource_product < 0.25,
        }
    }
}

#[derive(Debug, Serialize)]
struct Crosscheck {
    formula: &'static str,
    value: f64,
    relative_difference: f64,
}

impl Crosscheck {
    fn new(formula: &'static str, value: f64, f_hcr: f64) -> Self {
        Crosscheck {
            formula,
            value,
            relative_difference: (f_hcr - value).abs() / value.abs(),
        }
    }
}

#[derive(Debug, Serialize)]
struct BoundRecord {
    probe: ProbeConfig,
    weights: WeightsRecord,
    f_hcr: f64,
    v_x: f64,
    v_y: f64,
    c_x: Vec<f64>,
    c_y: Vec<f64>,
    commutator: f64,
    lower_bound: Option<f64>,
    converged: bool,
    method: SolveMethod,
    closed_form_crosscheck: Option<Crosscheck>,
    resources: Resources,
}

#[derive(Debug, Serialize)]
struct BoundCsvRow {
    f_hcr: f64,
    v_x: f64,
    v_y: f64,
    w_x: f64,
    w_y: f64,
    converged: bool,
}

fn probe_from(
    params: &Params,
    w: &Weights,
) -> Result<(ProbeConfig, Option<Crosscheck>, Vec<f64>), Failure> {
    if params.modes()? == 1 {
        let r = params
            .squeezing()?
            .ok_or_else(|| Failure::Config("single-mode runs need --r or --db".into()))?;
        let phi = params.phi.unwrap_or(0.0);
        let probe = ProbeConfig::single_mode(r, phi)?;
        let cc = Crosscheck::new(
            "single-mode-line",
            closed_forms::single_mode_line(w, r, phi)?,
            f64::NAN,
        );
        return Ok((probe, Some(cc), vec![r]));
    }
    let (r1, r2) = params.squeezing_pair()?;
    let (lo, hi) = (r1.min(r2), r1.max(r2));
    if params.auto_config {
        let cfg = closed_forms::optimal_config(w, lo, hi, params.phi1())?;
        let probe = ProbeConfig::two_mode(lo, hi, cfg.phi1, cfg.phi2, cfg.t)?;
        let mut value = 0.0;
        if w.w_x() > 0.0 {
            value += w.w_x() * cfg.v_x;
        }
        if w.w_y() > 0.0 {
            value += w.w_y() * cfg.v_y;
        }
        return Ok((
            probe,
            Some(Crosscheck::new("optimal-config", value, f64::NAN)),
            vec![r1, r2],
        ));
    }
    let t = params.t.unwrap_or(0.5);
    let (probe, _) = ProbeConfig::two_mode_canonical(r1, r2, params.phi1(), params.phi2(), t)?;
    let example2 = r1 == r2 && probe.phi1 == 0.0 && probe.phi2 == FRAC_PI_2 && probe.t == 0.5;
    let cc = if example2 {
        Some(Crosscheck::new(
            "example2-quartic",
            closed_forms::example2_bound(w, r1)?,
            f64::NAN,
        ))
    } else {
        None
    };
    Ok((probe, cc, vec![r1, r2]))
}

fn finish_crosscheck(cc: Option<Crosscheck>, f_hcr: f64) -> Option<Crosscheck> {
    cc.map(|c| Crosscheck::new(c.formula, c.value, f_hcr))
}

pub fn bound(params: &Params) -> Result<(), Failure> {
    let w = params.weights()?;
    let (probe, cc, r) = probe_from(params, &w)?;
    let state = build_probe(&probe)?;
    let b: BoundResult = solve(state.cov(), &w)?;
    if !b.converged {
        return Err(Failure::Solver(format!(
            "Holevo minimisation did not converge (f = {})",
            b.f_hcr
        )));
    }
    let (v_x, v_y) = b.tangent_variances(&w);
    let bytes = match params.format.unwrap_or(Format::Json) {
        Format::Json => output::json_bytes(&BoundRecord {
            probe,
            weights: (&w).into(),
            f_hcr: b.f_hcr,
            v_x,
            v_y,
            c_x: b.duals.c_x().to_vec(),
            c_y: b.duals.c_y().to_vec(),
            commutator: b.commutator(),
            lower_bound: b.lower_bound,
            converged: b.converged,
            method: b.method,
            closed_form_crosscheck: finish_crosscheck(cc, b.f_hcr),
            resources: Resources::new(&r),
        })?,
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.serialize(BoundCsvRow {
                f_hcr: b.f_hcr,
                v_x,
                v_y,
                w_x: w.w_x(),
                w_y: w.w_y(),
                converged: b.converged,
            })
            .map_err(|e| Failure::Io(e.to_string()))?;
            wtr.into_inner().map_err(|e| Failure::Io(e.to_string()))?
        }
    };
    output::emit(params.out.as_deref(), &bytes)
}

fn ratio_grid(params: &Params) -> Vec<f64> {
    let span = params.ratio_span.unwrap_or(100.0);
    region::logspace(1.0 / span, span, params.n_ratio.unwrap_or(50))
}

fn closed_form_rows(params: &Params) -> Result<Vec<RegionSample>, Failure> {
    let n = params.points.unwrap_or(200);
    if params.modes()? == 1 {
        let r = params
            .squeezing()?
            .ok_or_else(|| Failure::Config("single-mode runs need --r or --db".into()))?;
        let phi = params.phi.unwrap_or(0.0);
        let (v_a, _) = closed_forms::projected_variances(r, phi)?;
        let v_x: Vec<f64> = region::logspace(1e-3, 1e3, n)
            .into_iter()
            .map(|d| v_a + d * v_a)
            .collect();
        return Ok(region::closed_form_single_mode(r, phi, &v_x)?);
    }
    let (r1, r2) = params.squeezing_pair()?;
    let (lo, hi) = region::envelope_bins(r1.max(r2));
    Ok(region::closed_form_envelope(
        r1.min(r2),
        r1.max(r2),
        &region::logspace(lo, hi, n),
    )?)
}

fn numeric_rows(params: &Params) -> Result<(Vec<RegionSample>, usize), Failure> {
    if params.modes()? == 1 {
        let ratios = ratio_grid(params);
        let r = params
            .squeezing()?
            .ok_or_else(|| Failure::Config("single-mode runs need --r or --db".into()))?;
        let probe = ProbeConfig::single_mode(r, params.phi.unwrap_or(0.0))?;
        let rows = region::boundary_for_config(&probe, &ratios)?;
        let bad = rows.iter().filter(|s| !s.converged).count();
        return Ok((rows, bad));
    }
    let (r1, r2) = params.squeezing_pair()?;
    if let Some(t) = params.t {
        let ratios = ratio_grid(params);
        let (probe, _) = ProbeConfig::two_mode_canonical(r1, r2, params.phi1(), params.phi2(), t)?;
        let rows = region::boundary_for_config(&probe, &ratios)?;
        let bad = rows.iter().filter(|s| !s.converged).count();
        return Ok((rows, bad));
    }
    let (lo, hi) = (r1.min(r2), r1.max(r2));
    let grid = EnvelopeGrid::matched(
        lo,
        hi,
        params.n_t.unwrap_or(50),
        params.n_phi.unwrap_or(25),
        params.n_ratio.unwrap_or(50),
        params.ratio_span.unwrap_or(100.0),
    )?;
    let env = region::envelope(lo, hi, &grid)?;
    Ok((env.samples, env.unconverged))
}

pub fn region(params: &Params) -> Result<(), Failure> {
    let mut samples = Vec::new();
    let mut unconverged = 0;
    if params.closed_form || params.both {
        samples.extend(closed_form_rows(params)?);
    }
    if !params.closed_form {
        let (rows, bad) = numeric_rows(params)?;
        samples.extend(rows);
        unconverged = bad;
    }
    if unconverged > 0 {
        return Err(Failure::Solver(format!(
            "{unconverged} boundary solves did not converge"
        )));
    }
    samples.sort_by(|a, b| {
        a.v_x
            .total_cmp(&b.v_x)
            .then(a.source.as_str().cmp(b.source.as_str()))
    });
    let rows: Vec<RegionRow> = samples.iter().map(RegionRow::from).collect();
    let bytes = match params.format.unwrap_or(Format::Csv) {
        Format::Csv => output::region_csv(&rows)?,
        Format::Json => output::json_bytes(&rows)?,
    };
    if params.modes()? == 2 {
        let (r1, r2) = params.squeezing_pair()?;
        let res = Resources::new(&[r1, r2]);
        eprintln!(
            "resources: {:.3} dB total, e^(-2r1) e^(-2r2) = {:.6}, beats SQL in both: {}",
            res.total_db, res.resource_product, res.sql_reachable
        );
    }
    output::emit(params.out.as_deref(), &bytes)
}

#[derive(Debug, Serialize)]
struct SimulationRecord {
    scheme: SchemeKind,
    probe: ProbeConfig,
    weights: WeightsRecord,
    transmissivity: f64,
    homodyne_angles: [f64; 2],
    report: SimulationReport,
    bias_sigmas: f64,
    variance_sigmas: f64,
    f_hcr: f64,
    optimal: bool,
    verdict: Verdict,
    acceptance_sigmas: f64,
    pass: bool,
}

pub fn simulate(params: &Params) -> Result<(), Failure> {
    let w = params.weights()?;
    let scheme_kind = params.scheme.unwrap_or(Scheme::Balanced);
    let (spec, optimal) = match scheme_kind {
        Scheme::Balanced => {
            let r = match params.squeezing()? {
                Some(r) => r,
                None => match params.squeezing_pair()? {
                    (a, b) if a == b => a,
                    _ => {
                        return Err(Failure::Config(
                            "the balanced scheme needs equal squeezing".into(),
                        ))
                    }
                },
            };
            let t_opt = closed_forms::balanced_t_star(&w);
            let t = params.t.unwrap_or(t_opt);
            (SchemeSpec::Balanced { r, t }, (t - t_opt).abs() <= 1e-12)
        }
        Scheme::Example1 => {
            let r2 = params.second_squeezing()?.ok_or_else(|| {
                Failure::Config("example1 needs --r2 (or --db2, --r, --db)".into())
            })?;
            let t = params.t.unwrap_or_else(|| closed_forms::example1_t_min(r2));
            (
                SchemeSpec::Example1 {
                    r2,
                    phi2: params.phi2.unwrap_or(0.0),
                    t,
                },
                false,
            )
        }
        Scheme::General => {
            let (r1, r2) = params.squeezing_pair()?;
            let (probe, _) = ProbeConfig::two_mode_canonical(
                r1,
                r2,
                params.phi1(),
                params.phi2(),
                params.t.unwrap_or(0.5),
            )?;
            (SchemeSpec::General { probe, weights: w }, true)
        }
    };
    let shots = params.shots.unwrap_or(100_000);
    if shots < measurement::MIN_SHOTS {
        return Err(Failure::Config(format!(
            "--shots must be at least {}, got {shots}",
            measurement::MIN_SHOTS
        )));
    }
    let (tx, ty) = params.theta()?;
    let probe = spec.probe()?;
    let scheme = measurement::build_scheme(&spec)?;
    let b = solve(build_probe(&probe)?.cov(), &w)?;
    if !b.converged {
        return Err(Failure::Solver(
            "Holevo minimisation did not converge".into(),
        ));
    }
    let report = measurement::run_scheme(
        &scheme,
        &probe,
        ChannelParams::new(tx, ty),
        shots,
        params.seed.unwrap_or(0),
    )?;
    let verdict = measurement::compare_to_bound(&report, b.f_hcr, &w, optimal);
    let (bias_sigmas, variance_sigmas) = (report.bias_sigmas(), report.variance_sigmas());
    let pass =
        verdict.pass && bias_sigmas <= ACCEPTANCE_SIGMAS && variance_sigmas <= ACCEPTANCE_SIGMAS;
    let record = SimulationRecord {
        scheme: scheme.kind,
        probe,
        weights: (&w).into(),
        transmissivity: scheme.transmissivity,
        homodyne_angles: scheme.angles,
        report,
        bias_sigmas,
        variance_sigmas,
        f_hcr: b.f_hcr,
        optimal,
        verdict,
        acceptance_sigmas: ACCEPTANCE_SIGMAS,
        pass,
    };
    output::emit(params.out.as_deref(), &output::json_bytes(&record)?)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Statistical(format!(
            "bias {bias_sigmas:.2}σ, variance {variance_sigmas:.2}σ, bound z {:.2}",
            verdict.z_score
        )))
    }
}
