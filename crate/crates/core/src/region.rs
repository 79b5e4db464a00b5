//! Accessible `(v_x, v_y)` regions.
//!
//! For a fixed probe, each weight ratio gives a supporting line `w_x v_x + w_y v_y = f(W)` of
//! the accessible region, touching it at `(∂f/∂w_x, ∂f/∂w_y)`. Sweeping probes and ratios and
//! keeping the lowest `v_y` per `v_x` bin reconstructs the overall envelope.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_forms::{self, Segment};
use crate::error::{invalid, Result};
use crate::gaussian::{build_probe, ProbeConfig};
use crate::holevo::{PreparedProbe, Weights};

/// Relative step of the central differences in the weights.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    NumericSolver,
    ClosedForm,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::NumericSolver => "numeric-solver",
            Source::ClosedForm => "closed-form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    pub v_x: f64,
    pub v_y: f64,
    pub segment: Option<Segment>,
    pub source: Source,
    pub t: f64,
    pub phi1: f64,
    pub w_ratio: f64,
    /// All solves behind this sample converged.
    pub converged: bool,
}

/// Tangency point of the bound line for weights `w`, by central differences in each weight.
pub fn tangency(probe: &PreparedProbe, w: &Weights) -> Result<(f64, f64, bool)> {
    if w.is_degenerate() {
        return Err(invalid(
            "tangency by relative differences needs both weights positive",
        ));
    }
    let (wx, wy) = (w.w_x(), w.w_y());
    let bound = |a: f64, b: f64| -> Result<(f64, bool)> {
        let r = probe.solve(&Weights::new(a, b)?)?;
        Ok((r.f_hcr, r.converged))
    };
    let (xp, c1) = bound(wx * (1.0 + FD_STEP), wy)?;
    let (xm, c2) = bound(wx * (1.0 - FD_STEP), wy)?;
    let (yp, c3) = bound(wx, wy * (1.0 + FD_STEP))?;
    let (ym, c4) = bound(wx, wy * (1.0 - FD_STEP))?;
    Ok((
        (xp - xm) / (2.0 * FD_STEP * wx),
        (yp - ym) / (2.0 * FD_STEP * wy),
        c1 && c2 && c3 && c4,
    ))
}

fn check_ratios(ratios: &[f64]) -> Result<()> {
    if ratios.is_empty() {
        return Err(invalid("weight grid is empty"));
    }
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(invalid(format!(
            "weight ratios must be finite and positive, got {r}"
        )));
    }
    Ok(())
}

/// Sort by `v_x` and keep only points that lower `v_y`, leaving a strictly decreasing polyline.
pub fn lower_left_boundary(mut samples: Vec<RegionSample>) -> Vec<RegionSample> {
    samples.sort_by(|a, b| a.v_x.total_cmp(&b.v_x).then(a.v_y.total_cmp(&b.v_y)));
    let mut out: Vec<RegionSample> = Vec::with_capacity(samples.len());
    for s in samples {
        if out.last().is_none_or(|last| s.v_y < last.v_y) {
            out.push(s);
        }
    }
    out
}

fn cross(o: &RegionSample, a: &RegionSample, b: &RegionSample) -> f64 {
    (a.v_x - o.v_x) * (b.v_y - o.v_y) - (a.v_y - o.v_y) * (b.v_x - o.v_x)
}

/// Lower convex hull of samples sorted by `v_x`.
pub fn lower_convex_hull(sorted: Vec<RegionSample>) -> Vec<RegionSample> {
    let mut hull: Vec<RegionSample> = Vec::with_capacity(sorted.len());
    for s in sorted {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &s) <= 0.0 {
            hull.pop();
        }
        hull.push(s);
    }
    hull
}

fn sample_at(prepared: &PreparedProbe, probe: &ProbeConfig, ratio: f64) -> Result<RegionSample> {
    let (v_x, v_y, converged) = tangency(prepared, &Weights::from_ratio(ratio)?)?;
    Ok(RegionSample {
        v_x,
        v_y,
        segment: None,
        source: Source::NumericSolver,
        t: probe.t,
        phi1: probe.phi1,
        w_ratio: ratio,
        converged,
    })
}

fn config_samples(probe: &ProbeConfig, ratios: &[f64]) -> Result<Vec<RegionSample>> {
    let prepared = PreparedProbe::new(build_probe(probe)?.cov())?;
    ratios
        .iter()
        .map(|&ratio| sample_at(&prepared, probe, ratio))
        .collect()
}

/// Lower-left boundary of the region reachable by one probe, sampled at the given
/// `w_x / w_y` ratios.
pub fn boundary_for_config(probe: &ProbeConfig, ratios: &[f64]) -> Result<Vec<RegionSample>> {
    check_ratios(ratios)?;
    let prepared = PreparedProbe::new(build_probe(probe)?.cov())?;
    let samples = ratios
        .par_iter()
        .map(|&ratio| sample_at(&prepared, probe, ratio))
        .collect::<Result<Vec<_>>>()?;
    Ok(lower_left_boundary(samples))
}

/// Sweep grids for [`envelope`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeGrid {
    pub t: Vec<f64>,
    pub phi1: Vec<f64>,
    /// `w_x / w_y` values.
    pub ratios: Vec<f64>,
    /// Values of `φ2 − φ1`; `[π/2]` unless sweeping the second angle as well.
    pub phi2_offsets: Vec<f64>,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

impl EnvelopeGrid {
    /// Uniform `t` on `[t_lo, t_hi]`, uniform `φ1` on `[0, π/2]`, log-spaced ratios on
    /// `[1/ratio_span, ratio_span]`, `φ2 = φ1 + π/2`.
    pub fn uniform(
        n_t: usize,
        t_lo: f64,
        t_hi: f64,
        n_phi: usize,
        n_ratio: usize,
        ratio_span: f64,
    ) -> Self {
        EnvelopeGrid {
            t: linspace(t_lo, t_hi, n_t),
            phi1: linspace(0.0, FRAC_PI_2, n_phi),
            ratios: logspace(1.0 / ratio_span, ratio_span, n_ratio),
            phi2_offsets: vec![FRAC_PI_2],
        }
    }

    /// Like [`uniform`](Self::uniform) but with the transmissivities placed where the weight
    /// grid makes each probe optimal: `t*(ρ)` for the ratios `ρ ∈ [1/ratio_span, 1]` that
    /// the `t` grid is spread over, log-spaced.
    pub fn matched(
        r1: f64,
        r2: f64,
        n_t: usize,
        n_phi: usize,
        n_ratio: usize,
        ratio_span: f64,
    ) -> Result<Self> {
        let t = logspace(1.0 / ratio_span, 1.0, n_t)
            .into_iter()
            .map(|rho| closed_forms::t_star(&Weights::from_ratio(rho)?, r1, r2))
            .collect::<Result<Vec<_>>>()?;
        Ok(EnvelopeGrid {
            t,
            ..Self::uniform(0, 0.0, 1.0, n_phi, n_ratio, ratio_span)
        })
    }

    pub fn with_phi2_sweep(mut self, offsets: Vec<f64>) -> Self {
        self.phi2_offsets = offsets;
        self
    }

    fn check(&self) -> Result<()> {
        if self.t.is_empty() || self.phi1.is_empty() || self.phi2_offsets.is_empty() {
            return Err(invalid("envelope grids must be nonempty"));
        }
        if let Some(t) = self.t.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(invalid(format!("transmissivity {t} outside [0, 1]")));
        }
        check_ratios(&self.ratios)
    }
}

/// Pointwise-minimum envelope of many probe boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// Lower convex hull of the swept samples inside `bin_range`, sorted by `v_x`.
    pub samples: Vec<RegionSample>,
    /// Number of raw boundary samples swept.
    pub swept: usize,
    /// Number of raw samples whose solves did not all converge.
    pub unconverged: usize,
    /// `v_x` window `[lo, hi)` the samples were taken from.
    pub bin_range: (f64, f64),
}

impl Envelope {
    /// Linear interpolation of the polyline; `None` outside its `v_x` span.
    pub fn value_at(&self, v_x: f64) -> Option<f64> {
        let s = &self.samples;
        let first = s.first()?;
        let last = s.last()?;
        if v_x < first.v_x || v_x > last.v_x {
            return None;
        }
        let k = s.partition_point(|p| p.v_x <= v_x);
        if k == 0 {
            return Some(first.v_y);
        }
        if k == s.len() {
            return Some(last.v_y);
        }
        let (a, b) = (&s[k - 1], &s[k]);
        let u = (v_x - a.v_x) / (b.v_x - a.v_x);
        Some(a.v_y + u * (b.v_y - a.v_y))
    }

    /// Smallest sampled `v_y` among samples with `v_x` at most the argument.
    pub fn staircase_at(&self, v_x: f64) -> Option<f64> {
        self.samples
            .iter()
            .take_while(|p| p.v_x <= v_x)
            .map(|p| p.v_y)
            .reduce(f64::min)
    }

    /// Span of `v_x` covered by the polyline.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.v_x, self.samples.last()?.v_x))
    }
}

/// `v_x` window of the envelope, `[1.001·e^{−2r2}, 10·e^{2r2}]`.
pub fn envelope_bins(r2: f64) -> (f64, f64) {
    (1.001 * (-2.0 * r2).exp(), 10.0 * (2.0 * r2).exp())
}

/// Sweep every `(t, φ1, φ2 − φ1)` probe over the weight grid and reduce the samples inside
/// the `v_x` window to their lower convex hull.
///
/// The closed-form envelope is convex, so the hull of achievable points never falls below it,
/// and every sample lying on the envelope survives as a hull vertex. A per-bin minimum would
/// instead keep whichever sample sits furthest right in each bin.
pub fn envelope(r1: f64, r2: f64, grid: &EnvelopeGrid) -> Result<Envelope> {
    grid.check()?;
    if r1 > r2 {
        return Err(invalid(format!(
            "expected r1 <= r2, got r1 = {r1}, r2 = {r2}"
        )));
    }
    let mut configs = Vec::with_capacity(grid.t.len() * grid.phi1.len() * grid.phi2_offsets.len());
    for &t in &grid.t {
        for &phi1 in &grid.phi1 {
            for &off in &grid.phi2_offsets {
                configs.push(ProbeConfig::two_mode(r1, r2, phi1, phi1 + off, t)?);
            }
        }
    }
    let per_config: Vec<Vec<RegionSample>> = configs
        .par_iter()
        .map(|c| config_samples(c, &grid.ratios))
        .collect::<Result<_>>()?;

    let (lo, hi) = envelope_bins(r2);
    let mut swept = 0;
    let mut unconverged = 0;
    let mut kept = Vec::new();
    for s in per_config.into_iter().flatten() {
        swept += 1;
        if !s.converged {
            unconverged += 1;
        }
        if s.v_x >= lo && s.v_x < hi {
            kept.push(s);
        }
    }
    let samples = lower_convex_hull(lower_left_boundary(kept));
    Ok(Envelope {
        samples,
        swept,
        unconverged,
        bin_range: (lo, hi),
    })
}

/// Closed-form envelope sampled at the given `v_x` values.
pub fn closed_form_envelope(r1: f64, r2: f64, v_x: &[f64]) -> Result<Vec<RegionSample>> {
    v_x.iter()
        .map(|&x| {
            let p = closed_forms::two_mode_envelope(x, r1, r2)?;
            Ok(RegionSample {
                v_x: p.v_x,
                v_y: p.v_y,
                segment: Some(p.segment),
                source: Source::ClosedForm,
                t: f64::NAN,
                phi1: f64::NAN,
                w_ratio: f64::NAN,
                converged: true,
            })
        })
        .collect()
}

/// Single-mode tradeoff `v_y = v_b + 1/(v_x − v_a)` sampled at the given `v_x` values.
pub fn closed_form_single_mode(r: f64, phi: f64, v_x: &[f64]) -> Result<Vec<RegionSample>> {
    v_x.iter()
        .map(|&x| {
            Ok(RegionSample {
                v_x: x,
                v_y: closed_forms::single_mode_tradeoff(x, r, phi)?,
                segment: None,
                source: Source::ClosedForm,
                t: f64::NAN,
                phi1: phi,
                w_ratio: f64::NAN,
                converged: true,
            })
        })
        .collect()
}

/// Whether the two-mode envelope beats the standard quantum limit, with a witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqlFeasibility {
    /// Some envelope point has `v_x v_y < 1`; equivalent to `e^{−2r1} e^{−2r2} < 1/4`.
    pub feasible: bool,
    /// `e^{−2r1} e^{−2r2}`.
    pub resource_product: f64,
    /// The envelope point of smallest product, `(2e^{−2r2}, 2e^{−2r1})`, when feasible.
    pub witness: Option<(f64, f64)>,
    /// Some envelope point has both `v_x < 1` and `v_y < 1`, i.e. `(e^{−r1} + e^{−r2})² < 2`.
    pub both_below_one: bool,
    /// The symmetric envelope point, when it lies below 1 in both variances.
    pub both_below_one_witness: Option<(f64, f64)>,
}

pub fn sql_feasible(r1: f64, r2: f64) -> Result<SqlFeasibility> {
    let c = closed_forms::scalar_corollaries(r1, r2)?;
    let (r1, r2) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    let (e1, e2) = ((-2.0 * r1).exp(), (-2.0 * r2).exp());
    let witness = c.sql_feasible.then(|| {
        let x = 2.0 * e2;
        (
            x,
            closed_forms::two_mode_envelope(x, r1, r2).map_or(2.0 * e1, |p| p.v_y),
        )
    });
    let s = (-r1).exp() + (-r2).exp();
    let mid = 0.5 * s * s;
    let both_below_one = mid < 1.0;
    Ok(SqlFeasibility {
        feasible: c.sql_feasible,
        resource_product: c.resource_product,
        witness,
        both_below_one,
        both_below_one_witness: both_below_one.then_some((mid, mid)),
    })
}
