//! Dual-homodyne measurement schemes and their Monte-Carlo verification.
//!
//! A scheme undoes the probe's mixing beam splitter, homodynes one quadrature on each output
//! mode and combines the two outcomes linearly into estimates of `(θ_x, θ_y)`. Because the
//! two measured quadratures live on different modes they commute, and for a Gaussian state
//! the joint outcome is exactly bivariate normal.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{
    build_probe, ChannelParams, GaussianState, ProbeConfig, SymplecticTransform,
};
use crate::holevo::{self, DualCoefficients, ProductCertificate, Weights};

/// Width of the statistical acceptance band, in standard errors.
pub const ACCEPTANCE_SIGMAS: f64 = 5.0;
/// Fewest shots accepted by [`run_scheme`].
pub const MIN_SHOTS: u64 = 100;
/// Shots per independently seeded work item.
const BATCH: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Example1,
    Balanced,
    General,
}

/// Which scheme to build and with what parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeSpec {
    /// One squeezed state (`r2`, angle `phi2`) mixed with vacuum at transmissivity `t`;
    /// quadratures `phi2 + π/2` and `phi2` measured on the two outputs.
    Example1 { r2: f64, phi2: f64, t: f64 },
    /// Two equally squeezed states (X- and Y-squeezed) mixed at `t`; X measured on mode 1
    /// and Y on mode 2.
    Balanced { r: f64, t: f64 },
    /// Whatever product scheme the optimal Holevo duals of `probe` describe.
    General {
        probe: ProbeConfig,
        weights: Weights,
    },
}

impl SchemeSpec {
    /// Balanced scheme at the transmissivity that is optimal for `w`.
    pub fn balanced_optimal(r: f64, w: &Weights) -> Self {
        SchemeSpec::Balanced {
            r,
            t: crate::closed_forms::balanced_t_star(w),
        }
    }

    /// The probe this scheme is designed to read out.
    pub fn probe(&self) -> Result<ProbeConfig> {
        match *self {
            SchemeSpec::Example1 { r2, phi2, t } => ProbeConfig::two_mode(0.0, r2, 0.0, phi2, t),
            SchemeSpec::Balanced { r, t } => ProbeConfig::two_mode(r, r, 0.0, FRAC_PI_2, t),
            SchemeSpec::General { probe, .. } => Ok(probe),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementScheme {
    pub kind: SchemeKind,
    /// Transmissivity of the probe mixer that the disentangling transform undoes.
    pub transmissivity: f64,
    pub disentangle: SymplecticTransform,
    /// Homodyne angle per output mode: the measured quadrature is `cos α·X + sin α·Y`.
    pub angles: [f64; 2],
    /// `(θ̂_x, θ̂_y) = estimator · (M1, M2)`.
    pub estimator: [[f64; 2]; 2],
}

impl MeasurementScheme {
    fn new(
        kind: SchemeKind,
        transmissivity: f64,
        angles: [f64; 2],
        estimator: [[f64; 2]; 2],
    ) -> Result<Self> {
        let mixer = SymplecticTransform::beam_splitter(1.0 - transmissivity)?;
        let s = MeasurementScheme {
            kind,
            transmissivity,
            disentangle: mixer.inverse(),
            angles,
            estimator,
        };
        if !s.is_unbiased(1e-9) {
            return Err(invalid("estimator is not locally unbiased for this scheme"));
        }
        Ok(s)
    }

    /// Scheme whose two homodyne outcomes span the same observables as `duals`; the estimator
    /// is chosen so that `θ̂_x, θ̂_y` are exactly the dual observables.
    pub(crate) fn from_angles(
        transmissivity: f64,
        angles: [f64; 2],
        duals: &DualCoefficients,
    ) -> Result<Self> {
        let mixer = SymplecticTransform::beam_splitter(1.0 - transmissivity)?;
        let probe = MeasurementScheme {
            kind: SchemeKind::General,
            transmissivity,
            disentangle: mixer.inverse(),
            angles,
            estimator: [[1.0, 0.0], [0.0, 1.0]],
        };
        let m = probe.measurement_vectors();
        // mode-1 parts of the measured vectors; duals have identity mode-1 parts
        let g = nalgebra::Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
        let e = g
            .try_inverse()
            .ok_or_else(|| invalid("homodyne angles do not resolve both quadratures"))?;
        let estimator = [[e[(0, 0)], e[(0, 1)]], [e[(1, 0)], e[(1, 1)]]];
        let targets = [duals.c_x(), duals.c_y()];
        for (row, target) in estimator.iter().zip(targets) {
            for k in 0..4 {
                let got = row[0] * m[0][k] + row[1] * m[1][k];
                if (got - target[k]).abs() > 1e-7 * (1.0 + target[k].abs()) {
                    return Err(invalid("duals are not spanned by the homodyne outcomes"));
                }
            }
        }
        MeasurementScheme::new(SchemeKind::General, transmissivity, angles, estimator)
    }

    /// Quadrature vectors, in probe coordinates, of the two homodyne outcomes.
    pub fn measurement_vectors(&self) -> [[f64; 4]; 2] {
        let d = self.disentangle.matrix();
        let mut out = [[0.0; 4]; 2];
        for (k, row) in out.iter_mut().enumerate() {
            let (s, c) = self.angles[k].sin_cos();
            for (j, v) in row.iter_mut().enumerate() {
                *v = c * d[(2 * k, j)] + s * d[(2 * k + 1, j)];
            }
        }
        out
    }

    /// `∂(M1, M2)/∂(θ_x, θ_y)`.
    pub fn mean_map(&self) -> [[f64; 2]; 2] {
        let m = self.measurement_vectors();
        [[m[0][0], m[0][1]], [m[1][0], m[1][1]]]
    }

    pub fn is_unbiased(&self, tol: f64) -> bool {
        let g = self.mean_map();
        let e = &self.estimator;
        (0..2).all(|i| {
            (0..2).all(|j| {
                let v = e[i][0] * g[0][j] + e[i][1] * g[1][j];
                (v - if i == j { 1.0 } else { 0.0 }).abs() <= tol
            })
        })
    }

    /// `(var θ̂_x, var θ̂_y, cov)` for a probe with covariance `cov`.
    pub fn predicted_variances(&self, cov: &nalgebra::DMatrix<f64>) -> Result<(f64, f64, f64)> {
        if cov.nrows() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: cov.nrows(),
            });
        }
        let m = self.measurement_vectors();
        let mut sm = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                sm[i][j] = (0..4)
                    .map(|a| (0..4).map(|b| m[i][a] * cov[(a, b)] * m[j][b]).sum::<f64>())
                    .sum();
            }
        }
        let e = &self.estimator;
        let v = |p: usize, q: usize| -> f64 {
            (0..2)
                .map(|i| (0..2).map(|j| e[p][i] * sm[i][j] * e[q][j]).sum::<f64>())
                .sum()
        };
        Ok((v(0, 0), v(1, 1), v(0, 1)))
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Infeasible(format!(
            "estimator needs 0 < t < 1, got {t}"
        )));
    }
    Ok(())
}

pub fn build_scheme(spec: &SchemeSpec) -> Result<MeasurementScheme> {
    match *spec {
        SchemeSpec::Example1 { r2, phi2, t } => {
            crate::gaussian::check_squeezing(r2)?;
            check_t(t)?;
            let (s, c) = phi2.sin_cos();
            let (at, bt) = (t.sqrt(), (1.0 - t).sqrt());
            MeasurementScheme::new(
                SchemeKind::Example1,
                t,
                [phi2 + FRAC_PI_2, phi2],
                [[-s / bt, c / at], [c / bt, s / at]],
            )
        }
        SchemeSpec::Balanced { r, t } => {
            crate::gaussian::check_squeezing(r)?;
            check_t(t)?;
            MeasurementScheme::new(
                SchemeKind::Balanced,
                t,
                [0.0, FRAC_PI_2],
                [[1.0 / (1.0 - t).sqrt(), 0.0], [0.0, 1.0 / t.sqrt()]],
            )
        }
        SchemeSpec::General { probe, weights } => {
            if probe.n_modes != 2 {
                return Err(invalid("dual-homodyne schemes need a two-mode probe"));
            }
            let state = build_probe(&probe)?;
            let bound = holevo::solve(state.cov(), &weights)?;
            match holevo::extract_measurement(&bound, state.cov(), &weights)? {
                ProductCertificate::Scheme(s) => Ok(s),
                ProductCertificate::NoProductCertificate { reason } => {
                    Err(Error::Infeasible(reason))
                }
            }
        }
    }
}

/// Joint sampler for homodyne outcomes on each mode of a state.
#[derive(Debug, Clone, Copy)]
pub struct HomodyneSampler {
    n: usize,
    mean: [f64; 2],
    chol: [[f64; 2]; 2],
    cov: [[f64; 2]; 2],
}

impl HomodyneSampler {
    pub fn new(state: &GaussianState, angles: &[f64]) -> Result<Self> {
        let n = state.n_modes();
        if angles.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: angles.len(),
            });
        }
        state.require_physical()?;
        let mut u = [[0.0; 4]; 2];
        for (k, &a) in angles.iter().enumerate() {
            let (s, c) = a.sin_cos();
            u[k][2 * k] = c;
            u[k][2 * k + 1] = s;
        }
        let dim = 2 * n;
        let mut mean = [0.0; 2];
        let mut cov = [[0.0; 2]; 2];
        for i in 0..n {
            mean[i] = (0..dim).map(|a| u[i][a] * state.mean()[a]).sum();
            for j in 0..n {
                cov[i][j] = (0..dim)
                    .map(|a| {
                        (0..dim)
                            .map(|b| u[i][a] * state.cov()[(a, b)] * u[j][b])
                            .sum::<f64>()
                    })
                    .sum();
            }
        }
        let l00 = cov[0][0].max(0.0).sqrt();
        let (l10, l11) = if n == 2 {
            let l10 = if l00 > 0.0 { cov[1][0] / l00 } else { 0.0 };
            (l10, (cov[1][1] - l10 * l10).max(0.0).sqrt())
        } else {
            (0.0, 0.0)
        };
        Ok(HomodyneSampler {
            n,
            mean,
            chol: [[l00, 0.0], [l10, l11]],
            cov,
        })
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn covariance(&self) -> [[f64; 2]; 2] {
        self.cov
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let z0: f64 = StandardNormal.sample(rng);
        if self.n == 1 {
            return [self.mean[0] + self.chol[0][0] * z0, 0.0];
        }
        let z1: f64 = StandardNormal.sample(rng);
        [
            self.mean[0] + self.chol[0][0] * z0,
            self.mean[1] + self.chol[1][0] * z0 + self.chol[1][1] * z1,
        ]
    }
}

/// One joint draw of homodyne outcomes (`angles[k]` on mode `k`).
pub fn homodyne_joint_sample<R: Rng + ?Sized>(
    state: &GaussianState,
    angles: &[f64],
    rng: &mut R,
) -> Result<[f64; 2]> {
    Ok(HomodyneSampler::new(state, angles)?.sample(rng))
}

/// Streaming first and second moments of a pair of variables (Welford / Chan merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct PairMoments {
    n: u64,
    mean: [f64; 2],
    m2: [f64; 2],
    cxy: f64,
}

impl PairMoments {
    fn push(&mut self, x: [f64; 2]) {
        self.n += 1;
        let n = self.n as f64;
        let d0 = x[0] - self.mean[0];
        let d1 = x[1] - self.mean[1];
        self.mean[0] += d0 / n;
        self.mean[1] += d1 / n;
        self.m2[0] += d0 * (x[0] - self.mean[0]);
        self.m2[1] += d1 * (x[1] - self.mean[1]);
        self.cxy += d0 * (x[1] - self.mean[1]);
    }

    fn merge(self, other: PairMoments) -> PairMoments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let (na, nb, nn) = (self.n as f64, other.n as f64, n as f64);
        let d0 = other.mean[0] - self.mean[0];
        let d1 = other.mean[1] - self.mean[1];
        PairMoments {
            n,
            mean: [self.mean[0] + d0 * nb / nn, self.mean[1] + d1 * nb / nn],
            m2: [
                self.m2[0] + other.m2[0] + d0 * d0 * na * nb / nn,
                self.m2[1] + other.m2[1] + d1 * d1 * na * nb / nn,
            ],
            cxy: self.cxy + other.cxy + d0 * d1 * na * nb / nn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub shots: u64,
    pub seed: u64,
    pub theta_true: ChannelParams,
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
    /// Standard errors of the means, `√(var/N)`.
    pub se_mean_x: f64,
    pub se_mean_y: f64,
    /// Standard errors of the sample variances, `var·√(2/(N−1))`.
    pub se_var_x: f64,
    pub se_var_y: f64,
    pub target_var_x: f64,
    pub target_var_y: f64,
}

impl SimulationReport {
    /// Largest bias in units of the standard error of the mean.
    pub fn bias_sigmas(&self) -> f64 {
        let bx = (self.mean_x - self.theta_true.theta_x).abs() / self.se_mean_x;
        let by = (self.mean_y - self.theta_true.theta_y).abs() / self.se_mean_y;
        bx.max(by)
    }

    /// Largest deviation of the empirical variances from their targets, in standard errors.
    pub fn variance_sigmas(&self) -> f64 {
        let dx = (self.var_x - self.target_var_x).abs() / self.se_var_x;
        let dy = (self.var_y - self.target_var_y).abs() / self.se_var_y;
        dx.max(dy)
    }

    /// `w_x v̂_x + w_y v̂_y` and its standard error (Gaussian sampling distribution).
    pub fn weighted_sum(&self, w: &Weights) -> (f64, f64) {
        let n1 = (self.shots - 1) as f64;
        let (wx, wy) = (w.w_x(), w.w_y());
        let sum = wx * self.var_x + wy * self.var_y;
        let var = 2.0 / n1
            * (wx * wx * self.var_x * self.var_x
                + wy * wy * self.var_y * self.var_y
                + 2.0 * wx * wy * self.cov_xy * self.cov_xy);
        (sum, var.sqrt())
    }
}

/// Simulate `shots` rounds of `scheme` reading out `probe` after the channel `theta`.
///
/// Deterministic per `seed`: shots are split into fixed batches, each drawing from its own
/// ChaCha stream, and batch moments are merged in batch order.
pub fn run_scheme(
    scheme: &MeasurementScheme,
    probe: &ProbeConfig,
    theta: ChannelParams,
    shots: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if shots < MIN_SHOTS {
        return Err(invalid(format!(
            "need at least {MIN_SHOTS} shots, got {shots}"
        )));
    }
    if probe.n_modes != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: probe.n_modes,
        });
    }
    let prepared = build_probe(probe)?;
    let (target_var_x, target_var_y, _) = scheme.predicted_variances(prepared.cov())?;
    let state = prepared.displace(theta).apply(&scheme.disentangle)?;
    let sampler = HomodyneSampler::new(&state, &scheme.angles)?;
    let e = scheme.estimator;

    let batches = shots.div_ceil(BATCH);
    let parts: Vec<PairMoments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BATCH.min(shots - b * BATCH);
            let mut acc = PairMoments::default();
            for _ in 0..count {
                let m = sampler.sample(&mut rng);
                acc.push([
                    e[0][0] * m[0] + e[0][1] * m[1],
                    e[1][0] * m[0] + e[1][1] * m[1],
                ]);
            }
            acc
        })
        .collect();
    let total = parts
        .into_iter()
        .fold(PairMoments::default(), PairMoments::merge);

    let n = total.n as f64;
    let var_x = total.m2[0] / (n - 1.0);
    let var_y = total.m2[1] / (n - 1.0);
    let k = (2.0 / (n - 1.0)).sqrt();
    Ok(SimulationReport {
        shots,
        seed,
        theta_true: theta,
        mean_x: total.mean[0],
        mean_y: total.mean[1],
        var_x,
        var_y,
        cov_xy: total.cxy / (n - 1.0),
        se_mean_x: (var_x / n).sqrt(),
        se_mean_y: (var_y / n).sqrt(),
        se_var_x: var_x * k,
        se_var_y: var_y * k,
        target_var_x,
        target_var_y,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub weighted_sum: f64,
    pub standard_error: f64,
    pub bound: f64,
    /// `(weighted_sum − bound) / standard_error`.
    pub z_score: f64,
    /// Empirical weighted sum statistically below the bound (never allowed).
    pub violates_bound: bool,
    /// Within the acceptance band around the bound.
    pub saturates: bool,
    /// Statistically above the bound.
    pub above_bound: bool,
    pub pass: bool,
}

/// Compare empirical variances with a Holevo bound. When `optimal` is set the scheme must
/// also saturate the bound; otherwise only the no-violation side is checked.
pub fn compare_to_bound(
    report: &SimulationReport,
    bound: f64,
    w: &Weights,
    optimal: bool,
) -> Verdict {
    let (weighted_sum, standard_error) = report.weighted_sum(w);
    let z_score = (weighted_sum - bound) / standard_error;
    let violates_bound = z_score < -ACCEPTANCE_SIGMAS;
    let above_bound = z_score > ACCEPTANCE_SIGMAS;
    let saturates = !violates_bound && !above_bound;
    Verdict {
        weighted_sum,
        standard_error,
        bound,
        z_score,
        violates_bound,
        saturates,
        above_bound,
        pass: !violates_bound && (!optimal || saturates),
    }
}
