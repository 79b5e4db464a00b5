//! Holevo bound on `w_x v_x + w_y v_y` for displacement estimation with Gaussian probes.
//!
//! The dual observables are linear in the quadratures, `𝒳_j = c_j · R`. Local unbiasedness
//! pins the mode-1 coefficients (`c_x = (1, 0, ·, ·)`, `c_y = (0, 1, ·, ·)`), leaving the
//! ancilla coefficients `(a, b, c, d)` free for two-mode probes and nothing free for a single
//! mode. With `Z_jk = c_jᵀ (Σ + iΩ) c_k` the objective is
//!
//! ```text
//! h = w_x·c_xᵀΣc_x + w_y·c_yᵀΣc_y + 2√(w_x w_y)·|c_xᵀΩc_y|
//! ```
//!
//! Two-mode minimisation runs Nelder–Mead from several starts. One start comes from the
//! Lagrangian dual `max_{|μ|≤1} min_x [quadratic part + 2√(w_x w_y)·μ·c_xᵀΩc_y]`, which is a
//! 1-D concave problem solved by bisection; its value is a certified lower bound, so the
//! multi-start loop can stop as soon as the primal value meets it.

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector2, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::GaussianState;
use crate::measurement::MeasurementScheme;
use crate::optim::NelderMead;

/// Relative weights attached to the two mean squared errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    w_x: f64,
    w_y: f64,
}

impl Weights {
    pub fn new(w_x: f64, w_y: f64) -> Result<Self> {
        if !(w_x.is_finite() && w_y.is_finite()) || w_x < 0.0 || w_y < 0.0 || w_x + w_y <= 0.0 {
            return Err(invalid(format!(
                "weights must be finite, >= 0 and not both zero (got {w_x}, {w_y})"
            )));
        }
        Ok(Weights { w_x, w_y })
    }

    /// Weights with `w_x / w_y = ratio`, normalised to `w_x + w_y = 1`.
    /// `ratio = ∞` gives `(1, 0)`.
    pub fn from_ratio(ratio: f64) -> Result<Self> {
        if ratio.is_nan() || ratio < 0.0 {
            return Err(invalid(format!("weight ratio must be >= 0, got {ratio}")));
        }
        if ratio.is_infinite() {
            return Self::new(1.0, 0.0);
        }
        Self::new(ratio / (1.0 + ratio), 1.0 / (1.0 + ratio))
    }

    pub fn w_x(&self) -> f64 {
        self.w_x
    }

    pub fn w_y(&self) -> f64 {
        self.w_y
    }

    /// `w_x / w_y` (infinite when `w_y = 0`).
    pub fn ratio(&self) -> f64 {
        if self.w_y == 0.0 {
            f64::INFINITY
        } else {
            self.w_x / self.w_y
        }
    }

    /// `√(w_x w_y)`, the coefficient of the commutator term.
    pub fn cross(&self) -> f64 {
        (self.w_x * self.w_y).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(c * self.w_x, c * self.w_y)
    }

    pub fn swapped(&self) -> Self {
        Weights {
            w_x: self.w_y,
            w_y: self.w_x,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.w_x == 0.0 || self.w_y == 0.0
    }
}

/// Coefficients of the two dual observables on `(X1, Y1[, X2, Y2])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCoefficients {
    c_x: Vec<f64>,
    c_y: Vec<f64>,
}

impl DualCoefficients {
    pub fn single_mode() -> Self {
        DualCoefficients {
            c_x: vec![1.0, 0.0],
            c_y: vec![0.0, 1.0],
        }
    }

    /// `c_x = (1, 0, a, b)`, `c_y = (0, 1, c, d)` from `free = (a, b, c, d)`.
    pub fn two_mode(free: [f64; 4]) -> Result<Self> {
        if free.iter().any(|v| !v.is_finite()) {
            return Err(invalid("dual coefficients must be finite"));
        }
        let [a, b, c, d] = free;
        Ok(DualCoefficients {
            c_x: vec![1.0, 0.0, a, b],
            c_y: vec![0.0, 1.0, c, d],
        })
    }

    pub fn n_modes(&self) -> usize {
        self.c_x.len() / 2
    }

    pub fn c_x(&self) -> &[f64] {
        &self.c_x
    }

    pub fn c_y(&self) -> &[f64] {
        &self.c_y
    }

    /// The free ancilla coefficients `(a, b, c, d)`, if any.
    pub fn free(&self) -> Option<[f64; 4]> {
        (self.n_modes() == 2).then(|| [self.c_x[2], self.c_x[3], self.c_y[2], self.c_y[3]])
    }
}

/// Shape of the locally unbiased dual observables for a given number of modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintShape {
    pub n_modes: usize,
    /// Number of unconstrained coefficients.
    pub n_free: usize,
}

impl ConstraintShape {
    pub fn duals(&self, free: &[f64]) -> Result<DualCoefficients> {
        if free.len() != self.n_free {
            return Err(Error::DimensionMismatch {
                expected: self.n_free,
                got: free.len(),
            });
        }
        match self.n_modes {
            1 => Ok(DualCoefficients::single_mode()),
            _ => DualCoefficients::two_mode([free[0], free[1], free[2], free[3]]),
        }
    }
}

/// Constrained form of the dual observables.
///
/// For `D(θ) = exp(iθ_y X/2 − iθ_x Y/2)` the derivative of `⟨c·R⟩` with respect to `θ_x`
/// (`θ_y`) is the `X1` (`Y1`) coefficient, so unbiasedness fixes those four entries and
/// nothing else. Zero-mean probes satisfy `tr(ρ𝒳) = 0` automatically.
pub fn unbiased_constraints(n_modes: usize) -> Result<ConstraintShape> {
    match n_modes {
        1 => Ok(ConstraintShape {
            n_modes: 1,
            n_free: 0,
        }),
        2 => Ok(ConstraintShape {
            n_modes: 2,
            n_free: 4,
        }),
        n => Err(invalid(format!("unsupported number of modes: {n}"))),
    }
}

fn quad(cov: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += u[i] * cov[(i, j)] * v[j];
        }
    }
    acc
}

fn symplectic_product(u: &[f64], v: &[f64]) -> f64 {
    u.chunks(2)
        .zip(v.chunks(2))
        .map(|(p, q)| p[0] * q[1] - p[1] * q[0])
        .sum()
}

fn check_dims(cov: &DMatrix<f64>, duals: &DualCoefficients) -> Result<()> {
    if cov.nrows() != duals.c_x.len() || cov.ncols() != duals.c_x.len() {
        return Err(Error::DimensionMismatch {
            expected: duals.c_x.len(),
            got: cov.nrows(),
        });
    }
    Ok(())
}

/// `(Re Z, Im Z)` for the given duals.
pub fn z_matrices(
    cov: &DMatrix<f64>,
    duals: &DualCoefficients,
) -> Result<([[f64; 2]; 2], [[f64; 2]; 2])> {
    check_dims(cov, duals)?;
    let xx = quad(cov, &duals.c_x, &duals.c_x);
    let yy = quad(cov, &duals.c_y, &duals.c_y);
    let xy = quad(cov, &duals.c_x, &duals.c_y);
    let im = symplectic_product(&duals.c_x, &duals.c_y);
    Ok(([[xx, xy], [xy, yy]], [[0.0, im], [-im, 0.0]]))
}

/// The Holevo function `h` at the given duals.
pub fn objective(cov: &DMatrix<f64>, w: &Weights, duals: &DualCoefficients) -> Result<f64> {
    let (re, im) = z_matrices(cov, duals)?;
    Ok(w.w_x * re[0][0] + w.w_y * re[1][1] + 2.0 * w.cross() * im[0][1].abs())
}

/// How a bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Single mode: the constraints fix the duals completely.
    SingleModeClosed,
    /// One weight is zero: a linear least-squares problem.
    SingleParameter,
    /// Two modes, both weights positive: multi-start simplex search.
    MultiStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub f_hcr: f64,
    pub duals: DualCoefficients,
    pub z_real: [[f64; 2]; 2],
    pub z_imag: [[f64; 2]; 2],
    pub converged: bool,
    /// Objective evaluations spent.
    pub iterations: usize,
    /// Certified lower bound from the Lagrangian dual, when one was computed.
    pub lower_bound: Option<f64>,
    pub method: SolveMethod,
}

impl BoundResult {
    fn from_duals(
        cov: &DMatrix<f64>,
        w: &Weights,
        duals: DualCoefficients,
        converged: bool,
        iterations: usize,
        lower_bound: Option<f64>,
        method: SolveMethod,
    ) -> Result<Self> {
        let (z_real, z_imag) = z_matrices(cov, &duals)?;
        let f_hcr =
            w.w_x * z_real[0][0] + w.w_y * z_real[1][1] + 2.0 * w.cross() * z_imag[0][1].abs();
        Ok(BoundResult {
            f_hcr,
            duals,
            z_real,
            z_imag,
            converged,
            iterations,
            lower_bound,
            method,
        })
    }

    /// `Im Z_12 = c_xᵀ Ω c_y`.
    pub fn commutator(&self) -> f64 {
        self.z_imag[0][1]
    }

    /// Variances at which the bound line `w_x v_x + w_y v_y = f_hcr` touches the accessible
    /// region (gradient of the bound with respect to the weights).
    ///
    /// With one weight zero, the other variance is finite only when the optimal duals commute.
    pub fn tangent_variances(&self, w: &Weights) -> (f64, f64) {
        let im = self.commutator().abs();
        let x = self.z_real[0][0];
        let y = self.z_real[1][1];
        match (w.w_x > 0.0, w.w_y > 0.0) {
            (true, true) => (
                x + (w.w_y / w.w_x).sqrt() * im,
                y + (w.w_x / w.w_y).sqrt() * im,
            ),
            (true, false) => (x, if im <= 1e-12 { y } else { f64::INFINITY }),
            (false, true) => (if im <= 1e-12 { x } else { f64::INFINITY }, y),
            (false, false) => unreachable!("weights are never both zero"),
        }
    }
}

/// Knobs for [`solve_with`].
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Minimum number of local searches (at least 8 are always run unless certified).
    pub starts: usize,
    /// Extra user-supplied starting points `(a, b, c, d)`, tried first after the dual point.
    pub seeds: Vec<[f64; 4]>,
    /// Re-polish rounds per start before giving up.
    pub max_restarts: usize,
    /// A start has converged once a restart improves the objective by less than this.
    pub improvement_tol: f64,
    /// Stop the multi-start loop once `best − lower_bound ≤ certify_tol · max(1, best)`.
    /// `None` runs every start.
    pub certify_tol: Option<f64>,
    /// Seed for the randomised starts.
    pub rng_seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            starts: 8,
            seeds: Vec::new(),
            max_restarts: 50,
            improvement_tol: 1e-12,
            certify_tol: Some(1e-12),
            rng_seed: 0x5eed,
        }
    }
}

impl SolverOptions {
    pub fn exhaustive() -> Self {
        SolverOptions {
            certify_tol: None,
            ..Default::default()
        }
    }

    pub fn with_seed_point(mut self, free: [f64; 4]) -> Self {
        self.seeds.push(free);
        self
    }
}

/// Closed form for a single-mode probe: `w_x Σ11 + w_y Σ22 + 2√(w_x w_y)`.
pub fn single_mode_closed(cov: &DMatrix<f64>, w: &Weights) -> Result<BoundResult> {
    if cov.nrows() != 2 || cov.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: cov.nrows(),
        });
    }
    BoundResult::from_duals(
        cov,
        w,
        DualCoefficients::single_mode(),
        true,
        0,
        None,
        SolveMethod::SingleModeClosed,
    )
}

/// Holevo bound with default options.
pub fn solve(cov: &DMatrix<f64>, w: &Weights) -> Result<BoundResult> {
    solve_with(cov, w, &SolverOptions::default())
}

pub fn solve_state(state: &GaussianState, w: &Weights) -> Result<BoundResult> {
    state.require_physical()?;
    solve(state.cov(), w)
}

pub fn solve_with(cov: &DMatrix<f64>, w: &Weights, opts: &SolverOptions) -> Result<BoundResult> {
    PreparedProbe::new(cov)?.solve_with(w, opts)
}

/// A validated probe covariance, for solving repeatedly under different weights.
#[derive(Debug, Clone)]
pub struct PreparedProbe {
    cov: DMatrix<f64>,
}

impl PreparedProbe {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let n = cov.nrows();
        if !cov.is_square() || !(n == 2 || n == 4) {
            return Err(invalid(format!(
                "covariance must be 2x2 or 4x4, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        GaussianState::new(nalgebra::DVector::zeros(n), cov.clone())?.require_physical()?;
        Ok(PreparedProbe { cov: cov.clone() })
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn solve(&self, w: &Weights) -> Result<BoundResult> {
        self.solve_with(w, &SolverOptions::default())
    }

    pub fn solve_with(&self, w: &Weights, opts: &SolverOptions) -> Result<BoundResult> {
        let cov = &self.cov;
        if cov.nrows() == 2 {
            return single_mode_closed(cov, w);
        }
        let problem = TwoModeProblem::new(cov, w)?;
        if w.is_degenerate() {
            let free = problem.single_parameter();
            let duals = DualCoefficients::two_mode(free)?;
            return BoundResult::from_duals(
                cov,
                w,
                duals,
                true,
                0,
                None,
                SolveMethod::SingleParameter,
            );
        }
        problem.multi_start(cov, w, opts)
    }
}

/// Lagrangian-dual certificate for a two-mode problem with both weights positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualCertificate {
    /// Multiplier `μ ∈ [−1, 1]` on the commutator term.
    pub multiplier: f64,
    /// `g(μ)`, a lower bound on the Holevo bound.
    pub lower_bound: f64,
    /// Minimiser of the Lagrangian at `μ`.
    pub free: [f64; 4],
}

pub fn dual_certificate(cov: &DMatrix<f64>, w: &Weights) -> Result<DualCertificate> {
    if cov.nrows() != 4 || cov.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: cov.nrows(),
        });
    }
    if w.is_degenerate() {
        return Err(invalid("dual certificate needs both weights positive"));
    }
    TwoModeProblem::new(cov, w)?.dual().ok_or_else(|| {
        Error::NotConverged("Lagrangian is unbounded below for every multiplier".into())
    })
}

/// Fixed-size view of a two-mode problem for fast repeated evaluation.
struct TwoModeProblem {
    s: [[f64; 4]; 4],
    wx: f64,
    wy: f64,
    cross: f64,
    /// Ancilla block of the covariance.
    b: Matrix2<f64>,
    /// Correlations of X1 and Y1 with the ancilla quadratures.
    px: Vector2<f64>,
    py: Vector2<f64>,
}

impl TwoModeProblem {
    fn new(cov: &DMatrix<f64>, w: &Weights) -> Result<Self> {
        let mut s = [[0.0; 4]; 4];
        for (i, row) in s.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = cov[(i, j)];
            }
        }
        let b = Matrix2::new(s[2][2], s[2][3], s[3][2], s[3][3]);
        if b.cholesky().is_none() {
            return Err(invalid("ancilla covariance block is not positive definite"));
        }
        Ok(TwoModeProblem {
            s,
            wx: w.w_x,
            wy: w.w_y,
            cross: w.cross(),
            b,
            px: Vector2::new(s[0][2], s[0][3]),
            py: Vector2::new(s[1][2], s[1][3]),
        })
    }

    fn q_x(&self, a: f64, b: f64) -> f64 {
        let s = &self.s;
        s[0][0]
            + 2.0 * (a * s[0][2] + b * s[0][3])
            + a * a * s[2][2]
            + 2.0 * a * b * s[2][3]
            + b * b * s[3][3]
    }

    fn q_y(&self, c: f64, d: f64) -> f64 {
        let s = &self.s;
        s[1][1]
            + 2.0 * (c * s[1][2] + d * s[1][3])
            + c * c * s[2][2]
            + 2.0 * c * d * s[2][3]
            + d * d * s[3][3]
    }

    fn commutator(x: &[f64; 4]) -> f64 {
        1.0 + x[0] * x[3] - x[1] * x[2]
    }

    fn value(&self, x: &[f64; 4]) -> f64 {
        self.wx * self.q_x(x[0], x[1])
            + self.wy * self.q_y(x[2], x[3])
            + 2.0 * self.cross * Self::commutator(x).abs()
    }

    /// Per-quadrature regression on the ancilla, ignoring the commutator term.
    fn regression(&self) -> [f64; 4] {
        let binv = self.b.try_inverse().expect("checked positive definite");
        let u = -(binv * self.px);
        let v = -(binv * self.py);
        [u[0], u[1], v[0], v[1]]
    }

    /// Minimise `q(v)` subject to `k·v = −1` (commuting with the other dual).
    fn constrained_min(&self, k: Vector2<f64>, p: Vector2<f64>) -> Option<Vector2<f64>> {
        let binv = self.b.try_inverse()?;
        let denom = k.dot(&(binv * k));
        if denom <= 1e-300 {
            return None;
        }
        let half_nu = (-1.0 + k.dot(&(binv * p))) / denom;
        Some(binv * (k * half_nu - p))
    }

    /// Exact optimum when one weight vanishes; the idle dual is chosen to commute with the
    /// active one when possible, which gives the smallest companion variance.
    fn single_parameter(&self) -> [f64; 4] {
        let reg = self.regression();
        if self.wy == 0.0 {
            let (a, b) = (reg[0], reg[1]);
            // 1 + a d − b c = 0  ⇔  (−b, a)·(c, d) = −1
            match self.constrained_min(Vector2::new(-b, a), self.py) {
                Some(v) => [a, b, v[0], v[1]],
                None => reg,
            }
        } else {
            let (c, d) = (reg[2], reg[3]);
            // (d, −c)·(a, b) = −1
            match self.constrained_min(Vector2::new(d, -c), self.px) {
                Some(u) => [u[0], u[1], c, d],
                None => reg,
            }
        }
    }

    /// Minimiser of the Lagrangian at multiplier `mu`, if the quadratic is positive definite.
    fn lagrangian_point(&self, mu: f64) -> Option<[f64; 4]> {
        let (wx, wy, k) = (self.wx, self.wy, self.cross * mu);
        let b = &self.b;
        #[rustfmt::skip]
        let h = Matrix4::new(
            wx * b[(0, 0)], wx * b[(0, 1)], 0.0, k,
            wx * b[(1, 0)], wx * b[(1, 1)], -k, 0.0,
            0.0, -k, wy * b[(0, 0)], wy * b[(0, 1)],
            k, 0.0, wy * b[(1, 0)], wy * b[(1, 1)],
        );
        let rhs = -Vector4::new(
            wx * self.px[0],
            wx * self.px[1],
            wy * self.py[0],
            wy * self.py[1],
        );
        let x = h.cholesky()?.solve(&rhs);
        Some([x[0], x[1], x[2], x[3]])
    }

    fn lagrangian(&self, x: &[f64; 4], mu: f64) -> f64 {
        self.wx * self.q_x(x[0], x[1])
            + self.wy * self.q_y(x[2], x[3])
            + 2.0 * self.cross * mu * Self::commutator(x)
    }

    /// Maximise the concave dual `g(μ)` over `[−1, 1]`; `g'(μ) ∝ commutator(x(μ))`.
    fn dual(&self) -> Option<DualCertificate> {
        let certificate = |mu: f64, x: [f64; 4]| DualCertificate {
            multiplier: mu,
            lower_bound: self.lagrangian(&x, mu),
            free: x,
        };
        if let Some(x) = self.lagrangian_point(1.0) {
            if Self::commutator(&x) >= 0.0 {
                return Some(certificate(1.0, x));
            }
        }
        if let Some(x) = self.lagrangian_point(-1.0) {
            if Self::commutator(&x) <= 0.0 {
                return Some(certificate(-1.0, x));
            }
        }
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match self.lagrangian_point(mid) {
                // outside the positive-definite window the dual is −∞; the window is symmetric
                None if mid > 0.0 => hi = mid,
                None => lo = mid,
                Some(x) if Self::commutator(&x) > 0.0 => lo = mid,
                Some(_) => hi = mid,
            }
        }
        // whichever end gives the larger dual value
        [lo, hi]
            .into_iter()
            .filter_map(|mu| self.lagrangian_point(mu).map(|x| certificate(mu, x)))
            .max_by(|p, q| p.lower_bound.total_cmp(&q.lower_bound))
    }

    fn local_search(
        &self,
        start: [f64; 4],
        step: f64,
        opts: &SolverOptions,
        evals: &mut usize,
    ) -> ([f64; 4], f64, bool) {
        let f = |x: &[f64; 4]| self.value(x);
        let mut nm = NelderMead {
            initial_step: step,
            ..Default::default()
        };
        let mut m = nm.minimize(f, start);
        *evals += m.evaluations;
        for _ in 0..opts.max_restarts {
            nm.initial_step = (nm.initial_step * 0.1).max(1e-6);
            let next = nm.minimize(f, m.x);
            *evals += next.evaluations;
            let gain = m.value - next.value;
            if next.value < m.value {
                m = next;
            }
            if gain < opts.improvement_tol {
                return (m.x, m.value, true);
            }
        }
        (m.x, m.value, false)
    }

    fn multi_start(
        &self,
        cov: &DMatrix<f64>,
        w: &Weights,
        opts: &SolverOptions,
    ) -> Result<BoundResult> {
        let dual = self.dual();
        let lower_bound = dual.map(|d| d.lower_bound);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);

        let reg = self.regression();
        let mut starts: Vec<([f64; 4], f64)> = Vec::new();
        if let Some(d) = dual {
            starts.push((d.free, 1e-4));
        }
        starts.extend(opts.seeds.iter().map(|&s| (s, 1e-2)));
        starts.push((reg, 0.1));
        starts.push(([0.0; 4], 0.5));
        let want = opts.starts.max(8);
        while starts.len() < want {
            let mut x = reg;
            for v in x.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += z * (1.0 + v.abs());
            }
            starts.push((x, 0.3));
        }

        let mut evals = 0;
        let mut candidates: Vec<([f64; 4], f64, bool)> = Vec::with_capacity(starts.len() + 4);
        if let Some(d) = dual {
            candidates.push((d.free, self.value(&d.free), true));
        }
        let certified = |best: f64| match (opts.certify_tol, lower_bound) {
            (Some(tol), Some(lb)) => best - lb <= tol * best.abs().max(1.0),
            _ => false,
        };
        if candidates.first().is_some_and(|c| certified(c.1)) {
            let duals = DualCoefficients::two_mode(candidates[0].0)?;
            return BoundResult::from_duals(
                cov,
                w,
                duals,
                true,
                1,
                lower_bound,
                SolveMethod::MultiStart,
            );
        }
        for (start, step) in starts {
            candidates.push(self.local_search(start, step, opts, &mut evals));
            let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            if certified(best) {
                break;
            }
        }

        let pick = |cands: &[([f64; 4], f64, bool)]| {
            // deterministic: by value, then lexicographically by coefficients
            *cands
                .iter()
                .min_by(|p, q| {
                    p.1.total_cmp(&q.1).then_with(|| {
                        p.0.iter()
                            .zip(&q.0)
                            .map(|(a, b)| a.total_cmp(b))
                            .find(|o| o.is_ne())
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                })
                .expect("at least one start")
        };
        let mut best = pick(&candidates);

        // optimum on the commutator kink: re-polish from nearby perturbed points
        if Self::commutator(&best.0).abs() < 1e-10 && !certified(best.1) {
            for _ in 0..4 {
                let mut x = best.0;
                for v in x.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += 1e-4 * z * (1.0 + v.abs());
                }
                candidates.push(self.local_search(x, 1e-3, opts, &mut evals));
            }
            best = pick(&candidates);
        }

        let converged = best.2 || certified(best.1);
        let duals = DualCoefficients::two_mode(best.0)?;
        BoundResult::from_duals(
            cov,
            w,
            duals,
            converged,
            evals,
            lower_bound,
            SolveMethod::MultiStart,
        )
    }
}

/// Outcome of [`extract_measurement`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProductCertificate {
    /// A dual-homodyne scheme whose estimator variances reproduce the bound.
    Scheme(MeasurementScheme),
    /// The optimal duals cannot be measured jointly by homodyning separate modes.
    NoProductCertificate { reason: String },
}

/// Commutator magnitude below which the optimal duals count as jointly measurable.
pub const COMMUTING_TOL: f64 = 1e-7;

/// Turn optimal duals into a dual-homodyne measurement.
///
/// Commuting linear duals span a Lagrangian plane. Writing its ancilla part as
/// `(X2, Y2)-coefficients = M·(X1, Y1)-coefficients` with `det M = −1`, the eigenvectors of `M`
/// give the homodyne angles and the eigenvalue magnitudes give the transmissivity of the
/// disentangling beam splitter.
pub fn extract_measurement(
    result: &BoundResult,
    cov: &DMatrix<f64>,
    w: &Weights,
) -> Result<ProductCertificate> {
    if !result.converged {
        return Err(Error::NotConverged(
            "cannot extract a measurement from an unconverged bound".into(),
        ));
    }
    let Some([a, b, c, d]) = result.duals.free() else {
        return Ok(ProductCertificate::NoProductCertificate {
            reason: "single-mode probe: the two conjugate quadratures cannot be homodyned jointly"
                .into(),
        });
    };
    if cov.nrows() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: cov.nrows(),
        });
    }
    if result.commutator().abs() > COMMUTING_TOL {
        return Ok(ProductCertificate::NoProductCertificate {
            reason: format!(
                "optimal duals do not commute (Im Z12 = {:e})",
                result.commutator()
            ),
        });
    }

    // M maps mode-1 coefficient vectors to ancilla coefficient vectors
    let m = Matrix2::new(a, c, b, d);
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc <= 0.0 || det >= 0.0 {
        return Ok(ProductCertificate::NoProductCertificate {
            reason: "ancilla map has no real eigenbasis".into(),
        });
    }
    let neg = 0.5 * (tr - disc.sqrt());
    let pos = 0.5 * (tr + disc.sqrt());
    let eigvec = |lam: f64| -> Vector2<f64> {
        let v1 = Vector2::new(c, lam - a);
        let v2 = Vector2::new(lam - d, b);
        if v1.norm() >= v2.norm() {
            v1
        } else {
            v2
        }
    };
    let angle = |v: Vector2<f64>| v[1].atan2(v[0]).rem_euclid(std::f64::consts::PI);
    let k = -neg;
    let tau = k * k / (1.0 + k * k);
    let scheme = MeasurementScheme::from_angles(
        tau,
        [angle(eigvec(neg)), angle(eigvec(pos))],
        &result.duals,
    )?;
    let (vx, vy, _) = scheme.predicted_variances(cov)?;
    let predicted = w.w_x * vx + w.w_y * vy;
    if (predicted - result.f_hcr).abs() > 1e-6 * result.f_hcr.abs().max(1.0) {
        return Ok(ProductCertificate::NoProductCertificate {
            reason: format!("scheme predicts {predicted} against bound {}", result.f_hcr),
        });
    }
    Ok(ProductCertificate::Scheme(scheme))
}
