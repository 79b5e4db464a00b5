//! Analytic bounds, optima and tradeoff curves for one- and two-mode squeezed probes.
//!
//! Everything here is written in terms of `e^{−2r}` where possible so that large squeezing
//! does not overflow.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::check_squeezing;
use crate::holevo::Weights;

/// `(v_a, v_b)`: quadrature variances of a squeezed state rotated by `phi`.
pub fn projected_variances(r: f64, phi: f64) -> Result<(f64, f64)> {
    check_squeezing(r)?;
    let (s, c) = phi.sin_cos();
    let (lo, hi) = ((-2.0 * r).exp(), (2.0 * r).exp());
    Ok((lo * c * c + hi * s * s, lo * s * s + hi * c * c))
}

/// Single-mode Holevo bound `w_x v_a + w_y v_b + 2√(w_x w_y)`.
pub fn single_mode_line(w: &Weights, r: f64, phi: f64) -> Result<f64> {
    let (va, vb) = projected_variances(r, phi)?;
    Ok(w.w_x() * va + w.w_y() * vb + 2.0 * w.cross())
}

/// Smallest `v_y` compatible with `v_x` for a single-mode probe: `v_b + 1/(v_x − v_a)`.
pub fn single_mode_tradeoff(v_x: f64, r: f64, phi: f64) -> Result<f64> {
    let (va, vb) = projected_variances(r, phi)?;
    if !(v_x > va) {
        return Err(Error::Infeasible(format!(
            "v_x = {v_x} is not above the projected variance {va}"
        )));
    }
    Ok(vb + 1.0 / (v_x - va))
}

/// `e^{−2r}/v_x + e^{2r}/v_y`; achievable pairs give at most 1.
pub fn single_mode_precision_sum(v_x: f64, v_y: f64, r: f64) -> f64 {
    (-2.0 * r).exp() / v_x + (2.0 * r).exp() / v_y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Low,
    Middle,
    High,
}

impl Segment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Segment::Low => "low",
            Segment::Middle => "middle",
            Segment::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub v_x: f64,
    pub v_y: f64,
    pub segment: Segment,
}

fn ordered(r1: f64, r2: f64) -> Result<(f64, f64)> {
    check_squeezing(r1)?;
    check_squeezing(r2)?;
    Ok(if r1 <= r2 { (r1, r2) } else { (r2, r1) })
}

/// `(v_c, v_d)`, the ends of the straight middle segment of the two-mode envelope.
pub fn envelope_breakpoints(r1: f64, r2: f64) -> Result<(f64, f64)> {
    let (r1, r2) = ordered(r1, r2)?;
    let p = (-r1 - r2).exp();
    Ok(((-2.0 * r2).exp() + p, (-2.0 * r1).exp() + p))
}

/// Lower boundary of the accessible `(v_x, v_y)` region for two squeezed states.
///
/// `r1 > r2` is accepted and swapped; the curve is symmetric under that exchange.
pub fn two_mode_envelope(v_x: f64, r1: f64, r2: f64) -> Result<EnvelopePoint> {
    let (r1, r2) = ordered(r1, r2)?;
    let (e1, e2) = ((-2.0 * r1).exp(), (-2.0 * r2).exp());
    if !(v_x > e2) {
        return Err(Error::Infeasible(format!(
            "v_x = {v_x} is not above e^(-2 r2) = {e2}"
        )));
    }
    let (vc, vd) = envelope_breakpoints(r1, r2)?;
    let (v_y, segment) = if v_x < vc {
        (v_x * e1 / (v_x - e2), Segment::Low)
    } else if v_x <= vd {
        let s = (-r1).exp() + (-r2).exp();
        (s * s - v_x, Segment::Middle)
    } else {
        (v_x * e2 / (v_x - e1), Segment::High)
    };
    Ok(EnvelopePoint { v_x, v_y, segment })
}

/// Optimal two-mode probe and the variances it reaches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalConfig {
    pub t: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub v_x: f64,
    pub v_y: f64,
}

/// Optimal transmissivity `e^{r1}/(e^{r1} + e^{r2}√(w_min/w_max))`.
pub fn t_star(w: &Weights, r1: f64, r2: f64) -> Result<f64> {
    let (r1, r2) = ordered(r1, r2)?;
    let (lo, hi) = if w.w_x() <= w.w_y() {
        (w.w_x(), w.w_y())
    } else {
        (w.w_y(), w.w_x())
    };
    Ok(1.0 / (1.0 + (r2 - r1).exp() * (lo / hi).sqrt()))
}

/// `t* = √w_y / (√w_x + √w_y)` for equally squeezed inputs.
pub fn balanced_t_star(w: &Weights) -> f64 {
    w.w_y().sqrt() / (w.w_x().sqrt() + w.w_y().sqrt())
}

/// Optimal probe for weights `w`. With equal weights the optimum is a one-parameter family;
/// `family_phi1` picks the member (`0` gives the same point as `w_x < w_y`).
///
/// A zero weight gives the single-parameter limit: the favoured quadrature reaches `e^{−2r2}`
/// and the other variance is infinite.
pub fn optimal_config(w: &Weights, r1: f64, r2: f64, family_phi1: f64) -> Result<OptimalConfig> {
    check_squeezing(r1)?;
    check_squeezing(r2)?;
    if r1 > r2 {
        return Err(invalid(format!(
            "expected r1 <= r2, got r1 = {r1}, r2 = {r2}"
        )));
    }
    let t = t_star(w, r1, r2)?;
    let (e1, e2, p) = ((-2.0 * r1).exp(), (-2.0 * r2).exp(), (-r1 - r2).exp());
    let (wx, wy) = (w.w_x(), w.w_y());
    if wx == wy {
        let s = (-r1).exp() + (-r2).exp();
        let half = 0.5 * s * s;
        let spread = 0.5 * (2.0 * family_phi1).cos() * (e1 - e2);
        return Ok(OptimalConfig {
            t,
            phi1: family_phi1,
            phi2: family_phi1 + FRAC_PI_2,
            v_x: half + spread,
            v_y: half - spread,
        });
    }
    if wx < wy {
        let v_x = if wx == 0.0 {
            f64::INFINITY
        } else {
            e1 + p * (wy / wx).sqrt()
        };
        Ok(OptimalConfig {
            t,
            phi1: 0.0,
            phi2: FRAC_PI_2,
            v_x,
            v_y: e2 + p * (wx / wy).sqrt(),
        })
    } else {
        let v_y = if wy == 0.0 {
            f64::INFINITY
        } else {
            e1 + p * (wx / wy).sqrt()
        };
        Ok(OptimalConfig {
            t,
            phi1: FRAC_PI_2,
            phi2: 0.0,
            v_x: e2 + p * (wy / wx).sqrt(),
            v_y,
        })
    }
}

/// Equal-squeezing scalar optimum at `t = 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example2Params {
    pub lambda: f64,
    pub gamma: f64,
    pub r: f64,
    pub t: f64,
}

/// `ratio·γ³(γ − tanh 2r) + γ tanh 2r − 1`.
pub fn quartic_residual(gamma: f64, ratio: f64, r: f64) -> f64 {
    let th = (2.0 * r).tanh();
    ratio * gamma.powi(3) * (gamma - th) + gamma * th - 1.0
}

fn quartic_derivative(gamma: f64, ratio: f64, th: f64) -> f64 {
    ratio * gamma * gamma * (4.0 * gamma - 3.0 * th) + th
}

fn polish(mut g: f64, ratio: f64, r: f64) -> f64 {
    let th = (2.0 * r).tanh();
    for _ in 0..50 {
        let d = quartic_derivative(g, ratio, th);
        if d == 0.0 {
            break;
        }
        let step = quartic_residual(g, ratio, r) / d;
        let next = g - step;
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        if quartic_residual(next, ratio, r).abs() >= quartic_residual(g, ratio, r).abs() {
            break;
        }
        g = next;
    }
    g
}

/// Positive real roots of the quartic, polished; coincident roots (within 1e-8) are merged.
pub fn quartic_positive_roots(ratio: f64, r: f64) -> Result<Vec<f64>> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(invalid(format!(
            "ratio must be finite and positive for the full quartic, got {ratio}"
        )));
    }
    check_squeezing(r)?;
    let th = (2.0 * r).tanh();
    // monic: γ⁴ − th·γ³ + 0·γ² + (th/ρ)·γ − 1/ρ
    let (c3, c2, c1, c0) = (-th, 0.0, th / ratio, -1.0 / ratio);
    #[rustfmt::skip]
    let companion = Matrix4::new(
        0.0, 0.0, 0.0, -c0,
        1.0, 0.0, 0.0, -c1,
        0.0, 1.0, 0.0, -c2,
        0.0, 0.0, 1.0, -c3,
    );
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.re > 0.0 && z.im.abs() <= 1e-6 * (1.0 + z.re.abs()))
        .map(|z| polish(z.re, ratio, r))
        .collect();
    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<(f64, usize)> = Vec::new();
    for g in roots {
        match merged.last_mut() {
            Some((sum, n)) if (g - *sum / *n as f64).abs() <= 1e-8 * g.max(1.0) => {
                *sum += g;
                *n += 1;
            }
            _ => merged.push((g, 1)),
        }
    }
    Ok(merged.into_iter().map(|(s, n)| s / n as f64).collect())
}

/// Root `γ` of the quartic for `ratio = w_y/w_x`, and `λ* = −e^{−r}(1 + γ)/√2`.
///
/// `ratio = 0` and `ratio = ∞` return `coth 2r` and `tanh 2r` directly. At `r = 0` the quartic
/// degenerates to `ratio·γ⁴ = 1`.
pub fn gamma_quartic_root(ratio: f64, r: f64) -> Result<Example2Params> {
    check_squeezing(r)?;
    if ratio.is_nan() || ratio < 0.0 {
        return Err(invalid(format!("ratio must be >= 0, got {ratio}")));
    }
    let params = |gamma: f64| Example2Params {
        lambda: -(-r).exp() * (1.0 + gamma) / SQRT_2,
        gamma,
        r,
        t: 0.5,
    };
    if r == 0.0 {
        if ratio == 0.0 || ratio.is_infinite() {
            return Err(invalid("r = 0 with a zero weight has no positive root"));
        }
        return Ok(params(ratio.powf(-0.25)));
    }
    if ratio == 0.0 {
        return Ok(params(1.0 / (2.0 * r).tanh()));
    }
    if ratio.is_infinite() {
        return Ok(params((2.0 * r).tanh()));
    }
    let roots = quartic_positive_roots(ratio, r)?;
    match roots.as_slice() {
        [g] => Ok(params(*g)),
        [] => Err(Error::NotConverged(format!(
            "no positive root found for ratio {ratio}, r {r}"
        ))),
        _ => Err(Error::NotConverged(format!(
            "multiple positive roots {roots:?} for ratio {ratio}, r {r}"
        ))),
    }
}

/// `(f_x(λ), f_y(λ))` for two equally squeezed, orthogonally oriented inputs mixed at `t`.
pub fn example2_parametric(lambda: f64, r: f64, t: f64) -> Result<(f64, f64)> {
    check_squeezing(r)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid(format!("t must lie in [0, 1], got {t}")));
    }
    let st = t.sqrt();
    let num =
        (1.0 + lambda * st * r.exp()).powi(2) + lambda * lambda * (1.0 - t) * (-2.0 * r).exp();
    let den_x = (lambda + st * (-r).exp()).powi(2);
    let den_y = (1.0 - t) * (-2.0 * r).exp();
    if den_x == 0.0 {
        return Err(Error::Pole(format!(
            "f_x has a pole at lambda = -sqrt(t) e^(-r) = {lambda}"
        )));
    }
    if den_y == 0.0 {
        return Err(Error::Pole("f_y has a pole at t = 1".into()));
    }
    Ok((num / den_x, num / den_y))
}

/// Ancilla coefficients `(a, b, c, d)` of the two-mode duals that reproduce
/// `(f_x(λ), f_y(λ))` as their variances (`φ1 = 0`, `φ2 = π/2`, equal squeezing).
pub fn example2_duals(lambda: f64, r: f64, t: f64) -> Result<[f64; 4]> {
    check_squeezing(r)?;
    if !(0.0..1.0).contains(&t) {
        return Err(invalid(format!("t must lie in [0, 1), got {t}")));
    }
    let d = -(lambda * r.exp() + t.sqrt()) / (1.0 - t).sqrt();
    if d == 0.0 {
        return Err(Error::Pole(format!(
            "lambda = {lambda} sits on the pole of f_x"
        )));
    }
    Ok([-1.0 / d, 0.0, 0.0, d])
}

/// `w_x f_x(λ*) + w_y f_y(λ*)` at `t = 0.5` with `λ*` from the quartic.
pub fn example2_bound(w: &Weights, r: f64) -> Result<f64> {
    if w.w_x() == 0.0 {
        // only v_y matters; λ* follows the w_x = 0 row
        let lambda = -r.exp() / (SQRT_2 * (2.0 * r).cosh());
        return Ok(w.w_y() * example2_parametric(lambda, r, 0.5)?.1);
    }
    let p = gamma_quartic_root(w.w_y() / w.w_x(), r)?;
    let (fx, fy) = example2_parametric(p.lambda, r, 0.5)?;
    Ok(w.w_x() * fx + w.w_y() * fy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarCorollaries {
    /// Lower bound on `v_x v_y` for any single-mode probe.
    pub single_mode_product_floor: f64,
    /// `4 e^{−2r1} e^{−2r2}`.
    pub two_mode_product_floor: f64,
    /// `1/v_x + 1/v_y = e^{2r}` along the optimum when `r1 = r2`.
    pub balanced_precision_sum: Option<f64>,
    /// `e^{−2r1} e^{−2r2}`.
    pub resource_product: f64,
    /// `resource_product < 1/4`.
    pub sql_feasible: bool,
}

pub fn scalar_corollaries(r1: f64, r2: f64) -> Result<ScalarCorollaries> {
    let (r1, r2) = ordered(r1, r2)?;
    let resource_product = (-2.0 * (r1 + r2)).exp();
    Ok(ScalarCorollaries {
        single_mode_product_floor: 4.0,
        two_mode_product_floor: 4.0 * resource_product,
        balanced_precision_sum: (r1 == r2).then(|| (2.0 * r1).exp()),
        resource_product,
        sql_feasible: resource_product < 0.25,
    })
}

/// Branch of the one-squeezed-state example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example1Branch {
    /// `w_x < w_y`: squeezer at `φ2 = π/2`, relation `1/v_x + e^{−2r2}/v_y ≤ 1`.
    YFavoured,
    /// `w_y < w_x`: squeezer at `φ2 = 0`, relation `e^{−2r2}/v_x + 1/v_y ≤ 1`.
    XFavoured,
}

/// Left-hand side of the precision relation for the given branch; achievable pairs give at most 1.
pub fn example1_relations(v_x: f64, v_y: f64, r2: f64, which: Example1Branch) -> Result<f64> {
    check_squeezing(r2)?;
    let e = (-2.0 * r2).exp();
    Ok(match which {
        Example1Branch::YFavoured => 1.0 / v_x + e / v_y,
        Example1Branch::XFavoured => e / v_x + 1.0 / v_y,
    })
}

/// Smallest transmissivity on the optimal branch, `1/(1 + e^{r2})`.
pub fn example1_t_min(r2: f64) -> f64 {
    1.0 / (1.0 + r2.exp())
}

/// `(v_x, v_y)` of the one-squeezed-state scheme at transmissivity `t`.
pub fn example1_variances(t: f64, r2: f64, which: Example1Branch) -> Result<(f64, f64)> {
    check_squeezing(r2)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Infeasible(format!("need 0 < t < 1, got {t}")));
    }
    let (a, b) = (1.0 / (1.0 - t), (-2.0 * r2).exp() / t);
    Ok(match which {
        Example1Branch::YFavoured => (a, b),
        Example1Branch::XFavoured => (b, a),
    })
}

/// Estimator variances of the equal-weight one-squeezed-state scheme at `t = 1/(1 + e^{r2})`.
pub fn example1_estimator_variances(phi2: f64, r2: f64) -> (f64, f64) {
    let (s, c) = phi2.sin_cos();
    let k = (1.0 + r2.exp()) * (-2.0 * r2).exp();
    (
        k * (c * c + r2.exp() * s * s),
        k * (s * s + r2.exp() * c * c),
    )
}
