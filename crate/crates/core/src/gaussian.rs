//! Gaussian states of one or two optical modes and the symplectic maps that act on them.
//!
//! Conventions: quadratures ordered `(X1, Y1, X2, Y2)`, `[X, Y] = 2i`, so the vacuum
//! covariance matrix is the identity and a squeezed quadrature has variance `e^{-2r}`.
//! The symplectic form is block diagonal with blocks `[[0, 1], [-1, 0]]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on `S Ω Sᵀ = Ω` and on covariance symmetry checks.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Floor on the eigenvalues of `cov + iΩ` below which a state is rejected as unphysical.
pub const PHYSICALITY_FLOOR: f64 = -1e-9;
/// Tolerance on symplectic eigenvalues for a state to count as pure.
pub const PURITY_TOL: f64 = 1e-9;
/// Largest squeezing parameter accepted anywhere (about 174 dB).
pub const MAX_SQUEEZING: f64 = 20.0;

/// Convert squeezing in dB (`-10 log10 e^{-2r}`) to the squeezing parameter `r`.
pub fn r_from_db(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 20.0
}

/// Convert a squeezing parameter `r` to dB.
pub fn db_from_r(r: f64) -> f64 {
    20.0 * r / std::f64::consts::LN_10
}

pub(crate) fn check_squeezing(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(invalid(format!(
            "squeezing parameter must be finite and >= 0, got {r}"
        )));
    }
    if r > MAX_SQUEEZING {
        return Err(invalid(format!(
            "squeezing parameter {r} exceeds {MAX_SQUEEZING}"
        )));
    }
    Ok(())
}

fn check_modes(n_modes: usize) -> Result<()> {
    if n_modes == 1 || n_modes == 2 {
        Ok(())
    } else {
        Err(invalid(format!(
            "only 1 or 2 modes are supported, got {n_modes}"
        )))
    }
}

/// The symplectic form for `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// 2×2 rotation matrix `[[cos φ, -sin φ], [sin φ, cos φ]]`.
pub fn rotation_2x2(phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = phi.sin_cos();
    [[c, -s], [s, c]]
}

/// A linear quadrature map preserving the symplectic form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
}

impl SymplecticTransform {
    /// Wrap a matrix, checking that it is square, even-sized and symplectic.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || !matrix.nrows().is_multiple_of(2) || matrix.nrows() == 0 {
            return Err(invalid(format!(
                "symplectic matrix must be square with even size, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_modes(matrix.nrows() / 2)?;
        let s = SymplecticTransform { matrix };
        let defect = s.symplectic_defect();
        if defect > SYMPLECTIC_TOL {
            return Err(invalid(format!(
                "matrix is not symplectic (defect {defect:e})"
            )));
        }
        Ok(s)
    }

    pub fn identity(n_modes: usize) -> Self {
        SymplecticTransform {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Phase rotation by `phi` on `target_mode`, identity elsewhere.
    pub fn rotation(phi: f64, n_modes: usize, target_mode: usize) -> Result<Self> {
        check_modes(n_modes)?;
        if target_mode >= n_modes {
            return Err(invalid(format!(
                "mode index {target_mode} out of range for {n_modes} modes"
            )));
        }
        if !phi.is_finite() {
            return Err(invalid("rotation angle must be finite"));
        }
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let r = rotation_2x2(phi);
        let o = 2 * target_mode;
        for i in 0..2 {
            for j in 0..2 {
                m[(o + i, o + j)] = r[i][j];
            }
        }
        Ok(SymplecticTransform { matrix: m })
    }

    /// Real beam splitter with amplitude transmission `√t`.
    ///
    /// Output mode 1 is `√t·mode1 + √(1−t)·mode2` and output mode 2 is
    /// `−√(1−t)·mode1 + √t·mode2`, applied identically to both quadratures.
    pub fn beam_splitter(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid(format!(
                "transmissivity must lie in [0, 1], got {t}"
            )));
        }
        let a = t.sqrt();
        let b = (1.0 - t).sqrt();
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
             a, 0.0,   b, 0.0,
            0.0,  a, 0.0,   b,
            -b, 0.0,   a, 0.0,
            0.0, -b, 0.0,   a,
        ]);
        Ok(SymplecticTransform { matrix: m })
    }

    /// Block-diagonal combination of two single-mode transforms.
    pub fn direct_sum(a: &SymplecticTransform, b: &SymplecticTransform) -> Result<Self> {
        if a.n_modes() != 1 || b.n_modes() != 1 {
            return Err(invalid(
                "direct sum is only defined for two single-mode transforms",
            ));
        }
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&a.matrix);
        m.view_mut((2, 2), (2, 2)).copy_from(&b.matrix);
        Ok(SymplecticTransform { matrix: m })
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `‖S Ω Sᵀ − Ω‖_max`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        (&self.matrix * &omega * self.matrix.transpose() - omega).amax()
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &SymplecticTransform) -> Result<Self> {
        if self.n_modes() != first.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                got: first.matrix.nrows(),
            });
        }
        Ok(SymplecticTransform {
            matrix: &self.matrix * &first.matrix,
        })
    }

    /// Inverse map, `S⁻¹ = −Ω Sᵀ Ω`.
    pub fn inverse(&self) -> Self {
        let omega = symplectic_form(self.n_modes());
        SymplecticTransform {
            matrix: -(&omega * self.matrix.transpose() * &omega),
        }
    }
}

/// Displacement amplitudes applied to the amplitude and phase quadratures of mode 1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelParams {
    pub theta_x: f64,
    pub theta_y: f64,
}

impl ChannelParams {
    pub fn new(theta_x: f64, theta_y: f64) -> Self {
        ChannelParams { theta_x, theta_y }
    }
}

/// Physicality and purity report for a state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `max |cov − covᵀ|`.
    pub symmetry_defect: f64,
    /// Smallest eigenvalue of the Hermitian matrix `cov + iΩ`.
    pub min_eigenvalue: f64,
    /// Symplectic eigenvalues in ascending order.
    pub symplectic_eigenvalues: Vec<f64>,
    pub physical: bool,
    pub pure: bool,
}

/// First and second moments of an n-mode Gaussian state, `n ∈ {1, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Build a state from its moments. The covariance must be symmetric within `1e-12`
    /// relative to its largest entry; physicality is reported by [`GaussianState::validate`].
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(invalid(format!(
                "mean must have even, nonzero length, got {dim}"
            )));
        }
        check_modes(dim / 2)?;
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: cov.nrows(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("state moments must be finite"));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-12 * scale {
            return Err(invalid("covariance matrix is not symmetric"));
        }
        Ok(GaussianState { mean, cov })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        check_modes(n_modes)?;
        Ok(GaussianState {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        })
    }

    /// Single-mode squeezed vacuum with variance `e^{-2r}` along the quadrature at angle `phi`:
    /// `cov = R(φ) diag(e^{-2r}, e^{2r}) R(φ)ᵀ`.
    pub fn squeezed(r: f64, phi: f64) -> Result<Self> {
        check_squeezing(r)?;
        if !phi.is_finite() {
            return Err(invalid("squeezing angle must be finite"));
        }
        let (s, c) = phi.sin_cos();
        let lo = (-2.0 * r).exp();
        let hi = (2.0 * r).exp();
        let xx = lo * c * c + hi * s * s;
        let yy = lo * s * s + hi * c * c;
        let xy = (lo - hi) * c * s;
        Ok(GaussianState {
            mean: DVector::zeros(2),
            cov: DMatrix::from_row_slice(2, 2, &[xx, xy, xy, yy]),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// 2×2 covariance block of a single mode.
    pub fn marginal_cov(&self, mode: usize) -> Result<[[f64; 2]; 2]> {
        if mode >= self.n_modes() {
            return Err(invalid(format!("mode index {mode} out of range")));
        }
        let o = 2 * mode;
        Ok([
            [self.cov[(o, o)], self.cov[(o, o + 1)]],
            [self.cov[(o + 1, o)], self.cov[(o + 1, o + 1)]],
        ])
    }

    /// Product state `self ⊗ other`.
    pub fn tensor(&self, other: &GaussianState) -> Result<Self> {
        let (da, db) = (self.mean.len(), other.mean.len());
        check_modes((da + db) / 2)?;
        let mut mean = DVector::zeros(da + db);
        mean.rows_mut(0, da).copy_from(&self.mean);
        mean.rows_mut(da, db).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(da + db, da + db);
        cov.view_mut((0, 0), (da, da)).copy_from(&self.cov);
        cov.view_mut((da, da), (db, db)).copy_from(&other.cov);
        Ok(GaussianState { mean, cov })
    }

    /// `mean ← S·mean`, `cov ← S·cov·Sᵀ`.
    pub fn apply(&self, s: &SymplecticTransform) -> Result<Self> {
        if s.matrix.nrows() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: s.matrix.nrows(),
            });
        }
        let mean = &s.matrix * &self.mean;
        let mut cov = &s.matrix * &self.cov * s.matrix.transpose();
        // re-symmetrise rounding noise
        let sym = (&cov + cov.transpose()) * 0.5;
        cov.copy_from(&sym);
        Ok(GaussianState { mean, cov })
    }

    /// Displacement channel acting on mode 1.
    pub fn displace(&self, theta: ChannelParams) -> Self {
        let mut out = self.clone();
        out.mean[0] += theta.theta_x;
        out.mean[1] += theta.theta_y;
        out
    }

    pub fn validate(&self) -> Diagnostics {
        let n = self.mean.len();
        let symmetry_defect = (&self.cov - self.cov.transpose()).amax();
        let omega = symplectic_form(self.n_modes());

        // real embedding of the Hermitian matrix cov + iΩ
        let mut big = DMatrix::zeros(2 * n, 2 * n);
        big.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        big.view_mut((n, n), (n, n)).copy_from(&self.cov);
        big.view_mut((0, n), (n, n)).copy_from(&(-&omega));
        big.view_mut((n, 0), (n, n)).copy_from(&omega);
        let min_eigenvalue = big.symmetric_eigenvalues().min();

        let symplectic_eigenvalues = symplectic_eigenvalues(&self.cov, &omega);
        let physical = min_eigenvalue >= PHYSICALITY_FLOOR && symmetry_defect <= SYMPLECTIC_TOL;
        let pure = physical
            && symplectic_eigenvalues
                .iter()
                .all(|nu| (nu - 1.0).abs() <= PURITY_TOL);
        Diagnostics {
            symmetry_defect,
            min_eigenvalue,
            symplectic_eigenvalues,
            physical,
            pure,
        }
    }

    pub(crate) fn require_physical(&self) -> Result<()> {
        let d = self.validate();
        if d.physical {
            Ok(())
        } else {
            Err(Error::Unphysical {
                min_eigenvalue: d.min_eigenvalue,
            })
        }
    }
}

/// Moduli of the eigenvalues of `Ω·cov`, one per mode, ascending.
fn symplectic_eigenvalues(cov: &DMatrix<f64>, omega: &DMatrix<f64>) -> Vec<f64> {
    let m = omega * cov;
    let mut im: Vec<f64> = m
        .complex_eigenvalues()
        .iter()
        .map(|z| z.im.abs().max(z.re.abs()))
        .collect();
    im.sort_by(f64::total_cmp);
    im.chunks(2)
        .map(|pair| 0.5 * (pair[0] + pair[pair.len() - 1]))
        .collect()
}

/// How the probe is prepared from squeezed-vacuum resources.
///
/// For two modes, both squeezed states are rotated and then mixed so that the probing
/// mode (mode 1) carries `√(1−t)` of the first resource and `√t` of the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub r1: f64,
    pub r2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub t: f64,
    pub n_modes: usize,
}

impl ProbeConfig {
    pub fn single_mode(r: f64, phi: f64) -> Result<Self> {
        let c = ProbeConfig {
            r1: r,
            r2: 0.0,
            phi1: phi,
            phi2: 0.0,
            t: 1.0,
            n_modes: 1,
        };
        c.check()?;
        Ok(c)
    }

    /// Two-mode probe; requires `0 ≤ r1 ≤ r2`.
    pub fn two_mode(r1: f64, r2: f64, phi1: f64, phi2: f64, t: f64) -> Result<Self> {
        let c = ProbeConfig {
            r1,
            r2,
            phi1,
            phi2,
            t,
            n_modes: 2,
        };
        c.check()?;
        Ok(c)
    }

    /// Two-mode probe with the resources put in canonical order.
    ///
    /// When `r1 > r2` the two inputs are exchanged (angles swapped, `t → 1 − t`). The result
    /// differs from the requested probe by a π phase on the ancilla mode only, which leaves
    /// every bound unchanged. The flag reports whether a swap happened.
    pub fn two_mode_canonical(
        r1: f64,
        r2: f64,
        phi1: f64,
        phi2: f64,
        t: f64,
    ) -> Result<(Self, bool)> {
        if r1 > r2 {
            Ok((Self::two_mode(r2, r1, phi2, phi1, 1.0 - t)?, true))
        } else {
            Ok((Self::two_mode(r1, r2, phi1, phi2, t)?, false))
        }
    }

    fn check(&self) -> Result<()> {
        check_modes(self.n_modes)?;
        check_squeezing(self.r1)?;
        check_squeezing(self.r2)?;
        if !self.phi1.is_finite() || !self.phi2.is_finite() {
            return Err(invalid("probe angles must be finite"));
        }
        if !(0.0..=1.0).contains(&self.t) {
            return Err(invalid(format!(
                "transmissivity must lie in [0, 1], got {}",
                self.t
            )));
        }
        if self.n_modes == 2 && self.r1 > self.r2 {
            return Err(invalid(format!(
                "two-mode probes need r1 <= r2 (got r1 = {}, r2 = {})",
                self.r1, self.r2
            )));
        }
        Ok(())
    }

    /// The mixing beam splitter used by [`build_probe`].
    pub fn mixer(&self) -> Result<SymplecticTransform> {
        SymplecticTransform::beam_splitter(1.0 - self.t)
    }
}

/// Prepare the zero-mean probe described by `config`.
pub fn build_probe(config: &ProbeConfig) -> Result<GaussianState> {
    config.check()?;
    let first = GaussianState::squeezed(config.r1, config.phi1)?;
    if config.n_modes == 1 {
        return Ok(first);
    }
    let second = GaussianState::squeezed(config.r2, config.phi2)?;
    first.tensor(&second)?.apply(&config.mixer()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn squeezed_vacuum_limits() {
        let s = GaussianState::squeezed(0.0, 1.234).unwrap();
        assert!((s.cov() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-15);

        let r = 0.5 * 2f64.ln();
        let s = GaussianState::squeezed(r, 0.0).unwrap();
        assert!(close(s.cov()[(0, 0)], 0.5, 1e-15));
        assert!(close(s.cov()[(1, 1)], 2.0, 1e-15));

        let s = GaussianState::squeezed(r, FRAC_PI_6).unwrap();
        assert!(close(s.cov()[(0, 0)], 0.875, 1e-14));
        assert!(close(s.cov()[(1, 1)], 1.625, 1e-14));
        // (0.5 - 2) cos(π/6) sin(π/6)
        assert!(close(s.cov()[(0, 1)], -0.649_519_052_838_329, 1e-14));
    }

    #[test]
    fn squeezing_rejects_bad_input() {
        assert!(GaussianState::squeezed(-0.1, 0.0).is_err());
        assert!(GaussianState::squeezed(f64::NAN, 0.0).is_err());
        assert!(GaussianState::squeezed(25.0, 0.0).is_err());
    }

    #[test]
    fn db_conversion() {
        let r = r_from_db(10.0 * 2f64.log10());
        assert!(close((-2.0 * r).exp(), 0.5, 1e-15));
        assert!(close(db_from_r(r_from_db(6.0)), 6.0, 1e-12));
    }

    #[test]
    fn rotation_examples() {
        let id = SymplecticTransform::rotation(0.0, 2, 1).unwrap();
        assert!((id.matrix() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);

        let r = 0.4;
        let s = GaussianState::squeezed(r, 0.0).unwrap();
        let rot = SymplecticTransform::rotation(FRAC_PI_2, 1, 0).unwrap();
        let out = s.apply(&rot).unwrap();
        assert!(close(out.cov()[(0, 0)], (2.0 * r).exp(), 1e-12));
        assert!(close(out.cov()[(1, 1)], (-2.0 * r).exp(), 1e-12));

        let rot = SymplecticTransform::rotation(FRAC_PI_6, 2, 0).unwrap();
        let m = rot.matrix();
        assert!(close(m[(0, 0)], FRAC_PI_6.cos(), 1e-15));
        assert!(close(m[(1, 0)], FRAC_PI_6.sin(), 1e-15));
        assert_eq!(m[(2, 2)], 1.0);
        assert_eq!(m[(0, 2)], 0.0);

        assert!(SymplecticTransform::rotation(0.1, 2, 2).is_err());
        assert!(SymplecticTransform::rotation(0.1, 3, 0).is_err());
    }

    #[test]
    fn beam_splitter_examples() {
        let id = SymplecticTransform::beam_splitter(1.0).unwrap();
        assert!((id.matrix() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);

        let vac = GaussianState::vacuum(2).unwrap();
        let out = vac
            .apply(&SymplecticTransform::beam_splitter(0.5).unwrap())
            .unwrap();
        assert!((out.cov() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);

        assert!(SymplecticTransform::beam_splitter(1.2).is_err());
        assert!(SymplecticTransform::beam_splitter(-0.1).is_err());
    }

    #[test]
    fn balanced_mix_of_orthogonal_squeezers() {
        let r = 0.6;
        let a = GaussianState::squeezed(r, 0.0).unwrap();
        let b = GaussianState::squeezed(r, FRAC_PI_2).unwrap();
        let out = a
            .tensor(&b)
            .unwrap()
            .apply(&SymplecticTransform::beam_splitter(0.5).unwrap())
            .unwrap();
        let c = (2.0 * r).cosh();
        let sh = (2.0 * r).sinh();
        for mode in 0..2 {
            let m = out.marginal_cov(mode).unwrap();
            assert!(close(m[0][0], c, 1e-12) && close(m[1][1], c, 1e-12));
            assert!(close(m[0][1], 0.0, 1e-12));
        }
        // cross-mode correlations ±sinh 2r
        assert!(close(out.cov()[(0, 2)].abs(), sh, 1e-12));
        assert!(close(out.cov()[(1, 3)].abs(), sh, 1e-12));
        assert!(close(out.cov()[(0, 2)], -out.cov()[(1, 3)], 1e-12));
    }

    #[test]
    fn tensor_examples() {
        let v = GaussianState::vacuum(1).unwrap();
        let vv = v.tensor(&v).unwrap();
        assert_eq!(vv.cov(), &DMatrix::<f64>::identity(4, 4));

        let r = 0.3;
        let s = GaussianState::squeezed(r, 0.0).unwrap().tensor(&v).unwrap();
        assert!(close(s.cov()[(0, 0)], (-2.0 * r).exp(), 1e-15));
        assert!(close(s.cov()[(1, 1)], (2.0 * r).exp(), 1e-15));
        assert_eq!(s.cov()[(2, 2)], 1.0);
        assert_eq!(s.cov()[(0, 2)], 0.0);

        let a = v.displace(ChannelParams::new(1.0, 2.0));
        let b = v.displace(ChannelParams::new(3.0, 4.0));
        assert_eq!(
            a.tensor(&b).unwrap().mean().as_slice(),
            &[1.0, 2.0, 3.0, 4.0]
        );

        let two = GaussianState::vacuum(2).unwrap();
        assert!(two.tensor(&v).is_err());
    }

    #[test]
    fn apply_checks_dimensions() {
        let v = GaussianState::vacuum(1).unwrap();
        assert!(matches!(
            v.apply(&SymplecticTransform::beam_splitter(0.5).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
        let same = v.apply(&SymplecticTransform::identity(1)).unwrap();
        assert_eq!(same, v);
    }

    #[test]
    fn inverse_undoes_transform() {
        let s = SymplecticTransform::beam_splitter(0.3)
            .unwrap()
            .after(&SymplecticTransform::rotation(0.7, 2, 1).unwrap())
            .unwrap();
        let prod = s.after(&s.inverse()).unwrap();
        assert!((prod.matrix() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn probe_vacuum_and_example_marginals() {
        let vac = build_probe(&ProbeConfig::two_mode(0.0, 0.0, 0.3, 1.1, 0.37).unwrap()).unwrap();
        assert!((vac.cov() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-14);

        // vacuum ⊗ Y-squeezed: probe mode gets (1−t) of the vacuum and t of the squeezed input
        let (r, t) = (0.45, 0.3);
        let p = build_probe(&ProbeConfig::two_mode(0.0, r, 0.0, FRAC_PI_2, t).unwrap()).unwrap();
        let m = p.marginal_cov(0).unwrap();
        assert!(close(m[0][0], (1.0 - t) + t * (2.0 * r).exp(), 1e-12));
        assert!(close(m[1][1], (1.0 - t) + t * (-2.0 * r).exp(), 1e-12));

        let p = build_probe(&ProbeConfig::two_mode(r, r, 0.0, FRAC_PI_2, 0.5).unwrap()).unwrap();
        for mode in 0..2 {
            let m = p.marginal_cov(mode).unwrap();
            assert!(close(m[0][0], (2.0 * r).cosh(), 1e-12));
            assert!(close(m[1][1], (2.0 * r).cosh(), 1e-12));
        }
    }

    #[test]
    fn probe_against_explicit_product() {
        // independent 4×4 product for the r1 = 0.35, r2 = 0.69, t = 0.4 probe
        let (r1, r2, t) = (0.35_f64, 0.69_f64, 0.4_f64);
        let d = [
            (-2.0 * r1).exp(),
            (2.0 * r1).exp(),
            (2.0 * r2).exp(),
            (-2.0 * r2).exp(),
        ];
        let a = (1.0 - t).sqrt();
        let b = t.sqrt();
        let bs = [
            [a, 0.0, b, 0.0],
            [0.0, a, 0.0, b],
            [-b, 0.0, a, 0.0],
            [0.0, -b, 0.0, a],
        ];
        let p = build_probe(&ProbeConfig::two_mode(r1, r2, 0.0, FRAC_PI_2, t).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect: f64 = (0..4).map(|k| bs[i][k] * d[k] * bs[j][k]).sum();
                assert!(close(p.cov()[(i, j)], expect, 1e-12), "({i},{j})");
            }
        }
    }

    #[test]
    fn probe_config_ordering() {
        assert!(ProbeConfig::two_mode(0.7, 0.3, 0.0, 0.0, 0.5).is_err());
        assert!(ProbeConfig::two_mode(0.3, 0.7, 0.0, 0.0, 1.5).is_err());
        let (c, swapped) = ProbeConfig::two_mode_canonical(0.7, 0.3, 0.1, 0.2, 0.25).unwrap();
        assert!(swapped);
        assert_eq!(
            (c.r1, c.r2, c.phi1, c.phi2, c.t),
            (0.3, 0.7, 0.2, 0.1, 0.75)
        );
    }

    #[test]
    fn displacement_examples() {
        let v = GaussianState::vacuum(1).unwrap();
        assert_eq!(v.displace(ChannelParams::default()), v);
        let d = v.displace(ChannelParams::new(0.3, -0.1));
        assert_eq!(d.mean().as_slice(), &[0.3, -0.1]);
        assert_eq!(d.cov(), v.cov());

        let p =
            build_probe(&ProbeConfig::two_mode(0.2, 0.4, 0.0, FRAC_PI_2, 0.3).unwrap()).unwrap();
        assert_eq!(
            p.displace(ChannelParams::new(1.0, 2.0)).mean().as_slice(),
            &[1.0, 2.0, 0.0, 0.0]
        );
    }

    #[test]
    fn validate_examples() {
        let d = GaussianState::vacuum(1).unwrap().validate();
        assert!(d.min_eigenvalue.abs() < 1e-12);
        assert!(d.physical && d.pure);

        let bad = GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2) * 0.5).unwrap();
        let d = bad.validate();
        assert!(close(d.min_eigenvalue, -0.5, 1e-12));
        assert!(!d.physical && !d.pure);

        let thermal = GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2) * 3.0).unwrap();
        let d = thermal.validate();
        assert!(d.physical && !d.pure);
        assert!(close(d.symplectic_eigenvalues[0], 3.0, 1e-12));
    }

    #[test]
    fn rejects_asymmetric_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(GaussianState::new(DVector::zeros(2), cov).is_err());
    }
}
