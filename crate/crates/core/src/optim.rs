//! Nelder–Mead simplex search for small fixed dimensions.

/// Outcome of one simplex run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    /// Edge length of the initial simplex (per coordinate, relative to `max(1, |x0_i|)`).
    pub initial_step: f64,
    /// Stop when the spread of simplex values falls below this.
    pub value_tol: f64,
    /// ... and the simplex diameter falls below this.
    pub point_tol: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            initial_step: 0.1,
            value_tol: 1e-15,
            point_tol: 1e-10,
            max_evaluations: 20_000,
        }
    }
}

impl NelderMead {
    pub fn minimize<const N: usize, F>(&self, mut f: F, x0: [f64; N]) -> Minimum<N>
    where
        F: FnMut(&[f64; N]) -> f64,
    {
        const ALPHA: f64 = 1.0;
        const GAMMA: f64 = 2.0;
        const RHO: f64 = 0.5;
        const SIGMA: f64 = 0.5;

        let mut pts: Vec<[f64; N]> = Vec::with_capacity(N + 1);
        let mut vals: Vec<f64> = Vec::with_capacity(N + 1);
        pts.push(x0);
        for i in 0..N {
            let mut p = x0;
            p[i] += self.initial_step * x0[i].abs().max(1.0);
            pts.push(p);
        }
        for p in &pts {
            vals.push(f(p));
        }
        let mut evals = N + 1;
        let mut converged = false;

        while evals < self.max_evaluations {
            // insertion sort, the simplex is nearly ordered after one step
            for i in 1..=N {
                let mut j = i;
                while j > 0 && vals[j] < vals[j - 1] {
                    vals.swap(j, j - 1);
                    pts.swap(j, j - 1);
                    j -= 1;
                }
            }

            let spread = vals[N] - vals[0];
            let diameter = pts[1..]
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(&pts[0])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if spread <= self.value_tol && diameter <= self.point_tol {
                converged = true;
                break;
            }
            let scale = pts[0].iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            if diameter <= 1e-14 * scale {
                // collapsed onto a kink or a flat valley floor
                converged = true;
                break;
            }

            let mut centroid = [0.0; N];
            for p in &pts[..N] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v / N as f64;
                }
            }
            let along = |coef: f64| -> [f64; N] {
                let mut out = [0.0; N];
                for i in 0..N {
                    out[i] = centroid[i] + coef * (pts[N][i] - centroid[i]);
                }
                out
            };

            let xr = along(-ALPHA);
            let fr = f(&xr);
            evals += 1;
            if fr < vals[0] {
                let xe = along(-GAMMA);
                let fe = f(&xe);
                evals += 1;
                if fe < fr {
                    pts[N] = xe;
                    vals[N] = fe;
                } else {
                    pts[N] = xr;
                    vals[N] = fr;
                }
                continue;
            }
            if fr < vals[N - 1] {
                pts[N] = xr;
                vals[N] = fr;
                continue;
            }
            let (xc, fc) = if fr < vals[N] {
                let xc = along(-RHO);
                (xc, f(&xc))
            } else {
                let xc = along(RHO);
                (xc, f(&xc))
            };
            evals += 1;
            if fc < vals[N].min(fr) {
                pts[N] = xc;
                vals[N] = fc;
                continue;
            }
            // shrink towards the best vertex
            let best = pts[0];
            for k in 1..=N {
                for i in 0..N {
                    pts[k][i] = best[i] + SIGMA * (pts[k][i] - best[i]);
                }
                vals[k] = f(&pts[k]);
            }
            evals += N;
        }

        let (best, _) =
            vals.iter().enumerate().fold(
                (0, f64::INFINITY),
                |acc, (i, &v)| {
                    if v < acc.1 {
                        (i, v)
                    } else {
                        acc
                    }
                },
            );
        Minimum {
            x: pts[best],
            value: vals[best],
            evaluations: evals,
            converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let nm = NelderMead::default();
        let m = nm.minimize(
            |x: &[f64; 3]| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2) + x[2] * x[2],
            [0.0; 3],
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-7);
        assert!((m.x[1] + 0.5).abs() < 1e-7);
        assert!(m.value < 1e-14);
    }

    #[test]
    fn handles_kinked_objective() {
        let nm = NelderMead::default();
        let m = nm.minimize(
            |x: &[f64; 2]| (x[0] - 0.3).abs() + (x[1] + 1.0).powi(2),
            [2.0, 2.0],
        );
        assert!((m.x[0] - 0.3).abs() < 1e-8);
        assert!(m.value < 1e-8);
    }

    #[test]
    fn rosenbrock() {
        let nm = NelderMead {
            max_evaluations: 50_000,
            ..Default::default()
        };
        let m = nm.minimize(
            |p: &[f64; 2]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            [-1.2, 1.0],
        );
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn respects_evaluation_budget() {
        let nm = NelderMead {
            max_evaluations: 30,
            ..Default::default()
        };
        let m = nm.minimize(
            |p: &[f64; 2]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            [-1.2, 1.0],
        );
        assert!(!m.converged);
        assert!(m.evaluations <= 33);
    }
}
