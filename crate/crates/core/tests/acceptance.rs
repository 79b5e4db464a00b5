//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Reference values are computed here from elementary formulas rather than taken from the
//! library's closed-form module wherever that is practical.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use qbound::closed_forms::{self, Example1Branch};
use qbound::measurement::{
    build_scheme, compare_to_bound, run_scheme, SchemeSpec, ACCEPTANCE_SIGMAS,
};
use qbound::region::{self, EnvelopeGrid};
use qbound::{build_probe, solve, ChannelParams, ProbeConfig, SymplecticTransform, Weights};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL_SINGLE_MODE: f64 = 1e-9;
const TOL_BALANCED: f64 = 1e-6;
const TOL_LAMBDA_PATH: f64 = 1e-12;
const TOL_SOLVER_PATH: f64 = 1e-6;
const TOL_GAMMA: f64 = 1e-12;
const TOL_RESIDUAL: f64 = 1e-10;
const TOL_ENVELOPE_GAP: f64 = 1e-3;
const TOL_ENVELOPE_DIP: f64 = 1e-9;
const TOL_EXACT: f64 = 1e-15;
const TOL_SYMPLECTIC: f64 = 1e-10;
const TOL_CONTINUITY: f64 = 1e-9;
const TOL_SYMMETRY: f64 = 1e-9;
const TOL_SCALING: f64 = 1e-12;
const RANDOM_CASES: usize = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn eq3a(v_x: f64, r1: f64, r2: f64) -> f64 {
    let (e1, e2, e12) = ((-2.0 * r1).exp(), (-2.0 * r2).exp(), (-r1 - r2).exp());
    let (v_c, v_d) = (e2 + e12, e1 + e12);
    if v_x < v_c {
        v_x * e1 / (v_x - e2)
    } else if v_x < v_d {
        ((-r1).exp() + (-r2).exp()).powi(2) - v_x
    } else {
        v_x * e2 / (v_x - e1)
    }
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for i in 0..=15 {
        let r = 0.1 * i as f64;
        for k in 0..=6 {
            let phi = k as f64 * PI / 12.0;
            for ratio in [0.1, 1.0, 10.0] {
                let w = Weights::new(ratio, 1.0).unwrap();
                let state = build_probe(&ProbeConfig::single_mode(r, phi).unwrap()).unwrap();
                let got = solve(state.cov(), &w).unwrap().f_hcr;
                let (s, c) = phi.sin_cos();
                let v_a = (-2.0 * r).exp() * c * c + (2.0 * r).exp() * s * s;
                let v_b = (-2.0 * r).exp() * s * s + (2.0 * r).exp() * c * c;
                let expected = ratio * v_a + v_b + 2.0 * ratio.sqrt();
                worst = worst.max(rel(got, expected));
                cases += 1;
            }
        }
    }
    outcome(
        worst <= TOL_SINGLE_MODE,
        format!("single-mode solver vs closed form: {cases} cases, max rel err {worst:.2e} (tol {TOL_SINGLE_MODE:e})"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for r in [0.2, 0.5, 0.693] {
        for (wx, wy) in [(1.0, 1.0), (1.0, 4.0), (4.0, 1.0)] {
            let w = Weights::new(wx, wy).unwrap();
            let t = f64::sqrt(wy) / (f64::sqrt(wx) + f64::sqrt(wy));
            let probe = ProbeConfig::two_mode(r, r, 0.0, FRAC_PI_2, t).unwrap();
            let got = solve(build_probe(&probe).unwrap().cov(), &w).unwrap().f_hcr;
            let expected = (f64::sqrt(wx) + f64::sqrt(wy)).powi(2) * (-2.0 * r).exp();
            worst = worst.max(rel(got, expected));
        }
    }
    outcome(
        worst <= TOL_BALANCED,
        format!("equal-squeezing optimum at t*(W): 9 cases, max rel err {worst:.2e} (tol {TOL_BALANCED:e})"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst_lambda: f64 = 0.0;
    let mut worst_solver: f64 = 0.0;
    let mut at_quarter = f64::NAN;
    for r in [0.2, 0.5, LN_2, 1.0] {
        let expected = 1.0 / (2.0 * r).cosh();
        let probe = ProbeConfig::two_mode(r, r, 0.0, FRAC_PI_2, 0.5).unwrap();
        let cov = build_probe(&probe).unwrap().cov().clone();

        let lx = closed_forms::gamma_quartic_root(0.0, r).unwrap().lambda;
        let ly = closed_forms::gamma_quartic_root(f64::INFINITY, r)
            .unwrap()
            .lambda;
        let v_x = closed_forms::example2_parametric(lx, r, 0.5).unwrap().0;
        let v_y = closed_forms::example2_parametric(ly, r, 0.5).unwrap().1;
        worst_lambda = worst_lambda.max(rel(v_x, expected)).max(rel(v_y, expected));

        for (w, axis) in [
            (Weights::new(1.0, 0.0).unwrap(), 0),
            (Weights::new(0.0, 1.0).unwrap(), 1),
        ] {
            let b = solve(&cov, &w).unwrap();
            let tv = b.tangent_variances(&w);
            let v = if axis == 0 { tv.0 } else { tv.1 };
            worst_solver = worst_solver
                .max(rel(v, expected))
                .max(rel(b.f_hcr, expected));
        }
        if r == LN_2 {
            at_quarter = v_x;
        }
    }
    let eight_17 = rel(at_quarter, 8.0 / 17.0);
    outcome(
        worst_lambda <= TOL_LAMBDA_PATH && worst_solver <= TOL_SOLVER_PATH && eight_17 <= TOL_LAMBDA_PATH,
        format!(
            "t=0.5 single-weight variances = 1/cosh 2r: lambda path {worst_lambda:.2e} (tol {TOL_LAMBDA_PATH:e}), \
             solver {worst_solver:.2e} (tol {TOL_SOLVER_PATH:e}); e^(-2r)=1/4 gives {at_quarter:.6} vs 8/17 ({eight_17:.1e})"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_equal: f64 = 0.0;
    let mut worst_coth: f64 = 0.0;
    for _ in 0..20 {
        let r = rng.random_range(0.01..2.0);
        let g = closed_forms::gamma_quartic_root(1.0, r).unwrap().gamma;
        worst_equal = worst_equal.max((g - 1.0).abs());
        let g0 = closed_forms::gamma_quartic_root(0.0, r).unwrap().gamma;
        worst_coth = worst_coth.max(rel(g0, 1.0 / (2.0 * r).tanh()));
    }
    let mut worst_residual: f64 = 0.0;
    for _ in 0..10_000 {
        let ratio = 10f64.powf(rng.random_range(-3.0..3.0));
        let r = rng.random_range(0.01..2.0);
        let g = closed_forms::gamma_quartic_root(ratio, r).unwrap().gamma;
        let th = (2.0 * r).tanh();
        let residual = ratio * g.powi(3) * (g - th) + g * th - 1.0;
        worst_residual = worst_residual.max(residual.abs());
    }
    outcome(
        worst_equal <= TOL_GAMMA && worst_coth <= TOL_GAMMA && worst_residual <= TOL_RESIDUAL,
        format!(
            "gamma quartic: |gamma-1| {worst_equal:.1e}, coth 2r rel {worst_coth:.1e} (tol {TOL_GAMMA:e}); \
             max residual over 10^4 draws {worst_residual:.1e} (tol {TOL_RESIDUAL:e})"
        ),
    )
}

fn criterion_5() -> Outcome {
    let (r1, r2) = (0.35, 0.69);
    let grid = EnvelopeGrid::matched(r1, r2, 50, 25, 50, 100.0).unwrap();
    let env = region::envelope(r1, r2, &grid).unwrap();
    let Some((lo, hi)) = env.span() else {
        return outcome(false, "envelope is empty");
    };
    let (a, b) = (lo * (1.0 + 1e-12), hi * (1.0 - 1e-12));
    let mut worst_gap: f64 = 0.0;
    let mut worst_dip: f64 = 0.0;
    for k in 0..50 {
        let v_x = a * (b / a).powf(k as f64 / 49.0);
        let got = env.value_at(v_x).unwrap();
        let expected = eq3a(v_x, r1, r2);
        worst_gap = worst_gap.max((got - expected) / expected);
        worst_dip = worst_dip.max(expected - got);
    }
    for s in &env.samples {
        worst_dip = worst_dip.max(eq3a(s.v_x, r1, r2) - s.v_y);
    }
    outcome(
        worst_gap <= TOL_ENVELOPE_GAP && worst_dip <= TOL_ENVELOPE_DIP,
        format!(
            "envelope (0.35, 0.69) from {} samples over v_x in [{lo:.4}, {hi:.4}]: max rel gap {worst_gap:.2e} \
             (tol {TOL_ENVELOPE_GAP:e}), max dip {worst_dip:.1e} (tol {TOL_ENVELOPE_DIP:e}), {} unconverged",
            env.swept, env.unconverged
        ),
    )
}

fn criterion_6() -> Outcome {
    let r = LN_2;
    let opt = closed_forms::optimal_config(&Weights::new(1.0, 1.0).unwrap(), r, r, 0.0).unwrap();
    let balanced = (opt.v_x - 0.5).abs().max((opt.v_y - 0.5).abs());

    // 3 dB in the e^{-2r} = 1/2 sense
    let r_sm = LN_2 / 2.0;
    let mut single: f64 = 0.0;
    for k in 0..=6 {
        let phi = k as f64 * PI / 12.0;
        let state = build_probe(&ProbeConfig::single_mode(r_sm, phi).unwrap()).unwrap();
        single = single.max(
            (solve(state.cov(), &Weights::new(1.0, 1.0).unwrap())
                .unwrap()
                .f_hcr
                - 4.5)
                .abs(),
        );
    }

    let r2 = LN_2;
    let e2 = (-2.0 * r2).exp();
    let mirrored = (closed_forms::example1_relations(2.0, 2.0 * e2, r2, Example1Branch::YFavoured)
        .unwrap()
        - 1.0)
        .abs()
        .max(
            (closed_forms::example1_relations(2.0 * e2, 2.0, r2, Example1Branch::XFavoured)
                .unwrap()
                - 1.0)
                .abs(),
        );
    let literal =
        closed_forms::example1_relations(2.0 * e2, 2.0, r2, Example1Branch::YFavoured).unwrap();

    outcome(
        balanced <= TOL_EXACT && single <= 4.0 * TOL_EXACT && mirrored <= TOL_EXACT,
        format!(
            "point values: balanced (0.5, 0.5) err {balanced:.1e}; 3 dB equal-weight 4.5 err {single:.1e}; \
             example-1 points on their relations err {mirrored:.1e} (tol {TOL_EXACT:e}); \
             literal (2e^(-2r2), 2) on the phi2=pi/2 relation gives {literal:.6}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let cases = [
        (
            "balanced",
            SchemeSpec::Balanced { r: LN_2, t: 0.5 },
            (0.5, 0.5),
        ),
        (
            "example1",
            SchemeSpec::Example1 {
                r2: LN_2,
                phi2: 0.0,
                t: 1.0 / 3.0,
            },
            (0.75, 1.5),
        ),
    ];
    let thetas = [ChannelParams::new(0.3, -0.1), ChannelParams::new(0.0, 0.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (name, spec, (tx, ty))) in cases.iter().enumerate() {
        let scheme = build_scheme(spec).unwrap();
        let probe = spec.probe().unwrap();
        for (j, &theta) in thetas.iter().enumerate() {
            let rep =
                run_scheme(&scheme, &probe, theta, 1_000_000, 100 + (2 * i + j) as u64).unwrap();
            let zv = ((rep.var_x - tx) / rep.se_var_x)
                .abs()
                .max(((rep.var_y - ty) / rep.se_var_y).abs());
            let zb = ((rep.mean_x - theta.theta_x) / rep.se_mean_x)
                .abs()
                .max(((rep.mean_y - theta.theta_y) / rep.se_mean_y).abs());
            pass &= zv <= ACCEPTANCE_SIGMAS && zb <= ACCEPTANCE_SIGMAS;
            parts.push(format!(
                "{name}@({},{}) var ({:.4}, {:.4}) {zv:.1}σ, bias {zb:.1}σ",
                theta.theta_x, theta.theta_y, rep.var_x, rep.var_y
            ));
        }
    }
    outcome(
        pass,
        format!(
            "Monte Carlo, 10^6 shots, band {ACCEPTANCE_SIGMAS}σ: {}",
            parts.join("; ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let fig2b = ProbeConfig::two_mode(0.35, 0.69, 0.0, FRAC_PI_2, 0.4).unwrap();
    let mut cases: Vec<(String, SchemeSpec, Weights, bool)> = Vec::new();
    for r in [0.2, LN_2] {
        for (wx, wy) in [(1.0, 1.0), (1.0, 4.0), (4.0, 1.0)] {
            let w = Weights::new(wx, wy).unwrap();
            cases.push((
                format!("balanced r={r:.3} W={wx}:{wy}"),
                SchemeSpec::balanced_optimal(r, &w),
                w,
                true,
            ));
        }
    }
    let eq = Weights::new(1.0, 1.0).unwrap();
    cases.push((
        "balanced t=0.9".into(),
        SchemeSpec::Balanced { r: LN_2, t: 0.9 },
        eq,
        false,
    ));
    cases.push((
        "vacuum t=0.5".into(),
        SchemeSpec::Balanced { r: 0.0, t: 0.5 },
        eq,
        true,
    ));
    for t in [0.2, 1.0 / 3.0, 0.6] {
        cases.push((
            format!("example1 t={t:.3}"),
            SchemeSpec::Example1 {
                r2: LN_2,
                phi2: 0.0,
                t,
            },
            eq,
            false,
        ));
    }
    cases.push((
        "example1 phi2=pi/2".into(),
        SchemeSpec::Example1 {
            r2: LN_2,
            phi2: FRAC_PI_2,
            t: 0.5,
        },
        eq,
        false,
    ));
    for (wx, wy) in [(1.0, 1.0), (1.0, 3.0), (3.0, 1.0)] {
        let w = Weights::new(wx, wy).unwrap();
        cases.push((
            format!("general fig2b W={wx}:{wy}"),
            SchemeSpec::General {
                probe: fig2b,
                weights: w,
            },
            w,
            true,
        ));
    }

    let mut violations = Vec::new();
    let mut min_z = f64::INFINITY;
    let mut saturated = 0;
    let mut optimal = 0;
    for (k, (name, spec, w, is_optimal)) in cases.iter().enumerate() {
        let probe = spec.probe().unwrap();
        let bound = solve(build_probe(&probe).unwrap().cov(), w).unwrap().f_hcr;
        let scheme = build_scheme(spec).unwrap();
        let rep = run_scheme(
            &scheme,
            &probe,
            ChannelParams::new(0.2, 0.4),
            200_000,
            800 + k as u64,
        )
        .unwrap();
        let v = compare_to_bound(&rep, bound, w, *is_optimal);
        min_z = min_z.min(v.z_score);
        if v.violates_bound {
            violations.push(name.clone());
        }
        if *is_optimal {
            optimal += 1;
            saturated += usize::from(v.saturates);
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "no empirical weighted sum below f_HCR - {ACCEPTANCE_SIGMAS}SE over {} schemes: min z {min_z:.2}, \
             {saturated}/{optimal} optimal schemes saturate{}",
            cases.len(),
            if violations.is_empty() { String::new() } else { format!("; violations: {}", violations.join(", ")) }
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (e1, product) in [(0.51, 0.2601), (0.51, 0.2401), (0.7, 0.2601), (0.7, 0.2401)] {
        let e2 = product / e1;
        let (r1, r2) = (-0.5 * f64::ln(e1), -0.5 * f64::ln(e2));
        let s = region::sql_feasible(r1, r2).unwrap();
        let expected = product < 0.25;
        pass &= s.feasible == expected;
        if let Some((x, y)) = s.witness {
            pass &= x * y < 1.0;
        }
        parts.push(format!("{product} (e1={e1}) -> {}", s.feasible));
    }
    outcome(
        pass,
        format!("SQL threshold at product 1/4: {}", parts.join(", ")),
    )
}

fn omega(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    let om = omega(2);
    let mut defect: f64 = 0.0;
    for _ in 0..RANDOM_CASES {
        let t = rng.random_range(0.0..=1.0);
        let r1 = SymplecticTransform::rotation(rng.random_range(-PI..PI), 2, 0).unwrap();
        let r2 = SymplecticTransform::rotation(rng.random_range(-PI..PI), 2, 1).unwrap();
        let s = SymplecticTransform::beam_splitter(t)
            .unwrap()
            .after(&r2.after(&r1).unwrap())
            .unwrap();
        let m = s.matrix();
        defect = defect.max((m * &om * m.transpose() - &om).abs().max());
    }

    let mut continuity: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    for _ in 0..RANDOM_CASES {
        let a: f64 = rng.random_range(0.0..1.5);
        let b = rng.random_range(0.0..1.5);
        let (r1, r2) = if a <= b { (a, b) } else { (b, a) };
        let (v_c, v_d) = closed_forms::envelope_breakpoints(r1, r2).unwrap();
        for v in [v_c, v_d] {
            let below = closed_forms::two_mode_envelope(v * (1.0 - 1e-13), r1, r2)
                .unwrap()
                .v_y;
            let at = closed_forms::two_mode_envelope(v, r1, r2).unwrap().v_y;
            continuity = continuity.max((below - at).abs());
        }
        let e2 = (-2.0 * r2).exp();
        let v_x = e2 * (1.0 + 10f64.powf(rng.random_range(-2.0..2.0)));
        let v_y = closed_forms::two_mode_envelope(v_x, r1, r2).unwrap().v_y;
        let back = closed_forms::two_mode_envelope(v_y, r1, r2).unwrap().v_y;
        symmetry = symmetry.max(rel(back, v_x));
    }

    let mut scaling: f64 = 0.0;
    for _ in 0..RANDOM_CASES {
        let a: f64 = rng.random_range(0.0..1.2);
        let b = rng.random_range(0.0..1.2);
        let probe = ProbeConfig::two_mode(
            a.min(b),
            a.max(b),
            rng.random_range(0.0..PI),
            rng.random_range(0.0..PI),
            rng.random_range(0.05..0.95),
        )
        .unwrap();
        let cov = build_probe(&probe).unwrap().cov().clone();
        let w = Weights::new(rng.random_range(0.05..1.0), rng.random_range(0.05..1.0)).unwrap();
        let c = 10f64.powf(rng.random_range(-1.0..1.0));
        let f = solve(&cov, &w).unwrap().f_hcr;
        let fc = solve(&cov, &w.scaled(c).unwrap()).unwrap().f_hcr;
        scaling = scaling.max(rel(fc, c * f));
    }

    outcome(
        defect <= TOL_SYMPLECTIC
            && continuity <= TOL_CONTINUITY
            && symmetry <= TOL_SYMMETRY
            && scaling <= TOL_SCALING,
        format!(
            "{RANDOM_CASES} cases each: symplectic defect {defect:.1e} (tol {TOL_SYMPLECTIC:e}), \
             continuity {continuity:.1e} (tol {TOL_CONTINUITY:e}), x<->y symmetry {symmetry:.1e} \
             (tol {TOL_SYMMETRY:e}), W-scaling {scaling:.1e} (tol {TOL_SCALING:e})"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [fn() -> Outcome; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut failed = 0;
    for (i, run) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| outcome(false, "panicked (see message above)"));
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {tag} [{:.1}s] {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
        failed += usize::from(!result.pass);
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
