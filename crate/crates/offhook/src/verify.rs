//! Invariant suites run by `offhook verify`.

use offhook_core::approximation::{
    field_g1, field_g2, z_dynamics_residual_with, NilpotentDrive, NilpotentSteer, Weights,
};
use offhook_core::controller::{check_c1, coeffs, coeffs_via_inverse};
use offhook_core::lie::{field, iterated_bracket, words_of_length, FieldRef};
use offhook_core::linalg::{norm, Mat5, Vec5};
use offhook_core::vehicle::{det_f0_closed_form, DriveField, SteerField};
use offhook_core::{
    bracket_matrix_f, bracket_matrix_g, compute_params, dilate, growth_vector, x_to_y, x_to_z,
    z_to_x, ApproxParams, ControlGains, ControlInput, LengthParams, StateX, StateZ,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Closed-form bracket matrix under test.
pub type FMatrixFn = fn(&LengthParams, &StateX) -> Mat5;

const SEED: u64 = 0x0ff_400c;
const COLUMN_WORDS: [&[u8]; 5] = [&[1], &[2], &[1, 2], &[1, 1, 2], &[1, 1, 1, 2]];
const LAMBDAS: [f64; 3] = [0.2, 0.1, 0.05];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

/// Closed form with one bracket entry perturbed, for exercising the suite.
pub fn corrupted_f_matrix(p: &LengthParams, x: &StateX) -> Mat5 {
    let mut m = bracket_matrix_f(p, x);
    m.0[3][2] *= 1.001;
    m
}

fn ball(rng: &mut ChaCha8Rng, radius: f64) -> Vec5 {
    loop {
        let v: Vec5 = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        if norm(&v) <= 1.0 {
            return v.map(|c| c * radius);
        }
    }
}

fn oracle(fields: &(FieldRef, FieldRef), x: &Vec5) -> Mat5 {
    let cols: [Vec5; 5] = std::array::from_fn(|j| {
        iterated_bracket(COLUMN_WORDS[j], (&fields.0, &fields.1))
            .unwrap()
            .eval_f64(x)
    });
    Mat5::from_columns(&cols)
}

fn column_relative_error(a: &Mat5, b: &Mat5) -> f64 {
    (0..5)
        .map(|j| {
            let (ca, cb) = (a.column(j), b.column(j));
            let scale = cb.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
            ca.iter()
                .zip(&cb)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
                / scale
        })
        .fold(0.0, f64::max)
}

fn max_diff(a: &Vec5, b: &Vec5) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    offhook_core::fit::line_fit(xs, ys).map_or(f64::NAN, |f| f.slope)
}

/// Empirical weighted order of each residual component along a dilation
/// curve; `None` for a component that vanishes identically.
pub fn residual_orders(
    p: &LengthParams,
    a: &ApproxParams,
    zbar: &StateZ,
    u: ControlInput,
) -> [Option<f64>; 5] {
    let res: Vec<Vec5> = LAMBDAS
        .iter()
        .map(|&l| match z_to_x(p, &dilate(zbar, l)) {
            Ok(x) => z_dynamics_residual_with(p, a, &x, u).unwrap_or([f64::NAN; 5]),
            Err(_) => [f64::NAN; 5],
        })
        .collect();
    let lx: Vec<f64> = LAMBDAS.iter().map(|l| l.ln()).collect();
    std::array::from_fn(|j| {
        if res.iter().all(|r| r[j] == 0.0) {
            None
        } else {
            let ly: Vec<f64> = res.iter().map(|r| r[j].abs().ln()).collect();
            Some(slope(&lx, &ly))
        }
    })
}

fn orders_ok(p: &LengthParams, a: &ApproxParams, zbar: &StateZ) -> (bool, Vec<String>) {
    let w = Weights::PRIVILEGED.w;
    let mut bad = Vec::new();
    for u in [ControlInput::new(1.0, 0.0), ControlInput::new(0.0, 1.0)] {
        for (j, o) in residual_orders(p, a, zbar, u).iter().enumerate() {
            if let Some(o) = o {
                if *o < w[j] as f64 - 0.15 || o.is_nan() {
                    bad.push(format!(
                        "component {} has order {o:.3} under u=({},{})",
                        j + 1,
                        u.u1,
                        u.u2
                    ));
                }
            }
        }
    }
    (bad.is_empty(), bad)
}

/// Runs every suite for the given lengths and gains.
pub fn run_suite(p: &LengthParams, gains: &ControlGains, f_matrix: FMatrixFn) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let a = compute_params(p);
    let f_fields = (field(DriveField(*p)), field(SteerField(*p)));
    let g_fields = (field(NilpotentDrive(a)), field(NilpotentSteer(a)));
    let mut out = Vec::new();

    let worst = (0..200)
        .map(|_| {
            let x = ball(&mut rng, 0.5);
            column_relative_error(&f_matrix(p, &StateX(x)), &oracle(&f_fields, &x))
        })
        .fold(0.0, f64::max);
    out.push(check(
        "bracket-oracle-f",
        worst <= 1e-8,
        format!("column-relative deviation {worst:.3e} at 200 points"),
    ));

    let worst = (0..200)
        .map(|_| {
            let z = ball(&mut rng, 2.0);
            column_relative_error(&bracket_matrix_g(&a, &StateZ(z)), &oracle(&g_fields, &z))
        })
        .fold(0.0, f64::max);
    out.push(check(
        "bracket-oracle-g",
        worst <= 1e-10,
        format!("column-relative deviation {worst:.3e} at 200 points"),
    ));

    let f0 = oracle(&f_fields, &[0.0; 5]);
    let want = det_f0_closed_form(p);
    let rel = ((f0.determinant() - want) / want)
        .abs()
        .max(((f_matrix(p, &StateX::default()).determinant() - want) / want).abs());
    out.push(check(
        "determinant-f0",
        rel <= 1e-9,
        format!("relative error {rel:.3e}, det F(0) = {want:.6e}"),
    ));

    let worst = (0..1000)
        .map(|_| (bracket_matrix_g(&a, &StateZ(ball(&mut rng, 2.0))).determinant() - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(check(
        "determinant-g",
        worst <= 1e-12,
        format!("max |det G - 1| = {worst:.3e}"),
    ));

    let brackets: Vec<FieldRef> = words_of_length(5)
        .iter()
        .map(|w| iterated_bracket(w, (&g_fields.0, &g_fields.1)).unwrap())
        .collect();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let z = ball(&mut rng, 2.0);
        for b in &brackets {
            let n = norm(&b.eval_f64(&z));
            worst = if n.is_finite() {
                worst.max(n)
            } else {
                f64::INFINITY
            };
        }
    }
    out.push(check(
        "nilpotency",
        worst < 1e-9,
        format!("largest length-5 bracket of (g1, g2): {worst:.3e}"),
    ));

    for (name, fields) in [
        ("growth-vector-f", &f_fields),
        ("growth-vector-g", &g_fields),
    ] {
        match growth_vector((&fields.0, &fields.1), &[0.0; 5], 4, 1e-8) {
            Ok(gv) => out.push(check(
                name,
                gv == [2, 3, 4, 5],
                format!("{gv:?} at the origin"),
            )),
            Err(e) => out.push(check(name, false, e.to_string())),
        }
    }

    let (worst_y, worst_rt) = match f0.inverse() {
        Some(finv) => (0..200).fold((0.0f64, 0.0f64), |(wy, wr), _| {
            let x = ball(&mut rng, 0.5);
            let z = ball(&mut rng, 0.5);
            let y = x_to_y(p, &StateX(x)).0;
            let back = z_to_x(p, &x_to_z(p, &StateX(x))).map_or([f64::NAN; 5], |s| s.0);
            let again = z_to_x(p, &StateZ(z)).map_or([f64::NAN; 5], |s| x_to_z(p, &s).0);
            let rt = max_diff(&back, &x).max(max_diff(&again, &z));
            (
                wy.max(max_diff(&y, &finv.mul_vec(&x))),
                if rt.is_nan() {
                    f64::INFINITY
                } else {
                    wr.max(rt)
                },
            )
        }),
        None => (f64::INFINITY, f64::INFINITY),
    };
    out.push(check(
        "transform-x-to-y",
        worst_y <= 1e-9,
        format!("max deviation from F(0)^-1 x: {worst_y:.3e}"),
    ));
    out.push(check(
        "transform-round-trip",
        worst_rt <= 1e-9,
        format!("max round-trip error {worst_rt:.3e}"),
    ));

    let worst = (0..1000)
        .map(|_| {
            let z = StateZ(ball(&mut rng, 2.0));
            max_diff(
                &coeffs(&a, gains.gamma, &z).to_array(),
                &coeffs_via_inverse(&a, gains.gamma, &z).to_array(),
            )
        })
        .fold(0.0, f64::max);
    out.push(check(
        "coefficients",
        worst <= 1e-10,
        format!("closed form vs forward substitution: {worst:.3e}"),
    ));

    let w = Weights::PRIVILEGED.w;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let z = ball(&mut rng, 2.0);
        let l = rng.random_range(0.05..3.0);
        let zl = dilate(&StateZ(z), l).0;
        let (c, cl) = (
            coeffs(&a, 1.0, &StateZ(z)).to_array(),
            coeffs(&a, 1.0, &StateZ(zl)).to_array(),
        );
        for (gl, g) in [
            (field_g1(&a, &zl), field_g1(&a, &z)),
            (field_g2(&a, &zl), field_g2(&a, &z)),
        ] {
            for j in 0..5 {
                let want = l.powi(w[j] as i32 - 1) * g[j];
                worst = worst.max((gl[j] - want).abs() / (1.0 + want.abs()));
            }
        }
        for j in 0..5 {
            let want = l.powi(w[j] as i32) * c[j];
            worst = worst.max((cl[j] - want).abs() / (1.0 + want.abs()));
        }
    }
    out.push(check(
        "homogeneity",
        worst <= 1e-11,
        format!("weighted homogeneity defect {worst:.3e}"),
    ));

    let worst = [ControlInput::new(1.0, 0.0), ControlInput::new(0.0, 1.0)]
        .iter()
        .map(|u| {
            z_dynamics_residual_with(p, &a, &StateX::default(), *u).map_or(f64::INFINITY, |r| {
                r.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
            })
        })
        .fold(0.0, f64::max);
    out.push(check(
        "residual-at-origin",
        worst < 1e-10,
        format!("{worst:.3e}"),
    ));

    let zbar = dilate(&StateZ([1.0, -2.0, 2.0, -1.0, 1.0]), 0.01);
    let (ok, bad) = orders_ok(p, &a, &zbar);
    let detail = if ok {
        "every component has order >= weight - 0.15".to_string()
    } else {
        let induced = ApproxParams::with_induced_kappa(p);
        let (fixed, _) = orders_ok(p, &induced, &zbar);
        format!(
            "{}; kappa = {:.6} is inconsistent with the coordinate change, kappa = {:.6} {}",
            bad.join(", "),
            a.kappa,
            induced.kappa,
            if fixed {
                "restores every order"
            } else {
                "does not help"
            }
        )
    };
    out.push(check("residual-order", ok, detail));

    match check_c1(gains) {
        Ok(()) => out.push(check(
            "resonance-c1",
            true,
            format!("k = ({}, {}, {})", gains.k12, gains.k112, gains.k1112),
        )),
        Err(r) => out.push(check("resonance-c1", false, r.to_string())),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find<'a>(checks: &'a [Check], name: &str) -> &'a Check {
        checks.iter().find(|c| c.name == name).unwrap()
    }

    #[test]
    fn unit_lengths_pass_everything() {
        let checks = run_suite(
            &LengthParams::UNIT,
            &ControlGains::REFERENCE,
            bracket_matrix_f,
        );
        assert!(checks.iter().all(|c| c.pass), "{checks:#?}");
    }

    #[test]
    fn corrupted_entry_is_caught() {
        let checks = run_suite(
            &LengthParams::UNIT,
            &ControlGains::REFERENCE,
            corrupted_f_matrix,
        );
        assert!(!find(&checks, "bracket-oracle-f").pass);
    }

    #[test]
    fn resonant_gains_report_a_witness() {
        let g = ControlGains::new(1.0, 0.1, 2, 1, 1).unwrap();
        let checks = run_suite(&LengthParams::UNIT, &g, bracket_matrix_f);
        let c = find(&checks, "resonance-c1");
        assert!(!c.pass && c.detail.contains("(0,1,-1)"), "{}", c.detail);
    }

    #[test]
    fn short_hooks_flag_only_the_residual_order() {
        let checks = run_suite(
            &LengthParams::SHORT_HOOKS,
            &ControlGains::REFERENCE,
            bracket_matrix_f,
        );
        let failed: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        assert_eq!(failed, vec!["residual-order"]);
        assert!(find(&checks, "residual-order")
            .detail
            .contains("restores every order"));
    }
}
