#![allow(dead_code)]

use nalgebra::{Matrix5, Vector5};
use offhook_core::approximation::{NilpotentDrive, NilpotentSteer};
use offhook_core::lie::{field, iterated_bracket, FieldRef};
use offhook_core::vehicle::{DriveField, SteerField};
use offhook_core::{
    dilate, z_dynamics_residual_with, z_to_x, ApproxParams, ControlInput, LengthParams, Mat5,
    StateZ, Vec5,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const REFERENCE_Z0: StateZ = StateZ([1.0, -2.0, 2.0, -1.0, 1.0]);

/// Column words of the bracket matrix.
pub const COLUMN_WORDS: [&[u8]; 5] = [&[1], &[2], &[1, 2], &[1, 1, 2], &[1, 1, 1, 2]];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_lengths(rng: &mut ChaCha8Rng) -> LengthParams {
    LengthParams {
        d0: rng.random_range(0.05..2.0),
        d1: rng.random_range(0.05..2.0),
        l1: rng.random_range(0.05..2.0),
        l2: rng.random_range(0.05..2.0),
    }
}

/// Uniform sample from the closed ball of the given radius.
pub fn random_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> Vec5 {
    loop {
        let v: Vec5 = core::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 {
            return v.map(|x| x * radius);
        }
    }
}

pub fn vehicle_fields(p: LengthParams) -> (FieldRef, FieldRef) {
    (field(DriveField(p)), field(SteerField(p)))
}

pub fn nilpotent_fields(a: ApproxParams) -> (FieldRef, FieldRef) {
    (field(NilpotentDrive(a)), field(NilpotentSteer(a)))
}

/// Bracket matrix assembled from differentiated brackets.
pub fn oracle_matrix(fields: &(FieldRef, FieldRef), x: &Vec5) -> Matrix5<f64> {
    let cols: Vec<Vector5<f64>> = COLUMN_WORDS
        .iter()
        .map(|w| {
            Vector5::from(
                iterated_bracket(w, (&fields.0, &fields.1))
                    .unwrap()
                    .eval_f64(x),
            )
        })
        .collect();
    Matrix5::from_columns(&cols)
}

pub fn to_na(m: &Mat5) -> Matrix5<f64> {
    Matrix5::from_fn(|i, j| m[(i, j)])
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Every `c ∈ [−4, 4]³` with `Σ|cᵢ| ≤ 4`, nonzero, coprime and `c·k = 0`.
pub fn brute_force_resonances(k: [i64; 3]) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for c1 in -4i64..=4 {
        for c2 in -4i64..=4 {
            for c3 in -4i64..=4 {
                let ord = c1.abs() + c2.abs() + c3.abs();
                if ord == 0 || ord > 4 || gcd(gcd(c1, c2), c3) != 1 {
                    continue;
                }
                if c1 * k[0] + c2 * k[1] + c3 * k[2] == 0 {
                    out.push([c1, c2, c3]);
                }
            }
        }
    }
    out.sort();
    out
}

pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub const DILATION_LAMBDAS: [f64; 3] = [0.2, 0.1, 0.05];

/// Empirical weighted order of each residual component along the dilation
/// curve through `zbar`. `None` marks a component that vanishes identically.
pub fn residual_orders(
    p: &LengthParams,
    a: &ApproxParams,
    zbar: &StateZ,
    u: ControlInput,
) -> [Option<f64>; 5] {
    let res: Vec<Vec5> = DILATION_LAMBDAS
        .iter()
        .map(|&l| {
            let x = z_to_x(p, &dilate(zbar, l)).unwrap();
            z_dynamics_residual_with(p, a, &x, u).unwrap()
        })
        .collect();
    let lx: Vec<f64> = DILATION_LAMBDAS.iter().map(|l| l.ln()).collect();
    core::array::from_fn(|j| {
        if res.iter().all(|r| r[j] == 0.0) {
            None
        } else {
            let ly: Vec<f64> = res.iter().map(|r| r[j].abs().ln()).collect();
            Some(log_slope(&lx, &ly))
        }
    })
}
