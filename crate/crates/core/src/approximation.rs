//! Privileged coordinates and the nilpotent approximation.
//!
//! The coordinate change is `x → y = F(0)⁻¹x → z`, with
//! `z = (x₁, x₃, −x₂, y₄, y₅ − βx₃³)`. In `z` the vehicle reads
//! `ż = u₁g₁(z) + u₂g₂(z) + r(z, u)` where `g₁, g₂` are weighted-homogeneous
//! polynomials of degree −1 under the dilation with weights `(1,1,2,3,4)`.

use alloc::string::String;

use crate::error::{Error, Result};
use crate::lie::{jacobian, Field};
use crate::linalg::{Mat5, Vec5};
use crate::scalar::Scalar;
use crate::vehicle::{velocity, ControlInput, LengthParams, StateX};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateY(pub [f64; 5]);

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateZ(pub [f64; 5]);

impl StateZ {
    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.0)
    }
}

/// Coordinate weights and degree of nonholonomy at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weights {
    pub w: [u32; 5],
    pub r: u32,
}

impl Weights {
    pub const PRIVILEGED: Weights = Weights {
        w: [1, 1, 2, 3, 4],
        r: 4,
    };
}

/// Scalars of the nilpotent model, all functions of the four lengths.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ApproxParams {
    pub alpha: f64,
    pub kappa: f64,
    pub theta: f64,
    pub beta: f64,
}

impl ApproxParams {
    pub fn from_lengths(p: &LengthParams) -> Self {
        compute_params(p)
    }

    /// Coefficient of `z₂³u₁` that the coordinate change actually produces in
    /// `ż₅`. It equals `kappa − β(ℓ₁+ℓ₂)/(ℓ₁ℓ₂)`, so it coincides with the
    /// closed-form `kappa` only when `β = 0`. With the closed-form value the
    /// fifth residual component keeps a `β(ℓ₁+ℓ₂)/(ℓ₁ℓ₂)·z₂³u₁` term of weighted
    /// degree 3 instead of 4.
    pub fn induced_kappa(p: &LengthParams) -> f64 {
        let a = compute_params(p);
        a.kappa - a.beta * (p.l1 + p.l2) / (p.l1 * p.l2)
    }

    /// Same parameters with `kappa` replaced by [`ApproxParams::induced_kappa`].
    pub fn with_induced_kappa(p: &LengthParams) -> Self {
        ApproxParams {
            kappa: Self::induced_kappa(p),
            ..compute_params(p)
        }
    }
}

/// `α`, `κ`, `θ`, `β` from their closed forms.
pub fn compute_params(p: &LengthParams) -> ApproxParams {
    let LengthParams { d0, d1, l1, l2 } = *p;
    let l1_3 = l1 * l1 * l1;
    let alpha = (d0.powu(3) * (l1_3 + l1 * l1 * l2 - l1 * l2 * l2 - d1 * l2 * (d1 + l2))
        + d0 * l1_3 * (d0 * (l1 + 2.0 * l2) + l2 * (l1 + l2)))
        / (2.0 * (d0 + l2) * l1_3);
    let kappa = d0
        * d0
        * (1.5 * l2 * l2 * (d0 + l1) * (d1 + l1)
            - l2 * (l1_3 + 0.5 * d0 * l1 * l1 - d1 * l1 * (d0 + 1.5 * d1) - 1.5 * d0 * d1 * d1)
            + 0.5 * d0 * d1 * d1 * l1)
        / (3.0 * (d0 + l2) * l1_3);
    let theta = d0
        * d0
        * (l2 * l2 * (d1 + l1) * (d0 + l1)
            + (d0 * d1 + (d0 + d1) * l1) * d1 * l2
            + d0 * d1 * d1 * l1)
        / ((d0 + l2) * l1_3);
    let beta = d0 * l2 * (d0 * d0 * (d1 + l1) * (l1 - l2 - d1) + l1_3 * (d0 + l2))
        / (6.0 * (d0 + l2) * l1 * l1);
    ApproxParams {
        alpha,
        kappa,
        theta,
        beta,
    }
}

/// Rows 4 and 5 of `F(0)⁻¹` (rows 1–3 are `x₁`, `x₃`, `−x₂`).
fn dual_basis_rows(p: &LengthParams) -> ([f64; 5], [f64; 5]) {
    let LengthParams { d0, d1, l1, l2 } = *p;
    let a = (d0 + l1) * (d0 + l2);
    let b = (d0 + l2) * (d1 + l2);
    let abc = (d0 + l1) * (d0 + l2) * (d1 + l2);
    let l2_4 = l2.powu(4);
    let y4 = [
        0.0,
        l1 + l2,
        -d0 * (d0 * (l1 * l1 + l1 * l2 + l2 * l2) + l1 * l2 * (l1 + l2)) / a,
        -(l2 * l2 * (l1 + l2) * (d1 + l1) / b
            + (l1 * l1 * l2 * (d0 * d1 + (d0 + d1) * l1) + d0 * d1 * l1.powu(3)) / abc),
        -l2_4 / b,
    ];
    let y5 = [
        0.0,
        -l1 * l2,
        d0 * l1 * l2 * (l1 * l2 + d0 * (l1 + l2)) / a,
        l1 * l2.powu(3) * (d1 + l1) / b
            + l1 * l1 * l2 * (l2 * (d0 * d1 + (d0 + d1) * l1) + d0 * d1 * l1) / abc,
        l1 * l2_4 / b,
    ];
    (y4, y5)
}

fn dot<S: Scalar>(row: &[f64; 5], x: &[S; 5]) -> S {
    let mut acc = S::zero();
    for i in 0..5 {
        acc += S::from_f64(row[i]) * x[i];
    }
    acc
}

/// `y = F(0)⁻¹x` in closed form.
pub fn x_to_y(p: &LengthParams, x: &StateX) -> StateY {
    let (y4, y5) = dual_basis_rows(p);
    let x = &x.0;
    StateY([x[0], x[2], -x[1], dot(&y4, x), dot(&y5, x)])
}

/// Privileged coordinates on any scalar (used for exact differentiation).
pub fn x_to_z_generic<S: Scalar>(p: &LengthParams, x: &[S; 5]) -> [S; 5] {
    let (y4, y5) = dual_basis_rows(p);
    let beta = S::from_f64(compute_params(p).beta);
    [
        x[0],
        x[2],
        -x[1],
        dot(&y4, x),
        dot(&y5, x) - beta * x[2].powu(3),
    ]
}

pub fn x_to_z(p: &LengthParams, x: &StateX) -> StateZ {
    StateZ(x_to_z_generic(p, &x.0))
}

/// Pivot magnitude below which the `(x₄, x₅)` subsystem counts as singular.
pub const PIVOT_GUARD: f64 = 1e-12;

// Gaussian elimination with row pivoting on a 2×2 system.
fn solve2(m: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let (m, b) = if m[1][0].abs() > m[0][0].abs() {
        ([m[1], m[0]], [b[1], b[0]])
    } else {
        (m, b)
    };
    if m[0][0].abs() < PIVOT_GUARD {
        return None;
    }
    let f = m[1][0] / m[0][0];
    let p2 = m[1][1] - f * m[0][1];
    if p2.abs() < PIVOT_GUARD {
        return None;
    }
    let x1 = (b[1] - f * b[0]) / p2;
    Some([(b[0] - m[0][1] * x1) / m[0][0], x1])
}

/// Inverse of [`x_to_z`]. Only the headings `x₄, x₅` need a linear solve.
pub fn z_to_x(p: &LengthParams, z: &StateZ) -> Result<StateX> {
    let (y4, y5) = dual_basis_rows(p);
    let beta = compute_params(p).beta;
    let z = &z.0;
    let (x1, x3, x2) = (z[0], z[1], -z[2]);
    let rhs = [
        z[3] - y4[1] * x2 - y4[2] * x3,
        z[4] + beta * x3 * x3 * x3 - y5[1] * x2 - y5[2] * x3,
    ];
    let [x4, x5] =
        solve2([[y4[3], y4[4]], [y5[3], y5[4]]], rhs).ok_or(Error::SingularTransform(*p))?;
    Ok(StateX([x1, x2, x3, x4, x5]))
}

/// Drift-free field `g₁ = (1, 0, −z₂, −z₃, κz₂³ − z₄)`.
pub fn field_g1<S: Scalar>(a: &ApproxParams, z: &[S; 5]) -> [S; 5] {
    let kappa = S::from_f64(a.kappa);
    [
        S::one(),
        S::zero(),
        -z[1],
        -z[2],
        kappa * z[1].powu(3) - z[3],
    ]
}

/// `g₂ = (0, 1, 0, −αz₂², −θz₂z₃)`.
pub fn field_g2<S: Scalar>(a: &ApproxParams, z: &[S; 5]) -> [S; 5] {
    let alpha = S::from_f64(a.alpha);
    let theta = S::from_f64(a.theta);
    [
        S::zero(),
        S::one(),
        S::zero(),
        -(alpha * z[1] * z[1]),
        -(theta * z[1] * z[2]),
    ]
}

#[derive(Clone, Copy, Debug)]
pub struct NilpotentDrive(pub ApproxParams);

#[derive(Clone, Copy, Debug)]
pub struct NilpotentSteer(pub ApproxParams);

impl Field for NilpotentDrive {
    fn label(&self) -> String {
        "g1".into()
    }
    fn eval<S: Scalar>(&self, z: &[S; 5]) -> [S; 5] {
        field_g1(&self.0, z)
    }
}

impl Field for NilpotentSteer {
    fn label(&self) -> String {
        "g2".into()
    }
    fn eval<S: Scalar>(&self, z: &[S; 5]) -> [S; 5] {
        field_g2(&self.0, z)
    }
}

/// `x ↦ z` viewed as a map on ℝ⁵, so its Jacobian comes from the same
/// machinery as the brackets.
#[derive(Clone, Copy, Debug)]
pub struct CoordinateChange(pub LengthParams);

impl Field for CoordinateChange {
    fn label(&self) -> String {
        "x->z".into()
    }
    fn eval<S: Scalar>(&self, x: &[S; 5]) -> [S; 5] {
        x_to_z_generic(&self.0, x)
    }
}

/// Closed-form `G(z) = (g₁, g₂, [g₁,g₂], [g₁,[g₁,g₂]], [g₁,[g₁,[g₁,g₂]]])`.
/// Unit lower-triangular, so `det G(z) = 1`.
pub fn bracket_matrix_g(a: &ApproxParams, z: &StateZ) -> Mat5 {
    let z = &z.0;
    let g1 = field_g1(a, z);
    let g2 = field_g2(a, z);
    let b12 = [
        0.0,
        0.0,
        1.0,
        0.0,
        -(a.alpha + 3.0 * a.kappa - a.theta) * z[1] * z[1],
    ];
    Mat5::from_columns(&[
        g1,
        g2,
        b12,
        [0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ])
}

/// Weighted dilation `(λz₁, λz₂, λ²z₃, λ³z₄, λ⁴z₅)`. Requires `λ > 0`.
pub fn dilate(z: &StateZ, lambda: f64) -> StateZ {
    debug_assert!(lambda > 0.0);
    let w = Weights::PRIVILEGED.w;
    StateZ(core::array::from_fn(|i| z.0[i] * lambda.powu(w[i])))
}

/// `d/dt z(x(t))` along `ẋ = u₁f₁ + u₂f₂`, minus the nilpotent model
/// `u₁g₁(z) + u₂g₂(z)` at `z = x_to_z(x)`, with the closed-form parameters.
pub fn z_dynamics_residual(p: &LengthParams, x: &StateX, u: ControlInput) -> Result<Vec5> {
    z_dynamics_residual_with(p, &compute_params(p), x, u)
}

/// [`z_dynamics_residual`] against an explicit set of model parameters.
pub fn z_dynamics_residual_with(
    p: &LengthParams,
    a: &ApproxParams,
    x: &StateX,
    u: ControlInput,
) -> Result<Vec5> {
    let jac = jacobian(&CoordinateChange(*p), &x.0)?;
    let zdot = jac.mul_vec(&velocity(p, x, u));
    let z = x_to_z(p, x).0;
    let g1 = field_g1(a, &z);
    let g2 = field_g2(a, &z);
    Ok(core::array::from_fn(|i| {
        zdot[i] - (u.u1 * g1[i] + u.u2 * g2[i])
    }))
}
