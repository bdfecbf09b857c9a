//! Kinematics of a car pulling two off-hooked trailers.
//!
//! State `x = (x, y, φ, θ₁, θ₂)`: axle midpoint of the car, car heading and
//! the two trailer headings. Angles are never wrapped.

use alloc::string::String;

use crate::error::{Error, Result};
use crate::lie::Field;
use crate::linalg::{Mat5, Vec5};
use crate::scalar::{seed, Scalar};

/// Mechanical lengths of the hitch chain (m).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LengthParams {
    /// Hook offset of trailer 1 behind the car axle.
    pub d0: f64,
    /// Hook offset of trailer 2 behind the trailer-1 axle.
    pub d1: f64,
    /// Drawbar length of trailer 1.
    pub l1: f64,
    /// Drawbar length of trailer 2.
    pub l2: f64,
}

impl LengthParams {
    pub fn new(d0: f64, d1: f64, l1: f64, l2: f64) -> Result<Self> {
        let p = LengthParams { d0, d1, l1, l2 };
        p.validate()?;
        Ok(p)
    }

    /// Rejects non-positive or non-finite lengths. On-axle hooking
    /// (`d0 = 0` or `d1 = 0`) is outside the model.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("d0", self.d0),
            ("d1", self.d1),
            ("l1", self.l1),
            ("l2", self.l2),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidLength { name, value });
            }
        }
        Ok(())
    }

    /// `d0 = d1 = 0.1`, `l1 = l2 = 1`.
    pub const SHORT_HOOKS: LengthParams = LengthParams {
        d0: 0.1,
        d1: 0.1,
        l1: 1.0,
        l2: 1.0,
    };

    /// All four lengths equal to one.
    pub const UNIT: LengthParams = LengthParams {
        d0: 1.0,
        d1: 1.0,
        l1: 1.0,
        l2: 1.0,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateX(pub [f64; 5]);

/// Driving velocity `u1` [m/s] and steering velocity `u2` [rad/s].
#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlInput {
    pub u1: f64,
    pub u2: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { u1: 0.0, u2: 0.0 };

    pub fn new(u1: f64, u2: f64) -> Self {
        ControlInput { u1, u2 }
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }
}

/// Driving field `f₁`.
pub fn field_f1<S: Scalar>(p: &LengthParams, x: &[S; 5]) -> [S; 5] {
    let c = S::from_f64;
    let (l1, l2, d1) = (c(p.l1), c(p.l2), c(p.d1));
    let (s3, c3) = x[2].sin_cos();
    let s34 = (x[2] - x[3]).sin();
    let s35 = (x[2] - x[4]).sin();
    let (s43, c45) = ((x[3] - x[2]).sin(), (x[3] - x[4]).cos());
    let f15 = s35 / l2 + (d1 + l1) * s43 * c45 / (l1 * l2);
    [c3, s3, S::zero(), s34 / l1, f15]
}

/// Steering field `f₂`.
pub fn field_f2<S: Scalar>(p: &LengthParams, x: &[S; 5]) -> [S; 5] {
    let c = S::from_f64;
    let (l1, l2, d0, d1) = (c(p.l1), c(p.l2), c(p.d0), c(p.d1));
    let c34 = (x[2] - x[3]).cos();
    let c45 = (x[3] - x[4]).cos();
    let c35 = (x[2] - x[4]).cos();
    let f25 = d0 * (d1 + l1) * c34 * c45 / (l1 * l2) - d0 * c35 / l2;
    [S::zero(), S::zero(), S::one(), -(d0 * c34) / l1, f25]
}

/// `f₁` as a bracket operand.
#[derive(Clone, Copy, Debug)]
pub struct DriveField(pub LengthParams);

/// `f₂` as a bracket operand.
#[derive(Clone, Copy, Debug)]
pub struct SteerField(pub LengthParams);

impl Field for DriveField {
    fn label(&self) -> String {
        "f1".into()
    }
    fn eval<S: Scalar>(&self, x: &[S; 5]) -> [S; 5] {
        field_f1(&self.0, x)
    }
}

impl Field for SteerField {
    fn label(&self) -> String {
        "f2".into()
    }
    fn eval<S: Scalar>(&self, x: &[S; 5]) -> [S; 5] {
        field_f2(&self.0, x)
    }
}

/// Velocity `u1·f₁(x) + u2·f₂(x)`.
pub fn velocity(p: &LengthParams, x: &StateX, u: ControlInput) -> Vec5 {
    let a = field_f1(p, &x.0);
    let b = field_f2(p, &x.0);
    core::array::from_fn(|i| u.u1 * a[i] + u.u2 * b[i])
}

fn hitch_points<S: Scalar>(p: &LengthParams, x: &[S; 5]) -> [[S; 2]; 2] {
    let c = S::from_f64;
    let (d0, d1, l1, l2) = (c(p.d0), c(p.d1), c(p.l1), c(p.l2));
    let (sp, cp) = x[2].sin_cos();
    let (s1, c1) = x[3].sin_cos();
    let (s2, c2) = x[4].sin_cos();
    let c1p = [x[0] - d0 * cp - l1 * c1, x[1] - d0 * sp - l1 * s1];
    let c2p = [
        x[0] - d0 * cp - (d1 + l1) * c1 - l2 * c2,
        x[1] - d0 * sp - (d1 + l1) * s1 - l2 * s2,
    ];
    [c1p, c2p]
}

/// Axle midpoints `C₁` and `C₂` of the two trailers.
pub fn trailer_positions(p: &LengthParams, x: &StateX) -> ([f64; 2], [f64; 2]) {
    let [a, b] = hitch_points(p, &x.0);
    (a, b)
}

/// Left-hand sides of the three rolling-without-slipping constraints for a
/// velocity `xdot` at `x`. Trailer axle velocities are obtained by exact
/// differentiation of the hitch geometry along `xdot`.
pub fn constraint_residuals(p: &LengthParams, x: &StateX, xdot: &Vec5) -> [f64; 3] {
    let lifted = seed(&x.0, xdot);
    let [c1, c2] = hitch_points(p, &lifted);
    let axle_vel = [
        [xdot[0], xdot[1]],
        [c1[0].du, c1[1].du],
        [c2[0].du, c2[1].du],
    ];
    let headings = [x.0[2], x.0[3], x.0[4]];
    core::array::from_fn(|i| {
        let (s, c) = libm::sincos(headings[i]);
        axle_vel[i][0] * s - axle_vel[i][1] * c
    })
}

/// Closed-form entries of rows 4 and 5 of the bracket matrix for the columns
/// `[f₁,f₂]`, `[f₁,[f₁,f₂]]` and `[f₁,[f₁,[f₁,f₂]]]`.
pub mod entries {
    use super::LengthParams;
    use crate::scalar::Scalar;

    struct Angles {
        s34: f64,
        c34: f64,
        s35: f64,
        c35: f64,
        s45: f64,
        c45: f64,
    }

    fn angles(x: &[f64; 5]) -> Angles {
        let (s34, c34) = libm::sincos(x[2] - x[3]);
        let (s35, c35) = libm::sincos(x[2] - x[4]);
        let (s45, c45) = libm::sincos(x[3] - x[4]);
        Angles {
            s34,
            c34,
            s35,
            c35,
            s45,
            c45,
        }
    }

    pub fn f34(p: &LengthParams, x: &[f64; 5]) -> f64 {
        let c34 = libm::cos(x[2] - x[3]);
        -(p.d0 + p.l1 * c34) / (p.l1 * p.l1)
    }

    pub fn f44(p: &LengthParams, x: &[f64; 5]) -> f64 {
        let c34 = libm::cos(x[2] - x[3]);
        -(p.l1 + p.d0 * c34) / p.l1.powu(3)
    }

    pub fn f54(p: &LengthParams, x: &[f64; 5]) -> f64 {
        let c34 = libm::cos(x[2] - x[3]);
        -(p.d0 + p.l1 * c34) / p.l1.powu(4)
    }

    pub fn f35(p: &LengthParams, x: &[f64; 5]) -> f64 {
        let LengthParams { d0, d1, l1, l2 } = *p;
        let Angles {
            s34,
            c34,
            s35,
            c35,
            s45,
            c45,
        } = angles(x);
        let d = d1 + l1;
        // sin(x5 - x3) = -s35
        (d * c45 * (l1 * (d0 * c35 + l2) * c34 + d0 * (l1 * s34 * s35 + l2))
            - l1 * (d0 * d * c34 * (-s35) * s45 + d0 * l1 + c35 * (l1 * l2 + d0 * d * s34 * s45)))
            / (l1 * l1 * l2 * l2)
    }

    pub fn f45(p: &LengthParams, x: &[f64; 5]) -> f64 {
        let LengthParams { d0, d1, l1, l2 } = *p;
        let Angles {
            s34,
            c34,
            s35,
            c35,
            s45,
            c45,
        } = angles(x);
        let d = d1 + l1;
        let first = d0 * l1 * d * d * c45 * c45 * s34 * (s34 * c35 + (-s35) * c34);
        let second = d
            * c45
            * (d0 * l1 * l1 * c34 * c35 * c35
                + l1 * c35 * (c34 * (d0 * d * s45 * s34 + l1 * l2) + d0 * (l2 + l1 * s34 * s35))
                - d0 * l1 * d * s35 * s45 * c34 * c34
                + d0 * l2 * l2 * c34
                + l1 * (l2 * l2 + s35 * (d0 * d * s45 + l1 * l2 * s34)));
        let third = l1
            * (d0 * l1 * d * (-s34) * s45 * c35 * c35
                + c35
                    * (d0 * d * d * c34 * c34 + d0 * l1 * d * s35 * s45 * c34
                        - l1 * l2 * d * s34 * s45
                        - 2.0 * d0 * (l1 * l1 + d1 * l1 + 0.5 * d1 * d1))
                + d * (l1 * l2 * s45 + d0 * d * s34) * s35 * c34
                + d0 * d * l2 * s45 * s35
                - l1 * (d0 * d * s34 * s45 + l1 * l2));
        (first + second + third) / (l1.powu(3) * l2.powu(3))
    }

    pub fn f55(p: &LengthParams, x: &[f64; 5]) -> f64 {
        let LengthParams { d0, d1, l1, l2 } = *p;
        let Angles {
            s34,
            c34,
            s35,
            c35,
            s45,
            c45,
        } = angles(x);
        let d = d1 + l1;
        let q2 = 2.0 * l1 * l1 + 2.0 * d1 * l1 + l2 * l2 + d1 * d1;
        let q4 = 4.0 * l1 * l1 + 2.0 * d1 * l1 + l2 * l2 + d1 * d1;
        let q0 = 2.0 * l1 * l1 + 2.0 * d1 * l1 + d1 * d1;

        let t1 = -d0 * l1 * d * d * c34.powu(3) * ((d * c45 + l2) * c35 + d * s35 * s45);
        let t2 = -d
            * l1
            * c34
            * c34
            * (4.0 * d0 * l1 * d * (c45 * c45 - 0.5) * c35 * c35
                + d * (-l1 * l2 * s45 * s45 + 4.0 * d0 * l1 * s35 * s45 * c45
                    - d0 * d * s45 * s34)
                    * c35
                - 2.0 * d0 * l1 * d * c45 * c45
                + ((l1 * l2 * s45 + d0 * d * s34) * d * s35 - d0 * l1 * l2) * c45
                - d0 * d * (l1 - l2 * s34 * s35));
        let t3 = -d
            * l1
            * c34
            * (-l1 * (4.0 * d0 * d * s45 * s34 + l1 * l2) * c45 * c35 * c35
                + (4.0 * l1 * d0 * d * s34 * s35 * c45 * c45
                    + (-l1 * l2 * d * s34 * s45 - d0 * q2) * c45
                    - 2.0 * l1 * (s34 * d0 * d + 0.5 * l1 * l2 * s45) * s35
                    - l2 * d0 * d)
                    * c35
                + l1 * l2 * d * s34 * s35 * c45 * c45
                + (2.0 * l1 * d0 * d * s34 * s45 - l2.powu(3)) * c45
                - (l1 * l2 * d * s34 + d0 * q2 * s45) * s35
                - d0 * l1 * l2 * s34 * s45);
        let t4 = l1
            * l1
            * (4.0 * d0 * d * c45 * c45 + d0 * l2 * c45 - l1 * s34 * s45 * l2 - 2.0 * d0 * d)
            * d
            * c35
            * c35;
        let t5 = l1
            * c35
            * (l1 * l2 * d * d * c45 * c45
                + l1 * ((l1 * l2 * s34 + 4.0 * d0 * d * s45) * s35 + l2 * l2) * d * c45
                + l1 * l2 * d0 * d * s45 * s35
                - d0 * d * q4 * s45 * s34
                - l1 * l2 * q0);
        let t6 = -2.0 * l1 * l1 * d0 * d * d * c45 * c45;
        let t7 = (l1 * (d0 * q4 * s34 + l1 * s45 * l2 * d) * s35 - l1 * l1 * l2 * d0
            + l2.powu(3) * d0)
            * d
            * c45;
        let t8 = -l1
            * (-(l1 * l2 * s45 + d0 * d * s34) * l2 * d * s35
                + l1 * (l1 * l2 * d * s34 * s45 + d0 * q0));
        (t1 + t2 + t3 + t4 + t5 + t6 + t7 + t8) / (l1.powu(4) * l2.powu(4))
    }
}

/// Closed-form bracket matrix with columns
/// `(f₁, f₂, [f₁,f₂], [f₁,[f₁,f₂]], [f₁,[f₁,[f₁,f₂]]])`.
pub fn bracket_matrix_f(p: &LengthParams, x: &StateX) -> Mat5 {
    let x = &x.0;
    let f1 = field_f1(p, x);
    let f2 = field_f2(p, x);
    let (s3, c3) = libm::sincos(x[2]);
    let b12 = [s3, -c3, 0.0, entries::f34(p, x), entries::f35(p, x)];
    let b112 = [0.0, 0.0, 0.0, entries::f44(p, x), entries::f45(p, x)];
    let b1112 = [0.0, 0.0, 0.0, entries::f54(p, x), entries::f55(p, x)];
    Mat5::from_columns(&[f1, f2, b12, b112, b1112])
}

/// `det F(0) = −(d₀+ℓ₁)(d₀+ℓ₂)(d₁+ℓ₂) / (ℓ₁⁴ℓ₂⁴)`.
pub fn det_f0_closed_form(p: &LengthParams) -> f64 {
    -(p.d0 + p.l1) * (p.d0 + p.l2) * (p.d1 + p.l2) / (p.l1.powu(4) * p.l2.powu(4))
}

/// Numeric `det F(x)`, for monitoring how far the state has drifted from
/// the region where the bracket basis is well conditioned.
pub fn det_f(p: &LengthParams, x: &StateX) -> f64 {
    bracket_matrix_f(p, x).determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    const ONES: LengthParams = LengthParams::UNIT;
    const SHORT: LengthParams = LengthParams::SHORT_HOOKS;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn rejects_nonpositive_lengths() {
        assert!(LengthParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(LengthParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(LengthParams::new(1.0, 1.0, f64::NAN, 1.0).is_err());
        assert!(LengthParams::new(1.0, 1.0, 1.0, f64::INFINITY).is_err());
        assert_eq!(
            LengthParams::new(1.0, 1.0, 1.0, 0.0),
            Err(Error::InvalidLength {
                name: "l2",
                value: 0.0
            })
        );
        assert!(LengthParams::new(0.1, 0.1, 1.0, 1.0).is_ok());
    }

    #[test]
    fn f1_at_origin() {
        for p in [ONES, SHORT] {
            assert_eq!(field_f1(&p, &[0.0; 5]), [1.0, 0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn f1_at_quarter_turn() {
        let v = field_f1(&ONES, &[0.0, 0.0, FRAC_PI_2, 0.0, 0.0]);
        // f15 = sin(π/2) + 2 sin(-π/2) cos 0 = -1
        assert!(close(&v, &[0.0, 1.0, 0.0, 1.0, -1.0], 1e-15));
    }

    #[test]
    fn f2_at_origin() {
        assert_eq!(field_f2(&ONES, &[0.0; 5]), [0.0, 0.0, 1.0, -1.0, 1.0]);
        let v = field_f2(&SHORT, &[0.0; 5]);
        assert!(close(&v, &[0.0, 0.0, 1.0, -0.1, 0.01], 1e-15));
    }

    #[test]
    fn f2_has_no_planar_motion() {
        let v = field_f2(&SHORT, &[0.3, -1.0, 0.4, -0.2, 1.1]);
        assert_eq!((v[0], v[1]), (0.0, 0.0));
    }

    #[test]
    fn trailer_positions_at_rest() {
        let (c1, c2) = trailer_positions(&ONES, &StateX::default());
        assert_eq!(c1, [-2.0, 0.0]);
        assert_eq!(c2, [-4.0, 0.0]);
        let (c1, c2) = trailer_positions(&SHORT, &StateX::default());
        assert!(close(&c1, &[-1.1, 0.0], 1e-15));
        assert!(close(&c2, &[-2.2, 0.0], 1e-15));
    }

    #[test]
    fn lateral_slip_violates_every_constraint() {
        let r = constraint_residuals(&ONES, &StateX::default(), &[0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(r, [-1.0, -1.0, -1.0]);
        let r = constraint_residuals(&ONES, &StateX::default(), &[0.0; 5]);
        assert_eq!(r, [0.0; 3]);
    }

    #[test]
    fn admissible_velocities_satisfy_constraints() {
        let x = StateX([0.4, -0.3, 0.7, 0.2, -0.5]);
        for p in [
            ONES,
            SHORT,
            LengthParams {
                d0: 0.3,
                d1: 0.7,
                l1: 1.2,
                l2: 0.9,
            },
        ] {
            for u in [ControlInput::new(1.0, 0.0), ControlInput::new(-0.7, 2.3)] {
                let r = constraint_residuals(&p, &x, &velocity(&p, &x, u));
                assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
            }
        }
    }

    #[test]
    fn determinant_closed_form_values() {
        assert_eq!(det_f0_closed_form(&ONES), -8.0);
        assert!((det_f0_closed_form(&SHORT) + 1.331).abs() < 1e-12);
        assert!((det_f(&ONES, &StateX::default()) + 8.0).abs() < 1e-12);
    }

    #[test]
    fn first_column_is_f1() {
        let f = bracket_matrix_f(&SHORT, &StateX::default());
        assert_eq!(f.column(0), [1.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
