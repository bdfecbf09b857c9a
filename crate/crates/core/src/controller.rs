//! Oscillating time-varying feedback for the nilpotent model.
//!
//! Coefficients `a(z) = −G(z)⁻¹∇Q(z)` with `Q = (γ/2)|z|²` are fed into
//! ε-periodic trigonometric polynomials whose averaged motion follows the
//! bracket directions of `G`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::approximation::{ApproxParams, StateZ};
use crate::error::{Error, Result};
use crate::vehicle::ControlInput;

/// Highest resonance order that the frequency multipliers must avoid.
pub const RESONANCE_ORDER: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlGains {
    /// Decay gain of the quadratic form `Q`.
    pub gamma: f64,
    /// Sampling period (s).
    pub epsilon: f64,
    pub k12: u32,
    pub k112: u32,
    pub k1112: u32,
}

impl ControlGains {
    /// `γ = 1`, `ε = 0.1`, `k = (8, 6, 5)`.
    pub const REFERENCE: ControlGains = ControlGains {
        gamma: 1.0,
        epsilon: 0.1,
        k12: 8,
        k112: 6,
        k1112: 5,
    };

    /// Checks positivity only; see [`ControlGains::checked`] for the
    /// resonance gate.
    pub fn new(gamma: f64, epsilon: f64, k12: u32, k112: u32, k1112: u32) -> Result<Self> {
        let g = ControlGains {
            gamma,
            epsilon,
            k12,
            k112,
            k1112,
        };
        g.validate()?;
        Ok(g)
    }

    /// Positivity plus the no-resonance condition.
    pub fn checked(gamma: f64, epsilon: f64, k12: u32, k112: u32, k1112: u32) -> Result<Self> {
        let g = Self::new(gamma, epsilon, k12, k112, k1112)?;
        check_c1(&g).map_err(Error::Resonance)?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("gamma", self.gamma), ("epsilon", self.epsilon)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidGain { name, value });
            }
        }
        for (name, k) in [
            ("k12", self.k12),
            ("k112", self.k112),
            ("k1112", self.k1112),
        ] {
            if k == 0 {
                return Err(Error::InvalidGain { name, value: 0.0 });
            }
        }
        Ok(())
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        ControlGains { epsilon, ..self }
    }

    /// Base angular frequency `2π/ε` [rad/s].
    pub fn omega(&self) -> f64 {
        2.0 * PI / self.epsilon
    }

    pub fn multipliers(&self) -> [i64; 3] {
        [self.k12 as i64, self.k112 as i64, self.k1112 as i64]
    }

    /// Highest harmonic of `ω` present in the controls.
    pub fn max_harmonic(&self) -> u32 {
        self.k12.max(2 * self.k112).max(3 * self.k1112)
    }

    /// RK4 substeps per period giving 64 steps per cycle of the fastest harmonic.
    pub fn default_substeps(&self) -> usize {
        64 * self.max_harmonic() as usize
    }
}

/// A resonance that violates the no-resonance condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Resonance {
    /// Which of the four checked tuples (1-based).
    pub tuple_index: usize,
    pub tuple: [i64; 3],
    pub witness: [i64; 3],
    pub order: u32,
}

impl fmt::Display for Resonance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [k1, k2, k3] = self.tuple;
        let [c1, c2, c3] = self.witness;
        write!(
            f,
            "tuple {} ({k1},{k2},{k3}) has resonance ({c1},{c2},{c3}) of order {}",
            self.tuple_index, self.order
        )
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Order `Σ|cᵢ|` of a coefficient tuple.
pub fn order(c: &[i64; 3]) -> u32 {
    c.iter().map(|v| v.unsigned_abs() as u32).sum()
}

/// All setwise-coprime nonzero `c` with `Σ|cᵢ| ≤ max_order` and `c·k = 0`,
/// sorted by order and then lexicographically descending. Both `c` and `−c`
/// are listed.
pub fn find_resonances(k: [i64; 3], max_order: u32) -> Vec<[i64; 3]> {
    let m = max_order as i64;
    let mut out = Vec::new();
    for c1 in -m..=m {
        for c2 in -m..=m {
            for c3 in -m..=m {
                let c = [c1, c2, c3];
                if order(&c) == 0 || order(&c) > max_order {
                    continue;
                }
                if gcd(gcd(c1, c2), c3) != 1 {
                    continue;
                }
                if c1 * k[0] + c2 * k[1] + c3 * k[2] == 0 {
                    out.push(c);
                }
            }
        }
    }
    out.sort_by(|a, b| order(a).cmp(&order(b)).then(b.cmp(a)));
    out
}

/// The four multiplier tuples whose resonances would leak into the averaged
/// dynamics.
pub fn c1_tuples(g: &ControlGains) -> [[i64; 3]; 4] {
    let [a, b, c] = g.multipliers();
    [[a, b, c], [a, 2 * b, c], [a, b, 3 * c], [a, 2 * b, 3 * c]]
}

/// The no-resonance gate. The witness is the lowest-order resonance of the
/// first failing tuple, normalised so its first nonzero entry is positive.
pub fn check_c1(g: &ControlGains) -> core::result::Result<(), Resonance> {
    for (i, tuple) in c1_tuples(g).into_iter().enumerate() {
        let found = find_resonances(tuple, RESONANCE_ORDER);
        let witness = found
            .into_iter()
            .find(|c| c.iter().find(|v| **v != 0).is_some_and(|v| *v > 0));
        if let Some(witness) = witness {
            return Err(Resonance {
                tuple_index: i + 1,
                tuple,
                witness,
                order: order(&witness),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeedbackCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a12: f64,
    pub a112: f64,
    pub a1112: f64,
}

impl FeedbackCoeffs {
    pub const ZERO: FeedbackCoeffs = FeedbackCoeffs {
        a1: 0.0,
        a2: 0.0,
        a12: 0.0,
        a112: 0.0,
        a1112: 0.0,
    };

    pub fn from_array(a: [f64; 5]) -> Self {
        FeedbackCoeffs {
            a1: a[0],
            a2: a[1],
            a12: a[2],
            a112: a[3],
            a1112: a[4],
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.a1, self.a2, self.a12, self.a112, self.a1112]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Closed-form coefficients for `Q = (γ/2)|z|²`.
pub fn coeffs(a: &ApproxParams, gamma: f64, z: &StateZ) -> FeedbackCoeffs {
    let [z1, z2, z3, z4, z5] = z.0;
    let z2_2 = z2 * z2;
    FeedbackCoeffs {
        a1: -gamma * z1,
        a2: -gamma * z2,
        a12: -gamma * (z1 * z2 + z3),
        a112: -gamma * (z1 * z3 + z4 + a.alpha * z2_2 * z2),
        a1112: -gamma
            * ((a.alpha + 2.0 * a.kappa - a.theta) * z1 * z2_2 * z2
                + (a.alpha + 3.0 * a.kappa) * z2_2 * z3
                + z1 * z4
                + z5),
    }
}

/// Solves `G(z)·a = −γz` by forward substitution.
pub fn coeffs_via_inverse(a: &ApproxParams, gamma: f64, z: &StateZ) -> FeedbackCoeffs {
    let g = crate::approximation::bracket_matrix_g(a, z);
    let rhs = z.0.map(|v| -gamma * v);
    let mut x = [0.0; 5];
    for i in 0..5 {
        let mut acc = rhs[i];
        for j in 0..i {
            acc -= g[(i, j)] * x[j];
        }
        x[i] = acc / g[(i, i)];
    }
    FeedbackCoeffs::from_array(x)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The control law with coefficients frozen over one sampling interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrozenControl {
    a1: f64,
    a2: f64,
    amp12: f64,
    amp112: f64,
    amp1112: f64,
    sign12: f64,
    sign112: f64,
    sign1112: f64,
    w12: f64,
    w112: f64,
    w1112: f64,
}

impl FrozenControl {
    pub fn new(c: &FeedbackCoeffs, g: &ControlGains) -> Self {
        let w = g.omega();
        let (k12, k112, k1112) = (g.k12 as f64, g.k112 as f64, g.k1112 as f64);
        FrozenControl {
            a1: c.a1,
            a2: c.a2,
            amp12: libm::sqrt(2.0 * k12 * w * c.a12.abs()),
            amp112: libm::pow(2.0 * k112 * w, 2.0 / 3.0) * libm::cbrt(c.a112.abs()),
            amp1112: libm::pow(k1112 * w, 0.75) * libm::sqrt(libm::sqrt(c.a1112.abs())),
            sign12: sign(c.a12),
            sign112: sign(c.a112),
            sign1112: sign(c.a1112),
            w12: k12 * w,
            w112: k112 * w,
            w1112: k1112 * w,
        }
    }

    pub fn at(&self, t: f64) -> ControlInput {
        let (s12, c12) = libm::sincos(self.w12 * t);
        let u1 = self.a1
            + self.amp12 * c12
            + self.amp112 * libm::cos(self.w112 * t)
            + 2.0 * self.amp1112 * libm::cos(self.w1112 * t);
        let u2 = self.a2 + self.amp12 * self.sign12 * s12
            - 2.0 * self.amp112 * self.sign112 * libm::cos(2.0 * self.w112 * t)
            - 6.0 * self.amp1112 * self.sign1112 * libm::sin(3.0 * self.w1112 * t);
        ControlInput { u1, u2 }
    }
}

/// Evaluates the oscillating controls at time `t`. The controls are
/// ε-periodic, so `t` may be measured from any sample instant.
pub fn control_value(c: &FeedbackCoeffs, g: &ControlGains, t: f64) -> ControlInput {
    FrozenControl::new(c, g).at(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params2() -> ApproxParams {
        ApproxParams {
            alpha: 1.0,
            kappa: 1.5,
            theta: 4.0,
            beta: 0.0,
        }
    }

    fn gains(k: (u32, u32, u32)) -> ControlGains {
        ControlGains::new(1.0, 0.1, k.0, k.1, k.2).unwrap()
    }

    #[test]
    fn rejects_nonpositive_gains() {
        assert!(ControlGains::new(0.0, 0.1, 8, 6, 5).is_err());
        assert!(ControlGains::new(1.0, -0.1, 8, 6, 5).is_err());
        assert!(ControlGains::new(1.0, 0.1, 0, 6, 5).is_err());
        assert!(ControlGains::new(1.0, f64::NAN, 8, 6, 5).is_err());
        assert!(matches!(
            ControlGains::checked(1.0, 0.1, 2, 1, 1),
            Err(Error::Resonance(_))
        ));
    }

    #[test]
    fn default_substeps_for_reference_gains() {
        assert_eq!(ControlGains::REFERENCE.default_substeps(), 960);
        assert!((ControlGains::REFERENCE.omega() - 20.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn equal_multipliers_resonate() {
        assert!(find_resonances([3, 3, 7], 2).contains(&[1, -1, 0]));
        assert!(find_resonances([1, 1, 2], 4).contains(&[1, 1, -1]));
        assert!(find_resonances([8, 6, 5], 4).is_empty());
    }

    #[test]
    fn witnesses_are_coprime() {
        for c in find_resonances([2, 4, 6], 4) {
            assert_eq!(gcd(gcd(c[0], c[1]), c[2]), 1, "{c:?}");
        }
        assert!(find_resonances([2, 4, 6], 4).contains(&[2, -1, 0]));
        assert!(!find_resonances([1, 1, 1], 4).contains(&[2, -2, 0]));
    }

    #[test]
    fn c1_verdicts() {
        assert_eq!(check_c1(&gains((8, 6, 5))), Ok(()));
        let r = check_c1(&gains((2, 1, 1))).unwrap_err();
        assert_eq!((r.tuple_index, r.witness, r.order), (1, [0, 1, -1], 2));
        let r = check_c1(&gains((4, 2, 1))).unwrap_err();
        assert_eq!((r.tuple_index, r.witness, r.order), (1, [1, -2, 0], 3));
        assert!(check_c1(&gains((1, 1, 2))).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let z = StateZ([1.0, -2.0, 2.0, -1.0, 1.0]);
        let want = [-1.0, 2.0, 0.0, 7.0, -44.0];
        assert_eq!(coeffs(&params2(), 1.0, &z).to_array(), want);
        let inv = coeffs_via_inverse(&params2(), 1.0, &z).to_array();
        for i in 0..5 {
            assert!((inv[i] - want[i]).abs() < 1e-12);
        }
        assert_eq!(
            coeffs(&params2(), 1.0, &StateZ::default()),
            FeedbackCoeffs::ZERO
        );
        assert_eq!(
            coeffs_via_inverse(&params2(), 1.0, &StateZ::default()),
            FeedbackCoeffs::ZERO
        );
    }

    #[test]
    fn only_z3_feeds_a12() {
        let a = ApproxParams::from_lengths(&crate::vehicle::LengthParams::SHORT_HOOKS);
        let c = coeffs(&a, 1.0, &StateZ([0.0, 0.0, 1.0, 0.0, 0.0]));
        assert_eq!((c.a12, c.a112, c.a1112), (-1.0, 0.0, 0.0));
    }

    #[test]
    fn zero_coefficients_give_zero_controls() {
        for t in [0.0, 0.013, 0.05, 0.37] {
            assert_eq!(
                control_value(&FeedbackCoeffs::ZERO, &ControlGains::REFERENCE, t),
                ControlInput::ZERO
            );
        }
    }

    #[test]
    fn control_value_at_origin_of_time() {
        let c = FeedbackCoeffs {
            a12: 1.0,
            ..FeedbackCoeffs::ZERO
        };
        let u = control_value(&c, &ControlGains::REFERENCE, 0.0);
        assert!((u.u1 - libm::sqrt(320.0 * PI)).abs() < 1e-12);
        assert_eq!(u.u2, 0.0);
    }

    #[test]
    fn averages_equal_constant_terms() {
        let g = ControlGains::REFERENCE;
        let c = FeedbackCoeffs {
            a1: 0.3,
            a2: -0.7,
            a12: -1.2,
            a112: 0.8,
            a1112: -2.5,
        };
        // Rectangle rule is exact for trigonometric polynomials below the
        // sample count.
        let n = 4096;
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..n {
            let u = control_value(&c, &g, g.epsilon * i as f64 / n as f64);
            s1 += u.u1;
            s2 += u.u2;
        }
        assert!((s1 / n as f64 - c.a1).abs() < 1e-8);
        assert!((s2 / n as f64 - c.a2).abs() < 1e-8);
    }

    #[test]
    fn amplitude_scaling_laws() {
        let g = ControlGains::REFERENCE;
        type Case = (fn(f64) -> FeedbackCoeffs, f64);
        let cases: [Case; 3] = [
            (
                |a| FeedbackCoeffs {
                    a12: a,
                    ..FeedbackCoeffs::ZERO
                },
                0.5,
            ),
            (
                |a| FeedbackCoeffs {
                    a112: a,
                    ..FeedbackCoeffs::ZERO
                },
                1.0 / 3.0,
            ),
            (
                |a| FeedbackCoeffs {
                    a1112: a,
                    ..FeedbackCoeffs::ZERO
                },
                0.25,
            ),
        ];
        for (make, p) in cases {
            let u = control_value(&make(0.7), &g, 0.0).u1;
            let v = control_value(&make(1.4), &g, 0.0).u1;
            assert!((v / u - libm::pow(2.0, p)).abs() < 1e-12);
        }
    }
}
