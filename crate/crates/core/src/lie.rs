//! Exact Jacobians and iterated Lie brackets of vector fields on ℝ⁵.
//!
//! A bracket `[f, g](x) = Dg(x)·f(x) − Df(x)·g(x)` is evaluated lazily: each
//! directional derivative is obtained by evaluating the operand one dual
//! layer higher with the infinitesimal seeded along the other operand. No
//! finite differences are involved, so nested brackets stay accurate to
//! rounding.
//!
//! Base fields implement the generic [`Field`] trait. [`SmoothField`] is its
//! object-safe counterpart with one entry point per nesting layer, which is
//! what lets brackets be built from runtime words.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Mat5, Vec5};
use crate::scalar::{seed, tangent, Dual, Scalar, D1, D2, D3, D4};

/// Longest bracket word supported; a word of length 5 nests four brackets.
pub const MAX_WORD_LEN: usize = 5;

/// A vector field whose components are written against any [`Scalar`].
pub trait Field {
    fn label(&self) -> String;
    fn eval<S: Scalar>(&self, x: &[S; 5]) -> [S; 5];
}

/// Object-safe vector field evaluable on `f64` and on up to four nested
/// dual layers.
pub trait SmoothField: Send + Sync {
    fn label(&self) -> String;

    /// Number of nested brackets inside this field (0 for a base field).
    fn depth(&self) -> usize {
        0
    }

    fn eval_f64(&self, x: &[f64; 5]) -> [f64; 5];
    fn eval_d1(&self, x: &[D1; 5]) -> [D1; 5];
    fn eval_d2(&self, x: &[D2; 5]) -> [D2; 5];
    fn eval_d3(&self, x: &[D3; 5]) -> [D3; 5];
    fn eval_d4(&self, x: &[D4; 5]) -> [D4; 5];
}

impl<F: Field + Send + Sync> SmoothField for F {
    fn label(&self) -> String {
        Field::label(self)
    }
    fn eval_f64(&self, x: &[f64; 5]) -> [f64; 5] {
        self.eval(x)
    }
    fn eval_d1(&self, x: &[D1; 5]) -> [D1; 5] {
        self.eval(x)
    }
    fn eval_d2(&self, x: &[D2; 5]) -> [D2; 5] {
        self.eval(x)
    }
    fn eval_d3(&self, x: &[D3; 5]) -> [D3; 5] {
        self.eval(x)
    }
    fn eval_d4(&self, x: &[D4; 5]) -> [D4; 5] {
        self.eval(x)
    }
}

pub type FieldRef = Arc<dyn SmoothField>;

/// Wraps a base field for use as a bracket operand.
pub fn field<F: Field + Send + Sync + 'static>(f: F) -> FieldRef {
    Arc::new(f)
}

/// Lazy Lie bracket `[f, g]`.
#[derive(Clone)]
pub struct Bracket {
    f: FieldRef,
    g: FieldRef,
}

// Dg·f − Df·g at layer `S`, using the operands' evaluation one layer up.
fn bracket_at<S: Scalar>(
    x: &[S; 5],
    fx: [S; 5],
    gx: [S; 5],
    g_up: impl Fn(&[Dual<S>; 5]) -> [Dual<S>; 5],
    f_up: impl Fn(&[Dual<S>; 5]) -> [Dual<S>; 5],
) -> [S; 5] {
    let dg_f = tangent(&g_up(&seed(x, &fx)));
    let df_g = tangent(&f_up(&seed(x, &gx)));
    core::array::from_fn(|i| dg_f[i] - df_g[i])
}

impl SmoothField for Bracket {
    fn label(&self) -> String {
        format!("[{},{}]", self.f.label(), self.g.label())
    }

    fn depth(&self) -> usize {
        1 + self.f.depth().max(self.g.depth())
    }

    fn eval_f64(&self, x: &[f64; 5]) -> [f64; 5] {
        let (f, g) = (&self.f, &self.g);
        bracket_at(
            x,
            f.eval_f64(x),
            g.eval_f64(x),
            |y| g.eval_d1(y),
            |y| f.eval_d1(y),
        )
    }

    fn eval_d1(&self, x: &[D1; 5]) -> [D1; 5] {
        let (f, g) = (&self.f, &self.g);
        bracket_at(
            x,
            f.eval_d1(x),
            g.eval_d1(x),
            |y| g.eval_d2(y),
            |y| f.eval_d2(y),
        )
    }

    fn eval_d2(&self, x: &[D2; 5]) -> [D2; 5] {
        let (f, g) = (&self.f, &self.g);
        bracket_at(
            x,
            f.eval_d2(x),
            g.eval_d2(x),
            |y| g.eval_d3(y),
            |y| f.eval_d3(y),
        )
    }

    fn eval_d3(&self, x: &[D3; 5]) -> [D3; 5] {
        let (f, g) = (&self.f, &self.g);
        bracket_at(
            x,
            f.eval_d3(x),
            g.eval_d3(x),
            |y| g.eval_d4(y),
            |y| f.eval_d4(y),
        )
    }

    /// Beyond the nesting cap: yields NaN so callers see a non-finite value.
    fn eval_d4(&self, _x: &[D4; 5]) -> [D4; 5] {
        [D4::splat(f64::NAN); 5]
    }
}

/// `[f, g]` as a new field, usable as an operand of further brackets.
pub fn lie_bracket(f: &FieldRef, g: &FieldRef) -> FieldRef {
    Arc::new(Bracket {
        f: f.clone(),
        g: g.clone(),
    })
}

/// Right-nested bracket spelled by `word` over the letters `1` and `2`:
/// `(1, 1, 2)` gives `[f₁,[f₁,f₂]]`, `(2,)` gives `f₂`.
pub fn iterated_bracket(word: &[u8], fields: (&FieldRef, &FieldRef)) -> Result<FieldRef> {
    if word.len() > MAX_WORD_LEN {
        return Err(Error::WordTooLong {
            len: word.len(),
            max: MAX_WORD_LEN,
        });
    }
    let pick = |c: u8| match c {
        1 => Ok(fields.0.clone()),
        2 => Ok(fields.1.clone()),
        _ => Err(Error::InvalidWord),
    };
    let (&last, init) = word.split_last().ok_or(Error::InvalidWord)?;
    let mut acc = pick(last)?;
    for &c in init.iter().rev() {
        acc = lie_bracket(&pick(c)?, &acc);
    }
    Ok(acc)
}

/// All words over `{1, 2}` of exactly `len` letters, lexicographic.
pub fn words_of_length(len: usize) -> Vec<Vec<u8>> {
    (0..1usize << len)
        .map(|bits| {
            (0..len)
                .map(|i| if bits >> (len - 1 - i) & 1 == 0 { 1 } else { 2 })
                .collect()
        })
        .collect()
}

/// Exact Jacobian `∂f/∂x` at `x`, one dual evaluation per basis direction.
pub fn jacobian(f: &dyn SmoothField, x: &Vec5) -> Result<Mat5> {
    let cols: [Vec5; 5] = core::array::from_fn(|j| {
        let mut e = [0.0; 5];
        e[j] = 1.0;
        tangent(&f.eval_d1(&seed(x, &e)))
    });
    if cols.iter().flatten().all(|v| v.is_finite()) {
        Ok(Mat5::from_columns(&cols))
    } else {
        Err(Error::NonFinite)
    }
}

/// Central-difference Jacobian. Only meant as a cross-check of [`jacobian`].
pub fn jacobian_fd(f: &dyn SmoothField, x: &Vec5, step: f64) -> Result<Mat5> {
    let cols: [Vec5; 5] = core::array::from_fn(|j| {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += step;
        xm[j] -= step;
        let (a, b) = (f.eval_f64(&xp), f.eval_f64(&xm));
        core::array::from_fn(|i| (a[i] - b[i]) / (2.0 * step))
    });
    if cols.iter().flatten().all(|v| v.is_finite()) {
        Ok(Mat5::from_columns(&cols))
    } else {
        Err(Error::NonFinite)
    }
}

/// Step and agreement tolerance for comparing [`jacobian_fd`] with [`jacobian`].
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

/// Dimensions of `L^s(x)` for `s = 1..=max_len`: the numeric rank of all
/// brackets of length at most `s` evaluated at `x`.
pub fn growth_vector(
    fields: (&FieldRef, &FieldRef),
    x: &Vec5,
    max_len: usize,
    rel_tol: f64,
) -> Result<Vec<usize>> {
    let mut cols: Vec<Vec5> = Vec::new();
    let mut dims = Vec::with_capacity(max_len);
    for len in 1..=max_len {
        for w in words_of_length(len) {
            let v = iterated_bracket(&w, fields)?.eval_f64(x);
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite);
            }
            cols.push(v);
        }
        dims.push(crate::linalg::rank(&cols, rel_tol));
    }
    Ok(dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::{DriveField, LengthParams, SteerField};

    struct Identity;
    impl Field for Identity {
        fn label(&self) -> String {
            "id".into()
        }
        fn eval<S: Scalar>(&self, x: &[S; 5]) -> [S; 5] {
            *x
        }
    }

    /// Constant field e₁ and linear field x₁·e₂: [e₁, x₁e₂] = e₂.
    struct E1;
    impl Field for E1 {
        fn label(&self) -> String {
            "e1".into()
        }
        fn eval<S: Scalar>(&self, _x: &[S; 5]) -> [S; 5] {
            let mut v = [S::zero(); 5];
            v[0] = S::one();
            v
        }
    }
    struct X1E2;
    impl Field for X1E2 {
        fn label(&self) -> String {
            "x1e2".into()
        }
        fn eval<S: Scalar>(&self, x: &[S; 5]) -> [S; 5] {
            let mut v = [S::zero(); 5];
            v[1] = x[0];
            v
        }
    }

    fn vehicle(p: LengthParams) -> (FieldRef, FieldRef) {
        (field(DriveField(p)), field(SteerField(p)))
    }

    #[test]
    fn identity_jacobian() {
        let j = jacobian(&Identity, &[0.3, -1.0, 2.0, 0.1, 5.0]).unwrap();
        assert_eq!(j, Mat5::IDENTITY);
    }

    #[test]
    fn steering_jacobian_row4_at_origin() {
        let j = jacobian(&SteerField(LengthParams::UNIT), &[0.0; 5]).unwrap();
        // d/dx3 of -cos(x3 - x4) at 0 vanishes
        assert_eq!(j[(3, 2)], 0.0);
    }

    #[test]
    fn bracket_of_linear_fields() {
        let b = lie_bracket(&field(E1), &field(X1E2));
        assert_eq!(
            b.eval_f64(&[0.4, 0.0, 0.0, 0.0, 0.0]),
            [0.0, 1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(b.label(), "[e1,x1e2]");
        assert_eq!(b.depth(), 1);
    }

    #[test]
    fn self_bracket_vanishes() {
        let (f1, _) = vehicle(LengthParams::SHORT_HOOKS);
        let v = lie_bracket(&f1, &f1).eval_f64(&[0.1, 0.2, 0.3, -0.4, 0.5]);
        assert!(v.iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn word_parsing() {
        let (f1, f2) = vehicle(LengthParams::UNIT);
        let x = [0.1, -0.2, 0.3, 0.05, -0.1];
        let a = iterated_bracket(&[1, 2], (&f1, &f2)).unwrap().eval_f64(&x);
        let b = lie_bracket(&f1, &f2).eval_f64(&x);
        assert_eq!(a, b);
        assert_eq!(iterated_bracket(&[2], (&f1, &f2)).unwrap().label(), "f2");
        assert_eq!(
            iterated_bracket(&[1, 1, 1, 2], (&f1, &f2)).unwrap().label(),
            "[f1,[f1,[f1,f2]]]"
        );
        assert_eq!(
            iterated_bracket(&[1, 1, 1, 1, 1, 2], (&f1, &f2)).err(),
            Some(Error::WordTooLong { len: 6, max: 5 })
        );
        assert_eq!(
            iterated_bracket(&[], (&f1, &f2)).err(),
            Some(Error::InvalidWord)
        );
        assert_eq!(
            iterated_bracket(&[1, 3], (&f1, &f2)).err(),
            Some(Error::InvalidWord)
        );
    }

    #[test]
    fn jacobian_beyond_depth_cap_is_an_error() {
        let (f1, f2) = vehicle(LengthParams::UNIT);
        let deep = iterated_bracket(&[1, 1, 1, 1, 2], (&f1, &f2)).unwrap();
        assert!(deep.eval_f64(&[0.0; 5]).iter().all(|v| v.is_finite()));
        assert_eq!(
            jacobian(deep.as_ref(), &[0.0; 5]).err(),
            Some(Error::NonFinite)
        );
    }

    #[test]
    fn finite_difference_cross_check() {
        let (f1, f2) = vehicle(LengthParams {
            d0: 0.3,
            d1: 0.7,
            l1: 1.2,
            l2: 0.9,
        });
        let b = iterated_bracket(&[1, 1, 2], (&f1, &f2)).unwrap();
        let x = [0.2, 0.1, 0.3, -0.2, 0.25];
        let exact = jacobian(b.as_ref(), &x).unwrap();
        let fd = jacobian_fd(b.as_ref(), &x, FD_STEP).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((exact[(i, j)] - fd[(i, j)]).abs() < FD_TOLERANCE);
            }
        }
    }

    #[test]
    fn vehicle_growth_vector() {
        let (f1, f2) = vehicle(LengthParams::SHORT_HOOKS);
        assert_eq!(
            growth_vector((&f1, &f2), &[0.0; 5], 4, 1e-8).unwrap(),
            [2, 3, 4, 5]
        );
    }

    #[test]
    fn word_enumeration() {
        assert_eq!(words_of_length(2), [[1, 1], [1, 2], [2, 1], [2, 2]]);
        assert_eq!(words_of_length(5).len(), 32);
    }
}
