//! Scalar arithmetic shared by every vector field in the crate.
//!
//! Fields are written once against [`Scalar`] and evaluated either on plain
//! `f64` or on nested forward-mode [`Dual`] numbers. A `Dual<T>` carries one
//! infinitesimal direction on top of `T`, so `Dual<Dual<f64>>` carries two,
//! and so on. Iterated Lie brackets of depth `k` need `k` nested layers.

use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Ring-with-trig operations the field formulas are written against.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn from_f64(v: f64) -> Self;

    /// Innermost real part.
    fn real(&self) -> f64;

    fn sin_cos(self) -> (Self, Self);

    fn sin(self) -> Self {
        self.sin_cos().0
    }

    fn cos(self) -> Self {
        self.sin_cos().1
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn powu(self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc *= self;
        }
        acc
    }

    /// Value with `v` in every stored component, derivatives included.
    fn splat(v: f64) -> Self;

    /// True when every stored component is finite.
    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn real(&self) -> f64 {
        *self
    }

    #[inline]
    fn sin_cos(self) -> (Self, Self) {
        libm::sincos(self)
    }

    #[inline]
    fn splat(v: f64) -> Self {
        v
    }

    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// Forward-mode dual number `re + du·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub du: T,
}

impl<T: Scalar> Dual<T> {
    #[inline]
    pub fn new(re: T, du: T) -> Self {
        Dual { re, du }
    }

    /// A constant (zero infinitesimal part).
    #[inline]
    pub fn constant(re: T) -> Self {
        Dual { re, du: T::zero() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.du + self.du * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Dual::new(q, (self.du - q * o.du) / o.re)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.du)
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Dual<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Dual<T> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }

    #[inline]
    fn real(&self) -> f64 {
        self.re.real()
    }

    #[inline]
    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.re.sin_cos();
        (Dual::new(s, c * self.du), Dual::new(c, -(s * self.du)))
    }

    fn splat(v: f64) -> Self {
        Dual::new(T::splat(v), T::splat(v))
    }

    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.du.is_finite()
    }
}

/// One infinitesimal layer over `f64`.
pub type D1 = Dual<f64>;
/// Two nested layers.
pub type D2 = Dual<D1>;
/// Three nested layers.
pub type D3 = Dual<D2>;
/// Four nested layers, enough for brackets of length five.
pub type D4 = Dual<D3>;

/// Lifts a point to the next layer, seeding the infinitesimal part with `dir`.
pub fn seed<T: Scalar>(x: &[T; 5], dir: &[T; 5]) -> [Dual<T>; 5] {
    core::array::from_fn(|i| Dual::new(x[i], dir[i]))
}

/// Infinitesimal parts of a lifted vector.
pub fn tangent<T: Scalar>(v: &[Dual<T>; 5]) -> [T; 5] {
    core::array::from_fn(|i| v[i].du)
}

/// Lifts a plain `f64` point into any scalar as constants.
pub fn lift<S: Scalar>(x: &[f64; 5]) -> [S; 5] {
    core::array::from_fn(|i| S::from_f64(x[i]))
}
