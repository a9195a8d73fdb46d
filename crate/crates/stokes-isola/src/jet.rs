//! Truncated Taylor arithmetic (higher-order dual numbers).
//!
//! A `Jet<N>` holds the first `N` Taylor coefficients of a function of one
//! variable about a base point, so `c[l]` is the l-th derivative divided by l!.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Self { c }
    }

    /// The independent variable at `v`.
    pub fn variable(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        if N > 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// l-th derivative (not divided by l!).
    pub fn derivative(&self, l: usize) -> f64 {
        let f: f64 = (1..=l).map(|i| i as f64).product();
        self.c[l] * f
    }

    pub fn scale(self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= s);
        Self { c }
    }

    pub fn sqrt(self) -> Self {
        let mut s = [0.0; N];
        s[0] = self.c[0].sqrt();
        for k in 1..N {
            let acc: f64 = (1..k).map(|j| s[j] * s[k - j]).sum();
            s[k] = (self.c[k] - acc) / (2.0 * s[0]);
        }
        Self { c: s }
    }

    /// Square root of the fourth root, i.e. `x^{1/4}`.
    pub fn quartic_root(self) -> Self {
        self.sqrt().sqrt()
    }

    pub fn tanh(self) -> Self {
        // t' = (1 - t^2) u'
        let mut t = [0.0; N];
        let mut t2 = [0.0; N];
        t[0] = crate::dispersion::tanh_s(self.c[0]);
        t2[0] = t[0] * t[0];
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..=k {
                let one_minus = if k == j { 1.0 - t2[0] } else { -t2[k - j] };
                acc += j as f64 * self.c[j] * one_minus;
            }
            t[k] = acc / k as f64;
            t2[k] = (0..=k).map(|j| t[j] * t[k - j]).sum();
        }
        Self { c: t }
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut c = self.c;
        c.iter_mut().zip(o.c).for_each(|(a, b)| *a += b);
        Self { c }
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut c = self.c;
        c.iter_mut().zip(o.c).for_each(|(a, b)| *a -= b);
        Self { c }
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; N];
        for i in 0..N {
            for j in 0..N - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Self { c }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut q = [0.0; N];
        for k in 0..N {
            let acc: f64 = (0..k).map(|j| q[j] * o.c[k - j]).sum();
            q[k] = (self.c[k] - acc) / o.c[0];
        }
        Self { c: q }
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, o: f64) -> Self {
        self.c[0] += o;
        self
    }
}

impl<const N: usize> Sub<f64> for Jet<N> {
    type Output = Self;
    fn sub(mut self, o: f64) -> Self {
        self.c[0] -= o;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        self.scale(o)
    }
}
