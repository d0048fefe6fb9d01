//! Arithmetic on magnitudes beyond the `f64` range.
//!
//! Blow-up paths reach `|Y| ~ exp(exp(n))`. A [`LogVector`] stores a unit
//! direction and `ln |v|`; a [`SignedLog`] stores a sign and `ln |x|`.

use std::cmp::Ordering;

/// Real number `sign * exp(ln_abs)`. Zero is `sign = 0, ln_abs = -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: Self = Self { sign: 0.0, ln_abs: f64::NEG_INFINITY };
    pub const ONE: Self = Self { sign: 1.0, ln_abs: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self { sign: x.signum(), ln_abs: x.abs().ln() }
        }
    }

    pub fn from_ln(sign: f64, ln_abs: f64) -> Self {
        if sign == 0.0 || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { sign: sign.signum(), ln_abs }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0.0
    }

    /// May overflow to `+-inf`.
    pub fn to_f64(self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

impl std::ops::Mul for SignedLog {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self { sign: self.sign * other.sign, ln_abs: self.ln_abs + other.ln_abs }
    }
}

impl std::ops::Add for SignedLog {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.ln_abs >= other.ln_abs { (self, other) } else { (other, self) };
        let rel = (small.ln_abs - big.ln_abs).exp();
        if big.sign == small.sign {
            Self { sign: big.sign, ln_abs: big.ln_abs + rel.ln_1p() }
        } else if rel == 1.0 {
            Self::ZERO
        } else {
            Self { sign: big.sign, ln_abs: big.ln_abs + (-rel).ln_1p() }
        }
    }
}

/// Vector `exp(ln_norm) * dir` with `|dir| = 1` (or `dir = 0` for the zero
/// vector, where `ln_norm = -inf`).
#[derive(Debug, Clone, PartialEq)]
pub struct LogVector {
    pub ln_norm: f64,
    pub dir: Vec<f64>,
}

/// Euclidean norm without intermediate overflow or underflow.
pub fn stable_norm(v: &[f64]) -> f64 {
    if v.len() == 1 {
        return v[0].abs();
    }
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

impl LogVector {
    pub fn zero(d: usize) -> Self {
        Self { ln_norm: f64::NEG_INFINITY, dir: vec![0.0; d] }
    }

    pub fn from_vec(v: &[f64]) -> Self {
        let r = stable_norm(v);
        if r == 0.0 {
            return Self::zero(v.len());
        }
        Self { ln_norm: r.ln(), dir: v.iter().map(|x| x / r).collect() }
    }

    pub fn from_parts(ln_norm: f64, dir: Vec<f64>) -> Self {
        Self { ln_norm, dir }
    }

    pub fn dim(&self) -> usize {
        self.dir.len()
    }

    pub fn is_zero(&self) -> bool {
        self.ln_norm == f64::NEG_INFINITY
    }

    /// Ordinary vector; components may overflow to `+-inf`.
    pub fn to_vec(&self) -> Vec<f64> {
        if self.is_zero() {
            return vec![0.0; self.dim()];
        }
        let r = self.ln_norm.exp();
        self.dir.iter().map(|x| x * r).collect()
    }

    pub fn scale(&self, s: SignedLog) -> Self {
        if s.is_zero() || self.is_zero() {
            return Self::zero(self.dim());
        }
        Self { ln_norm: self.ln_norm + s.ln_abs, dir: self.dir.iter().map(|x| x * s.sign).collect() }
    }

    /// `a * u + b * v`.
    pub fn linear_combination(a: SignedLog, u: &LogVector, b: SignedLog, v: &LogVector) -> LogVector {
        let la = if a.is_zero() { f64::NEG_INFINITY } else { a.ln_abs + u.ln_norm };
        let lb = if b.is_zero() { f64::NEG_INFINITY } else { b.ln_abs + v.ln_norm };
        let top = match la.partial_cmp(&lb) {
            Some(Ordering::Less) => lb,
            _ => la,
        };
        if top == f64::NEG_INFINITY {
            return LogVector::zero(u.dim());
        }
        let wa = if la == f64::NEG_INFINITY { 0.0 } else { a.sign * (la - top).exp() };
        let wb = if lb == f64::NEG_INFINITY { 0.0 } else { b.sign * (lb - top).exp() };
        let w: Vec<f64> = u.dir.iter().zip(&v.dir).map(|(x, y)| wa * x + wb * y).collect();
        let r = stable_norm(&w);
        if r == 0.0 {
            return LogVector::zero(u.dim());
        }
        LogVector { ln_norm: top + r.ln(), dir: w.iter().map(|x| x / r).collect() }
    }
}

/// `ln(1 + r)` given `ln r`, valid far beyond the `f64` range of `r`.
pub fn ln_1p_from_ln(ln_r: f64) -> f64 {
    if ln_r > 0.0 {
        ln_r + (-ln_r).exp().ln_1p()
    } else {
        ln_r.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn signed_log_basics() {
        let a = SignedLog::from_f64(3.0);
        let b = SignedLog::from_f64(-5.0);
        assert!(((a + b).to_f64() + 2.0).abs() < 1e-14);
        assert!(((a * b).to_f64() + 15.0).abs() < 1e-13);
        assert!((a + SignedLog::from_f64(-3.0)).is_zero());
        assert_eq!(SignedLog::ZERO + b, b);
        let huge = SignedLog::from_ln(1.0, 5000.0);
        assert_eq!((huge + SignedLog::ONE).ln_abs, 5000.0);
    }

    #[test]
    fn norm_survives_huge_components() {
        let v = [1e200, -1e200];
        assert!((stable_norm(&v) / (2f64.sqrt() * 1e200) - 1.0).abs() < 1e-15);
        assert_eq!(stable_norm(&[0.0, 0.0]), 0.0);
        assert!((ln_1p_from_ln(1000.0) - 1000.0).abs() < 1e-15);
        assert!((ln_1p_from_ln(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn linear_combination_matches_plain_arithmetic(
            u in prop::collection::vec(-1e3f64..1e3, 3),
            v in prop::collection::vec(-1e3f64..1e3, 3),
            a in -50.0f64..50.0,
            b in -50.0f64..50.0,
        ) {
            let plain: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let lv = LogVector::linear_combination(
                SignedLog::from_f64(a), &LogVector::from_vec(&u),
                SignedLog::from_f64(b), &LogVector::from_vec(&v),
            );
            let back = lv.to_vec();
            let scale = stable_norm(&plain).max(1e-300);
            let magnitude = (a.abs() * stable_norm(&u)).max(b.abs() * stable_norm(&v)).max(1.0);
            for (x, y) in back.iter().zip(&plain) {
                prop_assert!((x - y).abs() <= 1e-12 * magnitude.max(scale));
            }
        }
    }
}
