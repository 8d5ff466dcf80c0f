//! Scale parameters: square roots of integers or powers of two.

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::exact::rat::{int_str, Rat};
use crate::exact::real::Real;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XVal {
    /// `sqrt(n)`
    Sqrt {
        #[serde(with = "int_str")]
        n: BigInt,
    },
    /// `2^k`
    Pow2 { k: u64 },
}

impl XVal {
    pub fn sqrt(n: impl Into<BigInt>) -> Self {
        XVal::Sqrt { n: n.into() }
    }

    pub fn pow2(k: u64) -> Self {
        XVal::Pow2 { k }
    }

    /// Exact square.
    pub fn sq(&self) -> Rat {
        match self {
            XVal::Sqrt { n } => Rat::from_integer(n.clone()),
            XVal::Pow2 { k } => Rat::from_integer(BigInt::one() << (2 * k)),
        }
    }

    pub fn real(&self) -> Real {
        match self {
            XVal::Sqrt { n } => Real::sqrt_int(n.clone()),
            XVal::Pow2 { k } => Real::int(BigInt::one() << *k),
        }
    }

    /// `self^gamma`.
    pub fn pow_gamma(&self) -> Real {
        self.real().pow(&Real::gamma())
    }

    /// `self^(gamma + j)` for integer `j`, computed as `self^gamma * self^j`.
    pub fn pow_gamma_plus(&self, j: i32) -> Real {
        let g = self.pow_gamma();
        let mut out = g;
        for _ in 0..j.unsigned_abs() {
            out = if j > 0 { out.mul(&self.real()) } else { out.div(&self.real()) };
        }
        out
    }

    /// Rough base-2 logarithm, for sizing searches only.
    pub fn log2_approx(&self) -> f64 {
        match self {
            XVal::Sqrt { n } => n.bits() as f64 / 2.0 - 0.5,
            XVal::Pow2 { k } => *k as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares_and_json() {
        assert_eq!(XVal::pow2(3).sq(), Rat::from_integer(64.into()));
        assert_eq!(XVal::sqrt(1001).sq(), Rat::from_integer(1001.into()));
        let s = serde_json::to_string(&XVal::sqrt(1001)).unwrap();
        assert_eq!(s, r#"{"kind":"sqrt","n":"1001"}"#);
        let back: XVal = serde_json::from_str(&s).unwrap();
        assert_eq!(back, XVal::sqrt(1001));
    }

    #[test]
    fn gamma_power_of_pow2() {
        let v = XVal::pow2(10).pow_gamma().eval(128).unwrap().mid().to_f64();
        let oracle = 1024f64.powf(1.618_033_988_749_895);
        assert!((v / oracle - 1.0).abs() < 1e-12);
    }
}
