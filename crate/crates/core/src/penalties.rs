//! SCAD, MCP and LASSO penalties together with the convex-difference split
//! `p_λ(|β|) = λ|β| - L(β)` used for optimality checks.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    Scad,
    Mcp,
    Lasso,
}

impl PenaltyFamily {
    /// Conventional concavity parameter: 3.7 for SCAD, 3 for MCP.
    pub fn default_a(self) -> f64 {
        match self {
            PenaltyFamily::Scad => 3.7,
            PenaltyFamily::Mcp => 3.0,
            PenaltyFamily::Lasso => 0.0,
        }
    }
}

impl std::str::FromStr for PenaltyFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scad" => Ok(Self::Scad),
            "mcp" => Ok(Self::Mcp),
            "lasso" => Ok(Self::Lasso),
            other => Err(Error::InvalidPenalty(format!("unknown penalty family {other:?}"))),
        }
    }
}

/// A penalty family with its tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PenaltySpec<T: Scalar> {
    family: PenaltyFamily,
    lambda: T,
    a: T,
}

impl<T: Scalar> PenaltySpec<T> {
    /// Validates `lambda >= 0` and `a > 2` (SCAD) / `a > 1` (MCP).
    pub fn new(family: PenaltyFamily, lambda: T, a: T) -> Result<Self> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidPenalty(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        let bound = match family {
            PenaltyFamily::Scad => Some(2.0),
            PenaltyFamily::Mcp => Some(1.0),
            PenaltyFamily::Lasso => None,
        };
        if let Some(b) = bound {
            if !(a > T::of(b)) || !a.is_finite() {
                return Err(Error::InvalidPenalty(format!(
                    "{family:?} needs a > {b}, got {a}"
                )));
            }
        }
        Ok(Self { family, lambda, a })
    }

    pub fn scad(lambda: T) -> Result<Self> {
        Self::new(PenaltyFamily::Scad, lambda, T::of(3.7))
    }

    pub fn mcp(lambda: T) -> Result<Self> {
        Self::new(PenaltyFamily::Mcp, lambda, T::of(3.0))
    }

    pub fn lasso(lambda: T) -> Result<Self> {
        Self::new(PenaltyFamily::Lasso, lambda, T::zero())
    }

    /// Same family and `a` with a different `lambda`.
    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        Self::new(self.family, lambda, self.a)
    }

    pub fn family(&self) -> PenaltyFamily {
        self.family
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn a(&self) -> T {
        self.a
    }

    /// `p_λ(|β|)`.
    pub fn penalty(&self, beta: T) -> T {
        let (l, a) = (self.lambda, self.a);
        let b = beta.abs();
        let two = T::of(2.0);
        match self.family {
            PenaltyFamily::Lasso => l * b,
            PenaltyFamily::Scad => {
                if b < l {
                    l * b
                } else if b <= a * l {
                    (a * l * b - (b * b + l * l) / two) / (a - T::one())
                } else {
                    (a + T::one()) * l * l / two
                }
            }
            PenaltyFamily::Mcp => {
                if b < a * l {
                    l * (b - b * b / (two * a * l))
                } else {
                    a * l * l / two
                }
            }
        }
    }

    /// `p'_λ(t)` for `t >= 0`; always in `[0, λ]`.
    pub fn penalty_deriv(&self, beta_abs: T) -> T {
        let (l, a) = (self.lambda, self.a);
        let b = beta_abs.abs();
        match self.family {
            PenaltyFamily::Lasso => l,
            PenaltyFamily::Scad => {
                if b <= l {
                    l
                } else if b <= a * l {
                    (a * l - b) / (a - T::one())
                } else {
                    T::zero()
                }
            }
            PenaltyFamily::Mcp => {
                if b <= a * l {
                    (l - b / a).max(T::zero())
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Concave part `L(β)` with `p_λ(|β|) = λ|β| - L(β)`; zero for LASSO.
    pub fn concave_part(&self, beta: T) -> T {
        let (l, a) = (self.lambda, self.a);
        let b = beta.abs();
        let two = T::of(2.0);
        match self.family {
            PenaltyFamily::Lasso => T::zero(),
            PenaltyFamily::Scad => {
                if b < l {
                    T::zero()
                } else if b <= a * l {
                    (b - l) * (b - l) / (two * (a - T::one()))
                } else {
                    l * b - (a + T::one()) * l * l / two
                }
            }
            PenaltyFamily::Mcp => {
                if b < a * l {
                    b * b / (two * a)
                } else {
                    l * b - a * l * l / two
                }
            }
        }
    }

    /// Derivative `L'(β)` of the concave part.
    pub fn concave_part_deriv(&self, beta: T) -> T {
        let (l, a) = (self.lambda, self.a);
        let b = beta.abs();
        let sgn = if beta > T::zero() {
            T::one()
        } else if beta < T::zero() {
            -T::one()
        } else {
            T::zero()
        };
        match self.family {
            PenaltyFamily::Lasso => T::zero(),
            PenaltyFamily::Scad => {
                if b < l {
                    T::zero()
                } else if b <= a * l {
                    (beta - l * sgn) / (a - T::one())
                } else {
                    l * sgn
                }
            }
            PenaltyFamily::Mcp => {
                if b < a * l {
                    beta / a
                } else {
                    l * sgn
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scad() -> PenaltySpec<f64> {
        PenaltySpec::scad(1.0).unwrap()
    }

    fn mcp() -> PenaltySpec<f64> {
        PenaltySpec::mcp(1.0).unwrap()
    }

    #[test]
    fn construction_bounds() {
        assert!(PenaltySpec::<f64>::new(PenaltyFamily::Scad, 1.0, 2.0).is_err());
        assert!(PenaltySpec::<f64>::new(PenaltyFamily::Scad, 1.0, 2.01).is_ok());
        assert!(PenaltySpec::<f64>::new(PenaltyFamily::Mcp, 1.0, 1.0).is_err());
        assert!(PenaltySpec::<f64>::new(PenaltyFamily::Mcp, 1.0, 1.5).is_ok());
        assert!(PenaltySpec::<f64>::new(PenaltyFamily::Lasso, -0.1, 0.0).is_err());
        assert!(PenaltySpec::<f64>::lasso(f64::NAN).is_err());
        assert_eq!("MCP".parse::<PenaltyFamily>().unwrap(), PenaltyFamily::Mcp);
    }

    #[test]
    fn penalty_values() {
        assert_eq!(scad().penalty(0.5), 0.5);
        assert!((scad().penalty(2.0) - 4.9 / 2.7).abs() < 1e-12);
        assert!((scad().penalty(-2.0) - 1.814815).abs() < 1e-6);
        assert_eq!(mcp().penalty(4.0), 1.5);
        assert_eq!(PenaltySpec::lasso(0.3).unwrap().penalty(-2.0), 0.6);
    }

    #[test]
    fn derivative_values() {
        assert_eq!(scad().penalty_deriv(0.0), 1.0);
        assert_eq!(scad().penalty_deriv(5.0), 0.0);
        assert!((mcp().penalty_deriv(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(PenaltySpec::lasso(0.7).unwrap().penalty_deriv(100.0), 0.7);
    }

    #[test]
    fn concave_part_values() {
        assert_eq!(scad().concave_part(0.5), 0.0);
        assert_eq!(scad().concave_part_deriv(0.5), 0.0);
        // (|β| - λ)^2 / (2(a - 1)) on the middle branch
        assert!((scad().concave_part(2.0) - 1.0 / 5.4).abs() < 1e-12);
        assert!((scad().concave_part_deriv(2.0) - 1.0 / 2.7).abs() < 1e-12);
        assert!((mcp().concave_part(1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((mcp().concave_part_deriv(1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(PenaltySpec::lasso(1.0).unwrap().concave_part(3.0), 0.0);
    }

    #[test]
    fn single_precision_agrees() {
        let p = PenaltySpec::<f32>::scad(1.0).unwrap();
        assert!((p.penalty(2.0) - 4.9 / 2.7).abs() < 1e-6);
    }

    fn family() -> impl Strategy<Value = PenaltySpec<f64>> {
        (0usize..2, 0.05f64..3.0, 0.0f64..1.0).prop_map(|(f, lambda, frac)| match f {
            0 => PenaltySpec::new(PenaltyFamily::Scad, lambda, 2.05 + 4.0 * frac).unwrap(),
            _ => PenaltySpec::new(PenaltyFamily::Mcp, lambda, 1.05 + 4.0 * frac).unwrap(),
        })
    }

    proptest! {
        #[test]
        fn decomposition_identity(p in family(), beta in -20.0f64..20.0) {
            let lhs = p.penalty(beta);
            let rhs = p.lambda() * beta.abs() - p.concave_part(beta);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn derivative_in_range_and_flat_beyond(p in family(), beta in 0.0f64..20.0) {
            let d = p.penalty_deriv(beta);
            prop_assert!(d >= 0.0 && d <= p.lambda());
            if beta > p.a() * p.lambda() {
                prop_assert_eq!(d, 0.0);
            }
        }

        #[test]
        fn parts_are_midpoint_convex(p in family(), x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let m = 0.5 * (x + y);
            let l = |b: f64| p.concave_part(b);
            prop_assert!(l(m) <= 0.5 * (l(x) + l(y)) + 1e-12);
            let abs = |b: f64| p.lambda() * b.abs();
            prop_assert!(abs(m) <= 0.5 * (abs(x) + abs(y)) + 1e-12);
        }
    }
}
