//! Closed-form rate and distortion expressions, in bits per dimension.
//!
//! These are the analytic references the simulators are checked against.
//! Zero variances are handled by their limits where the limit is finite;
//! unbounded expressions are reported as [`RateError::Degenerate`].

use crate::error::RateError;
use crate::scalar::Scalar;

fn check<T: Scalar>(name: &'static str, v: T) -> Result<T, RateError> {
    if v >= T::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(RateError::Negative {
            name,
            value: v.as_f64(),
        })
    }
}

fn half_log2<T: Scalar>(x: T) -> T {
    T::lit(0.5) * x.log2()
}

/// `ab/(a+b)`, taking the limit 0 when both vanish.
fn parallel<T: Scalar>(a: T, b: T) -> T {
    let s = a + b;
    if s == T::zero() {
        T::zero()
    } else {
        a * b / s
    }
}

/// Conditional variance of `X+Z₁` given `X+Z₂`: `N1 + P·N2/(P+N2)`.
pub fn conditional_variance<T: Scalar>(p: T, n1: T, n2: T) -> Result<T, RateError> {
    Ok(check("N1", n1)? + parallel(check("P", p)?, check("N2", n2)?))
}

/// Wyner-Ziv rate-distortion function for source `X+Z₁` with side
/// information `X+Z₂`: `½log₂(σ²/D)` for `D ≤ σ²`, else 0.
pub fn wz_rd<T: Scalar>(p: T, n1: T, n2: T, d: T) -> Result<T, RateError> {
    let resid = conditional_variance(p, n1, n2)?;
    let d = check("D", d)?;
    if d >= resid {
        return Ok(T::zero());
    }
    if d == T::zero() {
        return Err(RateError::Degenerate { name: "D" });
    }
    Ok(half_log2(resid / d))
}

/// Rate when the source-side scale is fixed to 1: `½log₂(1 + σ²/D)`.
pub fn wz_rd_alpha1_fixed<T: Scalar>(p: T, n1: T, n2: T, d: T) -> Result<T, RateError> {
    let resid = conditional_variance(p, n1, n2)?;
    let d = check("D", d)?;
    if d == T::zero() {
        return Err(RateError::Degenerate { name: "D" });
    }
    Ok(half_log2(T::one() + resid / d))
}

/// Rate when the side-information weight is fixed to 1:
/// `½log₂((N1+N2)/D)`, clipped at 0.
pub fn wz_rd_alpha2_fixed<T: Scalar>(n1: T, n2: T, d: T) -> Result<T, RateError> {
    let total = check("N1", n1)? + check("N2", n2)?;
    let d = check("D", d)?;
    if d >= total {
        return Ok(T::zero());
    }
    if d == T::zero() {
        return Err(RateError::Degenerate { name: "D" });
    }
    Ok(half_log2(total / d))
}

/// Compress-and-forward rate of the three-node Gaussian relay channel:
/// `½log₂(1 + P1/N3 + P1·P2/(P1·N2 + P1·N3 + P2·N2 + N2·N3))`.
pub fn cf_rate<T: Scalar>(p1: T, p2: T, n2: T, n3: T) -> Result<T, RateError> {
    let (p1, p2, n2, n3) = (check("P1", p1)?, check("P2", p2)?, check("N2", n2)?, check("N3", n3)?);
    if n3 == T::zero() {
        return Err(RateError::Degenerate { name: "N3" });
    }
    let denom = p1 * n2 + p1 * n3 + p2 * n2 + n2 * n3;
    let relay = if denom == T::zero() { T::zero() } else { p1 * p2 / denom };
    Ok(half_log2(T::one() + p1 / n3 + relay))
}

/// Rate the relay codebook can carry to the destination while the source
/// signal is treated as noise: `½log₂(1 + P2/(P1+N3))`.
pub fn relay_rate_rprime<T: Scalar>(p1: T, p2: T, n3: T) -> Result<T, RateError> {
    let (p1, p2, n3) = (check("P1", p1)?, check("P2", p2)?, check("N3", n3)?);
    let noise = p1 + n3;
    if noise == T::zero() {
        if p2 == T::zero() {
            return Ok(T::zero());
        }
        return Err(RateError::Degenerate { name: "P1+N3" });
    }
    Ok(half_log2(T::one() + p2 / noise))
}

/// Relay compression rate `½log₂(1 + (N2 + P1·N3/(P1+N3))/D)`.
pub fn compression_rate<T: Scalar>(p1: T, n2: T, n3: T, d: T) -> Result<T, RateError> {
    let resid = conditional_variance(p1, n2, n3)?;
    let d = check("D", d)?;
    if d == T::zero() {
        return Err(RateError::Degenerate { name: "D" });
    }
    Ok(half_log2(T::one() + resid / d))
}

/// Smallest compression distortion the relay link supports:
/// `D* = (N2 + P1·N3/(P1+N3))·(P1+N3)/P2`.
pub fn compression_d_star<T: Scalar>(p1: T, p2: T, n2: T, n3: T) -> Result<T, RateError> {
    let resid = conditional_variance(p1, n2, n3)?;
    let p2 = check("P2", p2)?;
    if p2 == T::zero() {
        return Err(RateError::Degenerate { name: "P2" });
    }
    Ok(resid * (p1 + n3) / p2)
}

/// Rate of the combined direct and compressed relay observations at
/// compression distortion `D`: `½log₂(1 + P1/N3 + P1/(N2+D))`.
pub fn two_hop_rate<T: Scalar>(p1: T, n2: T, n3: T, d: T) -> Result<T, RateError> {
    let (p1, n2, n3, d) = (check("P1", p1)?, check("N2", n2)?, check("N3", n3)?, check("D", d)?);
    if n3 == T::zero() {
        return Err(RateError::Degenerate { name: "N3" });
    }
    if n2 + d == T::zero() {
        return Err(RateError::Degenerate { name: "N2+D" });
    }
    Ok(half_log2(T::one() + p1 / n3 + p1 / (n2 + d)))
}

/// Direct-link capacity `½log₂(1 + P1/N3)`.
pub fn direct_rate<T: Scalar>(p1: T, n3: T) -> Result<T, RateError> {
    let (p1, n3) = (check("P1", p1)?, check("N3", n3)?);
    if n3 == T::zero() {
        return Err(RateError::Degenerate { name: "N3" });
    }
    Ok(half_log2(T::one() + p1 / n3))
}

/// Parameters for one evaluation of every closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams {
    pub p: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub p1: f64,
    pub p2: f64,
    pub d: f64,
}

impl Default for RateParams {
    fn default() -> Self {
        Self {
            p: 1.0,
            n1: 1.0,
            n2: 1.0,
            n3: 1.0,
            p1: 1.0,
            p2: 1.0,
            d: 0.5,
        }
    }
}

/// Every closed form evaluated at one parameter record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePoint {
    pub params: RateParams,
    pub wz_rd: f64,
    pub wz_rd_a1: f64,
    pub wz_rd_a2: f64,
    pub cf_rate: f64,
    pub r_prime: f64,
    pub d_star: f64,
}

impl RatePoint {
    pub fn evaluate(params: RateParams) -> Result<Self, RateError> {
        let RateParams {
            p,
            n1,
            n2,
            n3,
            p1,
            p2,
            d,
        } = params;
        Ok(Self {
            params,
            wz_rd: wz_rd(p, n1, n2, d)?,
            wz_rd_a1: wz_rd_alpha1_fixed(p, n1, n2, d)?,
            wz_rd_a2: wz_rd_alpha2_fixed(n1, n2, d)?,
            cf_rate: cf_rate(p1, p2, n2, n3)?,
            r_prime: relay_rate_rprime(p1, p2, n3)?,
            d_star: compression_d_star(p1, p2, n2, n3)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn wz_examples() {
        assert_eq!(wz_rd(1.0, 1.0, 1.0, 0.75).unwrap(), 0.5);
        assert_eq!(wz_rd(1.0, 1.0, 1.0, 1.5).unwrap(), 0.0);
        assert_eq!(wz_rd(1.0, 1.0, 1.0, 2.0).unwrap(), 0.0);
        assert!((wz_rd_alpha1_fixed(1.0f64, 1.0, 1.0, 0.5).unwrap() - 1.0).abs() < EPS);
        assert!((wz_rd_alpha2_fixed(1.0f64, 1.0, 0.5).unwrap() - 1.0).abs() < EPS);
        assert_eq!(wz_rd_alpha2_fixed(1.0, 1.0, 2.0).unwrap(), 0.0);
        assert!(wz_rd_alpha1_fixed(1.0, 1.0, 1.0, 1e300).unwrap() < 1e-299);
    }

    #[test]
    fn cf_examples() {
        assert!((cf_rate(1.0, 1.0, 1.0, 1.0).unwrap() - 0.5 * 2.25f64.log2()).abs() < EPS);
        assert!((cf_rate(1.0f64, 1.0, 1.0, 1.0).unwrap() - 0.584_962_500_721_156).abs() < 1e-12);
        assert_eq!(cf_rate(3.0, 0.0, 1.0, 2.0).unwrap(), direct_rate(3.0, 2.0).unwrap());
        let limit = 0.5 * (1.0f64 + 3.0 / 2.0 + 3.0 / 0.5).log2();
        assert!((cf_rate(3.0, 1e12, 0.5, 2.0).unwrap() - limit).abs() < 1e-9);
    }

    #[test]
    fn rprime_examples() {
        assert!((relay_rate_rprime(1.0, 1.0, 1.0).unwrap() - 0.5 * 1.5f64.log2()).abs() < EPS);
        assert_eq!(relay_rate_rprime(1.0, 0.0, 1.0).unwrap(), 0.0);
        assert!(relay_rate_rprime(1.0, 2.0, 1.0).unwrap() > relay_rate_rprime(1.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn d_star_examples() {
        assert!((compression_d_star(1.0f64, 1.0, 1.0, 1.0).unwrap() - 3.0).abs() < EPS);
        assert!(compression_d_star(1.0, 1e15, 1.0, 1.0).unwrap() < 1e-14);
        assert_eq!(
            compression_d_star(1.0, 0.0, 1.0, 1.0),
            Err(RateError::Degenerate { name: "P2" })
        );
        // At D*, the compression rate meets the relay rate.
        let d = compression_d_star(2.0f64, 3.0, 0.5, 1.5).unwrap();
        let lhs = compression_rate(2.0, 0.5, 1.5, d).unwrap();
        let rhs = relay_rate_rprime(2.0, 3.0, 1.5).unwrap();
        assert!((lhs - rhs).abs() < EPS);
    }

    #[test]
    fn degenerate_and_invalid() {
        assert_eq!(wz_rd(1.0, 1.0, 1.0, 0.0), Err(RateError::Degenerate { name: "D" }));
        assert!(matches!(
            wz_rd(-1.0, 1.0, 1.0, 0.5),
            Err(RateError::Negative { name: "P", .. })
        ));
        assert!(matches!(
            cf_rate(1.0, 1.0, 1.0, f64::NAN),
            Err(RateError::Negative { .. })
        ));
        assert_eq!(cf_rate(1.0, 1.0, 1.0, 0.0), Err(RateError::Degenerate { name: "N3" }));
        // Perfect side information: σ² = N1.
        assert!((wz_rd(1.0f64, 2.0, 0.0, 0.5).unwrap() - 1.0).abs() < EPS);
    }

    #[test]
    fn generic_f32() {
        let r: f32 = wz_rd(1.0f32, 1.0, 1.0, 0.75).unwrap();
        assert!((r - 0.5).abs() < 1e-6);
    }

    #[test]
    fn rate_point() {
        let pt = RatePoint::evaluate(RateParams::default()).unwrap();
        assert!((pt.wz_rd - 0.5 * 3f64.log2()).abs() < EPS);
        assert!((pt.d_star - 3.0).abs() < EPS);
    }
}
