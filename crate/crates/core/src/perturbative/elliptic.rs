//! Complete elliptic integrals in the parameter convention,
//! `K(m) = ∫₀^{π/2} (1 − m sin²φ)^{-1/2} dφ`, `E(m) = ∫₀^{π/2} (1 − m sin²φ)^{1/2} dφ`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// `(K, E)` from the complementary modulus `k' = √(1 − m)` by the
/// arithmetic–geometric mean. Taking `k'` directly keeps full relative
/// accuracy as `m → 1`.
pub(crate) fn agm_from_complement(kc: f64) -> (f64, f64) {
    debug_assert!((0.0..=1.0).contains(&kc));
    let mut a = 1.0;
    let mut b = kc;
    let mut c = (1.0 - kc) * (1.0 + kc);
    c = c.sqrt();
    let mut sum = 0.5 * c * c;
    let mut pow = 0.5;
    // c_{n+1} = c_n² / (4 a_{n+1}) avoids forming a − b, whose rounding
    // noise would otherwise be amplified by the 2ⁿ weights.
    while c > 1e-18 * a {
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        c = c * c / (4.0 * an);
        a = an;
        pow *= 2.0;
        sum += pow * c * c;
    }
    let k = FRAC_PI_2 / a;
    (k, k * (1.0 - sum))
}

fn check(m: f64, upper_inclusive: bool) -> Result<()> {
    let ok = if upper_inclusive {
        (0.0..=1.0).contains(&m)
    } else {
        (0.0..1.0).contains(&m)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::DomainError { m })
    }
}

/// Complete elliptic integral of the first kind, `m ∈ [0, 1)`.
pub fn elliptic_k(m: f64) -> Result<f64> {
    check(m, false)?;
    Ok(agm_from_complement((1.0 - m).sqrt()).0)
}

/// Complete elliptic integral of the second kind, `m ∈ [0, 1]`.
pub fn elliptic_e(m: f64) -> Result<f64> {
    check(m, true)?;
    if m == 1.0 {
        return Ok(1.0);
    }
    Ok(agm_from_complement((1.0 - m).sqrt()).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbative::quadrature::integrate;

    #[test]
    fn endpoints() {
        assert!((elliptic_k(0.0).unwrap() - FRAC_PI_2).abs() < 1e-14);
        assert!((elliptic_e(0.0).unwrap() - FRAC_PI_2).abs() < 1e-14);
        assert_eq!(elliptic_e(1.0).unwrap(), 1.0);
    }

    #[test]
    fn domain() {
        assert_eq!(elliptic_k(1.0), Err(Error::DomainError { m: 1.0 }));
        assert!(elliptic_k(-0.1).is_err());
        assert!(elliptic_e(1.1).is_err());
        assert!(elliptic_k(f64::NAN).is_err());
    }

    #[test]
    fn matches_quadrature() {
        for m in [0.1, 0.5, 0.9] {
            let k = integrate(|p: f64| (1.0 - m * p.sin().powi(2)).powf(-0.5), 0.0, FRAC_PI_2, 1e-14, 4).unwrap();
            let e = integrate(|p: f64| (1.0 - m * p.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2, 1e-14, 4).unwrap();
            assert!((elliptic_k(m).unwrap() - k).abs() < 1e-12);
            assert!((elliptic_e(m).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_values() {
        assert!((elliptic_k(0.5).unwrap() - 1.854_074_677_301_372).abs() < 1e-14);
        assert!((elliptic_e(0.5).unwrap() - 1.350_643_881_047_675_5).abs() < 1e-14);
    }

    #[test]
    fn legendre_relation() {
        for i in 1..50 {
            let m = i as f64 / 50.0;
            let (k, e) = (elliptic_k(m).unwrap(), elliptic_e(m).unwrap());
            let (kc, ec) = (elliptic_k(1.0 - m).unwrap(), elliptic_e(1.0 - m).unwrap());
            assert!((e * kc + ec * k - k * kc - FRAC_PI_2).abs() < 1e-12, "m = {m}");
        }
    }
}
