//! Littlewood-Paley multipliers built from a fixed smooth bump.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::RadialField;
use crate::error::{invalid, NlsError, Result};

/// Width of the transition region of the bump (`phi = 0` for `rho >= 1 + BRIDGE`).
pub const BRIDGE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyBand {
    /// `P_{<=N}`
    AtMost { n: f64 },
    /// `P_{>N}`
    Above { n: f64 },
    /// `P_N`, frequencies around `N`
    Dyadic { n: f64 },
    /// `P_{M < . <= N}`
    Range { m: f64, n: f64 },
    /// The fattened projection `P_{N/2} + P_N + P_{2N}`
    Fattened { n: f64 },
}

fn h(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth radial bump: 1 on `[0, 1]`, 0 on `[1.1, inf)`.
pub fn bump(rho: f64) -> f64 {
    let rho = rho.abs();
    if rho <= 1.0 {
        return 1.0;
    }
    if rho >= 1.0 + BRIDGE {
        return 0.0;
    }
    let t = (rho - 1.0) / BRIDGE;
    let a = h(1.0 - t);
    a / (a + h(t))
}

fn sharp(rho: f64) -> f64 {
    if rho.abs() <= 1.0 {
        1.0
    } else {
        0.0
    }
}

impl FrequencyBand {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            FrequencyBand::AtMost { n }
            | FrequencyBand::Above { n }
            | FrequencyBand::Dyadic { n }
            | FrequencyBand::Fattened { n } => {
                if !ok(n) {
                    return Err(invalid!("band frequency must be positive, got {n}"));
                }
            }
            FrequencyBand::Range { m, n } => {
                if !ok(m) || !ok(n) || m >= n {
                    return Err(invalid!("range band needs 0 < M < N, got ({m}, {n}]"));
                }
            }
        }
        Ok(())
    }

    /// The nominal (largest) frequency naming the band.
    pub fn nominal(&self) -> f64 {
        match *self {
            FrequencyBand::AtMost { n }
            | FrequencyBand::Above { n }
            | FrequencyBand::Dyadic { n }
            | FrequencyBand::Range { n, .. } => n,
            FrequencyBand::Fattened { n } => 2.0 * n,
        }
    }

    /// Highest frequency where the multiplier can be nonzero (infinite for `Above`).
    pub fn support_top(&self, sharp: bool) -> f64 {
        let pad = if sharp { 1.0 } else { 1.0 + BRIDGE };
        match *self {
            FrequencyBand::Above { .. } => f64::INFINITY,
            _ => self.nominal() * pad,
        }
    }

    /// Multiplier value at frequency `xi`.
    pub fn symbol(&self, xi: f64, sharp_cut: bool) -> f64 {
        let phi = if sharp_cut { sharp } else { bump };
        match *self {
            FrequencyBand::AtMost { n } => phi(xi / n),
            FrequencyBand::Above { n } => 1.0 - phi(xi / n),
            FrequencyBand::Dyadic { n } => phi(xi / n) - phi(2.0 * xi / n),
            FrequencyBand::Range { m, n } => phi(xi / n) - phi(xi / m),
            FrequencyBand::Fattened { n } => phi(xi / (2.0 * n)) - phi(4.0 * xi / n),
        }
    }
}

/// Applies the Littlewood-Paley multiplier of `band` to `f`.
pub fn lp_project(f: &RadialField, band: FrequencyBand, sharp: bool) -> Result<RadialField> {
    band.validate()?;
    let grid = f.grid();
    if band.nominal() > grid.kmax() {
        return Err(NlsError::OutOfRange(format!(
            "band at {} exceeds kmax {}",
            band.nominal(),
            grid.kmax()
        )));
    }
    let top = match band {
        FrequencyBand::Above { n } => n,
        _ => band.support_top(sharp),
    };
    if top > grid.resolved_kmax() {
        log::warn!(
            "band {:?} reaches {:.3}, beyond the resolved limit {:.3}",
            band,
            top,
            grid.resolved_kmax()
        );
    }
    Ok(f.forward()
        .apply_multiplier(|x| Complex64::new(band.symbol(x, sharp), 0.0))
        .inverse())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 1.0);
        assert_eq!(bump(1.1), 0.0);
        assert!((bump(1.05) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = bump(1.0 + 0.001 * i as f64);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn fattened_is_one_on_dyadic_support() {
        let n = 8.0;
        for i in 0..2000 {
            let xi = 0.01 * i as f64;
            let p = FrequencyBand::Dyadic { n }.symbol(xi, false);
            if p != 0.0 {
                assert_eq!(FrequencyBand::Fattened { n }.symbol(xi, false), 1.0, "xi={xi}");
            }
        }
    }

    #[test]
    fn band_validation() {
        assert!(FrequencyBand::Range { m: 4.0, n: 2.0 }.validate().is_err());
        assert!(FrequencyBand::Dyadic { n: 0.0 }.validate().is_err());
        assert!(FrequencyBand::Range { m: 1.0, n: 2.0 }.validate().is_ok());
    }
}
