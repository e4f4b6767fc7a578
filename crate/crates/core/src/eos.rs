//! Stiffened-gas equation of state.
//!
//! `e = (p + γ p∞) / ((γ - 1) ρ)`; the ideal gas is the `p∞ = 0` member of the
//! family. Most closures only depend on the effective pressure `p + p∞`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialEos {
    pub gamma: f64,
    pub p_inf: f64,
}

impl MaterialEos {
    pub fn new(gamma: f64, p_inf: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::domain(format!("gamma must exceed 1 (got {gamma})")));
        }
        if !(p_inf >= 0.0) || !p_inf.is_finite() {
            return Err(Error::domain(format!("p_inf must be non-negative (got {p_inf})")));
        }
        Ok(Self { gamma, p_inf })
    }

    pub const fn ideal(gamma: f64) -> Self {
        Self { gamma, p_inf: 0.0 }
    }

    /// `p + p∞`, the pressure seen by the ideal-gas part of the closure.
    #[inline]
    pub fn effective_pressure(&self, p: f64) -> f64 {
        p + self.p_inf
    }

    pub fn specific_internal_energy(&self, rho: f64, p: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::domain(format!("non-positive density {rho}")));
        }
        let e = (p + self.gamma * self.p_inf) / ((self.gamma - 1.0) * rho);
        if !(e > 0.0) {
            return Err(Error::domain(format!("non-positive internal energy {e} (rho = {rho}, p = {p})")));
        }
        Ok(e)
    }

    pub fn pressure_from_energy(&self, rho: f64, e: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::domain(format!("non-positive density {rho}")));
        }
        let p = (self.gamma - 1.0) * rho * e - self.gamma * self.p_inf;
        if !(p + self.p_inf > 0.0) {
            return Err(Error::domain(format!(
                "negative effective pressure p + p_inf = {} (rho = {rho}, e = {e})",
                p + self.p_inf
            )));
        }
        Ok(p)
    }

    pub fn sound_speed(&self, rho: f64, p: f64) -> Result<f64> {
        self.check(rho, p)?;
        Ok((self.gamma * (p + self.p_inf) / rho).sqrt())
    }

    /// Entropy surrogate `(p + p∞) / ρ^γ`, constant along isentropes.
    pub fn entropy(&self, rho: f64, p: f64) -> Result<f64> {
        self.check(rho, p)?;
        Ok((p + self.p_inf) / rho.powf(self.gamma))
    }

    /// Validates `rho > 0` and `p + p_inf > 0`.
    #[inline]
    pub fn check(&self, rho: f64, p: f64) -> Result<()> {
        if !(rho > 0.0) {
            return Err(Error::domain(format!("non-positive density {rho}")));
        }
        if !(p + self.p_inf > 0.0) {
            return Err(Error::domain(format!(
                "non-positive effective pressure p + p_inf = {} (p = {p})",
                p + self.p_inf
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn is_admissible(&self, rho: f64, p: f64) -> bool {
        rho > 0.0 && p + self.p_inf > 0.0 && rho.is_finite() && p.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn internal_energy_examples() {
        let air = MaterialEos::ideal(1.4);
        assert!(rel(air.specific_internal_energy(1.0, 1.0).unwrap(), 2.5) < 1e-15);
        let helium = MaterialEos::ideal(1.648);
        let e = helium.specific_internal_energy(0.2163, 1e5).unwrap();
        // 1e5 / (0.648 * 0.2163)
        assert!(rel(e, 713_466.8) < 1e-4, "{e}");
        let water = MaterialEos::new(4.4, 6450.0).unwrap();
        let e = water.specific_internal_energy(1.0, 1.0).unwrap();
        assert!(rel(e, (1.0 + 4.4 * 6450.0) / 3.4) < 1e-15);
        assert!(rel(e, 8347.35) < 1e-5);
    }

    #[test]
    fn pressure_inverse_and_errors() {
        let air = MaterialEos::ideal(1.4);
        assert!(rel(air.pressure_from_energy(1.0, 2.5).unwrap(), 1.0) < 1e-15);
        let water = MaterialEos::new(4.4, 6450.0).unwrap();
        let e = water.specific_internal_energy(1.0, 1.0).unwrap();
        assert!((water.pressure_from_energy(1.0, e).unwrap() - 1.0).abs() < 1e-9);
        assert!(air.pressure_from_energy(1.0, -1.0).is_err());
        assert!(air.specific_internal_energy(0.0, 1.0).is_err());
        assert!(air.specific_internal_energy(1.0, -1.0).is_err());
    }

    #[test]
    fn sound_speed_examples() {
        let air = MaterialEos::ideal(1.4);
        assert!(rel(air.sound_speed(1.4, 1.0).unwrap(), 1.0) < 1e-15);
        assert!(rel(air.sound_speed(1.189, 1e5).unwrap(), 343.1414) < 1e-6);
        assert!(air.sound_speed(1.0, 0.0).is_err());
        assert!(air.sound_speed(-1.0, 1.0).is_err());
    }

    #[test]
    fn entropy_examples() {
        let air = MaterialEos::ideal(1.4);
        assert!(rel(air.entropy(1.0, 1.0).unwrap(), 1.0) < 1e-15);
        let pre = air.entropy(1.189, 1e5).unwrap();
        let post = air.entropy(1.6985715, 1.65625e5).unwrap();
        assert!(rel(pre, 78_469.0) < 1e-3, "{pre}");
        assert!(rel(post, 78_888.0) < 1e-3, "{post}");
        assert!(post > pre);

        let water = MaterialEos::new(4.4, 6450.0).unwrap();
        let (rho, p) = (1.0, 3.0);
        let p2 = 2f64.powf(water.gamma) * (p + water.p_inf) - water.p_inf;
        let s1 = water.entropy(rho, p).unwrap();
        let s2 = water.entropy(2.0 * rho, p2).unwrap();
        assert!(rel(s1, s2) < 1e-14);
    }

    #[test]
    fn constructor_validates() {
        assert!(MaterialEos::new(0.9, 0.0).is_err());
        assert!(MaterialEos::new(1.0, 0.0).is_err());
        assert!(MaterialEos::new(1.4, -1.0).is_err());
        assert!(MaterialEos::new(1.4, 0.0).is_ok());
    }
}
