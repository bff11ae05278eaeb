//! Quartic double-well potentials with wells normalized to ±1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used by [`Potential::validate_double_well`].
pub const VALIDATION_TOL: f64 = 1e-12;

/// W(u) = c4 u⁴ + c3 u³ + c2 u² + c1 u + c0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub c4: f64,
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl Default for Potential {
    fn default() -> Self {
        Self::standard_quartic()
    }
}

impl Potential {
    pub fn new(c4: f64, c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        Self { c4, c3, c2, c1, c0 }
    }

    /// W(u) = ¼(1 − u²)².
    pub fn standard_quartic() -> Self {
        Self::new(0.25, 0.0, -0.5, 0.0, 0.25)
    }

    /// Order-th derivative of W at `u`, for order in 0..=4.
    pub fn eval(&self, u: f64, order: u32) -> Result<f64> {
        match order {
            0..=4 => Ok(self.eval_unchecked(u, order)),
            _ => Err(Error::InvalidArgument(format!(
                "derivative order {order} outside 0..=4"
            ))),
        }
    }

    #[inline]
    fn eval_unchecked(&self, u: f64, order: u32) -> f64 {
        let Self { c4, c3, c2, c1, c0 } = *self;
        match order {
            0 => (((c4 * u + c3) * u + c2) * u + c1) * u + c0,
            1 => ((4.0 * c4 * u + 3.0 * c3) * u + 2.0 * c2) * u + c1,
            2 => (12.0 * c4 * u + 6.0 * c3) * u + 2.0 * c2,
            3 => 24.0 * c4 * u + 6.0 * c3,
            4 => 24.0 * c4,
            _ => 0.0,
        }
    }

    #[inline]
    pub fn w(&self, u: f64) -> f64 {
        self.eval_unchecked(u, 0)
    }

    #[inline]
    pub fn dw(&self, u: f64) -> f64 {
        self.eval_unchecked(u, 1)
    }

    #[inline]
    pub fn d2w(&self, u: f64) -> f64 {
        self.eval_unchecked(u, 2)
    }

    #[inline]
    pub fn d3w(&self, u: f64) -> f64 {
        self.eval_unchecked(u, 3)
    }

    #[inline]
    pub fn d4w(&self) -> f64 {
        24.0 * self.c4
    }

    /// Even potentials (c3 = c1 = 0) give odd heteroclinic profiles.
    pub fn is_symmetric(&self) -> bool {
        self.c3 == 0.0 && self.c1 == 0.0
    }

    /// max |W''| over [-1, 1]; W'' is a parabola so endpoints and vertex suffice.
    pub fn max_abs_d2w_on_wells(&self) -> f64 {
        let mut m = self.d2w(-1.0).abs().max(self.d2w(1.0).abs());
        if self.c4 != 0.0 {
            let vertex = -self.c3 / (4.0 * self.c4);
            if (-1.0..=1.0).contains(&vertex) {
                m = m.max(self.d2w(vertex).abs());
            }
        }
        m
    }

    pub fn validate_double_well(&self) -> ValidationReport {
        let checks = vec![
            Check::new("c4 > 0", self.c4, self.c4 > 0.0),
            Check::new("W(-1) = 0", self.w(-1.0), self.w(-1.0).abs() <= VALIDATION_TOL),
            Check::new("W(+1) = 0", self.w(1.0), self.w(1.0).abs() <= VALIDATION_TOL),
            Check::new("W''(-1) > 0", self.d2w(-1.0), self.d2w(-1.0) > VALIDATION_TOL),
            Check::new("W''(+1) > 0", self.d2w(1.0), self.d2w(1.0) > VALIDATION_TOL),
        ];
        ValidationReport { checks }
    }

    /// Returns an error naming the first failed invariant.
    pub fn require_double_well(&self) -> Result<()> {
        let report = self.validate_double_well();
        match report.checks.iter().find(|c| !c.pass) {
            None => Ok(()),
            Some(c) => Err(Error::InvalidArgument(format!(
                "potential fails `{}` (measured {:.3e})",
                c.name, c.value
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, pass: bool) -> Self {
        Self { name, value, pass }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_values() {
        let p = Potential::standard_quartic();
        assert_eq!(p.w(0.0), 0.25);
        assert_eq!(p.w(1.0), 0.0);
        assert_eq!(p.w(-1.0), 0.0);
        assert_eq!(p.d2w(1.0), 2.0);
        assert_eq!(p.d2w(-1.0), 2.0);
        assert_eq!(p.eval(0.0, 1).unwrap(), 0.0);
        assert_eq!(p.eval(1.0, 2).unwrap(), 2.0);
        assert!((p.eval(0.5, 1).unwrap() + 0.375).abs() < 1e-15);
        assert!(p.validate_double_well().pass());
    }

    #[test]
    fn order_out_of_range() {
        let p = Potential::standard_quartic();
        assert!(matches!(p.eval(0.3, 5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn perturbed_well_fails() {
        let p = Potential::new(0.25, 0.0, -0.5, 0.1, 0.25);
        let report = p.validate_double_well();
        assert!(!report.pass());
        let names: Vec<_> = report.failures().map(|c| c.name).collect();
        assert!(names.contains(&"W(-1) = 0"));
        assert!(names.contains(&"W(+1) = 0"));
    }

    #[test]
    fn negative_leading_coefficient_fails() {
        let p = Potential::new(-1.0, 0.0, 2.0, 0.0, -1.0);
        let report = p.validate_double_well();
        assert!(report.failures().any(|c| c.name == "c4 > 0"));
        assert!(p.require_double_well().is_err());
    }

    #[test]
    fn max_curvature_on_wells() {
        assert_eq!(Potential::standard_quartic().max_abs_d2w_on_wells(), 2.0);
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(u in -2.0f64..2.0, k in 0u32..4) {
            let p = Potential::standard_quartic();
            let h = 1e-5;
            let fd = (p.eval(u + h, k).unwrap() - p.eval(u - h, k).unwrap()) / (2.0 * h);
            let exact = p.eval(u, k + 1).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
        }

        #[test]
        fn standard_quartic_is_even(u in -3.0f64..3.0) {
            let p = Potential::standard_quartic();
            prop_assert_eq!(p.w(u), p.w(-u));
        }
    }
}
