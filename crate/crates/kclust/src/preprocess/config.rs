use serde::Serialize;

use crate::error::{Error, Result};

/// Parameters of the preprocessing and copy-based rounding.
///
/// The analysis constants (`delta = ε^{-c1}` and friends) are far too large
/// to execute, so the executable fields hold small surrogate values. Each
/// field that differs from the built-in surrogate default is listed in
/// `overrides`, and `theory()` reports the analytic values next to them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleConfig {
    pub epsilon: f64,
    pub p: f64,
    pub c1: u32,
    pub c2: u32,
    pub c3: u32,
    pub c4: u32,
    pub c5: u32,
    /// Copies per unit of opening.
    pub delta: usize,
    /// Sampling scale: F⁺ copies are selected with probability `2L/Δ`.
    pub sample_scale: f64,
    pub iterations: usize,
    /// Below this value of A an unbalanced step forces every unbalanced copy open.
    pub force_threshold: f64,
    /// Allowed surplus over k of the pseudo-solution.
    pub budget: usize,
    /// Threshold on Z used to measure the tail of the net increase.
    pub z_cap: f64,
    /// Pipage granularity; defaults to `1/delta`.
    pub granularity: f64,
    pub overrides: Vec<String>,
}

/// Analytic values of the surrogate fields, as base-10 logarithms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoreticalScale {
    pub log10_delta: f64,
    pub log10_sample_scale: f64,
    pub log10_iterations: f64,
    pub log10_force_threshold: f64,
    pub log10_granularity: f64,
}

pub const DEFAULT_DELTA: usize = 16;
pub const DEFAULT_ITERATIONS: usize = 200;
pub const DEFAULT_BUDGET: usize = 8;
pub const DEFAULT_Z_CAP: f64 = 2.0;

fn ceil_u32(v: f64) -> u32 {
    (v - 1e-9).ceil() as u32
}

/// Largest `1/m` strictly below `1/(3p⁴)`.
pub fn default_epsilon(p: f64) -> f64 {
    let m = (3.0 * p.powi(4)).floor() + 1.0;
    1.0 / m
}

impl ScaleConfig {
    pub fn new(p: f64, epsilon: f64) -> Result<Self> {
        let p2 = p * p;
        let c1 = ceil_u32(12.0 * p2);
        let cfg = ScaleConfig {
            epsilon,
            p,
            c1,
            c2: ceil_u32(48.0 * p2) + 3,
            c3: ceil_u32(132.0 * p2) + 9,
            c4: ceil_u32(84.0 * p2) + 5,
            c5: c1 + 1,
            delta: DEFAULT_DELTA,
            sample_scale: 0.05 * DEFAULT_DELTA as f64,
            iterations: DEFAULT_ITERATIONS,
            force_threshold: 4.0 * DEFAULT_DELTA as f64,
            budget: DEFAULT_BUDGET,
            z_cap: DEFAULT_Z_CAP,
            granularity: 1.0 / DEFAULT_DELTA as f64,
            overrides: Vec::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn for_p(p: f64) -> Result<Self> {
        Self::new(p, default_epsilon(p))
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p;
        if !(p >= 1.0) {
            return Err(Error::Config(format!("p = {p} must be >= 1")));
        }
        let limit = 1.0 / (3.0 * p.powi(4));
        if !(self.epsilon > 0.0 && self.epsilon < limit) {
            return Err(Error::Config(format!("epsilon = {} must lie in (0, {limit})", self.epsilon)));
        }
        let inv = 1.0 / self.epsilon;
        if (inv - inv.round()).abs() > 1e-9 {
            return Err(Error::Config(format!("1/epsilon = {inv} must be an integer")));
        }
        if self.delta == 0 {
            return Err(Error::Config("delta must be positive".into()));
        }
        let rate = 2.0 * self.sample_scale * (1.0 + self.eps_c5()) / self.delta as f64;
        if !(self.sample_scale > 0.0 && rate <= 1.0) {
            return Err(Error::Config(format!("sample scale {} gives selection rate {rate}", self.sample_scale)));
        }
        if !(self.granularity > 0.0 && self.granularity <= 1.0) {
            return Err(Error::Config(format!("granularity {} must lie in (0, 1]", self.granularity)));
        }
        if self.force_threshold < 0.0 {
            return Err(Error::Config("force threshold must be nonnegative".into()));
        }
        Ok(())
    }

    /// Sets delta and keeps the granularity at `1/delta` unless it was overridden.
    pub fn with_delta(mut self, delta: usize) -> Self {
        self.delta = delta;
        if !self.overrides.iter().any(|o| o == "granularity") {
            self.granularity = 1.0 / delta.max(1) as f64;
        }
        self.note("delta")
    }

    pub fn with_sample_scale(mut self, l: f64) -> Self {
        self.sample_scale = l;
        self.note("sample_scale")
    }

    pub fn with_iterations(mut self, t: usize) -> Self {
        self.iterations = t;
        self.note("iterations")
    }

    pub fn with_force_threshold(mut self, v: f64) -> Self {
        self.force_threshold = v;
        self.note("force_threshold")
    }

    pub fn with_budget(mut self, b: usize) -> Self {
        self.budget = b;
        self.note("budget")
    }

    pub fn with_z_cap(mut self, z: f64) -> Self {
        self.z_cap = z;
        self.note("z_cap")
    }

    pub fn with_granularity(mut self, g: f64) -> Self {
        self.granularity = g;
        self.note("granularity")
    }

    fn note(mut self, field: &str) -> Self {
        if !self.overrides.iter().any(|o| o == field) {
            self.overrides.push(field.to_string());
        }
        self
    }

    /// Distance factor of the filtering step, `1/(ε/p)^{4p}`.
    pub fn filter_factor(&self) -> f64 {
        (self.epsilon / self.p).powf(-4.0 * self.p)
    }

    pub fn eps_c3(&self) -> f64 {
        self.epsilon.powi(self.c3 as i32)
    }

    pub fn eps_c5(&self) -> f64 {
        self.epsilon.powi(self.c5 as i32)
    }

    pub fn plus_rate(&self) -> f64 {
        2.0 * self.sample_scale / self.delta as f64
    }

    pub fn minus_rate(&self) -> f64 {
        2.0 * self.sample_scale * (1.0 + self.eps_c5()) / self.delta as f64
    }

    pub fn theory(&self) -> TheoreticalScale {
        let le = self.epsilon.log10();
        TheoreticalScale {
            log10_delta: -(self.c1 as f64) * le,
            log10_sample_scale: self.c2 as f64 * le,
            log10_iterations: (1.0 / self.epsilon).ln().log10() - (self.c1 + self.c2) as f64 * le,
            log10_force_threshold: -(self.c3 as f64) * le,
            log10_granularity: self.c1 as f64 * le,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_follow_p() {
        let c = ScaleConfig::new(1.0, 0.25).unwrap();
        assert_eq!((c.c1, c.c2, c.c3, c.c4, c.c5), (12, 51, 141, 89, 13));
        let c = ScaleConfig::for_p(2.0).unwrap();
        assert_eq!(c.epsilon, 1.0 / 49.0);
        assert_eq!((c.c1, c.c2, c.c3, c.c4, c.c5), (48, 195, 537, 341, 49));
        let c = ScaleConfig::for_p(1.5).unwrap();
        assert_eq!(c.c1, 27);
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(ScaleConfig::new(1.0, 0.4).is_err());
        assert!(ScaleConfig::new(1.0, 0.3).is_err());
        assert!(ScaleConfig::new(2.0, 0.25).is_err());
    }

    #[test]
    fn overrides_are_recorded() {
        let c = ScaleConfig::new(1.0, 0.25).unwrap().with_delta(8).with_iterations(10);
        assert_eq!(c.overrides, vec!["delta", "iterations"]);
        assert_eq!(c.granularity, 0.125);
        assert!((c.plus_rate() - 0.2).abs() < 1e-12);
        assert!(c.theory().log10_delta > 7.0);
    }
}
