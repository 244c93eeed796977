//! Benchmark functions on `[-pi, pi]^2`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TestFunction {
    /// Kink function: a scaled product of clipped parabolas centred at 1/2.
    F1,
    /// `(1 - x1^2 - x2^2) exp(x1 cos x2)`.
    F2,
    /// Sum of two Lorentzian-type peaks.
    F3,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [TestFunction::F1, TestFunction::F2, TestFunction::F3];

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::F1 => "f1",
            TestFunction::F2 => "f2",
            TestFunction::F3 => "f3",
        }
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            TestFunction::F1 => {
                let scale = 5f64.powf(0.75) * 15.0 / (4.0 * 3f64.sqrt());
                let bump = |x: f64| (0.2 - (x - 0.5) * (x - 0.5)).max(0.0);
                scale * scale * bump(x1) * bump(x2)
            }
            TestFunction::F2 => (1.0 - x1 * x1 - x2 * x2) * (x1 * x2.cos()).exp(),
            TestFunction::F3 => {
                1.0 / (0.1 + x1 * x1 + x2 * x2)
                    + 1.0 / (0.01 + (x1 - 0.5) * (x1 - 0.5) + (x2 - 0.5) * (x2 - 0.5))
            }
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(TestFunction::F1),
            "f2" => Ok(TestFunction::F2),
            "f3" => Ok(TestFunction::F3),
            _ => Err(Error::Lookup(s.to_string())),
        }
    }
}

/// Evaluates a registered function by name.
pub fn test_function(name: &str, x1: f64, x2: f64) -> Result<f64> {
    Ok(name.parse::<TestFunction>()?.eval(x1, x2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn point_values() {
        assert_eq!(test_function("f2", 0.0, 0.0).unwrap(), 1.0);
        let k = 5f64.powf(0.75) * 15.0 / (4.0 * 3f64.sqrt());
        let v = test_function("f1", 0.5, 0.5).unwrap();
        assert!((v - k * k / 25.0).abs() < 1e-13);
        assert!((v - 2.0963).abs() < 1e-4);
        let v = test_function("f3", 0.0, 0.0).unwrap();
        assert!((v - (10.0 + 1.0 / 0.51)).abs() < 1e-13);
        assert!((v - 11.96078).abs() < 1e-5);
    }

    #[test]
    fn unknown_name() {
        assert_eq!(
            test_function("f9", 0.0, 0.0),
            Err(Error::Lookup("f9".into()))
        );
    }

    #[test]
    fn kink_support_and_sign() {
        let r = 1.0 / 5f64.sqrt();
        assert_eq!(TestFunction::F1.eval(0.5 + r + 1e-12, 0.5), 0.0);
        assert_eq!(TestFunction::F1.eval(0.5, 0.5 - r - 1e-12), 0.0);
        assert_eq!(TestFunction::F1.eval(-3.0, 3.0), 0.0);
        assert!(TestFunction::F1.eval(0.6, 0.4) > 0.0);
    }

    #[test]
    fn bounded_on_probe_grid() {
        let n = 1000;
        let xs: Vec<f64> = (0..n)
            .map(|i| -PI + 2.0 * PI * i as f64 / (n - 1) as f64)
            .collect();
        for f in TestFunction::ALL {
            let mut max = 0f64;
            for &a in &xs {
                for &b in &xs {
                    let v = f.eval(a, b);
                    assert!(v.is_finite());
                    match f {
                        TestFunction::F1 => assert!(v >= 0.0),
                        TestFunction::F3 => assert!(v > 0.0),
                        TestFunction::F2 => {}
                    }
                    max = max.max(v.abs());
                }
            }
            assert!(max.is_finite());
        }
    }
}
