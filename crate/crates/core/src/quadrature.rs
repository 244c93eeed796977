//! One-dimensional quadrature rules on `[-pi, pi]` and tensor-product sums.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Family of one-dimensional rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuadKind {
    /// Clenshaw–Curtis on Chebyshev extreme points.
    CC,
    /// Gauss–Legendre.
    GL,
    /// Periodic trapezoid rule on equispaced points.
    NC,
}

impl QuadKind {
    pub const ALL: [QuadKind; 3] = [QuadKind::CC, QuadKind::GL, QuadKind::NC];

    pub fn as_str(&self) -> &'static str {
        match self {
            QuadKind::CC => "CC",
            QuadKind::GL => "GL",
            QuadKind::NC => "NC",
        }
    }
}

impl fmt::Display for QuadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuadKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CC" => Ok(QuadKind::CC),
            "GL" => Ok(QuadKind::GL),
            "NC" => Ok(QuadKind::NC),
            _ => invalid(format!(
                "unknown quadrature kind `{s}` (expected CC, GL or NC)"
            )),
        }
    }
}

/// Nodes (ascending) and positive weights of a rule on `[-pi, pi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quad1D {
    kind: QuadKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quad1D {
    pub fn kind(&self) -> QuadKind {
        self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Rule applied to a real function of one variable.
    pub fn integrate(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * h(x))
            .sum()
    }
}

pub fn make_rule(kind: QuadKind, m: usize) -> Result<Quad1D> {
    if m == 0 {
        return invalid("quadrature rule needs at least one node");
    }
    let (nodes, weights) = match kind {
        QuadKind::NC => trapezoid(m),
        QuadKind::GL => rescale(gauss_legendre(m)),
        QuadKind::CC => rescale(clenshaw_curtis(m)),
    };
    Ok(Quad1D {
        kind,
        nodes,
        weights,
    })
}

fn rescale((x, w): (Vec<f64>, Vec<f64>)) -> (Vec<f64>, Vec<f64>) {
    (
        x.into_iter().map(|t| t * PI).collect(),
        w.into_iter().map(|t| t * PI).collect(),
    )
}

fn trapezoid(m: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * PI / m as f64;
    let nodes = (0..m).map(|k| -PI + h * k as f64).collect();
    (nodes, vec![h; m])
}

/// Legendre `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the (i+1)-th largest root.
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() <= 1e-16 {
                break;
            }
        }
        if n % 2 == 1 && i == half - 1 {
            t = 0.0;
        }
        let (_, dp) = legendre(n, t);
        let wt = 2.0 / ((1.0 - t * t) * dp * dp);
        x[n - 1 - i] = t;
        x[i] = -t;
        w[n - 1 - i] = wt;
        w[i] = wt;
    }
    (x, w)
}

/// Clenshaw–Curtis nodes and weights on `[-1, 1]`, ascending.
fn clenshaw_curtis(m: usize) -> (Vec<f64>, Vec<f64>) {
    if m == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let n = m - 1;
    let nf = n as f64;
    // sin form keeps the node set exactly symmetric
    let x: Vec<f64> = (0..=n)
        .map(|j| (PI * (2.0 * j as f64 - nf) / (2.0 * nf)).sin())
        .collect();
    let w = (0..=n)
        .map(|j| {
            let c = if j == 0 || j == n { 1.0 } else { 2.0 };
            let mut sum = 0.0;
            for k in 1..=n / 2 {
                let b = if 2 * k == n { 1.0 } else { 2.0 };
                // cos(2 k j pi / n) with the argument reduced modulo 2 pi
                let r = (2 * k * j) % (2 * n);
                let kk = k as f64;
                sum += b * (PI * r as f64 / nf).cos() / (4.0 * kk * kk - 1.0);
            }
            c / nf * (1.0 - sum)
        })
        .collect();
    (x, w)
}

/// `sum_i sum_j w1[i] w2[j] g(x1[i], x2[j])`, accumulated row-major.
///
/// This is the raw tensor-product sum behind [`integrate2d`]; the weight
/// vectors are not required to form a valid rule.
pub fn tensor_sum(
    x1: &[f64],
    w1: &[f64],
    x2: &[f64],
    w2: &[f64],
    g: impl Fn(f64, f64) -> Complex64,
) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for (&a, &wa) in x1.iter().zip(w1) {
        let mut row = Complex64::new(0.0, 0.0);
        for (&b, &wb) in x2.iter().zip(w2) {
            let v = g(a, b);
            if !(v.re.is_finite() && v.im.is_finite()) {
                let value = if v.re.is_finite() { v.im } else { v.re };
                return Err(Error::NumericDomain {
                    x1: a,
                    x2: b,
                    value,
                });
            }
            row += v * wb;
        }
        total += row * wa;
    }
    Ok(total)
}

pub fn integrate2d(
    r1: &Quad1D,
    r2: &Quad1D,
    g: impl Fn(f64, f64) -> Complex64,
) -> Result<Complex64> {
    tensor_sum(&r1.nodes, &r1.weights, &r2.nodes, &r2.weights, g)
}
