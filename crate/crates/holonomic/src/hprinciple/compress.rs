use std::fmt;

use crate::jet::{Diffeo, JetError};
use crate::taylor::TruncatedSeries;

use super::HError;

/// Open model manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// (0, 1)^n.
    Cube { n: usize },
    /// (0, 1)^{n−1} × R.
    Strip { n: usize },
}

impl Model {
    pub fn n(&self) -> usize {
        match *self {
            Model::Cube { n } | Model::Strip { n } => n,
        }
    }

    fn bounded(&self, axis: usize) -> bool {
        match *self {
            Model::Cube { .. } => true,
            Model::Strip { n } => axis + 1 < n,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n()
            && x.iter()
                .enumerate()
                .all(|(i, &v)| !self.bounded(i) || (v > 0.0 && v < 1.0))
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Cube { n } => write!(f, "cube(n={n})"),
            Model::Strip { n } => write!(f, "strip(n={n})"),
        }
    }
}

/// Coordinate polyhedron {x_j = c_j for the fixed axes} inside a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Core {
    pub fixed: Vec<(usize, f64)>,
}

impl Core {
    /// {x_n = 1/2}.
    pub fn slab(n: usize) -> Self {
        Core {
            fixed: vec![(n - 1, 0.5)],
        }
    }

    pub fn codim(&self) -> usize {
        self.fixed.len()
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        self.fixed.iter().map(|&(j, c)| (x[j] - c).powi(2)).sum::<f64>().sqrt()
    }
}

impl fmt::Display for Core {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.fixed.iter().map(|(j, c)| format!("x{}={c}", j + 1)).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Profile {
    /// d ↦ (1 − t(1 − s))·d.
    Linear { s: f64 },
    /// d ↦ d / √(1 + (t·d/b)²), for unbounded axes.
    Rational { b: f64 },
}

/// g^t: squeezes the model toward the core, each fixed axis on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionIsotopy {
    pub model: Model,
    pub core: Core,
    pub rho: f64,
    axes: Vec<(usize, f64, Profile)>,
}

/// make_compression with g¹(model) ⊂ U_ρ(core).
pub fn make_compression(model: Model, core: Core, rho: f64) -> Result<CompressionIsotopy, HError> {
    let n = model.n();
    if core.codim() == 0 || core.codim() > n {
        return Err(HError::Core(format!("{core} in {model}")));
    }
    let mut seen = vec![false; n];
    for &(j, c) in &core.fixed {
        if j >= n || seen[j] {
            return Err(HError::Core(format!("axis {} repeated or outside {model}", j + 1)));
        }
        seen[j] = true;
        if model.bounded(j) && !(c > 0.0 && c < 1.0) {
            return Err(HError::Core(format!("x{} = {c} misses the model", j + 1)));
        }
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(HError::InvalidParameter(format!("rho = {rho} must be positive")));
    }
    // Each axis gets a share ρ/√codim, with some room to keep the image strictly inside.
    let share = 0.9 * rho / (core.codim() as f64).sqrt();
    let axes = core
        .fixed
        .iter()
        .map(|&(j, c)| {
            let p = if model.bounded(j) {
                Profile::Linear {
                    s: (share / c.max(1.0 - c)).min(1.0),
                }
            } else {
                Profile::Rational { b: share }
            };
            (j, c, p)
        })
        .collect();
    Ok(CompressionIsotopy { model, core, rho, axes })
}

impl CompressionIsotopy {
    pub fn at(&self, t: f64) -> Squeeze {
        Squeeze {
            n: self.model.n(),
            t: t.clamp(0.0, 1.0),
            axes: self.axes.clone(),
        }
    }

    /// det Dg^t(x).
    pub fn jacobian_det(&self, x: &[f64], t: f64) -> f64 {
        let g = self.at(t);
        g.axes.iter().map(|&(j, c, p)| g.slope(p, x[j] - c)).product()
    }

    pub fn describe(&self) -> String {
        format!(
            "compression of {} toward {} into radius {}",
            self.model, self.core, self.rho
        )
    }
}

/// g^t for one fixed t; inverse in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Squeeze {
    n: usize,
    t: f64,
    axes: Vec<(usize, f64, Profile)>,
}

impl Squeeze {
    fn forward(&self, p: Profile, d: f64) -> f64 {
        match p {
            Profile::Linear { s } => (1.0 - self.t * (1.0 - s)) * d,
            Profile::Rational { b } => d / (1.0 + (self.t * d / b).powi(2)).sqrt(),
        }
    }

    fn backward(&self, p: Profile, u: f64) -> f64 {
        match p {
            Profile::Linear { s } => u / (1.0 - self.t * (1.0 - s)),
            Profile::Rational { b } => u / (1.0 - (self.t * u / b).powi(2)).sqrt(),
        }
    }

    fn slope(&self, p: Profile, d: f64) -> f64 {
        match p {
            Profile::Linear { s } => 1.0 - self.t * (1.0 - s),
            Profile::Rational { b } => (1.0 + (self.t * d / b).powi(2)).powf(-1.5),
        }
    }

    fn series(&self, x: &[f64], r: usize, inverse: bool) -> Result<Vec<TruncatedSeries>, JetError> {
        let mut out: Vec<TruncatedSeries> = (0..self.n).map(|i| TruncatedSeries::variable(x, r, i)).collect();
        for &(j, c, p) in &self.axes {
            let d = out[j].add_scalar(-c);
            let y = match p {
                Profile::Linear { s } => {
                    let f = 1.0 - self.t * (1.0 - s);
                    d.scale(if inverse { 1.0 / f } else { f })
                }
                Profile::Rational { b } => {
                    let k = (self.t / b).powi(2);
                    let sq = d.mul_series(&d).scale(if inverse { -k } else { k }).add_scalar(1.0);
                    d.mul_series(&sq.sqrt()?.recip()?)
                }
            };
            out[j] = y.add_scalar(c);
        }
        Ok(out)
    }
}

impl Diffeo for Squeeze {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for &(j, c, p) in &self.axes {
            let d = x[j] - c;
            y[j] += self.forward(p, d) - d;
        }
        y
    }

    fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        for &(j, c, p) in &self.axes {
            let u = y[j] - c;
            x[j] += self.backward(p, u) - u;
        }
        x
    }

    fn jet(&self, x: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError> {
        self.series(x, r, false)
    }

    fn inverse_jet(&self, y: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError> {
        self.series(y, r, true)
    }

    fn describe(&self) -> String {
        format!("squeeze at t = {}", self.t)
    }
}
