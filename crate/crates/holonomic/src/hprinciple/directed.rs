use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::approx::{approximate_over_cube, EngineConfig};
use crate::jet::{JetError, JetField, JetPoint, JetSection, MapRep, SmoothMap, Translation};
use crate::taylor::TruncatedSeries;
use crate::wiggle::pushforward;

use super::{DirectionSet, HError};

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

fn tangent(curve: &MapRep, s: f64) -> Result<(f64, f64), JetError> {
    let j = curve.jet(&[s], 1)?.jacobian();
    Ok((j[0][0], j[1][0]))
}

fn tangent_angle(curve: &MapRep, s: f64) -> Result<f64, JetError> {
    let (a, b) = tangent(curve, s)?;
    Ok(b.atan2(a))
}

/// Homotopy G_t of the tangent direction field of a curve, as an angle
/// function of (s, t) over the original parameter.
#[derive(Clone)]
pub struct TangentHomotopy {
    angle: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl TangentHomotopy {
    pub fn new(angle: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        TangentHomotopy { angle: Arc::new(angle) }
    }

    /// Rotates the tangent of `f0` along the shorter arc to `target(s)`.
    pub fn rotate_to(f0: &MapRep, target: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let f0 = f0.clone();
        Self::new(move |s, t| {
            let a = tangent_angle(&f0, s).unwrap_or(f64::NAN);
            a + t * wrap(target(s) - a)
        })
    }

    /// G_t = G_{f0} for all t.
    pub fn constant(f0: &MapRep) -> Self {
        let f0 = f0.clone();
        Self::new(move |s, _| tangent_angle(&f0, s).unwrap_or(f64::NAN))
    }

    pub fn angle(&self, s: f64, t: f64) -> f64 {
        (self.angle)(s, t)
    }
}

#[derive(Debug, Clone)]
pub struct DirectedConfig {
    /// C⁰ budget: the output stays this close to the image of f₀.
    pub delta: f64,
    /// Parameter samples on [0, 1] for every check.
    pub samples: usize,
    /// Most pieces the homotopy may be cut into.
    pub max_steps: usize,
    /// Parameter of the core point the curve is compressed toward.
    pub core: f64,
}

impl DirectedConfig {
    pub fn new(delta: f64) -> Self {
        DirectedConfig {
            delta,
            samples: 201,
            max_steps: 6,
            core: 0.5,
        }
    }
}

/// Accepted parameters of one small step.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedStep {
    pub rho: f64,
    pub lambda: f64,
    /// Formal slope at the core.
    pub slope: f64,
    pub max_offset: f64,
    /// Worst deviation of the new tangent from the step target.
    pub angle_error: f64,
}

/// One sampled frame of the isotopy.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFrame {
    pub step: usize,
    /// "compress" or "graph".
    pub stage: &'static str,
    pub param: f64,
    pub injectivity: f64,
    pub displacement: f64,
}

pub struct DirectedReport {
    pub curve: MapRep,
    pub steps: Vec<DirectedStep>,
    pub trace: Vec<CurveFrame>,
    /// Min over samples of the angular margin of the output tangent in A.
    pub angle_margin: f64,
    /// Min over samples of the angular margin of G_1 in A.
    pub terminal_margin: f64,
    pub injectivity: f64,
    /// Max distance from the output to the image of f₀.
    pub displacement: f64,
    /// sup |f₁(s) − f₀(s)|.
    pub parameter_displacement: f64,
    pub budget: f64,
}

impl DirectedReport {
    pub fn success(&self) -> bool {
        self.angle_margin >= self.terminal_margin / 2.0 && self.displacement <= self.budget && self.injectivity > 0.0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("status", if self.success() { "success" } else { "failure" }.into());
        kv("steps", self.steps.len().to_string());
        for (i, st) in self.steps.iter().enumerate() {
            kv(
                &format!("step.{}", i + 1),
                format!(
                    "rho={} lambda={} slope={} max_offset={} angle_error={}",
                    st.rho, st.lambda, st.slope, st.max_offset, st.angle_error
                ),
            );
        }
        kv("angle_margin_deg", self.angle_margin.to_degrees().to_string());
        kv("terminal_margin_deg", self.terminal_margin.to_degrees().to_string());
        kv("injectivity", self.injectivity.to_string());
        kv("displacement", self.displacement.to_string());
        kv("parameter_displacement", self.parameter_displacement.to_string());
        kv("budget", self.budget.to_string());
        kv("frames", self.trace.len().to_string());
        for (i, f) in self.trace.iter().enumerate() {
            kv(
                &format!("frame.{i}"),
                format!(
                    "step={} {} {} injectivity={} displacement={}",
                    f.step, f.stage, f.param, f.injectivity, f.displacement
                ),
            );
        }
        s
    }
}

/// Formal 1-jet over the curve's parameter in the normal direction: value
/// zero, slope turning the tangent toward the step target.
struct SlopeField {
    curve: MapRep,
    target: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl JetField for SlopeField {
    fn n(&self) -> usize {
        1
    }
    fn q(&self) -> usize {
        1
    }
    fn r(&self) -> usize {
        1
    }
    fn jet(&self, v: &[f64]) -> Result<JetPoint, JetError> {
        let (a, b) = tangent(&self.curve, v[0])?;
        let p = a.hypot(b) * wrap((self.target)(v[0]) - b.atan2(a)).tan();
        JetPoint::new(vec![TruncatedSeries::from_coeffs(v, 1, &[0.0, p])?])
    }
    fn describe(&self) -> String {
        "normal slope field".into()
    }
}

/// s ↦ C(c(s)) + w·g(c(s) − s₀)·ν(c(s)), c(s) = s₀ + λ(s − s₀), ν the unit
/// normal of C.
struct GraphCurve {
    base: MapRep,
    offset: MapRep,
    s0: f64,
    lambda: f64,
    weight: f64,
}

impl SmoothMap for GraphCurve {
    fn n(&self) -> usize {
        1
    }
    fn q(&self) -> usize {
        2
    }
    fn jet(&self, v: &[f64], r: usize) -> Result<JetPoint, JetError> {
        let c = self.s0 + self.lambda * (v[0] - self.s0);
        let b = self.base.jet(&[c], r + 1)?;
        let g = self.offset.jet(&[c - self.s0], r)?;
        let g = TruncatedSeries::from_coeffs(&[c], r, g.component(0).coeffs())?.scale(self.weight);
        let (bx, by) = (b.component(0), b.component(1));
        let (dx, dy) = (bx.differentiate(0)?, by.differentiate(0)?);
        let inv = (&dx * &dx + &dy * &dy).sqrt()?.recip()?;
        let x = bx.truncate(r) - &g * &(&dy * &inv);
        let y = by.truncate(r) + &g * &(&dx * &inv);
        // Reparametrize by the affine c.
        let comps = [x, y]
            .iter()
            .map(|s| {
                let coeffs: Vec<f64> = s
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * self.lambda.powi(j as i32))
                    .collect();
                TruncatedSeries::from_coeffs(v, r, &coeffs)
            })
            .collect::<Result<Vec<_>, _>>()?;
        JetPoint::new(comps)
    }
    fn describe(&self) -> String {
        format!(
            "graph over ({}) compressed by {} toward {}",
            self.base.describe(),
            self.lambda,
            self.s0
        )
    }
}

struct Sampled {
    points: Vec<[f64; 2]>,
    params: Vec<f64>,
}

impl Sampled {
    fn new(curve: &MapRep, params: &[f64]) -> Result<Self, JetError> {
        let points = params
            .par_iter()
            .map(|&s| curve.eval(&[s]).map(|p| [p[0], p[1]]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Sampled {
            points,
            params: params.to_vec(),
        })
    }

    /// min over |i − j| ≥ 2 of |f(s_i) − f(s_j)| / |s_i − s_j|.
    fn injectivity(&self) -> f64 {
        let m = self.points.len();
        (0..m)
            .into_par_iter()
            .map(|i| {
                let mut best = f64::INFINITY;
                for j in i + 2..m {
                    let d = (self.points[i][0] - self.points[j][0]).hypot(self.points[i][1] - self.points[j][1]);
                    best = best.min(d / (self.params[j] - self.params[i]).abs());
                }
                best
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `p` to the polyline through the samples.
    fn distance(&self, p: [f64; 2]) -> f64 {
        self.points
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let (ux, uy) = (b[0] - a[0], b[1] - a[1]);
                let l2 = ux * ux + uy * uy;
                let t = if l2 > 0.0 {
                    (((p[0] - a[0]) * ux + (p[1] - a[1]) * uy) / l2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                (p[0] - a[0] - t * ux).hypot(p[1] - a[1] - t * uy)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn max_distance_from(&self, other: &Sampled) -> f64 {
        self.points
            .par_iter()
            .map(|&p| other.distance(p))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn params(count: usize) -> Vec<f64> {
    (0..count).map(|i| i as f64 / (count - 1) as f64).collect()
}

/// Isotopes the embedded curve `f0` to one whose tangent directions lie in
/// `set`, following the homotopy `g` of its tangent directions.
pub fn directed_curve(
    f0: &MapRep,
    set: &DirectionSet,
    g: &TangentHomotopy,
    cfg: &DirectedConfig,
) -> Result<DirectedReport, HError> {
    if f0.n() != 1 || f0.q() != 2 {
        return Err(HError::InvalidParameter("directed curves are maps R -> R^2".into()));
    }
    if !(cfg.delta > 0.0) || cfg.samples < 3 || cfg.max_steps == 0 || !(cfg.core > 0.0 && cfg.core < 1.0) {
        return Err(HError::InvalidParameter(
            "delta > 0, samples >= 3, max_steps >= 1, core in (0, 1)".into(),
        ));
    }
    let ss = params(cfg.samples);
    let fine = Sampled::new(f0, &params(10 * cfg.samples))?;
    let s0 = cfg.core;

    let mut total: f64 = 0.0;
    let mut terminal = f64::INFINITY;
    for &s in &ss {
        let a0 = tangent_angle(f0, s)?;
        if wrap(g.angle(s, 0.0) - a0).abs() > 1e-9 {
            return Err(HError::InvalidParameter(format!(
                "G_0 differs from the tangent of f0 at s = {s}"
            )));
        }
        terminal = terminal.min(set.margin(g.angle(s, 1.0)));
        total = total.max(wrap(g.angle(s, 1.0) - a0).abs());
    }
    if terminal <= 0.0 {
        return Err(HError::InvalidParameter("G_1 leaves the direction set".into()));
    }

    // Fewest pieces with every increment below π/4 on a fine t lattice.
    let increment = |pieces: usize| {
        let sub = 8;
        let mut worst: f64 = 0.0;
        for j in 0..pieces {
            for &s in &ss {
                let a = g.angle(s, j as f64 / pieces as f64);
                for i in 1..=sub {
                    let t = (j as f64 + i as f64 / sub as f64) / pieces as f64;
                    worst = worst.max(wrap(g.angle(s, t) - a).abs());
                }
            }
        }
        worst
    };
    let mut pieces = if total == 0.0 && increment(1) == 0.0 {
        0
    } else {
        (total / FRAC_PI_4).floor() as usize + 1
    };
    while pieces > 0 && increment(pieces) >= FRAC_PI_4 {
        pieces += 1;
        if pieces > cfg.max_steps {
            return Err(HError::StepTooLarge {
                angle: total,
                cap: cfg.max_steps,
            });
        }
    }
    if pieces > cfg.max_steps {
        return Err(HError::StepTooLarge {
            angle: total,
            cap: cfg.max_steps,
        });
    }

    let budget = cfg.delta / pieces.max(1) as f64;
    let mut curve = f0.clone();
    // Original parameter of the current curve's parameter s: a·s + b.
    let (mut a, mut b) = (1.0, 0.0);
    let mut steps = Vec::new();
    let mut trace = Vec::new();
    for j in 0..pieces {
        let t = (j + 1) as f64 / pieces as f64;
        let g1 = g.clone();
        let target = Arc::new(move |s: f64| g1.angle(a * s + b, t));
        let field = JetSection::Field(Arc::new(SlopeField {
            curve: curve.clone(),
            target: target.clone(),
        }));
        let shifted = pushforward(Arc::new(Translation { offset: vec![-s0] }), &field)?;
        let approx = approximate_over_cube(&shifted, 0, &EngineConfig::new(budget, budget))?;
        let offset = match approx.section {
            JetSection::Holonomic { map, .. } => map,
            _ => unreachable!("the zero-dimensional engine returns a Taylor section"),
        };
        let slope = offset.jet(&[0.0], 1)?.jacobian()[0][0];

        let mut chosen = None;
        let mut rho: f64 = 0.5;
        while rho >= 1e-3 {
            let lambda = (rho / s0.max(1.0 - s0)).min(1.0);
            let cand = MapRep::Custom(Arc::new(GraphCurve {
                base: curve.clone(),
                offset: offset.clone(),
                s0,
                lambda,
                weight: 1.0,
            }));
            let checks = ss
                .par_iter()
                .map(|&s| -> Result<(f64, f64), JetError> {
                    let u = s0 + lambda * (s - s0);
                    let off = offset.eval(&[u - s0])?[0].abs();
                    let err = wrap(tangent_angle(&cand, s)? - target(u)).abs();
                    Ok((off, err))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let max_off = checks.iter().map(|c| c.0).fold(0.0, f64::max);
            let max_err = checks.iter().map(|c| c.1).fold(0.0, f64::max);
            if max_off <= budget && max_err <= terminal / 2.0 {
                chosen = Some((lambda, cand, max_off, max_err));
                break;
            }
            rho *= 0.8;
        }
        let Some((lambda, next, max_off, max_err)) = chosen else {
            return Err(HError::MarginExhausted { step: j + 1 });
        };
        for (stage, i) in [("compress", 1), ("compress", 2), ("graph", 1), ("graph", 2)] {
            let p = i as f64 / 2.0;
            let frame = if stage == "compress" {
                GraphCurve {
                    base: curve.clone(),
                    offset: offset.clone(),
                    s0,
                    lambda: 1.0 - p * (1.0 - lambda),
                    weight: 0.0,
                }
            } else {
                GraphCurve {
                    base: curve.clone(),
                    offset: offset.clone(),
                    s0,
                    lambda,
                    weight: p,
                }
            };
            let sampled = Sampled::new(&MapRep::Custom(Arc::new(frame)), &ss)?;
            trace.push(CurveFrame {
                step: j + 1,
                stage,
                param: p,
                injectivity: sampled.injectivity(),
                displacement: sampled.max_distance_from(&fine),
            });
        }
        steps.push(DirectedStep {
            rho,
            lambda,
            slope,
            max_offset: max_off,
            angle_error: max_err,
        });
        b += a * s0 * (1.0 - lambda);
        a *= lambda;
        curve = next;
    }

    let out = Sampled::new(&curve, &ss)?;
    let start = Sampled::new(f0, &ss)?;
    let angle_margin = ss
        .iter()
        .map(|&s| tangent_angle(&curve, s).map(|th| set.margin(th)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let parameter_displacement = out
        .points
        .iter()
        .zip(&start.points)
        .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
        .fold(0.0, f64::max);
    Ok(DirectedReport {
        injectivity: out.injectivity(),
        displacement: out.max_distance_from(&fine),
        curve,
        steps,
        trace,
        angle_margin,
        terminal_margin: terminal,
        parameter_displacement,
        budget: cfg.delta,
    })
}
