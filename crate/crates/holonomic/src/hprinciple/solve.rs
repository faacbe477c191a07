use std::fmt::Write as _;
use std::sync::Arc;

use crate::approx::{approximate_over_cube, EngineConfig, ErrorReport, TubeSampler};
use crate::jet::{Chain, Diffeo, Grid, Inverse, JetSection, Sampler, Translation};
use crate::wiggle::pushforward;

use super::relation::{check_jets, sample_jets};
use super::{is_formal_solution, make_compression, Core, FormalCheck, HError, Model, Relation};

#[derive(Clone)]
pub struct SolveConfig {
    pub delta: f64,
    pub eps: f64,
    /// Nodes per axis of the model grid used for every check.
    pub grid_nodes: usize,
    pub frames: usize,
    /// Engine settings; delta and eps are overwritten.
    pub engine: EngineConfig,
}

impl SolveConfig {
    pub fn new(delta: f64, eps: f64) -> Self {
        SolveConfig {
            delta,
            eps,
            grid_nodes: 41,
            frames: 16,
            engine: EngineConfig::new(delta, eps),
        }
    }
}

/// One frame of the homotopy from F to F̃.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCheck {
    pub index: usize,
    /// "compress" (parameter t of the isotopy) or "blend" (weight s of G).
    pub stage: &'static str,
    pub param: f64,
    pub outside: usize,
    pub min_margin: f64,
}

pub struct SolutionReport {
    /// F̃, holonomic on the whole model.
    pub section: JetSection,
    pub relation: String,
    pub model: Model,
    pub core: Core,
    pub grid_nodes: usize,
    pub input_margin: f64,
    /// Margin of G on the sampled tube around the wiggled core.
    pub approx_margin: Option<f64>,
    pub output: FormalCheck,
    /// Min over the grid of the margin of G where g̃¹ sends each node: the
    /// margin of F̃ read in the compressed chart.
    pub worst_margin: f64,
    pub margin_floor: f64,
    pub rho: f64,
    pub compression: String,
    pub shear: String,
    pub approx: Option<ErrorReport>,
    pub trace: Vec<FrameCheck>,
    /// The input was already holonomic and was returned as is.
    pub passthrough: bool,
}

impl SolutionReport {
    pub fn success(&self) -> bool {
        self.output.all_in() && self.trace.iter().all(|f| f.outside == 0) && self.worst_margin >= self.margin_floor
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("status", if self.success() { "success" } else { "failure" }.into());
        kv("relation", self.relation.clone());
        kv("model", self.model.to_string());
        kv("core", self.core.to_string());
        kv("grid_nodes", format!("{}^{}", self.grid_nodes, self.model.n()));
        kv("passthrough", self.passthrough.to_string());
        kv("input_margin", self.input_margin.to_string());
        if let Some(m) = self.approx_margin {
            kv("approx_margin", m.to_string());
        }
        kv("outside_nodes", self.output.outside().to_string());
        kv("output_margin", self.output.min_margin.to_string());
        if let Some(d) = self.output.min_abs_det {
            kv("min_abs_det", d.to_string());
        }
        kv("worst_margin", self.worst_margin.to_string());
        kv("margin_floor", self.margin_floor.to_string());
        kv("rho", self.rho.to_string());
        kv("compression", self.compression.clone());
        kv("shear", self.shear.clone());
        kv("frames", self.trace.len().to_string());
        kv(
            "frames_inside",
            self.trace.iter().filter(|f| f.outside == 0).count().to_string(),
        );
        for f in &self.trace {
            kv(
                &format!("frame.{}", f.index),
                format!("{} {} outside={} margin={}", f.stage, f.param, f.outside, f.min_margin),
            );
        }
        if let Some(a) = &self.approx {
            for line in a.to_kv().lines() {
                let _ = writeln!(s, "engine.{line}");
            }
        }
        s
    }
}

fn model_grid(model: Model, nodes: usize) -> Grid {
    // Open model: nodes strictly inside, the unbounded strip axis over [−1, 2].
    let n = model.n();
    let axes = (0..n)
        .map(|i| {
            let (lo, hi) = match model {
                Model::Strip { .. } if i + 1 == n => (-1.0, 2.0),
                _ => (0.0, 1.0),
            };
            let h = (hi - lo) / (nodes + 1) as f64;
            crate::jet::Axis::new(lo + h, hi - h, nodes)
        })
        .collect();
    Grid::new(axes)
}

fn frame(index: usize, stage: &'static str, param: f64, check: &FormalCheck) -> FrameCheck {
    FrameCheck {
        index,
        stage,
        param,
        outside: check.outside(),
        min_margin: check.min_margin,
    }
}

/// Turns a formal solution of an open relation into a holonomic one: the
/// section is approximated near a wiggled copy of the core, the model is
/// compressed into the tube where the approximation lives, and the
/// approximation is pulled back.
pub fn solve_open_invariant(
    f: &JetSection,
    rel: &Relation,
    model: Model,
    core: Core,
    cfg: &SolveConfig,
) -> Result<SolutionReport, HError> {
    let n = model.n();
    if f.n() != n {
        return Err(HError::InvalidParameter(format!(
            "section over R^{} on a model of dimension {n}",
            f.n()
        )));
    }
    if cfg.grid_nodes < 2 || cfg.frames < 2 {
        return Err(HError::InvalidParameter(
            "need at least two grid nodes and two frames".into(),
        ));
    }
    let codim = core.codim();
    let k = n.checked_sub(codim).ok_or_else(|| HError::Core(core.to_string()))?;
    let mut fixed: Vec<usize> = core.fixed.iter().map(|p| p.0).collect();
    fixed.sort_unstable();
    if codim == 0 || fixed != (k..n).collect::<Vec<_>>() {
        return Err(HError::Core(core.to_string()));
    }
    // Validates the core against the model.
    make_compression(model, core.clone(), 1.0)?;

    let grid = model_grid(model, cfg.grid_nodes);
    let input = is_formal_solution(f, rel, &grid)?;
    let margin_floor = cfg.eps;
    if !input.all_in() || input.min_margin < 2.0 * cfg.eps {
        return Err(HError::MarginTooSmall {
            margin: input.min_margin,
            required: 2.0 * cfg.eps,
        });
    }

    if f.is_holonomic() {
        let trace = (0..cfg.frames).map(|i| frame(i, "compress", 0.0, &input)).collect();
        return Ok(SolutionReport {
            section: f.clone(),
            relation: rel.name().to_string(),
            model,
            core,
            grid_nodes: cfg.grid_nodes,
            input_margin: input.min_margin,
            approx_margin: None,
            worst_margin: input.min_margin,
            output: input.clone(),
            margin_floor,
            rho: 0.0,
            compression: "identity".into(),
            shear: "identity".into(),
            approx: None,
            trace,
            passthrough: true,
        });
    }

    // Engine coordinates: the core becomes the cube in the first k axes.
    let mut offset = vec![0.0; n];
    for &(j, c) in &core.fixed {
        offset[j] = c;
    }
    let to_engine: Arc<dyn Diffeo> = Arc::new(Translation {
        offset: offset.iter().map(|c| -c).collect(),
    });
    let from_engine: Arc<dyn Diffeo> = Arc::new(Translation { offset: offset.clone() });
    let f_engine = pushforward(to_engine.clone(), f)?;
    let mut ecfg = cfg.engine.clone();
    ecfg.delta = cfg.delta;
    ecfg.eps = cfg.eps;
    let result = approximate_over_cube(&f_engine, k, &ecfg)?;
    let tau = result.report.tube;

    // G must stay in R where it is used.
    let cube = Grid::over_cube(k, k, 0.0, cfg.grid_nodes);
    let mut tube = TubeSampler::new(cube, n, tau, result.shear.clone());
    tube.normals = Grid::over_cube(0, n - k, tau, 5);
    let on_tube = check_jets(&sample_jets(&result.section, &tube)?, rel);
    if !on_tube.all_in() {
        return Err(HError::LeftRelation {
            outside: on_tube.outside(),
            nodes: on_tube.nodes(),
            margin: on_tube.min_margin,
        });
    }
    let g_model = pushforward(from_engine.clone(), &result.section)?;

    let h: Arc<dyn Diffeo> = Arc::new(Chain(vec![to_engine, Arc::new(result.shear.clone()), from_engine]));
    let rho = tau;
    let compression = make_compression(model, core.clone(), rho)?;
    let conjugated = |t: f64| -> Arc<dyn Diffeo> {
        Arc::new(Chain(vec![
            Arc::new(Inverse(h.clone())),
            Arc::new(compression.at(t)),
            h.clone(),
        ]))
    };
    let g1 = conjugated(1.0);
    let pull = |s: &JetSection, g: &Arc<dyn Diffeo>| pushforward(Arc::new(Inverse(g.clone())), s);

    let section = pull(&g_model, &g1)?;
    let output = is_formal_solution(&section, rel, &grid)?;
    let landed: Vec<Vec<f64>> = (0..grid.len()).map(|i| g1.apply(&grid.point(i))).collect();
    let chart = check_jets(&sample_jets(&g_model, &landed)?, rel);

    let mut trace = Vec::with_capacity(cfg.frames);
    let f_arc = Arc::new(f.clone());
    let g_arc = Arc::new(g_model.clone());
    for i in 0..cfg.frames {
        let u = i as f64 / (cfg.frames - 1) as f64;
        let (stage, param, s) = if 2 * i < cfg.frames {
            let t = 2.0 * u;
            ("compress", t, pull(f, &conjugated(t))?)
        } else {
            let s = 2.0 * u - 1.0;
            let blend = JetSection::Combination {
                a: f_arc.clone(),
                b: g_arc.clone(),
                s,
            };
            ("blend", s, pull(&blend, &g1)?)
        };
        trace.push(frame(i, stage, param, &is_formal_solution(&s, rel, &grid)?));
    }

    Ok(SolutionReport {
        section,
        relation: rel.name().to_string(),
        model,
        core,
        grid_nodes: cfg.grid_nodes,
        input_margin: input.min_margin,
        approx_margin: Some(on_tube.min_margin),
        output,
        worst_margin: chart.min_margin,
        margin_floor,
        rho,
        compression: compression.describe(),
        shear: result.shear.to_string(),
        approx: Some(result.report),
        trace,
        passthrough: false,
    })
}
