use std::fmt::Write as _;

use holonomic::approx::{
    approximate_over_cube, approximate_parametric, ApproxError, ApproxResult, EngineConfig, ErrorReport,
    ParametricFamily, METRICS_HEADER,
};
use holonomic::hprinciple::{
    directed_curve, solve_open_invariant, DirectedConfig, DirectionSet, HError, Relation, RelationKind, SolveConfig,
    TangentHomotopy,
};
use holonomic::jet::{Diffeo, FormalSection, JetSection, MapRep};

use crate::scenario::{HomotopySpec, Kind, RelationSpec, Scenario};
use crate::svg::Plot;
use crate::CliError;

/// Everything a run writes, plus how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub report: String,
    pub metrics: String,
    pub figure: Option<String>,
    pub success: bool,
    /// The accepted or last attempted metrics row.
    pub last_row: Option<String>,
}

fn header(sc: &Scenario) -> String {
    format!("kind = {}\nseed = {}\n", sc.kind, sc.seed)
}

fn engine_config(sc: &Scenario) -> Result<EngineConfig, CliError> {
    let mut cfg = EngineConfig::new(sc.delta, sc.eps);
    cfg.smoothness = sc.smoothness;
    cfg.n_floor = sc.n_floor;
    cfg.n_cap = sc.n_cap;
    cfg.grid_nodes = sc.grid;
    cfg.refine = sc.refine;
    if sc.relative && sc.kind != Kind::Parametric {
        let germ = sc.germ_exprs()?.expect("validated");
        cfg = cfg.relative(
            MapRep::from_exprs(sc.n, germ).map_err(CliError::engine_input)?,
            sc.collar,
        );
    }
    Ok(cfg)
}

fn section(sc: &Scenario) -> Result<JetSection, CliError> {
    if let Some(map) = &sc.section.map {
        let exprs = map.iter().map(|e| sc.expr(e, sc.n)).collect::<Result<Vec<_>, _>>()?;
        return Ok(JetSection::holonomic(
            MapRep::from_exprs(sc.n, exprs).map_err(CliError::engine_input)?,
            sc.r,
        ));
    }
    Ok(JetSection::formal(
        FormalSection::new(sc.n, sc.r, sc.entries()?).map_err(CliError::engine_input)?,
    ))
}

fn metrics(report: &ErrorReport) -> (String, Option<String>) {
    (report.metrics_csv(), report.rows.last().map(|r| r.csv_line()))
}

/// Engine failures that carry a report become artifacts; the rest are errors.
fn engine_failure(sc: &Scenario, err: ApproxError) -> Result<Artifacts, CliError> {
    match err.report() {
        Some(report) => {
            let (metrics, last_row) = metrics(report);
            Ok(Artifacts {
                report: format!("{}{}error = {err}\n", header(sc), report.to_kv()),
                metrics,
                figure: None,
                success: false,
                last_row,
            })
        }
        None => match err {
            ApproxError::Codimension { .. } | ApproxError::InvalidParameter(_) => Err(CliError::input(err.to_string())),
            _ => Ok(failure_without_report(sc, &err.to_string())),
        },
    }
}

fn failure_without_report(sc: &Scenario, msg: &str) -> Artifacts {
    Artifacts {
        report: format!("{}status = failure\nerror = {msg}\n", header(sc)),
        metrics: format!("{METRICS_HEADER}\n"),
        figure: None,
        success: false,
        last_row: None,
    }
}

pub fn run(sc: &Scenario) -> Result<Artifacts, CliError> {
    match sc.kind {
        Kind::Approximate => run_approximate(sc),
        Kind::Parametric => run_parametric(sc),
        Kind::Solve => run_solve(sc),
        Kind::Directed => run_directed(sc),
    }
}

fn run_approximate(sc: &Scenario) -> Result<Artifacts, CliError> {
    let f = section(sc)?;
    let cfg = engine_config(sc)?;
    match approximate_over_cube(&f, sc.k, &cfg) {
        Ok(res) => {
            let (metrics, last_row) = metrics(&res.report);
            let figure = (sc.n == 2 && sc.k == 1).then(|| zigzag_figure(&f, &res)).transpose()?;
            Ok(Artifacts {
                report: format!("{}{}", header(sc), res.report.to_kv()),
                metrics,
                figure,
                success: res.report.is_success(),
                last_row,
            })
        }
        Err(e) => engine_failure(sc, e),
    }
}

fn run_parametric(sc: &Scenario) -> Result<Artifacts, CliError> {
    let fam = ParametricFamily {
        n: sc.n,
        m: sc.m,
        k: sc.k,
        r: sc.r,
        entries: sc.entries()?,
        germ: sc.germ_exprs()?.expect("validated"),
    };
    let cfg = engine_config(sc)?;
    match approximate_parametric(&fam, sc.collar, &cfg) {
        Ok(res) => {
            let report = &res.result.report;
            let (metrics, last_row) = metrics(report);
            let figure = (sc.m == 0 && sc.n == 2 && sc.k == 1)
                .then(|| zigzag_figure(&res.lifted, &res.result))
                .transpose()?;
            Ok(Artifacts {
                report: format!("{}{}", header(sc), report.to_kv()),
                metrics,
                figure,
                success: report.is_success(),
                last_row,
            })
        }
        Err(e) => engine_failure(sc, e),
    }
}

fn relation(sc: &Scenario, n: usize, q: usize) -> Result<Relation, CliError> {
    let rel = match sc.relation.as_ref().expect("validated") {
        RelationSpec::Named(name) => Relation::from_name(name, n, q),
        RelationSpec::Margin(src) => Relation::custom(n, q, sc.r, src),
    };
    rel.map_err(|e| CliError::input(e.to_string()))
}

fn hprinciple_failure(sc: &Scenario, err: HError) -> Result<Artifacts, CliError> {
    match err {
        HError::Approx(e) => engine_failure(sc, e),
        HError::InvalidParameter(_) | HError::Core(_) | HError::Jet(_) | HError::Taylor(_) => {
            Err(CliError::input(err.to_string()))
        }
        other => Ok(failure_without_report(sc, &other.to_string())),
    }
}

fn run_solve(sc: &Scenario) -> Result<Artifacts, CliError> {
    let f = section(sc)?;
    let rel = relation(sc, sc.n, sc.q)?;
    let mut cfg = SolveConfig::new(sc.delta, sc.eps);
    cfg.grid_nodes = sc.grid;
    cfg.frames = sc.frames;
    cfg.engine = engine_config(sc)?;
    let rep = match solve_open_invariant(&f, &rel, sc.model, sc.core.clone(), &cfg) {
        Ok(rep) => rep,
        Err(e) => return hprinciple_failure(sc, e),
    };
    let (metrics, last_row) = match &rep.approx {
        Some(r) => metrics(r),
        None => (format!("{METRICS_HEADER}\n"), None),
    };
    let figure = (sc.n == 2 && sc.q == 2)
        .then(|| grid_figure(&f, &rep.section))
        .transpose()?;
    Ok(Artifacts {
        report: format!("{}{}", header(sc), rep.to_text()),
        metrics,
        figure,
        success: rep.success(),
        last_row,
    })
}

fn run_directed(sc: &Scenario) -> Result<Artifacts, CliError> {
    let exprs = sc.curve.iter().map(|e| sc.expr(e, 1)).collect::<Result<Vec<_>, _>>()?;
    let f0 = MapRep::from_exprs(1, exprs).map_err(CliError::engine_input)?;
    let rel = relation(sc, 1, 2)?;
    let set: DirectionSet = match rel.kind {
        RelationKind::Directions(set) => set,
        _ => return Err(CliError::input("directed scenarios need a direction-set relation")),
    };
    let g = match &sc.homotopy {
        HomotopySpec::Constant => TangentHomotopy::constant(&f0),
        HomotopySpec::RotateTo(src) => {
            let target = sc.expr(src, 1)?;
            TangentHomotopy::rotate_to(&f0, move |s| target.eval(&[s]).unwrap_or(f64::NAN).to_radians())
        }
    };
    let mut cfg = DirectedConfig::new(sc.delta);
    cfg.samples = sc.samples;
    cfg.max_steps = sc.max_steps;
    cfg.core = sc.curve_core;
    let rep = match directed_curve(&f0, &set, &g, &cfg) {
        Ok(rep) => rep,
        Err(e) => return hprinciple_failure(sc, e),
    };
    let mut plot = Plot::new();
    plot.layer("source", "#888888", vec![curve_points(&f0, 400)?]);
    plot.layer("output", "#c0392b", vec![curve_points(&rep.curve, 400)?]);
    Ok(Artifacts {
        report: format!("{}{}", header(sc), rep.to_text()),
        metrics: format!("{METRICS_HEADER}\n"),
        figure: Some(plot.render()),
        success: rep.success(),
        last_row: None,
    })
}

fn curve_points(f: &MapRep, count: usize) -> Result<Vec<(f64, f64)>, CliError> {
    (0..=count)
        .map(|i| {
            let p = f.eval(&[i as f64 / count as f64]).map_err(CliError::engine_input)?;
            Ok((p[0], p[1]))
        })
        .collect()
}

/// Source 0-jet over the core, its prescribed slopes, and the output along
/// the wiggled core.
fn zigzag_figure(f: &JetSection, res: &ApproxResult) -> Result<String, CliError> {
    let value = |s: &JetSection, x: &[f64]| -> Result<f64, CliError> {
        Ok(s.jet(x).map_err(CliError::engine_input)?.value()[0])
    };
    let teeth = res.report.levels.last().map_or(1, |l| l.n_osc);
    let count = 400.max(16 * teeth);
    let mut source = Vec::with_capacity(401);
    for i in 0..=400 {
        let t = i as f64 / 400.0;
        source.push((t, value(f, &[t, 0.0])?));
    }
    let mut ticks = Vec::new();
    for i in 0..=40 {
        let t = i as f64 / 40.0;
        let jet = f.jet(&[t, 0.0]).map_err(CliError::engine_input)?;
        let (v, slope) = (jet.value()[0], jet.jacobian()[0][0]);
        let h = 0.01 / (1.0 + slope * slope).sqrt();
        ticks.push(vec![(t - h, v - slope * h), (t + h, v + slope * h)]);
    }
    let mut output = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let t = i as f64 / count as f64;
        let x = res.shear.apply(&[t, 0.0]);
        output.push((t, value(&res.section, &x)?));
    }
    let mut plot = Plot::new();
    plot.layer("source", "#888888", vec![source]);
    plot.layer("directions", "#2471a3", ticks);
    plot.layer("output", "#c0392b", vec![output]);
    Ok(plot.render())
}

/// Images of a coordinate grid under the 0-parts of the input and output.
fn grid_figure(f: &JetSection, out: &JetSection) -> Result<String, CliError> {
    let lines = 11;
    let samples = 80;
    let image = |s: &JetSection| -> Result<Vec<Vec<(f64, f64)>>, CliError> {
        let mut polylines = Vec::new();
        for axis in 0..2 {
            for l in 0..lines {
                let c = (l as f64 + 0.5) / lines as f64;
                let mut pl = Vec::with_capacity(samples + 1);
                for i in 0..=samples {
                    let t = (i as f64 + 0.5) / (samples + 1) as f64;
                    let x = if axis == 0 { [t, c] } else { [c, t] };
                    let v = s.jet(&x).map_err(CliError::engine_input)?.value();
                    pl.push((v[0], v[1]));
                }
                polylines.push(pl);
            }
        }
        Ok(polylines)
    };
    let mut plot = Plot::new();
    plot.layer("source-grid", "#888888", image(f)?);
    plot.layer("output-grid", "#c0392b", image(out)?);
    Ok(plot.render())
}

/// Sweep table: the parameter value, the run status and the last metrics row.
pub fn sweep_csv(param: &str, rows: &[(String, Artifacts)]) -> String {
    let mut s = format!("{param},status,{METRICS_HEADER}\n");
    for (value, a) in rows {
        let status = if a.success { "success" } else { "failure" };
        let last = a.last_row.clone().unwrap_or_else(|| ",,,,,,".into());
        let _ = writeln!(s, "{value},{status},{last}");
    }
    s
}
