use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use holonomic::hprinciple::{Core, Model};
use holonomic::taylor::{parse_expr, Expr, Layout, MultiIndex};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Approximate,
    Parametric,
    Solve,
    Directed,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Approximate => "approximate",
            Kind::Parametric => "parametric",
            Kind::Solve => "solve",
            Kind::Directed => "directed",
        })
    }
}

/// Jet entries as source text: the 0-part and any derivative entries, one
/// expression per output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SectionSpec {
    /// Holonomic input given as a map instead of entries.
    pub map: Option<Vec<String>>,
    pub value: Vec<String>,
    /// (exponents, expressions per output).
    pub derivatives: Vec<(Vec<usize>, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RelationSpec {
    Named(String),
    Margin(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum HomotopySpec {
    Constant,
    /// Target tangent angle in degrees as an expression of the parameter x1.
    RotateTo(String),
}

/// A validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: Kind,
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub m: usize,
    pub q: usize,
    pub delta: f64,
    pub eps: f64,
    pub grid: usize,
    pub seed: u64,
    pub n_floor: usize,
    pub n_cap: usize,
    pub smoothness: usize,
    pub refine: bool,
    pub relative: bool,
    pub collar: f64,
    pub section: SectionSpec,
    pub germ: Option<Vec<String>>,
    pub relation: Option<RelationSpec>,
    pub model: Model,
    pub core: Core,
    pub frames: usize,
    pub curve: Vec<String>,
    pub homotopy: HomotopySpec,
    pub samples: usize,
    pub max_steps: usize,
    pub curve_core: f64,
    pub out: Option<PathBuf>,
}

const TOP_KEYS: &[&str] = &[
    "kind",
    "n",
    "k",
    "r",
    "m",
    "delta",
    "eps",
    "grid",
    "seed",
    "n_floor",
    "n_cap",
    "smoothness",
    "refine",
    "relative",
    "collar",
    "model",
    "core",
    "frames",
    "samples",
    "max_steps",
    "curve_core",
    "out",
    "title",
];

struct Raw {
    values: BTreeMap<(String, String), (String, usize)>,
}

impl Raw {
    fn parse(text: &str) -> Result<Raw, CliError> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (i, line) in text.lines().enumerate() {
            let no = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::input(format!("line {no}: unterminated section header")))?
                    .trim();
                if !["section", "germ", "relation", "curve", "homotopy"].contains(&name) {
                    return Err(CliError::input(format!("line {no}: unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("line {no}: expected key = value")))?;
            let key = key.trim().to_string();
            let allowed = match section.as_str() {
                "" => TOP_KEYS.contains(&key.as_str()),
                "section" => key == "value" || key == "map" || derivative_key(&key).is_some(),
                "germ" => key == "value",
                "relation" => key == "name" || key == "margin",
                "curve" => key == "map",
                "homotopy" => key == "target" || key == "constant",
                _ => false,
            };
            if !allowed {
                let place = if section.is_empty() {
                    String::new()
                } else {
                    format!(" in [{section}]")
                };
                return Err(CliError::input(format!("line {no}: unknown key '{key}'{place}")));
            }
            if values
                .insert((section.clone(), key.clone()), (value.trim().to_string(), no))
                .is_some()
            {
                return Err(CliError::input(format!("line {no}: duplicate key '{key}'")));
            }
        }
        Ok(Raw { values })
    }

    fn get(&self, section: &str, key: &str) -> Option<&(String, usize)> {
        self.values.get(&(section.to_string(), key.to_string()))
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T, CliError> {
        match self.get("", key) {
            Some((v, no)) => v
                .parse()
                .map_err(|_| CliError::input(format!("line {no}: '{key}' has an invalid value '{v}'"))),
            None => default.ok_or_else(|| CliError::input(format!("missing required key '{key}'"))),
        }
    }

    fn list(&self, section: &str, key: &str) -> Option<Vec<String>> {
        self.get(section, key)
            .map(|(v, _)| v.split(';').map(|s| s.trim().to_string()).collect())
    }
}

/// `d12` is ∂x1∂x2, `d111` the third x1-derivative.
fn derivative_key(key: &str) -> Option<Vec<usize>> {
    let digits = key.strip_prefix('d')?;
    if digits.is_empty() || !digits.bytes().all(|b| (b'1'..=b'9').contains(&b)) {
        return None;
    }
    Some(digits.bytes().map(|b| (b - b'1') as usize).collect())
}

fn parse_core(text: &str, n: usize) -> Result<Core, CliError> {
    let mut fixed = Vec::new();
    for part in text.split(',') {
        let bad = || CliError::input(format!("core: expected entries like x2=0.5, got '{part}'"));
        let (var, val) = part.split_once('=').ok_or_else(bad)?;
        let idx: usize = var
            .trim()
            .strip_prefix('x')
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        if idx == 0 || idx > n {
            return Err(bad());
        }
        fixed.push((idx - 1, val.trim().parse().map_err(|_| bad())?));
    }
    Ok(Core { fixed })
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, CliError> {
        let raw = Raw::parse(text)?;
        let kind = match raw.get("", "kind").map(|(v, _)| v.as_str()) {
            Some("approximate") => Kind::Approximate,
            Some("parametric") => Kind::Parametric,
            Some("solve") => Kind::Solve,
            Some("directed") => Kind::Directed,
            Some(other) => return Err(CliError::input(format!("unknown kind '{other}'"))),
            None => return Err(CliError::input("missing required key 'kind'")),
        };
        let n: usize = raw.num("n", (kind == Kind::Directed).then_some(1))?;
        let k = raw.num("k", Some(if kind == Kind::Solve { n.saturating_sub(1) } else { 0 }))?;
        let r = raw.num("r", Some(1))?;
        let m = raw.num("m", Some(0))?;
        let delta = raw.num("delta", None)?;
        let eps = raw.num("eps", (kind == Kind::Directed).then_some(0.0))?;
        let model = match raw.get("", "model").map(|(v, _)| v.as_str()) {
            None | Some("cube") => Model::Cube { n },
            Some("strip") => Model::Strip { n },
            Some(other) => return Err(CliError::input(format!("unknown model '{other}'"))),
        };
        let core = match raw.get("", "core") {
            Some((v, _)) => parse_core(v, n)?,
            None if n > 0 => Core::slab(n),
            None => Core { fixed: vec![] },
        };

        let mut section = SectionSpec {
            map: raw.list("section", "map"),
            value: raw.list("section", "value").unwrap_or_default(),
            derivatives: Vec::new(),
        };
        for ((sec, key), (_, no)) in &raw.values {
            if sec == "section" {
                if let Some(idx) = derivative_key(key) {
                    if idx.iter().any(|&i| i >= n + m) {
                        return Err(CliError::input(format!(
                            "line {no}: '{key}' names a variable beyond x{}",
                            n + m
                        )));
                    }
                    let mut exps = vec![0; n];
                    for i in idx {
                        if i >= n {
                            return Err(CliError::input(format!(
                                "line {no}: '{key}' differentiates in a parameter"
                            )));
                        }
                        exps[i] += 1;
                    }
                    section
                        .derivatives
                        .push((exps, raw.list("section", key).unwrap_or_default()));
                }
            }
        }

        let relation = match (raw.get("relation", "name"), raw.get("relation", "margin")) {
            (Some(_), Some((_, no))) => {
                return Err(CliError::input(format!(
                    "line {no}: give either a relation name or a margin"
                )))
            }
            (Some((v, _)), None) => Some(RelationSpec::Named(v.clone())),
            (None, Some((v, _))) => Some(RelationSpec::Margin(v.clone())),
            (None, None) => None,
        };
        let homotopy = match (raw.get("homotopy", "target"), raw.get("homotopy", "constant")) {
            (Some((v, _)), None) => HomotopySpec::RotateTo(v.clone()),
            (None, Some((v, no))) => match v.as_str() {
                "true" => HomotopySpec::Constant,
                _ => return Err(CliError::input(format!("line {no}: constant must be true"))),
            },
            (None, None) => HomotopySpec::Constant,
            (Some(_), Some((_, no))) => {
                return Err(CliError::input(format!(
                    "line {no}: give either a target or constant = true"
                )))
            }
        };
        let q = match kind {
            Kind::Directed => 2,
            _ => section.map.as_ref().unwrap_or(&section.value).len(),
        };

        let sc = Scenario {
            kind,
            n,
            k,
            r,
            m,
            q,
            delta,
            eps,
            grid: raw.num("grid", Some(41))?,
            seed: raw.num("seed", Some(0))?,
            n_floor: raw.num("n_floor", Some(4))?,
            n_cap: raw.num("n_cap", Some(4096))?,
            smoothness: raw.num("smoothness", Some(holonomic::wiggle::DEFAULT_SMOOTHNESS))?,
            refine: raw.num("refine", Some(true))?,
            relative: raw.num("relative", Some(kind == Kind::Parametric))?,
            collar: raw.num("collar", Some(0.125))?,
            germ: raw.list("germ", "value"),
            section,
            relation,
            model,
            core,
            frames: raw.num("frames", Some(16))?,
            curve: raw.list("curve", "map").unwrap_or_default(),
            homotopy,
            samples: raw.num("samples", Some(201))?,
            max_steps: raw.num("max_steps", Some(6))?,
            curve_core: raw.num("curve_core", Some(0.5))?,
            out: raw.get("", "out").map(|(v, _)| PathBuf::from(v)),
        };
        sc.validate()?;
        Ok(sc)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::input(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.kind != Kind::Directed && self.k >= self.n {
            return bad(format!(
                "the cube must have positive codimension: k = {} is not below n = {}",
                self.k, self.n
            ));
        }
        if !(self.delta > 0.0) || (self.kind != Kind::Directed && !(self.eps > 0.0)) {
            return bad("delta and eps must be positive".into());
        }
        if self.grid < 2 {
            return bad("grid needs at least two nodes".into());
        }
        match self.kind {
            Kind::Directed => {
                if self.curve.len() != 2 {
                    return bad("[curve] map needs two expressions separated by ';'".into());
                }
                for c in &self.curve {
                    self.expr(c, 1)?;
                }
                if !matches!(self.relation, Some(RelationSpec::Named(_))) {
                    return bad("[relation] name = direction-set(...) is required".into());
                }
                if let HomotopySpec::RotateTo(t) = &self.homotopy {
                    self.expr(t, 1)?;
                }
            }
            _ => {
                if self.q == 0 {
                    return bad("[section] needs value = ... (or map = ...)".into());
                }
                if self.section.map.is_some()
                    && (!self.section.value.is_empty() || !self.section.derivatives.is_empty())
                {
                    return bad("[section] takes either a map or jet entries".into());
                }
                let vars = self.n + self.m;
                for e in self.section.map.iter().flatten().chain(&self.section.value) {
                    self.expr(e, vars)?;
                }
                for (exps, list) in &self.section.derivatives {
                    if exps.iter().sum::<usize>() > self.r {
                        return bad(format!(
                            "derivative entry of order {} exceeds r = {}",
                            exps.iter().sum::<usize>(),
                            self.r
                        ));
                    }
                    if list.len() != self.q {
                        return bad(format!("derivative entries need {} expressions", self.q));
                    }
                    for e in list {
                        self.expr(e, vars)?;
                    }
                }
                if let Some(g) = &self.germ {
                    if g.len() != self.q {
                        return bad(format!("[germ] needs {} expressions", self.q));
                    }
                    for e in g {
                        self.expr(e, vars)?;
                    }
                }
                if self.kind == Kind::Parametric && self.germ.is_none() {
                    return bad("parametric scenarios need a [germ]".into());
                }
                if self.kind != Kind::Parametric && self.m != 0 {
                    return bad("m is only meaningful for parametric scenarios".into());
                }
                if self.relative && self.germ.is_none() {
                    return bad("relative mode needs a [germ]".into());
                }
                if self.kind == Kind::Solve && self.relation.is_none() {
                    return bad("solve scenarios need a [relation]".into());
                }
            }
        }
        Ok(())
    }

    pub fn expr(&self, src: &str, vars: usize) -> Result<Expr, CliError> {
        parse_expr(src, vars).map_err(|e| CliError::input(format!("expression '{src}': {e}")))
    }

    /// Jet entries per output, zero where unlisted.
    pub fn entries(&self) -> Result<Vec<Vec<Expr>>, CliError> {
        let layout = Layout::get(self.n, self.r);
        let vars = self.n + self.m;
        let mut rows = vec![vec![Expr::constant(0.0); layout.len()]; self.q];
        for (j, row) in rows.iter_mut().enumerate() {
            row[0] = self.expr(&self.section.value[j], vars)?;
        }
        for (exps, list) in &self.section.derivatives {
            let rank = layout
                .rank(&MultiIndex::new(exps))
                .ok_or_else(|| CliError::input(format!("derivative {exps:?} outside the jet layout")))?;
            for (j, row) in rows.iter_mut().enumerate() {
                row[rank] = self.expr(&list[j], vars)?;
            }
        }
        Ok(rows)
    }

    pub fn germ_exprs(&self) -> Result<Option<Vec<Expr>>, CliError> {
        self.germ
            .as_ref()
            .map(|g| g.iter().map(|e| self.expr(e, self.n + self.m)).collect())
            .transpose()
    }

    /// Applies a sweep override.
    pub fn set(&mut self, param: &str, value: &str) -> Result<(), CliError> {
        let bad = || CliError::input(format!("invalid value '{value}' for {param}"));
        match param {
            "N_floor" => self.n_floor = value.parse().map_err(|_| bad())?,
            "delta" => self.delta = value.parse().map_err(|_| bad())?,
            "eps" => self.eps = value.parse().map_err(|_| bad())?,
            "grid" => self.grid = value.parse().map_err(|_| bad())?,
            other => {
                return Err(CliError::input(format!(
                    "unknown sweep parameter '{other}' (expected N_floor, delta, eps or grid)"
                )))
            }
        }
        if self.n_floor > self.n_cap {
            self.n_cap = self.n_floor;
        }
        self.validate()
    }
}
