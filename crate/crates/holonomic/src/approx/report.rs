use std::fmt::{self, Write as _};

/// Column header of the metrics table.
pub const METRICS_HEADER: &str = "level,N,sigma,eps_measured,seam_max,holonomy_residual,displacement";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NCapExceeded,
    SeamMismatch,
    /// Every level met its target but the end-to-end error did not.
    EpsNotMet,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Success => "success",
            Status::NCapExceeded => "n_cap_exceeded",
            Status::SeamMismatch => "seam_mismatch",
            Status::EpsNotMet => "eps_not_met",
        })
    }
}

/// One attempted (level, N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub level: usize,
    pub n_osc: usize,
    pub sigma: f64,
    pub eps_measured: f64,
    pub seam_max: f64,
    pub holonomy_residual: f64,
    pub displacement: f64,
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.level,
            self.n_osc,
            self.sigma,
            self.eps_measured,
            self.seam_max,
            self.holonomy_residual,
            self.displacement
        )
    }
}

/// Accepted parameters and measurements of one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub n_osc: usize,
    pub delta: f64,
    pub amplitude: f64,
    pub sigma: f64,
    pub interpolation_error: f64,
    pub error: f64,
    pub target: f64,
    pub seam_max: f64,
    pub holonomy_residual: f64,
}

/// Holonomy residual at two steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualCheck {
    pub step: f64,
    pub coarse: f64,
    pub fine: f64,
}

impl ResidualCheck {
    pub fn ratio(&self) -> f64 {
        self.coarse / self.fine
    }
}

/// Everything the engine measured, serializable as `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub params: Vec<(String, String)>,
    pub levels: Vec<LevelSummary>,
    pub rows: Vec<MetricsRow>,
    pub eps_measured: f64,
    pub eps_measured_refined: Option<f64>,
    pub seam_max: f64,
    pub residual: Option<ResidualCheck>,
    pub displacement: f64,
    pub displacement_bound: f64,
    pub phi_boundary_max: f64,
    pub inside_domain: bool,
    pub boundary_fidelity: Option<f64>,
    pub tube: f64,
    pub samples: usize,
    pub status: Status,
    pub shear: String,
    /// Additional lines appended by callers (parametric checks and the like).
    pub extra: Vec<(String, String)>,
}

impl ErrorReport {
    pub fn new(params: Vec<(String, String)>) -> Self {
        ErrorReport {
            params,
            levels: Vec::new(),
            rows: Vec::new(),
            eps_measured: f64::NAN,
            eps_measured_refined: None,
            seam_max: 0.0,
            residual: None,
            displacement: 0.0,
            displacement_bound: 0.0,
            phi_boundary_max: 0.0,
            inside_domain: true,
            boundary_fidelity: None,
            tube: 0.0,
            samples: 0,
            status: Status::Success,
            shear: "identity".into(),
            extra: Vec::new(),
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == Status::Success
    }

    pub fn push_extra(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.extra.push((key.into(), value.to_string()));
    }

    /// Flat key-value text block.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        for (k, v) in &self.params {
            kv(k, v);
        }
        kv("levels", &self.levels.len());
        for l in &self.levels {
            let p = format!("level{}", l.level);
            kv(&format!("{p}.N"), &l.n_osc);
            kv(&format!("{p}.delta"), &l.delta);
            kv(&format!("{p}.delta1"), &l.amplitude);
            kv(&format!("{p}.sigma"), &l.sigma);
            kv(&format!("{p}.interpolation_error"), &l.interpolation_error);
            kv(&format!("{p}.error"), &l.error);
            kv(&format!("{p}.target"), &l.target);
            kv(&format!("{p}.seam_max"), &l.seam_max);
            kv(&format!("{p}.holonomy_residual"), &l.holonomy_residual);
        }
        kv("samples", &self.samples);
        kv("tube", &self.tube);
        kv("eps_measured", &self.eps_measured);
        match self.eps_measured_refined {
            Some(v) => kv("eps_measured_refined", &v),
            None => kv("eps_measured_refined", &"n/a"),
        }
        kv("seam_max", &self.seam_max);
        match &self.residual {
            Some(r) => {
                kv("holonomy_step", &r.step);
                kv("holonomy_residual", &r.coarse);
                kv("holonomy_residual_half_step", &r.fine);
                kv("holonomy_ratio", &r.ratio());
            }
            None => kv("holonomy_residual", &"n/a"),
        }
        kv("displacement", &self.displacement);
        kv("displacement_bound", &self.displacement_bound);
        kv("phi_boundary_max", &self.phi_boundary_max);
        kv("inside_domain", &self.inside_domain);
        match self.boundary_fidelity {
            Some(v) => kv("boundary_fidelity", &v),
            None => kv("boundary_fidelity", &"n/a"),
        }
        kv("shear", &self.shear);
        for (k, v) in &self.extra {
            kv(k, v);
        }
        kv("status", &self.status);
        s
    }

    /// Metrics table with header.
    pub fn metrics_csv(&self) -> String {
        let mut s = String::from(METRICS_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }
}
