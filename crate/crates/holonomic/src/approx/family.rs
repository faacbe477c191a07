use std::sync::Arc;

use crate::jet::{compose_jet, image_point, jet_distance_masked, Diffeo, JetError, JetField, JetPoint, JetSection};
use crate::taylor::{SmoothStep, UnivariateFn};

use super::level::LevelOutput;
use super::RelativeData;

/// A continuous family of holonomic sections F_{y,t}, indexed by the first
/// k − l + 1 cube coordinates, each a genuine map near its fiber
/// I^{l−1}(y, t).
#[derive(Clone)]
pub struct FiberwiseFamily {
    level: usize,
    k: usize,
    n: usize,
    r: usize,
    q: usize,
    delta: f64,
    source: Source,
}

#[derive(Clone)]
enum Source {
    /// Taylor maps of the section at the points of the cube.
    Base {
        section: JetSection,
        relative: Option<(RelativeData, SmoothStep)>,
    },
    /// The previous level's pieces with their index frozen, pulled back by
    /// that level's shear.
    Pulled { prev: Arc<LevelOutput> },
}

/// The l = 1 family: at every cube point the Taylor polynomial map of `f`
/// there, or `f` itself when it is holonomic. In relative mode members are
/// blended into the germ over the collar.
pub fn base_fiberwise(f: &JetSection, k: usize, delta: f64, relative: Option<RelativeData>) -> FiberwiseFamily {
    let relative = relative.map(|rel| {
        let w = rel.collar;
        (rel, SmoothStep::new("collar", 3, w / 2.0, w))
    });
    FiberwiseFamily {
        level: 1,
        k,
        n: f.n(),
        r: f.r(),
        q: f.q(),
        delta,
        source: Source::Base {
            section: f.clone(),
            relative,
        },
    }
}

impl FiberwiseFamily {
    pub(crate) fn pulled(prev: Arc<LevelOutput>, delta: f64) -> FiberwiseFamily {
        let fam = prev.family();
        FiberwiseFamily {
            level: fam.level + 1,
            k: fam.k,
            n: fam.n,
            r: fam.r,
            q: fam.q,
            delta,
            source: Source::Pulled { prev },
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of index coordinates (y, t).
    pub fn index_dim(&self) -> usize {
        self.k + 1 - self.level
    }

    pub fn is_relative(&self) -> bool {
        match &self.source {
            Source::Base { relative, .. } => relative.is_some(),
            Source::Pulled { prev } => prev.family().is_relative(),
        }
    }

    pub fn collar(&self) -> Option<f64> {
        match &self.source {
            Source::Base { relative, .. } => relative.as_ref().map(|(rel, _)| rel.collar),
            Source::Pulled { prev } => prev.family().collar(),
        }
    }

    /// J^r of the member f_{idx} at `v`.
    pub fn member_jet(&self, idx: &[f64], v: &[f64]) -> Result<JetPoint, JetError> {
        debug_assert_eq!(idx.len(), self.index_dim());
        match &self.source {
            Source::Base { section, relative } => {
                let beta = match relative {
                    Some((_, ramp)) => {
                        let d = idx.iter().map(|&c| c.min(1.0 - c)).fold(f64::INFINITY, f64::min);
                        ramp.eval(d)
                    }
                    None => 1.0,
                };
                let taylor = || -> Result<JetPoint, JetError> {
                    if section.is_holonomic() {
                        return section.jet(v);
                    }
                    let mut center = idx.to_vec();
                    center.resize(self.n, 0.0);
                    section.jet(&center)?.recenter(v)
                };
                match relative {
                    Some((rel, _)) if beta < 1.0 => {
                        let germ = rel.germ.jet(v, self.r)?;
                        if beta == 0.0 {
                            Ok(germ)
                        } else {
                            germ.lerp(&taylor()?, beta)
                        }
                    }
                    _ => taylor(),
                }
            }
            Source::Pulled { prev } => {
                let inner = prev.shear().jet(v, self.r)?;
                let outer = prev.piece_jet_at(idx, &image_point(&inner))?;
                compose_jet(&outer, &inner)
            }
        }
    }

    /// The member f_{idx} as a section of its own.
    pub fn member(self: &Arc<Self>, idx: &[f64]) -> JetSection {
        JetSection::Field(Arc::new(Member {
            family: self.clone(),
            idx: idx.to_vec(),
        }))
    }

    /// Largest jet distance at the probe points between members whose
    /// indices differ by `spacing` in one coordinate.
    pub fn continuity_modulus(
        &self,
        spacing: f64,
        probes: &[Vec<f64>],
        mask: Option<&[bool]>,
    ) -> Result<f64, JetError> {
        let d = self.index_dim();
        let mut worst = 0.0f64;
        for v in probes {
            let idx: Vec<f64> = v[..d].to_vec();
            let here = self.member_jet(&idx, v)?;
            for j in 0..d {
                let mut other = idx.clone();
                other[j] = if other[j] + spacing <= 1.0 {
                    other[j] + spacing
                } else {
                    other[j] - spacing
                };
                let there = self.member_jet(&other, v)?;
                worst = worst.max(jet_distance_masked(&here, &there, mask)?);
            }
        }
        Ok(worst)
    }
}

struct Member {
    family: Arc<FiberwiseFamily>,
    idx: Vec<f64>,
}

impl JetField for Member {
    fn n(&self) -> usize {
        self.family.n
    }
    fn q(&self) -> usize {
        self.family.q
    }
    fn r(&self) -> usize {
        self.family.r
    }
    fn jet(&self, v: &[f64]) -> Result<JetPoint, JetError> {
        self.family.member_jet(&self.idx, v)
    }
    fn is_holonomic(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        format!("member {:?} of the level-{} family", self.idx, self.family.level)
    }
}
