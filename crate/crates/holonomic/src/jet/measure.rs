use rayon::prelude::*;

use super::{jet_distance_masked, JetError, JetSection, Sampler};

/// Largest sampled value and the lowest sample index attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Worst {
    pub value: f64,
    pub index: usize,
}

impl Worst {
    pub const NONE: Worst = Worst { value: 0.0, index: 0 };

    /// Deterministic max: NaN beats everything, ties go to the lower index.
    pub fn max(self, other: Worst) -> Worst {
        let (a, b) = (self, other);
        match (a.value.is_nan(), b.value.is_nan()) {
            (true, true) => {
                if a.index <= b.index {
                    a
                } else {
                    b
                }
            }
            (true, false) => a,
            (false, true) => b,
            _ if a.value > b.value => a,
            _ if b.value > a.value => b,
            _ => {
                if a.index <= b.index {
                    a
                } else {
                    b
                }
            }
        }
    }
}

enum Acc<E> {
    Empty,
    Val(Worst),
    Err(usize, E),
}

fn combine<E>(a: Acc<E>, b: Acc<E>) -> Acc<E> {
    match (a, b) {
        (Acc::Empty, x) | (x, Acc::Empty) => x,
        (Acc::Err(i, e), Acc::Err(j, f)) => {
            if i <= j {
                Acc::Err(i, e)
            } else {
                Acc::Err(j, f)
            }
        }
        (e @ Acc::Err(..), Acc::Val(_)) | (Acc::Val(_), e @ Acc::Err(..)) => e,
        (Acc::Val(x), Acc::Val(y)) => Acc::Val(x.max(y)),
    }
}

/// Parallel max of `f(i)` over `0..len`. The result does not depend on the
/// number of worker threads: errors are reported for the lowest failing
/// index, ties resolve to the lowest index. Returns [`Worst::NONE`] for an
/// empty range.
pub fn par_max<E, F>(len: usize, f: F) -> Result<Worst, E>
where
    E: Send,
    F: Fn(usize) -> Result<f64, E> + Sync + Send,
{
    let acc = (0..len)
        .into_par_iter()
        .with_min_len(8)
        .map(|i| match f(i) {
            Ok(value) => Acc::Val(Worst { value, index: i }),
            Err(e) => Acc::Err(i, e),
        })
        .reduce(|| Acc::Empty, combine);
    match acc {
        Acc::Empty => Ok(Worst::NONE),
        Acc::Val(w) => Ok(w),
        Acc::Err(_, e) => Err(e),
    }
}

/// Max of [`super::jet_distance`] between `f` and `g` over the sample points.
pub fn sup_distance<S: Sampler + ?Sized>(f: &JetSection, g: &JetSection, samples: &S) -> Result<Worst, JetError> {
    sup_distance_masked(f, g, samples, None)
}

pub fn sup_distance_masked<S: Sampler + ?Sized>(
    f: &JetSection,
    g: &JetSection,
    samples: &S,
    mask: Option<&[bool]>,
) -> Result<Worst, JetError> {
    par_max(samples.len(), |i| {
        let p = samples.point(i);
        jet_distance_masked(&f.jet(&p)?, &g.jet(&p)?, mask)
    })
}

/// Compares centred differences of the order-j entries along each axis in
/// `axes` with the stored order-(j+1) entries, j < r, and returns the
/// largest discrepancy.
pub fn holonomy_residual<S: Sampler + ?Sized>(
    f: &JetSection,
    samples: &S,
    step: f64,
    axes: &[usize],
) -> Result<Worst, JetError> {
    let r = f.r();
    if r == 0 || axes.is_empty() {
        return Ok(Worst::NONE);
    }
    par_max(samples.len(), |idx| {
        let v = samples.point(idx);
        let center = f.jet(&v)?;
        let layout = center.component(0).layout();
        let mut worst = 0.0f64;
        for &i in axes {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[i] += step;
            vm[i] -= step;
            let jp = f.jet(&vp)?;
            let jm = f.jet(&vm)?;
            for alpha in layout.indices().iter().filter(|a| a.order() < r) {
                let up = alpha.with_incremented(i);
                for j in 0..center.q() {
                    let fd = (jp.entry(j, alpha) - jm.entry(j, alpha)) / (2.0 * step);
                    let d = (fd - center.entry(j, &up)).abs();
                    if d.is_nan() {
                        return Ok(f64::NAN);
                    }
                    worst = worst.max(d);
                }
            }
        }
        Ok(worst)
    })
}
