/// U_δ(I^k): points within distance δ of the unit cube spanned by the first
/// k coordinates of R^n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeNbhd {
    pub k: usize,
    pub n: usize,
    pub delta: f64,
}

impl CubeNbhd {
    pub fn new(k: usize, n: usize, delta: f64) -> Self {
        assert!(k <= n && delta > 0.0);
        CubeNbhd { k, n, delta }
    }

    /// Euclidean distance from `x` to I^k.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let mut d2 = 0.0;
        for (i, &v) in x.iter().enumerate() {
            let e = if i < self.k {
                if v < 0.0 {
                    -v
                } else if v > 1.0 {
                    v - 1.0
                } else {
                    0.0
                }
            } else {
                v
            };
            d2 += e * e;
        }
        d2.sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n && self.distance(x) < self.delta
    }

    /// Distance of the cube coordinates of `x` to ∂I^k (within the cube),
    /// or 0 if they are outside.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        x[..self.k]
            .iter()
            .map(|&v| v.min(1.0 - v).max(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `x` to the fiber I^{l−1}(y, t): the first k − l
    /// coordinates equal `y`, the next equals `t`, the following l − 1 range
    /// over [0, 1], the rest vanish.
    pub fn fiber_distance(&self, x: &[f64], l: usize, y: &[f64], t: f64) -> f64 {
        assert!(l >= 1 && l <= self.k && y.len() == self.k - l);
        let mut d2 = 0.0;
        for (i, &v) in x.iter().enumerate() {
            let e = if i < self.k - l {
                v - y[i]
            } else if i == self.k - l {
                v - t
            } else if i < self.k {
                (-v).max(v - 1.0).max(0.0)
            } else {
                v
            };
            d2 += e * e;
        }
        d2.sqrt()
    }

    /// U_δ(y, t).
    pub fn in_fiber_nbhd(&self, x: &[f64], l: usize, y: &[f64], t: f64) -> bool {
        self.fiber_distance(x, l, y, t) < self.delta
    }

    /// Distance from `x` to the boundary of the fiber I^{l−1}(y, t); infinite
    /// when the fiber is a single point (l = 1).
    pub fn fiber_boundary_distance(&self, x: &[f64], l: usize, y: &[f64], t: f64) -> f64 {
        assert!(l >= 1 && l <= self.k && y.len() == self.k - l);
        let free = self.k - l + 1..self.k;
        if free.is_empty() {
            return f64::INFINITY;
        }
        let outside = |v: f64| (-v).max(v - 1.0).max(0.0);
        let mut fixed2 = 0.0;
        let mut out2 = 0.0;
        for (i, &v) in x.iter().enumerate() {
            if i < self.k - l {
                fixed2 += (v - y[i]).powi(2);
            } else if i == self.k - l {
                fixed2 += (v - t).powi(2);
            } else if i < self.k {
                out2 += outside(v).powi(2);
            } else {
                fixed2 += v * v;
            }
        }
        free.map(|j| {
            let v = x[j];
            let face = v.abs().min((v - 1.0).abs());
            (fixed2 + out2 - outside(v).powi(2) + face * face).max(0.0).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
    }

    /// U^∂_δ(y, t).
    pub fn in_fiber_boundary_nbhd(&self, x: &[f64], l: usize, y: &[f64], t: f64) -> bool {
        self.fiber_boundary_distance(x, l, y, t) < self.delta
    }

    pub fn in_top_cap(&self, x: &[f64]) -> bool {
        self.contains(x) && x[self.n - 1] >= self.delta / 2.0
    }

    pub fn in_bottom_cap(&self, x: &[f64]) -> bool {
        self.contains(x) && x[self.n - 1] <= -self.delta / 2.0
    }
}

/// Indexed family of sample points.
pub trait Sampler: Sync {
    fn len(&self) -> usize;
    fn point(&self, i: usize) -> Vec<f64>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        assert!(
            count >= 1 && (count == 1 || hi > lo),
            "degenerate axis [{lo}, {hi}] x{count}"
        );
        Axis { lo, hi, count }
    }

    pub fn fixed(v: f64) -> Self {
        Axis { lo: v, hi: v, count: 1 }
    }

    pub fn step(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            (self.hi - self.lo) / (self.count - 1) as f64
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.lo
        } else if i + 1 == self.count {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }

    /// Same range with every step halved.
    pub fn refined(&self) -> Axis {
        Axis {
            count: if self.count <= 1 { 1 } else { 2 * self.count - 1 },
            ..*self
        }
    }
}

/// Axis-aligned lattice; the first axis varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Self {
        Grid { axes }
    }

    /// Lattice over I^k × [−w, w]^{n−k}, `nodes` per axis (a single node at 0
    /// on normal axes when `w` is zero).
    pub fn over_cube(k: usize, n: usize, w: f64, nodes: usize) -> Self {
        let mut axes = vec![Axis::new(0.0, 1.0, nodes); k];
        for _ in k..n {
            axes.push(if w > 0.0 {
                Axis::new(-w, w, nodes)
            } else {
                Axis::fixed(0.0)
            });
        }
        Grid { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn refined(&self) -> Grid {
        Grid {
            axes: self.axes.iter().map(Axis::refined).collect(),
        }
    }

    pub fn min_step(&self) -> f64 {
        self.axes
            .iter()
            .filter(|a| a.count > 1)
            .map(Axis::step)
            .fold(f64::INFINITY, f64::min)
    }
}

impl Sampler for Grid {
    fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    fn point(&self, mut i: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.axes.len()];
        for (d, a) in self.axes.iter().enumerate().rev() {
            p[d] = a.node(i % a.count);
            i /= a.count;
        }
        p
    }
}

/// A sampler whose points are another sampler's points mapped through `f`.
pub struct Mapped<'a, S: Sampler + ?Sized> {
    pub base: &'a S,
    pub f: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
}

impl<S: Sampler + ?Sized> Sampler for Mapped<'_, S> {
    fn len(&self) -> usize {
        self.base.len()
    }
    fn point(&self, i: usize) -> Vec<f64> {
        (self.f)(&self.base.point(i))
    }
}

/// Explicit list of points.
impl Sampler for Vec<Vec<f64>> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }
    fn point(&self, i: usize) -> Vec<f64> {
        self[i].clone()
    }
}
