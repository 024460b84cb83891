//! Moreau conjugacies on grids.
//!
//! For a kernel `b` on `X × Y`, `conjugate(f, k)(x) = max_y b(x,y) - f(y)`.
//! The dual conjugacy `B°` is the same computation on the transposed kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::grid::{Grid, GridFn};

#[derive(Debug, Clone, PartialEq)]
enum Entries {
    /// `b(x, y) = <x, y>`.
    Bilinear,
    /// Row-major `|X| × |Y|` table.
    Table(Vec<ExtReal>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    x_grid: Grid,
    y_grid: Grid,
    entries: Entries,
}

/// Serialized kernel description; grids travel separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    Bilinear,
    Table { rows: Vec<Vec<ExtReal>> },
}

#[inline]
pub(crate) fn dot(x: [f64; 2], y: [f64; 2], dim: usize) -> f64 {
    if dim == 1 {
        x[0] * y[0]
    } else {
        x[0] * y[0] + x[1] * y[1]
    }
}

impl Kernel {
    pub fn bilinear(x_grid: Grid, y_grid: Grid) -> Result<Self> {
        if x_grid.dim() != y_grid.dim() {
            return Err(Error::InvalidKernel(format!(
                "bilinear kernel needs equal dimensions, got {} and {}",
                x_grid.dim(),
                y_grid.dim()
            )));
        }
        Ok(Kernel { x_grid, y_grid, entries: Entries::Bilinear })
    }

    /// Dense kernel from rows indexed by X nodes. Rejects `+∞` entries and
    /// rows or columns without a finite entry.
    pub fn table(x_grid: Grid, y_grid: Grid, rows: Vec<Vec<ExtReal>>) -> Result<Self> {
        let (nx, ny) = (x_grid.len(), y_grid.len());
        if rows.len() != nx || rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidKernel(format!("table must be {nx} x {ny}")));
        }
        let flat: Vec<ExtReal> = rows.into_iter().flatten().collect();
        if let Some(p) = flat.iter().position(|v| v.is_pos_inf()) {
            return Err(Error::InvalidKernel(format!("+inf entry at row {}, column {}", p / ny, p % ny)));
        }
        if let Some(i) = (0..nx).find(|&i| !flat[i * ny..(i + 1) * ny].iter().any(|v| v.is_finite())) {
            return Err(Error::InvalidKernel(format!("row {i} has no finite entry")));
        }
        if let Some(j) = (0..ny).find(|&j| !(0..nx).any(|i| flat[i * ny + j].is_finite())) {
            return Err(Error::InvalidKernel(format!("column {j} has no finite entry")));
        }
        Ok(Kernel { x_grid, y_grid, entries: Entries::Table(flat) })
    }

    pub fn from_fn(x_grid: Grid, y_grid: Grid, b: impl Fn([f64; 2], [f64; 2]) -> ExtReal) -> Result<Self> {
        let rows = (0..x_grid.len())
            .map(|i| (0..y_grid.len()).map(|j| b(x_grid.point(i), y_grid.point(j))).collect())
            .collect();
        Kernel::table(x_grid, y_grid, rows)
    }

    pub fn from_spec(spec: &KernelSpec, x_grid: Grid, y_grid: Grid) -> Result<Self> {
        match spec {
            KernelSpec::Bilinear => Kernel::bilinear(x_grid, y_grid),
            KernelSpec::Table { rows } => Kernel::table(x_grid, y_grid, rows.clone()),
        }
    }

    pub fn spec(&self) -> KernelSpec {
        match &self.entries {
            Entries::Bilinear => KernelSpec::Bilinear,
            Entries::Table(t) => {
                KernelSpec::Table { rows: t.chunks(self.y_grid.len()).map(|r| r.to_vec()).collect() }
            }
        }
    }

    pub fn x_grid(&self) -> &Grid {
        &self.x_grid
    }

    pub fn y_grid(&self) -> &Grid {
        &self.y_grid
    }

    pub fn is_bilinear(&self) -> bool {
        matches!(self.entries, Entries::Bilinear)
    }

    /// `b(x_i, y_j)`.
    #[inline]
    pub fn eval(&self, i: usize, j: usize) -> ExtReal {
        match &self.entries {
            Entries::Bilinear => {
                ExtReal::new(dot(self.x_grid.point(i), self.y_grid.point(j), self.x_grid.dim()))
            }
            Entries::Table(t) => t[i * self.y_grid.len() + j],
        }
    }

    /// The section `b(x_i, ·)` as a function on Y.
    pub fn section(&self, i: usize) -> GridFn {
        let values = (0..self.y_grid.len()).map(|j| self.eval(i, j)).collect();
        GridFn::new(self.y_grid.clone(), values).expect("section has |Y| values")
    }

    /// The kernel `b∨(y, x) = b(x, y)` of the dual conjugacy.
    pub fn transpose(&self) -> Kernel {
        let entries = match &self.entries {
            Entries::Bilinear => Entries::Bilinear,
            Entries::Table(t) => {
                let (nx, ny) = (self.x_grid.len(), self.y_grid.len());
                let mut out = Vec::with_capacity(t.len());
                for j in 0..ny {
                    for i in 0..nx {
                        out.push(t[i * ny + j]);
                    }
                }
                Entries::Table(out)
            }
        };
        Kernel { x_grid: self.y_grid.clone(), y_grid: self.x_grid.clone(), entries }
    }
}

/// `Bf(x) = max_y b(x,y) - f(y)` by exhaustive search.
pub fn conjugate(f: &GridFn, k: &Kernel) -> Result<GridFn> {
    Ok(conjugate_with_argmax(f, k)?.0)
}

/// [`conjugate`] together with every maximizing Y node per X node (empty when
/// the maximum is `-∞`).
pub fn conjugate_with_argmax(f: &GridFn, k: &Kernel) -> Result<(GridFn, Vec<Vec<usize>>)> {
    f.grid().ensure_same(k.y_grid(), "conjugate: f must live on the kernel's Y grid")?;
    let ny = k.y_grid().len();
    let rows: Vec<(ExtReal, Vec<usize>)> = (0..k.x_grid().len())
        .into_par_iter()
        .map(|i| {
            let mut best = ExtReal::NEG_INF;
            let mut arg = Vec::new();
            for j in 0..ny {
                let v = k.eval(i, j) - f.get(j);
                if v > best {
                    best = v;
                    arg.clear();
                    arg.push(j);
                } else if v == best && !v.is_neg_inf() {
                    arg.push(j);
                }
            }
            (best, arg)
        })
        .collect();
    let (values, argmax): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok((GridFn::new(k.x_grid().clone(), values)?, argmax))
}

/// `B°g(y) = max_x b(x,y) - g(x)`.
pub fn dual_conjugate(g: &GridFn, k: &Kernel) -> Result<GridFn> {
    conjugate(g, &k.transpose())
}

/// Legendre–Fenchel transform of a 1-D grid function, bit-identical to
/// [`conjugate`] with the bilinear kernel.
///
/// The upper hull of `(y, -f(y))` gives the maximizer for each `x` in one
/// merged sweep. Points lying within rounding distance of the hull are kept
/// as candidates and scanned around the hull maximizer, so the returned value
/// is the floating-point maximum of `x*y - f(y)` over all nodes.
pub fn legendre_fast(f: &GridFn, x_grid: &Grid) -> Result<GridFn> {
    if f.grid().dim() != 1 || x_grid.dim() != 1 {
        return Err(Error::InvalidParameter("legendre_fast works on 1-D grids".into()));
    }
    let y_grid = f.grid();
    let finite: Vec<usize> = (0..f.len()).filter(|&j| f.get(j).is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::NoFiniteValue);
    }
    if f.values().iter().any(|v| v.is_neg_inf()) {
        return Ok(GridFn::constant(x_grid, ExtReal::POS_INF));
    }
    let ys: Vec<f64> = finite.iter().map(|&j| y_grid.coord(j)).collect();
    let us: Vec<f64> = finite.iter().map(|&j| -f.get(j).value()).collect();
    let xs = x_grid.coords();

    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let scale = max_abs(&xs) * max_abs(&ys) + max_abs(&us);
    let tol = 64.0 * f64::EPSILON * scale + f64::MIN_POSITIVE;

    // upper hull, as positions into `ys`/`us`
    let mut hull: Vec<usize> = Vec::with_capacity(ys.len());
    for p in 0..ys.len() {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (ys[a] - ys[o]) * (us[p] - us[o]) - (us[a] - us[o]) * (ys[p] - ys[o]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    // candidates: points within `tol` of the hull
    let mut cand: Vec<usize> = Vec::with_capacity(ys.len());
    let mut cand_pos_of_hull = Vec::with_capacity(hull.len());
    let mut seg = 0;
    for p in 0..ys.len() {
        while seg + 1 < hull.len() && ys[hull[seg + 1]] < ys[p] {
            seg += 1;
        }
        let depth = if hull[seg] == p || seg + 1 == hull.len() {
            if hull[seg] == p {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            let (a, b) = (hull[seg], hull[seg + 1]);
            if b == p {
                0.0
            } else {
                let t = (ys[p] - ys[a]) / (ys[b] - ys[a]);
                us[a] + (us[b] - us[a]) * t - us[p]
            }
        };
        if hull.binary_search(&p).is_ok() {
            cand_pos_of_hull.push(cand.len());
            cand.push(p);
        } else if depth <= tol {
            cand.push(p);
        }
    }

    let value = |x: f64, p: usize| ExtReal::new(x * ys[p]) - ExtReal::new(-us[p]);
    let margin = 2.0 * tol;
    let mut ptr = 0;
    let values = xs
        .iter()
        .map(|&x| {
            while ptr + 1 < hull.len() {
                let (a, b) = (hull[ptr], hull[ptr + 1]);
                let breakpoint = (us[a] - us[b]) / (ys[b] - ys[a]);
                if x > breakpoint {
                    ptr += 1;
                } else {
                    break;
                }
            }
            let start = cand_pos_of_hull[ptr];
            let mut best = value(x, cand[start]);
            for &p in cand[start + 1..].iter() {
                let v = value(x, p);
                if v > best {
                    best = v;
                } else if v.value() < best.value() - margin {
                    break;
                }
            }
            for &p in cand[..start].iter().rev() {
                let v = value(x, p);
                if v > best {
                    best = v;
                } else if v.value() < best.value() - margin {
                    break;
                }
            }
            best
        })
        .collect();
    GridFn::new(x_grid.clone(), values)
}

/// Generalized subdifferential of `g` with respect to `b∨`, stored both ways.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdiffMap {
    /// `∂°g(x)` as Y nodes, per X node.
    pub of_x: Vec<Vec<usize>>,
    /// `(∂°g)⁻¹(y)` as X nodes, per Y node.
    pub inverse: Vec<Vec<usize>>,
}

impl SubdiffMap {
    pub fn is_consistent(&self) -> bool {
        self.of_x.iter().enumerate().all(|(x, ys)| ys.iter().all(|&y| self.inverse[y].contains(&x)))
            && self.inverse.iter().enumerate().all(|(y, xs)| xs.iter().all(|&x| self.of_x[x].contains(&y)))
    }
}

/// `y ∈ ∂°g(x)` iff `b(x,y)` and `g(x)` are finite and `x` attains
/// `B°g(y) = max_x' b(x',y) - g(x')`.
///
/// Requiring `g(x)` finite means pieces only index solutions with values in
/// `ℝ ∪ {+∞}`; see [`crate::covering`].
pub fn subdifferential_map(g: &GridFn, k: &Kernel) -> Result<SubdiffMap> {
    g.grid().ensure_same(k.x_grid(), "subdifferential_map: g must live on the kernel's X grid")?;
    let (dual, argmax) = conjugate_with_argmax(g, &k.transpose())?;
    let (nx, ny) = (k.x_grid().len(), k.y_grid().len());
    let mut of_x = vec![Vec::new(); nx];
    let mut inverse = vec![Vec::new(); ny];
    for y in 0..ny {
        if !dual.get(y).is_finite() {
            continue;
        }
        for &x in &argmax[y] {
            if k.eval(x, y).is_finite() && g.get(x).is_finite() {
                inverse[y].push(x);
                of_x[x].push(y);
            }
        }
    }
    Ok(SubdiffMap { of_x, inverse })
}

/// Advisory label for properties that a finite grid can only sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Evidence {
    Evidence,
    Violation,
    NotAssessed,
}

impl Evidence {
    pub fn holds(self) -> bool {
        self == Evidence::Evidence
    }

    /// Any violation wins; all-unassessed stays unassessed.
    pub fn combine(items: impl IntoIterator<Item = Evidence>) -> Evidence {
        let mut out = Evidence::NotAssessed;
        for e in items {
            match e {
                Evidence::Violation => return Evidence::Violation,
                Evidence::Evidence => out = Evidence::Evidence,
                Evidence::NotAssessed => {}
            }
        }
        out
    }

    fn from_bool(ok: bool) -> Evidence {
        if ok {
            Evidence::Evidence
        } else {
            Evidence::Violation
        }
    }
}

/// Which grid sides emulate an unbounded space, and how wide the outer band
/// near those sides is (as a fraction of the axis length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub margin: f64,
    /// Per axis: `(lower side unbounded, upper side unbounded)`.
    pub unbounded: Vec<(bool, bool)>,
}

impl Window {
    pub fn open(dim: usize, margin: f64) -> Self {
        Window { margin, unbounded: vec![(true, true); dim] }
    }

    /// `[lo, +∞)` emulation on a 1-D grid.
    pub fn half_line(margin: f64) -> Self {
        Window { margin, unbounded: vec![(false, true)] }
    }

    fn sides(&self, k: usize) -> (bool, bool) {
        self.unbounded.get(k).copied().unwrap_or((true, true))
    }

    /// Whether node `idx` lies in the inner window.
    pub fn is_inner(&self, grid: &Grid, idx: usize) -> bool {
        let p = grid.point(idx);
        grid.axes().iter().enumerate().all(|(k, a)| {
            let len = a.hi() - a.lo();
            let (lo_open, hi_open) = self.sides(k);
            (!lo_open || p[k] >= a.lo() + self.margin * len) && (!hi_open || p[k] <= a.hi() - self.margin * len)
        })
    }

    /// Whether node `idx` sits on a side that emulates infinity.
    pub fn on_open_edge(&self, grid: &Grid, idx: usize) -> bool {
        let mi = grid.multi_index(idx);
        grid.axes().iter().enumerate().any(|(k, a)| {
            let (lo_open, hi_open) = self.sides(k);
            a.len() > 1 && ((lo_open && mi[k] == 0) || (hi_open && mi[k] == a.len() - 1))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoercivityConfig {
    pub x_window: Window,
    pub y_window: Window,
    /// Sublevel thresholds as fractions of the observed range.
    pub fractions: Vec<f64>,
    pub radius: usize,
}

impl CoercivityConfig {
    pub fn new(x_dim: usize, y_dim: usize, margin: f64) -> Self {
        CoercivityConfig {
            x_window: Window::open(x_dim, margin),
            y_window: Window::open(y_dim, margin),
            fractions: vec![0.05, 0.1, 0.25],
            radius: 1,
        }
    }

    pub fn for_kernel(k: &Kernel, margin: f64) -> Self {
        CoercivityConfig::new(k.x_grid().dim(), k.y_grid().dim(), margin)
    }

    fn validate(&self) -> Result<()> {
        for m in [self.x_window.margin, self.y_window.margin] {
            if !(m > 0.0 && m < 0.5) {
                return Err(Error::InvalidParameter(format!("window margin {m} not in (0, 1/2)")));
            }
        }
        if self.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidParameter("fractions must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCoercivity {
    pub x: usize,
    pub coercive: Evidence,
    pub upper_coercive: Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub nodes: Vec<NodeCoercivity>,
    pub coercive: Evidence,
    /// On a grid every neighbourhood is already finite, so this coincides
    /// with `coercive`.
    pub strongly_coercive: Evidence,
    pub upper_coercive: Evidence,
}

/// Samples `b_{x,V}(y) = max_{z∈V} b(z,y) - b(x,y)` with `V` the stencil ball
/// around each X node, and checks that its sublevel sets stay in the inner
/// window of Y. X nodes on sides that emulate infinity are not assessed,
/// except on single-node axes.
pub fn coercivity_report(k: &Kernel, cfg: &CoercivityConfig) -> Result<CoercivityReport> {
    cfg.validate()?;
    let (xg, yg) = (k.x_grid(), k.y_grid());
    let ny = yg.len();
    let inner: Vec<bool> = (0..ny).map(|j| cfg.y_window.is_inner(yg, j)).collect();
    let nodes: Vec<NodeCoercivity> = (0..xg.len())
        .map(|x| {
            if cfg.x_window.on_open_edge(xg, x) {
                return NodeCoercivity { x, coercive: Evidence::NotAssessed, upper_coercive: Evidence::NotAssessed };
            }
            let ball = xg.ball(x, cfg.radius);
            let bxv: Vec<ExtReal> = (0..ny)
                .map(|y| {
                    let top = ball.iter().fold(ExtReal::NEG_INF, |m, &z| m.oplus(k.eval(z, y)));
                    top - k.eval(x, y)
                })
                .collect();
            let (lo, hi) = finite_range(&bxv);
            let mut coercive = true;
            let mut upper = true;
            for &frac in &cfg.fractions {
                let beta = lo + frac * (hi - lo);
                let sub: Vec<usize> = (0..ny).filter(|&y| bxv[y].value() <= beta).collect();
                coercive &= sub.iter().all(|&y| inner[y]);
                let arg = sub.iter().copied().max_by(|&a, &b| k.eval(x, a).cmp(&k.eval(x, b)));
                upper &= arg.is_none_or(|y| inner[y] || sub.iter().any(|&z| inner[z] && k.eval(x, z) == k.eval(x, y)));
            }
            NodeCoercivity { x, coercive: Evidence::from_bool(coercive), upper_coercive: Evidence::from_bool(upper) }
        })
        .collect();
    let coercive = Evidence::combine(nodes.iter().map(|n| n.coercive));
    let upper_coercive = Evidence::combine(nodes.iter().map(|n| n.upper_coercive));
    let coercive = if coercive == Evidence::NotAssessed { Evidence::Violation } else { coercive };
    let upper_coercive = if upper_coercive == Evidence::NotAssessed { Evidence::Violation } else { upper_coercive };
    Ok(CoercivityReport { nodes, coercive, strongly_coercive: coercive, upper_coercive })
}

fn finite_range(v: &[ExtReal]) -> (f64, f64) {
    v.iter()
        .filter_map(|t| t.finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)))
}

/// Per X node: do the superlevel sets of `y ↦ b(x,y) - f(y)` stay in the
/// inner window of Y?
pub fn fc_membership(f: &GridFn, k: &Kernel, cfg: &CoercivityConfig) -> Result<Vec<Evidence>> {
    cfg.validate()?;
    f.grid().ensure_same(k.y_grid(), "fc_membership: f must live on the kernel's Y grid")?;
    let yg = k.y_grid();
    let ny = yg.len();
    let inner: Vec<bool> = (0..ny).map(|j| cfg.y_window.is_inner(yg, j)).collect();
    Ok((0..k.x_grid().len())
        .map(|x| {
            let h: Vec<ExtReal> = (0..ny).map(|y| k.eval(x, y) - f.get(y)).collect();
            let (lo, hi) = finite_range(&h);
            let ok = cfg.fractions.iter().all(|&frac| {
                let beta = hi - frac * (hi - lo);
                (0..ny)
                    .filter(|&y| h[y].is_pos_inf() || (h[y].is_finite() && h[y].value() >= beta))
                    .all(|y| inner[y])
            });
            Evidence::from_bool(ok)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn identity_kernel(n: usize) -> Kernel {
        let g = Grid::line(0.0, (n - 1) as f64, n).unwrap();
        Kernel::from_fn(g.clone(), g, |x, y| if x == y { ExtReal::ZERO } else { ExtReal::NEG_INF }).unwrap()
    }

    fn three() -> Grid {
        Grid::line(-1.0, 1.0, 3).unwrap()
    }

    #[test]
    fn kernel_validation() {
        let g = Grid::line(0.0, 1.0, 2).unwrap();
        let inf = ExtReal::POS_INF;
        let ninf = ExtReal::NEG_INF;
        let z = ExtReal::ZERO;
        assert!(Kernel::table(g.clone(), g.clone(), vec![vec![z, inf], vec![z, z]]).is_err());
        assert!(Kernel::table(g.clone(), g.clone(), vec![vec![ninf, ninf], vec![z, z]]).is_err());
        assert!(Kernel::table(g.clone(), g.clone(), vec![vec![z, ninf], vec![z, ninf]]).is_err());
        assert!(Kernel::table(g.clone(), g.clone(), vec![vec![z], vec![z, z]]).is_err());
        assert!(Kernel::bilinear(g.clone(), Grid::plane((0.0, 1.0, 2), (0.0, 1.0, 2)).unwrap()).is_err());
    }

    #[test]
    fn kernel_json() {
        let s: KernelSpec = serde_json::from_str(r#"{"type":"bilinear"}"#).unwrap();
        assert_eq!(s, KernelSpec::Bilinear);
        let t: KernelSpec = serde_json::from_str(r#"{"type":"table","rows":[[0,"-inf"],["-inf",0]]}"#).unwrap();
        let k = Kernel::from_spec(&t, Grid::line(0.0, 1.0, 2).unwrap(), Grid::line(0.0, 1.0, 2).unwrap()).unwrap();
        assert_eq!(k, identity_kernel(2));
        assert_eq!(k.spec(), t);
    }

    #[test]
    fn identity_kernel_negates() {
        let k = identity_kernel(2);
        let f = GridFn::from_f64(k.y_grid().clone(), &[2.0, 5.0]).unwrap();
        let bf = conjugate(&f, &k).unwrap();
        assert_eq!(bf.values(), &[ExtReal::new(-2.0), ExtReal::new(-5.0)]);
    }

    #[test]
    fn bilinear_three_nodes() {
        let k = Kernel::bilinear(three(), three()).unwrap();
        let f = GridFn::sample(&three(), |y| ExtReal::new(y[0] * y[0] / 2.0));
        let bf = conjugate(&f, &k).unwrap();
        assert_eq!(bf.values(), &[ExtReal::new(0.5), ExtReal::ZERO, ExtReal::new(0.5)]);
    }

    #[test]
    fn empty_domain_gives_minus_infinity() {
        let k = Kernel::bilinear(three(), three()).unwrap();
        let f = GridFn::constant(&three(), ExtReal::POS_INF);
        assert!(conjugate(&f, &k).unwrap().values().iter().all(|v| v.is_neg_inf()));
        assert_eq!(legendre_fast(&f, &three()), Err(Error::NoFiniteValue));
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let k = Kernel::bilinear(three(), three()).unwrap();
        let f = GridFn::constant(&Grid::line(0.0, 1.0, 3).unwrap(), ExtReal::ZERO);
        assert!(matches!(conjugate(&f, &k), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn fast_legendre_examples() {
        let y = Grid::line(-1.0, 1.0, 101).unwrap();
        let f = GridFn::sample(&y, |p| ExtReal::new(p[0] * p[0] / 2.0));
        let slow = conjugate(&f, &Kernel::bilinear(y.clone(), y.clone()).unwrap()).unwrap();
        assert!(legendre_fast(&f, &y).unwrap().is_bitwise_eq(&slow));

        let y = Grid::line(-2.0, 2.0, 41).unwrap();
        let f = GridFn::sample(&y, |p| ExtReal::new(p[0].abs()));
        let fast = legendre_fast(&f, &y).unwrap();
        let slow = conjugate(&f, &Kernel::bilinear(y.clone(), y.clone()).unwrap()).unwrap();
        assert!(fast.is_bitwise_eq(&slow));
        assert_eq!(fast.get(40), ExtReal::new(2.0));
        for i in 0..41 {
            let x = y.coord(i);
            if x.abs() <= 1.0 + 1e-12 {
                assert!(fast.get(i).value().abs() < 1e-12, "x = {x}: {}", fast.get(i));
            }
        }

        let y = Grid::line(-1.0, 1.0, 11).unwrap();
        let x = Grid::line(0.0, 0.0, 1).unwrap();
        let f = GridFn::constant(&y, ExtReal::ZERO);
        assert_eq!(legendre_fast(&f, &x).unwrap().get(0), ExtReal::ZERO);
    }

    #[test]
    fn fast_legendre_with_minus_infinity() {
        let y = Grid::line(-1.0, 1.0, 5).unwrap();
        let f = GridFn::from_f64(y.clone(), &[INF, 0.0, -INF, 1.0, INF]).unwrap();
        let slow = conjugate(&f, &Kernel::bilinear(y.clone(), y.clone()).unwrap()).unwrap();
        assert!(legendre_fast(&f, &y).unwrap().is_bitwise_eq(&slow));
        assert!(slow.values().iter().all(|v| v.is_pos_inf()));
    }

    #[test]
    fn subdifferential_examples() {
        let k = Kernel::bilinear(three(), three()).unwrap();
        let g = GridFn::sample(&three(), |x| ExtReal::new(x[0] * x[0] / 2.0));
        let m = subdifferential_map(&g, &k).unwrap();
        assert_eq!(m.of_x[1], vec![1]);
        assert!(m.is_consistent());

        let k = identity_kernel(3);
        let g = GridFn::from_f64(k.x_grid().clone(), &[1.0, -2.0, 4.0]).unwrap();
        let m = subdifferential_map(&g, &k).unwrap();
        assert_eq!(m.of_x, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(m.inverse, vec![vec![0], vec![1], vec![2]]);

        let g2 = Grid::line(0.0, 1.0, 2).unwrap();
        let k = Kernel::from_fn(g2.clone(), g2.clone(), |_, _| ExtReal::ZERO).unwrap();
        let m = subdifferential_map(&GridFn::constant(&g2, ExtReal::ZERO), &k).unwrap();
        assert_eq!(m.of_x, vec![vec![0, 1], vec![0, 1]]);
        assert_eq!(m.inverse, vec![vec![0, 1], vec![0, 1]]);
    }

    #[test]
    fn coercivity_examples() {
        let x = Grid::line(0.1, 1.0, 10).unwrap();
        let y = Grid::line(-0.5, 3.0, 36).unwrap();
        let k = Kernel::bilinear(x, y).unwrap();
        let mut cfg = CoercivityConfig::for_kernel(&k, 0.1);
        cfg.y_window = Window::half_line(0.1);
        let r = coercivity_report(&k, &cfg).unwrap();
        assert_eq!(r.coercive, Evidence::Evidence);
        assert_eq!(r.strongly_coercive, Evidence::Evidence);
        assert_eq!(r.upper_coercive, Evidence::Evidence);

        let g = Grid::line(-1.0, 1.0, 11).unwrap();
        let k = Kernel::from_fn(g.clone(), g.clone(), |_, _| ExtReal::ZERO).unwrap();
        let r = coercivity_report(&k, &CoercivityConfig::for_kernel(&k, 0.1)).unwrap();
        assert_eq!(r.coercive, Evidence::Violation);

        let k = Kernel::bilinear(Grid::line(0.0, 0.0, 1).unwrap(), g).unwrap();
        let r = coercivity_report(&k, &CoercivityConfig::for_kernel(&k, 0.1)).unwrap();
        assert_eq!(r.coercive, Evidence::Violation);

        assert!(coercivity_report(&k, &CoercivityConfig::for_kernel(&k, 0.5)).is_err());
    }

    #[test]
    fn fc_examples() {
        let y = Grid::line(-5.0, 5.0, 101).unwrap();
        let x = Grid::line(-1.0, 1.0, 5).unwrap();
        let k = Kernel::bilinear(x, y.clone()).unwrap();
        let cfg = CoercivityConfig::for_kernel(&k, 0.1);
        let quad = GridFn::sample(&y, |p| ExtReal::new(p[0] * p[0]));
        assert!(fc_membership(&quad, &k, &cfg).unwrap().iter().all(|e| e.holds()));
        let zero = GridFn::constant(&y, ExtReal::ZERO);
        assert_eq!(fc_membership(&zero, &k, &cfg).unwrap()[4], Evidence::Violation);
        let top = GridFn::constant(&y, ExtReal::POS_INF);
        assert!(fc_membership(&top, &k, &cfg).unwrap().iter().all(|e| e.holds()));
    }
}
