//! Uniform rectangular grids in one or two dimensions and functions sampled on them.
//!
//! Topology on a grid is emulated by stencil balls: the ball of radius `r`
//! around a node is the set of nodes whose multi-index differs by at most `r`
//! along every axis.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite bounds [{lo}, {hi}]")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("axis needs at least one node".into()));
        }
        if lo > hi {
            return Err(Error::InvalidGrid(format!("lo {lo} > hi {hi}")));
        }
        if lo == hi && n != 1 {
            return Err(Error::InvalidGrid(format!("degenerate axis [{lo}, {hi}] with {n} nodes")));
        }
        Ok(Axis { lo, hi, n })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        if self.n == 1 {
            0.0
        } else {
            (self.hi - self.lo) / (self.n - 1) as f64
        }
    }

    /// Coordinate of node `i`, always `lo + i * h` in that order.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.lo + (i as f64) * self.step()
    }

    /// Index of the node nearest to `t`, clamped to the axis.
    pub fn nearest(&self, t: f64) -> usize {
        if self.n == 1 {
            return 0;
        }
        let k = ((t - self.lo) / self.step()).round();
        if k <= 0.0 {
            0
        } else if k >= (self.n - 1) as f64 {
            self.n - 1
        } else {
            k as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {}", axes.len())));
        }
        Ok(Grid { axes })
    }

    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Grid::new(vec![Axis::new(lo, hi, n)?])
    }

    pub fn plane(x: (f64, f64, usize), y: (f64, f64, usize)) -> Result<Self> {
        Grid::new(vec![Axis::new(x.0, x.1, x.2)?, Axis::new(y.0, y.1, y.2)?])
    }

    /// Uniform 1-D grid with spacing `h` from `lo` to `hi`; `(hi - lo) / h` must be
    /// an integer up to rounding.
    pub fn with_step(lo: f64, hi: f64, h: f64) -> Result<Self> {
        let k = ((hi - lo) / h).round();
        if !(h > 0.0) || ((hi - lo) / h - k).abs() > 1e-9 {
            return Err(Error::InvalidGrid(format!("[{lo}, {hi}] is not a multiple of {h}")));
        }
        Grid::line(lo, hi, k as usize + 1)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major multi-index; the last axis varies fastest.
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        match self.axes.len() {
            1 => [idx, 0],
            _ => [idx / self.axes[1].n, idx % self.axes[1].n],
        }
    }

    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        match self.axes.len() {
            1 => mi[0],
            _ => mi[0] * self.axes[1].n + mi[1],
        }
    }

    /// Coordinates of a node; the second component is 0 on 1-D grids.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let mi = self.multi_index(idx);
        match self.axes.len() {
            1 => [self.axes[0].coord(mi[0]), 0.0],
            _ => [self.axes[0].coord(mi[0]), self.axes[1].coord(mi[1])],
        }
    }

    /// First coordinate of a node (the coordinate, on 1-D grids).
    #[inline]
    pub fn coord(&self, idx: usize) -> f64 {
        self.point(idx)[0]
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.coord(i)).collect()
    }

    /// Nodes of the stencil ball of `radius` around `idx`, including `idx`, in
    /// increasing index order.
    pub fn ball(&self, idx: usize, radius: usize) -> Vec<usize> {
        let mi = self.multi_index(idx);
        let range = |k: usize| {
            let n = self.axes[k].n;
            let lo = mi[k].saturating_sub(radius);
            let hi = (mi[k] + radius).min(n - 1);
            lo..=hi
        };
        match self.axes.len() {
            1 => range(0).collect(),
            _ => {
                let mut out = Vec::new();
                for i in range(0) {
                    for j in range(1) {
                        out.push(self.flat_index([i, j]));
                    }
                }
                out
            }
        }
    }

    /// Whether node `idx` lies on the outer boundary of the grid along some axis.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        self.axes
            .iter()
            .enumerate()
            .any(|(k, a)| a.n > 1 && (mi[k] == 0 || mi[k] == a.n - 1))
    }

    pub fn nearest(&self, p: [f64; 2]) -> usize {
        let i = self.axes[0].nearest(p[0]);
        match self.axes.len() {
            1 => i,
            _ => self.flat_index([i, self.axes[1].nearest(p[1])]),
        }
    }

    pub fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(what.to_string()))
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrTwo<T> {
    One(T),
    Two(Vec<T>),
}

impl<T: Copy> OneOrTwo<T> {
    fn get(&self) -> Vec<T> {
        match self {
            OneOrTwo::One(v) => vec![*v],
            OneOrTwo::Two(v) => v.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    lo: OneOrTwo<f64>,
    hi: OneOrTwo<f64>,
    n: OneOrTwo<usize>,
    dim: usize,
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = if self.dim() == 1 {
            let a = self.axes[0];
            GridRepr { lo: OneOrTwo::One(a.lo), hi: OneOrTwo::One(a.hi), n: OneOrTwo::One(a.n), dim: 1 }
        } else {
            GridRepr {
                lo: OneOrTwo::Two(self.axes.iter().map(|a| a.lo).collect()),
                hi: OneOrTwo::Two(self.axes.iter().map(|a| a.hi).collect()),
                n: OneOrTwo::Two(self.axes.iter().map(|a| a.n).collect()),
                dim: self.dim(),
            }
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Grid, D::Error> {
        use serde::de::Error as _;
        let repr = GridRepr::deserialize(d)?;
        let (lo, hi, n) = (repr.lo.get(), repr.hi.get(), repr.n.get());
        if lo.len() != repr.dim || hi.len() != repr.dim || n.len() != repr.dim {
            return Err(D::Error::custom(format!("grid fields do not match dim = {}", repr.dim)));
        }
        let axes = (0..repr.dim)
            .map(|k| Axis::new(lo[k], hi[k], n[k]))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Grid::new(axes).map_err(D::Error::custom)
    }
}

/// Advisory semicontinuity role of a grid function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Lsc,
    Usc,
    #[default]
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFn {
    grid: Grid,
    values: Vec<ExtReal>,
    #[serde(skip_serializing_if = "is_plain")]
    tag: Tag,
}

fn is_plain(t: &Tag) -> bool {
    *t == Tag::Plain
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFnRepr {
    grid: Grid,
    values: Vec<ExtReal>,
    #[serde(default)]
    tag: Tag,
}

impl<'de> Deserialize<'de> for GridFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<GridFn, D::Error> {
        use serde::de::Error as _;
        let r = GridFnRepr::deserialize(d)?;
        GridFn::new(r.grid, r.values).map(|f| f.with_tag(r.tag)).map_err(D::Error::custom)
    }
}

impl GridFn {
    pub fn new(grid: Grid, values: Vec<ExtReal>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFn { grid, values, tag: Tag::Plain })
    }

    pub fn from_f64(grid: Grid, values: &[f64]) -> Result<Self> {
        let v = values.iter().map(|&x| ExtReal::try_new(x)).collect::<Result<Vec<_>>>()?;
        GridFn::new(grid, v)
    }

    /// Samples `f` at every node.
    pub fn sample(grid: &Grid, f: impl Fn([f64; 2]) -> ExtReal) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        GridFn { grid: grid.clone(), values, tag: Tag::Plain }
    }

    pub fn constant(grid: &Grid, c: ExtReal) -> Self {
        GridFn { grid: grid.clone(), values: vec![c; grid.len()], tag: Tag::Plain }
    }

    /// Max-plus characteristic function: 0 on `set`, `-∞` elsewhere.
    pub fn indicator(grid: &Grid, set: &[usize]) -> Self {
        let mut values = vec![ExtReal::NEG_INF; grid.len()];
        for &i in set {
            values[i] = ExtReal::ZERO;
        }
        GridFn { grid: grid.clone(), values, tag: Tag::Plain }
    }

    pub fn with_tag(mut self, tag: Tag) -> Self {
        self.tag = tag;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> ExtReal {
        self.values[i]
    }

    pub fn map(&self, f: impl Fn(ExtReal) -> ExtReal) -> GridFn {
        GridFn { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect(), tag: self.tag }
    }

    pub fn zip_with(&self, other: &GridFn, f: impl Fn(ExtReal, ExtReal) -> ExtReal) -> Result<GridFn> {
        self.grid.ensure_same(&other.grid, "zip_with")?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFn { grid: self.grid.clone(), values, tag: Tag::Plain })
    }

    /// Pointwise max-plus sum `φ ∨ ψ`.
    pub fn sup(&self, other: &GridFn) -> Result<GridFn> {
        self.zip_with(other, ExtReal::oplus)
    }

    /// Adds a scalar to every value.
    pub fn shift(&self, c: ExtReal) -> GridFn {
        self.map(|v| v.otimes(c))
    }

    pub fn is_bitwise_eq(&self, other: &GridFn) -> bool {
        self.grid == other.grid
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Whether `self <= other` at every node.
    pub fn le(&self, other: &GridFn) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    pub fn max_value(&self) -> ExtReal {
        self.values.iter().copied().fold(ExtReal::NEG_INF, ExtReal::oplus)
    }

    pub fn min_value(&self) -> ExtReal {
        self.values.iter().copied().fold(ExtReal::POS_INF, ExtReal::min)
    }

    /// Stencil max (`usc` hull when `within` is all nodes) over `within`.
    pub fn stencil_max(&self, radius: usize, within: &[bool]) -> Vec<ExtReal> {
        self.stencil_fold(radius, within, ExtReal::NEG_INF, ExtReal::oplus)
    }

    /// Stencil min over `within`.
    pub fn stencil_min(&self, radius: usize, within: &[bool]) -> Vec<ExtReal> {
        self.stencil_fold(radius, within, ExtReal::POS_INF, ExtReal::min)
    }

    fn stencil_fold(
        &self,
        radius: usize,
        within: &[bool],
        init: ExtReal,
        op: impl Fn(ExtReal, ExtReal) -> ExtReal,
    ) -> Vec<ExtReal> {
        (0..self.len())
            .map(|i| {
                self.grid
                    .ball(i, radius)
                    .into_iter()
                    .filter(|&j| within[j])
                    .fold(init, |acc, j| op(acc, self.values[j]))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainMask {
    pub ldom: Vec<bool>,
    pub udom: Vec<bool>,
    pub dom: Vec<bool>,
    pub idom: Vec<bool>,
}

impl DomainMask {
    pub fn nodes(mask: &[bool]) -> Vec<usize> {
        mask.iter().enumerate().filter_map(|(i, &m)| m.then_some(i)).collect()
    }
}

/// `ldom`, `udom`, `dom` and `idom` of `g`; `idom` uses a stencil limsup of
/// `radius` (radius 0 gives `idom = dom`).
pub fn domain_masks(g: &GridFn, radius: usize) -> DomainMask {
    let ldom: Vec<bool> = g.values.iter().map(|v| !v.is_pos_inf()).collect();
    let udom: Vec<bool> = g.values.iter().map(|v| !v.is_neg_inf()).collect();
    let dom: Vec<bool> = ldom.iter().zip(&udom).map(|(a, b)| *a && *b).collect();
    let all = vec![true; g.len()];
    let limsup = g.stencil_max(radius, &all);
    let idom = dom.iter().zip(&limsup).map(|(&d, l)| d && !l.is_pos_inf()).collect();
    DomainMask { ldom, udom, dom, idom }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn axis_validation() {
        assert!(Axis::new(0.0, 1.0, 0).is_err());
        assert!(Axis::new(1.0, 0.0, 3).is_err());
        assert!(Axis::new(1.0, 1.0, 3).is_err());
        assert!(Axis::new(1.0, 1.0, 1).is_ok());
        assert!(Axis::new(0.0, f64::NAN, 3).is_err());
        let a = Axis::new(-1.0, 1.0, 101).unwrap();
        assert_eq!(a.coord(0), -1.0);
        assert_eq!(a.coord(37), -1.0 + 37.0 * (2.0 / 100.0));
        assert_eq!(a.nearest(0.013), 51);
        assert_eq!(a.nearest(-7.0), 0);
    }

    #[test]
    fn balls_in_two_dimensions() {
        let g = Grid::plane((0.0, 1.0, 3), (0.0, 2.0, 3)).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.ball(4, 1).len(), 9);
        assert_eq!(g.ball(0, 1), vec![0, 1, 3, 4]);
        assert_eq!(g.point(5), [0.5, 2.0]);
        assert!(!g.on_boundary(4));
        assert!(g.on_boundary(3));
    }

    #[test]
    fn masks_of_constant_function() {
        let g = GridFn::constant(&Grid::line(0.0, 4.0, 5).unwrap(), ExtReal::ZERO);
        let m = domain_masks(&g, 1);
        assert!(m.ldom.iter().chain(&m.udom).chain(&m.dom).chain(&m.idom).all(|&b| b));
    }

    #[test]
    fn masks_with_infinities() {
        let g = GridFn::from_f64(Grid::line(0.0, 4.0, 5).unwrap(), &[INF, 1.0, 2.0, INF, -INF]).unwrap();
        let m = domain_masks(&g, 1);
        assert_eq!(m.ldom, vec![false, true, true, false, true]);
        assert_eq!(m.udom, vec![true, true, true, true, false]);
        assert_eq!(m.dom, vec![false, true, true, false, false]);
        assert_eq!(m.idom, vec![false; 5]);
        // no stencil: idom = dom
        assert_eq!(domain_masks(&g, 0).idom, m.dom);
    }

    #[test]
    fn gridfn_json_shape() {
        let f = GridFn::from_f64(Grid::line(0.0, 1.0, 3).unwrap(), &[-INF, 0.5, INF]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"grid":{"lo":0.0,"hi":1.0,"n":3,"dim":1},"values":["-inf",0.5,"+inf"]}"#);
        let back: GridFn = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<GridFn>(r#"{"grid":{"lo":0,"hi":1,"n":3,"dim":1},"values":[1]}"#).is_err());
        let plane = r#"{"grid":{"lo":[0,0],"hi":[1,1],"n":[2,2],"dim":2},"values":[0,1,2,"+inf"]}"#;
        let p: GridFn = serde_json::from_str(plane).unwrap();
        assert_eq!(p.grid().dim(), 2);
    }

    fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(
            prop_oneof![1 => Just(INF), 1 => Just(-INF), 6 => -10.0f64..10.0],
            n,
        )
    }

    proptest! {
        #[test]
        fn masks_are_monotone(a in values(12), d in proptest::collection::vec(0.0f64..5.0, 12), r in 0usize..3) {
            let grid = Grid::line(0.0, 1.0, 12).unwrap();
            let g1 = GridFn::from_f64(grid.clone(), &a).unwrap();
            // g2 >= g1 pointwise
            let b: Vec<f64> = a.iter().zip(&d).map(|(x, y)| x + y).collect();
            let g2 = GridFn::from_f64(grid, &b).unwrap();
            let (m1, m2) = (domain_masks(&g1, r), domain_masks(&g2, r));
            for i in 0..12 {
                prop_assert!(!m2.ldom[i] || m1.ldom[i]);
                prop_assert!(!m1.udom[i] || m2.udom[i]);
                prop_assert!(!m1.idom[i] || m1.dom[i]);
            }
        }
    }
}
