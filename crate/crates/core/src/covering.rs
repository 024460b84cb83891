//! Existence and uniqueness of pre-images `f` with `Bf ≤ g` and `Bf = g` on
//! `X'`, decided through coverings by inverse subdifferentials of `g`.
//!
//! Pre-images are sought among maps `Y → ℝ ∪ {+∞}`. Under that convention a
//! target node `x` with `g(x) = +∞` can never be attained, which is why
//! [`subdifferential_map`] only lets finite `g(x)` enter a piece.

use serde::{Deserialize, Serialize};

use crate::conjugacy::{conjugate, dual_conjugate, subdifferential_map, Kernel};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::grid::{domain_masks, DomainMask, Grid, GridFn, Tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub y: usize,
    pub xs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub radius: usize,
    /// `X' ∩ udom g`.
    pub target: Vec<usize>,
    /// `B°g`.
    pub dual: GridFn,
    /// `(∂°g)⁻¹(y)` for every `y ∈ ldom B°g`.
    pub pieces: Vec<Piece>,
    pub covered: bool,
    pub uncovered: Vec<usize>,
    pub alg_essential: Vec<usize>,
    pub top_essential: Vec<usize>,
    /// `Z_a ∪ int Z_t`, the interior taken relative to `dom B°g`.
    pub z: Vec<usize>,
    /// Nodes of `z` next to a node of `dom B°g` outside `z`, or on the grid edge.
    pub z_boundary: Vec<usize>,
    pub minimal_alg: bool,
    pub minimal_top: bool,
}

impl CoveringReport {
    pub fn piece(&self, y: usize) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.y == y)
    }

    /// Whether the target is still covered once the pieces indexed by `removed`
    /// are dropped.
    pub fn covers_without(&self, removed: &[usize]) -> bool {
        self.target.iter().all(|&x| {
            self.pieces.iter().any(|p| !removed.contains(&p.y) && p.xs.contains(&x))
        })
    }
}

fn check_nodes(grid: &Grid, nodes: &[usize], what: &str) -> Result<()> {
    match nodes.iter().find(|&&i| i >= grid.len()) {
        Some(i) => Err(Error::InvalidParameter(format!("{what}: node {i} outside a grid of {}", grid.len()))),
        None => Ok(()),
    }
}

pub fn build_covering(g: &GridFn, k: &Kernel, xprime: &[usize], radius: usize) -> Result<CoveringReport> {
    check_nodes(k.x_grid(), xprime, "X'")?;
    let dual = dual_conjugate(g, k)?;
    let sub = subdifferential_map(g, k)?;
    let yg = k.y_grid();
    let ny = yg.len();

    let mut target: Vec<usize> = xprime.iter().copied().filter(|&x| !g.get(x).is_neg_inf()).collect();
    target.sort_unstable();
    target.dedup();

    let in_pieces: Vec<bool> = (0..ny).map(|y| !dual.get(y).is_pos_inf()).collect();
    let pieces: Vec<Piece> = (0..ny)
        .filter(|&y| in_pieces[y])
        .map(|y| Piece { y, xs: sub.inverse[y].clone() })
        .collect();

    // coverers of each target node
    let coverers: Vec<Vec<usize>> = target
        .iter()
        .map(|&x| sub.of_x[x].iter().copied().filter(|&y| in_pieces[y]).collect())
        .collect();
    let uncovered: Vec<usize> =
        target.iter().zip(&coverers).filter(|(_, c)| c.is_empty()).map(|(&x, _)| x).collect();
    let covered = uncovered.is_empty();

    let mut alg = vec![false; ny];
    let mut top = vec![false; ny];
    for c in coverers.iter().filter(|c| !c.is_empty()) {
        if c.len() == 1 {
            alg[c[0]] = true;
        }
        // y is topologically essential through this node iff every coverer
        // lies in the ball around y, i.e. y sits in the box below
        let mis: Vec<[usize; 2]> = c.iter().map(|&y| yg.multi_index(y)).collect();
        let mut bounds = [(0usize, 0usize); 2];
        let mut empty = false;
        for (a, b) in bounds.iter_mut().enumerate().take(yg.dim()) {
            let hi_idx = mis.iter().map(|m| m[a]).max().unwrap();
            let lo_idx = mis.iter().map(|m| m[a]).min().unwrap();
            let from = hi_idx.saturating_sub(radius);
            let to = (lo_idx + radius).min(yg.axis(a).len() - 1);
            if from > to {
                empty = true;
            }
            *b = (from, to);
        }
        if empty {
            continue;
        }
        if yg.dim() == 1 {
            for y in bounds[0].0..=bounds[0].1 {
                top[y] |= in_pieces[y];
            }
        } else {
            for i in bounds[0].0..=bounds[0].1 {
                for j in bounds[1].0..=bounds[1].1 {
                    let y = yg.flat_index([i, j]);
                    top[y] |= in_pieces[y];
                }
            }
        }
    }

    let dom: Vec<bool> = (0..ny).map(|y| dual.get(y).is_finite()).collect();
    let interior = |y: usize| top[y] && yg.ball(y, radius).into_iter().filter(|&z| dom[z]).all(|z| top[z]);
    let z: Vec<usize> = (0..ny).filter(|&y| in_pieces[y] && (alg[y] || interior(y))).collect();
    let in_z = {
        let mut m = vec![false; ny];
        for &y in &z {
            m[y] = true;
        }
        m
    };
    let z_boundary = z
        .iter()
        .copied()
        .filter(|&y| yg.on_boundary(y) || yg.ball(y, radius.max(1)).into_iter().any(|w| dom[w] && !in_z[w]))
        .collect();

    let nodes = |m: &[bool]| (0..ny).filter(|&y| m[y]).collect::<Vec<_>>();
    let alg_essential = nodes(&alg);
    let top_essential = nodes(&top);
    let minimal_alg = alg_essential.len() == pieces.len();
    let minimal_top = top_essential.len() == pieces.len();
    Ok(CoveringReport {
        radius,
        target,
        dual,
        pieces,
        covered,
        uncovered,
        alg_essential,
        top_essential,
        z,
        z_boundary,
        minimal_alg,
        minimal_top,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiContinuity {
    pub holds: bool,
    /// First node of `dom f` where the hull differs from `f`.
    pub witness: Option<usize>,
    pub max_deviation: f64,
}

/// Compares `f` with the lsc hull of its usc hull on `dom f`, using stencil
/// balls restricted to `dom f`.
pub fn quasicontinuity_check(f: &GridFn, radius: usize) -> QuasiContinuity {
    quasicontinuity_check_tol(f, radius, 0.0)
}

/// Same as [`quasicontinuity_check`], tolerating deviations up to `tol`.
pub fn quasicontinuity_check_tol(f: &GridFn, radius: usize, tol: f64) -> QuasiContinuity {
    let DomainMask { dom, .. } = domain_masks(f, 0);
    let usc = GridFn::new(f.grid().clone(), f.stencil_max(radius, &dom)).expect("same grid");
    let hull = usc.stencil_min(radius, &dom);
    let mut witness = None;
    let mut max_deviation = 0.0f64;
    for i in (0..f.len()).filter(|&i| dom[i]) {
        let dev = (hull[i] - f.get(i)).value().abs();
        if dev > tol && witness.is_none() {
            witness = Some(i);
        }
        max_deviation = max_deviation.max(dev);
    }
    QuasiContinuity { holds: witness.is_none(), witness, max_deviation }
}

/// Grid-resolution tolerance for [`quasicontinuity_check_tol`]: the median
/// absolute second difference of `f` over consecutive finite triples.
///
/// Smooth functions deviate from their stencil hulls by about one second
/// difference at strict local extrema, while isolated jumps dominate the
/// median-scale curvature.
pub fn resolution_tolerance(f: &GridFn) -> f64 {
    let grid = f.grid();
    let mut diffs = Vec::new();
    for idx in 0..f.len() {
        let mi = grid.multi_index(idx);
        for a in 0..grid.dim() {
            let n = grid.axis(a).len();
            if mi[a] == 0 || mi[a] + 1 >= n {
                continue;
            }
            let mut lo = mi;
            lo[a] -= 1;
            let mut hi = mi;
            hi[a] += 1;
            let (l, c, h) = (f.get(grid.flat_index(lo)), f.get(idx), f.get(grid.flat_index(hi)));
            if l.is_finite() && c.is_finite() && h.is_finite() {
                diffs.push((l.value() - 2.0 * c.value() + h.value()).abs());
            }
        }
    }
    if diffs.is_empty() {
        return 0.0;
    }
    diffs.sort_by(|a, b| a.total_cmp(b));
    diffs[diffs.len() / 2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreimageReport {
    /// Candidate `f`: `B°g` with `-∞` values lifted to `+∞`.
    pub f: GridFn,
    pub bf: GridFn,
    /// `max_X (Bf - g)`; must be `<= tol`.
    pub max_excess: ExtReal,
    /// `max_{X'} |Bf - g|` over nodes where both are finite.
    pub equality_residual: f64,
    /// Nodes of `X'` where `Bf` and `g` differ beyond `tol`.
    pub failing: Vec<usize>,
    pub pass: bool,
}

pub fn solve_preimage(g: &GridFn, k: &Kernel, xprime: &[usize], tol: f64) -> Result<PreimageReport> {
    check_nodes(k.x_grid(), xprime, "X'")?;
    let dual = dual_conjugate(g, k)?;
    let f = dual.map(|v| if v.is_neg_inf() { ExtReal::POS_INF } else { v }).with_tag(Tag::Lsc);
    let bf = conjugate(&f, k)?;
    let max_excess = (0..g.len())
        .map(|x| excess(bf.get(x), g.get(x)))
        .fold(ExtReal::NEG_INF, ExtReal::oplus);
    let mut equality_residual = 0.0f64;
    let mut failing = Vec::new();
    for &x in xprime {
        let (a, b) = (bf.get(x), g.get(x));
        if a.is_finite() && b.is_finite() {
            let d = (a.value() - b.value()).abs();
            equality_residual = equality_residual.max(d);
            if d > tol {
                failing.push(x);
            }
        } else if a != b {
            failing.push(x);
        }
    }
    let pass = max_excess.value() <= tol && failing.is_empty();
    Ok(PreimageReport { f, bf, max_excess, equality_residual, failing, pass })
}

/// `a - b` read as an excess: zero when `a = b` (including equal infinities).
fn excess(a: ExtReal, b: ExtReal) -> ExtReal {
    if a == b {
        ExtReal::ZERO
    } else if a.is_neg_inf() || b.is_pos_inf() {
        ExtReal::NEG_INF
    } else if a.is_pos_inf() || b.is_neg_inf() {
        ExtReal::POS_INF
    } else {
        a - b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Existence {
    Yes,
    No,
    YesIfAssumptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Uniqueness {
    Unique,
    NotUnique,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    /// A grid is a discrete space.
    pub y_discrete: bool,
    /// Superlevel sets of `b(x,·) - B°g` are finite, hence compact, on a grid.
    pub dual_in_fc: bool,
    pub quasi_continuous: QuasiContinuity,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub existence: Existence,
    pub uniqueness: Uniqueness,
    pub assumptions: AssumptionCheck,
    pub certificate: PreimageReport,
    pub covering: CoveringReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerdictConfig {
    /// Stencil radius; 0 treats the grid as a discrete space.
    pub radius: usize,
    /// Tolerance of the quasi-continuity check; `None` uses
    /// [`resolution_tolerance`] of `B°g`.
    pub qc_tolerance: Option<f64>,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        VerdictConfig { radius: 0, qc_tolerance: Some(0.0) }
    }
}

pub fn verdict(g: &GridFn, k: &Kernel, xprime: &[usize], cfg: &VerdictConfig) -> Result<Verdict> {
    let covering = build_covering(g, k, xprime, cfg.radius)?;
    let certificate = solve_preimage(g, k, xprime, 0.0)?;
    let tol = cfg.qc_tolerance.unwrap_or_else(|| resolution_tolerance(&covering.dual));
    let quasi_continuous = quasicontinuity_check_tol(&covering.dual, cfg.radius, tol);
    let assumptions = AssumptionCheck {
        y_discrete: true,
        dual_in_fc: true,
        quasi_continuous,
        note: "grid spaces are discrete, so the global assumption holds; uniqueness refers to the discretized problem"
            .into(),
    };
    let existence = if covering.covered || certificate.pass { Existence::Yes } else { Existence::No };
    let uniqueness = match existence {
        Existence::Yes if covering.covered && !covering.minimal_top => Uniqueness::NotUnique,
        Existence::Yes if covering.covered && assumptions.quasi_continuous.holds => Uniqueness::Unique,
        _ => Uniqueness::Unknown,
    };
    Ok(Verdict { existence, uniqueness, assumptions, certificate, covering })
}
