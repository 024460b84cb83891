//! Quasi-linear forms on grid functions: isotone, additively homogeneous
//! functionals `F` with `F(φ∨ψ) ≤ ρ + F(φ)∨F(ψ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conjugacy::Kernel;
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::grid::{Grid, GridFn, Tag};
use crate::special::{log_add_exp, log_phi, log_phi_bar, log_std_interval, log_sum_exp};

/// A real interval with independent endpoint closedness; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Span {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Span { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Span { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed { t >= self.lo } else { t > self.lo };
        let below = if self.hi_closed { t <= self.hi } else { t < self.hi };
        above && below
    }
}

/// A subset of `Y`: the grid nodes it contains and, for forms that live on the
/// real line, the union of disjoint continuum intervals it stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YSet {
    pub nodes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spans: Vec<Span>,
}

impl YSet {
    pub fn nodes(nodes: Vec<usize>) -> Self {
        YSet { nodes, spans: Vec::new() }
    }

    /// Nodes of a 1-D grid inside `span`, keeping the span.
    pub fn from_span(grid: &Grid, span: Span) -> Self {
        Self::from_spans(grid, vec![span])
    }

    /// `spans` must be pairwise disjoint.
    pub fn from_spans(grid: &Grid, spans: Vec<Span>) -> Self {
        let nodes = (0..grid.len()).filter(|&i| spans.iter().any(|s| s.contains(grid.coord(i)))).collect();
        YSet { nodes, spans }
    }

    /// Complement in `Y`; continuum complements are only kept for a single span.
    pub fn complement(&self, grid: &Grid) -> YSet {
        let nodes = (0..grid.len()).filter(|i| !self.nodes.contains(i)).collect();
        let spans = match self.spans.as_slice() {
            [s] => {
                let mut out = Vec::new();
                if s.lo > f64::NEG_INFINITY || !s.lo_closed {
                    out.push(Span { lo: f64::NEG_INFINITY, hi: s.lo, lo_closed: true, hi_closed: !s.lo_closed });
                }
                if s.hi < f64::INFINITY || !s.hi_closed {
                    out.push(Span { lo: s.hi, hi: f64::INFINITY, lo_closed: !s.hi_closed, hi_closed: true });
                }
                if out.is_empty() {
                    // complement of the whole line; an empty span keeps the continuum reading
                    return YSet { nodes, spans: vec![Span::open(0.0, 0.0)] };
                }
                out
            }
            _ => Vec::new(),
        };
        YSet { nodes, spans }
    }

    pub fn has_spans(&self) -> bool {
        !self.spans.is_empty()
    }

    fn contains_point(&self, grid: &Grid, t: f64) -> bool {
        if self.has_spans() {
            self.spans.iter().any(|s| s.contains(t))
        } else {
            self.nodes.contains(&grid.nearest([t, 0.0]))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuasiLinearForm {
    /// `F(φ) = max_y φ(y) - f(y)`.
    MaxPlus { density: GridFn },
    /// `F(φ) = ε log Σ_y w_y e^{φ(y)/ε}`.
    LogIntegral { grid: Grid, epsilon: f64, weights: Vec<f64> },
    /// `F(φ) = ε log E e^{φ(Z)/ε}`, `Z ~ N(mean, var)`, replaced by `Z ∨ floor`
    /// when a floor is set. Grid functions are read piecewise constant on the
    /// cells around each node, the outer cells reaching to `±∞`.
    Gaussian {
        grid: Grid,
        epsilon: f64,
        mean: f64,
        var: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        floor: Option<f64>,
    },
    /// `F(φ) = ε log (Σ_i w_i e^{φ(s_i)/ε} / Σ_i w_i)`, `φ` read at the node
    /// nearest to each sample.
    Empirical {
        grid: Grid,
        epsilon: f64,
        samples: Vec<f64>,
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        floor: Option<f64>,
    },
    SupFamily { members: Vec<QuasiLinearForm> },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be a positive real, got {v}")))
    }
}

fn line_only(grid: &Grid, what: &str) -> Result<()> {
    if grid.dim() == 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} forms need a 1-D grid")))
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParameter("weights must have positive mass".into()));
    }
    Ok(())
}

/// `M + ε log Σ e^{(u_i - M)/ε}` over the finite `u_i`; any `+∞` wins.
fn eps_log_sum(eps: f64, us: impl Iterator<Item = ExtReal> + Clone) -> ExtReal {
    let m = us.clone().fold(ExtReal::NEG_INF, ExtReal::oplus);
    if !m.is_finite() {
        return m;
    }
    let m = m.value();
    let s: f64 = us.filter(|u| u.is_finite()).map(|u| ((u.value() - m) / eps).exp()).sum();
    ExtReal::new(m + eps * s.ln())
}

/// Law of `Z ∨ floor`, `Z ~ N(mean, sd²)`.
#[derive(Clone, Copy)]
struct Law {
    mean: f64,
    sd: f64,
    floor: Option<f64>,
}

impl Law {
    fn log_prob(&self, s: Span) -> f64 {
        if self.sd == 0.0 {
            let p = self.floor.map_or(self.mean, |a| self.mean.max(a));
            return if s.contains(p) { 0.0 } else { f64::NEG_INFINITY };
        }
        let lo = self.floor.map_or(s.lo, |a| s.lo.max(a));
        let mut lp = f64::NEG_INFINITY;
        if s.hi > lo {
            lp = log_std_interval((lo - self.mean) / self.sd, (s.hi - self.mean) / self.sd);
        }
        if let Some(a) = self.floor.filter(|&a| s.contains(a)) {
            lp = log_add_exp(lp, log_phi((a - self.mean) / self.sd));
        }
        lp
    }
}

/// Cell `[m_{i-1,i}, m_{i,i+1})` of node `i` on a 1-D grid, outer cells unbounded.
pub fn cell(grid: &Grid, i: usize) -> Span {
    let n = grid.len();
    let lo = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (grid.coord(i - 1) + grid.coord(i)) };
    let hi = if i + 1 == n { f64::INFINITY } else { 0.5 * (grid.coord(i) + grid.coord(i + 1)) };
    Span { lo, hi, lo_closed: true, hi_closed: false }
}

impl QuasiLinearForm {
    pub fn max_plus(density: GridFn) -> Self {
        QuasiLinearForm::MaxPlus { density }
    }

    pub fn log_integral(grid: Grid, epsilon: f64, weights: Vec<f64>) -> Result<Self> {
        let f = QuasiLinearForm::LogIntegral { grid, epsilon, weights };
        f.validate()?;
        Ok(f)
    }

    pub fn gaussian(grid: Grid, epsilon: f64, mean: f64, var: f64) -> Result<Self> {
        let f = QuasiLinearForm::Gaussian { grid, epsilon, mean, var, floor: None };
        f.validate()?;
        Ok(f)
    }

    /// Uniform sample weights when `weights` is empty.
    pub fn empirical(grid: Grid, epsilon: f64, samples: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let weights = if weights.is_empty() { vec![1.0; samples.len()] } else { weights };
        let f = QuasiLinearForm::Empirical { grid, epsilon, samples, weights, floor: None };
        f.validate()?;
        Ok(f)
    }

    /// Empirical form from CSV text: a `sample` column and an optional `weight`
    /// column, with a header row.
    pub fn empirical_from_csv(grid: Grid, epsilon: f64, csv_text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::Serde(e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let s_col = col("sample").ok_or_else(|| Error::Serde("missing `sample` column".into()))?;
        let w_col = col("weight");
        let (mut samples, mut weights) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Serde(e.to_string()))?;
            let num = |c: usize| {
                rec.get(c)
                    .unwrap_or("")
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Serde(format!("record {}: {e}", line + 1)))
            };
            samples.push(num(s_col)?);
            if let Some(c) = w_col {
                weights.push(num(c)?);
            }
        }
        QuasiLinearForm::empirical(grid, epsilon, samples, weights)
    }

    pub fn sup_family(members: Vec<QuasiLinearForm>) -> Result<Self> {
        let f = QuasiLinearForm::SupFamily { members };
        f.validate()?;
        Ok(f)
    }

    /// LogIntegral with weights `e^{-f/ε}`; tends to `MaxPlus(f)` as `ε → 0`.
    pub fn log_integral_from_density(density: &GridFn, epsilon: f64) -> Result<Self> {
        let w = density.values().iter().map(|v| (-v.value() / epsilon).exp()).collect();
        QuasiLinearForm::log_integral(density.grid().clone(), epsilon, w)
    }

    /// LogIntegral whose weights are the cell masses of `N(mean, var)`.
    pub fn gaussian_cells(grid: Grid, epsilon: f64, mean: f64, var: f64) -> Result<Self> {
        line_only(&grid, "gaussian")?;
        let law = Law { mean, sd: var.sqrt(), floor: None };
        let w = (0..grid.len()).map(|i| law.log_prob(cell(&grid, i)).exp()).collect();
        QuasiLinearForm::log_integral(grid, epsilon, w)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            QuasiLinearForm::MaxPlus { .. } => Ok(()),
            QuasiLinearForm::LogIntegral { grid, epsilon, weights } => {
                positive("epsilon", *epsilon)?;
                if weights.len() != grid.len() {
                    return Err(Error::GridMismatch(format!("{} weights for {} nodes", weights.len(), grid.len())));
                }
                check_weights(weights)
            }
            QuasiLinearForm::Gaussian { grid, epsilon, mean, var, floor } => {
                positive("epsilon", *epsilon)?;
                line_only(grid, "gaussian")?;
                if !mean.is_finite() || !var.is_finite() || *var < 0.0 || floor.is_some_and(|a| !a.is_finite()) {
                    return Err(Error::InvalidParameter("gaussian needs finite mean, floor and var >= 0".into()));
                }
                Ok(())
            }
            QuasiLinearForm::Empirical { grid, epsilon, samples, weights, floor } => {
                positive("epsilon", *epsilon)?;
                line_only(grid, "empirical")?;
                if samples.is_empty() || samples.iter().any(|s| !s.is_finite()) || floor.is_some_and(|a| !a.is_finite()) {
                    return Err(Error::InvalidParameter("empirical forms need finite samples".into()));
                }
                if weights.len() != samples.len() {
                    return Err(Error::InvalidParameter("one weight per sample".into()));
                }
                check_weights(weights)
            }
            QuasiLinearForm::SupFamily { members } => {
                let first = members
                    .first()
                    .ok_or_else(|| Error::InvalidParameter("empty sup family".into()))?;
                for m in members {
                    m.validate()?;
                    m.grid().ensure_same(first.grid(), "sup family member")?;
                }
                Ok(())
            }
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            QuasiLinearForm::MaxPlus { density } => density.grid(),
            QuasiLinearForm::LogIntegral { grid, .. }
            | QuasiLinearForm::Gaussian { grid, .. }
            | QuasiLinearForm::Empirical { grid, .. } => grid,
            QuasiLinearForm::SupFamily { members } => members[0].grid(),
        }
    }

    /// Upper bound on `ρ(F)`.
    pub fn rho_bound(&self) -> f64 {
        match self {
            QuasiLinearForm::MaxPlus { .. } => 0.0,
            QuasiLinearForm::LogIntegral { epsilon, .. }
            | QuasiLinearForm::Gaussian { epsilon, .. }
            | QuasiLinearForm::Empirical { epsilon, .. } => epsilon * std::f64::consts::LN_2,
            QuasiLinearForm::SupFamily { members } => {
                members.iter().map(|m| m.rho_bound()).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Composes every argument with `y ↦ y ∨ a`.
    pub fn truncated(&self, a: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidParameter("truncation level must be finite".into()));
        }
        let mut f = self.clone();
        match &mut f {
            QuasiLinearForm::Gaussian { floor, .. } | QuasiLinearForm::Empirical { floor, .. } => {
                *floor = Some(floor.map_or(a, |b| b.max(a)));
            }
            QuasiLinearForm::SupFamily { members } => {
                for m in members.iter_mut() {
                    *m = m.truncated(a)?;
                }
            }
            _ => return Err(Error::InvalidParameter("only gaussian and empirical forms can be truncated".into())),
        }
        Ok(f)
    }

    fn law(&self) -> Option<Law> {
        match *self {
            QuasiLinearForm::Gaussian { mean, var, floor, .. } => Some(Law { mean, sd: var.sqrt(), floor }),
            _ => None,
        }
    }

    fn sample_points(samples: &[f64], floor: Option<f64>) -> impl Iterator<Item = f64> + Clone + '_ {
        samples.iter().map(move |&s| floor.map_or(s, |a| s.max(a)))
    }

    pub fn evaluate(&self, phi: &GridFn) -> Result<ExtReal> {
        phi.grid().ensure_same(self.grid(), "test function")?;
        Ok(match self {
            QuasiLinearForm::MaxPlus { density } => phi
                .values()
                .iter()
                .zip(density.values())
                .map(|(&p, &f)| p - f)
                .fold(ExtReal::NEG_INF, ExtReal::oplus),
            QuasiLinearForm::LogIntegral { epsilon, weights, .. } => {
                let eps = *epsilon;
                eps_log_sum(eps, phi.values().iter().zip(weights).map(move |(&p, &w)| p + ExtReal::new(eps * w.ln())))
            }
            QuasiLinearForm::Gaussian { grid, epsilon, .. } => {
                let law = self.law().unwrap();
                let eps = *epsilon;
                let us: Vec<ExtReal> = (0..grid.len())
                    .map(|i| {
                        let p = phi.get(i);
                        if p.is_neg_inf() {
                            ExtReal::NEG_INF
                        } else {
                            p + ExtReal::new(eps * law.log_prob(cell(grid, i)))
                        }
                    })
                    .collect();
                eps_log_sum(eps, us.into_iter())
            }
            QuasiLinearForm::Empirical { grid, epsilon, samples, weights, floor } => {
                let eps = *epsilon;
                let lw = weights.iter().sum::<f64>().ln();
                let pts = Self::sample_points(samples, *floor);
                eps_log_sum(
                    eps,
                    pts.zip(weights).map(move |(s, &w)| {
                        phi.get(grid.nearest([s, 0.0])) + ExtReal::new(eps * (w.ln() - lw))
                    }),
                )
            }
            QuasiLinearForm::SupFamily { members } => {
                let mut acc = ExtReal::NEG_INF;
                for m in members {
                    acc = acc.oplus(m.evaluate(phi)?);
                }
                acc
            }
        })
    }

    /// `F(b(x_i, ·))`. Forms living on the real line use the continuum section
    /// `y ↦ x·y` of a bilinear kernel, in closed form for Gaussian forms.
    pub fn evaluate_section(&self, k: &Kernel, i: usize) -> Result<ExtReal> {
        k.y_grid().ensure_same(self.grid(), "kernel Y grid")?;
        if k.is_bilinear() && k.y_grid().dim() == 1 {
            let x = k.x_grid().coord(i);
            match self {
                QuasiLinearForm::Gaussian { epsilon, mean, var, floor, .. } => {
                    return Ok(ExtReal::new(gaussian_affine(x, *epsilon, *mean, *var, *floor)));
                }
                QuasiLinearForm::Empirical { epsilon, samples, weights, floor, .. } => {
                    let eps = *epsilon;
                    let lw = weights.iter().sum::<f64>().ln();
                    let pts = Self::sample_points(samples, *floor);
                    return Ok(eps_log_sum(
                        eps,
                        pts.zip(weights).map(move |(s, &w)| ExtReal::new(x * s + eps * (w.ln() - lw))),
                    ));
                }
                QuasiLinearForm::SupFamily { members } => {
                    let mut acc = ExtReal::NEG_INF;
                    for m in members {
                        acc = acc.oplus(m.evaluate_section(k, i)?);
                    }
                    return Ok(acc);
                }
                _ => {}
            }
        }
        self.evaluate(&k.section(i))
    }

    /// `F(1_A)` for a node set.
    pub fn eval_on_set(&self, nodes: &[usize]) -> ExtReal {
        self.eval_on_yset(&YSet::nodes(nodes.to_vec()))
    }

    /// `F(1_A)`. Forms on the real line use the span when present.
    pub fn eval_on_yset(&self, set: &YSet) -> ExtReal {
        let grid = self.grid();
        match self {
            QuasiLinearForm::Gaussian { epsilon, .. } => {
                let law = self.law().unwrap();
                let lp = if set.has_spans() {
                    log_sum_exp(set.spans.iter().map(|&s| law.log_prob(s)).collect::<Vec<_>>())
                } else {
                    log_sum_exp(set.nodes.iter().map(|&i| law.log_prob(cell(grid, i))).collect::<Vec<_>>())
                };
                ExtReal::new(epsilon * lp)
            }
            QuasiLinearForm::Empirical { epsilon, samples, weights, floor, .. } => {
                let total: f64 = weights.iter().sum();
                let mass: f64 = Self::sample_points(samples, *floor)
                    .zip(weights)
                    .filter(|(s, _)| set.contains_point(grid, *s))
                    .map(|(_, w)| w)
                    .sum();
                ExtReal::new(epsilon * (mass / total).ln())
            }
            QuasiLinearForm::SupFamily { members } => {
                members.iter().map(|m| m.eval_on_yset(set)).fold(ExtReal::NEG_INF, ExtReal::oplus)
            }
            _ => {
                let ind = GridFn::indicator(grid, &set.nodes);
                self.evaluate(&ind).expect("same grid")
            }
        }
    }
}

/// `ε log E exp(x (Z∨a) / ε)` for `Z ~ N(m, v)`.
fn gaussian_affine(x: f64, eps: f64, m: f64, v: f64, floor: Option<f64>) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let Some(a) = floor else {
        return x * m + 0.5 * x * x * (v / eps);
    };
    if v == 0.0 {
        return x * m.max(a);
    }
    let s = v.sqrt();
    let t = x / eps;
    let below = x * a + eps * log_phi((a - m) / s);
    let above = x * m + 0.5 * x * x * (v / eps) + eps * log_phi_bar((a - m - t * v) / s);
    let hi = below.max(above);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + eps * (-(below - above).abs() / eps).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    /// Lower bound on `ρ(F)`.
    pub rho_hat: f64,
    pub witness: Option<(GridFn, GridFn)>,
    pub pairs: usize,
    pub isotone_violations: usize,
    pub homogeneity_violations: usize,
    pub max_homogeneity_error: f64,
}

fn random_test_fn<R: Rng>(grid: &Grid, rng: &mut R) -> GridFn {
    let vals = (0..grid.len())
        .map(|_| {
            if rng.random_bool(0.2) {
                ExtReal::NEG_INF
            } else {
                ExtReal::new(rng.random_range(-64i32..=64) as f64 / 16.0)
            }
        })
        .collect();
    GridFn::new(grid.clone(), vals).unwrap()
}

fn close(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    a == b || (a.is_finite() && b.is_finite() && (a.value() - b.value()).abs() <= tol * (1.0 + b.value().abs()))
}

/// Samples pairs, a quarter of them complementary indicators, and also checks
/// isotonicity and additive homogeneity (relative tolerance 1e-12).
pub fn rho_estimate(f: &QuasiLinearForm, n_pairs: usize, seed: u64) -> RhoEstimate {
    let grid = f.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut est = RhoEstimate {
        rho_hat: 0.0,
        witness: None,
        pairs: n_pairs,
        isotone_violations: 0,
        homogeneity_violations: 0,
        max_homogeneity_error: 0.0,
    };
    let tol = 1e-12;
    for k in 0..n_pairs {
        let (phi, psi) = if k % 4 == 0 && grid.len() > 1 {
            let a: Vec<usize> = (0..grid.len()).filter(|_| rng.random_bool(0.5)).collect();
            let b: Vec<usize> = (0..grid.len()).filter(|i| !a.contains(i)).collect();
            (GridFn::indicator(grid, &a), GridFn::indicator(grid, &b))
        } else {
            (random_test_fn(grid, &mut rng), random_test_fn(grid, &mut rng))
        };
        let join = phi.sup(&psi).unwrap();
        let (fj, fp, fq) = (f.evaluate(&join).unwrap(), f.evaluate(&phi).unwrap(), f.evaluate(&psi).unwrap());
        let top = fp.oplus(fq);
        if fj < top && !close(fj, top, tol) {
            est.isotone_violations += 1;
        }
        if fj.is_finite() && top.is_finite() && fj.value() - top.value() > est.rho_hat {
            est.rho_hat = fj.value() - top.value();
            est.witness = Some((phi.clone(), psi.clone()));
        }
        let lambda = ExtReal::new(rng.random_range(-128i32..=128) as f64 / 16.0);
        let lhs = f.evaluate(&phi.shift(lambda)).unwrap();
        let rhs = fp + lambda;
        if lhs.is_finite() && rhs.is_finite() {
            est.max_homogeneity_error = est.max_homogeneity_error.max((lhs.value() - rhs.value()).abs());
        }
        if !close(lhs, rhs, tol) {
            est.homogeneity_violations += 1;
        }
    }
    est
}

/// The l.s.c. density `f(y) = -F({y})` of a max-plus linear form.
pub fn density_of(f: &QuasiLinearForm, tol: f64) -> Result<GridFn> {
    let rho = rho_estimate(f, 256, 0);
    if rho.rho_hat > tol {
        return Err(Error::NotLinear(rho.rho_hat));
    }
    let grid = f.grid();
    let vals = (0..grid.len()).map(|i| -f.eval_on_set(&[i])).collect();
    Ok(GridFn::new(grid.clone(), vals)?.with_tag(Tag::Lsc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TightnessConfig {
    /// Values at or below this count as `-∞`.
    pub floor: f64,
    /// Minimal total decrease of a strictly decreasing trace.
    pub min_drop: f64,
}

impl Default for TightnessConfig {
    fn default() -> Self {
        TightnessConfig { floor: -1e6, min_drop: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub tight_evidence: bool,
    pub trace: Vec<ExtReal>,
}

/// Whether a trace of `F(K_i^c)` looks like it tends to `-∞`: nonincreasing and
/// either reaching the floor or strictly decreasing by at least `min_drop`.
pub fn decreasing_to_floor(trace: &[ExtReal], cfg: &TightnessConfig) -> bool {
    let Some(&last) = trace.last() else { return false };
    if trace.windows(2).any(|w| w[1] > w[0]) {
        return false;
    }
    if last.value() <= cfg.floor {
        return true;
    }
    let strict = trace.windows(2).all(|w| w[1] < w[0]);
    strict && trace.len() >= 2 && (trace[0] - last).value() >= cfg.min_drop
}

/// `F(K_i^c)` over nested windows `K_1 ⊂ K_2 ⊂ ...`.
pub fn tightness_check(f: &QuasiLinearForm, windows: &[Vec<usize>], cfg: &TightnessConfig) -> Result<TightnessReport> {
    let grid = f.grid();
    for w in windows.windows(2) {
        if !w[0].iter().all(|i| w[1].contains(i)) {
            return Err(Error::InvalidParameter("windows must be nested".into()));
        }
    }
    let trace: Vec<ExtReal> = windows
        .iter()
        .map(|w| f.eval_on_yset(&YSet::nodes(w.clone()).complement(grid)))
        .collect();
    Ok(TightnessReport { tight_evidence: decreasing_to_floor(&trace, cfg), trace })
}
