//! Merton investment model: wealth `dW = (r + (α-r)ξ) W dt + σ ξ W dB`, its
//! risk-sensitive value `g`, the tail rate `g*` and the `χ_a` truncation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugacy::{CoercivityConfig, Kernel, Window};
use crate::convergence::{trend, Extrapolation, FormSequence, SequenceSpec};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::gartner::{pipeline_from_g, GComputation, GartnerInput, GartnerOutput, Mode};
use crate::grid::{Grid, GridFn};
use crate::quasilinear::QuasiLinearForm;
use crate::special::log_phi_bar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MertonParams {
    pub r: f64,
    pub alpha: f64,
    pub sigma: f64,
    #[serde(default = "one")]
    pub w0: f64,
}

fn one() -> f64 {
    1.0
}

impl MertonParams {
    pub fn new(r: f64, alpha: f64, sigma: f64, w0: f64) -> Result<Self> {
        let p = MertonParams { r, alpha, sigma, w0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.r, self.alpha, self.sigma, self.w0].iter().all(|v| v.is_finite());
        if !finite || !(self.alpha > self.r && self.r > 0.0 && self.sigma > 0.0 && self.w0 > 0.0) {
            return Err(Error::InvalidParameter(format!("need alpha > r > 0, sigma > 0, w0 > 0: {self:?}")));
        }
        Ok(())
    }

    /// Growth rate of `log W` under constant `ξ`: `r + (α-r)ξ - σ²ξ²/2`.
    pub fn drift(&self, xi: f64) -> f64 {
        self.r + (self.alpha - self.r) * xi - 0.5 * self.sigma * self.sigma * xi * xi
    }
}

pub fn z0(p: &MertonParams) -> f64 {
    let d = p.alpha - p.r;
    p.r + d * d / (2.0 * p.sigma * p.sigma)
}

/// `g(x) = x(r + (α-r)²/(2σ²(1-x)))` on `[0,1)`, `+∞` elsewhere.
pub fn g_closed(x: f64, p: &MertonParams) -> ExtReal {
    if !(0.0..1.0).contains(&x) {
        return ExtReal::POS_INF;
    }
    let d = p.alpha - p.r;
    ExtReal::new(x * (p.r + d * d / (2.0 * p.sigma * p.sigma * (1.0 - x))))
}

/// Maximizer `(α-r)/(σ²(1-x))`; requires `x < 1`.
pub fn xi_star(x: f64, p: &MertonParams) -> f64 {
    (p.alpha - p.r) / (p.sigma * p.sigma * (1.0 - x))
}

/// `(√(y-r) - (α-r)/(√2σ))²` for `y ≥ z0`, 0 below.
pub fn g_star(y: f64, p: &MertonParams) -> f64 {
    if y < z0(p) {
        return 0.0;
    }
    let t = (y - p.r).sqrt() - (p.alpha - p.r) / (std::f64::consts::SQRT_2 * p.sigma);
    t * t
}

/// Grid maximum of `x(r + (α-r)ξ + (x-1)σ²ξ²/2)`.
pub fn brute_force_g(x: f64, p: &MertonParams, xi_grid: &[f64]) -> f64 {
    xi_grid
        .iter()
        .map(|&xi| x * (p.r + (p.alpha - p.r) * xi + (x - 1.0) * p.sigma * p.sigma * xi * xi / 2.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl XiGrid {
    pub fn nodes(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.min <= self.max && self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad xi grid {self:?}")));
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.min + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSpec {
    Constant { xi: f64 },
    /// `ξ(t, log W)`: piecewise constant in time from `times[k]`, linear in
    /// log-wealth between `log_wealth` nodes and clamped outside.
    Feedback { times: Vec<f64>, log_wealth: Vec<f64>, table: Vec<Vec<f64>>, time_step: f64 },
}

impl ControlSpec {
    fn validate(&self, t: f64) -> Result<()> {
        match self {
            ControlSpec::Constant { xi } if xi.is_finite() => Ok(()),
            ControlSpec::Constant { .. } => Err(Error::InvalidParameter("xi must be finite".into())),
            ControlSpec::Feedback { times, log_wealth, table, time_step } => {
                if !(time_step.is_finite() && *time_step > 0.0) {
                    return Err(Error::InvalidParameter("time_step must be positive".into()));
                }
                if times.is_empty() || times[0] > 0.0 || *times.last().unwrap() < t {
                    return Err(Error::InvalidParameter(format!("feedback table does not cover [0, {t}]")));
                }
                let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
                if log_wealth.is_empty() || !sorted(times) || !sorted(log_wealth) {
                    return Err(Error::InvalidParameter("feedback axes must be increasing".into()));
                }
                if table.len() != times.len() || table.iter().any(|row| row.len() != log_wealth.len()) {
                    return Err(Error::InvalidParameter("feedback table shape".into()));
                }
                Ok(())
            }
        }
    }

    fn feedback(times: &[f64], lw: &[f64], table: &[Vec<f64>], t: f64, l: f64) -> f64 {
        let k = times.partition_point(|&s| s <= t).saturating_sub(1);
        let row = &table[k];
        if l <= lw[0] {
            return row[0];
        }
        if l >= lw[lw.len() - 1] {
            return row[lw.len() - 1];
        }
        let j = lw.partition_point(|&s| s <= l) - 1;
        let w = (l - lw[j]) / (lw[j + 1] - lw[j]);
        row[j] + w * (row[j + 1] - row[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthSamples {
    pub t: f64,
    /// `log(W_T)/T` per path.
    pub values: Vec<f64>,
    pub control: ControlSpec,
    pub seed: u64,
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Exact lognormal sampling for constant controls, Euler-Maruyama on
/// log-wealth for feedback controls. Each path has its own RNG stream, so the
/// result does not depend on the thread count.
pub fn simulate(p: &MertonParams, control: &ControlSpec, t: f64, n_paths: usize, seed: u64) -> Result<WealthSamples> {
    p.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
    }
    control.validate(t)?;
    let lw0 = p.w0.ln();
    let values: Vec<f64> = match control {
        ControlSpec::Constant { xi } => {
            let (m, s) = (p.drift(*xi), p.sigma * xi / t.sqrt());
            (0..n_paths)
                .into_par_iter()
                .map(|i| {
                    let z: f64 = StandardNormal.sample(&mut path_rng(seed, i));
                    lw0 / t + m + s * z
                })
                .collect()
        }
        ControlSpec::Feedback { times, log_wealth, table, time_step } => {
            let steps = (t / time_step).ceil() as usize;
            let dt = t / steps as f64;
            (0..n_paths)
                .into_par_iter()
                .map(|i| {
                    let mut rng = path_rng(seed, i);
                    let mut l = lw0;
                    for k in 0..steps {
                        let xi = ControlSpec::feedback(times, log_wealth, table, k as f64 * dt, l);
                        let z: f64 = StandardNormal.sample(&mut rng);
                        l += p.drift(xi) * dt + p.sigma * xi * dt.sqrt() * z;
                    }
                    l / t
                })
                .collect()
        }
    };
    Ok(WealthSamples { t, values, control: control.clone(), seed })
}

/// `(1/T) log mean W_T^x`; the risk-aversion reading is `x = 1 - γ`.
pub fn risk_sensitive_value(x: f64, samples: &WealthSamples) -> f64 {
    log_mean_exp(x * samples.t, &samples.values) / samples.t
}

fn log_mean_exp(scale: f64, v: &[f64]) -> f64 {
    let m = v.iter().map(|s| scale * s).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = v.iter().map(|s| (scale * s - m).exp()).sum();
    m + (sum / v.len() as f64).ln()
}

/// Bootstrap standard error of [`risk_sensitive_value`].
pub fn risk_sensitive_se(x: f64, samples: &WealthSamples, n_boot: usize, seed: u64) -> f64 {
    let n = samples.values.len();
    let reps: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = path_rng(seed, b);
            let draw: Vec<f64> =
                (0..n).map(|_| samples.values[rand::Rng::random_range(&mut rng, 0..n)]).collect();
            log_mean_exp(x * samples.t, &draw) / samples.t
        })
        .collect();
    let mean = reps.iter().sum::<f64>() / n_boot as f64;
    (reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n_boot as f64 - 1.0).max(1.0)).sqrt()
}

/// `x log(W0)/T + x(r + (α-r)ξ + (x-1)σ²ξ²/2)`.
pub fn risk_sensitive_exact(x: f64, xi: f64, p: &MertonParams, t: f64) -> f64 {
    x * p.w0.ln() / t + x * (p.r + (p.alpha - p.r) * xi + (x - 1.0) * p.sigma * p.sigma * xi * xi / 2.0)
}

/// `F_{W0,T,ξ}` on a Y grid: `ε = 1/T`, `log(W_T)/T ~ N(drift + log W0/T, σ²ξ²/T)`.
pub fn gaussian_form(p: &MertonParams, xi: f64, t: f64, y_grid: &Grid) -> Result<QuasiLinearForm> {
    let s = p.sigma * xi;
    QuasiLinearForm::gaussian(y_grid.clone(), 1.0 / t, p.drift(xi) + p.w0.ln() / t, s * s / t)
}

/// Empirical form of simulated samples, `ε = 1/T`.
pub fn empirical_form(samples: &WealthSamples, y_grid: &Grid) -> Result<QuasiLinearForm> {
    QuasiLinearForm::empirical(y_grid.clone(), 1.0 / samples.t, samples.values.clone(), Vec::new())
}

/// `G(φ) = F(φ ∘ χ_a)`, `χ_a(y) = y ∨ a`. Returns a warning when `a ≥ z0`.
pub fn truncate_form(f: &QuasiLinearForm, a: f64, p: &MertonParams) -> Result<(QuasiLinearForm, Option<String>)> {
    let warn = (a >= z0(p)).then(|| format!("truncation level {a} is not below z0 = {}", z0(p)));
    Ok((f.truncated(a)?, warn))
}

/// The sequence `T ↦ F_{W0,T,ξ}` (optionally truncated) over `t_list`.
pub fn sequence(p: &MertonParams, xi: f64, t_list: &[f64], y_grid: &Grid, floor: Option<f64>) -> Result<FormSequence> {
    let s = p.sigma * xi;
    let spec = SequenceSpec::Gaussian { mean: p.drift(xi), var: s * s, drift: p.w0.ln(), floor };
    FormSequence::new(y_grid.clone(), spec, t_list.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MertonLdpConfig {
    pub params: MertonParams,
    /// `(lo, hi, n)` of the X grid; `lo < 0` keeps negative exponents.
    pub x: (f64, f64, usize),
    pub y: (f64, f64, usize),
    pub xi: XiGrid,
    pub t_list: Vec<f64>,
    /// `a` of the `χ_a` truncation.
    #[serde(default)]
    pub truncation: Option<f64>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    0.1
}

/// Builds the family indexed by the ξ grid. Truncated setups read X and Y as
/// half-lines closed at their lower ends.
pub fn ldp_input(cfg: &MertonLdpConfig) -> Result<GartnerInput> {
    cfg.params.validate()?;
    let xg = Grid::line(cfg.x.0, cfg.x.1, cfg.x.2)?;
    let yg = Grid::line(cfg.y.0, cfg.y.1, cfg.y.2)?;
    let seqs = cfg
        .xi
        .nodes()?
        .into_iter()
        .map(|xi| sequence(&cfg.params, xi, &cfg.t_list, &yg, cfg.truncation))
        .collect::<Result<Vec<_>>>()?;
    let k = Kernel::bilinear(xg, yg)?;
    let mut input = GartnerInput::new(seqs, k, Mode::LimitAsserted)?;
    let mut coerc = CoercivityConfig::for_kernel(&input.kernel, cfg.margin);
    if let Some(a) = cfg.truncation {
        coerc.y_window = Window::half_line(cfg.margin);
        if cfg.x.0 >= 0.0 {
            coerc.x_window = Window::half_line(cfg.margin);
        }
        if cfg.y.0 > a {
            return Err(Error::InvalidParameter(format!("Y grid starts above the truncation level {a}")));
        }
    }
    input.coercivity = coerc;
    Ok(input)
}

/// `g(x) = sup_ξ lim_T F_{T,ξ}(b(x,·))` over the ξ grid, standing in for the
/// sup over all of ℝ: when the maximizing ξ sits at an end of the grid and the
/// member limits are convex there, the sup over ℝ is taken to be `+∞`.
pub fn compute_g(input: &GartnerInput) -> Result<GComputation> {
    let k = &input.kernel;
    let nx = k.x_grid().len();
    let forms: Vec<Vec<QuasiLinearForm>> = input.sequences.iter().map(|s| s.forms()).collect::<Result<_>>()?;
    let rows: Vec<Result<(ExtReal, f64, bool)>> = (0..nx)
        .into_par_iter()
        .map(|x| {
            let mut lim = Vec::with_capacity(forms.len());
            let mut spread = 0.0f64;
            for (s, fs) in input.sequences.iter().zip(&forms) {
                let vals = fs.iter().map(|f| f.evaluate_section(k, x)).collect::<Result<Vec<_>>>()?;
                let t = trend(&s.n_list, &vals, Extrapolation::Richardson);
                if t.limsup.is_finite() && t.liminf.is_finite() {
                    spread = spread.max(t.limsup.value() - t.liminf.value());
                }
                lim.push(t.limsup);
            }
            let (arg, best) = lim.iter().enumerate().fold((0, ExtReal::NEG_INF), |acc, (i, &v)| {
                if v > acc.1 { (i, v) } else { acc }
            });
            let n = lim.len();
            let convex_edge = |a: usize, b: usize, c: usize| {
                n >= 3 && (lim[a] - lim[b]).value() - (lim[b] - lim[c]).value() > 0.0
            };
            let unbounded = best.is_finite()
                && ((arg == 0 && convex_edge(0, 1, 2)) || (arg == n - 1 && convex_edge(n - 1, n - 2, n - 3)));
            let edge = arg == 0 || arg == n - 1;
            Ok((if unbounded { ExtReal::POS_INF } else { best }, spread, edge && !unbounded && n > 1))
        })
        .collect();
    let mut values = Vec::with_capacity(nx);
    let mut max_spread = 0.0f64;
    let mut edge_nodes = 0;
    for r in rows {
        let (g, s, e) = r?;
        values.push(g);
        max_spread = max_spread.max(s);
        edge_nodes += e as usize;
    }
    let mut warnings = Vec::new();
    let mut mode = input.mode;
    if edge_nodes > 0 {
        warnings.push(format!("{edge_nodes} X nodes take their sup at an end of the xi grid"));
    }
    if mode == Mode::LimitAsserted && max_spread > input.check.tol {
        warnings.push(format!("trend spread {max_spread:e} above tolerance; falling back to limsup mode"));
        mode = Mode::Limsup;
    }
    Ok(GComputation { g: GridFn::new(k.x_grid().clone(), values)?, mode, max_spread, warnings })
}

pub fn ldp_pipeline(cfg: &MertonLdpConfig) -> Result<GartnerOutput> {
    let input = ldp_input(cfg)?;
    let gc = compute_g(&input)?;
    pipeline_from_g(&input, gc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailRateConfig {
    pub params: MertonParams,
    pub c: f64,
    pub t_list: Vec<f64>,
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    pub xi: XiGrid,
    /// Monte Carlo runs at the maximizing ξ of each T and at every `mc_stride`-th
    /// ξ node; 0 keeps only the maximizer.
    #[serde(default)]
    pub mc_stride: usize,
    #[serde(default)]
    pub truncation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCell {
    pub t: f64,
    pub xi: f64,
    /// `(1/T) log P[log(W_T)/T ≥ c]`.
    pub exact_value: f64,
    pub mc_value: Option<f64>,
    pub mc_se: Option<f64>,
    pub mc_hits: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    pub sup_over_xi: f64,
    pub argmax_xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRateReport {
    pub c: f64,
    /// `-g*(c)`.
    pub target: f64,
    /// `min_ξ (c - m(ξ))₊² / (2σ²ξ²)` over the ξ grid; must match `g*(c)`.
    pub control_oracle: f64,
    pub per_t: Vec<TailRow>,
    pub cells: Vec<TailCell>,
    /// `|sup_over_xi - target|` strictly decreasing in T.
    pub monotone_toward_target: bool,
    pub notes: Vec<String>,
}

impl TailRateReport {
    /// CSV with columns `T,xi,exact_value,mc_value,mc_se,sup_over_xi,target_minus_gstar`.
    pub fn csv(&self) -> String {
        let mut out = String::from("T,xi,exact_value,mc_value,mc_se,sup_over_xi,target_minus_gstar\n");
        let opt = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
        for cell in &self.cells {
            let sup = self.per_t.iter().find(|r| r.t == cell.t).map_or(f64::NAN, |r| r.sup_over_xi);
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                cell.t,
                cell.xi,
                cell.exact_value,
                opt(cell.mc_value),
                opt(cell.mc_se),
                sup,
                self.target
            ));
        }
        out
    }
}

/// Exact `(1/T) log P[log(W_T)/T ≥ c]` under constant `ξ`.
pub fn exact_tail(p: &MertonParams, xi: f64, t: f64, c: f64) -> f64 {
    let mean = p.drift(xi) + p.w0.ln() / t;
    let s = p.sigma * xi.abs();
    if s == 0.0 {
        return if mean >= c { 0.0 } else { f64::NEG_INFINITY };
    }
    log_phi_bar((c - mean) * t.sqrt() / s) / t
}

pub fn tail_rate_experiment(cfg: &TailRateConfig) -> Result<TailRateReport> {
    let p = &cfg.params;
    p.validate()?;
    if cfg.t_list.is_empty() || cfg.t_list.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
        return Err(Error::InvalidParameter("T values must be positive".into()));
    }
    let xis = cfg.xi.nodes()?;
    let mut notes = Vec::new();
    if cfg.c <= p.r {
        notes.push(format!("c = {} <= r: riskless investment reaches the level, the rate is 0", cfg.c));
    }
    if let Some(a) = cfg.truncation {
        if a >= z0(p) {
            notes.push(format!("truncation level {a} is not below z0 = {}", z0(p)));
        }
        if a >= cfg.c {
            notes.push(format!("truncation level {a} reaches c = {}: the event changes", cfg.c));
        }
    }
    let control_oracle = xis
        .iter()
        .filter(|&&xi| xi != 0.0)
        .map(|&xi| {
            let gap = (cfg.c - p.drift(xi)).max(0.0);
            gap * gap / (2.0 * p.sigma * p.sigma * xi * xi)
        })
        .fold(f64::INFINITY, f64::min);
    let mut cells = Vec::new();
    let mut per_t = Vec::new();
    for &t in &cfg.t_list {
        let exact: Vec<f64> = xis.iter().map(|&xi| exact_tail(p, xi, t, cfg.c)).collect();
        let (arg, sup) = exact
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        per_t.push(TailRow { t, sup_over_xi: sup, argmax_xi: xis[arg] });
        for (i, &xi) in xis.iter().enumerate() {
            let run_mc = cfg.n_paths > 0 && (i == arg || (cfg.mc_stride > 0 && i % cfg.mc_stride == 0));
            let mut cell =
                TailCell { t, xi, exact_value: exact[i], mc_value: None, mc_se: None, mc_hits: None };
            if run_mc {
                let seed = cfg.seed ^ (t.to_bits().rotate_left(17)) ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let s = simulate(p, &ControlSpec::Constant { xi }, t, cfg.n_paths, seed)?;
                let hits = s.values.iter().filter(|&&v| v >= cfg.c).count();
                cell.mc_hits = Some(hits);
                if hits == 0 {
                    notes.push(format!("T = {t}, xi = {xi}: no path reached c; cell inconclusive"));
                } else {
                    let ph = hits as f64 / cfg.n_paths as f64;
                    cell.mc_value = Some(ph.ln() / t);
                    cell.mc_se = Some((ph * (1.0 - ph) / cfg.n_paths as f64).sqrt() / (ph * t));
                }
            }
            cells.push(cell);
        }
    }
    let target = -g_star(cfg.c, p);
    let gaps: Vec<f64> = per_t.iter().map(|r| (r.sup_over_xi - target).abs()).collect();
    let monotone_toward_target = gaps.windows(2).all(|w| w[1] < w[0]);
    Ok(TailRateReport { c: cfg.c, target, control_oracle, per_t, cells, monotone_toward_target, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> MertonParams {
        MertonParams::new(0.05, 0.10, 0.20, 1.0).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let p = p();
        assert!((z0(&p) - 0.08125).abs() < 1e-15);
        assert!((g_closed(0.5, &p).value() - 0.05625).abs() < 1e-15);
        assert!((xi_star(0.5, &p) - 2.5).abs() < 1e-15);
        assert!((g_star(0.12, &p) - 0.0077086).abs() < 1e-7);
        assert_eq!(g_star(0.07, &p), 0.0);
        assert_eq!(g_closed(0.0, &p), ExtReal::ZERO);
        assert!(g_closed(1.0, &p).is_pos_inf() && g_closed(-0.1, &p).is_pos_inf());
        assert!(MertonParams::new(0.1, 0.05, 0.2, 1.0).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let p = p();
        let grid = XiGrid { min: 0.0, max: 20.0, step: 1e-4 }.nodes().unwrap();
        assert!((brute_force_g(0.5, &p, &grid) - 0.05625).abs() < 1e-8);
        assert_eq!(brute_force_g(0.0, &p, &[0.3, 7.0]), 0.0);
        assert!((brute_force_g(0.9, &p, &grid) - 0.32625).abs() < 1e-6);
    }

    #[test]
    fn riskless_paths_are_deterministic() {
        let p = MertonParams::new(0.05, 0.10, 0.20, 2.0).unwrap();
        let s = simulate(&p, &ControlSpec::Constant { xi: 0.0 }, 4.0, 100, 3).unwrap();
        assert!(s.values.iter().all(|&v| v == 2f64.ln() / 4.0 + 0.05));
    }

    #[test]
    fn sample_mean_matches_drift() {
        let p = p();
        let s = simulate(&p, &ControlSpec::Constant { xi: 1.0 }, 10.0, 100_000, 7).unwrap();
        let n = s.values.len() as f64;
        let mean = s.values.iter().sum::<f64>() / n;
        let se = 0.2 / 10f64.sqrt() / n.sqrt();
        assert!((mean - 0.08).abs() < 3.0 * se, "{mean}");
        let again = simulate(&p, &ControlSpec::Constant { xi: 1.0 }, 10.0, 100_000, 7).unwrap();
        assert_eq!(again.values, s.values);
    }

    #[test]
    fn feedback_constant_table_matches_exact_law() {
        let p = p();
        let control = ControlSpec::Feedback {
            times: vec![0.0, 5.0],
            log_wealth: vec![-1.0, 1.0],
            table: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            time_step: 0.1,
        };
        let s = simulate(&p, &control, 5.0, 20_000, 1).unwrap();
        let n = s.values.len() as f64;
        let mean = s.values.iter().sum::<f64>() / n;
        assert!((mean - 0.08).abs() < 3.0 * 0.2 / 5f64.sqrt() / n.sqrt());
        let short = ControlSpec::Feedback { times: vec![0.0, 1.0], log_wealth: vec![0.0], table: vec![vec![1.0]; 2], time_step: 0.1 };
        assert!(simulate(&p, &short, 5.0, 10, 1).is_err());
        assert!(simulate(&p, &ControlSpec::Constant { xi: 1.0 }, 0.0, 10, 1).is_err());
    }

    #[test]
    fn risk_sensitive_examples() {
        let p = p();
        assert!((risk_sensitive_exact(0.5, 1.0, &p, 10.0) - 0.045).abs() < 1e-15);
        assert_eq!(risk_sensitive_exact(0.0, 3.0, &p, 10.0), 0.0);
        let s = simulate(&p, &ControlSpec::Constant { xi: 2.5 }, 10.0, 100_000, 11).unwrap();
        let v = risk_sensitive_value(0.5, &s);
        let se = risk_sensitive_se(0.5, &s, 200, 5);
        assert!((v - risk_sensitive_exact(0.5, 2.5, &p, 10.0)).abs() < 3.0 * se, "{v} ± {se}");
    }

    #[test]
    fn truncation_examples() {
        let p = p();
        let y = Grid::line(-0.5, 0.5, 101).unwrap();
        let s = simulate(&p, &ControlSpec::Constant { xi: 1.0 }, 10.0, 2000, 2).unwrap();
        let f = empirical_form(&s, &y).unwrap();
        let lowest = s.values.iter().copied().fold(f64::INFINITY, f64::min);
        let (below, warn) = truncate_form(&f, lowest - 1.0, &p).unwrap();
        assert!(warn.is_none());
        let phi = GridFn::sample(&y, |q| ExtReal::new(q[0].sin()));
        assert_eq!(below.evaluate(&phi).unwrap(), f.evaluate(&phi).unwrap());

        let (g, _) = truncate_form(&f, 0.0, &p).unwrap();
        let c = 0.1;
        let up = crate::quasilinear::YSet::from_span(&y, crate::quasilinear::Span::closed(c, f64::INFINITY));
        assert_eq!(g.eval_on_yset(&up), f.eval_on_yset(&up));
        let down = crate::quasilinear::YSet::from_span(&y, crate::quasilinear::Span::closed(f64::NEG_INFINITY, c));
        assert_eq!(g.eval_on_yset(&down), f.eval_on_yset(&down));
        assert!(truncate_form(&f, 0.09, &p).unwrap().1.is_some());
    }

    #[test]
    fn tail_experiment_examples() {
        let p = p();
        let cfg = TailRateConfig {
            params: p,
            c: 0.12,
            t_list: vec![25.0, 50.0, 100.0, 200.0],
            n_paths: 0,
            seed: 1,
            xi: XiGrid { min: 0.0, max: 10.0, step: 1e-3 },
            mc_stride: 0,
            truncation: None,
        };
        let r = tail_rate_experiment(&cfg).unwrap();
        assert!((r.control_oracle - 0.0077086).abs() < 1e-5);
        assert!((r.target + 0.0077086).abs() < 1e-7);
        assert!(r.monotone_toward_target);
        let sups: Vec<f64> = r.per_t.iter().map(|t| t.sup_over_xi).collect();
        assert!(sups.windows(2).all(|w| w[1] > w[0]));
        assert!(r.csv().lines().last().unwrap().ends_with(&format!(",{}", r.target)));

        let low = TailRateConfig { c: 0.07, t_list: vec![10.0, 100.0, 1000.0], ..cfg };
        let r = tail_rate_experiment(&low).unwrap();
        let sups: Vec<f64> = r.per_t.iter().map(|t| t.sup_over_xi).collect();
        assert!(sups.windows(2).all(|w| w[1] > w[0]) && sups[2] > -1e-4, "{sups:?}");
        assert_eq!(r.target, 0.0);
    }
}
