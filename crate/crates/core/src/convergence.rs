//! Finite-prefix checks of weak convergence, LDP bounds and asymptotic
//! tightness for sequences of quasi-linear forms.
//!
//! Limits over `n` are never certified. Every verdict is a trend over the
//! declared `n_list` with an extrapolation rule and a tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::grid::{Grid, GridFn, Tag};
use crate::quasilinear::{decreasing_to_floor, QuasiLinearForm, Span, TightnessConfig, YSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    /// `F_n(φ) = (1/n) log E e^{n φ(Z_n)}`, `Z_n ~ N(mean + drift/n, var/n)`,
    /// optionally floored. `var = 0` gives point masses.
    Gaussian {
        mean: f64,
        var: f64,
        #[serde(default)]
        drift: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        floor: Option<f64>,
    },
    /// `F_n = LogIntegral(1/n, cell masses of N(mean, var/n))`.
    GaussianCells { mean: f64, var: f64 },
    Constant { form: QuasiLinearForm },
    /// `even` at even `n`, `odd` at odd `n`.
    Alternating { even: QuasiLinearForm, odd: QuasiLinearForm },
    /// One form per entry of `n_list`.
    Listed { forms: Vec<QuasiLinearForm> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSequence {
    pub y_grid: Grid,
    pub spec: SequenceSpec,
    pub n_list: Vec<f64>,
}

impl FormSequence {
    pub fn new(y_grid: Grid, spec: SequenceSpec, n_list: Vec<f64>) -> Result<Self> {
        let s = FormSequence { y_grid, spec, n_list };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.iter().any(|&n| !(n.is_finite() && n > 0.0)) {
            return Err(Error::InvalidParameter("n_list entries must be positive".into()));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("n_list must be increasing".into()));
        }
        if let SequenceSpec::Listed { forms } = &self.spec {
            if forms.len() != self.n_list.len() {
                return Err(Error::InvalidParameter("listed sequences need one form per n".into()));
            }
        }
        for k in 0..self.n_list.len() {
            self.form(k)?.grid().ensure_same(&self.y_grid, "sequence member")?;
        }
        Ok(())
    }

    /// The member at `n_list[k]`.
    pub fn form(&self, k: usize) -> Result<QuasiLinearForm> {
        let n = self.n_list[k];
        let g = self.y_grid.clone();
        match &self.spec {
            SequenceSpec::Gaussian { mean, var, drift, floor } => {
                let f = QuasiLinearForm::gaussian(g, 1.0 / n, mean + drift / n, var / n)?;
                match floor {
                    Some(a) => f.truncated(*a),
                    None => Ok(f),
                }
            }
            SequenceSpec::GaussianCells { mean, var } => QuasiLinearForm::gaussian_cells(g, 1.0 / n, *mean, var / n),
            SequenceSpec::Constant { form } => Ok(form.clone()),
            SequenceSpec::Alternating { even, odd } => {
                Ok(if (n.round() as u64).is_multiple_of(2) { even.clone() } else { odd.clone() })
            }
            SequenceSpec::Listed { forms } => Ok(forms[k].clone()),
        }
    }

    pub fn forms(&self) -> Result<Vec<QuasiLinearForm>> {
        (0..self.n_list.len()).map(|k| self.form(k)).collect()
    }

    /// `ε(n)` when the sequence declares it.
    pub fn epsilon(&self, n: f64) -> Option<f64> {
        match self.spec {
            SequenceSpec::Gaussian { .. } | SequenceSpec::GaussianCells { .. } => Some(1.0 / n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Tail values as they are.
    Last,
    /// Pairwise fits of `a + b/n` over the last three points.
    Richardson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    pub tol: f64,
    pub extrapolation: Extrapolation,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { tol: 1e-3, extrapolation: Extrapolation::Richardson }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub values: Vec<ExtReal>,
    pub limit: ExtReal,
    pub limsup: ExtReal,
    pub liminf: ExtReal,
    pub conclusive: bool,
}

/// Extrapolated tail of `values[k]` observed at `ns[k]`. Fewer than three points
/// is inconclusive; a constant tail is returned as is.
pub fn trend(ns: &[f64], values: &[ExtReal], how: Extrapolation) -> Trend {
    let last = values.last().copied().unwrap_or(ExtReal::NEG_INF);
    let mut t = Trend { values: values.to_vec(), limit: last, limsup: last, liminf: last, conclusive: values.len() >= 3 };
    if values.len() < 2 {
        return t;
    }
    let k = values.len().saturating_sub(3);
    let (tn, tv) = (&ns[k..], &values[k..]);
    if tv.iter().all(|v| v.to_bits() == last.to_bits()) {
        return t;
    }
    let extremes = |vs: &[ExtReal]| {
        (vs.iter().copied().fold(ExtReal::NEG_INF, ExtReal::oplus), vs.iter().copied().fold(ExtReal::POS_INF, ExtReal::min))
    };
    if how == Extrapolation::Last || tv.iter().any(|v| !v.is_finite()) {
        (t.limsup, t.liminf) = extremes(tv);
        return t;
    }
    let est: Vec<ExtReal> = tn
        .windows(2)
        .zip(tv.windows(2))
        .map(|(n, v)| ExtReal::new((n[1] * v[1].value() - n[0] * v[0].value()) / (n[1] - n[0])))
        .collect();
    t.limit = *est.last().unwrap();
    (t.limsup, t.liminf) = extremes(&est);
    t
}

/// `a - b` with equal infinities giving 0.
fn gap(a: ExtReal, b: ExtReal) -> f64 {
    if a == b {
        0.0
    } else if a.is_pos_inf() || b.is_neg_inf() {
        f64::INFINITY
    } else if a.is_neg_inf() || b.is_pos_inf() {
        f64::NEG_INFINITY
    } else {
        a.value() - b.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Flag {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statement {
    /// `lim F_n(φ) = F(φ)`.
    Weak,
    /// `liminf F_n(φ) ≥ F(φ)`, lsc `φ`.
    LscLiminf,
    /// `limsup F_n(φ) ≤ F(φ)`, usc `φ`.
    UscLimsup,
    /// `liminf F_n(G) ≥ F(G)`, open `G`.
    OpenLiminf,
    /// `limsup F_n(C) ≤ F(C)`, closed `C`.
    ClosedLimsup,
    /// `limsup F_n(K) ≤ F(K)`, compact `K`.
    CompactLimsup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Open,
    Closed,
    Compact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementResult {
    pub statement: Statement,
    pub flag: Flag,
    pub worst_margin: f64,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetResult {
    pub set_id: String,
    pub kind: SetKind,
    pub lhs_trend: Trend,
    pub rhs: ExtReal,
    pub margin: f64,
    pub verdict: Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionResult {
    pub index: usize,
    pub trend: Trend,
    pub target: ExtReal,
    pub lsc_margin: f64,
    pub usc_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub statements: Vec<StatementResult>,
    pub functions: Vec<FunctionResult>,
    pub sets: Vec<SetResult>,
    /// Whether `ρ(F_n) → 0` is known, which gates the equivalence of the
    /// functional and set statements.
    pub equivalence: Flag,
}

impl ConvergenceReport {
    pub fn flag(&self, s: Statement) -> Option<Flag> {
        self.statements.iter().find(|r| r.statement == s).map(|r| r.flag)
    }

    /// Every statement present passed.
    pub fn passed(&self) -> bool {
        self.statements.iter().all(|r| r.flag == Flag::Pass)
    }

    pub fn failed(&self) -> bool {
        self.statements.iter().any(|r| r.flag == Flag::Fail)
    }

    /// `(5)∧(6) ⇒ (4)` and `(8) ⇒ (9)` wherever both sides were checked.
    pub fn implications_hold(&self) -> bool {
        let pass = |s| self.flag(s) == Some(Flag::Pass);
        let weak_ok = !(pass(Statement::LscLiminf) && pass(Statement::UscLimsup)) || pass(Statement::Weak);
        let closed_ok = !pass(Statement::ClosedLimsup)
            || self.flag(Statement::CompactLimsup).is_none_or(|f| f == Flag::Pass);
        weak_ok && closed_ok
    }

    /// CSV with columns `set_id,kind,lhs_trend,rhs,margin,verdict`.
    pub fn sets_csv(&self) -> String {
        let mut out = String::from("set_id,kind,lhs_trend,rhs,margin,verdict\n");
        for s in &self.sets {
            let kind = match s.kind {
                SetKind::Open => "open",
                SetKind::Closed => "closed",
                SetKind::Compact => "compact",
            };
            let lhs = match s.kind {
                SetKind::Open => s.lhs_trend.liminf,
                _ => s.lhs_trend.limsup,
            };
            let verdict = match s.verdict {
                Flag::Pass => "PASS",
                Flag::Fail => "FAIL",
                Flag::Inconclusive => "INCONCLUSIVE",
            };
            out.push_str(&format!("{},{},{},{},{},{}\n", s.set_id, kind, lhs, s.rhs, s.margin, verdict));
        }
        out
    }
}

fn aggregate(statement: Statement, items: impl Iterator<Item = (f64, bool, String)>, tol: f64) -> StatementResult {
    let mut worst = f64::INFINITY;
    let mut witness = None;
    let mut inconclusive = false;
    let mut any = false;
    for (margin, conclusive, id) in items {
        any = true;
        inconclusive |= !conclusive;
        if margin < worst {
            worst = margin;
            witness = Some(id);
        }
    }
    let flag = if worst < -tol {
        Flag::Fail
    } else if inconclusive || !any {
        Flag::Inconclusive
    } else {
        Flag::Pass
    };
    StatementResult { statement, flag, worst_margin: worst, witness }
}

fn equivalence_flag(seq: &FormSequence) -> Flag {
    match seq.n_list.last() {
        Some(&n) if seq.epsilon(n).is_some() => Flag::Pass,
        _ => Flag::Inconclusive,
    }
}

fn per_n<T: Send>(seq: &FormSequence, eval: impl Fn(&QuasiLinearForm) -> T + Sync + Send) -> Result<Vec<T>> {
    let forms = seq.forms()?;
    Ok(forms.par_iter().map(eval).collect())
}

/// Statements (4)-(6) on `test_functions`.
pub fn weak_convergence_check(
    seq: &FormSequence,
    f: &QuasiLinearForm,
    test_functions: &[GridFn],
    cfg: &CheckConfig,
) -> Result<ConvergenceReport> {
    f.grid().ensure_same(&seq.y_grid, "limit form")?;
    let values = per_n(seq, |form| test_functions.iter().map(|phi| form.evaluate(phi)).collect::<Result<Vec<_>>>())?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut functions = Vec::new();
    for (i, phi) in test_functions.iter().enumerate() {
        let col: Vec<ExtReal> = values.iter().map(|row| row[i]).collect();
        let tr = trend(&seq.n_list, &col, cfg.extrapolation);
        let target = f.evaluate(phi)?;
        functions.push(FunctionResult {
            index: i,
            lsc_margin: gap(tr.liminf, target),
            usc_margin: gap(target, tr.limsup),
            trend: tr,
            target,
        });
    }
    let items = |m: fn(&FunctionResult) -> f64| {
        functions.iter().map(move |r| (m(r), r.trend.conclusive, format!("phi{}", r.index))).collect::<Vec<_>>()
    };
    let statements = vec![
        aggregate(Statement::Weak, items(|r| r.lsc_margin.min(r.usc_margin)).into_iter(), cfg.tol),
        aggregate(Statement::LscLiminf, items(|r| r.lsc_margin).into_iter(), cfg.tol),
        aggregate(Statement::UscLimsup, items(|r| r.usc_margin).into_iter(), cfg.tol),
    ];
    Ok(ConvergenceReport { statements, functions, sets: Vec::new(), equivalence: equivalence_flag(seq) })
}

/// A set with its identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSet {
    pub id: String,
    pub set: YSet,
}

/// Statements (7)-(9). Compact sets are also checked as closed sets.
pub fn ldp_bounds_check(
    seq: &FormSequence,
    f: &QuasiLinearForm,
    open: &[NamedSet],
    closed: &[NamedSet],
    compact: &[NamedSet],
    cfg: &CheckConfig,
) -> Result<ConvergenceReport> {
    f.grid().ensure_same(&seq.y_grid, "limit form")?;
    let mut all: Vec<(SetKind, &NamedSet)> = Vec::new();
    all.extend(open.iter().map(|s| (SetKind::Open, s)));
    all.extend(closed.iter().map(|s| (SetKind::Closed, s)));
    all.extend(compact.iter().map(|s| (SetKind::Compact, s)));
    let values = per_n(seq, |form| all.iter().map(|(_, s)| form.eval_on_yset(&s.set)).collect::<Vec<_>>())?;
    let sets: Vec<SetResult> = all
        .iter()
        .enumerate()
        .map(|(i, (kind, s))| {
            let col: Vec<ExtReal> = values.iter().map(|row| row[i]).collect();
            let tr = trend(&seq.n_list, &col, cfg.extrapolation);
            let rhs = f.eval_on_yset(&YSet::nodes(s.set.nodes.clone()));
            let margin = match kind {
                SetKind::Open => gap(tr.liminf, rhs),
                _ => gap(rhs, tr.limsup),
            };
            let verdict = if margin < -cfg.tol {
                Flag::Fail
            } else if tr.conclusive {
                Flag::Pass
            } else {
                Flag::Inconclusive
            };
            SetResult { set_id: s.id.clone(), kind: *kind, lhs_trend: tr, rhs, margin, verdict }
        })
        .collect();
    let pick = |kinds: &[SetKind]| {
        sets.iter()
            .filter(|s| kinds.contains(&s.kind))
            .map(|s| (s.margin, s.lhs_trend.conclusive, s.set_id.clone()))
            .collect::<Vec<_>>()
    };
    let mut statements = Vec::new();
    if !open.is_empty() {
        statements.push(aggregate(Statement::OpenLiminf, pick(&[SetKind::Open]).into_iter(), cfg.tol));
    }
    if !closed.is_empty() || !compact.is_empty() {
        statements.push(aggregate(
            Statement::ClosedLimsup,
            pick(&[SetKind::Closed, SetKind::Compact]).into_iter(),
            cfg.tol,
        ));
    }
    if !compact.is_empty() {
        statements.push(aggregate(Statement::CompactLimsup, pick(&[SetKind::Compact]).into_iter(), cfg.tol));
    }
    Ok(ConvergenceReport { statements, functions: Vec::new(), sets, equivalence: equivalence_flag(seq) })
}

/// Closed `[y_i, y_j]` and open `(y_i, y_j)` intervals with endpoints on a
/// spread of nodes of a 1-D grid, `cap` sets in total.
pub fn default_interval_sets(grid: &Grid, cap: usize) -> (Vec<NamedSet>, Vec<NamedSet>) {
    let n = grid.len();
    let pairs_needed = cap.div_ceil(2);
    let mut m = 2;
    while m * (m - 1) / 2 < pairs_needed && m < n {
        m += 1;
    }
    let ends: Vec<usize> = (0..m).map(|k| if m == 1 { 0 } else { k * (n - 1) / (m - 1) }).collect();
    let mut open = Vec::new();
    let mut closed = Vec::new();
    'outer: for (a, &i) in ends.iter().enumerate() {
        for &j in &ends[a + 1..] {
            if closed.len() + open.len() >= cap {
                break 'outer;
            }
            let (lo, hi) = (grid.coord(i), grid.coord(j));
            closed.push(NamedSet { id: format!("C[{i},{j}]"), set: YSet::from_span(grid, Span::closed(lo, hi)) });
            if closed.len() + open.len() < cap {
                let set = YSet { nodes: (i + 1..j).collect(), spans: vec![Span::open(lo, hi)] };
                open.push(NamedSet { id: format!("G({i},{j})"), set });
            }
        }
    }
    (open, closed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticTightness {
    pub evidence: bool,
    /// Limsup trend of `F_n(K_i^c)` per window.
    pub trace: Vec<ExtReal>,
    pub max_rho_bound: f64,
}

pub fn asymptotic_tightness_check(
    seq: &FormSequence,
    windows: &[YSet],
    cfg: &TightnessConfig,
) -> Result<AsymptoticTightness> {
    for w in windows.windows(2) {
        if !w[0].nodes.iter().all(|i| w[1].nodes.contains(i)) {
            return Err(Error::InvalidParameter("windows must be nested".into()));
        }
    }
    let comps: Vec<YSet> = windows.iter().map(|w| w.complement(&seq.y_grid)).collect();
    let values = per_n(seq, |form| comps.iter().map(|c| form.eval_on_yset(c)).collect::<Vec<_>>())?;
    let trace: Vec<ExtReal> = (0..windows.len())
        .map(|i| {
            let col: Vec<ExtReal> = values.iter().map(|row| row[i]).collect();
            trend(&seq.n_list, &col, Extrapolation::Richardson).limsup
        })
        .collect();
    let max_rho_bound = seq.forms()?.iter().map(|f| f.rho_bound()).fold(f64::NEG_INFINITY, f64::max);
    let evidence = decreasing_to_floor(&trace, cfg) && max_rho_bound.is_finite();
    Ok(AsymptoticTightness { evidence, trace, max_rho_bound })
}

/// `f̂(y) = -lim F_n(B(y, δ))` over closed coordinate balls. Over- or
/// under-estimates `f` by its oscillation on the ball.
pub fn estimate_rate(seq: &FormSequence, delta: f64, cfg: &CheckConfig) -> Result<GridFn> {
    let grid = &seq.y_grid;
    let h = (0..grid.dim()).map(|a| grid.axis(a).step()).fold(0.0, f64::max);
    if delta < h * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter(format!("delta {delta} below the grid spacing {h}")));
    }
    let slack = 1e-9 * h.max(f64::MIN_POSITIVE);
    let balls: Vec<YSet> = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            let nodes: Vec<usize> = (0..grid.len())
                .filter(|&j| {
                    let q = grid.point(j);
                    (0..grid.dim()).all(|a| (q[a] - p[a]).abs() <= delta + slack)
                })
                .collect();
            if grid.dim() == 1 {
                YSet { nodes, spans: vec![Span::closed(p[0] - delta, p[0] + delta)] }
            } else {
                YSet::nodes(nodes)
            }
        })
        .collect();
    let values = per_n(seq, |form| balls.iter().map(|b| form.eval_on_yset(b)).collect::<Vec<_>>())?;
    let est = (0..grid.len())
        .map(|i| {
            let col: Vec<ExtReal> = values.iter().map(|row| row[i]).collect();
            -trend(&seq.n_list, &col, cfg.extrapolation).limit
        })
        .collect();
    Ok(GridFn::new(grid.clone(), est)?.with_tag(Tag::Plain))
}
