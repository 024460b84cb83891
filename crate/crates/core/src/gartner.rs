//! Generalized Gärtner-Ellis pipeline: `g(x) = sup_i limsup_n F_{n,i}(b(x,·))`,
//! the lower rate `B°g`, the covering of `idom g` and the identification set `Z`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugacy::{coercivity_report, dual_conjugate, fc_membership, CoercivityConfig, Evidence, Kernel};
use crate::convergence::{trend, CheckConfig, FormSequence};
use crate::covering::{build_covering, quasicontinuity_check_tol, resolution_tolerance, QuasiContinuity};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::grid::{domain_masks, DomainMask, GridFn, Tag};
use crate::quasilinear::QuasiLinearForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Limsup,
    /// The limsup defining `g` is asserted to be a limit; checked on the trends.
    LimitAsserted,
}

#[derive(Debug, Clone)]
pub struct GartnerInput {
    /// One sequence per family member; all on the kernel's Y grid.
    pub sequences: Vec<FormSequence>,
    pub kernel: Kernel,
    pub mode: Mode,
    pub check: CheckConfig,
    pub coercivity: CoercivityConfig,
    /// Caller-supplied asymptotic tightness, used when the structural criterion fails.
    pub assume_tight: bool,
}

impl GartnerInput {
    pub fn new(sequences: Vec<FormSequence>, kernel: Kernel, mode: Mode) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::InvalidParameter("at least one sequence is needed".into()));
        }
        for s in &sequences {
            s.y_grid.ensure_same(kernel.y_grid(), "sequence Y grid")?;
        }
        let coercivity = CoercivityConfig::for_kernel(&kernel, 0.1);
        Ok(GartnerInput { sequences, kernel, mode, check: CheckConfig::default(), coercivity, assume_tight: false })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GComputation {
    pub g: GridFn,
    pub mode: Mode,
    /// Largest limsup-liminf spread of a finite trend.
    pub max_spread: f64,
    pub warnings: Vec<String>,
}

/// Per X node, the limsup trend of each member, then the sup over members.
/// In limit-asserted mode a spread above tolerance downgrades to limsup mode.
pub fn compute_g_detailed(input: &GartnerInput) -> Result<GComputation> {
    let k = &input.kernel;
    let nx = k.x_grid().len();
    let forms: Vec<Vec<QuasiLinearForm>> =
        input.sequences.iter().map(|s| s.forms()).collect::<Result<_>>()?;
    let per_x: Vec<Result<(ExtReal, f64, bool)>> = (0..nx)
        .into_par_iter()
        .map(|x| {
            let mut g = ExtReal::NEG_INF;
            let mut spread = 0.0f64;
            let mut conclusive = true;
            for (s, fs) in input.sequences.iter().zip(&forms) {
                let vals = fs.iter().map(|f| f.evaluate_section(k, x)).collect::<Result<Vec<_>>>()?;
                let t = trend(&s.n_list, &vals, input.check.extrapolation);
                conclusive &= t.conclusive;
                if t.limsup.is_finite() && t.liminf.is_finite() {
                    spread = spread.max(t.limsup.value() - t.liminf.value());
                } else if t.limsup != t.liminf {
                    spread = f64::INFINITY;
                }
                g = g.oplus(t.limsup);
            }
            Ok((g, spread, conclusive))
        })
        .collect();
    let mut values = Vec::with_capacity(nx);
    let mut max_spread = 0.0f64;
    let mut conclusive = true;
    for r in per_x {
        let (g, s, c) = r?;
        values.push(g);
        max_spread = max_spread.max(s);
        conclusive &= c;
    }
    let mut warnings = Vec::new();
    let mut mode = input.mode;
    if !conclusive {
        warnings.push("fewer than three n values: trends are not extrapolated".into());
    }
    if mode == Mode::LimitAsserted && max_spread > input.check.tol {
        warnings.push(format!(
            "limsup and liminf trends differ by {max_spread:e} > {:e}; falling back to limsup mode",
            input.check.tol
        ));
        mode = Mode::Limsup;
    }
    Ok(GComputation { g: GridFn::new(k.x_grid().clone(), values)?, mode, max_spread, warnings })
}

pub fn compute_g(input: &GartnerInput) -> Result<GridFn> {
    Ok(compute_g_detailed(input)?.g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessCriterion {
    pub holds_evidence: bool,
    pub x0: Option<usize>,
    pub strong_coercivity: Evidence,
}

/// Looks for `x0 ∈ idom g` with `b(x0,·)` bounded below, read on the grid as:
/// finite, and no lower on the sides of Y that emulate infinity than inside.
/// Also needs strong coercivity evidence.
pub fn tightness_criterion(k: &Kernel, g: &GridFn, cfg: &CoercivityConfig) -> Result<TightnessCriterion> {
    g.grid().ensure_same(k.x_grid(), "g")?;
    let yg = k.y_grid();
    let DomainMask { idom, .. } = domain_masks(g, cfg.radius);
    let bounded_below = |x: usize| {
        let (mut edge, mut inside) = (ExtReal::POS_INF, ExtReal::POS_INF);
        for y in 0..yg.len() {
            let b = k.eval(x, y);
            if b.is_neg_inf() {
                return false;
            }
            if cfg.y_window.on_open_edge(yg, y) {
                edge = edge.min(b);
            } else {
                inside = inside.min(b);
            }
        }
        edge >= inside
    };
    let x0 = (0..g.len()).find(|&x| idom[x] && bounded_below(x));
    let strong = coercivity_report(k, cfg)?.strongly_coercive;
    Ok(TightnessCriterion { holds_evidence: x0.is_some() && strong.holds(), x0, strong_coercivity: strong })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GartnerVerdict {
    FullLdp,
    BoundsOnly,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub coercive: Evidence,
    pub strongly_coercive: Evidence,
    pub upper_coercive: Evidence,
    /// `B°g ∈ F_c` at every X node.
    pub rate_in_fc: Evidence,
    pub quasi_continuity: QuasiContinuity,
    pub tightness: TightnessCriterion,
    pub tight: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GartnerOutput {
    pub g: GridFn,
    /// `B°g`.
    pub rate_lower: GridFn,
    pub idom: Vec<usize>,
    pub covered: bool,
    pub minimal_top: bool,
    pub z: Vec<usize>,
    pub z_boundary: Vec<usize>,
    pub mode: Mode,
    pub verdict: GartnerVerdict,
    /// `limsup F_n(C) ≤ F̄(C)` for closed `C`.
    pub upper_bound: bool,
    /// `liminf F_n(G) ≥ F̄(G ∩ Z)` for open `G`. Covering of `idom g` is a
    /// consequence here, not a hypothesis; `covered` reports the grid reading.
    pub lower_bound_on_z: bool,
    pub assumptions: AssumptionReport,
    /// Max-plus form with density `B°g`.
    pub fbar: QuasiLinearForm,
    pub warnings: Vec<String>,
}

impl GartnerOutput {
    /// CSV with columns `y,rate_lower,in_z`.
    pub fn rate_csv(&self) -> String {
        let grid = self.rate_lower.grid();
        let mut out = String::from("y,rate_lower,in_z\n");
        for i in 0..grid.len() {
            let y = if grid.dim() == 1 {
                format!("{}", grid.coord(i))
            } else {
                let p = grid.point(i);
                format!("{} {}", p[0], p[1])
            };
            out.push_str(&format!("{y},{},{}\n", self.rate_lower.get(i), self.z.contains(&i) as u8));
        }
        out
    }
}

pub fn pipeline(input: &GartnerInput) -> Result<GartnerOutput> {
    let gc = compute_g_detailed(input)?;
    pipeline_from_g(input, gc)
}

/// The pipeline on a precomputed `g`.
pub fn pipeline_from_g(input: &GartnerInput, gc: GComputation) -> Result<GartnerOutput> {
    let k = &input.kernel;
    let radius = input.coercivity.radius;
    let g = gc.g;
    let rate_lower = dual_conjugate(&g, k)?.with_tag(Tag::Lsc);
    let idom = DomainMask::nodes(&domain_masks(&g, radius).idom);
    let covering = build_covering(&g, k, &idom, radius)?;
    let coerc = coercivity_report(k, &input.coercivity)?;
    let rate_in_fc = Evidence::combine(fc_membership(&rate_lower, k, &input.coercivity)?);
    let quasi_continuity = quasicontinuity_check_tol(&rate_lower, radius, resolution_tolerance(&rate_lower));
    let tightness = tightness_criterion(k, &g, &input.coercivity)?;
    let tight = tightness.holds_evidence || input.assume_tight;
    let limit = gc.mode == Mode::LimitAsserted;
    let verdict = if tight && covering.covered && covering.minimal_top && limit && quasi_continuity.holds {
        GartnerVerdict::FullLdp
    } else if tight {
        GartnerVerdict::BoundsOnly
    } else {
        GartnerVerdict::Inconclusive
    };
    let assumptions = AssumptionReport {
        coercive: coerc.coercive,
        strongly_coercive: coerc.strongly_coercive,
        upper_coercive: coerc.upper_coercive,
        rate_in_fc,
        quasi_continuity,
        tightness,
        tight,
    };
    Ok(GartnerOutput {
        fbar: QuasiLinearForm::max_plus(rate_lower.clone()),
        g,
        rate_lower,
        idom,
        covered: covering.covered,
        minimal_top: covering.minimal_top,
        z: covering.z,
        z_boundary: covering.z_boundary,
        mode: gc.mode,
        verdict,
        upper_bound: tight,
        lower_bound_on_z: tight && limit,
        assumptions,
        warnings: gc.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugacy::{conjugate, Window};
    use crate::convergence::SequenceSpec;
    use crate::grid::Grid;

    fn line() -> Grid {
        Grid::with_step(-2.0, 2.0, 0.04).unwrap()
    }

    fn gaussian_input() -> GartnerInput {
        let y = line();
        let seq = FormSequence::new(
            y.clone(),
            SequenceSpec::Gaussian { mean: 0.0, var: 1.0, drift: 0.0, floor: None },
            vec![1e3, 1e4, 1e5],
        )
        .unwrap();
        GartnerInput::new(vec![seq], Kernel::bilinear(y.clone(), y).unwrap(), Mode::LimitAsserted).unwrap()
    }

    #[test]
    fn gaussian_g_is_exact() {
        let input = gaussian_input();
        let g = compute_g(&input).unwrap();
        for i in 0..g.len() {
            let x = g.grid().coord(i);
            assert_eq!(g.get(i), ExtReal::new(x * x / 2.0));
        }
    }

    #[test]
    fn gaussian_pipeline_identifies_the_rate() {
        let out = pipeline(&gaussian_input()).unwrap();
        let h: f64 = 0.04;
        for i in 0..out.rate_lower.len() {
            let y = out.rate_lower.grid().coord(i);
            assert!((out.rate_lower.get(i).value() - y * y / 2.0).abs() <= h * h);
        }
        assert!(out.covered && out.minimal_top);
        assert_eq!(out.mode, Mode::LimitAsserted);
        assert_eq!(out.assumptions.tightness.x0, Some(50));
        assert_eq!(out.verdict, GartnerVerdict::FullLdp, "{:?}", out.assumptions);
        let interior: Vec<usize> = (1..100).collect();
        assert!(interior.iter().all(|i| out.z.contains(i)));
        assert!(out.rate_csv().starts_with("y,rate_lower,in_z\n-2,2,"));
    }

    #[test]
    fn constant_sequence_gives_the_conjugate() {
        let y = line();
        let f = GridFn::sample(&y, |p| ExtReal::new((p[0].abs() - 1.0).max(0.0)));
        let seq = FormSequence::new(
            y.clone(),
            SequenceSpec::Constant { form: QuasiLinearForm::max_plus(f.clone()) },
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let k = Kernel::bilinear(y.clone(), y.clone()).unwrap();
        let input = GartnerInput::new(vec![seq], k.clone(), Mode::LimitAsserted).unwrap();
        let g = compute_g(&input).unwrap();
        assert!(g.is_bitwise_eq(&conjugate(&f, &k).unwrap()));

        // flat piece on [-1, 1]: the rate is not identified there
        let out = pipeline(&input).unwrap();
        assert_eq!(out.verdict, GartnerVerdict::BoundsOnly);
        assert!(!out.minimal_top);
        let flat: Vec<usize> = (0..y.len()).filter(|&i| y.coord(i).abs() < 1.0 - 1e-9).collect();
        assert!(flat.iter().all(|i| !out.z.contains(i)));
    }

    #[test]
    fn mismatched_trends_downgrade() {
        let y = line();
        let a = QuasiLinearForm::max_plus(GridFn::constant(&y, ExtReal::ZERO));
        let b = QuasiLinearForm::max_plus(GridFn::constant(&y, ExtReal::new(1.0)));
        let seq = FormSequence::new(y.clone(), SequenceSpec::Alternating { even: a, odd: b }, vec![1.0, 2.0, 3.0, 4.0])
            .unwrap();
        let input = GartnerInput::new(vec![seq], Kernel::bilinear(y.clone(), y).unwrap(), Mode::LimitAsserted).unwrap();
        let gc = compute_g_detailed(&input).unwrap();
        assert_eq!(gc.mode, Mode::Limsup);
        assert_eq!(gc.warnings.len(), 1);
    }

    #[test]
    fn half_line_bilinear_has_a_witness() {
        let x = Grid::line(0.0, 1.0, 11).unwrap();
        let y = Grid::line(-0.5, 3.0, 36).unwrap();
        let k = Kernel::bilinear(x.clone(), y).unwrap();
        let g = GridFn::sample(&x, |p| ExtReal::new(p[0]));
        let mut cfg = CoercivityConfig::for_kernel(&k, 0.1);
        cfg.y_window = Window::half_line(0.1);
        cfg.x_window = Window::half_line(0.1);
        let t = tightness_criterion(&k, &g, &cfg).unwrap();
        assert_eq!(t.x0, Some(0));
        // with Y open on both sides only x = 0 is bounded below
        let open = CoercivityConfig::for_kernel(&k, 0.1);
        let shifted = GridFn::sample(&x, |p| ExtReal::new(if p[0] < 0.05 { f64::INFINITY } else { p[0] }));
        assert_eq!(tightness_criterion(&k, &shifted, &open).unwrap().x0, None);
    }
}
