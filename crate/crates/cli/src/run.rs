//! Execution of each scenario kind. Runners return artifacts as bytes; the
//! caller writes them, so a run is a pure function of the scenario.

use std::fmt::Write as _;

use moreau::convergence::SetKind;
use moreau::merton::{self, TailRateReport};
use moreau::{
    conjugate, default_interval_sets, dual_conjugate, ldp_bounds_check, legendre_fast, pipeline, subdifferential_map,
    verdict, Existence, Flag, FormSequence, GartnerInput, GartnerOutput, GridFn, Kernel, NamedSet,
};
use serde::Serialize;

use crate::scenario::{
    payload, ConjugatePayload, CoveringPayload, Direction, GenericLdp, Kind, LdpPayload, Method, MertonPayload,
    Scenario,
};
use crate::Failure;

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// `true` when the run ends in a FAIL verdict.
    pub failed: bool,
    pub status: String,
    pub digest: String,
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s.into_bytes()
}

/// Serialized name of a unit enum variant.
fn tag<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn core(e: moreau::Error) -> Failure {
    Failure::Validation(e.to_string())
}

fn name(explicit: &Option<String>, default: String) -> String {
    explicit.clone().unwrap_or(default)
}

pub fn run(s: &Scenario, seed: Option<u64>) -> Result<Outcome, Failure> {
    match s.kind {
        Kind::Conjugate => run_conjugate(s, payload(s)?),
        Kind::Covering => run_covering(s, payload(s)?),
        Kind::Ldp => run_ldp(s, payload(s)?),
        Kind::Merton => {
            let mut p: MertonPayload = payload(s)?;
            if let Some(seed) = seed.or(s.seed) {
                p.seed = seed;
            }
            run_merton(s, &p)
        }
    }
}

fn grid_csv(f: &GridFn, header: &str) -> Vec<u8> {
    let g = f.grid();
    let mut out = format!("{header}\n");
    for i in 0..f.len() {
        let p = g.point(i);
        if g.dim() == 1 {
            writeln!(out, "{},{}", p[0], f.get(i)).unwrap();
        } else {
            writeln!(out, "{},{},{}", p[0], p[1], f.get(i)).unwrap();
        }
    }
    out.into_bytes()
}

#[derive(Serialize)]
struct ConjugateReport {
    direction: Direction,
    method: Method,
    conjugate: GridFn,
    #[serde(skip_serializing_if = "Option::is_none")]
    subdifferential: Option<moreau::conjugacy::SubdiffMap>,
}

fn run_conjugate(s: &Scenario, p: ConjugatePayload) -> Result<Outcome, Failure> {
    let k = Kernel::from_spec(&p.kernel, p.x_grid.clone(), p.y_grid.clone()).map_err(core)?;
    let fast_ok = k.is_bilinear() && p.x_grid.dim() == 1 && p.direction == Direction::Forward;
    let method = match p.method {
        Method::Auto if fast_ok => Method::Fast,
        Method::Auto => Method::Brute,
        Method::Fast if !fast_ok => {
            return Err(Failure::Validation("fast method needs a forward bilinear kernel on lines".into()))
        }
        m => m,
    };
    let out = match (p.direction, method) {
        (Direction::Forward, Method::Fast) => legendre_fast(&p.f, &p.x_grid),
        (Direction::Forward, _) => conjugate(&p.f, &k),
        (Direction::Dual, _) => dual_conjugate(&p.f, &k),
    }
    .map_err(core)?;
    let subdifferential = match (p.subdifferential, p.direction) {
        (false, _) => None,
        (true, Direction::Dual) => Some(subdifferential_map(&p.f, &k).map_err(core)?),
        (true, Direction::Forward) => {
            return Err(Failure::Validation("subdifferential needs direction `dual` (f on X)".into()))
        }
    };
    let finite = out.values().iter().filter(|v| v.is_finite()).count();
    let digest = format!(
        "conjugate: {:?} via {:?}, {} nodes, {} finite, range [{}, {}]",
        p.direction,
        method,
        out.len(),
        finite,
        out.min_value(),
        out.max_value()
    );
    let report = ConjugateReport { direction: p.direction, method, conjugate: out, subdifferential };
    let artifacts = vec![
        Artifact { name: name(&s.outputs.json, "conjugate.json".into()), bytes: json(&report) },
        Artifact { name: name(&s.outputs.csv, "conjugate.csv".into()), bytes: grid_csv(&report.conjugate, "node,value") },
    ];
    Ok(Outcome { artifacts, failed: false, status: "COMPLETE".into(), digest })
}

fn run_covering(s: &Scenario, mut p: CoveringPayload) -> Result<Outcome, Failure> {
    let k = Kernel::from_spec(&p.kernel, p.x_grid.clone(), p.y_grid.clone()).map_err(core)?;
    if let Some(t) = s.tolerances.qc {
        p.config.qc_tolerance = Some(t);
    }
    let xprime = p.x_prime.clone().unwrap_or_else(|| (0..p.x_grid.len()).collect());
    if let Some(&bad) = xprime.iter().find(|&&i| i >= p.x_grid.len()) {
        return Err(Failure::Validation(format!("x_prime node {bad} outside the X grid")));
    }
    let v = verdict(&p.g, &k, &xprime, &p.config).map_err(core)?;
    let c = &v.covering;
    let mut table = String::from("  y node |        y | B°g(y) | alg | top | in Z | covers X nodes\n");
    for piece in &c.pieces {
        let mark = |set: &[usize]| if set.contains(&piece.y) { "yes" } else { "-" };
        writeln!(
            table,
            "{:>8} | {:>8} | {:>6} | {:>3} | {:>3} | {:>4} | {:?}",
            piece.y,
            format!("{:.4}", p.y_grid.coord(piece.y)),
            format!("{}", c.dual.get(piece.y)),
            mark(&c.alg_essential),
            mark(&c.top_essential),
            mark(&c.z),
            piece.xs
        )
        .unwrap();
    }
    let digest = format!(
        "covering: existence {:?}, uniqueness {:?}, covered {}, minimal (alg/top) {}/{}, uncovered {:?}\n{table}",
        v.existence, v.uniqueness, c.covered, c.minimal_alg, c.minimal_top, c.uncovered
    );
    let status = format!("{} / {}", tag(&v.existence), tag(&v.uniqueness));
    let failed = v.existence == Existence::No;
    let mut csv = String::from("y_node,rate,alg_essential,top_essential,in_z,covers\n");
    for piece in &c.pieces {
        let b = |set: &[usize]| set.contains(&piece.y) as u8;
        let xs: Vec<String> = piece.xs.iter().map(|x| x.to_string()).collect();
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            piece.y,
            c.dual.get(piece.y),
            b(&c.alg_essential),
            b(&c.top_essential),
            b(&c.z),
            xs.join(" ")
        )
        .unwrap();
    }
    let artifacts = vec![
        Artifact { name: name(&s.outputs.json, "covering.json".into()), bytes: json(&v) },
        Artifact { name: name(&s.outputs.csv, "covering.csv".into()), bytes: csv.into_bytes() },
    ];
    Ok(Outcome { artifacts, failed, status, digest: digest.trim_end().to_string() })
}

fn ldp_digest(out: &GartnerOutput) -> String {
    let a = &out.assumptions;
    format!(
        "ldp: verdict {}, mode {:?}, covered {}, minimal_top {}, |idom g| = {}, |Z| = {}\n  tightness witness {:?}, strong coercivity {}, quasi-continuity {}\n  upper bound on closed sets {}, lower bound on open sets within Z {}{}",
        tag(&out.verdict),
        out.mode,
        out.covered,
        out.minimal_top,
        out.idom.len(),
        out.z.len(),
        a.tightness.x0,
        tag(&a.strongly_coercive),
        a.quasi_continuity.holds,
        out.upper_bound,
        out.lower_bound_on_z,
        out.warnings.iter().map(|w| format!("\n  warning: {w}")).collect::<String>()
    )
}

fn run_ldp(s: &Scenario, p: LdpPayload) -> Result<Outcome, Failure> {
    let (out, bounds) = match p {
        LdpPayload::Generic(p) => generic_ldp(s, p)?,
        LdpPayload::Merton(cfg) => (merton::ldp_pipeline(&cfg).map_err(core)?, None),
    };
    let mut digest = ldp_digest(&out);
    let mut failed = false;
    let mut artifacts = vec![
        Artifact { name: name(&s.outputs.json, "ldp.json".into()), bytes: json(&out) },
        Artifact { name: name(&s.outputs.csv, "ldp_rate.csv".into()), bytes: out.rate_csv().into_bytes() },
    ];
    let mut status = tag(&out.verdict);
    if let Some(r) = bounds {
        let fails = r.sets.iter().filter(|x| x.verdict == Flag::Fail).count();
        let worst = r.sets.iter().map(|x| x.margin).fold(f64::INFINITY, f64::min);
        failed = r.failed();
        write!(digest, "\n  bounds check: {} sets, {} FAIL, worst margin {:e}", r.sets.len(), fails, worst).unwrap();
        if failed {
            status.push_str(" / bounds FAIL");
        }
        artifacts.push(Artifact { name: name(&s.outputs.sets_csv, "ldp_sets.csv".into()), bytes: r.sets_csv().into_bytes() });
    }
    Ok(Outcome { artifacts, failed, status, digest })
}

fn generic_ldp(
    s: &Scenario,
    mut p: GenericLdp,
) -> Result<(GartnerOutput, Option<moreau::ConvergenceReport>), Failure> {
    let k = Kernel::from_spec(&p.kernel, p.x_grid.clone(), p.y_grid.clone()).map_err(core)?;
    if let Some(t) = s.tolerances.check {
        p.check.tol = t;
    }
    let seqs = p
        .family
        .iter()
        .map(|m| FormSequence::new(p.y_grid.clone(), m.spec.clone(), m.n_list.clone()))
        .collect::<moreau::Result<Vec<_>>>()
        .map_err(core)?;
    let mut input = GartnerInput::new(seqs, k, p.mode).map_err(core)?;
    input.check = p.check;
    input.coercivity = moreau::CoercivityConfig::for_kernel(&input.kernel, p.margin);
    input.assume_tight = p.assume_tight;
    let out = pipeline(&input).map_err(core)?;
    let bounds = if p.bounds_check.enabled && input.sequences.len() == 1 && p.y_grid.dim() == 1 {
        let (mut open, mut closed) = default_interval_sets(&p.y_grid, p.bounds_check.cap);
        let mut compact = Vec::new();
        for u in &p.bounds_check.sets {
            let set = NamedSet { id: u.id.clone(), set: u.set.clone() };
            match u.kind {
                SetKind::Open => open.push(set),
                SetKind::Closed => closed.push(set),
                SetKind::Compact => compact.push(set),
            }
        }
        Some(ldp_bounds_check(&input.sequences[0], &out.fbar, &open, &closed, &compact, &input.check).map_err(core)?)
    } else {
        None
    };
    Ok((out, bounds))
}

#[derive(Serialize)]
struct MertonArtifact<'a> {
    config: &'a MertonPayload,
    g_star_c: f64,
    z0: f64,
    checks: Vec<(String, Flag)>,
    report: &'a TailRateReport,
}

fn merton_checks(p: &MertonPayload, r: &TailRateReport) -> Vec<(String, Flag)> {
    let pass = |b: bool| if b { Flag::Pass } else { Flag::Fail };
    let gs = merton::g_star(p.c, &p.params);
    let step = p.xi.step;
    // A ξ-grid minimum is within (slope·step)² of the true one near a flat minimum.
    let oracle_tol = 1e-5_f64.max(step * step);
    let mut checks = vec![
        ("control oracle equals g*(c)".to_string(), pass((r.control_oracle - gs).abs() <= oracle_tol)),
        ("sup over xi moves monotonically toward -g*(c)".to_string(), pass(r.monotone_toward_target)),
    ];
    let mut mc_flag = None;
    for c in &r.cells {
        if let (Some(v), Some(se)) = (c.mc_value, c.mc_se) {
            let ok = (v - c.exact_value).abs() <= 3.0 * se;
            mc_flag = Some(if ok && mc_flag != Some(Flag::Fail) { Flag::Pass } else { Flag::Fail });
        } else if c.mc_hits == Some(0) && mc_flag.is_none() {
            mc_flag = Some(Flag::Inconclusive);
        }
    }
    if let Some(f) = mc_flag {
        checks.push(("Monte Carlo within 3 SE of the exact tail".to_string(), f));
    }
    checks
}

fn run_merton(s: &Scenario, p: &MertonPayload) -> Result<Outcome, Failure> {
    merton_outcome(p, &s.outputs.json, &s.outputs.csv)
}

pub fn merton_outcome(p: &MertonPayload, json_name: &Option<String>, csv_name: &Option<String>) -> Result<Outcome, Failure> {
    let r = merton::tail_rate_experiment(p).map_err(core)?;
    let checks = merton_checks(p, &r);
    let failed = checks.iter().any(|c| c.1 == Flag::Fail);
    let mut digest = format!(
        "merton: c = {}, target -g*(c) = {}, z0 = {}, control oracle {}\n",
        p.c,
        r.target,
        merton::z0(&p.params),
        r.control_oracle
    );
    for row in &r.per_t {
        writeln!(digest, "  T = {:>8}: sup_xi = {:.7} at xi = {}", row.t, row.sup_over_xi, row.argmax_xi).unwrap();
    }
    for (what, flag) in &checks {
        writeln!(digest, "  {}: {what}", tag(flag)).unwrap();
    }
    for n in &r.notes {
        writeln!(digest, "  note: {n}").unwrap();
    }
    let art = MertonArtifact { config: p, g_star_c: merton::g_star(p.c, &p.params), z0: merton::z0(&p.params), checks, report: &r };
    let artifacts = vec![
        Artifact { name: name(json_name, "merton.json".into()), bytes: json(&art) },
        Artifact { name: name(csv_name, "merton_tailrate.csv".into()), bytes: r.csv().into_bytes() },
    ];
    let status = if failed { "FAIL" } else { "PASS" }.to_string();
    Ok(Outcome { artifacts, failed, status, digest: digest.trim_end().to_string() })
}
