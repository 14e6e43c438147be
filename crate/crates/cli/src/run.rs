//! Mode dispatch: load instances, run solvers, simulations and audits, and
//! assemble the reports.

use std::path::{Path, PathBuf};

use advhyp_core::adversary_sim::{
    builtin_strategy, run_experiment, run_with_sources, ExperimentPlan, Target, TestFamily,
};
use advhyp_core::quantum::{
    block_reduction, compatibility_check, minimax_gap, monotonicity_check, restricted_chernoff, restricted_divergence,
    stronger_ssa_probe, superadditivity_audit, BipartiteStructure, DensityMatrix, MeasurementMenu, Membership,
    OneWayLocc, StateClass,
};
use advhyp_core::{
    certify_chernoff, certify_stein, solve_chernoff, solve_stein, ChernoffTest, ConvexClass, ExtReal, Side,
    SteinTest, TestRegion,
};
use serde::Serialize;

use crate::config::{parse_strategy, ExperimentConfig, Mode, TestKind};
use crate::error::{CliError, Result};
use crate::formats::{load_class, load_menu, load_povm, load_state, load_state_class};
use crate::report::{
    AuditReport, BlockReport, CertificateReport, CompatibilityOut, MinimaxOut, MonotonicityOut, SimulateReport,
    SolveReport, SsaOut, SuperadditivityOut, Units,
};

/// Everything a run produces, before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: serde_json::Value,
    pub csv: Option<String>,
    /// One line per result for the terminal.
    pub summary: Vec<String>,
    /// `false` when an optimality certificate failed.
    pub certified: bool,
}

fn to_value<T: Serialize>(report: &T) -> serde_json::Value {
    serde_json::to_value(report).expect("reports serialize")
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let u = Units(cfg.log_base);
    match cfg.mode()? {
        Mode::Stein | Mode::Chernoff => solve_classical(cfg, u),
        Mode::Simulate => simulate(cfg, u),
        Mode::QuantumStein | Mode::QuantumChernoff => quantum(cfg, u),
        Mode::Audit => audit(cfg, u),
    }
}

fn load_pair(cfg: &ExperimentConfig) -> Result<(ConvexClass, ConvexClass, String)> {
    let c = cfg.classical.as_ref().expect("validated");
    let (pp, qp) = (cfg.path(&c.p), cfg.path(&c.q));
    let p = load_class(&pp)?;
    let q = load_class(&qp)?;
    Ok((p, q, format!("classes {} and {}", pp.display(), qp.display())))
}

fn fmt_exponent(x: ExtReal, u: Units) -> String {
    match x {
        ExtReal::Finite(v) => format!("{v:.10} {}", u.unit()),
        other => format!("{other} {}", u.unit()),
    }
}

fn solve_classical(cfg: &ExperimentConfig, u: Units) -> Result<Outcome> {
    let (p, q, ctx) = load_pair(cfg)?;
    let tol = cfg.tol();
    let report = match cfg.mode()? {
        Mode::Stein => {
            let sol = solve_stein(&p, &q, tol).map_err(|e| CliError::core(&ctx, e))?;
            let cert = certify_stein(&p, &q, &sol).map_err(|e| CliError::core(&ctx, e))?;
            SolveReport::stein("stein", &sol, &cert, tol, u)
        }
        _ => {
            let sol = solve_chernoff(&p, &q, tol).map_err(|e| CliError::core(&ctx, e))?;
            let cert = certify_chernoff(&p, &q, &sol).map_err(|e| CliError::core(&ctx, e))?;
            SolveReport::chernoff("chernoff", &sol, &cert, tol, u)
        }
    };
    let mut summary = vec![format!("{} exponent: {}", report.mode, fmt_exponent(report.exponent, u))];
    if let Some(l) = report.lambda_star {
        summary.push(format!("lambda*: {l:.10}"));
    }
    summary.push(format!("certificate: {}", if report.certificate.passes() { "pass" } else { "FAIL" }));
    Ok(Outcome {
        json: to_value(&report),
        csv: None,
        summary,
        certified: report.certificate.passes(),
    })
}

fn plan(cfg: &ExperimentConfig, family: TestFamily) -> ExperimentPlan {
    ExperimentPlan {
        family,
        n_values: cfg.n.clone(),
        trials: cfg.trials.expect("validated"),
        seed: cfg.seed,
        tol: cfg.tol(),
    }
}

fn simulation_summary(r: &advhyp_core::adversary_sim::ExperimentResult) -> Vec<String> {
    let mut out = vec![format!(
        "{} trials per n, strategies {} / {}",
        r.trials_per_n, r.p_strategy, r.q_strategy
    )];
    if let Some(reason) = &r.refused {
        out.push(format!("refused: {reason}"));
    }
    match &r.fit {
        Some(fit) => out.push(format!(
            "fitted exponent: {:.6} ± {:.6} {}{} (theory {})",
            fit.exponent,
            fit.half_width,
            r.unit,
            if fit.lower_bound { ", lower bound" } else { "" },
            r.theoretical_exponent
        )),
        None => out.push("fitted exponent: not enough error events".into()),
    }
    out
}

fn simulate(cfg: &ExperimentConfig, u: Units) -> Result<Outcome> {
    let (p, q, ctx) = load_pair(cfg)?;
    let c = cfg.classical.as_ref().expect("validated");
    let p_kind = parse_strategy(&c.p_strategy, "classical.p_strategy")?;
    let q_kind = parse_strategy(&c.q_strategy, "classical.q_strategy")?;
    let tol = cfg.tol();
    let (family, certificate) = match cfg.test.expect("validated") {
        TestKind::Stein => {
            let sol = solve_stein(&p, &q, tol).map_err(|e| CliError::core(&ctx, e))?;
            let cert = certify_stein(&p, &q, &sol).map_err(|e| CliError::core(&ctx, e))?;
            let epsilon = cfg.epsilon.expect("validated");
            (TestFamily::Stein { epsilon }, CertificateReport::stein(&cert, u))
        }
        TestKind::Chernoff => {
            let sol = solve_chernoff(&p, &q, tol).map_err(|e| CliError::core(&ctx, e))?;
            let cert = certify_chernoff(&p, &q, &sol).map_err(|e| CliError::core(&ctx, e))?;
            (TestFamily::Chernoff, CertificateReport::chernoff(&cert))
        }
    };
    let result = run_experiment(&p, &q, &plan(cfg, family), p_kind, q_kind).map_err(|e| CliError::core(&ctx, e))?;
    let csv = result.to_csv();
    let experiment = u.experiment(result);
    let mut summary = simulation_summary(&experiment);
    summary.push(format!("certificate: {}", if certificate.passes() { "pass" } else { "FAIL" }));
    let certified = certificate.passes();
    let report = SimulateReport {
        mode: "simulate",
        certificate,
        experiment,
    };
    Ok(Outcome {
        json: to_value(&report),
        csv: Some(csv),
        summary,
        certified,
    })
}

/// Convex hull of all `k`-fold tensor products of vertices: the states an
/// adversary can prepare for one block when it picks every copy freely.
fn block_class(class: &StateClass, k: usize, field: &str) -> Result<StateClass> {
    let mut states: Vec<DensityMatrix> = class.vertices().to_vec();
    for _ in 1..k {
        let mut next = Vec::with_capacity(states.len() * class.len());
        for a in &states {
            for b in class.vertices() {
                next.push(a.tensor(b).map_err(|e| CliError::core(format!("field `{field}`"), e))?);
            }
        }
        states = next;
    }
    StateClass::new(states).map_err(|e| CliError::core(format!("field `{field}`"), e))
}

/// Two-block families `conv{a ⊗ b}` must leave the second block inside the
/// one-block class after the first block is measured.
fn two_block_compatibility(
    menu: &MeasurementMenu,
    class: &StateClass,
    field: &str,
) -> Result<advhyp_core::quantum::CompatibilityReport> {
    let d = class.dim();
    if d * d > advhyp_core::quantum::linalg::MAX_DIM {
        return Err(CliError::field(
            field,
            format!("block dimension {d} is too large to check compatibility on two blocks (limit 4)"),
        ));
    }
    let two = block_class(class, 2, field)?;
    let cut = BipartiteStructure::bipartite(d, d).map_err(|e| CliError::core(format!("field `{field}`"), e))?;
    compatibility_check(menu, &two, &Membership::Hull(class), &cut)
        .map_err(|e| CliError::core(format!("field `{field}`"), e))
}

fn quantum(cfg: &ExperimentConfig, u: Units) -> Result<Outcome> {
    let mode = cfg.mode()?;
    let qs = cfg.quantum.as_ref().expect("validated");
    let menu_path = cfg.path(&qs.menu);
    let menu = load_menu(&menu_path)?;
    let r = block_class(&load_state_class(&cfg.paths(&qs.r), "quantum.r")?, qs.block_size, "quantum.r")?;
    let s = block_class(&load_state_class(&cfg.paths(&qs.s), "quantum.s")?, qs.block_size, "quantum.s")?;
    if menu.dim() != r.dim() || menu.dim() != s.dim() {
        return Err(CliError::field(
            "quantum.menu",
            format!(
                "{} acts on dimension {}, but blocks of the classes have dimensions {} and {}",
                menu_path.display(),
                menu.dim(),
                r.dim(),
                s.dim()
            ),
        ));
    }
    let rep_r = two_block_compatibility(&menu, &r, "quantum.r")?;
    let rep_s = two_block_compatibility(&menu, &s, "quantum.s")?;
    let tol = cfg.tol();
    let ctx = format!("quantum instance with menu {}", menu_path.display());
    let per_povm = match mode {
        Mode::QuantumStein => restricted_divergence(&menu, &r, &s, tol).map(|x| (x.best_povm_index, x.per_povm)),
        _ => restricted_chernoff(&menu, &r, &s, tol).map(|x| (x.best_povm_index, x.per_povm)),
    }
    .map_err(|e| CliError::core(&ctx, e))?;
    let povm_index = qs.povm.unwrap_or(per_povm.0);
    if povm_index >= menu.len() {
        return Err(CliError::field(
            "quantum.povm",
            format!("menu {} has {} elements, no element {povm_index}", menu_path.display(), menu.len()),
        ));
    }
    let red = block_reduction(&menu, povm_index, qs.block_size, &r, &s, &[&rep_r, &rep_s])
        .map_err(|e| CliError::core(&ctx, e))?;
    let p_kind = parse_strategy(&qs.p_strategy, "quantum.p_strategy")?;
    let q_kind = parse_strategy(&qs.q_strategy, "quantum.q_strategy")?;

    let (mut report, sim, exponent) = match mode {
        Mode::QuantumStein => {
            let sol = solve_stein(&red.p_image, &red.q_image, tol).map_err(|e| CliError::core(&ctx, e))?;
            let cert = certify_stein(&red.p_image, &red.q_image, &sol).map_err(|e| CliError::core(&ctx, e))?;
            let sim = match (cfg.simulates(), sol.exponent) {
                (true, ExtReal::Finite(d)) if d > 0.0 => {
                    let eps = cfg.epsilon.expect("validated");
                    let test = SteinTest::new(&sol, eps, cfg.n[0]).map_err(|e| CliError::core(&ctx, e))?;
                    Some((Target::stein(&sol, eps), TestRegion::Stein(test)))
                }
                _ => None,
            };
            (SolveReport::stein("quantum-stein", &sol, &cert, tol, u), sim, sol.exponent)
        }
        _ => {
            let sol = solve_chernoff(&red.p_image, &red.q_image, tol).map_err(|e| CliError::core(&ctx, e))?;
            let cert = certify_chernoff(&red.p_image, &red.q_image, &sol).map_err(|e| CliError::core(&ctx, e))?;
            let sim = match (cfg.simulates(), sol.exponent) {
                (true, ExtReal::Finite(g)) if g > 0.0 => {
                    let test = ChernoffTest::new(&sol, cfg.n[0]).map_err(|e| CliError::core(&ctx, e))?;
                    Some((Target::chernoff(&sol), TestRegion::Chernoff(test)))
                }
                _ => None,
            };
            (SolveReport::chernoff("quantum-chernoff", &sol, &cert, tol, u), sim, sol.exponent)
        }
    };
    report.block = Some(BlockReport {
        block_size: qs.block_size,
        povm_index,
        povm_from_config: qs.povm.is_some(),
        per_povm: per_povm.1.iter().map(|&x| u.ext(x)).collect(),
        exponent_per_copy: u.ext(exponent).scale(1.0 / qs.block_size as f64),
        compatible: [rep_r.compatible, rep_s.compatible],
    });
    let mut summary = vec![
        format!("{mode} exponent per block of {}: {}", qs.block_size, fmt_exponent(report.exponent, u)),
        format!("menu element: {povm_index}"),
    ];
    let mut csv = None;
    if cfg.simulates() {
        match sim {
            Some((target, region)) => {
                let family = target.family;
                let ps = builtin_strategy(p_kind, &red.p_image, Side::P, &target, cfg.seed)
                    .map_err(|e| CliError::core("quantum.p_strategy", e))?;
                let qstrat = builtin_strategy(q_kind, &red.q_image, Side::Q, &target, cfg.seed)
                    .map_err(|e| CliError::core("quantum.q_strategy", e))?;
                let result =
                    run_with_sources(&red.p_source, &red.q_source, &ps, &qstrat, &region, &plan(cfg, family), exponent)
                        .map_err(|e| CliError::core(&ctx, e))?;
                csv = Some(result.to_csv());
                let result = u.experiment(result);
                summary.extend(simulation_summary(&result));
                report.simulation = Some(result);
            }
            None => summary.push(format!("simulation skipped: the exponent is {exponent}")),
        }
    }
    summary.push(format!("certificate: {}", if report.certificate.passes() { "pass" } else { "FAIL" }));
    Ok(Outcome {
        json: to_value(&report),
        csv,
        certified: report.certificate.passes(),
        summary,
    })
}

fn structure(dims: &[usize], field: &str) -> Result<BipartiteStructure> {
    BipartiteStructure::new(dims.to_vec()).map_err(|e| CliError::core(format!("field `{field}`"), e))
}

fn name_of(name: &Option<String>, kind: &str, i: usize) -> String {
    name.clone().unwrap_or_else(|| format!("{kind}[{i}]"))
}

fn with_field<T>(field: &str, r: advhyp_core::Result<T>) -> Result<T> {
    r.map_err(|e| CliError::core(format!("field `{field}`"), e))
}

fn audit(cfg: &ExperimentConfig, u: Units) -> Result<Outcome> {
    let a = cfg.audit.as_ref().expect("validated");
    let tol = cfg.tol();
    let mut report = AuditReport {
        mode: "audit",
        unit: u.unit(),
        compatibility: Vec::new(),
        superadditivity: Vec::new(),
        minimax: Vec::new(),
        ssa: Vec::new(),
        monotonicity: Vec::new(),
        findings: Vec::new(),
    };
    let mut summary = Vec::new();

    for (i, c) in a.compatibility.iter().enumerate() {
        let field = format!("audit.compatibility[{i}]");
        let name = name_of(&c.name, "compatibility", i);
        let menu = load_menu(&cfg.path(&c.menu))?;
        let big = load_state_class(&cfg.paths(&c.states), &format!("{field}.states"))?;
        let cut = structure(&c.dims, &format!("{field}.dims"))?;
        let hull;
        let membership = match (&c.separable, &c.hull) {
            (Some(dims), _) => Membership::Separable(structure(dims, &format!("{field}.separable"))?),
            (_, Some(paths)) => {
                hull = load_state_class(&cfg.paths(paths), &format!("{field}.hull"))?;
                Membership::Hull(&hull)
            }
            _ => unreachable!("validated"),
        };
        let r = with_field(&field, compatibility_check(&menu, &big, &membership, &cut))?;
        let out = CompatibilityOut::new(name.clone(), r);
        if out.compatible {
            summary.push(format!("compatibility {name}: compatible ({} residuals)", out.checks.len()));
        } else {
            let worst = out.checks.iter().filter(|c| !c.member).map(|c| c.witness).fold(f64::INFINITY, f64::min);
            let finding = format!(
                "compatibility {name}: {} of {} residual states fall outside the target class (witness {worst:.6})",
                out.failures,
                out.checks.len()
            );
            summary.push(finding.clone());
            report.findings.push(finding);
        }
        report.compatibility.push(out);
    }

    for (i, s) in a.superadditivity.iter().enumerate() {
        let field = format!("audit.superadditivity[{i}]");
        let name = name_of(&s.name, "superadditivity", i);
        let rho = load_state(&cfg.path(&s.rho))?;
        let sigma = load_state(&cfg.path(&s.sigma))?;
        let m_x = load_povm(&cfg.path(&s.m_x))?;
        let m_y = load_povm(&cfg.path(&s.m_y))?;
        let cut = structure(&s.dims, &format!("{field}.dims"))?;
        let r = with_field(&field, superadditivity_audit(&rho, &sigma, &cut, &m_x, &m_y))?;
        let out = SuperadditivityOut::new(name.clone(), r, u);
        let ok = out.equalities_hold && out.inequalities_hold;
        let line = format!(
            "superadditivity {name}: joint {} ≥ local sum {}; chain {}",
            out.joint,
            out.marginal_bound,
            if ok { "holds" } else { "VIOLATED" }
        );
        if !ok {
            report.findings.push(line.clone());
        }
        summary.push(line);
        report.superadditivity.push(out);
    }

    for (i, m) in a.minimax.iter().enumerate() {
        let field = format!("audit.minimax[{i}]");
        let name = name_of(&m.name, "minimax", i);
        let menu = load_menu(&cfg.path(&m.menu))?;
        let r = load_state_class(&cfg.paths(&m.r), &format!("{field}.r"))?;
        let s = load_state_class(&cfg.paths(&m.s), &format!("{field}.s"))?;
        let rep = with_field(&field, minimax_gap(&menu, &r, &s, tol))?;
        let out = MinimaxOut::new(name.clone(), rep, u);
        summary.push(format!("minimax {name}: lhs {:.9} rhs {:.9} gap {:.2e} {}", out.lhs, out.rhs, out.gap, u.unit()));
        report.minimax.push(out);
    }

    for (i, s) in a.ssa.iter().enumerate() {
        let field = format!("audit.ssa[{i}]");
        let name = name_of(&s.name, "ssa", i);
        let rho = load_state(&cfg.path(&s.rho))?;
        let cut = structure(&s.dims, &format!("{field}.dims"))?;
        let menu = s
            .locc
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let alice = load_povm(&cfg.path(&l.alice))?;
                let bob = l.bob.iter().map(|p| load_povm(&cfg.path(p))).collect::<Result<Vec<_>>>()?;
                with_field(&format!("{field}.locc[{j}]"), OneWayLocc::new(alice, bob))
            })
            .collect::<Result<Vec<_>>>()?;
        let proxy = load_state_class(&cfg.paths(&s.proxy), &format!("{field}.proxy"))?;
        let rep = with_field(&field, stronger_ssa_probe(&rho, &cut, &menu, &proxy, tol))?;
        let out = SsaOut::new(name.clone(), rep, u);
        let line = format!(
            "ssa {name}: I(A:B|C) = {:.9} vs measured divergence {} ({})",
            out.cmi,
            out.measured_divergence,
            if out.holds { "holds" } else { "inconclusive" }
        );
        if !out.holds {
            report.findings.push(line.clone());
        }
        summary.push(line);
        report.ssa.push(out);
    }

    for (i, m) in a.monotonicity.iter().enumerate() {
        let field = format!("audit.monotonicity[{i}]");
        let name = name_of(&m.name, "monotonicity", i);
        let rho = load_state(&cfg.path(&m.rho))?;
        let sigma = load_state(&cfg.path(&m.sigma))?;
        let povm = load_povm(&cfg.path(&m.povm))?;
        let rep = with_field(&field, monotonicity_check(&povm, &rho, &sigma))?;
        let out = MonotonicityOut::new(name.clone(), rep, u);
        let line = format!("monotonicity {name}: measured {} ≤ quantum {}", out.measured, out.quantum);
        if !out.holds {
            report.findings.push(format!("{line} VIOLATED"));
        }
        summary.push(line);
        report.monotonicity.push(out);
    }

    Ok(Outcome {
        json: to_value(&report),
        csv: None,
        summary,
        certified: true,
    })
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    let io = |source| CliError::Write {
        path: PathBuf::from(path),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}
