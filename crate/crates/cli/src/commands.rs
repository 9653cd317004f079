//! Exact finite-state commands.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

use mhcoupling::decomposition::{
    build_cam, check_theorem1_conditions, compute_helpers, extract_acceptance_coupling, regenerate_pbar,
    verify_cam_with, Outcome, RectangleMode,
};
use mhcoupling::maximality::{certify_nonmax_example, check_max_conditions};
use mhcoupling::measure::{build_maximal_coupling, check_coupling, is_maximal_coupling, MaximalityVerdict};
use mhcoupling::rational::format_rational;
use mhcoupling::{JointDist, MhProblem, ResidualStrategy, StateSpace};

use crate::error::CliError;
use crate::files::{pair_index, write_json, AcceptanceOutput, CouplingFile, JointOutput, ProblemFile};
use crate::{Report, Residual, Via};

fn load(problem: &Path, coupling: &Path) -> Result<(MhProblem, (usize, usize), JointDist), CliError> {
    let problem = ProblemFile::load(problem)?.to_problem()?;
    let (pair, pbar) = CouplingFile::load(coupling)?.to_joint(problem.space())?;
    let check = check_coupling(&pbar, problem.p().row(pair.0), problem.p().row(pair.1));
    if !check.holds() {
        return Err(CliError::Marginal(format!(
            "Pbar((x,y),.) is not a coupling of P(x,.) and P(y,.): {}",
            check.describe(problem.space())
        )));
    }
    Ok((problem, pair, pbar))
}

fn label_pair(space: &StateSpace, (i, j): (usize, usize)) -> String {
    format!("({},{})", space.label(i), space.label(j))
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn decompose(problem: &Path, coupling: &Path, out: &Path, exhaustive: bool) -> Result<Report, CliError> {
    let (problem, pair, pbar) = load(problem, coupling)?;
    let space = problem.space().clone();
    let (q, a, p) = (problem.q(), problem.a(), problem.p());
    let helpers = compute_helpers(q, p)?;
    let (cam, qbar) = build_cam(&pbar, &helpers, q, p, pair)?;
    let mode = if exhaustive { RectangleMode::Exhaustive } else { RectangleMode::Auto };
    let cam_report = verify_cam_with(&cam, &qbar, &pbar, q, pair, mode);
    let b = extract_acceptance_coupling(&cam, &qbar);
    let rates = check_theorem1_conditions(&qbar, &b, q, a, pair)?;
    let regenerated = regenerate_pbar(&qbar, &b, pair)?;
    let round_trip = regenerated == pbar;

    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", out.display())))?;
    for (name, outcome) in [
        ("phi11", Outcome::Both),
        ("phi10", Outcome::OnlyX),
        ("phi01", Outcome::OnlyY),
        ("phi00", Outcome::Neither),
    ] {
        write_json(&out.join(format!("{name}.json")), &JointOutput::new(cam.component(outcome), pair))?;
    }
    write_json(&out.join("qbar.json"), &JointOutput::new(&qbar, pair))?;
    write_json(&out.join("acceptance.json"), &AcceptanceOutput::new(&b))?;

    let all = cam_report.holds() && rates.holds() && round_trip;
    let report = json!({
        "pair": label_pair(&space, pair),
        "verify_cam": {
            "holds": cam_report.holds(),
            "condition1": cam_report.condition1_holds(),
            "condition2": cam_report.condition2_holds(),
            "condition3": cam_report.condition3_holds(),
            "nonnegative": cam_report.negative.is_empty(),
            "rectangles_checked": cam_report.rectangles_checked,
            "exhaustive": cam_report.exhaustive,
            "detail": cam_report.summary(&space),
        },
        "acceptance_rates": {
            "holds": rates.holds(),
            "detail": rates.describe(&space),
        },
        "round_trip": if round_trip { "exact" } else { "mismatch" },
        "all_checks_pass": all,
    });
    write_json(&out.join("report.json"), &report)?;

    let mut text = String::new();
    writeln!(text, "decomposition at {}", label_pair(&space, pair)).unwrap();
    writeln!(text, "  mechanism conditions: {} ({})", pass(cam_report.holds()), cam_report.summary(&space)).unwrap();
    writeln!(text, "  acceptance rates:     {} ({})", pass(rates.holds()), rates.describe(&space)).unwrap();
    writeln!(text, "  round trip:           {}", if round_trip { "exact" } else { "mismatch" }).unwrap();
    writeln!(text, "  wrote {}", out.display()).unwrap();
    Ok(Report {
        text,
        json: report,
        code: if all { 0 } else { 4 },
    })
}

fn hahn_json(space: &StateSpace, v: &MaximalityVerdict) -> serde_json::Value {
    json!({
        "maximal": v.maximal,
        "hahn_set": space.format_subset(&v.positive_set),
        "diagonal_mass": format_rational(&v.diagonal_mass),
        "bound": format_rational(&v.bound),
        "diagonal_deficit": format_rational(&v.diagonal_deficit()),
        "off_diagonal_from_negative": format_rational(&v.off_diagonal_from_negative),
        "off_diagonal_into_positive": format_rational(&v.off_diagonal_into_positive),
    })
}

fn verdict_word(maximal: bool) -> &'static str {
    if maximal {
        "maximal"
    } else {
        "not maximal"
    }
}

pub fn verify_maximal(problem: &Path, coupling: &Path, via: Via) -> Result<Report, CliError> {
    let (problem, pair, pbar) = load(problem, coupling)?;
    let space = problem.space().clone();
    let (q, a, p) = (problem.q(), problem.a(), problem.p());
    let mut text = String::new();
    let mut out = json!({ "pair": label_pair(&space, pair) });

    let hahn = match via {
        Via::Hahn | Via::Both => Some(is_maximal_coupling(&pbar, p.row(pair.0), p.row(pair.1))?),
        Via::Conditions => None,
    };
    let conditions = match via {
        Via::Conditions | Via::Both => {
            let helpers = compute_helpers(q, p)?;
            let (cam, qbar) = build_cam(&pbar, &helpers, q, p, pair)?;
            let b = extract_acceptance_coupling(&cam, &qbar);
            Some(check_max_conditions(&qbar, &b, q, a, p, pair, via == Via::Both)?)
        }
        Via::Hahn => None,
    };
    if let (Some(h), Some(c)) = (&hahn, &conditions) {
        if h.maximal != c.verdict() {
            return Err(CliError::Disagreement(format!(
                "conditions say {}, Hahn test says {}",
                verdict_word(c.verdict()),
                verdict_word(h.maximal)
            )));
        }
    }
    let maximal = hahn.as_ref().map(|h| h.maximal).or(conditions.as_ref().map(|c| c.verdict())).unwrap();
    writeln!(text, "{}", verdict_word(maximal)).unwrap();
    out["verdict"] = json!(verdict_word(maximal));

    if let Some(h) = &hahn {
        writeln!(
            text,
            "  Hahn test: diagonal mass {} against bound {}, diagonal deficit {}",
            format_rational(&h.diagonal_mass),
            format_rational(&h.bound),
            format_rational(&h.diagonal_deficit())
        )
        .unwrap();
        out["hahn"] = hahn_json(&space, h);
    }
    if let Some(c) = &conditions {
        let failed: Vec<usize> = (0..6).filter(|&k| !c.conditions[k]).map(|k| k + 1).collect();
        writeln!(
            text,
            "  acceptance conditions: Hahn set {}, failing {:?}",
            space.format_subset(&c.s_xy),
            failed
        )
        .unwrap();
        let witnesses: Vec<_> = c
            .witnesses
            .iter()
            .map(|w| {
                writeln!(
                    text,
                    "    condition {} at proposal {}: mass {}",
                    w.condition,
                    label_pair(&space, w.proposal),
                    format_rational(&w.mass)
                )
                .unwrap();
                json!({
                    "condition": w.condition,
                    "proposal": label_pair(&space, w.proposal),
                    "mass": format_rational(&w.mass),
                })
            })
            .collect();
        out["conditions"] = json!({
            "hahn_set": space.format_subset(&c.s_xy),
            "holds": c.conditions,
            "witnesses": witnesses,
        });
    }
    Ok(Report { text, json: out, code: 0 })
}

pub fn build_maximal(problem: &Path, pair: &str, out: &Path, residual: Residual) -> Result<Report, CliError> {
    let problem = ProblemFile::load(problem)?.to_problem()?;
    let space = problem.space().clone();
    let labels: Vec<String> = pair.split(',').map(|s| s.trim().to_string()).collect();
    let labels: [String; 2] = labels
        .try_into()
        .map_err(|_| CliError::Parse(format!("--pair expects two labels 'x,y', got '{pair}'")))?;
    let pair = pair_index(&space, &labels)?;
    let strategy = match residual {
        Residual::Product => ResidualStrategy::Product,
        Residual::NorthWest => ResidualStrategy::NorthWest,
    };
    let p = problem.p();
    let joint = build_maximal_coupling(p.row(pair.0), p.row(pair.1), &strategy)?;
    let file = CouplingFile::from_joint(&joint, pair);
    write_json(out, &file)?;
    let mut text = String::new();
    writeln!(text, "maximal coupling at {} written to {}", label_pair(&space, pair), out.display()).unwrap();
    for (cell, v) in file.entries.iter().flatten().filter(|(_, v)| v.as_str() != "0") {
        writeln!(text, "  {cell}: {v}").unwrap();
    }
    Ok(Report {
        text,
        json: serde_json::to_value(&file).expect("coupling serializes"),
        code: 0,
    })
}

pub fn certify_nonmax() -> Result<Report, CliError> {
    let cert = certify_nonmax_example()?;
    let space = cert.problem.space().clone();
    let extreme_points = if cert.maximal_qbar_is_unique() { 1 } else { 0 };
    let ok = cert.reproduces();
    let mut text = String::new();
    writeln!(text, "three-state example at {}", label_pair(&space, cert.pair)).unwrap();
    writeln!(
        text,
        "  maximal proposal coupling: {} (polytope dimension {})",
        if cert.maximal_qbar_is_unique() { "unique, 1 extreme point" } else { "not unique" },
        cert.maximal_qbar_dimension
    )
    .unwrap();
    writeln!(
        text,
        "  required vs available mass at {}: {} vs {}",
        label_pair(&space, cert.witness),
        format_rational(&cert.required_mass),
        format_rational(&cert.available_mass)
    )
    .unwrap();
    writeln!(
        text,
        "  alternative proposal coupling: maximal {}, acceptance rates {}, regeneration {}",
        cert.alternative_is_maximal,
        pass(cert.alternative_rates_hold),
        pass(cert.alternative_regenerates)
    )
    .unwrap();
    writeln!(text, "certificate {}", if ok { "reproduces" } else { "does NOT reproduce" }).unwrap();
    let out = json!({
        "pair": label_pair(&space, cert.pair),
        "maximal_qbar_unique": cert.maximal_qbar_is_unique(),
        "extreme_points": extreme_points,
        "witness": label_pair(&space, cert.witness),
        "required_mass": format_rational(&cert.required_mass),
        "available_mass": format_rational(&cert.available_mass),
        "alternative_is_maximal": cert.alternative_is_maximal,
        "alternative_rates_hold": cert.alternative_rates_hold,
        "alternative_regeneration": pass(cert.alternative_regenerates),
        "reproduces": ok,
    });
    Ok(Report {
        text,
        json: out,
        code: if ok { 0 } else { 4 },
    })
}
