//! Implementations of the scan, curve, verify and run subcommands.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use swapurify_core::entanglement::{concurrence_phi_initial, concurrence_phi_roundn};
use swapurify_core::measure::WeakSign;
use swapurify_core::protocol::{
    evaluate_chi_point, evaluate_chi_point_with_sign, region_grid, run_protocol, Family,
    ProtocolConfig, RegionRequest, WeakPolicy,
};
use swapurify_core::states::BellLabel;
use swapurify_core::verify::suite_by_name;
use swapurify_core::Numerics;

use crate::output::{write_table, OutputFormat, Table};
use crate::{CliError, CurveArgs, ParamArgs, RunArgs, ScanArgs, VerifyArgs};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Treat a closed stdout (e.g. piping into `head`) as success.
fn stdout_result(r: std::io::Result<()>) -> Result<(), CliError> {
    match r {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::Io(e.to_string())),
    }
}

fn numerics(tol: Option<f64>) -> Result<Numerics, CliError> {
    let mut n = Numerics::default();
    if let Some(t) = tol {
        if !t.is_finite() || t <= 0.0 {
            return Err(usage(format!("--tol must be a positive real, got {t}")));
        }
        n.compare = t;
    }
    Ok(n)
}

/// Midpoints of `steps` equal cells over [lo, hi]: region grids sample cell
/// centers, which also keeps degenerate endpoint parameters out.
fn cell_centers(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let width = (hi - lo) / steps as f64;
    (0..steps).map(|i| lo + (i as f64 + 0.5) * width).collect()
}

/// Inclusive linspace for curves.
fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + i as f64 * step).collect()
}

fn parse_grid2(grid: &str) -> Result<(usize, usize), CliError> {
    let (n1, n2) = grid
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("--grid expects NxM, got '{grid}'")))?;
    let n1: usize = n1
        .parse()
        .map_err(|_| usage(format!("bad grid dimension '{n1}'")))?;
    let n2: usize = n2
        .parse()
        .map_err(|_| usage(format!("bad grid dimension '{n2}'")))?;
    if n1 < 2 || n2 < 2 {
        return Err(usage("grid needs at least 2 steps per axis"));
    }
    Ok((n1, n2))
}

fn parse_grid1(grid: &str) -> Result<usize, CliError> {
    let first = grid.split(['x', 'X']).next().unwrap_or(grid);
    let n: usize = first
        .parse()
        .map_err(|_| usage(format!("bad grid size '{grid}'")))?;
    if n < 2 {
        return Err(usage("curves need at least 2 points"));
    }
    Ok(n)
}

fn family_of(args: &ParamArgs) -> Result<Family, CliError> {
    match args.family.as_deref() {
        Some("phi") => Ok(Family::Phi),
        Some("phi-asym") => Ok(Family::PhiAsymmetric),
        Some("chi") => Ok(Family::Chi),
        Some(other) => Err(usage(format!(
            "unknown family '{other}' (expected phi|phi-asym|chi)"
        ))),
        None => Err(usage("--family (or a --preset) is required")),
    }
}

fn accepted_label(args: &ParamArgs) -> Result<BellLabel, CliError> {
    match args.accept.as_deref().unwrap_or("psi") {
        "psi" => Ok(BellLabel::PsiPlus),
        "phi" => Ok(BellLabel::PhiPlus),
        "all" => Err(usage("region scans need --accept psi or --accept phi")),
        other => Err(usage(format!(
            "unknown acceptance set '{other}' (expected psi|phi|all)"
        ))),
    }
}

fn accepted_set(args: &ParamArgs) -> Result<Vec<BellLabel>, CliError> {
    Ok(match args.accept.as_deref().unwrap_or("psi") {
        "psi" => vec![BellLabel::PsiPlus, BellLabel::PsiMinus],
        "phi" => vec![BellLabel::PhiPlus, BellLabel::PhiMinus],
        "all" => BellLabel::ALL.to_vec(),
        other => {
            return Err(usage(format!(
                "unknown acceptance set '{other}' (expected psi|phi|all)"
            )))
        }
    })
}

fn weak_policy_of(args: &ParamArgs) -> Result<WeakPolicy, CliError> {
    Ok(match args.weak_policy.as_deref().unwrap_or("pp") {
        "pp" => WeakPolicy::BothPlus,
        "mm" => WeakPolicy::BothMinus,
        "mixed" => WeakPolicy::Mixed,
        "none" => WeakPolicy::None,
        other => {
            return Err(usage(format!(
                "unknown weak policy '{other}' (expected pp|mm|mixed|none)"
            )))
        }
    })
}

fn write_out(table: &Table, format: OutputFormat, out: &Path) -> Result<(), CliError> {
    write_table(table, format, out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

pub fn cmd_scan(args: &ScanArgs) -> Result<(), CliError> {
    let p = &args.params;
    let family = family_of(p)?;
    let label = accepted_label(p)?;
    let tol = numerics(p.tol)?;
    let grid = args.grid.as_deref().unwrap_or("200x200");
    let (n1, n2) = parse_grid2(grid)?;
    let rounds = p.rounds.unwrap_or(1);
    let weak_policy = weak_policy_of(p)?;
    let sign_sensitive = rounds >= 2 || (family == Family::Chi && p.b.is_some());
    if sign_sensitive && !matches!(weak_policy, WeakPolicy::BothPlus | WeakPolicy::BothMinus) {
        return Err(usage(
            "scans with weak measurements support --weak-policy pp or mm",
        ));
    }

    let (axis_names, request) = match family {
        Family::Phi => {
            if rounds >= 2 && p.b.is_none() {
                return Err(usage("multi-round scans need --b"));
            }
            if rounds >= 2 && label != BellLabel::PsiPlus {
                return Err(usage("multi-round scans support --accept psi only"));
            }
            (
                ("p", "a"),
                RegionRequest {
                    family,
                    axis1: cell_centers(0.0, 1.0, n1),
                    axis2: cell_centers(0.0, 1.0, n2),
                    fixed_p: None,
                    b: p.b,
                    weak_policy,
                    rounds,
                    label,
                    chi_weak_step: false,
                },
            )
        }
        Family::PhiAsymmetric => {
            let fixed_p = p.p.ok_or_else(|| usage("asymmetric scans need --p"))?;
            if rounds != 1 {
                return Err(usage("asymmetric scans are single-round"));
            }
            (
                ("a_prime", "a"),
                RegionRequest {
                    family,
                    axis1: cell_centers(0.0, 1.0, n1),
                    axis2: cell_centers(0.0, 1.0, n2),
                    fixed_p: Some(fixed_p),
                    b: None,
                    weak_policy,
                    rounds: 1,
                    label,
                    chi_weak_step: false,
                },
            )
        }
        Family::Chi => {
            if rounds != 1 {
                return Err(usage(
                    "chi scans are single-round (use --b for the weak step)",
                ));
            }
            (
                ("p", "A"),
                RegionRequest {
                    family,
                    axis1: cell_centers(0.0, 1.0, n1),
                    axis2: cell_centers(0.0, 1.0, n2),
                    fixed_p: None,
                    b: p.b,
                    weak_policy,
                    rounds: 1,
                    label,
                    chi_weak_step: p.b.is_some(),
                },
            )
        }
    };

    let evals = region_grid(&request, &tol).map_err(|e| usage(e.to_string()))?;
    let mut rows = Vec::with_capacity(n1 * n2);
    for (i, row) in evals.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            rows.push(vec![
                request.axis1[i],
                request.axis2[j],
                e.c_initial,
                e.c_final,
                if e.enhanced { 1.0 } else { 0.0 },
                e.branch_probability,
            ]);
        }
    }
    let table = Table {
        columns: vec![
            axis_names.0.to_string(),
            axis_names.1.to_string(),
            "C_initial".to_string(),
            "C_final".to_string(),
            "enhanced".to_string(),
            "branch_probability".to_string(),
        ],
        rows,
    };
    write_out(&table, args.format, &args.out)
}

pub fn cmd_curve(args: &CurveArgs) -> Result<(), CliError> {
    let p = &args.params;
    let family = family_of(p)?;
    let tol = numerics(p.tol)?;
    let points = parse_grid1(args.grid.as_deref().unwrap_or("200"))?;

    let weak_policy = weak_policy_of(p)?;

    let table = match family {
        Family::Phi => {
            let a = p.a.ok_or_else(|| usage("phi curves need --a"))?;
            let rounds = p.rounds.unwrap_or(3);
            if rounds == 0 {
                return Err(usage("curves need at least one round"));
            }
            if rounds >= 2 && p.b.is_none() {
                return Err(usage("multi-round curves need --b"));
            }
            // The both-M- chain is the both-M+ chain with b and 1-b
            // exchanged.
            let b = match weak_policy {
                WeakPolicy::BothPlus => p.b.unwrap_or(0.5),
                WeakPolicy::BothMinus => 1.0 - p.b.unwrap_or(0.5),
                _ if rounds >= 2 => {
                    return Err(usage("multi-round curves support --weak-policy pp or mm"))
                }
                _ => p.b.unwrap_or(0.5),
            };
            // p = 1 is degenerate; stop just short.
            let ps = linspace(0.0, 0.99, points);
            let mut columns = vec!["p".to_string(), "C_AB".to_string()];
            for k in 1..=rounds {
                columns.push(format!("C_{k}"));
            }
            let rows = ps
                .iter()
                .map(|&pv| {
                    let mut row = vec![
                        pv,
                        concurrence_phi_initial(a, pv).map_err(|e| usage(e.to_string()))?,
                    ];
                    for k in 1..=rounds {
                        row.push(
                            concurrence_phi_roundn(a, pv, b, k)
                                .map_err(|e| usage(e.to_string()))?,
                        );
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Table { columns, rows }
        }
        Family::Chi => {
            let big_a = p.big_a.ok_or_else(|| usage("chi curves need --A"))?;
            let ps = linspace(0.0, 0.6, points);
            let weak_b = p.b;
            let weak_sign = match weak_policy {
                WeakPolicy::BothMinus => WeakSign::Minus,
                WeakPolicy::BothPlus => WeakSign::Plus,
                _ if weak_b.is_some() => {
                    return Err(usage("chi weak steps support --weak-policy pp or mm"))
                }
                _ => WeakSign::Plus,
            };
            let mut columns = vec!["p".to_string(), "C_AB".to_string(), "C_AC".to_string()];
            if weak_b.is_some() {
                columns.push("C_AC_weak".to_string());
            }
            let rows: Result<Vec<_>, CliError> = ps
                .par_iter()
                .map(|&pv| {
                    let plain = evaluate_chi_point(big_a, pv, None, BellLabel::PsiPlus, &tol)
                        .map_err(|e| usage(e.to_string()))?;
                    let mut row = vec![pv, plain.c_initial, plain.c_final];
                    if let Some(b) = weak_b {
                        let weak = evaluate_chi_point_with_sign(
                            big_a,
                            pv,
                            Some(b),
                            weak_sign,
                            BellLabel::PsiPlus,
                            &tol,
                        )
                        .map_err(|e| usage(e.to_string()))?;
                        row.push(weak.c_final);
                    }
                    Ok(row)
                })
                .collect();
            Table {
                columns,
                rows: rows?,
            }
        }
        Family::PhiAsymmetric => {
            return Err(usage("curves support the phi and chi families"));
        }
    };
    write_out(&table, args.format, &args.out)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let tol = numerics(args.tol)?;
    let reports = suite_by_name(&args.suite, &tol).map_err(|e| usage(e.to_string()))?;
    let mut all_passed = true;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for report in &reports {
        for check in &report.checks {
            all_passed &= check.passed;
            stdout_result(writeln!(
                out,
                "{} {}/{}: max deviation {:.3e} (tolerance {:.3e}) {}",
                if check.passed { "PASS" } else { "FAIL" },
                report.suite,
                check.name,
                check.max_deviation,
                check.tolerance,
                check.detail,
            ))?;
        }
    }
    stdout_result(writeln!(
        out,
        "{}",
        if all_passed {
            "all checks passed"
        } else {
            "verification FAILED"
        }
    ))?;
    if all_passed {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

#[derive(Serialize)]
struct StateJson {
    n_qubits: usize,
    /// Row-major entries, each as [re, im].
    entries: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct RoundJson {
    round_index: u32,
    branch_label: String,
    concurrence: f64,
    branch_probability: f64,
    cumulative_probability: f64,
    raw_pairs_consumed: u64,
    state: StateJson,
}

#[derive(Serialize)]
struct RunRecord {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a_prime: Option<f64>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    big_a: Option<f64>,
    p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    rounds: u32,
    weak_policy: String,
    accepted: Vec<String>,
    results: Vec<RoundJson>,
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let p = &args.params;
    let family = family_of(p)?;
    let tol = numerics(p.tol)?;
    let rounds = p.rounds.unwrap_or(1);

    let weak_policy = if p.weak_policy.is_none() && rounds < 2 {
        WeakPolicy::None
    } else {
        weak_policy_of(p)?
    };
    let accepted = accepted_set(p)?;
    let pv = p.p.ok_or_else(|| usage("--p is required"))?;

    let mut cfg = match family {
        Family::Phi => ProtocolConfig::phi(p.a.ok_or_else(|| usage("--a is required"))?, pv),
        Family::PhiAsymmetric => ProtocolConfig::phi_asymmetric(
            p.a.ok_or_else(|| usage("--a is required"))?,
            p.a_prime.ok_or_else(|| usage("--a-prime is required"))?,
            pv,
        ),
        Family::Chi => ProtocolConfig::chi(p.big_a.ok_or_else(|| usage("--A is required"))?, pv),
    };
    cfg.rounds = rounds;
    cfg.weak_policy = weak_policy;
    cfg.b = p.b;
    cfg.accepted_bell = accepted.clone();

    let results = run_protocol(&cfg, &tol).map_err(|e| usage(e.to_string()))?;
    let record = RunRecord {
        family: family.as_str().to_string(),
        a: cfg.a,
        a_prime: cfg.a_prime,
        big_a: cfg.big_a,
        p: cfg.p,
        b: cfg.b,
        rounds: cfg.rounds,
        weak_policy: format!("{:?}", cfg.weak_policy),
        accepted: accepted.iter().map(|l| l.as_str().to_string()).collect(),
        results: results
            .into_iter()
            .map(|r| RoundJson {
                round_index: r.round_index,
                branch_label: r.branch_label,
                concurrence: r.concurrence,
                branch_probability: r.branch_probability,
                cumulative_probability: r.cumulative_probability,
                raw_pairs_consumed: r.raw_pairs_consumed,
                state: StateJson {
                    n_qubits: r.state.n_qubits(),
                    entries: r
                        .state
                        .matrix()
                        .entries()
                        .iter()
                        .map(|z| [z.re, z.im])
                        .collect(),
                },
            })
            .collect(),
    };

    let json = serde_json::to_string_pretty(&record).map_err(|e| CliError::Io(e.to_string()))?;
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            stdout_result(writeln!(lock, "{json}"))
        }
    }
}
