use serde_json::{json, Value};

use losr_core::catalog::{named_example, pr_box_layout, EXAMPLE_NAMES};
use losr_core::choi::{is_cptp, is_cptp_with, ChoiOperator, ChoiOrdering, SystemLayout};
use losr_core::games::{
    brute_force_classical, payoff_operator, seesaw_lose, simulate_choi, weak_membership, weak_validity,
    Budget, OperationClass, StrategySearchConfig, Verdict,
};
use losr_core::losr::{ball_certificate, certificate_to_losr, realize_shared_randomness};
use losr_core::nosignal::{check_constraints, check_semantic, NOSIG_TOL};
use losr_core::qspace::{ball_parameters, in_tensor_q, SpaceKind, MEMBERSHIP_TOL};
use losr_core::sep::{
    identity_minus_any, identity_minus_separable, sep_generate, verify_certificate, SeparableCertificate,
    VerifyTolerances,
};
use losr_core::tensor::fro_norm;
use losr_core::witness::{audit_positivity_on_cone, certify_non_losr, functional_value, AuditConfig, AUDIT_TOL};

use crate::input::{self, Loaded};
use crate::report::{Check, CliError, Outcome, Status};
use crate::{
    BallCmd, DecomposeCmd, ExamplesCmd, GameCmd, GlobalOpts, ModeArg, NosigMethodArg, OrderingArg, SpaceArg,
    VerifyCmd, WitnessCmd,
};

/// Parties allowed in a no-signaling check; the subset count grows as 2^m.
const MAX_NOSIG_PARTIES: usize = 5;

type Run = Result<Outcome, CliError>;

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(v)?)
}

fn load(path: &str, inputs: &mut Vec<Vec<u8>>) -> Result<Loaded, CliError> {
    let l = input::read(path)?;
    inputs.push(l.bytes.clone());
    Ok(l)
}

fn layout_flag(opts: &GlobalOpts) -> Result<Option<SystemLayout>, CliError> {
    opts.layout.as_deref().map(SystemLayout::parse).transpose().map_err(Into::into)
}

fn ordering(opts: &GlobalOpts) -> ChoiOrdering {
    match opts.ordering {
        OrderingArg::Global => ChoiOrdering::Global,
        OrderingArg::Grouped => ChoiOrdering::Grouped,
    }
}

fn operator(path: &str, opts: &GlobalOpts, inputs: &mut Vec<Vec<u8>>) -> Result<ChoiOperator, CliError> {
    let l = load(path, inputs)?;
    input::operator(&l, layout_flag(opts)?.as_ref(), ordering(opts))
}

fn space(s: SpaceArg) -> SpaceKind {
    match s {
        SpaceArg::Q => SpaceKind::Q,
        SpaceArg::Hermitian => SpaceKind::Hermitian,
    }
}

fn mode(m: ModeArg) -> OperationClass {
    match m {
        ModeArg::Losr => OperationClass::Losr,
        ModeArg::Lose => OperationClass::Lose,
    }
}

fn cert_tolerances(opts: &GlobalOpts) -> VerifyTolerances {
    let mut t = VerifyTolerances::default();
    if let Some(tol) = opts.tol {
        t.reassembly = tol;
    }
    t
}

fn certificate_outcome(name: &str, cert: &SeparableCertificate, opts: &GlobalOpts) -> Result<(Check, Value), CliError> {
    let rep = verify_certificate(cert, cert_tolerances(opts));
    let check = Check::new(name, rep.pass, Some(rep.reassembly_residual));
    Ok((check, json!({ "certificate": to_value(cert)?, "report": to_value(&rep)? })))
}

fn verdict_outcome(verdict: Verdict, checks: Vec<Check>, result: Value) -> Outcome {
    let status = match verdict {
        Verdict::Yes => Status::Pass,
        Verdict::NoEvidence => Status::Fail,
        Verdict::Unknown => Status::Unknown,
    };
    Outcome { status, checks, result }
}

pub fn verify(cmd: &VerifyCmd, opts: &GlobalOpts, inputs: &mut Vec<Vec<u8>>) -> Run {
    let mut checks = Vec::new();
    let mut results = Vec::new();
    match cmd {
        VerifyCmd::Cptp { files } => {
            for f in files {
                let j = input::channel(&load(f, inputs)?)?;
                let rep = match opts.tol {
                    Some(t) => is_cptp_with(&j, t, t)?,
                    None => is_cptp(&j)?,
                };
                checks.push(Check::new(format!("{f}: cp"), rep.cp.is_cp, Some(rep.cp.min_eigenvalue)));
                checks.push(Check::new(format!("{f}: tp"), rep.tp.is_tp, Some(rep.tp.residual)));
                results.push(json!({ "file": f, "report": to_value(&rep)? }));
            }
        }
        VerifyCmd::Nosig { files, method, trials } => {
            let tol = opts.tol.unwrap_or(NOSIG_TOL);
            for f in files {
                let j = input::channel(&load(f, inputs)?)?;
                if j.layout().m() > MAX_NOSIG_PARTIES {
                    return Err(CliError::usage(format!(
                        "{f}: {} parties; no-signaling checks are limited to {MAX_NOSIG_PARTIES}",
                        j.layout().m()
                    )));
                }
                let mut reports = Vec::new();
                if *method != NosigMethodArg::Semantic {
                    reports.push(check_constraints(&j, tol)?);
                }
                if *method != NosigMethodArg::Constraint {
                    reports.push(check_semantic(&j, *trials, opts.seed, tol)?);
                }
                for r in &reports {
                    for e in &r.entries {
                        checks.push(Check::new(
                            format!("{f}: {} K={:?}", to_value(&r.method)?.as_str().unwrap_or("?"), e.parties),
                            e.pass,
                            Some(e.residual),
                        ));
                    }
                }
                results.push(json!({ "file": f, "reports": to_value(&reports)? }));
            }
        }
        VerifyCmd::Tensorq { files } => {
            let tol = opts.tol.unwrap_or(MEMBERSHIP_TOL);
            for f in files {
                let j = operator(f, opts, inputs)?;
                let rep = in_tensor_q(j.matrix(), j.layout(), tol)?;
                checks.push(Check::new(format!("{f}: tensor Q"), rep.member, Some(rep.projection_residual)));
                results.push(json!({ "file": f, "report": to_value(&rep)? }));
            }
        }
        VerifyCmd::Cert { files } => {
            for f in files {
                let cert = input::certificate(&load(f, inputs)?)?;
                let rep = verify_certificate(&cert, cert_tolerances(opts));
                checks.push(Check::new(format!("{f}: certificate"), rep.pass, Some(rep.reassembly_residual)));
                results.push(json!({ "file": f, "report": to_value(&rep)? }));
            }
        }
    }
    Ok(Outcome::from_checks(checks, Value::Array(results)))
}

pub fn decompose(cmd: &DecomposeCmd, opts: &GlobalOpts, inputs: &mut Vec<Vec<u8>>) -> Run {
    match cmd {
        DecomposeCmd::Split { file, space: s } => {
            let x = operator(file, opts, inputs)?;
            let grouped = x.grouped_matrix()?;
            let (plus, minus) = sep_generate(&grouped, x.layout(), space(*s))?;
            let (cp, vp) = certificate_outcome("X+ certificate", &plus, opts)?;
            let (cm, vm) = certificate_outcome("X- certificate", &minus, opts)?;
            let diff = fro_norm(&(&(&plus.target - &minus.target) - &grouped));
            let tol = opts.tol.unwrap_or(1e-8) * fro_norm(&grouped).max(1.0);
            let checks = vec![cp, cm, Check::new("X+ - X- = X", diff <= tol, Some(diff))];
            Ok(Outcome::from_checks(checks, json!({ "plus": vp, "minus": vm })))
        }
        DecomposeCmd::Sep { file } => {
            let cert = input::certificate(&load(file, inputs)?)?;
            let out = identity_minus_separable(&cert)?;
            let (c, v) = certificate_outcome("identity-minus certificate", &out, opts)?;
            Ok(Outcome::from_checks(vec![c], v))
        }
        DecomposeCmd::IdMinus { file, space: s } => {
            let x = operator(file, opts, inputs)?;
            let out = identity_minus_any(&x.grouped_matrix()?, x.layout(), space(*s))?;
            let (c, v) = certificate_outcome("identity-minus certificate", &out, opts)?;
            Ok(Outcome::from_checks(vec![c], v))
        }
    }
}

pub fn ball(cmd: &BallCmd, opts: &GlobalOpts, inputs: &mut Vec<Vec<u8>>) -> Run {
    match cmd {
        BallCmd::Radius => {
            let layout = layout_flag(opts)?.ok_or_else(|| CliError::usage("ball radius needs --layout"))?;
            Ok(Outcome::info(to_value(&ball_parameters(&layout))?))
        }
        BallCmd::Cert { file } => {
            let a = operator(file, opts, inputs)?;
            let cert = ball_certificate(a.matrix(), a.layout())?;
            let (c, v) = certificate_outcome("ball certificate", &cert, opts)?;
            Ok(Outcome::from_checks(vec![c], v))
        }
        BallCmd::Losr { file } => {
            let cert = input::certificate(&load(file, inputs)?)?;
            let conv = certificate_to_losr(&cert)?;
            let rep = conv.form.validate(opts.tol.unwrap_or(1e-8))?;
            let checks = vec![Check::new("channel mixture", rep.pass, Some(rep.max_tp_residual))];
            Ok(Outcome::from_checks(
                checks,
                json!({ "conversion": to_value(&conv)?, "report": to_value(&rep)? }),
            ))
        }
        BallCmd::Realize { file } => {
            let form = input::losr_form(&load(file, inputs)?)?;
            let real = realize_shared_randomness(&form)?;
            let diff = fro_norm(&(real.choi()? - form.choi()?));
            let checks = vec![Check::new(
                "realization reproduces the mixture",
                diff <= opts.tol.unwrap_or(1e-8),
                Some(diff),
            )];
            Ok(Outcome::from_checks(checks, json!({ "realization": to_value(&real)? })))
        }
    }
}

pub fn game(cmd: &GameCmd, opts: &GlobalOpts, inputs: &mut Vec<Vec<u8>>) -> Run {
    match cmd {
        GameCmd::Simulate { game, channel } => {
            let g = input::game(&load(game, inputs)?)?;
            let j = input::channel(&load(channel, inputs)?)?;
            Ok(Outcome::info(json!({ "value": simulate_choi(&g, &j)? })))
        }
        GameCmd::Value { game, channel } => {
            let g = input::game(&load(game, inputs)?)?;
            let j = input::channel(&load(channel, inputs)?)?;
            let r = payoff_operator(&g)?;
            let value = r.value(&j.global_matrix()?)?;
            let sim = simulate_choi(&g, &j)?;
            let diff = (value - sim).abs();
            let checks = vec![Check::new(
                "payoff operator matches simulation",
                diff <= opts.tol.unwrap_or(1e-10),
                Some(diff),
            )];
            Ok(Outcome::from_checks(checks, json!({ "value": value, "simulated": sim })))
        }
        GameCmd::Classical { game } => {
            let g = input::game(&load(game, inputs)?)?;
            Ok(Outcome::info(to_value(&brute_force_classical(&g)?)?))
        }
        GameCmd::Seesaw {
            game,
            ent_dim,
            restarts,
            iterations,
        } => {
            let g = input::game(&load(game, inputs)?)?;
            let mut cfg = StrategySearchConfig::new(vec![*ent_dim; 2], *restarts, opts.seed);
            cfg.max_iterations = *iterations;
            let out = seesaw_lose(&g, &cfg)?;
            Ok(Outcome::info(to_value(&out)?))
        }
        GameCmd::WeakValidity {
            file,
            gamma,
            s,
            mode: m,
            restarts,
        } => {
            let l = load(file, inputs)?;
            let (r, layout, gamma, s) = if l.value.get("R").is_some() {
                let inst = input::validity_instance(&l)?;
                (inst.r, inst.layout, gamma.unwrap_or(inst.gamma), s.unwrap_or(inst.s))
            } else {
                let g = input::game(&l)?;
                let gamma = gamma.ok_or_else(|| CliError::usage("--gamma is required with a game file"))?;
                let s = s.ok_or_else(|| CliError::usage("--s is required with a game file"))?;
                (payoff_operator(&g)?.r, g.layout().clone(), gamma, s)
            };
            let budget = Budget {
                restarts: *restarts,
                seed: opts.seed,
                ..Budget::default()
            };
            let rep = weak_validity(&r, &layout, gamma, s, mode(*m), &budget)?;
            Ok(verdict_outcome(rep.verdict, Vec::new(), to_value(&rep)?))
        }
        GameCmd::WeakMembership { file, s, mode: m } => {
            let x = operator(file, opts, inputs)?;
            let rep = weak_membership(x.matrix(), x.layout(), *s, mode(*m))?;
            Ok(verdict_outcome(rep.verdict, Vec::new(), to_value(&rep)?))
        }
    }
}

fn functional_layout(h_arg: &str, opts: &GlobalOpts) -> Result<SystemLayout, CliError> {
    match layout_flag(opts)? {
        Some(l) => Ok(l),
        None if h_arg == "builtin:chsh" => Ok(pr_box_layout()),
        None => Err(CliError::usage("--layout is required for a functional file")),
    }
}

fn load_functional(h: &str, inputs: &mut Vec<Vec<u8>>) -> Result<losr_core::ComplexMatrix, CliError> {
    let (m, bytes) = input::functional(h)?;
    inputs.push(bytes);
    Ok(m)
}

pub fn witness(cmd: &WitnessCmd, opts: &GlobalOpts, inputs: &mut Vec<Vec<u8>>) -> Run {
    match cmd {
        WitnessCmd::Eval { h, channel } => {
            let hm = load_functional(h, inputs)?;
            let j = input::channel(&load(channel, inputs)?)?;
            Ok(Outcome::info(json!({ "value": functional_value(&hm, &j.global_matrix()?)? })))
        }
        WitnessCmd::Audit {
            h,
            restarts,
            iterations,
        } => {
            let hm = load_functional(h, inputs)?;
            let layout = functional_layout(h, opts)?;
            let cfg = AuditConfig {
                restarts: *restarts,
                max_iterations: *iterations,
                seed: opts.seed,
            };
            let audit = audit_positivity_on_cone(&hm, &layout, &cfg)?;
            let tol = opts.tol.unwrap_or(AUDIT_TOL);
            let checks = vec![Check::new(
                "nonnegative on product channels",
                audit.min_value >= -tol,
                Some(audit.min_value),
            )];
            Ok(Outcome::from_checks(checks, to_value(&audit)?))
        }
        WitnessCmd::Certify {
            h,
            channel,
            restarts,
            iterations,
        } => {
            let hm = load_functional(h, inputs)?;
            let j = input::channel(&load(channel, inputs)?)?;
            let cfg = AuditConfig {
                restarts: *restarts,
                max_iterations: *iterations,
                seed: opts.seed,
            };
            let cert = certify_non_losr(&hm, &j.global_matrix()?, j.layout(), &cfg)?;
            let w = cert.witness();
            let checks = vec![
                Check::new("audit", w.audit.min_value >= -AUDIT_TOL, Some(w.audit.min_value)),
                Check::new("separates the channel", cert.is_accepted(), Some(w.margin)),
            ];
            Ok(Outcome::from_checks(checks, to_value(&cert)?))
        }
    }
}

pub fn examples(cmd: &ExamplesCmd) -> Run {
    match cmd {
        ExamplesCmd::List => Ok(Outcome::info(json!(EXAMPLE_NAMES))),
        ExamplesCmd::Emit { name, out } => {
            let ex = named_example(name)?;
            let v = to_value(&ex)?;
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&ex)?;
                std::fs::write(path, text).map_err(|e| CliError::usage(format!("{path}: {e}")))?;
            }
            Ok(Outcome::info(v))
        }
    }
}
