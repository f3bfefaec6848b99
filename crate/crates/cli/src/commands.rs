//! Command implementations. Each returns the rendered output for the chosen format.

use serde::Serialize;
use serde_json::{json, Value};

use netbell_core::bell::{
    closed_form_max, critical_visibility, default_angles, evaluate_with_cap, optimize_angles, BellEvaluation,
    EvalMode, DEFAULT_GRID,
};
use netbell_core::independence::{best_certificate, construct_certificate, IndependenceCertificate};
use netbell_core::lhv::max_classical_f;
use netbell_core::network::{gallery, gallery_catalog, parse_network, serialize_network, NetworkTopology};
use netbell_core::quantum::linalg::involution_error;
use netbell_core::quantum::{MeasurementAngles, ObservableSet};

use crate::format::{machine, round_json, text, text_list};
use crate::{Cli, Command, Failure, Format, Mode, Options};

/// Rendered command output.
pub struct Report {
    pub output: String,
    /// False when a check failed.
    pub ok: bool,
}

impl Report {
    fn ok(output: String) -> Self {
        Self { output, ok: true }
    }
}

type Outcome = Result<Report, Failure>;

pub fn run(cli: &Cli) -> Outcome {
    let o = &cli.opts;
    if o.format == Format::Csv && !matches!(cli.command, Command::Evaluate { .. } | Command::Optimize { .. }) {
        return Err(Failure::Usage("CSV output is available for evaluate and optimize".into()));
    }
    match &cli.command {
        Command::Analyze { input } => analyze(&load(input)?, o),
        Command::Evaluate { input } => evaluate(&load(input)?, o),
        Command::Optimize { input } => optimize(&load(input)?, o),
        Command::Visibility { input } => visibility(&load(input)?, o),
        Command::Lhv { input } => lhv(&load(input)?, o),
        Command::Gallery { name } => show_gallery(name.as_deref(), o),
        Command::Check { input } => check(&load(input)?, o),
    }
}

/// Reads a network file, or a gallery network given as `gallery:NAME`.
fn load(input: &str) -> Result<NetworkTopology, Failure> {
    if let Some(name) = input.strip_prefix("gallery:") {
        return Ok(gallery(name)?);
    }
    let bytes = std::fs::read(input).map_err(|e| Failure::Io(format!("cannot read '{input}': {e}")))?;
    Ok(parse_network(&bytes)?)
}

fn json_out(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_json(v)).expect("JSON values serialize");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn names(net: &NetworkTopology, parties: &[usize]) -> Vec<String> {
    parties.iter().map(|&p| net.parties()[p].clone()).collect()
}

fn require_k(cert: &IndependenceCertificate) -> Result<(), Failure> {
    if cert.k() == 0 {
        return Err(Failure::Core(netbell_core::Error::Precondition(
            "no independent party: the network has no source-free party set".into(),
        )));
    }
    Ok(())
}

fn inequality(net: &NetworkTopology, cert: &IndependenceCertificate) -> String {
    let n = net.n_parties();
    let k = cert.k();
    format!("|I_{{{n},{k}}}|^(1/{k}) + |J_{{{n},{k}}}|^(1/{k}) <= 1")
}

fn analyze(net: &NetworkTopology, o: &Options) -> Outcome {
    let cert = construct_certificate(net, o.retries)?;
    let best = best_certificate(net, o.retries)?;
    let exact = net.n_parties() <= netbell_core::independence::DEFAULT_KMAX_LIMIT;
    let independent = names(net, &cert.parties);
    let others: Vec<String> =
        (0..net.n_parties()).filter(|p| !cert.contains(*p)).map(|p| net.parties()[p].clone()).collect();
    let note = if best.k() < 2 {
        Some("no nonlinear inequality of this family: fewer than two independent parties")
    } else {
        None
    };
    let statement = if cert.k() >= 1 { Some(inequality(net, &cert)) } else { None };
    match o.format {
        Format::Json => Ok(Report::ok(json_out(json!({
            "parties": net.n_parties(),
            "sources": net.n_sources(),
            "certificate": to_value(&cert.to_json(net)),
            "kMax": best.k(),
            "kMaxExact": exact,
            "kMaxCertificate": to_value(&best.to_json(net)),
            "inequality": statement,
            "independentParties": independent,
            "otherParties": others,
            "note": note,
        })))),
        _ => {
            let mut s = String::new();
            s += &format!("network: {} parties, {} sources\n", net.n_parties(), net.n_sources());
            s += &format!("matching certificate: k = {} ({:?})\n", cert.k(), cert.method);
            s += &format!("  independent parties: {}\n", independent.join(", "));
            let edges: Vec<String> = cert.to_json(net).matching.iter().map(|[a, b]| format!("{a}{b}")).collect();
            s += &format!("  matching: {}\n", edges.join(" "));
            s += &format!("k_max = {}{}: {}\n", best.k(), if exact { "" } else { " (lower bound)" }, names(net, &best.parties).join(", "));
            if let Some(st) = statement {
                s += &format!("inequality: {st}\n");
                s += &format!(
                    "  I and J average over the settings of {}; {} use setting 0 in I and 1 in J\n",
                    independent.join(", "),
                    if others.is_empty() { "no other parties".to_string() } else { others.join(", ") }
                );
            }
            if let Some(n) = note {
                s += &format!("{n}\n");
            }
            Ok(Report::ok(s))
        }
    }
}

fn engine(mode: Mode) -> EvalMode {
    match mode {
        Mode::Factorized => EvalMode::Factorized,
        Mode::FullTensor => EvalMode::FullTensor,
    }
}

fn angles_for(net: &NetworkTopology, cert: &IndependenceCertificate, o: &Options) -> Result<MeasurementAngles, Failure> {
    match &o.angles {
        Some(a) if a.len() != cert.k() => Err(Failure::Usage(format!(
            "{} angles given, the certificate has k = {}",
            a.len(),
            cert.k()
        ))),
        Some(a) => Ok(MeasurementAngles::new(a.clone())?),
        None => Ok(default_angles(net, cert)?),
    }
}

fn evaluation_text(e: &BellEvaluation) -> String {
    let mut s = format!(
        "I = {}\nJ = {}\nk = {}\nF = {}\nclassification: {}\nprovenance: {}\n",
        text(e.i),
        text(e.j),
        e.k,
        text(e.f),
        e.classification.name(),
        e.provenance.name()
    );
    if let Some(a) = &e.angles {
        s += &format!("angles: {}\n", text_list(a));
    }
    s
}

fn sweep(net: &NetworkTopology, cert: &IndependenceCertificate, o: &Options) -> Outcome {
    if o.points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    let mut s = String::from("theta,I,J,F\n");
    for p in 0..o.points {
        let t = std::f64::consts::FRAC_PI_2 * p as f64 / (o.points - 1) as f64;
        let th = MeasurementAngles::uniform(t, cert.k())?;
        let e = evaluate_with_cap(net, cert, &th, engine(o.mode), o.dim_cap)?;
        s += &format!("{},{},{},{}\n", machine(t), machine(e.i), machine(e.j), machine(e.f));
    }
    Ok(Report::ok(s))
}

fn evaluate(net: &NetworkTopology, o: &Options) -> Outcome {
    let cert = best_certificate(net, o.retries)?;
    require_k(&cert)?;
    if o.format == Format::Csv {
        return sweep(net, &cert, o);
    }
    let th = angles_for(net, &cert, o)?;
    let e = evaluate_with_cap(net, &cert, &th, engine(o.mode), o.dim_cap)?;
    match o.format {
        Format::Json => Ok(Report::ok(json_out(json!({
            "certificate": to_value(&cert.to_json(net)),
            "evaluation": to_value(&e),
        })))),
        _ => Ok(Report::ok(format!(
            "independent parties: {}\n{}",
            names(net, &cert.parties).join(", "),
            evaluation_text(&e)
        ))),
    }
}

fn optimize(net: &NetworkTopology, o: &Options) -> Outcome {
    let cert = best_certificate(net, o.retries)?;
    require_k(&cert)?;
    if o.format == Format::Csv {
        return sweep(net, &cert, o);
    }
    let opt = optimize_angles(net, &cert, DEFAULT_GRID)?;
    let cf = closed_form_max(net, &cert);
    match o.format {
        Format::Json => Ok(Report::ok(json_out(json!({
            "certificate": to_value(&cert.to_json(net)),
            "evaluation": to_value(&opt.evaluation),
            "closedForm": cf.as_ref().ok().map(to_value),
            "closedFormError": cf.as_ref().err().map(|e| e.to_string()),
        })))),
        _ => {
            let mut s = format!("independent parties: {}\n", names(net, &cert.parties).join(", "));
            s += &evaluation_text(&opt.evaluation);
            match cf {
                Ok(c) => {
                    let label = match c.kind {
                        netbell_core::bell::ClosedFormKind::Maximum => "maximum",
                        netbell_core::bell::ClosedFormKind::AchievableBound => "achievable bound",
                    };
                    s += &format!("closed form ({label}): {} at {}\n", text(c.value), text_list(&c.angles));
                }
                Err(e) => s += &format!("closed form: unavailable ({e})\n"),
            }
            Ok(Report::ok(s))
        }
    }
}

fn visibility(net: &NetworkTopology, o: &Options) -> Outcome {
    let cert = best_certificate(net, o.retries)?;
    require_k(&cert)?;
    let vb = critical_visibility(net, &cert)?;
    match o.format {
        Format::Json => Ok(Report::ok(json_out(json!({
            "certificate": to_value(&cert.to_json(net)),
            "visibility": to_value(&vb),
        })))),
        _ => Ok(Report::ok(format!(
            "k used: {}\nproduct bound: {}\nper-state bounds: {}\nuniform threshold: {}\n\
             note: the product bound is the visibility product at which the optimal F reaches 1 \
             when every source enters I with its visibility; violation needs a larger product\n",
            vb.k_used,
            text(vb.product_bound),
            text_list(&vb.per_state_bounds),
            text(vb.uniform_threshold)
        ))),
    }
}

fn lhv(net: &NetworkTopology, o: &Options) -> Outcome {
    let cert = best_certificate(net, o.retries)?;
    require_k(&cert)?;
    let r = max_classical_f(net, &cert, o.d, o.budget)?;
    match o.format {
        Format::Json => Ok(Report::ok(json_out(json!({
            "certificate": to_value(&cert.to_json(net)),
            "evaluation": to_value(&r.evaluation),
            "exhaustive": r.exhaustive,
            "evaluated": r.evaluated,
            "witness": to_value(&r.witness),
        })))),
        _ => Ok(Report::ok(format!(
            "independent parties: {}\nsearch: {} ({} strategy-measure pairs, d = {})\n{}",
            names(net, &cert.parties).join(", "),
            if r.exhaustive { "exhaustive" } else { "sampled" },
            r.evaluated,
            o.d,
            evaluation_text(&r.evaluation)
        ))),
    }
}

fn show_gallery(name: Option<&str>, o: &Options) -> Outcome {
    match name {
        Some(n) => {
            let net = gallery(n)?;
            let mut s = serialize_network(&net);
            s.push('\n');
            Ok(Report::ok(s))
        }
        None => {
            let cat = gallery_catalog();
            match o.format {
                Format::Json => Ok(Report::ok(json_out(Value::Array(
                    cat.iter()
                        .map(|e| {
                            json!({
                                "name": e.name,
                                "minN": e.min_n,
                                "description": e.description,
                                "reconstructed": e.reconstructed,
                            })
                        })
                        .collect(),
                )))),
                _ => {
                    let mut s = String::new();
                    for e in cat {
                        let name = match e.min_n {
                            Some(m) => format!("{}(n>={m})", e.name),
                            None => e.name.to_string(),
                        };
                        s += &format!("{name:<22} {}\n", e.description);
                    }
                    Ok(Report::ok(s))
                }
            }
        }
    }
}

struct CheckLine {
    name: String,
    pass: bool,
    detail: String,
}

fn check(net: &NetworkTopology, o: &Options) -> Outcome {
    let mut lines = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| lines.push(CheckLine { name: name.into(), pass, detail });
    let cert = best_certificate(net, o.retries)?;
    push("certificate", cert.verify(net).is_ok() && cert.k() >= 1, format!("k = {}", cert.k()));
    if cert.k() == 0 {
        return render_checks(lines, o);
    }
    let k = cert.k();
    let mut probes = vec![default_angles(net, &cert)?];
    for t in 1..=4 {
        let th: Vec<f64> = (0..k)
            .map(|i| std::f64::consts::FRAC_PI_2 * ((0.618_034 * ((i + 1) * t) as f64) % 1.0))
            .collect();
        probes.push(MeasurementAngles::new(th)?);
    }
    let tensor_ok = net.total_dim() <= o.dim_cap;
    let mut worst = 0.0f64;
    let mut top_f = 0.0f64;
    for th in &probes {
        let f = evaluate_with_cap(net, &cert, th, EvalMode::Factorized, o.dim_cap)?;
        top_f = top_f.max(f.f);
        if tensor_ok {
            let t = evaluate_with_cap(net, &cert, th, EvalMode::FullTensor, o.dim_cap)?;
            worst = worst.max((f.i - t.i).abs()).max((f.j - t.j).abs());
        }
    }
    if tensor_ok {
        push("factorized vs full tensor", worst < o.tolerance, format!("max |Δ| = {}", machine(worst)));
    } else {
        push(
            "factorized vs full tensor",
            true,
            format!("skipped: dimension {} above cap {}", net.total_dim(), o.dim_cap),
        );
    }
    push(
        "quantum bound",
        top_f <= std::f64::consts::SQRT_2 + o.tolerance,
        format!("largest F = {}", machine(top_f)),
    );
    let mut inv = 0.0f64;
    for th in &probes {
        let obs = ObservableSet::new(net, &cert, th)?;
        for op in obs.operators() {
            inv = inv.max(involution_error(op));
        }
    }
    push("observables square to identity", inv < 1e-9, format!("max error {}", machine(inv)));
    let opt = optimize_angles(net, &cert, DEFAULT_GRID)?;
    match closed_form_max(net, &cert) {
        Ok(cf) => {
            let exact = cf.kind == netbell_core::bell::ClosedFormKind::Maximum;
            let pass = opt.evaluation.f >= cf.value - 1e-6 && (!exact || (opt.evaluation.f - cf.value).abs() <= 1e-6);
            push(
                "closed form vs optimizer",
                pass,
                format!("closed form {}, optimizer {}", machine(cf.value), machine(opt.evaluation.f)),
            );
        }
        Err(e) => push("closed form vs optimizer", true, format!("skipped: {e}")),
    }
    render_checks(lines, o)
}

fn render_checks(lines: Vec<CheckLine>, o: &Options) -> Outcome {
    let ok = lines.iter().all(|l| l.pass);
    let output = match o.format {
        Format::Json => json_out(json!({
            "pass": ok,
            "checks": lines.iter().map(|l| json!({"name": l.name, "pass": l.pass, "detail": l.detail})).collect::<Vec<_>>(),
        })),
        _ => {
            let mut s = String::new();
            for l in &lines {
                s += &format!("{} {}: {}\n", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            s += if ok { "all checks passed\n" } else { "some checks failed\n" };
            s
        }
    };
    Ok(Report { output, ok })
}
