use std::fs;
use std::path::Path;

use algprob::channels::{
    compose, fixed_point, instrument_apply, instrument_marginal, kraus_from_choi, lueders_update, spectral_radius,
    Instrument, KrausChannel, LinearMap, Normalization, KRAUS_RANK_TOL, PROB_TOL, TP_TOL,
};
use algprob::contextuality::{
    ks_configuration, parity_argument, search_valuations, validate_configuration, Parity,
};
use algprob::fock::{
    field_moments, jacobi_from_measure, jacobi_matrix, measure_from_jacobi, q_jacobi, quantum_decomposition_check,
    DiscreteMeasure,
};
use algprob::matcore::gates;
use algprob::measure::{
    bernoulli_law, fmt_sig, neumark_dilate, povm_probabilities, DiscreteLaw, Outcome, Povm, Pvm, MEASURE_TOL,
};
use algprob::qpu::{
    bits, grover_kets, grover_optimal_k, grover_run, measure_law, run_code, sample, GroverSpec, QuantumCode,
    ShotResult,
};
use algprob::random::rng;
use algprob::states::DensityMatrix;
use algprob::structure::{commutant, factor_decompose, generate_algebra, AlgebraBasis};
use algprob::{CMatrix, Error};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{AlgebraCmd, ChannelCmd, Command, FockCmd, Global, KsCmd, PovmCmd};
use crate::render::{bars, csv_rows, law_rows, matrix_text, shot_rows, Report};

pub const TOL_ENV: &str = "ALGPROB_DEFAULT_TOL";

/// Settings shared by all commands after validation.
pub struct Ctx<'a> {
    pub global: &'a Global,
    pub tol: Option<f64>,
}

impl Ctx<'_> {
    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn input(&self) -> Result<&Path, Error> {
        self.global
            .input
            .as_deref()
            .ok_or_else(|| Error::Configuration("this command needs --in <PATH>".into()))
    }

    /// `(shots, seed)` when sampling was requested.
    fn sampling(&self) -> Result<Option<(u64, u64)>, Error> {
        match (self.global.shots, self.global.seed) {
            (None, _) => Ok(None),
            (Some(_), None) => Err(Error::Configuration("--shots requires --seed".into())),
            (Some(s), Some(seed)) => Ok(Some((s, seed))),
        }
    }
}

/// `--tol`, else the environment default; must be finite and positive.
pub fn resolve_tol(flag: Option<f64>) -> Result<Option<f64>, Error> {
    let tol = match flag {
        Some(t) => Some(t),
        None => match std::env::var(TOL_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Configuration(format!("{TOL_ENV}={s} is not a number")))?,
            ),
            Err(_) => None,
        },
    };
    match tol {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(Error::Configuration(format!("tolerance must be positive, got {t}"))),
        t => Ok(t),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Configuration(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
}

/// Density JSON with the density checks reported as such rather than as a
/// parse failure.
fn read_density(path: &Path) -> Result<DensityMatrix, Error> {
    let mut v: Value = read_json(path)?;
    let kind = v.as_object_mut().and_then(|o| o.remove("kind"));
    if kind != Some(json!("density")) {
        return Err(Error::Serde(format!("{}: expected \"kind\": \"density\"", path.display())));
    }
    let m = CMatrix::deserialize(v).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
    DensityMatrix::new(m)
}

#[derive(Deserialize)]
struct MeasureInput {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

pub fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<Report, Error> {
    match cmd {
        Command::Grover { n, marked, iters } => grover(ctx, *n, *marked, *iters),
        Command::HadamardDemo => hadamard_demo(ctx),
        Command::Bernoulli { t, x, y, z, u, v, w } => bernoulli(*t, *x, *y, *z, *u, *v, *w),
        Command::Channel(c) => channel(ctx, c),
        Command::Povm(c) => povm(ctx, c),
        Command::Lueders { proj } => lueders(ctx, proj),
        Command::Instrument { state } => instrument(ctx, state),
        Command::Fock(c) => fock(c, ctx),
        Command::Algebra(c) => algebra(ctx, c),
        Command::Ks(KsCmd::Verify) => ks_verify(),
    }
}

fn sampled(law: &DiscreteLaw, ctx: &Ctx) -> Result<Option<ShotResult>, Error> {
    Ok(ctx.sampling()?.map(|(shots, seed)| sample(law, shots, seed)))
}

fn shots_json(s: &ShotResult) -> Value {
    json!({ "shots": s.shots, "seed": s.seed, "counts": s.counts })
}

fn grover(ctx: &Ctx, n: usize, marked: usize, iters: Option<usize>) -> Result<Report, Error> {
    let spec = GroverSpec::new(n, marked)?;
    let k = match iters {
        Some(k) => k,
        None => grover_optimal_k(n)?,
    };
    let p_trace = grover_run(&spec, k);
    let closed_form: Vec<f64> = (0..=k).map(|j| spec.closed_form(j)).collect();
    let last = grover_kets(&spec, k).pop().expect("k + 1 kets");
    let labels: Vec<Outcome> = (0..spec.dim())
        .map(|i| Outcome::Label(bits(n, i).iter().map(|b| char::from(b'0' + b)).collect()))
        .collect();
    let law = DiscreteLaw::new(labels, last.iter().map(|a| a.norm_sqr()).collect())?;
    let shots = sampled(&law, ctx)?;

    let mut j = json!({
        "n": n,
        "marked": marked,
        "iters": k,
        "theta": spec.theta(),
        "p_trace": p_trace,
        "closed_form": closed_form,
        "success": p_trace[k],
    });
    let mut text = format!("Grover search: n = {n}, marked = {marked}, iterations = {k}\n");
    text.push_str("iteration  success  closed-form\n");
    for (i, (p, c)) in p_trace.iter().zip(&closed_form).enumerate() {
        text.push_str(&format!("{i}  {}  {}\n", fmt_sig(*p), fmt_sig(*c)));
    }
    let rows = match &shots {
        Some(s) => {
            j["counts"] = to_value(&s.counts);
            j["shots"] = json!(s.shots);
            j["seed"] = json!(s.seed);
            text.push_str(&format!("\ncounts over {} shots (seed {})\n", s.shots, s.seed));
            shot_rows(&law, s)
        }
        None => {
            text.push_str("\nfinal outcome law\n");
            law_rows(&law)
        }
    };
    text.push_str(&bars(&rows));
    let header = if shots.is_some() { "count" } else { "probability" };
    Ok(Report::new(j, text).with_csv(csv_rows(header, &rows)))
}

fn hadamard_demo(ctx: &Ctx) -> Result<Report, Error> {
    let code = QuantumCode::from_steps(1, vec![gates::hadamard()])?;
    let rho = run_code(&code, &DensityMatrix::basis(2, 0))?;
    let law = measure_law(&rho)?;
    let shots = sampled(&law, ctx)?;
    let mut j = json!({ "probabilities": law.probs });
    let mut text = format!(
        "Hadamard code on |0>: P(0) = {}, P(1) = {}\n",
        fmt_sig(law.probs[0]),
        fmt_sig(law.probs[1])
    );
    let rows = match &shots {
        Some(s) => {
            j["sample"] = shots_json(s);
            j["frequency_1"] = json!(s.frequency(1));
            text.push_str(&format!(
                "sampled {} shots (seed {}): frequency of 1 = {}\n",
                s.shots,
                s.seed,
                fmt_sig(s.frequency(1))
            ));
            shot_rows(&law, s)
        }
        None => law_rows(&law),
    };
    text.push_str(&bars(&rows));
    let header = if shots.is_some() { "count" } else { "probability" };
    Ok(Report::new(j, text).with_csv(csv_rows(header, &rows)))
}

#[allow(clippy::too_many_arguments)]
fn bernoulli(t: f64, x: f64, y: f64, z: f64, u: f64, v: f64, w: f64) -> Result<Report, Error> {
    let law = bernoulli_law(t, x, y, z, u, v, w)?;
    let values: Vec<f64> = law.outcomes.iter().filter_map(Outcome::as_f64).collect();
    let mean = law.mean().unwrap_or(f64::NAN);
    let j = json!({ "values": values, "probabilities": law.probs, "mean": mean });
    let rows = law_rows(&law);
    let text = format!("mean = {}\n{}", fmt_sig(mean), bars(&rows));
    Ok(Report::new(j, text).with_csv(csv_rows("probability", &rows)))
}

fn kraus_of(m: &LinearMap) -> Result<KrausChannel, Error> {
    match m {
        LinearMap::Kraus(k) => Ok(k.clone()),
        LinearMap::Choi(c) => kraus_from_choi(c, KRAUS_RANK_TOL),
    }
}

fn channel(ctx: &Ctx, cmd: &ChannelCmd) -> Result<Report, Error> {
    let map: LinearMap = read_json(ctx.input()?)?;
    match cmd {
        ChannelCmd::Check => {
            let p = map.properties(ctx.tol_or(TP_TOL));
            let min = map.choi(Normalization::Raw).min_eigenvalue();
            let j = json!({
                "cp": p.cp,
                "tp": p.tp,
                "unital": p.unital,
                "hermiticity": p.hermiticity,
                "min_choi_eigenvalue": min,
            });
            let text = format!(
                "completely positive: {}\ntrace preserving: {}\nunital: {}\nhermiticity preserving: {}\nmin Choi eigenvalue: {}\n",
                p.cp,
                p.tp,
                p.unital,
                p.hermiticity,
                fmt_sig(min)
            );
            Ok(Report::new(j, text))
        }
        ChannelCmd::Choi { normalized } => {
            let norm = if *normalized { Normalization::Normalized } else { Normalization::Raw };
            let c = map.choi(norm);
            let text = format!("Choi matrix ({} -> {})\n{}", c.in_dim(), c.out_dim(), matrix_text(c.matrix()));
            Ok(Report::new(to_value(&c), text))
        }
        ChannelCmd::Kraus => {
            let k = kraus_from_choi(&map.choi(Normalization::Raw), KRAUS_RANK_TOL)?;
            Ok(Report::new(to_value(&k), kraus_text(&k)))
        }
        ChannelCmd::Compose { then } => {
            let second: LinearMap = read_json(then)?;
            let k = compose(&kraus_of(&second)?, &kraus_of(&map)?)?;
            Ok(Report::new(to_value(&k), kraus_text(&k)))
        }
        ChannelCmd::FixedPoint => {
            let k = kraus_of(&map)?;
            let rho = fixed_point(&k)?;
            let r = spectral_radius(&k)?;
            let j = json!({ "fixed_point": rho, "spectral_radius": r });
            let text = format!("spectral radius: {}\ninvariant state\n{}", fmt_sig(r), matrix_text(rho.matrix()));
            Ok(Report::new(j, text))
        }
    }
}

fn kraus_text(k: &KrausChannel) -> String {
    let mut s = format!("{} Kraus operators ({} -> {})\n", k.kraus_ops().len(), k.in_dim(), k.out_dim());
    for (i, op) in k.kraus_ops().iter().enumerate() {
        s.push_str(&format!("K{i}\n{}", matrix_text(op)));
    }
    s
}

fn povm(ctx: &Ctx, cmd: &PovmCmd) -> Result<Report, Error> {
    let m: Povm = read_json(ctx.input()?)?;
    m.validate(ctx.tol_or(MEASURE_TOL))?;
    match cmd {
        PovmCmd::Check { state } => {
            let mut j = json!({ "valid": true, "dim": m.dim(), "outcomes": m.outcomes });
            let mut text = format!("valid POVM: {} effects on C^{}\n", m.effects.len(), m.dim());
            let mut csv = None;
            if let Some(path) = state {
                let rho = read_density(path)?;
                let law = povm_probabilities(&m, &rho)?;
                let rows = law_rows(&law);
                j["probabilities"] = json!(law.probs);
                text.push_str(&bars(&rows));
                csv = Some(csv_rows("probability", &rows));
            }
            let r = Report::new(j, text);
            Ok(match csv {
                Some(c) => r.with_csv(c),
                None => r,
            })
        }
        PovmCmd::Neumark => {
            let d = neumark_dilate(&m)?;
            let residual = d.compression_residual(&m);
            let defect = d.isometry_defect();
            let j = json!({
                "isometry": d.isometry,
                "pvm": d.pvm,
                "compression_residual": residual,
                "isometry_defect": defect,
            });
            let text = format!(
                "dilation C^{} -> C^{}\ncompression residual: {}\nisometry defect: {}\nisometry\n{}",
                d.isometry.cols(),
                d.isometry.rows(),
                fmt_sig(residual),
                fmt_sig(defect),
                matrix_text(&d.isometry)
            );
            Ok(Report::new(j, text))
        }
    }
}

fn lueders(ctx: &Ctx, proj: &Path) -> Result<Report, Error> {
    let rho = read_density(ctx.input()?)?;
    let p: CMatrix = read_json(proj)?;
    let (prob, post) = lueders_update(&rho, &p, ctx.tol_or(PROB_TOL))?;
    let j = json!({ "probability": prob, "posterior": post });
    let text = format!("P(p) = {}\nposterior\n{}", fmt_sig(prob), matrix_text(post.matrix()));
    Ok(Report::new(j, text))
}

fn instrument(ctx: &Ctx, state: &Path) -> Result<Report, Error> {
    let pvm: Pvm = read_json(ctx.input()?)?;
    pvm.validate(ctx.tol.unwrap_or(MEASURE_TOL))?;
    let rho = read_density(state)?;
    let ins = Instrument::von_neumann(&pvm)?;
    let results = instrument_apply(&ins, &rho, PROB_TOL)?;
    let marginal = instrument_marginal(&ins, &rho)?;
    let mut text = String::new();
    let mut rows = Vec::new();
    let outcomes: Vec<Value> = results
        .iter()
        .map(|r| {
            rows.push((r.outcome.to_string(), r.prob));
            text.push_str(&format!("outcome {}: probability {}\n", r.outcome, fmt_sig(r.prob)));
            if let Some(p) = &r.posterior {
                text.push_str(&matrix_text(p.matrix()));
            }
            json!({ "outcome": r.outcome, "probability": r.prob, "posterior": r.posterior })
        })
        .collect();
    text.push_str(&format!("non-selective state\n{}", matrix_text(marginal.matrix())));
    let j = json!({ "outcomes": outcomes, "marginal": marginal });
    Ok(Report::new(j, text).with_csv(csv_rows("probability", &rows)))
}

fn fock(cmd: &FockCmd, ctx: &Ctx) -> Result<Report, Error> {
    match cmd {
        FockCmd::Moments { q, max } => {
            let js = q_jacobi(*q, max / 2 + 2)?;
            let moments = field_moments(&js, *max)?;
            let rows: Vec<(String, f64)> = moments.iter().enumerate().map(|(k, m)| ((k + 1).to_string(), *m)).collect();
            let mut text = format!("vacuum moments, q = {}\n", fmt_sig(*q));
            for (k, m) in &rows {
                text.push_str(&format!("m_{k} = {}\n", fmt_sig(*m)));
            }
            let csv = csv_rows("moment", &rows).replacen("outcome,", "order,", 1);
            Ok(Report::new(json!({ "q": q, "moments": moments }), text).with_csv(csv))
        }
        FockCmd::Favard { n } => {
            let raw: MeasureInput = read_json(ctx.input()?)?;
            let nu = DiscreteMeasure::new(raw.atoms, raw.weights)?;
            let n = n.unwrap_or(nu.len() - 1);
            let js = jacobi_from_measure(&nu, n)?;
            let back = measure_from_jacobi(&jacobi_matrix(&js, n + 1)?)?;
            let qd = quantum_decomposition_check(&nu, n)?;
            let alpha: Vec<f64> = (1..=n + 1).map(|k| js.alpha_at(k)).collect::<Result<_, _>>()?;
            let omega: Vec<f64> = (1..=n).map(|k| js.omega_at(k)).collect::<Result<_, _>>()?;
            let mut j = json!({
                "alpha": alpha,
                "omega": omega,
                "recovered": back,
                "quantum_decomposition_residual": qd,
            });
            let mut text = String::from("k  alpha_k  omega_k\n");
            for (k, a) in alpha.iter().enumerate() {
                let w = omega.get(k).map_or(String::from("-"), |w| fmt_sig(*w));
                text.push_str(&format!("{}  {}  {w}\n", k + 1, fmt_sig(*a)));
            }
            if n + 1 == nu.len() {
                let distance = nu.distance(&back);
                j["roundtrip_distance"] = json!(distance);
                text.push_str(&format!("round-trip distance: {}\n", fmt_sig(distance)));
            }
            text.push_str(&format!("quantum decomposition residual: {}\n", fmt_sig(qd)));
            Ok(Report::new(j, text))
        }
    }
}

#[derive(Deserialize)]
struct Generators {
    n: usize,
    generators: Vec<CMatrix>,
}

fn algebra(ctx: &Ctx, cmd: &AlgebraCmd) -> Result<Report, Error> {
    let g: Generators = read_json(ctx.input()?)?;
    let alg = generate_algebra(&g.generators, g.n)?;
    match cmd {
        AlgebraCmd::Closure => {
            let commutative = alg.is_commutative();
            let j = json!({ "algebra_dim": alg.dim(), "commutative": commutative, "basis": alg.basis() });
            let text = format!("generated algebra: dimension {} in M_{}\ncommutative: {commutative}\n", alg.dim(), g.n);
            Ok(Report::new(j, text))
        }
        AlgebraCmd::Commutant => {
            let c = commutant(&alg)?;
            let j = json!({ "algebra_dim": alg.dim(), "commutant_dim": c.dim(), "basis": c.basis() });
            let text = format!("algebra dimension: {}\ncommutant dimension: {}\n", alg.dim(), c.dim());
            Ok(Report::new(j, text))
        }
        AlgebraCmd::Decompose => decompose(ctx, &alg),
    }
}

fn decompose(ctx: &Ctx, alg: &AlgebraBasis) -> Result<Report, Error> {
    let mut r = rng(ctx.global.seed.unwrap_or(0));
    let d = factor_decompose(alg, &mut r)?;
    let j = json!({ "blocks": d.blocks, "center_dim": d.center_dim, "algebra_dim": d.algebra_dim });
    let mut text = format!("algebra dimension: {}\ncenter dimension: {}\n", d.algebra_dim, d.center_dim);
    let mut csv = String::from("n,m,l\n");
    for b in &d.blocks {
        text.push_str(&format!("block: M_{} (x) I_{} on C^{}\n", b.m, b.l, b.n));
        csv.push_str(&format!("{},{},{}\n", b.n, b.m, b.l));
    }
    Ok(Report::new(j, text).with_csv(csv))
}

fn ks_verify() -> Result<Report, Error> {
    let cfg = ks_configuration();
    let report = validate_configuration(&cfg);
    let solutions = search_valuations(&cfg);
    let parity = parity_argument(&cfg);
    let have = match parity.double_count_parity {
        Parity::Even => "even",
        Parity::Odd => "odd",
    };
    let j = json!({
        "contexts_valid": report.contexts_valid,
        "occurrences": report.occurrences,
        "violations": report.violations,
        "solutions": solutions.len(),
        "parity": { "need": parity.required_ones, "have": have },
        "contradiction": parity.contradiction,
    });
    let mut text = String::from("Kochen-Specker configuration: 18 vectors in C^4, 9 contexts\n");
    for (k, (ctx, ok)) in cfg.contexts.iter().zip(&report.contexts_valid).enumerate() {
        let status = if *ok { "orthogonal, sums to I" } else { "INVALID" };
        text.push_str(&format!("context {}: {:?} {status}\n", k + 1, ctx));
    }
    for v in &report.violations {
        text.push_str(&format!("violation: {v}\n"));
    }
    let all_twice = report.occurrences.iter().all(|&c| c == 2);
    text.push_str(&format!("every projection appears twice: {all_twice}\n"));
    text.push_str(&format!(
        "one 1 per context needs {} ones; counting each projection twice gives an {have} total\n",
        parity.required_ones
    ));
    text.push_str(&format!("contradiction: {}\n", parity.contradiction));
    text.push_str(&format!("valuations found by exhaustive search: {}\n", solutions.len()));
    Ok(Report::new(j, text))
}
