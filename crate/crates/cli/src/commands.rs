use std::path::Path;

use hspredict_core::hierarchical::{
    build_tau_posterior, estimate_adaptive_risk, sample_predictive_adaptive, HyperPrior, TauGrid,
};
use hspredict_core::model::{make_theta, minimax_rate, tau_calibration, Setup, ThetaExtras};
use hspredict_core::predictive::{
    gaussian_baseline_predictive, max_risk_fixed_tau, risk_curve, sample_predictive_fixed_tau, total_risk_fixed_tau,
};
use hspredict_core::rng::stream;
use hspredict_core::samples::PredictiveSampleSet;
use hspredict_core::scoring::group_tests;
use hspredict_core::specfun::QuadratureSpec;
use hspredict_core::transforms::{
    coarse_coefficient_vector, dwt2_d4, fit_fpca, fpca_scores, read_curve_panel, read_pgm, Standardizer,
};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::args::*;
use crate::table::{Cell, Format, Table};
use crate::{verify, CliError};

pub(crate) fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::RiskCurve(a) => {
            let cfg = a.common.config.clone();
            risk_curve_cmd(merge_config(a, cfg.as_deref())?)
        }
        Command::MaxRisk(a) => {
            let cfg = a.common.config.clone();
            max_risk_cmd(merge_config(a, cfg.as_deref())?)
        }
        Command::TauPosterior(a) => {
            let cfg = a.common.config.clone();
            tau_posterior_cmd(merge_config(a, cfg.as_deref())?)
        }
        Command::SimulateRisk(a) => {
            let cfg = a.common.config.clone();
            simulate_risk_cmd(merge_config(a, cfg.as_deref())?)
        }
        Command::Predict(a) => {
            let cfg = a.common.config.clone();
            predict_cmd(merge_config(a, cfg.as_deref())?)
        }
        Command::Verify(a) => {
            let cfg = a.common.config.clone();
            verify::verify_cmd(merge_config(a, cfg.as_deref())?)
        }
        Command::SymmetryTest(a) => {
            let cfg = a.common.config.clone();
            symmetry_cmd(merge_config(a, cfg.as_deref())?)
        }
        Command::Dwt(a) => {
            let cfg = a.common.config.clone();
            dwt_cmd(merge_config(a, cfg.as_deref())?)
        }
        Command::Fpca(a) => {
            let cfg = a.common.config.clone();
            fpca_cmd(merge_config(a, cfg.as_deref())?)
        }
    }
}

pub(crate) fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing required --{flag}")))
}

fn emit(t: &Table, common: &Common) -> Result<(), CliError> {
    t.write(common.out.as_deref(), common.format.unwrap_or_default())
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, CliError> {
    s.trim().parse().map_err(|_| CliError::Config(format!("cannot parse {what} from `{s}`")))
}

/// `exp`, `exp:<rate>` or `fixed:<tau>`.
pub(crate) fn parse_hyperprior(spec: Option<&str>, n: usize) -> Result<HyperPrior, CliError> {
    let spec = spec.unwrap_or("exp");
    let (head, arg) = spec.split_once(':').map_or((spec, None), |(h, a)| (h, Some(a)));
    let p = match (head, arg) {
        ("exp", None) => HyperPrior::exponential_rate_n(n),
        ("exp", Some(a)) => HyperPrior::ExponentialRateN(parse_num(a, "exponential rate")?),
        ("fixed", Some(a)) => HyperPrior::FixedPoint(parse_num(a, "tau")?),
        _ => return Err(CliError::Config(format!("unknown hyperprior `{spec}`"))),
    };
    let v = match p {
        HyperPrior::ExponentialRateN(v) | HyperPrior::FixedPoint(v) => v,
    };
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Config(format!("hyperprior parameter must be positive, got {v}")));
    }
    Ok(p)
}

fn csv_reader(path: &Path, headers: bool) -> Result<csv::Reader<std::fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// A single observation vector: header row, one data row.
pub(crate) fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut rd = csv_reader(path, true)?;
    let mut rows = rd.records();
    let rec = rows
        .next()
        .ok_or_else(|| CliError::Config(format!("{}: no data row", path.display())))?
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if rows.next().is_some() {
        return Err(CliError::Config(format!("{}: expected exactly one data row", path.display())));
    }
    let y = rec.iter().map(|f| parse_num::<f64>(f, "observation")).collect::<Result<Vec<_>, _>>()?;
    if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("{}: observations must be finite and non-empty", path.display())));
    }
    Ok(y)
}

fn positive(v: f64, flag: &str) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("--{flag} must be positive, got {v}")))
    }
}

fn risk_curve_cmd(a: RiskCurveArgs) -> Result<(), CliError> {
    let tau = positive(required(a.tau, "tau")?, "tau")?;
    let r = positive(a.r.unwrap_or(1.0), "r")?;
    let theta_max = positive(a.theta_max.unwrap_or(10.0), "theta-max")?;
    let steps = a.steps.unwrap_or(200);
    if steps == 0 {
        return Err(CliError::Config("--steps must be at least 1".into()));
    }
    let thetas: Vec<f64> = (0..=steps).map(|k| theta_max * k as f64 / steps as f64).collect();
    let curve = risk_curve(&thetas, tau, r, &QuadratureSpec::default())?;
    let mut t = Table::new(["theta", "risk"]);
    for (&th, &rk) in curve.thetas.iter().zip(&curve.risks) {
        t.push(vec![th.into(), rk.into()]);
    }
    emit(&t, &a.common)
}

pub const SCHEME_COUNT: usize = 6;

/// sₙ under growth scheme k: 20, 10 log n, 10 n^{1/4}, n^{1/2}, n^{3/4},
/// n/log n, rounded and clamped to [1, n − 1].
pub fn scheme_sparsity(scheme: usize, n: usize) -> Result<usize, CliError> {
    let nf = n as f64;
    let s = match scheme {
        1 => 20.0,
        2 => 10.0 * nf.ln(),
        3 => 10.0 * nf.powf(0.25),
        4 => nf.sqrt(),
        5 => nf.powf(0.75),
        6 => nf / nf.ln(),
        _ => return Err(CliError::Config(format!("scheme must be 1 to {SCHEME_COUNT}, got {scheme}"))),
    };
    if n < 2 {
        return Err(CliError::Config(format!("n must be at least 2, got {n}")));
    }
    Ok((s.round() as usize).clamp(1, n - 1))
}

fn max_risk_cmd(a: MaxRiskArgs) -> Result<(), CliError> {
    let ns: Vec<usize> =
        a.n.as_deref()
            .unwrap_or("100,1000,10000,100000,1000000")
            .split(',')
            .map(|s| parse_num(s, "n"))
            .collect::<Result<_, _>>()?;
    let alpha = a.alpha.unwrap_or(0.0);
    let r = positive(a.r.unwrap_or(1.0), "r")?;
    let schemes: Vec<usize> = match (a.s_n, a.scheme) {
        (Some(_), Some(_)) => return Err(CliError::Config("--s-n and --scheme are exclusive".into())),
        (Some(_), None) => vec![0],
        (None, Some(k)) => vec![k],
        (None, None) => (1..=SCHEME_COUNT).collect(),
    };
    let spec = QuadratureSpec::default();
    let mut t = Table::new(["scheme", "n", "s_n", "alpha", "tau", "max_risk", "minimax", "ratio"]);
    for &k in &schemes {
        for &n in &ns {
            let s_n = match a.s_n {
                Some(s) => s,
                None => scheme_sparsity(k, n)?,
            };
            let tau = tau_calibration(n, s_n, alpha)?.value();
            let max = max_risk_fixed_tau(n, s_n, tau, r, &spec)?;
            let mm = minimax_rate(n, s_n, r)?;
            let label = if k == 0 { "custom".to_string() } else { k.to_string() };
            t.push(vec![
                label.into(),
                n.into(),
                s_n.into(),
                alpha.into(),
                tau.into(),
                max.into(),
                mm.into(),
                (max / mm).into(),
            ]);
        }
    }
    emit(&t, &a.common)
}

fn tau_posterior_cmd(a: TauPosteriorArgs) -> Result<(), CliError> {
    let y = read_vector(&required(a.input, "input")?)?;
    let n = y.len();
    let prior = parse_hyperprior(a.hyperprior.as_deref(), n)?;
    let grid = TauGrid { points: a.grid.unwrap_or(TauGrid::default().points), ..TauGrid::default() };
    let post = build_tau_posterior(&y, &prior, &grid)?;
    let mut t = Table::new(["series", "tau", "density"]);
    for (tau, d) in post.tau_density() {
        t.push(vec!["posterior".into(), tau.into(), d.into()]);
    }
    if let Some(s_n) = a.s_n {
        for (name, alpha) in [("tau_n0", 0.0), ("tau_n_half", 0.5)] {
            let tau = tau_calibration(n, s_n, alpha)?.value();
            t.push(vec![name.into(), tau.into(), Cell::Empty]);
        }
    }
    emit(&t, &a.common)
}

fn parse_setup(s: &str) -> Result<Setup, CliError> {
    match s {
        "setup1" => Ok(Setup::Setup1),
        "setup2" => Ok(Setup::Setup2),
        "strong-weak" => Ok(Setup::StrongWeak),
        _ => Err(CliError::Config(format!("unknown setup `{s}`"))),
    }
}

fn simulate_risk_cmd(a: SimulateRiskArgs) -> Result<(), CliError> {
    let seed = required(a.seed, "seed")?;
    let setup_name = a.setup.unwrap_or_else(|| "strong-weak".into());
    let setup = parse_setup(&setup_name)?;
    let n = a.n.unwrap_or(500);
    let s_strong = a.s_strong.unwrap_or(25);
    let c = match setup {
        Setup::StrongWeak => a.c.unwrap_or(2.0),
        _ => 3.0,
    };
    let r = positive(a.r.unwrap_or(1.0), "r")?;
    let theta = make_theta(setup, n, s_strong, c, &ThetaExtras::default())?;
    let spec_str = a.hyperprior.unwrap_or_else(|| "exp".into());
    let prior = match spec_str.strip_prefix("calibrated:") {
        Some(al) => HyperPrior::FixedPoint(tau_calibration(n, s_strong, parse_num(al, "alpha")?)?.value()),
        None => parse_hyperprior(Some(&spec_str), n)?,
    };
    let est =
        estimate_adaptive_risk(&theta, &prior, r, a.b.unwrap_or(1000), a.q.unwrap_or(200), a.l.unwrap_or(300), seed)?;
    let (tau, quad) = match prior {
        HyperPrior::FixedPoint(tau) => {
            (Cell::Num(tau), Cell::Num(total_risk_fixed_tau(&theta, tau, r, &QuadratureSpec::default())?))
        }
        HyperPrior::ExponentialRateN(_) => (Cell::Empty, Cell::Empty),
    };
    let mut t = Table::new(["setup", "n", "s_strong", "c", "prior", "tau", "estimate", "std_error", "quadrature"]);
    t.push(vec![
        setup_name.into(),
        n.into(),
        s_strong.into(),
        c.into(),
        spec_str.into(),
        tau,
        est.estimate.into(),
        est.std_error.into(),
        quad,
    ]);
    emit(&t, &a.common)
}

/// Predictive draws for `y` under a sampling mode.
pub(crate) fn draw_samples<R: Rng>(
    y: &[f64],
    mode: &str,
    hyperprior: Option<&str>,
    r: f64,
    count: usize,
    rng: &mut R,
) -> Result<PredictiveSampleSet, CliError> {
    if count == 0 {
        return Err(CliError::Config("--draws must be at least 1".into()));
    }
    if mode == "adaptive" {
        let prior = parse_hyperprior(hyperprior, y.len())?;
        return Ok(sample_predictive_adaptive(y, &prior, r, count, rng)?);
    }
    if mode == "gaussian" {
        let preds = y.iter().map(|&v| gaussian_baseline_predictive(v, r)).collect::<Result<Vec<_>, _>>()?;
        let mut data = Vec::with_capacity(count * y.len());
        for _ in 0..count {
            for p in &preds {
                let z: f64 = rng.sample(StandardNormal);
                data.push(p.mean + p.variance.sqrt() * z);
            }
        }
        return Ok(PredictiveSampleSet::new(count, y.len(), data)?);
    }
    if let Some(t) = mode.strip_prefix("fixed:") {
        let tau = positive(parse_num(t, "tau")?, "mode tau")?;
        return Ok(sample_predictive_fixed_tau(y, tau, r, count, rng)?);
    }
    Err(CliError::Config(format!("unknown mode `{mode}`")))
}

pub(crate) fn sample_table(s: &PredictiveSampleSet) -> Table {
    let mut t = Table::new((0..s.dim()).map(|j| format!("y{j}")));
    for row in s.rows() {
        t.push(row.iter().map(|&v| Cell::Num(v)).collect());
    }
    t
}

fn predict_cmd(a: PredictArgs) -> Result<(), CliError> {
    let seed = required(a.seed, "seed")?;
    let y = read_vector(&required(a.input, "input")?)?;
    let r = positive(a.r.unwrap_or(1.0), "r")?;
    let mode = a.mode.unwrap_or_else(|| "adaptive".into());
    let s = draw_samples(&y, &mode, a.hyperprior.as_deref(), r, a.draws.unwrap_or(10_000), &mut stream(seed))?;
    emit(&sample_table(&s), &a.common)
}

/// Columns of a headed CSV: (header names, column vectors).
fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut rd = csv_reader(path, true)?;
    let ids: Vec<String> = rd
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .iter()
        .map(String::from)
        .collect();
    let mut cols = vec![Vec::new(); ids.len()];
    for rec in rd.records() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for (c, f) in cols.iter_mut().zip(rec.iter()) {
            c.push(parse_num::<f64>(f, "score")?);
        }
    }
    Ok((ids, cols))
}

fn symmetry_cmd(a: SymmetryTestArgs) -> Result<(), CliError> {
    let correction = a.correction.unwrap_or_else(|| "by".into());
    if correction != "by" {
        return Err(CliError::Config(format!("unsupported correction `{correction}`; only `by` is available")));
    }
    let (ids, ga) = read_columns(&required(a.group_a, "group-a")?)?;
    let (ids_b, gb) = read_columns(&required(a.group_b, "group-b")?)?;
    if ids != ids_b {
        return Err(CliError::Config("group files have different pair ids".into()));
    }
    let res = group_tests(&ids, &ga, &gb)?;
    let mut t = Table::new(["pair_id", "raw_p", "adjusted_p", "direction"]);
    for g in res {
        t.push(vec![g.pair_id.into(), g.raw_p.into(), g.adjusted_p.into(), g.direction.label().into()]);
    }
    emit(&t, &a.common)
}

fn dwt_cmd(a: DwtArgs) -> Result<(), CliError> {
    if a.input.is_empty() {
        return Err(CliError::Config("missing required --input".into()));
    }
    let j_max = a.j_max.unwrap_or(3);
    let mut ids = Vec::new();
    let mut vecs = Vec::new();
    for p in &a.input {
        let (w, h, px) = read_pgm(p)?;
        if w != h {
            return Err(CliError::Config(format!("{}: image is {w}x{h}, need a square", p.display())));
        }
        let levels = a.levels.unwrap_or(w.trailing_zeros() as usize);
        let c = dwt2_d4(&px, w, levels)?;
        vecs.push(coarse_coefficient_vector(&c, j_max)?);
        ids.push(p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()));
    }
    if vecs.iter().any(|v| v.len() != vecs[0].len()) {
        return Err(CliError::Config("images give coefficient vectors of different lengths".into()));
    }
    let divisor = match a.divisor {
        Some(d) => positive(d, "divisor")?,
        None => Standardizer::fit(&vecs)?.divisor,
    };
    let mut t = Table::new(
        ["id".to_string(), "divisor".to_string()].into_iter().chain((0..vecs[0].len()).map(|j| format!("y{j}"))),
    );
    for (id, v) in ids.into_iter().zip(&vecs) {
        let mut row = vec![Cell::Str(id), Cell::Num(divisor)];
        row.extend(v.iter().map(|&x| Cell::Num(x / divisor)));
        t.push(row);
    }
    emit(&t, &a.common)
}

fn fpca_cmd(a: FpcaArgs) -> Result<(), CliError> {
    let panel = read_curve_panel(&required(a.input, "input")?)?;
    let m = a.m.unwrap_or(5);
    let model = fit_fpca(&panel.curves, &panel.grid, m)?;
    let mut t = Table::new(std::iter::once("subject".to_string()).chain((0..m).map(|k| format!("s{k}"))));
    for (i, c) in panel.curves.iter().enumerate() {
        let mut row = vec![Cell::from(i)];
        row.extend(fpca_scores(&model, c)?.into_iter().map(Cell::Num));
        t.push(row);
    }
    if let Some(p) = &a.basis_out {
        let mut b = Table::new(
            ["component".to_string(), "eigenvalue".to_string()]
                .into_iter()
                .chain((0..panel.grid.len()).map(|k| format!("f{k}"))),
        );
        for (k, (ev, f)) in model.eigenvalues.iter().zip(&model.eigenfunctions).enumerate() {
            let mut row = vec![Cell::from(k), Cell::Num(*ev)];
            row.extend(f.iter().map(|&v| Cell::Num(v)));
            b.push(row);
        }
        b.write(Some(p), a.common.format.unwrap_or(Format::Csv))?;
    }
    emit(&t, &a.common)
}
