use biruin::brm::{
    asym_approx, crude_upper_bound, early_window_bound, prop1_bounds, q_exponent, ruin_finite, ruin_infinite,
    ruin_time_limit_cdf, tail_equivalent_form, BivariateBrm, Horizon, Regime, SinglePortfolio,
};
use biruin::constant::{estimate_i_t, estimate_i_t_lattice, extrapolate_c, upper_bound_c, Lattice};
use biruin::levy::{
    psi_levy, BarrierCase, BrownianModel, GammaModel, LevyModel, Negated, PerturbedGammaModel, StableModel,
    TwoLineBarrier,
};
use biruin::mc::{
    ks_weighted, sample_ruin_time, simulate_levy_psi, simulate_one_dim, simulate_psi_uv, Estimate, IsDrift, SimConfig,
};
use biruin::numerics::QuadratureSpec;
use clap::Parser;
use indexmap::IndexMap;

use crate::record::{fmt_real, write_csv};
use crate::{
    execute, BarrierArgs, Brm1Args, Brm2Command, Cli, Command, ConstantArgs, ConstantMethod, Failure, Global, LevyArgs,
    McCommand, ModelArgs, PairArgs, ResultRecord, SweepArgs,
};

pub(crate) fn dispatch(cmd: &Command, g: &Global) -> Result<ResultRecord, Failure> {
    match cmd {
        Command::Brm1(a) => brm1(a),
        Command::Brm2(c) => brm2(c),
        Command::Constant(a) => constant(a, g),
        Command::Levy(a) => levy(a, g),
        Command::Mc(c) => mc(c, g),
        Command::Sweep(_) => Err(Failure::invalid("sweep cannot be nested")),
    }
}

fn horizon(t: &str) -> Result<Horizon, Failure> {
    if t.eq_ignore_ascii_case("inf") {
        return Ok(Horizon::Infinite);
    }
    t.parse::<f64>()
        .map(Horizon::Finite)
        .map_err(|_| Failure::invalid(format!("T must be a number or `inf`, got {t}")))
}

fn horizon_field(h: Horizon) -> crate::Field {
    match h {
        Horizon::Finite(t) => t.into(),
        Horizon::Infinite => "inf".into(),
    }
}

fn brm1(a: &Brm1Args) -> Result<ResultRecord, Failure> {
    let h = horizon(&a.t)?;
    let p = SinglePortfolio::new(a.c, a.sigma, a.u, h)?;
    let mut r = match h {
        Horizon::Finite(_) => ResultRecord::new("brm1", "closed form", ruin_finite(&p)?),
        Horizon::Infinite => {
            let q = ruin_infinite(&p)?;
            let mut r = ResultRecord::new("brm1", "closed form", q.probability);
            r.diag("degenerate", q.degenerate);
            r
        }
    };
    r.param("c", a.c)
        .param("sigma", a.sigma)
        .param("u", a.u)
        .param("T", horizon_field(h));
    Ok(r)
}

fn pair_model(p: &PairArgs) -> Result<BivariateBrm, Failure> {
    Ok(BivariateBrm::new(p.c1, p.c2, p.rho, p.a, p.u)?)
}

fn echo_pair(r: &mut ResultRecord, p: &PairArgs) {
    r.param("c1", p.c1)
        .param("c2", p.c2)
        .param("rho", p.rho)
        .param("a", p.a)
        .param("u", p.u);
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::AboveRho => "a>rho",
        Regime::AtRho => "a=rho",
        Regime::BelowRho => "a<rho",
    }
}

fn brm2(c: &Brm2Command) -> Result<ResultRecord, Failure> {
    match c {
        Brm2Command::Bounds { pair, v } => {
            let m = pair_model(pair)?;
            let v = v.unwrap_or(m.v());
            let b = prop1_bounds(&m, v)?;
            let mut r = ResultRecord::new("brm2 bounds", "bivariate normal bounds", b.lower);
            echo_pair(&mut r, pair);
            r.param("v", v);
            r.bounds = Some((b.lower, b.upper));
            Ok(r)
        }
        Brm2Command::Asym { pair, c_hat } => {
            let m = pair_model(pair)?;
            let ap = asym_approx(&m, *c_hat)?;
            let tail = tail_equivalent_form(&m, *c_hat)?;
            let mut r = ResultRecord::new("brm2 asym", "tail asymptotics", ap.value);
            echo_pair(&mut r, pair);
            if let Some(ch) = c_hat {
                r.param("C", *ch);
            }
            r.diag("regime", regime_name(ap.regime))
                .diag("near_boundary", ap.near_boundary)
                .diag("tail_equivalent", tail.value);
            Ok(r)
        }
        Brm2Command::Crude { pair } => {
            let m = pair_model(pair)?;
            let mut r = ResultRecord::new("brm2 crude", "marginal minimum", crude_upper_bound(&m)?);
            echo_pair(&mut r, pair);
            Ok(r)
        }
        Brm2Command::EarlyBound { pair, window } => {
            let m = pair_model(pair)?;
            let b = early_window_bound(&m, *window)?;
            let mut r = ResultRecord::new("brm2 early-bound", "early window bound", b.bound);
            echo_pair(&mut r, pair);
            r.param("window", *window);
            r.diag("valid", b.valid);
            if let Some(um) = b.u_min {
                r.diag("u_min", um);
            }
            Ok(r)
        }
        Brm2Command::RuintimeCdf { a, rho, x } => {
            let v = ruin_time_limit_cdf(*a, *rho, *x)?;
            let mut r = ResultRecord::new("brm2 ruintime-cdf", "exponential limit law", v);
            r.param("a", *a).param("rho", *rho).param("x", *x);
            r.diag("q", q_exponent(*a, *rho));
            Ok(r)
        }
    }
}

fn sim_config(g: &Global, is_drift: IsDrift) -> SimConfig {
    SimConfig {
        n_paths: g.paths,
        n_steps: g.steps,
        seed: g.seed,
        is_drift,
        window_end: 1.0,
        workers: g.workers,
    }
}

fn echo_sim(r: &mut ResultRecord, g: &Global, steps: usize) {
    r.param("paths", g.paths)
        .param("steps", steps)
        .param("workers", g.workers);
    r.seed = Some(g.seed);
}

fn echo_estimate(r: &mut ResultRecord, e: &Estimate) {
    r.stderr = Some(e.stderr);
    r.ci = Some((e.ci_low, e.ci_high));
    r.diag("n_effective", e.n_effective);
    for l in e.levels.iter().skip(1) {
        r.diag(&format!("value_at_{}_steps", l.n_steps), l.value);
    }
}

fn constant(a: &ConstantArgs, g: &Global) -> Result<ResultRecord, Failure> {
    let cfg = sim_config(g, IsDrift::None);
    let est = match (a.method, a.t) {
        (ConstantMethod::Staircase, Some(t)) => estimate_i_t(a.a, a.rho, t, &cfg)?,
        (ConstantMethod::Staircase, None) => extrapolate_c(a.a, a.rho, a.t_max, &cfg)?,
        (ConstantMethod::Lattice, t) => {
            let lat = Lattice {
                spacing: a.spacing,
                ..Lattice::default()
            };
            estimate_i_t_lattice(a.a, a.rho, t.unwrap_or(1.0), &lat, &cfg)?
        }
    };
    let mut r = ResultRecord::new("constant", est.method.clone(), est.value);
    r.param("a", a.a).param("rho", a.rho);
    match (a.method, a.t) {
        (ConstantMethod::Staircase, None) => {
            r.param("t-max", a.t_max);
        }
        _ => {
            r.param("T", est.t_used);
        }
    }
    r.param(
        "method",
        match a.method {
            ConstantMethod::Staircase => "staircase",
            ConstantMethod::Lattice => "lattice",
        },
    );
    if a.method == ConstantMethod::Lattice {
        r.param("spacing", a.spacing);
    }
    echo_sim(&mut r, g, est.steps_per_unit);
    r.stderr = Some(est.stderr);
    r.ci = Some((est.value - 1.96 * est.stderr, est.value + 1.96 * est.stderr));
    r.diag("t_used", est.t_used);
    if let Some(c) = est.contraction {
        r.diag("contraction", c);
    }
    if let Ok(ub) = upper_bound_c(a.a, a.rho, 0.0, 0.0) {
        r.diag("upper_bound", ub);
    }
    Ok(r)
}

pub(crate) fn build_model(m: &ModelArgs) -> Result<Box<dyn LevyModel>, Failure> {
    let (neg, base) = match m.model.strip_prefix("neg-") {
        Some(b) => (true, b),
        None => (false, m.model.as_str()),
    };
    fn wrap<M: LevyModel + 'static>(neg: bool, x: M) -> Box<dyn LevyModel> {
        if neg {
            Box::new(Negated(x))
        } else {
            Box::new(x)
        }
    }
    Ok(match base {
        "brownian" => wrap(neg, BrownianModel),
        "gamma" => wrap(neg, GammaModel::new(m.lambda)?),
        "stable" => wrap(neg, StableModel::new(m.alpha)?),
        "perturbed-gamma" => wrap(neg, PerturbedGammaModel::new(m.lambda, m.sigma)?),
        other => return Err(Failure::invalid(format!("unknown model `{other}`"))),
    })
}

fn echo_model(r: &mut ResultRecord, m: &ModelArgs) {
    r.param("model", m.model.as_str());
    let base = m.model.trim_start_matches("neg-");
    if base == "gamma" || base == "perturbed-gamma" {
        r.param("lambda", m.lambda);
    }
    if base == "stable" {
        r.param("alpha", m.alpha);
    }
    if base == "perturbed-gamma" {
        r.param("sigma", m.sigma);
    }
}

fn barrier(b: &BarrierArgs) -> Result<TwoLineBarrier, Failure> {
    Ok(TwoLineBarrier::new(b.c1, b.c2, b.x, b.y, b.t)?)
}

fn echo_barrier(r: &mut ResultRecord, b: &BarrierArgs, tb: &TwoLineBarrier) {
    r.param("c1", b.c1)
        .param("c2", b.c2)
        .param("x", b.x)
        .param("y", b.y)
        .param("T", b.t);
    r.diag("case", tb.case().as_str());
    if let BarrierCase::Crossing { xi } = tb.case() {
        r.diag("xi", xi);
    }
}

fn levy(a: &LevyArgs, g: &Global) -> Result<ResultRecord, Failure> {
    let model = build_model(&a.model)?;
    let b = barrier(&a.barrier)?;
    let spec = QuadratureSpec::with_tolerances(g.abs_tol, g.rel_tol);
    let v = psi_levy(model.as_ref(), &b, &spec)?;
    let mut r = ResultRecord::new("levy", "quadrature", v);
    echo_model(&mut r, &a.model);
    echo_barrier(&mut r, &a.barrier, &b);
    r.param("abs-tol", g.abs_tol).param("rel-tol", g.rel_tol);
    r.diag("spectral_sign", model.spectral_sign().as_str());
    Ok(r)
}

fn is_drift(s: &str) -> Result<IsDrift, Failure> {
    match s {
        "auto" => Ok(IsDrift::Auto),
        "none" => Ok(IsDrift::None),
        _ => {
            let parts: Vec<&str> = s.split(',').collect();
            let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
            match nums.as_deref() {
                Ok([x, y]) => Ok(IsDrift::Fixed(*x, *y)),
                _ => Err(Failure::invalid(format!(
                    "--is takes `auto`, `none` or `t1,t2`, got {s}"
                ))),
            }
        }
    }
}

fn mc(c: &McCommand, g: &Global) -> Result<ResultRecord, Failure> {
    match c {
        McCommand::Psi2d { pair, v, is, window } => {
            let mut cfg = sim_config(g, is_drift(is)?);
            cfg.window_end = *window;
            let m = pair_model(pair)?;
            let v = v.unwrap_or(m.v());
            let e = simulate_psi_uv(m.c1, m.c2, m.rho, m.u, v, &cfg)?;
            let mut r = ResultRecord::new("mc psi2d", e.method.clone(), e.value);
            echo_pair(&mut r, pair);
            r.param("v", v).param("is", is.as_str()).param("window", *window);
            echo_sim(&mut r, g, e.levels[0].n_steps);
            echo_estimate(&mut r, &e);
            Ok(r)
        }
        McCommand::Psi1d(a) => {
            let h = horizon(&a.t)?;
            let p = SinglePortfolio::new(a.c, a.sigma, a.u, h)?;
            let e = simulate_one_dim(&p, &sim_config(g, IsDrift::None))?;
            let mut r = ResultRecord::new("mc psi1d", e.method.clone(), e.value);
            r.param("c", a.c)
                .param("sigma", a.sigma)
                .param("u", a.u)
                .param("T", horizon_field(h));
            echo_sim(&mut r, g, e.levels[0].n_steps);
            echo_estimate(&mut r, &e);
            Ok(r)
        }
        McCommand::Levy(a) => {
            let model = build_model(&a.model)?;
            let b = barrier(&a.barrier)?;
            let e = simulate_levy_psi(model.as_ref(), &b, &sim_config(g, IsDrift::None))?;
            let mut r = ResultRecord::new("mc levy", e.method.clone(), e.value);
            echo_model(&mut r, &a.model);
            echo_barrier(&mut r, &a.barrier, &b);
            echo_sim(&mut r, g, e.levels[0].n_steps);
            echo_estimate(&mut r, &e);
            Ok(r)
        }
        McCommand::Ruintime { pair, is } => {
            let m = pair_model(pair)?;
            let s = sample_ruin_time(&m, &sim_config(g, is_drift(is)?))?;
            let wsum: f64 = s.weights.iter().sum();
            if s.values.is_empty() || wsum <= 0.0 || wsum.is_nan() {
                return Err(biruin::Error::EmptySample.into());
            }
            let mean = s.values.iter().zip(&s.weights).map(|(x, w)| x * w).sum::<f64>() / wsum;
            let (a, rho) = (m.a, m.rho);
            let ks = ks_weighted(&s.values, &s.weights, |x| {
                ruin_time_limit_cdf(a, rho, x.max(0.0)).unwrap_or(f64::NAN)
            })?;
            let mut r = ResultRecord::new("mc ruintime", "weighted mean of u^2 (1 - tau)", mean);
            echo_pair(&mut r, pair);
            r.param("is", is.as_str());
            echo_sim(&mut r, g, s.n_steps);
            r.diag("ks", ks)
                .diag("limit_mean", 2.0 / q_exponent(a, rho))
                .diag("n_effective", s.n_effective)
                .diag("n_ruined", s.values.len());
            Ok(r)
        }
    }
}

/// Global flags in argument form, so inner runs see the sweep's settings.
/// Global flags of the sweep itself, except those the target or a grid axis sets.
fn global_args(g: &Global, taken: &[String]) -> Vec<String> {
    let all: Vec<String> = vec![
        "--seed".into(),
        g.seed.to_string(),
        "--paths".into(),
        g.paths.to_string(),
        "--steps".into(),
        g.steps.to_string(),
        "--workers".into(),
        g.workers.to_string(),
        "--abs-tol".into(),
        fmt_real(g.abs_tol),
        "--rel-tol".into(),
        fmt_real(g.rel_tol),
    ];
    all.chunks(2)
        .filter(|kv| !taken.iter().any(|t| *t == kv[0][2..]))
        .flatten()
        .cloned()
        .collect()
}

pub(crate) fn sweep(g: &Global, s: &SweepArgs) -> Result<String, Failure> {
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for spec in &s.grid {
        let (k, list) = spec
            .split_once('=')
            .ok_or_else(|| Failure::invalid(format!("grid must read name=v1,v2,..., got {spec}")))?;
        let vals: Vec<String> = list.split(',').map(|v| v.trim().to_string()).collect();
        if k.is_empty() || vals.iter().any(String::is_empty) {
            return Err(Failure::invalid(format!("empty grid entry in {spec}")));
        }
        axes.push((k.trim_start_matches("--").to_string(), vals));
    }
    if s.target.first().is_some_and(|t| t == "sweep") {
        return Err(Failure::invalid("sweep cannot be nested"));
    }
    let mut taken: Vec<String> = s
        .target
        .iter()
        .filter_map(|t| t.strip_prefix("--"))
        .map(|t| t.split('=').next().unwrap_or(t).to_string())
        .collect();
    taken.extend(axes.iter().map(|(k, _)| k.clone()));
    let globals = global_args(g, &taken);
    // Odometer over the axes, last axis fastest.
    let mut idx = vec![0usize; axes.len()];
    let mut rows: Vec<(Vec<String>, Result<ResultRecord, Failure>)> = Vec::new();
    loop {
        let point: Vec<String> = axes.iter().zip(&idx).map(|((_, v), &i)| v[i].clone()).collect();
        let mut argv = vec!["biruin".to_string()];
        argv.extend(s.target.iter().cloned());
        for ((k, _), v) in axes.iter().zip(&point) {
            argv.push(format!("--{k}"));
            argv.push(v.clone());
        }
        argv.extend(globals.iter().cloned());
        let res = match Cli::try_parse_from(&argv) {
            Ok(cli) if matches!(cli.command, Command::Sweep(_)) => Err(Failure::invalid("sweep cannot be nested")),
            Ok(cli) => execute(&cli),
            Err(e) => Err(Failure {
                code: crate::USAGE_EXIT,
                message: e
                    .to_string()
                    .lines()
                    .next()
                    .unwrap_or_default()
                    .trim_start_matches("error: ")
                    .to_string(),
            }),
        };
        rows.push((point, res));
        let mut k = axes.len();
        loop {
            if k == 0 {
                return Ok(sweep_table(&axes, &rows));
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].1.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn sweep_table(axes: &[(String, Vec<String>)], rows: &[(Vec<String>, Result<ResultRecord, Failure>)]) -> String {
    // Header from the first successful record; grid columns otherwise.
    let template = rows.iter().find_map(|(_, r)| r.as_ref().ok());
    let mut header: Vec<String> = match template {
        Some(t) => t.csv_header(),
        None => {
            let mut h = vec!["command".to_string()];
            h.extend(axes.iter().map(|(k, _)| k.clone()));
            h
        }
    };
    header.push("error".into());
    let mut out = Vec::new();
    for (point, res) in rows {
        let row = match res {
            Ok(r) if Some(r.params.keys().collect::<Vec<_>>()) == template.map(|t| t.params.keys().collect()) => {
                let mut row = r.csv_row();
                row.push(String::new());
                row
            }
            Ok(r) => {
                let mut row = vec![String::new(); header.len()];
                row[header.len() - 1] = format!("parameter columns differ: {:?}", r.params.keys().collect::<Vec<_>>());
                row
            }
            Err(f) => {
                let named: IndexMap<&str, &String> = axes.iter().map(|(k, _)| k.as_str()).zip(point.iter()).collect();
                let mut row: Vec<String> = header
                    .iter()
                    .map(|h| named.get(h.as_str()).map(|v| v.to_string()).unwrap_or_default())
                    .collect();
                let last = row.len() - 1;
                row[last] = f.message.clone();
                row
            }
        };
        out.push(row);
    }
    write_csv(&header, &out)
}
