use std::path::PathBuf;

use checkmark_core::analysis::{
    compare_to_perfect, engagement, small_gamma_limits, sweep_addiction, sweep_alpha, sweep_gamma, sweep_kappa,
    sweep_losses, Dichotomy, LimitTrend, SweepResult,
};
use checkmark_core::benchmarks::{enforced_perfect, optimize_single, optimize_two_certificate, planner};
use checkmark_core::mechanism::{profit, solve_optimal, verify_ic, QualitySearch};
use checkmark_core::oracle::{brute_single_profit, check_probe, sample_probe, simpson_single_profit, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::output::{write_mechanism, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Planner,
    Single,
    TwoCert,
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Gamma,
    Kappa,
    Alpha,
    LossB,
    AddictionZ,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Gamma => "gamma",
            SweepParameter::Kappa => "kappa",
            SweepParameter::Alpha => "alpha",
            SweepParameter::LossB => "b",
            SweepParameter::AddictionZ => "z",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParameter::Gamma => vec![0.05, 0.1, 0.2, 0.3, 0.4],
            SweepParameter::Kappa => vec![0.5, 1.0, 2.0],
            SweepParameter::Alpha => vec![0.5, 1.0, 2.0],
            SweepParameter::LossB => vec![0.0, 0.5, 1.0],
            SweepParameter::AddictionZ => vec![0.01, 0.03],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Solve,
    Benchmark(Benchmark),
    Sweep {
        parameter: SweepParameter,
        values: Option<Vec<f64>>,
    },
    ComparePerfect,
    Limits {
        gammas: Option<Vec<f64>>,
    },
    Figures,
    Verify {
        probes: usize,
    },
}

/// Files written, summary lines, and failed checks of one run.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run(cmd: &Command, rc: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        Command::Solve => solve(rc),
        Command::Benchmark(b) => benchmark(*b, rc),
        Command::Sweep { parameter, values } => {
            let values = values.clone().unwrap_or_else(|| parameter.default_values());
            sweep(*parameter, &values, rc)
        }
        Command::ComparePerfect => compare(rc),
        Command::Limits { gammas } => limits(gammas.as_deref().unwrap_or(&[1e-2, 1e-3, 1e-4]), rc),
        Command::Figures => figures(rc),
        Command::Verify { probes } => verify(*probes, rc),
    }
}

fn solve(rc: &RunConfig) -> Result<Report, CliError> {
    let cfg = &rc.model;
    let sol = solve_optimal(cfg)?;
    let p = profit(&sol, cfg);
    let ic = verify_ic(&sol, cfg);
    let mut r = Report::default();
    r.files.push(write_mechanism(&rc.output_dir, "optimal.csv", &sol, cfg, rc.precision)?);
    r.lines.push(format!("profit {:.12} (virtual surplus {:.12})", p.direct, p.virtual_surplus));
    r.lines.push(format!("engagement {:.12}", engagement(&sol, cfg)));
    r.lines.push(format!("max scaled IC violation {:.3e}", ic.scaled()));
    Ok(r)
}

fn benchmark(which: Benchmark, rc: &RunConfig) -> Result<Report, CliError> {
    let cfg = &rc.model;
    let mut r = Report::default();
    let (name, sol) = match which {
        Benchmark::Planner => ("planner.csv", planner(cfg)),
        Benchmark::Single => {
            let s = optimize_single(cfg)?;
            r.lines.push(format!("lambda {:.12} profit {:.12}", s.lambda, s.profit));
            ("single.csv", s.mechanism)
        }
        Benchmark::TwoCert => {
            let t = optimize_two_certificate(cfg)?;
            r.lines.push(format!(
                "lambda_low {:.12} lambda_high {:.12} theta_hat {:.12} profit {:.12}",
                t.lambda_low, t.lambda_high, t.theta_hat, t.profit
            ));
            if t.near_optimal_pairs > 1 {
                r.lines.push(format!(
                    "note: {} coarse pairs lie within {:e} of the optimum; the maximizer may not be unique",
                    t.near_optimal_pairs,
                    checkmark_core::benchmarks::PLATEAU_TOL
                ));
            }
            if !t.feasible {
                r.failures.push("two-certificate allocation is not nondecreasing".into());
            }
            ("two_cert.csv", t.mechanism)
        }
        Benchmark::Perfect => {
            let s = enforced_perfect(cfg)?;
            r.lines.push(format!("profit {:.12}", s.profit));
            ("perfect.csv", s.mechanism)
        }
    };
    r.lines.push(format!("engagement {:.12}", engagement(&sol, cfg)));
    r.files.push(write_mechanism(&rc.output_dir, name, &sol, cfg, rc.precision)?);
    Ok(r)
}

fn sweep(parameter: SweepParameter, values: &[f64], rc: &RunConfig) -> Result<Report, CliError> {
    let cfg = &rc.model;
    let res: SweepResult = match parameter {
        SweepParameter::Gamma => sweep_gamma(cfg, values)?,
        SweepParameter::Kappa => sweep_kappa(cfg, values)?,
        SweepParameter::Alpha => sweep_alpha(cfg, values)?,
        SweepParameter::LossB => sweep_losses(cfg, values)?,
        SweepParameter::AddictionZ => sweep_addiction(cfg, values)?,
    };
    let name = parameter.name();
    let dir = &rc.output_dir;
    let mut grid = Table::create(dir, &format!("sweep_{name}.csv"), &["value", "theta", "lambda", "v_good"], rc.precision)?;
    for p in &res.points {
        for i in 0..p.theta.len() {
            grid.row(&[p.value, p.theta[i], p.quality[i], p.views[i]])?;
        }
    }
    let mut summary = Table::create(
        dir,
        &format!("sweep_{name}_summary.csv"),
        &["value", "profit", "engagement", "served_measure", "served_lower"],
        rc.precision,
    )?;
    for p in &res.points {
        let lower = p.serving.lower().unwrap_or(f64::NAN);
        summary.row(&[p.value, p.profit, p.engagement, p.serving.measure, lower])?;
    }
    let mut r = Report {
        files: vec![grid.finish()?, summary.finish()?],
        ..Report::default()
    };
    r.lines.push(format!("{name}: {} values, {} violations", values.len(), res.violations.len()));
    r.failures = res.violations;
    Ok(r)
}

fn compare(rc: &RunConfig) -> Result<Report, CliError> {
    let cfg = &rc.model;
    let rep = compare_to_perfect(cfg)?;
    let mut t = Table::create(
        &rc.output_dir,
        "compare_perfect.csv",
        &["theta", "phi", "engagement_optimal", "engagement_perfect", "delta"],
        rc.precision,
    )?;
    for i in 0..rep.theta.len() {
        t.row(&[rep.theta[i], rep.phi[i], rep.engagement_optimal[i], rep.engagement_perfect[i], rep.delta[i]])?;
    }
    let mut r = Report {
        files: vec![t.finish()?],
        ..Report::default()
    };
    r.lines.push(format!(
        "total engagement optimal {:.12} perfect {:.12}",
        rep.total_optimal, rep.total_perfect
    ));
    r.lines.push(format!(
        "served mass optimal {:.12} perfect {:.12}",
        rep.diversity_optimal.measure, rep.diversity_perfect.measure
    ));
    r.lines.push(match rep.dichotomy {
        Dichotomy::PerfectOptimal => "perfect certification is optimal".to_string(),
        Dichotomy::ReducesDiversity {
            imperfect_at,
            extra_served_at,
        } => format!(
            "perfect certification reduces diversity: imperfect at theta {imperfect_at:.12}, extra type served at theta {extra_served_at:.12}"
        ),
    });
    Ok(r)
}

fn limits(gammas: &[f64], rc: &RunConfig) -> Result<Report, CliError> {
    let sigma = rc.model.cost.sigma;
    let mut t = Table::create(
        &rc.output_dir,
        "limits.csv",
        &["alpha", "gamma", "phi_hat", "lambda", "views", "engagement"],
        rc.precision,
    )?;
    let mut r = Report::default();
    for alpha in [0.3, 0.5, 0.7] {
        let rep = small_gamma_limits(alpha, sigma, gammas)?;
        for row in &rep.rows {
            t.row(&[alpha, row.gamma, row.phi_hat, row.lambda, row.views, row.engagement])?;
        }
        let trend = match rep.trend {
            LimitTrend::Vanishing => "vanishing".to_string(),
            LimitTrend::Constant(l) => format!("constant {l:.12}"),
            LimitTrend::Exploding => "exploding".to_string(),
        };
        r.lines.push(format!(
            "alpha {alpha}: {trend}, max lambda at smallest gamma {:.3e}{}",
            rep.max_lambda_at_smallest,
            rep.limit_gap.map(|g| format!(", limit gap {g:.3e}")).unwrap_or_default()
        ));
        if !rep.trend_holds {
            r.failures.push(format!("alpha {alpha}: engagement does not follow the {trend} trend"));
        }
    }
    r.files.push(t.finish()?);
    Ok(r)
}

pub const FIGURE_POINTS: usize = 401;

fn figures(rc: &RunConfig) -> Result<Report, CliError> {
    let cfg = &rc.model;
    let search = QualitySearch::new(cfg);
    let top = cfg.theta_max();
    let phis: Vec<f64> = (0..FIGURE_POINTS)
        .map(|k| top * k as f64 / (FIGURE_POINTS - 1) as f64)
        .collect();
    let at = |phi: f64, lambda: f64| search.views(search.r(phi, lambda));
    let dir = &rc.output_dir;
    let p = rc.precision;

    let mut fig1 = Table::create(dir, "fig1.csv", &["phi", "v_perfect", "v_single_half"], p)?;
    let mut fig2a = Table::create(dir, "fig2a.csv", &["phi", "lambda"], p)?;
    let mut fig2b = Table::create(dir, "fig2b.csv", &["phi", "v_good"], p)?;
    let mut fig3 = Table::create(dir, "fig3.csv", &["phi", "engagement_difference"], p)?;
    for &phi in &phis {
        let best = search.best(phi);
        let v = search.views(best.value);
        let perfect = at(phi, 1.0);
        fig1.row(&[phi, perfect, at(phi, 0.5)])?;
        fig2a.row(&[phi, best.x])?;
        fig2b.row(&[phi, v])?;
        fig3.row(&[phi, cfg.attention.value(best.x) * v - cfg.attention.value(1.0) * perfect])?;
    }
    Ok(Report {
        files: vec![fig1.finish()?, fig2a.finish()?, fig2b.finish()?, fig3.finish()?],
        ..Report::default()
    })
}

fn verify(probes: usize, rc: &RunConfig) -> Result<Report, CliError> {
    let cfg = &rc.model;
    let mut r = Report::default();
    let mut t = Table::create(&rc.output_dir, "verify.csv", &["check", "value", "tolerance", "passed"], rc.precision)?;
    let record = |t: &mut Table, r: &mut Report, check: String, value: f64, tol: f64, ok: bool| {
        if !ok {
            r.failures.push(format!("{check}: {value:e} exceeds {tol:e}"));
        }
        let cells = [check, t.fmt(value), t.fmt(tol), u8::from(ok).to_string()];
        t.record(cells)
    };

    let sol = solve_optimal(cfg)?;
    let ic = verify_ic(&sol, cfg).scaled();
    record(&mut t, &mut r, "ic_violation".into(), ic, 1e-8, ic <= 1e-8)?;
    let gap = profit(&sol, cfg).relative_gap();
    record(&mut t, &mut r, "revenue_equivalence".into(), gap, 1e-6, gap <= 1e-6)?;

    let top = cfg.theta_max();
    for k in 0..5 {
        let phi = top * k as f64 / 4.0;
        let c = check_probe(phi, cfg, &GridSpec::argmax(cfg));
        let step = c.lambda_oracle.step;
        let dl = (c.lambda_solver - c.lambda_oracle.x).abs();
        record(&mut t, &mut r, format!("quality_at_phi_{phi}"), dl, step, c.lambda_ok())?;
        let dr = c.r_gap(cfg);
        record(&mut t, &mut r, format!("value_at_phi_{phi}"), dr, 1e-9, dr <= 1e-9)?;
        let dv = (c.views_solver - c.views_oracle.x).abs();
        record(&mut t, &mut r, format!("views_at_phi_{phi}"), dv, c.views_oracle.step, c.views_ok())?;
    }

    let single = optimize_single(cfg)?;
    let grid = GridSpec::profit(cfg);
    let best = brute_single_profit(cfg, &grid);
    let achieved = simpson_single_profit(cfg, single.lambda, grid.theta_points);
    let shortfall = (best.value - achieved) / best.value.abs().max(f64::MIN_POSITIVE);
    record(&mut t, &mut r, "single_certificate_shortfall".into(), shortfall, 1e-6, shortfall <= 1e-6)?;

    let mut rng = ChaCha8Rng::seed_from_u64(rc.seed);
    let mut failed = 0;
    for k in 0..probes {
        let (pcfg, phi) = sample_probe(rng.gen())?;
        let c = check_probe(phi, &pcfg, &GridSpec::argmax(&pcfg));
        if !c.holds(&pcfg) {
            failed += 1;
            r.failures.push(format!("random probe {k}: {c:?} under {pcfg:?}"));
        }
    }
    t.record([
        format!("random_probes_{probes}"),
        failed.to_string(),
        "0".into(),
        u8::from(failed == 0).to_string(),
    ])?;
    r.lines.push(format!("{probes} random probes, {} failures", r.failures.len()));
    r.files.push(t.finish()?);
    Ok(r)
}
