use serde_json::json;

use crystal_core::analysis::{
    classify_comb, default_comb_tolerance, default_d_grid, estimate_dtilde, estimate_speeds, fit_tail,
};
use crystal_core::engine::{
    even_schedule, export_trajectory, run_coupled_observed, run_replicas, CoupleSpec, Engine, EngineRegistry,
    Participant, TrajectoryMeta,
};
use crystal_core::exact::{
    build_truncated, enumerate_comb_set, mu_n2, region_verdict, solve_stationary, transience_bound, v2,
    v2_inf, vitesse_threshold, CombCase,
};
use crystal_core::model::parse_triple;
use crystal_core::sweep::{run_sweep, Protocol, SweepSpec};
use crystal_core::{Boundary, Configuration, Error, RateTriple, Result};

use crate::parse;
use crate::{Command, ExactArgs, Outputs, RunArgs};

pub fn dispatch(cmd: &Command, out: &mut Outputs) -> Result<()> {
    match cmd {
        Command::Simulate { run, snapshots } => simulate(run, *snapshots, out),
        Command::Couple { participants, horizon, snapshots, seed } => {
            couple(participants, *horizon, *snapshots, *seed, out)
        }
        Command::Speed { run } => speed(run, out),
        Command::Tail { run, coord, horizons, kgrid } => tail(run, *coord, horizons.as_deref(), kgrid, out),
        Command::Comb { run, case, tol } => comb(run, case.as_deref(), *tol, out),
        Command::Dtilde { beta, n, dgrid, dstep, horizons, replicas, seed, engine } => {
            let raw = parse_triple(beta)?;
            let grid = match dgrid {
                Some(g) => parse::floats(g)?,
                None => default_d_grid(raw[0], raw[1], *dstep),
            };
            let engine = EngineRegistry::default().get(engine)?;
            let est = estimate_dtilde(
                engine.as_ref(),
                *n,
                raw[1],
                raw[0],
                &grid,
                &parse::floats(horizons)?,
                *replicas,
                *seed,
            )?;
            out.json("dtilde.json", &est)?;
            println!(
                "d_hat {} bracket [{}, {}]{}",
                est.d_hat,
                est.bracket.0,
                est.bracket.1,
                if est.upper_endpoint { " (no significant decay below B1)" } else { "" }
            );
            Ok(())
        }
        Command::Exact(args) => exact(args, out),
        Command::Verdict { beta, n } => {
            let v = region_verdict(*n, &beta.parse()?);
            out.json("verdict.json", &v)?;
            println!("{}", serde_json::to_string(&v)?);
            Ok(())
        }
        Command::Sweep {
            n,
            beta1_grid,
            beta2_grid,
            horizon,
            replicas,
            seed,
            engine,
            no_recurrence,
            tail,
            box_radius,
            tail_kmax,
        } => {
            let spec = SweepSpec {
                n: *n,
                beta1_grid: parse::floats(beta1_grid)?,
                beta2_grid: parse::floats(beta2_grid)?,
                protocol: Protocol {
                    horizon: *horizon,
                    replicas: *replicas,
                    engine: engine.clone(),
                    recurrence: !no_recurrence,
                    tail: *tail,
                    box_radius: *box_radius,
                    tail_k_max: *tail_kmax,
                },
                seed: *seed,
                output: out.dir().map(|d| d.to_path_buf()),
            };
            let rows = run_sweep(&spec, &EngineRegistry::default())?;
            if let Some(dir) = out.dir() {
                let dir = dir.to_path_buf();
                out.record(dir.join(crystal_core::sweep::TABLE_FILE));
                out.record(dir.join(crystal_core::sweep::MANIFEST_FILE));
            }
            let mut counts = std::collections::BTreeMap::new();
            for r in &rows {
                *counts.entry(r.verdict.label.tag()).or_insert(0usize) += 1;
            }
            let parts: Vec<String> = counts.iter().map(|(k, v)| format!("{k} {v}")).collect();
            println!("{} points: {}", rows.len(), parts.join(", "));
            Ok(())
        }
    }
}

fn initial(run: &RunArgs) -> Result<Configuration> {
    let boundary: Boundary = run.boundary.parse()?;
    match (&run.init, run.n) {
        (Some(s), n) => {
            let cfg: Configuration = s.parse()?;
            if n.is_some_and(|n| n != cfg.len()) {
                return Err(Error::Precondition(format!(
                    "--n {} disagrees with the {} sites of --init",
                    n.unwrap(),
                    cfg.len()
                )));
            }
            Ok(cfg)
        }
        (None, Some(n)) => Configuration::flat(n, boundary),
        (None, None) => Err(Error::Precondition("give --n or --init".into())),
    }
}

fn engine(run: &RunArgs) -> Result<std::sync::Arc<dyn Engine>> {
    EngineRegistry::default().get(&run.engine)
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(",")
}

fn simulate(run: &RunArgs, snapshots: usize, out: &mut Outputs) -> Result<()> {
    let beta: RateTriple = run.beta.parse()?;
    let start = initial(run)?;
    let engine = engine(run)?;
    let schedule = even_schedule(run.horizon, snapshots);
    let trajs = run_replicas(engine.as_ref(), &beta, &start, run.horizon, &schedule, run.seed, run.replicas)?;
    for (r, t) in trajs.iter().enumerate() {
        let stem = if trajs.len() == 1 { "trajectory".to_string() } else { format!("trajectory_{r}") };
        let seed = crystal_core::seed::replica(run.seed, r as u64);
        if let Some(dir) = out.dir() {
            let dir = dir.to_path_buf();
            for p in export_trajectory(&dir, &stem, t, &TrajectoryMeta::new(engine.name(), &beta, seed, t))? {
                out.record(p);
            }
        }
    }
    let events: u64 = trajs.iter().map(|t| t.event_count).sum();
    let deposits: u64 = trajs.iter().flat_map(|t| &t.deposits).sum();
    let speeds = trajs[0].speeds();
    let shown = &speeds[..speeds.len().min(8)];
    println!(
        "{} replica(s), {events} events, {deposits} deposits; replica 0 speeds {}{}",
        trajs.len(),
        fmt_vec(shown),
        if shown.len() < speeds.len() { ",..." } else { "" }
    );
    Ok(())
}

fn couple(specs: &[String], horizon: f64, snapshots: usize, seed: u64, out: &mut Outputs) -> Result<()> {
    let participants = specs
        .iter()
        .map(|s| {
            let (b, c) =
                s.split_once('@').ok_or_else(|| Error::Parse(format!("expected BETA@CONFIG, got '{s}'")))?;
            Ok(Participant::new(b.parse()?, c.parse()?))
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = CoupleSpec::new(participants, seed)?;
    let ps = spec.participants();
    // Pairs covered by the coupling order: fewer sites, lower rates, lower
    // start on the common sites. These must stay ordered at every event.
    let below =
        |a: &Configuration, b: &Configuration| a.heights().iter().zip(b.heights()).all(|(x, y)| x <= y);
    let covered = |a: &Participant, b: &Participant| {
        a.initial.len() <= b.initial.len()
            && a.beta.as_array().iter().zip(b.beta.as_array()).all(|(x, y)| *x <= y)
            && below(&a.initial, &b.initial)
    };
    let ordered: Vec<(usize, usize)> = (0..ps.len())
        .flat_map(|i| (0..ps.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && covered(&ps[i], &ps[j]))
        .collect();
    let mut violations = 0u64;
    let trajs = run_coupled_observed(&spec, horizon, &even_schedule(horizon, snapshots), |_, states| {
        violations += ordered.iter().filter(|&&(i, j)| !below(&states[i], &states[j])).count() as u64;
    })?;
    if let Some(dir) = out.dir() {
        let dir = dir.to_path_buf();
        for (i, (t, p)) in trajs.iter().zip(ps).enumerate() {
            let meta = TrajectoryMeta::new("coupled", &p.beta, seed, t);
            for f in export_trajectory(&dir, &format!("couple_{i}"), t, &meta)? {
                out.record(f);
            }
        }
    }
    println!(
        "{} participants, {} initially ordered pairs, {violations} order changes",
        trajs.len(),
        ordered.len()
    );
    Ok(())
}

fn speed(run: &RunArgs, out: &mut Outputs) -> Result<()> {
    let beta: RateTriple = run.beta.parse()?;
    let start = initial(run)?;
    let est = estimate_speeds(engine(run)?.as_ref(), &beta, &start, run.horizon, run.replicas, run.seed)?;
    out.json("speed.json", &est)?;
    out.file("speed_replicas.csv", |w| est.write_csv(w))?;
    println!("speeds {} mean {:.6} max gap {:.2} se", fmt_vec(&est.speeds), est.mean(), est.max_gap_se);
    Ok(())
}

fn tail(run: &RunArgs, coord: usize, horizons: Option<&str>, kgrid: &str, out: &mut Outputs) -> Result<()> {
    if coord == 0 {
        return Err(Error::Precondition("--coord is 1-based".into()));
    }
    let beta: RateTriple = run.beta.parse()?;
    let start = initial(run)?;
    let horizons = match horizons {
        Some(h) => parse::floats(h)?,
        None => vec![run.horizon / 4.0, run.horizon / 2.0, run.horizon],
    };
    let fit = fit_tail(
        engine(run)?.as_ref(),
        &beta,
        &start,
        coord - 1,
        &horizons,
        &parse::ints(kgrid)?,
        run.replicas,
        run.seed,
    )?;
    out.json("tail.json", &fit)?;
    let alpha = fit.alpha_hat.map_or("none".to_string(), |a| format!("{a:.4}"));
    println!(
        "alpha_hat {alpha} status {:?}{}",
        fit.status,
        fit.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
    );
    Ok(())
}

fn comb(run: &RunArgs, case: Option<&str>, tol: Option<f64>, out: &mut Outputs) -> Result<()> {
    let beta: RateTriple = run.beta.parse()?;
    let case = match case {
        Some(c) => {
            let c: CombCase = c.parse()?;
            c.check(&beta)?;
            c
        }
        None => CombCase::for_rates(&beta).ok_or_else(|| {
            Error::Precondition(format!("rates ({beta}) fall in no comb case; need B2 < B0"))
        })?,
    };
    let start = initial(run)?;
    let tol = tol.unwrap_or_else(|| default_comb_tolerance(&beta));
    let set = enumerate_comb_set(start.len(), &beta, case)?;
    let trajs = run_replicas(engine(run)?.as_ref(), &beta, &start, run.horizon, &[], run.seed, run.replicas)?;
    let matches =
        trajs.iter().map(|t| classify_comb(&t.speeds(), &beta, case, tol)).collect::<Result<Vec<_>>>()?;
    let hits = matches.iter().filter(|m| m.is_match()).count();
    out.json(
        "comb.json",
        &json!({ "case": case, "tolerance": tol, "set": set, "matched": hits, "replicas": matches }),
    )?;
    println!("case {case}: {hits}/{} replicas match within {tol}", matches.len());
    Ok(())
}

fn exact(args: &ExactArgs, out: &mut Outputs) -> Result<()> {
    let [b0, b1, b2] = parse_triple(&args.beta)?;
    let mut report = serde_json::Map::new();
    if args.v2 {
        let v = v2(b0, b1)?;
        println!("v2 {v}");
        report.insert("v2".into(), json!(v));
    }
    if args.v2inf {
        let v = v2_inf(b1, b2)?;
        println!("v2_inf {v}");
        report.insert("v2_inf".into(), json!(v));
    }
    if let Some(list) = &args.mu {
        let mut law = Vec::new();
        for i in parse::signed_ints(list)? {
            let p = mu_n2(b0, b1, i)?;
            println!("mu({i}) {p}");
            law.push(json!({ "h": i, "mu": p }));
        }
        report.insert("mu".into(), json!(law));
    }
    if let Some(eps) = args.vitesse {
        let t = vitesse_threshold(b0, b2, eps)?;
        println!("vitesse_threshold {t}");
        report.insert("vitesse_threshold".into(), json!(t));
    }
    if args.bound {
        let b = transience_bound(b0, b2)?;
        println!("transience_bound {b}");
        report.insert("transience_bound".into(), json!(b));
    }
    if let Some(c) = &args.comb_set {
        let beta = RateTriple::new(b0, b1, b2)?;
        let case: CombCase = c.parse()?;
        let set = enumerate_comb_set(args.n, &beta, case)?;
        for v in &set {
            println!("{case} {}", fmt_vec(v));
        }
        report.insert("comb_set".into(), json!({ "case": case, "n": args.n, "elements": set }));
    }
    if args.stationary {
        let beta = RateTriple::new(b0, b1, b2)?;
        let chain = build_truncated(args.n, &beta, args.truncation)?;
        let sol = solve_stationary(&chain, args.tol)?;
        println!(
            "throughput {} spread {:.3e} boundary_mass {:.3e} residual {:.3e}",
            fmt_vec(&sol.throughput),
            sol.throughput_spread(),
            sol.boundary_mass,
            sol.residual
        );
        out.file("stationary.csv", |w| sol.write_csv(w))?;
        report.insert(
            "stationary".into(),
            json!({
                "n": sol.n,
                "truncation": sol.radius,
                "states": sol.pi.len(),
                "throughput": sol.throughput,
                "throughput_spread": sol.throughput_spread(),
                "boundary_mass": sol.boundary_mass,
                "residual": sol.residual,
            }),
        );
    }
    if report.is_empty() {
        return Err(Error::Precondition(
            "nothing requested: give --v2, --v2inf, --mu, --vitesse, --bound, --comb-set or --stationary"
                .into(),
        ));
    }
    out.json("exact.json", &report)?;
    Ok(())
}
