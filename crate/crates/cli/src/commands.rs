//! Subcommand implementations: translate a resolved scenario into core
//! pipeline calls and render both the human summary and the CSV table.

use spooky_core::photonics::FiberChannel;
use spooky_core::qkd::{
    run_full_session, run_session, scheme_equivalence_report, security_threshold,
    write_transcript, ProtocolParams, QkdSessionResult, SchemeComparisonConfig, SecurityVerdict,
    SessionParams, SourceScheme,
};
use spooky_core::quantum::{
    qber_from_visibility, transpose_identity_residual, visibility_from_qber, ChshSettings,
    CorrelationModel, MeasurementSetting, Unitary2,
};
use spooky_core::relativity::{
    alignment_precision, before_before_satisfied, before_before_threshold, frame_delta_t,
    invert_cos_theta_for_bound, rotating_absorber_windows, spooky_speed_bound, AlignmentBudget,
    FrameSpec,
};
use spooky_core::SPEED_OF_LIGHT;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ScenarioConfig;
use crate::table::{emit_table, format_number as fmt, Table};
use crate::{BeforeBeforeArgs, BellArgs, CliError, QkdArgs, RunContext};

/// Per-index sweep seeds (splitmix64 step), so worker order never
/// affects results.
fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(1)
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(index.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Splits indices round-robin over scoped worker threads and restores
/// index order afterwards.
fn parallel_map<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let mut indexed: Vec<(usize, T)> = std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    (t..n)
                        .step_by(threads)
                        .map(|i| (i, f(i)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, v)| v).collect()
}

/// Parses a `start:stop:steps` sweep specification into sample points
/// (inclusive of both endpoints).
fn parse_sweep(spec: &str) -> Result<Vec<f64>, CliError> {
    let err = |msg: &str| CliError::Config(vec![format!("sweep '{spec}': {msg}")]);
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, steps] = parts.as_slice() else {
        return Err(err("expected start:stop:steps"));
    };
    let start: f64 = start.parse().map_err(|_| err("bad start"))?;
    let stop: f64 = stop.parse().map_err(|_| err("bad stop"))?;
    let steps: usize = steps.parse().map_err(|_| err("bad step count"))?;
    if steps == 0 {
        return Err(err("steps must be >= 1"));
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err(err("endpoints must be finite"));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    Ok((0..steps)
        .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Builds the physical session layout from the scenario: asymmetric
/// schemes place the source at Alice (zero-length local channel), the
/// symmetric scheme splits the span in half.
fn session_params(
    cfg: &ScenarioConfig,
    visibility: f64,
    n_gates: u64,
) -> Result<SessionParams, CliError> {
    use spooky_core::photonics::{CentralPairSource, HeraldedPairSource, WeakCoherentSource};
    let detector = cfg.detector()?;
    let full = cfg.channel()?;
    let local = FiberChannel::new(0.0, 0.0, cfg.channel.group_index)?;
    let half = FiberChannel::new(
        cfg.channel.length_km / 2.0,
        cfg.channel.attenuation_db_per_km,
        cfg.channel.group_index,
    )?;
    let (source, channel_alice, channel_bob) = match cfg.source.kind.as_str() {
        "weak_pulse" => (
            SourceScheme::WeakPulse {
                source: WeakCoherentSource::new(cfg.source.mu)?,
                visibility,
            },
            local,
            full,
        ),
        "heralded" => (
            SourceScheme::Heralded {
                source: HeraldedPairSource::new(
                    cfg.source.pair_prob_per_gate,
                    cfg.source.herald_efficiency,
                )?,
                visibility,
            },
            local,
            full,
        ),
        "prepare_at_distance" => (
            SourceScheme::PrepareAtDistance {
                pair_prob_per_gate: cfg.source.pair_prob_per_gate,
                visibility,
            },
            local,
            full,
        ),
        _ => (
            SourceScheme::Central(CentralPairSource::new(
                cfg.source.pair_prob_per_gate,
                visibility,
            )?),
            half,
            half,
        ),
    };
    Ok(SessionParams {
        source,
        channel_alice,
        channel_bob,
        detector_alice: detector,
        detector_bob: detector,
        n_gates,
    })
}

fn qkd_row(visibility: f64, n_gates: u64, r: &QkdSessionResult) -> Vec<String> {
    vec![
        fmt(visibility),
        n_gates.to_string(),
        r.sifted_length.to_string(),
        fmt(r.qber_estimate),
        fmt(r.qber_half_width),
        r.leaked_bits.to_string(),
        r.final_key.len().to_string(),
        r.verdict.to_string(),
    ]
}

const QKD_COLUMNS: [&str; 8] = [
    "visibility",
    "n_gates",
    "sifted_length",
    "qber",
    "qber_half_width",
    "leaked_bits",
    "final_key_bits",
    "verdict",
];

pub fn qkd(ctx: &RunContext, args: &QkdArgs) -> Result<i32, CliError> {
    let cfg = &ctx.cfg;
    let n_gates = args.gates.unwrap_or(cfg.protocol.n_gates);
    let visibility = args.visibility.unwrap_or(cfg.source.visibility);
    let protocol = ProtocolParams {
        sample_fraction: cfg.protocol.sample_fraction,
        epsilon_margin: cfg.protocol.epsilon_margin as usize,
    };

    let mut table = Table::new(&QKD_COLUMNS);
    let mut any_insecure = false;

    if let Some(spec) = &args.sweep_visibility {
        if args.transcript.is_some() {
            return Err(CliError::Config(vec![
                "--transcript is only available for single runs".into(),
            ]));
        }
        let points = parse_sweep(spec)?;
        println!(
            "QKD visibility sweep: scheme {}, {} gates per point, {} points, seed {}",
            cfg.source.kind,
            n_gates,
            points.len(),
            ctx.seed
        );
        let results = parallel_map(points.len(), ctx.threads, |i| {
            let params = session_params(cfg, points[i], n_gates)?;
            run_full_session(&params, &protocol, derive_seed(ctx.seed, i as u64))
                .map_err(CliError::Core)
        });
        for (v, result) in points.iter().zip(results) {
            let r = result?;
            any_insecure |= r.verdict == SecurityVerdict::Insecure;
            table.push_row(qkd_row(*v, n_gates, &r));
        }
        print!("{}", table.to_pretty());
    } else {
        let params = session_params(cfg, visibility, n_gates)?;
        let r = run_full_session(&params, &protocol, ctx.seed)?;
        any_insecure = r.verdict == SecurityVerdict::Insecure;
        table.push_row(qkd_row(visibility, n_gates, &r));

        println!(
            "QKD session: scheme {}, V = {}, {} gates, seed {}",
            cfg.source.kind,
            fmt(visibility),
            n_gates,
            ctx.seed
        );
        println!("  sifted bits       {}", r.sifted_length);
        if r.qber_estimate.is_nan() {
            println!("  QBER estimate     unavailable (nothing to sample)");
        } else {
            println!(
                "  QBER estimate     {} +/- {}",
                fmt(r.qber_estimate),
                fmt(r.qber_half_width)
            );
            if r.qber_estimate <= 0.5 {
                println!(
                    "  implied V         {}",
                    fmt(visibility_from_qber(r.qber_estimate.min(0.5))?)
                );
            }
            println!("  security bound    QBER < {}", fmt(security_threshold()));
        }
        println!("  leaked (cascade)  {} bits", r.leaked_bits);
        println!(
            "  final key         {} bits, parties agree: {}",
            r.final_key.len(),
            if r.final_key == r.final_key_bob {
                "yes"
            } else {
                "NO"
            }
        );
        println!("  verdict           {}", r.verdict);

        if let Some(path) = &args.transcript {
            let records = run_session(&params, ctx.seed)?;
            let mut file = std::fs::File::create(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            write_transcript(&records, &mut file)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            println!("  transcript        {} ({} gates)", path.display(), records.len());
        }
    }

    if let Some(path) = &ctx.out {
        emit_table(&table, path)?;
    }
    Ok(if ctx.strict && any_insecure { 3 } else { 0 })
}

/// Parses `a,a',b,b'` analyzer settings in degrees.
fn parse_angles(spec: &str) -> Result<ChshSettings, CliError> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(vec![format!("angles '{spec}': {e}")]))?;
    let [a, a_prime, b, b_prime] = values.as_slice() else {
        return Err(CliError::Config(vec![format!(
            "angles '{spec}': expected four comma-separated degrees (a,a',b,b')"
        )]));
    };
    let setting = |deg: f64| MeasurementSetting::from_degrees(deg).map_err(CliError::Core);
    Ok(ChshSettings {
        a: setting(*a)?,
        a_prime: setting(*a_prime)?,
        b: setting(*b)?,
        b_prime: setting(*b_prime)?,
    })
}

pub fn bell(ctx: &RunContext, args: &BellArgs) -> Result<i32, CliError> {
    let settings = match &args.angles_deg {
        Some(spec) => parse_angles(spec)?,
        None => ChshSettings::canonical(),
    };
    let visibility = args.visibility.unwrap_or(ctx.cfg.source.visibility);

    let mut table = Table::new(&["V", "S", "QBER"]);
    let points = match &args.sweep {
        Some(spec) => parse_sweep(spec)?,
        None => vec![visibility],
    };
    for &v in &points {
        let model = CorrelationModel::new(v)?;
        table.push_row(vec![
            fmt(v),
            fmt(model.chsh_value(&settings)),
            fmt(qber_from_visibility(v)?),
        ]);
    }

    if args.sweep.is_some() {
        print!("{}", table.to_pretty());
    } else {
        let model = CorrelationModel::new(visibility)?;
        let s = model.chsh_value(&settings);
        println!("CHSH at V = {}", fmt(visibility));
        println!("  S             {}", fmt(s));
        println!("  local bound   2.00000 ({})", if s.abs() > 2.0 { "violated" } else { "not violated" });
        println!("  quantum max   {}", fmt(2.0 * std::f64::consts::SQRT_2));
        println!("  QBER          {}", fmt(qber_from_visibility(visibility)?));
    }

    if let Some(n) = args.equivalence_check {
        // Moving both analyzer unitaries to one side of the entangled
        // state must leave it invariant; report the worst residual over
        // seeded random pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let u1 = Unitary2::random(&mut rng);
            let u2 = Unitary2::random(&mut rng);
            worst = worst.max(transpose_identity_residual(&u1, &u2)?);
        }
        println!(
            "scheme equivalence: max residual {} over {} random unitary pairs",
            fmt(worst),
            n
        );
    }

    if let Some(path) = &ctx.out {
        emit_table(&table, path)?;
    }
    Ok(0)
}

pub fn schemes(ctx: &RunContext) -> Result<i32, CliError> {
    let cfg = &ctx.cfg;
    let comparison = SchemeComparisonConfig {
        mu: cfg.source.mu,
        pair_prob_per_gate: cfg.source.pair_prob_per_gate,
        herald_efficiency: cfg.source.herald_efficiency,
        visibility: cfg.source.visibility,
        channel: cfg.channel()?,
        detector: cfg.detector()?,
        n_gates: cfg.protocol.n_gates,
    };
    let rows = scheme_equivalence_report(&comparison, ctx.seed)?;

    let mut table = Table::new(&[
        "scheme",
        "sifted_length",
        "sifted_rate",
        "qber",
        "multiphoton_exposure",
    ]);
    for row in &rows {
        table.push_row(vec![
            row.scheme.to_string(),
            row.sifted_length.to_string(),
            fmt(row.sifted_rate),
            fmt(row.qber),
            fmt(row.multiphoton_exposure),
        ]);
    }
    println!(
        "Source-scheme ladder: V = {}, {} gates per scheme, seed {}",
        fmt(cfg.source.visibility),
        cfg.protocol.n_gates,
        ctx.seed
    );
    print!("{}", table.to_pretty());
    println!(
        "expected QBER at this visibility: {}",
        fmt(qber_from_visibility(cfg.source.visibility)?)
    );

    if let Some(path) = &ctx.out {
        emit_table(&table, path)?;
    }
    Ok(0)
}

pub fn spooky_speed(ctx: &RunContext) -> Result<i32, CliError> {
    let rel = &ctx.cfg.relativity;
    let budget = AlignmentBudget::new(
        rel.delta_t_ps * 1e-12,
        rel.separation_km * 1e3,
        rel.fiber_length_km * 1e3,
    )?;

    let mut table = Table::new(&["frame", "speed_m_per_s", "cos_theta", "delta_t_prime_s", "bound_c"]);

    let lab_dt = budget.delta_t;
    let lab_bound = spooky_speed_bound(budget.separation, lab_dt)?;
    table.push_row(vec![
        "lab".into(),
        fmt(0.0),
        fmt(0.0),
        fmt(lab_dt),
        fmt(lab_bound),
    ]);

    let cos_theta = invert_cos_theta_for_bound(&budget, rel.cmb_speed_m_per_s, rel.cmb_target_bound_c)
        .ok_or_else(|| {
            CliError::Config(vec![format!(
                "[relativity] cmb_target_bound_c = {}: no axis projection reaches this bound at {} m/s",
                rel.cmb_target_bound_c, rel.cmb_speed_m_per_s
            )])
        })?;
    let cmb_frame = FrameSpec::new(rel.cmb_speed_m_per_s, cos_theta)?;
    let cmb_dt = frame_delta_t(&budget, &cmb_frame);
    let cmb_bound = spooky_speed_bound(budget.separation, cmb_dt)?;
    table.push_row(vec![
        "cmb".into(),
        fmt(rel.cmb_speed_m_per_s),
        fmt(cos_theta),
        fmt(cmb_dt),
        fmt(cmb_bound),
    ]);

    let fiber = FiberChannel::new(
        rel.fiber_length_km,
        ctx.cfg.channel.attenuation_db_per_km,
        ctx.cfg.channel.group_index,
    )?;
    println!(
        "Nonlocal influence speed bounds ({} km separation, {} ps alignment)",
        fmt(rel.separation_km),
        fmt(rel.delta_t_ps)
    );
    print!("{}", table.to_pretty());
    println!(
        "fiber transit: {} s over {} km; relative alignment precision {}",
        fmt(fiber.propagation_delay()),
        fmt(rel.fiber_length_km),
        fmt(alignment_precision(&budget, ctx.cfg.channel.group_index))
    );

    if let Some(path) = &ctx.out {
        emit_table(&table, path)?;
    }
    Ok(0)
}

pub fn before_before(ctx: &RunContext, args: &BeforeBeforeArgs) -> Result<i32, CliError> {
    let rel = &ctx.cfg.relativity;
    let delta_t_ps = args.delta_t_ps.unwrap_or(rel.delta_t_ps);
    let separation_km = args.separation_km.unwrap_or(rel.separation_km);
    let wheel_speed = args.wheel_speed.unwrap_or(rel.wheel_speed_m_per_s);
    let delta_t = delta_t_ps * 1e-12;
    let separation = separation_km * 1e3;

    let threshold = before_before_threshold(delta_t, separation);
    if wheel_speed >= SPEED_OF_LIGHT {
        return Err(CliError::Config(vec![format!(
            "wheel_speed_m_per_s = {wheel_speed} must be below the speed of light"
        )]));
    }
    let satisfied = before_before_satisfied(wheel_speed, 1.0, delta_t, separation)?;
    let windows = rotating_absorber_windows(wheel_speed, delta_t, separation, 1e-4)?;

    println!(
        "Before-before feasibility ({} ps alignment over {} km)",
        fmt(delta_t_ps),
        fmt(separation_km)
    );
    println!("  speed threshold   {} m/s", fmt(threshold));
    println!("  wheel speed       {} m/s", fmt(wheel_speed));
    println!(
        "  aligned motion    {}",
        if satisfied { "before-before" } else { "normal ordering" }
    );
    println!(
        "  wheel windows     {} per revolution, duty fraction {}",
        windows.intervals.len(),
        fmt(windows.duty_fraction)
    );

    let mut table = Table::new(&[
        "delta_t_ps",
        "separation_km",
        "threshold_m_per_s",
        "wheel_speed_m_per_s",
        "satisfied",
        "duty_fraction",
    ]);
    table.push_row(vec![
        fmt(delta_t_ps),
        fmt(separation_km),
        fmt(threshold),
        fmt(wheel_speed),
        u8::from(satisfied).to_string(),
        fmt(windows.duty_fraction),
    ]);
    if let Some(path) = &ctx.out {
        emit_table(&table, path)?;
    }
    Ok(0)
}
