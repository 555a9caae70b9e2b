//! Subcommands. Each one computes everything in memory first and only then
//! creates the output directory, so a failed run leaves no files behind.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use flexlink::dynamics::{beam_modes, eval_partitioned, ArmModel, FullState, SingleLinkPlant};
use flexlink::fastctl::{care_residual, residual_bound, solve_care};
use flexlink::perturbation::Decomposition;
use flexlink::sim::{epsilon_sweep, loglog_slope, metrics, run, ControllerMode, CostContext, Metrics, TraceLog};
use nalgebra::DMatrix;

use crate::config::Config;
use crate::manifest::Manifest;
use crate::svg::{self, Panel, Series, PALETTE};
use crate::CliError;

/// Resolved inputs shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config: Config,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Invocation {
    /// Loads `config_path` (defaults when absent) and applies a seed override.
    pub fn load(config_path: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let mut config = match config_path {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(s) = seed {
            config.sim.seed = s;
        }
        Ok(Self {
            config,
            config_path: config_path.map(Path::to_path_buf),
            out_dir: out_dir.to_path_buf(),
        })
    }

    fn manifest(&self, subcommand: &str) -> Manifest {
        Manifest::new(subcommand, &self.config, self.config_path.as_deref(), &self.out_dir)
    }

    fn write_all(&self, files: &[(&str, Vec<u8>)]) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir).map_err(|source| CliError::Io {
            path: self.out_dir.clone(),
            source,
        })?;
        for (name, bytes) in files {
            let path = self.out_dir.join(name);
            std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        }
        Ok(())
    }
}

fn say(w: &mut dyn Write, text: &str) -> Result<(), CliError> {
    w.write_all(text.as_bytes()).map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

pub fn mode_name(mode: ControllerMode) -> &'static str {
    match mode {
        ControllerMode::Composite => "composite",
        ControllerMode::SlowOnly => "slow-only",
    }
}

fn cost_context(cfg: &Config, plant: &SingleLinkPlant<f64>) -> Result<CostContext<f64>, CliError> {
    let pd = eval_partitioned(plant, &FullState::zeros(plant.n_rigid(), plant.n_flex()))?;
    Ok(CostContext {
        decomposition: Decomposition::new(pd)?,
        weights: cfg.weights()?,
        input_scale: plant.input_scale(),
    })
}

fn simulate_one(cfg: &Config, plant: &SingleLinkPlant<f64>, mode: ControllerMode) -> Result<(TraceLog<f64>, Metrics<f64>), CliError> {
    let ctl = cfg.controllers(mode)?;
    let trace = run(plant, &cfg.reference, &ctl, &cfg.sim)?;
    let m = metrics(&trace, Some(&cost_context(cfg, plant)?))?;
    Ok((trace, m))
}

fn csv_bytes(trace: &TraceLog<f64>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    Ok(buf)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"))
}

/// `(name, value)` pairs in a fixed order.
pub fn metric_rows(m: &Metrics<f64>) -> Vec<(&'static str, String)> {
    vec![
        ("tracking_rms", format!("{:.6e}", m.tracking_rms)),
        ("max_abs_error", format!("{:.6e}", m.max_abs_error)),
        ("steady_deflection_rms", opt(m.steady_deflection_rms)),
        ("steady_max_abs_error", opt(m.steady_max_abs_error)),
        ("transient_peak", format!("{:.6e}", m.transient_peak)),
        ("effort", format!("{:.6e}", m.effort)),
        ("control_variation", format!("{:.6e}", m.control_variation)),
        ("cost", opt(m.cost)),
    ]
}

fn metrics_text(mode: ControllerMode, m: &Metrics<f64>) -> String {
    let mut out = format!("controller = {}\n", mode_name(mode));
    for (k, v) in metric_rows(m) {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

fn panels_figure(trace: &TraceLog<f64>, mode: ControllerMode) -> String {
    let t = trace.column(|r| r.t);
    let panels = vec![
        Panel {
            title: "Hub angle".into(),
            y_label: "rad".into(),
            series: vec![
                Series::new("q_r", PALETTE[0], &t, &trace.column(|r| r.q_r[0])),
                Series::new("q_d", PALETTE[1], &t, &trace.column(|r| r.q_d[0])),
            ],
        },
        Panel {
            title: "Tracking error".into(),
            y_label: "rad".into(),
            series: vec![Series::new("e", PALETTE[0], &t, &trace.column(|r| r.e[0]))],
        },
        Panel {
            title: "Modal deflections".into(),
            y_label: "q_f".into(),
            series: vec![
                Series::new("q_f1", PALETTE[0], &t, &trace.column(|r| r.q_f[0])),
                Series::new("q_f2", PALETTE[2], &t, &trace.column(|r| r.q_f.get(1).copied().unwrap_or(0.0))),
            ],
        },
        Panel {
            title: "Torque".into(),
            y_label: "N·m".into(),
            series: vec![
                Series::new("τ", PALETTE[0], &t, &trace.column(|r| r.tau[0])),
                Series::new("τ slow", PALETTE[3], &t, &trace.column(|r| r.tau_slow[0])),
            ],
        },
    ];
    svg::render(&format!("Closed loop, {} controller", mode_name(mode)), "t [s]", &panels)
}

pub fn simulate(inv: &Invocation, mode: ControllerMode, w: &mut dyn Write) -> Result<(), CliError> {
    let cfg = &inv.config;
    let plant = cfg.plant()?;
    let (trace, m) = simulate_one(cfg, &plant, mode)?;
    let text = metrics_text(mode, &m);
    let mut manifest = inv.manifest("simulate");
    manifest.controller = Some(mode_name(mode).into());
    inv.write_all(&[
        ("trace.csv", csv_bytes(&trace)?),
        ("metrics.txt", text.clone().into_bytes()),
        ("fig_panels.svg", panels_figure(&trace, mode).into_bytes()),
        ("manifest.txt", manifest.render().into_bytes()),
    ])?;
    say(w, &text)?;
    say(w, &format!("wrote {}\n", inv.out_dir.display()))
}

/// Slow-only over composite steady deflection RMS. Equal inputs give 1.
pub fn deflection_ratio(composite: &Metrics<f64>, slow_only: &Metrics<f64>) -> Option<f64> {
    let c = composite.steady_deflection_rms?;
    let s = slow_only.steady_deflection_rms?;
    if c == s {
        Some(1.0)
    } else if c > 0.0 {
        Some(s / c)
    } else {
        None
    }
}

pub fn compare(inv: &Invocation, w: &mut dyn Write) -> Result<(), CliError> {
    let cfg = &inv.config;
    let plant = cfg.plant()?;
    let (comp, slow) = std::thread::scope(|scope| {
        let a = scope.spawn(|| simulate_one(cfg, &plant, ControllerMode::Composite));
        let b = scope.spawn(|| simulate_one(cfg, &plant, ControllerMode::SlowOnly));
        (a.join().expect("composite run panicked"), b.join().expect("slow-only run panicked"))
    });
    let (comp, slow) = (comp?, slow?);

    let mut table = format!("{:<24}{:>16}{:>16}\n", "metric", "composite", "slow-only");
    for ((k, a), (_, b)) in metric_rows(&comp.1).into_iter().zip(metric_rows(&slow.1)) {
        let _ = writeln!(table, "{k:<24}{a:>16}{b:>16}");
    }
    let ratio = deflection_ratio(&comp.1, &slow.1);
    let _ = writeln!(table, "deflection_ratio = {}", opt(ratio));

    let t = comp.0.column(|r| r.t);
    let panels: Vec<Panel> = (0..plant.n_flex())
        .map(|i| Panel {
            title: format!("Mode {} deflection", i + 1),
            y_label: format!("q_f{}", i + 1),
            series: vec![
                Series::new("slow-only", PALETTE[1], &t, &slow.0.column(|r| r.q_f[i])),
                Series::new("composite", PALETTE[0], &t, &comp.0.column(|r| r.q_f[i])),
            ],
        })
        .collect();
    let fig = svg::render("Deflection, composite vs slow-only", "t [s]", &panels);

    inv.write_all(&[
        ("trace_composite.csv", csv_bytes(&comp.0)?),
        ("trace_slow_only.csv", csv_bytes(&slow.0)?),
        ("compare.txt", table.clone().into_bytes()),
        ("fig_deflection_compare.svg", fig.into_bytes()),
        ("manifest.txt", inv.manifest("compare").render().into_bytes()),
    ])?;
    say(w, &table)
}

fn matrix(name: &str, m: &DMatrix<f64>) -> String {
    let mut out = format!("{name} ({}x{})\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>15.6e}")).collect();
        let _ = writeln!(out, "  {}", cells.join(" "));
    }
    out
}

pub fn design_lqr(inv: &Invocation, w: &mut dyn Write) -> Result<(), CliError> {
    let cfg = &inv.config;
    let plant = cfg.plant()?;
    let weights = cfg.weights()?;
    let pd = eval_partitioned(&plant, &FullState::zeros(plant.n_rigid(), plant.n_flex()))?;
    let d = Decomposition::new(pd)?;
    let fm = d.fast_model()?;
    let gains = solve_care(&fm, &weights)?;
    let residual = care_residual(&fm.a, &fm.b, &weights.q, &weights.r, &gains.p)?.amax();

    let mut out = format!("epsilon = {:.6e}\n", d.epsilon());
    out += &matrix("A_F", &fm.a);
    out += &matrix("B_F", &fm.b);
    out += &matrix("P", &gains.p);
    out += &matrix("K_pf", &gains.k_pf);
    out += &matrix("K_df", &gains.k_df);
    out += "closed-loop eigenvalues\n";
    for z in gains.closed_loop_eigenvalues(&fm) {
        let _ = writeln!(out, "  {:>15.6e} {:+.6e}i", z.re, z.im);
    }
    let _ = writeln!(out, "residual = {residual:.3e} (bound {:.3e})", residual_bound(&weights.q));

    inv.write_all(&[
        ("lqr.txt", out.clone().into_bytes()),
        ("manifest.txt", inv.manifest("design-lqr").render().into_bytes()),
    ])?;
    say(w, &out)
}

pub fn modes(inv: &Invocation, w: &mut dyn Write) -> Result<(), CliError> {
    let cfg = &inv.config;
    let n = cfg.modal.n_modes();
    let b = beam_modes(&cfg.arm, n)?;
    let mut out = format!(
        "{:<6}{:>14}{:>18}{:>16}{:>16}{:>16}\n",
        "mode", "beta_L", "clamped_free", "hub_coupled", "configured", "phi_prime0"
    );
    for i in 0..n {
        let _ = writeln!(
            out,
            "{:<6}{:>14.6}{:>18.4}{:>16.4}{:>16.4}{:>16.6}",
            i + 1,
            b.beta_l[i],
            b.omega[i],
            b.hub_omega[i],
            cfg.modal.omega[i],
            b.phi_prime0[i]
        );
    }
    out += "frequencies in rad/s\n";
    inv.write_all(&[
        ("modes.txt", out.clone().into_bytes()),
        ("manifest.txt", inv.manifest("modes").render().into_bytes()),
    ])?;
    say(w, &out)
}

pub const DEFAULT_FACTORS: [f64; 4] = [1.0, 4.0, 16.0, 64.0];

pub fn sweep_epsilon(inv: &Invocation, factors: &[f64], w: &mut dyn Write) -> Result<(), CliError> {
    let cfg = &inv.config;
    if factors.is_empty() || factors.iter().any(|f| !(*f >= 1.0) || !f.is_finite()) {
        return Err(crate::ConfigError::Value {
            key: "--factors".into(),
            reason: "stiffness factors must be finite and at least 1".into(),
        }
        .into());
    }
    let plant = cfg.plant()?;
    let ctl = cfg.controllers(ControllerMode::Composite)?;
    let points = epsilon_sweep(&plant, factors, &cfg.reference, &ctl, &cfg.sim)?;
    let mut csv = String::from("factor,epsilon,gap\n");
    for p in &points {
        let _ = writeln!(csv, "{:?},{:?},{:?}", p.factor, p.epsilon, p.gap);
    }
    let slope = loglog_slope(&points);
    let mut manifest = inv.manifest("sweep-epsilon");
    manifest.factors = Some(factors.to_vec());
    inv.write_all(&[
        ("sweep.csv", csv.clone().into_bytes()),
        ("manifest.txt", manifest.render().into_bytes()),
    ])?;
    say(w, &csv)?;
    say(w, &format!("log-log slope = {}\n", slope.map_or_else(|| "n/a".into(), |s| format!("{s:.4}"))))
}
