//! The experiment behind each subcommand. Every command computes all of its
//! outputs in memory first; files are written only after it succeeds.

use crate::config::{Record, Settings, RECORD_FORMAT};
use crate::render::{render_png, render_svg, Model, RenderOptions};
use anyhow::{bail, Context, Result};
use hpv_core::delaunay::{build_graph_from_points, estimate_degree, exact_mean_degree};
use hpv_core::exploration::{
    estimate_ex, estimate_xi, survival_statistics, ExplorationParams, XiKind,
};
use hpv_core::geometry::Point;
use hpv_core::percolation::{crossing_probability, estimate_pc};
use hpv_core::ppp::{sample_ball, SimConfig};
use hpv_core::pseudopath::{estimate_good_counts, good_count_bound, PseudoEdgeParams};
use hpv_core::stats::derive_seed;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sample,
    Degree,
    Percolate,
    PcSweep,
    Explore,
    Xi,
    Pseudopath,
    Render,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Sample,
        Command::Degree,
        Command::Percolate,
        Command::PcSweep,
        Command::Explore,
        Command::Xi,
        Command::Pseudopath,
        Command::Render,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Degree => "degree",
            Command::Percolate => "percolate",
            Command::PcSweep => "pc-sweep",
            Command::Explore => "explore",
            Command::Xi => "xi",
            Command::Pseudopath => "pseudopath",
            Command::Render => "render",
        }
    }

    pub fn from_name(s: &str) -> Result<Command> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .with_context(|| format!("unknown command {s:?}"))
    }
}

/// One output file: a suffix appended to the output prefix, and its bytes.
pub struct Output {
    pub suffix: String,
    pub bytes: Vec<u8>,
}

const CSV_VERSION: u32 = 1;

fn csv_output(cmd: Command, header: &[&str], rows: Vec<Vec<String>>) -> Result<Output> {
    let mut bytes = format!("# schema: hpv-{} v{CSV_VERSION}\n", cmd.name()).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut bytes);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
    }
    Ok(Output {
        suffix: ".csv".into(),
        bytes,
    })
}

fn get<T: Clone>(slot: &mut Option<T>, default: T) -> T {
    slot.get_or_insert(default).clone()
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// `p` if set, else `p_factor · (π/3)λ` (the factor defaulting to `factor`).
fn colour_probability(s: &mut Settings, lambda: f64, factor: f64) -> f64 {
    if let Some(p) = s.p {
        return p;
    }
    let f = get(&mut s.p_factor, factor);
    let p = (f * PI / 3.0 * lambda).min(1.0);
    s.p = Some(p);
    p
}

fn intensities(s: &mut Settings, default: &[f64]) -> Vec<f64> {
    if s.lambdas.is_none() {
        s.lambdas = Some(s.lambda.map_or_else(|| default.to_vec(), |l| vec![l]));
    }
    s.lambdas.clone().unwrap_or_default()
}

/// Runs `cmd`, returning the resolved settings and the outputs.
pub fn run(cmd: Command, mut s: Settings) -> Result<(Settings, Vec<Output>)> {
    let seed = get(&mut s.seed, 0);
    let outputs = match cmd {
        Command::Sample => {
            let lambda = get(&mut s.lambda, 1.0);
            let p = get(&mut s.p, 0.5);
            let radius = get(&mut s.window_radius, 5.0);
            let sample = sample_ball(lambda, radius, seed)?.with_p(p);
            let rows = (0..sample.len())
                .map(|i| {
                    let x = sample.points[i];
                    vec![
                        fmt(x.alpha),
                        fmt(x.rho),
                        fmt(sample.color_uniforms[i]),
                        sample.is_black(i).to_string(),
                    ]
                })
                .collect();
            vec![csv_output(
                cmd,
                &["alpha", "rho", "color_uniform", "black"],
                rows,
            )?]
        }
        Command::Degree => {
            let lambdas = intensities(&mut s, &[1.0]);
            let trials = get(&mut s.trials, 2000);
            let mut rows = Vec::new();
            for (j, &lambda) in lambdas.iter().enumerate() {
                let d = estimate_degree(
                    lambda,
                    s.window_radius,
                    derive_seed(seed, &[j as u64]),
                    trials,
                )?;
                let target = exact_mean_degree(lambda);
                rows.push(vec![
                    fmt(lambda),
                    fmt(d.initial_window),
                    d.estimate.trials.to_string(),
                    d.rejections.to_string(),
                    fmt(d.estimate.mean),
                    fmt(d.estimate.std_error),
                    fmt(target),
                    fmt((d.estimate.mean - target).abs() / target),
                    fmt(d.mean_enlargements),
                ]);
            }
            let header = [
                "lambda",
                "initial_window",
                "trials",
                "rejections",
                "mean_degree",
                "std_error",
                "exact_mean",
                "rel_error",
                "mean_enlargements",
            ];
            vec![csv_output(cmd, &header, rows)?]
        }
        Command::Percolate => {
            let lambda = get(&mut s.lambda, 0.5);
            let p = get(&mut s.p, 0.4);
            let trials = get(&mut s.trials, 200);
            let cfg = SimConfig {
                p,
                seed,
                trials,
                ..SimConfig::new(lambda)
            };
            let r_target = get(&mut s.r_target, 2.0 * cfg.r());
            let pr = crossing_probability(&cfg, p, r_target)?;
            let row = vec![
                fmt(lambda),
                fmt(p),
                fmt(r_target),
                pr.trials.to_string(),
                pr.crossings.to_string(),
                pr.rejections.to_string(),
                fmt(pr.fraction()),
                fmt(pr.wilson_low),
                fmt(pr.wilson_high),
            ];
            let header = [
                "lambda",
                "p",
                "r_target",
                "trials",
                "crossings",
                "rejections",
                "fraction",
                "wilson_low",
                "wilson_high",
            ];
            vec![csv_output(cmd, &header, vec![row])?]
        }
        Command::PcSweep => {
            let lambdas = intensities(&mut s, &[0.5, 0.2, 0.1, 0.05]);
            let trials = get(&mut s.trials, 400);
            let tol = get(&mut s.tol, 1e-3);
            let mut rows = Vec::new();
            for (j, &lambda) in lambdas.iter().enumerate() {
                let cfg = SimConfig {
                    seed: derive_seed(seed, &[j as u64]),
                    trials,
                    ..SimConfig::new(lambda)
                };
                let est = estimate_pc(&cfg, trials, tol)?;
                let rejections = est.trace.first().map_or(0, |p| p.rejections);
                rows.push(vec![
                    fmt(lambda),
                    fmt(est.p_hat),
                    fmt(est.low),
                    fmt(est.high),
                    trials.to_string(),
                    rejections.to_string(),
                    fmt(est.p_hat / (PI / 3.0 * lambda)),
                    fmt(0.5 - 1.0 / (4.0 * PI * lambda + 2.0)),
                ]);
            }
            let header = [
                "lambda",
                "p_hat",
                "low",
                "high",
                "trials",
                "rejections",
                "ratio",
                "upper_bound",
            ];
            vec![csv_output(cmd, &header, rows)?]
        }
        Command::Explore => {
            let lambda = get(&mut s.lambda, 0.01);
            let p = colour_probability(&mut s, lambda, 1.5);
            let eps = get(&mut s.eps, 0.5);
            let tuned = ExplorationParams::tuned(lambda, p, eps);
            let w = get(&mut s.w, tuned.w);
            let theta = get(&mut s.theta, tuned.theta);
            let h = get(&mut s.h, tuned.h);
            let params = ExplorationParams::new(lambda, p, w, theta, h);
            params.validate()?;
            let trials = get(&mut s.trials, 400);
            let runs = get(&mut s.runs, 100);
            let max_nodes = get(&mut s.max_nodes, 1000);
            let ex = estimate_ex(&params, seed, trials)?;
            let surv = survival_statistics(&params, seed, runs, max_nodes)?;
            let row = vec![
                fmt(lambda),
                fmt(p),
                fmt(params.r),
                fmt(w),
                fmt(theta),
                fmt(h),
                fmt(ex.mean),
                fmt(ex.std_error),
                ex.trials.to_string(),
                runs.to_string(),
                max_nodes.to_string(),
                surv.reached.to_string(),
                surv.extinct.to_string(),
            ];
            let header = [
                "lambda",
                "p",
                "r",
                "w",
                "theta",
                "h",
                "ex_mean",
                "ex_std_error",
                "ex_trials",
                "runs",
                "max_nodes",
                "reached",
                "extinct",
            ];
            vec![csv_output(cmd, &header, vec![row])?]
        }
        Command::Xi => {
            let lambda = get(&mut s.lambda, 0.02);
            let p = get(&mut s.p, 0.2);
            let params = ExplorationParams::new(
                lambda,
                p,
                get(&mut s.w, 4.0),
                get(&mut s.theta, 0.01),
                get(&mut s.h, 6.0),
            );
            params.validate()?;
            let trials = get(&mut s.trials, 50);
            let names = get(
                &mut s.kinds,
                XiKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            );
            let mut rows = Vec::new();
            for name in &names {
                let kind: XiKind = name.parse()?;
                let e = estimate_xi(kind, &params, seed, trials)?;
                rows.push(vec![
                    kind.name().to_string(),
                    fmt(e.estimate.mean),
                    fmt(e.estimate.std_error),
                    e.estimate.trials.to_string(),
                    fmt(e.bound),
                    opt(e.closed_form),
                ]);
            }
            let header = [
                "term",
                "estimate",
                "std_error",
                "trials",
                "bound",
                "closed_form",
            ];
            vec![csv_output(cmd, &header, rows)?]
        }
        Command::Pseudopath => {
            let lambda = get(&mut s.lambda, 0.05);
            let p = colour_probability(&mut s, lambda, 0.5);
            let params = PseudoEdgeParams::for_lambda(
                lambda,
                get(&mut s.w1, 2.0),
                get(&mut s.w2, 6.0),
                get(&mut s.theta, 0.2),
            )?;
            let k = get(&mut s.k, 1);
            let trials = get(&mut s.trials, 200);
            let counts = estimate_good_counts(lambda, p, &params, k, seed, trials)?;
            let eps = 1.0 - p / (PI / 3.0 * lambda);
            let rows = counts
                .iter()
                .enumerate()
                .map(|(j, e)| {
                    let bound = (eps > 0.0).then(|| good_count_bound(eps, params.w2, j + 1));
                    vec![
                        (j + 1).to_string(),
                        fmt(e.mean),
                        fmt(e.std_error),
                        e.trials.to_string(),
                        opt(bound),
                    ]
                })
                .collect();
            vec![csv_output(
                cmd,
                &["k", "mean", "std_error", "trials", "bound"],
                rows,
            )?]
        }
        Command::Render => {
            let lambda = get(&mut s.lambda, 1.0);
            let p = get(&mut s.p, 0.5);
            let r = 2.0 * (1.0 / lambda).ln().max(0.0);
            let radius = get(&mut s.window_radius, (r + 2.0).max(5.0));
            let model: Model = get(&mut s.model, "disk".into())
                .parse()
                .map_err(anyhow::Error::msg)?;
            let opts = RenderOptions {
                pixels: get(&mut s.pixels, 1024),
                model,
                highlight_origin: get(&mut s.highlight, true),
                window_radius: radius,
            };
            let format = get(&mut s.format, "png".into());
            let sample = sample_ball(lambda, radius, seed)?.with_p(p);
            let mut pts = vec![Point::ORIGIN];
            pts.extend_from_slice(&sample.points);
            let mut black = vec![true];
            black.extend((0..sample.len()).map(|i| sample.is_black(i)));
            let g = build_graph_from_points(pts, true, radius)?;
            let rows = g
                .vertices
                .iter()
                .zip(&black)
                .map(|(x, b)| vec![fmt(x.alpha), fmt(x.rho), b.to_string()])
                .collect();
            let mut out = vec![csv_output(cmd, &["alpha", "rho", "black"], rows)?];
            let (png, svg) = match format.as_str() {
                "png" => (true, false),
                "svg" => (false, true),
                "both" => (true, true),
                f => bail!("unknown format {f:?} (png, svg or both)"),
            };
            if png {
                out.push(Output {
                    suffix: ".png".into(),
                    bytes: render_png(&g, &black, &opts)?,
                });
            }
            if svg {
                if model != Model::Disk {
                    bail!("svg output is drawn in the disk model only");
                }
                out.push(Output {
                    suffix: ".svg".into(),
                    bytes: render_svg(&g, &black, &opts).into_bytes(),
                });
            }
            out
        }
    };
    Ok((s, outputs))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    prefix.with_file_name(name)
}

/// Writes the outputs and `<prefix>.record.json`; returns the written paths.
pub fn write(
    prefix: &Path,
    cmd: Command,
    settings: Settings,
    outputs: &[Output],
) -> Result<Vec<PathBuf>> {
    if prefix.file_name().is_none() {
        bail!("output prefix {} has no file name", prefix.display());
    }
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut written = Vec::new();
    let mut names = Vec::new();
    for o in outputs {
        let path = with_suffix(prefix, &o.suffix);
        std::fs::write(&path, &o.bytes).with_context(|| format!("writing {}", path.display()))?;
        names.push(
            path.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned(),
        );
        written.push(path);
    }
    let record = Record {
        format: RECORD_FORMAT.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: cmd.name().into(),
        settings,
        outputs: names,
    };
    let path = with_suffix(prefix, ".record.json");
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(written)
}
