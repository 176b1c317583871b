use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use bootstrap_lab::lab::{
    default_tolerance, estimate_pc, growth_construction, no_empty_line_check, sample_percolation,
    scaling_sweep, sweep_csv, GrowthConfig, TrialPlan, DEFAULT_TRIALS_PER_PROBE,
};
use bootstrap_lab::lattice::DEFAULT_PAD_CAP;
use bootstrap_lab::span::span_with_cap;
use bootstrap_lab::{
    classify, closure, closure_in_plane, difficulty, enumerate_droplet_shapes, minimal_region,
    span_ordered, Budget, Droplet, Geometry, GrowthParams, LatticeState, MergeOrder,
    RationalDirection, Rect, Site, UpdateFamily, SCHEMA_VERSION,
};

use crate::config::{self, usage, Usage};
use crate::{Cli, Command};

const WORKERS_ENV: &str = "BOOTSTRAP_LAB_WORKERS";

enum Body {
    Json(Value),
    Text(String, &'static str),
}

struct Output {
    seed: Option<u64>,
    config: Value,
    body: Body,
}

impl Output {
    fn json(config: Value, result: impl Serialize) -> Result<Self> {
        Ok(Output {
            seed: None,
            config,
            body: Body::Json(serde_json::to_value(result)?),
        })
    }

    fn seeded(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = config::load(cli.config.as_deref())?;
    let out = match cli.out {
        Some(p) => Some(p),
        None => config::global::<PathBuf>(&cfg, "out")?,
    };
    let workers = resolve_workers(cli.workers, &cfg)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .context("cannot start worker pool")?;

    let name = cli.command.name();
    let mut output = match &cli.command {
        Command::Classify(a) => classify_cmd(config::resolve(a, &cfg, name)?),
        Command::Closure(a) => closure_cmd(config::resolve(a, &cfg, name)?),
        Command::Span(a) => span_cmd(config::resolve(a, &cfg, name)?),
        Command::Droplet(a) => droplet_cmd(config::resolve(a, &cfg, name)?),
        Command::Simulate(a) => simulate_cmd(config::resolve(a, &cfg, name)?),
        Command::EstimatePc(a) => estimate_cmd(config::resolve(a, &cfg, name)?),
        Command::Sweep(a) => sweep_cmd(config::resolve(a, &cfg, name)?),
        Command::Growth(a) => growth_cmd(config::resolve(a, &cfg, name)?),
        Command::Lines(a) => lines_cmd(config::resolve(a, &cfg, name)?),
    }?;
    if let Value::Object(m) = &mut output.config {
        m.insert("workers".into(), json!(workers));
    }
    emit(name, out.as_deref(), output)
}

fn resolve_workers(flag: Option<usize>, cfg: &toml::Table) -> Result<usize> {
    let env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
            Usage(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            ))
        })?),
        Err(_) => None,
    };
    let n = flag
        .or(config::global(cfg, "workers")?)
        .or(env)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return usage("workers must be at least 1");
    }
    Ok(n)
}

fn emit(command: &str, out: Option<&Path>, output: Output) -> Result<()> {
    let (text, ext) = match output.body {
        Body::Json(result) => {
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "command": command,
                "config": output.config,
                "result": result,
            });
            (serde_json::to_string(&doc)? + "\n", "json")
        }
        Body::Text(t, ext) => (t, ext),
    };
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
        Some(p) => {
            let path = if p.is_dir() {
                p.join(match output.seed {
                    Some(s) => format!("{command}-{s}.{ext}"),
                    None => format!("{command}.{ext}"),
                })
            } else {
                p.to_path_buf()
            };
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn family(text: Option<&str>) -> Result<UpdateFamily> {
    let text = text.unwrap_or("duarte").trim();
    let fam = if text.starts_with('{') {
        UpdateFamily::from_json(text)?
    } else {
        UpdateFamily::by_name(text)?
    };
    Ok(fam)
}

fn family_json(f: &UpdateFamily) -> Value {
    serde_json::to_value(f).expect("families serialise")
}

/// Inline JSON, or the contents of a file when prefixed with `@`.
fn document(flag: &str, raw: Option<&str>) -> Result<String> {
    let Some(raw) = raw else {
        return usage(format!("--{flag} is required"));
    };
    match raw.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Usage(format!("cannot read --{flag} file {path}: {e}")).into()),
        None => Ok(raw.to_string()),
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(flag: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Usage(format!("--{flag}: {e}")).into())
}

fn seeds(raw: Option<&str>) -> Result<Vec<Site>> {
    parse_json("seeds", &document("seeds", raw)?)
}

fn ints<const N: usize>(flag: &str, raw: &str) -> Result<[i64; N]> {
    let v: Vec<i64> = raw
        .split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Usage(format!("--{flag} expects {N} comma-separated integers")))?;
    v.try_into()
        .map_err(|_| Usage(format!("--{flag} expects {N} comma-separated integers")).into())
}

fn required<T>(flag: &str, v: Option<T>) -> Result<T> {
    match v {
        Some(v) => Ok(v),
        None => usage(format!("--{flag} is required (flag or config entry)")),
    }
}

fn classify_cmd(a: crate::ClassifyArgs) -> Result<Output> {
    let fam = family(a.family.as_deref())?;
    let d = Budget::default();
    let budget = Budget {
        max_helpers: a.max_helpers.unwrap_or(d.max_helpers),
        window_radius: a.window_radius.unwrap_or(d.window_radius),
    };
    let mut cfg = json!({ "family": family_json(&fam), "budget": budget });
    match a.direction {
        Some(dir) => {
            let [x, y] = ints::<2>("direction", &dir)?;
            let u = RationalDirection::new(x, y)?;
            cfg["direction"] = json!(u);
            Output::json(cfg, difficulty(&fam, u, budget))
        }
        None => Output::json(cfg, classify(&fam, budget).report(&fam)),
    }
}

fn closure_cmd(a: crate::ClosureArgs) -> Result<Output> {
    let fam = family(a.family.as_deref())?;
    let seeds = seeds(a.seeds.as_deref())?;
    let geometry = match (a.torus, a.window.as_deref()) {
        (Some(_), Some(_)) => return usage("--torus and --window are exclusive"),
        (Some(n), None) => Some(Geometry::Torus { n }),
        (None, Some(w)) => {
            let [x0, y0, x1, y1] = ints::<4>("window", w)?;
            Some(Geometry::Window(Rect::from_corners(x0, y0, x1, y1)))
        }
        (None, None) => None,
    };
    let pad_cap = a.pad_cap.unwrap_or(DEFAULT_PAD_CAP);
    let cfg = json!({
        "family": family_json(&fam),
        "seeds": seeds,
        "geometry": geometry.map_or(json!("plane"), |g| json!(g)),
        "pad_cap": geometry.is_none().then_some(pad_cap),
        "pbm": a.pbm,
    });
    let Some(geometry) = geometry else {
        if a.pbm {
            return usage("--pbm needs --torus or --window");
        }
        let sites = closure_in_plane(&seeds, &fam, pad_cap)?;
        return Output::json(
            cfg,
            json!({
                "count": sites.len(),
                "bounding_box": Rect::bounding(&sites),
                "sites": sites,
            }),
        );
    };
    let state = closure(
        &LatticeState::from_sites(geometry, seeds.iter().copied())?,
        &fam,
    );
    if a.pbm {
        return Ok(Output {
            seed: None,
            config: cfg,
            body: Body::Text(state.to_pbm_p1(), "pbm"),
        });
    }
    let sites = state.sites();
    Output::json(
        cfg,
        json!({
            "count": sites.len(),
            "full": state.is_full(),
            "bounding_box": Rect::bounding(&sites),
            "sites": sites,
        }),
    )
}

fn params(p: Option<f64>, epsilon: Option<f64>) -> Result<GrowthParams> {
    Ok(GrowthParams::new(
        required("epsilon", epsilon)?,
        required("p", p)?,
    )?)
}

fn droplet_summary(d: &Droplet) -> Value {
    let (x, lo, hi) = d.region.right_edge_interval();
    json!({
        "region": d.region,
        "height": d.height(),
        "width": d.width(),
        "right_edge": [x, lo, hi],
        "sites": d.sites().len(),
    })
}

fn merge_order(raw: Option<&str>) -> Result<MergeOrder> {
    let raw = raw.unwrap_or("lexicographic").trim().replace('_', "-");
    Ok(match raw.as_str() {
        "lexicographic" => MergeOrder::Lexicographic,
        "lowest-first" => MergeOrder::LowestFirst,
        s => match s.strip_prefix("shuffled:").map(str::parse::<u64>) {
            Some(Ok(seed)) => MergeOrder::Shuffled(seed),
            _ => {
                return usage(format!(
                    "--order must be lexicographic, lowest-first or shuffled:<seed>, got `{s}`"
                ))
            }
        },
    })
}

fn span_cmd(a: crate::SpanArgs) -> Result<Output> {
    let fam = family(a.family.as_deref())?;
    let seeds = seeds(a.seeds.as_deref())?;
    let gp = params(a.p, a.epsilon)?;
    let order = merge_order(a.order.as_deref())?;
    let pad_cap = a.pad_cap.unwrap_or(DEFAULT_PAD_CAP);
    let res = match (order, pad_cap) {
        (MergeOrder::Lexicographic, cap) => span_with_cap(&seeds, &fam, &gp, cap)?,
        (_, DEFAULT_PAD_CAP) => span_ordered(&seeds, &fam, &gp, order)?,
        _ => return usage("--pad-cap is only supported with the lexicographic order"),
    };
    let cfg = json!({
        "family": family_json(&fam),
        "seeds": seeds,
        "params": gp,
        "order": order,
        "pad_cap": pad_cap,
        "dot": a.dot,
    });
    if a.dot {
        return Ok(Output {
            seed: None,
            config: cfg,
            body: Body::Text(res.trace.to_dot(), "dot"),
        });
    }
    Output::json(
        cfg,
        json!({
            "droplets": res.droplets.iter().map(droplet_summary).collect::<Vec<_>>(),
            "trace": res.trace,
        }),
    )
}

fn droplet_cmd(a: crate::DropletArgs) -> Result<Output> {
    let gp = params(a.p, a.epsilon)?;
    let points: Option<Vec<(f64, f64)>> = match a.points.as_deref() {
        Some(raw) => Some(parse_json("points", &document("points", Some(raw))?)?),
        None => None,
    };
    if points.is_none() && a.shapes.is_none() {
        return usage("give --points, --shapes or both");
    }
    let cfg = json!({ "params": gp, "points": points, "shapes": a.shapes });
    let region = match &points {
        Some(pts) => {
            let r = minimal_region(&gp, pts)?;
            let (x, lo, hi) = r.right_edge_interval();
            Some(json!({
                "region": r,
                "height": r.height(),
                "width": r.width(),
                "right_edge": [x, lo, hi],
                "sites": r.sites().len(),
            }))
        }
        None => None,
    };
    let shapes = a
        .shapes
        .map(|w| enumerate_droplet_shapes(&gp, w))
        .transpose()?;
    Output::json(cfg, json!({ "droplet": region, "shapes": shapes }))
}

fn simulate_cmd(a: crate::SimulateArgs) -> Result<Output> {
    let plan = TrialPlan {
        family: family(a.family.as_deref())?,
        n: a.n.unwrap_or(64),
        p: required("p", a.p)?,
        trials: a.trials.unwrap_or(100),
        master_seed: a.seed.unwrap_or(0),
    };
    let manifest = sample_percolation(&plan)?;
    Ok(Output::json(json!(plan), manifest)?.seeded(plan.master_seed))
}

fn estimate_cmd(a: crate::EstimatePcArgs) -> Result<Output> {
    let fam = family(a.family.as_deref())?;
    let n = a.n.unwrap_or(64);
    let trials = a.trials.unwrap_or(DEFAULT_TRIALS_PER_PROBE);
    let tolerance = a.tolerance.unwrap_or_else(|| default_tolerance(n));
    let seed = a.seed.unwrap_or(0);
    let est = estimate_pc(&fam, n, trials, tolerance, seed)?;
    let cfg = json!({
        "family": family_json(&fam),
        "n": n,
        "trials": trials,
        "tolerance": tolerance,
        "seed": seed,
    });
    Ok(Output::json(cfg, est)?.seeded(seed))
}

fn list<T: std::str::FromStr>(flag: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|t| t.trim().parse::<T>())
        .collect::<Result<_, _>>()
        .map_err(|_| Usage(format!("--{flag}: cannot parse `{raw}`")).into())
}

fn write_csv(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn sweep_cmd(a: crate::SweepArgs) -> Result<Output> {
    let names: Vec<String> = list(
        "families",
        a.families.as_deref().unwrap_or("duarte,modified_duarte"),
    )?;
    let families = names
        .iter()
        .map(|n| family(Some(n)))
        .collect::<Result<Vec<_>>>()?;
    let n_list: Vec<usize> = list("n-list", a.n_list.as_deref().unwrap_or("64,128,256"))?;
    let trials = a.trials.unwrap_or(DEFAULT_TRIALS_PER_PROBE);
    let seed = a.seed.unwrap_or(0);
    let csv = a
        .csv
        .unwrap_or_else(|| PathBuf::from(format!("sweep-{seed}.csv")));
    let rows = scaling_sweep(&families, &n_list, trials, seed, a.tolerance)?;
    write_csv(&csv, &sweep_csv(&rows))?;
    let cfg = json!({
        "families": families.iter().map(family_json).collect::<Vec<_>>(),
        "n_list": n_list,
        "trials": trials,
        "tolerance": a.tolerance.map_or(json!("1/(4 ln n)"), |t| json!(t)),
        "seed": seed,
        "csv": csv,
    });
    Ok(Output::json(cfg, json!({ "rows": rows }))?.seeded(seed))
}

fn growth_cmd(a: crate::GrowthArgs) -> Result<Output> {
    let seed = a.seed.unwrap_or(0);
    let mut gc = GrowthConfig::new(
        a.epsilon.unwrap_or(0.25),
        a.p.unwrap_or(0.15),
        a.trials.unwrap_or(2000),
        seed,
    );
    if let Some(m) = a.max_sites {
        gc.max_sites = m;
    }
    let csv = a
        .csv
        .unwrap_or_else(|| PathBuf::from(format!("growth-{seed}.csv")));
    let report = growth_construction(&gc)?;
    write_csv(&csv, &report.to_csv())?;
    let mut cfg = json!(gc);
    cfg["csv"] = json!(csv);
    let all_pass = report.all_pass();
    Ok(Output::json(cfg, json!({ "all_pass": all_pass, "report": report }))?.seeded(seed))
}

fn lines_cmd(a: crate::LinesArgs) -> Result<Output> {
    let n = a.n.unwrap_or(300);
    let p = required("p", a.p)?;
    let trials = a.trials.unwrap_or(100);
    let seed = a.seed.unwrap_or(0);
    let check = no_empty_line_check(n, p, seed, trials)?;
    let cfg = json!({ "n": n, "p": p, "trials": trials, "seed": seed });
    Ok(Output::json(cfg, check)?.seeded(seed))
}
