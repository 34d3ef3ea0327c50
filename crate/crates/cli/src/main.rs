use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use parce::competency::{calibrate_overall, calibrate_regional};
use parce::eval::benchmark::{load_scenario_dir, select_scenarios, write_benchmark};
use parce::eval::episode::{run_episode_traced, write_episodes_csv};
use parce::eval::metrics::fpr_at_95_tpr;
use parce::eval::{builtin_scenarios, bundle, generate_corpus, run_benchmark, RunConfig, Scenario};
use parce::image::Image;
use parce::perception::Split;
use parce::planner::PlannerVariant;
use parce::world::TerrainPalette;

#[derive(Parser)]
#[command(name = "parce", about = "Perception competency estimation and competency-aware navigation")]
struct Cli {
    /// INI run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Overall,
    Regional,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the labeled tile corpus and OOD renders with a manifest.
    GenData {
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Train the terrain classifier on the corpus train split.
    Train {
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long, default_value = "bundle")]
        bundle: PathBuf,
    },
    /// Fit the linear autoencoder on the corpus train split.
    FitAe {
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long, default_value = "bundle")]
        bundle: PathBuf,
    },
    /// Fit per-class loss statistics on the holdout split.
    Calibrate {
        mode: Mode,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long, default_value = "bundle")]
        bundle: PathBuf,
    },
    /// Print the overall score of each image and write its regional map.
    Score {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long, default_value = "bundle")]
        bundle: PathBuf,
        /// Directory for `<stem>_map.pgm`; next to each image when omitted.
        #[arg(long)]
        map_dir: Option<PathBuf>,
        /// Appends `path,group,value` rows for later use with `metrics`.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value = "unlabeled")]
        group: String,
    },
    /// Run one closed-loop episode.
    Navigate {
        /// Built-in scenario id or path to a scenario file.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "baseline")]
        variant: String,
        #[arg(long, default_value = "bundle")]
        bundle: PathBuf,
        #[arg(long, default_value = "episode")]
        out: PathBuf,
    },
    /// Run every variant on every scenario and write the tables.
    Benchmark {
        #[arg(long, default_value = "bundle")]
        bundle: PathBuf,
        #[arg(long, default_value = "benchmark")]
        out: PathBuf,
        /// Directory of scenario files; the built-in five when omitted.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// Comma-separated scenario ids.
        #[arg(long, value_delimiter = ',')]
        ids: Vec<usize>,
        /// Comma-separated variant names.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// KS distance, AUROC and FPR@95%TPR between two groups of a score CSV.
    Metrics {
        /// CSV with `group` and `value` columns.
        scores: PathBuf,
        /// Group expected to score lower (OOD or misclassified).
        #[arg(long)]
        pos: String,
        #[arg(long)]
        neg: String,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn manifest(data: &Path, split: Split) -> Result<parce::perception::LabeledDataset> {
    let path = data.join("manifest.csv");
    parce::perception::LabeledDataset::load_manifest(&path, split).with_context(|| format!("loading {} split from {}", split.as_str(), path.display()))
}

fn scenario_arg(spec: &str, palette: &TerrainPalette) -> Result<Scenario> {
    if let Ok(id) = spec.parse::<usize>() {
        let all = builtin_scenarios(palette)?;
        return Ok(select_scenarios(&all, &[id])?.remove(0));
    }
    Scenario::from_file(spec, palette).with_context(|| format!("reading scenario {spec}"))
}

fn needs_estimator(variants: &[PlannerVariant]) -> bool {
    variants.iter().any(|v| *v != PlannerVariant::Baseline)
}

fn write_trajectory_csv(trace: &parce::eval::episode::EpisodeTrace, path: &Path) -> Result<()> {
    let mut wr = csv::Writer::from_path(path)?;
    wr.write_record(["step", "x", "y", "theta", "v", "omega", "t", "s"])?;
    for (k, st) in trace.states.iter().enumerate() {
        let (t, s) = trace.inputs.get(k).map_or((String::new(), String::new()), |u| (u.t.to_string(), u.s.to_string()));
        wr.write_record([k.to_string(), st.x.to_string(), st.y.to_string(), st.theta.to_string(), st.v.to_string(), st.omega.to_string(), t, s])?;
    }
    wr.flush()?;
    Ok(())
}

fn read_scores(path: &Path, group: &str) -> Result<Vec<f64>> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = rd.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).with_context(|| format!("{} has no '{name}' column", path.display()));
    let (g, v) = (col("group")?, col("value")?);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if &rec[g] == group {
            out.push(rec[v].parse::<f64>().with_context(|| format!("bad score '{}'", &rec[v]))?);
        }
    }
    if out.is_empty() {
        bail!("group '{group}' has no rows in {}", path.display());
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = load_config(cli)?;
    let palette = TerrainPalette::default();
    match &cli.command {
        Command::GenData { out } => {
            if cli.seed.is_some() {
                cfg.corpus.seed = cfg.seed;
            }
            let corpus = generate_corpus(&palette, &cfg.camera, &cfg.corpus)?;
            corpus.save(out)?;
            println!(
                "wrote {} train, {} holdout, {} test tiles and {} OOD renders to {}",
                corpus.train.len(),
                corpus.holdout.len(),
                corpus.test.len(),
                corpus.ood_composites.len() + corpus.ood_scenes.len(),
                out.display()
            );
        }
        Command::Train { data, bundle: dir } => {
            let train = manifest(data, Split::Train)?;
            let clf = bundle::train(&train, &palette.names(), &cfg)?;
            let holdout = manifest(data, Split::Holdout)?;
            println!("holdout accuracy {:.4}", clf.accuracy(&holdout)?);
            bundle::save_classifier(&clf, dir)?;
        }
        Command::FitAe { data, bundle: dir } => {
            let ae = bundle::fit_ae(&manifest(data, Split::Train)?, &cfg)?;
            println!("rank {} autoencoder over {} features", ae.rank(), ae.feature_len());
            bundle::save_autoencoder(&ae, dir)?;
        }
        Command::Calibrate { mode, data, bundle: dir } => {
            let clf = bundle::load_classifier(dir)?;
            let ae = bundle::load_autoencoder(dir)?;
            let holdout = manifest(data, Split::Holdout)?;
            let (model, regional) = match mode {
                Mode::Overall => (calibrate_overall(&ae, &clf, &holdout)?, false),
                Mode::Regional => {
                    let sky = cfg.camera.sky_mask();
                    (calibrate_regional(&ae, &clf, &holdout, &cfg.segmentation, Some(&sky))?, true)
                }
            };
            for (c, (mu, sd)) in model.mu.iter().zip(&model.sigma).enumerate() {
                println!("class {c}: mu {mu:.6} sigma {sd:.6}");
            }
            bundle::save_calibration(&model, dir, regional)?;
        }
        Command::Score { images, bundle: dir, map_dir, csv: csv_path, group } => {
            let est = bundle::load_bundle(dir, &cfg)?;
            let mut wr = match csv_path {
                Some(p) => {
                    let exists = p.exists();
                    let file = std::fs::OpenOptions::new().create(true).append(true).open(p)?;
                    let mut wr = csv::Writer::from_writer(file);
                    if !exists {
                        wr.write_record(["path", "group", "value"])?;
                    }
                    Some(wr)
                }
                None => None,
            };
            for path in images {
                let image = Image::load_ppm(path).with_context(|| format!("reading {}", path.display()))?;
                let record = est.record(&image, true)?;
                println!("{}\t{:.6}", path.display(), record.overall);
                let stem = path.file_stem().map_or("image".into(), |s| s.to_string_lossy().into_owned());
                let map_path = map_dir.clone().unwrap_or_else(|| path.parent().map_or(PathBuf::from("."), Path::to_path_buf)).join(format!("{stem}_map.pgm"));
                if let Some(parent) = map_path.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                record.regional.as_ref().expect("regional map was requested").save_pgm(&map_path)?;
                if let Some(wr) = wr.as_mut() {
                    wr.write_record([path.display().to_string(), group.clone(), record.overall.to_string()])?;
                }
            }
            if let Some(mut wr) = wr {
                wr.flush()?;
            }
        }
        Command::Navigate { scenario, variant, bundle: dir, out } => {
            let variant = PlannerVariant::parse(variant)?;
            let sc = scenario_arg(scenario, &palette)?;
            let est = if needs_estimator(&[variant]) { Some(bundle::load_bundle(dir, &cfg)?) } else { None };
            let (result, trace) = run_episode_traced(&sc, variant, est.as_ref(), &cfg, cfg.seed, true)?;
            std::fs::create_dir_all(out)?;
            write_episodes_csv(std::slice::from_ref(&result), out.join("episode.csv"))?;
            write_trajectory_csv(&trace, &out.join("trajectory.csv"))?;
            let camera = sc.camera.unwrap_or(cfg.camera);
            for f in &trace.frames {
                f.plan.overlay(&f.image, &camera, &f.state).save_ppm(out.join(format!("overlay_{:04}.ppm", f.step)))?;
                if let Some(map) = f.record.as_ref().and_then(|r| r.regional.as_ref()) {
                    map.save_pgm(out.join(format!("competency_{:04}.pgm", f.step)))?;
                }
            }
            println!(
                "{} collided={} nav_time={:.1}s path_length={:.2}m safe_maneuvers={}",
                result.outcome.as_str(),
                result.collided,
                result.nav_time,
                result.path_length,
                result.safe_maneuvers
            );
        }
        Command::Benchmark { bundle: dir, out, scenarios, ids, variants, trials } => {
            let all = match scenarios {
                Some(d) => load_scenario_dir(d, &palette)?,
                None => builtin_scenarios(&palette)?,
            };
            let chosen = if ids.is_empty() { all } else { select_scenarios(&all, ids)? };
            let variants: Vec<PlannerVariant> = if variants.is_empty() {
                PlannerVariant::ALL.to_vec()
            } else {
                variants.iter().map(|v| PlannerVariant::parse(v)).collect::<parce::Result<_>>()?
            };
            let est = if needs_estimator(&variants) { Some(bundle::load_bundle(dir, &cfg)?) } else { None };
            let trials = trials.unwrap_or(cfg.trials_per_cell);
            let (table, results) = run_benchmark(&chosen, &variants, est.as_ref(), &cfg, trials, cfg.seed)?;
            write_benchmark(&table, &results, out)?;
            println!("scenario analogs, {trials} trials per cell");
            print!("{}", table.summary_text());
        }
        Command::Metrics { scores, pos, neg } => {
            let p = read_scores(scores, pos)?;
            let n = read_scores(scores, neg)?;
            println!("ks_distance,{:.6}", parce::eval::ks_distance(&p, &n)?);
            println!("auroc,{:.6}", parce::eval::auroc(&p, &n)?);
            println!("fpr_at_95_tpr,{:.6}", fpr_at_95_tpr(&p, &n)?);
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    run(&cli)
}

