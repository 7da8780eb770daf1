//! `global-array`: generate observer tracks, estimate distance from optic and
//! inertial streams, detect playback, and compute the slope invariant.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use global_array::analysis::{estimate_table, reach_judgment, ReachJudgment};
use global_array::config::RunConfig;
use global_array::demo::{constant_acceleration, run_demo, Pipeline, DEFAULT_SEED};
use global_array::detector::{detect, DetectorConfig};
use global_array::generators::{generate, make_playback};
use global_array::invariants::{slope_invariant, Equation};
use global_array::io::{
    read_track_csv, write_estimate_csv, write_json, write_slope_csv, write_track_csv,
};
use global_array::observables::{
    default_gravity, project_inertial, project_optics, replay_optics, ProjectionConfig,
    SupportStream,
};
use global_array::{Error, KinematicTrack, Result, ScenePoint, TimeGrid, Vec3};

const OUT_DIR_ENV: &str = "GLOBAL_ARRAY_OUT_DIR";

#[derive(Parser)]
#[command(name = "global-array", version, about)]
struct Cli {
    /// Output directory [default: config `[output].dir`, else $GLOBAL_ARRAY_OUT_DIR, else ./out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an observer track from a config and write track.csv.
    Generate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the per-sample estimate table and the accuracy report.
    Analyze {
        #[command(flatten)]
        source: TrackSource,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        object: Option<Vec3>,
        /// Relative error counted as accurate
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        reach_threshold_m: Option<f64>,
    },
    /// Decide whether optics and inertial streams come from one moving body.
    Detect {
        #[arg(long, conflicts_with_all = ["optics_from", "inertial_from"])]
        config: Option<PathBuf>,
        /// Present the config's optics to a stationary observer
        #[arg(long, requires = "config")]
        playback: bool,
        /// Where the stationary observer stands [default: first track sample]
        #[arg(long, requires = "playback", value_parser = parse_vec3, allow_hyphen_values = true)]
        hold: Option<Vec3>,
        /// Config (.toml) or track CSV rendering the optics
        #[arg(long, requires = "inertial_from")]
        optics_from: Option<PathBuf>,
        /// Config (.toml) or track CSV supplying the inertial stream
        #[arg(long, requires = "optics_from")]
        inertial_from: Option<PathBuf>,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        object: Option<Vec3>,
    },
    /// Angle between the direction of balance and the support surface normal.
    Slope {
        #[command(flatten)]
        source: TrackSource,
        /// Constant acceleration (m/s²) starting from rest, instead of a track
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, conflicts_with_all = ["config", "track"])]
        acceleration: Option<Vec3>,
        #[arg(long, default_value_t = 1.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 100.0)]
        sample_rate_hz: f64,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        gravity: Option<Vec3>,
        /// Surface normal [default: +z]
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, conflicts_with = "tilt_deg")]
        normal: Option<Vec3>,
        /// Surface tilted about the y axis by this many degrees
        #[arg(long, allow_hyphen_values = true)]
        tilt_deg: Option<f64>,
    },
    /// Run the full scenario suite and print a pass/fail table.
    Demo {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct TrackSource {
    /// Run config (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Track CSV (t,px,py,pz,vx,vy,vz,ax,ay,az)
    #[arg(long)]
    track: Option<PathBuf>,
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|c| c.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected three finite numbers `x,y,z`, got `{s}`")),
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

struct Loaded {
    track: KinematicTrack,
    config: Option<RunConfig>,
}

impl Loaded {
    fn projection(&self) -> ProjectionConfig {
        self.config
            .as_ref()
            .map(|c| c.projection)
            .unwrap_or_default()
    }

    fn gravity(&self) -> Vec3 {
        self.config
            .as_ref()
            .map_or_else(default_gravity, |c| c.gravity)
    }

    fn detector(&self) -> DetectorConfig {
        self.config.as_ref().map(|c| c.detector).unwrap_or_default()
    }

    fn object(&self, flag: Option<Vec3>) -> Result<ScenePoint> {
        match (flag, &self.config) {
            (Some(p), _) => ScenePoint::new(p, "object"),
            (None, Some(c)) => Ok(c.object().clone()),
            (None, None) => Err(usage("--object is required when no --config is given")),
        }
    }
}

/// A track from `--track`, else generated from `--config`. With both, the
/// config still supplies object and settings.
fn load(source: &TrackSource) -> Result<Loaded> {
    let config = source
        .config
        .as_deref()
        .map(RunConfig::from_path)
        .transpose()?;
    let track = match (&source.track, &config) {
        (Some(path), _) => read_track_csv(path)?,
        (None, Some(cfg)) => generate(&cfg.scenario)?,
        (None, None) => return Err(usage("give --config or --track")),
    };
    Ok(Loaded { track, config })
}

/// A `.toml` path is a run config, anything else a track CSV.
fn load_path(path: &Path) -> Result<Loaded> {
    let is_toml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let (config, track) = if is_toml {
        (Some(path.to_path_buf()), None)
    } else {
        (None, Some(path.to_path_buf()))
    };
    load(&TrackSource { config, track })
}

fn out_dir(flag: Option<&Path>, config: Option<&RunConfig>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.and_then(|c| c.output_dir.clone()))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn reach_summary(r: &ReachJudgment) -> serde_json::Value {
    let within = r.truth.iter().filter(|t| **t).count() as f64 / r.truth.len() as f64;
    let agreement: serde_json::Map<String, serde_json::Value> = Equation::ALL
        .iter()
        .map(|&eq| (eq.name().to_string(), serde_json::json!(r.agreement(eq))))
        .collect();
    serde_json::json!({
        "reach_threshold_m": r.reach_threshold,
        "truth_within_reach_fraction": within,
        "agreement": agreement,
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out_flag = cli.out.as_deref();
    match cli.command {
        Command::Generate { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let track = generate(&cfg.scenario)?;
            let path = out_dir(out_flag, Some(&cfg)).join("track.csv");
            write_track_csv(&path, &track)?;
            println!("wrote {} ({} samples)", path.display(), track.len());
        }
        Command::Analyze {
            source,
            object,
            tolerance,
            reach_threshold_m,
        } => {
            let loaded = load(&source)?;
            let object = loaded.object(object)?;
            let settings = loaded
                .config
                .as_ref()
                .map(|c| c.analysis)
                .unwrap_or_default();
            let tolerance = tolerance.unwrap_or(settings.tolerance);
            let reach = reach_threshold_m.unwrap_or(settings.reach_threshold);
            let id = loaded
                .config
                .as_ref()
                .map_or("track", |c| c.scenario.kind.name())
                .to_string();
            let (projection, gravity) = (loaded.projection(), loaded.gravity());
            let dir = out_dir(out_flag, loaded.config.as_ref());
            let p = Pipeline::run(loaded.track, &object, &projection, gravity)?;
            let report = p.accuracy(tolerance, &id)?;
            let judgment = reach_judgment(&p.estimates, reach)?;
            write_estimate_csv(
                &dir.join("estimates.csv"),
                &estimate_table(&p.estimates, &p.optics, &p.inertial)?,
            )?;
            write_json(&dir.join("accuracy.json"), &report)?;
            write_json(&dir.join("reach.json"), &reach_summary(&judgment))?;
            println!("tolerance {tolerance}, {} samples", report.n_samples);
            for (eq, acc) in &report.equations {
                let frac = acc
                    .accurate_fraction
                    .map_or("n/a".to_string(), |f| format!("{f:.4}"));
                println!(
                    "{:4} valid {:.4} accurate {frac}",
                    eq.name(),
                    acc.valid_fraction
                );
            }
        }
        Command::Detect {
            config,
            playback,
            hold,
            optics_from,
            inertial_from,
            object,
        } => {
            let (optics, inertial, det, cfg) = match (config, optics_from, inertial_from) {
                (Some(path), None, None) => {
                    let loaded = load_path(&path)?;
                    let object = loaded.object(object)?;
                    let (projection, gravity, det) =
                        (loaded.projection(), loaded.gravity(), loaded.detector());
                    let (optics, inertial) = if playback {
                        let at = hold.unwrap_or(loaded.track.position()[0]);
                        replay_optics(
                            &make_playback(&loaded.track, at)?,
                            &object,
                            &projection,
                            gravity,
                        )?
                    } else {
                        (
                            project_optics(&loaded.track, &object, &projection)?,
                            project_inertial(&loaded.track, gravity),
                        )
                    };
                    (optics, inertial, det, loaded.config)
                }
                (None, Some(a), Some(b)) => {
                    let a = load_path(&a)?;
                    let b = load_path(&b)?;
                    let object = a.object(object)?;
                    let optics = project_optics(&a.track, &object, &a.projection())?;
                    let inertial = project_inertial(&b.track, b.gravity());
                    (optics, inertial, a.detector(), a.config)
                }
                _ => {
                    return Err(usage(
                        "give --config, or both --optics-from and --inertial-from",
                    ))
                }
            };
            let report = detect(&optics, &inertial, &det)?;
            let path = out_dir(out_flag, cfg.as_ref()).join("detection.json");
            write_json(&path, &report)?;
            let verdict = serde_json::to_value(report.verdict)?;
            println!(
                "verdict {} (rule {})",
                verdict.as_str().unwrap_or_default(),
                report.rule_fired
            );
        }
        Command::Slope {
            source,
            acceleration,
            duration_s,
            sample_rate_hz,
            gravity,
            normal,
            tilt_deg,
        } => {
            let (track, config) = match acceleration {
                Some(a) => (
                    constant_acceleration(TimeGrid::covering(sample_rate_hz, duration_s, 0.0)?, a)?,
                    None,
                ),
                None => {
                    let loaded = load(&source)?;
                    (loaded.track, loaded.config)
                }
            };
            let gravity = gravity
                .or_else(|| config.as_ref().map(|c| c.gravity))
                .unwrap_or_else(default_gravity);
            let grid = *track.grid();
            let support = match (normal, tilt_deg) {
                (Some(n), _) => {
                    let norm = n.norm();
                    if norm.is_nan() || norm <= 0.0 {
                        return Err(usage("--normal must be nonzero"));
                    }
                    SupportStream::constant(grid, n / norm)?
                }
                (None, Some(deg)) => SupportStream::tilted_about_y(grid, deg.to_radians())?,
                (None, None) => SupportStream::level(grid),
            };
            let est = slope_invariant(&project_inertial(&track, gravity), &support)?;
            let path = out_dir(out_flag, config.as_ref()).join("slope.csv");
            write_slope_csv(&path, &est)?;
            match est.slope_angle[0] {
                Some(a) => println!("slope {a:.9} rad at t = {}", grid.t0()),
                None => println!("free fall at t = {}: slope undefined", grid.t0()),
            }
        }
        Command::Demo { seed } => {
            let dir = out_dir(out_flag, None);
            let report = run_demo(&dir, seed)?;
            print!("{}", report.table());
            println!("outputs in {}", dir.display());
            if !report.all_passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
