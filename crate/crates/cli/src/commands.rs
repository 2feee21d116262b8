use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use brokenray::absorb::{paint_two_phase, PaintRay, RayKind};
use brokenray::analyzer::events_from_simulation;
use brokenray::io::{
    read_data_points, read_lost_rays, write_data_points, write_events, write_ground_truth,
    write_labels, write_lost_rays, write_reconstruction, write_slices, Format,
};
use brokenray::scenarios::{
    roundtrip as run_roundtrip, roundtrip_params, roundtrip_scene, table1, table2, Regime,
    RoundTripStats,
};
use brokenray::shooting::reconstruct_interval;
use brokenray::{
    load_scene, simulate_interval, AngleGrid, IoError, Method, ReconstructionParams, Scene,
    SceneError, SearchStrategy,
};

use crate::{FormatArg, MethodArg, Run, StrategyArg};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Scene(SceneError),
    Io(IoError),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Scene(_) => "scene",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Scene(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.message() }).to_string()
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        CliError::Scene(e)
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(IoError::Io(e))
    }
}

fn with_path(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| {
        CliError::Io(IoError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(with_path(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(with_path(path))?))
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(with_path(path))
}

fn format_of(args: &Run, default: Format) -> Format {
    match args.format {
        Some(FormatArg::Table) => Format::Table,
        Some(FormatArg::Raw) => Format::Raw,
        None => default,
    }
}

fn parse_dims<const N: usize>(text: &str, flag: &str) -> Result<[usize; N], CliError> {
    let parts: Vec<&str> = text.split(['x', 'X']).collect();
    let bad = || {
        CliError::Usage(format!(
            "{flag} expects {N} positive integers separated by 'x', got {text:?}"
        ))
    };
    if parts.len() != N {
        return Err(bad());
    }
    let mut out = [0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| bad())?;
        if *o == 0 {
            return Err(bad());
        }
    }
    Ok(out)
}

fn load(args: &Run) -> Result<Scene, CliError> {
    let path = args
        .scene
        .as_ref()
        .ok_or_else(|| CliError::Usage("--scene is required for this command".into()))?;
    let text = fs::read_to_string(path).map_err(with_path(path))?;
    let mut scene = load_scene(&text)?;
    if let Some(seed) = args.seed {
        reseed(&mut scene, seed);
    }
    Ok(scene)
}

/// Puts every random emission grid behind the one command-line seed.
fn reseed(scene: &mut Scene, seed: u64) {
    let grids = std::iter::once(&mut scene.emission)
        .chain(scene.transducers.iter_mut().filter_map(|t| t.grid.as_mut()));
    for (k, g) in grids.enumerate() {
        if let AngleGrid::Random { seed: s, .. } = g {
            *s = seed.wrapping_add(k as u64);
        }
    }
}

fn params(args: &Run, scene: &Scene) -> Result<ReconstructionParams, CliError> {
    let mut p = ReconstructionParams::for_domain(&scene.domain);
    if let Some(n) = args.n_r {
        p.n_r = n;
    }
    if let Some(e) = args.eps1 {
        p.eps1 = e;
    }
    p.eps2 = args.eps2;
    if let Some(g) = &args.grid {
        let [a, b] = parse_dims::<2>(g, "--grid")?;
        p.grid = (a, b);
    }
    p.strategy = match args.strategy {
        StrategyArg::Receiver => SearchStrategy::ReceiverSweep,
        StrategyArg::Reflection => SearchStrategy::ReflectionSweep,
    };
    p.method = match args.method {
        MethodArg::Brute => Method::Brute,
        MethodArg::Indexed => Method::Indexed,
    };
    p.validate()?;
    Ok(p)
}

fn interval_dir(root: &Path, k: usize) -> PathBuf {
    root.join(format!("interval_{k:04}"))
}

/// Data point files to process: a single file, or every interval folder of
/// a directory in index order. Each comes with its output folder.
fn inputs(args: &Run) -> Result<Vec<(usize, PathBuf, PathBuf)>, CliError> {
    let data = args.data.clone().unwrap_or_else(|| args.out.clone());
    if data.is_file() {
        return Ok(vec![(0, data, args.out.clone())]);
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(&data).map_err(with_path(&data))? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(k) = name
            .strip_prefix("interval_")
            .and_then(|s| s.parse::<usize>().ok())
        else {
            continue;
        };
        let file = entry.path().join("datapoints.csv");
        if file.is_file() {
            out.push((k, file, interval_dir(&args.out, k)));
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!(
            "no interval_NNNN/datapoints.csv under {}",
            data.display()
        )));
    }
    out.sort();
    Ok(out)
}

pub fn simulate(args: &Run) -> Result<(), CliError> {
    let scene = load(args)?;
    let f = format_of(args, Format::Raw);
    for k in 0..scene.schedule.interval_count {
        let data = simulate_interval(&scene, k);
        let dir = interval_dir(&args.out, k);
        write_data_points(create(&dir.join("datapoints.csv"))?, &data.data_points, f)?;
        write_lost_rays(create(&dir.join("lostrays.csv"))?, &data.lost)?;
        write_ground_truth(create(&dir.join("groundtruth.csv"))?, &data.ground_truth)?;
        let t0 = k as f64 * scene.schedule.interval_duration;
        write_events(
            create(&dir.join("events.csv"))?,
            &events_from_simulation(&scene, &data, t0),
        )?;
        println!(
            "interval {k}: {} data points, {} lost, {} excluded",
            data.data_points.len(),
            data.lost.len(),
            data.excluded()
        );
    }
    Ok(())
}

pub fn reconstruct(args: &Run) -> Result<(), CliError> {
    let scene = load(args)?;
    let p = params(args, &scene)?;
    let f = format_of(args, Format::Raw);
    for (k, file, dir) in inputs(args)? {
        let points = read_data_points(open(&file)?)?;
        let mut out = reconstruct_interval(&points, &scene.speed, &scene.domain, &p);
        for r in &mut out {
            r.interval = k;
        }
        write_reconstruction(create(&dir.join("reconstruction.csv"))?, &out, f)?;
        let found = out.iter().filter(|r| r.position.is_some()).count();
        println!("interval {k}: {found}/{} reconstructed", out.len());
    }
    Ok(())
}

pub fn paint(args: &Run) -> Result<(), CliError> {
    let scene = load(args)?;
    let p = params(args, &scene)?;
    let dims = match &args.voxels {
        Some(v) => parse_dims::<3>(v, "--voxels")?,
        None => [128; 3],
    };
    for (k, file, dir) in inputs(args)? {
        let points = read_data_points(open(&file)?)?;
        let lost_file = file.with_file_name("lostrays.csv");
        let lost = if lost_file.is_file() {
            read_lost_rays(open(&lost_file)?)?
        } else {
            Vec::new()
        };
        let others: Vec<PaintRay> = lost
            .iter()
            .map(|l| PaintRay {
                start: l.transmitter,
                phi: l.phi,
                theta: l.theta,
                kind: RayKind::Lost,
            })
            .collect();
        let (image, _) = paint_two_phase(&points, &others, &scene.speed, &scene.domain, &p, dims)?;
        write_slices(&dir.join("slices"), &image)?;
        write_labels(create(&dir.join("labels.bin"))?, &image)?;
        println!(
            "interval {k}: {} red, {} white, {} black voxels",
            image.count(brokenray::Label::Red),
            image.count(brokenray::Label::White),
            image.count(brokenray::Label::Black)
        );
    }
    Ok(())
}

pub fn tables(args: &Run) -> Result<(), CliError> {
    let f = format_of(args, Format::Table);
    let runs = [
        ("table1.csv", table1()),
        ("table2.csv", table2(Regime::Fine)),
        ("table2_coarse.csv", table2(Regime::Coarse)),
    ];
    for (name, t) in runs {
        t.write_csv(create(&args.out.join(name))?, f)?;
        println!(
            "{name}: {} rows in {:.2}s",
            t.rows.len(),
            t.elapsed.as_secs_f64()
        );
    }
    Ok(())
}

pub fn roundtrip(args: &Run) -> Result<(), CliError> {
    let mut stats = RoundTripStats::default();
    let mut eps1 = None;
    if args.scene.is_some() {
        let scene = load(args)?;
        let p = params(args, &scene)?;
        eps1 = Some(p.eps1);
        stats = run_roundtrip(&scene, &p, args.eps2.is_none());
    } else {
        let seed = args.seed.unwrap_or(0);
        for k in 0..args.count {
            let scene = roundtrip_scene(seed.wrapping_add(k), k % 2 == 1)?;
            let mut p = roundtrip_params(&scene.domain);
            if let Some(n) = args.n_r {
                p.n_r = n;
            }
            if let Some(e) = args.eps1 {
                p.eps1 = e;
            }
            p.eps2 = args.eps2;
            p.validate()?;
            eps1 = Some(p.eps1);
            stats.merge(&run_roundtrip(&scene, &p, args.eps2.is_none()));
        }
    }
    let report = serde_json::json!({
        "scenes": stats.scenes,
        "broken": stats.broken,
        "found": stats.found,
        "within_2_eps1": stats.within,
        "eps1": eps1,
        "found_rate": stats.found_rate(),
        "mean_error": stats.mean_error(),
        "max_error": stats.max_error,
        "unbroken": stats.unbroken,
        "unbroken_filtered": stats.unbroken_filtered,
        "runtime_seconds": stats.elapsed.as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::create_dir_all(&args.out).map_err(with_path(&args.out))?;
    let path = args.out.join("roundtrip.json");
    fs::write(&path, format!("{text}\n")).map_err(with_path(&path))?;
    println!("{text}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_parse() {
        assert_eq!(parse_dims::<2>("90x180", "--grid").unwrap(), [90, 180]);
        assert_eq!(parse_dims::<3>("8X8x4", "--voxels").unwrap(), [8, 8, 4]);
        assert!(parse_dims::<2>("90", "--grid").is_err());
        assert!(parse_dims::<2>("0x3", "--grid").is_err());
        assert!(parse_dims::<3>("1x2xq", "--voxels").is_err());
    }

    #[test]
    fn errors_are_json() {
        let e = CliError::Usage("bad \"flag\"".into());
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"], "usage");
        assert_eq!(v["message"], "bad \"flag\"");
    }
}
