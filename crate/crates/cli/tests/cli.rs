use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn brokenray(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brokenray"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn ring_scene(dir: &Path, affine: bool) -> String {
    let mut text = String::from(
        r#"
[domain]
kind = "ball"
center = [0.0, 0.0, 0.0]
radius = 1.0

[speed]
kind = "affine"
alpha = 0.1
beta = -0.1
gamma = 0.0
delta = 1.0

[schedule]
intervals = 2
tau = 1.0

[emission]
kind = "planar"
n = 90

[options]
capture_radius = 0.02
sim_steps = 300

[[obstacle]]
surface = "reflecting"
geometry = { kind = "sphere", center = [0.0, 0.0, 0.0], radius = 0.25 }
trajectory = [{ translation = [0.1, 0.0, 0.0] }, { translation = [0.0, 0.15, 0.0] }]

[[obstacle]]
surface = "absorbing"
geometry = { kind = "sphere", center = [-0.5, -0.3, 0.0], radius = 0.1 }
trajectory = [{ translation = [0.0, 0.0, 0.0] }]
"#,
    );
    if !affine {
        text = text.replace("alpha = 0.1\nbeta = -0.1", "alpha = 0.0\nbeta = 0.0");
    }
    for k in 0..8 {
        let a = std::f64::consts::TAU * k as f64 / 8.0;
        text.push_str(&format!(
            "\n[[transducer]]\nid = \"t{k}\"\npos = [{}, {}, 0.0]\nrole = \"both\"\n",
            a.cos(),
            a.sin()
        ));
    }
    let path = dir.join("scene.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn tables_reproduce_first_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&brokenray(&["tables", "--out", out]));
    let t1 = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    let lines: Vec<&str> = t1.lines().collect();
    assert_eq!(lines[0], "xl,yl,zl,xr,yr,zr,phi,theta,xp,yp,zp,status");
    assert_eq!(
        lines[1],
        "0.00,0.00,0.00,0.00,0.00,0.00,1.57,0.00,0.98,0.00,0.00,found"
    );
    assert_eq!(lines.len(), 8);
    let t2 = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    let row: Vec<&str> = t2.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[8], "2");
    let xp: f64 = row[9].parse().unwrap();
    assert!((xp - 1.55).abs() <= 0.02);
    assert!(dir.path().join("table2_coarse.csv").exists());
}

#[test]
fn pipeline_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let scene = ring_scene(dir.path(), true);
    let run = |workers: &str| {
        let out = dir.path().join(format!("run{workers}"));
        let out = out.to_str().unwrap().to_string();
        let common = ["--scene", &scene, "--out", &out, "--workers", workers];
        ok(&brokenray(&[&["simulate"][..], &common].concat()));
        ok(&brokenray(
            &[
                &[
                    "reconstruct",
                    "--n-r",
                    "80",
                    "--grid",
                    "1x90",
                    "--eps1",
                    "0.04",
                ][..],
                &common,
            ]
            .concat(),
        ));
        ok(&brokenray(
            &[
                &[
                    "paint", "--n-r", "80", "--grid", "1x90", "--eps1", "0.04", "--voxels",
                    "16x16x2",
                ][..],
                &common,
            ]
            .concat(),
        ));
        out
    };
    let a = run("1");
    let b = run("2");
    for k in 0..2 {
        for name in [
            "datapoints.csv",
            "lostrays.csv",
            "groundtruth.csv",
            "events.csv",
            "reconstruction.csv",
            "labels.bin",
        ] {
            let pa = Path::new(&a).join(format!("interval_{k:04}")).join(name);
            let pb = Path::new(&b).join(format!("interval_{k:04}")).join(name);
            assert_eq!(
                fs::read(&pa).unwrap(),
                fs::read(&pb).unwrap(),
                "{}",
                pa.display()
            );
        }
        let slices = Path::new(&a).join(format!("interval_{k:04}/slices"));
        assert!(slices.join("slice_0000.pgm").exists());
        assert!(slices.join("slice_0001.ppm").exists());
    }
    let dp = fs::read_to_string(Path::new(&a).join("interval_0000/datapoints.csv")).unwrap();
    assert!(dp.starts_with("xl,yl,zl,xr,yr,zr,phi,theta,t,xi\n"));
    assert!(dp.lines().count() > 1);
    let rec = fs::read_to_string(Path::new(&a).join("interval_0000/reconstruction.csv")).unwrap();
    assert!(rec.lines().next().unwrap().ends_with(",xp,yp,zp,status"));
    assert!(rec.contains(",found"));
}

#[test]
fn reconstruct_accepts_a_single_file() {
    let dir = tempfile::tempdir().unwrap();
    // a straight chord is unbroken in a constant field
    let scene = ring_scene(dir.path(), false);
    let file = dir.path().join("points.csv");
    fs::write(
        &file,
        "xl,yl,zl,xr,yr,zr,phi,theta,t,xi\n-1,0,0,1,0,0,1.5707963267948966,0,2,7\n",
    )
    .unwrap();
    let out = dir.path().join("rec");
    ok(&brokenray(&[
        "reconstruct",
        "--scene",
        &scene,
        "--data",
        file.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "table",
    ]));
    let text = fs::read_to_string(out.join("reconstruction.csv")).unwrap();
    assert!(
        text.lines()
            .nth(1)
            .unwrap()
            .ends_with(",7,,,,filtered-unbroken"),
        "{text}"
    );
}

#[test]
fn roundtrip_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&brokenray(&[
        "roundtrip",
        "--count",
        "2",
        "--seed",
        "3",
        "--out",
        out,
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("roundtrip.json")).unwrap())
            .unwrap();
    assert_eq!(report["scenes"], 2);
    assert!(report["found_rate"].as_f64().unwrap() >= 0.9);
}

#[test]
fn errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "[domain]\nkind = \"ball\"\ncenter = [0.0, 0.0, 0.0]\nradius = 1.0\nbogus = 1\n",
    )
    .unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--scene", bad.to_str().unwrap()],
        vec!["simulate"],
        vec!["simulate", "--scene", "/nonexistent/scene.toml"],
        vec!["tables", "--workers", "0"],
    ];
    for args in cases {
        let out = brokenray(&args);
        assert!(!out.status.success(), "{args:?}");
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
        assert!(
            err["error"].is_string() && err["message"].is_string(),
            "{args:?}: {err}"
        );
    }
}

#[test]
fn bundled_scene_runs() {
    let dir = tempfile::tempdir().unwrap();
    let scene = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenes/arc.toml");
    let out = dir.path().to_str().unwrap();
    ok(&brokenray(&["simulate", "--scene", scene, "--out", out]));
    ok(&brokenray(&[
        "reconstruct",
        "--scene",
        scene,
        "--out",
        out,
        "--grid",
        "1x720",
    ]));
    for k in 0..3 {
        let rec = fs::read_to_string(
            dir.path()
                .join(format!("interval_{k:04}/reconstruction.csv")),
        )
        .unwrap();
        assert!(rec.contains(",found"), "interval {k}");
    }
    let lost = fs::read_to_string(dir.path().join("interval_0000/lostrays.csv")).unwrap();
    assert!(lost.lines().count() > 1);
}
