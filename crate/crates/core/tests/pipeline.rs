use brokenray::analyzer::events_from_simulation;
use brokenray::io::{read_data_points, read_events, write_data_points, write_events, Format};
use brokenray::scenarios::{roundtrip_eps2, roundtrip_params};
use brokenray::*;

const SCENE: &str = r#"
[domain]
kind = "ball"
center = [0.0, 0.0, 0.0]
radius = 1.0

[speed]
kind = "affine"
alpha = 0.15
beta = 0.1
gamma = 0.0
delta = 1.0

[schedule]
intervals = 3
tau = 5.0

[emission]
kind = "planar"
n = 720

[options]
capture_radius = 0.005

[[obstacle]]
surface = "reflecting"
geometry = { kind = "sphere", center = [0.0, 0.0, 0.0], radius = 0.2 }
trajectory = [
  { translation = [-0.3, -0.1, 0.0] },
  { translation = [-0.25, 0.0, 0.0] },
  { translation = [-0.2, 0.1, 0.0] },
]
"#;

fn scene() -> Scene {
    let mut text = SCENE.to_string();
    for k in 0..10 {
        let a = (-50.0 + 100.0 * k as f64 / 9.0).to_radians();
        text.push_str(&format!(
            "\n[[transducer]]\nid = \"t{k}\"\npos = [{}, {}, 0.0]\nrole = \"both\"\n",
            a.cos(),
            a.sin()
        ));
    }
    load_scene(&text).unwrap()
}

#[test]
fn analyzer_recovers_simulated_data_points() {
    let s = scene();
    let analyzer = Analyzer::for_scene(&s, 1.0);
    let mut events = Vec::new();
    let mut expected = Vec::new();
    for k in 0..s.schedule.interval_count {
        let data = simulate_interval(&s, k);
        events.extend(events_from_simulation(
            &s,
            &data,
            k as f64 * s.schedule.interval_duration,
        ));
        expected.push(data);
    }
    // the event log survives a trip through CSV
    let mut buf = Vec::new();
    write_events(&mut buf, &events).unwrap();
    let events = read_events(&buf[..]).unwrap();

    let periods = analyzer.process(&events, 1e9).unwrap();
    assert_eq!(periods.len(), s.schedule.interval_count);
    for ((_, m), data) in periods.iter().zip(&expected) {
        assert!(m.pending.is_empty() && m.rejected.is_empty());
        let mut got = m.data_points.clone();
        got.sort_by_key(|d| d.xi);
        assert_eq!(got.len(), data.data_points.len());
        for (a, b) in got.iter().zip(&data.data_points) {
            assert_eq!(a.xi, b.xi);
            assert_eq!(a.transmitter, b.transmitter);
            assert_eq!(a.receiver, b.receiver);
            assert!((a.t - b.t).abs() <= 1e-12 * (1.0 + b.t));
        }
        // rays that exited unreceived are indistinguishable from absorbed ones
        let silent = data.events.len() - data.data_points.len();
        assert_eq!(m.lost.len(), silent);
    }
}

#[test]
fn trajectory_follows_the_obstacle() {
    let s = scene();
    let base = roundtrip_params(&s.domain);
    let mut centroids = Vec::new();
    for k in 0..s.schedule.interval_count {
        let data = simulate_interval(&s, k);
        let mut buf = Vec::new();
        write_data_points(&mut buf, &data.data_points, Format::Raw).unwrap();
        let points = read_data_points(&buf[..]).unwrap();
        assert_eq!(points, data.data_points);

        let found: Vec<Vec3> = points
            .iter()
            .zip(&data.ground_truth)
            .filter(|(_, g)| g.reflection.is_some())
            .filter_map(|(dp, _)| {
                let p = ReconstructionParams {
                    eps2: Some(roundtrip_eps2(&base, dp.t)),
                    ..base
                };
                reconstruct(dp, &s.speed, &s.domain, &p).position
            })
            .collect();
        assert!(found.len() >= 3, "interval {k}: {} points", found.len());
        let center = s.obstacles[0].placed(k);
        for p in &found {
            let d = center.signed_distance(p);
            assert!(
                d.abs() < 2.0 * base.eps1,
                "interval {k}: {p:?} is {d} from the surface"
            );
        }
        centroids.push(found.iter().sum::<Vec3>() / found.len() as f64);
    }
    // reconstructed points move with the obstacle
    assert!(centroids[1].y > centroids[0].y);
    assert!(centroids[2].y > centroids[1].y);
}
