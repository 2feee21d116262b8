//! Pairs transmit and receive events into data points.
//!
//! Every transmitted ray carries a frequency label `xi` that is unique within
//! its period, so a receive event is bound to the transmit with the same
//! label. Periods are separated by idle gaps long enough for every signal of
//! one period to arrive before the next period starts.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::AnalyzerError;
use crate::forward::{IntervalData, LostRay, RayOutcome};
use crate::geometry::Vec3;
use crate::scene::Scene;
use crate::shooting::DataPoint;

/// What a frequency label stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub transmitter: String,
    pub phi: f64,
    pub theta: f64,
}

/// Distinct frequency labels and their meaning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Palette {
    labels: Vec<u32>,
    bindings: HashMap<u32, Binding>,
}

impl Palette {
    pub fn new(entries: Vec<(u32, Binding)>) -> Result<Self, AnalyzerError> {
        let mut p = Palette::default();
        for (xi, b) in entries {
            if p.bindings.insert(xi, b).is_some() {
                return Err(AnalyzerError::Palette(format!("label {xi} appears twice")));
            }
            p.labels.push(xi);
        }
        Ok(p)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn decode(&self, xi: u32) -> Option<&Binding> {
        self.bindings.get(&xi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmitEvent {
    pub id: String,
    pub position: Vec3,
    pub phi: f64,
    pub theta: f64,
    pub xi: u32,
    pub t_start: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveEvent {
    pub id: String,
    pub position: Vec3,
    pub xi: u32,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Transmit(TransmitEvent),
    Receive(ReceiveEvent),
}

impl Event {
    pub fn time(&self) -> f64 {
        match self {
            Event::Transmit(e) => e.t_start,
            Event::Receive(e) => e.t_end,
        }
    }
}

/// Closed time interval holding one period's events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// Splits the event times at idle gaps of at least `gap`.
pub fn infer_period(events: &[Event], gap: f64) -> Vec<Window> {
    let mut times: Vec<f64> = events.iter().map(Event::time).collect();
    times.sort_by(f64::total_cmp);
    let mut out: Vec<Window> = Vec::new();
    for t in times {
        match out.last_mut() {
            Some(w) if t - w.end < gap => w.end = t,
            _ => out.push(Window { start: t, end: t }),
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Matched {
    pub data_points: Vec<DataPoint>,
    pub lost: Vec<LostRay>,
    /// Receives with an unknown label, a repeated label, or no positive
    /// travel time.
    pub rejected: Vec<ReceiveEvent>,
    /// Unanswered transmits of a period that may still receive signals.
    pub pending: Vec<TransmitEvent>,
}

impl Matched {
    /// `transmits = data points + lost + pending` and
    /// `receives = data points + rejected`.
    pub fn balances(&self, transmits: usize, receives: usize) -> bool {
        self.data_points.len() + self.lost.len() + self.pending.len() == transmits
            && self.data_points.len() + self.rejected.len() == receives
    }
}

/// Pairs the events of one closed period. Unanswered transmits become lost
/// rays.
pub fn match_events(
    transmits: &[TransmitEvent],
    receives: &[ReceiveEvent],
    window: Window,
) -> Result<Matched, AnalyzerError> {
    match_events_open(transmits, receives, window, true)
}

/// Like [`match_events`]; when `closed` is false, unanswered transmits are
/// kept pending instead of being declared lost.
pub fn match_events_open(
    transmits: &[TransmitEvent],
    receives: &[ReceiveEvent],
    window: Window,
    closed: bool,
) -> Result<Matched, AnalyzerError> {
    let mut by_xi: HashMap<u32, usize> = HashMap::with_capacity(transmits.len());
    for (k, tx) in transmits.iter().enumerate() {
        if by_xi.insert(tx.xi, k).is_some() {
            return Err(AnalyzerError::DuplicateFrequency {
                xi: tx.xi,
                start: window.start,
                end: window.end,
            });
        }
    }
    let mut answered = vec![false; transmits.len()];
    let mut out = Matched::default();
    for rx in receives {
        let Some(&k) = by_xi.get(&rx.xi) else {
            out.rejected.push(rx.clone());
            continue;
        };
        let tx = &transmits[k];
        if answered[k] || !(rx.t_end > tx.t_start) {
            out.rejected.push(rx.clone());
            continue;
        }
        answered[k] = true;
        out.data_points.push(DataPoint::new(
            tx.position,
            rx.position,
            tx.phi,
            tx.theta,
            rx.t_end - tx.t_start,
            tx.xi,
        ));
    }
    for (tx, done) in transmits.iter().zip(answered) {
        if done {
            continue;
        }
        if closed {
            out.lost.push(LostRay {
                transmitter: tx.position,
                phi: tx.phi,
                theta: tx.theta,
                xi: tx.xi,
            });
        } else {
            out.pending.push(tx.clone());
        }
    }
    Ok(out)
}

/// Period-by-period matching over an event stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Analyzer {
    /// Minimum idle time separating periods.
    pub gap: f64,
    /// Longest possible flight time; a period is closed once this much time
    /// has passed after its last event.
    pub horizon: f64,
}

impl Analyzer {
    /// Horizon from the scene: domain diameter over the slowest speed.
    pub fn for_scene(scene: &Scene, gap: f64) -> Self {
        let (c_min, _) = scene.speed.bounds(&scene.domain);
        Analyzer {
            gap,
            horizon: scene.domain.diameter() / c_min,
        }
    }

    /// Matches every period visible at time `now`. Periods are processed in
    /// parallel and returned in time order.
    pub fn process(
        &self,
        events: &[Event],
        now: f64,
    ) -> Result<Vec<(Window, Matched)>, AnalyzerError> {
        let windows = infer_period(events, self.gap);
        windows
            .par_iter()
            .map(|w| {
                let mut tx = Vec::new();
                let mut rx = Vec::new();
                for e in events.iter().filter(|e| w.contains(e.time())) {
                    match e {
                        Event::Transmit(t) => tx.push(t.clone()),
                        Event::Receive(r) => rx.push(r.clone()),
                    }
                }
                let closed = w.end + self.horizon <= now;
                match_events_open(&tx, &rx, *w, closed).map(|m| (*w, m))
            })
            .collect()
    }
}

/// Event stream of one simulated interval whose transmissions all start at
/// `t0`.
pub fn events_from_simulation(scene: &Scene, data: &IntervalData, t0: f64) -> Vec<Event> {
    let mut out = Vec::with_capacity(data.events.len() + data.data_points.len());
    for ev in &data.events {
        let tr = &scene.transducers[ev.transmitter];
        out.push(Event::Transmit(TransmitEvent {
            id: tr.id.clone(),
            position: tr.position,
            phi: ev.phi,
            theta: ev.theta,
            xi: ev.xi,
            t_start: t0,
        }));
    }
    for ev in &data.events {
        if let RayOutcome::Received { receiver, t, .. } = ev.outcome {
            let r = &scene.transducers[receiver];
            out.push(Event::Receive(ReceiveEvent {
                id: r.id.clone(),
                position: r.position,
                xi: ev.xi,
                t_end: t0 + t,
            }));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn tx(xi: u32, t: f64) -> TransmitEvent {
        TransmitEvent {
            id: "o".into(),
            position: Vec3::zeros(),
            phi: FRAC_PI_2,
            theta: FRAC_PI_4,
            xi,
            t_start: t,
        }
    }

    fn rx(xi: u32, t: f64) -> ReceiveEvent {
        ReceiveEvent {
            id: "o".into(),
            position: Vec3::zeros(),
            xi,
            t_end: t,
        }
    }

    const W: Window = Window {
        start: 0.0,
        end: 10.0,
    };

    #[test]
    fn pairs_into_data_point() {
        let m = match_events(&[tx(7, 0.0)], &[rx(7, 2.0)], W).unwrap();
        assert_eq!(
            m.data_points,
            vec![DataPoint::new(
                Vec3::zeros(),
                Vec3::zeros(),
                FRAC_PI_2,
                FRAC_PI_4,
                2.0,
                7
            )]
        );
        assert!(m.lost.is_empty());
    }

    #[test]
    fn unanswered_transmit_is_lost() {
        let m = match_events(&[tx(1, 0.0)], &[], W).unwrap();
        assert_eq!(m.lost.len(), 1);
        let m = match_events_open(&[tx(1, 0.0)], &[], W, false).unwrap();
        assert_eq!(m.pending.len(), 1);
        assert!(m.lost.is_empty());
    }

    #[test]
    fn duplicate_label_rejected() {
        let err = match_events(&[tx(3, 0.0), tx(3, 0.5)], &[], W).unwrap_err();
        assert_eq!(
            err,
            AnalyzerError::DuplicateFrequency {
                xi: 3,
                start: 0.0,
                end: 10.0
            }
        );
    }

    #[test]
    fn bad_receives_rejected() {
        let m = match_events(
            &[tx(1, 1.0)],
            &[rx(9, 2.0), rx(1, 0.5), rx(1, 3.0), rx(1, 4.0)],
            W,
        )
        .unwrap();
        assert_eq!(m.rejected.len(), 3);
        assert_eq!(m.data_points.len(), 1);
        assert_eq!(m.data_points[0].t, 2.0);
        assert!(m.balances(1, 4));
    }

    #[test]
    fn periods() {
        let ev: Vec<Event> = [0.0, 1.0, 2.0, 10.0, 11.0]
            .iter()
            .map(|&t| Event::Transmit(tx(0, t)))
            .collect();
        let w = infer_period(&ev, 5.0);
        assert_eq!(
            w,
            vec![
                Window {
                    start: 0.0,
                    end: 2.0
                },
                Window {
                    start: 10.0,
                    end: 11.0
                }
            ]
        );
        assert!(infer_period(&[], 5.0).is_empty());
        assert_eq!(infer_period(&ev[..1], 5.0).len(), 1);
    }

    #[test]
    fn loss_waits_for_the_horizon() {
        let a = Analyzer {
            gap: 5.0,
            horizon: 3.0,
        };
        let ev = vec![
            Event::Transmit(tx(1, 0.0)),
            Event::Transmit(tx(2, 0.0)),
            Event::Receive(rx(1, 2.0)),
        ];
        let early = a.process(&ev, 4.0).unwrap();
        assert_eq!(early[0].1.pending.len(), 1);
        assert!(early[0].1.lost.is_empty());
        let late = a.process(&ev, 5.0).unwrap();
        assert_eq!(late[0].1.lost.len(), 1);
    }

    #[test]
    fn palette_labels_unique() {
        let b = Binding {
            transmitter: "a".into(),
            phi: 1.0,
            theta: 2.0,
        };
        let p = Palette::new(vec![(1, b.clone()), (2, b.clone())]).unwrap();
        assert_eq!(p.labels(), &[1, 2]);
        assert_eq!(p.decode(2), Some(&b));
        assert!(p.decode(3).is_none());
        assert!(Palette::new(vec![(1, b.clone()), (1, b)]).is_err());
    }

    proptest! {
        #[test]
        fn events_are_conserved(
            n_tx in 0usize..40,
            answers in prop::collection::vec((0u32..60, 0.0f64..5.0), 0..60),
        ) {
            let txs: Vec<TransmitEvent> = (0..n_tx as u32).map(|x| tx(x, 1.0)).collect();
            let rxs: Vec<ReceiveEvent> = answers.iter().map(|&(x, t)| rx(x, t)).collect();
            let m = match_events(&txs, &rxs, W).unwrap();
            prop_assert!(m.balances(txs.len(), rxs.len()));
            prop_assert!(m.data_points.iter().all(|d| d.t > 0.0));
        }
    }
}
