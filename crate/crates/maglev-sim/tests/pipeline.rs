//! End-to-end pass through the public API: build a scenario in code,
//! run it, and check that the pieces agree with each other: the
//! telemetry against the event log, the dispatcher against the line
//! layout, the anomaly detector against a doctored current trace.

use maglev_sim::control::PIDGains;
use maglev_sim::dispatch::{assign_greedy, brute_force, route, CongestionMap, DispatchMover, Job};
use maglev_sim::dynamics::MoverState;
use maglev_sim::emfield::{gap_force, GapActuatorSpec, MagnetSpec, G_GRAV};
use maglev_sim::line::{LineEvent, MoverSpec, ScriptEntry, Station, TrackSegment};
use maglev_sim::scenario::{run_scenario, LineLayout, MotorConstants, Scenario};
use maglev_sim::telemetry::zscore_anomalies;

fn seg(id: &str, from: &str, to: &str, length: f64) -> TrackSegment {
    TrackSegment {
        id: id.into(),
        length,
        v_limit: 2.0,
        a_limit: 2.0,
        from_node: from.into(),
        to_node: to.into(),
    }
}

/// Two stations on a 10 m loop, one mover shuttling between them.
fn shuttle() -> Scenario {
    Scenario {
        line: LineLayout {
            segments: vec![seg("s_ab", "A", "B", 10.0), seg("s_ba", "B", "A", 10.0)],
            stations: vec![
                Station {
                    id: "sta_a".into(),
                    node: "A".into(),
                    process_time: 0.5,
                    name: "load".into(),
                },
                Station {
                    id: "sta_b".into(),
                    node: "B".into(),
                    process_time: 0.5,
                    name: "unload".into(),
                },
            ],
            movers: vec![MoverSpec {
                id: "m1".into(),
                home_node: "A".into(),
                initial: MoverState::new(0.0, 0.0, 1.0, 1e-3, 0.0, 0.0).unwrap(),
            }],
            min_headway: 1.0,
        },
        gains: PIDGains::new(8000.0, 9000.0, 55.0, -50.0, 50.0, 10.0).unwrap(),
        motor: MotorConstants {
            psi_d: 0.8,
            psi_q: 0.0,
            tau: 0.3,
        },
        magnet: MagnetSpec::new(1.2, 1e-5, 7500.0).unwrap(),
        actuator: GapActuatorSpec::new(100, 1e-4, 1e-3, 0.0).unwrap(),
        jobs: vec![],
        script: vec![
            ScriptEntry {
                t: 0.0,
                mover: "m1".into(),
                station: "sta_b".into(),
            },
            ScriptEntry {
                t: 7.0,
                mover: "m1".into(),
                station: "sta_a".into(),
            },
        ],
        rng_seed: 0,
        dt: 1e-3,
        t_end: 20.0,
    }
}

#[test]
fn scenario_json_round_trips() {
    let scenario = shuttle();
    let back = Scenario::from_json(&scenario.to_json()).unwrap();
    assert_eq!(back, scenario);
}

#[test]
fn run_telemetry_and_events_tell_the_same_story() {
    let scenario = shuttle();
    let out = run_scenario(&scenario).unwrap();

    assert_eq!(out.summary.jobs_completed, 2);
    let arrivals = out
        .events
        .iter()
        .filter(|e| matches!(e, LineEvent::Arrival { .. }))
        .count();
    assert_eq!(arrivals, 2);

    // the odometer must cover both 10 m legs
    let distance = out.summary.distance_traveled["m1"];
    assert!((distance - 20.0).abs() < 0.1, "odometer says {distance}");

    // every tagged record time matches an event time
    for record in out.records.iter().filter(|r| r.event.is_some()) {
        assert!(
            out.events.iter().any(|e| {
                let t = match e {
                    LineEvent::Arrival { t, .. }
                    | LineEvent::DwellComplete { t, .. }
                    | LineEvent::HeadwayIntervention { t, .. } => *t,
                };
                (t - record.t).abs() < 1e-12
            }),
            "tag {:?} at t = {} has no event",
            record.event,
            record.t
        );
    }

    // the synthesized hold current carries the mover's weight
    let first = &out.records[0];
    let held = gap_force(&GapActuatorSpec {
        current: first.lev_current,
        ..scenario.actuator
    });
    let weight = scenario.line.movers[0].initial.mass * G_GRAV;
    assert!((held - weight).abs() / weight < 1e-9);
}

#[test]
fn dispatcher_agrees_with_the_layout() {
    let scenario = shuttle();
    let config = scenario.line_config();
    let free = CongestionMap::default();

    // 10 m at v=2, a=2: 1 m accel + 8 m cruise + 1 m decel = 6 s
    let leg = route(&config, "A", "B", &free).unwrap().unwrap();
    assert_eq!(leg.segments, vec!["s_ab"]);
    assert!((leg.eta - 6.0).abs() < 1e-9);

    let movers = [DispatchMover {
        id: "m1".into(),
        node: "A".into(),
    }];
    let jobs = [
        Job::new("j1", "sta_b", 1.0, 0.0).unwrap(),
        Job::new("j2", "sta_a", 1.0, 0.0).unwrap(),
    ];
    let greedy = assign_greedy(&config, &movers, &jobs, &free).unwrap();
    let best = brute_force(&config, &movers, &jobs, &free).unwrap();
    assert!(greedy.makespan >= best.makespan - 1e-9);
    // serving the local station first wins: j2 at (0,1), 6 s to B,
    // j1 at (7,8)
    assert!((best.makespan - 8.0).abs() < 1e-9);
}

#[test]
fn doctored_current_trace_is_flagged() {
    let scenario = shuttle();
    let out = run_scenario(&scenario).unwrap();
    let mut lev: Vec<f64> = out.records.iter().map(|r| r.lev_current).collect();

    // the hold current is constant, so no sane window flags anything
    assert_eq!(zscore_anomalies(&lev, 50, 5.0).unwrap(), Vec::<usize>::new());

    // a dropout in the middle must be the only index flagged
    let k = lev.len() / 2;
    lev[k] = 0.0;
    assert_eq!(zscore_anomalies(&lev, 50, 5.0).unwrap(), vec![k]);
}
