use std::time::{Duration, Instant};

use proptest::prelude::*;
use qbench_core::bench::Event;
use qbench_core::scene::builtin_scene;
use qbench_service::{
    fold_counts, replay, Command, EventBody, ServiceConfig, Session, SessionEvent, SessionStore,
};
use serde_json::Value;

fn session(name: &str, seed: u64) -> Session {
    Session::new(
        "s",
        builtin_scene(name).unwrap(),
        seed,
        &ServiceConfig::default(),
    )
    .unwrap()
}

#[test]
fn fresh_session_has_zero_counts_and_one_event() {
    let s = session("heralded", 1);
    let st = s.state();
    assert_eq!(st.sequence, 1);
    assert!(st.counts.per_detector.values().all(|&n| n == 0));
    assert!(matches!(
        s.events_after(0)[0].body,
        EventBody::Session(SessionEvent::SessionCreated { .. })
    ));
}

#[test]
fn single_shot_on_gate_scene_crosses_three_plates() {
    let mut s = session("single-qubit-gate", 3);
    s.fire(1).unwrap();
    let plates = s
        .events_after(0)
        .iter()
        .filter(|e| matches!(e.body, EventBody::Shot(Event::PlateCrossed { .. })))
        .count();
    assert_eq!(plates, 3);
}

#[test]
fn counts_equal_folded_events_at_every_fire() {
    let mut s = session("projective-measurement", 5);
    s.set_param("hwp1", "angle", Value::from(22.5), false)
        .unwrap();
    for shots in [1, 100, 49, 1000] {
        s.fire(shots).unwrap();
        let folded = fold_counts(&s.state().scene.detectors, s.events_after(0));
        assert_eq!(folded, s.state().counts.per_detector);
    }
    assert_eq!(s.state().shots_fired, 1150);
    assert_eq!(s.state().counts.shots, 1150);
}

#[test]
fn cnot_shots_carry_a_herald_verdict() {
    let mut s = session("heralded-cnot", 8);
    s.fire(20).unwrap();
    let heralds = s
        .events_after(0)
        .iter()
        .filter(|e| matches!(e.body, EventBody::Shot(Event::Herald { .. })))
        .count();
    assert_eq!(heralds, 20);
}

#[test]
fn interactive_angles_snap_to_the_step() {
    let mut s = session("single-qubit-gate", 1);
    assert_eq!(
        s.set_param("hwp1", "angle", Value::from(23.0), true)
            .unwrap(),
        Value::from(25.0)
    );
    assert_eq!(
        s.set_param("hwp1", "angle", Value::from(22.5), false)
            .unwrap(),
        Value::from(22.5)
    );
    assert!(s
        .set_param("nope", "angle", Value::from(1.0), true)
        .is_err());
    assert!(s
        .set_param("hwp1", "colour", Value::from(1.0), false)
        .is_err());
    // failed commands leave no trace
    assert_eq!(s.log().commands.len(), 2);
    assert_eq!(s.sequence(), 3);
}

#[test]
fn zero_shots_are_rejected() {
    let mut s = session("heralded", 1);
    assert!(s.fire(0).is_err());
    assert_eq!(s.sequence(), 1);
}

#[test]
fn sessions_are_isolated() {
    let mut a = session("single-qubit-gate", 1);
    let b = session("single-qubit-gate", 1);
    a.set_param("qwp1", "angle", Value::from(30.0), false)
        .unwrap();
    assert_ne!(a.state().scene, b.state().scene);
    assert_eq!(b.state().scene, builtin_scene("single-qubit-gate").unwrap());
}

#[test]
fn events_after_resumes_at_next_sequence() {
    let mut s = session("heralded", 2);
    s.fire(10).unwrap();
    let all = s.events_after(0);
    for (i, e) in all.iter().enumerate() {
        assert_eq!(e.seq, i as u64 + 1);
    }
    assert_eq!(s.events_after(4)[0].seq, 5);
    assert!(s.events_after(s.sequence()).is_empty());
}

#[test]
fn idle_sessions_expire() {
    let store = SessionStore::new(ServiceConfig {
        idle_timeout: Duration::from_secs(60),
        ..ServiceConfig::default()
    });
    store.insert(session("heralded", 1));
    assert_eq!(store.expire_idle(Instant::now()), 0);
    assert_eq!(
        store.expire_idle(Instant::now() + Duration::from_secs(61)),
        1
    );
    assert!(store.is_empty());
}

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        (1u64..120).prop_map(|shots| Command::Fire { shots }),
        (
            prop::sample::select(vec!["qwp1", "hwp1", "qwp2", "qwp_analysis", "hwp_analysis"]),
            0.0f64..180.0,
            any::<bool>()
        )
            .prop_map(|(c, a, interactive)| Command::SetParam {
                component: c.into(),
                param: "angle".into(),
                value: Value::from(a),
                interactive,
            }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn replaying_the_log_reproduces_the_stream(seed in any::<u64>(), cmds in prop::collection::vec(command(), 1..8)) {
        let mut s = session("projective-measurement", seed);
        for c in &cmds {
            s.apply(c).unwrap();
        }
        let log = s.log();
        let text = serde_json::to_string(&log).unwrap();
        let again = replay("r", &serde_json::from_str(&text).unwrap(), &ServiceConfig::default()).unwrap();
        let a = serde_json::to_string(s.events_after(0)).unwrap();
        let b = serde_json::to_string(again.events_after(0)).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(fold_counts(&again.state().scene.detectors, again.events_after(0)), again.state().counts.per_detector);
    }
}
