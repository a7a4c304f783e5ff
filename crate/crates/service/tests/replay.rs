use std::fs;
use std::path::Path;

use skijudge_core::rulebook::{
    Contact, FormCategory, FormDeviation, LandingFlag, LandingObservation, TakeoffObservation, TakeoffPosture,
    TimingKind, TwistTimingEvent,
};
use skijudge_core::scoring::{aggregate_panel, score_trace, ExecutionTrace, PanelResult};
use skijudge_core::{parse, DifficultyCatalog, Gender, RuleConfig};
use skijudge_service::log::parse_events;
use skijudge_service::{
    replay, CompetitionState, DeclareJump, Event, EventLog, FormObservation, Observation, ServiceError, Store,
};

fn store(dir: &Path) -> Store {
    Store::open(dir, RuleConfig::default(), DifficultyCatalog::official()).unwrap()
}

fn air(judge: u8) -> TakeoffObservation {
    TakeoffObservation {
        posture: TakeoffPosture::BodyLeg,
        deviation_deg: 14.0 + 3.0 * f64::from(judge),
        missed: false,
        instrument_hd: 0.84,
    }
}

fn form(judge: u8, mid: f64) -> FormObservation {
    FormObservation {
        timing_events: vec![TwistTimingEvent {
            flip_index: 3,
            kind: TimingKind::LateFinish,
            degrees_offset: 9.0 * f64::from(judge),
        }],
        form_deviations: vec![FormDeviation::new(FormCategory::Ski, 20.0 + 7.0 * f64::from(judge), mid)],
        separation_shown: true,
    }
}

fn landing(judge: u8) -> LandingObservation {
    LandingObservation {
        contact: if judge == 4 { Contact::Hand } else { Contact::None },
        flags: if judge == 2 { [LandingFlag::Sideways].into_iter().collect() } else { Default::default() },
    }
}

/// Operations of a recorded session, in order; each appends one event.
#[derive(Clone)]
enum Op {
    Declare(&'static str, &'static str, Gender),
    Observe(usize, u8, Observation),
    FinalizeJudge(usize, u8),
    FinalizeJump(usize),
}

fn session() -> Vec<Op> {
    let mid = skijudge_core::scoring::StageBoundaries::nominal(3).form.midpoint();
    let mut ops = vec![Op::Declare("ana", "bdFFdF", Gender::Women)];
    for judge in 1..=5 {
        ops.push(Op::Observe(1, judge, Observation::Air(air(judge))));
        ops.push(Op::Observe(1, judge, Observation::Form(form(judge, mid))));
        ops.push(Op::Observe(1, judge, Observation::Landing(landing(judge))));
    }
    // judge 3 corrects the take-off reading; the later set replaces the earlier one
    ops.push(Op::Observe(1, 3, Observation::Air(air(1))));
    for judge in 1..=5 {
        ops.push(Op::FinalizeJudge(1, judge));
    }
    ops.push(Op::FinalizeJump(1));
    ops.push(Op::Declare("bo", "bFF", Gender::Men));
    for judge in 1..=5 {
        ops.push(Op::Observe(2, judge, Observation::Air(air(judge))));
        ops.push(Op::Observe(2, judge, Observation::Form(FormObservation::default())));
        ops.push(Op::Observe(2, judge, Observation::Landing(LandingObservation::default())));
        ops.push(Op::FinalizeJudge(2, judge));
    }
    ops.push(Op::FinalizeJump(2));
    ops
}

fn run(store: &Store, comp: &str, op: &Op) -> Result<(), ServiceError> {
    let jump = |n: usize| format!("{comp}-j{n}");
    match op.clone() {
        Op::Declare(athlete, code, gender) => store
            .declare_jump(
                comp,
                DeclareJump {
                    athlete: athlete.into(),
                    gender,
                    code: code.into(),
                    stage_boundaries: None,
                    sub_actions: None,
                },
            )
            .map(drop),
        Op::Observe(n, judge, obs) => store.submit_observation(&jump(n), judge, obs).map(drop),
        Op::FinalizeJudge(n, judge) => store.finalize_judge(&jump(n), judge).map(drop),
        Op::FinalizeJump(n) => store.finalize_jump(&jump(n)).map(drop),
    }
}

fn record(dir: &Path) -> (String, Vec<u8>) {
    let s = store(dir);
    let comp = s.create_competition(Some("recorded".into())).unwrap();
    for op in session() {
        run(&s, &comp, &op).unwrap();
    }
    let bytes = fs::read(EventLog::path_for(dir, &comp)).unwrap();
    (comp, bytes)
}

/// The first jump scored offline, straight from the observations.
fn offline_panel() -> PanelResult {
    let rules = RuleConfig::default();
    let code = parse("bdFFdF").unwrap();
    let scores: Vec<_> = (1..=5u8)
        .map(|judge| {
            let mut t = ExecutionTrace::clean(code.clone(), Gender::Women);
            let mid = t.boundaries.form.midpoint();
            t.takeoff = if judge == 3 { air(1) } else { air(judge) };
            let f = form(judge, mid);
            t.timing_events = f.timing_events;
            t.form_deviations = f.form_deviations;
            t.landing = landing(judge);
            score_trace(&t, &rules).unwrap()
        })
        .collect();
    let dd = DifficultyCatalog::official().lookup_dd("bdFFdF", Gender::Women).unwrap();
    aggregate_panel(&scores, dd).unwrap()
}

#[test]
fn recorded_session_matches_offline_scoring() {
    let dir = tempfile::tempdir().unwrap();
    let (comp, bytes) = record(dir.path());
    let events = parse_events(&bytes).unwrap();
    assert_eq!(events.len(), 1 + session().len());

    let state = replay(&events, &RuleConfig::default()).unwrap().unwrap();
    let replayed = state.jump(&format!("{comp}-j1")).unwrap().panel(&RuleConfig::default(), Default::default()).unwrap();
    let offline = offline_panel();
    assert_eq!(replayed, offline);
    assert_eq!(serde_json::to_string(&replayed).unwrap(), serde_json::to_string(&offline).unwrap());

    let reopened = store(dir.path());
    let live = reopened.jump(&format!("{comp}-j1")).unwrap();
    assert_eq!(live.panel.unwrap(), offline);
    let board = reopened.leaderboard(&comp).unwrap();
    assert_eq!(board.len(), 2);
    assert!(board[0].best_final >= board[1].best_final);
}

#[test]
fn kill_between_any_two_events_loses_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (comp, bytes) = record(dir.path());
    let rules = RuleConfig::default();
    let events = parse_events(&bytes).unwrap();
    let ops = session();
    let line_ends: Vec<usize> = bytes.iter().enumerate().filter(|(_, b)| **b == b'\n').map(|(i, _)| i + 1).collect();
    let final_state = replay(&events, &rules).unwrap().unwrap();

    for k in 1..=events.len() {
        let cut = line_ends[k - 1];
        // a clean stop after event k, and a crash halfway through writing event k + 1
        let mut cuts = vec![cut];
        if k < events.len() {
            cuts.push(cut + (line_ends[k] - cut) / 2);
        }
        for at in cuts {
            let crash = tempfile::tempdir().unwrap();
            let path = EventLog::path_for(crash.path(), &comp);
            fs::write(&path, &bytes[..at]).unwrap();

            let restarted = store(crash.path());
            let expected = replay(&events[..k], &rules).unwrap().unwrap();
            assert_eq!(restarted.state(&comp).unwrap(), expected, "after event {k}, cut at byte {at}");
            assert_eq!(fs::read(&path).unwrap(), &bytes[..cut], "torn tail must be dropped");

            // resume the session where the log stops
            for op in &ops[k - 1..] {
                run(&restarted, &comp, op).unwrap();
            }
            assert_eq!(restarted.state(&comp).unwrap(), final_state, "resumed after event {k}");
        }
    }
}

#[test]
fn replay_is_deterministic_and_extends() {
    let dir = tempfile::tempdir().unwrap();
    let (_, bytes) = record(dir.path());
    let rules = RuleConfig::default();
    let events = parse_events(&bytes).unwrap();
    assert_eq!(replay(&[], &rules).unwrap(), None);
    for k in 1..events.len() {
        let mut state = replay(&events[..k], &rules).unwrap().unwrap();
        assert_eq!(Some(state.clone()), replay(&events[..k], &rules).unwrap());
        state.apply(&events[k], &rules).unwrap();
        assert_eq!(Some(state), replay(&events[..=k], &rules).unwrap());
    }
    for (i, e) in events.iter().enumerate() {
        assert_eq!(e.seq, i as u64 + 1);
    }
}

#[test]
fn empty_data_dir_is_an_empty_state() {
    let dir = tempfile::tempdir().unwrap();
    assert!(store(dir.path()).competition_ids().is_empty());
    // a log created but never written is discarded on restart
    fs::write(EventLog::path_for(dir.path(), "abc"), b"").unwrap();
    assert!(store(dir.path()).competition_ids().is_empty());
}

#[test]
fn corrupt_logs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (comp, bytes) = record(dir.path());
    let text = String::from_utf8(bytes).unwrap();
    let lines: Vec<&str> = text.lines().collect();

    let gap: String = lines.iter().enumerate().filter(|(i, _)| *i != 2).map(|(_, l)| format!("{l}\n")).collect();
    assert!(matches!(parse_events(gap.as_bytes()), Err(ServiceError::CorruptLog { line: 3, .. })));

    let mut garbled: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    garbled[4] = garbled[4].replacen('{', "{{", 1);
    let garbled = garbled.join("\n") + "\n";
    assert!(matches!(parse_events(garbled.as_bytes()), Err(ServiceError::CorruptLog { line: 5, .. })));

    let crash = tempfile::tempdir().unwrap();
    fs::write(EventLog::path_for(crash.path(), &comp), gap).unwrap();
    assert!(matches!(
        Store::open(crash.path(), RuleConfig::default(), DifficultyCatalog::official()),
        Err(ServiceError::CorruptLog { .. })
    ));
}

#[test]
fn state_machine_rules() {
    let dir = tempfile::tempdir().unwrap();
    let s = store(dir.path());
    let comp = s.create_competition(None).unwrap();
    let declare = |code: &str| {
        s.declare_jump(
            &comp,
            DeclareJump {
                athlete: "cy".into(),
                gender: Gender::Men,
                code: code.into(),
                stage_boundaries: None,
                sub_actions: None,
            },
        )
    };
    assert!(matches!(declare("bQ"), Err(ServiceError::Validation(_))));
    assert!(matches!(declare("bTTT"), Err(ServiceError::Validation(_))), "not in the catalog");
    let (jump, dd) = declare("bFF").unwrap();
    assert_eq!(jump, format!("{comp}-j1"));
    assert_eq!(dd.to_string(), "3.1500");

    let clean = Observation::Landing(LandingObservation::default());
    assert!(matches!(s.submit_observation(&format!("{comp}-j9"), 1, clean.clone()), Err(ServiceError::NotFound(_))));
    assert!(matches!(s.submit_observation("nope-j1", 1, clean.clone()), Err(ServiceError::NotFound(_))));
    assert!(matches!(s.submit_observation(&jump, 6, clean.clone()), Err(ServiceError::Validation(_))));
    assert!(matches!(s.finalize_judge(&jump, 1), Err(ServiceError::Validation(_))), "nothing observed yet");

    let bad = Observation::Form(FormObservation {
        timing_events: vec![TwistTimingEvent {
            flip_index: 4,
            kind: TimingKind::EarlyStart,
            degrees_offset: 10.0,
        }],
        ..FormObservation::default()
    });
    assert!(matches!(s.submit_observation(&jump, 1, bad), Err(ServiceError::Validation(_))));

    for judge in 1..=5 {
        s.submit_observation(&jump, judge, Observation::Air(TakeoffObservation::clean())).unwrap();
        s.submit_observation(&jump, judge, Observation::Form(FormObservation::default())).unwrap();
        s.submit_observation(&jump, judge, clean.clone()).unwrap();
    }
    assert!(matches!(s.finalize_jump(&jump), Err(ServiceError::Validation(_))), "judges pending");
    s.finalize_judge(&jump, 1).unwrap();
    assert!(matches!(s.finalize_judge(&jump, 1), Err(ServiceError::Conflict(_))));
    assert!(matches!(s.submit_observation(&jump, 1, clean.clone()), Err(ServiceError::Conflict(_))));
    for judge in 2..=5 {
        s.finalize_judge(&jump, judge).unwrap();
    }
    let panel = s.finalize_jump(&jump).unwrap();
    assert_eq!(panel.final_score.to_string(), "31.50");
    assert!(matches!(s.finalize_jump(&jump), Err(ServiceError::Conflict(_))));
    assert!(matches!(s.submit_observation(&jump, 2, clean), Err(ServiceError::Conflict(_))));

    // rejected requests never reach the log
    let state: CompetitionState = s.state(&comp).unwrap();
    let events: Vec<Event> = parse_events(&fs::read(EventLog::path_for(dir.path(), &comp)).unwrap()).unwrap();
    assert_eq!(state.last_seq, events.len() as u64);
    assert_eq!(events.len(), 1 + 1 + 15 + 5 + 1);
}
