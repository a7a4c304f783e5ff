//! Acceptance checks, one PASS/FAIL line each. Runs without a test harness:
//! `cargo test -p skijudge-verify --test acceptance`.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skijudge_core::jumpcode::{FlipElement, Position};
use skijudge_core::metrics::{rl2, srcc, ScoreSeries};
use skijudge_core::rulebook::{
    degrees_early, degrees_late, early_start_deduction, form_deviation_deduction, form_table, landing_deductions,
    late_finish_deduction, takeoff_technical_score, Contact, FormCategory, FormDeviation, LandingFlag,
    LandingObservation, TakeoffObservation, TakeoffPosture, TimingKind, TwistTimingEvent,
};
use skijudge_core::scoring::{
    aggregate_panel, score_trace, DatasetRecord, ExecutionTrace, JudgeScore, StageBoundaries,
};
use skijudge_core::simulator::{default_roster, simulate_competition, SimConfig};
use skijudge_core::{format, parse, Dd, DifficultyCatalog, FinalScore, Gender, JumpCode, RuleConfig, Tenths};
use skijudge_service::log::parse_events;
use skijudge_service::{replay, DeclareJump, EventLog, FormObservation, Observation, Store};

const DD_RUNTIME_LIMIT: Duration = Duration::from_secs(1);
const FUZZ_RUNTIME_LIMIT: Duration = Duration::from_secs(30);
const SIM_RUNTIME_LIMIT: Duration = Duration::from_secs(10);
const SRCC_TOLERANCE: f64 = 1e-12;

/// Degree-of-difficulty chart as printed: code, men, women (thousandths, or
/// ten-thousandths where four digits are printed), circles.
const PRINTED_DD: [(&str, &str, &str, usize); 40] = [
    ("bT", "2.000", "2.000", 1),
    ("bP", "2.000", "2.000", 1),
    ("bL", "2.050", "2.050", 1),
    ("bF", "2.300", "2.300", 1),
    ("bdF", "2.900", "2.900", 1),
    ("bTT", "2.300", "2.300", 2),
    ("bLT", "2.600", "2.600", 2),
    ("bLL", "2.650", "2.650", 2),
    ("bFT", "2.850", "2.850", 2),
    ("bLF", "2.900", "2.900", 2),
    ("bFF", "3.150", "3.150", 2),
    ("bdFT", "3.225", "3.225", 2),
    ("bLdF", "3.275", "3.275", 2),
    ("bdFF", "3.525", "3.525", 2),
    ("bFdF", "3.525", "3.525", 2),
    ("bLtF", "3.750", "3.750", 2),
    ("bdFdF", "3.900", "3.900", 2),
    ("bFtF", "4.000", "4.000", 2),
    ("btFF", "4.000", "4.000", 2),
    ("bLTT", "3.200", "3.392", 3),
    ("bLFT", "3.500", "3.710", 3),
    ("bLPF", "3.500", "3.710", 3),
    ("bLTF", "3.500", "3.710", 3),
    ("bFTF", "3.750", "3.975", 3),
    ("bLFF", "3.800", "4.028", 3),
    ("bFFF", "4.050", "4.293", 3),
    ("bLdFF", "4.175", "4.425", 3),
    ("bLFdF", "4.275", "4.531", 3),
    ("bFdFT", "4.125", "4.373", 3),
    ("bFdFF", "4.425", "4.690", 3),
    ("bdFFF", "4.525", "4.796", 3),
    ("bFFdF", "4.525", "4.796", 3),
    ("bLtFF", "4.650", "4.929", 3),
    ("bdFFdF", "5.000", "5.300", 3),
    ("bdFdFF", "5.100", "5.406", 3),
    ("bFdFdF", "5.100", "5.406", 3),
    ("bFtFF", "5.200", "5.512", 3),
    ("bFFtF", "5.300", "5.618", 3),
    ("bdFdFdF", "5.675", "6.0155", 3),
    ("bFtFdF", "5.775", "6.1215", 3),
];

type Check = Result<String, String>;
type Curve = Box<dyn Fn(f64) -> Tenths>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Decimal text to ten-thousandths, written out here rather than borrowed
/// from the library's parser.
fn tt(text: &str) -> u32 {
    let (int, frac) = text.split_once('.').unwrap();
    let frac = format!("{frac:0<4}");
    int.parse::<u32>().unwrap() * 10_000 + frac.parse::<u32>().unwrap()
}

fn dd_fidelity() -> Check {
    let start = Instant::now();
    let catalog = DifficultyCatalog::official();
    ensure(catalog.len() == PRINTED_DD.len(), || format!("{} rows loaded, {} printed", catalog.len(), PRINTED_DD.len()))?;
    for (code, men, women, circles) in PRINTED_DD {
        let entry = catalog.get(code).ok_or_else(|| format!("{code} missing"))?;
        ensure(entry.circles == circles, || format!("{code}: {} circles, printed under {circles}", entry.circles))?;
        for (gender, printed) in [(Gender::Men, men), (Gender::Women, women)] {
            let got = catalog.lookup_dd(code, gender).map_err(|e| format!("{code}: {e}"))?;
            ensure(got.ten_thousandths() == tt(printed), || format!("{code} {gender}: {got} != {printed}"))?;
        }
    }
    let spot = [
        ("bT", Gender::Men, "2.0000"),
        ("bFF", Gender::Men, "3.1500"),
        ("bdFFdF", Gender::Men, "5.0000"),
        ("bdFFdF", Gender::Women, "5.3000"),
        ("bFtFdF", Gender::Women, "6.1215"),
    ];
    for (code, gender, want) in spot {
        let got = catalog.lookup_dd(code, gender).unwrap().to_string();
        ensure(got == want, || format!("{code} {gender}: {got} != {want}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < DD_RUNTIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{} rows x 2 genders exact, {} spot values, {elapsed:.1?}", PRINTED_DD.len(), spot.len()))
}

fn dd_ratio() -> Check {
    let catalog = DifficultyCatalog::official();
    let mut three = 0;
    let mut bad = Vec::new();
    for entry in catalog.entries() {
        let men = entry.dd(Gender::Men).ten_thousandths();
        let women = entry.dd(Gender::Women).ten_thousandths();
        let expected = if entry.circles == 3 {
            three += 1;
            // 1.06 x men at ten-thousandth precision, ties away from zero
            (u64::from(men) * 106 + 50) / 100
        } else {
            u64::from(men)
        };
        if u64::from(women) != expected {
            bad.push(format!("{} {} != {}", entry.code, Dd(women), Dd(expected as u32)));
        }
    }
    ensure(three == 21, || format!("{three} three-circle rows, expected 21"))?;
    ensure(bad.is_empty(), || format!("{} rows differ from the rule: {}", bad.len(), bad.join(", ")))?;
    Ok(format!("{three} three-circle rows scale by 1.06, others equal"))
}

const ALPHABET: [char; 7] = ['b', 't', 'd', 'F', 'T', 'P', 'L'];
const TOKENS: [(&str, Position, u8); 6] = [
    ("T", Position::Tuck, 0),
    ("P", Position::Pike, 0),
    ("L", Position::Lay, 0),
    ("F", Position::Lay, 1),
    ("dF", Position::Lay, 2),
    ("tF", Position::Lay, 3),
];

fn segmentations(rest: &str) -> Vec<Vec<FlipElement>> {
    if rest.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (tok, position, twists) in TOKENS {
        if let Some(tail) = rest.strip_prefix(tok) {
            for mut seg in segmentations(tail) {
                seg.insert(0, FlipElement::new(position, twists).unwrap());
                out.push(seg);
            }
        }
    }
    out
}

fn parser_round_trip() -> Check {
    let catalog = DifficultyCatalog::official();
    for entry in catalog.entries() {
        let code = parse(&entry.code).map_err(|e| format!("{}: {e}", entry.code))?;
        ensure(format(&code) == entry.code, || format!("{} formats as {}", entry.code, format(&code)))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=3);
        let text: String = std::iter::once("b")
            .chain((0..n).map(|_| TOKENS[rng.random_range(0..TOKENS.len())].0))
            .collect();
        let code: JumpCode = parse(&text).map_err(|e| format!("{text}: {e}"))?;
        ensure(format(&code) == text, || format!("{text} formats as {}", format(&code)))?;
        ensure(parse(&format(&code)).as_ref() == Ok(&code), || format!("{text} does not reparse"))?;
    }

    let mut strings = 0usize;
    let mut accepted = 0usize;
    let mut buf = String::new();
    for len in 0..=8u32 {
        for mut n in 0..7usize.pow(len) {
            buf.clear();
            for _ in 0..len {
                buf.push(ALPHABET[n % 7]);
                n /= 7;
            }
            strings += 1;
            let all: Vec<_> = match buf.strip_prefix('b') {
                Some(rest) => segmentations(rest).into_iter().filter(|s| (1..=3).contains(&s.len())).collect(),
                None => vec![],
            };
            ensure(all.len() <= 1, || format!("{buf:?} has {} tokenizations", all.len()))?;
            match (parse(&buf), all.first()) {
                (Ok(code), Some(seg)) => {
                    ensure(code.flips() == seg.as_slice(), || format!("{buf:?}: greedy and exhaustive differ"))?;
                    accepted += 1;
                }
                (Err(_), None) => {}
                (Ok(_), None) => return Err(format!("{buf:?} accepted but has no tokenization")),
                (Err(e), Some(_)) => return Err(format!("{buf:?} rejected ({e}) but tokenizes")),
            }
        }
    }
    Ok(format!(
        "{} catalog codes, 10000 random codes, {strings} strings up to length 8 ({accepted} valid)",
        catalog.len()
    ))
}

fn rulebook_anchors() -> Check {
    let rules = RuleConfig::default();
    let takeoff = TakeoffObservation {
        posture: TakeoffPosture::BodyLeg,
        deviation_deg: 20.0,
        missed: false,
        instrument_hd: 1.0,
    };
    let t = takeoff_technical_score(&takeoff, &rules);
    ensure(t == Tenths(9), || format!("BodyLeg 20 deg take-off scored {t}"))?;

    for start in [180.0, 200.0, 270.0] {
        let (p, _) = early_start_deduction(degrees_early(start), &rules);
        ensure(p == Tenths::ZERO, || format!("early start at {start} deg costs {p}"))?;
    }
    let (p, _) = late_finish_deduction(2, degrees_late(2, 315.0).unwrap(), &rules).unwrap();
    ensure(p == Tenths::ZERO, || format!("double finishing at 315 deg costs {p}"))?;

    for (contact, cap) in [(Contact::Hand, Tenths(20)), (Contact::Body, Tenths(15))] {
        let got = landing_deductions(&LandingObservation { contact, flags: BTreeSet::new() }, &rules).cap;
        ensure(got == cap, || format!("{contact:?} contact caps landing at {got}"))?;
    }

    for bend in [45.5, 46.0, 90.0, 180.0] {
        let (p, _) = form_deviation_deduction(&FormDeviation::landing_prep(bend, 3.0), &rules);
        ensure(p == Tenths(2), || format!("landing-prep waist bend {bend} deg costs {p}"))?;
    }
    let (p, _) = form_deviation_deduction(&FormDeviation::landing_prep(45.0, 3.0), &rules);
    ensure(p == Tenths::ZERO, || format!("landing-prep waist bend 45 deg costs {p}"))?;
    Ok("take-off 0.9, early start 0.0, double finish 0.0, caps 2.0/1.5, landing prep 0.2".into())
}

fn monotonicity() -> Check {
    let rules = RuleConfig::default();
    let mut curves: Vec<(String, Curve)> = Vec::new();
    for (posture, name) in [
        (TakeoffPosture::BodyLeg, "body_leg"),
        (TakeoffPosture::BodyArch, "body_arch"),
        (TakeoffPosture::BodyPike, "body_pike"),
    ] {
        let rules = rules.clone();
        curves.push((
            format!("take-off {name}"),
            Box::new(move |a| {
                let obs = TakeoffObservation {
                    posture,
                    deviation_deg: a,
                    missed: false,
                    instrument_hd: 1.0,
                };
                Tenths(10 - takeoff_technical_score(&obs, &rules).get())
            }),
        ));
    }
    let r = rules.clone();
    curves.push(("early start".into(), Box::new(move |a| early_start_deduction(a, &r).0)));
    for circles in [2, 3] {
        let r = rules.clone();
        curves.push((
            format!("late finish {circles}"),
            Box::new(move |a| late_finish_deduction(circles, a, &r).unwrap().0),
        ));
    }
    for category in FormCategory::ALL {
        let r = rules.clone();
        curves.push((
            format!("form {category:?}"),
            Box::new(move |a| form_table(category, &r).evaluate(a).0),
        ));
    }
    let r = rules.clone();
    curves.push((
        "landing prep".into(),
        Box::new(move |a| form_deviation_deduction(&FormDeviation::landing_prep(a, 3.0), &r).0),
    ));

    for (name, curve) in &curves {
        let mut previous = Tenths::ZERO;
        for deg in 0..=180 {
            let p = curve(f64::from(deg));
            // Tenths is an integer count of 0.1, so every output is a multiple of 0.1
            ensure(p.get() >= 0, || format!("{name}: negative {p} at {deg} deg"))?;
            ensure(p >= previous, || format!("{name}: {p} at {deg} deg after {previous}"))?;
            ensure((p.as_points() * 10.0 - f64::from(p.get())).abs() < 1e-9, || format!("{name}: {p} off grid"))?;
            previous = p;
        }
    }
    Ok(format!("{} curves non-decreasing over 0..=180 deg in 1 deg steps", curves.len()))
}

fn random_trace(rng: &mut ChaCha8Rng, codes: &[String]) -> ExecutionTrace {
    let code = parse(&codes[rng.random_range(0..codes.len())]).unwrap();
    let flips = code.flip_count();
    let gender = if rng.random_bool(0.5) { Gender::Men } else { Gender::Women };
    let mut t = ExecutionTrace::clean(code, gender);
    let postures = [TakeoffPosture::BodyLeg, TakeoffPosture::BodyArch, TakeoffPosture::BodyPike];
    t.takeoff = TakeoffObservation {
        posture: postures[rng.random_range(0..3)],
        deviation_deg: rng.random_range(0.0..=180.0),
        missed: rng.random_bool(0.05),
        instrument_hd: rng.random_range(0.0..=1.0),
    };
    if flips >= 2 {
        for _ in 0..rng.random_range(0..=2 * flips) {
            t.timing_events.push(TwistTimingEvent {
                flip_index: rng.random_range(1..=flips),
                kind: if rng.random_bool(0.5) { TimingKind::EarlyStart } else { TimingKind::LateFinish },
                degrees_offset: rng.random_range(0.0..=180.0),
            });
        }
    }
    let form = t.boundaries.form;
    for _ in 0..rng.random_range(0..=12) {
        let at = rng.random_range(form.start..=form.end);
        let dev = if rng.random_bool(0.1) {
            FormDeviation::landing_prep(rng.random_range(0.0..=180.0), at)
        } else {
            FormDeviation::new(FormCategory::ALL[rng.random_range(0..7)], rng.random_range(0.0..=180.0), at)
        };
        t.form_deviations.push(dev);
    }
    let flags = [LandingFlag::SevereImbalance, LandingFlag::Sideways, LandingFlag::Circling, LandingFlag::Backward];
    t.landing = LandingObservation {
        contact: [Contact::None, Contact::Hand, Contact::Body][rng.random_range(0..3)],
        flags: flags.into_iter().filter(|_| rng.random_bool(0.3)).collect(),
    };
    t.separation_shown = rng.random_bool(0.8);
    t
}

fn bounds_fuzz() -> Check {
    let start = Instant::now();
    let rules = RuleConfig::default();
    let codes: Vec<String> = DifficultyCatalog::official().entries().map(|e| e.code.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    for i in 0..10_000 {
        let trace = random_trace(&mut rng, &codes);
        let s = score_trace(&trace, &rules).map_err(|e| format!("trace {i}: {e}"))?;
        let within = |v: Tenths, cap: i32| (0..=cap).contains(&v.get());
        ensure(within(s.air, 20) && within(s.form, 50) && within(s.landing, 30) && within(s.total, 100), || {
            format!("trace {i}: air {} form {} landing {} total {}", s.air, s.form, s.landing, s.total)
        })?;
        ensure(s.total.get() == s.air.get() + s.form.get() + s.landing.get(), || format!("trace {i}: total is not the stage sum"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < FUZZ_RUNTIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("10000 random traces inside 2.0/5.0/3.0 and [0, 10], {elapsed:.1?}"))
}

fn judge(total: i32) -> JudgeScore {
    let air = total.min(20);
    let form = (total - air).min(50);
    JudgeScore {
        air: Tenths(air),
        form: Tenths(form),
        landing: Tenths(total - air - form),
        total: Tenths(total),
        deductions: Vec::new(),
    }
}

fn trimmed_mean() -> Check {
    let dd = Dd(53000);
    let grid: Vec<i32> = (0..=20).map(|k| k * 5).collect();
    let mut tuples = 0u64;
    let mut marks = [0i32; 5];
    let mut idx = [0usize; 5];
    loop {
        for (m, i) in marks.iter_mut().zip(idx) {
            *m = grid[i];
        }
        let scores: Vec<JudgeScore> = marks.iter().map(|&m| judge(m)).collect();
        let panel = aggregate_panel(&scores, dd).map_err(|e| e.to_string())?;
        let mut sorted = marks;
        sorted.sort_unstable();
        let kept: i64 = sorted[1..4].iter().map(|&v| i64::from(v)).sum();
        // final in hundredths: kept tenths x dd ten-thousandths / 3 / 100 / 10, half-even
        let num = kept * 53000;
        let den = 3000i64;
        let (q, r) = (num / den, num % den);
        let want = if 2 * r > den || (2 * r == den && q % 2 == 1) { q + 1 } else { q };
        ensure(panel.final_score == FinalScore(want), || format!("{marks:?}: {} != {}", panel.final_score, FinalScore(want)))?;
        let kept_marks: i64 = panel.kept_indices.iter().map(|&i| i64::from(marks[i])).sum();
        ensure(kept_marks == kept, || format!("{marks:?}: kept judges {:?}", panel.kept_indices))?;
        tuples += 1;

        let mut k = 0;
        while k < 5 {
            idx[k] += 1;
            if idx[k] < grid.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == 5 {
            break;
        }
    }
    Ok(format!("{tuples} five-judge tuples on the 0.5 grid match sort-and-drop"))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

fn metrics_oracle() -> Check {
    let mut checked = 0;
    for n in 2..=6usize {
        let identity: Vec<f64> = (0..n).map(|i| i as f64).collect();
        for p in permutations(n) {
            let pred: Vec<f64> = p.iter().map(|&v| v as f64).collect();
            let d2: f64 = p.iter().enumerate().map(|(i, &v)| (i as f64 - v as f64).powi(2)).sum();
            let nf = n as f64;
            let want = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
            let series = ScoreSeries::new(pred, identity.clone(), (0.0, nf)).unwrap();
            let got = srcc(&series).map_err(|e| e.to_string())?;
            ensure((got - want).abs() <= SRCC_TOLERANCE, || format!("{p:?}: srcc {got} != {want}"))?;
            checked += 1;
        }
    }

    let perfect = ScoreSeries::new(vec![3.0, 7.0, 9.0], vec![3.0, 7.0, 9.0], (0.0, 10.0)).unwrap();
    ensure(rl2(&perfect) == 0.0, || "perfect predictions: rl2 not 0".into())?;
    let one_off = ScoreSeries::new(vec![9.0, 9.0], vec![10.0, 10.0], (0.0, 10.0)).unwrap();
    ensure((rl2(&one_off) - 1.0).abs() < 1e-12, || format!("gt 10 pred 9: rl2 {}", rl2(&one_off)))?;
    let base = ScoreSeries::new(vec![4.0, 6.0, 9.0], vec![5.0, 5.0, 8.0], (0.0, 10.0)).unwrap();
    let doubled = ScoreSeries::new(vec![3.0, 7.0, 10.0], vec![5.0, 5.0, 8.0], (0.0, 10.0)).unwrap();
    ensure((rl2(&doubled) - 4.0 * rl2(&base)).abs() < 1e-12, || "doubling errors does not quadruple rl2".into())?;

    let catalog = DifficultyCatalog::official();
    let rules = RuleConfig::default();
    let cfg = SimConfig { jump_count: 120, ..SimConfig::with_seed(11) };
    let jumps = simulate_competition(&cfg, &default_roster(11, cfg.athlete_count, &catalog), &catalog, &rules).map_err(|e| e.to_string())?;
    let finals: Vec<f64> = jumps.iter().map(|j| j.panel.final_score.as_f64()).collect();
    let series = ScoreSeries::new(finals.clone(), finals, (0.0, 10.0 * catalog.max_dd().as_f64())).unwrap();
    let s = srcc(&series).map_err(|e| e.to_string())?;
    ensure((s - 1.0).abs() <= SRCC_TOLERANCE && rl2(&series) == 0.0, || format!("perfect predictor: srcc {s}, rl2 {}", rl2(&series)))?;
    Ok(format!("{checked} permutations within 1e-12, rl2 cases exact, perfect predictor srcc 1.0 rl2 0.0"))
}

/// `skijudge simulate --seed 7 ...` through the same entry point as the binary.
fn simulate(dir: &Path, name: &str, extra: &[&str]) -> Result<(Vec<u8>, Vec<u8>, Duration), String> {
    let path = dir.join(name);
    let path = path.to_str().ok_or("temp path is not UTF-8")?;
    let mut args = vec!["skijudge", "simulate", "--seed", "7", "--out", path];
    args.extend(extra);
    let mut sink = Vec::new();
    let start = Instant::now();
    let code = skijudge_cli::execute(args, &mut sink);
    let elapsed = start.elapsed();
    ensure(code == 0, || format!("simulate exited with {code}"))?;
    let data = fs::read(dir.join(name)).map_err(|e| e.to_string())?;
    let manifest = fs::read(dir.join(format!("{name}.manifest.json"))).map_err(|e| e.to_string())?;
    Ok((data, manifest, elapsed))
}

fn simulator_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, ma, elapsed) = simulate(dir.path(), "a.jsonl", &["--jumps", "550"])?;
    let (b, mb, _) = simulate(dir.path(), "b.jsonl", &["--jumps", "550"])?;
    ensure(a == b, || "datasets differ".into())?;
    ensure(ma == mb, || "manifests differ".into())?;
    ensure(elapsed < SIM_RUNTIME_LIMIT, || format!("550 jumps took {elapsed:?}"))?;
    let catalog = DifficultyCatalog::official();
    let text = String::from_utf8(a).map_err(|e| e.to_string())?;
    let mut records = 0;
    for line in text.lines() {
        let record = DatasetRecord::from_line(line).map_err(|e| e.to_string())?;
        record.validate(Some(&catalog)).map_err(|e| e.to_string())?;
        records += 1;
    }
    ensure(records == 550, || format!("{records} records"))?;
    Ok(format!("byte-identical dataset and manifest, 550 schema-valid records in {elapsed:.1?}"))
}

/// Store operations for one jump: five judges, all stages, finalized.
fn session_ops() -> Vec<(u8, Option<Observation>)> {
    let mid = StageBoundaries::nominal(3).form.midpoint();
    let mut ops = Vec::new();
    for judge in 1..=5u8 {
        let j = f64::from(judge);
        ops.push((
            judge,
            Some(Observation::Air(TakeoffObservation {
                posture: TakeoffPosture::BodyLeg,
                deviation_deg: 12.0 + 4.0 * j,
                missed: false,
                instrument_hd: 0.8,
            })),
        ));
        ops.push((
            judge,
            Some(Observation::Form(FormObservation {
                timing_events: vec![TwistTimingEvent {
                    flip_index: 3,
                    kind: TimingKind::LateFinish,
                    degrees_offset: 10.0 * j,
                }],
                form_deviations: vec![FormDeviation::new(FormCategory::Foot, 5.0 * j, mid)],
                separation_shown: true,
            })),
        ));
        let flags = if judge == 2 { [LandingFlag::Sideways].into_iter().collect() } else { BTreeSet::new() };
        ops.push((judge, Some(Observation::Landing(LandingObservation { contact: Contact::None, flags }))));
        ops.push((judge, None));
    }
    ops
}

fn run_op(store: &Store, jump: &str, op: &(u8, Option<Observation>)) -> Result<(), String> {
    match &op.1 {
        Some(obs) => store.submit_observation(jump, op.0, obs.clone()).map(drop),
        None => store.finalize_judge(jump, op.0).map(drop),
    }
    .map_err(|e| e.to_string())
}

fn service_replay() -> Check {
    let rules = RuleConfig::default();
    let catalog = DifficultyCatalog::official();
    let open = |dir: &Path| Store::open(dir, rules.clone(), catalog.clone()).map_err(|e| e.to_string());
    let err = |e: skijudge_service::ServiceError| e.to_string();

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = open(dir.path())?;
    let comp = store.create_competition(None).map_err(err)?;
    let declare = || DeclareJump {
        athlete: "ana".into(),
        gender: Gender::Women,
        code: "bdFFdF".into(),
        stage_boundaries: None,
        sub_actions: None,
    };
    let (jump, dd) = store.declare_jump(&comp, declare()).map_err(err)?;
    let ops = session_ops();
    for op in &ops {
        run_op(&store, &jump, op)?;
    }
    let live = store.finalize_jump(&jump).map_err(err)?;
    drop(store);

    // offline: the same observations straight into the scorer
    let mut traces: Vec<ExecutionTrace> = (0..5).map(|_| ExecutionTrace::clean(parse("bdFFdF").unwrap(), Gender::Women)).collect();
    for (judge, obs) in &ops {
        let t = &mut traces[usize::from(*judge) - 1];
        match obs {
            Some(Observation::Air(o)) => t.takeoff = o.clone(),
            Some(Observation::Form(o)) => {
                t.timing_events = o.timing_events.clone();
                t.form_deviations = o.form_deviations.clone();
                t.separation_shown = o.separation_shown;
            }
            Some(Observation::Landing(o)) => t.landing = o.clone(),
            None => {}
        }
    }
    let scores = traces.iter().map(|t| score_trace(t, &rules)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let offline = aggregate_panel(&scores, dd).map_err(|e| e.to_string())?;

    let bytes = fs::read(EventLog::path_for(dir.path(), &comp)).map_err(|e| e.to_string())?;
    let events = parse_events(&bytes).map_err(err)?;
    let replayed = replay(&events, &rules).map_err(err)?.ok_or("empty log")?;
    let replayed_panel = replayed.jump(&jump).map_err(err)?.panel(&rules, Default::default()).map_err(err)?;
    ensure(live == offline && replayed_panel == offline, || {
        format!("live {} / replayed {} / offline {}", live.final_score, replayed_panel.final_score, offline.final_score)
    })?;

    // kill after every event (and halfway through writing the next one), restart, finish the session
    let ends: Vec<usize> = bytes.iter().enumerate().filter(|(_, b)| **b == b'\n').map(|(i, _)| i + 1).collect();
    let mut restarts = 0;
    for k in 1..=events.len() {
        let mut cuts = vec![ends[k - 1]];
        if k < events.len() {
            cuts.push((ends[k - 1] + ends[k]) / 2);
        }
        for cut in cuts {
            let crash = tempfile::tempdir().map_err(|e| e.to_string())?;
            fs::write(EventLog::path_for(crash.path(), &comp), &bytes[..cut]).map_err(|e| e.to_string())?;
            let store = open(crash.path())?;
            let state = store.state(&comp).map_err(err)?;
            let expected = replay(&events[..k], &rules).map_err(err)?.ok_or("empty prefix")?;
            ensure(state == expected, || format!("restart after event {k} (byte {cut}) lost state"))?;
            // events 1 and 2 create the competition and declare the jump; the rest follow `ops`
            if k == 1 {
                store.declare_jump(&comp, declare()).map_err(err)?;
            }
            for op in ops.iter().skip(k.saturating_sub(2)) {
                run_op(&store, &jump, op)?;
            }
            if k < events.len() {
                store.finalize_jump(&jump).map_err(err)?;
            }
            let resumed = store.jump(&jump).map_err(err)?.panel.ok_or("jump not finalized after resume")?;
            ensure(resumed == offline, || format!("resumed after event {k}: {} != {}", resumed.final_score, offline.final_score))?;
            restarts += 1;
        }
    }
    Ok(format!(
        "replay and offline both give {}, {restarts} crash points resumed to the same result",
        offline.final_score
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 10] = [
        ("dd catalog fidelity", dd_fidelity),
        ("dd ratio invariant", dd_ratio),
        ("parser round trip", parser_round_trip),
        ("rulebook anchors", rulebook_anchors),
        ("deduction monotonicity", monotonicity),
        ("score bounds fuzz", bounds_fuzz),
        ("trimmed-mean oracle", trimmed_mean),
        ("metrics oracle", metrics_oracle),
        ("simulator determinism", simulator_determinism),
        ("service replay", service_replay),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
