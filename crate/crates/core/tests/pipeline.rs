use condbayes::inference::{infer, PriorStore};
use condbayes::pipeline::{enumerate_candidates, initial_priors, run, run_iteration, PriorMode, RunOptions, Session};
use condbayes::synth::{generate, GeneratorModel};
use condbayes::Trace;

const MODEL: &str = r#"
states = ["Cruise", "Climb"]
transitions = [[0.95, 0.05], [0.1, 0.9]]

[[categorical]]
name = "phase"
emissions = [{ Cruise = 1.0 }, { Climb = 1.0 }]

[[categorical]]
name = "gear"
emissions = [{ Up = 0.9, Down = 0.1 }, { Up = 0.5, Down = 0.5 }]

[[plant]]
outcome = "stall"
given = { phase = "Climb" }
p = 0.3
q = 0.02
"#;

fn traces(n: u64) -> (GeneratorModel, Vec<(String, Trace)>) {
    let model = GeneratorModel::from_toml(MODEL).unwrap();
    let traces = (0..n).map(|i| (format!("t{i}"), generate(&model, 70 + i, 4_000).unwrap())).collect();
    (model, traces)
}

#[test]
fn saved_session_continues_like_an_uninterrupted_run() {
    let (model, traces) = traces(3);
    let spec = model.planted_spec(2);
    let set = enumerate_candidates(&spec).unwrap();
    let opts = RunOptions::default();
    let priors = initial_priors(&spec, &PriorMode::Uniform).unwrap();

    let mut whole = Session::new(&spec, priors.clone());
    let all = run(&set, &traces, &mut whole, &opts, |_, _| Ok(())).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.json");
    let mut first = Session::new(&spec, priors);
    run(&set, &traces[..1], &mut first, &opts, |_, s| s.save(&path)).unwrap();
    let mut resumed = Session::load(&path).unwrap();
    resumed.check_spec(&spec).unwrap();
    let rest = run(&set, &traces[1..], &mut resumed, &opts, |_, _| Ok(())).unwrap();

    assert_eq!(resumed, whole);
    let (a, b) = (all.last().unwrap(), rest.last().unwrap());
    let ids = |r: &condbayes::pipeline::IterationReport| r.ranked.iter().map(|i| i.id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(a), ids(b));
    for (x, y) in a.ranked.iter().zip(&b.ranked) {
        assert_eq!(x.result.posterior.to_bits(), y.result.posterior.to_bits());
        assert_eq!(x.surprise_history, y.surprise_history);
    }
}

#[test]
fn identical_traces_shift_only_through_the_prior() {
    let (model, traces) = traces(1);
    let spec = model.planted_spec(1);
    let set = enumerate_candidates(&spec).unwrap();
    let doubled = vec![traces[0].clone(), traces[0].clone()];
    let mut session = Session::new(&spec, initial_priors(&spec, &PriorMode::Uniform).unwrap());
    let reports = run(&set, &doubled, &mut session, &RunOptions::default(), |_, _| Ok(())).unwrap();
    let second = &reports[1];
    assert!(!second.ranked.is_empty());
    for inv in &second.ranked {
        assert_eq!(inv.surprise_history.len(), 2);
        let first = reports[0].ranked.iter().chain(&reports[0].pruned).find(|i| i.id == inv.id).unwrap();
        assert_eq!(first.result.counts, inv.result.counts);
        // Binary inference on the same counts reproduces both posteriors from their priors.
        let c = &inv.result.counts;
        if c.freq_o == c.n {
            continue;
        }
        let direct = c.freq_o_and_g as f64 / c.freq_g as f64;
        let after = infer(c, c.freq_o as f64 / c.n as f64).unwrap().posterior;
        assert!((after - direct).abs() < 1e-12);
        assert!((inv.result.prior - c.freq_o as f64 / c.n as f64).abs() < 1e-12, "{}", inv.id);
    }
}

#[test]
fn prior_store_round_trips_through_json() {
    let (model, traces) = traces(1);
    let spec = model.planted_spec(1);
    let store = initial_priors(&spec, &PriorMode::Empirical(vec![traces[0].1.clone()])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("priors.json");
    store.save(&path).unwrap();
    let back = PriorStore::load(&path).unwrap();
    assert_eq!(back, store);
    let mut session = Session::new(&spec, back);
    let set = enumerate_candidates(&spec).unwrap();
    let rep = run_iteration(&set, "t0", &traces[0].1, &mut session, &RunOptions::default()).unwrap();
    assert!(!rep.ranked.is_empty());
}
