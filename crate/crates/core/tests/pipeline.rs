use masa::commands::{cmd_eval, cmd_run, cmd_synth, RunConfig};
use masa::driver::baseline_assignment;
use masa::io::{read_assignment_csv, MotifsFile};
use masa::synth::SynthConfig;
use masa::timeseries::Hyperparameters;

fn synth(dir: &std::path::Path, seed: u64) {
    let cfg = SynthConfig {
        n_macro: 40,
        epsilon: 0.2,
        seed,
        ..SynthConfig::default()
    };
    cmd_synth(&cfg, dir).unwrap();
}

fn run(dir: &std::path::Path, out: &str, hp: Hyperparameters) -> masa::driver::MasaResult {
    cmd_run(&RunConfig {
        input: dir.join("data.csv"),
        output: dir.join(out),
        hyperparameters: hp,
        standardize: false,
    })
    .unwrap()
}

#[test]
fn gamma_one_returns_the_plain_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 4);
    let hp = Hyperparameters {
        gamma: 1.0,
        seed: 4,
        ..Hyperparameters::default()
    };
    let result = run(dir.path(), "out", hp.clone());
    assert!(result.motifs.is_empty());
    assert!(result.converged);
    let ts = masa::io::ingest_csv(&dir.path().join("data.csv"), false).unwrap();
    assert_eq!(result.assignment, baseline_assignment(&ts, &hp).unwrap());
    let motifs: MotifsFile =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/motifs.json")).unwrap()).unwrap();
    assert!(motifs.motifs.is_empty());
}

#[test]
fn outputs_are_consistent_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 2);
    let hp = Hyperparameters {
        seed: 2,
        max_iters: 6,
        ..Hyperparameters::default()
    };
    let result = run(dir.path(), "out", hp);
    let out = dir.path().join("out");

    for f in ["motifs.json", "model.json", "diagnostics.json"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let reparsed: serde_json::Value = serde_json::from_str(&serde_json::to_string_pretty(&v).unwrap()).unwrap();
        assert_eq!(v, reparsed, "{f}");
    }

    let rows = read_assignment_csv(&out.join("assignment.csv")).unwrap();
    assert_eq!(rows.len(), 6000);
    let labels: Vec<usize> = rows.iter().map(|r| r.state).collect();
    assert_eq!(labels, result.assignment.labels());

    let motifs: MotifsFile = serde_json::from_slice(&std::fs::read(out.join("motifs.json")).unwrap()).unwrap();
    let mut expected = vec![None; rows.len()];
    for m in &motifs.motifs {
        assert!(m.states.len() >= 3);
        assert!(m.instances.len() >= 10);
        for q in &m.instances {
            assert_eq!(q.end - q.start, q.durations.iter().sum::<usize>());
            for slot in &mut expected[q.start..q.end] {
                assert!(slot.is_none(), "overlapping instances");
                *slot = Some((m.id, q.id));
            }
        }
    }
    for (row, e) in rows.iter().zip(&expected) {
        assert_eq!(row.motif_id.zip(row.instance_id), *e);
    }
    let ranked: Vec<f64> = motifs.motifs.iter().map(|m| m.score).collect();
    assert!(ranked.windows(2).all(|w| w[0] >= w[1]));

    let diag: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["iterations"], result.iterations);
    assert_eq!(diag["history"].as_array().unwrap().len(), result.iterations);
    assert!(diag["wall_time_seconds"].as_f64().unwrap() >= 0.0);

    let metrics = cmd_eval(&out.join("assignment.csv"), &dir.path().join("truth.csv"), Some(&out.join("metrics.json"))).unwrap();
    let back: masa::metrics::Metrics = serde_json::from_slice(&std::fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(back, metrics);
}

#[test]
fn eval_rejects_length_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 1);
    std::fs::write(dir.path().join("short.csv"), "t,state,motif_id,instance_id\n0,1,,\n").unwrap();
    assert!(cmd_eval(&dir.path().join("short.csv"), &dir.path().join("truth.csv"), None).is_err());
}
