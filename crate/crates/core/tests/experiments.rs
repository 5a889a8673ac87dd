use agog_core::config::ExperimentConfig;
use agog_core::harness::{render_outputs, run_experiment};
use agog_core::trace::read_csv;

const CFG: &str = r#"{
    "problem": {"kind": "quadratic", "n": 5, "m": 5, "a1_eigs": [0.5, 2],
                "a3_eigs": [0.5, 2], "a2_singular_values": [0.5, 3], "seed": 11},
    "algorithm": [{"name": "sagog"}, {"name": "sagog", "restart": {"fixed": 100}},
                  {"name": "seg", "restart_every": 50}, {"name": "agog", "restart": "theory"}],
    "run": {"query_budget": 600, "seeds": [0, 4, 9], "record_gap": true},
    "noise": {"kind": "additive", "sigma_h": 0.05, "sigma_f": 0.05}
}"#;

fn render_with_threads(n: usize) -> Vec<(String, String)> {
    let cfg = ExperimentConfig::from_json_str(CFG).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    pool.install(|| render_outputs(&cfg, &run_experiment(&cfg).unwrap()).unwrap())
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    assert_eq!(render_with_threads(1), render_with_threads(4));
}

#[test]
fn written_traces_read_back_exactly() {
    let cfg = ExperimentConfig::from_json_str(CFG).unwrap();
    let out = run_experiment(&cfg).unwrap();
    for run in &out.runs {
        let csv = run.result.trace.to_csv_string().unwrap();
        let back = read_csv(csv.as_bytes()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].rows, run.result.trace.rows);
        assert_eq!(back[0].metadata.algorithm, run.algorithm);
        assert!(run.result.trace.rows.last().unwrap().queries() <= 600);
    }
}
