use decremental::io::{parse_graph, parse_trace};
use decremental::workload::{gen, run, RunParams};

#[test]
fn bundled_workload_is_clean_and_replayable() {
    let (g, t) = gen(1, 64, 192, 100).unwrap();
    let graph = parse_graph(&g).unwrap();
    let trace = parse_trace(&t).unwrap();
    for inv_eps in [2, 4, 10] {
        let params = RunParams { inv_eps, check_every: Some(10), ..Default::default() };
        let report = run(&graph, Some(&trace), None, &params).unwrap();
        assert_eq!(report.matches("op=delete").count(), 100);
        assert_eq!(report.matches("verdict=ok").count(), 10);
        assert!(report.contains("\nviolations=0\n"));
        assert_eq!(report, run(&graph, Some(&trace), None, &params).unwrap());
    }
}

#[test]
fn script_interleaves_with_trace() {
    let (g, t) = gen(9, 30, 60, 20).unwrap();
    let graph = parse_graph(&g).unwrap();
    let trace = parse_trace(&t).unwrap();
    let mut script = String::from("CHECK\n");
    for e in trace.iter().step_by(2) {
        script += &format!("D {} {}\nQS 29\nQA 0 29\n", e.u, e.v);
    }
    script += "CHECK\n";
    let report = run(&graph, Some(&trace), Some(&script), &RunParams::default()).unwrap();
    assert_eq!(report.matches("op=qs").count(), 10);
    assert_eq!(report.matches("verdict=ok").count(), 2);
}
