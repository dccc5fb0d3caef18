mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use common::{seeded, GenParams};
use geomsched::bench::{bench, bench_glob, read_csv, summarize, write_csv};
use geomsched::io::{parse_json, parse_psplib, read_instance, write_json, PsplibOptions};
use geomsched::mip::FormulationKind;
use geomsched::model::{Availability, JobId, SolveStatus};
use geomsched::pipeline::{RunConfig, SolverChoice};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/j301_1.sm")
}

#[test]
fn j30_file_by_hand() {
    let inst = read_instance(&fixture(), &PsplibOptions::default()).unwrap();
    assert_eq!(inst.n_jobs(), 32);
    assert_eq!(inst.n_resources(), 4);
    assert_eq!(inst.horizon, 158);
    assert_eq!(inst.rate, 0.001);
    let caps: Vec<f64> = inst
        .resources
        .iter()
        .map(|r| match r.availability {
            Availability::Constant(c) => c,
            Availability::Vector(_) => panic!("PSPLib profiles are constant"),
        })
        .collect();
    assert_eq!(caps, vec![12.0, 13.0, 4.0, 12.0]);
    for dummy in [&inst.jobs[0], &inst.jobs[31]] {
        assert_eq!(dummy.p, 0);
        assert!(dummy.demands.iter().all(|&q| q == 0.0));
        assert_eq!(dummy.profit, 0.0);
    }
    let j2 = &inst.jobs[1];
    assert_eq!((j2.p, j2.demands.clone(), j2.profit), (8, vec![4.0, 0.0, 0.0, 0.0], 1.0));
    assert_eq!(j2.preds, BTreeSet::from([JobId(1)]));
    // Job 1 lists successors 2, 3 and 4.
    for id in [2, 3, 4] {
        assert!(inst.jobs[id - 1].preds.contains(&JobId(1)));
    }
    assert_eq!(inst.jobs[5].preds, BTreeSet::from([JobId(2)]));
}

#[test]
fn j30_survives_json() {
    let text = std::fs::read_to_string(fixture()).unwrap();
    let inst = parse_psplib(&text, &PsplibOptions { profit_default: 2.5, ..PsplibOptions::default() }).unwrap();
    assert_eq!(parse_json(&write_json(&inst)).unwrap(), inst);
    assert_eq!(inst.jobs[1].profit, 2.5);
}

fn write_instances(dir: &Path, count: u64) {
    for seed in 0..count {
        let inst = seeded(seed, &GenParams::default());
        std::fs::write(dir.join(format!("inst{seed:02}.json")), write_json(&inst)).unwrap();
    }
}

#[test]
fn bench_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    write_instances(dir.path(), 6);
    let paths = bench_glob(&format!("{}/*.json", dir.path().display())).unwrap();
    let cfg = RunConfig::new(1.0, FormulationKind::AggAt, SolverChoice::BruteForce);
    let strip = |mut rows: Vec<geomsched::bench::BenchRow>| {
        for r in &mut rows {
            r.solve_seconds = None;
        }
        rows
    };
    let serial = strip(bench(&cfg, &paths, &[0.5, 1.0], 1).unwrap());
    let parallel = strip(bench(&cfg, &paths, &[0.5, 1.0], 4).unwrap());
    assert_eq!(serial, parallel);
    assert_eq!(serial.len(), 12);
    let names: Vec<(&str, f64)> = serial.iter().map(|r| (r.instance.as_str(), r.epsilon)).collect();
    let mut sorted = names.clone();
    sorted.sort_by(|a, b| a.0.cmp(b.0).then(a.1.total_cmp(&b.1)));
    assert_eq!(names, sorted);
}

#[test]
fn bench_rows_round_trip_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    write_instances(dir.path(), 3);
    std::fs::write(dir.path().join("broken.json"), "{").unwrap();
    let paths = bench_glob(&format!("{}/*.json", dir.path().display())).unwrap();
    let cfg = RunConfig::new(1.0, FormulationKind::AggAt, SolverChoice::BruteForce);
    let rows = bench(&cfg, &paths, &[0.5, 1.0], 2).unwrap();
    assert_eq!(rows.len(), 8);
    let broken: Vec<_> = rows.iter().filter(|r| r.instance == "broken").collect();
    assert_eq!(broken.len(), 2);
    assert!(broken.iter().all(|r| r.status == SolveStatus::Error && r.npv.is_none()));

    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);

    let summary = summarize(&rows);
    assert_eq!(summary.len(), 2);
    for s in &summary {
        assert_eq!((s.instances, s.solved), (4, 3));
    }
}
