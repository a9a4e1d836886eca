use std::collections::BTreeMap;

use nlplan_core::harness::{generate_missions, run_experiment, ExperimentConfig, ExperimentReport, Pipeline};
use nlplan_core::llmplanner::Variant;
use nlplan_core::sim::WorldMap;
use serde_json::Value;

const FI: Pipeline = Pipeline::Llm(Variant::Fi);

fn config(n: usize, variants: &[Pipeline]) -> ExperimentConfig {
    ExperimentConfig {
        mission_count: n,
        variants: variants.to_vec(),
        ..ExperimentConfig::default()
    }
}

fn events(trace: &str) -> Vec<Value> {
    trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn sim_events(trace: &str) -> Vec<Value> {
    events(trace).into_iter().filter(|e| e["event"] == "sim").collect()
}

fn euclid(map: &WorldMap, a: &str, b: &str) -> f64 {
    let (p, q) = (map.waypoints[a], map.waypoints[b]);
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Re-reads the CSV and recomputes every aggregate from the mission rows.
fn check_csv_aggregates(csv_text: &str) -> usize {
    let (rows, aggs) = csv_text.split_once("\n\n").expect("blank line before the aggregate block");
    let mut samples: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut reader = csv::Reader::from_reader(rows.as_bytes());
    let headers = reader.headers().unwrap().clone();
    for rec in reader.records() {
        let rec = rec.unwrap();
        for metric in ["elapsed_s", "llm_latency_s", "total_s", "distance_m"] {
            let col = headers.iter().position(|h| h == metric).unwrap();
            samples
                .entry((rec[0].to_string(), metric.to_string()))
                .or_default()
                .push(rec[col].parse().unwrap());
        }
    }
    let mut checked = 0;
    let mut reader = csv::Reader::from_reader(aggs.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["variant", "metric", "mean", "std", "min", "max", "sum"]);
    for rec in reader.records() {
        let rec = rec.unwrap();
        let xs = &samples[&(rec[0].to_string(), rec[1].to_string())];
        let n = xs.len() as f64;
        let mut sum = 0.0;
        for x in xs {
            sum += x;
        }
        let mean = sum / n;
        let min = xs.iter().cloned().fold(f64::MAX, f64::min);
        let max = xs.iter().cloned().fold(f64::MIN, f64::max);
        let close = |field: &str, want: f64| {
            let got: f64 = field.parse().unwrap();
            assert!((got - want).abs() <= 1e-9, "{}/{}: {got} vs {want}", &rec[0], &rec[1]);
        };
        close(&rec[2], mean);
        close(&rec[4], min);
        close(&rec[5], max);
        close(&rec[6], sum);
        if xs.len() > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            close(&rec[3], var.sqrt());
        } else {
            assert_eq!(&rec[3], "n/a");
        }
        assert!(min <= mean + 1e-12 && mean <= max + 1e-12);
        checked += 1;
    }
    checked
}

fn check_markdown(report: &ExperimentReport) {
    let md = report.to_markdown();
    for v in &report.variants {
        assert!(md.contains(&format!("## {}", v.pipeline)));
    }
    for label in ["Mean", "Std. Deviation", "Minimum", "Maximum", "Sum"] {
        assert_eq!(md.matches(&format!("| {label} |")).count(), report.variants.len(), "{label}");
    }
    assert!(md.contains("| | Execution Time (Seconds) | Traveled Distance (Meters) |"));
}

#[test]
fn desk_scale_experiments() {
    for (n, canceled) in [(6, 3), (20, 10)] {
        let report = run_experiment(&config(n, &Pipeline::ALL)).unwrap();
        assert!(!report.any_failed());
        for v in &report.variants {
            assert_eq!(v.missions.len(), n);
            assert_eq!(v.cancellations(), canceled, "{}", v.pipeline);
            for r in &v.missions {
                assert!(r.elapsed >= 0.0 && r.distance >= 0.0);
                if !r.cancel {
                    assert_eq!(r.outcome, "succeeded", "{} mission {}", v.pipeline, r.index);
                }
            }
        }
        assert_eq!(check_csv_aggregates(&report.to_csv().unwrap()), 5 * 4);
        check_markdown(&report);
    }
}

#[test]
fn written_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&config(6, &[Pipeline::Classic, FI])).unwrap();
    report.write_to(dir.path()).unwrap();
    let csv_text = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv_text, report.to_csv().unwrap());
    check_csv_aggregates(&csv_text);
    assert!(dir.path().join("report.md").exists());
    for v in ["classic", "FI"] {
        for i in 0..6 {
            let trace = std::fs::read_to_string(dir.path().join(format!("trace/{v}/mission_{i}.jsonl"))).unwrap();
            assert!(!events(&trace).is_empty());
        }
    }
}

#[test]
fn classic_reports_are_byte_identical_per_seed() {
    let a = run_experiment(&config(20, &[Pipeline::Classic])).unwrap();
    let b = run_experiment(&config(20, &[Pipeline::Classic])).unwrap();
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    assert_eq!(a.to_markdown(), b.to_markdown());
}

#[test]
fn classic_distance_is_the_sum_of_navigate_legs() {
    let cfg = config(20, &[Pipeline::Classic]);
    let report = run_experiment(&cfg).unwrap();
    let mut room = "entrance".to_string();
    let mut total = 0.0;
    for r in &report.variants[0].missions {
        let mut legs = 0.0;
        for e in sim_events(&r.trace) {
            let call = e["action"].as_str().unwrap().trim_matches(['(', ')']).to_string();
            let words: Vec<&str> = call.split_whitespace().collect();
            if words[0] == "navigate" {
                assert_eq!(words[2], room, "legs start where the robot is");
                let full = euclid(&cfg.map, words[2], words[3]);
                if e["status"] == "completed" {
                    assert!((e["distance"].as_f64().unwrap() - full).abs() < 1e-9);
                } else {
                    assert!(e["distance"].as_f64().unwrap() <= full + 1e-9);
                }
                legs += e["distance"].as_f64().unwrap();
            } else {
                assert_eq!(e["distance"].as_f64().unwrap(), 0.0, "greeting adds no distance");
            }
            room = e["robot_room"].as_str().unwrap().to_string();
        }
        assert!((legs - r.distance).abs() < 1e-9, "mission {}", r.index);
        total += legs;
    }
    let sum = report.variants[0].stats(nlplan_core::harness::Metric::Distance).sum;
    assert!((total - sum).abs() < 1e-9);
}

/// A map where the entrance-to-bathroom leg takes 16 s, so a cancel at 10 s
/// lands mid-leg, past the halfway point.
fn slow_map() -> WorldMap {
    WorldMap {
        robot_speed: 0.25,
        ..WorldMap::default()
    }
}

#[test]
fn cancellation_mid_leg_and_carry_over() {
    let seed = (0..10_000)
        .find(|&seed| {
            let m = generate_missions(&ExperimentConfig {
                mission_count: 2,
                seed,
                ..ExperimentConfig::default()
            });
            m[0].goal == nlplan_core::Goal::greeted("fran") && m[0].cancel
        })
        .unwrap();
    let cfg = ExperimentConfig {
        mission_count: 2,
        seed,
        map: slow_map(),
        variants: vec![Pipeline::Classic, FI],
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).unwrap();
    let leg = euclid(&cfg.map, "entrance", "bathroom");
    for v in &report.variants {
        let first = &v.missions[0];
        assert_eq!(first.outcome, "canceled", "{}", v.pipeline);
        assert!((first.elapsed - 10.0).abs() < 1e-9);
        assert!(first.distance > 0.0 && first.distance < leg, "partial, not the full leg");
        let last = sim_events(&first.trace).pop().unwrap();
        assert_eq!(last["status"], "canceled");
        assert_eq!(last["robot_room"], "bathroom", "2.5 of 4 m is past halfway");

        let second = &v.missions[1];
        let e = &sim_events(&second.trace)[0];
        let action = e["action"].as_str().unwrap();
        assert!(
            action.starts_with("(navigate rb1 bathroom ") || action == "(greet rb1 fran bathroom)",
            "{}: {action}",
            v.pipeline
        );
    }
}

#[test]
fn llm_delay_separates_time_but_not_distance() {
    let cfg = ExperimentConfig {
        llm_delay: 5.0,
        ..config(6, &[Pipeline::Classic, FI])
    };
    let report = run_experiment(&cfg).unwrap();
    let classic = report.variant(Pipeline::Classic).unwrap();
    let fi = report.variant(FI).unwrap();
    use nlplan_core::harness::Metric;
    assert!(fi.stats(Metric::Total).sum > classic.stats(Metric::Total).sum);
    for (c, f) in classic.missions.iter().zip(&fi.missions) {
        assert_eq!(c.distance, f.distance, "mission {}", c.index);
        assert_eq!(c.elapsed, f.elapsed, "mission {}", c.index);
        assert_eq!(c.outcome, f.outcome);
        assert!(f.llm_latency >= 5.0);
    }
}
