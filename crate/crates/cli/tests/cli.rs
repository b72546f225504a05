use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_legendrian-lift"))
        .args(args)
        .env("LEGENDRIAN_LIFT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    let body: String = csv.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    csv::Reader::from_reader(body.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

fn parse_complex(s: &str) -> (f64, f64) {
    let body = s.trim_end_matches('i');
    let b = body.as_bytes();
    let split = (1..b.len())
        .find(|&i| (b[i] == b'+' || b[i] == b'-') && b[i - 1] != b'e')
        .unwrap();
    let (re, im) = body.split_at(split);
    (re.parse().unwrap(), im.parse().unwrap())
}

#[test]
fn selftest_passes_on_defaults() {
    let o = run(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = rows(&stdout(&o));
    assert_eq!(table.len(), 9);
    assert!(table.iter().all(|r| r[8] == "true"));
}

#[test]
fn holonomy_flips_the_sign() {
    let o = run(&["holonomy"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let header = out.lines().next().unwrap();
    assert!(header.starts_with("# {"));
    let json: serde_json::Value = serde_json::from_str(&header[2..]).unwrap();
    assert_eq!(json["experiment"], "holonomy");
    assert_eq!(json["seed"], 20240611);
    let row = rows(&out)
        .into_iter()
        .find(|r| r[6] == "C" && parse_complex(&r[7]) == (0.01, 0.0))
        .expect("row for x0 = 0.01 on C");
    let (re, im) = parse_complex(&row[8]);
    assert!((re + 0.01).abs() <= 1e-10 && im.abs() <= 1e-10, "{re} {im}");
}

#[test]
fn missing_p_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "[chart]\nQ = \"x/2\"\n").unwrap();
    let o = run(&["holonomy", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("chart.P"), "{}", stderr(&o));
}

#[test]
fn invalid_chart_is_a_config_error() {
    let o = run(&["displace", "--chart.P=0", "--chart.Q=0", "--run.r_list=[0.01]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("normal form"), "{}", stderr(&o));
}

#[test]
fn failed_hypothesis_is_named() {
    let o = run(&["accumulate", "--run.r=0.049", "--run.n=3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("r + |w| < delta"), "{}", stderr(&o));
}

#[test]
fn output_is_deterministic_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[chart]\nP = \"-y/2 + z^2/10\"\nQ = \"x/2 + x*z/20\"\ndelta = 0.05\n\n[run]\nr_list = [0.01, 0.005, 0.0025]\nw = \"0.005\"\n",
    )
    .unwrap();
    let target = dir.path().join("out.csv");
    let flag = format!("--output.path={}", target.display());
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = run(&["displace", "--config", cfg.to_str().unwrap(), &flag]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        runs.push(std::fs::read(&target).unwrap());
    }
    let (a, b) = (runs[0].clone(), runs[1].clone());
    assert!(a == b, "outputs differ");
    let text = String::from_utf8(a).unwrap();
    let table = rows(&text);
    assert_eq!(table.len(), 3);
    for row in &table {
        assert_eq!(row[0], "displace");
        assert!(!row[1].is_empty() && !row[2].is_empty() && !row[3].is_empty());
        let gap: f64 = row[10].parse().unwrap();
        assert!(gap <= 1e-5);
    }
}

#[test]
fn overrides_reach_the_experiment() {
    let o = run(&["gamma", "--run.r_list=[0.5]", "--run.samples=50"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = rows(&stdout(&o));
    assert_eq!(table.len(), 1);
    assert_eq!(table[0][1].parse::<f64>().unwrap(), 0.5);
}

#[test]
fn accumulate_reports_quadratic_decay() {
    let o = run(&["accumulate", "--run.n=6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = rows(&stdout(&o));
    assert_eq!(table.len(), 6);
    let gaps: Vec<f64> = table.iter().map(|r| r[11].parse().unwrap()).collect();
    for w in gaps.windows(2).skip(1) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }
}

#[test]
fn numerical_failure_exits_three() {
    let o = run(&["displace", "--run.r_list=[0.01]", "--chart.clamp=0.0101", "--run.w=0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("left the domain"), "{}", stderr(&o));
}
