mod common;

use common::fixture;
use raintank::cli::run;

fn exec(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("raintank").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn reliability_toy() {
    let (code, out, err) = exec(&["reliability", "--config", &path("toy.toml"), "--rain", &path("toy.csv")]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("66.7% (2/3)  Fair"), "{out}");
    assert!(err.contains("less than 5 years"), "{err}");
}

#[test]
fn reliability_json_is_deterministic() {
    let args = ["reliability", "--config", &path("toy.toml"), "--rain", &path("toy.csv"), "--json"];
    let (code, a, _) = exec(&args);
    let (_, b, _) = exec(&args);
    assert_eq!(code, 0);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["probability"], 0.6667);
    assert_eq!(v["label"], "Fair");
}

#[test]
fn reliability_trajectory_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("traj.csv");
    let (code, _, err) = exec(&[
        "reliability", "--config", &path("toy.toml"), "--rain", &path("toy.csv"),
        "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(out_path).unwrap();
    let ends: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(8).unwrap()).collect();
    assert_eq!(ends, vec!["20", "0", "70"]);
}

#[test]
fn forecast_two_year_toy() {
    let (code, out, err) = exec(&[
        "forecast", "--config", &path("toy.toml"), "--rain", &path("twoyear.csv"),
        "--start", "2023-06-01", "--water", "40", "--horizon", "3",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("66.7% (4/6)  Fair"), "{out}");
    assert!(out.contains("min end water 0 L"), "{out}");
}

#[test]
fn forecast_strategy_comparison_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cmp = dir.path().join("strategies.csv");
    let per_year = dir.path().join("years.csv");
    let (code, _, err) = exec(&[
        "forecast", "--config", &path("toy.toml"), "--rain", &path("twoyear.csv"),
        "--start", "2023-06-01", "--water", "40", "--horizon", "3",
        "--demand-override", "20", "--purchase", "50@0",
        "--out", per_year.to_str().unwrap(), "--compare-out", cmp.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(cmp).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "scenario,probability,label,success_days,demand_days,min_end_water_l");
    let names: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(names, vec!["baseline", "reduce-demand", "purchase", "combined"]);
    assert!(rows[4].starts_with("combined,1,VeryGood,6,6,"), "{}", rows[4]);
    let years = std::fs::read_to_string(per_year).unwrap();
    assert_eq!(years.lines().count(), 3);
}

#[test]
fn forecast_seeded_from_records() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.json");
    let r = records.to_str().unwrap();
    let (code, _, err) = exec(&["record", "add", "--config", &path("toy.toml"), "--records", r, "--date", "2023-05-31", "--water", "40"]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = exec(&[
        "forecast", "--config", &path("toy.toml"), "--rain", &path("twoyear.csv"),
        "--start", "2023-06-01", "--records", r, "--horizon", "3",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("using observation of 2023-05-31: 40 L"), "{err}");
    assert!(out.contains("(4/6)"), "{out}");
}

#[test]
fn sweep_writes_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("curve.csv");
    let (code, out, err) = exec(&[
        "sweep", "--config", &path("toy.toml"), "--rain", &path("toy.csv"),
        "--parameter", "tank", "--values", "10,50,100", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("optimum tank 50 L"), "{out}");
    let text = std::fs::read_to_string(out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "parameter_value,probability,label");
    assert_eq!(lines.len(), 4);
    let probs: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(probs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn runoff_comparison_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("runoff.csv");
    let (code, _, err) = exec(&[
        "sweep", "--config", &path("toy.toml"), "--rain", &path("toy.csv"),
        "--values", "50,100", "--k-values", "0.25,0.5", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(out_path).unwrap();
    assert_eq!(
        text,
        "runoff_coeff,parameter_value,probability,label\n\
         0.25,50,0.3333333333333333,Unlikely\n0.25,100,0.3333333333333333,Unlikely\n\
         0.5,50,0.6666666666666666,Fair\n0.5,100,0.6666666666666666,Fair\n"
    );
}

#[test]
fn variants_table() {
    let (code, out, err) = exec(&["variants", "--config", &path("toy.toml"), "--rain", &path("toy.csv")]);
    assert_eq!(code, 0, "{err}");
    for v in ["75", "100", "125"] {
        assert!(out.contains(v), "{out}");
    }
}

#[test]
fn fetch_from_fixture_into_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = [
        "fetch", "--lat", "26.56757", "--lon", "72.46754", "--from", "2022-01-01", "--to", "2022-01-03",
        "--fixture-dir", &path("provider"), "--cache-dir", cache.to_str().unwrap(),
    ];
    let (code, out, err) = exec(&args);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, format!("{}\n", std::fs::read_to_string(fixture("toy.csv")).unwrap()));
    let (code, again, err) = exec(&args);
    assert_eq!(code, 0);
    assert_eq!(again, out);
    assert!(err.contains("cache hit"), "{err}");
}

#[test]
fn record_add_and_list() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.json");
    let r = records.to_str().unwrap();
    let cfg = path("toy.toml");
    assert_eq!(exec(&["record", "add", "--config", &cfg, "--records", r, "--date", "2023-06-01", "--water", "80"]).0, 0);
    assert_eq!(
        exec(&["record", "add", "--config", &cfg, "--records", r, "--date", "2023-07-01", "--water", "20", "--not-potable", "--note", "murky"]).0,
        0
    );
    let (code, _, err) = exec(&["record", "add", "--config", &cfg, "--records", r, "--date", "2023-06-01", "--water", "10"]);
    assert_eq!(code, 1);
    assert!(err.contains("already exists"), "{err}");
    let (code, out, _) = exec(&["record", "list", "--config", &cfg, "--records", r]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2);
    assert!(out.contains("not potable  murky"), "{out}");
    let (_, out, _) = exec(&["record", "list", "--config", &cfg, "--records", r, "--from", "2023-06-15", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
}

#[test]
fn exit_codes() {
    let (code, _, err) = exec(&["reliability", "--bogus"]);
    assert_eq!(code, 2, "{err}");
    let (code, _, _) = exec(&["nonsense"]);
    assert_eq!(code, 2);
    let (code, _, err) = exec(&["reliability", "--config", "/nonexistent.toml", "--rain", &path("toy.csv")]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent.toml"), "{err}");
    let (code, _, err) = exec(&["forecast", "--config", &path("toy.toml"), "--rain", &path("toy.csv"), "--start", "2023-06-01"]);
    assert_eq!(code, 1);
    assert!(err.contains("--water"), "{err}");
    let (code, _, _) = exec(&["forecast", "--config", &path("toy.toml"), "--rain", &path("toy.csv"), "--start", "2023-06-01", "--water", "10", "--purchase", "oops"]);
    assert_eq!(code, 2);
    let (code, out, _) = exec(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("forecast"));
}

#[test]
fn gap_in_rain_file() {
    let dir = tempfile::tempdir().unwrap();
    let rain = dir.path().join("gappy.csv");
    std::fs::write(&rain, "date,rain_mm\n2022-01-01,10\n2022-01-03,20\n").unwrap();
    let (code, _, err) = exec(&["reliability", "--config", &path("toy.toml"), "--rain", rain.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("2022-01-02"), "{err}");
    let (code, _, err) = exec(&["reliability", "--config", &path("toy.toml"), "--rain", rain.to_str().unwrap(), "--fill-zero"]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("filled 1 missing day"), "{err}");
}
