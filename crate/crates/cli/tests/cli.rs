use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sensory(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensory")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(sensory(&["ca", "-i", "/no/such/file", "-o", s(&out)]).status.code(), Some(1));
    assert_eq!(sensory(&["frobnicate"]).status.code(), Some(1));
    let bad = write(tmp.path(), "bad.csv", "Product;NumPanel;A;B\nW1;1;0;2\n");
    let o = sensory(&["ca", "-i", &bad, "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.csv") && err.contains("line 2"), "{err}");
    // nothing cited: the table has no mass at all
    let empty = write(tmp.path(), "empty.csv", "Product;NumPanel;A;B\nW1;1;0;0\nW2;1;0;0\n");
    assert_eq!(sensory(&["ca", "-i", &empty, "-o", s(&out)]).status.code(), Some(2));
    // one product cited: a single active row is degenerate
    let one = write(tmp.path(), "one.csv", "Product;NumPanel;A;B\nW1;1;1;1\nW2;1;0;0\n");
    assert_eq!(sensory(&["ca", "-i", &one, "-o", s(&out)]).status.code(), Some(2));
    let flat = write(tmp.path(), "flat.csv", "Product;NumPanel;A;B;Score\nW1;1;1;0;5\nW2;1;0;1;6\nW1;2;1;0;5\nW2;2;0;1;6\n");
    assert_eq!(sensory(&["hedonic", "-i", &flat, "-o", s(&out)]).status.code(), Some(2));
    assert_eq!(sensory(&["simulate", "--preset", "nope", "-o", s(&out)]).status.code(), Some(1));
    let many = "A,B,C,D,E,F,G,H,I,J,K";
    assert_eq!(sensory(&["questionnaire", "--products", many, "--panelists", "3", "-o", s(&out)]).status.code(), Some(1));
    assert_eq!(sensory(&["--help"]).status.code(), Some(0));
}

#[test]
fn independence_fixture_reports_zero_axes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut body = String::from("Product;NumPanel;A;B\n");
    for id in 1..=4 {
        let (a, b) = if id <= 2 { (1, 1) } else { (1, 0) };
        body.push_str(&format!("W1;{id};{a};{b}\nW2;{id};{a};{b}\n"));
    }
    let input = write(tmp.path(), "ind.csv", &body);
    let out = tmp.path().join("ca");
    let o = sensory(&["ca", "-i", &input, "-o", s(&out), "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("0 axes"), "{report}");
    let svg = fs::read_to_string(out.join("ca_map.svg")).unwrap();
    assert!(svg.contains("0 axes"));
    assert_eq!(fs::read_to_string(out.join("ellipses.csv")).unwrap().lines().count(), 1);
}

#[test]
fn simulated_pipeline_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert!(sensory(&["simulate", "--preset", "null", "--panelists", "10", "--seed", "4", "-o", s(&sim)]).status.success());
    let responses = fs::read_to_string(sim.join("responses.csv")).unwrap();
    assert_eq!(responses.lines().count(), 61);
    assert!(fs::read_to_string(sim.join("run.txt")).unwrap().contains("seed: 4"));

    let sim2 = tmp.path().join("sim2");
    assert!(sensory(&["simulate", "--preset", "paper-shaped", "--seed", "4", "-o", s(&sim2)]).status.success());
    let input = sim2.join("responses.csv");
    let ca_dir = tmp.path().join("ca");
    assert!(sensory(&["ca", "-i", s(&input), "-o", s(&ca_dir), "--seed", "9", "--replicates", "100"]).status.success());
    let report = fs::read_to_string(ca_dir.join("report.txt")).unwrap();
    for key in ["chi-square:", "df:", "p-value:", "total inertia:"] {
        assert!(report.contains(key), "{key} missing in {report}");
    }
    let dim1 = report.lines().find(|l| l.starts_with("Dim 1 (")).unwrap();
    let pct = &dim1[dim1.find('(').unwrap() + 1..dim1.find("%)").unwrap()];
    assert_eq!(pct.split('.').nth(1).map(str::len), Some(1), "{dim1}");
    let svg1 = fs::read(ca_dir.join("ca_map.svg")).unwrap();
    let again = tmp.path().join("ca2");
    assert!(sensory(&["ca", "-i", s(&input), "-o", s(&again), "--seed", "9", "--replicates", "100"]).status.success());
    assert_eq!(svg1, fs::read(again.join("ca_map.svg")).unwrap());
    let svg = String::from_utf8(svg1).unwrap();
    assert!(svg.contains("Dim 1 (") && svg.contains("MUSCAT") && svg.contains("Fruity"));
    let coords = fs::read_to_string(ca_dir.join("coords.csv")).unwrap();
    assert!(coords.starts_with("Type;Label;Mass;Dim1;Dim2"));
    assert_eq!(fs::read_to_string(ca_dir.join("ellipses.csv")).unwrap().lines().count(), 7);

    let hd = tmp.path().join("hd");
    assert!(sensory(&["hedonic", "-i", s(&input), "-o", s(&hd)]).status.success());
    let letters = fs::read_to_string(hd.join("letters.csv")).unwrap();
    assert!(letters.starts_with("Product;N;Mean;SD;SE;Letters"));
    assert!(fs::read_to_string(hd.join("anova.txt")).unwrap().contains("between;5;"));
    assert_eq!(fs::read_to_string(hd.join("tukey.csv")).unwrap().lines().count(), 16);
    assert!(fs::read_to_string(hd.join("bars.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn identical_scores_give_one_letter() {
    let tmp = tempfile::tempdir().unwrap();
    let mut body = String::from("Product;NumPanel;A;B;Score\n");
    for id in 1..=5 {
        for p in ["W1", "W2", "W3"] {
            body.push_str(&format!("{p};{id};1;0;7\n"));
        }
    }
    let input = write(tmp.path(), "same.csv", &body);
    let hd = tmp.path().join("hd");
    let o = sensory(&["hedonic", "-i", &input, "-o", s(&hd)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let letters = fs::read_to_string(hd.join("letters.csv")).unwrap();
    assert!(letters.lines().skip(1).all(|l| l.ends_with(";a")), "{letters}");
}

#[test]
fn power_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert!(sensory(&["simulate", "--preset", "paper-shaped", "--panelists", "30", "--seed", "2", "-o", s(&sim)]).status.success());
    let input = sim.join("responses.csv");
    let pw = tmp.path().join("pw");
    assert!(sensory(&["power", "-i", s(&input), "--sizes", "30", "--draws", "1", "--seed", "1", "-o", s(&pw)]).status.success());
    let csv = fs::read_to_string(pw.join("power.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(';').collect();
    assert_eq!(row[0], "30");
    assert_eq!(row[1], row[2]);

    let strong = tmp.path().join("strong");
    assert!(sensory(&["power", "--preset", "strong", "--sizes", "10:40:4", "--draws", "40", "--seed", "1", "-o", s(&strong)]).status.success());
    assert!(fs::read_to_string(strong.join("power_curve.svg")).unwrap().contains("p &lt; 0.05 from"));
    let null = tmp.path().join("null");
    assert!(sensory(&["power", "--preset", "null", "--sizes", "10:65:4", "--draws", "60", "--seed", "1", "-o", s(&null)]).status.success());
    assert!(!fs::read_to_string(null.join("power_curve.svg")).unwrap().contains("p &lt; 0.05 from"));
    assert!(fs::read_to_string(null.join("run.txt")).unwrap().contains("crossing: none"));
    assert_eq!(sensory(&["power", "--sizes", "10", "-o", s(&null)]).status.code(), Some(1));
}

#[test]
fn questionnaire_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let attrs = write(tmp.path(), "attrs.txt", "Fruity\nWoody\nAcid\n");
    let q = tmp.path().join("q");
    let o = sensory(&[
        "questionnaire", "--method", "apt", "--products", "A,B,C,D", "--attributes", &attrs, "--panelists", "4",
        "--orders", "3", "--seed", "8", "-o", s(&q),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let key = fs::read_to_string(q.join("key.csv")).unwrap();
    assert_eq!(key.lines().count(), 1 + 16);
    for line in key.lines().skip(1) {
        let f: Vec<&str> = line.split(';').collect();
        let digit = f[0].as_bytes()[1] - b'0';
        let product = ["A", "B", "C", "D"].iter().position(|p| *p == f[1]).unwrap() as u8 + 1;
        assert_eq!(digit, product, "{line}");
    }
    assert_eq!(fs::read_dir(q.join("questionnaires")).unwrap().count(), 4);
    let sheet = fs::read_to_string(q.join("questionnaires/panelist_001.txt")).unwrap();
    assert!(sheet.contains("Woody"));
}
