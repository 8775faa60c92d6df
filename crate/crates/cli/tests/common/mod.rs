#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn hspredict(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hspredict"));
    cmd.args(args);
    match threads {
        Some(k) => cmd.env("HSPREDICT_THREADS", k.to_string()),
        None => cmd.env_remove("HSPREDICT_THREADS"),
    };
    cmd.output().expect("spawn hspredict")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Parsed CSV: header and rows of raw fields.
pub fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rd = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let head = rd.headers().unwrap().iter().map(String::from).collect();
    let rows = rd.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (head, rows)
}

pub fn write_vector(path: &Path, y: &[f64]) {
    let head: Vec<String> = (0..y.len()).map(|j| format!("y{j}")).collect();
    let vals: Vec<String> = y.iter().map(|v| format!("{v:e}")).collect();
    std::fs::write(path, format!("{}\n{}\n", head.join(","), vals.join(","))).unwrap();
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
