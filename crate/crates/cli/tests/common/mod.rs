#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shiftbench"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn shiftbench")
}

/// Runs a command that must succeed and returns its stderr.
pub fn ok(args: &[&str]) -> String {
    let out = run(args);
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(out.status.success(), "{args:?} failed: {stderr}");
    stderr
}

pub fn core_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

pub fn core_test_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

pub fn read_lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Training text in which the longer constituent tends to come last: each
/// pair contributes its heavy-last rendition, and on word-length ties both.
pub fn heavy_last_corpus(pairs: &Path, out: &Path) {
    let mut text = String::new();
    for p in read_lines(pairs) {
        let words = |i: usize| p["constituents"][i]["text"].as_str().unwrap().split_whitespace().count();
        let (a, b) = (words(0), words(1));
        let (u, sh) = (p["unshifted"].as_str().unwrap(), p["shifted"].as_str().unwrap());
        if a <= b {
            text.push_str(u);
            text.push('\n');
        }
        if a >= b {
            text.push_str(sh);
            text.push('\n');
        }
    }
    std::fs::write(out, text).unwrap();
}

/// A running `shiftbench serve`; killed on drop.
pub struct Server {
    child: Child,
    pub url: String,
}

impl Server {
    pub fn start(pairs: &Path, data_dir: &Path, extra: &[&str]) -> Server {
        let mut child = bin()
            .args(["serve", "--pairs", s(pairs), "--data-dir", s(data_dir), "--addr", "127.0.0.1:0"])
            .args(extra)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .expect("spawn server");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let url = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected: {line:?}")).to_string();
        Server { child, url }
    }

    pub fn get(&self, path: &str) -> reqwest::blocking::Response {
        reqwest::blocking::get(format!("{}{path}", self.url)).unwrap()
    }

    pub fn post(&self, path: &str, body: &Value) -> reqwest::blocking::Response {
        reqwest::blocking::Client::new().post(format!("{}{path}", self.url)).json(body).send().unwrap()
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
