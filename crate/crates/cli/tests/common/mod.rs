#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semrec_core::synthetic::{generate, SyntheticConfig};

pub fn semrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semrec"))
        .args(args)
        .output()
        .expect("semrec binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 1184 users, 102 items, 5401 distinct ratings: 665 users rate five
/// items, the rest four, and the first 102 users cover every item.
pub fn write_corpus_shaped_ratings(path: &Path) {
    let mut text = String::from("author,compound,rating\n");
    for u in 0..1184 {
        let n = if u < 665 { 5 } else { 4 };
        for j in 0..n {
            let item = (u + j * 17) % 102;
            text.push_str(&format!("a{u},CHEBI:{item},{}\n", 1 + (u + j) % 3));
        }
    }
    fs::write(path, text).unwrap();
}

pub const TOY_OBO: &str = "format-version: 1.2

[Term]
id: T:R
name: root

[Term]
id: T:A
name: a
is_a: T:R

[Term]
id: T:A1
name: a1
is_a: T:A ! a

[Term]
id: T:B
name: b
is_a: T:R
";

/// The seeded synthetic benchmark written as `ratings.csv` and `items.obo`.
pub fn write_synthetic(dir: &Path, seed: u64) -> (PathBuf, PathBuf) {
    let bench = generate(&SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let ratings = dir.join("ratings.csv");
    let obo = dir.join("items.obo");
    bench.write_ratings(fs::File::create(&ratings).unwrap()).unwrap();
    fs::write(&obo, &bench.obo).unwrap();
    (ratings, obo)
}
