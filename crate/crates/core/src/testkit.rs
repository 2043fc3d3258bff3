//! Canonical worked-example instances, loaded from the corpus files at the
//! workspace root so that library tests, the CLI, and the regression corpus
//! all see identical data.

use crate::model::{load_instance_str, BilevelInstance};

macro_rules! corpus_file {
    ($name:literal) => {
        include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../corpus/",
            $name,
            ".json"
        ))
    };
}

pub fn corpus_json(name: &str) -> String {
    match name {
        "ex33" => corpus_file!("ex33"),
        "ex38" => corpus_file!("ex38"),
        "ex45" => corpus_file!("ex45"),
        "ex410" => corpus_file!("ex410"),
        "ex52" => corpus_file!("ex52"),
        "ex58" => corpus_file!("ex58"),
        "ex510" => corpus_file!("ex510"),
        "ex_acq" => corpus_file!("ex_acq"),
        other => panic!("unknown corpus instance {other:?}"),
    }
    .to_string()
}

fn load(name: &str) -> BilevelInstance {
    load_instance_str(&corpus_json(name)).expect("corpus instance must parse")
}

pub fn ex33() -> BilevelInstance {
    load("ex33")
}

pub fn ex38() -> BilevelInstance {
    load("ex38")
}

pub fn ex45() -> BilevelInstance {
    load("ex45")
}

pub fn ex410() -> BilevelInstance {
    load("ex410")
}

pub fn ex52() -> BilevelInstance {
    load("ex52")
}

pub fn ex58() -> BilevelInstance {
    load("ex58")
}

pub fn ex510() -> BilevelInstance {
    load("ex510")
}

pub fn ex_acq() -> BilevelInstance {
    load("ex_acq")
}
