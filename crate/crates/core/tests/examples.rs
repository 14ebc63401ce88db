//! Every cargo example compiles into this test and runs to completion.

#[allow(dead_code)]
#[path = "../examples/lab_files.rs"]
mod lab_files;

#[allow(dead_code)]
#[path = "../examples/train_lm.rs"]
mod train_lm;

#[allow(dead_code)]
#[path = "../examples/fit_duration.rs"]
mod fit_duration;

#[allow(dead_code)]
#[path = "../examples/decode.rs"]
mod decode;

#[allow(dead_code)]
#[path = "../examples/calibration.rs"]
mod calibration;

#[allow(dead_code)]
#[path = "../examples/toy_model.rs"]
mod toy_model;

#[allow(dead_code)]
#[path = "../examples/simulate_corpus.rs"]
mod simulate_corpus;

#[allow(dead_code)]
#[path = "../examples/evaluate.rs"]
mod evaluate;

#[allow(dead_code)]
#[path = "../examples/cross_validation.rs"]
mod cross_validation;

#[allow(dead_code)]
#[path = "../examples/sweep.rs"]
mod sweep;

#[test]
fn lab_files_runs() {
    lab_files::main().unwrap();
}

#[test]
fn train_lm_runs() {
    train_lm::main().unwrap();
}

#[test]
fn fit_duration_runs() {
    fit_duration::main().unwrap();
}

#[test]
fn decode_runs() {
    decode::main().unwrap();
}

#[test]
fn calibration_runs() {
    calibration::main().unwrap();
}

#[test]
fn toy_model_runs() {
    toy_model::main().unwrap();
}

#[test]
fn simulate_corpus_runs() {
    simulate_corpus::main().unwrap();
}

#[test]
fn evaluate_runs() {
    evaluate::main().unwrap();
}

#[test]
fn cross_validation_runs() {
    cross_validation::main().unwrap();
}

#[test]
fn sweep_runs() {
    sweep::main().unwrap();
}
