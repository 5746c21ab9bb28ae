use wildfire_core::evaluation::{accuracy, confusion, stratified_split};
use wildfire_core::geodata::synth_generate;
use wildfire_core::learners::{fit_forest, fit_logistic, LogisticParams};
use wildfire_core::Task;

fn held_out(task: Task, seed: u64) -> (f64, f64) {
    let data = synth_generate::<f64>(task, 189, seed).unwrap();
    let (train, test) = stratified_split(&data, 0.8, seed).unwrap();
    let truth = test.labels();
    let forest = fit_forest(&train, 7, 5, seed).unwrap();
    let f = accuracy::<f64>(&confusion(&forest.predict_dataset(&test).unwrap(), &truth).unwrap()).unwrap();
    let logistic = fit_logistic(&train, &LogisticParams::default()).unwrap();
    let l = accuracy::<f64>(&confusion(&logistic.predict_dataset(&test).unwrap(), &truth).unwrap()).unwrap();
    (f, l)
}

#[test]
fn forest_beats_logistic_on_default_prevention_data() {
    let (f, l) = held_out(Task::Prevention, 42);
    assert!(f >= 0.95, "forest {f}");
    assert!(f >= l, "forest {f} logistic {l}");
}

#[test]
fn forest_is_accurate_across_seeds() {
    for task in [Task::Prevention, Task::Detection] {
        let mut worst = 1.0f64;
        let mut fs = vec![];
        let mut ls = vec![];
        for seed in 0..20 {
            let (f, l) = held_out(task, seed);
            worst = worst.min(f);
            fs.push(f);
            ls.push(l);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        eprintln!(
            "{task}: forest mean {} worst {worst} logistic mean {}",
            mean(&fs),
            mean(&ls)
        );
        assert!(mean(&fs) >= 0.9);
        assert!(mean(&fs) >= mean(&ls));
    }
}
