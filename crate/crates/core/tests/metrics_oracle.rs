use ids_core::metrics::{confusion, report, report_with, ZeroDivision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Counts {
    tp: u64,
    fp: u64,
    fn_: u64,
}

fn brute(y: &[usize], p: &[usize], class: usize) -> Counts {
    let mut c = Counts { tp: 0, fp: 0, fn_: 0 };
    for (&t, &q) in y.iter().zip(p) {
        match (t == class, q == class) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            _ => {}
        }
    }
    c
}

fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("c{i}")).collect()
}

#[test]
fn per_class_scores_match_brute_force_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let k = rng.random_range(2..=6);
        let n = rng.random_range(1..=80);
        // skewed draws so some classes go missing from truth or predictions
        let draw = |rng: &mut ChaCha8Rng| {
            let u: f64 = rng.random();
            ((u * u) * k as f64) as usize
        };
        let y: Vec<usize> = (0..n).map(|_| draw(&mut rng)).collect();
        let p: Vec<usize> = (0..n).map(|_| draw(&mut rng)).collect();
        let r = report(&confusion(&y, &p, &names(k)).unwrap()).unwrap();

        let mut f1_sum = 0.0;
        for c in 0..k {
            let b = brute(&y, &p, c);
            let prec = if b.tp + b.fp == 0 { 1.0 } else { b.tp as f64 / (b.tp + b.fp) as f64 };
            let rec = if b.tp + b.fn_ == 0 { 1.0 } else { b.tp as f64 / (b.tp + b.fn_) as f64 };
            let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
            let s = &r.classes[c];
            assert_eq!(s.support, b.tp + b.fn_);
            assert!((s.precision - prec).abs() < 1e-12);
            assert!((s.recall - rec).abs() < 1e-12);
            assert!((s.f1 - f1).abs() < 1e-12);
            f1_sum += f1;
        }
        let acc = y.iter().zip(&p).filter(|(a, b)| a == b).count() as f64 / n as f64;
        assert!((r.accuracy - acc).abs() < 1e-12);
        assert!((r.macro_avg.f1 - f1_sum / k as f64).abs() < 1e-12);
        // support-weighted recall collapses to accuracy
        assert!((r.weighted_avg.recall - acc).abs() < 1e-12);
        assert_eq!(r.total_support, n as u64);
    }
}

#[test]
fn zero_division_value_is_configurable() {
    let y = [0, 0, 1, 1];
    let p = [0, 0, 0, 0];
    let cm = confusion(&y, &p, &names(3)).unwrap();
    let r = report_with(&cm, ZeroDivision { precision: 0.0, recall: 0.0 }).unwrap();
    assert_eq!(r.classes[1].precision, 0.0);
    assert_eq!(r.classes[1].f1, 0.0);
    assert_eq!(r.classes[2].recall, 0.0);
    let d = report(&cm).unwrap();
    assert_eq!(d.classes[1].precision, 1.0);
    assert_eq!(d.classes[2].precision, 1.0);
    assert_eq!(d.classes[2].recall, 1.0);
    assert_eq!(d.classes[2].support, 0);
}

#[test]
fn confusion_margins_are_supports_and_prediction_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let y: Vec<usize> = (0..500).map(|_| rng.random_range(0..4)).collect();
    let p: Vec<usize> = (0..500).map(|_| rng.random_range(0..4)).collect();
    let cm = confusion(&y, &p, &names(4)).unwrap();
    for c in 0..4 {
        assert_eq!(cm.row_sum(c), y.iter().filter(|&&v| v == c).count() as u64);
        assert_eq!(cm.col_sum(c), p.iter().filter(|&&v| v == c).count() as u64);
    }
    assert_eq!(cm.total(), 500);
}
