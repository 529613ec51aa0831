use mnm_web::{lattice_demo, position_curve, DemoModel};

#[test]
fn position_curve_is_symmetric_about_one_half() {
    let c = position_curve(10, 2, 4).unwrap();
    assert_eq!(c.len(), 11);
    assert_eq!(c[5], 0.5);
    for p in 0..=10 {
        assert!((c[p] + c[10 - p] - 1.0).abs() < 1e-12);
    }
    assert!(position_curve(10, 5, 4).is_err());
    assert!(position_curve(0, 1, 4).is_err());
}

#[test]
fn lattice_demo_learns_a_planar_layout() {
    let d = lattice_demo(200, 1).unwrap();
    assert_eq!(d.entities.len(), 30);
    assert_eq!(d.relations.len(), 3);
    assert_eq!(d.losses.len(), 200);
    assert!(d.losses.last().unwrap() < &d.losses[0]);
    assert!(d.hits_at_1 >= 0.9, "hits@1 {}", d.hits_at_1);
}

#[test]
fn demo_model_separates_the_keyword_templates() {
    let m = DemoModel::train(1, 40).unwrap();
    assert!(m.loss_curve.last().unwrap() < &0.3, "{:?}", m.loss_curve.last());
    let pos = m
        .analyze("Mutant PRT3 disrupts the interaction with PRT9 in cells.", "PRT3", "PRT9")
        .unwrap();
    let neg = m
        .analyze("Levels of PRT3 and of the PRT9 protein were recorded separately.", "PRT3", "PRT9")
        .unwrap();
    assert!(pos.probability > 0.5 && neg.probability < 0.5, "{} {}", pos.probability, neg.probability);
    assert!(pos.passes_rules);
    assert_eq!(pos.weights.len(), 2);
    assert_eq!(pos.weights[0].len(), 2);
    for layer in pos.weights.iter().flatten() {
        assert_eq!(layer.len(), pos.tokens.len());
        assert!((layer.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn analyze_reports_bad_input() {
    let m = DemoModel::train(2, 1).unwrap();
    assert!(m.analyze("PRT1 binds PRT2 today.", "PRT1", "PRT1").is_err());
    assert!(m.analyze("PRT1 binds PRT2 today.", "PRT1", "PRT7").is_err());
    let close = m.analyze("PRT1 binds PRT2 today.", "PRT1", "PRT2").unwrap();
    assert!(!close.passes_rules);
}
