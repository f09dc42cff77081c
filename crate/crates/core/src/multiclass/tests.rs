use super::*;
use crate::rng::seeded;

const SMALL: &str = "\
a,legs,b,kind
1,4,0,x
0,2,1,y
1,0,1,x
0,8,0,z
";

fn small() -> Dataset {
    read_csv(SMALL.as_bytes(), None).unwrap()
}

#[test]
fn infers_types_and_classes() {
    let d = small();
    assert_eq!(d.rows.len(), 4);
    assert_eq!(d.attributes.len(), 3);
    assert_eq!(d.attributes[0], Attribute::Boolean { name: "a".into() });
    assert_eq!(
        d.attributes[1],
        Attribute::Nominal {
            name: "legs".into(),
            values: vec!["0".into(), "2".into(), "4".into(), "8".into()],
        }
    );
    assert_eq!(d.classes, ["x", "y", "z"]);
    assert_eq!(d.labels, [0, 1, 0, 2]);
    assert_eq!(d.class_name, "kind");
}

#[test]
fn rejects_bad_input() {
    assert!(read_csv("".as_bytes(), None).is_err());
    assert!(read_csv("a,c\n".as_bytes(), None).is_err());
    let err = read_csv("a,b,c\n1,,x\n".as_bytes(), None).unwrap_err().to_string();
    assert!(err.contains("row 1") && err.contains("column 2"), "{err}");
    let err = read_csv("a,b,c\n1,?,x\n".as_bytes(), None).unwrap_err().to_string();
    assert!(err.contains("missing"), "{err}");
    assert!(read_csv("a,b,c\n1,0\n".as_bytes(), None).is_err());
}

#[test]
fn schema_overrides_inference() {
    let schema: Schema = toml::from_str(
        r#"
        class = "kind"
        [attributes]
        legs = ["0", "2", "4", "6", "8"]
        b = "boolean"
        "#,
    )
    .unwrap();
    let d = read_csv(SMALL.as_bytes(), Some(&schema)).unwrap();
    assert_eq!(d.attributes[1].width(), 5);
    let schema: Schema = toml::from_str("[attributes]\nlegs = [\"0\", \"2\"]\n").unwrap();
    let err = read_csv(SMALL.as_bytes(), Some(&schema)).unwrap_err().to_string();
    assert!(err.contains("'4'"), "{err}");
    let schema: Schema = toml::from_str("[attributes]\nlegs = \"boolean\"\n").unwrap();
    assert!(read_csv(SMALL.as_bytes(), Some(&schema)).is_err());
    let schema: Schema = toml::from_str("class = \"nope\"\n").unwrap();
    assert!(read_csv(SMALL.as_bytes(), Some(&schema)).is_err());
}

#[test]
fn one_hot_layout() {
    let e = one_hot_encode(&small());
    assert_eq!(e.columns, ["a", "legs=0", "legs=2", "legs=4", "legs=8", "b"]);
    assert_eq!(e.rows[0], [true, false, false, true, false, false]);
    for row in &e.rows {
        assert_eq!(row[1..5].iter().filter(|b| **b).count(), 1);
    }
    let bools = read_csv("p,q,c\n1,0,u\n0,1,v\n".as_bytes(), None).unwrap();
    let e = one_hot_encode(&bools);
    assert_eq!(e.rows, [[true, false], [false, true]]);
}

#[test]
fn views_partition_rows() {
    let e = one_hot_encode(&small());
    let views = binary_views(&e);
    assert_eq!(views.len(), 3);
    for r in 0..e.len() {
        assert_eq!(views.iter().filter(|v| v.labels[r]).count(), 1);
    }
}

#[test]
fn argmax_and_ties() {
    let mut rng = seeded(1);
    assert_eq!(argmax_random_tie(&[0.9, 0.1, 0.3], &mut rng), 0);
    let n = 10_000;
    let zeros = (0..n)
        .filter(|_| argmax_random_tie(&[0.7, 0.7, 0.1], &mut rng) == 0)
        .count();
    let share = zeros as f64 / n as f64;
    assert!((share - 0.5).abs() < 0.03, "{share}");
}

#[test]
fn folds_partition_and_balance() {
    let labels: Vec<usize> = (0..101).map(|i| [0, 0, 0, 0, 1, 1, 2, 3][i % 8]).chain([4, 4]).collect();
    let (folds, fallback) = stratified_folds(&labels, 10, &mut seeded(2)).unwrap();
    let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    let mut all: Vec<usize> = folds.concat();
    all.sort_unstable();
    assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
    assert_eq!(fallback, [4]);
    // a class with at least k rows lands in every fold
    for f in &folds {
        assert!(f.iter().any(|&i| labels[i] == 0));
    }
    assert!(stratified_folds(&[0, 1], 3, &mut seeded(0)).is_err());
}

fn tiny_config(train_rows: u64) -> MulticlassConfig {
    MulticlassConfig {
        xcs: XcsParams {
            population_size: 100,
            ..XcsParams::default()
        },
        features: FeatureParams::default(),
        coordinator: CoordinatorParams::default(),
        metrics: MetricsParams::default(),
        multiclass: MulticlassParams { folds: 2, train_rows },
        jobs: Execution::Sequential,
    }
}

#[test]
fn untrained_systems_still_predict() {
    let e = one_hot_encode(&small());
    let mut c = train_supervised(&e, &[0], &tiny_config(0), 0).unwrap();
    let mut empty = 0;
    let guess = predict_class(&c, &e.rows[1], &mut seeded(0), &mut empty);
    assert!(guess < 3);
    assert_eq!(empty, 3);
    assert_eq!(multilabel_predict(&mut c, &e.rows[1]).len(), 3);
}

#[test]
fn trained_systems_stay_in_step() {
    let e = one_hot_encode(&small());
    let c = train_supervised(&e, &[0, 1, 2, 3], &tiny_config(300), 0).unwrap();
    assert!(c.tasks().iter().all(|t| t.iterations() == 300));
}

fn synthetic(rows: &[(Vec<bool>, &str)]) -> EncodedDataset {
    let mut text = String::from("p,q,r,c\n");
    for (bits, class) in rows {
        let b: Vec<&str> = bits.iter().map(|b| if *b { "1" } else { "0" }).collect();
        text += &format!("{},{class}\n", b.join(","));
    }
    one_hot_encode(&read_csv(text.as_bytes(), None).unwrap())
}

#[test]
fn cv_ignores_file_order() {
    let mut rows: Vec<(Vec<bool>, &str)> = (0..16u32)
        .map(|x| {
            let bits: Vec<bool> = (0..3).map(|i| (x >> i) & 1 == 1).collect();
            let class = if bits[0] { "one" } else { "zero" };
            (bits, class)
        })
        .collect();
    let config = tiny_config(500);
    let a = k_fold_cv(&synthetic(&rows), &[7], &config).unwrap();
    rows.reverse();
    rows.swap(2, 9);
    let b = k_fold_cv(&synthetic(&rows), &[7], &config).unwrap();
    let acc = |r: &CvReport| r.folds.iter().map(|f| f.accuracy).collect::<Vec<_>>();
    assert_eq!(acc(&a), acc(&b));
    assert_eq!(a.confusion, b.confusion);
    assert_eq!(a.folds.len(), 2);
    assert_eq!(a.folds.iter().map(|f| f.test_rows).sum::<usize>(), 16);
}

#[test]
fn mean_sd_matches_hand_values() {
    let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert_eq!(mean_sd(&[3.0]), (3.0, 0.0));
}
