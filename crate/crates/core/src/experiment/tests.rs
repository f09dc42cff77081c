use super::*;

fn small(seeds: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
        mode = "multitask"
        seeds = {seeds}
        iterations = 600
        [problems]
        tasks = ["mux:6", "parity:3"]
        [xcs]
        population_size = 100
        [metrics]
        sample_every = 100
        window = 100
        snapshot_every = 300
        "#
    ))
    .unwrap()
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn defaults_fill_missing_sections() {
    let c = small("3");
    assert_eq!(c.seeds.list(), [1, 2, 3]);
    assert_eq!(small("[5, 9]").seeds.list(), [5, 9]);
    assert_eq!(c.features, FeatureParams::default());
    assert_eq!(c.coordinator.relatedness_every, 100);
    assert_eq!(c.jobs, Execution::Parallel);
    assert_eq!(c.output_dir, PathBuf::from("runs/latest"));
    c.validate().unwrap();
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(ExperimentConfig::from_toml("mode = \"single\"\nseeds = 1\nbogus = 2\n").is_err());
    assert!(ExperimentConfig::from_toml("mode = \"single\"\nseeds = 1\n[xcs]\nN = 2\n").is_err());
    assert!(ExperimentConfig::from_toml("mode = \"other\"\nseeds = 1\n").is_err());
}

#[test]
fn validation_lists_every_problem() {
    let mut c = small("[]");
    c.xcs.population_size = 10;
    c.problems.tasks.push("nonsense:4".into());
    let err = c.validate().unwrap_err().to_string();
    assert!(err.contains("seed list is empty"), "{err}");
    assert!(err.contains("population_size 10"), "{err}");
    assert!(err.contains("nonsense"), "{err}");

    let mut c = small("1");
    c.mode = Mode::Single;
    assert!(c.validate().unwrap_err().to_string().contains("one task"));
    c.mode = Mode::Multiclass;
    let err = c.validate().unwrap_err().to_string();
    assert!(err.contains("[dataset]"), "{err}");
}

#[test]
fn multiclass_configs_check_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "a,b,c\n1,0,x\n0,1,y\n1,1,x\n").unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(
        &path,
        "mode = \"multiclass\"\nseeds = 1\n[dataset]\npath = \"d.csv\"\nfolds = 3\n",
    )
    .unwrap();
    let c = ExperimentConfig::load(&path).unwrap();
    assert_eq!(c.dataset.as_ref().unwrap().path, dir.path().join("d.csv"));
    c.validate().unwrap();
    let mut too_many = c.clone();
    too_many.dataset.as_mut().unwrap().folds = 4;
    assert!(too_many.validate().unwrap_err().to_string().contains("cannot fill"));
    let mut missing = c;
    missing.dataset.as_mut().unwrap().path = dir.path().join("absent.csv");
    assert!(missing.validate().is_err());
}

#[test]
fn run_writes_artifacts_and_reruns_identically() {
    let root = tempfile::tempdir().unwrap();
    let config = small("[1, 2]");
    let a = root.path().join("a");
    let b = root.path().join("b");
    let summary = run(&config, &a).unwrap();
    assert_eq!(summary.bundles.len(), 2);
    let files = read_dir_bytes(&a);
    for name in [
        "manifest.json",
        "accuracy_seed_1.csv",
        "relatedness_seed_2.csv",
        "ol_seed_1.csv",
        "final_ol_seed_1.csv",
        "population_seed_2.csv",
        "relatedness_matrix_seed_1.json",
        "summary_seed_1.csv",
        "aggregate_accuracy.csv",
        "aggregate_relatedness.csv",
        "relatedness_matrix.json",
    ] {
        assert!(files.contains_key(name), "missing {name}");
    }
    assert!(!files.contains_key("FAILED"));
    let header = String::from_utf8(files["accuracy_seed_1.csv"].clone()).unwrap();
    assert!(header.starts_with("schema_version,seed,task,task_name,trials,accuracy"));

    // rerun from the recorded manifest
    let replay = ExperimentConfig::load(&a.join("manifest.json")).unwrap();
    assert_eq!(replay, config);
    run(&replay, &b).unwrap();
    assert_eq!(files, read_dir_bytes(&b));

    let sequential = root.path().join("s");
    let mut seq = config.clone();
    seq.jobs = Execution::Sequential;
    seq.coordinator.execution = Execution::Sequential;
    run(&seq, &sequential).unwrap();
    let s = read_dir_bytes(&sequential);
    assert_eq!(files["aggregate_accuracy.csv"], s["aggregate_accuracy.csv"]);
}

#[test]
fn failures_leave_a_marker() {
    let root = tempfile::tempdir().unwrap();
    let dir = root.path().join("out");
    fs::create_dir_all(dir.join("accuracy_seed_1.csv")).unwrap();
    assert!(run(&small("1"), &dir).is_err());
    assert!(dir.join("FAILED").exists());
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn comparing_a_run_with_itself() {
    let root = tempfile::tempdir().unwrap();
    let a = root.path().join("a");
    run(&small("[1, 2]"), &a).unwrap();
    let c = compare(&a, &a).unwrap();
    assert_eq!(c.tasks.len(), 2);
    for t in &c.tasks {
        assert_eq!(t.to_95[0], t.to_95[1]);
        assert_eq!(t.to_100[0], t.to_100[1]);
        assert_eq!(t.final_accuracy[0], t.final_accuracy[1]);
        assert_eq!((t.wins_a, t.wins_b, t.ties), (0, 0, 2));
    }
    assert!(c.curves.iter().all(|p| p.mean_a == p.mean_b));
    assert!(c.render().contains("mux:6"));
}

#[test]
fn comparison_rejects_mismatched_runs() {
    let root = tempfile::tempdir().unwrap();
    let a = root.path().join("a");
    run(&small("1"), &a).unwrap();

    let b = root.path().join("b");
    let mut other = small("1");
    other.problems.tasks = vec!["mux:6".into()];
    run(&other, &b).unwrap();
    assert!(matches!(compare(&a, &b), Err(Error::Schema(_))));

    let c = root.path().join("c");
    run(&small("1"), &c).unwrap();
    let manifest = fs::read_to_string(c.join("manifest.json")).unwrap();
    fs::write(
        c.join("manifest.json"),
        manifest.replace("\"schema_version\": 1", "\"schema_version\": 99"),
    )
    .unwrap();
    let err = compare(&a, &c).unwrap_err().to_string();
    assert!(err.contains("schema version 99"), "{err}");
    assert!(matches!(compare(&a, root.path()), Err(Error::Schema(_))));
}

#[test]
fn not_reached_thresholds_are_reported() {
    let samples = |acc: &[f64]| -> Vec<AccuracyIn> {
        acc.iter()
            .enumerate()
            .map(|(i, &accuracy)| AccuracyIn {
                schema_version: SCHEMA_VERSION,
                seed: 1,
                task: 0,
                task_name: "t".into(),
                trials: (i as u64 + 1) * 100,
                accuracy,
                window: 100,
                generality_rate: None,
            })
            .collect()
    };
    assert_eq!(first_reaching(&samples(&[0.5, 0.96, 1.0]), 0.95, 100), Some(200));
    assert_eq!(first_reaching(&samples(&[0.5, 0.96]), 1.0, 100), None);
    assert_eq!(mean_reached(&[Some(100), None, Some(300)]), (Some(200.0), 1));
    assert_eq!(mean_reached(&[None]), (None, 1));
}
