use hde_core::scores::{parse_scores, read_scores, write_scores};
use hde_core::thresholds::{fit_percentile, parse_thresholds};
use hde_core::{
    compute_levels, parse_edge_list, read_edge_list, DiscreteLabeling, HdeError, IsoOptions, Method,
    MethodConfig, PositiveSelection, Relation, ViolationReport,
};

const GO_LIKE: &str = "\
# toy ontology
all\tbinding
all\tcatalysis
binding\tprotein binding
catalysis\tkinase
protein binding\tkinase binding
kinase\tkinase binding
";

#[test]
fn file_round_trip_through_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let dag_path = dir.path().join("dag.tsv");
    std::fs::write(&dag_path, GO_LIKE).unwrap();
    let dag = read_edge_list(&dag_path, false).unwrap();
    assert_eq!(dag, parse_edge_list(&dag.to_edge_list_tsv(), "again", false).unwrap());
    assert_eq!(
        dag.relatives("kinase binding", Relation::Ancestors).unwrap(),
        ["all", "binding", "catalysis", "protein binding", "kinase"]
    );
    let levels = compute_levels(&dag);
    assert_eq!(levels.dist(dag.require("kinase binding").unwrap()), 3);

    let scores = parse_scores(
        "example\tkinase binding\tkinase\tcatalysis\tprotein binding\tbinding\n\
         p1\t0.8\t0.3\t0.6\t0.7\t0.2\n\
         p2\t0.1\t0.9\t0.95\t0.4\t0.5\n",
        "scores",
    )
    .unwrap();
    let aligned = scores.align_to(&dag, "scores").unwrap();
    assert!(aligned.imputed_root);
    let flat = aligned.matrix;
    assert!(!ViolationReport::scan(&dag, &flat, 0.0).unwrap().is_valid());

    for method in Method::ALL {
        let w = (method == Method::TprW).then_some(0.6);
        let cfg = MethodConfig::new(method, PositiveSelection::Adaptive, w, false, IsoOptions::default()).unwrap();
        let rows = flat
            .rows()
            .map(|r| cfg.correct_row(&dag, &levels, r))
            .collect::<Result<Vec<_>, _>>()
            .unwrap();
        let out = flat.with_rows(rows).unwrap();
        let path = dir.path().join(format!("{method}.tsv"));
        write_scores(&out, &path, None).unwrap();
        let back = read_scores(&path).unwrap();
        assert_eq!(back, out, "{method}");
        let report = ViolationReport::scan(&dag, &back, method.validity_epsilon()).unwrap();
        assert!(report.is_valid(), "{method}: {report:?}");
    }
}

#[test]
fn thresholds_file_and_percentile_fit() {
    let dag = parse_edge_list(GO_LIKE, "dag", false).unwrap();
    let t = parse_thresholds("class\tthreshold\nbinding\t0.3\ncatalysis\t0.4\nprotein binding\t0.5\nkinase\t0.6\nkinase binding\t0.7\n", "t", &dag).unwrap();
    assert_eq!(t.get(dag.root()), 1.0);
    assert_eq!(t.get(dag.require("kinase").unwrap()), 0.6);
    let err = parse_thresholds("binding\t0.3\n", "t", &dag).unwrap_err();
    assert!(matches!(err, HdeError::MissingClass { .. }), "{err:?}");

    let scores = parse_scores(
        "example\tall\tbinding\tcatalysis\tprotein binding\tkinase\tkinase binding\n\
         a\t1\t0.2\t0.4\t0.6\t0.8\t1.0\nb\t1\t0.3\t0.5\t0.7\t0.9\t0.1\n",
        "s",
    )
    .unwrap();
    let labels = DiscreteLabeling::from_matrix(
        &parse_scores(
            "example\tall\tbinding\tcatalysis\tprotein binding\tkinase\tkinase binding\n\
             a\t1\t1\t1\t1\t1\t0\nb\t1\t1\t0\t1\t0\t0\n",
            "l",
        )
        .unwrap(),
    )
    .unwrap();
    let fit = fit_percentile(&scores, &labels, 50.0).unwrap();
    assert_eq!(fit.thresholds.values(), [1.0, 0.2, 0.4, 0.6, 0.8, 0.5]);
    assert_eq!(fit.no_positives, [5]);
}
