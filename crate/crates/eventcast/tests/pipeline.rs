//! End-to-end flow over the synthetic dataset: ingest, encode, discretize,
//! split, resample, train all four learners, select features, and forecast.

use std::io::Write;

use eventcast::discretize::Discretizer;
use eventcast::encode::ordinal_encode;
use eventcast::eval::{confusion, metrics, stratified_split};
use eventcast::events::{extract_domains, forecast, ForecastConfig};
use eventcast::learners::{train, LearnerKind, LearnerParams};
use eventcast::resample::{resample, ResampleMode, ResamplePlan};
use eventcast::schema::resolve_schema;
use eventcast::select::{chi2_scores, kbest_sweep, select_k_best};
use eventcast::synth::generate_csv;
use eventcast::table::load_csv;

fn preprocessed(n_rows: usize, n_classes: usize, seed: u64) -> eventcast::encode::EncodedDataset {
    let csv = generate_csv(n_rows, n_classes, seed).unwrap();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(csv.as_bytes()).unwrap();
    file.flush().unwrap();
    let spec = resolve_schema("infer", Some("attack_cat")).unwrap();
    let table = load_csv(file.path(), &spec).unwrap();
    let (_, encoded) = ordinal_encode(&table).unwrap();
    let (_, dataset) = Discretizer::fit_transform(&encoded, 0.0).unwrap();
    dataset
}

#[test]
fn discretization_doubles_numeric_columns() {
    let ds = preprocessed(400, 4, 11);
    // 3 categorical + 4 numeric -> 3 + 8 = 11, minus any constants
    assert!(ds.is_discrete());
    let names = ds.feature_names();
    assert!(names.contains(&"dur log".to_string()));
    assert!(names.contains(&"dur sig".to_string()));
    assert!(names.contains(&"proto".to_string()));
    assert!(!names.contains(&"dur".to_string()));
}

#[test]
fn gbt_clears_085_on_the_synthetic_fixture() {
    let ds = preprocessed(2000, 5, 42);
    let (train_ds, test_ds) = stratified_split(&ds, 0.3, 42).unwrap();
    let params = LearnerParams {
        n_rounds: 40,
        ..LearnerParams::default()
    };
    let model = train(LearnerKind::Gbt, &train_ds, &params).unwrap();
    let preds = model.predict_dataset(&test_ds).unwrap();
    let report = metrics(&confusion(&test_ds.labels, &preds, &test_ds.class_names).unwrap()).unwrap();
    assert!(
        report.accuracy >= 0.85,
        "gbt test accuracy {}",
        report.accuracy
    );
}

#[test]
fn all_four_learners_beat_chance_and_stay_deterministic() {
    let ds = preprocessed(1200, 4, 7);
    let (train_ds, test_ds) = stratified_split(&ds, 0.3, 7).unwrap();
    let params = LearnerParams {
        n_rounds: 25,
        n_trees: 30,
        ..LearnerParams::default()
    };
    for kind in [
        LearnerKind::Tree,
        LearnerKind::Forest,
        LearnerKind::Gbt,
        LearnerKind::NBayes,
    ] {
        let model_a = train(kind, &train_ds, &params).unwrap();
        let model_b = train(kind, &train_ds, &params).unwrap();
        assert_eq!(
            serde_json::to_vec(&model_a).unwrap(),
            serde_json::to_vec(&model_b).unwrap(),
            "{kind} must be deterministic"
        );
        let preds = model_a.predict_dataset(&test_ds).unwrap();
        let report =
            metrics(&confusion(&test_ds.labels, &preds, &test_ds.class_names).unwrap()).unwrap();
        assert!(
            report.accuracy > 0.5,
            "{kind} accuracy {} not above chance",
            report.accuracy
        );
    }
}

#[test]
fn resampling_balances_only_the_training_split() {
    let ds = preprocessed(1500, 3, 19);
    // skew the class balance by dropping most of class 2
    let keep: Vec<usize> = (0..ds.n_rows)
        .filter(|&i| ds.labels[i] != 2 || i % 10 == 0)
        .collect();
    let skewed = ds.subset_rows(&keep);
    let (train_ds, _) = stratified_split(&skewed, 0.3, 19).unwrap();
    let plan = ResamplePlan {
        mode: ResampleMode::Hybrid,
        majority_cap_ratio: 2.0,
        minority_target_ratio: 1.0,
        seed: 19,
    };
    let balanced = resample(&train_ds, &plan).unwrap();
    let counts = balanced.class_counts();
    let max = *counts.iter().max().unwrap();
    let min = *counts.iter().filter(|&&c| c > 0).min().unwrap();
    assert!(
        max <= 2 * min,
        "hybrid resampling should cap imbalance: {counts:?}"
    );
}

#[test]
fn selection_then_forecast_runs_end_to_end() {
    let ds = preprocessed(1000, 4, 3);
    let (train_ds, test_ds) = stratified_split(&ds, 0.3, 3).unwrap();
    let params = LearnerParams {
        n_rounds: 20,
        ..LearnerParams::default()
    };

    let table = chi2_scores(&train_ds).unwrap();
    assert_eq!(table.rows.len(), train_ds.n_features());

    let k = 5.min(train_ds.n_features());
    let train_k = select_k_best(&train_ds, k).unwrap();
    let selected = train_k.feature_names();
    let test_k = {
        let indices: Vec<usize> = selected
            .iter()
            .map(|n| test_ds.feature_index(n).unwrap())
            .collect();
        test_ds.select_columns(&indices)
    };
    let model = train(LearnerKind::Gbt, &train_k, &params).unwrap();
    let preds = model.predict_dataset(&test_k).unwrap();
    let report = metrics(&confusion(&test_k.labels, &preds, &test_k.class_names).unwrap()).unwrap();

    let spec = extract_domains(&train_k, &selected).unwrap();
    let result = forecast(&model, &spec, report.accuracy, &ForecastConfig::default()).unwrap();
    let fraction_sum: f64 = result.classes.iter().map(|c| c.event_fraction).sum();
    assert!((fraction_sum - 1.0).abs() < 1e-9);
    let weighted_sum: f64 = result.classes.iter().map(|c| c.weighted).sum();
    assert!((weighted_sum - report.accuracy).abs() < 1e-9);
}

#[test]
fn kbest_sweep_improves_with_informative_features() {
    let ds = preprocessed(1200, 4, 23);
    let (train_ds, test_ds) = stratified_split(&ds, 0.3, 23).unwrap();
    let params = LearnerParams {
        n_rounds: 20,
        ..LearnerParams::default()
    };
    let n = train_ds.n_features();
    let rows = kbest_sweep(&train_ds, &test_ds, &params, &[2, n]).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].k, 2);
    assert_eq!(rows[1].k, n);
    // all features should do at least as well as a weak pair, give or take noise
    assert!(rows[1].accuracy + 0.05 >= rows[0].accuracy);
}

#[test]
fn unsw_shaped_file_preprocesses_to_58_features() {
    // miniature file with the published 45-column layout
    let header = "id,dur,proto,service,state,spkts,dpkts,sbytes,dbytes,rate,sttl,dttl,sload,dload,sloss,dloss,sinpkt,dinpkt,sjit,djit,swin,stcpb,dtcpb,dwin,tcprtt,synack,ackdat,smean,dmean,trans_depth,response_body_len,ct_srv_src,ct_state_ttl,ct_dst_ltm,ct_src_dport_ltm,ct_dst_sport_ltm,ct_dst_src_ltm,is_ftp_login,ct_ftp_cmd,ct_flw_http_mthd,ct_src_ltm,ct_srv_dst,is_sm_ips_ports,attack_cat,label";
    let mut rng = eventcast::rng::StreamRng::new(99);
    let classes = ["Normal", "DoS", "Exploits", "Fuzzers"];
    let mut csv = String::from(header);
    csv.push('\n');
    for i in 0..200 {
        let class = classes[i % classes.len()];
        let proto = ["tcp", "udp", "arp"][rng.index(3)];
        let dur = rng.f64() * 10f64.powi(rng.index(4) as i32);
        let mut cells: Vec<String> = Vec::new();
        cells.push((i + 1).to_string()); // id
        cells.push(format!("{dur:.6}"));
        cells.push(proto.to_string());
        cells.push("-".to_string()); // service
        cells.push(["FIN", "CON", "INT"][rng.index(3)].to_string());
        for _ in 0..2 {
            cells.push(rng.below(50).to_string()); // spkts, dpkts
        }
        for _ in 0..2 {
            cells.push(rng.below(100_000).to_string()); // sbytes, dbytes
        }
        cells.push(format!("{:.4}", rng.f64() * 1000.0)); // rate
        cells.push([0u32, 62, 254][rng.index(3)].to_string()); // sttl
        cells.push([0u32, 252][rng.index(2)].to_string()); // dttl
        for _ in 0..2 {
            cells.push(format!("{:.4}", rng.f64() * 1e6)); // sload, dload
        }
        for _ in 0..2 {
            cells.push(rng.below(20).to_string()); // sloss, dloss
        }
        for _ in 0..4 {
            cells.push(format!("{:.4}", rng.f64() * 100.0)); // sinpkt..djit
        }
        cells.push(["0", "255"][rng.index(2)].to_string()); // swin
        for _ in 0..2 {
            cells.push(rng.below(4_000_000_000).to_string()); // stcpb, dtcpb
        }
        cells.push(["0", "255"][rng.index(2)].to_string()); // dwin
        for _ in 0..3 {
            cells.push(format!("{:.6}", rng.f64())); // tcprtt, synack, ackdat
        }
        for _ in 0..2 {
            cells.push(rng.below(1500).to_string()); // smean, dmean
        }
        cells.push(rng.below(3).to_string()); // trans_depth
        cells.push(rng.below(10_000).to_string()); // response_body_len
        for _ in 0..6 {
            cells.push((1 + rng.below(60)).to_string()); // ct_srv_src..ct_dst_src_ltm
        }
        cells.push("0".to_string()); // is_ftp_login
        cells.push("0".to_string()); // ct_ftp_cmd
        cells.push(rng.below(4).to_string()); // ct_flw_http_mthd
        for _ in 0..2 {
            cells.push((1 + rng.below(40)).to_string()); // ct_src_ltm, ct_srv_dst
        }
        cells.push("0".to_string()); // is_sm_ips_ports
        cells.push(class.to_string());
        cells.push(u32::from(class != "Normal").to_string());
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(csv.as_bytes()).unwrap();
    file.flush().unwrap();

    let spec = resolve_schema("unsw-nb15", None).unwrap();
    let table = load_csv(file.path(), &spec).unwrap();
    assert_eq!(table.row_count, 200);
    assert_eq!(table.schema.n_features(), 42);

    let (_, encoded) = ordinal_encode(&table).unwrap();
    assert_eq!(encoded.n_features(), 42, "id and label must be dropped");
    assert!(encoded.feature_index("id").is_none());
    assert!(encoded.feature_index("label").is_none());
    assert_eq!(encoded.n_classes(), 10, "class list is pinned");

    // 26 categorical + 16 numeric -> 26 + 32 = 58 columns before filtering;
    // three constant columns (is_ftp_login, ct_ftp_cmd, is_sm_ips_ports)
    // drop out of this miniature sample
    let (state, ready) = Discretizer::fit_transform(&encoded, 0.0).unwrap();
    assert_eq!(encoded.n_features() + state.sources.len(), 58);
    assert_eq!(ready.n_features(), 58 - state.dropped_features.len());
    assert!(ready.feature_names().contains(&"dur log".to_string()));
    assert!(ready.feature_names().contains(&"sttl".to_string()));
}
