//! Synthetic flow datasets for CI and benchmarks.
//!
//! The generator plants two exact signals: the decimal magnitude of `dur`
//! carries `class % 8` and the leading digit of `sbytes` carries
//! `1 + (class / 8) % 9`, so the discretized pair identifies the class for
//! up to 72 classes. 5% of labels are then resampled to a different class,
//! which pins the Bayes-optimal accuracy at 0.95 — any decent learner on the
//! discretized features should land above 0.85. `proto` adds a softer
//! categorical signal; `service`, `state`, and `rate` are pure noise.

use crate::error::{Error, Result};
use crate::rng::StreamRng;

const PROTOS: [&str; 6] = ["tcp", "udp", "icmp", "arp", "ospf", "sctp"];
const SERVICES: [&str; 6] = ["-", "dns", "http", "smtp", "ftp", "ssh"];
const STATES: [&str; 5] = ["FIN", "CON", "INT", "REQ", "RST"];
const CLASS_NAMES: [&str; 10] = [
    "Normal",
    "DoS",
    "Exploits",
    "Fuzzers",
    "Generic",
    "Recon",
    "Backdoor",
    "Shellcode",
    "Worms",
    "Analysis",
];

/// Label for class `c`.
pub fn class_name(c: usize) -> String {
    CLASS_NAMES
        .get(c)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("Class{c:02}"))
}

/// Generate a synthetic dataset as CSV text (label column `attack_cat`).
/// Byte-identical for a given `(n_rows, n_classes, seed)`.
pub fn generate_csv(n_rows: usize, n_classes: usize, seed: u64) -> Result<String> {
    if n_classes < 2 {
        return Err(Error::config("synthetic data needs at least 2 classes".to_string()));
    }
    if n_rows < 10 * n_classes {
        return Err(Error::config(format!(
            "need at least 10 rows per class: {n_rows} rows for {n_classes} classes"
        )));
    }
    let mut rng = StreamRng::new(seed).derive("synth");
    let mut out = String::with_capacity(n_rows * 64);
    out.push_str("proto,service,state,dur,sbytes,rate,ct_srv,attack_cat\n");
    for row in 0..n_rows {
        let class = row % n_classes;

        let proto = if rng.below(100) < 55 {
            PROTOS[class % PROTOS.len()]
        } else {
            PROTOS[rng.index(PROTOS.len())]
        };
        let service = SERVICES[rng.index(SERVICES.len())];
        let state = STATES[rng.index(STATES.len())];

        // magnitude signal: dur in [10^(class%8), 10^(class%8 + 1))
        let dur = (1.0 + 8.999 * rng.f64()) * 10f64.powi((class % 8) as i32);
        // leading-digit signal: sbytes in [d*10^m, (d+1)*10^m)
        let digit = 1 + (class / 8) % 9;
        let sbytes = (digit as f64 + 0.999 * rng.f64()) * 10f64.powi(rng.index(4) as i32);
        // noise in (0.1, 100)
        let rate = 10f64.powf(3.0 * rng.f64() - 1.0);
        let ct_srv = class as u64 + rng.below(3);

        let label = if rng.below(20) == 0 {
            // 5% label noise: any other class, uniformly
            (class + 1 + rng.index(n_classes - 1)) % n_classes
        } else {
            class
        };
        out.push_str(&format!(
            "{proto},{service},{state},{dur:.6},{sbytes:.6},{rate:.6},{ct_srv},{}\n",
            class_name(label)
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::resolve_schema;
    use crate::table::load_csv;
    use std::io::Write;

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_csv(500, 4, 9).unwrap();
        let b = generate_csv(500, 4, 9).unwrap();
        assert_eq!(a, b);
        let c = generate_csv(500, 4, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn row_budget_is_enforced() {
        assert!(generate_csv(19, 2, 0).is_err());
        assert!(generate_csv(20, 2, 0).is_ok());
        assert!(generate_csv(100, 1, 0).is_err());
    }

    #[test]
    fn loads_under_the_inferred_schema() {
        let csv = generate_csv(300, 3, 1).unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(csv.as_bytes()).unwrap();
        f.flush().unwrap();
        let spec = resolve_schema("infer", Some("attack_cat")).unwrap();
        let table = load_csv(f.path(), &spec).unwrap();
        assert_eq!(table.row_count, 300);
        assert_eq!(table.dropped_rows, 0);
        // proto/service/state categorical; dur/sbytes/rate/ct_srv numeric
        assert_eq!(table.schema.n_features(), 7);
        let numeric = table
            .schema
            .columns
            .iter()
            .filter(|(_, k)| *k == crate::schema::ColumnKind::Numeric)
            .count();
        assert_eq!(numeric, 4);
    }

    #[test]
    fn planted_signal_is_recoverable_by_magnitude() {
        let csv = generate_csv(400, 4, 2).unwrap();
        let mut correct = 0;
        let mut total = 0;
        for line in csv.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            let dur: f64 = cells[3].parse().unwrap();
            let mag = dur.log10().floor() as usize;
            let label = cells[7];
            total += 1;
            if class_name(mag) == label {
                correct += 1;
            }
        }
        let acc = f64::from(correct) / f64::from(total);
        // 5% label noise: magnitude alone recovers ~95%
        assert!(acc > 0.92, "accuracy {acc}");
    }
}
