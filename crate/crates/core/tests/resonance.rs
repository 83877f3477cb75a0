use apint::resonance::default_shell_edges;
use apint::{classify_shells, enumerate_triads, mismatch_spectrum, Config, ModelConfig};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn cfg(f: f64) -> Config {
    ModelConfig::new(1.0, f, 16).unwrap()
}

fn omega(k: i64, alpha: i8, f: f64) -> f64 {
    let kappa = TAU * k as f64 / TAU;
    alpha as f64 * (1.0 + kappa * kappa / f).sqrt()
}

type Row = (i64, i64, i64, i8, i8, i8, u64);

/// Every 6-tuple in the box, filtered by `k = k1 + k2`, sorted afterwards.
fn brute_force(k_max: i64, f: f64) -> Vec<Row> {
    let ks: Vec<i64> = (-k_max..=k_max).collect();
    let branches = [-1i8, 0, 1];
    let mut rows = Vec::new();
    for &k in &ks {
        for &k1 in &ks {
            for &k2 in &ks {
                if k1 + k2 != k {
                    continue;
                }
                for &a in &branches {
                    for &a1 in &branches {
                        for &a2 in &branches {
                            let m = omega(k1, a1, f) + omega(k2, a2, f) - omega(k, a, f);
                            rows.push((k, k1, k2, a, a1, a2, m.to_bits()));
                        }
                    }
                }
            }
        }
    }
    rows.sort_by_key(|r| (r.0, r.1, r.3, r.4, r.5));
    rows
}

#[test]
fn table_matches_brute_force_bitwise() {
    for f in [1.0, 0.5] {
        let table = enumerate_triads(&cfg(f), 4).unwrap();
        let got: Vec<Row> = table
            .triads()
            .iter()
            .map(|t| (t.k, t.k1, t.k2, t.alpha, t.alpha1, t.alpha2, t.mismatch.to_bits()))
            .collect();
        assert_eq!(got, brute_force(4, f));
    }
}

#[test]
fn exact_resonance_count_matches_exhaustive_scan() {
    let table = enumerate_triads(&cfg(1.0), 4).unwrap();
    let want = brute_force(4, 1.0)
        .iter()
        .filter(|r| (r.3, r.4, r.5) != (0, 0, 0) && f64::from_bits(r.6).abs() < 1e-10)
        .count();
    let got = table
        .triads()
        .iter()
        .filter(|t| (t.alpha, t.alpha1, t.alpha2) != (0, 0, 0) && t.is_direct())
        .count();
    assert_eq!(got, want);
    assert!(got > 0);
}

#[test]
fn slow_triads_are_direct_resonances() {
    let table = classify_shells(enumerate_triads(&cfg(1.0), 5).unwrap(), 0.1, &[1.0, 10.0, 100.0]).unwrap();
    let slow: Vec<_> = table
        .triads()
        .iter()
        .filter(|t| t.alpha == 0 && t.alpha1 == 0 && t.alpha2 == 0)
        .collect();
    assert_eq!(slow.len(), 11 * 11 - 30);
    assert!(slow.iter().all(|t| t.mismatch == 0.0 && t.shell == Some(0)));
    // identity triad with the zero mode as catalyst
    assert!(table
        .triads()
        .iter()
        .filter(|t| t.k1 == t.k && t.k2 == 0 && t.alpha1 == t.alpha && t.alpha2 == 0)
        .all(|t| t.mismatch == 0.0));
}

#[test]
fn shells_partition_and_shell_zero_is_the_resonant_set() {
    let table = enumerate_triads(&cfg(1.0), 5).unwrap();
    let edges = default_shell_edges(&table, 0.5);
    let table = classify_shells(table, 0.5, &edges).unwrap();
    assert_eq!(table.shell_counts().iter().sum::<usize>(), table.len());
    assert_eq!(table.overflow_count(), 0);
    for t in table.triads() {
        assert_eq!(t.shell == Some(0), t.is_direct());
        let s = t.shell.unwrap();
        if s > 0 {
            let l = t.mismatch.abs() / 0.5;
            let e = table.shell_edges();
            assert!(e[s - 1] < l && l <= e[s], "{l} not in shell {s}");
        }
    }
}

#[test]
fn spectrum_doubles_exactly_when_epsilon_halves() {
    let table = enumerate_triads(&cfg(1.0), 4).unwrap();
    for eps in [1.0, 0.3, 0.07] {
        let a = mismatch_spectrum(&table, eps).unwrap();
        let b = mismatch_spectrum(&table, eps / 2.0).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(2.0 * x, *y);
        }
    }
}

#[test]
fn largest_rate_matches_re_enumeration() {
    let table = enumerate_triads(&cfg(1.0), 4).unwrap();
    let spectrum = mismatch_spectrum(&table, 1.0).unwrap();
    let want = brute_force(4, 1.0)
        .iter()
        .map(|r| f64::from_bits(r.6).abs())
        .fold(0.0, f64::max);
    assert_eq!(*spectrum.last().unwrap(), want);
    assert_eq!(spectrum[0], 0.0);
    assert!(spectrum.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn swapped_pairs_have_equal_mismatch() {
    let table = enumerate_triads(&cfg(1.0), 4).unwrap();
    for t in table.triads() {
        let twin = table
            .triads()
            .iter()
            .find(|u| u.k == t.k && u.alpha == t.alpha && u.k1 == t.k2 && u.alpha1 == t.alpha2 && u.alpha2 == t.alpha1)
            .expect("swapped triad present");
        assert!((twin.mismatch - t.mismatch).abs() <= 1e-15 * t.mismatch.abs().max(1.0));
    }
}

#[test]
fn csv_export_round_trips_the_rows() {
    let table = classify_shells(enumerate_triads(&cfg(1.0), 2).unwrap(), 1.0, &[1.0, 2.0, 4.0, 8.0]).unwrap();
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,k1,k2,alpha,alpha1,alpha2,omega,shell"));
    for (line, t) in lines.zip(table.triads()) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0].parse::<i64>().unwrap(), t.k);
        assert_eq!(fields[6].parse::<f64>().unwrap(), t.mismatch);
        assert_eq!(fields[7].parse::<usize>().unwrap(), t.shell.unwrap());
    }
}

proptest! {
    #[test]
    fn halving_epsilon_never_lowers_a_shell(eps in 0.01f64..1.0, f in 0.2f64..5.0) {
        let edges = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        let table = enumerate_triads(&cfg(f), 3).unwrap();
        let a = classify_shells(table.clone(), eps, &edges).unwrap();
        let b = classify_shells(table, eps / 2.0, &edges).unwrap();
        for (x, y) in a.triads().iter().zip(b.triads()) {
            prop_assert!(y.shell >= x.shell);
        }
    }
}
