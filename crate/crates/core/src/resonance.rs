//! Three-wave triads of the discretized system, near-resonant shells and the
//! mismatch spectrum `λ_n = |Ω|/ε`.
//!
//! A triad couples `(k1, α1)` and `(k2, α2)` into `(k, α)` with
//! `k = k1 + k2`; its mismatch is `Ω = ω_{k1}^{α1} + ω_{k2}^{α2} − ω_k^α`.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{ModelConfig, BRANCHES};

/// Mismatches at or below this (absolute) are direct resonances.
pub const DIRECT_TOLERANCE: f64 = 1e-10;

/// Relative tolerance for merging nearly equal mismatch values.
pub const DEDUP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triad<T> {
    pub k: i64,
    pub k1: i64,
    pub k2: i64,
    pub alpha: i8,
    pub alpha1: i8,
    pub alpha2: i8,
    pub mismatch: T,
    /// Shell index once classified: 0 for direct resonances, `edges.len() + 1`
    /// for mismatches beyond the last edge.
    pub shell: Option<usize>,
}

impl<T: Real> Triad<T> {
    pub fn is_direct(&self) -> bool {
        self.mismatch.abs() <= T::lit(DIRECT_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriadTable<T> {
    triads: Vec<Triad<T>>,
    /// `[0, ε_1, ε_2, ...]` after classification, empty before.
    shell_edges: Vec<T>,
    k_max: i64,
}

impl<T: Real> TriadTable<T> {
    pub fn triads(&self) -> &[Triad<T>] {
        &self.triads
    }

    pub fn len(&self) -> usize {
        self.triads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triads.is_empty()
    }

    pub fn shell_edges(&self) -> &[T] {
        &self.shell_edges
    }

    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    /// Label of the overflow shell, if classified.
    pub fn overflow_shell(&self) -> Option<usize> {
        (!self.shell_edges.is_empty()).then_some(self.shell_edges.len())
    }

    /// Number of triads beyond the last shell edge.
    pub fn overflow_count(&self) -> usize {
        match self.overflow_shell() {
            Some(o) => self.triads.iter().filter(|t| t.shell == Some(o)).count(),
            None => 0,
        }
    }

    /// Triad count per shell, index `0..=overflow`.
    pub fn shell_counts(&self) -> Vec<usize> {
        let Some(o) = self.overflow_shell() else {
            return Vec::new();
        };
        let mut counts = vec![0; o + 1];
        for t in &self.triads {
            if let Some(s) = t.shell {
                counts[s] += 1;
            }
        }
        counts
    }

    /// Writes `k,k1,k2,alpha,alpha1,alpha2,omega,shell` rows with a header.
    /// Unclassified triads get an empty shell field.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,k1,k2,alpha,alpha1,alpha2,omega,shell")?;
        for t in &self.triads {
            let shell = t.shell.map(|s| s.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                t.k, t.k1, t.k2, t.alpha, t.alpha1, t.alpha2, t.mismatch, shell
            )?;
        }
        Ok(())
    }
}

/// All triads with `|k|, |k1|, |k2| ≤ k_max`, ordered lexicographically by
/// `(k, k1, α, α1, α2)`.
pub fn enumerate_triads<T: Real>(cfg: &ModelConfig<T>, k_max: i64) -> Result<TriadTable<T>> {
    let limit = cfg.dealias_limit();
    if k_max < 0 || k_max > limit {
        return Err(Error::BandExceeded { k_max, limit });
    }
    let mut triads = Vec::new();
    for k in -k_max..=k_max {
        for k1 in -k_max..=k_max {
            let k2 = k - k1;
            if k2.abs() > k_max {
                continue;
            }
            for &alpha in &BRANCHES {
                let w = cfg.omega(k, alpha);
                for &alpha1 in &BRANCHES {
                    let w1 = cfg.omega(k1, alpha1);
                    for &alpha2 in &BRANCHES {
                        let w2 = cfg.omega(k2, alpha2);
                        triads.push(Triad {
                            k,
                            k1,
                            k2,
                            alpha,
                            alpha1,
                            alpha2,
                            mismatch: w1 + w2 - w,
                            shell: None,
                        });
                    }
                }
            }
        }
    }
    Ok(TriadTable {
        triads,
        shell_edges: Vec::new(),
        k_max,
    })
}

/// Labels each triad with its shell: 0 if direct, otherwise the smallest
/// `β ≥ 1` with `|Ω|/ε ≤ edges[β − 1]`, or `edges.len() + 1` past the end.
pub fn classify_shells<T: Real>(mut table: TriadTable<T>, epsilon: T, edges: &[T]) -> Result<TriadTable<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let ascending = edges.windows(2).all(|w| w[0] < w[1]);
    if edges.is_empty() || !ascending || !(edges[0] > T::zero()) || !edges.iter().all(|e| e.is_finite()) {
        return Err(Error::InvalidShellEdges);
    }
    for t in &mut table.triads {
        let shell = if t.is_direct() {
            0
        } else {
            let lambda = t.mismatch.abs() / epsilon;
            edges.partition_point(|&e| e < lambda) + 1
        };
        t.shell = Some(shell);
    }
    table.shell_edges = std::iter::once(T::zero()).chain(edges.iter().copied()).collect();
    Ok(table)
}

/// Doubling edges `1, 2, 4, …` up to the first one covering the largest
/// `|Ω|/ε` in the table.
pub fn default_shell_edges<T: Real>(table: &TriadTable<T>, epsilon: T) -> Vec<T> {
    let top = table
        .triads
        .iter()
        .map(|t| t.mismatch.abs() / epsilon)
        .fold(T::zero(), T::max);
    let mut edges = vec![T::one()];
    while *edges.last().expect("nonempty") < top {
        let next = *edges.last().expect("nonempty") * T::lit(2.0);
        edges.push(next);
    }
    edges
}

/// Sorted distinct `|Ω|/ε`, with direct resonances contributing 0. Values
/// within a relative `1e−12` of their predecessor are merged.
pub fn mismatch_spectrum<T: Real>(table: &TriadTable<T>, epsilon: T) -> Result<Vec<T>> {
    if table.is_empty() {
        return Err(Error::EmptyTriads);
    }
    let mut values: Vec<T> = table
        .triads
        .iter()
        .map(|t| if t.is_direct() { T::zero() } else { t.mismatch.abs() / epsilon })
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite mismatches"));
    let tol = T::lit(DEDUP_TOLERANCE);
    let mut out: Vec<T> = Vec::new();
    for v in values {
        match out.last() {
            Some(&last) if v - last <= tol * v.abs().max(last.abs()) => {}
            _ => out.push(v),
        }
    }
    Ok(out)
}
