use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Measured computational basis state; bit `q` is qubit `q`, printed left to right.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn zeros(width: usize) -> Self {
        BitString(vec![false; width])
    }

    /// Unary basis state `e_k` on `width` qubits.
    pub fn unary(width: usize, k: usize) -> Self {
        let mut b = Self::zeros(width);
        b.0[k] = true;
        b
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn flip(&mut self, q: usize) {
        self.0[q] = !self.0[q];
    }

    pub fn set(&mut self, q: usize, v: bool) {
        self.0[q] = v;
    }

    pub fn weight_in(&self, range: Range<usize>) -> usize {
        self.0[range].iter().filter(|b| **b).count()
    }

    /// Position of the single set bit in `range`, if exactly one is set.
    pub fn unary_index_in(&self, range: Range<usize>) -> Option<usize> {
        let start = range.start;
        let mut found = None;
        for (k, &b) in self.0[range].iter().enumerate() {
            if b {
                if found.is_some() {
                    return None;
                }
                found = Some(start + k);
            }
        }
        found
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Invalid(format!("bad bitstring '{s}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

/// Counts of measured bitstrings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Histogram {
    counts: BTreeMap<BitString, u64>,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, bits: BitString, count: u64) {
        if count > 0 {
            *self.counts.entry(bits).or_insert(0) += count;
        }
    }

    pub fn count(&self, bits: &BitString) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitString, u64)> {
        self.counts.iter().map(|(b, &c)| (b, c))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Counts of the unary outcomes of `range`, indexed from the range start.
    pub fn unary_counts(&self, range: Range<usize>) -> Vec<u64> {
        let mut out = vec![0; range.len()];
        for (bits, c) in self.iter() {
            if let Some(k) = bits.unary_index_in(range.clone()) {
                out[k - range.start] += c;
            }
        }
        out
    }

    /// CSV with header `bitstring,count`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["bitstring", "count"])?;
        for (bits, c) in self.iter() {
            wr.write_record([bits.to_string(), c.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut h = Histogram::new();
        for (idx, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = idx + 2;
            let perr = |msg: &str| Error::Parse { line, msg: msg.into() };
            let bits: BitString = rec.get(0).ok_or_else(|| perr("missing bitstring"))?.parse()?;
            let count = rec
                .get(1)
                .and_then(|s| s.trim().parse::<u64>().ok())
                .ok_or_else(|| perr("bad count"))?;
            h.add(bits, count);
        }
        Ok(h)
    }
}

/// Post-selected histogram plus the fraction of shots thrown away.
#[derive(Debug, Clone, PartialEq)]
pub struct Mitigated {
    pub histogram: Histogram,
    pub discard_fraction: f64,
}

/// Keeps only outcomes with exactly one set bit inside `data` (the register
/// that must stay unary; ancilla qubits outside it are unconstrained).
pub fn mitigate(hist: &Histogram, data: Range<usize>) -> Result<Mitigated> {
    let total = hist.total();
    let mut kept = Histogram::new();
    for (bits, c) in hist.iter() {
        if bits.weight_in(data.clone()) == 1 {
            kept.add(bits.clone(), c);
        }
    }
    let used = kept.total();
    if used == 0 {
        return Err(Error::AllDiscarded);
    }
    Ok(Mitigated { histogram: kept, discard_fraction: (total - used) as f64 / total as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn noiseless_histogram_is_unchanged() {
        let mut h = Histogram::new();
        h.add(bs("1000"), 600);
        h.add(bs("0010"), 400);
        let m = mitigate(&h, 0..4).unwrap();
        assert_eq!(m.histogram, h);
        assert_eq!(m.discard_fraction, 0.0);
    }

    #[test]
    fn non_unary_outcomes_are_dropped() {
        let mut h = Histogram::new();
        h.add(bs("1000"), 900);
        h.add(bs("1100"), 100);
        let m = mitigate(&h, 0..4).unwrap();
        assert_eq!(m.histogram.total(), 900);
        assert_eq!(m.histogram.count(&bs("1000")), 900);
        assert!((m.discard_fraction - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ancilla_is_outside_the_data_register() {
        let mut h = Histogram::new();
        h.add(bs("101"), 5);
        h.add(bs("000"), 3);
        let m = mitigate(&h, 1..3).unwrap();
        assert_eq!(m.histogram.total(), 5);
    }

    #[test]
    fn all_discarded() {
        let mut h = Histogram::new();
        h.add(bs("000"), 10);
        assert!(matches!(mitigate(&h, 0..3), Err(Error::AllDiscarded)));
    }

    #[test]
    fn csv_round_trip() {
        let mut h = Histogram::new();
        h.add(bs("010"), 7);
        h.add(bs("110"), 2);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "bitstring,count\n010,7\n110,2\n");
        assert_eq!(Histogram::read_csv(&buf[..]).unwrap(), h);
        assert!(Histogram::read_csv("bitstring,count\n01x,3\n".as_bytes()).is_err());
    }

    #[test]
    fn unary_index() {
        assert_eq!(bs("0100").unary_index_in(0..4), Some(1));
        assert_eq!(bs("0110").unary_index_in(0..4), None);
        assert_eq!(bs("1010").unary_index_in(1..4), Some(2));
        assert_eq!(bs("0000").unary_index_in(0..4), None);
    }
}
