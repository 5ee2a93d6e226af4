//! Reviewer-support binning of selected evidence.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Bin, EvidenceItem, SummaryError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBins {
    /// n_k for every aspect that is dominant for at least one pick.
    pub support: BTreeMap<usize, usize>,
    pub q33: f64,
    pub q67: f64,
    /// Aspect → bin.
    pub aspect_bins: BTreeMap<usize, Bin>,
    pub high: Vec<usize>,
    pub mid: Vec<usize>,
    pub low: Vec<usize>,
}

impl SupportBins {
    pub fn members(&self, bin: Bin) -> &[usize] {
        match bin {
            Bin::High => &self.high,
            Bin::Mid => &self.mid,
            Bin::Low => &self.low,
        }
    }
}

/// Quantile of sorted data by linear interpolation between order
/// statistics at position (n − 1)·q.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Groups picks (in extraction order) by the support bin of their dominant
/// aspect. An aspect is HIGH when n_k ≥ q67, otherwise LOW when n_k ≤ q33,
/// otherwise MID.
pub fn bin_by_support(items: &[EvidenceItem]) -> Result<SupportBins, SummaryError> {
    if items.is_empty() {
        return Err(SummaryError::EmptySelection);
    }
    let dominant: Vec<usize> = items.iter().map(|i| i.phi.argmax()).collect();
    let mut reviewers: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    for (item, &k) in items.iter().zip(&dominant) {
        reviewers.entry(k).or_default().insert(item.user_id.as_str());
    }
    let support: BTreeMap<usize, usize> = reviewers.into_iter().map(|(k, r)| (k, r.len())).collect();

    let mut values: Vec<f64> = support.values().map(|&n| n as f64).collect();
    values.sort_by(f64::total_cmp);
    let q33 = quantile(&values, 0.33);
    let q67 = quantile(&values, 0.67);

    let aspect_bins: BTreeMap<usize, Bin> = support
        .iter()
        .map(|(&k, &n)| {
            let n = n as f64;
            let bin = if n >= q67 {
                Bin::High
            } else if n <= q33 {
                Bin::Low
            } else {
                Bin::Mid
            };
            (k, bin)
        })
        .collect();

    let (mut high, mut mid, mut low) = (Vec::new(), Vec::new(), Vec::new());
    for (item, k) in items.iter().zip(&dominant) {
        match aspect_bins[k] {
            Bin::High => high.push(item.sentence_id),
            Bin::Mid => mid.push(item.sentence_id),
            Bin::Low => low.push(item.sentence_id),
        }
    }
    Ok(SupportBins {
        support,
        q33,
        q67,
        aspect_bins,
        high,
        mid,
        low,
    })
}
