//! Versioned prompt templates for the three rewriting stages.

use std::collections::BTreeMap;

use super::{Bin, BinStats};

pub const PROMPT_VERSION: &str = "v1";

const COMPRESS: &str = include_str!("../../assets/prompts/v1/stage1_compress.txt");
const STITCH: &str = include_str!("../../assets/prompts/v1/stage2_stitch.txt");
const POLISH: &str = include_str!("../../assets/prompts/v1/stage3_final.txt");

pub fn render_compress(evidence: &[String]) -> String {
    format!("{}\n{}", COMPRESS, evidence.join("\n"))
}

/// Fills the HIGH/MID/LOW slots; absent bins render with zero counts and an
/// empty summary.
pub fn render_stitch(summaries: &BTreeMap<Bin, String>, stats: &BTreeMap<Bin, BinStats>) -> String {
    let mut out = STITCH.to_string();
    for bin in Bin::ALL {
        let key = bin.label().to_lowercase();
        let s = stats.get(&bin).copied().unwrap_or(BinStats { count: 0, pct: 0.0 });
        let text = summaries.get(&bin).map(String::as_str).unwrap_or("");
        out = out
            .replace(&format!("{{{key}.pct}}"), &format!("{:.1}", s.pct))
            .replace(&format!("{{{key}.count}}"), &s.count.to_string())
            .replace(&format!("{{{key}.summary}}"), text);
    }
    out
}

pub fn render_polish(draft: &str) -> String {
    format!("{}\n{}", POLISH, draft)
}
