use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Six-item short-form state anxiety answers, each on a 1..=4 scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stai6Response {
    pub calm: u8,
    pub tense: u8,
    pub upset: u8,
    pub relaxed: u8,
    pub content: u8,
    pub worried: u8,
}

/// Scaled score in 20..=80. Calm, relaxed and content are reverse-keyed.
pub fn stai6_score(r: &Stai6Response) -> Result<f64> {
    let items = [r.calm, r.tense, r.upset, r.relaxed, r.content, r.worried];
    if items.iter().any(|v| !(1..=4).contains(v)) {
        return Err(Error::Range(format!(
            "item responses {items:?} must be in 1..=4"
        )));
    }
    let rev = |v: u8| 5 - v;
    let sum = rev(r.calm) + r.tense + r.upset + rev(r.relaxed) + rev(r.content) + r.worried;
    Ok(sum as f64 / 6.0 * 20.0)
}
