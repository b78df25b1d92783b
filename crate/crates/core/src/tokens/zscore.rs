use std::collections::BTreeMap;

use super::{TokenError, VowelToken};

/// Fills `zf0` using each speaker's pooled mean and population standard
/// deviation over all 21-point Hz values of that speaker's tokens.
pub fn zscore_by_speaker(tokens: &mut [VowelToken]) -> Result<(), TokenError> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens.iter() {
        *counts.entry(t.speaker.as_str()).or_insert(0) += 1;
    }
    if let Some((speaker, count)) = counts.iter().find(|(_, &c)| c < 2) {
        return Err(TokenError::Speaker {
            speaker: speaker.to_string(),
            message: format!("z-scoring needs at least 2 tokens, found {count}"),
        });
    }
    let mut stats: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for speaker in counts.into_keys() {
        let values: Vec<f64> = tokens
            .iter()
            .filter(|t| t.speaker == speaker)
            .flat_map(|t| t.f0_norm.iter().copied())
            .collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if !(var > 0.0) {
            return Err(TokenError::Speaker { speaker: speaker.to_string(), message: "pooled F0 variance is zero".into() });
        }
        stats.insert(speaker.to_string(), (mean, var.sqrt()));
    }
    for t in tokens.iter_mut() {
        let (mean, sd) = stats[&t.speaker];
        t.zf0 = Some(t.f0_norm.iter().map(|v| (v - mean) / sd).collect());
    }
    Ok(())
}
