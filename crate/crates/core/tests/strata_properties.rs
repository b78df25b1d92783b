//! Frequency split and balanced sampling properties.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use segprobe_core::annotation::parse_frequency_list;
use segprobe_core::inventory::{OnsetClass, VowelHeight};
use segprobe_core::strata::{balanced_sample, split_by_frequency, FreqBand, Split, StrataConfig};
use segprobe_core::tokens::{VowelToken, N_POINTS};

fn token(source: &str, band: FreqBand, onset: OnsetClass, i: usize) -> VowelToken {
    VowelToken {
        id: format!("{source}/{band:?}/{onset}/{i:05}"),
        source: source.into(),
        speaker: "spk".into(),
        word: format!("w{i}"),
        consonant: "p".into(),
        onset_class: onset,
        vowel: "ɑ".into(),
        vowel_height: VowelHeight::Low,
        duration: 0.1,
        f0_norm: vec![200.0; N_POINTS],
        zf0: None,
        seen: None,
        freq_band: Some(band),
    }
}

/// Three sources x two bands x three onsets, 1,250 tokens per cell.
fn corpus() -> Vec<VowelToken> {
    let mut out = Vec::new();
    for source in ["lj", "tts1", "tts2"] {
        for band in [FreqBand::High, FreqBand::Low] {
            for onset in OnsetClass::TARGETS {
                out.extend((0..1250).map(|i| token(source, band, onset, i)));
            }
        }
    }
    out
}

#[test]
fn thousand_per_cell() {
    let cfg = StrataConfig { n_per_cell: 1000, seed: 1, split: Split::MedianFrequency };
    let ds = balanced_sample(&corpus(), &cfg).unwrap();
    let counts = ds.cell_counts();
    assert_eq!(counts.len(), 18);
    assert!(counts.values().all(|&c| c == 1000));
    assert_eq!(ds.tokens.len(), 18_000);
    for onset in OnsetClass::TARGETS {
        assert_eq!(ds.tokens.iter().filter(|t| t.onset_class == onset).count(), 6000);
    }
    let ids: BTreeSet<&str> = ds.tokens.iter().map(|t| t.id.as_str()).collect();
    assert_eq!(ids.len(), 18_000);
}

#[test]
fn sample_of_a_cell_does_not_depend_on_other_cells() {
    let cfg = StrataConfig { n_per_cell: 100, seed: 9, split: Split::MedianFrequency };
    let full = corpus();
    let lj: Vec<VowelToken> = full.iter().filter(|t| t.source == "lj").cloned().collect();
    let a = balanced_sample(&full, &cfg).unwrap();
    let b = balanced_sample(&lj, &cfg).unwrap();
    let lj_from_full: Vec<&VowelToken> = a.tokens.iter().filter(|t| t.source == "lj").collect();
    assert_eq!(lj_from_full, b.tokens.iter().collect::<Vec<_>>());
    let other = balanced_sample(&full, &StrataConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.tokens, other.tokens);
}

fn frequency_doc(rows: &[(String, u64)]) -> String {
    let mut doc = String::from("Word\tFREQcount\n");
    for (w, c) in rows {
        doc.push_str(&format!("{w}\t{c}\n"));
    }
    doc
}

proptest! {
    #[test]
    fn split_ignores_frequency_row_order(
        counts in prop::collection::btree_map("[a-z]{1,6}", 0u64..50, 1..40),
        seed in any::<u64>(),
    ) {
        let rows: Vec<(String, u64)> = counts.into_iter().collect();
        let mut shuffled = rows.clone();
        // deterministic Fisher-Yates from the seed
        let mut s = seed | 1;
        for i in (1..shuffled.len()).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            shuffled.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let words: BTreeSet<String> = rows.iter().map(|(w, _)| w.clone()).collect();
        let a = split_by_frequency(&words, &parse_frequency_list(&frequency_doc(&rows), "Word", "FREQcount").unwrap()).unwrap();
        let b = split_by_frequency(&words, &parse_frequency_list(&frequency_doc(&shuffled), "Word", "FREQcount").unwrap()).unwrap();
        prop_assert_eq!(&a, &b);

        let high = a.values().filter(|b| **b == FreqBand::High).count();
        prop_assert_eq!(high, words.len() / 2);
        // every high word is at least as frequent as every low word
        let count: BTreeMap<&str, u64> = rows.iter().map(|(w, c)| (w.as_str(), *c)).collect();
        let min_high = a.iter().filter(|(_, b)| **b == FreqBand::High).map(|(w, _)| count[w.as_str()]).min();
        let max_low = a.iter().filter(|(_, b)| **b == FreqBand::Low).map(|(w, _)| count[w.as_str()]).max();
        if let (Some(h), Some(l)) = (min_high, max_low) {
            prop_assert!(h >= l);
        }
    }
}
