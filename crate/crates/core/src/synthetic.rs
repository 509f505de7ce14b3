//! Synthetic corpora with planted description/code overlap.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::CorpusItem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedSpec {
    pub items: usize,
    /// Tokens unique to an item, present in both its description and code.
    pub planted: usize,
    /// Background tokens per description, drawn from a shared vocabulary.
    pub desc_noise: usize,
    /// Background tokens per code snippet.
    pub code_noise: usize,
    pub noise_vocab: usize,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            items: 200,
            planted: 5,
            desc_noise: 3,
            code_noise: 6,
            noise_vocab: 50,
        }
    }
}

/// Each item's description and code share `planted` item-specific tokens;
/// everything else is shared background noise, shuffled in.
pub fn planted_corpus(spec: &PlantedSpec, seed: u64) -> Vec<CorpusItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = |count: usize, rng: &mut ChaCha8Rng| -> Vec<String> {
        (0..count)
            .map(|_| format!("common{}", rng.random_range(0..spec.noise_vocab.max(1))))
            .collect()
    };
    (0..spec.items)
        .map(|i| {
            let planted: Vec<String> = (0..spec.planted)
                .map(|k| format!("item{i}tok{k}"))
                .collect();
            let mut desc = planted.clone();
            desc.extend(noise(spec.desc_noise, &mut rng));
            desc.shuffle(&mut rng);
            let mut code = planted;
            code.extend(noise(spec.code_noise, &mut rng));
            code.shuffle(&mut rng);
            CorpusItem {
                id: format!("item{i:04}"),
                description: desc.join(" "),
                code: code.join(" "),
                lang: "synthetic".into(),
            }
        })
        .collect()
}

/// Items whose description and code share no tokens, for random baselines.
pub fn unrelated_corpus(items: usize, tokens: usize, seed: u64) -> Vec<CorpusItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text = |rng: &mut ChaCha8Rng| -> String {
        (0..tokens.max(1))
            .map(|_| format!("w{}", rng.random::<u32>()))
            .collect::<Vec<_>>()
            .join(" ")
    };
    (0..items)
        .map(|i| CorpusItem {
            id: format!("u{i:05}"),
            description: text(&mut rng),
            code: text(&mut rng),
            lang: "synthetic".into(),
        })
        .collect()
}
