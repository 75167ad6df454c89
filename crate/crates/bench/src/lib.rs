//! Synthetic corpora and documents for benchmarks.

use csanitize_core::{build_index, ContextUnit, CorpusIndex, Document, StopWords, Taxonomy, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Index, taxonomy and vocabulary over `terms` words `w0..`, spread over
/// `contexts` contexts. Every fourth word has a parent `g<i/16>`, and one
/// context in sixteen mentions the word `entity`.
pub struct World {
    pub taxonomy: Taxonomy,
    pub vocab: Vocabulary,
    pub index: CorpusIndex,
    pub corpus: Vec<Document>,
}

pub fn world(terms: usize, contexts: usize, seed: u64) -> World {
    let mut builder = Taxonomy::builder();
    for i in (0..terms).step_by(4) {
        builder = builder.isa(&format!("w{i}"), &format!("g{}", i / 16));
    }
    let taxonomy = builder.build().expect("synthetic taxonomy is a forest");
    let vocab = Vocabulary::from_taxonomy(&taxonomy, StopWords::empty());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus: Vec<Document> = (0..contexts)
        .map(|i| {
            let mut words: Vec<String> = (0..24).map(|_| format!("w{}", rng.gen_range(0..terms))).collect();
            if i % 16 == 0 {
                words.push("entity".to_string());
            }
            Document::new(format!("c{i}"), words.join(" "), &vocab, ContextUnit::Document)
        })
        .collect();
    let index = build_index(&corpus, ContextUnit::Document, &taxonomy).expect("non-empty corpus");
    World {
        taxonomy,
        vocab,
        index,
        corpus,
    }
}

/// A document of `distinct` different words in capitalized sentences of
/// eight.
pub fn document(world: &World, distinct: usize, unit: ContextUnit) -> Document {
    let words: Vec<String> = (0..distinct).map(|i| format!("w{i}")).collect();
    let text: Vec<String> = words
        .chunks(8)
        .map(|s| format!("W{}.", s.join(" ").trim_start_matches('w')))
        .collect();
    Document::new("bench", text.join(" "), &world.vocab, unit)
}
