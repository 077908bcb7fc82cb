//! Linearly separable two-class corpus: class 0 words use only the letters
//! a..m, class 1 words only n..z, so no word or character n-gram is shared
//! between the classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabeledText;

const CLASS_ALPHABETS: [&[u8]; 2] = [b"abcdefghijklm", b"nopqrstuvwxyz"];
const WORDS_PER_CLASS: usize = 60;

fn vocabulary(label: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let alphabet = CLASS_ALPHABETS[label];
    let mut words = Vec::with_capacity(WORDS_PER_CLASS);
    while words.len() < WORDS_PER_CLASS {
        let len = rng.gen_range(3..=7);
        let w: String = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())] as char).collect();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    words
}

/// `per_class` items of each label, interleaved 0,1,0,1,... Each item has
/// 4 to 12 words drawn from its class vocabulary.
pub fn separable_corpus(per_class: usize, seed: u64) -> Vec<LabeledText> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocabs = [vocabulary(0, &mut rng), vocabulary(1, &mut rng)];
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..per_class {
        for label in 0..2u8 {
            let vocab = &vocabs[label as usize];
            let n = rng.gen_range(4..=12);
            let words: Vec<&str> = (0..n).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
            out.push(LabeledText { id: format!("s{label}-{i:05}"), text: words.join(" "), label });
        }
    }
    out
}
