//! Hashed character and word n-gram features.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

// Domain bytes keep whole-token and word-n-gram hashes apart from character
// n-grams; 0xFF and 0xFE never occur in UTF-8.
const WHOLE_TOKEN_DOMAIN: u8 = 0xFF;
const WORD_NGRAM_DOMAIN: u8 = 0xFE;
const WORD_SEPARATOR: u8 = 0x1F;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_extend(FNV_OFFSET, bytes)
}

fn fnv1a_extend(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

#[inline]
fn bucket(hash: u64, bucket_count: usize) -> usize {
    debug_assert!(bucket_count.is_power_of_two());
    (hash & (bucket_count as u64 - 1)) as usize
}

/// Character n-gram extraction settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharNgrams {
    pub min: usize,
    pub max: usize,
    pub whole_token: bool,
    pub bucket_count: usize,
}

impl CharNgrams {
    /// The raw n-gram strings of `^text$`, by start position then length.
    pub fn grams(&self, text: &str) -> Vec<String> {
        let padded: Vec<char> = std::iter::once('^').chain(text.chars()).chain(std::iter::once('$')).collect();
        let mut out = Vec::new();
        for start in 0..padded.len() {
            for n in self.min..=self.max {
                if start + n > padded.len() {
                    break;
                }
                out.push(padded[start..start + n].iter().collect());
            }
        }
        out
    }

    /// Bucket ids of the n-grams (and of the whole token when enabled).
    pub fn ids(&self, text: &str) -> Vec<usize> {
        let mut ids = Vec::new();
        self.push_ids(text, &mut ids);
        ids
    }

    pub(crate) fn push_ids(&self, text: &str, ids: &mut Vec<usize>) {
        for gram in self.grams(text) {
            ids.push(bucket(fnv1a(gram.as_bytes()), self.bucket_count));
        }
        if self.whole_token {
            let h = fnv1a_extend(fnv1a(&[WHOLE_TOKEN_DOMAIN]), text.as_bytes());
            ids.push(bucket(h, self.bucket_count));
        }
    }
}

/// Bucket id of a word n-gram (n >= 2).
pub(crate) fn word_ngram_id(words: &[&str], bucket_count: usize) -> usize {
    let mut h = fnv1a(&[WORD_NGRAM_DOMAIN]);
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            h = fnv1a_extend(h, &[WORD_SEPARATOR]);
        }
        h = fnv1a_extend(h, w.as_bytes());
    }
    bucket(h, bucket_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn grams_of_short_tokens() {
        let cfg = CharNgrams { min: 2, max: 2, whole_token: false, bucket_count: 1 << 10 };
        assert_eq!(cfg.grams("ab"), ["^a", "ab", "b$"]);
        assert_eq!(cfg.ids("ab").len(), 3);
        let cfg = CharNgrams { min: 2, max: 3, whole_token: false, bucket_count: 1 << 10 };
        assert_eq!(cfg.grams("a"), ["^a", "^a$", "a$"]);
        let cfg = CharNgrams { min: 2, max: 3, whole_token: true, bucket_count: 1 << 10 };
        assert_eq!(cfg.ids("a").len(), 4);
    }

    #[test]
    fn grams_are_character_based() {
        let cfg = CharNgrams { min: 2, max: 2, whole_token: false, bucket_count: 1 << 10 };
        assert_eq!(cfg.grams("या"), ["^य", "या", "ा$"]);
    }

    #[test]
    fn ids_in_range_and_deterministic() {
        let cfg = CharNgrams { min: 2, max: 5, whole_token: true, bucket_count: 1 << 8 };
        let a = cfg.ids("namaste");
        assert_eq!(a, cfg.ids("namaste"));
        assert!(a.iter().all(|&i| i < 256));
        assert!(word_ngram_id(&["a", "b"], 256) < 256);
        assert_ne!(word_ngram_id(&["ab", "c"], 1 << 20), word_ngram_id(&["a", "bc"], 1 << 20));
    }
}
