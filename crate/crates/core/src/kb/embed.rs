use crate::model::fnv1a64;

use super::KbError;

/// Text to fixed-dimension vector map.
pub trait Embedder: Send + Sync {
    /// Identifier recorded in store metadata.
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, KbError>;
}

/// Seeded feature hashing over lower-cased word unigrams and bigrams with
/// signed buckets, L2-normalized. Text without words falls back to its
/// non-whitespace characters.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self {
            dim: 256,
            seed: 0x5eed,
        }
    }
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl HashingEmbedder {
    fn bucket(&self, feature: &str) -> (usize, f64) {
        let mut bytes = self.seed.to_le_bytes().to_vec();
        bytes.extend_from_slice(feature.as_bytes());
        let h = fnv1a64(&bytes);
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        ((h % self.dim as u64) as usize, sign)
    }
}

impl Embedder for HashingEmbedder {
    fn id(&self) -> String {
        format!("hashing-fnv1a64-uni-bi/seed={}", self.seed)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, KbError> {
        let mut tokens = words(text);
        if tokens.is_empty() {
            tokens = text
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(String::from)
                .collect();
        }
        let mut v = vec![0.0; self.dim];
        for t in &tokens {
            let (i, s) = self.bucket(t);
            v[i] += s;
        }
        for pair in tokens.windows(2) {
            let (i, s) = self.bucket(&format!("{} {}", pair[0], pair[1]));
            v[i] += 0.5 * s;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(KbError::EmbedderFailure(
                "text has no features to embed".into(),
            ));
        }
        Ok(v.into_iter().map(|x| x / norm).collect())
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_normalized() {
        let e = HashingEmbedder::default();
        let a = e.embed("Bishop simplified method").unwrap();
        assert_eq!(a, e.embed("bishop SIMPLIFIED, method!").unwrap());
        assert!((cosine(&a, &a) - 1.0).abs() < 1e-12);
        assert_eq!(a.len(), 256);
    }

    #[test]
    fn seed_changes_the_map() {
        let a = HashingEmbedder { dim: 64, seed: 1 }
            .embed("water table")
            .unwrap();
        let b = HashingEmbedder { dim: 64, seed: 2 }
            .embed("water table")
            .unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn punctuation_only_text_still_embeds() {
        assert!(HashingEmbedder::default().embed("°³").is_ok());
        assert!(HashingEmbedder::default().embed("  ").is_err());
    }
}
