use serde::{Deserialize, Serialize};

use super::LlmError;

/// Dimension of the reference bag-of-words embedder.
pub const REFERENCE_DIMENSION: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub values: Vec<f64>,
}

impl Embedding {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// L2-normalized copy, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Embedding> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(Embedding {
            values: self.values.iter().map(|v| v / n).collect(),
        })
    }
}

pub trait Embedder {
    fn dimension(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Embedding, LlmError>;
}

pub fn cosine(a: &Embedding, b: &Embedding) -> f64 {
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Feature-hashing bag of words: lowercase alphanumeric tokens, FNV-1a
/// bucketed, L2-normalized. Empty text maps to the zero vector.
#[derive(Debug, Clone, Copy)]
pub struct BagOfWordsEmbedder {
    dimension: usize,
}

impl Default for BagOfWordsEmbedder {
    fn default() -> Self {
        BagOfWordsEmbedder {
            dimension: REFERENCE_DIMENSION,
        }
    }
}

impl BagOfWordsEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        BagOfWordsEmbedder { dimension }
    }

    pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(token.as_bytes()) % self.dimension as u64) as usize
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Embedder for BagOfWordsEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Embedding, LlmError> {
        let mut values = vec![0.0; self.dimension];
        for t in Self::tokens(text) {
            values[self.bucket(&t)] += 1.0;
        }
        let raw = Embedding { values };
        Ok(raw.normalized().unwrap_or(raw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_fixed_dimension() {
        let e = BagOfWordsEmbedder::default();
        for text in ["", "greet angel", "rb1 is a robot (x=1)"] {
            let a = e.embed(text).unwrap();
            let b = e.embed(text).unwrap();
            assert_eq!(a.values.len(), 256);
            assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn token_overlap_orders_similarity() {
        let e = BagOfWordsEmbedder::default();
        let angel = e.embed("angel").unwrap();
        let near = cosine(&angel, &e.embed("angel at bedroom").unwrap());
        let far = cosine(&angel, &e.embed("rb1 is a robot").unwrap());
        // One shared token out of three distinct ones, none shared with the robot item.
        let buckets: std::collections::HashSet<usize> =
            ["angel", "at", "bedroom"].iter().map(|t| e.bucket(t)).collect();
        assert_eq!(buckets.len(), 3, "no collisions among the probe tokens");
        assert!((near - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(far, 0.0);
        assert!(near > far);
    }

    #[test]
    fn tokens_split_on_non_alphanumerics() {
        let toks: Vec<String> = BagOfWordsEmbedder::tokens("Living_Room (waypoint=[0, 3])").collect();
        assert_eq!(toks, ["living", "room", "waypoint", "0", "3"]);
    }
}
