use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::SimilarityTransform;
use crate::model::{Primitive, Vec3};
use crate::script::emit_hardcoded;

use super::{EnumerablePolicy, Policy, PolicyVersion, Question, Sample};

/// A categorical distribution over a fixed set of complete answers.
///
/// Token probabilities follow from the answer probabilities: the chance of
/// token `t` given a prefix is the mass of answers extending the prefix with
/// `t` over the mass of answers sharing the prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct MockQuestion {
    pub texts: Vec<String>,
    pub tokens: Vec<Vec<u32>>,
    pub theta: Vec<f64>,
    pub theta_old: Vec<f64>,
    pub theta_ref: Vec<f64>,
    /// Answer favored by each guidance code.
    pub guidance_target: Vec<usize>,
    pub guidance_bonus: f64,
}

/// Whitespace-separated words, numbered in sorted order, plus a final
/// end-of-sequence id so that no answer is a prefix of another.
pub fn tokenize_answers(texts: &[String]) -> Vec<Vec<u32>> {
    let vocab: BTreeSet<&str> = texts.iter().flat_map(|t| t.split_whitespace()).collect();
    let vocab: Vec<&str> = vocab.into_iter().collect();
    let eos = vocab.len() as u32;
    texts
        .iter()
        .map(|t| {
            let mut ids: Vec<u32> =
                t.split_whitespace().map(|w| vocab.binary_search(&w).expect("word in vocab") as u32).collect();
            ids.push(eos);
            ids
        })
        .collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

impl MockQuestion {
    pub fn new(
        texts: Vec<String>,
        theta: Vec<f64>,
        theta_old: Vec<f64>,
        theta_ref: Vec<f64>,
        guidance_target: Vec<usize>,
        guidance_bonus: f64,
    ) -> Self {
        let k = texts.len();
        assert!(k > 0 && theta.len() == k && theta_old.len() == k && theta_ref.len() == k);
        assert!(guidance_target.iter().all(|&g| g < k));
        let tokens = tokenize_answers(&texts);
        MockQuestion { texts, tokens, theta, theta_old, theta_ref, guidance_target, guidance_bonus }
    }

    pub fn probs(&self, guidance: Option<usize>, version: PolicyVersion) -> Vec<f64> {
        let mut logits = match version {
            PolicyVersion::Current => self.theta.clone(),
            PolicyVersion::Old => self.theta_old.clone(),
            PolicyVersion::Reference => self.theta_ref.clone(),
        };
        if let Some(j) = guidance {
            logits[self.guidance_target[j]] += self.guidance_bonus;
        }
        softmax(&logits)
    }

    /// Per-token log-probabilities, walking the answers that share the prefix.
    pub fn logprobs(&self, tokens: &[u32], guidance: Option<usize>, version: PolicyVersion) -> Vec<f64> {
        let p = self.probs(guidance, version);
        let mut alive: Vec<usize> = (0..self.texts.len()).collect();
        let mut out = Vec::with_capacity(tokens.len());
        for (t, &tok) in tokens.iter().enumerate() {
            let before: f64 = alive.iter().map(|&k| p[k]).sum();
            alive.retain(|&k| self.tokens[k].get(t) == Some(&tok));
            let after: f64 = alive.iter().map(|&k| p[k]).sum();
            out.push(if after > 0.0 { (after / before).ln() } else { f64::NEG_INFINITY });
        }
        out
    }

    /// Exact KL divergence between the current and reference answer
    /// distributions, merging answers with equal token sequences.
    pub fn kl(&self) -> f64 {
        let p = self.probs(None, PolicyVersion::Current);
        let q = self.probs(None, PolicyVersion::Reference);
        let mut merged: Vec<(&[u32], f64, f64)> = Vec::new();
        for k in 0..self.texts.len() {
            match merged.iter_mut().find(|(t, _, _)| *t == self.tokens[k].as_slice()) {
                Some(e) => {
                    e.1 += p[k];
                    e.2 += q[k];
                }
                None => merged.push((&self.tokens[k], p[k], q[k])),
            }
        }
        merged.iter().filter(|(_, a, _)| *a > 0.0).map(|(_, a, b)| a * (a / b).ln()).sum()
    }

    pub fn sample(&self, guidance: Option<usize>, rng: &mut ChaCha8Rng) -> Sample {
        let p = self.probs(guidance, PolicyVersion::Old);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = p.len() - 1;
        for (k, pk) in p.iter().enumerate() {
            acc += pk;
            if u < acc {
                pick = k;
                break;
            }
        }
        Sample { tokens: self.tokens[pick].clone(), text: self.texts[pick].clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockConfig {
    pub seed: u64,
    /// Logit added to the favored answer when a guidance code is in context.
    pub guidance_bonus: f64,
    /// Spread of the current parameters around the sampling parameters.
    pub drift: f64,
    /// Largest logit penalty on answers that open with a think block; each
    /// question draws a fraction of it.
    pub think_penalty: f64,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig { seed: 0, guidance_bonus: 6.0, drift: 0.05, think_penalty: 8.0 }
    }
}

/// Seedable mock policy. Each question gets a small answer set built from
/// its ground truth: exact and scaled solutions, a broken script, with and
/// without a think block, plus one answer per guidance code.
#[derive(Debug, Default)]
pub struct MockPolicy {
    pub cfg: MockConfig,
    fixed: HashMap<String, Rc<MockQuestion>>,
    cache: RefCell<HashMap<String, Rc<MockQuestion>>>,
}

fn stable_hash(s: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn fenced(think: Option<&str>, code: &str) -> String {
    let head = think.map(|t| format!("<think>\n{t}\n</think>\n")).unwrap_or_default();
    format!("{head}```python\n{code}```\n")
}

impl MockPolicy {
    pub fn new(cfg: MockConfig) -> Self {
        MockPolicy { cfg, ..Default::default() }
    }

    /// Uses `state` verbatim for question `id`.
    pub fn with_question(mut self, id: impl Into<String>, state: MockQuestion) -> Self {
        self.fixed.insert(id.into(), Rc::new(state));
        self
    }

    pub fn state(&self, q: &Question) -> Rc<MockQuestion> {
        if let Some(s) = self.fixed.get(&q.id) {
            return s.clone();
        }
        if let Some(s) = self.cache.borrow().get(&q.id) {
            return s.clone();
        }
        let s = Rc::new(self.build(q));
        self.cache.borrow_mut().insert(q.id.clone(), s.clone());
        s
    }

    fn build(&self, q: &Question) -> MockQuestion {
        let exact = emit_hardcoded(&Primitive::MSE(q.gt.clone()));
        let shrunk = SimilarityTransform { translation: Vec3::ZERO, scale: 0.8 }.apply_model(&q.gt);
        let scaled = emit_hardcoded(&Primitive::MSE(shrunk));
        let broken = "cad_model = CADModel(\n";
        let plan = Some("Rebuild the part one sketch-extrude pair at a time.");
        let mut texts = vec![
            fenced(plan, &exact),
            fenced(plan, broken),
            fenced(plan, &scaled),
            fenced(None, &exact),
            fenced(None, &scaled),
        ];
        let with_think = [true, true, true, false, false];
        let mut guidance_target = Vec::new();
        for code in &q.guidance_codes {
            guidance_target.push(texts.len());
            texts.push(fenced(Some("Follow the reference program."), code));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ stable_hash(&q.id));
        let difficulty: f64 = rng.random();
        let theta_old: Vec<f64> = (0..texts.len())
            .map(|k| {
                let base = 2.0 * rng.random::<f64>() - 1.0;
                let think = k >= with_think.len() || with_think[k];
                let guided_only = if k >= with_think.len() { 2.0 } else { 0.0 };
                base - if think { self.cfg.think_penalty * difficulty } else { 0.0 } - guided_only
            })
            .collect();
        let theta: Vec<f64> =
            theta_old.iter().map(|t| t + self.cfg.drift * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let theta_ref = vec![0.0; texts.len()];
        MockQuestion::new(texts, theta, theta_old, theta_ref, guidance_target, self.cfg.guidance_bonus)
    }
}

impl Policy for MockPolicy {
    fn sample(&self, q: &Question, guidance: Option<usize>, rng: &mut ChaCha8Rng) -> Sample {
        self.state(q).sample(guidance, rng)
    }

    fn logprobs(&self, q: &Question, tokens: &[u32], guidance: Option<usize>, version: PolicyVersion) -> Vec<f64> {
        self.state(q).logprobs(tokens, guidance, version)
    }

    fn kl(&self, q: &Question) -> f64 {
        self.state(q).kl()
    }
}

impl EnumerablePolicy for MockPolicy {
    fn support(&self, q: &Question, guidance: Option<usize>, version: PolicyVersion) -> Vec<(f64, Sample)> {
        let s = self.state(q);
        s.probs(guidance, version)
            .into_iter()
            .enumerate()
            .map(|(k, p)| (p, Sample { tokens: s.tokens[k].clone(), text: s.texts[k].clone() }))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> MockQuestion {
        let texts = ["a b c", "a b d", "a e", "f"].map(String::from).to_vec();
        MockQuestion::new(texts, vec![0.1, 0.2, -0.3, 0.0], vec![0.0; 4], vec![0.5, 0.0, 0.0, -0.5], vec![3], 2.0)
    }

    #[test]
    fn token_logprobs_sum_to_answer_logprob() {
        let m = toy();
        for g in [None, Some(0)] {
            for v in [PolicyVersion::Current, PolicyVersion::Old, PolicyVersion::Reference] {
                let p = m.probs(g, v);
                for k in 0..4 {
                    let s: f64 = m.logprobs(&m.tokens[k], g, v).iter().sum();
                    assert!((s - p[k].ln()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn kl_is_zero_against_itself_and_positive_otherwise() {
        let mut m = toy();
        assert!(m.kl() > 0.0);
        m.theta_ref = m.theta.clone();
        assert!(m.kl().abs() < 1e-15);
    }

    #[test]
    fn sampling_is_seeded() {
        let m = toy();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| m.sample(None, &mut rng).text).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let guided = (0..50).filter(|_| m.sample(Some(0), &mut rng).text == "f").count();
        assert!(guided > 25);
    }
}
