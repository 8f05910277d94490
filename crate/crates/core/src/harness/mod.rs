//! GRPO objectives with off-policy guidance, hard-question gating, a mock
//! categorical policy, and the primitive curriculum.

pub mod curriculum;
pub mod mock;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Categorized, FailureCategory};
use crate::model::CADModel;

pub use curriculum::{
    build_curriculum, dedup_primitives, rewrite_filter, CurriculumConfig, CurriculumManifest, CurriculumOutput,
    ManifestEntry, SkippedModel,
};
pub use mock::{MockConfig, MockPolicy, MockQuestion};

/// Guard added to the population standard deviation of group rewards.
pub const EPS_STD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Categorized for HarnessError {
    fn category(&self) -> FailureCategory {
        FailureCategory::Evaluation
    }
}

fn pre(msg: impl Into<String>) -> HarnessError {
    HarnessError::Precondition(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Image,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub modality: Modality,
    pub payload: String,
    pub gt: CADModel,
    /// Known-correct scripts used as off-policy guidance.
    pub guidance_codes: Vec<String>,
}

/// One sampled solution with per-token log-probabilities.
///
/// `ratio_num[t]` is `log π_θ(τ_t | q, τ_<t)`; `ratio_den[t]` is the same
/// token under the sampling policy and its context, which for guided
/// rollouts includes the guidance code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub tokens: Vec<u32>,
    pub ratio_num: Vec<f64>,
    pub ratio_den: Vec<f64>,
    pub guided: bool,
    pub guidance_index: Option<usize>,
    pub solution_text: String,
    pub reward: f64,
}

impl Rollout {
    fn check(&self) -> Result<(), HarnessError> {
        let n = self.tokens.len();
        if n == 0 || self.ratio_num.len() != n || self.ratio_den.len() != n {
            return Err(pre(format!(
                "rollout needs matching non-empty sequences, got {} tokens, {} numerators, {} denominators",
                n,
                self.ratio_num.len(),
                self.ratio_den.len()
            )));
        }
        if self.guided != self.guidance_index.is_some() {
            return Err(pre("guided rollouts carry a guidance index and only they do"));
        }
        Ok(())
    }

    /// `(1/|τ|) Σ_t CLIP(exp(num_t - den_t), A, ε)`.
    pub fn surrogate(&self, advantage: f64, eps: f64) -> Result<f64, HarnessError> {
        self.check()?;
        let sum: f64 = self
            .ratio_num
            .iter()
            .zip(&self.ratio_den)
            .map(|(n, d)| clip_term((n - d).exp(), advantage, eps))
            .sum();
        Ok(sum / self.tokens.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub question_id: String,
    pub rollouts: Vec<Rollout>,
    pub advantages: Option<Vec<f64>>,
}

impl Group {
    /// Group with advantages computed over all rollouts, guided or not.
    pub fn new(question_id: impl Into<String>, rollouts: Vec<Rollout>) -> Result<Self, HarnessError> {
        let rewards: Vec<f64> = rollouts.iter().map(|r| r.reward).collect();
        let advantages = group_advantages(&rewards)?;
        Ok(Group { question_id: question_id.into(), rollouts, advantages: Some(advantages) })
    }

    fn advantages(&self) -> Result<&[f64], HarnessError> {
        match &self.advantages {
            Some(a) if a.len() == self.rollouts.len() => Ok(a),
            Some(_) => Err(pre("one advantage per rollout")),
            None => Err(pre("advantages not computed")),
        }
    }

    pub fn guided_count(&self) -> usize {
        self.rollouts.iter().filter(|r| r.guided).count()
    }
}

/// `(R_i - mean) / max(std, EPS_STD)` with the population standard deviation.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, HarnessError> {
    if rewards.len() < 2 {
        return Err(pre(format!("advantages need at least two rewards, got {}", rewards.len())));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(rewards.iter().map(|r| (r - mean) / std.max(EPS_STD)).collect())
}

/// `min(r A, clip(r, 1 - ε, 1 + ε) A)`.
pub fn clip_term(r: f64, a: f64, eps: f64) -> f64 {
    (r * a).min(r.clamp(1.0 - eps, 1.0 + eps) * a)
}

fn check_eps(eps: f64) -> Result<(), HarnessError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(pre(format!("clip range must lie in (0, 1), got {eps}")))
    }
}

/// Plain GRPO objective of an on-policy group.
pub fn grpo_objective(group: &Group, eps: f64, beta: f64, kl: f64) -> Result<f64, HarnessError> {
    check_eps(eps)?;
    let adv = group.advantages()?;
    if group.rollouts.is_empty() {
        return Err(pre("empty group"));
    }
    if group.guided_count() > 0 {
        return Err(pre("grpo_objective expects on-policy rollouts only"));
    }
    let mut sum = 0.0;
    for (r, a) in group.rollouts.iter().zip(adv) {
        sum += r.surrogate(*a, eps)?;
    }
    Ok(sum / group.rollouts.len() as f64 - beta * kl)
}

/// Guidance objective: the on-policy and guided surrogates are averaged
/// separately and added. Advantages come from the whole group.
pub fn guided_objective(group: &Group, eps: f64, beta: f64, kl: f64) -> Result<f64, HarnessError> {
    check_eps(eps)?;
    let adv = group.advantages()?;
    let (mut on, mut on_n, mut gd, mut gd_n) = (0.0, 0usize, 0.0, 0usize);
    for (r, a) in group.rollouts.iter().zip(adv) {
        let s = r.surrogate(*a, eps)?;
        if r.guided {
            gd += s;
            gd_n += 1;
        } else {
            on += s;
            on_n += 1;
        }
    }
    if gd_n == 0 {
        return Err(pre("no guided rollouts; use grpo_objective"));
    }
    let on_term = if on_n == 0 { 0.0 } else { on / on_n as f64 };
    Ok(on_term + gd / gd_n as f64 - beta * kl)
}

/// Which parameter set a log-probability is taken under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyVersion {
    /// π_θ, being optimized.
    Current,
    /// π_θ_old, which produced the samples.
    Old,
    /// π_ref, the KL anchor.
    Reference,
}

/// A solution drawn from a policy.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub tokens: Vec<u32>,
    pub text: String,
}

pub trait Policy {
    /// Draws from π_θ_old given the question and, optionally, guidance code `guidance`.
    fn sample(&self, q: &Question, guidance: Option<usize>, rng: &mut ChaCha8Rng) -> Sample;

    fn logprobs(&self, q: &Question, tokens: &[u32], guidance: Option<usize>, version: PolicyVersion) -> Vec<f64>;

    /// `D_KL[π_θ || π_ref]` for the unguided question context.
    fn kl(&self, q: &Question) -> f64;
}

/// A policy whose full output distribution can be listed.
pub trait EnumerablePolicy: Policy {
    /// Every distinct output with its probability under `version`.
    fn support(&self, q: &Question, guidance: Option<usize>, version: PolicyVersion) -> Vec<(f64, Sample)>;
}

/// Scores a solution text against a question.
pub type RewardFn<'a> = dyn Fn(&Question, &str) -> f64 + 'a;

/// Turns a sample into a rollout: the denominator is scored in the sampling
/// context, the numerator by the current policy without guidance.
pub fn to_rollout(policy: &dyn Policy, q: &Question, guidance: Option<usize>, s: Sample, reward: f64) -> Rollout {
    let ratio_den = policy.logprobs(q, &s.tokens, guidance, PolicyVersion::Old);
    let ratio_num = policy.logprobs(q, &s.tokens, None, PolicyVersion::Current);
    Rollout {
        tokens: s.tokens,
        ratio_num,
        ratio_den,
        guided: guidance.is_some(),
        guidance_index: guidance,
        solution_text: s.text,
        reward,
    }
}

pub fn rollout(
    policy: &dyn Policy,
    q: &Question,
    guidance: Option<usize>,
    reward_fn: &RewardFn,
    rng: &mut ChaCha8Rng,
) -> Rollout {
    let s = policy.sample(q, guidance, rng);
    let reward = reward_fn(q, &s.text);
    to_rollout(policy, q, guidance, s, reward)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hardness {
    pub hard: bool,
    pub max_reward: f64,
    pub rewards: Vec<f64>,
}

/// Samples `n` unguided solutions; the question is hard when none reaches `tau_h`.
pub fn classify_hardness(
    q: &Question,
    policy: &dyn Policy,
    reward_fn: &RewardFn,
    n: usize,
    tau_h: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Hardness, HarnessError> {
    if n == 0 {
        return Err(pre("hardness needs at least one sample"));
    }
    if !(tau_h > 0.0 && tau_h <= 1.0) {
        return Err(pre(format!("tau_h must lie in (0, 1], got {tau_h}")));
    }
    let rewards: Vec<f64> = (0..n).map(|_| reward_fn(q, &policy.sample(q, None, rng).text)).collect();
    let max_reward = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Hardness { hard: max_reward < tau_h, max_reward, rewards })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    /// Rollouts per question.
    pub n: usize,
    pub eps: f64,
    /// KL weight; there is no default.
    pub beta: f64,
    pub tau_h: f64,
}

impl HarnessConfig {
    pub fn new(beta: f64) -> Self {
        HarnessConfig { n: 8, eps: 0.2, beta, tau_h: 0.8 }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n < 2 {
            return Err(pre(format!("group size must be at least 2, got {}", self.n)));
        }
        check_eps(self.eps)?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(pre(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.tau_h > 0.0 && self.tau_h <= 1.0) {
            return Err(pre(format!("tau_h must lie in (0, 1], got {}", self.tau_h)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionReport {
    pub question_id: String,
    pub hard: bool,
    pub guided_rollouts: usize,
    pub objective: f64,
    pub kl: f64,
    pub mean_reward: f64,
    pub max_reward: f64,
    pub rewards: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainStepReport {
    pub step: usize,
    /// Batch mean of the per-question objectives.
    pub objective: f64,
    pub questions: Vec<QuestionReport>,
}

/// Samples a group for `q`: the first `min(|C|, n - 1)` rollouts are guided
/// when `use_guidance` is set, one per guidance code.
pub fn sample_group(
    q: &Question,
    policy: &dyn Policy,
    reward_fn: &RewardFn,
    n: usize,
    use_guidance: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Group, HarnessError> {
    let g = if use_guidance { q.guidance_codes.len().min(n.saturating_sub(1)) } else { 0 };
    let rollouts = (0..n).map(|i| rollout(policy, q, (i < g).then_some(i), reward_fn, rng)).collect();
    Group::new(q.id.clone(), rollouts)
}

/// One step of the mixed objective: hard questions with guidance use the
/// guidance objective, everything else plain GRPO; the step objective is the
/// uniform batch mean.
pub fn mixed_loss(
    batch: &[Question],
    hard: &[bool],
    policy: &dyn Policy,
    reward_fn: &RewardFn,
    cfg: &HarnessConfig,
    step: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TrainStepReport, HarnessError> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(pre("empty batch"));
    }
    if hard.len() != batch.len() {
        return Err(pre("one hardness flag per question"));
    }
    let mut questions = Vec::with_capacity(batch.len());
    for (q, &is_hard) in batch.iter().zip(hard) {
        if is_hard && q.guidance_codes.is_empty() {
            log::warn!("question {} is hard but has no guidance; using plain GRPO", q.id);
        }
        let group = sample_group(q, policy, reward_fn, cfg.n, is_hard, rng)?;
        let kl = policy.kl(q);
        let objective = if group.guided_count() > 0 {
            guided_objective(&group, cfg.eps, cfg.beta, kl)?
        } else {
            grpo_objective(&group, cfg.eps, cfg.beta, kl)?
        };
        let rewards: Vec<f64> = group.rollouts.iter().map(|r| r.reward).collect();
        questions.push(QuestionReport {
            question_id: q.id.clone(),
            hard: is_hard,
            guided_rollouts: group.guided_count(),
            objective,
            kl,
            mean_reward: rewards.iter().sum::<f64>() / rewards.len() as f64,
            max_reward: rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            rewards,
        });
    }
    let objective = questions.iter().map(|r| r.objective).sum::<f64>() / questions.len() as f64;
    Ok(TrainStepReport { step, objective, questions })
}

/// Exact expectation of the group objective over every joint outcome of an
/// enumerable policy. Slots `0..guided` are guided by codes `0..guided`.
pub fn expected_objective(
    policy: &dyn EnumerablePolicy,
    q: &Question,
    reward_fn: &RewardFn,
    n: usize,
    guided: usize,
    eps: f64,
    beta: f64,
) -> Result<f64, HarnessError> {
    if guided > n || guided > q.guidance_codes.len() {
        return Err(pre("more guided slots than rollouts or guidance codes"));
    }
    let kl = policy.kl(q);
    let per_slot: Vec<Vec<(f64, Rollout)>> = (0..n)
        .map(|i| {
            let ctx = (i < guided).then_some(i);
            policy
                .support(q, ctx, PolicyVersion::Old)
                .into_iter()
                .map(|(p, s)| {
                    let reward = reward_fn(q, &s.text);
                    (p, to_rollout(policy, q, ctx, s, reward))
                })
                .collect()
        })
        .collect();
    let mut total = 0.0;
    let mut pick = vec![0usize; n];
    loop {
        let mut p = 1.0;
        let mut rollouts = Vec::with_capacity(n);
        for (slot, &k) in per_slot.iter().zip(&pick) {
            p *= slot[k].0;
            rollouts.push(slot[k].1.clone());
        }
        if p > 0.0 {
            let group = Group::new(q.id.clone(), rollouts)?;
            let j = if guided > 0 {
                guided_objective(&group, eps, beta, kl)?
            } else {
                grpo_objective(&group, eps, beta, kl)?
            };
            total += p * j;
        }
        // odometer over the joint outcomes
        let mut i = 0;
        loop {
            if i == n {
                return Ok(total);
            }
            pick[i] += 1;
            if pick[i] < per_slot[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(num: f64, den: f64, reward: f64, guided: Option<usize>) -> Rollout {
        Rollout {
            tokens: vec![0],
            ratio_num: vec![num],
            ratio_den: vec![den],
            guided: guided.is_some(),
            guidance_index: guided,
            solution_text: String::new(),
            reward,
        }
    }

    #[test]
    fn advantages_hand_cases() {
        let a = group_advantages(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let s3 = 3f64.sqrt();
        for (x, y) in a.iter().zip([s3, -1.0 / s3, -1.0 / s3, -1.0 / s3]) {
            assert!((x - y).abs() < 1e-7, "{a:?}");
        }
        assert_eq!(group_advantages(&[0.3; 5]).unwrap(), vec![0.0; 5]);
        let b = group_advantages(&[1.0, 0.0]).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-7 && (b[1] + 1.0).abs() < 1e-7);
        assert!(group_advantages(&[1.0]).is_err());
    }

    #[test]
    fn clip_cases() {
        assert_eq!(clip_term(1.0, 0.7, 0.2), 0.7);
        assert_eq!(clip_term(2.0, 1.0, 0.2), 1.2);
        assert_eq!(clip_term(0.5, -1.0, 0.2), -0.8);
    }

    #[test]
    fn grpo_unit_ratios_is_mean_advantage() {
        let g = Group::new("q", vec![single(0.0, 0.0, 1.0, None), single(-1.0, -1.0, 0.0, None)]).unwrap();
        let j = grpo_objective(&g, 0.2, 0.0, 0.0).unwrap();
        assert!(j.abs() < 1e-15);
        assert_eq!(grpo_objective(&g, 0.2, 0.5, 0.1).unwrap(), j - 0.05);
    }

    #[test]
    fn guided_needs_guidance_and_grpo_rejects_it() {
        let on = Group::new("q", vec![single(0.0, 0.0, 1.0, None), single(0.0, 0.0, 0.0, None)]).unwrap();
        assert!(guided_objective(&on, 0.2, 0.0, 0.0).is_err());
        let mixed = Group::new("q", vec![single(0.0, 0.0, 1.0, Some(0)), single(0.0, 0.0, 0.0, None)]).unwrap();
        assert!(grpo_objective(&mixed, 0.2, 0.0, 0.0).is_err());
        // ratio 1 on both: each half contributes its advantage
        let j = guided_objective(&mixed, 0.2, 0.0, 0.0).unwrap();
        let a = mixed.advantages.as_ref().unwrap();
        assert!((j - (a[0] + a[1])).abs() < 1e-15);
    }

    #[test]
    fn all_guided_group() {
        let g = Group::new("q", vec![single(0.0, 0.0, 1.0, Some(0)), single(0.0, 0.0, 0.0, Some(1))]).unwrap();
        let j = guided_objective(&g, 0.2, 0.0, 0.0).unwrap();
        assert!(j.abs() < 1e-15);
    }

    #[test]
    fn malformed_rollouts_rejected() {
        let mut r = single(0.0, 0.0, 1.0, None);
        r.ratio_den.clear();
        let g = Group::new("q", vec![r, single(0.0, 0.0, 0.0, None)]).unwrap();
        assert!(grpo_objective(&g, 0.2, 0.0, 0.0).is_err());
        assert!(grpo_objective(&Group::new("q", vec![single(0.0, 0.0, 0.0, None); 2]).unwrap(), 1.5, 0.0, 0.0).is_err());
    }
}
