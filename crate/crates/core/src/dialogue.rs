//! One conversational turn: classify, apply context filters and the
//! confidence threshold, pick a response, update the context.
//!
//! [`Bot::respond`] is total. Every input, including empty or non-Ethiopic
//! text, yields a reply. Callers own context storage and must serialize turns
//! for the same user.

use std::collections::BTreeSet;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::artifact::ModelArtifact;
use crate::classifiers::Classifier;
use crate::features::vectorize;
use crate::intents::{Intent, IntentCatalog};
use crate::text::PreprocessConfig;

pub const DEFAULT_FALLBACK: &str = "ይቅርታ፣ ጥያቄዎን በደንብ አልገባኝም። እባክዎ በሌላ መንገድ ይጠይቁ።";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DialogueError {
    #[error("artifact does not match the catalog or rules: {0}")]
    ArtifactMismatch(String),
    #[error("invalid dialogue config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationContext {
    pub user_id: String,
    /// Never `Some("")`.
    pub active_context: Option<String>,
    /// Milliseconds since the Unix epoch.
    pub updated_at: u64,
    /// Completed turns; feeds the per-turn response RNG.
    #[serde(default)]
    pub turns: u64,
}

impl ConversationContext {
    pub fn new(user_id: impl Into<String>) -> Self {
        Self {
            user_id: user_id.into(),
            active_context: None,
            updated_at: now_millis(),
            turns: 0,
        }
    }

    pub fn with_context(mut self, ctx: impl Into<String>) -> Self {
        let ctx = ctx.into();
        self.active_context = (!ctx.is_empty()).then_some(ctx);
        self
    }
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackReason {
    /// No input stem is in the vocabulary.
    NoFeatures,
    /// Every intent is filtered out by the active context.
    NoEligibleIntent,
    LowConfidence,
    /// The message carried no text (attachments, stickers).
    NonText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BotReply {
    pub text: String,
    /// `None` exactly when `fallback` is set.
    pub intent_tag: Option<String>,
    pub confidence: f64,
    pub context_after: Option<String>,
    pub fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<FallbackReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DialogueConfig {
    pub confidence_threshold: f64,
    pub fallback_responses: Vec<String>,
    /// Base seed of the per-turn response RNG.
    pub seed: u64,
}

impl Default for DialogueConfig {
    fn default() -> Self {
        Self {
            confidence_threshold: 0.25,
            fallback_responses: vec![DEFAULT_FALLBACK.to_string()],
            seed: 42,
        }
    }
}

impl DialogueConfig {
    pub fn validate(&self) -> Result<(), DialogueError> {
        if !(0.0..1.0).contains(&self.confidence_threshold) {
            return Err(DialogueError::BadConfig(format!(
                "confidence_threshold must lie in [0, 1), got {}",
                self.confidence_threshold
            )));
        }
        if self.fallback_responses.is_empty() {
            return Err(DialogueError::BadConfig(
                "fallback_responses is empty".into(),
            ));
        }
        Ok(())
    }
}

/// Intents without a filter, plus those whose filter equals the active context.
pub fn eligible_intents<'a>(
    catalog: &'a IntentCatalog,
    ctx: &ConversationContext,
) -> Vec<&'a Intent> {
    catalog
        .intents
        .iter()
        .filter(|i| match i.filter() {
            None => true,
            Some(f) => ctx.active_context.as_deref() == Some(f),
        })
        .collect()
}

pub fn pick_response<'a, R: Rng + ?Sized>(intent: &'a Intent, rng: &mut R) -> &'a str {
    intent
        .responses
        .choose(rng)
        .expect("validated intents have responses")
}

/// Applies an intent's `context_set`: `Some("")` clears, `None` keeps.
fn next_context(current: &Option<String>, intent: &Intent) -> Option<String> {
    match intent.context_set.as_deref() {
        None => current.clone(),
        Some("") => None,
        Some(c) => Some(c.to_string()),
    }
}

/// A trained model bound to its catalog and rules.
#[derive(Debug, Clone)]
pub struct Bot {
    artifact: ModelArtifact,
    catalog: IntentCatalog,
    rules: PreprocessConfig,
    config: DialogueConfig,
    /// Class index → position in `catalog.intents`.
    intent_of_class: Vec<usize>,
}

impl Bot {
    pub fn new(
        artifact: ModelArtifact,
        catalog: IntentCatalog,
        rules: PreprocessConfig,
        config: DialogueConfig,
    ) -> Result<Self, DialogueError> {
        config.validate()?;
        artifact
            .check_rules(&rules)
            .map_err(|e| DialogueError::ArtifactMismatch(e.to_string()))?;
        let model_tags: BTreeSet<&str> =
            artifact.labels.tags().iter().map(String::as_str).collect();
        let catalog_tags: BTreeSet<&str> = catalog.intents.iter().map(|i| i.tag.as_str()).collect();
        if model_tags != catalog_tags {
            let missing: Vec<_> = model_tags.symmetric_difference(&catalog_tags).collect();
            return Err(DialogueError::ArtifactMismatch(format!(
                "model labels and catalog tags differ: {missing:?}"
            )));
        }
        let intent_of_class = artifact
            .labels
            .tags()
            .iter()
            .map(|t| {
                catalog
                    .intents
                    .iter()
                    .position(|i| &i.tag == t)
                    .expect("tag sets equal")
            })
            .collect();
        Ok(Self {
            artifact,
            catalog,
            rules,
            config,
            intent_of_class,
        })
    }

    pub fn artifact(&self) -> &ModelArtifact {
        &self.artifact
    }

    pub fn catalog(&self) -> &IntentCatalog {
        &self.catalog
    }

    pub fn rules(&self) -> &PreprocessConfig {
        &self.rules
    }

    pub fn config(&self) -> &DialogueConfig {
        &self.config
    }

    /// RNG for the next turn of `ctx`, derived from the base seed, the user id
    /// and the turn counter, so any surface replaying the same conversation
    /// gets the same replies.
    pub fn turn_rng(&self, ctx: &ConversationContext) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.config.seed.to_le_bytes());
        h.update(ctx.turns.to_le_bytes());
        h.update(ctx.user_id.as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    pub fn respond(
        &self,
        ctx: &ConversationContext,
        text: &str,
    ) -> (BotReply, ConversationContext) {
        let mut rng = self.turn_rng(ctx);
        self.respond_with_rng(ctx, text, &mut rng)
    }

    pub fn respond_with_rng<R: Rng + ?Sized>(
        &self,
        ctx: &ConversationContext,
        text: &str,
        rng: &mut R,
    ) -> (BotReply, ConversationContext) {
        let stems = self.rules.preprocess(text);
        let vector = vectorize(&stems, &self.artifact.vocabulary, self.artifact.bow_mode);
        if vector.is_zero() {
            return self.fallback(ctx, FallbackReason::NoFeatures, 0.0, rng);
        }
        let ranking = match self.artifact.classifier.predict(vector.as_slice()) {
            Ok(r) => r,
            // unreachable for a validated artifact; stay total regardless
            Err(_) => return self.fallback(ctx, FallbackReason::NoFeatures, 0.0, rng),
        };
        let eligible: Vec<&Intent> = eligible_intents(&self.catalog, ctx);
        let top = ranking.iter().find(|(class, _)| {
            let intent = &self.catalog.intents[self.intent_of_class[*class]];
            eligible.iter().any(|e| std::ptr::eq(*e, intent))
        });
        let Some(&(class, prob)) = top else {
            return self.fallback(ctx, FallbackReason::NoEligibleIntent, 0.0, rng);
        };
        let confidence = prob.clamp(0.0, 1.0);
        if confidence < self.config.confidence_threshold {
            return self.fallback(ctx, FallbackReason::LowConfidence, confidence, rng);
        }
        let intent = &self.catalog.intents[self.intent_of_class[class]];
        let reply_text = pick_response(intent, rng).to_string();
        let context_after = next_context(&ctx.active_context, intent);
        let updated = ConversationContext {
            user_id: ctx.user_id.clone(),
            active_context: context_after.clone(),
            updated_at: now_millis(),
            turns: ctx.turns + 1,
        };
        let reply = BotReply {
            text: reply_text,
            intent_tag: Some(intent.tag.clone()),
            confidence,
            context_after,
            fallback: false,
            fallback_reason: None,
        };
        (reply, updated)
    }

    /// Fallback reply for a message without text.
    pub fn respond_non_text(&self, ctx: &ConversationContext) -> (BotReply, ConversationContext) {
        let mut rng = self.turn_rng(ctx);
        self.fallback(ctx, FallbackReason::NonText, 0.0, &mut rng)
    }

    fn fallback<R: Rng + ?Sized>(
        &self,
        ctx: &ConversationContext,
        reason: FallbackReason,
        confidence: f64,
        rng: &mut R,
    ) -> (BotReply, ConversationContext) {
        let text = self
            .config
            .fallback_responses
            .choose(rng)
            .expect("validated config has fallbacks")
            .clone();
        let updated = ConversationContext {
            user_id: ctx.user_id.clone(),
            active_context: ctx.active_context.clone(),
            updated_at: now_millis(),
            turns: ctx.turns + 1,
        };
        let reply = BotReply {
            text,
            intent_tag: None,
            confidence,
            context_after: ctx.active_context.clone(),
            fallback: true,
            fallback_reason: Some(reason),
        };
        (reply, updated)
    }
}
