use std::sync::Mutex;

use faqbot_core::dialogue::BotReply;

/// Destination of replies produced by webhook events. A platform send-API
/// client would implement this; the default only logs.
pub trait OutboundSink: Send + Sync {
    fn deliver(&self, recipient: &str, reply: &BotReply);
}

#[derive(Debug, Default)]
pub struct LogSink;

impl OutboundSink for LogSink {
    fn deliver(&self, recipient: &str, reply: &BotReply) {
        log::info!(
            "reply to {recipient}: intent={} confidence={:.3} text={:?}",
            reply.intent_tag.as_deref().unwrap_or("-"),
            reply.confidence,
            reply.text
        );
    }
}

/// Keeps every delivered reply in memory.
#[derive(Debug, Default)]
pub struct RecordingSink {
    delivered: Mutex<Vec<(String, BotReply)>>,
}

impl RecordingSink {
    pub fn delivered(&self) -> Vec<(String, BotReply)> {
        self.delivered.lock().expect("sink lock poisoned").clone()
    }
}

impl OutboundSink for RecordingSink {
    fn deliver(&self, recipient: &str, reply: &BotReply) {
        self.delivered
            .lock()
            .expect("sink lock poisoned")
            .push((recipient.to_string(), reply.clone()));
    }
}
