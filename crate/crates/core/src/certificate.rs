//! Certificate files and their replay.

use serde::{Deserialize, Serialize};

use crate::classify::{
    verify_soft_loop, verify_tractable, Budgets, Classification, ClosureSummary, Hardness, Verdict,
};
use crate::error::{Error, Result};
use crate::language::{Language, UnaryClosure};
use crate::ops::replay_refutation;

/// Bumped whenever the meaning of any field changes.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub format_version: u32,
    pub tool_version: String,
    pub language_hash: String,
    pub seed: Option<u64>,
    pub budgets: Budgets,
    pub closure: ClosureSummary,
    pub verdict: Verdict,
}

impl CertificateFile {
    pub fn new(
        language: &Language,
        classification: &Classification,
        budgets: &Budgets,
        seed: Option<u64>,
    ) -> Self {
        CertificateFile {
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            language_hash: language.content_hash(),
            seed,
            budgets: budgets.clone(),
            closure: classification.closure.clone(),
            verdict: classification.verdict.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // read the version first so that a future format fails with a clear
        // message instead of a field error
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let h: Header = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("certificate file: {e}")))?;
        if h.format_version != FORMAT_VERSION {
            return Err(Error::parse(format!(
                "certificate format version {} is not supported (expected {FORMAT_VERSION})",
                h.format_version
            )));
        }
        serde_json::from_str(text).map_err(|e| Error::parse(format!("certificate file: {e}")))
    }
}

/// Replays the certificate against the language without any search.
/// Unknown verdicts carry nothing to replay and are rejected.
pub fn verify(cert: &CertificateFile, language: &Language) -> Result<(), String> {
    if cert.format_version != FORMAT_VERSION {
        return Err(format!(
            "unsupported certificate format version {}",
            cert.format_version
        ));
    }
    if cert.language_hash != language.content_hash() {
        return Err("certificate was issued for a different language".into());
    }
    match &cert.verdict {
        Verdict::Tractable(t) => verify_tractable(t, language),
        Verdict::NpHard(Hardness::SoftSelfLoop(w)) => verify_soft_loop(w, language),
        Verdict::NpHard(Hardness::NoMajority(log)) => {
            replay_refutation(&language.with_unary_closure(UnaryClosure::General), log)
        }
        Verdict::UnknownAtBudget { .. } => {
            Err("an unknown verdict has no certificate to replay".into())
        }
    }
}
