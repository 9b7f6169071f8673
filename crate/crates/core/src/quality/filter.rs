//! Heuristic keep/drop filtering over length, perplexity, and language.
//!
//! Language identification and perplexity are pluggable oracles. The
//! shipped baselines are byte-trigram models: perplexity against a model
//! fitted on clean in-domain text, and language id by lowest per-byte
//! negative log-likelihood across one model per language.
//!
//! Checks run in a fixed order: minimum length, maximum length, perplexity,
//! language. The first failing check names the drop reason. Perplexity runs
//! before language so that out-of-distribution junk is reported as a
//! perplexity drop even when the language vote is arbitrary.

use crate::ngram::ByteTrigramModel;
use crate::quality::QualityError;
use crate::record::CorpusRecord;

/// English seed text for the built-in language classifier.
const ENGLISH_SEED: &str = "The attacker gained initial access through a phishing email that \
delivered a malicious attachment. Once executed, the payload established persistence by \
creating a scheduled task and began lateral movement across the network. The security team \
observed unusual outbound traffic from the compromised host and isolated it from the \
network. A buffer overflow in the parsing routine allowed remote code execution when the \
service processed a crafted request. The patch validates the length field before copying \
data into the fixed buffer. Analysts reviewed the authentication logs and found repeated \
failed login attempts from a single address, followed by a successful login using stolen \
credentials. The incident response plan requires containment within one hour of detection. \
Encryption keys must be rotated after any suspected compromise, and all affected systems \
are reimaged from known good media before returning to service.";

/// Chinese seed text for the built-in language classifier.
const CHINESE_SEED: &str = "攻击者通过钓鱼邮件获得了初始访问权限，邮件附件中包含恶意载荷。\
载荷执行后通过创建计划任务实现持久化，并开始在网络中横向移动。安全团队发现被入侵主机存在异常的\
出站流量，随即将其从网络中隔离。解析程序中的缓冲区溢出漏洞允许攻击者在服务处理特制请求时远程执行\
代码。补丁在复制数据之前会先校验长度字段。分析人员审查了认证日志，发现来自同一地址的多次登录失败，\
随后出现了使用被盗凭据的成功登录。事件响应计划要求在检测到入侵后一小时内完成遏制。任何疑似泄露发生\
后必须轮换加密密钥，所有受影响的系统在恢复服务之前都要用可信介质重装。";

/// Assigns a language label to a text.
pub trait LanguageClassifier {
    /// Label of the most likely language.
    fn classify(&self, text: &str) -> String;
}

/// Scores how surprising a text is to a reference model.
pub trait PerplexityOracle {
    /// Per-byte perplexity of `text`.
    fn perplexity(&self, text: &str) -> f64;
}

/// Byte-trigram perplexity against a fitted reference model.
#[derive(Debug, Clone)]
pub struct NgramPerplexity {
    model: ByteTrigramModel,
}

impl NgramPerplexity {
    /// Wraps a fitted model.
    pub fn new(model: ByteTrigramModel) -> Self {
        Self { model }
    }
}

impl PerplexityOracle for NgramPerplexity {
    fn perplexity(&self, text: &str) -> f64 {
        self.model.perplexity(text)
    }
}

/// Language id by lowest per-byte negative log-likelihood across a set of
/// per-language trigram models. Ties keep the earliest label.
#[derive(Debug, Clone)]
pub struct TrigramLanguageClassifier {
    models: Vec<(String, ByteTrigramModel)>,
}

impl TrigramLanguageClassifier {
    /// Builds a classifier from `(label, seed text)` pairs.
    pub fn from_seed_texts<'a>(seeds: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let models = seeds
            .into_iter()
            .map(|(label, text)| (label.to_owned(), ByteTrigramModel::fit([text])))
            .collect();
        Self { models }
    }

    /// Classifier with built-in English and Chinese seed models.
    pub fn builtin() -> Self {
        Self::from_seed_texts([("en", ENGLISH_SEED), ("zh", CHINESE_SEED)])
    }
}

impl LanguageClassifier for TrigramLanguageClassifier {
    fn classify(&self, text: &str) -> String {
        let mut best: Option<(&str, f64)> = None;
        for (label, model) in &self.models {
            let nll = model.mean_nll(text);
            let better = match best {
                None => true,
                Some((_, best_nll)) => nll < best_nll,
            };
            if better {
                best = Some((label, nll));
            }
        }
        best.map(|(label, _)| label.to_owned()).unwrap_or_default()
    }
}

/// Thresholds for [`heuristic_filter`].
#[derive(Debug, Clone)]
pub struct FilterThresholds {
    /// Minimum text length in characters.
    pub min_len: usize,
    /// Maximum text length in characters.
    pub max_len: usize,
    /// Accepted language labels; empty accepts every language.
    pub allowed_languages: Vec<String>,
    /// Upper bound on per-byte perplexity; infinity disables the check.
    pub max_perplexity: f64,
}

impl FilterThresholds {
    /// Checks the thresholds are internally consistent.
    pub fn validate(&self) -> Result<(), QualityError> {
        if self.min_len > self.max_len {
            return Err(QualityError::MinExceedsMax {
                min_len: self.min_len,
                max_len: self.max_len,
            });
        }
        if !(self.max_perplexity > 0.0) {
            return Err(QualityError::NonPositivePerplexityBound(self.max_perplexity));
        }
        Ok(())
    }
}

/// Why a record was dropped by the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    TooShort,
    TooLong,
    Perplexity,
    Language,
}

impl DropReason {
    /// Stable string used in manifests and drop lists.
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::TooShort => "too_short",
            DropReason::TooLong => "too_long",
            DropReason::Perplexity => "perplexity",
            DropReason::Language => "language",
        }
    }
}

/// Filter decision for one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Keep,
    Drop(DropReason),
}

/// Applies the length, perplexity, and language checks in order; the first
/// failure decides the verdict.
pub fn heuristic_filter(
    record: &CorpusRecord,
    thresholds: &FilterThresholds,
    language: &dyn LanguageClassifier,
    perplexity: &dyn PerplexityOracle,
) -> FilterVerdict {
    let chars = record.text.chars().count();
    if chars < thresholds.min_len {
        return FilterVerdict::Drop(DropReason::TooShort);
    }
    if chars > thresholds.max_len {
        return FilterVerdict::Drop(DropReason::TooLong);
    }
    if thresholds.max_perplexity.is_finite()
        && perplexity.perplexity(&record.text) > thresholds.max_perplexity
    {
        return FilterVerdict::Drop(DropReason::Perplexity);
    }
    if !thresholds.allowed_languages.is_empty() {
        let label = language.classify(&record.text);
        if !thresholds.allowed_languages.contains(&label) {
            return FilterVerdict::Drop(DropReason::Language);
        }
    }
    FilterVerdict::Keep
}
