use unicode_normalization::UnicodeNormalization;

/// Canonical surface form used for every string comparison in the pipeline:
/// NFC, trimmed, internal whitespace runs collapsed to one space. Case is kept.
pub fn normalize_text(raw: &str) -> String {
    let composed: String = raw.nfc().collect();
    composed.split_whitespace().collect::<Vec<_>>().join(" ")
}
