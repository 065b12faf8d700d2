use serde::{Deserialize, Serialize};

use super::{Document, IndexerError};

/// Window sizes for splitting documents before extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentParams {
    pub max_chars: usize,
    pub overlap_chars: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            max_chars: 1200,
            overlap_chars: 100,
        }
    }
}

impl SegmentParams {
    pub fn validate(&self) -> Result<(), IndexerError> {
        if self.max_chars == 0 || self.max_chars <= self.overlap_chars {
            return Err(IndexerError::InvalidSegmentation {
                max_chars: self.max_chars,
                overlap_chars: self.overlap_chars,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: String,
    pub document_id: String,
    pub text: String,
    pub ordinal: usize,
}

pub fn segment_id(document_id: &str, ordinal: usize) -> String {
    format!("{document_id}/s{ordinal:04}")
}

fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\n')
}

/// Splits the document into overlapping character windows.
///
/// Each segment holds at most `max_chars` characters and shares exactly
/// `overlap_chars` characters with its successor. When a window would cut
/// mid-text, the cut moves back to the nearest sentence end within the last
/// quarter of the window.
pub fn segment(doc: &Document, params: SegmentParams) -> Result<Vec<Segment>, IndexerError> {
    params.validate()?;
    let SegmentParams {
        max_chars,
        overlap_chars,
    } = params;
    let chars: Vec<char> = doc.text.chars().collect();
    let n = chars.len();
    let mut segments = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = (start + max_chars).min(n);
        if end < n {
            // The next window starts at end - overlap and must move forward.
            let earliest = start + overlap_chars + 1;
            let window_start = end.saturating_sub(max_chars / 4).max(earliest);
            if let Some(b) = (window_start..=end).rev().find(|&b| is_sentence_end(chars[b - 1])) {
                end = b;
            }
        }
        let ordinal = segments.len();
        segments.push(Segment {
            id: segment_id(&doc.id, ordinal),
            document_id: doc.id.clone(),
            text: chars[start..end].iter().collect(),
            ordinal,
        });
        if end == n {
            break;
        }
        start = end - overlap_chars;
    }
    Ok(segments)
}

/// Inverse of [`segment`]: concatenates segments in ordinal order after
/// dropping each successor's leading overlap.
pub fn reassemble(segments: &[Segment], overlap_chars: usize) -> String {
    let mut ordered: Vec<&Segment> = segments.iter().collect();
    ordered.sort_by_key(|s| s.ordinal);
    let mut text = String::new();
    for (i, seg) in ordered.iter().enumerate() {
        let skip = if i == 0 { 0 } else { overlap_chars };
        text.extend(seg.text.chars().skip(skip));
    }
    text
}
