import type { SuspectSpan } from './types';

export interface Segment {
  text: string;
  span: SuspectSpan | null; // null for plain text between highlights
}

/**
 * Split text into plain/highlighted segments from API suspect spans.
 *
 * Span offsets and lengths are codepoint counts, while JS string indices
 * are UTF-16 units, so slicing goes through Array.from. Spans arrive
 * non-overlapping and offset-sorted from the API; anything out of range is
 * dropped rather than guessed at.
 */
export function buildSegments(text: string, spans: SuspectSpan[], field: 'lemma' | 'raw_text'): Segment[] {
  const codepoints = Array.from(text);
  const relevant = spans
    .filter((s) => s.target_field === field)
    .filter((s) => s.offset >= 0 && s.length >= 1 && s.offset + s.length <= codepoints.length)
    .sort((a, b) => a.offset - b.offset);

  const segments: Segment[] = [];
  let cursor = 0;
  for (const span of relevant) {
    if (span.offset < cursor) continue; // overlapping span: keep the earlier one
    if (span.offset > cursor) {
      segments.push({ text: codepoints.slice(cursor, span.offset).join(''), span: null });
    }
    segments.push({
      text: codepoints.slice(span.offset, span.offset + span.length).join(''),
      span,
    });
    cursor = span.offset + span.length;
  }
  if (cursor < codepoints.length) {
    segments.push({ text: codepoints.slice(cursor).join(''), span: null });
  }
  return segments;
}
