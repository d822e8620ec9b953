import { describe, expect, it } from 'vitest';

import { buildSegments } from './highlight';
import type { SuspectSpan } from './types';

function span(offset: number, length: number, field: 'lemma' | 'raw_text' = 'lemma'): SuspectSpan {
  return { target_field: field, offset, length, rule_id: 'r1', suggested_form: 'اَ' };
}

describe('buildSegments', () => {
  it('returns one plain segment when there are no spans', () => {
    expect(buildSegments('كتاب', [], 'lemma')).toEqual([{ text: 'كتاب', span: null }]);
  });

  it('splits around a span using codepoint offsets', () => {
    const segments = buildSegments('أستاذ', [span(0, 1)], 'lemma');
    expect(segments.map((s) => s.text)).toEqual(['أ', 'ستاذ']);
    expect(segments[0]!.span?.rule_id).toBe('r1');
    expect(segments[1]!.span).toBeNull();
  });

  it('renders two highlighted ranges for two spans', () => {
    const segments = buildSegments('أبوأخت', [span(0, 1), span(3, 1)], 'lemma');
    expect(segments.map((s) => [s.text, s.span !== null])).toEqual([
      ['أ', true],
      ['بو', false],
      ['أ', true],
      ['خت', false],
    ]);
  });

  it('treats offsets as codepoints even past astral characters', () => {
    // '𐌰' is one codepoint but two UTF-16 units; a span at offset 1 must
    // land on ب, not inside the surrogate pair.
    const segments = buildSegments('𐌰بت', [span(1, 1)], 'lemma');
    expect(segments.map((s) => s.text)).toEqual(['𐌰', 'ب', 'ت']);
    expect(segments[1]!.span).not.toBeNull();
  });

  it('only renders spans for the requested field', () => {
    const segments = buildSegments('كتاب', [span(0, 1, 'raw_text')], 'lemma');
    expect(segments).toEqual([{ text: 'كتاب', span: null }]);
  });

  it('drops out-of-range spans instead of guessing', () => {
    const segments = buildSegments('كتاب', [span(3, 5)], 'lemma');
    expect(segments).toEqual([{ text: 'كتاب', span: null }]);
  });
});
