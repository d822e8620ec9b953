import { describe, expect, it } from 'vitest';

import { SubmissionGuard, buildCorrections, buildDecision } from './decisions';
import type { EntryDetail } from './types';

const entry: EntryDetail = {
  id: 'E1',
  lemma: 'كتاب',
  category: 'unknown',
  gender: 'unspecified',
  etymology: { origin: 'unknown', note: '' },
  variants: [],
  glosses: [['und', 'something']],
  provenance: [
    { source_id: 's', page: 1, line: null, raw_text: 'كتاب : شيء', capture_method: 'ocr' },
  ],
  state: 'Imported',
  flags: [],
  pending_fills: [
    { entry_id: 'E1', field: 'etymology_origin', value: 'ber', parent_id: 'P1' },
  ],
};

describe('buildCorrections', () => {
  it('pass 1 sends only changed textual fields', () => {
    const corrections = buildCorrections(1, entry, {
      lemma: 'كتابي',
      raw_text: entry.provenance[0]!.raw_text,
      acceptedFills: {},
    });
    expect(corrections).toEqual({ lemma: 'كتابي' });
  });

  it('pass 1 returns null when nothing changed', () => {
    expect(
      buildCorrections(1, entry, { lemma: entry.lemma, acceptedFills: {} }),
    ).toBeNull();
  });

  it('pass 2 never includes textual fields', () => {
    const corrections = buildCorrections(2, entry, {
      lemma: 'changed-should-be-ignored',
      category: 'noun',
      acceptedFills: {},
    });
    expect(corrections).toEqual({ category: 'noun' });
  });

  it('accepted proposed fills are folded into the payload', () => {
    const corrections = buildCorrections(2, entry, {
      acceptedFills: { etymology_origin: 'ber' },
    });
    expect(corrections).toEqual({ etymology_origin: 'ber' });
  });

  it('unconfirmed fills are not sent', () => {
    expect(buildCorrections(2, entry, { acceptedFills: {} })).toBeNull();
  });
});

describe('buildDecision', () => {
  it('downgrades an empty correct to accept', () => {
    const decision = buildDecision(1, 'correct', entry, { lemma: entry.lemma, acceptedFills: {} }, 'amal');
    expect(decision.action).toBe('accept');
    expect(decision.corrections).toEqual({});
  });

  it('keeps reject free of corrections', () => {
    const decision = buildDecision(1, 'reject', entry, { lemma: 'x', acceptedFills: {} }, 'amal');
    expect(decision).toEqual({ pass: 1, action: 'reject', corrections: {}, reviewer: 'amal' });
  });
});

describe('SubmissionGuard', () => {
  it('coalesces double submissions for the same render state', async () => {
    const guard = new SubmissionGuard();
    let calls = 0;
    const submit = () =>
      new Promise((resolve) => {
        calls += 1;
        setTimeout(() => resolve(calls), 5);
      });
    const key = guard.key('E1', 'Imported');
    const [a, b] = await Promise.all([guard.run(key, submit), guard.run(key, submit)]);
    expect(calls).toBe(1);
    expect(a).toBe(b);
  });

  it('a new state-at-render gets a fresh key', () => {
    const guard = new SubmissionGuard();
    expect(guard.key('E1', 'Imported')).not.toBe(guard.key('E1', 'Pass1Verified'));
  });

  it('never re-sends a settled key', async () => {
    const guard = new SubmissionGuard();
    let calls = 0;
    const key = guard.key('E1', 'Imported');
    await guard.run(key, async () => { calls += 1; });
    await guard.run(key, async () => { calls += 1; });
    expect(calls).toBe(1);
    expect(guard.seen(key)).toBe(true);
  });
});
