import type { DecisionAction, DecisionRequest, EntryDetail, PassNumber } from './types';

// Which correction fields each pass may touch; the form only ever builds
// payloads inside these sets, the server re-enforces them anyway.
export const PASS1_FIELDS = ['lemma', 'raw_text'] as const;
export const PASS2_FIELDS = [
  'category',
  'gender',
  'etymology_origin',
  'etymology_note',
  'glosses',
] as const;

export interface FormState {
  lemma?: string;
  raw_text?: string;
  category?: string;
  gender?: string;
  etymology_origin?: string;
  etymology_note?: string;
  glosses?: [string, string][];
  acceptedFills: Record<string, string>; // field -> value, confirmed by reviewer
}

/**
 * Build corrections: only fields that differ from the entry are sent, and
 * accepted proposed fills are folded in. Returns null when nothing changed
 * (meaning the action should be a plain accept, not a correct).
 */
export function buildCorrections(
  pass: PassNumber,
  entry: EntryDetail,
  form: FormState,
): Record<string, unknown> | null {
  const corrections: Record<string, unknown> = {};
  if (pass === 1) {
    if (form.lemma !== undefined && form.lemma !== entry.lemma) {
      corrections.lemma = form.lemma;
    }
    const rawBefore = entry.provenance[0]?.raw_text;
    if (form.raw_text !== undefined && form.raw_text !== rawBefore) {
      corrections.raw_text = form.raw_text;
    }
  } else {
    for (const [field, value] of Object.entries(form.acceptedFills)) {
      if ((PASS2_FIELDS as readonly string[]).includes(field)) {
        corrections[field] = value;
      }
    }
    if (form.category !== undefined && form.category !== entry.category) {
      corrections.category = form.category;
    }
    if (form.gender !== undefined && form.gender !== entry.gender) {
      corrections.gender = form.gender;
    }
    if (form.etymology_origin !== undefined && form.etymology_origin !== entry.etymology.origin) {
      corrections.etymology_origin = form.etymology_origin;
    }
    if (form.etymology_note !== undefined && form.etymology_note !== entry.etymology.note) {
      corrections.etymology_note = form.etymology_note;
    }
    if (form.glosses !== undefined) {
      const changed = JSON.stringify(form.glosses) !== JSON.stringify(entry.glosses);
      if (changed) corrections.glosses = form.glosses;
    }
  }
  return Object.keys(corrections).length ? corrections : null;
}

export function buildDecision(
  pass: PassNumber,
  action: DecisionAction,
  entry: EntryDetail,
  form: FormState,
  reviewer: string,
): DecisionRequest {
  const corrections = action === 'correct' ? buildCorrections(pass, entry, form) : null;
  return {
    pass,
    action: action === 'correct' && corrections === null ? 'accept' : action,
    corrections: corrections ?? {},
    reviewer,
  };
}

/**
 * One submission per (entry, state-at-render): double clicks and retries
 * reuse the in-flight promise instead of POSTing twice. A stale key (the
 * entry advanced) is rejected server-side as IllegalTransition and the
 * caller refetches.
 */
export class SubmissionGuard {
  private inflight = new Map<string, Promise<unknown>>();

  key(entryId: string, stateAtRender: string): string {
    return `${entryId}@${stateAtRender}`;
  }

  run<T>(key: string, submit: () => Promise<T>): Promise<T> {
    const existing = this.inflight.get(key);
    if (existing) return existing as Promise<T>;
    const promise = submit().finally(() => {
      // keep resolved keys forever: the same render must never POST twice
      if (this.inflight.get(key) === promise) {
        this.inflight.set(key, promise);
      }
    });
    this.inflight.set(key, promise);
    return promise;
  }

  seen(key: string): boolean {
    return this.inflight.has(key);
  }
}
