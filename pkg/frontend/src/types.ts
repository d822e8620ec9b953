// Shapes served by the review API. The UI renders these as-is and never
// computes its own suspicion or ordering logic.

export interface QueueItem {
  id: string;
  lemma: string;
  flags_count: number;
  state: string;
  source: string;
}

export interface SuspectSpan {
  target_field: 'lemma' | 'raw_text';
  offset: number; // codepoint index, not UTF-16 unit
  length: number; // codepoint count
  rule_id: string;
  suggested_form: string;
}

export interface ProvenanceRecord {
  source_id: string;
  page: number;
  line: number | null;
  raw_text: string;
  capture_method: 'ocr' | 'manual';
}

export interface ProposedFill {
  entry_id: string;
  field: string;
  value: string;
  parent_id: string;
}

export interface EntryDetail {
  id: string;
  lemma: string;
  category: string;
  gender: string;
  etymology: { origin: string; note: string };
  variants: string[];
  glosses: [string, string][];
  provenance: ProvenanceRecord[];
  state: string;
  flags: SuspectSpan[];
  pending_fills: ProposedFill[];
}

export interface Stats {
  entries: number;
  states: Record<string, number>;
  total_flags: number;
  sources: Record<string, number>;
}

export type PassNumber = 1 | 2;
export type DecisionAction = 'accept' | 'correct' | 'reject';

export interface DecisionRequest {
  pass: PassNumber;
  action: DecisionAction;
  corrections: Record<string, unknown>;
  reviewer: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  violations?: { code: string; field: string; message: string }[];
}
