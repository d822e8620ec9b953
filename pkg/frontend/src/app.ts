import { ApiClient, ApiError } from './api';
import { buildDecision, FormState, SubmissionGuard } from './decisions';
import { buildSegments } from './highlight';
import type { DecisionAction, EntryDetail, PassNumber, QueueItem } from './types';

const CATEGORIES = [
  'noun', 'verb', 'adjective', 'adverb', 'pronoun', 'preposition',
  'conjunction', 'interjection', 'particle', 'numeral', 'proper-noun', 'unknown',
];
const GENDERS = ['masculine', 'feminine', 'unspecified'];

const api = new ApiClient('');
const guard = new SubmissionGuard();

interface AppState {
  pass: PassNumber;
  queue: QueueItem[];
  current: EntryDetail | null;
  reviewer: string;
  banner: string | null;
}

const state: AppState = {
  pass: 1,
  queue: [],
  current: null,
  reviewer: localStorage.getItem('reviewer') ?? 'anonymous',
  banner: null,
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function arabicField(text: string, spans: EntryDetail['flags'], field: 'lemma' | 'raw_text'): HTMLElement {
  // dir=auto flips per field: lemmas render right-to-left, Latin glosses don't
  const box = el('div', { class: 'text-field', dir: 'auto' });
  for (const segment of buildSegments(text, spans, field)) {
    if (segment.span) {
      box.append(
        el(
          'mark',
          {
            class: 'suspect',
            title: `${segment.span.rule_id}: suggest ${segment.span.suggested_form}`,
          },
          segment.text,
        ),
      );
    } else {
      box.append(segment.text);
    }
  }
  return box;
}

async function refreshStats(): Promise<void> {
  try {
    const stats = await api.getStats();
    const parts = Object.entries(stats.states)
      .filter(([, count]) => count > 0)
      .map(([name, count]) => `${name}: ${count}`);
    setText('stats', `${stats.entries} entries · ${parts.join(' · ')} · flags: ${stats.total_flags}`);
  } catch {
    setText('stats', '');
  }
}

function setText(id: string, text: string): void {
  const node = document.getElementById(id);
  if (node) node.textContent = text;
}

function showBanner(message: string | null): void {
  const banner = document.getElementById('banner');
  if (!banner) return;
  banner.textContent = message ?? '';
  banner.classList.toggle('hidden', message === null);
}

async function loadQueue(): Promise<void> {
  try {
    state.queue = await api.getQueue(state.pass, 50);
    showBanner(null);
  } catch (err) {
    if (err instanceof ApiError && err.code === 'ConnectionLost') {
      showBanner('Connection lost — retrying…');
      window.setTimeout(loadQueue, 2000);
      return;
    }
    throw err;
  }
  renderQueue();
  if (state.queue.length) {
    await openEntry(state.queue[0]!.id);
  } else {
    state.current = null;
    renderDetail();
  }
  await refreshStats();
}

function renderQueue(): void {
  const list = document.getElementById('queue');
  if (!list) return;
  list.replaceChildren();
  for (const item of state.queue) {
    const row = el(
      'li',
      { class: item.id === state.current?.id ? 'active' : '' },
      el('span', { class: 'lemma', dir: 'auto' }, item.lemma),
      el('span', { class: 'meta' }, `${item.source} · flags ${item.flags_count}`),
    );
    row.addEventListener('click', () => void openEntry(item.id));
    list.append(row);
  }
  setText('queue-title', `Pass ${state.pass} queue (${state.queue.length})`);
}

async function openEntry(id: string): Promise<void> {
  state.current = await api.getEntry(id);
  renderQueue();
  renderDetail();
}

function formValues(): FormState {
  const value = (name: string) => {
    const input = document.querySelector<HTMLInputElement | HTMLSelectElement>(`[name=${name}]`);
    return input ? input.value : undefined;
  };
  const acceptedFills: Record<string, string> = {};
  document
    .querySelectorAll<HTMLInputElement>('input[data-fill-field]:checked')
    .forEach((box) => {
      acceptedFills[box.dataset.fillField!] = box.dataset.fillValue!;
    });
  return {
    lemma: value('lemma'),
    raw_text: value('raw_text'),
    category: value('category'),
    gender: value('gender'),
    etymology_origin: value('etymology_origin'),
    etymology_note: value('etymology_note'),
    acceptedFills,
  };
}

function renderDetail(): void {
  const panel = document.getElementById('detail');
  if (!panel) return;
  panel.replaceChildren();
  const entry = state.current;
  if (!entry) {
    panel.append(el('p', { class: 'empty' }, 'Queue is empty for this pass.'));
    return;
  }

  panel.append(el('h2', { dir: 'auto' }, entry.lemma));
  panel.append(el('div', { class: 'state-line' }, `${entry.state} · ${entry.id}`));

  const prov = entry.provenance[0];
  if (prov) {
    panel.append(
      el('h3', {}, `Captured (${prov.capture_method}, ${prov.source_id} p.${prov.page})`),
      arabicField(prov.raw_text, entry.flags, 'raw_text'),
    );
  }
  panel.append(el('h3', {}, 'Lemma'), arabicField(entry.lemma, entry.flags, 'lemma'));

  const form = el('form', { id: 'decision-form' });
  if (state.pass === 1) {
    form.append(
      labelled('lemma', 'Corrected lemma', el('input', { name: 'lemma', dir: 'auto', value: entry.lemma })),
      labelled(
        'raw_text',
        'Corrected capture',
        el('input', { name: 'raw_text', dir: 'auto', value: prov?.raw_text ?? '' }),
      ),
    );
  } else {
    const categorySelect = el('select', { name: 'category' });
    for (const token of CATEGORIES) {
      const option = el('option', { value: token }, token);
      if (token === entry.category) option.setAttribute('selected', '');
      categorySelect.append(option);
    }
    const genderSelect = el('select', { name: 'gender' });
    for (const token of GENDERS) {
      const option = el('option', { value: token }, token);
      if (token === entry.gender) option.setAttribute('selected', '');
      genderSelect.append(option);
    }
    form.append(
      labelled('category', 'Lexical category', categorySelect),
      labelled('gender', 'Grammatical gender', genderSelect),
      labelled('etymology_origin', 'Etymology origin', el('input', { name: 'etymology_origin', value: entry.etymology.origin })),
      labelled('etymology_note', 'Etymology note', el('input', { name: 'etymology_note', value: entry.etymology.note })),
    );
    if (entry.pending_fills.length) {
      const fills = el('fieldset', {}, el('legend', {}, 'Proposed fills (unconfirmed)'));
      for (const fill of entry.pending_fills) {
        const box = el('input', { type: 'checkbox' });
        box.dataset.fillField = fill.field;
        box.dataset.fillValue = fill.value;
        fills.append(el('label', { class: 'fill' }, box, ` ${fill.field} = ${fill.value} (from ${fill.parent_id})`));
      }
      form.append(fills);
    }
  }

  const buttons = el(
    'div',
    { class: 'actions' },
    actionButton('accept', 'Accept (a)'),
    actionButton('correct', 'Correct (c)'),
    actionButton('reject', 'Reject (r)'),
  );
  form.append(buttons, el('div', { id: 'form-error', class: 'error hidden' }));
  form.addEventListener('submit', (event) => event.preventDefault());
  panel.append(form);
}

function labelled(name: string, text: string, input: HTMLElement): HTMLElement {
  return el('label', { class: 'field', for: name }, el('span', {}, text), input);
}

function actionButton(action: DecisionAction, text: string): HTMLElement {
  const button = el('button', { type: 'button', class: `act-${action}` }, text);
  button.addEventListener('click', () => void submit(action));
  return button;
}

async function submit(action: DecisionAction): Promise<void> {
  const entry = state.current;
  if (!entry) return;
  const decision = buildDecision(state.pass, action, entry, formValues(), state.reviewer);
  const key = guard.key(entry.id, entry.state);
  try {
    await guard.run(key, () => api.submitDecision(entry.id, decision));
    setFormError(null);
    await loadQueue(); // advance to the next item
  } catch (err) {
    if (err instanceof ApiError) {
      if (err.isStale) {
        await loadQueue(); // someone (or a retry) already moved it on
        return;
      }
      const detail = err.body?.violations?.map((v) => `${v.code}: ${v.message}`).join('; ');
      setFormError(detail ? `${err.code} — ${detail}` : `${err.code} — ${err.message}`);
      return;
    }
    throw err;
  }
}

function setFormError(message: string | null): void {
  const node = document.getElementById('form-error');
  if (!node) return;
  node.textContent = message ?? '';
  node.classList.toggle('hidden', message === null);
}

function bindShortcuts(): void {
  const IGNORED = new Set(['INPUT', 'TEXTAREA', 'SELECT']);
  window.addEventListener('keydown', (event) => {
    const target = event.target as HTMLElement | null;
    if (target && (IGNORED.has(target.tagName) || target.isContentEditable)) return;
    if (event.key === 'a') void submit('accept');
    else if (event.key === 'c') void submit('correct');
    else if (event.key === 'r') void submit('reject');
    else if (event.key === '1' || event.key === '2') {
      state.pass = Number(event.key) as PassNumber;
      syncPassPicker();
      void loadQueue();
    }
  });
}

function syncPassPicker(): void {
  document.querySelectorAll<HTMLInputElement>('input[name=pass]').forEach((radio) => {
    radio.checked = Number(radio.value) === state.pass;
  });
}

function bindControls(): void {
  document.querySelectorAll<HTMLInputElement>('input[name=pass]').forEach((radio) => {
    radio.addEventListener('change', () => {
      state.pass = Number(radio.value) as PassNumber;
      void loadQueue();
    });
  });
  const reviewer = document.getElementById('reviewer') as HTMLInputElement | null;
  if (reviewer) {
    reviewer.value = state.reviewer;
    reviewer.addEventListener('change', () => {
      state.reviewer = reviewer.value || 'anonymous';
      localStorage.setItem('reviewer', state.reviewer);
    });
  }
}

export function main(): void {
  bindControls();
  bindShortcuts();
  syncPassPicker();
  void loadQueue();
}

if (typeof document !== 'undefined' && document.getElementById('queue')) {
  main();
}
