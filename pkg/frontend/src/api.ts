import type {
  ApiErrorBody,
  DecisionRequest,
  EntryDetail,
  PassNumber,
  QueueItem,
  Stats,
} from './types';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly body: ApiErrorBody | null = null,
  ) {
    super(message);
    this.name = 'ApiError';
  }

  /** A stale submission: the entry moved on since we rendered it. */
  get isStale(): boolean {
    return this.status === 409 && this.code === 'IllegalTransition';
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, {
      ...init,
      headers: { 'Content-Type': 'application/json', ...init?.headers },
    });
  } catch (err) {
    throw new ApiError(0, 'ConnectionLost', String(err));
  }
  if (!response.ok) {
    let body: ApiErrorBody | null = null;
    try {
      body = (await response.json()) as ApiErrorBody;
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new ApiError(
      response.status,
      body?.code ?? `HTTP${response.status}`,
      body?.message ?? response.statusText,
      body,
    );
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string = '') {}

  getQueue(pass: PassNumber, limit = 50): Promise<QueueItem[]> {
    return request<QueueItem[]>(`${this.baseUrl}/api/queue?pass=${pass}&limit=${limit}`);
  }

  getEntry(id: string): Promise<EntryDetail> {
    return request<EntryDetail>(`${this.baseUrl}/api/entries/${encodeURIComponent(id)}`);
  }

  getStats(): Promise<Stats> {
    return request<Stats>(`${this.baseUrl}/api/stats`);
  }

  submitDecision(id: string, decision: DecisionRequest): Promise<EntryDetail> {
    return request<EntryDetail>(
      `${this.baseUrl}/api/entries/${encodeURIComponent(id)}/decision`,
      { method: 'POST', body: JSON.stringify(decision) },
    );
  }
}
