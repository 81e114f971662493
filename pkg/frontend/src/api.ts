// Thin client for the scoring service. Nothing is stored anywhere:
// answers live in memory only for the duration of the request.

import type { FieldError, ScoreRequest, ScoreResponse } from './types.js';

export const DEFAULT_BASE_URL = 'http://127.0.0.1:8000';

/** Service base URL: `?api=...` query parameter wins over the default. */
export function resolveBaseUrl(search: string, fallback: string = DEFAULT_BASE_URL): string {
  const fromQuery = new URLSearchParams(search).get('api');
  const base = fromQuery === null || fromQuery === '' ? fallback : fromQuery;
  return base.replace(/\/+$/, '');
}

export type ScoreOutcome =
  | { kind: 'scored'; response: ScoreResponse }
  | { kind: 'rejected'; errors: FieldError[] }
  | { kind: 'unreachable'; message: string };

export async function postScore(
  baseUrl: string,
  body: ScoreRequest,
  fetchImpl: typeof fetch = fetch,
): Promise<ScoreOutcome> {
  let response: Response;
  try {
    response = await fetchImpl(`${baseUrl}/v1/score`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  } catch (err) {
    return { kind: 'unreachable', message: err instanceof Error ? err.message : String(err) };
  }
  if (response.status === 400) {
    const doc = (await response.json()) as { errors?: FieldError[] };
    return { kind: 'rejected', errors: doc.errors ?? [{ field: '', error: 'rejected' }] };
  }
  if (!response.ok) {
    return { kind: 'unreachable', message: `service replied ${response.status}` };
  }
  return { kind: 'scored', response: (await response.json()) as ScoreResponse };
}

export async function getHealth(
  baseUrl: string,
  fetchImpl: typeof fetch = fetch,
): Promise<boolean> {
  try {
    const response = await fetchImpl(`${baseUrl}/v1/health`);
    if (!response.ok) return false;
    const doc = (await response.json()) as { status?: string };
    return doc.status === 'ok';
  } catch {
    return false;
  }
}
