// DOM wiring: one in-memory form, one in-flight submission at a time.

import { postScore, resolveBaseUrl } from './api.js';
import {
  backToEditing,
  canSubmit,
  initialState,
  serializeAnswers,
  submitFailed,
  submitStarted,
  submitSucceeded,
  type FormState,
} from './state.js';
import type { ConditionKey, Gender } from './types.js';
import { renderErrors, renderQuestions, renderResult, renderUnreachable } from './view.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app container');

const baseUrl = resolveBaseUrl(window.location.search);
let state: FormState = initialState();

function readDraftFromDom(): void {
  const age = (document.getElementById('age_years') as HTMLInputElement | null)?.value ?? '';
  state.draft.ageYears = age === '' ? null : Number(age);
  const gender = (document.getElementById('gender') as HTMLSelectElement | null)?.value ?? '';
  state.draft.gender = gender === '' ? null : (gender as Gender);
  const admissions =
    (document.getElementById('prior_admissions') as HTMLInputElement | null)?.value ?? '0';
  state.draft.priorAdmissions = Number(admissions || '0');
  const er = (document.getElementById('prior_er_visits') as HTMLInputElement | null)?.value ?? '0';
  state.draft.priorErVisits = Number(er || '0');
  for (const key of Object.keys(state.draft.conditions) as ConditionKey[]) {
    const yes = document.querySelector<HTMLInputElement>(`input[name="${key}"][value="yes"]`);
    state.draft.conditions[key] = yes?.checked ?? false;
  }
}

async function submit(): Promise<void> {
  readDraftFromDom();
  state = submitStarted(state);
  render();
  const outcome = await postScore(baseUrl, serializeAnswers(state.draft));
  if (outcome.kind === 'scored') {
    state = submitSucceeded(state, outcome.response);
  } else if (outcome.kind === 'rejected') {
    state = submitFailed(state, outcome.errors);
  } else {
    state = submitFailed(state, [
      { field: 'service', error: `not reachable (${outcome.message})` },
    ]);
  }
  render();
}

function render(): void {
  if (state.phase === 'result' && state.result) {
    root!.innerHTML = renderResult(state.result);
    document.getElementById('start-over')?.addEventListener('click', () => {
      state = initialState();
      render();
    });
    return;
  }
  if (state.phase === 'error') {
    root!.innerHTML = state.errors.some((e) => e.field === 'service')
      ? renderUnreachable(state.errors[0]?.error ?? '')
      : renderErrors(state.errors);
    document.getElementById('retry')?.addEventListener('click', () => {
      state = backToEditing(state);
      render();
    });
    return;
  }
  root!.innerHTML = `<form id="survey">${renderQuestions(state)}</form>`;
  const form = document.getElementById('survey') as HTMLFormElement;
  form.addEventListener('input', () => {
    readDraftFromDom();
    // re-evaluate the submit gate without re-rendering the whole form
    const button = document.getElementById('submit') as HTMLButtonElement | null;
    if (button) {
      button.disabled = !canSubmit(state.draft) || state.phase === 'submitting';
    }
  });
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    if (state.phase !== 'submitting') void submit();
  });
}

render();
