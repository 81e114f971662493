// Pure rendering: state in, HTML strings out. main.ts owns the DOM.

import { AGE_MAX, AGE_MIN, CONDITION_QUESTIONS } from './questions.js';
import type { FormState } from './state.js';
import { canSubmit } from './state.js';
import type { FieldError, ScoreResponse } from './types.js';

function esc(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

/** Percentile is the headline; one decimal is plenty for a survey answer. */
export function formatPercentile(percentile: number): string {
  return percentile.toFixed(1);
}

export function formatProbability(probability: number): string {
  return `${(100 * probability).toFixed(2)}%`;
}

export function renderQuestions(state: FormState): string {
  const draft = state.draft;
  const disabled = state.phase === 'submitting';
  const rows: string[] = [];
  rows.push(`
    <fieldset class="about-you" ${disabled ? 'disabled' : ''}>
      <legend>About you</legend>
      <label>Age
        <input id="age_years" type="number" min="${AGE_MIN}" max="${AGE_MAX}" step="1"
               value="${draft.ageYears ?? ''}" />
      </label>
      <label>Gender
        <select id="gender">
          <option value="" ${draft.gender === null ? 'selected' : ''}>choose...</option>
          <option value="male" ${draft.gender === 'male' ? 'selected' : ''}>Male</option>
          <option value="female" ${draft.gender === 'female' ? 'selected' : ''}>Female</option>
          <option value="unknown" ${draft.gender === 'unknown' ? 'selected' : ''}>Prefer not to say</option>
        </select>
      </label>
      <label>Hospital admissions in the last year
        <input id="prior_admissions" type="number" min="0" step="1" value="${draft.priorAdmissions}" />
      </label>
      <label>Emergency room visits in the last year
        <input id="prior_er_visits" type="number" min="0" step="1" value="${draft.priorErVisits}" />
      </label>
    </fieldset>`);

  const items = CONDITION_QUESTIONS.map((q) => {
    const checked = draft.conditions[q.key];
    return `
      <li>
        <span class="question">${esc(q.label)}</span>
        <label><input type="radio" name="${q.key}" value="yes" ${checked ? 'checked' : ''}/> Yes</label>
        <label><input type="radio" name="${q.key}" value="no" ${checked ? '' : 'checked'}/> No</label>
      </li>`;
  });
  rows.push(`
    <fieldset class="conditions" ${disabled ? 'disabled' : ''}>
      <legend>In the last year, have you had any of the following conditions?</legend>
      <ul>${items.join('')}</ul>
    </fieldset>`);

  const submittable = canSubmit(draft) && !disabled;
  rows.push(`
    <button id="submit" type="submit" ${submittable ? '' : 'disabled'}>
      ${disabled ? 'Scoring...' : 'See my risk percentile'}
    </button>`);
  return rows.join('\n');
}

export function renderResult(result: ScoreResponse): string {
  const percentileBlock =
    result.percentile === null
      ? '<p class="percentile">Percentile unavailable for this model.</p>'
      : `<p class="percentile">Your risk is higher than
           <strong id="percentile-value">${formatPercentile(result.percentile)}</strong>%
           of the general population.</p>`;
  return `
    <section class="result">
      <h2>Your result</h2>
      ${percentileBlock}
      <p class="probability">Estimated probability of a severe respiratory
        infection requiring hospital care in the next 3 months:
        <span id="probability-value">${formatProbability(result.probability)}</span></p>
      <p class="model">Model: ${esc(result.model_version)}</p>
      <button id="start-over" type="button">Start over</button>
    </section>`;
}

export function renderErrors(errors: FieldError[]): string {
  const items = errors
    .map((e) => `<li data-field="${esc(e.field)}">${esc(e.field)}: ${esc(e.error)}</li>`)
    .join('');
  return `
    <section class="error">
      <h2>Something went wrong</h2>
      <ul class="field-errors">${items}</ul>
      <button id="retry" type="button">Back to the form</button>
    </section>`;
}

export function renderUnreachable(message: string): string {
  return renderErrors([{ field: 'service', error: `not reachable (${message})` }]);
}
