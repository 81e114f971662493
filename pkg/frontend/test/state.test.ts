import { describe, expect, it } from 'vitest';

import {
  backToEditing,
  canSubmit,
  emptyDraft,
  initialState,
  submitFailed,
  submitStarted,
  submitSucceeded,
  validateDraft,
} from '../src/state.js';
import { CONDITION_QUESTIONS } from '../src/questions.js';
import type { ScoreResponse } from '../src/types.js';

describe('draft validation', () => {
  it('starts with every condition answered "no"', () => {
    const draft = emptyDraft();
    expect(Object.values(draft.conditions)).toHaveLength(17);
    expect(Object.values(draft.conditions).every((v) => v === false)).toBe(true);
  });

  it('blocks submission until age and gender are answered', () => {
    const draft = emptyDraft();
    expect(canSubmit(draft)).toBe(false);
    draft.ageYears = 70;
    expect(canSubmit(draft)).toBe(false);
    draft.gender = 'male';
    expect(canSubmit(draft)).toBe(true);
  });

  it('mirrors the service age bounds', () => {
    const draft = emptyDraft();
    draft.gender = 'male';
    draft.ageYears = 17;
    expect(validateDraft(draft).some((e) => e.field === 'age_years')).toBe(true);
    draft.ageYears = 121;
    expect(validateDraft(draft).some((e) => e.field === 'age_years')).toBe(true);
    draft.ageYears = 18;
    expect(validateDraft(draft)).toEqual([]);
    draft.ageYears = 120;
    expect(validateDraft(draft)).toEqual([]);
  });

  it('rejects negative utilization counts', () => {
    const draft = emptyDraft();
    draft.ageYears = 50;
    draft.gender = 'female';
    draft.priorAdmissions = -1;
    expect(validateDraft(draft).some((e) => e.field === 'prior_admissions')).toBe(true);
  });
});

describe('questionnaire content', () => {
  it('asks exactly the 17 condition questions', () => {
    expect(CONDITION_QUESTIONS).toHaveLength(17);
    const labels = CONDITION_QUESTIONS.map((q) => q.label);
    expect(labels).toContain('Diabetes (other than when you were pregnant)');
    expect(labels).toContain('Pregnancy'); // always asked, regardless of gender
  });
});

describe('submission state machine', () => {
  const response: ScoreResponse = {
    probability: 0.0241,
    percentile: 48.5,
    model_version: 'survey-table3-v1',
  };

  it('editing -> submitting -> result', () => {
    let state = initialState();
    expect(state.phase).toBe('editing');
    state = submitStarted(state);
    expect(state.phase).toBe('submitting');
    state = submitSucceeded(state, response);
    expect(state.phase).toBe('result');
    expect(state.result).toEqual(response);
  });

  it('failure holds errors and no partial result', () => {
    let state = submitStarted(initialState());
    state = submitFailed(state, [{ field: 'age_years', error: 'required' }]);
    expect(state.phase).toBe('error');
    expect(state.result).toBeNull();
    expect(state.errors[0]?.field).toBe('age_years');
  });

  it('retry returns to editing with answers intact', () => {
    let state = initialState();
    state.draft.ageYears = 66;
    state.draft.gender = 'female';
    state = submitFailed(submitStarted(state), [{ field: 'service', error: 'down' }]);
    state = backToEditing(state);
    expect(state.phase).toBe('editing');
    expect(state.draft.ageYears).toBe(66);
    expect(state.errors).toEqual([]);
  });
});
