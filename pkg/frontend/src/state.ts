// Form state machine and client-side validation. Bounds mirror the
// service exactly so a valid form cannot draw a 400.

import { AGE_MAX, AGE_MIN } from './questions.js';
import {
  CONDITION_KEYS,
  type ConditionKey,
  type FieldError,
  type Gender,
  type ScoreRequest,
  type ScoreResponse,
} from './types.js';

export type Phase = 'editing' | 'submitting' | 'result' | 'error';

export interface Draft {
  ageYears: number | null;
  gender: Gender | null;
  priorAdmissions: number;
  priorErVisits: number;
  conditions: Record<ConditionKey, boolean>;
}

export interface FormState {
  phase: Phase;
  draft: Draft;
  result: ScoreResponse | null;
  errors: FieldError[];
}

export function emptyDraft(): Draft {
  const conditions = {} as Record<ConditionKey, boolean>;
  for (const key of CONDITION_KEYS) conditions[key] = false; // every question starts at "no"
  return {
    ageYears: null,
    gender: null,
    priorAdmissions: 0,
    priorErVisits: 0,
    conditions,
  };
}

export function initialState(): FormState {
  return { phase: 'editing', draft: emptyDraft(), result: null, errors: [] };
}

export function validateDraft(draft: Draft): FieldError[] {
  const errors: FieldError[] = [];
  if (draft.ageYears === null) {
    errors.push({ field: 'age_years', error: 'required' });
  } else if (!Number.isInteger(draft.ageYears) || draft.ageYears < AGE_MIN || draft.ageYears > AGE_MAX) {
    errors.push({ field: 'age_years', error: `must be between ${AGE_MIN} and ${AGE_MAX}` });
  }
  if (draft.gender === null) {
    errors.push({ field: 'gender', error: 'required' });
  }
  for (const [field, value] of [
    ['prior_admissions', draft.priorAdmissions],
    ['prior_er_visits', draft.priorErVisits],
  ] as const) {
    if (!Number.isInteger(value) || value < 0) {
      errors.push({ field, error: 'must be a whole number >= 0' });
    }
  }
  return errors;
}

export function canSubmit(draft: Draft): boolean {
  return validateDraft(draft).length === 0;
}

/** Serialize a valid draft into the exact /v1/score request schema. */
export function serializeAnswers(draft: Draft): ScoreRequest {
  if (draft.ageYears === null || draft.gender === null) {
    throw new Error('serializeAnswers requires a complete draft');
  }
  const body = {
    age_years: draft.ageYears,
    gender: draft.gender,
    prior_admissions: draft.priorAdmissions,
    prior_er_visits: draft.priorErVisits,
  } as ScoreRequest;
  for (const key of CONDITION_KEYS) body[key] = draft.conditions[key];
  return body;
}

// transitions

export function submitStarted(state: FormState): FormState {
  return { ...state, phase: 'submitting', errors: [] };
}

export function submitSucceeded(state: FormState, result: ScoreResponse): FormState {
  return { ...state, phase: 'result', result, errors: [] };
}

export function submitFailed(state: FormState, errors: FieldError[]): FormState {
  // no partial result: a failed submission keeps the answers, shows errors
  return { ...state, phase: 'error', result: null, errors };
}

export function backToEditing(state: FormState): FormState {
  return { ...state, phase: 'editing', result: null, errors: [] };
}
