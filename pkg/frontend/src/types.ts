// Wire types for the /v1/score contract.

export type Gender = 'male' | 'female' | 'unknown';

export const CONDITION_KEYS = [
  'copd_emphysema',
  'asthma',
  'obesity',
  'diabetes',
  'hypertension',
  'congestive_heart_failure',
  'myocardial_infarction',
  'rheumatic_heart_disease',
  'stroke',
  'sickle_cell_hiv_transplant',
  'chronic_kidney_disease',
  'hemodialysis',
  'liver_disease',
  'respiratory_infection',
  'cancer',
  'neurocognitive',
  'pregnancy',
] as const;

export type ConditionKey = (typeof CONDITION_KEYS)[number];

export type ScoreRequest = {
  age_years: number;
  gender: Gender;
  prior_admissions: number;
  prior_er_visits: number;
} & Record<ConditionKey, boolean>;

export interface ScoreResponse {
  probability: number;
  percentile: number | null;
  model_version: string;
}

export interface FieldError {
  field: string;
  error: string;
}
