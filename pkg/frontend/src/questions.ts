// The questionnaire: four demographic/utilization inputs plus seventeen
// yes/no condition questions. Labels are the published question texts.

import type { ConditionKey } from './types.js';

export interface ConditionQuestion {
  key: ConditionKey;
  label: string;
}

export const CONDITION_QUESTIONS: ConditionQuestion[] = [
  {
    key: 'copd_emphysema',
    label:
      'Chronic obstructive pulmonary disease (COPD) or emphysema, cystic fibrosis, or chronic bronchitis',
  },
  { key: 'asthma', label: 'Asthma' },
  { key: 'obesity', label: 'Obesity' },
  { key: 'diabetes', label: 'Diabetes (other than when you were pregnant)' },
  { key: 'hypertension', label: 'Hypertension (also called high blood pressure)' },
  { key: 'congestive_heart_failure', label: 'Congestive Heart Failure' },
  { key: 'myocardial_infarction', label: 'Heart attack (also called myocardial infarction)' },
  { key: 'rheumatic_heart_disease', label: 'Rheumatic heart disease' },
  { key: 'stroke', label: 'Stroke' },
  { key: 'sickle_cell_hiv_transplant', label: 'Sickle cell anemia/HIV infection/Transplant' },
  { key: 'chronic_kidney_disease', label: 'Chronic kidney disease' },
  { key: 'hemodialysis', label: 'Hemodialysis' },
  { key: 'liver_disease', label: 'Liver disease' },
  {
    key: 'respiratory_infection',
    label: 'Pneumonia, acute bronchitis, influenza or other acute respiratory infection',
  },
  { key: 'cancer', label: 'Cancer' },
  { key: 'neurocognitive', label: 'Neurocognitive conditions' },
  { key: 'pregnancy', label: 'Pregnancy' },
];

export const AGE_MIN = 18;
export const AGE_MAX = 120;
