"""Claims-based vulnerability scoring for severe respiratory infections.

Pipeline stages: code/catalog handling (codes), file ingestion (ingest),
cohort construction (cohort), feature extraction (features), model fitting
and scoring (models), stratification metrics (eval), synthetic data
(synth), and a CLI plus HTTP scoring service (cli, service).
"""

__version__ = "0.1.0"
