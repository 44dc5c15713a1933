"""Ingestion, preprocessing and experiment orchestration."""
