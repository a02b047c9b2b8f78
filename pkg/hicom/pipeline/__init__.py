"""Training, evaluation and explanation orchestration."""
