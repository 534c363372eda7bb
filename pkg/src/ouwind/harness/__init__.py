"""Statistics, experiment orchestration and persistence for the verification suite."""
