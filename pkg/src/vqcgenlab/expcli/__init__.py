"""Config-driven experiment drivers, phase labeling and the validation suite."""
