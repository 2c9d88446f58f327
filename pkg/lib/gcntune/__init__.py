"""Self-tuning graph convolutional networks and the baseline
hyperparameter searches they are compared against."""
