"""File formats for networks, covariates, labels and positions."""
