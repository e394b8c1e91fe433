"""Shared numeric tolerances and resource caps.

Values can be overridden by a small key=value config file (see load_config)
or per-call keyword arguments; these are the package-wide defaults.
"""

import os

# tolerance for the three local well-formedness conditions
TOL_WELLFORMED = 1e-9
# tolerance used by acceptance-style comparisons (probabilities, agreement)
TOL_ACCEPT = 1e-7
# amplitudes smaller than this are dropped from sparse maps
PRUNE = 1e-12
# Gram-Schmidt rank tolerance: vectors with post-orthogonalization norm
# below this are treated as dependent and discarded
RANK_TOL = 1e-10
# mid-run norm drift that triggers a unitarity-violation error
DRIFT_TOL = 1e-7

# cap on configuration enumeration (isometry oracle etc.)
MAX_CONFIGS = int(os.environ.get("QTM_MAX_CONFIGS", "200000"))


def load_config(path):
	"""Read a key=value config file; returns a dict of overrides."""
	out = {}
	with open(path) as f:
		for line in f:
			line = line.split(";;")[0].strip()
			if not line:
				continue
			k, _, v = line.partition("=")
			out[k.strip()] = float(v.strip())
	return out
