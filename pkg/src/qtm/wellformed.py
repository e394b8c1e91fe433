"""Local well-formedness conditions for (possibly partial) machines.

Unitarity of the global time-evolution operator is equivalent to three
finite conditions on the transition rows: unit length, pairwise
orthogonality, and a separability condition on head-offset projections
of the rows.  The projection arithmetic identifies directions with
integers as R -> -1, N -> 0, L -> +1.
"""

import math
from dataclasses import dataclass

from .config import PRUNE, TOL_WELLFORMED

D_INT = {"R": -1, "N": 0, "L": +1}
D_VALUES = (-1, 0, 1)
E_VALUES = (-2, -1, 0, 1, 2)
NATURAL = "nat"  # the distinguished non-numeric offset symbol


def _e_component_count(d):
	# |{e : |2d - e| <= 1}| for a single tape
	return sum(1 for e in E_VALUES if abs(2 * d - e) <= 1)


def e_set_size(dvec):
	"""|E_d| as a product of per-tape counts."""
	n = 1
	for d in dvec:
		di = D_INT[d] if d in D_INT else d
		if di not in D_VALUES:
			raise ValueError("direction component %r outside D" % (d,))
		n *= _e_component_count(di)
	return n


def d_in_D_eps(dvec_int, eps):
	return all(abs(2 * d - e) <= 1 for d, e in zip(dvec_int, eps))


def offset(dvec_int, eps):
	"""h_{d,eps}: componentwise 2d-e, or the natural symbol where e=0."""
	return tuple((2 * d - e) if e != 0 else NATURAL for d, e in zip(dvec_int, eps))


def all_eps(k):
	vecs = [()]
	for _ in range(k):
		vecs = [v + (e,) for v in vecs for e in E_VALUES]
	return vecs


def projected_vector(m, p, sig, tau, eps):
	"""Sparse vector over Q x H^k: sum over targets (q, tau, d) with
	d in D_eps of amp * |E_d|^{-1/2} |q, h_{d,eps}>."""
	for e in eps:
		if e not in E_VALUES:
			raise ValueError("epsilon component %r outside E" % (e,))
	row = m.row(p, sig)
	if row is None:
		raise KeyError((p, sig))
	out = {}
	for (q, t, dvec), a in row.items():
		if t != tuple(tau):
			continue
		dint = tuple(D_INT[d] for d in dvec)
		if not d_in_D_eps(dint, eps):
			continue
		key = (q, offset(dint, eps))
		out[key] = out.get(key, 0) + a / math.sqrt(e_set_size(dvec))
	return {k: v for k, v in out.items() if abs(v) >= PRUNE}


@dataclass
class ConditionReport:
	passed: bool
	residual: float
	witness: object

	def as_dict(self):
		return {"pass": self.passed, "residual": self.residual,
		        "witness": repr(self.witness) if self.witness is not None else None}


@dataclass
class WellFormednessReport:
	unitLength: ConditionReport
	orthogonality: ConditionReport
	separability: ConditionReport

	@property
	def overall(self):
		return (self.unitLength.passed and self.orthogonality.passed
		        and self.separability.passed)

	def as_dict(self):
		return {"unitLength": self.unitLength.as_dict(),
		        "orthogonality": self.orthogonality.as_dict(),
		        "separability": self.separability.as_dict(),
		        "overall": self.overall}


def check_unit_length(m, tol=TOL_WELLFORMED):
	worst, witness = 0.0, None
	for (p, sig) in sorted(m.delta, key=repr):
		n = math.sqrt(sum(abs(a) ** 2 for a in m.delta[(p, sig)].values()))
		r = abs(n - 1.0)
		if r > worst:
			worst, witness = r, (p, sig)
	return ConditionReport(worst <= tol, worst, witness if worst > tol else None)


def _rows_by_column(m):
	"""Join rows through shared (q2, tau) columns so orthogonality only
	inspects pairs that can actually overlap."""
	cols = {}
	for src, row in m.delta.items():
		for (q2, tau, dvec), a in row.items():
			cols.setdefault((q2, tau), set()).add(src)
	return cols

def check_orthogonality(m, tol=TOL_WELLFORMED):
	worst, witness = 0.0, None
	pairs = set()
	for srcs in _rows_by_column(m).values():
		srcs = sorted(srcs, key=repr)
		for i in range(len(srcs)):
			for j in range(i + 1, len(srcs)):
				pairs.add((srcs[i], srcs[j]))
	for s1, s2 in sorted(pairs, key=repr):
		r1, r2 = m.delta[s1], m.delta[s2]
		if len(r2) < len(r1):
			r1, r2 = r2, r1
		ip = sum(a * r2[t].conjugate() for t, a in r1.items() if t in r2)
		r = abs(ip)
		if r > worst:
			worst, witness = r, (s1, s2)
	return ConditionReport(worst <= tol, worst, witness if worst > tol else None)


def check_separability(m, tol=TOL_WELLFORMED):
	"""Cross-eps orthogonality of the projected vectors.

	Projected vectors are indexed by (p, sig, tau, eps); only pairs with
	eps != eps' and a shared (q, h) coordinate can have nonzero inner
	product.  Joining through coordinates grouped by target state keeps
	the working set proportional to one state's fan-in, and coordinates
	whose entries all carry the same eps (the common case when every
	state is entered with one direction vector) are skipped outright.
	"""
	k = m.k
	# row fragments grouped by the target state they enter
	frags = {}
	for (p, sig), row in m.delta.items():
		for (q, t, dvec), a in row.items():
			dint = tuple(D_INT[d] for d in dvec)
			frags.setdefault(q, []).append(
				(p, sig, t, dint, a / math.sqrt(e_set_size(dvec))))
	ips = {}
	eps_cache = {}
	for q in sorted(frags, key=repr):
		# coordinate h -> {(p, sig, tau, eps): component}
		bucket = {}
		for (p, sig, tau, dint, a) in frags[q]:
			combos = eps_cache.get(dint)
			if combos is None:
				# every eps with dint in D_eps, with its offset
				combos = [((), ())]
				for d in dint:
					combos = [(eps + (e,),
					           off + ((2 * d - e) if e else NATURAL,))
					          for (eps, off) in combos
					          for e in E_VALUES if abs(2 * d - e) <= 1]
				eps_cache[dint] = combos
			for eps, off in combos:
				comp = bucket.setdefault(off, {})
				key = (p, sig, tau, eps)
				comp[key] = comp.get(key, 0) + a
		for comp in bucket.values():
			if len({key[3] for key in comp}) < 2:
				continue
			keys = sorted((key for key, v in comp.items() if abs(v) >= PRUNE),
			              key=repr)
			for i in range(len(keys)):
				for j in range(i + 1, len(keys)):
					k1, k2 = keys[i], keys[j]
					if k1[3] == k2[3]:
						continue
					ips[(k1, k2)] = (ips.get((k1, k2), 0)
					                 + comp[k1] * comp[k2].conjugate())
	worst, witness = 0.0, None
	for (k1, k2) in sorted(ips, key=repr):
		r = abs(ips[(k1, k2)])
		if r > worst:
			worst, witness = r, (k1[3], k2[3], (k1[:3], k2[:3]))
	return ConditionReport(worst <= tol, worst, witness if worst > tol else None)


def validate(m, tol=TOL_WELLFORMED):
	return WellFormednessReport(
		unitLength=check_unit_length(m, tol),
		orthogonality=check_orthogonality(m, tol),
		separability=check_separability(m, tol))
