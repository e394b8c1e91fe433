"""Totalization of partial machines.

Two strategies are implemented:

1. closure: when every target state is entered with a single fixed
   direction vector, forget the directions, extend the collapsed
   (state, written-symbol) matrix to a unitary with canonical seed
   vectors, and re-attach each target state's direction.  New source
   pairs get deterministic rows wherever a canonical column is still
   unused, so the extension stays sparse.

2. partition: build, from the projected vectors of the defined rows,
   a family of mutually orthogonal subspaces indexed by the offset
   classes, assign leftover coordinate directions to compatible
   classes, and compute the space of admissible new rows -- those
   whose projections stay inside their own class.  New rows are a
   Gram-Schmidt extension inside that space.

The first path is exact and cheap and covers every machine produced
by the compiler passes in this package.  The second covers machines
whose defined rows do not fix a direction per target state.  Both
re-validate their output and check agreement on the defined rows.

The change-of-basis isometry used by the partition path is exposed
separately (change_of_basis) so it can be audited numerically.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .config import RANK_TOL, TOL_WELLFORMED
from .machine import MachineError, QTM, amp_clean
from .wellformed import (D_INT, E_VALUES, NATURAL, all_eps, d_in_D_eps,
                         e_set_size, offset, projected_vector, validate)

INT_DIR = {v: k for k, v in D_INT.items()}

# which offset values a single-tape offset class can produce
_H_OF_E = {e: tuple(sorted({2 * d - e for d in (-1, 0, 1) if abs(2 * d - e) <= 1},
                           key=str)) if e != 0 else (NATURAL,)
           for e in E_VALUES}


class CompletionError(MachineError):
	pass


@dataclass
class CompletionTrace:
	method: str
	added: int
	block_dims: dict = field(default_factory=dict)
	complement_dim: int = 0
	admissible_dim: int = 0
	u1_residual: float = 0.0

	def as_dict(self):
		return {"method": self.method, "added": self.added,
		        "blockDims": {repr(k): v for k, v in self.block_dims.items()},
		        "complementDim": self.complement_dim,
		        "admissibleDim": self.admissible_dim,
		        "u1Residual": self.u1_residual}


# ---------------------------------------------------------------- helpers

def direction_map(m, default=None):
	"""Entry direction per target state, or None when some state is
	entered with two different direction vectors.  States never entered
	get the default direction (stay-put unless overridden)."""
	if default is None:
		default = ("N",) * m.k
	dirs = {}
	for row in m.delta.values():
		for (q2, _tau, dvec) in row:
			prev = dirs.setdefault(q2, dvec)
			if prev != dvec:
				return None
	for q in m.states:
		dirs.setdefault(q, default)
	return dirs


def _orthonormalize(cands, against, tol):
	"""Two-pass Gram-Schmidt of cands against `against` and each other;
	returns the accepted orthonormal vectors."""
	out = []
	for v in cands:
		v = np.array(v, dtype=complex)
		for _ in range(2):
			for b in itertools.chain(against, out):
				v = v - np.vdot(b, v) * b
		n = np.linalg.norm(v)
		if n > max(tol, 1e-8):
			out.append(v / n)
	return out


# ---------------------------------------------------------------- closure path

def make_total_unidirectional(m, dirs=None, default=None):
	"""Totalize a machine whose target states each have one fixed entry
	direction.  Returns (machine, number of added rows)."""
	if dirs is None:
		dirs = direction_map(m, default=default)
	if dirs is None:
		raise CompletionError("target states do not have fixed directions")
	symvecs = m.symbol_vectors()
	cols = [(q, tuple(t)) for q in m.states for t in symvecs]
	col_ix = {c: i for i, c in enumerate(cols)}
	n = len(cols)

	touched = set()
	for row in m.delta.values():
		for (q2, tau, _d) in row:
			touched.add((q2, tuple(tau)))
	touched = sorted(touched, key=lambda c: col_ix[c])
	t_ix = {c: i for i, c in enumerate(touched)}

	# defined rows restricted to the touched columns (their full support)
	old = []
	for key in sorted(m.delta, key=lambda ps: col_ix[(ps[0], tuple(ps[1]))]):
		v = np.zeros(len(touched), dtype=complex)
		for (q2, tau, _d), a in m.delta[key].items():
			v[t_ix[(q2, tuple(tau))]] += a
		old.append(v)

	missing = [(q, tuple(s)) for q in m.states for s in symvecs
	           if (q, tuple(s)) not in m.delta]
	if not missing:
		return m, 0

	new_rows = []
	# untouched canonical columns give deterministic rows for free
	free = [c for c in cols if c not in t_ix]
	# the touched block needs a dense extension
	seeds = [np.eye(len(touched), dtype=complex)[i] for i in range(len(touched))]
	ext = _orthonormalize(seeds, old, RANK_TOL)
	if len(ext) + len(old) != len(touched):
		raise CompletionError("defined rows are numerically rank deficient")
	for v in ext:
		new_rows.append([(touched[i], amp_clean(a))
		                 for i, a in enumerate(v) if abs(a) > 1e-12])
	for c in free:
		new_rows.append([(c, 1.0)])
	if len(new_rows) < len(missing):
		raise CompletionError("not enough extension rows")

	delta = dict(m.delta)
	for (p, sig), row in zip(missing, new_rows):
		delta[(p, sig)] = {(q2, tau, dirs[q2]): a for (q2, tau), a in row}
	m2 = QTM(m.k, m.alphabets, m.states, m.initial, m.finals, delta,
	         pre_query=m.pre_query, post_query=m.post_query,
	         query_tapes=m.query_tapes)
	return m2, len(missing)


# ---------------------------------------------------------------- partition path

def _coords(m):
	hs = [()]
	for _ in range(m.k):
		hs = [h + (x,) for h in hs for x in (-1, 0, 1, NATURAL)]
	return [(q, h) for q in m.states for h in hs]


def _block_vectors(m):
	"""Projected vectors of all defined rows, grouped by offset class,
	as dense vectors over the (state, offset vector) coordinates."""
	coords = _coords(m)
	c_ix = {c: i for i, c in enumerate(coords)}
	blocks = {}
	for eps in all_eps(m.k):
		vs = []
		for (p, sig) in sorted(m.delta, key=repr):
			for tau in m.symbol_vectors():
				pv = projected_vector(m, p, sig, tau, eps)
				if not pv:
					continue
				v = np.zeros(len(coords), dtype=complex)
				for c, a in pv.items():
					v[c_ix[c]] += a
				vs.append(v)
		blocks[tuple(eps)] = vs
	return coords, c_ix, blocks


def build_partition(m, tol=TOL_WELLFORMED):
	"""Orthonormal bases, one per offset class, jointly spanning the
	(state, offset vector) coordinate space.  Leftover directions are
	assigned to the lexicographically first compatible class."""
	coords, c_ix, raw = _block_vectors(m)
	bases = {}
	flat = []
	for eps in sorted(raw, key=repr):
		bs = _orthonormalize(raw[eps], flat, RANK_TOL)
		bases[eps] = bs
		flat.extend(bs)
	# cross-class residual audit on the raw vectors
	worst = 0.0
	for eps, vs in raw.items():
		own = bases[eps]
		for v in vs:
			r = v.copy()
			for b in own:
				r = r - np.vdot(b, r) * b
			n2 = np.linalg.norm(r)
			if n2 > worst:
				worst = n2
	if worst > math.sqrt(tol) + 1e-8:
		raise CompletionError("projected vectors leak across offset classes "
		                      "(residual %.3g); input is not separable" % worst)
	# complement: canonical coordinate directions not yet covered
	comp = []
	for i, (q, h) in enumerate(coords):
		e = np.zeros(len(coords), dtype=complex)
		e[i] = 1.0
		got = _orthonormalize([e], flat + comp, RANK_TOL)
		if got:
			v = got[0]
			j = int(np.argmax(np.abs(v)))
			_qj, hj = coords[j]
			allowed = [eps for eps in sorted(bases, key=repr)
			           if all(x in _H_OF_E[e1] for x, e1 in zip(hj, eps))]
			if not allowed:
				raise CompletionError("coordinate %r fits no offset class" % ((q, h),))
			bases[allowed[0]].append(v)
			comp.append(v)
	return coords, c_ix, bases, len(comp)


def _dcols(m):
	ds = [()]
	for _ in range(m.k):
		ds = [d + (x,) for d in ds for x in (-1, 0, 1)]
	return [(q, tuple(d)) for q in m.states for d in ds]


def change_of_basis(m, tol=TOL_WELLFORMED):
	"""The isometry from (state, move vector) coordinates to
	(basis vector, offset class) coordinates.  Returns (matrix,
	row labels, column labels, isometry residual, bases)."""
	coords, c_ix, bases, comp_dim = build_partition(m, tol=tol)
	dcols = _dcols(m)
	# codomain: every (basis vector, offset class) pair; completeness of
	# the joint basis is what makes the map an isometry
	allb = [(home, j, w) for home in sorted(bases, key=repr)
	        for j, w in enumerate(bases[home])]
	rows = [(eps, home, j, w) for eps in all_eps(m.k) for (home, j, w) in allb]
	u1 = np.zeros((len(rows), len(dcols)), dtype=complex)
	for ci, (q, dint) in enumerate(dcols):
		wt = 1.0 / math.sqrt(e_set_size(tuple(INT_DIR[d] for d in dint)))
		for ri, (eps, _home, _j, w) in enumerate(rows):
			if not d_in_D_eps(tuple(dint), tuple(eps)):
				continue
			u1[ri, ci] = wt * np.conj(w[c_ix[(q, offset(dint, eps))]])
	residual = float(np.max(np.abs(u1.conj().T @ u1 - np.eye(len(dcols)))))
	return u1, rows, dcols, residual, bases


def _projection_map(m, bases, c_ix, ncoords):
	"""Linear maps x -> x[.|eps] on (state, move) coordinates, plus the
	orthogonal projectors of each class, stacked into one constraint
	matrix whose null space is the admissible row space."""
	dcols = _dcols(m)
	chunks = []
	for eps in sorted(bases, key=repr):
		L = np.zeros((ncoords, len(dcols)), dtype=complex)
		for ci, (q, dint) in enumerate(dcols):
			if not d_in_D_eps(dint, eps):
				continue
			wt = 1.0 / math.sqrt(e_set_size(tuple(INT_DIR[d] for d in dint)))
			L[c_ix[(q, offset(dint, eps))], ci] += wt
		if bases[eps]:
			B = np.stack(bases[eps], axis=1)
			P = B @ B.conj().T
		else:
			P = np.zeros((ncoords, ncoords), dtype=complex)
		chunks.append(L - P @ L)
	return dcols, np.vstack(chunks)


def _null_space(a, tol=RANK_TOL):
	_u, s, vh = np.linalg.svd(a)
	rank = int(np.sum(s > max(tol, s[0] * 1e-12 if len(s) else 0)))
	return vh[rank:].conj().T


def complete_partition(m, tol=TOL_WELLFORMED):
	coords, c_ix, bases, comp_dim = build_partition(m, tol=tol)
	dcols, constraints = _projection_map(m, bases, c_ix, len(coords))
	X = _null_space(constraints)          # columns: admissible move-space
	symvecs = [tuple(t) for t in m.symbol_vectors()]
	nsym = len(symvecs)
	nfull = len(dcols) * nsym
	d_ix = {c: i for i, c in enumerate(dcols)}

	def full_index(q, dint, tau):
		return d_ix[(q, dint)] * nsym + symvecs.index(tau)

	old = []
	for key in sorted(m.delta, key=repr):
		v = np.zeros(nfull, dtype=complex)
		for (q2, tau, dvec), a in m.delta[key].items():
			dint = tuple(D_INT[d] for d in dvec)
			v[full_index(q2, dint, tuple(tau))] += a
		old.append((key, v))

	# admissible space for whole rows: X on the move part, free written part
	nx = X.shape[1]
	if nx * nsym < len(m.states) * nsym:
		raise CompletionError("admissible row space too small "
		                      "(%d move directions for %d states)" % (nx, len(m.states)))

	# express defined rows in admissible coordinates and check they fit
	old_c = []
	for key, v in old:
		mat = v.reshape(len(dcols), nsym)
		cx = (X.conj().T @ mat).reshape(-1)
		back = (X @ cx.reshape(nx, nsym)).reshape(-1)
		if np.linalg.norm(back - v) > math.sqrt(tol) + 1e-8:
			raise CompletionError("defined row %r escapes the admissible space" % (key,))
		old_c.append(cx)

	missing = [(q, tuple(s)) for q in m.states for s in m.symbol_vectors()
	           if (q, tuple(s)) not in m.delta]
	seeds = [np.eye(nx * nsym, dtype=complex)[i] for i in range(nx * nsym)]
	ext = _orthonormalize(seeds, old_c, RANK_TOL)
	if len(ext) < len(missing):
		raise CompletionError("cannot extend: found %d rows, need %d"
		                      % (len(ext), len(missing)))

	delta = dict(m.delta)
	for (p, sig), cx in zip(missing, ext):
		full = (X @ cx.reshape(nx, nsym)).reshape(-1)
		row = {}
		for di, (q, dint) in enumerate(dcols):
			dvec = tuple(INT_DIR[d] for d in dint)
			for t, tau in enumerate(symvecs):
				a = full[di * nsym + t]
				if abs(a) > 1e-12:
					row[(q, tau, dvec)] = amp_clean(a)
		delta[(p, sig)] = row
	m2 = QTM(m.k, m.alphabets, m.states, m.initial, m.finals, delta,
	         pre_query=m.pre_query, post_query=m.post_query,
	         query_tapes=m.query_tapes)
	trace = CompletionTrace(method="partition", added=len(missing),
	                        block_dims={eps: len(b) for eps, b in bases.items()},
	                        complement_dim=comp_dim, admissible_dim=nx)
	return m2, trace


# ---------------------------------------------------------------- front door

def complete(m, tol=TOL_WELLFORMED, method="auto", validate_input=True,
             validate_output=True):
	"""Extend a partially defined machine to a total one that agrees on
	every defined row and still passes the three validator conditions."""
	if validate_input:
		rep = validate(m, tol=tol)
		if not rep.overall:
			raise CompletionError("input machine is not well formed: %s"
			                      % rep.as_dict())
	if not m.partial:
		return m, CompletionTrace(method="noop", added=0)
	if method == "auto":
		method = "closure" if direction_map(m) is not None else "partition"
	if method == "closure":
		m2, added = make_total_unidirectional(m)
		trace = CompletionTrace(method="closure", added=added)
	elif method == "partition":
		m2, trace = complete_partition(m, tol=tol)
	else:
		raise ValueError("unknown completion method %r" % (method,))
	for key, row in m.delta.items():
		got = m2.delta.get(key, {})
		for tgt, a in row.items():
			if abs(got.get(tgt, 0) - a) > tol:
				raise CompletionError("completion does not agree on %r" % (key,))
	if validate_output:
		rep = validate(m2, tol=max(tol, 1e-7))
		if not rep.overall:
			raise CompletionError("completed machine fails validation: %s"
			                      % rep.as_dict())
	return m2, trace
