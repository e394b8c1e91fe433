"""Sparse superposition evolution and the brute-force unitarity oracle."""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DRIFT_TOL, MAX_CONFIGS, PRUNE
from .machine import (Configuration, MachineError, QTM, Superposition,
                      classify, initial_configuration)


class SimulationError(Exception):
	pass


class MissingRule(SimulationError):
	pass


def step(phi, m):
	"""One application of the time-evolution operator.

	Partial machines may be stepped as long as every configuration in the
	support scans a defined row; a missing reachable row is an error.
	"""
	out = Superposition()
	for c, a in phi.sorted_items():
		sig = c.read(m.blanks)
		row = m.row(c.state, sig)
		if row is None:
			raise MissingRule("no rule for state %r scanning %r" % (c.state, sig))
		for (q2, tau, dvec), w in row.items():
			c2 = c.successor(q2, tau, dvec, m.blanks)
			out[c2] = out.get(c2, 0) + a * w
	return out.pruned()


@dataclass
class RunResult:
	finalSuperposition: Superposition
	runningTime: object  # int or None
	halted: bool
	normHistory: list = field(default_factory=list)


def _all_final(phi, m):
	return all(m.is_final(c.state) for c in phi)


def run_from(m, phi, max_steps, drift_tol=DRIFT_TOL, check_norm=True,
             observer=None):
	"""Iterate step() until every configuration in the support is final.

	The driver checks for the all-final condition before stepping, so
	rules on final states (mandatory for total machines) never run past
	the halting time.
	"""
	phi = Superposition(phi)
	history = [phi.norm()]
	for t in range(max_steps + 1):
		if _all_final(phi, m):
			return RunResult(phi, t, True, history)
		if t == max_steps:
			break
		phi = step(phi, m)
		n = phi.norm()
		history.append(n)
		if check_norm and abs(n - 1.0) > drift_tol:
			raise SimulationError("norm drift |%.3e - 1| at step %d" % (n, t + 1))
		if observer is not None:
			observer(t + 1, phi)
	return RunResult(phi, None, False, history)


def run(m, words, max_steps=None, t_hint=None, **kw):
	if max_steps is None:
		if t_hint is None:
			raise SimulationError("run() needs max_steps or a t_hint")
		max_steps = 10 * t_hint * t_hint + 100
	phi = Superposition({initial_configuration(m, words): 1.0})
	return run_from(m, phi, max_steps, **kw)


# ---------------------------------------------------------------- acceptance

class AcceptancePredicate:
	"""Decides acceptance of a final configuration.

	modes:
	  output_bit(tape, accept_symbols, cell=0) -- symbol test at a cell
	  final_states(subset)                     -- state membership
	  custom(fn)                               -- arbitrary callable
	"""

	def __init__(self, fn, desc):
		self.fn = fn
		self.desc = desc

	def __call__(self, config, blanks):
		return self.fn(config, blanks)

	@staticmethod
	def output_bit(tape_index, accept_symbols=("1",), cell=0):
		accept = set(accept_symbols) if not isinstance(accept_symbols, str) else {accept_symbols}

		def fn(c, blanks):
			return c.tapes[tape_index].get(cell, blanks[tape_index]) in accept
		return AcceptancePredicate(fn, "output:tape=%d,cell=%d" % (tape_index, cell))

	@staticmethod
	def final_states(states):
		states = set(states)

		def fn(c, blanks):
			return c.state in states
		return AcceptancePredicate(fn, "finals:%s" % ",".join(map(str, sorted(states, key=repr))))

	@staticmethod
	def custom(fn, desc="custom"):
		return AcceptancePredicate(fn, desc)


def acceptance_probability(m, words, pred, max_steps=None, t_hint=None):
	res = run(m, words, max_steps=max_steps, t_hint=t_hint)
	if not res.halted:
		raise SimulationError("machine did not halt within the step budget")
	return measure(res.finalSuperposition, pred, m.blanks)


def measure(phi, pred, blanks):
	return sum(abs(a) ** 2 for c, a in phi.items() if pred(c, blanks))


# ---------------------------------------------------------------- isometry oracle

def _enumerate_configs(m, radius, max_configs=MAX_CONFIGS):
	cells = list(range(-radius, radius + 1))
	tape_fills = []
	for alpha in m.alphabets:
		fills = []
		for combo in itertools.product(alpha, repeat=len(cells)):
			fills.append({c: s for c, s in zip(cells, combo) if s != alpha[0]})
		tape_fills.append(fills)
	count = len(m.states) * (len(cells) ** m.k)
	for f in tape_fills:
		count *= len(f)
	if count > max_configs:
		raise SimulationError("enumeration of %d configurations exceeds cap %d"
		                      % (count, max_configs))
	for q in m.states:
		for heads in itertools.product(cells, repeat=m.k):
			for tapes in itertools.product(*tape_fills):
				yield Configuration(q, tapes, heads)


def truncated_isometry_check(m, radius=1, tol=1e-7, max_configs=MAX_CONFIGS):
	"""Brute-force check that one step preserves inner products on the
	window of configurations with support and heads within `radius`.

	Returns (ok, residual, witness).  The step images live within
	radius+1; pairs are compared through shared image configurations so
	the cost is near-linear in the window size.
	"""
	images = {}
	for c in _enumerate_configs(m, radius, max_configs):
		sig = c.read(m.blanks)
		row = m.row(c.state, sig)
		if row is None:
			continue
		img = {}
		for (q2, tau, dvec), w in row.items():
			c2 = c.successor(q2, tau, dvec, m.blanks)
			img[c2] = img.get(c2, 0) + w
		images[c] = img
	# diagonal
	worst, witness = 0.0, None
	index = {}
	for c, img in images.items():
		r = abs(math.sqrt(sum(abs(w) ** 2 for w in img.values())) - 1.0)
		if r > worst:
			worst, witness = r, (c, c)
		for c2 in img:
			index.setdefault(c2, []).append(c)
	pairs = set()
	for srcs in index.values():
		srcs.sort(key=lambda c: c.key() and repr(c.key()))
		for i in range(len(srcs)):
			for j in range(i + 1, len(srcs)):
				pairs.add((srcs[i], srcs[j]))
	for c1, c2 in pairs:
		i1, i2 = images[c1], images[c2]
		if len(i2) < len(i1):
			i1, i2 = i2, i1
		ip = sum(w * i2[c].conjugate() for c, w in i1.items() if c in i2)
		if abs(ip) > worst:
			worst, witness = abs(ip), (c1, c2)
	return worst <= tol, worst, (witness if worst > tol else None)


# ---------------------------------------------------------------- generators

def _random_unitary(rng, n):
	z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
	q, r = np.linalg.qr(z)
	return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def generate_random_wellformed(seed, k=1, n_states=2, n_symbols=2, n_rows=2):
	"""Random well-formed partial machine.

	Construction guarantees the three conditions: draw a unidirectional
	direction assignment (so separability is automatic) and make the
	selected rows of the collapsed (target state, written symbol) matrix
	rows of a random unitary.
	"""
	rng = np.random.default_rng(seed)
	states = tuple("q%d" % i for i in range(n_states))
	alpha = ("#", "0", "1", "2")[:n_symbols]
	alphabets = [alpha] * k
	m_stub = QTM(k, alphabets, states, states[0], (states[-1],), {})
	sigmas = m_stub.symbol_vectors()
	entry_dir = {q: tuple(rng.choice(("L", "N", "R")) for _ in range(k)) for q in states}
	columns = [(q, tuple(t)) for q in states for t in sigmas]
	dim = len(columns)
	n_rows = min(n_rows, dim)
	u = _random_unitary(rng, dim)
	rows_src = [(q, tuple(t)) for q in states for t in sigmas]
	pick = rng.choice(len(rows_src), size=n_rows, replace=False)
	delta = {}
	for ridx, si in enumerate(sorted(pick)):
		q, sig = rows_src[si]
		row = {}
		for cidx, (q2, tau) in enumerate(columns):
			a = u[ridx, cidx]
			if abs(a) >= PRUNE:
				row[(q2, tau, entry_dir[q2])] = complex(a)
		delta[(q, sig)] = row
	return QTM(k, alphabets, states, states[0], (states[-1],), delta)


def mutate_violator(m, seed):
	"""Break well-formedness in one of three seeded ways: scale a row,
	duplicate a row onto another source, or splice an L/R head-split."""
	rng = np.random.default_rng(seed)
	rows = sorted(m.delta, key=repr)
	delta = {src: dict(row) for src, row in m.delta.items()}
	kind = int(rng.integers(0, 3)) if rows else 2
	if kind == 0 and rows:
		src = rows[int(rng.integers(len(rows)))]
		delta[src] = {t: 2.0 * a for t, a in delta[src].items()}
	elif kind == 1 and len(rows) >= 1:
		src = rows[int(rng.integers(len(rows)))]
		q, sig = src
		others = [(qq, tuple(ss)) for qq in m.states for ss in m.symbol_vectors()
		          if (qq, tuple(ss)) != src]
		tgt = others[int(rng.integers(len(others)))]
		delta[tgt] = dict(delta[src])
	else:
		# separability violator: sqrt(1/2)|q,sig,L> + sqrt(1/2)|q,sig,R>
		q = m.states[0]
		sig = tuple(m.blanks)
		h = math.sqrt(0.5)
		delta[(q, sig)] = {
			(m.states[-1], sig, ("L",) * m.k): h,
			(m.states[-1], sig, ("R",) * m.k): h,
		}
	return QTM(m.k, m.alphabets, m.states, m.initial, m.finals, delta)


def lr_superposition_machine():
	"""The classic separability violator: one rule splitting the head
	left/right with equal weight onto the same state and symbol."""
	h = math.sqrt(0.5)
	delta = {("q0", ("#",)): {("q1", ("#",), ("L",)): h, ("q1", ("#",), ("R",)): h}}
	return QTM(1, [("#", "1")], ("q0", "q1"), "q0", ("q1",), delta)


# ---------------------------------------------------------------- run audits

@dataclass
class RunAudit:
	runningTime: object
	halted: bool
	stationary: bool
	synchronous: bool
	finalSuperposition: Superposition


def audit_run(m, words, max_steps, **kw):
	"""Run one input and check the dynamic properties that cannot be read
	off the rule table: stationary (all heads back at their start cells
	in every halting configuration) and synchronous (no branch reaches a
	final state strictly before the halting time)."""
	early = [False]

	def watch(t, phi):
		if any(m.is_final(c.state) for c in phi) and not _all_final(phi, m):
			early[0] = True

	phi = Superposition({initial_configuration(m, words): 1.0})
	res = run_from(m, phi, max_steps, observer=watch, **kw)
	stationary = res.halted and all(
		c.heads == (0,) * m.k for c in res.finalSuperposition)
	return RunAudit(res.runningTime, res.halted, stationary,
	                res.halted and not early[0], res.finalSuperposition)


def audited_flags(m, inputs, max_steps, well_formed=None, **kw):
	"""Structural flags plus the simulation-checked ones, over a list of
	input word tuples.  The conservative flag is the conjunction the
	classification demands."""
	from dataclasses import replace
	from .wellformed import validate
	flags = classify(m)
	if well_formed is None:
		well_formed = validate(m).overall
	stationary = True
	synchronous = True
	for words in inputs:
		a = audit_run(m, words, max_steps, **kw)
		if not a.halted:
			raise SimulationError("audit input did not halt in %d steps" % max_steps)
		stationary = stationary and a.stationary
		synchronous = synchronous and a.synchronous
	conservative = (well_formed and stationary and flags.dynamic
	                and flags.unidirectional and flags.normalForm
	                and flags.concurrentHeads)
	return replace(flags, wellFormedChecked=well_formed,
	               stationaryChecked=stationary,
	               synchronousChecked=synchronous,
	               conservative=conservative)
