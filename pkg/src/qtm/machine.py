"""Core model: multi-tape quantum Turing machines.

A machine is (states, initial, finals, per-tape alphabets, delta) where
delta maps (state, symbol-vector) to a sparse complex-weighted set of
(state, symbol-vector, direction-vector) targets.  Tapes are two-way
infinite; every alphabet contains a blank (always the first symbol of the
alphabet tuple).  State and symbol labels are arbitrary hashable values so
compiler passes can use structured tuples; the file format mangles them
to flat tokens.
"""

import cmath
import math
import re
from dataclasses import dataclass, field

from .config import PRUNE

DIRS = ("L", "N", "R")
# physical head displacement; the -1/0/+1 identification used by the
# well-formedness arithmetic lives in wellformed.py, not here
MOVE = {"L": -1, "N": 0, "R": +1}


def amp_clean(a):
	"""Drop negligible real/imag parts so printing stays tidy."""
	re_, im = a.real, a.imag
	if abs(re_) < PRUNE:
		re_ = 0.0
	if abs(im) < PRUNE:
		im = 0.0
	return complex(re_, im)


class MachineError(Exception):
	pass


@dataclass(frozen=True)
class PropertyFlags:
	wellFormedChecked: bool = False
	dynamic: bool = False
	unidirectional: bool = False
	normalForm: bool = False
	concurrentHeads: bool = False
	stationaryChecked: bool = False
	synchronousChecked: bool = False
	conservative: bool = False

	def as_dict(self):
		return dict(self.__dict__)


class QTM:
	"""k-tape machine; immutable after construction.

	delta: {(q, sigvec): {(q2, tauvec, dvec): amplitude}}
	alphabets: tuple of symbol tuples, blank first.
	finals: ordered tuple (multi-final constructions depend on the order).
	"""

	def __init__(self, k, alphabets, states, initial, finals, delta,
	             pre_query=(), post_query=(), query_tapes=0):
		self.k = k
		self.alphabets = tuple(tuple(a) for a in alphabets)
		if len(self.alphabets) != k:
			raise MachineError("need %d alphabets, got %d" % (k, len(self.alphabets)))
		self.blanks = tuple(a[0] for a in self.alphabets)
		self.states = tuple(states)
		sset = set(self.states)
		if len(sset) != len(self.states):
			raise MachineError("duplicate state names")
		if initial not in sset:
			raise MachineError("unknown initial state %r" % (initial,))
		self.initial = initial
		self.finals = tuple(finals)
		if not self.finals or not set(self.finals) <= sset:
			raise MachineError("finals must be a nonempty subset of states")
		# oracle extension (plain machines leave these empty)
		self.pre_query = tuple(pre_query)
		self.post_query = tuple(post_query)
		self.query_tapes = query_tapes
		self.delta = {}
		for (q, sig), targets in delta.items():
			if q not in sset:
				raise MachineError("rule source references unknown state %r" % (q,))
			sig = tuple(sig)
			self._check_symvec(sig)
			row = {}
			for (q2, tau, dvec), a in targets.items():
				if q2 not in sset:
					raise MachineError("rule target references unknown state %r" % (q2,))
				tau = tuple(tau)
				self._check_symvec(tau)
				dvec = tuple(dvec)
				if len(dvec) != k or any(d not in DIRS for d in dvec):
					raise MachineError("bad direction vector %r" % (dvec,))
				a = complex(a)
				if not (math.isfinite(a.real) and math.isfinite(a.imag)):
					raise MachineError("non-finite amplitude")
				if abs(a) >= PRUNE:
					row[(q2, tau, dvec)] = amp_clean(a)
			if row:
				self.delta[(q, sig)] = row
		self.partial = len(self.delta) < len(self.states) * self._sigma_count()

	def _sigma_count(self):
		n = 1
		for a in self.alphabets:
			n *= len(a)
		return n

	def _check_symvec(self, sig):
		if len(sig) != self.k:
			raise MachineError("symbol vector arity %d != k=%d" % (len(sig), self.k))
		for s, alpha in zip(sig, self.alphabets):
			if s not in alpha:
				raise MachineError("symbol %r not in tape alphabet" % (s,))

	def symbol_vectors(self):
		"""All of Sigma-tilde in deterministic (alphabet) order."""
		vecs = [()]
		for alpha in self.alphabets:
			vecs = [v + (s,) for v in vecs for s in alpha]
		return vecs

	def domain(self):
		return set(self.delta)

	def row(self, q, sig):
		return self.delta.get((q, tuple(sig)))

	def is_final(self, q):
		return q in self.finals


def classify(m, tol=1e-9):
	"""Exhaustive scan of delta for the structural flags.

	Partial machines get the syntactic flags; normalForm additionally
	requires the machine to be total on its final states.
	"""
	dynamic = True
	concurrent = True
	entry_dirs = {}
	unidirectional = True
	for (q, sig), row in m.delta.items():
		for (q2, tau, dvec), a in row.items():
			if "N" in dvec:
				dynamic = False
			if len(set(dvec)) > 1:
				concurrent = False
			seen = entry_dirs.setdefault(q2, dvec)
			if seen != dvec:
				unidirectional = False
	normal = True
	for i, qf in enumerate(m.finals):
		d_i = None
		for sig in (s for (q, s) in m.delta if q == qf):
			row = m.delta[(qf, sig)]
			if len(row) != 1:
				normal = False
				break
			(q2, tau, dvec), a = next(iter(row.items()))
			if q2 != m.initial or tau != sig or abs(a - 1) > tol:
				normal = False
				break
			if d_i is None:
				d_i = dvec
			elif dvec != d_i:
				normal = False
				break
		if not normal:
			break
		if d_i is None:
			normal = False  # no rule on this final state at all
			break
	return PropertyFlags(dynamic=dynamic, concurrentHeads=concurrent,
	                     unidirectional=unidirectional, normalForm=normal)


def entry_directions(m):
	"""For a unidirectional machine: map target state -> its fixed
	direction vector (states never entered are absent)."""
	out = {}
	for row in m.delta.values():
		for (q2, _tau, dvec) in row:
			prev = out.setdefault(q2, dvec)
			if prev != dvec:
				raise MachineError("machine is not unidirectional at state %r" % (q2,))
	return out


# ---------------------------------------------------------------- configurations

class Configuration:
	"""state + sparse tape contents + head positions.  Canonical: no
	explicit blank cells are stored, so structural equality works."""

	__slots__ = ("state", "tapes", "heads", "_key")

	def __init__(self, state, tapes, heads, blanks=None):
		self.state = state
		if blanks is not None:
			tapes = tuple(
				{c: s for c, s in t.items() if s != b}
				for t, b in zip(tapes, blanks))
		else:
			tapes = tuple(dict(t) for t in tapes)
		self.tapes = tapes
		self.heads = tuple(heads)
		self._key = (state, tuple(tuple(sorted(t.items())) for t in tapes), self.heads)

	def key(self):
		return self._key

	def __eq__(self, other):
		return isinstance(other, Configuration) and self._key == other._key

	def __hash__(self):
		return hash(self._key)

	def read(self, blanks):
		return tuple(t.get(h, b) for t, h, b in zip(self.tapes, self.heads, blanks))

	def successor(self, q2, tau, dvec, blanks):
		tapes = []
		for t, h, s, b in zip(self.tapes, self.heads, tau, blanks):
			t = dict(t)
			if s == b:
				t.pop(h, None)
			else:
				t[h] = s
			tapes.append(t)
		heads = tuple(h + MOVE[d] for h, d in zip(self.heads, dvec))
		return Configuration(q2, tapes, heads)

	def shifted(self, offsets):
		tapes = tuple({c + o: s for c, s in t.items()}
		              for t, o in zip(self.tapes, offsets))
		heads = tuple(h + o for h, o in zip(self.heads, offsets))
		return Configuration(self.state, tapes, heads)

	def __repr__(self):
		return "Configuration(%r, %r, %r)" % (self.state, self.tapes, self.heads)


def initial_configuration(m, words):
	"""Place input words on the leading tapes starting at cell 0."""
	if len(words) > m.k:
		raise MachineError("more input words than tapes")
	tapes = []
	for i in range(m.k):
		t = {}
		if i < len(words):
			for c, s in enumerate(words[i]):
				if s not in m.alphabets[i]:
					raise MachineError("input symbol %r not in tape %d alphabet" % (s, i + 1))
				if s != m.blanks[i]:
					t[c] = s
		tapes.append(t)
	return Configuration(m.initial, tapes, (0,) * m.k)


class Superposition(dict):
	"""Finite map Configuration -> amplitude."""

	def norm(self):
		return math.sqrt(sum(abs(a) ** 2 for a in self.values()))

	def pruned(self):
		out = Superposition()
		for c, a in self.items():
			if abs(a) >= PRUNE:
				out[c] = a
		return out

	def sorted_items(self):
		return sorted(self.items(), key=lambda ca: _config_sort_key(ca[0]))


def _config_sort_key(c):
	return (repr(c.state), c.heads, tuple(tuple(sorted((cell, repr(s)) for cell, s in t.items())) for t in c.tapes))


# ---------------------------------------------------------------- file format

_AMP_PART = r"-?(?:sqrt\(\d+(?:/\d+)?\)|\d+/\d+|\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)"
_AMP_RE = re.compile(r"^\((%s),(%s)\)$" % (_AMP_PART, _AMP_PART))


def _parse_real(tok):
	neg = tok.startswith("-")
	if neg:
		tok = tok[1:]
	if tok.startswith("sqrt("):
		inner = tok[5:-1]
		if "/" in inner:
			p, q = inner.split("/")
			v = math.sqrt(int(p) / int(q))
		else:
			v = math.sqrt(int(inner))
	elif "/" in tok:
		p, q = tok.split("/")
		v = int(p) / int(q)
	else:
		v = float(tok)
	return -v if neg else v


def parse_amplitude(tok):
	mm = _AMP_RE.match(tok)
	if not mm:
		raise MachineError("bad amplitude literal %r" % tok)
	return complex(_parse_real(mm.group(1)), _parse_real(mm.group(2)))


def _fmt_real(x):
	if x == int(x) and abs(x) < 1e15:
		return str(int(x))
	return repr(x)


def format_amplitude(a):
	a = amp_clean(complex(a))
	return "(%s,%s)" % (_fmt_real(a.real), _fmt_real(a.imag))


def parse_machine(text):
	"""Parse the line-oriented machine description format."""
	k = None
	alphabets = {}
	states = None
	initial = None
	finals = None
	pre_query = []
	post_query = []
	query_tapes = 0
	rules = []
	for lineno, raw in enumerate(text.splitlines(), 1):
		line = raw.split(";;")[0].strip()
		if not line:
			continue
		toks = line.split()
		try:
			if toks[0] == "machine":
				k = int(toks[1].split("=")[1])
			elif toks[0] == "alphabet":
				idx = int(toks[1])
				assert toks[2] == ":"
				alphabets[idx] = toks[3:]
			elif toks[0] == "states":
				states = toks[1:]
			elif toks[0] == "initial":
				initial = toks[1]
			elif toks[0] == "final":
				finals = toks[1:]
			elif toks[0] == "prequery":
				pre_query = toks[1:]
			elif toks[0] == "postquery":
				post_query = toks[1:]
			elif toks[0] == "querytapes":
				query_tapes = int(toks[1])
			elif toks[0] == "rule":
				rules.append((lineno, toks[1:]))
			else:
				raise MachineError("unknown directive %r" % toks[0])
		except (IndexError, ValueError, AssertionError) as e:
			raise MachineError("line %d: %s" % (lineno, e))
	if k is None or states is None or initial is None or finals is None:
		raise MachineError("missing machine/states/initial/final directive")
	alist = []
	for i in range(1, k + 1):
		if i not in alphabets:
			raise MachineError("missing alphabet %d" % i)
		syms = ["#" if s == "_" else s for s in alphabets[i]]
		if len(set(syms)) != len(syms):
			raise MachineError("duplicate symbols in alphabet %d" % i)
		if "#" not in syms:
			raise MachineError("alphabet %d has no blank" % i)
		syms.remove("#")
		alist.append(("#",) + tuple(syms))
	delta = {}
	for lineno, toks in rules:
		# rule q sig... -> amp q2 tau... d... + amp q2 tau... d...
		try:
			arrow = toks.index("->")
		except ValueError:
			raise MachineError("line %d: rule without ->" % lineno)
		src = toks[:arrow]
		if len(src) != 1 + k:
			raise MachineError("line %d: source needs state + %d symbols" % (lineno, k))
		q = src[0]
		sig = tuple("#" if s == "_" else s for s in src[1:])
		rest = toks[arrow + 1:]
		terms = []
		cur = []
		for t in rest:
			if t == "+":
				terms.append(cur)
				cur = []
			else:
				cur.append(t)
		terms.append(cur)
		row = {}
		for term in terms:
			if len(term) != 2 + 2 * k:
				raise MachineError("line %d: target needs amp state %d symbols %d dirs" % (lineno, k, k))
			a = parse_amplitude(term[0])
			q2 = term[1]
			tau = tuple("#" if s == "_" else s for s in term[2:2 + k])
			dvec = tuple(term[2 + k:])
			row[(q2, tau, dvec)] = row.get((q2, tau, dvec), 0) + a
		if (q, sig) in delta:
			raise MachineError("line %d: duplicate rule for %r %r" % (lineno, q, sig))
		delta[(q, sig)] = row
	return QTM(k, alist, states, initial, finals, delta,
	           pre_query=pre_query, post_query=post_query, query_tapes=query_tapes)


def _tok(sym):
	s = str(sym)
	return "_" if s == "#" else s


def print_machine(m):
	"""Deterministic textual form; inverse of parse_machine for machines
	with flat string labels."""
	lines = ["machine k=%d" % m.k]
	for i, alpha in enumerate(m.alphabets, 1):
		lines.append("alphabet %d : %s" % (i, " ".join(_tok(s) for s in alpha)))
	lines.append("states %s" % " ".join(str(q) for q in m.states))
	lines.append("initial %s" % m.initial)
	lines.append("final %s" % " ".join(str(q) for q in m.finals))
	qmap = getattr(m, "query_map", None)
	if qmap:
		# pre-query tokens carry the 1-based oracle index as name@index
		items = sorted(qmap.items(), key=lambda kv: str(kv[0]))
		lines.append("prequery %s" % " ".join("%s@%d" % (q, i) for q, (i, _p) in items))
		lines.append("postquery %s" % " ".join(str(p) for _q, (_i, p) in items))
		lines.append("querytapes %d" % m.query_tapes)
	elif m.pre_query:
		lines.append("prequery %s" % " ".join(str(q) for q in m.pre_query))
		lines.append("postquery %s" % " ".join(str(q) for q in m.post_query))
		lines.append("querytapes %d" % m.query_tapes)
	for (q, sig) in sorted(m.delta, key=lambda qs: (str(qs[0]), tuple(map(str, qs[1])))):
		row = m.delta[(q, sig)]
		parts = []
		for (q2, tau, dvec) in sorted(row, key=lambda t: (str(t[0]), tuple(map(str, t[1])), t[2])):
			a = row[(q2, tau, dvec)]
			parts.append("%s %s %s %s" % (format_amplitude(a), q2,
			                              " ".join(_tok(s) for s in tau), " ".join(dvec)))
		lines.append("rule %s %s -> %s" % (q, " ".join(_tok(s) for s in sig), " + ".join(parts)))
	return "\n".join(lines) + "\n"


def flatten_labels(m):
	"""Rewrite structured state/symbol labels as flat string tokens so a
	machine built by a compiler pass can be serialized and re-parsed."""

	def flat(x):
		s = str(x)
		for a, b in ((" ", ""), ("\t", ""), ("'", ""), ('"', "")):
			s = s.replace(a, b)
		return s

	smap = {q: flat(q) for q in m.states}
	if len(set(smap.values())) != len(smap):
		smap = {q: "s%d" % i for i, q in enumerate(m.states)}
	amaps = []
	for alpha in m.alphabets:
		am = {s: flat(s) for s in alpha}
		if len(set(am.values())) != len(am):
			am = {s: ("#" if s == alpha[0] else "x%d" % i) for i, s in enumerate(alpha)}
		else:
			am[alpha[0]] = "#"
		amaps.append(am)
	delta = {}
	for (q, sig), row in m.delta.items():
		nsig = tuple(am[s] for am, s in zip(amaps, sig))
		nrow = {}
		for (q2, tau, dvec), a in row.items():
			nrow[(smap[q2], tuple(am[s] for am, s in zip(amaps, tau)), dvec)] = a
		delta[(smap[q], nsig)] = nrow
	return QTM(m.k, [tuple(am[s] for s in alpha) for am, alpha in zip(amaps, m.alphabets)],
	           [smap[q] for q in m.states], smap[m.initial], [smap[q] for q in m.finals],
	           delta, pre_query=[smap[q] for q in m.pre_query],
	           post_query=[smap[q] for q in m.post_query], query_tapes=m.query_tapes)
