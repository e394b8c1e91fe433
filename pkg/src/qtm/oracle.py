"""Relativized machines: query semantics, per-path query audits, and
the three query-normalization passes (query-count, query-length,
query-tape merging), each with an exact step-count certificate and an
oracle rewriter.

Query convention: the queried tape holds a contiguous non-blank block
starting at cell 0; the block is y followed by one answer bit b in
{0,1}.  A query replaces b with b XOR [y in A_i] and moves the control
from the pre-query state to its post-query partner in one step, heads
untouched.

The passes wrap every base step in a fixed-length round, so measured
runtimes are exact closed forms in the declared time bound T.  Round
choreographies follow the same reversibility discipline as the plain
compiler passes: every write either copies the scanned symbol, writes
over a symbol the control state pins down, or moves unknown bits with
the carrying state branched on them.
"""

from dataclasses import dataclass

from .machine import (QTM, MachineError, Superposition, initial_configuration,
                      flatten_labels)
from .simulate import MissingRule, RunResult, SimulationError, DRIFT_TOL
from .transforms import TransformError, _cert


class OracleError(MachineError):
	pass


@dataclass(frozen=True)
class QueryEvent:
	tape: int       # 1-based oracle index
	word: tuple     # y
	answer: bool    # membership verdict applied to the bit


class OracleFamily:
	"""A = (A_1 .. A_m): membership predicates over query-tape words."""

	def __init__(self, predicates):
		self.predicates = tuple(predicates)

	@classmethod
	def from_sets(cls, sets):
		preds = []
		for words in sets:
			members = {tuple(w) for w in words}
			preds.append(lambda y, _m=members: tuple(y) in _m)
		return cls(preds)

	@property
	def m(self):
		return len(self.predicates)

	def member(self, i, y):
		return bool(self.predicates[i - 1](tuple(y)))


class OracleQTM(QTM):
	"""QTM whose last `query_tapes` tapes are query tapes.

	query_map: {pre_query_state: (oracle_index, post_query_state)} with
	1-based oracle indices; oracle i reads/answers on tape
	k - query_tapes + i - 1.  The transition table must leave pre-query
	states rowless (their single step is the query itself).
	"""

	def __init__(self, k, alphabets, states, initial, finals, delta,
	             query_map, query_tapes):
		self.query_map = dict(query_map)
		pre = tuple(self.query_map)
		post = tuple(p for (_i, p) in self.query_map.values())
		super().__init__(k, alphabets, states, initial, finals, delta,
		                 pre_query=pre, post_query=post,
		                 query_tapes=query_tapes)
		for (q, _sig) in self.delta:
			if q in self.query_map:
				raise OracleError("transition rows defined on pre-query state %r" % (q,))
		for q, (i, q2) in self.query_map.items():
			if not (1 <= i <= query_tapes):
				raise OracleError("oracle index %d out of range" % i)
			if q not in self.states or q2 not in self.states:
				raise OracleError("query map references unknown state")
			t = self.query_tape_index(i)
			for b in ("0", "1"):
				if b not in self.alphabets[t]:
					raise OracleError("query tape %d lacks answer bit %r" % (i, b))

	def query_tape_index(self, i):
		return self.k - self.query_tapes + i - 1


def promote(m):
	"""OracleQTM from a parsed machine whose prequery tokens are
	name@index (index defaults to 1); postquery is positionally aligned."""
	if not m.pre_query:
		raise OracleError("machine declares no pre-query states")
	if len(m.pre_query) != len(m.post_query):
		raise OracleError("prequery/postquery lists differ in length")
	qmap = {}
	for tok, post in zip(m.pre_query, m.post_query):
		name, _, idx = str(tok).partition("@")
		qmap[name] = (int(idx) if idx else 1, post)
	return OracleQTM(m.k, m.alphabets, m.states, m.initial, m.finals,
	                 m.delta, qmap, m.query_tapes)


def flatten_oracle(m):
	"""flatten_labels for oracle machines, keeping the query map."""
	flat = flatten_labels(m)
	smap = dict(zip(m.states, flat.states))
	qmap = {smap[q]: (i, smap[p]) for q, (i, p) in m.query_map.items()}
	return OracleQTM(flat.k, flat.alphabets, flat.states, flat.initial,
	                 flat.finals, flat.delta, qmap, m.query_tapes)


def extract_query(tape, blank):
	"""(y, b) from a sparse tape: the maximal non-blank block from cell
	0 is y concatenated with the answer bit b."""
	w = []
	c = 0
	while True:
		s = tape.get(c, blank)
		if s == blank:
			break
		w.append(s)
		c += 1
	if not w or w[-1] not in ("0", "1"):
		raise OracleError("query tape does not hold a word followed by a 0/1 bit: %r" % (w,))
	return tuple(w[:-1]), w[-1]


def oracle_step(phi, m, A, events=None):
	"""One evolution step of an oracle machine: pre-query configurations
	take their query transition, everything else follows delta."""
	out = Superposition()
	for c, a in phi.sorted_items():
		if c.state in m.query_map:
			i, q2 = m.query_map[c.state]
			t = m.query_tape_index(i)
			y, b = extract_query(c.tapes[t], m.blanks[t])
			ans = A.member(i, y)
			b2 = "1" if (b == "1") != ans else "0"
			tape = dict(c.tapes[t])
			tape[len(y)] = b2
			tapes = c.tapes[:t] + (tape,) + c.tapes[t + 1:]
			c2 = type(c)(q2, tapes, c.heads, blanks=m.blanks)
			out[c2] = out.get(c2, 0) + a
			if events is not None:
				events.append(QueryEvent(i, y, ans))
		else:
			sig = c.read(m.blanks)
			row = m.row(c.state, sig)
			if row is None:
				raise MissingRule("no rule for state %r scanning %r" % (c.state, sig))
			for (q2, tau, dvec), w in row.items():
				c2 = c.successor(q2, tau, dvec, m.blanks)
				out[c2] = out.get(c2, 0) + a * w
	return out.pruned()


def oracle_run(m, A, words, max_steps, drift_tol=DRIFT_TOL):
	"""run() analogue under an oracle family; returns (result, events)."""
	phi = Superposition({initial_configuration(m, words): 1.0})
	events = []
	for t in range(max_steps + 1):
		if all(m.is_final(c.state) for c in phi):
			return RunResult(phi, t, True), events
		phi = oracle_step(phi, m, A, events=events)
		if abs(phi.norm() - 1.0) > drift_tol:
			raise SimulationError("norm drift %.3e at step %d" % (abs(phi.norm() - 1.0), t + 1))
	return RunResult(phi, None, False), events


def trace_query_paths(m, A, words, max_steps, max_paths=20000):
	"""Per-path query logs: depth-first expansion of the computation
	tree (no interference), yielding (final configuration, events) per
	path.  Desk-scale only; guarded by max_paths."""
	out = []
	stack = [(initial_configuration(m, words), (), 0)]
	while stack:
		c, ev, t = stack.pop()
		if m.is_final(c.state):
			out.append((c, ev))
			if len(out) > max_paths:
				raise OracleError("path explosion")
			continue
		if t >= max_steps:
			raise OracleError("path did not halt in %d steps" % max_steps)
		if c.state in m.query_map:
			phi = oracle_step(Superposition({c: 1.0}), m, A)
			i, _q2 = m.query_map[c.state]
			tt = m.query_tape_index(i)
			y, _b = extract_query(c.tapes[tt], m.blanks[tt])
			for c2 in phi:
				stack.append((c2, ev + (QueryEvent(i, y, A.member(i, y)),), t + 1))
		else:
			sig = c.read(m.blanks)
			row = m.row(c.state, sig)
			if row is None:
				raise MissingRule("no rule for state %r scanning %r" % (c.state, sig))
			for (q2, tau, dvec) in row:
				stack.append((c.successor(q2, tau, dvec, m.blanks), ev, t + 1))
	return out


def query_count_audit(m, A, words, max_steps):
	"""Set of per-path query counts."""
	return {len(ev) for (_c, ev) in trace_query_paths(m, A, words, max_steps)}


def query_length_audit(m, A, words, max_steps):
	"""Set of query-word lengths over all paths."""
	lens = set()
	for (_c, ev) in trace_query_paths(m, A, words, max_steps):
		lens |= {len(e.word) for e in ev}
	return lens


# ------------------------------------------------------- query-count pass

def normalize_query_count(m, T):
	"""Wrap every base step in a 7-step round ending in exactly one
	query: the base's own query when the round simulates it, otherwise a
	dummy query of the word "0" on a fresh dummy tape.  On a base
	halting in T the result runs exactly 7T steps and queries exactly T
	times on every path, with acceptance unchanged under the doubled
	family (A, A).

	Input convention: the dummy tape must be given the word "00" (the
	dummy query word "0" plus its answer cell).  Seeding it as input
	keeps every round identical; a one-off set-up round would need sim
	rows that duplicate the steady ones and break row orthogonality.

	Preconditions: single query tape; the initial state is not
	pre-query; post-query states are entered only by queries."""
	if m.query_tapes != 1:
		raise TransformError("query-count pass needs a single query tape")
	if m.initial in m.query_map:
		raise TransformError("initial state must not be pre-query")
	K = m.k
	base_sigs = m.symbol_vectors()
	idleN = ("N",) * K

	def st(q, tag):
		return ("qc", q, tag)

	delta = {}
	query_map = {}
	start = {q: st(q, "i1" if q in m.query_map else "r1") for q in m.states}
	for q in m.states:
		if q in m.query_map:
			# real-query round: six idle steps, then the base query
			i, qa = m.query_map[q]
			for j in range(1, 7):
				nxt = st(q, "i%d" % (j + 1))
				for s in base_sigs:
					for b in ("0", "1"):
						delta[(st(q, "i%d" % j), s + (b,))] = {
							(nxt, s + (b,), idleN + ("N",)): 1.0}
			query_map[st(q, "i7")] = (1, start[qa])
			continue
		if m.is_final(q):
			continue  # the halting state needs no round of its own
		# dummy-query round: refresh the dummy word, query it, simulate
		chain = [("r1", "0", "0", "R"), ("r2", None, None, "L"),
		         ("r3", "0", "0", "N"), ("r4", "0", "0", "N")]
		for (tag, rd, wr, mv), nxt in zip(chain, ["r2", "r3", "r4", "rP"]):
			for s in base_sigs:
				if rd is None:  # answer cell: carry whatever bit is there
					for b in ("0", "1"):
						delta[(st(q, tag), s + (b,))] = {
							(st(q, nxt), s + (b,), idleN + (mv,)): 1.0}
				else:
					delta[(st(q, tag), s + (rd,))] = {
						(st(q, nxt), s + (wr,), idleN + (mv,)): 1.0}
		query_map[st(q, "rP")] = (2, st(q, "rA"))
		for s in base_sigs:
			delta[(st(q, "rA"), s + ("0",))] = {
				(st(q, "r0"), s + ("0",), idleN + ("N",)): 1.0}
		for (qq, s), row in m.delta.items():
			if qq != q:
				continue
			delta[(st(q, "r0"), s + ("0",))] = {
				(start[q2], tau + ("0",), dvec + ("N",)): a
				for (q2, tau, dvec), a in row.items()}
	states = sorted({q for (q, _s) in delta} |
	                {t for row in delta.values() for (t, _tau, _d) in row} |
	                set(query_map) |
	                {p for (_i, p) in query_map.values()}, key=repr)
	alphabets = list(m.alphabets) + [("#", "0", "1")]
	m2 = OracleQTM(K + 1, alphabets, states, start[m.initial],
	               tuple(start[qf] for qf in m.finals), delta,
	               query_map, query_tapes=2)
	cert = _cert("query-count", m, m2, "7*T", lambda t: 7 * t,
	             "relativized-acceptance",
	             notes="exactly T queries per path under the family (A, A)")
	rewriter = lambda A: OracleFamily([A.predicates[0], A.predicates[0]])
	return m2, cert, rewriter


# ------------------------------------------------------ query-length pass

def pad_query_length(m, T):
	"""Pad every query word to length exactly T-1: y becomes
	y 0 1^(T-|y|-2) with the answer bit carried to cell T-1, queried
	against B = {y 0 1^(T-|y|-2) : y in A}, then restored.  Every base
	step is wrapped in a (4T+10)-step round, so a base halting in T
	yields a machine halting in exactly 4T^2+10T steps.

	The output has two extra tapes before the query tape: a timer tape
	that must be given the input 1^T, and a write-once pebble tape that
	starts empty.  Walks over the query tape run to the timer's blank
	boundary instead of counting positions in the state, so round length
	is independent of |y|; the boundary symbol also makes the turn rows
	orthogonal to the walk rows.  Pebble drops mark one-off entries into
	walk states for the same reason.  Input words for the result are the
	base words with ("1"*T, "") spliced in before the query word.

	Preconditions: single query tape whose head rests at cell 0 at every
	query, |y| <= T-3, the initial state is not pre-query, post-query
	states are entered only by queries and are distinct across pre-query
	states."""
	if m.query_tapes != 1:
		raise TransformError("query-length pass needs a single query tape")
	if m.initial in m.query_map:
		raise TransformError("initial state must not be pre-query")
	posts = [qa for (_i, qa) in m.query_map.values()]
	if len(set(posts)) != len(posts):
		raise TransformError("post-query states must be distinct")
	if T < 3:
		raise TransformError("time bound too small to pad against")
	K = m.k
	Q = K - 1  # the base's query tape slot
	base_sigs = m.symbol_vectors()
	nq_sigs = sorted({s[:Q] for s in base_sigs})
	qalpha = m.alphabets[Q]
	nonblank = [c for c in qalpha if c != "#"]
	idle_nq = ("N",) * Q
	P = 4 * T + 10

	def st(q, *tag):
		return ("ql", q) + tag

	delta = {}
	query_map = {}

	def row(src, dst, q3, z3, p3=("#", "#", "N")):
		"""One step touching only the query, timer and pebble tapes."""
		for snq in nq_sigs:
			delta[(src, snq + (z3[0], p3[0], q3[0]))] = {
				(dst, snq + (z3[1], p3[1], q3[1]),
				 idle_nq + (z3[2], p3[2], q3[2])): 1.0}

	start = {q: st(q, "B") if q in m.query_map else st(q, "w", 1)
	         for q in m.states}
	for q in m.states:
		if q in m.query_map:
			_i, qa = m.query_map[q]
			B, W1, W2 = st(q, "B"), st(q, "W1"), st(q, "W2")
			H, PQ = st(q, "H"), st(q, "PQ")
			U0, U0b, U1, G = st(q, "U0"), st(q, "U0b"), st(q, "U1"), st(q, "G")
			# outbound sweep: over y.b, then marker 0 and pad 1s to the
			# timer boundary, dropping the carried bit at cell T-1
			for c in nonblank:
				row(B, W1, (c, c, "R"), ("1", "1", "R"), ("#", "x", "R"))
				row(W1, W1, (c, c, "R"), ("1", "1", "R"), ("#", "#", "R"))
			row(W1, W2, ("#", "#", "L"), ("1", "1", "N"))
			for b in ("0", "1"):
				row(W2, st(q, "S", b), (b, "0", "R"), ("1", "1", "R"))
				row(st(q, "S", b), st(q, "S", b), ("#", "1", "R"), ("1", "1", "R"))
				row(st(q, "S", b), H, ("#", b, "L"), ("#", "#", "L"))
			# homebound sweep, then the padded query
			for c in nonblank:
				row(H, H, (c, c, "L"), ("1", "1", "L"))
			row(H, PQ, ("#", "#", "R"), ("1", "1", "N"))
			query_map[PQ] = (1, U0)
			# outbound sweep to the answer bit at the timer boundary
			for c in nonblank:
				row(U0, U0b, (c, c, "N"), ("1", "1", "R"))
				row(U0b, U1, (c, c, "R"), ("1", "1", "R"), ("#", "x", "R"))
				row(U1, U1, (c, c, "R"), ("1", "1", "R"), ("#", "#", "R"))
			for b2 in ("0", "1"):
				row(U1, st(q, "V", b2), (b2, "#", "L"), ("#", "#", "L"))
				# homebound sweep: erase the pad, restore the bit over
				# the marker, walk down y
				row(st(q, "V", b2), st(q, "V", b2), ("1", "#", "L"), ("1", "1", "L"))
				row(st(q, "V", b2), G, ("0", b2, "L"), ("1", "1", "L"), ("#", "x", "R"))
			for c in nonblank:
				row(G, G, (c, c, "L"), ("1", "1", "L"), ("#", "#", "R"))
			row(G, st(q, "t", 1), ("#", "#", "R"), ("1", "1", "N"))
			# idle tail sized so the whole round is exactly 4T+10 steps
			for j in range(1, 7):
				nxt = st(q, "t", j + 1) if j < 6 else start[qa]
				for c in qalpha:
					row(st(q, "t", j), nxt, (c, c, "N"), ("1", "1", "N"))
			continue
		if m.is_final(q):
			continue
		# plain round: idle for 4T+9 steps, then one simulated base step
		for j in range(1, P):
			for s in base_sigs:
				delta[(st(q, "w", j), s[:Q] + ("1", "#", s[Q]))] = {
					(st(q, "w", j + 1), s[:Q] + ("1", "#", s[Q]),
					 idle_nq + ("N", "N", "N")): 1.0}
		for (qq, s), rw in m.delta.items():
			if qq != q:
				continue
			delta[(st(q, "w", P), s[:Q] + ("1", "#", s[Q]))] = {
				(start[q2], tau[:Q] + ("1", "#", tau[Q]),
				 dvec[:Q] + ("N", "N", dvec[Q])): a
				for (q2, tau, dvec), a in rw.items()}

	states = sorted({q for (q, _s) in delta} |
	                {t for rw in delta.values() for (t, _tau, _d) in rw} |
	                set(query_map) |
	                {p for (_i, p) in query_map.values()}, key=repr)
	alphabets = list(m.alphabets[:Q]) + [("#", "1"), ("#", "x"), list(qalpha)]
	m2 = OracleQTM(K + 2, alphabets, states, start[m.initial],
	               tuple(start[qf] for qf in m.finals), delta,
	               query_map, query_tapes=1)
	cert = _cert("query-length", m, m2, "4*T**2+10*T",
	             lambda t: 4 * t * t + 10 * t, "relativized-acceptance",
	             notes="every query word padded to length exactly T-1")

	def rewriter(A):
		base = A.predicates[0]

		def padded(y):
			y = tuple(y)
			if len(y) != T - 1 or "0" not in y:
				return False
			cut = max(i for i, c in enumerate(y) if c == "0")
			if any(c != "1" for c in y[cut + 1:]):
				return False
			return base(y[:cut])
		return OracleFamily([padded])
	return m2, cert, rewriter


# -------------------------------------------------------- tape-merge pass

def merge_query_tapes(m, T):
	"""Funnel all m query tapes into one fresh merged tape: a query y on
	tape i becomes the query y 0^i 1^(m-i) b on the merged tape, where b
	is a copy of tape i's own answer bit, asked of the single oracle
	B = {y 0^i 1^(m-i) : y in A_i}; the queried copy (now carrying the
	relativized answer) is then swapped back onto tape i.  Every base
	step is wrapped in a (5T+8)-step round, so a base halting in T halts
	in exactly 5T^2+8T steps.

	The output appends three tapes: a timer tape that must be given the
	input 1^T, a write-once pebble tape, and the merged query tape (the
	new single query tape).  Walks sweep to the timer's blank boundary
	so round length is independent of |y|; fixed retard/advance chains
	offset the merged head by the suffix length so the swap lines both
	bits up under the heads in one step.

	Preconditions: the queried tape's head rests at cell 0 at every
	query, |y| <= T-m-3, at most one query per path (the merged tape is
	not re-cleared), the initial state is not pre-query, post-query
	states are entered only by queries and are distinct across
	pre-query states."""
	M = m.query_tapes
	if M < 1:
		raise TransformError("tape merging needs a query tape")
	if m.initial in m.query_map:
		raise TransformError("initial state must not be pre-query")
	posts = [qa for (_i, qa) in m.query_map.values()]
	if len(set(posts)) != len(posts):
		raise TransformError("post-query states must be distinct")
	K = m.k
	P = 5 * T + 8
	tail = 3 * T - 2 * M + 2
	if tail < 1:
		raise TransformError("time bound too small to merge against")
	base_sigs = m.symbol_vectors()
	merged_alpha = ("#",) + tuple(sorted(
		{c for i in range(M) for c in m.alphabets[K - M + i] if c != "#"} | {"0", "1"}))
	# tape order: base 0..K-1, timer K, pebble K+1, merged K+2 (query)
	idle3 = ("N", "N", "N")

	def st(q, *tag):
		return ("qm", q) + tag

	delta = {}
	query_map = {}
	start = {q: st(q, "B") if q in m.query_map else st(q, "w", 1)
	         for q in m.states}

	for q in m.states:
		if q in m.query_map:
			i, qa = m.query_map[q]
			QT = K - M + i - 1  # the queried base tape
			nq_sigs = sorted({s[:QT] + s[QT + 1:] for s in base_sigs})
			qalpha = m.alphabets[QT]
			nonblank = [c for c in qalpha if c != "#"]
			suffix = ["0"] * i + ["1"] * (M - i)

			def row(src, dst, t3, z3, g3, p3=("#", "#", "N")):
				"""One step touching the queried, timer, pebble and
				merged tapes; everything else idles."""
				for snq in nq_sigs:
					sig = snq[:QT] + (t3[0],) + snq[QT:] + (z3[0], p3[0], g3[0])
					tau = snq[:QT] + (t3[1],) + snq[QT:] + (z3[1], p3[1], g3[1])
					dv = ["N"] * (K + 3)
					dv[QT], dv[K], dv[K + 1], dv[K + 2] = t3[2], z3[2], p3[2], g3[2]
					delta[(src, sig)] = {(dst, tau, tuple(dv)): 1.0}

			B = st(q, "B")
			C, PQ, U0, D, E = (st(q, x) for x in ("C", "PQ", "U0", "D", "E"))
			# outbound sweep: pipeline-copy y to the merged tape (the
			# carried last bit is not copied), append the oracle-index
			# suffix and a copy of the answer bit, coast to the timer
			# boundary
			for c in nonblank:
				row(B, st(q, "A1", c), (c, c, "R"), ("1", "1", "R"),
				    ("#", "#", "N"), ("#", "x", "R"))
				for c2 in nonblank:
					row(st(q, "A1", c), st(q, "A", c2), (c2, c2, "R"),
					    ("1", "1", "R"), ("#", c, "R"), ("#", "x", "R"))
					row(st(q, "A", c), st(q, "A", c2), (c2, c2, "R"),
					    ("1", "1", "R"), ("#", c, "R"), ("#", "#", "R"))
			for b in ("0", "1"):
				row(st(q, "A1", b), st(q, "S", b, 2), ("#", "#", "R"),
				    ("1", "1", "R"), ("#", suffix[0], "R"), ("#", "x", "R"))
				row(st(q, "A", b), st(q, "S", b, 2), ("#", "#", "R"),
				    ("1", "1", "R"), ("#", suffix[0], "R"), ("#", "#", "R"))
				for j in range(2, M + 1):
					row(st(q, "S", b, j), st(q, "S", b, j + 1), ("#", "#", "R"),
					    ("1", "1", "R"), ("#", suffix[j - 1], "R"), ("#", "#", "R"))
				row(st(q, "S", b, M + 1), C, ("#", "#", "R"),
				    ("1", "1", "R"), ("#", b, "R"), ("#", "#", "R"))
			row(C, C, ("#", "#", "R"), ("1", "1", "R"), ("#", "#", "R"),
			    ("#", "#", "R"))
			# retard the queried head by m+1 so the swap lines up, query
			row(C, st(q, "r", 1), ("#", "#", "L"), ("#", "#", "N"), ("#", "#", "N"))
			for j in range(1, M + 1):
				nxt = st(q, "r", j + 1) if j < M else PQ
				row(st(q, "r", j), nxt, ("#", "#", "L"), ("#", "#", "N"),
				    ("#", "#", "N"))
			query_map[PQ] = (1, U0)
			# homebound sweep: descend to the answer, swap it onto the
			# queried tape, descend to the timer boundary
			row(U0, D, ("#", "#", "L"), ("#", "#", "L"), ("#", "#", "L"))
			row(D, D, ("#", "#", "L"), ("1", "1", "L"), ("#", "#", "L"))
			for b in ("0", "1"):
				for b2 in ("0", "1"):
					row(D, E, (b, b2, "L"), ("1", "1", "L"), (b2, b, "L"),
					    ("#", "x", "R"))
			for ct in qalpha:
				for cg in merged_alpha:
					row(E, E, (ct, ct, "L"), ("1", "1", "L"), (cg, cg, "L"),
					    ("#", "#", "R"))
			# realign all heads at cell 0, then idle out the round
			row(E, st(q, "at", 1), ("#", "#", "R"), ("#", "#", "N"), ("#", "#", "N"))
			for j in range(1, M + 1):
				nxt = st(q, "at", j + 1) if j < M else st(q, "am", 1)
				row(st(q, "at", j), nxt, ("#", "#", "R"), ("#", "#", "N"),
				    ("#", "#", "N"))
			row(st(q, "am", 1), st(q, "hs"), ("#", "#", "N"), ("#", "#", "N"),
			    ("#", "#", "R"))
			row(st(q, "hs"), st(q, "t", 1), ("#", "#", "R"), ("#", "#", "R"),
			    ("#", "#", "R"))
			for j in range(1, tail + 1):
				nxt = st(q, "t", j + 1) if j < tail else start[qa]
				for ct in qalpha:
					for cg in merged_alpha:
						row(st(q, "t", j), nxt, (ct, ct, "N"), ("1", "1", "N"),
						    (cg, cg, "N"))
			continue
		if m.is_final(q):
			continue
		# plain round: idle for 5T+7 steps, then one simulated base step
		for j in range(1, P):
			for s in base_sigs:
				for cg in merged_alpha:
					delta[(st(q, "w", j), s + ("1", "#", cg))] = {
						(st(q, "w", j + 1), s + ("1", "#", cg),
						 ("N",) * (K + 3)): 1.0}
		for (qq, s), rw in m.delta.items():
			if qq != q:
				continue
			for cg in merged_alpha:
				delta[(st(q, "w", P), s + ("1", "#", cg))] = {
					(start[q2], tau + ("1", "#", cg), dvec + ("N", "N", "N")): a
					for (q2, tau, dvec), a in rw.items()}

	states = sorted({q for (q, _s) in delta} |
	                {t for rw in delta.values() for (t, _tau, _d) in rw} |
	                set(query_map) |
	                {p for (_i, p) in query_map.values()}, key=repr)
	alphabets = list(m.alphabets) + [("#", "1"), ("#", "x"), list(merged_alpha)]
	m2 = OracleQTM(K + 3, alphabets, states, start[m.initial],
	               tuple(start[qf] for qf in m.finals), delta,
	               query_map, query_tapes=1)
	cert = _cert("query-merge", m, m2, "5*T**2+8*T",
	             lambda t: 5 * t * t + 8 * t, "relativized-acceptance",
	             notes="all query tapes funneled into one merged tape")

	def rewriter(A):
		preds = A.predicates

		def merged(y):
			y = tuple(y)
			if len(y) < M:
				return False
			body, sfx = y[:-M], y[-M:]
			zeros = 0
			while zeros < M and sfx[zeros] == "0":
				zeros += 1
			if zeros < 1 or any(c != "1" for c in sfx[zeros:]):
				return False
			return preds[zeros - 1](body)
		return OracleFamily([merged])
	return m2, cert, rewriter
