"""Shared desk-scale fixture machines.

Every machine here is well formed by construction: distinct rules always
have orthogonal target vectors (distinct target states, symbols, or an
amplitude pattern like the Hadamard sign trick), and every state is
entered with one fixed direction vector, which settles the separability
condition.
"""

import math

from qtm.machine import QTM
from qtm.oracle import OracleQTM, OracleFamily

ALPHA = ("#", "0", "1")
H = 1.0 / math.sqrt(2.0)


def chain(n):
	"""Deterministic walker: copies symbols rightward, halts at exactly n."""
	states = ["c%d" % i for i in range(n + 1)]
	delta = {}
	for i in range(n):
		for s in ALPHA:
			delta[(states[i], (s,))] = {(states[i + 1], (s,), ("R",)): 1.0}
	return QTM(1, [ALPHA], states, "c0", (states[-1],), delta)


def coin():
	"""One fair branch into a single final state; halts at 1, and the
	start cell holds the outcome bit (acceptance 1/2 on bit = 1)."""
	delta = {("s", ("#",)): {("f", ("0",), ("R",)): H,
	                         ("f", ("1",), ("R",)): H}}
	return QTM(1, [ALPHA], ("s", "f"), "s", ("f",), delta)


def quarter():
	"""Two-step branching with acceptance 1/4 on the start-cell bit.
	The two middle states enter the final state with opposite-sign
	Hadamard rows, which keeps the rule table orthogonal."""
	a = math.sqrt(3.0) / 2.0
	delta = {
		("s", ("#",)): {("a", ("0",), ("R",)): a, ("b", ("1",), ("R",)): 0.5},
		("a", ("#",)): {("f", ("0",), ("R",)): H, ("f", ("1",), ("R",)): H},
		("b", ("#",)): {("f", ("0",), ("R",)): H, ("f", ("1",), ("R",)): -H},
	}
	return QTM(1, [ALPHA], ("s", "a", "b", "f"), "s", ("f",), delta)


def fair_split():
	"""Fair branch into two distinct final states (multi-final corpus
	member); halts at 2 with acceptance 1/2 on the start-cell bit."""
	delta = {
		("s", ("#",)): {("a", ("0",), ("R",)): H, ("b", ("1",), ("R",)): H},
		("a", ("#",)): {("fa", ("#",), ("R",)): 1.0},
		("b", ("#",)): {("fb", ("#",), ("R",)): 1.0},
	}
	return QTM(1, [ALPHA], ("s", "a", "b", "fa", "fb"), "s", ("fa", "fb"), delta)


def swap_walker():
	"""Total two-state permutation machine (halts at 1); the simplest
	machine the validator accepts with a full rule table."""
	delta = {}
	for s in ALPHA:
		delta[("s", (s,))] = {("f", (s,), ("R",)): 1.0}
		delta[("f", (s,))] = {("s", (s,), ("R",)): 1.0}
	return QTM(1, [ALPHA], ("s", "f"), "s", ("f",), delta)


# machines paired with an input and their exact halting time
PLAIN_CORPUS = [
	("chain2", chain(2), ("1",), 2),
	("chain3", chain(3), ("1",), 3),
	("coin", coin(), ("",), 1),
	("quarter", quarter(), ("",), 2),
	("fair_split", fair_split(), ("",), 2),
]


def fair_split_single():
	"""fair_split with its two finals funneled into one: each branch
	records its identity bit while entering the shared final state, so
	the rows stay orthogonal and the machine halts at 3."""
	delta = {
		("s", ("#",)): {("a", ("0",), ("R",)): H, ("b", ("1",), ("R",)): H},
		("a", ("#",)): {("fa", ("#",), ("R",)): 1.0},
		("b", ("#",)): {("fb", ("#",), ("R",)): 1.0},
		("fa", ("#",)): {("F", ("0",), ("R",)): 1.0},
		("fb", ("#",)): {("F", ("1",), ("R",)): 1.0},
	}
	return QTM(1, [ALPHA], ("s", "a", "b", "fa", "fb", "F"), "s", ("F",), delta)


def hadamard_walk():
	"""Total non-halting coined walk: symbols are never rewritten, so the
	support stays linear in the step count while branches genuinely
	interfere.  Each state keeps one entry direction (u from R, d from
	L), and the sign pattern keeps the u/d rows orthogonal."""
	delta = {}
	for s in ALPHA:
		delta[("u", (s,))] = {("u", (s,), ("R",)): H, ("d", (s,), ("L",)): H}
		delta[("d", (s,))] = {("u", (s,), ("R",)): H, ("d", (s,), ("L",)): -H}
	return QTM(1, [ALPHA], ("u", "d"), "u", ("d",), delta)


# ------------------------------------------------------------ oracle corpus

def oracle_single():
	"""One query tape, two branches querying the words 0 and 1; halts at
	exactly 4.  Under the membership set {0} the post-query check rows
	accept both branches, so acceptance is 1/2 on (query tape, cell 1)."""
	delta = {
		("s0", ("#", "#")): {("sa", ("#", "0"), ("N", "R")): H,
		                     ("sb", ("#", "1"), ("N", "R")): H},
		("sa", ("#", "#")): {("qpa", ("#", "0"), ("N", "L")): 1.0},
		("sb", ("#", "#")): {("qpb", ("#", "0"), ("N", "L")): 1.0},
		("ra", ("#", "0")): {("Fa", ("#", "0"), ("N", "N")): 1.0},
		("rb", ("#", "1")): {("Fb", ("#", "1"), ("N", "N")): 1.0},
	}
	return OracleQTM(2, [("#",), ALPHA],
	                 ("s0", "sa", "sb", "qpa", "qpb", "ra", "rb", "Fa", "Fb"),
	                 "s0", ("Fa", "Fb"), delta,
	                 {"qpa": (1, "ra"), "qpb": (1, "rb")}, query_tapes=1)


ORACLE_SINGLE_SETS = [["0"]]
ORACLE_SINGLE_T = 4


def oracle_accepts(c):
	"""Start-adjacent bit on the query tape of oracle_single."""
	return c.tapes[1].get(1) == "1"


def oracle_double(slow=False):
	"""Two query tapes; a fair branch queries word 0 on oracle 1 or on
	oracle 2.  Halts at exactly 6 (7 with slow=True).  Acceptance 1/2
	under the family ({0}, {})."""
	d = {
		("s0", ("#", "#", "#")): {("a1", ("#", "0", "#"), ("N", "R", "N")): H,
		                          ("b1", ("#", "#", "0"), ("N", "N", "R")): H},
		("a1", ("#", "#", "#")): {("a2", ("#", "0", "#"), ("N", "L", "N")): 1.0},
		("a2", ("#", "0", "#")): {("a3", ("#", "0", "#"), ("N", "N", "N")): 1.0},
		("a3", ("#", "0", "#")): {("qp1", ("#", "0", "#"), ("N", "N", "N")): 1.0},
		("b1", ("#", "#", "#")): {("b2", ("#", "#", "0"), ("N", "N", "L")): 1.0},
		("b2", ("#", "#", "0")): {("b3", ("#", "#", "0"), ("N", "N", "N")): 1.0},
		("b3", ("#", "#", "0")): {("qp2", ("#", "#", "0"), ("N", "N", "N")): 1.0},
	}
	states = ["s0", "a1", "a2", "a3", "b1", "b2", "b3", "qp1", "qp2",
	          "ra", "rb", "Fa", "Fb"]
	if slow:
		d[("ra", ("#", "0", "#"))] = {("rc", ("#", "0", "#"), ("N", "N", "N")): 1.0}
		d[("rc", ("#", "0", "#"))] = {("Fa", ("#", "0", "#"), ("N", "N", "N")): 1.0}
		d[("rb", ("#", "#", "0"))] = {("rd", ("#", "#", "0"), ("N", "N", "N")): 1.0}
		d[("rd", ("#", "#", "0"))] = {("Fb", ("#", "#", "0"), ("N", "N", "N")): 1.0}
		states += ["rc", "rd"]
	else:
		d[("ra", ("#", "0", "#"))] = {("Fa", ("#", "0", "#"), ("N", "N", "N")): 1.0}
		d[("rb", ("#", "#", "0"))] = {("Fb", ("#", "#", "0"), ("N", "N", "N")): 1.0}
	return OracleQTM(3, [("#",), ALPHA, ALPHA], states, "s0", ("Fa", "Fb"),
	                 d, {"qp1": (1, "ra"), "qp2": (2, "rb")}, query_tapes=2)


ORACLE_DOUBLE_SETS = [["0"], []]
ORACLE_DOUBLE_T = 6


def oracle_double_accepts(c):
	return c.tapes[1].get(1) == "1" or c.tapes[2].get(1) == "1"
