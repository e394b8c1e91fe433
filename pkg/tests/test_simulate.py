import pytest

from qtm.machine import QTM, Superposition, initial_configuration
from qtm.simulate import (run, run_from, step, measure, MissingRule,
                          SimulationError, AcceptancePredicate, audit_run,
                          audited_flags, truncated_isometry_check,
                          lr_superposition_machine)

from corpus import ALPHA, H, chain, coin, quarter, fair_split, PLAIN_CORPUS


def test_corpus_runtimes_and_norms():
	for name, m, words, T in PLAIN_CORPUS:
		res = run(m, words, max_steps=T + 3)
		assert res.halted and res.runningTime == T, name
		assert all(abs(n - 1.0) <= 1e-12 for n in res.normHistory), name


def test_driver_checks_final_before_stepping():
	# a machine already in its final state takes zero steps even though
	# rules on the final state exist
	from corpus import swap_walker
	m = swap_walker()
	phi = Superposition({initial_configuration(m, ("",)): 1.0})
	phi2 = Superposition()
	for c, a in phi.items():
		phi2[type(c)("f", c.tapes, c.heads)] = a
	res = run_from(m, phi2, max_steps=5)
	assert res.runningTime == 0


def test_missing_rule_raises():
	m = coin()
	with pytest.raises(MissingRule):
		run(m, ("1",), max_steps=3)  # no rule for ('s', ('1',))


def test_interference_cancels():
	# two Hadamards in sequence: |#> -> H -> H -> |#> with the minus
	# branch cancelled; realized on the written symbol with sign rows
	d = {
		("s", ("#",)): {("a", ("0",), ("R",)): H, ("b", ("0",), ("R",)): H},
		("a", ("#",)): {("f", ("0",), ("R",)): H, ("f", ("1",), ("R",)): H},
		("b", ("#",)): {("f", ("0",), ("R",)): H, ("f", ("1",), ("R",)): -H},
	}
	m = QTM(1, [ALPHA], ("s", "a", "b", "f"), "s", ("f",), d)
	res = run(m, ("",), max_steps=4)
	# both branches reach the same configurations: the cell-1 = '1'
	# outcome cancels, the cell-1 = '0' one doubles up
	probs = {}
	for c, a in res.finalSuperposition.items():
		probs[c.tapes[0].get(1, "#")] = abs(a) ** 2
	assert abs(probs["0"] - 1.0) < 1e-12
	assert "1" not in probs
	assert abs(sum(probs.values()) - 1.0) < 1e-12


def test_norm_drift_detection():
	d = {("s", ("#",)): {("f", ("#",), ("R",)): 0.5}}
	m = QTM(1, [ALPHA], ("s", "f"), "s", ("f",), d)
	with pytest.raises(SimulationError):
		run(m, ("",), max_steps=3)


def test_acceptance_predicates():
	m = coin()
	res = run(m, ("",), max_steps=3)
	bit = AcceptancePredicate.output_bit(0)
	assert abs(measure(res.finalSuperposition, bit, m.blanks) - 0.5) < 1e-12
	fin = AcceptancePredicate.final_states(("f",))
	assert abs(measure(res.finalSuperposition, fin, m.blanks) - 1.0) < 1e-12


def test_isometry_check_on_corpus():
	for name, m, _words, _T in PLAIN_CORPUS:
		ok, res, _wit = truncated_isometry_check(m, radius=1)
		assert ok, (name, res)
	ok, _res, _wit = truncated_isometry_check(lr_superposition_machine(), radius=1)
	assert not ok


def test_audit_run_flags():
	m = chain(2)
	a = audit_run(m, ("1",), 5)
	assert a.halted and a.synchronous and not a.stationary
	flags = audited_flags(m, [("1",)], 5)
	assert flags.synchronousChecked and not flags.stationaryChecked
	assert not flags.conservative
