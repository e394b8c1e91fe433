import math

from hypothesis import given, settings, strategies as st

from qtm.machine import QTM
from qtm.wellformed import (validate, check_unit_length, check_orthogonality,
                            check_separability)
from qtm.simulate import (generate_random_wellformed, mutate_violator,
                          lr_superposition_machine, truncated_isometry_check)

from corpus import ALPHA, PLAIN_CORPUS, H


def test_corpus_is_well_formed():
	for name, m, _words, _T in PLAIN_CORPUS:
		rep = validate(m)
		assert rep.overall, (name, rep.as_dict())


def test_unit_length_violation():
	d = {("s", ("#",)): {("f", ("#",), ("R",)): 0.5}}
	m = QTM(1, [ALPHA], ("s", "f"), "s", ("f",), d)
	rep = validate(m)
	assert not rep.unitLength.passed
	assert rep.unitLength.witness is not None


def test_orthogonality_violation():
	# two distinct sources writing the same thing into the same state
	d = {("s", ("#",)): {("f", ("1",), ("R",)): 1.0},
	     ("s", ("0",)): {("f", ("1",), ("R",)): 1.0}}
	m = QTM(1, [ALPHA], ("s", "f"), "s", ("f",), d)
	rep = validate(m)
	assert rep.unitLength.passed
	assert not rep.orthogonality.passed


def test_separability_violation():
	m = lr_superposition_machine()
	rep = validate(m)
	assert not rep.overall
	assert not rep.separability.passed


def test_validator_matches_isometry_oracle_on_fixture():
	m = lr_superposition_machine()
	ok, _res, _wit = truncated_isometry_check(m, radius=1)
	assert not ok
	assert not validate(m).overall


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_wellformed_passes(seed):
	m = generate_random_wellformed(seed)
	assert validate(m).overall


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_mutated_machines_fail(seed):
	m = mutate_violator(generate_random_wellformed(seed), seed)
	assert not validate(m).overall


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_validator_agrees_with_isometry_oracle(seed):
	m = generate_random_wellformed(seed)
	ok, _res, _wit = truncated_isometry_check(m, radius=1)
	assert validate(m).overall == ok
	v = mutate_violator(m, seed)
	ok2, _res2, _wit2 = truncated_isometry_check(v, radius=1)
	assert validate(v).overall == ok2
