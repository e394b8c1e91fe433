import math

import pytest

from qtm.machine import QTM, classify, initial_configuration
from qtm.wellformed import validate
from qtm.simulate import (run, run_from, measure, AcceptancePredicate,
                          audited_flags)
from qtm.transforms import (TransformError, synchronize, concurrentize,
                            dynamize, reverse, square, time_gate,
                            padded_words, head_shift_back, gate_predicate)

from corpus import chain, coin, quarter, fair_split, PLAIN_CORPUS

BIT = AcceptancePredicate.output_bit(0)


def base_mu(m, words, T):
	res = run(m, words, max_steps=T + 2)
	return measure(res.finalSuperposition, BIT, m.blanks)


def test_synchronize_runtime_and_mu():
	for name, m, words, T in PLAIN_CORPUS:
		m1, cert = synchronize(m)
		res = run(m1, padded_words(words, T), max_steps=cert.runtime(T) + 5)
		assert res.runningTime == 2 * T + 2 == cert.runtime(T), name
		mu1 = measure(res.finalSuperposition, BIT, m1.blanks)
		assert abs(mu1 - base_mu(m, words, T)) <= 1e-7, name
		assert validate(m1).overall, name


def test_synchronize_single_final_state():
	m1, _cert = synchronize(fair_split())
	assert len(m1.finals) == 1


def test_concurrentize_runtime_and_mu():
	for name, m, words, T in PLAIN_CORPUS:
		m2, cert = concurrentize(m)
		assert cert.claimedRuntime == "2*T**2+(2*%d+9)*T+4" % m.k
		res = run(m2, words, max_steps=cert.runtime(T) + 5)
		want = 2 * T * T + (2 * m.k + 9) * T + 4
		assert res.runningTime == want == cert.runtime(T), name
		mu2 = measure(res.finalSuperposition, BIT, m2.blanks)
		assert abs(mu2 - base_mu(m, words, T)) <= 1e-7, name
		assert classify(m2).concurrentHeads, name


def test_concurrentize_needs_unidirectional():
	h = 1.0 / math.sqrt(2.0)
	d = {("s", ("#",)): {("f", ("#",), ("L",)): h, ("f", ("1",), ("R",)): h}}
	m = QTM(1, [("#", "1")], ("s", "f"), "s", ("f",), d)
	with pytest.raises(TransformError):
		concurrentize(m)


def test_dynamize_runtime_flags_and_mu():
	for name, m, words, T in PLAIN_CORPUS:
		md, cert = dynamize(m)
		res = run(md, words, max_steps=cert.runtime(T) + 5)
		assert res.runningTime == 2 * T * T + 16 * T + 4 == cert.runtime(T), name
		mu = measure(res.finalSuperposition, BIT, md.blanks)
		assert abs(mu - base_mu(m, words, T)) <= 1e-7, name
		flags = audited_flags(md, [words], cert.runtime(T) + 5,
		                      well_formed=True)
		assert flags.dynamic and flags.unidirectional, name
		assert flags.stationaryChecked and flags.synchronousChecked, name


def test_reverse_returns_to_start():
	for m, words, T in [(chain(2), ("1",), 2), (coin(), ("",), 1)]:
		mR, certR, m2, c2 = reverse(m)
		T1 = 2 * T + 2
		fwd = run(m2, padded_words(words, T), max_steps=c2.runtime(T1) + 5)
		assert fwd.halted
		phi = head_shift_back(fwd.finalSuperposition, m2)
		back = run_from(mR, phi, max_steps=c2.runtime(T1) + T1 + 5)
		assert back.halted
		support = list(back.finalSuperposition.items())
		assert len(support) == 1
		c, a = support[0]
		assert abs(abs(a) - 1.0) <= 1e-6
		init = initial_configuration(m2, padded_words(words, T))
		assert c.tapes == init.tapes


def test_square_probabilities():
	for m, words, T, rho in [(chain(2), ("1",), 2, 1.0),
	                         (coin(), ("",), 1, 0.5),
	                         (quarter(), ("",), 2, 0.25)]:
		msq, cert, _m2 = square(m)
		res = run(msq, padded_words(words, T), max_steps=cert.runtime(T),
		          check_norm=False)
		assert res.halted and res.runningTime == cert.runtime(T)
		p = sum(abs(a) ** 2 for c, a in res.finalSuperposition.items()
		        if c.state == msq.finals[0] and c.tapes[-1].get(0) == "1")
		assert abs(p - rho * rho) <= 1e-6


def test_time_gate_scaling():
	for T in (2, 3, 4, 5, 8):
		m = chain(T)
		mg, cert, ell = time_gate(m, T)
		assert ell == int(math.floor(math.log2(T))) + 1
		res = run(mg, padded_words(("1",), T), max_steps=cert.runtime(T) + 5)
		assert res.runningTime == 2 * T + 2 == cert.runtime(T)
		gp = gate_predicate(BIT, m, T)
		mu = measure(res.finalSuperposition, gp, mg.blanks)
		assert abs(mu - 2.0 ** (-ell) * 1.0) <= 1e-7


def test_time_gate_preconditions():
	with pytest.raises(TransformError):
		time_gate(fair_split(), 2)  # multi-final
	with pytest.raises(TransformError):
		time_gate(chain(2), 1)
