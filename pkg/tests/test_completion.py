from hypothesis import given, settings, strategies as st

from qtm.completion import complete, direction_map
from qtm.wellformed import validate
from qtm.simulate import generate_random_wellformed

from corpus import chain, coin, quarter


def residual_on_defined_rows(m, m2):
	worst = 0.0
	for src, row in m.delta.items():
		row2 = m2.delta.get(src, {})
		keys = set(row) | set(row2)
		for t in keys:
			worst = max(worst, abs(row.get(t, 0) - row2.get(t, 0)))
	return worst


def check_completion(m):
	m2, trace = complete(m)
	assert not m2.partial
	assert validate(m2).overall
	assert residual_on_defined_rows(m, m2) <= 1e-7
	assert trace.u1_residual <= 1e-9
	return m2, trace


def test_complete_corpus_machines():
	for m in (chain(2), coin(), quarter()):
		check_completion(m)


def test_complete_is_noop_on_total():
	from corpus import swap_walker
	m = swap_walker()
	m2, trace = complete(m)
	assert trace.method == "noop"
	assert m2.delta == m.delta


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_complete_random_partials(seed):
	m = generate_random_wellformed(seed)
	if not m.partial:
		return
	m2, trace = check_completion(m)
	# the closure method only applies when every state has a fixed
	# entry direction; otherwise the partition construction runs
	if direction_map(m) is None:
		assert trace.method == "partition"
